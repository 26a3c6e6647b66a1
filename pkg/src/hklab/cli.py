"""Command line entry point: ``hklab simulate|verify|sweep|fit``.

Exit status is 1 when any verification violation occurred, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .dynamics import Trajectory, default_cap, hk_step, simulate
from .experiments import ExperimentSpec, fit_scaling, make_config, read_report_rows, rows_to_csv, run_experiment
from .state import EXACT, FLOAT, OpinionState
from .verify import CSV_COLUMNS, VerificationError, diagnostics_rows, rational_replay, verify_trajectory


def _load_state(args) -> OpinionState:
    if args.input:
        return OpinionState.from_json(Path(args.input).read_text())
    if not args.family or not args.n:
        raise SystemExit("simulate: give --input or both --family and --n")
    params = {}
    for key in ("chord", "radius", "spacing", "d", "box_side"):
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    return make_config(args.family, args.n, params, args.seed)


def _emit(tr: Trajectory, args, extra: dict) -> None:
    doc = tr.to_dict(include_states=args.states)
    doc.update(extra)
    if args.spectra:
        from .dynamics import build_graph
        from .spectral import spectrum

        doc["spectra"] = [spectrum(build_graph(s)).tolist() for s in tr.states[:-1]]
    text = json.dumps(doc, indent=2, default=float)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    if args.csv:
        Path(args.csv).write_text(rows_to_csv(diagnostics_rows(tr.diagnostics), CSV_COLUMNS))


def cmd_simulate(args) -> int:
    x0 = _load_state(args)
    if args.mode == EXACT:
        tr = rational_replay(x0, args.cap or 100, spectral=not args.no_spectral)
    else:
        tr = simulate(x0, cap=args.cap, mode=FLOAT, spectral=not args.no_spectral)
    summary = verify_trajectory(tr, strict=False)
    _emit(tr, args, {"summary": summary.to_dict()})
    return 0 if summary.ok else 1


def _check_recorded(states: list[OpinionState]) -> list[dict]:
    """Recorded transitions that are not HK updates of their predecessor."""
    bad = []
    for t in range(len(states) - 1):
        expect = hk_step(states[t])
        got = states[t + 1]
        if states[t].exact:
            ok = expect.equals(got)
        else:
            ok = bool(np.max(np.abs(expect.coords - got.as_mode(FLOAT).coords)) <= 1e-9)
        if not ok:
            bad.append({"check": "recorded_step", "step": t})
    return bad


def cmd_verify(args) -> int:
    doc = json.loads(Path(args.input).read_text())
    if "states" in doc:
        mode = doc.get("mode")
        states = [OpinionState.from_rows(rows, mode=mode or FLOAT) for rows in doc["states"]]
        x0 = states[0]
        recorded = _check_recorded(states)
    else:
        x0 = OpinionState.from_dict(doc)
        recorded = []
    if args.exact:
        tr = rational_replay(x0, args.cap or 100)
    else:
        tr = simulate(x0, cap=args.cap or default_cap(x0.n), spectral=not args.no_spectral)
    summary = verify_trajectory(tr, strict=False)
    out = summary.to_dict()
    out["recorded_step_mismatches"] = recorded
    print(json.dumps(out, indent=2, default=float))
    return 0 if summary.ok and not recorded else 1


def cmd_sweep(args) -> int:
    spec = ExperimentSpec.load(args.spec)
    if args.out_dir:
        spec.out_dir = args.out_dir
    if args.no_spectral:
        spec.spectral = False
    report = run_experiment(spec, workers=args.workers)
    print(json.dumps({"rows": len(report.rows), "fit": report.fit, "violation_count": report.violation_count}))
    return 0 if report.violation_count == 0 else 1


def cmd_fit(args) -> int:
    rows = read_report_rows(args.report)
    slope, intercept, ci = fit_scaling(rows)
    print(json.dumps({"slope": slope, "intercept": intercept, "ci": ci}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hklab", description="Hegselmann-Krause dynamics and energy checks")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one trajectory with full diagnostics")
    s.add_argument("--input", help="state JSON {n, d, coords}")
    s.add_argument("--family", choices=["circle", "dumbbell", "line", "random"])
    s.add_argument("--n", type=int)
    s.add_argument("--chord", type=float)
    s.add_argument("--radius", type=float)
    s.add_argument("--spacing", type=float)
    s.add_argument("--d", type=int)
    s.add_argument("--box-side", dest="box_side", type=float)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mode", choices=[FLOAT, EXACT], default=FLOAT)
    s.add_argument("--cap", type=int)
    s.add_argument("--no-spectral", action="store_true")
    s.add_argument("--states", action="store_true", help="include the state history")
    s.add_argument("--spectra", action="store_true", help="include full spectra per step")
    s.add_argument("--out", help="trajectory JSON path (stdout if omitted)")
    s.add_argument("--csv", help="per-step diagnostics CSV path")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="replay and check a serialized state or trajectory")
    v.add_argument("input")
    v.add_argument("--exact", action="store_true", help="replay in exact rational arithmetic")
    v.add_argument("--cap", type=int)
    v.add_argument("--no-spectral", action="store_true")
    v.set_defaults(func=cmd_verify)

    w = sub.add_parser("sweep", help="run an experiment spec file")
    w.add_argument("spec")
    w.add_argument("--out-dir")
    w.add_argument("--workers", type=int)
    w.add_argument("--no-spectral", action="store_true")
    w.set_defaults(func=cmd_sweep)

    f = sub.add_parser("fit", help="log-log scaling fit of a sweep report")
    f.add_argument("report")
    f.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except VerificationError as exc:
        print(json.dumps(exc.bundle, indent=2, default=float), file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"hklab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
