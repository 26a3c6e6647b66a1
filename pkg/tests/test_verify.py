import json
from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import exact, floats, rational_states, small_states
from hklab.dynamics import DenominatorExplosion, hk_step, simulate
from hklab.energy import energy
from hklab.generators import dumbbell_for_size, random_config
from hklab.verify import (
    CSV_COLUMNS,
    VerificationError,
    diagnose_step,
    max_divergence,
    path_bound,
    rational_replay,
    verify_step,
    verify_trajectory,
)


def test_path_step_slacks():
    x = exact([0, 1, 2])
    d = verify_step(x, hk_step(x))
    assert d.slack_rmf == 1
    assert d.slack_spectral == 0
    assert d.slack_gap == Fraction(17, 18) - Fraction(1, 2)
    assert d.slack_path == Fraction(7, 2)
    assert d.diameter == 2 and d.lambda_t == Fraction(1, 2)
    assert not d.merged and d.violations == ()


def test_path_step_float():
    x = floats([0, 1, 2])
    d = verify_step(x, hk_step(x))
    assert d.slack_rmf == pytest.approx(1.0)
    assert d.slack_gap == pytest.approx(17 / 18 - 0.5)
    assert d.slack_path == pytest.approx(3.5)


def test_frozen_step():
    x = floats([0, 4, 4])
    d = verify_step(x, hk_step(x))
    assert d.decrement == 0
    for name in ("rmf", "spectral", "gap", "path"):
        assert getattr(d, f"slack_{name}") >= 0


def test_path_bound_values():
    assert [path_bound(k) for k in range(6)] == [0, 0, Fraction(1, 2), Fraction(1, 2), 1, 1]


def test_no_spectral_marks_skipped():
    x = floats([0, 1, 2])
    d = diagnose_step(x, hk_step(x), spectral=False)
    assert d.diameter == 2
    assert d.lambda_t != d.lambda_t and d.slack_spectral != d.slack_spectral


def test_violation_bundle():
    # feed a transition that is not an HK step: energy goes up
    x = floats([0, 0.5])
    with pytest.raises(VerificationError) as err:
        verify_step(x, floats([0, 0.9]))
    b = err.value.bundle
    assert b["check"] in {"rmf", "spectral", "monotone"}
    assert b["state"]["coords"] == [[0.0], [0.5]]
    assert b["graph"]["degrees"] == [2, 2]
    json.dumps(b, default=float)


def test_trajectory_path():
    tr = rational_replay(floats([0, 1, 2]), 5)
    s = verify_trajectory(tr)
    assert s.merge_count == 1 <= 2
    assert tr.energies == [6, 3, 0]
    assert s.ok and s.steps == 2


def test_singleton_trajectory():
    s = verify_trajectory(simulate(floats([[3.0, 1.0]])))
    assert s.ok and s.steps == 0 and s.min_slack["rmf"] is None


def test_trajectory_recomputes_missing_diagnostics():
    tr = simulate(random_config(12, 2, 3.0, seed=5), diagnostics=False)
    assert tr.diagnostics == []
    assert verify_trajectory(tr).steps == len(tr.states) - 1


def test_tampered_trajectory_fails():
    tr = simulate(floats([0, 1, 2]))
    tr.merge_times = [0, 1, 2, 3]
    with pytest.raises(VerificationError) as err:
        verify_trajectory(tr)
    assert err.value.check == "merge_count"
    assert not verify_trajectory(tr, strict=False).ok


class TestReplay:
    def test_path_states(self):
        tr = rational_replay(floats([0, 1, 2]), 5)
        half = Fraction(1, 2)
        assert [s.coords.ravel().tolist() for s in tr.states] == [[0, 1, 2], [half, 1, 3 * half], [1, 1, 1]]
        assert tr.freezing_time == 2 and tr.mode == "exact"

    def test_float_agrees(self):
        ex = rational_replay(floats([0, 1, 2]), 5)
        fl = simulate(floats([0, 1, 2]))
        assert max_divergence(ex, fl) <= 1e-9

    def test_limits(self):
        with pytest.raises(ValueError):
            rational_replay(floats(list(range(30))), 5)
        with pytest.raises(ValueError):
            rational_replay(floats([0, 1]), 101)

    def test_bit_limit(self):
        x = exact([0, "1/3", "5/7", "6/5", "9/5", "11/6"])
        with pytest.raises(DenominatorExplosion):
            rational_replay(x, 50, bit_limit=16)

    @given(rational_states(max_n=8, max_d=2, max_den=16))
    @settings(max_examples=25, deadline=None)
    def test_exact_checks_hold(self, x):
        tr = rational_replay(x, 30)
        s = verify_trajectory(tr)
        assert s.ok
        for state in tr.states:
            e = energy(state)
            assert e.total == e.active + e.inactive_pair_count
        for d in tr.diagnostics:
            assert isinstance(d.slack_rmf, Fraction) and d.slack_rmf >= 0
            assert isinstance(d.slack_path, Fraction) and d.slack_path >= 0


@given(small_states(max_n=30, max_d=3, side=5.0))
@settings(max_examples=40, deadline=None)
def test_random_trajectories_verify(x):
    assert verify_trajectory(simulate(x)).ok


def test_small_decrement_count():
    tr = simulate(dumbbell_for_size(16))
    s = verify_trajectory(tr)
    energies = [float(e) for e in tr.energies]
    expected = sum(1 for a, b in zip(energies, energies[1:]) if a - b < 1 / 16**2)
    assert s.ok and s.small_decrement_steps == expected


def test_csv_columns():
    assert CSV_COLUMNS[0] == "t" and CSV_COLUMNS[-1] == "merged" and len(CSV_COLUMNS) == 11
