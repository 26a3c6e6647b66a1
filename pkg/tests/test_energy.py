from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import exact, floats, oracle_energy, rational_states, small_states
from hklab.dynamics import hk_step, simulate
from hklab.energy import check_rmf_decrement, energy, tol_check


@pytest.mark.parametrize("make", [exact, floats])
def test_path_energy(make):
    e = energy(make([0, 1, 2]))
    assert (e.total, e.active, e.inactive_pair_count) == (6, 4, 2)


def test_contracted_path_energy():
    e = energy(exact(["1/2", 1, "3/2"]))
    assert e.total == 3 and e.active == 3 and e.inactive_pair_count == 0


def test_colocated_energy():
    e = energy(floats([[1, 1], [1, 1], [1, 1]]))
    assert e.total == 0 and e.active == 0


def test_tie_counts_as_active():
    e = energy(exact([0, 1]))
    assert e.total == 2 and e.active == 2 and e.inactive_pair_count == 0


@given(rational_states())
@settings(max_examples=60, deadline=None)
def test_energy_matches_oracle(x):
    e = energy(x)
    total, active = oracle_energy(x.coords.tolist())
    assert e.total == total and e.active == active
    # decomposition is exact in rational arithmetic
    assert e.total == e.active + e.inactive_pair_count
    assert 0 <= e.active <= e.total <= x.n**2


@given(small_states(max_n=20, max_d=4))
@settings(max_examples=80, deadline=None)
def test_float_decomposition(x):
    e = energy(x)
    assert abs(e.total - (e.active + e.inactive_pair_count)) <= 1e-12 * x.n**2
    assert 0 <= e.total <= x.n**2


@given(small_states(max_n=15, max_d=3), st.integers(0, 2**31 - 1))
@settings(max_examples=40, deadline=None)
def test_rigid_motion_invariance(x, seed):
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.normal(size=(x.d, x.d)))
    q = q * np.sign(np.diag(r))
    moved = floats((x.coords @ q.T + rng.uniform(-10, 10, size=x.d)).tolist())
    # pairs sitting within rounding of distance 1 can flip; compare the untruncated parts
    a, b = energy(x), energy(moved)
    if a.inactive_pair_count == b.inactive_pair_count:
        assert a.total == pytest.approx(b.total, abs=1e-9)


class TestRmfDecrement:
    def test_pair_equality(self):
        s = check_rmf_decrement(exact([0, 1]), exact(["1/2", "1/2"]))
        assert (s.lhs, s.bound, s.slack) == (2, 2, 0)
        assert not s.violated

    def test_path(self):
        s = check_rmf_decrement(exact([0, 1, 2]), exact(["1/2", 1, "3/2"]))
        assert (s.lhs, s.bound, s.slack) == (3, 2, 1)

    def test_frozen(self):
        x = floats([0, 5])
        s = check_rmf_decrement(x, hk_step(x))
        assert (s.lhs, s.bound, s.slack) == (0, 0, 0)

    @given(rational_states(max_n=7))
    @settings(max_examples=40, deadline=None)
    def test_exact_never_negative(self, x):
        s = check_rmf_decrement(x, hk_step(x))
        assert isinstance(s.slack, Fraction) and s.slack >= 0

    @given(small_states(max_n=25, max_d=4, side=5.0))
    @settings(max_examples=60, deadline=None)
    def test_float_within_tolerance(self, x):
        s = check_rmf_decrement(x, hk_step(x))
        assert s.slack >= -tol_check(energy(x).total)


def test_tol_check_scales():
    assert tol_check(0.2) == pytest.approx(1e-9)
    assert tol_check(2500.0) == pytest.approx(2.5e-6)


@given(small_states(max_n=20, max_d=3, side=4.0))
@settings(max_examples=40, deadline=None)
def test_energy_non_increasing(x):
    tr = simulate(x, spectral=False)
    energies = [float(v) for v in tr.energies]
    for a, b in zip(energies, energies[1:]):
        assert b <= a + tol_check(a)
