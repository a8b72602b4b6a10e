import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from doublewell.model import Grid1D, InteractionKernel, TrapSpec, WaveFunction, eval_potential
from doublewell.tunneling import (
    ims_split_residual,
    localization_criterion,
    overlap_integral,
    partition,
    tunnel_sweep,
    tunneling_energy,
    tunneling_slope,
    well_pair,
)

from conftest import gaussian

TRI = InteractionKernel("Triangle", 1.0, 0.5)


def quadratic_form(uL, uR, V, grid):
    """<uL, (-D2 + V) uR> written as a sum of difference products (summation by parts)."""
    h = grid.spacing
    return float(np.sum(np.diff(uL) * np.diff(uR)) / h + grid.inner(uL, V * uR))


# ---------------------------------------------------------------- overlaps

def test_overlap_self_and_disjoint():
    g = Grid1D(2001, 10.0)
    u = WaveFunction(g, gaussian(g.x, 1.0)).normalized()
    assert overlap_integral(u, u) == pytest.approx(1.0, abs=1e-8)
    a = WaveFunction(g, np.where(g.x < -2, 1.0, 0.0))
    b = WaveFunction(g, np.where(g.x > 2, 1.0, 0.0))
    assert overlap_integral(a, b) == 0.0


def test_overlap_grid_mismatch():
    a = WaveFunction(Grid1D(101, 5.0), np.zeros(101))
    b = WaveFunction(Grid1D(101, 6.0), np.zeros(101))
    with pytest.raises(ValueError):
        overlap_integral(a, b)


def test_overlap_of_gaussian_translates():
    g = Grid1D(4001, 12.0)
    L = 4.0
    uL = WaveFunction(g, gaussian(g.x, -L / 2))
    uR = WaveFunction(g, gaussian(g.x, L / 2))
    assert overlap_integral(uL, uR) == pytest.approx(np.exp(-L * L / 4), rel=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_overlap_cauchy_schwarz(a, b):
    g = Grid1D(1001, 10.0)
    uL = WaveFunction(g, gaussian(g.x, a))
    uR = WaveFunction(g, 2.0 * gaussian(g.x, b), mass=4.0)
    ov = overlap_integral(uL, uR)
    assert 0 <= ov <= np.sqrt(uL.norm2() * uR.norm2()) + 1e-12


# ---------------------------------------------------------------- tunneling energy

@pytest.fixture(scope="module")
def pair_free():
    trap = TrapSpec("DoubleWell", 2.0, 5.0)
    return trap, well_pair(trap, None, 0.0)


@pytest.fixture(scope="module")
def pair_int():
    trap = TrapSpec("DoubleWell", 2.0, 5.0)
    return trap, well_pair(trap, TRI, 1.0)


def test_free_two_routes_and_direct_form(pair_free):
    trap, pair = pair_free
    rep = tunneling_energy(pair.u_minus, pair.u_plus, trap, None, 0.0, pair.mu)
    direct = quadratic_form(pair.u_minus.values, pair.u_plus.values,
                            eval_potential(trap, pair.grid.x), pair.grid)
    assert rep.T == pytest.approx(direct, abs=1e-10)
    assert rep.two_route_gap <= max(1e-10, 1e-3 * abs(rep.T))


def test_free_closed_form(pair_free):
    trap, pair = pair_free
    L = trap.separation_L
    rep = tunneling_energy(pair.u_minus, pair.u_plus, trap, None, 0.0, pair.mu)
    # Gaussian translates: T = exp(-L^2/4) (1 - L/sqrt(pi)), up to finite differences
    assert rep.T == pytest.approx(np.exp(-L * L / 4) * (1 - L / np.sqrt(np.pi)), rel=5e-3)


@pytest.mark.parametrize("which", ["pair_free", "pair_int"])
def test_swap_symmetry(which, request):
    trap, pair = request.getfixturevalue(which)
    lam = pair.lam
    a = tunneling_energy(pair.u_minus, pair.u_plus, trap, pair.kernel, lam, pair.mu)
    b = tunneling_energy(pair.u_plus, pair.u_minus, trap, pair.kernel, lam, pair.mu)
    assert abs(a.T - b.T) <= 1e-12
    assert a.T_negative


def test_pair_placement(pair_int):
    trap, pair = pair_int
    g = pair.grid
    assert np.allclose(pair.u_minus.values, pair.u_plus.values[::-1], atol=1e-8)
    c = g.integrate(g.x * pair.u_plus.values ** 2)
    assert c == pytest.approx(trap.center, abs=1e-8)


def test_free_sweep_invariants():
    reps = tunnel_sweep([4.0, 5.0, 6.0, 7.0], 2.0, None, 0.0)
    ov = [r.overlap for r in reps]
    T = [abs(r.T) for r in reps]
    assert all(a > b for a, b in zip(ov, ov[1:]))
    assert all(a > b for a, b in zip(T, T[1:]))
    assert all(r.T < 0 for r in reps)
    assert all(0 < r.overlap <= 1 for r in reps)
    assert 0.8 <= tunneling_slope(reps) <= 1.2
    # the overlap of the free Gaussians is exp(-2 A(L/2)) exactly
    assert all(abs(r.log_ratio_overlap - 1.0) <= 0.01 for r in reps)


# ---------------------------------------------------------------- localization criterion

def test_criterion_examples():
    assert localization_criterion(54, 4.0, 2.0, 0.0)
    assert not localization_criterion(10 ** 6, 4.0, 2.0, 0.1)
    with pytest.raises(ValueError):
        localization_criterion(1, 4.0, 2.0, 0.1)
    with pytest.raises(ValueError):
        localization_criterion(10, 4.0, 2.0, 1.0)


@given(st.integers(2, 10 ** 8), st.floats(0.1, 20), st.floats(0.1, 5), st.floats(2, 6),
       st.floats(0, 0.99))
def test_criterion_monotone(N, L, dL, s, eps):
    if localization_criterion(N, L, s, eps):
        assert localization_criterion(N, L + dL, s, eps)
        assert localization_criterion(max(2, N // 2), L, s, eps)
        assert localization_criterion(N, L, s, eps / 2)


# ---------------------------------------------------------------- IMS

@settings(max_examples=15, deadline=None)
@given(st.floats(3, 10), st.floats(0.1, 0.25))
def test_ims_identity(L, frac):
    trap = TrapSpec("DoubleWell", 2.0, L)
    grid = Grid1D(2001, L / 2 + 6)
    ell = frac * L
    rep = ims_split_residual(trap, ell, grid)
    assert rep.defect <= 1e-10
    assert rep.partition_defect <= 1e-12
    swapped = ims_split_residual(trap, ell, grid, swap=True)
    assert swapped.defect == pytest.approx(rep.defect, abs=1e-15)


def test_ims_continuum_correction_is_second_order():
    trap = TrapSpec("DoubleWell", 4.0, 6.0)
    coarse = ims_split_residual(trap, 0.75, Grid1D(801, 9.0)).continuum_defect
    fine = ims_split_residual(trap, 0.75, Grid1D(1601, 9.0)).continuum_defect
    assert 0 < fine < coarse / 3


def test_ims_underresolved():
    with pytest.raises(ValueError, match="under-resolved"):
        ims_split_residual(TrapSpec("DoubleWell", 2.0, 6.0), 0.01, Grid1D(201, 8.0))


def test_partition_limits():
    cm, cp = partition(np.array([-5.0, 0.0, 5.0]), 1.0)
    assert cm[0] == 1.0 and cp[0] == 0.0 and cm[2] == pytest.approx(0.0, abs=1e-16)
    assert cm[1] == pytest.approx(cp[1])
