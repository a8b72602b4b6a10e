import numpy as np
import pytest

from doublewell.assembly import (
    CouplingMemo,
    count_winner_flips,
    even_split_check,
    loc_vs_dloc_report,
    split_energy,
    theorem_energy,
)
from doublewell.model import InteractionKernel, TrapSpec
from doublewell.tunneling import localization_criterion

TRAP = TrapSpec("SingleWell", 2.0)
TRI = InteractionKernel("Triangle", 1.0, 0.5)


@pytest.fixture(scope="module")
def memo():
    return CouplingMemo(TRAP, TRI, 1.0)


@pytest.fixture(scope="module")
def table100(memo):
    return even_split_check(100, 1.0, memo)


# ---------------------------------------------------------------- split energies

def test_split_energy_one_empty_well(memo):
    N = 40
    assert split_energy(0, N, 1.0, memo) == pytest.approx(N * memo.e_H(1.0) + memo.e_B(1.0),
                                                          rel=1e-14)


def test_split_energy_even(memo):
    N = 40
    c = (N / 2 - 1) / (N - 1)
    delta = 1 - 1 / (N - 1)
    assert c == pytest.approx(delta / 2)
    exp = N * memo.e_H(c) + 2 * memo.e_B(c)
    assert split_energy(N // 2, N, 1.0, memo) == pytest.approx(exp, rel=1e-14)


@pytest.mark.parametrize("n", [0, 3, 11, 17])
def test_split_energy_symmetric(memo, n):
    N = 40
    a, b = split_energy(n, N, 1.0, memo), split_energy(N - n, N, 1.0, memo)
    assert abs(a - b) <= 1e-8 * abs(a)


def test_split_energy_range(memo):
    with pytest.raises(ValueError):
        split_energy(41, 40, 1.0, memo)


def test_interpolated_e_B_hits_nodes(memo):
    for lam in memo.nodes():
        assert memo.e_B_interp(lam) == pytest.approx(memo.e_B(lam), abs=1e-15)
    assert memo.e_B_interp(0.0) == 0.0
    with pytest.raises(ValueError):
        memo.e_B_interp(2.0)


def test_interpolated_e_B_off_node(memo):
    # a fresh Bogoliubov solve between two nodes
    lam = 0.37
    assert memo.e_B_interp(lam) == pytest.approx(memo.e_B(lam), rel=1e-3)


# ---------------------------------------------------------------- even split

def test_even_split_example(table100):
    assert table100.argmin_n == 50
    assert table100.quadratic_constant > 0
    E = table100.energies
    assert np.abs(E - E[::-1]).max() <= 1e-8 * np.abs(E).max()
    assert np.all(table100.second_differences >= -1e-8 * abs(E[50]))


def test_even_split_quadratic_bound(table100):
    E = table100.energies
    n = np.arange(20, 81)
    C = table100.quadratic_constant
    assert np.all(E[n] >= E[50] + C / 100 * (n - 50) ** 2 - 1e-12 * abs(E[50]))


def test_even_split_flat_without_interaction():
    memo0 = CouplingMemo(TRAP, TRI, 0.0)
    tab = even_split_check(40, 0.0, memo0)
    E = tab.energies
    assert np.ptp(E) <= 1e-8 * abs(E[0])
    assert tab.argmin_n == 20


def test_even_split_odd_N(memo):
    tab = even_split_check(41, 1.0, memo)
    assert tab.argmin_n in (20, 21)


# ---------------------------------------------------------------- theorem assembly

def test_theorem_small_N(memo):
    t = theorem_energy(2, 1.0, memo)
    assert t.Delta_N == 0.0
    assert t.e_H_term == memo.e_H(0.0)


def test_theorem_free():
    t = theorem_energy(100, 0.0, CouplingMemo(TRAP, TRI, 0.0))
    assert t.energy_per_particle == pytest.approx(1.0, abs=1e-6)
    assert t.e_B_term == 0.0


@pytest.mark.parametrize("N", [50, 100])
def test_theorem_matches_split_route(memo, N):
    t = theorem_energy(N, 1.0, memo)
    split = split_energy(N // 2, N, 1.0, memo) / N
    gap = abs(memo.e_B((N / 2 - 1) / (N - 1)) - memo.e_B(0.5)) * 2 / N
    assert abs(t.energy_per_particle - split) <= gap + 1e-6


def test_theorem_monotone_in_lambda(memo):
    vals = [theorem_energy(100, lam, memo).energy_per_particle for lam in (0.25, 0.5, 0.75, 1.0)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


# ---------------------------------------------------------------- localized vs delocalized

@pytest.fixture(scope="module")
def L_sweep():
    return [loc_vs_dloc_report(100, 1.0, TrapSpec("DoubleWell", 2.0, L), TRI)
            for L in (3.0, 4.0, 5.0, 5.5, 6.0, 7.0, 8.0)]


def test_winner_flips_once(L_sweep):
    assert L_sweep[0].winner == "delocalized"
    assert L_sweep[-1].winner == "localized"
    assert count_winner_flips(L_sweep) == 1


def test_report_fields(L_sweep):
    for r in L_sweep:
        assert r.T < 0 and r.U > 0
        assert r.winner == ("localized" if r.regime_localized else "delocalized")
        assert set(r.as_dict()) == {"E_loc", "E_dloc", "T", "U", "winner", "criterion_pass"}


def test_criterion_consistent_with_winner(L_sweep):
    for r in L_sweep:
        assert r.criterion_pass == localization_criterion(100, r.L, 2.0, 0.5)
        if r.criterion_pass:
            assert r.winner == "localized"


def test_report_preconditions():
    with pytest.raises(ValueError):
        loc_vs_dloc_report(7, 1.0, TrapSpec("DoubleWell", 2.0, 6.0), TRI)
    with pytest.raises(ValueError):
        loc_vs_dloc_report(100, 1.0, TRAP, TRI)
