import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from doublewell.bogoliubov import (
    BogoliubovError,
    QuadraticForm,
    build_mode_basis,
    build_quadratic_form,
    coupling_exponent,
    coupling_scan,
    diagonalize,
    energy_functional_eval,
    kernel_matrix,
    solve_bogoliubov,
    trapped_density_bound,
)
from doublewell.hartree import minimize_hartree
from doublewell.model import Grid1D, InteractionKernel, TrapSpec

TRAP = TrapSpec("SingleWell", 2.0)
TRI = InteractionKernel("Triangle", 1.0, 0.5)


def truncated_ground_energy(A, B, n_max=60):
    """Lowest eigenvalue of A a*a + B/2 (a*a* + aa) in the span of |0>..|n_max>."""
    n = np.arange(n_max + 1)
    H = np.diag(A * n.astype(float))
    pair = 0.5 * B * np.sqrt((n[:-2] + 1.0) * (n[:-2] + 2.0))
    H += np.diag(pair, 2) + np.diag(pair, -2)
    return np.linalg.eigvalsh(H)[0]


def toy(A, B):
    return QuadraticForm(np.array([[A]]), np.array([[B]]), np.array([[B]]), 0.0, 1.0)


@pytest.fixture(scope="module")
def run32():
    return solve_bogoliubov(TRAP, TRI, 1.0, 32)


@pytest.fixture(scope="module")
def run48():
    return solve_bogoliubov(TRAP, TRI, 1.0, 48)


# ---------------------------------------------------------------- single-mode toy

def test_single_mode_closed_form():
    res = diagonalize(toy(2.0, 1.0))
    exact = 0.5 * (np.sqrt(3.0) - 2.0)
    assert res.frequencies[0] == pytest.approx(np.sqrt(3.0), abs=1e-12)
    assert res.e_B == pytest.approx(exact, abs=1e-12)
    assert truncated_ground_energy(2.0, 1.0) == pytest.approx(exact, abs=1e-10)
    assert energy_functional_eval(res, toy(2.0, 1.0)) == pytest.approx(-0.1339746, abs=1e-7)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 5.0), st.floats(-0.9, 0.9))
def test_single_mode_against_truncated_fock(A, r):
    B = r * A
    res = diagonalize(toy(A, B))
    assert res.e_B == pytest.approx(truncated_ground_energy(A, B, 120), abs=1e-8)
    assert res.quasifree_defect <= 1e-8 * (1 + np.abs(res.gamma).max())


def test_zero_pairing_is_vacuum():
    A = np.diag([1.0, 2.5, 4.0])
    res = diagonalize(QuadraticForm(A, np.zeros((3, 3)), np.zeros((3, 3)), 0.0, 0.0))
    assert np.allclose(res.frequencies, [1.0, 2.5, 4.0], atol=1e-12)
    assert res.e_B == pytest.approx(0.0, abs=1e-14)
    assert np.abs(res.gamma).max() <= 1e-14 and np.abs(res.alpha).max() <= 1e-14


def test_not_coercive():
    with pytest.raises(BogoliubovError, match="not coercive"):
        diagonalize(toy(1.0, 2.0))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10 ** 6))
def test_random_forms_structure(M, seed):
    rng = np.random.default_rng(seed)
    Q = np.linalg.qr(rng.normal(size=(M, M)))[0]
    A = Q @ np.diag(rng.uniform(1, 5, M)) @ Q.T
    C = rng.normal(size=(M, M))
    B = 0.3 * (C + C.T) / (np.linalg.norm(C + C.T, 2) + 1e-12)
    form = QuadraticForm(A, B, B, 0.0, 1.0)
    res = diagonalize(form)
    assert np.all(res.frequencies > 0)
    assert res.quasifree_defect <= 1e-8 * (1 + np.abs(res.gamma).max())
    assert np.linalg.eigvalsh(res.gamma).min() >= -1e-10
    assert abs(energy_functional_eval(res, form) - res.e_B) <= 1e-6 * (1 + abs(res.e_B))
    assert res.e_B <= 1e-10


# ---------------------------------------------------------------- mode basis

def test_hermite_spectrum():
    sol = minimize_hartree(TRAP, None, 0.0, grid=Grid1D(8192, 10.0))
    basis = build_mode_basis(sol, None, 0.0, 8)
    assert np.allclose(basis.mf_eigenvalues[:5], [3, 5, 7, 9, 11], atol=1e-4)
    assert np.abs(basis.gram() - np.eye(9)).max() <= 1e-8


def test_nested_bases():
    sol = minimize_hartree(TRAP, TRI, 1.0, grid=Grid1D(1024, 9.0))
    b8 = build_mode_basis(sol, TRI, 1.0, 8)
    b16 = build_mode_basis(sol, TRI, 1.0, 16)
    d = np.abs(b8.excited - b16.excited[:, :8]).max()
    assert d <= 1e-8 * np.abs(b8.excited).max()
    assert np.abs(b16.gram() - np.eye(17)).max() <= 1e-8


def test_mode_count_validation():
    sol = minimize_hartree(TRAP, None, 0.0, grid=Grid1D(64, 7.5))
    with pytest.raises(ValueError):
        build_mode_basis(sol, None, 0.0, 0)
    with pytest.raises(ValueError):
        build_mode_basis(sol, None, 0.0, 62)


def test_kernel_matrix_fubini():
    g = Grid1D(512, 8.0)
    sol = minimize_hartree(TRAP, TRI, 1.0, grid=g)
    basis = build_mode_basis(sol, TRI, 1.0, 6)
    K = kernel_matrix(basis, TRI)
    x = g.x
    W = TRI(x[:, None] - x[None, :])
    F = basis.excited * (basis.condensate * g.weights)[:, None]
    dense = F.T @ W @ F
    assert np.abs(K - dense).max() <= 1e-8
    assert np.array_equal(K, K.T)


def test_free_quadratic_form():
    sol = minimize_hartree(TRAP, None, 0.0, grid=Grid1D(2048, 10.0))
    basis = build_mode_basis(sol, None, 0.0, 6)
    form = build_quadratic_form(basis, None, 0.0, sol.mu, sol.potential)
    assert np.all(form.B == 0)
    assert np.allclose(form.A, np.diag(basis.mf_eigenvalues - sol.mu), atol=1e-8)
    res = diagonalize(form)
    assert res.e_B == pytest.approx(0.0, abs=1e-12)
    assert energy_functional_eval(res, form) == pytest.approx(0.0, abs=1e-12)
    assert np.all(np.diff(res.frequencies) > 0)
    assert np.allclose(res.frequencies[:3], [2, 4, 6], atol=1e-3)
    dens = trapped_density_bound(res, basis, sol.potential)
    assert dens.tr_gamma == pytest.approx(0.0, abs=1e-12)
    assert dens.tr_V_rho == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------- interacting pipeline

def test_pipeline_structure(run32):
    f = run32.form
    assert np.abs(f.A - f.A.T).max() <= 1e-10 and np.abs(f.B - f.B.T).max() <= 1e-10
    r = run32.result
    assert r.e_B <= 0
    assert r.quasifree_defect <= 1e-8 * (1 + np.abs(r.gamma).max())
    assert abs(energy_functional_eval(r, f) - r.e_B) <= 1e-6 * (1 + abs(r.e_B))
    assert np.linalg.eigvalsh(r.gamma).min() >= -1e-10
    assert run32.density.min_rho >= -1e-10
    assert r.e_B == pytest.approx(-2.960e-3, rel=2e-3)


def test_truncation_stability(run32, run48):
    assert abs(run48.e_B - run32.e_B) <= 0.01 * abs(run48.e_B)
    assert abs(run48.density.tr_gamma - run32.density.tr_gamma) <= 0.05 * run48.density.tr_gamma
    assert abs(run48.density.tr_V_rho - run32.density.tr_V_rho) <= 0.05 * run48.density.tr_V_rho


@pytest.mark.slow
def test_coupling_scan():
    lams = [0.0, 0.125, 0.25, 0.5, 1.0]
    scan = coupling_scan(lams, TRAP, TRI)
    assert scan[0][1] == 0.0
    e = [v for _, v in scan[1:]]
    assert all(v <= 0 for v in e)
    assert all(abs(a) < abs(b) for a, b in zip(e, e[1:]))
    assert 1.7 <= coupling_exponent(scan) <= 2.3
    ratios = [abs(v) / lam ** 2 for lam, v in scan[1:]]
    assert max(ratios) / min(ratios) < 1.5
