"""Quadratic (Bogoliubov) fluctuations around a Hartree minimizer.

With a real positive condensate and a real even kernel all coefficient
matrices are real.  Writing a = (q + ip)/sqrt(2), the quadratic Hamiltonian

    H = sum A_ij a_i^* a_j + 1/2 sum B_ij (a_i^* a_j^* + a_i a_j)

becomes 1/2 q.(A+B).q + 1/2 p.(A-B).p - tr(A)/2, which is diagonalized by a
Cholesky factor of A+B and an eigendecomposition of the congruent A-B.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, eigh, eigh_tridiagonal, solve_triangular

from .hartree import HartreeSolution, apply_operator, mean_field_operator, minimize_hartree
from .model import Grid1D, InteractionKernel, TrapSpec, convolve_field, eval_potential

DEFAULT_MODES = 32


class BogoliubovError(RuntimeError):
    pass


@dataclass
class ModeBasis:
    """Condensate plus M orthonormal excitation modes, stored as grid values."""

    grid: Grid1D
    condensate: np.ndarray
    excited: np.ndarray          # shape (n_points, M)
    mf_eigenvalues: np.ndarray   # mean-field eigenvalues of the excited modes

    @property
    def M(self) -> int:
        return self.excited.shape[1]

    def gram(self) -> np.ndarray:
        allv = np.column_stack([self.condensate, self.excited])
        return (allv * self.grid.weights[:, None]).T @ allv


@dataclass
class QuadraticForm:
    A: np.ndarray
    B: np.ndarray
    K: np.ndarray
    mu: float
    lam: float


@dataclass
class BogoliubovResult:
    frequencies: np.ndarray
    e_B: float
    gamma: np.ndarray
    alpha: np.ndarray
    K_matrix: np.ndarray

    @property
    def quasifree_defect(self) -> float:
        g, a = self.gamma, self.alpha
        return float(np.abs(a @ a.T - g @ (np.eye(len(g)) + g)).max())

    @property
    def tr_gamma(self) -> float:
        return float(np.trace(self.gamma))


def build_mode_basis(sol: HartreeSolution, w: InteractionKernel | None, lam: float,
                     M: int = DEFAULT_MODES) -> ModeBasis:
    """Lowest M eigenmodes of the mean-field operator orthogonal to the condensate."""
    grid = sol.grid
    n_in = grid.n_points - 2
    if M < 1 or M + 1 > n_in:
        raise ValueError(f"mode count M={M} must be in [1, {n_in - 1}]")
    h = grid.spacing
    u0 = sol.u.values
    V = sol.potential if sol.potential is not None else eval_potential(sol.trap, grid.x)
    pot = mean_field_operator(u0, V, grid, w, lam)
    d = 2.0 / (h * h) + pot[1:-1]
    e = np.full(n_in - 1, -1.0 / (h * h))
    try:
        vals, vecs = eigh_tridiagonal(d, e, select="i", select_range=(0, M))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise BogoliubovError(f"mean-field eigensolve failed: {exc}") from exc
    full = np.zeros((grid.n_points, M + 1))
    full[1:-1] = vecs / np.sqrt(h)
    c0 = u0 / np.sqrt(grid.integrate(u0 * u0))
    wts = grid.weights
    ov = np.abs(full.T @ (wts * c0))
    drop = int(np.argmax(ov))
    keep = [i for i in range(M + 1) if i != drop]
    ex = full[:, keep]
    ex -= np.outer(c0, (ex * wts[:, None]).T @ c0)
    # re-orthonormalize in the weighted inner product; sqrt(h) scaling keeps it Euclidean
    q, r = np.linalg.qr(ex * np.sqrt(h))
    q *= np.sign(np.diag(r))
    ex = q / np.sqrt(h)
    ex[0] = ex[-1] = 0.0
    for j in range(ex.shape[1]):  # sign convention: first large lobe positive
        k = int(np.argmax(np.abs(ex[:, j]) > 1e-3 * np.abs(ex[:, j]).max()))
        if ex[k, j] < 0:
            ex[:, j] = -ex[:, j]
    return ModeBasis(grid, c0, ex, vals[keep])


def kernel_matrix(basis: ModeBasis, w: InteractionKernel) -> np.ndarray:
    """K_ij = <u_i, K u_j> with K(x, y) = u0(x) w(x - y) u0(y), by windowed convolution."""
    grid = basis.grid
    u0 = basis.condensate
    conv = convolve_field(w, u0[:, None] * basis.excited, grid)
    K = (basis.excited * (grid.weights * u0)[:, None]).T @ conv
    return 0.5 * (K + K.T)


def build_quadratic_form(basis: ModeBasis, w: InteractionKernel | None, lam: float, mu: float,
                         potential: np.ndarray) -> QuadraticForm:
    grid = basis.grid
    h = grid.spacing
    pot = mean_field_operator(basis.condensate, potential, grid, w, lam)
    hu = np.column_stack([apply_operator(basis.excited[:, j], pot, h) for j in range(basis.M)])
    A = (basis.excited * grid.weights[:, None]).T @ hu - mu * np.eye(basis.M)
    A = 0.5 * (A + A.T)
    if lam:
        K = kernel_matrix(basis, w)
    else:
        K = np.zeros_like(A)
    A = A + lam * K
    B = lam * K
    return QuadraticForm(A, B, K, mu, lam)


def _check_coercive(X: np.ndarray, Y: np.ndarray):
    for name, m in (("A+B", X), ("A-B", Y)):
        lo = eigh(m, eigvals_only=True, subset_by_index=[0, 0])[0]
        if not lo > 0:
            raise BogoliubovError(f"Hessian not coercive at this discretization ({name} min eig {lo:.3e})")


def diagonalize(form: QuadraticForm) -> BogoliubovResult:
    A, B = form.A, form.B
    X = A + B
    Y = A - B
    _check_coercive(X, Y)
    Lc = cholesky(X, lower=True)
    S = Lc.T @ Y @ Lc
    w2, O = eigh(0.5 * (S + S.T))
    if np.any(w2 <= 0):
        raise BogoliubovError("non-positive symplectic eigenvalue")
    om = np.sqrt(w2)
    e_B = 0.5 * (om.sum() - np.trace(A))
    LO = Lc @ O
    sig_p = 0.5 * (LO / om) @ LO.T
    LiO = solve_triangular(Lc, O, lower=True, trans="T")
    sig_x = 0.5 * (LiO * om) @ LiO.T
    gamma = 0.5 * (sig_x + sig_p) - 0.5 * np.eye(len(A))
    alpha = 0.5 * (sig_x - sig_p)
    gamma = 0.5 * (gamma + gamma.T)
    alpha = 0.5 * (alpha + alpha.T)
    res = BogoliubovResult(np.sort(om), float(e_B), gamma, alpha, form.K)
    tol = 1e-8 * (1.0 + np.abs(gamma).max())
    if res.quasifree_defect > tol:
        raise BogoliubovError(f"pure quasi-free constraint violated by {res.quasifree_defect:.3e}")
    return res


def energy_functional_eval(result: BogoliubovResult, form: QuadraticForm) -> float:
    """tr[(H_mf - mu + lam K) gamma] + lam tr[K alpha]."""
    e = float(np.sum(form.A * result.gamma) + np.sum(form.B * result.alpha))
    if abs(e - result.e_B) > 1e-6 * (1.0 + abs(result.e_B)):
        raise BogoliubovError(f"energy functional {e!r} disagrees with e_B {result.e_B!r}")
    return e


@dataclass(frozen=True)
class DensityReport:
    tr_V_rho: float
    tr_gamma: float
    min_rho: float


def trapped_density_bound(result: BogoliubovResult, basis: ModeBasis,
                          potential: np.ndarray) -> DensityReport:
    U = basis.excited
    rho = np.einsum("ai,ij,aj->a", U, result.gamma, U)
    return DensityReport(basis.grid.integrate(potential * rho), result.tr_gamma, float(rho.min()))


@dataclass
class BogoliubovRun:
    solution: HartreeSolution
    basis: ModeBasis
    form: QuadraticForm
    result: BogoliubovResult
    density: DensityReport

    @property
    def e_B(self) -> float:
        return self.result.e_B


def bogoliubov_grid(trap: TrapSpec, n_points: int = 2048, half_width: float = 12.0) -> Grid1D:
    return Grid1D(n_points, half_width)


def solve_bogoliubov(trap: TrapSpec, w: InteractionKernel | None, lam: float,
                     M: int = DEFAULT_MODES, grid: Grid1D | None = None,
                     tol: float | None = None, sol: HartreeSolution | None = None) -> BogoliubovRun:
    """Hartree solve, mode basis, quadratic form and diagonalization in one call."""
    if grid is None:
        grid = bogoliubov_grid(trap)
    if sol is None:
        sol = minimize_hartree(trap, w, lam, 1.0, grid, tol)
    basis = build_mode_basis(sol, w, lam, M)
    form = build_quadratic_form(basis, w, lam, sol.mu, sol.potential)
    res = diagonalize(form)
    energy_functional_eval(res, form)
    return BogoliubovRun(sol, basis, form, res, trapped_density_bound(res, basis, sol.potential))


def coupling_scan(lambdas, trap: TrapSpec, w: InteractionKernel, M: int = DEFAULT_MODES,
                  grid: Grid1D | None = None) -> list[tuple[float, float]]:
    lams = [float(x) for x in lambdas]
    if any(b < a for a, b in zip(lams, lams[1:])) or any(x < 0 for x in lams):
        raise ValueError("couplings must be non-negative and ascending")
    return [(lam, solve_bogoliubov(trap, w, lam, M, grid).e_B) for lam in lams]


def coupling_exponent(scan) -> float:
    """log-log slope of |e_B| against lambda, fitted on the lower half of positive couplings."""
    pts = [(lam, abs(e)) for lam, e in scan if lam > 0]
    pts = pts[: max(2, (len(pts) + 1) // 2)]
    lx, ly = np.log([p[0] for p in pts]), np.log([p[1] for p in pts])
    return float(np.polyfit(lx, ly, 1)[0])
