"""Hartree functional: evaluation, constrained minimization and diagnostics.

The functional is discretised with the 3-point Laplacian on the interior of a
hard-wall grid,

    E[u] = h sum u(-D2 u) + h sum V u^2 + (lam/2) h sum rho (w * rho),

so that the Euler-Lagrange operator ``H[u] = -D2 + V + lam w*|u|^2`` is a
symmetric tridiagonal matrix plus a diagonal, and every identity used in the
tests (mu = e_H + lam/2 * quartic = Rayleigh quotient) holds exactly in the
discrete setting.

Minimization uses the semi-implicit imaginary-time step

    (1 + tau H[u_k]) v = u_k,   u_{k+1} = sqrt(m) v / ||v||,

with tau adapted on the fly (grown after accepted steps, cut back whenever
the energy would rise).  For large tau this is inverse iteration on the
frozen mean-field operator, which converges far faster than the explicit
flow for fine grids.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .model import (
    Grid1D,
    InteractionKernel,
    TrapKind,
    TrapSpec,
    WaveFunction,
    agmon_distance,
    convolve_density,
    eval_potential,
)

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
MAX_ITER = 200_000
# the residual of -D2 u cannot drop below about eps/h^2 in floating point
ROUNDOFF_FACTOR = 4.0
BOX_FACTOR = 50.0


class HartreeError(RuntimeError):
    """Numerical failure of the Hartree solver."""


class NonConvergenceError(HartreeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class BoxTooSmallError(HartreeError):
    pass


@dataclass(frozen=True)
class PerturbationSpec:
    """Relative lowering ``delta`` of the potential on [center - ell, center + ell]."""

    delta: float
    strip_center: float
    strip_halfwidth: float

    def __post_init__(self):
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"perturbation delta must lie in [0, 1), got {self.delta}")
        if not self.strip_halfwidth > 0:
            raise ValueError("perturbation strip half-width must be positive")

    def indicator(self, x):
        return (np.abs(np.asarray(x) - self.strip_center) <= self.strip_halfwidth).astype(float)


@dataclass
class HartreeSolution:
    u: WaveFunction
    e_H: float
    mu: float
    lam: float
    residual: float
    iterations: int
    trap: TrapSpec | None = None
    kernel: InteractionKernel | None = None
    potential: np.ndarray | None = field(default=None, repr=False)
    energy_history: np.ndarray | None = field(default=None, repr=False)

    @property
    def grid(self) -> Grid1D:
        return self.u.grid

    @property
    def mass(self) -> float:
        return self.u.mass


# ---------------------------------------------------------------- discrete pieces

def _walled(values: np.ndarray) -> np.ndarray:
    u = np.array(values, dtype=float)
    u[0] = u[-1] = 0.0
    return u


def minus_laplacian(u: np.ndarray, h: float) -> np.ndarray:
    """3-point -u'' with zero Dirichlet values at both ends; zero on the wall nodes."""
    out = np.zeros_like(u)
    out[1:-1] = (2.0 * u[1:-1] - u[:-2] - u[2:]) / (h * h)
    return out


def kinetic_energy(u: np.ndarray, h: float) -> float:
    u = _walled(u)
    return float(np.sum(np.diff(u) ** 2) / h)


def interaction_energy(u: np.ndarray, grid: Grid1D, w: InteractionKernel) -> float:
    """Quartic term (half of it enters the functional): h sum rho (w * rho)."""
    rho = _walled(u) ** 2
    return grid.integrate(rho * convolve_density(w, rho, grid))


def _energy(u, V, grid, w, lam):
    h = grid.spacing
    e = kinetic_energy(u, h) + grid.integrate(V * u * u)
    if lam:
        e += 0.5 * lam * interaction_energy(u, grid, w)
    return e


def hartree_energy(u: WaveFunction, trap: TrapSpec, w: InteractionKernel, lam: float,
                   potential: np.ndarray | None = None) -> float:
    """Discrete Hartree functional at ``u`` (any mass)."""
    if lam < 0:
        raise ValueError("coupling lambda must be non-negative")
    V = eval_potential(trap, u.grid.x) if potential is None else potential
    return _energy(_walled(u.values), V, u.grid, w, lam)


def mean_field_operator(u: np.ndarray, V: np.ndarray, grid: Grid1D, w, lam: float) -> np.ndarray:
    """Diagonal potential part V + lam w*|u|^2 of the Euler-Lagrange operator."""
    if lam:
        return V + lam * convolve_density(w, u * u, grid)
    return np.asarray(V, dtype=float)


def apply_operator(u: np.ndarray, diag_pot: np.ndarray, h: float) -> np.ndarray:
    out = minus_laplacian(u, h) + diag_pot * u
    out[0] = out[-1] = 0.0
    return out


def rayleigh_quotient(u: np.ndarray, V, grid: Grid1D, w, lam: float) -> float:
    u = _walled(u)
    hu = apply_operator(u, mean_field_operator(u, V, grid, w, lam), grid.spacing)
    return grid.inner(u, hu) / grid.inner(u, u)


def el_residual(u: np.ndarray, V, grid: Grid1D, w, lam: float) -> tuple[float, float]:
    """(mu, ||(H[u] - mu) u||) with mu the Rayleigh quotient."""
    u = _walled(u)
    hu = apply_operator(u, mean_field_operator(u, V, grid, w, lam), grid.spacing)
    mu = grid.inner(u, hu) / grid.inner(u, u)
    r = hu - mu * u
    return mu, float(np.sqrt(grid.integrate(r * r)))


# ---------------------------------------------------------------- box sizing

def _linear_ground_energy(s: float) -> float:
    """Rough ground energy of -d2 + |x|^s, used only to size boxes."""
    if s == 2:
        return 1.0
    # WKB-ish estimate, generous on purpose
    return 1.5 * (1.0 + s / 4.0)


def auto_half_width(trap: TrapSpec, w: InteractionKernel | None = None, lam: float = 0.0,
                    mass: float = 1.0, factor: float = BOX_FACTOR) -> float:
    """Half-width with V(half_width) >= factor * mu_bound around the well center."""
    mu_bound = _linear_ground_energy(trap.s)
    if lam and w is not None:
        mu_bound += lam * w.sup_norm * mass
    r = (factor * mu_bound) ** (1.0 / trap.s)
    return float(r + (trap.center if trap.kind is TrapKind.DOUBLE else 0.0))


def default_grid(trap: TrapSpec, w: InteractionKernel | None = None, lam: float = 0.0,
                 mass: float = 1.0, n_points: int = 4096, half_width: float | None = None) -> Grid1D:
    hw = auto_half_width(trap, w, lam, mass) if half_width is None else half_width
    return Grid1D(n_points, hw)


# ---------------------------------------------------------------- solver

def _initial_guess(x: np.ndarray, trap: TrapSpec | None, center: float) -> np.ndarray:
    if trap is not None and trap.kind is TrapKind.DOUBLE:
        c = trap.center
        return np.exp(-0.5 * (x - c) ** 2) + np.exp(-0.5 * (x + c) ** 2)
    return np.exp(-0.5 * (x - center) ** 2)


def _normalize(u: np.ndarray, grid: Grid1D, mass: float) -> np.ndarray:
    u = _walled(u)
    return u * np.sqrt(mass / grid.integrate(u * u))


def _implicit_step(u, diag_pot, h, tau):
    n_in = u.size - 2
    ab = np.empty((3, n_in))
    off = -tau / (h * h)
    ab[0, :] = off
    ab[2, :] = off
    ab[1, :] = 1.0 + tau * (2.0 / (h * h) + diag_pot[1:-1])
    out = np.zeros_like(u)
    out[1:-1] = solve_banded((1, 1), ab, u[1:-1], overwrite_ab=True, check_finite=False)
    return out


def default_tol(grid: Grid1D) -> float:
    """DEFAULT_TOL, raised to a small multiple of the roundoff floor on fine grids."""
    return max(DEFAULT_TOL, ROUNDOFF_FACTOR * np.finfo(float).eps / grid.spacing ** 2)


def minimize_potential(V: np.ndarray, grid: Grid1D, w: InteractionKernel | None, lam: float,
                       mass: float = 1.0, tol: float | None = None, max_iter: int = MAX_ITER,
                       u0: np.ndarray | None = None, center: float = 0.0,
                       trap: TrapSpec | None = None, check_box: bool = True) -> HartreeSolution:
    """Minimize the Hartree functional for a tabulated potential ``V`` on ``grid``.

    With ``tol=None`` the residual target is ``default_tol(grid)``; an explicit
    tolerance below the roundoff floor ends in NonConvergenceError.
    """
    if tol is None:
        tol = default_tol(grid)
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not mass > 0:
        raise ValueError("mass must be positive")
    if lam < 0:
        raise ValueError("coupling lambda must be non-negative")
    if lam and w is None:
        raise ValueError("an interaction kernel is required when lambda > 0")
    if lam:
        w.stencil(grid.spacing)  # resolution check up front
    h = grid.spacing
    x = grid.x
    V = np.asarray(V, dtype=float)
    u = _normalize(_initial_guess(x, trap, center) if u0 is None else np.abs(u0), grid, mass)

    energy = _energy(u, V, grid, w, lam)
    history = [energy]
    mu, res = el_residual(u, V, grid, w, lam)
    tau = 1.0 / max(mu, 1.0)
    it = 0
    stalls = 0
    while res > tol:
        if it >= max_iter:
            raise NonConvergenceError(
                f"Hartree solver did not converge in {max_iter} iterations "
                f"(last residual {res:.3e})", res, it)
        it += 1
        diag_pot = mean_field_operator(u, V, grid, w, lam)
        # roundoff slack on the energy test, so steps near the minimum are not rejected forever
        slack = 64 * np.finfo(float).eps * (abs(energy) + 1.0)
        while True:
            v = _normalize(_implicit_step(u, diag_pot, h, tau), grid, mass)
            e_new = _energy(v, V, grid, w, lam)
            if e_new <= energy + slack:
                break
            tau *= 0.25
            if tau < 1e-14:
                raise NonConvergenceError(
                    f"step size underflow in Hartree solver (last residual {res:.3e})", res, it)
        u, energy = v, min(e_new, energy)
        history.append(e_new)
        mu_new, res_new = el_residual(u, V, grid, w, lam)
        stalls = stalls + 1 if res_new >= 0.999 * res else 0
        mu, res = mu_new, res_new
        tau = min(tau * 2.0, 1e8)
        if stalls > 200:
            raise NonConvergenceError(
                f"Hartree residual stalled at {res:.3e} above tol {tol:.1e}; "
                "the grid is too fine for this tolerance", res, it)

    if np.sum(u) < 0:
        u = -u
    u = np.where(u < 0, np.maximum(u, -1e-12 * u.max()), u)
    energy = _energy(u, V, grid, w, lam)
    if check_box:
        edge = max(abs(u[1]), abs(u[-2]))
        if edge > 1e-8 * np.max(np.abs(u)):
            raise BoxTooSmallError(
                f"wavefunction at the box edge is {edge:.2e} (max {np.max(u):.2e}); "
                "increase grid.halfwidth")
    # the formula route and the Rayleigh quotient must agree
    quartic = interaction_energy(u, grid, w) if lam else 0.0
    mu_formula = (energy + 0.5 * lam * quartic) / mass
    if abs(mu_formula - mu) > 1e-9 * (abs(mu) + 1.0):
        raise HartreeError(f"chemical potential routes disagree: {mu_formula!r} vs {mu!r}")
    log.debug("hartree converged: it=%d res=%.2e e=%.15g", it, res, energy)
    return HartreeSolution(WaveFunction(grid, u, mass), energy, mu, lam, res, it,
                           trap=trap, kernel=w, potential=V, energy_history=np.array(history))


def minimize_hartree(trap: TrapSpec, w: InteractionKernel | None, lam: float, mass: float = 1.0,
                     grid: Grid1D | None = None, tol: float | None = None,
                     max_iter: int = MAX_ITER) -> HartreeSolution:
    """Ground state of the Hartree functional with ``int u^2 = mass``."""
    if grid is None:
        grid = default_grid(trap, w, lam, mass)
    V = eval_potential(trap, grid.x)
    return minimize_potential(V, grid, w, lam, mass, tol, max_iter, trap=trap)


def chemical_potential(sol: HartreeSolution, w: InteractionKernel | None = None,
                       lam: float | None = None) -> float:
    """e_H / m + (lam / 2m) * quartic; the Lagrange multiplier of the mass constraint."""
    w = sol.kernel if w is None else w
    lam = sol.lam if lam is None else lam
    m = sol.mass
    if not lam:
        return sol.e_H / m
    return (sol.e_H + 0.5 * lam * interaction_energy(sol.u.values, sol.grid, w)) / m


def mass_scaled_energy(m: float, lam: float, trap: TrapSpec, w: InteractionKernel | None,
                       grid: Grid1D | None = None, tol: float | None = None) -> float:
    """e_H(m, lam) through m * e_H(1, m lam)."""
    if not m > 0:
        raise ValueError("mass must be positive")
    return m * minimize_hartree(trap, w, m * lam, 1.0, grid, tol).e_H


# ---------------------------------------------------------------- diagnostics

@dataclass(frozen=True)
class DecayFit:
    slope_alpha: float
    r_squared: float
    n_points: int
    expected: float | None = None


def expected_decay_slope(s: float, d: int, mu: float) -> float:
    """-alpha with alpha = (2d - 2 + s)/(4s), minus mu/(2s) in the harmonic case."""
    alpha = (2 * d - 2 + s) / (4 * s)
    if s == 2:
        alpha -= mu / (2 * s)
    return -alpha


def decay_exponent_fit(sol: HartreeSolution, trap: TrapSpec, fit_window) -> DecayFit:
    """Regress log u + A(r) on log V(r) for r = |x - center| in ``fit_window``.

    Uses the right half of the well.  Points in the outer 5% of the grid and
    points with u within a factor 1e3 of the smallest normal double are dropped.
    """
    r_lo, r_hi = fit_window
    grid = sol.grid
    x = grid.x
    n = grid.n_points
    c = trap.center if trap.kind is TrapKind.DOUBLE else 0.0
    r = x - c
    u = sol.u.values
    keep = np.zeros(n, dtype=bool)
    cut = int(np.ceil(0.05 * n))
    keep[cut:n - cut] = True
    keep &= (r >= r_lo) & (r <= r_hi) & (r > 0)
    keep &= u > 1e3 * np.finfo(float).tiny
    if keep.sum() < 8:
        raise ValueError(f"decay fit window holds {int(keep.sum())} usable points; need at least 8")
    rr = r[keep]
    y = np.log(u[keep]) + agmon_distance(rr, trap.s)
    X = trap.s * np.log(rr)
    slope, icpt = np.polyfit(X, y, 1)
    fit = slope * X + icpt
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(slope), r2, int(keep.sum()))


@dataclass(frozen=True)
class MeanFieldReport:
    sup_ratio: float
    sup_ratio_large_box: float
    growth: float
    passed: bool


def _mf_sup(sol: HartreeSolution, w: InteractionKernel, eta: float) -> float:
    u = sol.u.values
    n = u.size
    cut = int(np.ceil(0.05 * n))
    sl = slice(cut, n - cut)
    hmf = convolve_density(w, u * u, sol.grid)[sl]
    uu = u[sl]
    pos = uu > 0
    return float(np.max(hmf[pos] / uu[pos] ** (2.0 - eta)))


def mean_field_control(sol: HartreeSolution, w: InteractionKernel, eta: float,
                       tol: float | None = None) -> MeanFieldReport:
    """sup (w*|u|^2)/|u|^(2-eta) and its stability when the box grows by 25%."""
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    if sol.trap is None:
        raise ValueError("solution must carry its trap to rebuild a larger box")
    sup = _mf_sup(sol, w, eta)
    big = sol.grid.with_width(1.25 * sol.grid.half_width)
    tol = sol.residual * 10 if tol is None else tol
    sol_big = minimize_hartree(sol.trap, sol.kernel if sol.kernel is not None else w, sol.lam,
                               sol.mass, big, max(tol, default_tol(big)))
    sup_big = _mf_sup(sol_big, w, eta)
    growth = sup_big / sup - 1.0
    return MeanFieldReport(sup, sup_big, growth, bool(growth <= 0.05))


@dataclass(frozen=True)
class PerturbedComparison:
    solution: HartreeSolution
    reference: HartreeSolution
    delta_e: float
    l2_distance: float


def perturbed_potential(trap: TrapSpec, pert: PerturbationSpec, x) -> np.ndarray:
    return eval_potential(trap, x) * (1.0 - pert.delta * pert.indicator(x))


def solve_perturbed(trap: TrapSpec, pert: PerturbationSpec, w: InteractionKernel | None,
                    lam: float, grid: Grid1D | None = None, tol: float | None = None,
                    reference: HartreeSolution | None = None) -> PerturbedComparison:
    """Minimize with V (1 - delta 1_strip) and compare with the unperturbed minimizer."""
    if grid is None:
        grid = default_grid(trap, w, lam)
    lo, hi = pert.strip_center - pert.strip_halfwidth, pert.strip_center + pert.strip_halfwidth
    if lo < -grid.half_width or hi > grid.half_width:
        raise ValueError("perturbation strip must lie inside the box")
    if reference is None:
        reference = minimize_hartree(trap, w, lam, 1.0, grid, tol)
    V = perturbed_potential(trap, pert, grid.x)
    sol = minimize_potential(V, grid, w, lam, 1.0, tol, u0=reference.u.values, trap=trap)
    diff = sol.u.values - reference.u.values
    return PerturbedComparison(sol, reference, reference.e_H - sol.e_H,
                               float(np.sqrt(grid.integrate(diff * diff))))

