"""Overlaps, tunneling energies, the localization criterion and the IMS split."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hartree import (
    HartreeSolution,
    apply_operator,
    auto_half_width,
    mean_field_operator,
    minimize_potential,
)
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

TUNNEL_SPACING = 0.025
TUNNEL_TOL = 1e-12


class TunnelingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TunnelingReport:
    L: float
    overlap: float
    T: float
    T_potential: float
    two_route_gap: float
    agmon_exponent: float
    log_ratio_overlap: float

    @property
    def T_negative(self) -> bool:
        return self.T < 0

    def as_row(self) -> dict:
        return {"L": self.L, "overlap": self.overlap, "T": self.T,
                "two_route_gap": self.two_route_gap, "agmon": self.agmon_exponent,
                "log_ratio": self.log_ratio_overlap}


@dataclass
class WellPair:
    """Left and right single-well minimizers placed on a common double-well grid."""

    trap: TrapSpec
    grid: Grid1D
    u_minus: WaveFunction
    u_plus: WaveFunction
    single: HartreeSolution
    kernel: InteractionKernel | None
    lam: float

    @property
    def mu(self) -> float:
        return self.single.mu


def _check_same_grid(a: WaveFunction, b: WaveFunction):
    if a.grid != b.grid:
        raise ValueError("wavefunctions live on different grids")


def overlap_integral(uL: WaveFunction, uR: WaveFunction) -> float:
    _check_same_grid(uL, uR)
    return uL.grid.inner(uL.values, uR.values)


def well_pair(trap: TrapSpec, w: InteractionKernel | None, lam: float,
              spacing: float = TUNNEL_SPACING, tol: float = TUNNEL_TOL,
              half_width: float | None = None) -> WellPair:
    """Solve one well and translate it to +-L/2 by an exact number of grid cells.

    The spacing is shrunk, if needed, so that L/2 is a whole number of cells.
    """
    if trap.kind is not TrapKind.DOUBLE:
        raise ValueError("well_pair needs a DoubleWell trap")
    c = trap.center
    k = int(np.ceil(c / spacing - 1e-9))
    h = c / k
    single = trap.single()
    r_box = auto_half_width(single, w, lam)
    hw_s = half_width if half_width is not None else c + r_box
    g_s = Grid1D.from_spacing(h, hw_s)
    sol = minimize_potential(eval_potential(single, g_s.x), g_s, w, lam, 1.0, tol, trap=single)
    K = (g_s.n_points - 1) // 2
    g_d = Grid1D(2 * (K + k) + 1, (K + k) * h)
    pad = np.zeros(k)
    us = sol.u.values
    u_plus = np.concatenate([pad, pad, us])
    u_minus = np.concatenate([us, pad, pad])
    return WellPair(trap, g_d, WaveFunction(g_d, u_minus), WaveFunction(g_d, u_plus), sol, w, lam)


def tunneling_energy(uL: WaveFunction, uR: WaveFunction, trap: TrapSpec,
                     w: InteractionKernel | None, lam: float, mu: float) -> TunnelingReport:
    """T from the quadratic form of -D2 + V_N and from the tunneling potential V_t^+."""
    _check_same_grid(uL, uR)
    grid = uL.grid
    x = grid.x
    VN = eval_potential(trap, x)
    T1 = grid.inner(uL.values, apply_operator(uR.values, VN, grid.spacing))
    # second route uses the tunneling potential of whichever function sits on the right
    u_r, u_l = (uR, uL) if grid.integrate(x * uR.values ** 2) >= 0 else (uL, uR)
    Vplus = np.abs(x - trap.center) ** trap.s
    mf = mean_field_operator(u_r.values, Vplus, grid, w, lam) - Vplus
    Vt = VN - Vplus - mf + mu
    T2 = grid.inner(u_l.values, Vt * u_r.values)
    gap = abs(T1 - T2)
    if gap > max(1e-10, 1e-3 * abs(T1)):
        raise TunnelingError(
            f"tunneling routes disagree by {gap:.3e} (T={T1:.3e}); tighten the solver residual")
    ov = overlap_integral(uL, uR)
    a2 = 2.0 * agmon_distance(trap.center, trap.s)
    ratio = -np.log(ov) / a2 if ov > 0 else np.inf
    return TunnelingReport(trap.separation_L, ov, T1, T2, gap, a2, float(ratio))


def tunnel_report(L: float, s: float, w: InteractionKernel | None, lam: float,
                  spacing: float = TUNNEL_SPACING, tol: float = TUNNEL_TOL,
                  half_width: float | None = None) -> TunnelingReport:
    trap = TrapSpec(TrapKind.DOUBLE, s, L)
    pair = well_pair(trap, w, lam, spacing, tol, half_width)
    return tunneling_energy(pair.u_minus, pair.u_plus, trap, w, lam, pair.mu)


def tunnel_sweep(L_list, s: float, w: InteractionKernel | None, lam: float,
                 spacing: float = TUNNEL_SPACING, tol: float = TUNNEL_TOL) -> list[TunnelingReport]:
    return [tunnel_report(L, s, w, lam, spacing, tol) for L in L_list]


def tunneling_slope(reports) -> float:
    """Regression slope of log|T| against -2 A(L/2)."""
    X = -np.array([r.agmon_exponent for r in reports])
    Y = np.log(np.abs([r.T for r in reports]))
    return float(np.polyfit(X, Y, 1)[0])


def localization_criterion(N: int, L: float, s: float, epsilon: float) -> bool:
    """log N <= 2 (1 - eps) A(L/2)."""
    if N < 2:
        raise ValueError("N must be at least 2")
    if not L > 0:
        raise ValueError("L must be positive")
    if not 0 <= epsilon < 1:
        raise ValueError("epsilon must lie in [0, 1)")
    return bool(np.log(N) <= 2.0 * (1.0 - epsilon) * agmon_distance(L / 2.0, s))


# ---------------------------------------------------------------- IMS localization

def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def partition(x, ell: float) -> tuple[np.ndarray, np.ndarray]:
    """Quadratic partition of unity: chi_- = 1 left of -ell, chi_+ = 1 right of ell."""
    theta = 0.5 * np.pi * _smoothstep((np.asarray(x, dtype=float) + ell) / (2.0 * ell))
    return np.cos(theta), np.sin(theta)


def modified_potentials(trap: TrapSpec, ell: float, x) -> tuple[np.ndarray, np.ndarray]:
    """Single-well potentials bent to V_N on the support of the matching chi."""
    c = trap.center
    vm = np.abs(x + c) ** trap.s
    vp = np.abs(x - c) ** trap.s
    vn = eval_potential(trap, x)
    eta_m = 1.0 - _smoothstep((x - ell) / ell)      # 1 on x <= ell, 0 beyond 2 ell
    eta_p = 1.0 - _smoothstep((-x - ell) / ell)
    return vm + (vn - vm) * eta_m, vp + (vn - vp) * eta_p


@dataclass(frozen=True)
class IMSReport:
    defect: float
    partition_defect: float
    continuum_defect: float


def _tridiag_parts(diag_pot, h):
    d = 2.0 / (h * h) + diag_pot
    off = np.full(diag_pot.size - 1, -1.0 / (h * h))
    return d, off


def ims_split_residual(trap: TrapSpec, ell: float, grid: Grid1D,
                       swap: bool = False) -> IMSReport:
    """Compare -D2 + V_N with chi_- H_- chi_- + chi_+ H_+ chi_+ entrywise.

    The discrete localization error lives on the first off-diagonal and is
    -(1/2h^2) sum_s (chi_s(i+1) - chi_s(i))^2; it is put into the sandwiched
    operators so that the identity is exact.  ``continuum_defect`` reports the
    mismatch obtained with the continuum correction -|chi'|^2 instead.
    """
    if trap.kind is not TrapKind.DOUBLE:
        raise ValueError("IMS split needs a DoubleWell trap")
    h = grid.spacing
    if ell < 4 * h:
        raise ValueError(f"ell={ell} is under-resolved; need at least 4 grid spacings ({4 * h})")
    x = grid.x[1:-1]
    cm, cp = partition(x, ell)
    vm, vp = modified_potentials(trap, ell, x)
    if swap:
        cm, cp = cp[::-1], cm[::-1]
        vm, vp = vp[::-1], vm[::-1]
    d0, off0 = _tridiag_parts(eval_potential(trap, x), h)

    E_off = -0.5 / (h * h) * (np.diff(cm) ** 2 + np.diff(cp) ** 2)
    pair = cm[:-1] * cm[1:] + cp[:-1] * cp[1:]
    G_off = E_off / pair

    d_rhs = np.zeros_like(d0)
    off_rhs = np.zeros_like(off0)
    for chi, v in ((cm, vm), (cp, vp)):
        d, off = _tridiag_parts(v, h)
        d_rhs += chi * chi * d
        off_rhs += chi[:-1] * chi[1:] * (off + G_off)
    scale = max(np.abs(d0).max(), np.abs(off0).max())
    defect = max(np.abs(d_rhs - d0).max(), np.abs(off_rhs - off0).max()) / scale

    # continuum IMS: -|chi'|^2 on the diagonal, evaluated analytically
    dtheta = 0.5 * np.pi * _dsmooth((x + ell) / (2.0 * ell)) / (2.0 * ell)
    d_c = np.zeros_like(d0)
    off_c = np.zeros_like(off0)
    for chi, v in ((cm, vm), (cp, vp)):
        d, off = _tridiag_parts(v, h)
        d_c += chi * chi * d
        off_c += chi[:-1] * chi[1:] * off
    d_c -= dtheta ** 2
    cont = max(np.abs(d_c - d0).max(), np.abs(off_c - off0).max()) / scale

    part = float(np.abs(cm * cm + cp * cp - 1.0).max())
    return IMSReport(float(defect), part, float(cont))


def _dsmooth(t):
    inside = (t > 0) & (t < 1)
    return np.where(inside, 30.0 * t * t * (1.0 - t) ** 2, 0.0)
