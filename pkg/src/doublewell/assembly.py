"""Headline quantities assembled from the Hartree, Bogoliubov, tunneling and two-mode parts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .bogoliubov import DEFAULT_MODES, bogoliubov_grid, solve_bogoliubov
from .hartree import apply_operator, default_grid, interaction_energy, minimize_hartree
from .model import Grid1D, InteractionKernel, TrapKind, TrapSpec, eval_potential
from .tunneling import localization_criterion, tunneling_energy, well_pair
from .twomode import TwoModeParams, make_state, observables


class AssemblyError(RuntimeError):
    pass


class CouplingMemo:
    """Memoized e_H(lam) and e_B(lam) at unit mass, plus a shape-preserving e_B interpolant.

    All Hartree solves share one grid (sized for the largest coupling) so that
    energies at neighbouring couplings differ smoothly.
    """

    def __init__(self, trap: TrapSpec, w: InteractionKernel, lam_max: float,
                 modes: int = DEFAULT_MODES, hartree_grid: Grid1D | None = None,
                 bog_grid: Grid1D | None = None, n_nodes: int = 12):
        single = trap.single() if trap.kind is TrapKind.DOUBLE else trap
        self.trap = single
        self.w = w
        self.lam_max = float(lam_max)
        self.modes = modes
        self.hartree_grid = hartree_grid or default_grid(single, w, max(lam_max, 0.0),
                                                         n_points=4096)
        self.bog_grid = bog_grid or bogoliubov_grid(single)
        self.n_nodes = n_nodes
        self._eH: dict[float, float] = {}
        self._eB: dict[float, float] = {}
        self._interp = None

    def e_H(self, lam: float) -> float:
        lam = float(lam)
        if lam not in self._eH:
            self._eH[lam] = minimize_hartree(self.trap, self.w, lam, 1.0, self.hartree_grid).e_H
        return self._eH[lam]

    def e_B(self, lam: float) -> float:
        lam = float(lam)
        if lam <= 0:
            return 0.0
        if lam not in self._eB:
            self._eB[lam] = solve_bogoliubov(self.trap, self.w, lam, self.modes,
                                             self.bog_grid).e_B
        return self._eB[lam]

    def nodes(self) -> np.ndarray:
        if self.lam_max <= 0:
            return np.array([0.0])
        lo = self.lam_max / 2 ** (self.n_nodes - 2)
        return np.concatenate([[0.0], np.geomspace(lo, self.lam_max, self.n_nodes - 1)])

    def e_B_interp(self, lam: float) -> float:
        if lam <= 0 or self.lam_max <= 0:
            return 0.0
        if lam > self.lam_max * (1 + 1e-12):
            raise ValueError(f"coupling {lam} beyond the interpolation range {self.lam_max}")
        if self._interp is None:
            # e_B ~ -C lam^2 at small coupling, so the ratio is the smooth quantity
            xs = self.nodes()[1:]
            ratio = [self.e_B(x) / x ** 2 for x in xs]
            self._interp = PchipInterpolator(np.log(xs), ratio, extrapolate=False)
        t = float(np.clip(np.log(lam), np.log(self.nodes()[1]), np.log(self.lam_max)))
        return float(self._interp(t)) * lam ** 2


def _well_energy(k: int, N: int, lam: float, memo: CouplingMemo, interp: bool) -> float:
    if k == 0:
        return 0.0
    c = lam * (k - 1) / (N - 1)
    eb = memo.e_B_interp(c) if interp else memo.e_B(c)
    return k * memo.e_H(c) + eb


def split_energy(n: int, N: int, lam: float, memo: CouplingMemo, interp: bool = False) -> float:
    """E_loc(n, N - n): Hartree plus Bogoliubov energy of each well at its own coupling."""
    if not 0 <= n <= N:
        raise ValueError(f"n must lie in [0, {N}]")
    if N < 2:
        raise ValueError("N must be at least 2")
    return _well_energy(n, N, lam, memo, interp) + _well_energy(N - n, N, lam, memo, interp)


@dataclass
class SplitEnergyTable:
    N: int
    lam: float
    entries: list[tuple[int, float]]
    argmin_n: int
    quadratic_constant: float
    second_differences: np.ndarray = field(repr=False)

    @property
    def energies(self) -> np.ndarray:
        return np.array([e for _, e in self.entries])


def _middle(N: int) -> np.ndarray:
    lo = int(np.ceil(0.2 * N))
    return np.arange(lo, N - lo + 1)


def even_split_check(N: int, lam: float, memo: CouplingMemo, check: bool = True) -> SplitEnergyTable:
    """Full n-sweep of the split energy, its argmin and the fitted quadratic constant."""
    if N < 2:
        raise ValueError("N must be at least 2")
    E = np.array([split_energy(n, N, lam, memo, interp=True) for n in range(N + 1)])
    emin = E.min()
    tied = np.flatnonzero(E <= emin + 1e-12 * max(abs(emin), 1.0))
    argmin = int(tied[np.argmin(np.abs(tied - N / 2))])
    mid = _middle(N)
    off = mid[mid * 2 != N]
    ref = E[N // 2] if N % 2 == 0 else min(E[N // 2], E[N // 2 + 1])
    C = float(np.min(N * (E[off] - ref) / (off - N / 2) ** 2)) if off.size else float("nan")
    d2 = E[mid[1:-1] + 1] - 2 * E[mid[1:-1]] + E[mid[1:-1] - 1] if mid.size > 2 else np.array([])
    if check:
        allowed = {N // 2} if N % 2 == 0 else {N // 2, N // 2 + 1}
        if argmin not in allowed:
            raise AssemblyError(f"split energy minimized at n={argmin}, not at N/2")
    return SplitEnergyTable(N, lam, list(zip(range(N + 1), E.tolist())), argmin, C, d2)


@dataclass(frozen=True)
class TheoremEnergy:
    energy_per_particle: float
    e_H_term: float
    e_B_term: float
    Delta_N: float


def theorem_energy(N: int, lam: float, memo: CouplingMemo) -> TheoremEnergy:
    """e_H(Delta_N lam / 2) + (2/N) e_B(lam / 2) with Delta_N = 1 - 1/(N - 1)."""
    if N < 2:
        raise ValueError("N must be at least 2")
    delta = 1.0 - 1.0 / (N - 1)
    eh = memo.e_H(delta * lam / 2.0)
    eb = 2.0 / N * memo.e_B(lam / 2.0)
    return TheoremEnergy(eh + eb, eh, eb, delta)


@dataclass(frozen=True)
class LocDlocReport:
    N: int
    L: float
    E_loc: float
    E_dloc: float
    T: float
    U: float
    winner: str
    criterion_pass: bool
    regime_localized: bool   # |T| < U / 4, the exact tie point of the two trial energies

    def as_dict(self) -> dict:
        return {"E_loc": self.E_loc, "E_dloc": self.E_dloc, "T": self.T, "U": self.U,
                "winner": self.winner, "criterion_pass": self.criterion_pass}


def loc_vs_dloc_report(N: int, lam: float, trap: TrapSpec, w: InteractionKernel,
                       epsilon: float = 0.5, spacing: float = 0.025) -> LocDlocReport:
    """Compare the evenly split Fock state with the coherent (delocalized) state."""
    if N < 4 or N % 2:
        raise ValueError("N must be even and at least 4")
    if trap.kind is not TrapKind.DOUBLE:
        raise ValueError("comparison needs a DoubleWell trap")
    pair = well_pair(trap, w, lam, spacing)
    grid = pair.grid
    rep = tunneling_energy(pair.u_minus, pair.u_plus, trap, w, lam, pair.mu)
    VN = eval_potential(trap, grid.x)
    one_body = [grid.inner(u.values, apply_operator(u.values, VN, grid.spacing))
                for u in (pair.u_minus, pair.u_plus)]
    Q = interaction_energy(pair.single.u.values, pair.single.grid, w)
    U = lam * Q / (N - 1)
    p = TwoModeParams(N, one_body[0], one_body[1], rep.T, U)
    E_loc = observables(make_state("fock", N), p).energy
    E_dloc = observables(make_state("coherent", N), p).energy
    winner = "localized" if E_loc < E_dloc else "delocalized"
    crit = localization_criterion(N, trap.separation_L, trap.s, epsilon)
    return LocDlocReport(N, trap.separation_L, E_loc, E_dloc, rep.T, U, winner, crit,
                         bool(abs(rep.T) < U / 4.0))


def count_winner_flips(reports) -> int:
    w = [r.winner for r in reports]
    return sum(a != b for a, b in zip(w, w[1:]))
