"""Two-mode Bose-Hubbard model in the Fock basis |n, N - n>, n = number in the left well."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln


@dataclass(frozen=True)
class TwoModeParams:
    N: int
    e_minus: float = 0.0
    e_plus: float = 0.0
    T: float = -1.0
    U: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2 or self.N % 2:
            raise ValueError(f"N must be an even integer >= 2, got {self.N}")
        if not self.U >= 0:
            raise ValueError("U must be non-negative")

    @property
    def E_loc(self) -> float:
        """Energy of the evenly split Fock state |N/2, N/2>."""
        N = self.N
        return 0.5 * (self.e_plus + self.e_minus) * N + 0.25 * self.U * N * (N - 2)


@dataclass
class TwoModeState:
    N: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs)
        if self.coeffs.shape != (self.N + 1,):
            raise ValueError("state needs N + 1 coefficients")
        nrm = np.vdot(self.coeffs, self.coeffs).real
        if abs(nrm - 1.0) > 1e-10:
            raise ValueError(f"state is not normalized (norm^2 = {nrm})")


def _hop(N: int) -> np.ndarray:
    """sqrt(n (N - n + 1)) for n = 1..N: the a_-^* a_+ matrix elements."""
    n = np.arange(1, N + 1, dtype=float)
    return np.sqrt(n * (N - n + 1))


def build_hamiltonian(p: TwoModeParams) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and first off-diagonal of the tridiagonal Hamiltonian."""
    N = p.N
    n = np.arange(N + 1, dtype=float)
    m = N - n
    diag = p.e_minus * n + p.e_plus * m + 0.5 * p.U * (n * (n - 1) + m * (m - 1))
    return diag, p.T * _hop(N)


def dense_hamiltonian(p: TwoModeParams) -> np.ndarray:
    d, e = build_hamiltonian(p)
    return np.diag(d) + np.diag(e, 1) + np.diag(e, -1)


def ground_state(p: TwoModeParams) -> tuple[float, TwoModeState]:
    d, e = build_hamiltonian(p)
    shift = p.E_loc  # large constant; removing it keeps the eigensolver's scale honest
    vals, vecs = eigh_tridiagonal(d - shift, e, select="i", select_range=(0, 0))
    c = vecs[:, 0]
    if c[p.N // 2] < 0 or (c[p.N // 2] == 0 and c.sum() < 0):
        c = -c
    c = c / np.linalg.norm(c)
    return float(vals[0] + shift), TwoModeState(p.N, c)


# ---------------------------------------------------------------- states

class StateKind(str, enum.Enum):
    FOCK = "fock"
    COHERENT = "coherent"
    GAUSSIAN = "gaussian"
    SQUEEZED = "squeezed"


def coherent_coeffs(N: int) -> np.ndarray:
    n = np.arange(N + 1)
    logc = 0.5 * (gammaln(N + 1) - gammaln(n + 1) - gammaln(N - n + 1)) - 0.5 * N * np.log(2.0)
    return np.exp(logc)


@lru_cache(maxsize=8)
def _jx_eig(N: int):
    vals, vecs = eigh_tridiagonal(np.zeros(N + 1), 0.5 * _hop(N))
    return vals, vecs


def rotate_x(c: np.ndarray, phi: float) -> np.ndarray:
    """exp(-i phi J_x) c through the eigendecomposition of J_x."""
    N = len(c) - 1
    if phi == 0:
        return np.array(c, dtype=complex)
    vals, Q = _jx_eig(N)
    return Q @ (np.exp(-1j * phi * vals) * (Q.T @ c))


def squeezing_parameters(N: int, alpha: float) -> tuple[float, float]:
    """theta = N^(-alpha - 1/2) and phi = -arctan(N^(alpha - 1/2)).

    With J_y = (a_-^* a_+ - a_+^* a_-)/(2i) the twist exp(-i theta J_z^2) tilts the
    squeezed axis towards negative angles, so the rotation that brings it onto
    J_z has a negative angle.
    """
    return N ** (-alpha - 0.5), -float(np.arctan(N ** (alpha - 0.5)))


def make_state(kind, N: int, *, n0: int | None = None, sigma: float | None = None,
               theta: float | None = None, phi: float | None = None) -> TwoModeState:
    kind = StateKind(kind)
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    n = np.arange(N + 1)
    if kind is StateKind.FOCK:
        if n0 is None:
            if N % 2:
                raise ValueError("the default Fock state |N/2, N/2> needs even N")
            n0 = N // 2
        if not 0 <= n0 <= N:
            raise ValueError(f"n0 must lie in [0, {N}]")
        c = np.zeros(N + 1)
        c[n0] = 1.0
    elif kind is StateKind.COHERENT:
        c = coherent_coeffs(N)
    elif kind is StateKind.GAUSSIAN:
        if sigma is None or not sigma > 0:
            raise ValueError("gaussian state needs sigma > 0")
        c = np.exp(-((n - N / 2.0) / sigma) ** 2)
    else:
        if theta is None or phi is None:
            raise ValueError("squeezed state needs theta and phi")
        c = coherent_coeffs(N) * np.exp(-1j * theta * (n - N / 2.0) ** 2)
        c = rotate_x(c, phi)
    c = c / np.sqrt(np.vdot(c, c).real)
    return TwoModeState(N, c)


# ---------------------------------------------------------------- observables

@dataclass(frozen=True)
class ObservableReport:
    mean_N_minus: float
    var_N_minus: float
    Jx: float
    Jy: float
    Jz: float
    var_Jx: float
    var_Jy: float
    var_Jz: float
    energy: float
    energy_quadratic_form: float
    uncertainty_product_gap: float


def _raise(c, r):
    """(a_-^* a_+) c, where r[k-1] links n = k-1 to n = k."""
    out = np.zeros_like(c)
    out[1:] = r * c[:-1]
    return out


def _lower(c, r):
    out = np.zeros_like(c)
    out[:-1] = r * c[1:]
    return out


def _mean_var(c, v):
    mean = float(np.vdot(c, v).real)
    return mean, float(np.vdot(v, v).real - mean * mean)


def observables(state: TwoModeState, p: TwoModeParams | None = None) -> ObservableReport:
    N = state.N
    c = state.coeffs.astype(complex)
    r = _hop(N)
    n = np.arange(N + 1, dtype=float)
    prob = np.abs(c) ** 2
    mean_n = float(prob @ n)
    var_n = float(prob @ (n - mean_n) ** 2)
    up, down = _raise(c, r), _lower(c, r)
    jx = 0.5 * (up + down)
    jy = (up - down) / 2j
    jz = (n - N / 2.0) * c
    mx, vx = _mean_var(c, jx)
    my, vy = _mean_var(c, jy)
    mz, vz = _mean_var(c, jz)
    if p is not None:
        if p.N != N:
            raise ValueError("state and parameters disagree on N")
        jz2 = float(prob @ (n - N / 2.0) ** 2)
        e_formula = (0.5 * (p.e_plus + p.e_minus) * N + (p.e_minus - p.e_plus) * mz
                     + 2.0 * p.T * mx + 0.25 * p.U * N * (N - 2) + p.U * jz2)
        d, e = build_hamiltonian(p)
        hc = d * c
        hc[1:] += e * c[:-1]
        hc[:-1] += e * c[1:]
        e_form = float(np.vdot(c, hc).real)
        if abs(e_formula - e_form) > 1e-8 * (abs(e_form) + 1.0):
            raise ArithmeticError(f"energy routes disagree: {e_formula!r} vs {e_form!r}")
    else:
        e_formula = e_form = float("nan")
    gap = vy * vz - mx * mx / 4.0
    return ObservableReport(mean_n, var_n, mx, my, mz, vx, vy, vz, e_formula, e_form, gap)


def interaction_energy(state: TwoModeState, U: float = 1.0) -> float:
    """(U/2) <N_-(N_- - 1) + N_+(N_+ - 1)>."""
    N = state.N
    n = np.arange(N + 1, dtype=float)
    m = N - n
    return float(0.5 * U * (np.abs(state.coeffs) ** 2 @ (n * (n - 1) + m * (m - 1))))


# ---------------------------------------------------------------- regimes

class Regime(str, enum.Enum):
    FOCK = "Fock"
    JOSEPHSON = "Josephson"
    RABI = "Rabi"


@dataclass(frozen=True)
class RegimeReport:
    regime: Regime
    margin_fock: float   # log(|T| / (U/N)); negative inside the Fock regime
    margin_rabi: float   # log(U N / |T|); negative inside the Rabi regime


def classify_regime(p: TwoModeParams) -> RegimeReport:
    t = abs(p.T)
    if p.U == 0:
        return RegimeReport(Regime.RABI, np.inf, -np.inf)
    lo, hi = p.U / p.N, p.U * p.N
    mf = np.log(t / lo) if t > 0 else -np.inf
    mr = np.log(hi / t) if t > 0 else np.inf
    if t < lo:
        reg = Regime.FOCK
    elif t > hi:
        reg = Regime.RABI
    else:
        reg = Regime.JOSEPHSON
    return RegimeReport(reg, float(mf), float(mr))


@dataclass(frozen=True)
class GaussianEnergy:
    energy: float
    in_window: bool


def gaussian_energy_closed_form(p: TwoModeParams, sigma: float) -> GaussianEnergy:
    """E_loc + T N (1 - 1/(2 sigma^2)) + U sigma^2 / 4, valid for 1 << sigma << sqrt(N)."""
    e = p.E_loc + p.T * p.N * (1.0 - 0.5 / sigma ** 2) + 0.25 * p.U * sigma ** 2
    ok = 3.0 <= sigma <= np.sqrt(p.N) / 3.0
    return GaussianEnergy(float(e), bool(ok))


def optimal_sigma(p: TwoModeParams) -> float:
    return float((2.0 * abs(p.T) * p.N / p.U) ** 0.25)


@dataclass(frozen=True)
class ScanRow:
    T: float
    ratio_T_over_U: float
    var_Nminus: float
    Jx: float
    energy: float
    regime: str
    symmetry_defect: float

    def as_row(self) -> dict:
        return {"T": self.T, "ratio_T_over_U": self.ratio_T_over_U, "var_Nminus": self.var_Nminus,
                "Jx": self.Jx, "energy": self.energy, "regime": self.regime}


def scan_point(N: int, U: float, T: float, e_minus: float = 0.0, e_plus: float = 0.0) -> ScanRow:
    p = TwoModeParams(N, e_minus, e_plus, T, U)
    E, st = ground_state(p)
    obs = observables(st, p)
    c = st.coeffs
    return ScanRow(T, abs(T) / U if U else np.inf, obs.var_N_minus, obs.Jx, E,
                   classify_regime(p).regime.value, float(np.abs(c - c[::-1]).max()))


def crossover_scan(N: int, U: float, T_list) -> list[ScanRow]:
    return [scan_point(N, U, float(T)) for T in T_list]


def josephson_window(N: int, U: float) -> tuple[float, float]:
    """Central part of the Josephson range, a quarter of the way in from each end on log scale."""
    lo, hi = U / N, U * N
    return lo ** 0.75 * hi ** 0.25, lo ** 0.25 * hi ** 0.75
