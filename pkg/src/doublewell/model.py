"""Grids, trapping potentials, interaction kernels and wavefunctions.

Everything downstream works on a uniform 1D grid whose two end points are
hard walls: wavefunction values there are pinned to zero, so the trapezoid
rule on the full grid and the plain Riemann sum over interior points agree.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, ndimage

__all__ = [
    "Grid1D",
    "TrapKind",
    "TrapSpec",
    "KernelShape",
    "InteractionKernel",
    "WaveFunction",
    "eval_potential",
    "agmon_distance",
    "agmon_distance_quadrature",
    "convolve_density",
    "convolve_field",
    "kernel_fourier_check",
    "FourierReport",
    "config_from_flat",
    "config_to_flat",
]

MIN_POINTS = 16


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [-half_width, half_width] with ``n_points`` nodes."""

    n_points: int
    half_width: float

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < MIN_POINTS:
            raise ValueError(f"grid.n must be an integer >= {MIN_POINTS}, got {self.n_points}")
        if not self.half_width > 0:
            raise ValueError(f"grid.halfwidth must be positive, got {self.half_width}")

    @classmethod
    def from_spacing(cls, spacing: float, half_width: float) -> "Grid1D":
        """Odd-sized grid with exactly the requested spacing and at least the requested width."""
        k = int(np.ceil(half_width / spacing - 1e-9))
        return cls(2 * k + 1, k * spacing)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        # built symmetrically so that x[::-1] == -x holds bit for bit
        i = np.arange(self.n_points) - (self.n_points - 1) / 2.0
        return i * self.spacing

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.n_points, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    def integrate(self, f: np.ndarray) -> float:
        return float(np.dot(self.weights, f))

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(np.dot(self.weights, f * g))

    def with_width(self, half_width: float) -> "Grid1D":
        """Grid with the same spacing (up to rounding) covering a different box."""
        return Grid1D.from_spacing(self.spacing, half_width)


class TrapKind(str, enum.Enum):
    SINGLE = "SingleWell"
    DOUBLE = "DoubleWell"


@dataclass(frozen=True)
class TrapSpec:
    """Power-law well |x|^s, or the symmetric double well built from two of them."""

    kind: TrapKind = TrapKind.SINGLE
    s: float = 2.0
    separation_L: float = 0.0
    dimension_d: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", TrapKind(self.kind))
        if not self.s >= 2:
            raise ValueError(f"trap.s must be >= 2, got {self.s}")
        if self.dimension_d not in (1, 2, 3):
            raise ValueError(f"trap.d must be 1, 2 or 3, got {self.dimension_d}")
        if self.kind is TrapKind.DOUBLE and not self.separation_L > 0:
            raise ValueError("trap.L must be positive for a double well")
        if self.separation_L < 0:
            raise ValueError("trap.L must be non-negative")

    @property
    def center(self) -> float:
        """Half the separation, i.e. the position of the right well."""
        return 0.5 * self.separation_L

    def single(self) -> "TrapSpec":
        return TrapSpec(TrapKind.SINGLE, self.s, 0.0, self.dimension_d)

    def __call__(self, x):
        return eval_potential(self, x)


def eval_potential(spec: TrapSpec, x):
    x = np.asarray(x, dtype=float)
    if spec.kind is TrapKind.SINGLE:
        return np.abs(x) ** spec.s
    c = spec.center
    return np.minimum(np.abs(x - c) ** spec.s, np.abs(x + c) ** spec.s)


def agmon_distance(r, s: float):
    """Closed-form Agmon distance (1 + s/2)^-1 r^(1 + s/2) of the power-law well."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("Agmon distance needs r >= 0")
    out = r ** (1.0 + s / 2.0) / (1.0 + s / 2.0)
    return float(out) if out.ndim == 0 else out


def agmon_distance_quadrature(r: float, potential, rtol: float = 1e-12) -> float:
    """Agmon distance of an arbitrary potential, by adaptive quadrature of sqrt(V)."""
    if r < 0:
        raise ValueError("Agmon distance needs r >= 0")
    if r == 0:
        return 0.0
    val, _ = integrate.quad(lambda t: np.sqrt(max(float(potential(t)), 0.0)), 0.0, r,
                            epsabs=0.0, epsrel=rtol, limit=200)
    return float(val)


class KernelShape(str, enum.Enum):
    TRIANGLE = "Triangle"
    GAUSSIAN = "TruncatedGaussian"


@dataclass(frozen=True)
class InteractionKernel:
    """Even, non-negative, compactly supported pair interaction.

    ``TruncatedGaussian`` uses a standard deviation of ``range_Rw / 6`` and is cut
    at ``range_Rw``.
    """

    shape: KernelShape = KernelShape.TRIANGLE
    strength_w0: float = 1.0
    range_Rw: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "shape", KernelShape(self.shape))
        if not self.strength_w0 >= 0:
            raise ValueError("kernel.w0 must be non-negative")
        if not self.range_Rw > 0:
            raise ValueError("kernel.Rw must be positive")

    @property
    def sigma(self) -> float:
        return self.range_Rw / 6.0

    def __call__(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        inside = x <= self.range_Rw
        if self.shape is KernelShape.TRIANGLE:
            vals = self.strength_w0 * (1.0 - x / self.range_Rw)
        else:
            vals = self.strength_w0 * np.exp(-0.5 * (x / self.sigma) ** 2)
        return np.where(inside, np.maximum(vals, 0.0), 0.0)

    @property
    def sup_norm(self) -> float:
        return self.strength_w0

    @property
    def integral(self) -> float:
        if self.shape is KernelShape.TRIANGLE:
            return self.strength_w0 * self.range_Rw
        val, _ = integrate.quad(self, -self.range_Rw, self.range_Rw)
        return val

    def stencil(self, spacing: float) -> np.ndarray:
        """Kernel samples at the offsets -K h .. K h covering its support."""
        if self.range_Rw < spacing:
            raise ValueError(
                f"kernel range {self.range_Rw} is below the grid spacing {spacing}: unresolved kernel")
        k = int(np.floor(self.range_Rw / spacing + 1e-12))
        offsets = np.arange(-k, k + 1) * spacing
        return self(offsets)


@dataclass
class WaveFunction:
    """Real grid-sampled amplitude; ``mass`` is the target value of the integral of u^2."""

    grid: Grid1D
    values: np.ndarray
    mass: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_points,):
            raise ValueError("wavefunction values do not match the grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("wavefunction has non-finite values")

    @property
    def density(self) -> np.ndarray:
        return self.values ** 2

    def norm2(self) -> float:
        return self.grid.integrate(self.density)

    def normalized(self) -> "WaveFunction":
        v = self.values.copy()
        v[0] = v[-1] = 0.0
        n2 = self.grid.integrate(v * v)
        if n2 <= 0:
            raise ValueError("cannot normalize a zero wavefunction")
        return WaveFunction(self.grid, v * np.sqrt(self.mass / n2), self.mass)

    def reflected(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.values[::-1].copy(), self.mass)


def convolve_density(w: InteractionKernel, rho, grid: Grid1D | None = None) -> np.ndarray:
    """(w * rho)(x_i) by windowed summation over the kernel support.

    ``rho`` is either an array on ``grid`` or a WaveFunction (whose density is used).
    """
    if isinstance(rho, WaveFunction):
        grid, rho = rho.grid, rho.density
    if grid is None:
        raise ValueError("a grid is needed to convolve a bare array")
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("density must be non-negative")
    return convolve_field(w, rho, grid)


def convolve_field(w: InteractionKernel, f: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Signed version of :func:`convolve_density`; also accepts a stack of fields as columns."""
    st = w.stencil(grid.spacing)
    f = np.asarray(f, dtype=float)
    if f.ndim == 1:
        return np.convolve(f * grid.weights, st, mode="same")
    return ndimage.convolve1d(f * grid.weights[:, None], st, axis=0, mode="constant")


@dataclass(frozen=True)
class FourierReport:
    min_hat: float
    hat_zero: float
    passed: bool = field(default=False)


def kernel_fourier_check(w, grid: Grid1D) -> FourierReport:
    """DFT of the sampled kernel on the grid's frequency set; positive type up to 1e-10."""
    h = grid.spacing
    k = int(np.floor(min(w.range_Rw, grid.half_width) / h + 1e-12))
    samples = np.asarray(w(np.arange(-k, k + 1) * h), dtype=float)
    n = max(grid.n_points, 2 * k + 1)
    # place the even kernel with its center at index 0 so the transform is real
    buf = np.zeros(n)
    buf[: k + 1] = samples[k:]
    if k:
        buf[-k:] = samples[:k]
    hat = np.fft.rfft(buf).real * h
    hat0 = float(hat[0])
    mn = float(hat.min())
    return FourierReport(mn, hat0, bool(mn >= -1e-10 * abs(hat0)))


_CONFIG_KEYS = ("trap.kind", "trap.s", "trap.L", "trap.d",
                "kernel.shape", "kernel.w0", "kernel.Rw", "grid.n", "grid.halfwidth")


def config_to_flat(trap: TrapSpec | None = None, kernel: InteractionKernel | None = None,
                   grid: Grid1D | None = None) -> dict:
    out = {}
    if trap is not None:
        out.update({"trap.kind": trap.kind.value, "trap.s": trap.s,
                    "trap.L": trap.separation_L, "trap.d": trap.dimension_d})
    if kernel is not None:
        out.update({"kernel.shape": kernel.shape.value, "kernel.w0": kernel.strength_w0,
                    "kernel.Rw": kernel.range_Rw})
    if grid is not None:
        out.update({"grid.n": grid.n_points, "grid.halfwidth": grid.half_width})
    return out


def config_from_flat(flat: dict):
    """Build (trap, kernel, grid) from flat keys; absent groups come back as None."""
    unknown = set(flat) - set(_CONFIG_KEYS)
    if unknown:
        raise KeyError(f"unknown configuration key(s): {sorted(unknown)}")
    trap = kernel = grid = None
    if any(k.startswith("trap.") for k in flat):
        L = float(flat.get("trap.L", 0.0))
        kind = flat.get("trap.kind", "DoubleWell" if L > 0 else "SingleWell")
        trap = TrapSpec(kind, float(flat.get("trap.s", 2.0)), L, int(flat.get("trap.d", 1)))
    if any(k.startswith("kernel.") for k in flat):
        kernel = InteractionKernel(flat.get("kernel.shape", "Triangle"),
                                   float(flat.get("kernel.w0", 1.0)),
                                   float(flat.get("kernel.Rw", 0.5)))
    if "grid.n" in flat or "grid.halfwidth" in flat:
        grid = Grid1D(int(flat["grid.n"]), float(flat["grid.halfwidth"]))
    return trap, kernel, grid
