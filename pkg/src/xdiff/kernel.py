"""Nonlocal operators: even-kernel periodic convolution and heat-semigroup smoothing."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Union

import numpy as np

from .grid import Field, Grid, GridMismatchError

EVENNESS_TOL = 1e-12


@dataclass(frozen=True)
class BoxKernel:
    """Indicator kernel on [-half_width, half_width], handled through its exact
    Fourier symbol 2*sin(k*half_width)/k (value 2*half_width at k = 0).

    Using the analytic symbol instead of node samples keeps the kernel mass,
    and hence the blow-up threshold it feeds, free of O(dx) quadrature error.
    """

    half_width: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.half_width) and self.half_width > 0):
            raise ValueError(f"box kernel half_width must be positive, got {self.half_width}")

    def l1_norm(self) -> float:
        return 2.0 * self.half_width

    def symbol(self, grid: Grid) -> np.ndarray:
        if self.half_width >= grid.half_length:
            raise ValueError(
                f"box kernel half_width {self.half_width} must be smaller than the "
                f"domain half length {grid.half_length}"
            )
        # 2*eps*sinc(k*eps/pi) = 2*sin(k*eps)/k with the k=0 limit built in
        return 2.0 * self.half_width * np.sinc(grid.k * self.half_width / np.pi)


@dataclass(frozen=True, eq=False)
class SampledKernel:
    """Even, nonnegative kernel given by node samples on a specific grid."""

    samples: Field
    source_path: str = ""

    def __post_init__(self) -> None:
        vals = self.samples.values
        if np.min(vals) < 0.0:
            raise ValueError("sampled kernel values must be nonnegative")
        reflected = vals[(-np.arange(vals.size)) % vals.size]
        defect = float(np.max(np.abs(vals - reflected)))
        if defect > EVENNESS_TOL:
            raise ValueError(f"sampled kernel is not even (defect {defect:.3e})")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SampledKernel)
            and self.samples.grid == other.samples.grid
            and np.array_equal(self.samples.values, other.samples.values)
        )

    def l1_norm(self) -> float:
        return float(np.sum(self.samples.values) * self.samples.grid.dx)

    def symbol(self, grid: Grid) -> np.ndarray:
        if grid != self.samples.grid:
            raise GridMismatchError("sampled kernel lives on a different grid")
        # Nodes start at -L, so the transform picks up the shift phase (-1)^m.
        # The result is real for even kernels; roundoff imaginary parts dropped.
        sym = grid.dx * np.fft.rfft(self.samples.values)
        sym *= (-1.0) ** np.arange(sym.size)
        return sym.real


KernelSpec = Union[BoxKernel, SampledKernel]


def kernel_l1_norm(k: KernelSpec) -> float:
    """Total mass of the kernel; 2*half_width exactly for box kernels."""
    return k.l1_norm()


def convolve(k: KernelSpec, f: Field) -> Field:
    """Periodic convolution kernel * f via the discrete Fourier transform."""
    sym = k.symbol(f.grid)
    return Field(f.grid, np.fft.irfft(np.fft.rfft(f.values) * sym, n=f.grid.n_points))


def mollify(f: Field, eps: float) -> Field:
    """Heat-semigroup smoothing: multiply mode k by exp(-eps*k^2).

    eps = 0 returns the field unchanged.  The mean is preserved exactly;
    nonnegativity is preserved once exp(-eps*k_max^2) sits below roundoff
    (for smaller eps the truncated kernel can undershoot by truncation error).
    """
    if eps < 0:
        raise ValueError(f"mollifier width eps must be nonnegative, got {eps}")
    if eps == 0:
        return Field(f.grid, f.values)
    damp = np.exp(-eps * f.grid.k**2)
    return Field(f.grid, np.fft.irfft(np.fft.rfft(f.values) * damp, n=f.grid.n_points))


def load_sampled_kernel(path: str, grid: Grid) -> SampledKernel:
    """Read a two-column ``x,gamma`` CSV of node samples and symmetrize it.

    The x column must match the grid nodes; loaded values are replaced by
    their even part (g(x) + g(-x))/2 to absorb asymmetric rounding in the file.
    """
    xs, gs = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            if row[0].strip().lower() == "x":
                continue
            if len(row) != 2:
                raise ValueError(f"{path}: expected two columns 'x,gamma', got {row!r}")
            xs.append(float(row[0]))
            gs.append(float(row[1]))
    xs_arr = np.asarray(xs)
    gs_arr = np.asarray(gs)
    if xs_arr.size != grid.n_points or not np.allclose(
        xs_arr, grid.x, rtol=0.0, atol=1e-9 * grid.half_length
    ):
        raise ValueError(f"{path}: x column does not match the {grid.n_points}-node grid")
    even = 0.5 * (gs_arr + gs_arr[(-np.arange(gs_arr.size)) % gs_arr.size])
    return SampledKernel(Field(grid, even), source_path=path)
