"""Sample functions of proper and improper complex Gaussian processes.

A process on a 2-D grid over ``(Re x, Im x)`` is produced by widely linear
filtering of proper white noise ``S``::

    f = h1 * S + h2 * conj(S)

with ``h1 = h_r1 + j h_j1`` and ``h2 = h_r2 + j h_j2``. A non-zero conjugate
branch ``h2`` makes ``f`` improper. The filters are real exponential profiles
``v * exp(-|x|^2 / gamma)`` sampled on the grid.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.signal import fftconvolve

from .exceptions import StructuralError
from .noise import NoiseModel

DEFAULT_GAMMA = 0.6
DEFAULT_AMPLITUDES = (4.0, 5.0, 1.0, -3.0)


@dataclass(frozen=True)
class Axis:
    """``count`` equally spaced nodes from ``start`` to ``stop`` inclusive."""

    start: float = -5.0
    stop: float = 5.0
    count: int = 100

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 1:
            raise StructuralError(f"axis count must be a positive integer, got {self.count}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise StructuralError("axis bounds must be finite")
        if self.count > 1 and not self.stop > self.start:
            raise StructuralError(f"axis needs stop > start, got [{self.start}, {self.stop}]")
        object.__setattr__(self, "count", int(self.count))

    @property
    def nodes(self):
        return np.linspace(self.start, self.stop, self.count)

    @property
    def spacing(self):
        if self.count == 1:
            return None
        return (self.stop - self.start) / (self.count - 1)


@dataclass(frozen=True)
class Grid:
    """Rectangular lattice of complex inputs ``re + j im``.

    Arrays over the grid have shape ``(re.count, im.count)``; flattening is
    C-ordered, so flat index ``i * im.count + l`` is node ``re[i] + j im[l]``.
    """

    re: Axis = field(default_factory=Axis)
    im: Axis = field(default_factory=Axis)

    @property
    def shape(self):
        return (self.re.count, self.im.count)

    @property
    def size(self):
        return self.re.count * self.im.count

    @property
    def nodes(self):
        return self.re.nodes[:, None] + 1j * self.im.nodes[None, :]

    def points(self):
        """All nodes as an ``(N, 1)`` input set."""
        return self.nodes.reshape(-1, 1)

    @property
    def spacing(self):
        return (self.re.spacing, self.im.spacing)


@dataclass(frozen=True)
class WidelyLinearFilterModel:
    """Exponential filters ``h_r1, h_j1, h_r2, h_j2`` sharing one width ``gamma``.

    ``amplitudes`` are the ``v`` factors in the order ``(r1, j1, r2, j2)``.
    With ``normalize`` set, each complex filter ``h1`` and ``h2`` is scaled to
    unit l2 norm over the grid (an all-zero filter is left at zero).
    """

    gamma: float = DEFAULT_GAMMA
    amplitudes: tuple = DEFAULT_AMPLITUDES
    grid: Grid = field(default_factory=Grid)
    normalize: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise StructuralError(f"gamma must be > 0, got {self.gamma}")
        amps = tuple(float(v) for v in self.amplitudes)
        if len(amps) != 4 or not all(math.isfinite(v) for v in amps):
            raise StructuralError(f"expected four finite amplitudes, got {self.amplitudes}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def is_proper(self):
        return self.amplitudes[2] == 0.0 and self.amplitudes[3] == 0.0

    @cached_property
    def filters(self):
        """Complex tap arrays ``(h1, h2)`` over the grid (read-only)."""
        taps = [exponential_filter_taps(v, self.gamma, self.grid) for v in self.amplitudes]
        h1 = taps[0] + 1j * taps[1]
        h2 = taps[2] + 1j * taps[3]
        if self.normalize:
            h1, h2 = _unit_norm(h1), _unit_norm(h2)
        h1.setflags(write=False)
        h2.setflags(write=False)
        return h1, h2


def _unit_norm(h):
    norm = np.linalg.norm(h)
    return h / norm if norm > 0 else h


def exponential_filter_taps(v, gamma, grid):
    """Taps ``v * exp(-|x|^2 / gamma)`` at every node ``x`` of ``grid``."""
    if not gamma > 0:
        raise StructuralError(f"gamma must be > 0, got {gamma}")
    return v * np.exp(-np.abs(grid.nodes) ** 2 / gamma)


@dataclass(frozen=True)
class GridSampleFunction:
    """A process realization ``values[i, l] = f(re[i] + j im[l])``."""

    values: np.ndarray
    grid: Grid
    seed: int | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != self.grid.shape:
            raise StructuralError(f"values shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise StructuralError("sample function has non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def flat(self):
        return self.values.reshape(-1)

    def to_csv(self, fh=None):
        """Write rows ``re_x, im_x, re_f, im_f``; return the text if ``fh`` is None."""
        out = io.StringIO() if fh is None else fh
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["re_x", "im_x", "re_f", "im_f"])
        x = self.grid.nodes.reshape(-1)
        for xi, fi in zip(x, self.flat()):
            writer.writerow([repr(float(v)) for v in (xi.real, xi.imag, fi.real, fi.imag)])
        if fh is None:
            return out.getvalue()
        return None

    @classmethod
    def from_csv(cls, fh, grid, seed=None):
        reader = csv.DictReader(fh)
        vals = [complex(float(r["re_f"]), float(r["im_f"])) for r in reader]
        if len(vals) != grid.size:
            raise StructuralError(f"CSV has {len(vals)} rows, grid has {grid.size} nodes")
        return cls(np.array(vals).reshape(grid.shape), grid, seed)


def proper_white_noise(rng, shape):
    """Proper complex white noise with ``E|S|^2 = 1``."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def generate_improper_gp(model, seed):
    """Draw ``f = h1 * S + h2 * conj(S)`` on the model grid.

    ``S`` covers the grid padded by the filter support, and the convolution
    keeps only fully overlapping outputs, so every node sees the same
    stationary second-order statistics.
    """
    rng = np.random.default_rng(seed)
    h1, h2 = model.filters
    pad = tuple(g + h - 1 for g, h in zip(model.grid.shape, h1.shape))
    s = proper_white_noise(rng, pad)
    f = fftconvolve(s, h1, mode="valid")
    if np.any(h2):
        f = f + fftconvolve(s.conj(), h2, mode="valid")
    return GridSampleFunction(f, model.grid, seed)


def generate_improper_noise(noise, n, seed):
    """``n`` i.i.d. samples with variance ``sigma2`` and pseudo-variance ``rho sigma2``."""
    if not isinstance(noise, NoiseModel):
        noise = NoiseModel(*noise)
    if int(n) != n or n < 0:
        raise StructuralError(f"sample count must be a non-negative integer, got {n}")
    n = int(n)
    if noise.sigma2 == 0.0:
        return np.zeros(n, dtype=complex)
    rng = np.random.default_rng(seed)
    pairs = rng.multivariate_normal(np.zeros(2), noise.composite_cov(), size=n, method="eigh")
    return pairs[:, 0] + 1j * pairs[:, 1]


def empirical_second_order(draws):
    """Sample covariance ``mean(z z^H)`` and pseudo-covariance ``mean(z z^T)``.

    ``draws`` is a sequence of equal-length complex vectors (one per row).
    """
    try:
        z = np.asarray(draws, dtype=complex)
    except ValueError as exc:
        raise StructuralError("draws must have equal lengths") from exc
    if z.ndim == 1:
        z = z[:, None]
    if z.ndim != 2 or z.shape[0] < 2:
        raise StructuralError(f"need at least 2 draws of equal length, got shape {z.shape}")
    n = z.shape[0]
    r = z.T @ z.conj() / n
    rt = z.T @ z / n
    return 0.5 * (r + r.conj().T), 0.5 * (rt + rt.T)
