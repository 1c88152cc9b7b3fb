"""Sampled fields on a periodic box approximating R^d.

The box is the torus [-L/2, L/2)^d sampled with ``n`` points per axis. The
discrete transform carries the symmetric ``1/sqrt(n^d)`` normalisation, so
``Field.spectrum`` has the same Euclidean norm as ``Field.samples``.

Two frequency conventions coexist and are kept explicit:

* ``spectrum`` is the raw orthonormal DFT of the samples (used for
  multipliers, where only the ordering of the frequency lattice matters);
* ``Field.from_fourier`` synthesises samples from prescribed values of a
  continuum Fourier transform, ``f(x) = c * int fhat(xi) e^{i x xi} dxi``,
  via a Riemann sum over the frequency lattice.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "SpaceTimeField",
    "make_grid",
    "lp_norm",
    "spacetime_norm",
    "composite_spacetime_norm",
    "write_snapshot",
    "read_snapshot",
    "random_wavepackets",
    "gaussian",
]

_AXES = {1: (-1,), 2: (-2, -1)}


@dataclass(frozen=True)
class Grid:
    d: int
    n: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.d}")
        n = int(self.n)
        if n < 8 or n & (n - 1):
            raise ValueError(f"samples per axis must be a power of two >= 8, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"box length must be positive, got {self.L}")

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def dxi(self) -> float:
        return 2 * np.pi / self.L

    @property
    def nyquist(self) -> float:
        return np.pi * self.n / self.L

    @property
    def cell(self) -> float:
        """Physical cell volume dx^d."""
        return self.dx**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @cached_property
    def x1(self) -> np.ndarray:
        return -self.L / 2 + self.dx * np.arange(self.n)

    @cached_property
    def xi1(self) -> np.ndarray:
        """1-D frequency lattice in FFT order, covering [-pi n/L, pi n/L)."""
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        if self.d == 1:
            return (self.x1,)
        return tuple(np.meshgrid(self.x1, self.x1, indexing="ij"))

    @cached_property
    def freqs(self) -> tuple[np.ndarray, ...]:
        if self.d == 1:
            return (self.xi1,)
        return tuple(np.meshgrid(self.xi1, self.xi1, indexing="ij"))

    @cached_property
    def xi_abs2(self) -> np.ndarray:
        return sum(k**2 for k in self.freqs)

    @cached_property
    def x_abs(self) -> np.ndarray:
        return np.sqrt(sum(c**2 for c in self.coords))

    def refine(self, factor: int = 2) -> "Grid":
        """Same box, ``factor`` times as many samples per axis."""
        return Grid(self.d, self.n * factor, self.L)


def make_grid(d: int, n: int, L: float) -> Grid:
    """Build a validated grid; raises ``ValueError`` on bad parameters."""
    return Grid(int(d), int(n), float(L))


def grid_for_band(d: int, L: float, kmax: float, oversample: float = 2.0) -> Grid:
    """Smallest power-of-two grid on a box of side ``L`` whose half-Nyquist
    frequency exceeds ``kmax`` by the factor ``oversample / 2``."""
    need = oversample * kmax * L / np.pi
    n = 8
    while n < need:
        n *= 2
    return make_grid(d, n, L)


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples on a :class:`Grid`; immutable once built."""

    grid: Grid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.complex128, copy=True)
        if arr.shape != self.grid.shape:
            raise ValueError(f"samples shape {arr.shape} does not match grid {self.grid.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    @classmethod
    def from_spectrum(cls, grid: Grid, spectrum: np.ndarray) -> "Field":
        spectrum = np.asarray(spectrum, dtype=np.complex128)
        out = cls(grid, np.fft.ifftn(spectrum, axes=_AXES[grid.d], norm="ortho"))
        cached = spectrum.copy()
        cached.setflags(write=False)
        out.__dict__["spectrum"] = cached
        return out

    @classmethod
    def from_fourier(cls, grid: Grid, fhat: np.ndarray, const: float | None = None) -> "Field":
        """Synthesize ``f(x) = const * sum_k fhat(xi_k) e^{i x xi_k} dxi^d``.

        ``fhat`` holds continuum Fourier-transform values on ``grid.freqs``.
        The default ``const`` is ``(2 pi)^{-d}``, the inverse of
        ``fhat(xi) = int f(x) e^{-i x xi} dx``.
        """
        if const is None:
            const = (2 * np.pi) ** (-grid.d)
        fhat = np.asarray(fhat, dtype=np.complex128)
        # x_j = -L/2 + j dx: the offset contributes exp(-i xi_k L/2) = (-1)^k.
        shift = np.exp(-0.5j * grid.L * sum(grid.freqs))
        scale = const * grid.dxi**grid.d * grid.n**grid.d
        samples = scale * np.fft.ifftn(fhat * shift, axes=_AXES[grid.d])
        return cls(grid, samples)

    def fourier_values(self, const: float | None = None) -> np.ndarray:
        """Inverse of :meth:`from_fourier`: continuum transform values."""
        if const is None:
            const = (2 * np.pi) ** (-self.grid.d)
        g = self.grid
        shift = np.exp(-0.5j * g.L * sum(g.freqs))
        scale = const * g.dxi**g.d * g.n**g.d
        return np.fft.fftn(self.samples, axes=_AXES[g.d]) / (scale * shift)

    @cached_property
    def spectrum(self) -> np.ndarray:
        out = np.fft.fftn(self.samples, axes=_AXES[self.grid.d], norm="ortho")
        out.setflags(write=False)
        return out

    def with_spectrum_multiplier(self, mult: np.ndarray) -> "Field":
        return Field.from_spectrum(self.grid, self.spectrum * mult)

    def l2_spectral(self) -> float:
        """L^2 norm computed from the spectrum (unit Parseval constant)."""
        return float(np.sqrt(np.sum(np.abs(self.spectrum) ** 2) * self.grid.cell))

    def highfreq_fraction(self, frac: float = 0.5) -> float:
        """Relative spectral L^2 mass with some |xi_i| above ``frac`` * Nyquist."""
        g = self.grid
        mask = np.zeros(g.shape, dtype=bool)
        for k in g.freqs:
            mask |= np.abs(k) > frac * g.nyquist
        power = np.abs(self.spectrum) ** 2
        total = power.sum()
        if total == 0:
            return 0.0
        return float(np.sqrt(power[mask].sum() / total))

    def check_band_limited(self, tol: float = 1e-10, frac: float = 0.5) -> None:
        leak = self.highfreq_fraction(frac)
        if leak > tol:
            raise ValueError(
                f"field is not band-limited below {frac} x Nyquist: relative leak {leak:.3e} > {tol:.1e}"
            )

    def mass_outside(self, radius: float) -> float:
        """Relative L^2 mass outside the ball |x| <= radius."""
        power = np.abs(self.samples) ** 2
        total = power.sum()
        if total == 0:
            return 0.0
        return float(power[self.grid.x_abs > radius].sum() / total)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Evaluate the trigonometric interpolant at arbitrary points.

        ``points`` has shape (m,) in 1-D or (m, 2) in 2-D. Exact for the
        band-limited periodic function the samples represent.
        """
        g = self.grid
        pts = np.asarray(points, dtype=float).reshape(-1, g.d)
        coeffs = np.fft.fftn(self.samples, axes=_AXES[g.d]) / g.n**g.d
        # phase relative to x_0 = -L/2
        rel = pts + g.L / 2
        out = np.empty(len(pts), dtype=np.complex128)
        xi = g.xi1
        for start in range(0, len(pts), 256):
            r = rel[start : start + 256]
            e0 = np.exp(1j * np.outer(r[:, 0], xi))
            if g.d == 1:
                out[start : start + 256] = e0 @ coeffs
            else:
                e1 = np.exp(1j * np.outer(r[:, 1], xi))
                out[start : start + 256] = np.einsum("mi,ij,mj->m", e0, coeffs, e1)
        return out

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self.grid, other.grid)
        return Field(self.grid, self.samples + other.samples)

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self.grid, other.grid)
        return Field(self.grid, self.samples - other.samples)

    def scale(self, c: complex) -> "Field":
        return Field(self.grid, c * self.samples)


def _same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise ValueError(f"grid mismatch: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Uniformly spaced sequence of fields over [t_start, t_end]."""

    slices: tuple[Field, ...]
    t_start: float
    t_end: float

    def __post_init__(self):
        slices = tuple(self.slices)
        if not slices:
            raise ValueError("a space-time field needs at least one slice")
        g = slices[0].grid
        for s in slices[1:]:
            _same_grid(g, s.grid)
        object.__setattr__(self, "slices", slices)

    @classmethod
    def from_array(cls, grid: Grid, values: np.ndarray, t_start: float, t_end: float) -> "SpaceTimeField":
        return cls(tuple(Field(grid, v) for v in values), t_start, t_end)

    @property
    def grid(self) -> Grid:
        return self.slices[0].grid

    @property
    def nt(self) -> int:
        return len(self.slices)

    @property
    def dt(self) -> float:
        if self.nt == 1:
            return 0.0
        return (self.t_end - self.t_start) / (self.nt - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.nt)

    def array(self) -> np.ndarray:
        return np.stack([s.samples for s in self.slices])

    def same_time_grid(self, other: "SpaceTimeField", rtol: float = 1e-12) -> bool:
        return (
            self.grid == other.grid
            and self.nt == other.nt
            and np.isclose(self.t_start, other.t_start, rtol=rtol, atol=rtol)
            and np.isclose(self.t_end, other.t_end, rtol=rtol, atol=rtol)
        )


def lp_norm(f: Field, p: float) -> float:
    """Riemann-sum L^p norm over the box; grid maximum for p = inf."""
    if not (p >= 1):
        raise ValueError(f"exponent must lie in [1, inf], got {p}")
    a = np.abs(f.samples)
    if np.isinf(p):
        return float(a.max())
    return float((np.sum(a**p) * f.grid.cell) ** (1.0 / p))


def _slice_norms(u: SpaceTimeField, q_x: float, mask=None) -> np.ndarray:
    out = np.empty(u.nt)
    for j, s in enumerate(u.slices):
        if mask is None:
            out[j] = lp_norm(s, q_x)
        else:
            m = mask(u.t_start + j * u.dt, s.grid)
            out[j] = lp_norm(Field(s.grid, s.samples * m), q_x)
    return out


def _time_norm(vals: np.ndarray, dt: float, p_t: float) -> float:
    if np.isinf(p_t):
        return float(vals.max())
    if len(vals) == 1:
        return float(vals[0])
    integrand = vals**p_t
    total = dt * (integrand.sum() - 0.5 * (integrand[0] + integrand[-1]))
    return float(total ** (1.0 / p_t))


def spacetime_norm(u: SpaceTimeField, p_t: float, q_x: float, mask=None) -> float:
    """Mixed norm ||u||_{L^{p_t}_t L^{q_x}_x} with composite trapezoid in time.

    ``mask``, when given, is a callable ``(t, grid) -> array`` multiplied
    into each slice before the spatial norm (used for tube restrictions).
    A single-slice field returns the spatial norm of that slice.
    """
    for e in (p_t, q_x):
        if not (e >= 1):
            raise ValueError(f"exponents must lie in [1, inf], got {e}")
    return _time_norm(_slice_norms(u, q_x, mask), u.dt, p_t)


def composite_spacetime_norm(pieces: Sequence[SpaceTimeField], p_t: float, q_x: float, mask=None) -> float:
    """Mixed norm over abutting uniform pieces (e.g. dyadic time windows)."""
    if np.isinf(p_t):
        return max(spacetime_norm(u, p_t, q_x, mask) for u in pieces)
    return float(sum(spacetime_norm(u, p_t, q_x, mask) ** p_t for u in pieces) ** (1.0 / p_t))


_HEADER = struct.Struct("<qqdd")


def write_snapshot(path: str | Path, f: Field, t: float = 0.0) -> None:
    """Binary snapshot: little-endian (d, n) int64, (L, t) float64, then
    interleaved re/im float64 samples in row-major order."""
    g = f.grid
    body = np.ascontiguousarray(f.samples).view(np.float64).astype("<f8", copy=False)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(g.d, g.n, g.L, float(t)))
        fh.write(body.tobytes())


def read_snapshot(path: str | Path) -> tuple[Field, float]:
    raw = Path(path).read_bytes()
    d, n, L, t = _HEADER.unpack_from(raw)
    grid = make_grid(d, n, L)
    vals = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    expected = 2 * n**d
    if vals.size != expected:
        raise ValueError(f"snapshot payload has {vals.size} floats, expected {expected}")
    samples = vals.view(np.complex128).reshape(grid.shape)
    return Field(grid, samples), t


def gaussian(grid: Grid, width: float = 1.0, center=None, freq=None) -> Field:
    """``exp(-|x - c|^2 / (2 w^2)) e^{i <freq, x>}`` sampled on ``grid``."""
    center = np.zeros(grid.d) if center is None else np.broadcast_to(center, (grid.d,))
    freq = np.zeros(grid.d) if freq is None else np.broadcast_to(freq, (grid.d,))
    r2 = sum((x - c) ** 2 for x, c in zip(grid.coords, center))
    phase = sum(k * x for x, k in zip(grid.coords, freq))
    return Field(grid, np.exp(-r2 / (2 * width**2) + 1j * phase))


def random_wavepackets(
    grid: Grid,
    rng: np.random.Generator,
    kmax: float | None = None,
    count: int = 6,
    width: tuple[float, float] = (1.5, 3.0),
) -> Field:
    """Random sum of Gaussian wave packets.

    The field is defined analytically (not per grid point), so the same
    generator state yields the same continuum function on refined grids.
    Packet frequencies satisfy ``|xi| <= kmax`` per axis and centres lie in
    ``|x_i| <= L/16``; with the default widths the spectrum above
    half-Nyquist is below 1e-10 whenever ``kmax <= nyquist/2 - 8``.
    """
    if kmax is None:
        kmax = max(grid.nyquist / 2 - 8.0, 1.0)
    w_lo, w_hi = width
    out = np.zeros(grid.shape, dtype=np.complex128)
    for _ in range(count):
        amp = rng.normal() + 1j * rng.normal()
        c = rng.uniform(-grid.L / 16, grid.L / 16, size=grid.d)
        # keep the packet well inside the box
        w = rng.uniform(w_lo, max(w_lo, min(w_hi, grid.L / 40)))
        k = rng.uniform(-kmax, kmax, size=grid.d)
        out += amp * gaussian(grid, w, c, k).samples
    return Field(grid, out)
