"""Free dispersive evolutions as Fourier multipliers.

Every propagator acts as ``fhat -> exp(-i t omega(xi)) fhat``. For the
parabolic symbol this is the solution operator of ``i u_t + Delta u = 0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from displab.fields import Field, Grid, SpaceTimeField, make_grid
from displab.modspace import ModNormSpec, WindowFamily, modulation_norm, sigma0

__all__ = [
    "DispersionSymbol",
    "PARABOLIC",
    "evolve_free",
    "evolve_interval",
    "gaussian_evolved",
    "KernelSample",
    "kernel_l1_profile",
    "kernel_oracle",
    "kernel_samples_1d",
    "fixed_time_probe",
    "FixedTimeGrowth",
    "fixed_time_growth",
    "fixed_time_ratio",
]


@dataclass(frozen=True)
class DispersionSymbol:
    """Dispersion relation ``omega``: ``parabolic``, ``fractional`` or ``signature``."""

    kind: str = "parabolic"
    alpha: float = 2.0

    def __post_init__(self):
        if self.kind not in ("parabolic", "fractional", "signature"):
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if self.kind == "fractional" and not self.alpha > 1:
            raise ValueError(f"fractional symbol needs alpha > 1, got {self.alpha}")

    def omega(self, grid: Grid) -> np.ndarray:
        if self.kind == "parabolic":
            return grid.xi_abs2
        if self.kind == "fractional":
            # |xi|^alpha vanishes at xi = 0, which gives the unit multiplier there
            return grid.xi_abs2 ** (self.alpha / 2)
        if grid.d != 2:
            raise ValueError("the signature symbol is defined only for d = 2")
        k1, k2 = grid.freqs
        return k1**2 - k2**2

    def multiplier(self, grid: Grid, t: float) -> np.ndarray:
        return np.exp(-1j * t * self.omega(grid))


PARABOLIC = DispersionSymbol("parabolic")


def evolve_free(f: Field, t: float, sym: DispersionSymbol = PARABOLIC) -> Field:
    """``U(t) f`` computed exactly in frequency."""
    if t == 0:
        return f
    return f.with_spectrum_multiplier(sym.multiplier(f.grid, t))


def evolve_interval(
    f: Field, t0: float, t1: float, steps: int, sym: DispersionSymbol = PARABOLIC
) -> SpaceTimeField:
    """Sample ``U(t) f`` at ``steps`` equispaced times in ``[t0, t1]``."""
    if steps < 2:
        raise ValueError("need at least two time samples")
    times = np.linspace(t0, t1, steps)
    omega = sym.omega(f.grid)
    spec = f.spectrum
    slices = tuple(Field.from_spectrum(f.grid, spec * np.exp(-1j * t * omega)) for t in times)
    return SpaceTimeField(slices, float(t0), float(t1))


def gaussian_evolved(x: np.ndarray, t: float) -> np.ndarray:
    """Closed form of ``U(t) exp(-x^2/2)`` in one dimension."""
    z = 1 + 2j * t
    return z ** (-0.5) * np.exp(-(x**2) / (2 * z))


# --------------------------------------------------------------------------
# kernel estimate


@dataclass(frozen=True)
class KernelSample:
    t: float
    l1: float
    bound: float
    ratio: float
    refined_l1: float

    @property
    def stable(self) -> bool:
        return abs(self.refined_l1 - self.l1) <= 0.02 * self.l1


def _kernel_grid(lam: float, t: float, n_per_lambda: int) -> Grid:
    # comoving window: decay scale of the bump transform plus the spread 2|t|/lam
    L = 32 * math.pi * lam + 4 * abs(t) / lam
    n = 8
    while L / n > lam / n_per_lambda:
        n *= 2
    return make_grid(1, n, L)


def _kernel_1d(lam: float, xi0: float, t: float, n_per_lambda: int) -> tuple[Grid, np.ndarray]:
    """Kernel samples ``K(x_c + y, t)`` on a window centred at ``x_c = -2 t xi0``.

    Writing ``xi = xi0 + eta`` gives
    ``K(x, t) = e^{i(x xi0 + t xi0^2)} K_0(x + 2 t xi0, t)``, so the window
    follows the packet and only the bump variable ``eta`` is discretised.
    """
    g = _kernel_grid(lam, t, n_per_lambda)
    eta = g.xi1
    fhat = np.exp(1j * t * eta**2) * sigma0(lam * eta)
    K0 = Field.from_fourier(g, fhat).samples
    x = g.x1 - 2 * t * xi0
    K = np.exp(1j * (x * xi0 + t * xi0**2)) * K0
    return g, K


def kernel_oracle(lam: float, xi0: float, t: float, x: np.ndarray, nodes: int = 4001) -> np.ndarray:
    """Dense trapezoid evaluation of ``(2 pi)^{-1} int e^{i(x xi + t xi^2)} sigma0(lam (xi - xi0)) dxi``."""
    xi = np.linspace(xi0 - 1 / lam, xi0 + 1 / lam, nodes)
    w = np.full(nodes, xi[1] - xi[0])
    w[[0, -1]] *= 0.5
    amp = sigma0(lam * (xi - xi0)) * w
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(len(x), dtype=np.complex128)
    for i in range(0, len(x), 512):
        xs = x[i : i + 512]
        out[i : i + 512] = np.exp(1j * (np.outer(xs, xi) + t * xi**2)) @ amp
    return out / (2 * np.pi)


def kernel_samples_1d(lam: float, xi0: float, t: float, n_per_lambda: int = 16):
    """Window coordinates and kernel values, for plotting and oracle checks."""
    g, K = _kernel_1d(lam, xi0, t, n_per_lambda)
    return g.x1 - 2 * t * xi0, K, g


def kernel_l1_profile(
    lam: float,
    box_center: Sequence[float] | float,
    times: Sequence[float],
    n_per_lambda: int = 16,
) -> list[KernelSample]:
    """``||K(., t)||_{L^1}`` for the kernel of a width-``1/lam`` frequency box.

    The box amplitude is the smooth bump ``sigma0(lam (xi - xi0))``, which
    equals one at the centre and vanishes outside the box of side ``2/lam``;
    the kernel carries the factor ``(2 pi)^{-d}`` of the inverse transform.
    In two dimensions the kernel is a tensor product and its L^1 norm is
    the product of the one-dimensional norms.

    Each entry also stores the L^1 norm recomputed with twice as many
    samples per axis; ``KernelSample.stable`` tests the 2% criterion.
    """
    xi0 = np.atleast_1d(np.asarray(box_center, dtype=float))
    d = len(xi0)
    if d not in (1, 2):
        raise ValueError("box centre must have 1 or 2 components")
    out = []
    for t in times:
        l1 = 1.0
        l1_ref = 1.0
        for c in xi0:
            g, K = _kernel_1d(lam, c, t, n_per_lambda)
            l1 *= float(np.sum(np.abs(K)) * g.dx)
            g2, K2 = _kernel_1d(lam, c, t, 2 * n_per_lambda)
            l1_ref *= float(np.sum(np.abs(K2)) * g2.dx)
        bound = (1 + abs(t) / lam**2) ** d
        out.append(KernelSample(float(t), l1, bound, l1 / bound, l1_ref))
    return out


# --------------------------------------------------------------------------
# fixed-time growth


def fixed_time_probe(grid: Grid) -> Field:
    """Radial Schwartz-type probe with spectrum ``sigma0(|xi|)`` supported in the unit ball."""
    r = np.sqrt(grid.xi_abs2)
    return Field.from_fourier(grid, sigma0(r))


@dataclass(frozen=True)
class FixedTimeGrowth:
    times: tuple[float, ...]
    ratios: tuple[float, ...]
    slope: float
    stderr: float
    r2: float


def fixed_time_growth(
    p: float,
    q: float,
    s: float,
    trange: Sequence[float],
    probe: Field,
    sym: DispersionSymbol = PARABOLIC,
    windows: WindowFamily | None = None,
) -> FixedTimeGrowth:
    """Measure the growth of ``||U(t)||`` on ``M^s_{p,q}`` against ``t``.

    For ``p >= 2`` the test datum is ``g = U(-t) probe`` (the spread-out
    wave that refocuses at time ``t``), giving the ratio
    ``||probe|| / ||U(-t) probe||``. For ``p < 2`` the probe itself is
    evolved, giving ``||U(t) probe|| / ||probe||``. Either ratio is a lower
    bound for the operator norm.
    """
    from displab.harness.fitting import fit_loglog

    if len(trange) < 4:
        raise ValueError("need at least four times for a fit")
    if any(abs(t) < 2 for t in trange):
        raise ValueError("times must satisfy |t| >= 2")
    base = modulation_norm(probe, ModNormSpec(s, p, q), windows)
    ratios = [fixed_time_ratio(p, q, s, t, probe, sym, windows, base) for t in trange]
    fit = fit_loglog(np.abs(trange), ratios, drop_outlier=False)
    return FixedTimeGrowth(tuple(map(float, trange)), tuple(ratios), fit.slope, fit.stderr, fit.r2)


def fixed_time_ratio(
    p: float,
    q: float,
    s: float,
    t: float,
    probe: Field,
    sym: DispersionSymbol = PARABOLIC,
    windows: WindowFamily | None = None,
    base: float | None = None,
) -> float:
    """One sample of the lower bound used by :func:`fixed_time_growth`."""
    spec = ModNormSpec(s, p, q)
    g = probe.grid
    if base is None:
        base = modulation_norm(probe, spec, windows)
    moved = evolve_free(probe, -t if p >= 2 else t, sym)
    if moved.mass_outside(g.L / 4) > 1e-8:
        warnings.warn(f"evolved probe escapes |x| <= L/4 at t={t}; enlarge the box", RuntimeWarning)
    val = modulation_norm(moved, spec, windows)
    return base / val if p >= 2 else val / base
