"""Knapp-type extremizer families and their space-time lower bounds.

Three families are provided:

* ``aniso_unit(eps)``: indicator spectrum on a thin box at unit frequency,
  synthesised without the ``(2 pi)^{-d}`` factor so that ``|g(0)| = (2 eps)^d``;
* ``aniso_high(lam)``: indicator spectrum on a unit box at frequency ``lam``,
  the rescaling ``f_lam(x) = lam^d g_{1/lam}(lam x)`` of the previous family;
* ``isotropic(lam)``: radial annulus spectrum ``theta(eta/lam) e^{i|eta|^2}``
  with the ``(2 pi)^{-d}`` factor; it is spread out at ``t = 0`` and
  refocuses at ``t = 1`` under ``U(t)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from displab.fields import Field, Grid, SpaceTimeField, make_grid, spacetime_norm
from displab.modspace import smoothstep
from displab.propagator import evolve_interval

__all__ = [
    "KnappSpec",
    "theta",
    "box_indicator",
    "aniso_unit_grid",
    "aniso_high_grid",
    "isotropic_grid",
    "make_aniso_unit",
    "make_aniso_high",
    "make_isotropic",
    "make_knapp",
    "tube_mask",
    "tube_lower_bound",
    "refocus_window",
    "refocus_lower_bound",
]

# frequency bins across each half-width, so at least 16 across the window
_BINS_PER_EPS = 8


@dataclass(frozen=True)
class KnappSpec:
    family: str
    scale: float
    d: int = 1

    def __post_init__(self):
        if self.family not in ("aniso_unit", "aniso_high", "isotropic"):
            raise ValueError(f"unknown Knapp family {self.family!r}")
        if self.family == "aniso_unit":
            if not (0 < self.scale <= 0.5):
                raise ValueError(f"eps must lie in (0, 1/2], got {self.scale}")
        elif self.scale < 4 or not math.log2(self.scale).is_integer():
            raise ValueError(f"lambda must be a dyadic number >= 4, got {self.scale}")
        if self.d not in (1, 2):
            raise ValueError("d must be 1 or 2")


def theta(r):
    """Radial annulus bump: one on ``[1/2, 2]``, zero outside ``(1/4, 4)``."""
    r = np.asarray(r, dtype=float)
    rise = smoothstep((r - 0.25) / 0.25)
    fall = smoothstep((4.0 - r) / 2.0)
    return rise * fall


def box_indicator(xi: np.ndarray, lo: float, hi: float, tol: float = 1e-9) -> np.ndarray:
    """Bin-wise indicator of ``(lo, hi)`` with weight 1/2 on boundary bins."""
    out = ((xi > lo + tol) & (xi < hi - tol)).astype(float)
    out[np.abs(xi - lo) <= tol] = 0.5
    out[np.abs(xi - hi) <= tol] = 0.5
    return out


def _pow2_at_least(x: float) -> int:
    return 1 << max(3, int(math.ceil(math.log2(max(x, 8)))))


def aniso_unit_grid(eps: float, d: int = 1, t_max: float = 1.0) -> Grid:
    """Grid on which both ``1 +- eps`` and ``+- eps`` are lattice frequencies.

    The box side is ``2 pi m / eps`` with ``m`` a power of two at least
    ``_BINS_PER_EPS`` and large enough that the tube ``|x - 2 t e_1| <= 2/eps``
    stays inside ``|x| <= L/4`` up to ``|t| = t_max``.
    """
    inv = 1.0 / eps
    if not math.isclose(inv, round(inv)):
        raise ValueError("1/eps must be an integer so the box edges sit on lattice points")
    need = 4 * (2 * t_max + 2 * inv)
    m = _BINS_PER_EPS
    while 2 * math.pi * m * inv < need:
        m *= 2
    L = 2 * math.pi * m * inv
    n = _pow2_at_least(2 * 2 * (1 + eps) * L / math.pi)
    return make_grid(d, n, L)


def aniso_high_grid(lam: float, d: int = 1, m: int = 8) -> Grid:
    """Box side ``2 pi m`` and half-Nyquist above ``lam + 1``."""
    L = 2 * math.pi * m
    n = _pow2_at_least(2 * 2 * (lam + 1) * L / math.pi)
    return make_grid(d, n, L)


def isotropic_grid(lam: float, d: int = 1, box_factor: float = 32.0) -> Grid:
    """Box side ``box_factor * lam`` and half-Nyquist above ``4 lam``."""
    L = box_factor * lam
    n = _pow2_at_least(2 * 4 * lam * 1.05 * L / math.pi)
    return make_grid(d, n, L)


def _check_bins(grid: Grid, width: float) -> None:
    if width / grid.dxi < _BINS_PER_EPS - 1e-9:
        raise ValueError(
            f"grid resolves the frequency window of width {width} with only "
            f"{width / grid.dxi:.1f} bins (need >= {_BINS_PER_EPS})"
        )


def make_aniso_unit(eps: float, grid: Grid) -> Field:
    """Field with spectrum the indicator of ``(1-eps, 1+eps) x (-eps, eps)^{d-1}``."""
    KnappSpec("aniso_unit", eps, grid.d)
    _check_bins(grid, 2 * eps)
    if 1 + eps > grid.nyquist / 2:
        raise ValueError("unit-frequency box exceeds half-Nyquist")
    fhat = np.ones(grid.shape)
    for i, xi in enumerate(grid.freqs):
        centre = 1.0 if i == 0 else 0.0
        fhat = fhat * box_indicator(xi, centre - eps, centre + eps)
    return Field.from_fourier(grid, fhat, const=1.0)


def make_aniso_high(lam: float, grid: Grid) -> Field:
    """Field with spectrum the indicator of ``(lam-1, lam+1) x (-1, 1)^{d-1}``."""
    KnappSpec("aniso_high", lam, grid.d)
    _check_bins(grid, 2.0)
    if lam + 1 > grid.nyquist / 2:
        raise ValueError(f"frequency {lam + 1} exceeds half-Nyquist {grid.nyquist / 2:.2f}")
    fhat = np.ones(grid.shape)
    for i, xi in enumerate(grid.freqs):
        centre = lam if i == 0 else 0.0
        fhat = fhat * box_indicator(xi, centre - 1, centre + 1)
    return Field.from_fourier(grid, fhat, const=1.0)


def make_isotropic(lam: float, grid: Grid) -> Field:
    """Radial datum ``fhat(eta) = theta(|eta|/lam) e^{i |eta|^2}``.

    The quadratic phase undoes ``U(1)``, so ``U(1) f`` is the concentrated
    profile ``lam^d (theta)^vee(lam x)`` while ``|f(x)|`` stays bounded.
    """
    KnappSpec("isotropic", lam, grid.d)
    if 4 * lam > grid.nyquist / 2:
        raise ValueError(f"annulus radius {4 * lam} exceeds half-Nyquist {grid.nyquist / 2:.2f}")
    _check_bins(grid, lam / 4)
    r2 = grid.xi_abs2
    fhat = theta(np.sqrt(r2) / lam) * np.exp(1j * r2)
    return Field.from_fourier(grid, fhat)


def make_knapp(spec: KnappSpec, grid: Grid) -> Field:
    maker = {"aniso_unit": make_aniso_unit, "aniso_high": make_aniso_high, "isotropic": make_isotropic}
    return maker[spec.family](spec.scale, grid)


# --------------------------------------------------------------------------
# space-time lower bounds


def tube_mask(eps: float):
    """Indicator of ``|x - 2 t e_1| <= 2/eps`` as a ``(t, grid) -> array`` mask.

    The packet of ``U(t) g_eps`` travels with velocity ``2 e_1`` under the
    multiplier ``exp(-i t |xi|^2)``.
    """

    def mask(t: float, grid: Grid) -> np.ndarray:
        c = list(grid.coords)
        c[0] = c[0] - 2 * t
        r = np.sqrt(sum(x**2 for x in c))
        return (r <= 2.0 / eps).astype(float)

    return mask


def tube_lower_bound(
    eps: float,
    grid: Grid,
    p_t: float,
    q_x: float,
    interval: tuple[float, float],
    steps: int = 65,
) -> float:
    """Mixed ``L^{p_t}_t L^{q_x}_x`` norm of ``U g_eps`` restricted to the tube."""
    t0, t1 = interval
    reach = max(abs(t0), abs(t1)) * 2 + 2.0 / eps
    if reach > grid.L / 2:
        warnings.warn(f"tube reaches |x| = {reach:.1f} beyond the half box {grid.L / 2:.1f}", RuntimeWarning)
    g = make_aniso_unit(eps, grid)
    u = evolve_interval(g, t0, t1, steps)
    return spacetime_norm(u, p_t, q_x, mask=tube_mask(eps))


def refocus_window(lam: float) -> tuple[float, float]:
    return 1.0 - lam**-2 / 10.0, 1.0


def refocus_lower_bound(lam: float, grid: Grid, p_t: float, q_x: float, steps: int = 17) -> float:
    """``L^{p_t}`` norm of ``||U(t) f_lam||_{q_x}`` over the refocusing window."""
    if steps < 16:
        raise ValueError("the refocusing window needs at least 16 time slices")
    f = make_isotropic(lam, grid)
    t0, t1 = refocus_window(lam)
    u: SpaceTimeField = evolve_interval(f, t0, t1, steps)
    return spacetime_norm(u, p_t, q_x)
