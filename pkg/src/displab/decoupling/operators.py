"""Caps, extension operators, weighted norms and the decoupling constant.

Frequency integrals over ``[-1, 1]^d`` use composite 4-node Gauss-Legendre
panels. Space-time norms are lattice sums with spacing ``1/4`` over the
box ``[-W, W]^{d+1}``, ``W = tail * R``, against the weight ``w_B`` of the
ball ``B(0, R)``; beyond ``1.5 R`` the weight with ``N_w = 20`` is below
``1e-8``, which stands in for the tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline, RegularGridInterpolator

from displab.decoupling.phases import PhaseSpec
from displab.harness.exponents import decoupling_exponent
from displab.modspace import smoothstep

__all__ = [
    "MeshTooCoarseError",
    "PartitionError",
    "Surface",
    "PARABOLOID",
    "hyperbolic_surface",
    "FrequencyMesh",
    "CapSet",
    "weight_eval",
    "extension_op",
    "osc_op",
    "Lattice",
    "weighted_lp",
    "decoupled_norm",
    "cap_components",
    "random_density",
    "cap_density",
    "DecouplingSetup",
    "DecouplingResult",
    "decoupling_ratio",
]


class MeshTooCoarseError(ValueError):
    """The frequency mesh cannot resolve the oscillation at the requested points."""


class PartitionError(ValueError):
    """Cap windows fail to sum to one on the support of the density."""


@dataclass(frozen=True)
class Surface:
    """Graph ``xi -> h(xi)`` with a bound for ``|grad h|`` on the unit ball."""

    h: Callable[[np.ndarray], np.ndarray]
    grad_bound: float
    name: str = "surface"
    signature: int = 0


PARABOLOID = Surface(lambda xi: 0.5 * np.sum(xi**2, axis=-1), 1.0, "paraboloid", 0)


def hyperbolic_surface(k: int = 1) -> Surface:
    """``h(xi) = <xi, I^k xi> / 2`` in two dimensions."""

    def h(xi):
        return 0.5 * (xi[..., 0] ** 2 - xi[..., 1] ** 2) if k == 1 else 0.5 * np.sum(xi**2, axis=-1)

    return Surface(h, 1.0, f"hyperbolic{k}", k)


# --------------------------------------------------------------------------
# frequency mesh


@dataclass(frozen=True)
class FrequencyMesh:
    """Tensor composite Gauss-Legendre rule on ``[-1, 1]^d``.

    Attributes
    ----------
    nodes_1d, weights_1d : ndarray
        One-dimensional nodes and weights (``nodes`` of each, 4 per panel).
    points : ndarray, shape (nodes**d, d)
    weights : ndarray, shape (nodes**d,)
    """

    d: int
    nodes: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError("d must be 1 or 2")
        if self.nodes < 4 or self.nodes % 4:
            raise ValueError("nodes per axis must be a positive multiple of 4")

    @property
    def panels(self) -> int:
        return self.nodes // 4

    @property
    def spacing(self) -> float:
        return 2.0 / self.nodes

    @property
    def nodes_1d(self) -> np.ndarray:
        g, _ = np.polynomial.legendre.leggauss(4)
        w = 2.0 / self.panels
        left = -1 + w * np.arange(self.panels)
        return (left[:, None] + w * (g[None, :] + 1) / 2).ravel()

    @property
    def weights_1d(self) -> np.ndarray:
        _, gw = np.polynomial.legendre.leggauss(4)
        w = 2.0 / self.panels
        return np.tile(gw * w / 2, self.panels)

    @property
    def points(self) -> np.ndarray:
        n = self.nodes_1d
        if self.d == 1:
            return n[:, None]
        a, b = np.meshgrid(n, n, indexing="ij")
        return np.column_stack([a.ravel(), b.ravel()])

    @property
    def weights(self) -> np.ndarray:
        w = self.weights_1d
        return w if self.d == 1 else np.outer(w, w).ravel()

    def refined(self, factor: int = 2) -> "FrequencyMesh":
        return FrequencyMesh(self.d, self.nodes * factor)

    @staticmethod
    def for_scale(d: int, R: float, omega: float = 0.0) -> "FrequencyMesh":
        """Smallest mesh with ``max(64, 4R)`` nodes that resolves frequency ``omega``."""
        need = max(64, 4 * R, _nodes_needed(omega))
        return FrequencyMesh(d, int(4 * math.ceil(need / 4)))


def _nodes_needed(omega: float) -> float:
    # mean spacing 2/nodes times the oscillation rate stays below pi/2
    return 4 * omega / math.pi


def _check_mesh(mesh: FrequencyMesh, omega: float) -> None:
    if mesh.nodes < _nodes_needed(omega):
        raise MeshTooCoarseError(
            f"{mesh.nodes} nodes per axis cannot resolve oscillation rate {omega:.1f} "
            f"(need >= {_nodes_needed(omega):.0f})"
        )


# --------------------------------------------------------------------------
# caps


@dataclass(frozen=True)
class CapSet:
    """Smooth caps of side about ``R^{-1/2}`` covering ``[-1, 1]^d``.

    The interval is cut into ``m = ceil(2 sqrt(R))`` cells of width
    ``delta = 2/m``. Cell ``j`` carries the window
    ``r(xi - a_j) - r(xi - a_{j+1})`` where ``r`` is the smoothstep ramp of
    width ``delta / 2`` centred at the cut; the windows telescope to one
    exactly and each point meets at most two of them per axis. In two
    dimensions the caps are tensor products; caps missing the unit disc
    are dropped.
    """

    R: float
    d: int = 1

    def __post_init__(self):
        if self.R < 1:
            raise ValueError("R must be at least 1")
        if self.d not in (1, 2):
            raise ValueError("d must be 1 or 2")

    @property
    def m(self) -> int:
        return int(math.ceil(2 * math.sqrt(self.R) - 1e-9))

    @property
    def delta(self) -> float:
        return 2.0 / self.m

    @property
    def cuts(self) -> np.ndarray:
        return -1 + self.delta * np.arange(self.m + 1)

    @property
    def centers_1d(self) -> np.ndarray:
        return -1 + self.delta * (np.arange(self.m) + 0.5)

    @property
    def overlap_bound(self) -> int:
        return 2**self.d

    def _ramp(self, xi: np.ndarray, a: float) -> np.ndarray:
        tau = self.delta / 2
        return smoothstep((xi - a) / tau + 0.5)

    def window_1d(self, xi: np.ndarray, j: int) -> np.ndarray:
        cuts = self.cuts
        lo = np.ones_like(xi) if j == 0 else self._ramp(xi, cuts[j])
        hi = np.zeros_like(xi) if j == self.m - 1 else self._ramp(xi, cuts[j + 1])
        return lo - hi

    def indices(self) -> list[tuple[int, ...]]:
        if self.d == 1:
            return [(j,) for j in range(self.m)]
        out = []
        c, half = self.centers_1d, 0.75 * self.delta
        for i in range(self.m):
            for j in range(self.m):
                # nearest point of the cap support to the origin
                near = np.array([max(0.0, abs(c[i]) - half), max(0.0, abs(c[j]) - half)])
                if np.linalg.norm(near) < 1:
                    out.append((i, j))
        return out

    def center(self, idx) -> np.ndarray:
        return self.centers_1d[list(idx)]

    def window(self, xi: np.ndarray, idx) -> np.ndarray:
        xi = np.asarray(xi, dtype=float).reshape(-1, self.d)
        out = np.ones(len(xi))
        for ax, j in enumerate(idx):
            out = out * self.window_1d(xi[:, ax], j)
        return out

    def flat_top(self, idx) -> list[tuple[float, float]]:
        """Per-axis interval on which the cap window equals one."""
        cuts, tau = self.cuts, self.delta / 2
        out = []
        for j in idx:
            lo = -math.inf if j == 0 else cuts[j] + tau / 2
            hi = math.inf if j == self.m - 1 else cuts[j + 1] - tau / 2
            out.append((lo, hi))
        return out

    def partition_residual(self, xi: np.ndarray) -> float:
        """``max |sum_tau chi_tau - 1|`` over the given frequencies inside the unit ball."""
        xi = np.asarray(xi, dtype=float).reshape(-1, self.d)
        inside = np.linalg.norm(xi, axis=1) <= 1
        total = sum(self.window(xi, idx) for idx in self.indices())
        return float(np.max(np.abs(total - 1)[inside])) if np.any(inside) else 0.0

    def max_overlap(self, xi: np.ndarray) -> int:
        xi = np.asarray(xi, dtype=float).reshape(-1, self.d)
        count = sum((self.window(xi, idx) > 0).astype(int) for idx in self.indices())
        return int(np.max(count))


# --------------------------------------------------------------------------
# operators


def weight_eval(z, center, R: float, N_w: int = 20) -> np.ndarray:
    """``w_B(t, x) = (1 + |x - xbar|/R + |t - tbar|/R)^{-N_w}``.

    ``z`` and ``center`` are ``(t, x_1, ..., x_d)`` tuples or arrays with
    that last axis.
    """
    if N_w < 10:
        raise ValueError("the weight exponent N_w must be at least 10")
    z = np.asarray(z, dtype=float)
    c = np.asarray(center, dtype=float)
    dt = np.abs(z[..., 0] - c[0])
    dx = np.linalg.norm(z[..., 1:] - c[1:], axis=-1)
    return (1 + dx / R + dt / R) ** (-float(N_w))


def _density_values(f, mesh: FrequencyMesh) -> np.ndarray:
    if callable(f):
        return np.asarray(f(mesh.points), dtype=complex)
    f = np.asarray(f, dtype=complex).ravel()
    if f.shape != (len(mesh.weights),):
        raise ValueError(f"density array has {f.size} values, mesh has {len(mesh.weights)} nodes")
    return f


def _as_surface(h) -> Surface:
    if isinstance(h, Surface):
        return h
    # estimate the gradient bound on a fine probe mesh
    probe = FrequencyMesh(1, 256).nodes_1d
    vals = h(probe[:, None])
    return Surface(h, float(np.max(np.abs(np.gradient(vals, probe)))) + 1e-12, "custom")


def extension_op(h, f, points, mesh: FrequencyMesh | None = None, R: float | None = None) -> np.ndarray:
    """``E_h f(t, x) = int e^{i(<x, xi> + t h(xi))} f(xi) dxi`` by Gauss panels.

    Parameters
    ----------
    h : Surface or callable
        Graph function on the unit frequency ball.
    f : callable or ndarray
        Density, either a function of ``(m, d)`` frequency arrays or its
        values on ``mesh.points``. It is integrated over ``[-1, 1]^d``, so a
        density supported in the unit ball must vanish outside it.
    points : array_like, shape (n, d+1)
        Evaluation points ``(t, x_1, ..., x_d)``.
    mesh : FrequencyMesh, optional
        Defaults to the smallest mesh with ``max(64, 4R)`` nodes per axis
        that resolves the points.
    R : float, optional
        Target scale used for the default mesh.

    Raises
    ------
    MeshTooCoarseError
        When ``mesh`` under-resolves ``max|x| + max|t| sup|grad h|``.
    """
    surf = _as_surface(h)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = pts.shape[1] - 1
    omega = float(np.max(np.linalg.norm(pts[:, 1:], axis=1) + np.abs(pts[:, 0]) * surf.grad_bound)) if len(pts) else 0.0
    if mesh is None:
        mesh = FrequencyMesh.for_scale(d, R or 0, omega)
    elif mesh.d != d:
        raise ValueError("mesh dimension does not match the points")
    _check_mesh(mesh, omega)
    xi, w = mesh.points, mesh.weights
    amp = w * _density_values(f, mesh)
    hv = surf.h(xi)
    out = np.empty(len(pts), dtype=complex)
    for s in range(0, len(pts), 2048):
        p = pts[s : s + 2048]
        ph = p[:, 1:] @ xi.T + p[:, :1] * hv[None, :]
        out[s : s + 2048] = np.exp(1j * ph) @ amp
    return out


def osc_op(phase: PhaseSpec, lam: float, f, points, mesh: FrequencyMesh | None = None) -> np.ndarray:
    """``T^lam f(z) = int e^{i lam phi(z/lam; xi)} a1(z/lam) a2(xi) f(xi) dxi``.

    Points where ``a1(z/lam) = 0`` get the value zero without quadrature.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = phase.d
    if pts.shape[1] != d + 1:
        raise ValueError("points must have d+1 columns (t, x)")
    zs = pts / lam
    a1 = phase.amplitude.a1(zs)
    live = np.nonzero(a1 > 0)[0]
    out = np.zeros(len(pts), dtype=complex)
    if len(live) == 0:
        return out
    # oscillation rate in xi: lam |grad_xi phi| at the live points, probed coarsely
    probe = FrequencyMesh(d, 8).points
    zl = zs[live]
    rate = 0.0
    for s in range(0, len(live), 4096):
        zc = zl[s : s + 4096]
        tt = np.repeat(zc[:, 0], len(probe))
        xx = np.repeat(zc[:, 1:], len(probe), axis=0)
        kk = np.tile(probe, (len(zc), 1))
        rate = max(rate, float(lam * np.max(np.linalg.norm(phase.grad_xi(tt, xx, kk), axis=-1))))
    if mesh is None:
        mesh = FrequencyMesh.for_scale(d, 0, 1.25 * rate)
    _check_mesh(mesh, rate)
    xi, w = mesh.points, mesh.weights
    amp = w * phase.amplitude.a2(xi) * _density_values(f, mesh)
    nk = len(xi)
    chunk = max(1, 2_000_000 // nk)
    for s in range(0, len(live), chunk):
        idx = live[s : s + chunk]
        zc = zs[idx]
        tt = np.repeat(zc[:, 0], nk)
        xx = np.repeat(zc[:, 1:], nk, axis=0)
        kk = np.tile(xi, (len(zc), 1))
        ph = lam * phase(tt, xx, kk).reshape(len(zc), nk)
        out[idx] = a1[idx] * (np.exp(1j * ph) @ amp)
    return out


# --------------------------------------------------------------------------
# lattice norms


@dataclass(frozen=True)
class Lattice:
    """Space-time lattice of spacing ``spacing`` on ``[-tail R, tail R]^{d+1}``."""

    d: int
    R: float
    spacing: float = 0.25
    tail: float = 1.5
    N_w: int = 20
    center: tuple = ()

    @property
    def axis(self) -> np.ndarray:
        n = int(round(self.tail * self.R / self.spacing))
        return self.spacing * np.arange(-n, n + 1)

    @property
    def cell(self) -> float:
        return self.spacing ** (self.d + 1)

    @property
    def origin(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float) if self.center else np.zeros(self.d + 1)

    def weights(self) -> np.ndarray:
        """Weight on the full lattice, shape ``(n_t, n_x, ...)``."""
        a = self.axis
        grids = np.meshgrid(*([a] * (self.d + 1)), indexing="ij")
        z = np.stack(grids, axis=-1)
        return weight_eval(z, np.zeros(self.d + 1), self.R, self.N_w)

    def points(self) -> np.ndarray:
        a = self.axis
        grids = np.meshgrid(*([a] * (self.d + 1)), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1) + self.origin

    def refined(self) -> "Lattice":
        return Lattice(self.d, self.R, self.spacing / 2, self.tail, self.N_w, self.center)


def weighted_lp(values: np.ndarray, weights: np.ndarray, cell: float, p: float) -> float:
    """``(sum |F|^p w cell)^{1/p}``; for ``p = inf`` the max of ``|F|`` where ``w`` is not negligible."""
    a = np.abs(values)
    if math.isinf(p):
        return float(np.max(a * (weights > 1e-12)))
    return float((np.sum(a**p * weights) * cell) ** (1.0 / p))


def decoupled_norm(components: Sequence[np.ndarray], p: float, weights: np.ndarray, cell: float) -> float:
    """``(sum_tau ||F_tau||^2_{L^p(w)})^{1/2}`` over per-cap lattice values."""
    return float(math.sqrt(sum(weighted_lp(c, weights, cell, p) ** 2 for c in components)))


def _extension_rows(surf: Surface, amp: np.ndarray, mesh: FrequencyMesh, lat: Lattice, rows: slice) -> np.ndarray:
    """``E_h`` of one weighted density on the time rows ``rows`` of the lattice.

    ``amp`` already includes the quadrature weights; only its nonzero
    nodes enter the sums.
    """
    a = lat.axis
    tt = a[rows]
    if lat.d == 1:
        nz = np.nonzero(amp)[0]
        xi = mesh.points[nz, 0]
        G = np.exp(1j * np.outer(tt, surf.h(mesh.points[nz]))) * amp[nz][None, :]
        return G @ np.exp(1j * np.outer(xi, a))
    n1 = mesh.nodes
    hv = surf.h(mesh.points).reshape(n1, n1)
    amp2 = amp.reshape(n1, n1)
    r_nz = np.nonzero(np.any(amp2 != 0, axis=1))[0]
    c_nz = np.nonzero(np.any(amp2 != 0, axis=0))[0]
    sub, hsub = amp2[np.ix_(r_nz, c_nz)], hv[np.ix_(r_nz, c_nz)]
    A1 = np.exp(1j * np.outer(a, mesh.nodes_1d[r_nz]))
    A2 = np.exp(1j * np.outer(a, mesh.nodes_1d[c_nz]))
    out = np.empty((len(tt), len(a), len(a)), dtype=complex)
    for i, t in enumerate(tt):
        out[i] = A1 @ (sub * np.exp(1j * t * hsub)) @ A2.T
    return out


def _densities(f, caps: CapSet, mesh: FrequencyMesh, plain_only: bool = False) -> np.ndarray:
    """Density values followed by the nonzero cap pieces ``f chi_tau``."""
    xi = mesh.points
    fv = _density_values(f, mesh)
    support = np.abs(fv) > 0
    res = caps.partition_residual(xi[support]) if np.any(support) else 0.0
    if res > 1e-10:
        raise PartitionError(f"cap partition residual {res:.2e} exceeds 1e-10")
    dens = [fv]
    if not plain_only:
        for idx in caps.indices():
            g = fv * caps.window(xi, idx)
            if np.any(g != 0):
                dens.append(g)
    return np.array(dens)


def _lattice_values(setup: "DecouplingSetup", g: np.ndarray, mesh: FrequencyMesh, lat: Lattice, rows=slice(None)):
    if setup.phase is None:
        return _extension_rows(setup.surface, g * mesh.weights, mesh, lat, rows)
    a = lat.axis
    tt = a[rows]
    grids = np.meshgrid(tt, *([a] * lat.d), indexing="ij")
    pts = np.stack([q.ravel() for q in grids], axis=1)
    return osc_op(setup.phase, setup.lam, g, pts, mesh).reshape(grids[0].shape)


def cap_components(setup: "DecouplingSetup", f, caps: CapSet, mesh: FrequencyMesh, lat: Lattice):
    """Plain and per-cap lattice values ``(plain, [F_tau, ...])``; zero caps are skipped.

    Holds every component in memory, so it is meant for small ``R``;
    :func:`decoupling_ratio` streams the norms instead.
    """
    dens = _densities(f, caps, mesh)
    vals = [_lattice_values(setup, g, mesh, lat) for g in dens]
    return vals[0], vals[1:]


def _component_norms(setup: "DecouplingSetup", dens: np.ndarray, mesh: FrequencyMesh, lat: Lattice) -> list[float]:
    """Weighted ``L^p`` norms of each density's operator image, streamed in time blocks."""
    n = len(lat.axis)
    a = lat.axis
    p = setup.p
    block = max(1, int(2**22 // max(1, n**lat.d)))
    out = []
    for g in dens:
        acc = 0.0
        for s in range(0, n, block):
            rows = slice(s, min(n, s + block))
            vals = _lattice_values(setup, g, mesh, lat, rows)
            grids = np.meshgrid(a[rows], *([a] * lat.d), indexing="ij")
            w = weight_eval(np.stack(grids, axis=-1), np.zeros(lat.d + 1), lat.R, lat.N_w)
            if math.isinf(p):
                acc = max(acc, float(np.max(np.abs(vals) * (w > 1e-12))))
            else:
                acc += float(np.sum(np.abs(vals) ** p * w))
        out.append(acc if math.isinf(p) else (acc * lat.cell) ** (1.0 / p))
    return out


# --------------------------------------------------------------------------
# densities


def random_density(R: float, rng: np.random.Generator, d: int = 1, flat: float = 0.75) -> Callable:
    """Complex Gaussian values on a ``1/R`` grid, cubic-interpolated, times a bump.

    The bump equals one on ``|xi| <= flat`` and vanishes at ``|xi| = 1``.
    """
    n = int(math.ceil(2 * R)) + 1
    nodes = np.linspace(-1, 1, n)
    shape = (n,) * d
    vals = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
    if d == 1:
        re, im = CubicSpline(nodes, vals.real), CubicSpline(nodes, vals.imag)

        def interp(xi):
            return re(xi[:, 0]) + 1j * im(xi[:, 0])
    else:
        re = RegularGridInterpolator((nodes, nodes), vals.real, method="cubic")
        im = RegularGridInterpolator((nodes, nodes), vals.imag, method="cubic")

        def interp(xi):
            return re(xi) + 1j * im(xi)

    def f(xi):
        xi = np.asarray(xi, dtype=float).reshape(-1, d)
        r = np.linalg.norm(xi, axis=1)
        return interp(np.clip(xi, -1, 1)) * smoothstep((1 - r) / (1 - flat))

    return f


def cap_density(caps: CapSet, idx) -> Callable:
    """Smooth bump supported inside the flat top of one cap."""
    c = caps.center(idx)
    half = caps.delta / 4

    def f(xi):
        xi = np.asarray(xi, dtype=float).reshape(-1, caps.d)
        r = np.linalg.norm((xi - c) / half, axis=1)
        return smoothstep(2 * (1 - r)).astype(complex)

    return f


def unit_density(d: int = 1) -> Callable:
    """``f = 1`` on the unit ball (the constant-density focusing example)."""

    def f(xi):
        xi = np.asarray(xi, dtype=float).reshape(-1, d)
        return (np.linalg.norm(xi, axis=1) <= 1).astype(complex)

    return f


__all__.append("unit_density")


# --------------------------------------------------------------------------
# decoupling constant


@dataclass(frozen=True)
class DecouplingSetup:
    """What to decouple: a surface (constant coefficients) or a phase at scale ``lam``."""

    p: float
    d: int = 1
    surface: Surface = PARABOLOID
    phase: PhaseSpec | None = None
    lam: float | None = None
    N_w: int = 20
    spacing: float = 0.25
    tail: float = 1.5
    refine_check: bool = False

    @property
    def signature(self) -> int:
        return self.phase.k if self.phase is not None else self.surface.signature


@dataclass(frozen=True)
class DecouplingResult:
    R: float
    plain: float
    decoupled: float
    alpha: float
    D: float
    n_caps: int
    refinement_change: float | None = None

    @property
    def flagged(self) -> bool:
        return self.refinement_change is not None and self.refinement_change > 0.05

    @property
    def ratio(self) -> float:
        """``plain / decoupled`` without the ``R^alpha`` normalisation."""
        return self.plain / self.decoupled


def decoupling_ratio(setup: DecouplingSetup, f, R: float) -> DecouplingResult:
    """``D(R) = ||E f||_{L^p(w_B)} / (R^alpha * decoupled norm)``.

    ``alpha`` comes from the exponent table for ``(p, k, d)``. With
    ``refine_check`` the plain norm is recomputed on a lattice of half the
    spacing and the relative change is stored; above 5% the result is
    flagged.
    """
    if R < 16 or R > 1024:
        raise ValueError("R must lie in [16, 1024]")
    if setup.phase is not None and (setup.lam is None or setup.lam < R):
        raise ValueError("variable-coefficient runs need lam >= R")
    alpha = decoupling_exponent(setup.p, setup.signature, setup.d)
    caps = CapSet(R, setup.d)
    lat = Lattice(setup.d, R, setup.spacing, setup.tail, setup.N_w)
    mesh = FrequencyMesh.for_scale(setup.d, R)
    dens = _densities(f, caps, mesh)
    norms = _component_norms(setup, dens, mesh, lat)
    plain = norms[0]
    dec = float(math.sqrt(sum(v**2 for v in norms[1:])))
    change = None
    if setup.refine_check:
        (plain_fine,) = _component_norms(setup, dens[:1], mesh, lat.refined())
        change = abs(plain_fine - plain) / plain
    return DecouplingResult(float(R), plain, dec, alpha, plain / (R**alpha * dec), len(dens) - 1, change)
