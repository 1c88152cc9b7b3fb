"""Frequency-uniform decomposition and modulation-space norms.

The decomposition uses integer translates of a tensor-product window built
from the polynomial smoothstep

    S(t) = t^4 (35 - 84 t + 70 t^2 - 20 t^3),   0 <= t <= 1,

with the 1-D profile ``sigma0(xi) = S(1 - |xi|)``. Because
``S(t) + S(1 - t) = 1`` the translates sum to one identically.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from displab.fields import Field, Grid, lp_norm

__all__ = [
    "smoothstep",
    "sigma0",
    "WindowFamily",
    "ModNormSpec",
    "partition_residual",
    "box_decompose",
    "modulation_norm",
    "sobolev_lp_norm",
    "bracket",
    "EmbeddingReport",
    "check_embeddings",
    "product_norm_check",
]


def smoothstep(t):
    """C^3 ramp from 0 to 1 on [0, 1], clamped outside."""
    t = np.clip(t, 0.0, 1.0)
    return t**4 * (35 - 84 * t + 70 * t**2 - 20 * t**3)


def sigma0(xi):
    """1-D base window supported in [-1, 1], symmetric, ``sigma0(0) = 1``."""
    return smoothstep(1.0 - np.abs(xi))


def bracket(k) -> np.ndarray:
    """Japanese bracket ``(1 + |k|^2)^(1/2)``."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    return np.sqrt(1.0 + np.sum(k**2, axis=-1))


@dataclass(frozen=True)
class WindowFamily:
    """Integer translates ``sigma_k(xi) = sigma0(xi - k)`` in dimension ``d``."""

    d: int = 1

    def axis_window(self, xi: np.ndarray, k: int) -> np.ndarray:
        return sigma0(xi - k)

    def window(self, grid: Grid, k: Sequence[int]) -> np.ndarray:
        """Window values ``sigma_k`` on the frequency lattice of ``grid``."""
        k = tuple(np.atleast_1d(k))
        if len(k) != grid.d:
            raise ValueError(f"window index {k} has wrong dimension for d={grid.d}")
        out = np.ones(grid.shape)
        for xi, kk in zip(grid.freqs, k):
            out = out * self.axis_window(xi, kk)
        return out

    def axis_range(self, grid: Grid) -> range:
        """Integer translates needed to cover the full frequency lattice."""
        kmax = int(math.ceil(grid.nyquist)) + 1
        return range(-kmax, kmax + 1)


@dataclass(frozen=True)
class ModNormSpec:
    """Parameters ``(s, p, q)`` of the modulation norm ``M^s_{p,q}``."""

    s: float = 0.0
    p: float = 2.0
    q: float = 2.0

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not v >= 1:
                raise ValueError(f"{name} must lie in [1, inf], got {v}")


def partition_residual(grid: Grid, windows: WindowFamily | None = None) -> float:
    """Largest ``|sum_k sigma_k - 1|`` over the frequency lattice."""
    windows = windows or WindowFamily(grid.d)
    total = np.zeros_like(grid.xi1)
    for k in windows.axis_range(grid):
        total += windows.axis_window(grid.xi1, k)
    if grid.d == 2:
        total = np.multiply.outer(total, total)
    return float(np.max(np.abs(total - 1.0)))


def _active_boxes(f: Field, windows: WindowFamily, rel_tol: float):
    """Yield ``(k, axis index arrays, window pieces)`` for boxes meeting the spectrum."""
    g = f.grid
    spec = f.spectrum
    amax = float(np.max(np.abs(spec))) if spec.size else 0.0
    if amax == 0.0:
        return
    xi = g.xi1
    per_axis = []
    for k in windows.axis_range(g):
        idx = np.nonzero(np.abs(xi - k) < 1.0)[0]
        if idx.size == 0:
            continue
        idx = idx[np.argsort(xi[idx])]
        per_axis.append((k, idx, windows.axis_window(xi[idx], k)))
    for combo in itertools.product(per_axis, repeat=g.d):
        ks = tuple(c[0] for c in combo)
        idxs = [c[1] for c in combo]
        win = combo[0][2]
        for c in combo[1:]:
            win = np.multiply.outer(win, c[2])
        block = spec[np.ix_(*idxs)] * win
        if np.max(np.abs(block)) <= rel_tol * amax:
            continue
        yield ks, idxs, block


def _guard(f: Field, check: bool) -> None:
    if check:
        f.check_band_limited()


def box_decompose(
    f: Field,
    windows: WindowFamily | None = None,
    rel_tol: float = 1e-14,
    check: bool = True,
) -> dict[tuple[int, ...], Field]:
    """Split ``f`` into the pieces ``Box_k f`` with spectra ``sigma_k * fhat``.

    Components whose spectral sup is below ``rel_tol`` times the sup of the
    full spectrum are omitted, so the map is sparse. Keys are integer tuples
    in lexicographic order.

    Raises
    ------
    ValueError
        If the spectrum of ``f`` is not negligible above half-Nyquist.
    """
    windows = windows or WindowFamily(f.grid.d)
    _guard(f, check)
    out = {}
    g = f.grid
    for ks, idxs, block in _active_boxes(f, windows, rel_tol):
        spec = np.zeros(g.shape, dtype=np.complex128)
        spec[np.ix_(*idxs)] = block
        out[ks] = Field.from_spectrum(g, spec)
    return out


def _next_pow2(m: int) -> int:
    return 1 << max(3, int(math.ceil(math.log2(max(m, 1)))))


def _box_lp_fast(g: Grid, idxs, block: np.ndarray, p: float, oversample: int) -> float:
    """L^p norm of one box component from its spectral block alone.

    The block occupies consecutive lattice bins; shifting them to baseband
    only multiplies the physical samples by a unimodular factor, so the
    component can be sampled on a coarser grid covering the same box.
    """
    if np.isinf(p):
        # grid maxima need the original sample spacing to agree with the full path
        m = (g.n,) * g.d
    else:
        m = tuple(min(g.n, _next_pow2(oversample * len(ix))) for ix in idxs)
    arr = np.zeros(m, dtype=np.complex128)
    # place bins at offsets 0..len-1 relative to the first bin of each axis
    arr[tuple(slice(0, len(ix)) for ix in idxs)] = block
    if g.d == 1:
        vals = np.fft.ifft(arr) * m[0]
    else:
        vals = np.fft.ifft2(arr) * (m[0] * m[1])
    a = np.abs(vals) / np.sqrt(g.n**g.d)
    if np.isinf(p):
        return float(a.max())
    cell = float(np.prod([g.L / mm for mm in m]))
    return float((np.sum(a**p) * cell) ** (1.0 / p))


def _box_norms(
    f: Field, p: float, windows: WindowFamily, method: str, rel_tol: float, oversample: int
) -> tuple[list[tuple[int, ...]], np.ndarray]:
    keys, vals = [], []
    g = f.grid
    if method == "full":
        for k, comp in box_decompose(f, windows, rel_tol, check=False).items():
            keys.append(k)
            vals.append(lp_norm(comp, p))
    elif method == "fast":
        for ks, idxs, block in _active_boxes(f, windows, rel_tol):
            keys.append(ks)
            vals.append(_box_lp_fast(g, idxs, block, p, oversample))
    else:
        raise ValueError(f"unknown method {method!r}")
    return keys, np.asarray(vals, dtype=float)


def _combine(keys, vals: np.ndarray, s: float, q: float) -> float:
    if not keys:
        return 0.0
    w = bracket(np.asarray(keys, dtype=float)) ** s * vals
    if np.isinf(q):
        return float(w.max())
    return float(np.sum(w**q) ** (1.0 / q))


def modulation_norm(
    f: Field,
    spec: ModNormSpec,
    windows: WindowFamily | None = None,
    method: str = "fast",
    rel_tol: float = 1e-14,
    oversample: int = 16,
    check: bool = True,
) -> float:
    """``(sum_k <k>^{qs} ||Box_k f||_p^q)^{1/q}`` (a supremum when q is infinite).

    Parameters
    ----------
    method : {"fast", "full"}
        ``"full"`` synthesises every component on the original grid.
        ``"fast"`` evaluates each component on a reduced grid sized to the
        bins it occupies (``oversample`` samples per bin); both agree to
        quadrature accuracy and the fast path is the default.
    """
    windows = windows or WindowFamily(f.grid.d)
    _guard(f, check)
    keys, vals = _box_norms(f, spec.p, windows, method, rel_tol, oversample)
    return _combine(keys, vals, spec.s, spec.q)


def modulation_norms(
    f: Field,
    specs: Iterable[ModNormSpec],
    windows: WindowFamily | None = None,
    method: str = "fast",
    check: bool = True,
) -> list[float]:
    """Several modulation norms of one field, sharing the per-box L^p norms."""
    windows = windows or WindowFamily(f.grid.d)
    _guard(f, check)
    cache: dict[float, tuple] = {}
    out = []
    for sp in specs:
        if sp.p not in cache:
            cache[sp.p] = _box_norms(f, sp.p, windows, method, 1e-14, 16)
        out.append(_combine(*cache[sp.p], sp.s, sp.q))
    return out


def sobolev_lp_norm(f: Field, alpha: float, p: float) -> float:
    """``|| <D>^alpha f ||_p`` with ``<D>^alpha`` the multiplier ``(1+|xi|^2)^{alpha/2}``."""
    if alpha == 0:
        return lp_norm(f, p)
    mult = (1.0 + f.grid.xi_abs2) ** (alpha / 2)
    return lp_norm(f.with_spectrum_multiplier(mult), p)


# --------------------------------------------------------------------------
# embedding checks


def _conj(p: float) -> float:
    if p == 1:
        return np.inf
    if np.isinf(p):
        return 1.0
    return p / (p - 1)


@dataclass
class EmbeddingReport:
    """Worst observed constant per inequality ``lhs <= C * rhs``."""

    budget: float
    worst: dict[str, float] = field(default_factory=dict)
    worst_field: dict[str, int] = field(default_factory=dict)
    violations: list[tuple[str, int, float]] = field(default_factory=list)

    def record(self, name: str, idx: int, ratio: float) -> None:
        if ratio > self.worst.get(name, -np.inf):
            self.worst[name] = ratio
            self.worst_field[name] = idx
        if ratio > self.budget:
            self.violations.append((name, idx, ratio))

    @property
    def ok(self) -> bool:
        return not self.violations


DEFAULT_EMBEDDINGS = {
    # M^s_{p,q2} <= C M^s_{p,q1} for q1 <= q2
    "q-monotone (p=4, q1=1, q2=2)": ("q", dict(p=4, q1=1, q2=2, s=0.0)),
    "q-monotone (p=2, q1=2, q2=inf)": ("q", dict(p=2, q1=2, q2=np.inf, s=0.5)),
    # M^s_{p2,q} <= C M^s_{p1,q} for p1 <= p2
    "p-monotone (p1=2, p2=4, q=2)": ("p", dict(p1=2, p2=4, q=2, s=0.0)),
    "p-monotone (p1=1, p2=inf, q=1)": ("p", dict(p1=1, p2=np.inf, q=1, s=0.0)),
    # M_{p,p} <= C L^p <= C^2 M_{p,p'} for p >= 2
    "L^p <= M_{p,p'} (p=4)": ("lp_upper", dict(p=4)),
    "M_{p,p} <= L^p (p=4)": ("lp_lower", dict(p=4)),
    "L^p <= M_{p,p'} (p=inf)": ("lp_upper", dict(p=np.inf)),
    # M^{s2}_{p,q2} <= C M^{s1}_{p,q1} when s1 - s2 > d(1/q2 - 1/q1) > 0
    "trade (s1=1, q1=2 -> s2=0, q2=1)": ("trade", dict(p=2, s1=1.0, q1=2, s2=0.0, q2=1)),
}


def check_embeddings(
    testset: Sequence[Field],
    windows: WindowFamily | None = None,
    checks: dict | None = None,
    budget: float = 10.0,
) -> EmbeddingReport:
    """Evaluate the standard modulation-space embeddings on every field.

    Each inequality is recorded as the ratio ``lhs / rhs``; the report
    keeps the worst ratio, the index of the field attaining it, and flags
    every ratio exceeding ``budget``.
    """
    if not testset:
        raise ValueError("testset must be nonempty")
    checks = DEFAULT_EMBEDDINGS if checks is None else checks
    rep = EmbeddingReport(budget=budget)
    for i, f in enumerate(testset):
        windows_f = windows or WindowFamily(f.grid.d)
        d = f.grid.d
        for name, (kind, a) in checks.items():
            if kind == "q":
                lhs, rhs = modulation_norms(
                    f, [ModNormSpec(a["s"], a["p"], a["q2"]), ModNormSpec(a["s"], a["p"], a["q1"])], windows_f
                )
            elif kind == "p":
                lhs = modulation_norm(f, ModNormSpec(a["s"], a["p2"], a["q"]), windows_f)
                rhs = modulation_norm(f, ModNormSpec(a["s"], a["p1"], a["q"]), windows_f)
            elif kind == "lp_upper":
                lhs = lp_norm(f, a["p"])
                rhs = modulation_norm(f, ModNormSpec(0.0, a["p"], _conj(a["p"])), windows_f)
            elif kind == "lp_lower":
                lhs = modulation_norm(f, ModNormSpec(0.0, a["p"], a["p"]), windows_f)
                rhs = lp_norm(f, a["p"])
            elif kind == "trade":
                gap = d * (1 / a["q2"] - 1 / a["q1"])
                if not (a["s1"] - a["s2"] > gap > 0):
                    raise ValueError(f"{name}: regularity gap condition fails for d={d}")
                lhs, rhs = modulation_norms(
                    f, [ModNormSpec(a["s2"], a["p"], a["q2"]), ModNormSpec(a["s1"], a["p"], a["q1"])], windows_f
                )
            else:
                raise ValueError(f"unknown embedding kind {kind!r}")
            ratio = 0.0 if lhs == 0 else lhs / rhs
            rep.record(name, i, ratio)
    return rep


def product_norm_check(
    f1: Field,
    f2: Field,
    s: float,
    p: float,
    p1: float,
    p2: float,
    windows: WindowFamily | None = None,
) -> float:
    """Ratio ``||f1 f2||_{M^s_{p,1}} / (||f1||_{M^s_{p1,1}} ||f2||_{M^s_{p2,1}})``."""
    if s < 0:
        raise ValueError("regularity must be nonnegative")
    if not math.isclose(1 / p, 1 / p1 + 1 / p2, rel_tol=1e-12, abs_tol=1e-12):
        raise ValueError(f"Hoelder exponents inconsistent: 1/{p} != 1/{p1} + 1/{p2}")
    if f1.grid != f2.grid:
        raise ValueError("fields live on different grids")
    prod = Field(f1.grid, f1.samples * f2.samples)
    num = modulation_norm(prod, ModNormSpec(s, p, 1), windows)
    if num == 0.0:
        return 0.0
    den = modulation_norm(f1, ModNormSpec(s, p1, 1), windows) * modulation_norm(f2, ModNormSpec(s, p2, 1), windows)
    return num / den
