"""Variable-coefficient phase functions and their derivative oracles.

A phase ``phi(t, x; xi)`` lives on ``Z x Xi`` with ``Z`` the unit ball of
``R^{d+1}`` (coordinates ``z = (t, x)``) and ``Xi`` the unit ball of
``R^d``. Derivatives are requested by multi-index: ``z_order`` has
``d + 1`` entries ``(t, x_1, ..., x_d)`` and ``beta`` has ``d`` entries.

Three kinds of phase are provided. :class:`SymbolicPhase` differentiates a
sympy expression exactly to any order. :class:`CallablePhase` wraps a plain
function and uses central differences, so it is limited to second order.
:class:`RescaledPhase` is the output of :func:`parabolic_rescale`; its
frequency derivatives are exact (inherited from the parent) and its
positional derivatives, at most two, are central differences.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import sympy as sp
from scipy.stats import qmc

from displab.modspace import smoothstep

__all__ = [
    "Amplitude",
    "PhaseSpec",
    "SymbolicPhase",
    "CallablePhase",
    "RescaledPhase",
    "PhaseOrderError",
    "NewtonError",
    "signature_matrix",
    "phi_par",
    "phi_hyp",
    "phi_perturbed",
    "builtin_phase",
    "sample_domain",
    "ConditionResult",
    "PhaseReport",
    "verify_phase_conditions",
    "solve_Phi",
    "solve_Psi",
    "parabolic_rescale",
    "rescaling_contraction",
]

FD_STEP = 1e-4
NEWTON_TOL = 1e-12
NEWTON_MAXIT = 50


class PhaseOrderError(ValueError):
    """A derivative was requested beyond what the oracle can supply."""


class NewtonError(RuntimeError):
    """Damped Newton iteration failed to converge."""


def signature_matrix(d: int, k: int) -> np.ndarray:
    """``I^k_d``: identity with the last ``k`` diagonal entries equal to -1."""
    if not 0 <= k <= d:
        raise ValueError("need 0 <= k <= d")
    return np.diag([1.0] * (d - k) + [-1.0] * k)


def _bump(r: np.ndarray, flat: float, support: float) -> np.ndarray:
    """Radial bump: one for ``r <= flat``, zero for ``r >= support``."""
    return smoothstep((support - r) / (support - flat))


@dataclass(frozen=True)
class Amplitude:
    """Product amplitude ``a(z; xi) = a1(z) a2(xi)`` built from radial bumps."""

    z_flat: float = 0.5
    z_support: float = 0.75
    xi_flat: float = 0.75
    xi_support: float = 1.0

    def __post_init__(self):
        if not (0 < self.z_flat < self.z_support <= 1):
            raise ValueError("need 0 < z_flat < z_support <= 1")
        if not (0 < self.xi_flat < self.xi_support <= 1):
            raise ValueError("need 0 < xi_flat < xi_support <= 1")

    def a1(self, z: np.ndarray) -> np.ndarray:
        return _bump(np.linalg.norm(z, axis=-1), self.z_flat, self.z_support)

    def a2(self, xi: np.ndarray) -> np.ndarray:
        return _bump(np.linalg.norm(xi, axis=-1), self.xi_flat, self.xi_support)


# --------------------------------------------------------------------------
# phase classes


def _as_points(t, x, xi, d: int):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x = np.asarray(x, dtype=float).reshape(-1, d)
    xi = np.asarray(xi, dtype=float).reshape(-1, d)
    m = max(len(t), len(x), len(xi))
    return np.broadcast_to(t, (m,)), np.broadcast_to(x, (m, d)), np.broadcast_to(xi, (m, d))


class PhaseSpec:
    """Base class: evaluation plus multi-index derivative oracles.

    Subclasses implement ``_raw(z_order, beta)`` returning a function of
    ``(t, x, xi)`` with shapes ``(m,), (m, d), (m, d)``.
    """

    max_z_order: int | None = None
    max_xi_order: int | None = None

    def __init__(self, d: int, k: int = 0, amplitude: Amplitude | None = None, name: str = "phase"):
        if d not in (1, 2):
            raise ValueError("d must be 1 or 2")
        if not 0 <= k <= d / 2:
            raise ValueError(f"signature must satisfy 0 <= k <= d/2, got {k}")
        self.d = d
        self.k = k
        self.amplitude = amplitude or Amplitude()
        self.name = name

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r}, d={self.d}, k={self.k})"

    def _check_order(self, z_order, beta) -> None:
        nz, nb = sum(z_order), sum(beta)
        if self.max_z_order is not None and nz > self.max_z_order:
            raise PhaseOrderError(f"{self.name}: positional order {nz} exceeds {self.max_z_order}")
        if self.max_xi_order is not None and nb > self.max_xi_order:
            raise PhaseOrderError(f"{self.name}: frequency order {nb} exceeds {self.max_xi_order}")

    def is_zero(self, z_order, beta) -> bool:
        """True when the derivative is known to vanish identically."""
        return False

    def deriv(self, z_order=None, beta=None) -> Callable:
        z_order = tuple(z_order) if z_order is not None else (0,) * (self.d + 1)
        beta = tuple(beta) if beta is not None else (0,) * self.d
        if len(z_order) != self.d + 1 or len(beta) != self.d:
            raise ValueError("z_order needs d+1 entries and beta needs d entries")
        self._check_order(z_order, beta)
        raw = self._raw(z_order, beta)
        d = self.d

        def fn(t, x, xi):
            t, x, xi = _as_points(t, x, xi, d)
            return np.broadcast_to(np.asarray(raw(t, x, xi), dtype=float), t.shape)

        return fn

    def __call__(self, t, x, xi) -> np.ndarray:
        return self.deriv()(t, x, xi)

    # helpers used throughout
    def grad_xi(self, t, x, xi, z_order=None) -> np.ndarray:
        z_order = z_order or (0,) * (self.d + 1)
        cols = [self.deriv(z_order, _unit(self.d, j))(t, x, xi) for j in range(self.d)]
        return np.stack(cols, axis=-1)

    def grad_x(self, t, x, xi) -> np.ndarray:
        cols = [self.deriv(_unit(self.d + 1, 1 + j), None)(t, x, xi) for j in range(self.d)]
        return np.stack(cols, axis=-1)

    def mixed_x_xi(self, t, x, xi) -> np.ndarray:
        """Matrix ``[i, j] = d_{x_i} d_{xi_j} phi`` with shape ``(m, d, d)``."""
        d = self.d
        m = len(_as_points(t, x, xi, d)[0])
        out = np.empty((m, d, d))
        for i in range(d):
            for j in range(d):
                out[:, i, j] = self.deriv(_unit(d + 1, 1 + i), _unit(d, j))(t, x, xi)
        return out

    def hess_xi(self, t, x, xi, z_order=None) -> np.ndarray:
        d = self.d
        z_order = z_order or (0,) * (d + 1)
        m = len(_as_points(t, x, xi, d)[0])
        out = np.empty((m, d, d))
        for i in range(d):
            for j in range(i, d):
                b = [0] * d
                b[i] += 1
                b[j] += 1
                out[:, i, j] = out[:, j, i] = self.deriv(z_order, b)(t, x, xi)
        return out


def _unit(n: int, i: int) -> tuple[int, ...]:
    e = [0] * n
    e[i] = 1
    return tuple(e)


class SymbolicPhase(PhaseSpec):
    """Phase given by a sympy expression in ``t, x1..xd, xi1..xid``."""

    def __init__(self, expr, d: int, k: int = 0, amplitude: Amplitude | None = None, name: str = "symbolic"):
        super().__init__(d, k, amplitude, name)
        self.t = sp.Symbol("t", real=True)
        self.x = sp.symbols(f"x1:{d + 1}", real=True)
        self.xi = sp.symbols(f"xi1:{d + 1}", real=True)
        if isinstance(expr, str):
            loc = {"t": self.t, **{str(s): s for s in self.x + self.xi}}
            expr = sp.sympify(expr, locals=loc)
        self.expr = sp.expand(expr)
        self._cache: dict = {}

    def _expr(self, z_order, beta):
        key = (z_order, beta)
        if key not in self._cache:
            zs = (self.t,) + tuple(self.x)
            args = [a for s, n in zip(zs + tuple(self.xi), z_order + beta) for a in [s] * n]
            self._cache[key] = sp.diff(self.expr, *args) if args else self.expr
        return self._cache[key]

    def is_zero(self, z_order, beta) -> bool:
        return self._expr(tuple(z_order), tuple(beta)) == 0

    def _raw(self, z_order, beta):
        e = self._expr(z_order, beta)
        f = sp.lambdify((self.t,) + tuple(self.x) + tuple(self.xi), e, "numpy")
        d = self.d
        return lambda t, x, xi: f(t, *(x[:, i] for i in range(d)), *(xi[:, i] for i in range(d)))


def _fd_weights(order: int):
    """Central-difference stencil ``(offsets, weights)`` in units of the step."""
    if order == 0:
        return (0,), (1.0,)
    if order == 1:
        return (-1, 1), (-0.5, 0.5)
    if order == 2:
        return (-1, 0, 1), (1.0, -2.0, 1.0)
    raise PhaseOrderError(f"finite differences are limited to order 2 per variable, got {order}")


def _fd_z(base: Callable, z_order, step: float, d: int) -> Callable:
    """Positional derivative of ``base(t, x, xi)`` by tensor central differences."""
    if sum(z_order) > 2:
        raise PhaseOrderError(f"positional order {sum(z_order)} exceeds the finite-difference limit 2")
    stencils = [_fd_weights(o) for o in z_order]

    def fn(t, x, xi):
        acc = 0.0
        for combo in itertools.product(*[list(zip(*s)) for s in stencils]):
            shift = np.array([c[0] for c in combo], dtype=float) * step
            w = math.prod(c[1] for c in combo)
            acc = acc + w * base(t + shift[0], x + shift[1:], xi)
        return acc / step ** sum(z_order)

    return fn


class CallablePhase(PhaseSpec):
    """Phase given as a plain function ``phi(t, x, xi)``.

    All derivatives are central differences with step ``1e-4``; the total
    order is limited to two.
    """

    max_z_order = 2

    def __init__(self, func: Callable, d: int, k: int = 0, amplitude: Amplitude | None = None,
                 name: str = "callable", step: float = FD_STEP):
        super().__init__(d, k, amplitude, name)
        self.func = func
        self.step = step

    def _check_order(self, z_order, beta) -> None:
        if sum(z_order) + sum(beta) > 2:
            raise PhaseOrderError(
                f"{self.name}: derivative d_z^{list(z_order)} d_xi^{list(beta)} has total order "
                f"{sum(z_order) + sum(beta)} > 2 (finite-difference oracle)"
            )

    def _raw(self, z_order, beta):
        h, d = self.step, self.d

        def xi_part(t, x, xi):
            acc = 0.0
            stencils = [_fd_weights(o) for o in beta]
            for combo in itertools.product(*[list(zip(*s)) for s in stencils]):
                shift = np.array([c[0] for c in combo], dtype=float) * h
                acc = acc + math.prod(c[1] for c in combo) * self.func(t, x, xi + shift)
            return acc / h ** sum(beta)

        return _fd_z(xi_part, z_order, h, d)


# --------------------------------------------------------------------------
# built-in phases


def _syms(d):
    t = sp.Symbol("t", real=True)
    x = sp.symbols(f"x1:{d + 1}", real=True)
    xi = sp.symbols(f"xi1:{d + 1}", real=True)
    return t, x, xi


def phi_par(d: int = 1, amplitude: Amplitude | None = None) -> SymbolicPhase:
    """``<x, xi> + t |xi|^2 / 2``."""
    t, x, xi = _syms(d)
    expr = sum(a * b for a, b in zip(x, xi)) + t * sum(s**2 for s in xi) / 2
    return SymbolicPhase(expr, d, 0, amplitude, name="par")


def phi_hyp(d: int = 2, k: int = 1, amplitude: Amplitude | None = None) -> SymbolicPhase:
    """``<x, xi> + t <xi, I^k_d xi> / 2``."""
    t, x, xi = _syms(d)
    sig = np.diag(signature_matrix(d, k))
    expr = sum(a * b for a, b in zip(x, xi)) + t * sum(int(s) * v**2 for s, v in zip(sig, xi)) / 2
    return SymbolicPhase(expr, d, k, amplitude, name=f"hyp{k}")


def phi_perturbed(eps: float, d: int = 1, amplitude: Amplitude | None = None) -> SymbolicPhase:
    """``phi_par + eps t^2 x_1 |xi|^2``, quadratic in ``(t, x)`` and in ``xi``."""
    t, x, xi = _syms(d)
    base = sum(a * b for a, b in zip(x, xi)) + t * sum(s**2 for s in xi) / 2
    expr = base + sp.Float(eps) * t**2 * x[0] * sum(s**2 for s in xi)
    return SymbolicPhase(expr, d, 0, amplitude, name=f"perturbed({eps:g})")


def builtin_phase(name: str, d: int = 1, **params) -> SymbolicPhase:
    """Look up a built-in phase by config name: ``par``, ``hyp`` or ``perturbed``."""
    if name == "par":
        return phi_par(d)
    if name == "hyp":
        return phi_hyp(d, int(params.get("k", 1)))
    if name == "perturbed":
        return phi_perturbed(float(params.get("eps", 0.01)), d)
    raise ValueError(f"unknown built-in phase {name!r}")


# --------------------------------------------------------------------------
# condition checks


def sample_domain(d: int, n: int = 1024, seed: int = 0, z_radius: float = 1.0, xi_radius: float = 1.0):
    """Scrambled Sobol points in ``B^{d+1}(0, z_radius) x B^d(0, xi_radius)``.

    Returns ``(t, x, xi)`` with about ``n`` points (the cube sample is
    filtered to the product of balls).
    """
    dim = 2 * d + 1
    sampler = qmc.Sobol(dim, scramble=True, seed=seed)
    m = int(math.ceil(math.log2(4 * n)))
    u = 2 * sampler.random_base2(m) - 1
    z = u[:, : d + 1] * z_radius
    xi = u[:, d + 1 :] * xi_radius
    keep = (np.linalg.norm(u[:, : d + 1], axis=1) <= 1) & (np.linalg.norm(u[:, d + 1 :], axis=1) <= 1)
    z, xi = z[keep][:n], xi[keep][:n]
    return z[:, 0], z[:, 1:], xi


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    value: float
    bound: float
    worst_point: tuple | None = None
    missing: tuple[str, ...] = ()

    @property
    def margin(self) -> float:
        return self.bound - self.value


@dataclass
class PhaseReport:
    phase: str
    c_par: float
    A: float
    N: int
    results: dict = field(default_factory=dict)

    def add(self, res: ConditionResult) -> None:
        self.results[res.name] = res

    def __getitem__(self, name: str) -> ConditionResult:
        return self.results[name]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def deviations(self) -> dict:
        return {k: r.value for k, r in self.results.items()}


def _multi_indices(d: int, lo: int, hi: int):
    for order in range(lo, hi + 1):
        for b in itertools.product(range(order + 1), repeat=d):
            if sum(b) == order:
                yield b


def _sup_over(phase: PhaseSpec, pairs, pts):
    """Max of ``|d_z^g d_xi^b phi|`` over the sample and the listed orders.

    Returns ``(value, index, missing)``; derivatives the oracle cannot
    supply are listed in ``missing``.
    """
    t, x, xi = pts
    best, where, missing = 0.0, None, []
    for g, b in pairs:
        if phase.is_zero(g, b):
            continue
        try:
            vals = np.abs(phase.deriv(g, b)(t, x, xi))
        except PhaseOrderError:
            missing.append(f"d_z^{list(g)} d_xi^{list(b)}")
            continue
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, where = float(vals[i]), i
    return best, where, missing


def _point(pts, i):
    if i is None:
        return None
    t, x, xi = pts
    return (float(t[i]), tuple(map(float, x[i])), tuple(map(float, xi[i])))


def verify_phase_conditions(
    phase: PhaseSpec,
    c_par: float = 0.1,
    A: float = 1.0,
    N: int = 12,
    k: int | None = None,
    n_samples: int = 1024,
    seed: int = 0,
) -> PhaseReport:
    """Sample the normalisation conditions on ``Z x Xi``.

    Conditions, each reported with its worst sample point:

    ``H1``      ``|d_x d_xi phi - I| <= c_par`` (operator norm);
    ``H2[k]``   ``|d_t d_xi^2 phi - I^k| <= c_par``;
    ``D1_x``    ``|d_x d_xi^beta phi| <= c_par`` for ``2 <= |beta| <= N``;
    ``D1_t``    ``|d_t d_xi^beta phi| <= c_par`` for ``3 <= |beta| <= N``;
    ``D2``      ``|d_z^2 d_xi^beta phi| <= c_par A / (100 d)`` for ``1 <= |beta| <= 2N``;
    ``margin``  ``dist(supp a1, complement of Z) >= 1/(4A)``;
    ``grad_t``  ``|d_t grad_xi phi| <= 2 |xi|``.

    A derivative the oracle cannot supply fails its condition and is named
    in ``ConditionResult.missing``.
    """
    d = phase.d
    k = phase.k if k is None else k
    pts = sample_domain(d, n_samples, seed)
    t, x, xi = pts
    rep = PhaseReport(phase.name, c_par, A, N)
    zt = _unit(d + 1, 0)

    def matrix_condition(name, fn_matrix, target):
        try:
            mats = fn_matrix()
        except PhaseOrderError as exc:
            rep.add(ConditionResult(name, False, math.inf, c_par, None, (str(exc),)))
            return
        dev = np.linalg.norm(mats - target, ord=2, axis=(1, 2))
        i = int(np.argmax(dev))
        rep.add(ConditionResult(name, bool(dev[i] <= c_par), float(dev[i]), c_par, _point(pts, i)))

    matrix_condition("H1", lambda: phase.mixed_x_xi(t, x, xi), np.eye(d))
    matrix_condition(f"H2[{k}]", lambda: phase.hess_xi(t, x, xi, zt), signature_matrix(d, k))

    def sup_condition(name, pairs, bound):
        val, i, missing = _sup_over(phase, list(pairs), pts)
        ok = val <= bound and not missing
        rep.add(ConditionResult(name, bool(ok), val, bound, _point(pts, i), tuple(missing)))

    xs = [_unit(d + 1, 1 + j) for j in range(d)]
    sup_condition("D1_x", ((g, b) for b in _multi_indices(d, 2, N) for g in xs), c_par)
    sup_condition("D1_t", ((zt, b) for b in _multi_indices(d, 3, N)), c_par)
    second = [g for g in _multi_indices(d + 1, 2, 2)]
    sup_condition("D2", ((g, b) for b in _multi_indices(d, 1, 2 * N) for g in second), c_par * A / (100 * d))

    gap = 1.0 - phase.amplitude.z_support
    rep.add(ConditionResult("margin", bool(gap >= 1 / (4 * A)), 1 / (4 * A), gap))

    try:
        g = np.linalg.norm(phase.grad_xi(t, x, xi, zt), axis=-1)
        excess = g - 2 * np.linalg.norm(xi, axis=-1)
        i = int(np.argmax(excess))
        rep.add(ConditionResult("grad_t", bool(excess[i] <= 1e-12), float(excess[i]), 0.0, _point(pts, i)))
    except PhaseOrderError as exc:
        rep.add(ConditionResult("grad_t", False, math.inf, 0.0, None, (str(exc),)))
    return rep


# --------------------------------------------------------------------------
# implicit maps


def _newton(residual: Callable, jacobian: Callable, y0: np.ndarray, what: str) -> np.ndarray:
    """Vectorised damped Newton: halve the step while the residual grows."""
    y = y0.copy()
    r = residual(y)
    norm = np.linalg.norm(r, axis=-1)
    for _ in range(NEWTON_MAXIT):
        if np.all(norm < NEWTON_TOL):
            # one extra step pushes the residual to rounding level
            y = y - np.linalg.solve(jacobian(y), r[..., None])[..., 0]
            return y
        step = np.linalg.solve(jacobian(y), r[..., None])[..., 0]
        lam = np.ones(len(y))
        for _ in range(30):
            trial = y - lam[:, None] * step
            rt = residual(trial)
            nt = np.linalg.norm(rt, axis=-1)
            worse = nt > norm
            if not np.any(worse):
                break
            lam = np.where(worse, lam / 2, lam)
        y, r, norm = trial, rt, nt
    raise NewtonError(f"{what}: Newton did not converge in {NEWTON_MAXIT} iterations, residual {norm.max():.3e}")


def solve_Phi(phase: PhaseSpec, t, x, xi) -> np.ndarray:
    """Solve ``d_xi phi(t, X; xi) = x`` for ``X`` by damped Newton.

    The start is the quadratic closed form ``X = x - t I^k xi``.
    """
    d = phase.d
    t, x, xi = (np.array(a) for a in _as_points(t, x, xi, d))
    sig = signature_matrix(d, phase.k)
    X0 = x - t[:, None] * (xi @ sig)

    def res(X):
        return phase.grad_xi(t, X, xi) - x

    def jac(X):
        # row i of d/dX [d_xi_i phi] is d_{x_j} d_{xi_i} phi: the transpose of mixed_x_xi
        return np.swapaxes(phase.mixed_x_xi(t, X, xi), 1, 2)

    return _newton(res, jac, X0, "Phi")


def solve_Psi(phase: PhaseSpec, t, x, xi) -> np.ndarray:
    """Solve ``d_x phi(t, x; Psi) = xi`` for ``Psi`` by damped Newton, starting at ``xi``."""
    d = phase.d
    t, x, xi = (np.array(a) for a in _as_points(t, x, xi, d))

    def res(P):
        return phase.grad_x(t, x, P) - xi

    def jac(P):
        return phase.mixed_x_xi(t, x, P)

    return _newton(res, jac, xi.copy(), "Psi")


# --------------------------------------------------------------------------
# parabolic rescaling

_GL_R, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_R = 0.5 * (_GL_R + 1)
_GL_W = 0.5 * _GL_W


class RescaledPhase(PhaseSpec):
    """Phase of the cap ``xi0 + B(0, 1/rho)`` rescaled to unit size.

    With ``X = Phi(t, x / rho; xi0)``,

        phi~(t, x; xi) = <x, xi> + int_0^1 (1 - r) <d_xi^2 phi(t, X; xi0 + r xi / rho) xi, xi> dr,

    evaluated with 8-node Gauss-Legendre quadrature in ``r``. Frequency
    derivatives of order ``|beta| >= 2`` are the exact parent derivatives
    ``rho^{2 - |beta|} d_xi^beta phi(t, X; xi0 + xi / rho)``; positional
    derivatives (order at most two) are central differences.
    """

    max_z_order = 2

    def __init__(self, parent: PhaseSpec, xi0, rho: float, step: float = FD_STEP):
        super().__init__(parent.d, parent.k, parent.amplitude, name=f"{parent.name}~(rho={rho:g})")
        self.parent = parent
        self.xi0 = np.asarray(xi0, dtype=float).reshape(parent.d)
        self.rho = float(rho)
        self.step = step
        self.max_xi_order = parent.max_xi_order

    def X(self, t, x) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x = np.asarray(x, dtype=float).reshape(-1, self.d)
        return solve_Phi(self.parent, t, x / self.rho, self.xi0[None, :])

    def is_zero(self, z_order, beta) -> bool:
        if sum(beta) >= 2:
            return self.parent.is_zero((0,) * (self.d + 1), beta)
        return False

    def _xi_value(self, beta):
        """Exact frequency derivative at zero positional order."""
        d, rho, xi0, par = self.d, self.rho, self.xi0, self.parent
        nb = sum(beta)
        zero_z = (0,) * (d + 1)
        if nb == 0:
            hess = [[par.deriv(zero_z, tuple(int(i == a) + int(j == a) for a in range(d)))
                     for j in range(d)] for i in range(d)]

            def value(t, x, xi):
                X = self.X(t, x)
                out = np.sum(x * xi, axis=-1)
                for r, w in zip(_GL_R, _GL_W):
                    arg = xi0 + r * xi / rho
                    quad = sum(hess[i][j](t, X, arg) * xi[:, i] * xi[:, j] for i in range(d) for j in range(d))
                    out = out + w * (1 - r) * quad
                return out

            return value
        f = par.deriv(zero_z, beta)
        if nb == 1:
            j = beta.index(1)

            def first(t, x, xi):
                X = self.X(t, x)
                return x[:, j] + rho * (f(t, X, xi0 + xi / rho) - f(t, X, np.broadcast_to(xi0, xi.shape)))

            return first

        def higher(t, x, xi):
            return rho ** (2 - nb) * f(t, self.X(t, x), xi0 + xi / rho)

        return higher

    def _raw(self, z_order, beta):
        base = self._xi_value(beta)
        if sum(z_order) == 0:
            return base
        return _fd_z(base, z_order, self.step, self.d)


def parabolic_rescale(phase: PhaseSpec, xi0, rho: float) -> RescaledPhase:
    """Rescale the cap ``xi0 + rho^{-1} B`` to unit size.

    Raises
    ------
    ValueError
        If ``rho < 4`` or the cap leaves the unit frequency ball.
    NewtonError
        If the implicit map ``Phi`` cannot be solved on a probe sample.
    """
    if rho < 4:
        raise ValueError(f"rho must be at least 4, got {rho}")
    xi0 = np.asarray(xi0, dtype=float).reshape(phase.d)
    if np.linalg.norm(xi0) + 1 / rho > 1 + 1e-12:
        raise ValueError("the cap xi0 + B(0, 1/rho) must lie inside the unit ball")
    out = RescaledPhase(phase, xi0, rho)
    t, x, _ = sample_domain(phase.d, 64, seed=1)
    out.X(t, x)  # surfaces Newton failures at construction time
    return out


def rescaling_contraction(phase: PhaseSpec, rho: float, xi0=None, n_samples: int = 512, seed: int = 0) -> float:
    """``C = rho sup|d_x d_xi^2 phi~| / sup|d_x d_xi^2 phi|`` over a Sobol sample.

    Uses the first spatial and first frequency direction. The rescaling
    contracts this deviation by ``C / rho``.
    """
    d = phase.d
    xi0 = np.zeros(d) if xi0 is None else np.asarray(xi0, dtype=float)
    new = parabolic_rescale(phase, xi0, rho)
    t, x, xi = sample_domain(d, n_samples, seed)
    g = _unit(d + 1, 1)
    b = tuple(2 if j == 0 else 0 for j in range(d))
    before = np.max(np.abs(phase.deriv(g, b)(t, x, xi)))
    after = np.max(np.abs(new.deriv(g, b)(t, x, xi)))
    if before == 0:
        return 0.0 if after == 0 else math.inf
    return float(rho * after / before)
