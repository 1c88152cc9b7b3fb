"""Cubic NLS on the line: reference solver, Picard expansions and monitors.

The equation is ``i u_t + u_xx = sign |u|^2 u`` with ``sign = +1``
(defocusing) or ``sign = -1`` (focusing). Its Duhamel form reads

    u(t) = U(t) f - i sign int_0^t U(t - s) (|u|^2 u)(s) ds,

and ``N3`` below denotes the trilinear part of the right-hand side.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from displab.fields import Field, Grid, SpaceTimeField, lp_norm
from displab.propagator import evolve_interval

__all__ = [
    "NlsRun",
    "splitstep_solve",
    "duhamel_N3",
    "IterateStack",
    "picard_series",
    "homogeneity_error",
    "higher_iterates",
    "identity_residual",
    "VSolution",
    "solve_v",
    "Monitors",
    "energy_monitors",
    "write_monitor_csv",
    "sup_l2_distance",
]

AMPLITUDE_BUDGET = 0.1
# the remainder iteration is abandoned once an update exceeds this size
DIVERGENCE_LEVEL = 1e6


@dataclass(frozen=True)
class NlsRun:
    """Configuration of one reference solve.

    ``coupling`` scales the nonlinearity; zero gives the free flow.
    """

    f: Field
    sign: int = 1
    T: float = 1.0
    dt: float = 1e-3
    coupling: float = 1.0
    record_every: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 (defocusing) or -1 (focusing)")
        if self.f.grid.d != 1:
            raise ValueError("the NLS solver works on the line (d = 1)")
        if not (self.T > 0 and self.dt > 0):
            raise ValueError("horizon and time step must be positive")

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))


def _amplitude_guard(u: np.ndarray, dt: float, coupling: float) -> None:
    level = float(np.max(np.abs(u)) ** 2) * dt * abs(coupling)
    if level > AMPLITUDE_BUDGET:
        raise ValueError(
            f"amplitude guard: max|u|^2 dt = {level:.3g} exceeds {AMPLITUDE_BUDGET}; reduce the time step"
        )


def splitstep_solve(run: NlsRun) -> SpaceTimeField:
    """Strang splitting: half nonlinear phase, exact linear step, half nonlinear phase.

    Returns the solution sampled every ``record_every`` steps on ``[0, T]``.
    """
    g = run.f.grid
    steps = run.steps
    if steps % run.record_every:
        raise ValueError("record_every must divide the number of steps")
    dt = run.T / steps
    lin = np.exp(-1j * dt * g.xi1**2)
    kappa = run.sign * run.coupling
    u = np.array(run.f.samples)
    _amplitude_guard(u, dt, run.coupling)
    out = [u.copy()]
    for j in range(1, steps + 1):
        u = u * np.exp(-0.5j * kappa * dt * np.abs(u) ** 2)
        u = np.fft.ifft(lin * np.fft.fft(u))
        u = u * np.exp(-0.5j * kappa * dt * np.abs(u) ** 2)
        if j % run.record_every == 0:
            _amplitude_guard(u, dt, run.coupling)
            out.append(u.copy())
    return SpaceTimeField.from_array(g, np.array(out), 0.0, run.T)


def _arr(u: SpaceTimeField) -> np.ndarray:
    return u.array()


def _n3_array(grid: Grid, times: np.ndarray, prod: np.ndarray, sign: int) -> np.ndarray:
    """``-i sign int_{t_0}^t U(t-s) prod(s) ds`` by cumulative trapezoid."""
    k2 = grid.xi1**2
    spec = np.fft.fft(prod, axis=-1)
    # interaction picture: U(-s) multiplies by exp(+i s xi^2)
    w = spec * np.exp(1j * np.outer(times, k2))
    dts = np.diff(times)
    acc = np.zeros_like(w)
    acc[1:] = np.cumsum(0.5 * dts[:, None] * (w[1:] + w[:-1]), axis=0)
    out = acc * np.exp(-1j * np.outer(times, k2))
    return -1j * sign * np.fft.ifft(out, axis=-1)


def duhamel_N3(u1: SpaceTimeField, u2: SpaceTimeField, u3: SpaceTimeField, sign: int = 1) -> SpaceTimeField:
    """Trilinear Duhamel term with integrand ``u1 conj(u2) u3``.

    The time integral starts at ``t_start`` and uses the trapezoid rule in
    ``s`` with each sample propagated exactly in frequency.
    """
    if not (u1.same_time_grid(u2) and u1.same_time_grid(u3)):
        raise ValueError("N3 arguments must share one space-time grid")
    if u1.grid.d != 1:
        raise ValueError("N3 is implemented on the line")
    return _n3_from_arrays(u1, _arr(u1), _arr(u2), _arr(u3), sign)


def _n3_from_arrays(ref: SpaceTimeField, a1, a2, a3, sign: int) -> SpaceTimeField:
    prod = a1 * np.conj(a2) * a3
    vals = _n3_array(ref.grid, ref.times, prod, sign)
    return SpaceTimeField.from_array(ref.grid, vals, ref.t_start, ref.t_end)


def _zeros_like(u: SpaceTimeField) -> SpaceTimeField:
    return SpaceTimeField.from_array(u.grid, np.zeros((u.nt,) + u.grid.shape), u.t_start, u.t_end)


def sup_l2_distance(u: SpaceTimeField, v: SpaceTimeField | np.ndarray) -> float:
    """``sup_t ||u(t) - v(t)||_2``."""
    a = _arr(u)
    b = v if isinstance(v, np.ndarray) else _arr(v)
    return float(np.max(np.sqrt(np.sum(np.abs(a - b) ** 2, axis=-1) * u.grid.dx)))


def _sup_l2(a: np.ndarray, dx: float) -> float:
    return float(np.max(np.sqrt(np.sum(np.abs(a) ** 2, axis=-1) * dx)))


# --------------------------------------------------------------------------
# Picard expansion


@dataclass
class IterateStack:
    """Picard terms ``A_m``, higher iterates ``u^j`` and the remainder ``v``."""

    A: dict[int, SpaceTimeField] = field(default_factory=dict)
    u: list[SpaceTimeField] = field(default_factory=list)
    v: SpaceTimeField | None = None
    flags: list[str] = field(default_factory=list)

    def picard_sum(self, upto: int) -> np.ndarray:
        return sum(_arr(a) for m, a in sorted(self.A.items()) if m <= upto)


def _odd_compositions(m: int):
    """Ordered triples of odd positive integers summing to ``m``."""
    for m1 in range(1, m - 1, 2):
        for m2 in range(1, m - m1, 2):
            m3 = m - m1 - m2
            if m3 >= 1 and m3 % 2 == 1:
                yield m1, m2, m3


def picard_series(f: Field, M_max: int, T: float, steps: int, sign: int = 1) -> IterateStack:
    """Homogeneous Picard terms ``A_1 .. A_{M_max}`` on ``[0, T]``.

    Even terms vanish identically and are stored as zero fields. A flag is
    raised when ``||A_{m+2}|| >= ||A_m||`` in ``L^inf_t L^2_x``.
    """
    if M_max < 1 or M_max > 9 or M_max % 2 == 0:
        raise ValueError("M_max must be odd and at most 9")
    A1 = evolve_interval(f, 0.0, T, steps)
    stack = IterateStack()
    stack.A[1] = A1
    arrs = {1: _arr(A1)}
    for m in range(2, M_max + 1):
        if m % 2 == 0:
            stack.A[m] = _zeros_like(A1)
            continue
        total = np.zeros_like(arrs[1])
        for m1, m2, m3 in _odd_compositions(m):
            total += arrs[m1] * np.conj(arrs[m2]) * arrs[m3]
        vals = _n3_array(A1.grid, A1.times, total, sign)
        arrs[m] = vals
        stack.A[m] = SpaceTimeField.from_array(A1.grid, vals, 0.0, T)
        prev = _sup_l2(arrs[m - 2], A1.grid.dx)
        cur = _sup_l2(vals, A1.grid.dx)
        if prev > 0 and cur >= prev:
            stack.flags.append(f"non-convergence: ||A_{m}|| >= ||A_{m - 2}||")
    return stack


def homogeneity_error(f: Field, m: int, lam: float, T: float, steps: int, sign: int = 1) -> float:
    """Relative deviation of ``A_m(lam f)`` from ``lam^m A_m(f)``."""
    a = _arr(picard_series(f, m, T, steps, sign).A[m])
    b = _arr(picard_series(f.scale(lam), m, T, steps, sign).A[m])
    ref = _sup_l2(lam**m * a, f.grid.dx)
    if ref == 0:
        return float(_sup_l2(b, f.grid.dx))
    return _sup_l2(b - lam**m * a, f.grid.dx) / ref


# --------------------------------------------------------------------------
# higher iterates and the remainder equation


def _n3_cube(ref: SpaceTimeField, a: np.ndarray, sign: int) -> np.ndarray:
    return _n3_array(ref.grid, ref.times, a * np.conj(a) * a, sign)


def higher_iterates(f: Field, n: int, T: float, steps: int, sign: int = 1) -> IterateStack:
    """Iterates ``u^0 .. u^{n-1}``: ``u^0 = Lf`` and for ``j >= 1``
    ``u^j = N3(S_{j-1}, S_{j-1}, S_{j-1}) - (u^1 + ... + u^{j-1})`` with
    ``S_{j-1} = u^0 + ... + u^{j-1}``."""
    if not 1 <= n <= 6:
        raise ValueError("n must lie in 1..6")
    u0 = evolve_interval(f, 0.0, T, steps)
    stack = IterateStack()
    stack.u.append(u0)
    arrs = [_arr(u0)]
    for j in range(1, n):
        S = sum(arrs)
        tail = sum(arrs[1:]) if j > 1 else 0.0
        uj = _n3_cube(u0, S, sign) - tail
        arrs.append(uj)
        stack.u.append(SpaceTimeField.from_array(u0.grid, uj, 0.0, T))
    return stack


def identity_residual(stack: IterateStack, j: int, sign: int = 1) -> float:
    """Relative residual of ``u^1 + ... + u^{j-1} = N3(S, S, S)`` with ``S = u^0 + ... + u^{j-2}``."""
    if not 2 <= j <= len(stack.u):
        raise ValueError(f"identity index j={j} outside 2..{len(stack.u)}")
    ref = stack.u[0]
    arrs = [_arr(u) for u in stack.u]
    lhs = sum(arrs[1:j])
    rhs = _n3_cube(ref, sum(arrs[: j - 1]), sign)
    scale = _sup_l2(lhs, ref.grid.dx)
    diff = _sup_l2(lhs - rhs, ref.grid.dx)
    return diff / scale if scale > 0 else diff


@dataclass
class VSolution:
    v: SpaceTimeField
    iterations: int
    residual: float
    lipschitz: tuple[float, ...]
    converged: bool

    @property
    def small_data(self) -> bool:
        """Empirical contraction constant below 1/2 over the first three updates.

        An iteration that converges after a single update has no ratio to
        measure and counts as small data.
        """
        first = self.lipschitz[:3]
        if not first:
            return self.converged
        return max(first) < 0.5


def solve_v(
    f: Field, n: int, T: float, steps: int, sign: int = 1, tol: float = 1e-8, max_iter: int = 100,
    stack: IterateStack | None = None,
) -> tuple[VSolution, IterateStack]:
    """Fixed point of ``v = N3(v + S, v + S, v + S) - (u^1 + ... + u^{n-1})``.

    ``S`` is the sum of the first ``n`` higher iterates. Iteration starts at
    ``v = 0`` and stops once the ``L^inf_t L^2_x`` change drops below
    ``tol``; non-convergence after ``max_iter`` steps is reported rather
    than raised.
    """
    if stack is None:
        stack = higher_iterates(f, n, T, steps, sign)
    ref = stack.u[0]
    arrs = [_arr(u) for u in stack.u[:n]]
    S = sum(arrs)
    tail = sum(arrs[1:]) if n > 1 else np.zeros_like(S)
    v = np.zeros_like(S)
    changes: list[float] = []
    lips: list[float] = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        new = _n3_cube(ref, v + S, sign) - tail
        change = _sup_l2(new - v, ref.grid.dx)
        if changes and changes[-1] > 0:
            lips.append(change / changes[-1])
        changes.append(change)
        v = new
        if change < tol:
            converged = True
            break
        if not np.isfinite(change) or change > DIVERGENCE_LEVEL:
            break
    if not converged:
        stack.flags.append(f"solve_v: no contraction after {it} iterations (residual {changes[-1]:.3e})")
    vf = SpaceTimeField.from_array(ref.grid, v, 0.0, T)
    stack.v = vf
    return VSolution(vf, it, changes[-1], tuple(lips), converged), stack


# --------------------------------------------------------------------------
# monitors


@dataclass(frozen=True)
class Monitors:
    times: np.ndarray
    M: np.ndarray
    E: np.ndarray
    E_tilde: np.ndarray
    mass: np.ndarray
    l4: np.ndarray

    @property
    def finite(self) -> bool:
        return bool(all(np.all(np.isfinite(a)) for a in (self.M, self.E, self.E_tilde)))

    @property
    def gronwall_constant(self) -> float:
        """Smallest ``C`` with ``E <= C (E_tilde + M + 1)`` along the path."""
        return float(np.max(self.E / (self.E_tilde + self.M + 1.0)))


def energy_monitors(u: SpaceTimeField, w: SpaceTimeField | None = None) -> Monitors:
    """``M``, ``E`` and ``E_tilde`` of ``v = u - w`` per time slice.

    ``w`` defaults to zero, in which case the monitors are those of ``u``.
    The ``mass`` column is ``int |u|^2`` and ``l4`` is ``||u||_{L^4}``.
    """
    if w is not None and not u.same_time_grid(w):
        raise ValueError("u and w must share one space-time grid")
    g = u.grid
    ua = _arr(u)
    wa = np.zeros_like(ua) if w is None else _arr(w)
    va = ua - wa
    vx = np.fft.ifft(1j * g.xi1 * np.fft.fft(va, axis=-1), axis=-1)
    dx = g.dx
    M = 0.5 * np.sum(np.abs(va) ** 2, axis=-1) * dx
    grad = 0.5 * np.sum(np.abs(vx) ** 2, axis=-1) * dx
    E = grad + 0.25 * np.sum(np.abs(va) ** 4, axis=-1) * dx
    Et = grad + 0.25 * np.sum(np.abs(ua) ** 4 - np.abs(wa) ** 4, axis=-1) * dx
    mass = np.sum(np.abs(ua) ** 2, axis=-1) * dx
    l4 = np.array([lp_norm(s, 4) for s in u.slices])
    return Monitors(u.times, M, E, Et, mass, l4)


def write_monitor_csv(path: str | Path, mon: Monitors) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "M", "E", "E_tilde", "mass", "L4"])
        for row in zip(mon.times, mon.M, mon.E, mon.E_tilde, mon.mass, mon.l4):
            wr.writerow([f"{x:.17g}" for x in row])
