"""Local approximation of ``T^lam`` by a constant-coefficient extension operator.

Near a point ``zbar`` the variable-coefficient operator behaves like the
extension operator of the hypersurface

    xi -> grad_{x,t} phi^lam(zbar; Psi(zbar; xi)),

that is ``E_zbar g(v) = int e^{i(<v_x, xi> + v_t h(xi))} a_zbar(xi) g(xi) dxi`` with

    h(xi)       = d_t phi(zbar/lam; Psi(xi)),
    a_zbar(xi)  = a2(Psi(xi)) |det d_xi Psi(xi)|,
    f_zbar(xi)  = e^{i lam phi(zbar/lam; Psi(xi))} f(Psi(xi)),

where ``Psi`` solves ``d_x phi(zbar/lam; Psi) = xi``. The comparison is
restricted to one spatial dimension, where the image of the frequency
support is an interval and ``Psi`` is monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from displab.decoupling.operators import FrequencyMesh, osc_op, weight_eval
from displab.decoupling.phases import PhaseSpec, solve_Psi

__all__ = ["ApproximationResult", "local_surface", "approximation_error"]


@dataclass(frozen=True)
class ApproximationResult:
    lam: float
    K: float
    error: float
    eig_min: float
    eig_max: float
    points: int

    def eigen_band_ok(self, C: float = 3.0) -> bool:
        return 1 / C <= self.eig_min and self.eig_max <= C


@dataclass(frozen=True)
class LocalSurface:
    """Frequency data of ``E_zbar`` on a Gauss mesh of the image interval."""

    xi: np.ndarray
    weights: np.ndarray
    psi: np.ndarray
    h: np.ndarray
    h2: np.ndarray
    amp: np.ndarray
    phase0: np.ndarray


def local_surface(phase: PhaseSpec, lam: float, zbar, nodes: int) -> LocalSurface:
    """Solve for ``Psi`` and build ``h``, ``h''``, ``a_zbar`` and the phase ``phi^lam(zbar; Psi)``.

    ``h''`` uses the identities ``Psi' = 1 / d_x d_xi phi`` and
    ``Psi'' = -d_x d_xi^2 phi Psi'^3``.
    """
    if phase.d != 1:
        raise ValueError("the approximation comparison is implemented for d = 1")
    zs = np.asarray(zbar, dtype=float) / lam
    t0, x0 = zs[0], zs[1:]
    sup = phase.amplitude.xi_support
    ends = phase.grad_x(t0, x0, np.array([[-sup], [sup]]))[:, 0]
    lo, hi = float(ends.min()), float(ends.max())
    base = FrequencyMesh(1, nodes)
    scale = (hi - lo) / 2
    xi = lo + (base.nodes_1d + 1) * scale
    w = base.weights_1d * scale
    m = len(xi)
    tt = np.full(m, t0)
    xx = np.broadcast_to(x0, (m, 1))
    psi = solve_Psi(phase, tt, xx, xi[:, None])
    P = psi
    mixed = phase.deriv((0, 1), (1,))(tt, xx, P)
    dpsi = 1.0 / mixed
    d2psi = -phase.deriv((0, 1), (2,))(tt, xx, P) * dpsi**3
    h = phase.deriv((1, 0), (0,))(tt, xx, P)
    h2 = phase.deriv((1, 0), (2,))(tt, xx, P) * dpsi**2 + phase.deriv((1, 0), (1,))(tt, xx, P) * d2psi
    amp = phase.amplitude.a2(P) * np.abs(dpsi)
    phase0 = lam * phase(tt, xx, P)
    return LocalSurface(xi, w, P[:, 0], h, h2, amp, phase0)


def _ball_lattice(zbar, K: float, spacing: float) -> np.ndarray:
    n = int(math.floor(K / spacing))
    a = spacing * np.arange(-n, n + 1)
    vt, vx = np.meshgrid(a, a, indexing="ij")
    v = np.column_stack([vt.ravel(), vx.ravel()])
    return v[np.linalg.norm(v, axis=1) <= K]


def approximation_error(
    phase: PhaseSpec,
    lam: float,
    K: float,
    zbar,
    f: Callable | None = None,
    p: float = 4.0,
    N_w: int = 20,
    spacing: float = 0.25,
    delta: float = 0.1,
) -> ApproximationResult:
    """Relative ``L^p(w_{B(zbar, K)})`` distance between ``T^lam f`` and ``a1 E_zbar f_zbar``.

    Parameters
    ----------
    phase : PhaseSpec
        One-dimensional phase with amplitude ``a1 a2``.
    lam, K : float
        Scale and ball radius, ``1 <= K <= lam^{1/2 - delta}``.
    zbar : array_like
        Centre ``(tbar, xbar)`` in the unscaled variables; ``B(zbar, K)``
        must lie in ``B(0, 3 lam / 4)``.
    f : callable, optional
        Density on the unit interval; defaults to one.

    Returns
    -------
    ApproximationResult
        The relative error and the extreme eigenvalues of ``h''`` over the
        support of ``a_zbar``.
    """
    zbar = np.asarray(zbar, dtype=float)
    if not 1 <= K <= lam ** (0.5 - delta) * (1 + 1e-12):
        raise ValueError(f"need 1 <= K <= lam^(1/2 - delta) = {lam ** (0.5 - delta):.3f}, got K={K}")
    if np.linalg.norm(zbar) + K > 0.75 * lam:
        raise ValueError("B(zbar, K) must lie inside B(0, 3 lam / 4)")
    if f is None:
        def f(xi):
            return np.ones(len(np.asarray(xi).reshape(-1)), dtype=complex)

    v = _ball_lattice(zbar, K, spacing)
    z = zbar[None, :] + v
    # oscillation rate of the xi integrand is lam |d_xi phi| ~ |z|; resolve it with margin
    rate = float(np.max(np.linalg.norm(z, axis=1))) * 1.5 + 8
    mesh = FrequencyMesh.for_scale(1, 0, 1.25 * rate)
    T = osc_op(phase, lam, f, z, mesh)

    loc = local_surface(phase, lam, zbar, mesh.nodes)
    g = loc.weights * loc.amp * np.exp(1j * loc.phase0) * np.asarray(f(loc.psi[:, None]), dtype=complex)
    E = np.empty(len(v), dtype=complex)
    for s in range(0, len(v), 4096):
        vc = v[s : s + 4096]
        E[s : s + 4096] = np.exp(1j * (np.outer(vc[:, 1], loc.xi) + np.outer(vc[:, 0], loc.h))) @ g
    E *= phase.amplitude.a1(z / lam)

    w = weight_eval(v, np.zeros(2), K, N_w)
    num = np.sum(np.abs(T - E) ** p * w) ** (1 / p)
    den = np.sum(np.abs(T) ** p * w) ** (1 / p)
    live = loc.amp > 0
    return ApproximationResult(
        float(lam), float(K), float(num / den),
        float(np.min(np.abs(loc.h2[live]))), float(np.max(np.abs(loc.h2[live]))), len(v),
    )
