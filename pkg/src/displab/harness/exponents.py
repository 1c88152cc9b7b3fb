"""Theoretical exponent table.

Every experiment takes its target slope from here, so no exponent is
written out as a literal anywhere else in the package.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

__all__ = [
    "ExponentBundle",
    "strichartz_exponent",
    "decoupling_exponent",
    "theoretical_exponents",
    "fixed_time_exponent",
    "smoothing_window",
    "picard_remainder_exponent",
    "iterate_remainder_exponent",
    "STRANG_ORDER",
    "RESCALING_GAIN",
]

# global error order of Strang splitting
STRANG_ORDER = 2.0
# a parabolic rescaling by rho shrinks positional derivatives by rho^{-1}
RESCALING_GAIN = -1.0


def _check_p(p: float) -> None:
    if not p >= 2:
        raise ValueError(f"exponents are tabulated for p >= 2, got p={p}")


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def strichartz_exponent(p: float, d: int) -> float:
    """Derivative loss ``s(p, d)`` of the frequency-localised Strichartz estimate.

    Zero up to the Stein-Tomas endpoint ``2(d+2)/d`` and
    ``d/2 - (d+2)/p`` beyond it.
    """
    _check_p(p)
    if d < 1:
        raise ValueError("d must be positive")
    if p <= 2 * (d + 2) / d:
        return 0.0
    return d / 2 - (d + 2) * _inv(p)


def decoupling_exponent(p: float, k: int, d: int) -> float:
    """Decoupling loss ``alpha(p, k)`` for a surface of signature ``k``.

    Equal to ``k (1/4 - 1/(2p))`` up to ``p = 2(d+2-k)/(d-k)`` and
    ``d/4 - (d+2)/(2p)`` beyond it.
    """
    _check_p(p)
    if not 0 <= k <= d / 2:
        raise ValueError(f"signature k must satisfy 0 <= k <= d/2, got k={k}, d={d}")
    if p <= 2 * (d + 2 - k) / (d - k):
        return k * (0.25 - 0.5 * _inv(p))
    return d / 4 - (d + 2) * 0.5 * _inv(p)


def fixed_time_exponent(p: float, d: int) -> float:
    """Growth ``d |1/2 - 1/p|`` of ``||U(t)||`` on ``M_{p,q}`` as ``|t| -> inf``."""
    if not p >= 1:
        raise ValueError("p must be at least 1")
    return d * abs(0.5 - _inv(p))


def smoothing_window(p: float, q: float, d: int) -> tuple[float, float]:
    """``(lower, upper)`` for the derivative loss of ``U: M^s_{p,q} -> L^p_{t,x}``.

    The lower end is the necessary regularity; the upper end is the
    sufficient one, ``max(0, d - (d+2)/p - d/q)`` for ``q >= 2`` and
    ``max(0, 2(1 - 1/q)(d/2 - (d+2)/p))`` for ``q <= 2``.
    """
    b = theoretical_exponents(p, q, 2.0, d)
    upper = b.case_b if q >= 2 else b.case_c
    return b.s_nec_mod, max(0.0, upper)


def picard_remainder_exponent(M_max: int) -> float:
    """Relative size ``a^{M_max + 1}`` of ``u - (A_1 + ... + A_{M_max})`` for data ``a f``."""
    return float(M_max + 1)


def iterate_remainder_exponent(n: int) -> float:
    """Relative size of ``u - (u^0 + ... + u^{n-1})`` for data ``a f``: ``a^{2n}``."""
    return float(2 * n)


@dataclass(frozen=True)
class ExponentBundle:
    p: float
    q: float
    r: float
    d: int
    k: int
    s: float
    alpha: float
    s_nec_mod: float
    s_nec_lp: float
    admissible: bool
    case_b: float | None
    case_c: float | None
    knapp: dict

    def as_dict(self) -> dict:
        out = asdict(self)
        for key in ("p", "q", "r"):
            if math.isinf(out[key]):
                out[key] = "inf"
        return out


def theoretical_exponents(p: float, q: float = 2.0, r: float = 2.0, d: int = 1, k: int = 0) -> ExponentBundle:
    """Collect every exponent the harness asserts against.

    Parameters
    ----------
    p : float
        Space-time Lebesgue exponent, ``p >= 2``.
    q : float
        Summation exponent of the modulation space.
    r : float
        Lebesgue exponent of the data in the ``L^r`` variant.
    d : int
        Spatial dimension.
    k : int
        Signature, ``0 <= k <= d/2``.

    Returns
    -------
    ExponentBundle
        ``s``, ``alpha``, the two necessary regularities, the admissibility
        flag ``2/p + d/q <= d/r``, the sufficient exponents for the
        ``q >= 2`` and ``q <= 2`` cases (``None`` where not applicable),
        and the Knapp slopes under ``knapp``.
    """
    _check_p(p)
    if not q >= 1 or not r >= 1:
        raise ValueError("q and r must be at least 1")
    if d not in (1, 2, 3):
        raise ValueError("d must be 1, 2 or 3")
    s = strichartz_exponent(p, d)
    alpha = decoupling_exponent(p, k, d)
    ip, iq, ir = _inv(p), _inv(q), _inv(r)
    s_nec_mod = max(0.0, d - (d + 2) * ip - d * iq)
    s_nec_lp = max(0.0, d - d * iq - 2 * ip - d * ir)
    admissible = 2 * ip + d * iq <= d * ir + 1e-12
    case_b = d - (d + 2) * ip - d * iq if q >= 2 else None
    case_c = 2 * (1 - iq) * (d / 2 - (d + 2) * ip) if q <= 2 else None
    knapp = {
        # ||g_eps||_{L^p L^q(tube)} / ||g_eps||_{M_{p,q}}: local and global windows
        "aniso_local": d - d * iq,
        "aniso_global": d - 2 * ip - d * iq,
        # refocusing lower bound over the window of length lam^{-2}
        "isotropic": d - d * iq - 2 * ip,
        # unboundedness of the r-data estimate for admissible pairs
        "corollary": d - d * iq - 2 * ip - d * ir,
    }
    return ExponentBundle(p, q, r, d, k, s, alpha, s_nec_mod, s_nec_lp, admissible, case_b, case_c, knapp)
