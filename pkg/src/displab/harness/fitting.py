"""Log-log power-law fits for dyadic sweeps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["FitResult", "fit_exponent", "fit_loglog"]

R2_RELIABLE = 0.9


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    stderr: float
    r2: float
    dropped: tuple[float, ...] = ()

    @property
    def reliable(self) -> bool:
        return self.r2 >= R2_RELIABLE


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    slope, intercept = coef
    resid = y - A @ coef
    dof = len(x) - 2
    sxx = np.sum((x - x.mean()) ** 2)
    sse = float(resid @ resid)
    stderr = float(np.sqrt(sse / dof / sxx)) if dof > 0 and sxx > 0 else 0.0
    sst = float(np.sum((y - y.mean()) ** 2))
    # a perfect fit (including a constant series) has nothing left to explain
    flat = float(np.ptp(y)) < 1e-9
    r2 = 1.0 if flat or sse <= 1e-28 * max(1.0, sst) or sst == 0.0 else 1.0 - sse / sst
    return float(slope), float(intercept), stderr, float(r2)


def fit_loglog(scales, values, min_points: int = 4, drop_outlier: bool = True) -> FitResult:
    """OLS fit of ``log2 values`` against ``log2 scales``.

    Parameters
    ----------
    scales, values : array_like
        Positive sample points and measurements.
    min_points : int
        Minimum number of points the fit may use.
    drop_outlier : bool
        Drop the smallest scale when its residual against the fit through
        the remaining points exceeds three times every other residual (and
        1e-3 in log2 units), as long as ``min_points`` points remain.
        The dropped scale is reported on the result.

    Raises
    ------
    ValueError
        On fewer than ``min_points`` points or any nonpositive entry.
    """
    s = np.asarray(scales, dtype=float)
    v = np.asarray(values, dtype=float)
    if s.shape != v.shape or s.ndim != 1:
        raise ValueError("scales and values must be 1-D arrays of equal length")
    if len(s) < min_points:
        raise ValueError(f"need at least {min_points} points, got {len(s)}")
    for sc, val in zip(s, v):
        if not (sc > 0 and val > 0 and np.isfinite(val)):
            raise ValueError(f"nonpositive or non-finite record (scale={sc}, value={val})")
    order = np.argsort(s)
    s, v = s[order], v[order]
    x, y = np.log2(s), np.log2(v)
    slope, icpt, se, r2 = _ols(x, y)
    dropped: tuple[float, ...] = ()
    if drop_outlier and len(s) > min_points:
        # residuals against the fit through the other points, so the
        # boundary point's own leverage cannot hide it
        s1, i1, se1, r21 = _ols(x[1:], y[1:])
        resid = np.abs(y - (s1 * x + i1))
        if resid[0] > 1e-3 and resid[0] > 3 * resid[1:].max():
            slope, icpt, se, r2 = s1, i1, se1, r21
            dropped = (float(s[0]),)
    return FitResult(slope, icpt, se, r2, dropped)


def fit_exponent(records) -> tuple[float, float, float]:
    """Fit ``(slope, stderr, r2)`` from ``(scale, ratio)`` pairs or 4-tuples.

    Accepts records of the form ``(scale, ratio)`` or
    ``(scale, lhs, rhs, ratio)``; no outlier dropping is applied.
    """
    recs = list(records)
    if not recs:
        raise ValueError("no records to fit")
    scales = [r[0] for r in recs]
    ratios = [r[-1] for r in recs]
    fit = fit_loglog(scales, ratios, drop_outlier=False)
    return fit.slope, fit.stderr, fit.r2
