"""Linear trend fits with a two-sided t-test on the slope."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["TrendResult", "linear_trend", "group_average_trend", "betainc", "student_t_sf2"]

_EPS = 1e-15
_TINY = 1e-300


def _betacf(a: float, b: float, x: float, max_iter: int = 500) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _TINY else _TINY)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function ``I_x(a, b)``.

    Uses the continued fraction directly when ``x < (a + 1) / (a + b + 2)``
    and the symmetry ``I_x(a, b) = 1 - I_{1-x}(b, a)`` otherwise, which keeps
    the fraction in its rapidly convergent region.
    """
    if a <= 0 or b <= 0:
        raise ValueError("betainc needs a > 0 and b > 0")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"betainc needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf2(t: float, dof: float) -> float:
    """Two-sided tail probability ``P(|T| >= |t|)`` for Student's t."""
    if dof <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    return betainc(dof / 2.0, 0.5, dof / (dof + t * t))


@dataclass(frozen=True)
class TrendResult:
    slope: float
    intercept: float
    p_value: float
    stderr: float

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "p_value": self.p_value,
            "stderr": self.stderr,
        }


def linear_trend(series) -> TrendResult:
    """OLS line through ``series`` against prompt index ``1..T``.

    The p-value tests slope = 0 with ``T - 2`` degrees of freedom. For an
    exactly collinear series it is 0 when the slope is nonzero and 1 when
    the series is flat. With ``T == 2`` there is no residual degree of
    freedom and both ``p_value`` and ``stderr`` are NaN.
    """
    y = np.asarray(series, dtype=float)
    if y.ndim != 1:
        raise ValueError("series must be one-dimensional")
    T = y.size
    if T < 2:
        raise ValueError(f"need at least 2 points for a trend, got {T}")
    if not np.all(np.isfinite(y)):
        raise ValueError("series must be finite")
    x = np.arange(1, T + 1, dtype=float)
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ yc) / sxx
    intercept = float(y.mean() - slope * x.mean())
    if T == 2:
        return TrendResult(slope, intercept, math.nan, math.nan)

    dof = T - 2
    resid = yc - slope * xc
    ss_res = float(resid @ resid)
    ss_tot = float(yc @ yc)
    scale = max(ss_tot, float(y @ y))
    if ss_res <= (64 * np.finfo(float).eps) ** 2 * scale:
        p = 1.0 if ss_tot <= (64 * np.finfo(float).eps) ** 2 * max(float(y @ y), _TINY) else 0.0
        if p == 1.0:
            slope = 0.0
            intercept = float(y.mean())
        return TrendResult(slope, intercept, p, 0.0)
    stderr = math.sqrt(ss_res / dof / sxx)
    p = student_t_sf2(slope / stderr, dof)
    return TrendResult(slope, intercept, min(max(p, 0.0), 1.0), stderr)


def group_average_trend(per_group_series) -> TrendResult:
    """Trend of the element-wise mean across equally long group series."""
    groups = [np.asarray(s, dtype=float) for s in per_group_series]
    if not groups:
        raise ValueError("need at least one group")
    lengths = {g.shape for g in groups}
    if len(lengths) != 1:
        raise ValueError(f"group series lengths differ: {sorted(g.size for g in groups)}")
    return linear_trend(np.mean(groups, axis=0))
