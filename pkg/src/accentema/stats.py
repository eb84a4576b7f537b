"""Simple linear regression with a Student-t significance test, and
Table-style summarisation of many regression cells."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import betainc

from .errors import ConstantPredictor, DegenerateN

ALPHA = 0.05
STRONG_R = 0.3


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    R: float
    R2: float
    p: float
    n: int


@dataclass(frozen=True)
class SummaryCell:
    vowel: str
    feature: str
    statistic: str
    direction: str      # "up" (British), "down" (American) or "none"
    strong: bool
    significant: bool
    measure: Optional[str] = None

    @property
    def symbol(self):
        arrow = {"up": "↑", "down": "↓", "none": "-"}[self.direction]
        return arrow + ("*" if self.strong else "")


def t_sf(t: float, df: int) -> float:
    """Two-sided tail probability P(|T_df| >= |t|)."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return float(min(1.0, max(0.0, betainc(0.5 * df, 0.5, x))))


def linreg(x, y) -> RegressionResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D and the same length")
    n = len(x)
    if n < 3:
        raise DegenerateN(f"need at least 3 points, got {n}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    sxy = float(dx @ dy)
    if sxx <= 0 or np.ptp(x) == 0:
        raise ConstantPredictor("predictor is constant")
    slope = sxy / sxx
    intercept = float(y.mean() - slope * x.mean())
    if syy <= 0 or np.ptp(y) == 0:
        return RegressionResult(0.0, float(y.mean()), 0.0, 0.0, 1.0, n)
    R = max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
    R2 = R * R
    if R2 >= 1.0:
        p = 0.0
    else:
        p = t_sf(R * math.sqrt((n - 2) / (1.0 - R2)), n - 2)
    return RegressionResult(slope, intercept, R, R2, p, n)


def summarize_one(vowel, feature, statistic, res: RegressionResult, measure=None,
                  alpha=ALPHA, strong_r=STRONG_R) -> SummaryCell:
    sig = res.p < alpha
    if sig and res.R > 0:
        direction = "up"
    elif sig and res.R < 0:
        direction = "down"
    else:
        direction = "none"
    strong = sig and abs(res.R) > strong_r
    return SummaryCell(vowel, feature, statistic, direction, strong, sig, measure)


def summarize(cells, alpha=ALPHA, strong_r=STRONG_R):
    """Gate each (vowel, feature, statistic, result[, measure]) on p, then flag |R|."""
    return [summarize_one(*c, alpha=alpha, strong_r=strong_r) for c in cells]
