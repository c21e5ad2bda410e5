# src/ksdk/stats.py
# Monte Carlo statistics used by the experiment reports.
# Standard errors for means, Wilson intervals for proportions, t intervals for OLS slopes.

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy import stats


def mean_and_stderr(x: Sequence[float]) -> Tuple[float, float]:
    a = np.asarray(x, dtype=float)
    if a.size == 0:
        return float("nan"), float("nan")
    if a.size < 2:
        return float(a[0]), float("nan")
    return float(np.mean(a)), float(np.std(a, ddof=1) / np.sqrt(a.size))


def wilson_interval(k: int, n: int, alpha: float = 0.05) -> Tuple[float, float]:
    if n <= 0:
        return 0.0, 1.0
    z = stats.norm.ppf(1 - alpha / 2)
    p = k / n
    denom = 1 + z**2 / n
    centre = (p + z**2 / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z**2 / (4 * n**2)) / denom
    return float(max(0.0, centre - half)), float(min(1.0, centre + half))


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    stderr: float
    ci_low: float
    ci_high: float
    n_points: int

    def excludes_zero(self) -> bool:
        return self.ci_high < 0 or self.ci_low > 0

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def linear_fit(x: Sequence[float], y: Sequence[float], alpha: float = 0.05) -> SlopeFit:
    """OLS y = a + b·x with a t-based interval for b (unbounded with fewer than 3 points)."""
    xa, ya = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if xa.size < 2:
        return SlopeFit(float("nan"), float("nan"), float("nan"), -np.inf, np.inf, int(xa.size))
    res = stats.linregress(xa, ya)
    if xa.size < 3:
        return SlopeFit(float(res.slope), float(res.intercept), float("nan"), -np.inf, np.inf, 2)
    t = stats.t.ppf(1 - alpha / 2, df=xa.size - 2)
    se = float(res.stderr)
    return SlopeFit(float(res.slope), float(res.intercept), se, res.slope - t * se, res.slope + t * se, int(xa.size))


def log_probability_fit(
    x: Sequence[float], counts: Sequence[int], n: Sequence[int], alpha: float = 0.05
) -> SlopeFit:
    """Weighted fit of log p̂ against x on the points with p̂ > 0.

    Var(log p̂) ≈ (1 - p)/(n p) (delta method), floored at 1/n² so that p̂ = 1
    points keep a finite weight. The slope interval is normal.
    """
    xa = np.asarray(x, dtype=float)
    k = np.asarray(counts, dtype=float)
    na = np.asarray(n, dtype=float)
    keep = k > 0
    xa, k, na = xa[keep], k[keep], na[keep]
    if xa.size < 2:
        return SlopeFit(float("nan"), float("nan"), float("nan"), -np.inf, np.inf, int(xa.size))
    p = k / na
    var = np.maximum((1 - p) / (na * p), 1.0 / na**2)
    w = 1.0 / var
    xbar = np.sum(w * xa) / np.sum(w)
    y = np.log(p)
    ybar = np.sum(w * y) / np.sum(w)
    sxx = np.sum(w * (xa - xbar) ** 2)
    if sxx == 0:
        return SlopeFit(float("nan"), float("nan"), float("nan"), -np.inf, np.inf, int(xa.size))
    slope = np.sum(w * (xa - xbar) * (y - ybar)) / sxx
    se = float(np.sqrt(1.0 / sxx))
    z = stats.norm.ppf(1 - alpha / 2)
    return SlopeFit(float(slope), float(ybar - slope * xbar), se, slope - z * se, slope + z * se, int(xa.size))


def variance_ratio_test(a: Sequence[float], b: Sequence[float]) -> Dict[str, float]:
    """Two-sided F-test of Var(a) = Var(b)."""
    xa, xb = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    va, vb = np.var(xa, ddof=1), np.var(xb, ddof=1)
    ratio = va / vb
    dfa, dfb = xa.size - 1, xb.size - 1
    tail = stats.f.cdf(ratio, dfa, dfb)
    return {"ratio": float(ratio), "p_value": float(min(1.0, 2 * min(tail, 1 - tail)))}


def gaussianity(x: Sequence[float]) -> Dict[str, float]:
    """Sample skewness/kurtosis with their z-scores (kurtosis 3 for a Gaussian)."""
    a = np.asarray(x, dtype=float)
    skew_z, _ = stats.skewtest(a)
    kurt_z, _ = stats.kurtosistest(a)
    return {
        "skewness": float(stats.skew(a)),
        "skewness_z": float(skew_z),
        "kurtosis": float(stats.kurtosis(a, fisher=False)),
        "kurtosis_z": float(kurt_z),
    }


# =========================
# Decision rules
# =========================

def strictly_decreasing(estimates: Sequence[float], stderrs: Sequence[float], factor: float = 2.0) -> bool:
    """Each drop exceeds factor × the combined standard error of the two points."""
    m = np.asarray(estimates, dtype=float)
    s = np.nan_to_num(np.asarray(stderrs, dtype=float))
    drops = m[:-1] - m[1:]
    return bool(np.all(drops > factor * np.sqrt(s[:-1] ** 2 + s[1:] ** 2)))


def non_increasing(intervals: Sequence[Tuple[float, float]]) -> bool:
    """No later point lies entirely above an earlier one (interval overlap counts as ties)."""
    lows = [lo for lo, _ in intervals]
    highs = [hi for _, hi in intervals]
    return all(lows[j] <= highs[i] for i in range(len(intervals)) for j in range(i + 1, len(intervals)))


def relative_discrepancy(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale
