"""Power-law fits by least squares on log-log axes."""

from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float

    def predict(self, x):
        return np.exp(self.intercept) * np.asarray(x, dtype=float) ** self.slope


def fit_powerlaw(points) -> FitResult:
    """Fit value = exp(intercept) * N**slope through (N, value) pairs."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be (N, value) pairs")
    x, y = pts[:, 0], pts[:, 1]
    if len(np.unique(x)) < 3:
        raise ValueError("need at least 3 points with distinct abscissae")
    if np.any(y <= 0) or np.any(x <= 0):
        raise ValueError("power-law fit needs positive N and values")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(ly) == 0.0:
        return FitResult(0.0, float(ly[0]), 0.0, 1.0)
    res = stats.linregress(lx, ly)
    return FitResult(float(res.slope), float(res.intercept), float(res.stderr), float(res.rvalue**2))
