"""Half-maximum analysis of sampled single-peaked profiles."""
from __future__ import annotations

import numpy as np

from .errors import AnalysisError


def half_max_crossings(x, y):
    """Interpolated abscissae where ``y`` crosses half its maximum.

    The samples at or above half maximum must form one contiguous run that
    does not touch either end of the grid.

    Returns
    -------
    left, right : float
        Linearly interpolated crossing positions.
    peak : int
        Index of the maximum sample.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or x.size < 3:
        raise AnalysisError("profile needs >= 3 matching samples")
    if not np.all(np.isfinite(y)):
        raise AnalysisError("profile contains non-finite samples")
    if np.any(np.diff(x) <= 0):
        raise AnalysisError("abscissa must be strictly increasing")
    peak = int(np.argmax(y))
    ymax = y[peak]
    if not ymax > 0 or np.all(y == ymax):
        raise AnalysisError("profile has no peak")
    half = 0.5 * ymax
    above = np.nonzero(y >= half)[0]
    if above[-1] - above[0] + 1 != above.size:
        raise AnalysisError("profile is not single-peaked at half maximum")
    i, j = above[0], above[-1]
    if i == 0 or j == y.size - 1:
        raise AnalysisError("half maximum not reached inside the sampled range")
    left = x[i - 1] + (half - y[i - 1]) * (x[i] - x[i - 1]) / (y[i] - y[i - 1])
    right = x[j] + (half - y[j]) * (x[j + 1] - x[j]) / (y[j + 1] - y[j])
    return float(left), float(right), peak


def fwhm(x, y) -> float:
    """Full width at half maximum by linear interpolation on both flanks."""
    left, right, _ = half_max_crossings(x, y)
    return right - left
