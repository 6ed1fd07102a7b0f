"""Power-law envelope fits in log-log coordinates."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import InsufficientData, InvalidArgument


class Envelope(NamedTuple):
    slope: float
    intercept: float
    # indices of the two data points the envelope line passes through
    support: tuple[int, int]


def upper_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Indices of the upper convex hull of the points, ordered by increasing x.

    Among points sharing an abscissa only the highest one is kept.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    order = np.lexsort((-y, x))
    hull: list[int] = []
    last_x = None
    for i in order:
        if last_x is not None and x[i] == last_x:
            continue
        last_x = x[i]
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(int(i))
    return np.array(hull, dtype=int)


def envelope_fit(x, y, min_points: int = 2, window: float = 0.5) -> Envelope:
    """Fit a line lying above every point ``(x_i, y_i)``.

    The slope describes the asymptotic regime: it is taken from the points
    whose abscissa lies in the last ``window`` fraction of the x-range, as the
    upper-hull edge of that subset spanning its mean abscissa (the edge that
    minimises the total vertical excess over the subset). The intercept is
    then raised until the inequality ``y_i <= intercept + slope * x_i`` holds
    for every point, so the line touches the data at ``support``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidArgument("x and y must be 1-D arrays of equal length")
    if len(x) < min_points:
        raise InsufficientData(f"need at least {min_points} points, got {len(x)}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidArgument("non-finite data in envelope fit")
    if not 0 < window <= 1:
        raise InvalidArgument("window must lie in (0, 1]")
    sel = np.nonzero(x >= x.max() - window * (x.max() - x.min()))[0]
    hull = sel[upper_hull(x[sel], y[sel])]
    if len(hull) < 2:
        raise InsufficientData("too few distinct abscissae in the fit window")
    xbar = x[sel].mean()
    hx = x[hull]
    j = int(np.searchsorted(hx, xbar, side="right")) - 1
    j = min(max(j, 0), len(hull) - 2)
    a, b = hull[j], hull[j + 1]
    slope = (y[b] - y[a]) / (x[b] - x[a])
    excess = y - slope * x
    top = int(np.argmax(excess))
    intercept = float(excess[top])
    if top in (a, b):
        return Envelope(float(slope), intercept, (int(a), int(b)))
    return Envelope(float(slope), intercept, (top, top))


def power_envelope(base, values, min_points: int = 20, window: float = 0.5) -> tuple[float, float]:
    """Return ``(exponent, constant)`` with ``values <= constant * base**exponent``."""
    base = np.asarray(base, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(base) < min_points:
        raise InsufficientData(f"need at least {min_points} points, got {len(base)}")
    if np.any(base <= 0) or np.any(values <= 0):
        raise InvalidArgument("power envelope needs positive data")
    env = envelope_fit(np.log(base), np.log(values), min_points=min_points, window=window)
    return env.slope, float(np.exp(env.intercept))
