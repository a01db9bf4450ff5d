"""Monotonicity-preserving piecewise cubic Hermite interpolation.

Knot derivatives follow the weighted-harmonic-mean slope rule: an interior
derivative is the harmonic mean of the adjacent secant slopes, weighted by
interval lengths, and is forced to zero whenever those slopes differ in sign
or vanish. Endpoints use the one-sided three-point estimate clipped back to
the shape-preserving region. This keeps the interpolant C1 and free of
overshoot on monotone data.
"""

from __future__ import annotations

import numpy as np

from ..errors import NonMonotoneKnots, QueryOutOfRange


def _edge_derivative(h0: float, h1: float, s0: float, s1: float) -> float:
    # one-sided three-point estimate, clipped so the end interval stays
    # shape preserving
    d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1)
    if np.sign(d) != np.sign(s0):
        return 0.0
    if np.sign(s0) != np.sign(s1) and abs(d) > 3.0 * abs(s0):
        return 3.0 * s0
    return d


def pchip_derivatives(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Knot derivatives for the shape-preserving cubic Hermite interpolant."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(x)
    h = np.diff(x)
    s = np.diff(y) / h

    d = np.zeros(n, dtype=np.float64)
    if n == 2:
        # single interval degenerates to the secant line
        d[:] = s[0]
        return d

    for k in range(1, n - 1):
        if s[k - 1] == 0.0 or s[k] == 0.0 or np.sign(s[k - 1]) != np.sign(s[k]):
            d[k] = 0.0
        else:
            w1 = 2.0 * h[k] + h[k - 1]
            w2 = h[k] + 2.0 * h[k - 1]
            d[k] = (w1 + w2) / (w1 / s[k - 1] + w2 / s[k])

    d[0] = _edge_derivative(h[0], h[1], s[0], s[1])
    d[-1] = _edge_derivative(h[-1], h[-2], s[-1], s[-2])
    return d


def pchip_interpolate(knots, query_xs) -> np.ndarray:
    """Evaluate the shape-preserving interpolant through `knots` at `query_xs`.

    Knot x values must be strictly increasing (>= 2 knots); queries must lie
    within the knot span.
    """
    knots = np.asarray(knots, dtype=np.float64)
    if knots.ndim != 2 or knots.shape[1] != 2 or knots.shape[0] < 2:
        raise NonMonotoneKnots(f"need >= 2 (x, y) knots, got shape {knots.shape}")
    x, y = knots[:, 0], knots[:, 1]
    if not np.all(np.diff(x) > 0):
        raise NonMonotoneKnots("knot x values must be strictly increasing")

    q = np.atleast_1d(np.asarray(query_xs, dtype=np.float64))
    if q.size and (q.min() < x[0] or q.max() > x[-1]):
        raise QueryOutOfRange(
            f"queries span [{q.min()}, {q.max()}], knots span [{x[0]}, {x[-1]}]"
        )

    d = pchip_derivatives(x, y)
    idx = np.clip(np.searchsorted(x, q, side="right") - 1, 0, len(x) - 2)
    h = x[idx + 1] - x[idx]
    t = (q - x[idx]) / h

    h00 = (1.0 + 2.0 * t) * (1.0 - t) ** 2
    h10 = t * (1.0 - t) ** 2
    h01 = t**2 * (3.0 - 2.0 * t)
    h11 = t**2 * (t - 1.0)
    return y[idx] * h00 + h * d[idx] * h10 + y[idx + 1] * h01 + h * d[idx + 1] * h11


def pchip_curve_points(knots, samples_per_span: int = 24) -> np.ndarray:
    """Dense (x, y) polyline along the interpolant, for rasterization."""
    knots = np.asarray(knots, dtype=np.float64)
    xs = []
    for a, b in zip(knots[:-1, 0], knots[1:, 0]):
        xs.append(np.linspace(a, b, samples_per_span, endpoint=False))
    xs.append(np.asarray([knots[-1, 0]]))
    xs = np.concatenate(xs)
    ys = pchip_interpolate(knots, xs)
    return np.stack([xs, ys], axis=1)


def closed_curve_points(points: np.ndarray, samples_per_span: int = 16) -> np.ndarray:
    """Smooth closed curve through ordered 2-D points.

    Both coordinates are interpolated against cumulative chord length, with
    the first point appended to close the loop.
    """
    pts = np.asarray(points, dtype=np.float64)
    loop = np.vstack([pts, pts[:1]])
    seg = np.linalg.norm(np.diff(loop, axis=0), axis=1)
    seg = np.maximum(seg, 1e-9)
    t = np.concatenate([[0.0], np.cumsum(seg)])
    tq = []
    for a, b in zip(t[:-1], t[1:]):
        tq.append(np.linspace(a, b, samples_per_span, endpoint=False))
    tq.append(np.asarray([t[-1]]))
    tq = np.concatenate(tq)
    xs = pchip_interpolate(np.stack([t, loop[:, 0]], axis=1), tq)
    ys = pchip_interpolate(np.stack([t, loop[:, 1]], axis=1), tq)
    return np.stack([xs, ys], axis=1)
