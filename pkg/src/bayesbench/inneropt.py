"""Derivative-free maximization over a box: DIRECT plus simplex refinement.

``direct_maximize`` implements DIviding RECTangles: normalize the box to the
unit cube, repeatedly select potentially-optimal hyperrectangles (lower
convex hull over (size, value) with relative slack 1e-4), trisect them along
their longest sides and sample the new centers.  ``simplex_refine`` polishes
the result with a bounded Nelder-Mead.  Both are deterministic and respect
an evaluation budget.

Objectives may return -inf for infeasible points; such rectangles are kept
but never become potentially optimal.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["Box", "InnerBudget", "direct_maximize", "simplex_refine", "maximize"]

_HULL_SLACK = 1e-4  # relative slack in the potentially-optimal test
_MAX_DEPTH = 40  # sides below 3^-40 are not split further


@dataclass(frozen=True)
class Box:
    """Axis-aligned bounds with lower < upper in every coordinate."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError(f"bad box shapes: {lower.shape} vs {upper.shape}")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("box bounds must be finite")
        if not np.all(lower < upper):
            raise ValueError("box requires lower < upper in every coordinate")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def clamp(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def from_unit(self, u: np.ndarray) -> np.ndarray:
        return self.lower + np.asarray(u, dtype=float) * self.width

    def to_unit(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower) / self.width

    @staticmethod
    def unit(dim: int) -> "Box":
        return Box(np.zeros(dim), np.ones(dim))


@dataclass(frozen=True)
class InnerBudget:
    global_evals: int
    local_evals: int

    def __post_init__(self):
        if self.global_evals < 1 or self.local_evals < 1:
            raise ValueError("budgets must be >= 1")


class _Rect:
    __slots__ = ("center", "depth", "g", "size", "order", "dead")

    def __init__(self, center, depth, g, order):
        self.center = center  # unit-cube coordinates
        self.depth = depth  # per-dim trisection counts; side_j = 3^-depth_j
        self.g = g  # value to MINIMIZE (= -f at center)
        self.order = order  # insertion index, deterministic tie-break
        self.dead = False
        half_sq = 0.0
        for k in depth:
            half_sq += 3.0 ** (-2 * k)
        self.size = 0.5 * math.sqrt(half_sq)


def direct_maximize(
    f: Callable[[np.ndarray], float], box: Box, max_evals: int
) -> tuple[np.ndarray, float]:
    """Globally maximize f over the box with at most ~max_evals evaluations.

    Returns the best sampled center and its value.  The count may overrun by
    at most 2*dim while finishing the rectangle being split.
    """
    d = box.dim
    g = _Minimized(f, box)
    center = np.full(d, 0.5)
    g0 = g(center)
    best = [center, g0]
    if max_evals <= 1:
        return box.from_unit(best[0]), -best[1]

    order_ref = [0]
    root = _Rect(center, np.zeros(d, dtype=np.int64), g0, order_ref[0])
    # size-class buckets: exact key = sorted depth multiset; value = heap
    buckets: dict[tuple, list] = {}
    _push(buckets, root)

    while g.evals < max_evals:
        candidates = _class_minima(buckets)
        if not candidates:
            break
        chosen = _potentially_optimal(candidates, best[1])
        if not chosen:
            break
        progressed = False
        for rect in chosen:
            if g.evals >= max_evals:
                break
            if rect.dead:
                continue
            if _split(rect, g, best, buckets, order_ref) != 0:
                progressed = True
        if not progressed:
            break

    return box.from_unit(best[0]), -best[1]


class _Minimized:
    """Wrap a maximization objective as a minimization with an eval counter."""

    __slots__ = ("f", "box", "evals")

    def __init__(self, f, box):
        self.f = f
        self.box = box
        self.evals = 0

    def __call__(self, u: np.ndarray) -> float:
        self.evals += 1
        value = self.f(self.box.from_unit(u))
        if value != value:  # NaN guard: treat as infeasible
            return math.inf
        return -float(value)


def _push(buckets, rect) -> None:
    key = tuple(sorted(rect.depth.tolist()))
    heap = buckets.get(key)
    if heap is None:
        heap = []
        buckets[key] = heap
    heapq.heappush(heap, (rect.g, rect.order, rect))


def _class_minima(buckets) -> list[_Rect]:
    """Live minimum-value rectangle per size class, ordered by size."""
    minima = []
    for key in list(buckets):
        heap = buckets[key]
        while heap and heap[0][2].dead:
            heapq.heappop(heap)
        if not heap:
            del buckets[key]
            continue
        minima.append(heap[0][2])
    minima.sort(key=lambda r: (r.size, r.order))
    return minima


def _potentially_optimal(minima: list[_Rect], g_best: float) -> list[_Rect]:
    finite = [r for r in minima if math.isfinite(r.g)]
    if not finite:
        # everything infeasible so far: keep exploring the largest rect
        return [minima[-1]]
    chosen = []
    m = len(finite)
    for j, rj in enumerate(finite):
        dj, gj = rj.size, rj.g
        left = -math.inf
        for i in range(j):
            left = max(left, (gj - finite[i].g) / (dj - finite[i].size))
        right = math.inf
        for i in range(j + 1, m):
            right = min(right, (finite[i].g - gj) / (finite[i].size - dj))
        if left > right + 1e-12:
            continue
        if j < m - 1:  # epsilon test only binds when a larger rect exists
            if g_best != 0.0:
                ok = (g_best - gj) / abs(g_best) + dj * right / abs(g_best) >= _HULL_SLACK
            else:
                ok = gj <= dj * right
            if not ok:
                continue
        chosen.append(rj)
    return chosen


def _split(rect, g, best, buckets, order_ref) -> int:
    """Trisect rect along its longest sides; returns number of evaluations."""
    depth = rect.depth
    m = int(depth.min())
    if m >= _MAX_DEPTH:
        rect.dead = True
        return 0
    dims = np.flatnonzero(depth == m)
    delta = 3.0 ** (-(m + 1))

    samples = []  # (w_j, dim, g_plus, g_minus, c_plus, c_minus)
    spent = 0
    for dim in dims:
        c_plus = rect.center.copy()
        c_plus[dim] += delta
        c_minus = rect.center.copy()
        c_minus[dim] -= delta
        g_plus = g(c_plus)
        g_minus = g(c_minus)
        spent += 2
        if g_plus < best[1]:
            best[0], best[1] = c_plus, g_plus
        if g_minus < best[1]:
            best[0], best[1] = c_minus, g_minus
        samples.append((min(g_plus, g_minus), dim, g_plus, g_minus, c_plus, c_minus))

    samples.sort(key=lambda s: (s[0], s[1]))
    rect.dead = True
    current_depth = depth.copy()
    for _, dim, g_plus, g_minus, c_plus, c_minus in samples:
        current_depth = current_depth.copy()
        current_depth[dim] += 1
        for c_new, g_new in ((c_plus, g_plus), (c_minus, g_minus)):
            order_ref[0] += 1
            _push(buckets, _Rect(c_new, current_depth, g_new, order_ref[0]))
    order_ref[0] += 1
    _push(buckets, _Rect(rect.center, current_depth, rect.g, order_ref[0]))
    return spent


def simplex_refine(
    f: Callable[[np.ndarray], float], x0, box: Box, max_evals: int
) -> tuple[np.ndarray, float]:
    """Bounded Nelder-Mead ascent from x0; never returns worse than f(x0).

    Coefficients: reflect 1, expand 2, contract 0.5, shrink 0.5.  Vertices
    are clamped to the box; the initial simplex edge is 5% of the box width.
    """
    d = box.dim
    x0 = box.clamp(np.asarray(x0, dtype=float))
    evals = [0]
    best = [x0.copy(), -math.inf]

    def fx(x):
        evals[0] += 1
        v = float(f(x))
        if v != v:
            v = -math.inf
        if v > best[1]:
            best[0], best[1] = x.copy(), v
        return v

    verts = [x0.copy()]
    for j in range(d):
        step = 0.05 * (box.upper[j] - box.lower[j])
        v = x0.copy()
        if v[j] + step <= box.upper[j]:
            v[j] += step
        else:
            v[j] -= step
        verts.append(v)
    values = [fx(verts[0])]
    for v in verts[1:]:
        if evals[0] >= max_evals:
            return best[0], best[1]
        values.append(fx(v))

    while evals[0] < max_evals:
        idx = sorted(range(d + 1), key=lambda i: -values[i])
        verts = [verts[i] for i in idx]
        values = [values[i] for i in idx]
        if abs(values[0] - values[-1]) < 1e-14 and _diameter(verts) < 1e-12:
            break
        centroid = np.mean(verts[:-1], axis=0)
        worst = verts[-1]
        xr = box.clamp(centroid + (centroid - worst))
        fr = fx(xr)
        if fr > values[0]:
            if evals[0] >= max_evals:
                verts[-1], values[-1] = xr, fr
                break
            xe = box.clamp(centroid + 2.0 * (centroid - worst))
            fe = fx(xe)
            if fe > fr:
                verts[-1], values[-1] = xe, fe
            else:
                verts[-1], values[-1] = xr, fr
        elif fr > values[-2]:
            verts[-1], values[-1] = xr, fr
        else:
            if fr > values[-1]:  # outside contraction
                xc = box.clamp(centroid + 0.5 * (centroid - worst))
            else:  # inside contraction
                xc = box.clamp(centroid - 0.5 * (centroid - worst))
            if evals[0] >= max_evals:
                break
            fc = fx(xc)
            if fc > max(fr, values[-1]):
                verts[-1], values[-1] = xc, fc
            else:  # shrink toward the best vertex
                for i in range(1, d + 1):
                    if evals[0] >= max_evals:
                        break
                    verts[i] = box.clamp(verts[0] + 0.5 * (verts[i] - verts[0]))
                    values[i] = fx(verts[i])

    return best[0], best[1]


def _diameter(verts) -> float:
    v0 = verts[0]
    return max(float(np.max(np.abs(v - v0))) for v in verts[1:])


def maximize(
    f: Callable[[np.ndarray], float], box: Box, budget: InnerBudget
) -> tuple[np.ndarray, float]:
    """Global stage then local refinement; result dominates the global stage."""
    x_g, v_g = direct_maximize(f, box, budget.global_evals)
    x_l, v_l = simplex_refine(f, x_g, box, budget.local_evals)
    if v_l >= v_g:
        return x_l, v_l
    return x_g, v_g
