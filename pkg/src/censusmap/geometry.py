"""Planar primitives: bounding boxes, sparse bbox membership, crossing-number PIP.

All coordinates are plain lon/lat degrees treated as Euclidean (x, y).
Point batches are ``(N, 2)`` float arrays; columns are lon, lat.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

# Upper bound on candidate (point, edge) or (point, box) pairs held at once.
_PAIR_BLOCK = 1 << 22


class Point(NamedTuple):
    lon: float
    lat: float


class BBox(NamedTuple):
    x_min: float
    x_max: float
    y_min: float
    y_max: float


def as_xy(points) -> tuple[np.ndarray, np.ndarray]:
    """Split a point batch into contiguous float64 lon and lat arrays."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        empty = np.empty(0, dtype=np.float64)
        return empty, empty.copy()
    pts = pts.reshape(-1, 2)
    return np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1])


def as_boxes(boxes) -> np.ndarray:
    """Return boxes as a ``(K, 4)`` array of (x_min, x_max, y_min, y_max)."""
    arr = np.asarray(boxes, dtype=np.float64)
    if arr.size == 0:
        return np.empty((0, 4), dtype=np.float64)
    return arr.reshape(-1, 4)


class PolygonGeometry:
    """Boundary of a (possibly multiply-connected) region as nodes and edges.

    ``nodes`` is ``(n, 2)`` float64; ``edges`` is ``(m, 2)`` int64 indices into
    ``nodes``. Edges need not be ordered or oriented; parity only cares about
    the edge multiset. Rings are assumed closed and non-self-intersecting.
    """

    __slots__ = ("nodes", "edges", "_upward")

    def __init__(self, nodes, edges):
        self.nodes = np.ascontiguousarray(np.asarray(nodes, dtype=np.float64).reshape(-1, 2))
        self.edges = np.ascontiguousarray(np.asarray(edges, dtype=np.int64).reshape(-1, 2))
        if self.edges.size and (self.edges.min() < 0 or self.edges.max() >= len(self.nodes)):
            raise ValueError("edge references a vertex index out of range")
        self._upward = None

    @classmethod
    def from_rings(cls, rings: Sequence) -> PolygonGeometry:
        """Build from vertex rings; a repeated closing vertex is dropped."""
        nodes, edges = [], []
        offset = 0
        for ring in rings:
            r = np.asarray(ring, dtype=np.float64).reshape(-1, 2)
            if len(r) > 1 and np.array_equal(r[0], r[-1]):
                r = r[:-1]
            k = len(r)
            if k == 0:
                continue
            idx = np.arange(offset, offset + k)
            edges.append(np.column_stack([idx, np.roll(idx, -1)]))
            nodes.append(r)
            offset += k
        if not nodes:
            return cls(np.empty((0, 2)), np.empty((0, 2), dtype=np.int64))
        return cls(np.concatenate(nodes), np.concatenate(edges))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def segments(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        a = self.nodes[self.edges[:, 0]]
        b = self.nodes[self.edges[:, 1]]
        return a[:, 0], a[:, 1], b[:, 0], b[:, 1]

    def rings(self) -> list[np.ndarray]:
        """Chain edges back into closed vertex rings (without closing vertex)."""
        out_edges: dict[int, list[int]] = {}
        for k, (i, _) in enumerate(self.edges.tolist()):
            out_edges.setdefault(i, []).append(k)
        used = np.zeros(len(self.edges), dtype=bool)
        rings = []
        for start in range(len(self.edges)):
            if used[start]:
                continue
            ring = []
            k = start
            while k is not None and not used[k]:
                used[k] = True
                i, j = self.edges[k]
                ring.append(int(i))
                nxt = [e for e in out_edges.get(int(j), ()) if not used[e]]
                k = nxt[0] if nxt else None
            rings.append(self.nodes[ring])
        return rings

    def __eq__(self, other):
        if not isinstance(other, PolygonGeometry):
            return NotImplemented
        return np.array_equal(self.nodes, other.nodes) and np.array_equal(self.edges, other.edges)

    def __repr__(self):
        return f"PolygonGeometry(n_nodes={len(self.nodes)}, n_edges={self.n_edges})"


@dataclass(frozen=True)
class MembershipMatrix:
    """Sparse boolean points x boxes matrix held in both CSR and CSC form."""

    n_points: int
    n_boxes: int
    row_ptr: np.ndarray
    row_cols: np.ndarray
    col_ptr: np.ndarray
    col_rows: np.ndarray

    @property
    def nnz(self) -> int:
        return len(self.row_cols)

    def row(self, i: int) -> np.ndarray:
        return self.row_cols[self.row_ptr[i]:self.row_ptr[i + 1]]

    def column(self, j: int) -> np.ndarray:
        return self.col_rows[self.col_ptr[j]:self.col_ptr[j + 1]]

    def row_counts(self) -> np.ndarray:
        return np.diff(self.row_ptr)

    def col_counts(self) -> np.ndarray:
        return np.diff(self.col_ptr)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.n_points, self.n_boxes), dtype=bool)
        rows = np.repeat(np.arange(self.n_points), self.row_counts())
        dense[rows, self.row_cols] = True
        return dense


def bbox_contains(box: BBox, p: Point) -> bool:
    x_min, x_max, y_min, y_max = box
    lon, lat = p
    return x_min < lon < x_max and y_min < lat < y_max


def bbox_membership(points, boxes) -> MembershipMatrix:
    """Strict point-in-box membership of every point against every box.

    Evaluated as blocked outer comparisons; only the nonzero pattern is kept.
    """
    bx = as_boxes(boxes)
    if len(bx) == 0:
        raise ValueError("bbox_membership needs at least one box")
    x, y = as_xy(points)
    n, k = len(x), len(bx)
    x_min, x_max, y_min, y_max = (bx[:, c] for c in range(4))
    step = max(1, _PAIR_BLOCK // k)
    rows, cols = [], []
    for s in range(0, n, step):
        xs = x[s:s + step, None]
        ys = y[s:s + step, None]
        hit = (xs > x_min) & (xs < x_max) & (ys > y_min) & (ys < y_max)
        r, c = np.nonzero(hit)
        rows.append(r + s)
        cols.append(c)
    r = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
    c = np.concatenate(cols) if cols else np.empty(0, dtype=np.int64)
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(r, minlength=n), out=row_ptr[1:])
    order = np.argsort(c, kind="stable")
    col_ptr = np.zeros(k + 1, dtype=np.int64)
    np.cumsum(np.bincount(c, minlength=k), out=col_ptr[1:])
    return MembershipMatrix(n, k, row_ptr, c.astype(np.int64), col_ptr, r[order].astype(np.int64))


def polygon_bbox(poly: PolygonGeometry) -> BBox:
    if len(poly.nodes) == 0:
        raise ValueError("polygon has no vertices")
    lo = poly.nodes.min(axis=0)
    hi = poly.nodes.max(axis=0)
    return BBox(float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]))


def _upward_edges(poly: PolygonGeometry):
    """Non-horizontal edges oriented so that (xa, ya) is the lower endpoint.

    Cached on the polygon, which is treated as immutable once built.
    """
    if poly._upward is None:
        poly._upward = _orient_up(poly)
    return poly._upward


def _orient_up(poly: PolygonGeometry):
    x1, y1, x2, y2 = poly.segments()
    keep = y1 != y2
    x1, y1, x2, y2 = x1[keep], y1[keep], x2[keep], y2[keep]
    flip = y1 > y2
    xa = np.where(flip, x2, x1)
    ya = np.where(flip, y2, y1)
    xb = np.where(flip, x1, x2)
    yb = np.where(flip, y1, y2)
    return xa, ya, xb, yb


def points_in_polygon(points, poly: PolygonGeometry) -> np.ndarray:
    """Even-odd inside test for a batch of points against one polygon.

    Points are sorted by latitude once; each edge then finds the contiguous
    run of points whose horizontal ray it can cross with two binary searches,
    so only those (point, edge) pairs are tested. A vertex lying exactly on a
    query's latitude counts as above the ray (half-open rule).
    """
    x, y = as_xy(points)
    n = len(x)
    inside = np.zeros(n, dtype=bool)
    if n == 0 or poly.n_edges == 0:
        return inside
    xa, ya, xb, yb = _upward_edges(poly)
    if len(xa) == 0:
        return inside

    order = np.argsort(y, kind="stable")
    ys = y[order]
    xs = x[order]
    lo = np.searchsorted(ys, ya, side="right")
    hi = np.searchsorted(ys, yb, side="right")
    counts = hi - lo
    live = np.flatnonzero(counts)
    if len(live) == 0:
        return inside
    xa, ya, xb, yb = xa[live], ya[live], xb[live], yb[live]
    lo, counts = lo[live], counts[live]

    crossings = np.zeros(n, dtype=np.int64)
    ends = np.cumsum(counts)
    start = 0
    while start < len(counts):
        base = ends[start - 1] if start else 0
        stop = int(np.searchsorted(ends, base + _PAIR_BLOCK, side="right"))
        stop = max(stop, start + 1)
        c = counts[start:stop]
        total = int(c.sum())
        edge = np.repeat(np.arange(start, stop), c)
        first = np.cumsum(c) - c
        pos = np.arange(total) - np.repeat(first, c) + np.repeat(lo[start:stop], c)
        px = xs[pos]
        py = ys[pos]
        # Point strictly left of the upward edge means the +x ray crosses it.
        left = (xb[edge] - xa[edge]) * (py - ya[edge]) - (px - xa[edge]) * (yb[edge] - ya[edge]) > 0
        crossings += np.bincount(pos[left], minlength=n)
        start = stop
    inside[order] = (crossings & 1).astype(bool)
    return inside


def points_in_polygon_bruteforce(points, poly: PolygonGeometry) -> np.ndarray:
    """Reference even-odd test: every point against every edge, O(N*M).

    Same tie rule as :func:`points_in_polygon` but no sorting or searching.
    """
    x, y = as_xy(points)
    inside = np.zeros(len(x), dtype=bool)
    for xa, ya, xb, yb in zip(*_upward_edges(poly)):
        spans = (y > ya) & (y <= yb)
        left = (xb - xa) * (y - ya) - (x - xa) * (yb - ya) > 0
        inside ^= spans & left
    return inside


def segment_distance(px, py, x1, y1, x2, y2) -> np.ndarray:
    """Euclidean distance from points to segments (broadcasting)."""
    dx = x2 - x1
    dy = y2 - y1
    len2 = dx * dx + dy * dy
    with np.errstate(invalid="ignore", divide="ignore"):
        t = ((px - x1) * dx + (py - y1) * dy) / len2
    t = np.where(len2 > 0, np.clip(t, 0.0, 1.0), 0.0)
    return np.hypot(px - (x1 + t * dx), py - (y1 + t * dy))


def boundary_distance(points, poly: PolygonGeometry) -> np.ndarray:
    """Distance from each point to the nearest edge of ``poly``."""
    x, y = as_xy(points)
    best = np.full(len(x), np.inf)
    for x1, y1, x2, y2 in zip(*poly.segments()):
        np.minimum(best, segment_distance(x, y, x1, y1, x2, y2), out=best)
    return best


def distance_to_polygon(points, poly: PolygonGeometry) -> np.ndarray:
    """Zero for points inside ``poly``, else distance to its boundary."""
    d = boundary_distance(points, poly)
    d[points_in_polygon(points, poly)] = 0.0
    return d


def segments_cross_open_rects(x1, y1, x2, y2, rx0, ry0, rx1, ry1) -> np.ndarray:
    """Elementwise: does segment i pass through the open interior of rect i?

    Separating-axis test on the two rectangle axes and the segment normal. A
    segment that only touches the rectangle border does not count.
    """
    overlap = (
        (np.maximum(x1, x2) > rx0) & (np.minimum(x1, x2) < rx1)
        & (np.maximum(y1, y2) > ry0) & (np.minimum(y1, y2) < ry1)
    )
    dx = x2 - x1
    dy = y2 - y1
    s00 = dx * (ry0 - y1) - dy * (rx0 - x1)
    s10 = dx * (ry0 - y1) - dy * (rx1 - x1)
    s01 = dx * (ry1 - y1) - dy * (rx0 - x1)
    s11 = dx * (ry1 - y1) - dy * (rx1 - x1)
    lo = np.minimum(np.minimum(s00, s10), np.minimum(s01, s11))
    hi = np.maximum(np.maximum(s00, s10), np.maximum(s01, s11))
    return overlap & (lo < 0) & (hi > 0)
