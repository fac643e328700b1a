"""Reference implementations used by the tests.

These are deliberately naive and share no code with the package: plain
broadcasting over every (point, edge) pair, per-level quadrant descent for
cell ids, and dense loops for bbox membership.
"""
from __future__ import annotations

import numpy as np

DOMAIN = (-180.0, 180.0, -90.0, 90.0)


def ring_edges(rings):
    """Segments (x1, y1, x2, y2) of closed rings given as vertex arrays."""
    segs = []
    for r in rings:
        r = np.asarray(r, dtype=float)
        segs.append(np.column_stack([r, np.roll(r, -1, axis=0)]))
    return np.vstack(segs) if segs else np.empty((0, 4))


def geometry_segments(poly):
    n, e = poly.nodes, poly.edges
    return np.column_stack([n[e[:, 0]], n[e[:, 1]]])


def naive_pip(points, segs) -> np.ndarray:
    """Even-odd test over every (point, edge) pair; +x ray, vertex at py counts as above."""
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(segs) == 0:
        return np.zeros(len(p), dtype=bool)
    px, py = p[:, :1], p[:, 1:]
    x1, y1, x2, y2 = (segs[:, k][None, :] for k in range(4))
    straddle = (y1 >= py) != (y2 >= py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
    return ((straddle & (xcross > px)).sum(axis=1) % 2).astype(bool)


def naive_pip_scalar(px: float, py: float, segs) -> bool:
    inside = False
    for x1, y1, x2, y2 in segs:
        if (y1 >= py) != (y2 >= py):
            if x1 + (py - y1) * (x2 - x1) / (y2 - y1) > px:
                inside = not inside
    return inside


def seg_distance(points, segs) -> np.ndarray:
    """Min Euclidean distance from each point to any segment."""
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(segs) == 0:
        return np.full(len(p), np.inf)
    px, py = p[:, :1], p[:, 1:]
    x1, y1, x2, y2 = (segs[:, k][None, :] for k in range(4))
    dx, dy = x2 - x1, y2 - y1
    ll = dx * dx + dy * dy
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(ll > 0, ((px - x1) * dx + (py - y1) * dy) / ll, 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(px - (x1 + t * dx), py - (y1 + t * dy)).min(axis=1)


def star_polygon(rng, n_vertices: int, centre=(0.0, 0.0), r_min=0.2, r_max=1.0, quantum=None):
    """Random star-shaped (hence simple) ring, vertices in angular order."""
    ang = np.sort(rng.uniform(0, 2 * np.pi, n_vertices))
    rad = rng.uniform(r_min, r_max, n_vertices)
    ring = np.column_stack([centre[0] + rad * np.cos(ang), centre[1] + rad * np.sin(ang)])
    if quantum:
        ring = np.round(ring / quantum) * quantum
    return ring


class LeafOracle:
    """Brute-force leaf lookup over every leaf polygon of a hierarchy."""

    def __init__(self, h):
        self.segs = [geometry_segments(leaf.geometry) for leaf in h.leaves]
        self.ext = np.array([[s[:, [0, 2]].min(), s[:, [0, 2]].max(), s[:, [1, 3]].min(), s[:, [1, 3]].max()]
                             for s in self.segs])

    def _near(self, p, k, pad=0.0):
        x0, x1, y0, y1 = self.ext[k]
        return np.flatnonzero((p[:, 0] >= x0 - pad) & (p[:, 0] <= x1 + pad)
                              & (p[:, 1] >= y0 - pad) & (p[:, 1] <= y1 + pad))

    def leaves(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        out = np.full(len(p), -1, dtype=np.int64)
        for k, segs in enumerate(self.segs):
            near = self._near(p, k)
            near = near[out[near] < 0]
            if len(near):
                out[near[naive_pip(p[near], segs)]] = k
        return out

    def edge_distance(self, points, reach: float) -> np.ndarray:
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        best = np.full(len(p), np.inf)
        for k, segs in enumerate(self.segs):
            near = self._near(p, k, reach)
            if len(near):
                best[near] = np.minimum(best[near], seg_distance(p[near], segs))
        return best

    def distance_to_leaf(self, points, k: int) -> np.ndarray:
        """0 inside leaf ``k``, else distance to its boundary."""
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        d = seg_distance(p, self.segs[k])
        return np.where(naive_pip(p, self.segs[k]), 0.0, d)


# ---------------------------------------------------------------- cell ids

def quadrant_cell_id(lon: float, lat: float, level: int) -> int:
    """Cell id by explicit descent: halve the rectangle, append SW/SE/NW/NE."""
    x0, x1, y0, y1 = DOMAIN
    path = 0
    for _ in range(level):
        xm, ym = (x0 + x1) / 2, (y0 + y1) / 2
        east = lon >= xm
        north = lat >= ym
        path = (path << 2) | (int(east) + 2 * int(north))
        x0, x1 = (xm, x1) if east else (x0, xm)
        y0, y1 = (ym, y1) if north else (y0, ym)
    return ((path << 1) | 1) << (63 - 2 * level)


def id_level(cell: int) -> int:
    tz = (cell & -cell).bit_length() - 1
    return (63 - tz) // 2


def is_ancestor_or_self(a: int, b: int) -> bool:
    la, lb = id_level(a), id_level(b)
    if la > lb:
        return False
    shift = 64 - 2 * la
    return (a >> shift) == (b >> shift) if la else True


def random_cover(rng, p_split: float = 0.2, p_keep: float = 0.7) -> list[int]:
    """Non-overlapping cell set from random subdivision of the root.

    One randomly chosen chain is always split down to a random depth so the
    covers reach deep levels.
    """
    deep = int(rng.integers(0, 31))
    chain_path = int(rng.integers(0, 1 << 60))  # 30 random quadrant digits
    out = []
    stack = [(0, 0)]  # (level, path)
    while stack:
        level, path = stack.pop()
        on_chain = level < deep and path == chain_path >> (60 - 2 * level)
        if level < 30 and (on_chain or rng.random() < p_split):
            stack.extend((level + 1, (path << 2) | d) for d in range(4))
        elif rng.random() < p_keep:
            out.append(((path << 1) | 1) << (63 - 2 * level))
    return out


def linear_lookup(cover_ids, queries) -> np.ndarray:
    """Index of the cover entry that is an ancestor of each query, or -1 (dense scan)."""
    ids = np.asarray(cover_ids, dtype=np.uint64)
    q = np.asarray(queries, dtype=np.uint64)
    out = np.full(len(q), -1, dtype=np.int64)
    if len(ids) == 0:
        return out
    lsb = np.array([c & -c for c in map(int, ids)], dtype=np.uint64)
    lo, hi = ids - (lsb - np.uint64(1)), ids + (lsb - np.uint64(1))
    hit = (q[:, None] >= lo[None, :]) & (q[:, None] <= hi[None, :])
    has = hit.any(axis=1)
    out[has] = hit[has].argmax(axis=1)
    return out


def random_leaf_queries(rng, cover_ids, n: int) -> np.ndarray:
    """Level-30 ids, half drawn inside random cover entries, half anywhere."""
    out = [(int(rng.integers(0, 1 << 60)) << 4) | 8 for _ in range(n - n // 2)]
    for _ in range(n // 2):
        if not cover_ids:
            break
        c = int(cover_ids[rng.integers(len(cover_ids))])
        lsb = c & -c
        span = max(1, (2 * lsb) >> 4)
        out.append((c - lsb) + (int(rng.integers(0, span)) << 4) + 8)
    return np.array(out, dtype=np.uint64)


# ---------------------------------------------------------------- membership

def dense_membership(points, boxes) -> np.ndarray:
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    out = np.zeros((len(p), len(boxes)), dtype=bool)
    for i, (x, y) in enumerate(p):
        for j, (x0, x1, y0, y1) in enumerate(boxes):
            out[i, j] = x0 < x < x1 and y0 < y < y1
    return out


def dense_membership_fast(points, boxes) -> np.ndarray:
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    b = np.asarray(boxes, dtype=float).reshape(-1, 4)
    x, y = p[:, :1], p[:, 1:]
    return (x > b[:, 0]) & (x < b[:, 1]) & (y > b[:, 2]) & (y < b[:, 3])


def replay_descent(h, points, strict: bool):
    """Re-run the three-level filter point by point from dense matrices.

    Returns (leaf per point, PIP evaluations, ambiguous pair count). A point
    is tested against its candidates in ascending order until the first
    polygon hit; ``ambiguous pairs`` counts every candidate of every point
    that needed testing, whether or not it was reached.
    """
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    leaf = np.full(len(p), -1, dtype=np.int64)
    evaluations = pairs = 0
    offsets = {}
    k = 0
    for s, state in enumerate(h.root):
        for c, county in enumerate(state.children):
            offsets[s, c] = k
            k += len(county.children)

    def level(nodes, idx):
        nonlocal evaluations, pairs
        boxes = [tuple(n.bbox) for n in nodes]
        member = dense_membership_fast(p[idx], boxes)
        segs = [geometry_segments(n.geometry) for n in nodes]
        out = np.full(len(idx), -1, dtype=np.int64)
        for r in range(len(idx)):
            cand = np.flatnonzero(member[r])
            if len(cand) == 0:
                continue
            if len(cand) == 1 and not strict:
                out[r] = cand[0]
                continue
            pairs += len(cand)
            for j in cand:
                evaluations += 1
                if naive_pip(p[idx[r]][None], segs[j])[0]:
                    out[r] = j
                    break
            else:
                if not strict:
                    out[r] = cand[-1]
        return out

    all_idx = np.arange(len(p))
    st = level(h.root, all_idx)
    for s, state in enumerate(h.root):
        idx = all_idx[st == s]
        if len(idx) == 0:
            continue
        ct = level(state.children, idx)
        for c, county in enumerate(state.children):
            jdx = idx[ct == c]
            if len(jdx) == 0:
                continue
            bt = level(county.children, jdx)
            ok = bt >= 0
            leaf[jdx[ok]] = offsets[s, c] + bt[ok]
    return leaf, evaluations, pairs
