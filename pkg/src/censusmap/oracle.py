"""Brute-force reference assignment used to check the fast paths.

Every point is tested against every leaf polygon with the O(N*M) even-odd
kernel; no hierarchy, no strict bounding boxes, no cells.
"""
from __future__ import annotations

import numpy as np

from .geometry import as_xy, boundary_distance, points_in_polygon_bruteforce
from .hierarchy import RegionHierarchy


def oracle_leaves(h: RegionHierarchy, points) -> np.ndarray:
    """Global leaf index containing each point (first in leaf order), or -1."""
    x, y = as_xy(points)
    out = np.full(len(x), -1, dtype=np.int64)
    for k, leaf in enumerate(h.leaves):
        x0, y0 = leaf.geometry.nodes.min(axis=0)
        x1, y1 = leaf.geometry.nodes.max(axis=0)
        near = np.flatnonzero((out < 0) & (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1))
        if len(near):
            hit = points_in_polygon_bruteforce(np.column_stack([x[near], y[near]]), leaf.geometry)
            out[near[hit]] = k
    return out


def oracle_fips(h: RegionHierarchy, points) -> list[str]:
    leaf = oracle_leaves(h, points)
    fips = h.leaf_fips
    return [fips[k] if k >= 0 else "" for k in leaf]


def min_edge_distance(h: RegionHierarchy, points, reach: float) -> np.ndarray:
    """Distance from each point to the nearest leaf edge, exact below ``reach``.

    Only leaves whose vertex extent, grown by ``reach``, holds the point are
    measured; farther points report ``inf``.
    """
    x, y = as_xy(points)
    best = np.full(len(x), np.inf)
    for leaf in h.leaves:
        x0, y0 = leaf.geometry.nodes.min(axis=0) - reach
        x1, y1 = leaf.geometry.nodes.max(axis=0) + reach
        near = np.flatnonzero((x >= x0) & (x <= x1) & (y >= y0) & (y <= y1))
        if len(near):
            d = boundary_distance(np.column_stack([x[near], y[near]]), leaf.geometry)
            best[near] = np.minimum(best[near], d)
    return best


def off_boundary(h: RegionHierarchy, points, band: float = 1e-9) -> np.ndarray:
    """Mask of points at least ``band`` away from every leaf edge."""
    return min_edge_distance(h, points, reach=2 * band) >= band
