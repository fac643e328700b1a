"""Synthetic boundary hierarchies and query point generators.

The generator lays out one global grid of jittered quadrilaterals. Block
groups are single grid cells, counties and states are unions of their
cells, so every level tiles its parent exactly and shares vertices with it.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .geometry import BBox, PolygonGeometry, polygon_bbox
from .hierarchy import RegionHierarchy, RegionNode


def _grid_shape(n: int) -> tuple[int, int]:
    cols = math.ceil(math.sqrt(n))
    rows = math.ceil(n / cols)
    return rows, cols


def _trace_union(cells, ny: int, verts: np.ndarray) -> PolygonGeometry:
    """Outer boundary (plus any holes) of a union of unit grid cells."""
    directed = set()
    for gx, gy in cells:
        corners = [(gx, gy), (gx + 1, gy), (gx + 1, gy + 1), (gx, gy + 1)]
        for a, b in zip(corners, corners[1:] + corners[:1]):
            directed.add((a[0] * (ny + 1) + a[1], b[0] * (ny + 1) + b[1]))
    boundary = sorted(e for e in directed if (e[1], e[0]) not in directed)
    outgoing: dict[int, list[int]] = {}
    for a, b in boundary:
        outgoing.setdefault(a, []).append(b)
    rings = []
    for a, _ in boundary:
        if not outgoing.get(a):
            continue
        ring = [a]
        cur = outgoing[a].pop(0)
        while cur != a:
            ring.append(cur)
            cur = outgoing[cur].pop(0)
        rings.append(verts[ring])
    return PolygonGeometry.from_rings(rings)


def generate_synthetic(
    seed: int,
    n_states: int,
    counties_per_state: int,
    blocks_per_county: int,
    jitter: float,
    *,
    pitch: float = 0.05,
    origin: tuple[float, float] = (-100.0, 35.0),
) -> RegionHierarchy:
    """Deterministic state/county/block tessellation.

    ``jitter`` is the maximum displacement of each grid vertex along each
    axis, as a fraction of the block pitch; it must stay below 0.5 so the
    quadrilaterals stay simple. FIPS codes are state ``s+1``, county
    ``2c+1``, tract ``100 * (b // 9 + 1)`` and block group ``b % 9 + 1``.
    """
    if min(n_states, counties_per_state, blocks_per_county) < 1:
        raise ValueError("all counts must be >= 1")
    if not 0 <= jitter < 0.5:
        raise ValueError("jitter must be in [0, 0.5)")
    if n_states > 99 or counties_per_state > 499:
        raise ValueError("FIPS widths allow at most 99 states and 499 counties per state")

    s_rows, s_cols = _grid_shape(n_states)
    c_rows, c_cols = _grid_shape(counties_per_state)
    b_rows, b_cols = _grid_shape(blocks_per_county)
    nx = s_cols * c_cols * b_cols
    ny = s_rows * c_rows * b_rows

    rng = np.random.default_rng(seed)
    gx, gy = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), indexing="ij")
    verts = np.stack([origin[0] + gx * pitch, origin[1] + gy * pitch], axis=-1).astype(np.float64)
    if jitter > 0:
        verts += rng.uniform(-jitter, jitter, size=verts.shape) * pitch
    flat = verts.reshape(-1, 2)

    root = []
    for s in range(n_states):
        sr, sc = divmod(s, s_cols)
        state_cells = []
        counties = []
        for c in range(counties_per_state):
            cr, cc = divmod(c, c_cols)
            county_cells = []
            blocks = []
            for b in range(blocks_per_county):
                br, bc = divmod(b, b_cols)
                cell = ((sc * c_cols + cc) * b_cols + bc, (sr * c_rows + cr) * b_rows + br)
                county_cells.append(cell)
                poly = _trace_union([cell], ny, flat)
                tract, blkgrp = 100 * (b // 9 + 1), b % 9 + 1
                fips = f"{s + 1:02d}{2 * c + 1:03d}{tract:06d}{blkgrp}"
                blocks.append(RegionNode(int(f"{tract}{blkgrp}"), polygon_bbox(poly), poly, fips12=fips))
            poly = _trace_union(county_cells, ny, flat)
            counties.append(RegionNode(2 * c + 1, polygon_bbox(poly), poly, children=blocks))
            state_cells.extend(county_cells)
        poly = _trace_union(state_cells, ny, flat)
        root.append(RegionNode(s + 1, polygon_bbox(poly), poly, children=counties))
    return RegionHierarchy(root)


def uniform_points(bounds: BBox, n: int, seed: int, margin: float = 0.0) -> np.ndarray:
    """``n`` points uniform over ``bounds`` grown by ``margin`` on every side."""
    rng = np.random.default_rng(seed)
    x0, x1, y0, y1 = bounds
    pts = np.empty((n, 2))
    pts[:, 0] = rng.uniform(x0 - margin, x1 + margin, n)
    pts[:, 1] = rng.uniform(y0 - margin, y1 + margin, n)
    return pts


def clustered_points(h: RegionHierarchy, n: int, seed: int, n_clusters: int = 32,
                     background: float = 0.1) -> np.ndarray:
    """Population-like points: Gaussian clusters around random block centres
    plus a uniform ``background`` fraction over the whole extent."""
    rng = np.random.default_rng(seed)
    bounds = h.bounds()
    boxes = h.leaf_boxes
    centres = rng.choice(len(boxes), size=n_clusters)
    cx = 0.5 * (boxes[centres, 0] + boxes[centres, 1])
    cy = 0.5 * (boxes[centres, 2] + boxes[centres, 3])
    spread = 0.02 * min(bounds.x_max - bounds.x_min, bounds.y_max - bounds.y_min)
    weights = rng.pareto(1.5, n_clusters) + 1.0
    weights /= weights.sum()
    n_bg = int(round(background * n))
    which = rng.choice(n_clusters, size=n - n_bg, p=weights)
    pts = np.empty((n, 2))
    pts[: n - n_bg, 0] = rng.normal(cx[which], spread)
    pts[: n - n_bg, 1] = rng.normal(cy[which], spread)
    pts[n - n_bg:] = uniform_points(bounds, n_bg, seed + 1)
    pts[:, 0] = np.clip(pts[:, 0], bounds.x_min, bounds.x_max)
    pts[:, 1] = np.clip(pts[:, 1], bounds.y_min, bounds.y_max)
    return pts[rng.permutation(n)]


def _feature(node: RegionNode, props: dict) -> dict:
    rings = [np.vstack([r, r[:1]]).tolist() for r in node.geometry.rings()]
    x0, x1, y0, y1 = node.bbox
    if len(rings) == 1:
        geometry = {"type": "Polygon", "coordinates": rings}
    else:
        geometry = {"type": "MultiPolygon", "coordinates": [[r] for r in rings]}
    return {"type": "Feature", "bbox": [x0, y0, x1, y1], "properties": props, "geometry": geometry}


def write_geojson(h: RegionHierarchy, out_dir) -> tuple[Path, Path, Path]:
    """Write ``states/counties/blocks.geojson`` with census property names.

    Multi-ring regions are written as MultiPolygon with one ring per part;
    the even-odd rule makes that equivalent to holes for ingestion.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    states, counties, blocks = [], [], []
    for state in h.root:
        sfp = f"{state.fp_code:02d}"
        states.append(_feature(state, {"STATEFP": sfp}))
        for county in state.children:
            cfp = f"{county.fp_code:03d}"
            counties.append(_feature(county, {"STATEFP": sfp, "COUNTYFP": cfp}))
            for block in county.children:
                f = block.fips12
                blocks.append(_feature(block, {
                    "STATE_FIPS": f[:2], "CNTY_FIPS": f[2:5], "TRACT": f[5:11],
                    "BLKGRP": f[11], "FIPS": f,
                }))
    paths = out_dir / "states.geojson", out_dir / "counties.geojson", out_dir / "blocks.geojson"
    for path, feats in zip(paths, (states, counties, blocks)):
        path.write_text(json.dumps({"type": "FeatureCollection", "features": feats}))
    return paths
