"""Interior/boundary quadtree covers of the leaf polygons.

A cell whose open interior no polygon edge passes through lies wholly in
one face of the polygon arrangement; its centre decides which. Cells that
an edge does pass through are subdivided until the stop level and then
emitted as boundary cells carrying every polygon whose edges cross them.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ..geometry import PolygonGeometry, points_in_polygon, segments_cross_open_rects
from ..hierarchy import RegionHierarchy
from .cellid import MAX_LEVEL, cell_diagonal, ids_from_ij, levels_of, rects_from_ij, rects_of

INTERIOR = 0
BOUNDARY = 1
MODES = ("exact", "approx")


class Classification(NamedTuple):
    kind: str  # "outside" | "interior" | "boundary"
    polygons: tuple[int, ...] = ()


@dataclass(frozen=True)
class CellEntry:
    id: int
    kind: str  # "interior" | "boundary"
    polygon: int  # interior polygon, or deemed polygon for boundary cells
    candidates: tuple[int, ...] = ()


@dataclass(eq=False)
class CellCover:
    """Non-overlapping cells sorted by id, in columnar form.

    ``polygon[k]`` is the interior polygon of entry k, or its deemed polygon
    when ``kind[k] == BOUNDARY``; candidates of entry k are
    ``cand[cand_ptr[k]:cand_ptr[k + 1]]`` (empty for interior entries).
    """

    ids: np.ndarray
    kind: np.ndarray
    polygon: np.ndarray
    cand_ptr: np.ndarray
    cand: np.ndarray
    max_level: int
    mode: str
    epsilon: float | None
    n_polygons: int

    def __len__(self):
        return len(self.ids)

    def candidates(self, k: int) -> np.ndarray:
        return self.cand[self.cand_ptr[k]:self.cand_ptr[k + 1]]

    def entry(self, k: int) -> CellEntry:
        kind = "interior" if self.kind[k] == INTERIOR else "boundary"
        return CellEntry(int(self.ids[k]), kind, int(self.polygon[k]),
                         tuple(int(c) for c in self.candidates(k)))

    @property
    def entries(self) -> list[CellEntry]:
        return [self.entry(k) for k in range(len(self))]

    @property
    def levels(self) -> np.ndarray:
        return levels_of(self.ids)

    def counts(self) -> dict[str, int]:
        n_boundary = int(np.count_nonzero(self.kind == BOUNDARY))
        return {"interior": len(self) - n_boundary, "boundary": n_boundary}

    def __eq__(self, other):
        if not isinstance(other, CellCover):
            return NotImplemented
        same_eps = self.epsilon == other.epsilon
        return (same_eps and self.mode == other.mode and self.max_level == other.max_level
                and self.n_polygons == other.n_polygons
                and all(np.array_equal(getattr(self, f), getattr(other, f))
                        for f in ("ids", "kind", "polygon", "cand_ptr", "cand")))


class _Edges(NamedTuple):
    x1: np.ndarray
    y1: np.ndarray
    x2: np.ndarray
    y2: np.ndarray
    poly: np.ndarray


def _edge_table(polygons: Sequence[PolygonGeometry]) -> _Edges:
    parts = [p.segments() + (np.full(p.n_edges, k, dtype=np.int64),) for k, p in enumerate(polygons)]
    if not parts:
        empty = np.empty(0)
        return _Edges(empty, empty, empty, empty, np.empty(0, dtype=np.int64))
    return _Edges(*(np.concatenate(c) for c in zip(*parts)))


def _extents(polygons: Sequence[PolygonGeometry]) -> np.ndarray:
    out = np.full((len(polygons), 4), np.nan)
    for k, p in enumerate(polygons):
        if len(p.nodes):
            lo, hi = p.nodes.min(axis=0), p.nodes.max(axis=0)
            out[k] = lo[0], hi[0], lo[1], hi[1]
    return out


def _centre_hits(cx, cy, pair_cell, pair_poly, polygons) -> np.ndarray:
    """Boolean per pair: is the centre of ``pair_cell`` inside ``pair_poly``?"""
    hit = np.zeros(len(pair_cell), dtype=bool)
    if len(pair_cell) == 0:
        return hit
    order = np.argsort(pair_poly, kind="stable")
    polys, first = np.unique(pair_poly[order], return_index=True)
    bounds = np.append(first, len(order))
    for p, lo, hi in zip(polys, bounds[:-1], bounds[1:]):
        sel = order[lo:hi]
        cells = pair_cell[sel]
        hit[sel] = points_in_polygon(np.column_stack([cx[cells], cy[cells]]), polygons[p])
    return hit


def classify_cell(cell: int, polygons: Sequence[PolygonGeometry]) -> Classification:
    """Classify one cell against a list of polygons.

    ``boundary`` lists every polygon with an edge through the cell's open
    interior; ``interior`` means no such edge and the centre lies in exactly
    one polygon; anything else is ``outside``.
    """
    x0, y0, x1, y1 = (float(v[0]) for v in rects_of(np.array([cell], dtype=np.uint64)))
    e = _edge_table(polygons)
    crossing = segments_cross_open_rects(e.x1, e.y1, e.x2, e.y2, x0, y0, x1, y1)
    if crossing.any():
        return Classification("boundary", tuple(int(p) for p in np.unique(e.poly[crossing])))
    centre = np.array([[0.5 * (x0 + x1), 0.5 * (y0 + y1)]])
    inside = [k for k, p in enumerate(polygons) if points_in_polygon(centre, p)[0]]
    if len(inside) == 1:
        return Classification("interior", (inside[0],))
    return Classification("outside")


def _stop_level(max_level: int, mode: str, epsilon: float | None) -> int:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if not 0 <= max_level <= MAX_LEVEL:
        raise ValueError(f"max_level must be in [0, {MAX_LEVEL}]")
    if mode == "exact":
        return max_level
    if epsilon is None or not epsilon > 0:
        raise ValueError("approx mode needs epsilon > 0")
    floor = cell_diagonal(MAX_LEVEL)
    if epsilon < floor:
        raise ValueError(f"epsilon {epsilon!r} is below the level-{MAX_LEVEL} cell diagonal {floor:.6g} degrees")
    return next(k for k in range(MAX_LEVEL + 1) if cell_diagonal(k) <= epsilon)


class _Sink:
    """Collects emitted cells level by level."""

    def __init__(self):
        self.ids, self.kind, self.polygon, self.ncand, self.cand = [], [], [], [], []

    def interior(self, ids, polys):
        self.ids.append(ids)
        self.kind.append(np.full(len(ids), INTERIOR, dtype=np.uint8))
        self.polygon.append(polys)
        self.ncand.append(np.zeros(len(ids), dtype=np.int64))

    def boundary(self, ids, deemed, ncand, cand):
        self.ids.append(ids)
        self.kind.append(np.full(len(ids), BOUNDARY, dtype=np.uint8))
        self.polygon.append(deemed)
        self.ncand.append(ncand)
        self.cand.append(cand)

    def finish(self, **params) -> CellCover:
        if not self.ids:
            z = np.empty(0, dtype=np.int64)
            return CellCover(np.empty(0, dtype=np.uint64), np.empty(0, dtype=np.uint8), z,
                             np.zeros(1, dtype=np.int64), z, **params)
        ids = np.concatenate(self.ids)
        kind = np.concatenate(self.kind)
        polygon = np.concatenate(self.polygon).astype(np.int64)
        ncand = np.concatenate(self.ncand)
        # Candidate blocks follow emission order; re-sort them with the ids.
        cand = np.concatenate(self.cand) if self.cand else np.empty(0, dtype=np.int64)
        start = np.cumsum(ncand) - ncand
        order = np.argsort(ids, kind="stable")
        ncand = ncand[order]
        ptr = np.zeros(len(ids) + 1, dtype=np.int64)
        np.cumsum(ncand, out=ptr[1:])
        gather = np.repeat(start[order], ncand) + (np.arange(ptr[-1]) - np.repeat(ptr[:-1], ncand))
        return CellCover(ids[order], kind[order], polygon[order], ptr, cand[gather].astype(np.int64), **params)


def _settle(level, ci, cj, e_cell, e_edge, p_cell, p_poly, *, edges, polygons, extents, stop, sink):
    """Emit settled cells of one level; return the boundary cells to split."""
    n = len(ci)
    x0, y0, x1, y1 = rects_from_ij(ci, cj, level)
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    crossed = np.bincount(e_cell, minlength=n) > 0

    quiet = ~crossed[p_cell]
    qc, qp = p_cell[quiet], p_poly[quiet]
    hit = _centre_hits(cx, cy, qc, qp, polygons)
    n_hits = np.bincount(qc[hit], minlength=n)
    owner = np.full(n, -1, dtype=np.int64)
    owner[qc[hit]] = qp[hit]
    interior = ~crossed & (n_hits == 1)
    if interior.any():
        sink.interior(ids_from_ij(ci[interior], cj[interior], level), owner[interior])

    if level < stop:
        return crossed

    # Boundary cells at the stop level: candidates are polygons with a crossing edge.
    key = np.unique(e_cell * len(polygons) + edges.poly[e_edge])
    b_cell, b_poly = key // len(polygons), key % len(polygons)
    cells, ncand = np.unique(b_cell, return_counts=True)
    inside = _centre_hits(cx, cy, b_cell, b_poly, polygons)
    deemed = np.full(n, -1, dtype=np.int64)
    # Pairs are sorted by (cell, poly); keep the first containing candidate.
    hit_pairs = np.flatnonzero(inside)
    _, first = np.unique(b_cell[hit_pairs], return_index=True)
    deemed[b_cell[hit_pairs[first]]] = b_poly[hit_pairs[first]]
    mask = deemed[b_cell] < 0
    if mask.any():
        fc, fp = b_cell[mask], b_poly[mask]
        bx = 0.5 * (extents[fp, 0] + extents[fp, 1])
        by = 0.5 * (extents[fp, 2] + extents[fp, 3])
        dist = np.hypot(bx - cx[fc], by - cy[fc])
        order = np.lexsort((fp, dist, fc))
        _, first = np.unique(fc[order], return_index=True)
        deemed[fc[order][first]] = fp[order][first]
    sink.boundary(ids_from_ij(ci[cells], cj[cells], level), deemed[cells], ncand, b_poly)
    return np.zeros(n, dtype=bool)


def _compact_pairs(keep_cell: np.ndarray, pair_cell: np.ndarray, *others):
    """Drop pairs of cells not kept and renumber surviving cells densely."""
    new_index = np.cumsum(keep_cell) - 1
    sel = keep_cell[pair_cell]
    return (new_index[pair_cell[sel]],) + tuple(o[sel] for o in others)


def build_cover(h: RegionHierarchy, max_level: int = MAX_LEVEL, mode: str = "exact",
                epsilon: float | None = None) -> CellCover:
    """Approximate all leaf polygons of ``h`` by non-overlapping cells.

    ``exact`` subdivides boundary cells down to ``max_level``. ``approx``
    subdivides them until the cell diagonal is at most ``epsilon`` degrees,
    regardless of ``max_level``, and records a deemed polygon per boundary
    cell: the first candidate containing the cell centre, else the one whose
    bbox centre is nearest. Interior cells can appear at any level. Note a
    large ``max_level`` in exact mode yields a very large cover.
    """
    stop = _stop_level(max_level, mode, epsilon)
    polygons = [leaf.geometry for leaf in h.leaves]
    return _build(polygons, stop, max_level=max_level, mode=mode,
                  epsilon=float(epsilon) if mode == "approx" else None)


def cover_polygons(polygons: Sequence[PolygonGeometry], max_level: int = MAX_LEVEL, mode: str = "exact",
                   epsilon: float | None = None) -> CellCover:
    """:func:`build_cover` over a bare polygon list (polygon refs = list index)."""
    stop = _stop_level(max_level, mode, epsilon)
    return _build(list(polygons), stop, max_level=max_level, mode=mode,
                  epsilon=float(epsilon) if mode == "approx" else None)


def _build(polygons, stop, **params) -> CellCover:
    sink = _Sink()
    params["n_polygons"] = len(polygons)
    if not polygons:
        return sink.finish(**params)
    edges = _edge_table(polygons)
    extents = _extents(polygons)
    settle = dict(edges=edges, polygons=polygons, extents=extents, stop=stop, sink=sink)

    ci = np.zeros(1, dtype=np.int64)
    cj = np.zeros(1, dtype=np.int64)
    x0, y0, x1, y1 = rects_from_ij(ci, cj, 0)
    e_edge = np.flatnonzero(segments_cross_open_rects(edges.x1, edges.y1, edges.x2, edges.y2, x0, y0, x1, y1))
    e_cell = np.zeros(len(e_edge), dtype=np.int64)
    p_poly = np.flatnonzero(np.isfinite(extents[:, 0]))
    p_cell = np.zeros(len(p_poly), dtype=np.int64)

    level = 0
    while True:
        split = _settle(level, ci, cj, e_cell, e_edge, p_cell, p_poly, **settle)
        if not split.any():
            break
        e_cell, e_edge = _compact_pairs(split, e_cell, e_edge)
        p_cell, p_poly = _compact_pairs(split, p_cell, p_poly)
        ci, cj = ci[split], cj[split]

        # Children: q = x_bit + 2 * y_bit, child index 4 * parent + q.
        qx = np.array([0, 1, 0, 1])
        qy = np.array([0, 0, 1, 1])
        ci = (2 * ci[:, None] + qx).ravel()
        cj = (2 * cj[:, None] + qy).ravel()
        level += 1
        x0, y0, x1, y1 = rects_from_ij(ci, cj, level)

        e_cell = (4 * e_cell[:, None] + np.arange(4)).ravel()
        e_edge = np.repeat(e_edge, 4)
        keep = segments_cross_open_rects(edges.x1[e_edge], edges.y1[e_edge], edges.x2[e_edge], edges.y2[e_edge],
                                         x0[e_cell], y0[e_cell], x1[e_cell], y1[e_cell])
        e_cell, e_edge = e_cell[keep], e_edge[keep]

        p_cell = (4 * p_cell[:, None] + np.arange(4)).ravel()
        p_poly = np.repeat(p_poly, 4)
        ext = extents[p_poly]
        keep = ((ext[:, 0] <= x1[p_cell]) & (ext[:, 1] >= x0[p_cell])
                & (ext[:, 2] <= y1[p_cell]) & (ext[:, 3] >= y0[p_cell]))
        p_cell, p_poly = p_cell[keep], p_poly[keep]
    return sink.finish(**params)
