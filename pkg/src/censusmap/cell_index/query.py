from __future__ import annotations

import numpy as np

from ..geometry import points_in_polygon
from ..hierarchy import RegionHierarchy
from ..result import DEFAULT_CHUNK, AssignmentResult, run_partitioned
from .cellid import ids_from_points, in_domain
from .cover import BOUNDARY, CellCover
from .trie import TrieIndex

# Declared per-record sizes, in bytes, for index_stats.
SLOT_BYTES = 4
ENTRY_BYTES = 8 + 1 + 4  # id, kind, interior or deemed polygon
CANDIDATE_HEADER_BYTES = 4
CANDIDATE_BYTES = 4


def _refine(pts: np.ndarray, entry: np.ndarray, cover: CellCover, geometries, leaf: np.ndarray) -> tuple[int, int]:
    """Exact refinement of boundary-cell hits; returns (evaluations, calls)."""
    rows = np.flatnonzero(leaf == -2)
    if len(rows) == 0:
        return 0, 0
    e = entry[rows]
    n_cand = cover.cand_ptr[e + 1] - cover.cand_ptr[e]
    pair_row = np.repeat(rows, n_cand)
    within = np.arange(n_cand.sum()) - np.repeat(np.cumsum(n_cand) - n_cand, n_cand)
    pair_cand = cover.cand[np.repeat(cover.cand_ptr[e], n_cand) + within]
    order = np.argsort(pair_cand, kind="stable")
    pair_row, pair_cand = pair_row[order], pair_cand[order]
    polys, first = np.unique(pair_cand, return_index=True)
    bounds = np.append(first, len(pair_cand))
    evaluations = calls = 0
    for p, lo, hi in zip(polys, bounds[:-1], bounds[1:]):
        r = pair_row[lo:hi]
        r = r[leaf[r] == -2]
        if len(r) == 0:
            continue
        hit = points_in_polygon(pts[r], geometries[p])
        evaluations += len(r)
        calls += 1
        leaf[r[hit]] = p
    leaf[leaf == -2] = -1
    return evaluations, calls


def _query_chunk(trie: TrieIndex, h: RegionHierarchy, pts: np.ndarray, approx: bool) -> AssignmentResult:
    cover = trie.cover
    ok = in_domain(pts[:, 0], pts[:, 1])
    if ok.all():
        entry, _ = trie.lookup(ids_from_points(pts[:, 0], pts[:, 1]))
    else:
        entry = np.full(len(pts), -1, dtype=np.int64)
        entry[ok], _ = trie.lookup(ids_from_points(pts[ok, 0], pts[ok, 1]))
    # Per-entry tables with a trailing row so entry -1 maps to "no leaf".
    leaf = np.append(cover.polygon, -1)[entry]
    evaluations = calls = 0
    if not approx:
        boundary = np.append(cover.kind == BOUNDARY, False)[entry]
        leaf[boundary] = -2
        evaluations, calls = _refine(pts, entry, cover, h.leaf_geometries, leaf)
    return AssignmentResult.from_leaves(h, leaf, pip_point_evaluations=evaluations, pip_calls=calls,
                                        out_of_domain=int(np.count_nonzero(~ok)))


def query(trie: TrieIndex, h: RegionHierarchy, points, mode: str | None = None, threads: int = 1,
          chunk_size: int = DEFAULT_CHUNK) -> AssignmentResult:
    """Assign points through the cell trie.

    Interior hits answer directly. Boundary hits are refined with the
    crossing-number kernel against the cell's candidates in ascending order
    (``exact``) or answered with the cell's deemed polygon (``approx``).
    Points outside the lon/lat domain are counted and left unassigned.
    """
    cover = trie.cover
    mode = mode or cover.mode
    if mode not in ("exact", "approx"):
        raise ValueError(f"unknown query mode {mode!r}")
    if mode == "approx" and cover.mode != "approx":
        raise ValueError("approx queries need a cover built in approx mode")
    if cover.n_polygons != h.n_leaves:
        raise ValueError(f"cover indexes {cover.n_polygons} polygons but the hierarchy has {h.n_leaves} leaves")
    return run_partitioned(lambda p: _query_chunk(trie, h, p, mode == "approx"), points, threads, chunk_size)


def index_stats(trie: TrieIndex, cover: CellCover | None = None) -> dict:
    """Entry counts and declared-layout byte size of a built index.

    Nodes cost ``4**F`` int32 slots; entries cost id + kind + polygon ref;
    boundary entries add a candidate count and one int32 per candidate.
    """
    cover = cover if cover is not None else trie.cover
    counts = cover.counts()
    n_cand = int(cover.cand_ptr[-1])
    node_bytes = trie.n_nodes * (4 ** trie.fanout) * SLOT_BYTES
    entry_bytes = (len(cover) * ENTRY_BYTES + counts["boundary"] * CANDIDATE_HEADER_BYTES
                   + n_cand * CANDIDATE_BYTES)
    return {
        "entries": len(cover),
        "interior": counts["interior"],
        "boundary": counts["boundary"],
        "candidates": n_cand,
        "nodes": trie.n_nodes,
        "fanout": trie.fanout,
        "node_bytes": node_bytes,
        "entry_bytes": entry_bytes,
        "bytes": node_bytes + entry_bytes,
    }
