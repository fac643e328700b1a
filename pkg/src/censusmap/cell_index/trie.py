"""Radix trie over cell ids with F quadtree levels per trie level.

Every trie node stands for a cell at a level that is a multiple of F and
owns ``4**F`` slots, one per descendant F levels down. A slot holds -1
(empty), a child node index (>= 0), or an entry ``e`` encoded as
``-(e + 2)``. An entry at level L is stored in the node at depth
``(L - 1) // F`` and fills the ``4**((d + 1) * F - L)`` consecutive slots
it covers, so coarse cells sit close to the root. A level-0 entry (the
whole domain) is kept outside the node table.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..errors import DataError
from .cellid import MAX_LEVEL, ids_from_points, in_domain, levels_of
from .cover import CellCover

FANOUTS = (1, 2, 4)
EMPTY = -1

_U64 = np.uint64


@dataclass(eq=False)
class TrieIndex:
    fanout: int
    slots: np.ndarray  # (n_nodes, 4**fanout) int32
    root_entry: int
    cover: CellCover

    @property
    def n_nodes(self) -> int:
        return len(self.slots)

    @property
    def max_depth(self) -> int:
        """Number of trie levels a level-30 lookup can walk."""
        return -(-MAX_LEVEL // self.fanout)

    @cached_property
    def _next(self) -> np.ndarray:
        """Flat slot table with child references premultiplied by the width."""
        width = self.slots.shape[1] if self.n_nodes else 1
        table = self.slots.astype(np.int64)
        return np.where(table >= 0, table * width, table).ravel()

    def _digits(self, paths: np.ndarray):
        """Return ``digit(depth, rows)`` giving slot numbers of the given rows."""
        if self.fanout == 4:
            # Four levels are exactly one byte of the path.
            octets = paths.astype("<u8", copy=False).view(np.uint8).reshape(-1, 8)
            return lambda d, rows: octets[:, 7 - d] if rows is None else octets[rows, 7 - d]
        f2 = 2 * self.fanout
        mask = _U64((1 << f2) - 1)

        def digit(d, rows):
            sub = paths if rows is None else paths[rows]
            return ((sub >> _U64(64 - f2 * (d + 1))) & mask).astype(np.int64)
        return digit

    def lookup(self, ids) -> tuple[np.ndarray, np.ndarray]:
        """Entry index (or -1) and trie node visits for each level-30 cell id."""
        ids = np.asarray(ids, dtype=_U64)
        n = len(ids)
        entry = np.full(n, -1, dtype=np.int64)
        visits = np.zeros(n, dtype=np.int64)
        if self.root_entry >= 0:
            entry[:] = self.root_entry
            return entry, visits
        if self.n_nodes == 0 or n == 0:
            return entry, visits
        digit = self._digits(ids & (ids - _U64(1)))
        table = self._next
        rows = None  # None means every row is still walking
        offset = np.zeros(n, dtype=np.int64)
        for depth in range(self.max_depth):
            v = table[offset + digit(depth, rows)]
            go = v >= 0
            if go.all():
                offset = v
                continue
            idx = np.arange(n) if rows is None else rows
            stop = ~go
            visits[idx[stop]] = depth + 1
            found = v <= -2
            entry[idx[found]] = -v[found] - 2
            rows = idx[go]
            offset = v[go]
            if len(rows) == 0:
                break
        return entry, visits

    def lookup_points(self, points) -> tuple[np.ndarray, np.ndarray]:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        ok = in_domain(pts[:, 0], pts[:, 1])
        entry = np.full(len(pts), -1, dtype=np.int64)
        visits = np.zeros(len(pts), dtype=np.int64)
        entry[ok], visits[ok] = self.lookup(ids_from_points(pts[ok, 0], pts[ok, 1]))
        return entry, visits

    def lookup_linear(self, cell: int) -> int:
        """Reference lookup: scan every entry for an ancestor of ``cell``."""
        ids = self.cover.ids
        lsb = ids & (~ids + _U64(1))
        c = _U64(cell)
        hit = np.flatnonzero((ids - (lsb - _U64(1)) <= c) & (c <= ids + (lsb - _U64(1))))
        return int(hit[0]) if len(hit) else -1


def build_trie(cover: CellCover, fanout: int = 4) -> TrieIndex:
    """Index a cover; overlapping entries raise :class:`DataError`."""
    if fanout not in FANOUTS:
        raise ValueError(f"fanout must be one of {FANOUTS}")
    width = 4 ** fanout
    f2 = 2 * fanout
    ids = cover.ids.astype(_U64)
    levels = levels_of(ids)
    empty_table = np.empty((0, width), dtype=np.int32)

    at_root = np.flatnonzero(levels == 0)
    if len(at_root):
        if len(ids) > 1:
            raise DataError("cover overlaps: the root cell is present alongside other cells")
        return TrieIndex(fanout, empty_table, int(at_root[0]), cover)
    if len(ids) == 0:
        return TrieIndex(fanout, empty_table, -1, cover)

    paths = ids & (ids - _U64(1))
    depth = (levels - 1) // fanout
    max_depth = int(depth.max())

    # Node keys per trie depth t: the entry path truncated to level t * F.
    node_keys, node_base = [], []
    total = 0
    for t in range(max_depth + 1):
        src = paths[depth >= t]
        keys = np.unique(src >> _U64(64 - f2 * t)) if t else np.zeros(1, dtype=_U64)
        node_keys.append(keys)
        node_base.append(total)
        total += len(keys)
    if total >= np.iinfo(np.int32).max:
        raise DataError("trie too large for 32-bit slot references")

    slot_keys, slot_vals = [], []
    for t in range(1, max_depth + 1):
        keys = node_keys[t]
        parent = node_base[t - 1] + np.searchsorted(node_keys[t - 1], keys >> _U64(f2))
        slot_keys.append(parent * width + (keys & _U64(width - 1)).astype(np.int64))
        slot_vals.append(node_base[t] + np.arange(len(keys)))

    node = np.empty(len(ids), dtype=np.int64)
    base = np.empty(len(ids), dtype=np.int64)
    span = np.empty(len(ids), dtype=np.int64)
    for t in range(max_depth + 1):
        sel = np.flatnonzero(depth == t)
        if len(sel) == 0:
            continue
        lv = levels[sel]
        prefix = paths[sel] >> _U64(64 - f2 * t) if t else np.zeros(len(sel), dtype=_U64)
        node[sel] = node_base[t] + np.searchsorted(node_keys[t], prefix)
        local_bits = 2 * (lv - t * fanout)
        local = (paths[sel] >> (64 - 2 * lv).astype(_U64)) & ((_U64(1) << local_bits.astype(_U64)) - _U64(1))
        free = 2 * ((t + 1) * fanout - lv)
        base[sel] = local.astype(np.int64) << free
        span[sel] = np.int64(1) << free
    fill = np.repeat(node * width + base, span) + (np.arange(span.sum()) - np.repeat(np.cumsum(span) - span, span))
    slot_keys.append(fill)
    slot_vals.append(-(np.repeat(np.arange(len(ids)), span) + 2))

    keys = np.concatenate(slot_keys)
    vals = np.concatenate(slot_vals)
    occupancy = np.bincount(keys, minlength=total * width)
    if occupancy.max(initial=0) > 1:
        raise DataError("cover overlaps: two entries (or an entry and a finer cell) share a trie slot")
    slots = np.full(total * width, EMPTY, dtype=np.int32)
    slots[keys] = vals
    return TrieIndex(fanout, slots.reshape(total, width), -1, cover)
