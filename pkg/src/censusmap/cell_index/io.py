"""FMCI index files.

Layout (little-endian): ``"FMCI"``, u16 version, u8 mode (0 exact, 1 approx),
u8 max_level, f64 epsilon (0 in exact mode), u32 polygon count, u64 entry
count, then the id-sorted entry array as packed records
``(id u64, kind u8, polygon u32, n_candidates u32)`` followed by all
candidate lists concatenated in entry order as u32. The trie is not stored;
it is rebuilt from the entries on load.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .cover import MODES, CellCover

FMCI_MAGIC = b"FMCI"
FMCI_VERSION = 1

_HEADER = struct.Struct("<4sHBBdIQ")
_RECORD = np.dtype([("id", "<u8"), ("kind", "u1"), ("polygon", "<u4"), ("ncand", "<u4")])


def save_index(cover: CellCover, path) -> None:
    n = len(cover)
    rec = np.empty(n, dtype=_RECORD)
    rec["id"] = cover.ids
    rec["kind"] = cover.kind
    rec["polygon"] = cover.polygon
    rec["ncand"] = np.diff(cover.cand_ptr)
    header = _HEADER.pack(FMCI_MAGIC, FMCI_VERSION, MODES.index(cover.mode), cover.max_level,
                          cover.epsilon or 0.0, cover.n_polygons, n)
    Path(path).write_bytes(header + rec.tobytes() + cover.cand.astype("<u4").tobytes())


def load_index(path) -> CellCover:
    path = Path(path)
    buf = path.read_bytes()
    if len(buf) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, mode, max_level, epsilon, n_polygons, n = _HEADER.unpack_from(buf)
    if magic != FMCI_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {FMCI_MAGIC!r}")
    if version != FMCI_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if mode >= len(MODES):
        raise FormatError(f"{path}: unknown mode byte {mode}")
    pos = _HEADER.size
    if len(buf) < pos + n * _RECORD.itemsize:
        raise FormatError(f"{path}: truncated entry table")
    rec = np.frombuffer(buf, dtype=_RECORD, count=n, offset=pos)
    pos += n * _RECORD.itemsize
    ncand = rec["ncand"].astype(np.int64)
    total = int(ncand.sum())
    if len(buf) != pos + 4 * total:
        raise FormatError(f"{path}: candidate table size mismatch")
    cand = np.frombuffer(buf, dtype="<u4", count=total, offset=pos).astype(np.int64)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(ncand, out=ptr[1:])
    ids = rec["id"].astype(np.uint64)
    if n > 1 and not (ids[1:] > ids[:-1]).all():
        raise FormatError(f"{path}: entries are not sorted by id")
    return CellCover(ids, rec["kind"].copy(), rec["polygon"].astype(np.int64), ptr, cand,
                     max_level=max_level, mode=MODES[mode],
                     epsilon=epsilon if MODES[mode] == "approx" else None, n_polygons=n_polygons)
