"""64-bit quadtree cell identifiers over the planar lon/lat domain.

Layout, most significant bit first: two path bits per level (child order
SW=0, SE=1, NW=2, NE=3, i.e. ``x_bit + 2 * y_bit``), then one sentinel bit,
then zeros. The root (level 0) is ``1 << 63`` and covers lon [-180, 180],
lat [-90, 90]. A level-L cell is the half-open rectangle
``[x0, x1) x [y0, y1)``; the top and right domain edges are closed.
"""
from __future__ import annotations

import math

import numpy as np

from ..geometry import BBox

MAX_LEVEL = 30
ROOT_ID = 1 << 63
LON_SPAN = 360.0
LAT_SPAN = 180.0
LON0 = -180.0
LAT0 = -90.0
DOMAIN = BBox(-180.0, 180.0, -90.0, 90.0)

_U64 = np.uint64


def lsb_for_level(level: int) -> int:
    return 1 << (63 - 2 * level)


def cell_diagonal(level: int) -> float:
    """Diagonal length in degrees of any cell at ``level``."""
    return math.hypot(LON_SPAN, LAT_SPAN) / (1 << level)


def _check_level(level: int):
    if not 0 <= level <= MAX_LEVEL:
        raise ValueError(f"level must be in [0, {MAX_LEVEL}], got {level}")


def _spread(v: np.ndarray) -> np.ndarray:
    """Move bit k of each 32-bit value to bit 2k."""
    v = v.astype(_U64) & _U64(0xFFFFFFFF)
    v = (v | (v << _U64(16))) & _U64(0x0000FFFF0000FFFF)
    v = (v | (v << _U64(8))) & _U64(0x00FF00FF00FF00FF)
    v = (v | (v << _U64(4))) & _U64(0x0F0F0F0F0F0F0F0F)
    v = (v | (v << _U64(2))) & _U64(0x3333333333333333)
    v = (v | (v << _U64(1))) & _U64(0x5555555555555555)
    return v


def _compact(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`_spread`."""
    v = v.astype(_U64) & _U64(0x5555555555555555)
    v = (v | (v >> _U64(1))) & _U64(0x3333333333333333)
    v = (v | (v >> _U64(2))) & _U64(0x0F0F0F0F0F0F0F0F)
    v = (v | (v >> _U64(4))) & _U64(0x00FF00FF00FF00FF)
    v = (v | (v >> _U64(8))) & _U64(0x0000FFFF0000FFFF)
    v = (v | (v >> _U64(16))) & _U64(0x00000000FFFFFFFF)
    return v


def ids_from_ij(i, j, level: int) -> np.ndarray:
    """Cell ids for integer grid coordinates ``(i, j)`` at one level."""
    _check_level(level)
    i = np.asarray(i)
    if level == 0:
        return np.full(i.shape, ROOT_ID, dtype=_U64)
    path = _spread(i) | (_spread(np.asarray(j)) << _U64(1))
    return (path << _U64(64 - 2 * level)) | _U64(lsb_for_level(level))


def cell_id(i: int, j: int, level: int) -> int:
    return int(ids_from_ij(np.array([i]), np.array([j]), level)[0])


def levels_of(ids) -> np.ndarray:
    ids = np.asarray(ids, dtype=_U64)
    lsb = ids & (~ids + _U64(1))
    exponent = np.frexp(lsb.astype(np.float64))[1] - 1
    return ((63 - exponent) // 2).astype(np.int64)


def ij_of(ids) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Decode ids into grid coordinates and levels."""
    ids = np.asarray(ids, dtype=_U64)
    level = levels_of(ids)
    path = ids & (ids - _U64(1))
    shift = (64 - 2 * level).astype(_U64)
    # Shifting a uint64 by 64 is undefined; level-0 paths are zero anyway.
    path = np.where(level > 0, path >> np.minimum(shift, _U64(63)), _U64(0))
    return _compact(path).astype(np.int64), _compact(path >> _U64(1)).astype(np.int64), level


def cell_level(cell: int) -> int:
    lsb = cell & -cell
    return (63 - (lsb.bit_length() - 1)) // 2


def is_valid(cell: int) -> bool:
    if not 0 < cell < 1 << 64:
        return False
    lsb = cell & -cell
    return (lsb.bit_length() - 1) % 2 == 1 and cell_level(cell) <= MAX_LEVEL


def cell_parent(cell: int) -> int:
    level = cell_level(cell)
    if level == 0:
        raise ValueError("the root cell has no parent")
    new_lsb = lsb_for_level(level - 1)
    return (cell & ~(2 * new_lsb - 1) & ((1 << 64) - 1)) | new_lsb


def cell_children(cell: int) -> list[int]:
    level = cell_level(cell)
    if level >= MAX_LEVEL:
        raise ValueError("cells at the maximum level have no children")
    lsb = lsb_for_level(level)
    child_lsb = lsb >> 2
    base = cell - lsb
    return [base + (2 * q + 1) * child_lsb for q in range(4)]


def contains(ancestor: int, cell: int) -> bool:
    """True if ``cell`` equals ``ancestor`` or lies inside it."""
    lsb = ancestor & -ancestor
    return ancestor - (lsb - 1) <= cell <= ancestor + (lsb - 1)


def rects_of(ids) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(x0, y0, x1, y1) arrays of cell rectangles."""
    i, j, level = ij_of(ids)
    return rects_from_ij(i, j, level)


def rects_from_ij(i, j, level):
    w = LON_SPAN / np.exp2(level)
    hgt = LAT_SPAN / np.exp2(level)
    x0 = LON0 + i * w
    y0 = LAT0 + j * hgt
    return x0, y0, LON0 + (i + 1) * w, LAT0 + (j + 1) * hgt


def cell_rect(cell: int) -> BBox:
    x0, y0, x1, y1 = rects_of(np.array([cell], dtype=_U64))
    return BBox(float(x0[0]), float(x1[0]), float(y0[0]), float(y1[0]))


def in_domain(x, y) -> np.ndarray:
    x = np.asarray(x)
    y = np.asarray(y)
    return (x >= LON0) & (x <= LON0 + LON_SPAN) & (y >= LAT0) & (y <= LAT0 + LAT_SPAN)


def ids_from_points(x, y, level: int = MAX_LEVEL) -> np.ndarray:
    """Ids of the level-``level`` cells holding each point (all in-domain)."""
    _check_level(level)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    top = (1 << level) - 1
    return ids_from_ij(_grid_index(x, LON0, LON_SPAN, level, top), _grid_index(y, LAT0, LAT_SPAN, level, top), level)


def _grid_index(v, origin, span, level, top):
    # In-domain values are non-negative after the shift, so truncation is floor.
    t = v - origin
    t /= span
    t *= 1 << level
    out = t.astype(np.int64)
    np.minimum(out, top, out=out)
    return out


def cell_from_point(p, level: int = MAX_LEVEL) -> int:
    lon, lat = p
    if not in_domain(lon, lat):
        raise ValueError(f"point ({lon}, {lat}) is outside the lon/lat domain")
    return int(ids_from_points(np.array([lon]), np.array([lat]), level)[0])
