"""Three-level region hierarchy (state -> county -> block group).

Ingestion follows the census field mapping: states carry ``STATEFP``;
counties ``STATEFP`` + ``COUNTYFP``; block groups ``STATE_FIPS``,
``CNTY_FIPS``, ``TRACT``, ``BLKGRP`` and the 12-character ``FIPS``.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError
from .geometry import BBox, PolygonGeometry, polygon_bbox

LEVELS = ("state", "county", "block")

FMCB_MAGIC = b"FMCB"
FMCB_VERSION = 1


@dataclass(eq=True)
class RegionNode:
    fp_code: int
    bbox: BBox
    geometry: PolygonGeometry
    children: list[RegionNode] = field(default_factory=list)
    fips12: str | None = None

    @cached_property
    def child_boxes(self) -> np.ndarray:
        return _box_array(self.children)


def _box_array(nodes) -> np.ndarray:
    if not nodes:
        return np.empty((0, 4), dtype=np.float64)
    return np.array([n.bbox for n in nodes], dtype=np.float64)


class RegionHierarchy:
    """Immutable state/county/block tree plus flat per-leaf lookup arrays.

    Leaves are numbered globally in depth-first order (states, then counties,
    then blocks, each ascending by fp_code); that number is the polygon
    reference used by the cell index.
    """

    def __init__(self, root: list[RegionNode]):
        self.root = list(root)
        fips = [leaf.fips12 for _, _, _, leaf in self.iter_leaves()]
        if any(f is None or len(f) != 12 for f in fips):
            raise DataError("every leaf needs a 12-character FIPS code")
        if len(set(fips)) != len(fips):
            raise DataError("duplicate FIPS codes among leaves")

    def iter_leaves(self):
        for s, state in enumerate(self.root):
            for c, county in enumerate(state.children):
                for b, block in enumerate(county.children):
                    yield s, c, b, block

    @property
    def counts(self) -> tuple[int, int, int]:
        n_counties = sum(len(s.children) for s in self.root)
        return len(self.root), n_counties, self.n_leaves

    @cached_property
    def state_boxes(self) -> np.ndarray:
        return _box_array(self.root)

    @cached_property
    def _leaf_table(self):
        rows = list(self.iter_leaves())
        path = np.array([r[:3] for r in rows], dtype=np.int64).reshape(-1, 3)
        leaves = [r[3] for r in rows]
        return path, leaves

    @property
    def leaves(self) -> list[RegionNode]:
        return self._leaf_table[1]

    @property
    def leaf_path(self) -> np.ndarray:
        """``(L, 3)`` array of (state, county, block) indices per global leaf."""
        return self._leaf_table[0]

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    @cached_property
    def leaf_fips(self) -> np.ndarray:
        return np.array([leaf.fips12 for leaf in self.leaves], dtype="<U12")

    @cached_property
    def leaf_path_table(self) -> np.ndarray:
        """``leaf_path`` plus a trailing row of -1, so index -1 means "no leaf"."""
        return np.vstack([self.leaf_path, np.full((1, 3), -1, dtype=np.int64)])

    @cached_property
    def fips_table(self) -> np.ndarray:
        """``leaf_fips`` plus a trailing '' for index -1."""
        return np.append(self.leaf_fips, np.array([""], dtype="<U12"))

    @cached_property
    def leaf_geometries(self) -> list[PolygonGeometry]:
        return [leaf.geometry for leaf in self.leaves]

    @cached_property
    def leaf_boxes(self) -> np.ndarray:
        return _box_array(self.leaves)

    @cached_property
    def leaf_offsets(self) -> list[list[int]]:
        """Global leaf number of block 0 for each [state][county]."""
        offsets = []
        k = 0
        for state in self.root:
            row = []
            for county in state.children:
                row.append(k)
                k += len(county.children)
            offsets.append(row)
        return offsets

    def bounds(self) -> BBox:
        b = self.state_boxes
        return BBox(float(b[:, 0].min()), float(b[:, 1].max()), float(b[:, 2].min()), float(b[:, 3].max()))

    def __eq__(self, other):
        if not isinstance(other, RegionHierarchy):
            return NotImplemented
        return self.root == other.root

    def __repr__(self):
        return "RegionHierarchy(states={}, counties={}, blocks={})".format(*self.counts)


# --------------------------------------------------------------------------
# GeoJSON ingestion


def _read_features(path) -> list[dict]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"{path}: cannot read ({exc.strerror or exc})") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise DataError(f"{path}: expected a GeoJSON FeatureCollection")
    features = doc.get("features")
    if not isinstance(features, list):
        raise DataError(f"{path}: FeatureCollection has no feature list")
    return features


def _feature_name(path, k, feature) -> str:
    props = feature.get("properties") or {}
    label = props.get("NAME") or props.get("FIPS") or feature.get("id")
    return f"{Path(path).name} feature #{k}" + (f" ({label})" if label else "")


def _prop_int(path, k, feature, key) -> int:
    props = feature.get("properties") or {}
    raw = props.get(key)
    if raw is None or str(raw).strip() == "":
        raise DataError(f"{_feature_name(path, k, feature)}: missing property {key}")
    try:
        return int(str(raw).strip())
    except ValueError:
        raise DataError(f"{_feature_name(path, k, feature)}: property {key}={raw!r} is not numeric") from None


def _prop_str(path, k, feature, key) -> str:
    props = feature.get("properties") or {}
    raw = props.get(key)
    if raw is None or str(raw).strip() == "":
        raise DataError(f"{_feature_name(path, k, feature)}: missing property {key}")
    return str(raw).strip()


def _feature_geometry(path, k, feature) -> tuple[PolygonGeometry, BBox]:
    geom = feature.get("geometry")
    where = _feature_name(path, k, feature)
    if not isinstance(geom, dict):
        raise DataError(f"{where}: missing geometry")
    kind = geom.get("type")
    coords = geom.get("coordinates")
    try:
        if kind == "Polygon":
            rings = list(coords)
        elif kind == "MultiPolygon":
            rings = [ring for polygon in coords for ring in polygon]
        else:
            raise DataError(f"{where}: unsupported geometry type {kind!r}")
        arrays = [np.asarray(r, dtype=np.float64) for r in rings]
        for a in arrays:
            if a.ndim != 2 or a.shape[1] < 2 or len(a) < 3:
                raise DataError(f"{where}: ring is not a list of >=3 positions")
        poly = PolygonGeometry.from_rings([a[:, :2] for a in arrays])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"{where}: unparsable geometry ({exc})") from exc
    if not np.isfinite(poly.nodes).all() or len(poly.nodes) == 0:
        raise DataError(f"{where}: geometry has no finite vertices")

    bbox = feature.get("bbox")
    if bbox is not None:
        try:
            x0, y0, x1, y1 = (float(v) for v in bbox[:4])
        except (TypeError, ValueError):
            raise DataError(f"{where}: malformed bbox member") from None
        box = BBox(x0, x1, y0, y1)
    else:
        box = polygon_bbox(poly)
    return poly, box


def load_boundaries(state_path, county_path, block_path) -> RegionHierarchy:
    """Build a hierarchy from three GeoJSON FeatureCollections.

    Counties attach to the state with equal ``STATEFP``; block groups attach
    to the county matching both ``STATE_FIPS`` and ``CNTY_FIPS``. A feature's
    own ``bbox`` member is used when present, otherwise it is computed.
    """
    states: dict[int, RegionNode] = {}
    for k, f in enumerate(_read_features(state_path)):
        sfp = _prop_int(state_path, k, f, "STATEFP")
        if sfp in states:
            raise DataError(f"{_feature_name(state_path, k, f)}: duplicate STATEFP {sfp}")
        poly, box = _feature_geometry(state_path, k, f)
        states[sfp] = RegionNode(sfp, box, poly)
    if not states:
        raise DataError(f"{state_path}: no state features")

    counties: dict[tuple[int, int], RegionNode] = {}
    for k, f in enumerate(_read_features(county_path)):
        sfp = _prop_int(county_path, k, f, "STATEFP")
        cfp = _prop_int(county_path, k, f, "COUNTYFP")
        if sfp not in states:
            raise DataError(f"{_feature_name(county_path, k, f)}: STATEFP {sfp} matches no state")
        if (sfp, cfp) in counties:
            raise DataError(f"{_feature_name(county_path, k, f)}: duplicate county {sfp:02d}{cfp:03d}")
        poly, box = _feature_geometry(county_path, k, f)
        node = RegionNode(cfp, box, poly)
        counties[sfp, cfp] = node
        states[sfp].children.append(node)

    block_features = _read_features(block_path)
    if not block_features:
        raise DataError(f"{block_path}: no block group features")
    seen: set[str] = set()
    for k, f in enumerate(block_features):
        sfp = _prop_int(block_path, k, f, "STATE_FIPS")
        cfp = _prop_int(block_path, k, f, "CNTY_FIPS")
        tract = _prop_str(block_path, k, f, "TRACT")
        blkgrp = _prop_str(block_path, k, f, "BLKGRP")
        fips = _prop_str(block_path, k, f, "FIPS")
        where = _feature_name(block_path, k, f)
        if len(fips) != 12 or fips != f"{sfp:02d}{cfp:03d}{tract}{blkgrp}":
            raise DataError(f"{where}: FIPS {fips!r} is not state(2)+county(3)+tract(6)+blockgroup(1)")
        if fips in seen:
            raise DataError(f"{where}: duplicate FIPS {fips}")
        seen.add(fips)
        parent = counties.get((sfp, cfp))
        if parent is None:
            raise DataError(f"{where}: county {sfp:02d}{cfp:03d} not present in {county_path}")
        try:
            fp_code = int(tract + blkgrp)
        except ValueError:
            raise DataError(f"{where}: TRACT/BLKGRP not numeric") from None
        poly, box = _feature_geometry(block_path, k, f)
        parent.children.append(RegionNode(fp_code, box, poly, fips12=fips))

    root = [states[k] for k in sorted(states)]
    for state in root:
        state.children.sort(key=lambda n: n.fp_code)
        for county in state.children:
            county.children.sort(key=lambda n: n.fp_code)
    return RegionHierarchy(root)


# --------------------------------------------------------------------------
# Binary format: "FMCB", u16 version, u32 counts x3, then nodes in preorder.
# node: u32 fp_code, u32 n_children, 12s fips, 4 x f64 bbox,
#       u32 n_vertices, n x (f64, f64), u32 n_edges, n x (u32, u32)

_HEADER = struct.Struct("<4sHIII")
_NODE = struct.Struct("<II12s4dI")


def _write_node(out, node: RegionNode):
    fips = (node.fips12 or "").encode("ascii").ljust(12, b"\0")
    out.append(_NODE.pack(node.fp_code, len(node.children), fips, *node.bbox, len(node.geometry.nodes)))
    out.append(node.geometry.nodes.astype("<f8").tobytes())
    out.append(struct.pack("<I", node.geometry.n_edges))
    out.append(node.geometry.edges.astype("<u4").tobytes())
    for child in node.children:
        _write_node(out, child)


def save_hierarchy(h: RegionHierarchy, path) -> None:
    chunks = [_HEADER.pack(FMCB_MAGIC, FMCB_VERSION, *h.counts)]
    for state in h.root:
        _write_node(chunks, state)
    Path(path).write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, buf: bytes, path):
        self.buf = buf
        self.pos = 0
        self.path = path

    def take(self, n: int) -> memoryview:
        if self.pos + n > len(self.buf):
            raise FormatError(f"{self.path}: truncated file")
        view = memoryview(self.buf)[self.pos:self.pos + n]
        self.pos += n
        return view

    def unpack(self, st: struct.Struct):
        return st.unpack(self.take(st.size))


def _read_node(r: _Reader, depth: int) -> RegionNode:
    fp, n_children, fips, x0, x1, y0, y1, n_vert = r.unpack(_NODE)
    nodes = np.frombuffer(r.take(16 * n_vert), dtype="<f8").reshape(-1, 2).astype(np.float64)
    (n_edges,) = r.unpack(struct.Struct("<I"))
    edges = np.frombuffer(r.take(8 * n_edges), dtype="<u4").reshape(-1, 2).astype(np.int64)
    if depth == 2 and n_children:
        raise FormatError(f"{r.path}: leaf record has children")
    try:
        geometry = PolygonGeometry(nodes, edges)
    except ValueError as exc:
        raise FormatError(f"{r.path}: corrupt geometry ({exc})") from None
    fips12 = fips.rstrip(b"\0").decode("ascii") or None
    node = RegionNode(fp, BBox(x0, x1, y0, y1), geometry, fips12=fips12)
    node.children = [_read_node(r, depth + 1) for _ in range(n_children)]
    return node


def load_hierarchy(path) -> RegionHierarchy:
    path = Path(path)
    buf = path.read_bytes()
    r = _Reader(buf, path)
    if len(buf) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, n_states, n_counties, n_blocks = r.unpack(_HEADER)
    if magic != FMCB_MAGIC:
        raise FormatError(f"{path}: bad magic {bytes(magic)!r}, expected {FMCB_MAGIC!r}")
    if version != FMCB_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    root = [_read_node(r, 0) for _ in range(n_states)]
    if r.pos != len(buf):
        raise FormatError(f"{path}: {len(buf) - r.pos} trailing bytes")
    h = RegionHierarchy(root)
    if h.counts != (n_states, n_counties, n_blocks):
        raise FormatError(f"{path}: header counts {(n_states, n_counties, n_blocks)} disagree with records {h.counts}")
    return h
