import math

import numpy as np
import pytest

from censusmap import DataError, FormatError, generate_synthetic
from censusmap.cell_index import (
    MAX_LEVEL,
    ROOT_ID,
    build_cover,
    build_trie,
    cell_children,
    cell_diagonal,
    cell_from_point,
    cell_level,
    cell_parent,
    cell_rect,
    classify_cell,
    contains,
    cover_polygons,
    ids_from_points,
    index_stats,
    load_index,
    query,
    save_index,
)
from censusmap.cell_index.cover import BOUNDARY, INTERIOR, CellCover
from censusmap.geometry import PolygonGeometry
from censusmap.synthetic import uniform_points

from oracles import (
    LeafOracle,
    is_ancestor_or_self,
    linear_lookup,
    naive_pip,
    quadrant_cell_id,
    random_cover,
    random_leaf_queries,
    ring_edges,
    star_polygon,
)


def _cover_of(ids, n_polygons=1):
    ids = np.sort(np.asarray(ids, dtype=np.uint64))
    n = len(ids)
    return CellCover(ids, np.zeros(n, dtype=np.uint8), np.zeros(n, dtype=np.int64),
                     np.zeros(n + 1, dtype=np.int64), np.empty(0, dtype=np.int64), 30, "exact", None, n_polygons)


# ---------------------------------------------------------------- cell ids

def test_root_and_level0():
    assert ROOT_ID == 1 << 63
    assert cell_from_point((12.3, -45.6), 0) == ROOT_ID
    assert cell_level(ROOT_ID) == 0


def test_west_north_quadrant_is_nw():
    # lon -90 is in the west half, lat 45 in the north half: NW = 2.
    assert cell_from_point((-90.0, 45.0), 1) == ((2 << 1) | 1) << 61
    assert cell_from_point((-90.0, 45.0), 1) == quadrant_cell_id(-90.0, 45.0, 1)


def test_matches_quadrant_descent(rng):
    pts = np.column_stack([rng.uniform(-180, 180, 3000), rng.uniform(-90, 90, 3000)])
    grid = [(-180.0, -90.0), (180.0, 90.0), (0.0, 0.0), (-90.0, 45.0), (90.0, -45.0), (180.0, 0.0)]
    pts = np.vstack([pts, grid])
    for level in (1, 2, 7, 16, 23, 30):
        got = ids_from_points(pts[:, 0], pts[:, 1], level)
        want = [quadrant_cell_id(x, y, level) for x, y in pts]
        assert got.tolist() == want, level


def test_nesting_parent_children(rng):
    for _ in range(500):
        p = (rng.uniform(-180, 180), rng.uniform(-90, 90))
        k = int(rng.integers(0, 30))
        a, b = cell_from_point(p, k), cell_from_point(p, k + 1)
        assert is_ancestor_or_self(a, b) and contains(a, b) and not contains(b, a)
        assert cell_parent(b) == a
        assert b in cell_children(a)
        assert cell_level(b) == k + 1


def test_cell_rect_holds_point(rng):
    for _ in range(200):
        p = (rng.uniform(-180, 180), rng.uniform(-90, 90))
        k = int(rng.integers(0, 31))
        r = cell_rect(cell_from_point(p, k))
        assert r.x_min <= p[0] < r.x_max and r.y_min <= p[1] < r.y_max
        assert math.isclose(math.hypot(r.x_max - r.x_min, r.y_max - r.y_min), cell_diagonal(k))


def test_children_order_and_errors():
    sw, se, nw, ne = (cell_rect(c) for c in cell_children(ROOT_ID))
    assert (sw.x_min, sw.y_min) == (-180, -90) and (se.x_min, se.y_min) == (0, -90)
    assert (nw.x_min, nw.y_min) == (-180, 0) and (ne.x_min, ne.y_min) == (0, 0)
    with pytest.raises(ValueError):
        cell_from_point((181.0, 0.0), 3)
    with pytest.raises(ValueError):
        cell_from_point((0.0, 0.0), 31)
    with pytest.raises(ValueError):
        cell_parent(ROOT_ID)
    with pytest.raises(ValueError):
        cell_children(cell_from_point((0.0, 0.0), MAX_LEVEL))


# ---------------------------------------------------------------- classification

WORLD = PolygonGeometry.from_rings([[[-180, -90], [180, -90], [180, 90], [-180, 90]]])


def test_classify_trivial_cases():
    cell = cell_from_point((10.0, 10.0), 2)
    assert classify_cell(cell, [WORLD]) == ("interior", (0,))
    assert classify_cell(cell, []).kind == "outside"


def _samples(cell, n=32):
    r = cell_rect(cell)
    fx = (np.arange(n) + 0.5) / n
    gx, gy = np.meshgrid(r.x_min + fx * (r.x_max - r.x_min), r.y_min + fx * (r.y_max - r.y_min))
    return np.column_stack([gx.ravel(), gy.ravel()])


def test_classify_against_sample_grid(rng):
    rings = [star_polygon(rng, int(rng.integers(5, 40)), centre=c, r_min=0.3, r_max=1.5)
             for c in [(10, 20), (11.5, 20.5), (9.5, 21.5)]]
    polys = [PolygonGeometry.from_rings([r]) for r in rings]
    segs = [ring_edges([r]) for r in rings]
    seen = set()
    for _ in range(400):
        p = (rng.uniform(8, 13), rng.uniform(18, 23))
        cell = cell_from_point(p, int(rng.integers(4, 12)))
        c = classify_cell(cell, polys)
        seen.add(c.kind)
        s = _samples(cell)
        member = np.column_stack([naive_pip(s, sg) for sg in segs])
        if c.kind == "interior":
            (k,) = c.polygons
            assert member[:, k].all() and not np.delete(member, k, axis=1).any()
        elif c.kind == "outside":
            # Quiet cells have uniform membership that is not exactly one polygon.
            assert (member == member[0]).all() and member[0].sum() != 1
        else:
            assert len(c.polygons) >= 1
        if not (member == member[0]).all():
            assert c.kind == "boundary"
    assert seen == {"interior", "outside", "boundary"}


# ---------------------------------------------------------------- covers

def _check_non_overlap(cover):
    ids = [int(c) for c in cover.ids]
    assert ids == sorted(ids)
    lo = [c - ((c & -c) - 1) for c in ids]
    hi = [c + ((c & -c) - 1) for c in ids]
    assert all(h < l for h, l in zip(hi[:-1], lo[1:]))


def test_world_polygon_cover_is_root():
    cover = cover_polygons([WORLD], max_level=12)
    assert cover.ids.tolist() == [ROOT_ID]
    assert cover.entry(0).kind == "interior"
    trie = build_trie(cover, 4)
    assert trie.lookup_points([(1.0, 2.0), (-179.0, 89.0)])[0].tolist() == [0, 0]


def test_empty_cover():
    cover = cover_polygons([], max_level=10)
    assert len(cover) == 0
    assert index_stats(build_trie(cover, 1))["entries"] == 0
    assert build_trie(cover, 2).lookup_points([(0.0, 0.0)])[0].tolist() == [-1]


def test_cover_invariants(small):
    for cover in (build_cover(small, 13), build_cover(small, mode="approx", epsilon=2e-3)):
        _check_non_overlap(cover)
        b = cover.kind == BOUNDARY
        assert np.all(np.diff(cover.cand_ptr)[b] >= 1) and np.all(np.diff(cover.cand_ptr)[~b] == 0)
        for k in np.flatnonzero(b)[:500]:
            assert cover.polygon[k] in cover.candidates(k)
        if cover.mode == "approx":
            diag = np.array([cell_diagonal(int(v)) for v in cover.levels[b]])
            assert np.all(diag <= 2e-3)
        else:
            assert cover.levels.max() <= 13


def test_interior_cells_are_sound(small, rng):
    cover = build_cover(small, 12)
    oracle = LeafOracle(small)
    interior = np.flatnonzero(cover.kind == INTERIOR)
    for k in rng.choice(interior, size=min(300, len(interior)), replace=False):
        s = _samples(int(cover.ids[k]))
        assert naive_pip(s, oracle.segs[int(cover.polygon[k])]).all()


def test_interior_hits_agree_with_oracle(synth, synth_oracle):
    cover = build_cover(synth, 16)
    trie = build_trie(cover, 4)
    pts = uniform_points(synth.bounds(), 200_000, 21)
    entry, _ = trie.lookup_points(pts)
    hit = entry >= 0
    interior = np.zeros(len(pts), dtype=bool)
    interior[hit] = cover.kind[entry[hit]] == INTERIOR
    want = synth_oracle.leaves(pts[interior])
    assert np.array_equal(cover.polygon[entry[interior]], want)


def test_epsilon_floor_and_bad_params(small):
    with pytest.raises(ValueError, match="level-30"):
        build_cover(small, mode="approx", epsilon=1e-9)
    with pytest.raises(ValueError):
        build_cover(small, mode="approx")
    with pytest.raises(ValueError):
        build_cover(small, 31)
    with pytest.raises(ValueError):
        build_cover(small, 10, mode="fuzzy")


# ---------------------------------------------------------------- trie

@pytest.mark.parametrize("fanout", [1, 2, 4])
def test_trie_equals_linear_scan(fanout, rng):
    for _ in range(60):
        ids = random_cover(rng)
        trie = build_trie(_cover_of(ids), fanout)
        q = random_leaf_queries(rng, ids, 200)
        entry, visits = trie.lookup(q)
        assert np.array_equal(entry, linear_lookup(trie.cover.ids, q))
        assert visits.max(initial=0) <= math.ceil(30 / fanout)
        assert trie.lookup_linear(int(q[0])) == entry[0]


def test_visits_shrink_with_fanout(rng):
    ids = random_cover(rng, p_split=0.22)
    q = random_leaf_queries(rng, ids, 2000)
    v = {f: build_trie(_cover_of(ids), f).lookup(q)[1] for f in (1, 2, 4)}
    assert np.all(v[4] <= v[2]) and np.all(v[2] <= v[1])


def test_larger_cells_sit_nearer_the_root():
    coarse = cell_from_point((10.0, 10.0), 3)
    fine = cell_from_point((-100.0, -40.0), 17)
    trie = build_trie(_cover_of([coarse, fine]), 4)
    q = np.array([cell_from_point((10.1, 10.1), 30), cell_from_point((-100.0, -40.0), 30)], dtype=np.uint64)
    entry, visits = trie.lookup(q)
    assert visits.tolist() == [1, 5]
    assert trie.cover.ids[entry].tolist() == [coarse, fine]


@pytest.mark.parametrize("fanout", [1, 2, 4])
def test_overlap_is_rejected(fanout):
    a = cell_from_point((10.0, 10.0), 5)
    for b in (cell_from_point((10.0, 10.0), 9), a, ROOT_ID):
        ids = [a, b] if b != a else [a, a]
        with pytest.raises(DataError):
            build_trie(_cover_of(ids), fanout)


def test_bad_fanout():
    with pytest.raises(ValueError):
        build_trie(_cover_of([]), 3)


# ---------------------------------------------------------------- queries

@pytest.mark.parametrize("fanout", [1, 2, 4])
def test_exact_query_matches_oracle(synth, synth_points, fanout):
    pts, want = synth_points
    trie = build_trie(build_cover(synth, 15), fanout)
    r = query(trie, synth, pts[:30000])
    assert np.array_equal(r.leaf, want[:30000])
    assert r.pip_point_evaluations > 0


def test_out_of_domain_points(small):
    trie = build_trie(build_cover(small, 12), 4)
    r = query(trie, small, [(200.0, 0.0), (0.0, 95.0), (np.nan, 0.0), (0.0, 0.0)])
    assert r.leaf.tolist() == [-1, -1, -1, -1]
    assert r.out_of_domain == 3


def test_approx_mode(small):
    approx = build_trie(build_cover(small, mode="approx", epsilon=2e-3), 4)
    exact = build_trie(build_cover(small, 12), 4)
    pts = uniform_points(small.bounds(), 20000, 8, margin=0.01)
    ra = query(approx, small, pts)
    re = query(exact, small, pts)
    assert ra.pip_point_evaluations == 0 and ra.pip_calls == 0
    oracle = LeafOracle(small)
    diff = np.flatnonzero(ra.leaf != re.leaf)
    assert np.all(ra.leaf[diff] >= 0)
    for k in diff:
        assert oracle.distance_to_leaf(pts[k][None], int(ra.leaf[k]))[0] <= 2e-3
    # The approx cover also answers exact queries.
    assert np.array_equal(query(approx, small, pts, "exact").leaf, re.leaf)
    with pytest.raises(ValueError):
        query(exact, small, pts, "approx")


def test_query_rejects_foreign_hierarchy(flat):
    trie = build_trie(build_cover(flat, 8), 4)
    with pytest.raises(ValueError):
        query(trie, generate_synthetic(1, 1, 1, 2, 0.0), [(0.0, 0.0)])


def test_index_stats(synth):
    cover = build_cover(synth, 14)
    s = {f: index_stats(build_trie(cover, f)) for f in (1, 2, 4)}
    assert s[4]["nodes"] <= s[2]["nodes"] <= s[1]["nodes"]
    for f, st in s.items():
        assert st["entries"] == len(cover) == st["interior"] + st["boundary"]
        assert st["node_bytes"] == st["nodes"] * 4 ** f * 4
        assert st["bytes"] == st["node_bytes"] + st["entry_bytes"]


# ---------------------------------------------------------------- FMCI files

def test_index_roundtrip(tmp_path, small):
    for cover in (build_cover(small, 11), build_cover(small, mode="approx", epsilon=2e-3)):
        p = tmp_path / "c.fmci"
        save_index(cover, p)
        assert p.read_bytes()[:4] == b"FMCI"
        back = load_index(p)
        assert back == cover


def test_index_file_errors(tmp_path, small):
    p = tmp_path / "c.fmci"
    save_index(build_cover(small, 9), p)
    data = p.read_bytes()
    for bad in (b"FMCB" + data[4:], data[:4] + b"\x07\x00" + data[6:], data[:len(data) // 2], data + b"x"):
        p.write_bytes(bad)
        with pytest.raises(FormatError):
            load_index(p)
