"""Command-line front end.

Subcommands::

    censusmap ingest STATES COUNTIES BLOCKS OUT.fmcb
    censusmap generate --seed 7 --shape 4,4,25 --jitter 0.2 OUT_DIR
    censusmap build-index HIER.fmcb OUT.fmci [--mode exact|approx]
    censusmap assign HIER.fmcb POINTS OUT.csv --mode simple|fast-exact|fast-approx
    censusmap bench [HIER.fmcb] --modes simple,fast-exact --points 1e3,1e4 --threads 1,2

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .errors import DataError
from .hierarchy import RegionHierarchy, load_boundaries, load_hierarchy, save_hierarchy
from .oracle import oracle_leaves
from .result import DEFAULT_CHUNK, AssignmentResult, default_threads, pip_fraction
from .simple_mapper import assign
from .synthetic import clustered_points, generate_synthetic, uniform_points, write_geojson
from .cell_index import build_cover, build_trie, index_stats, load_index, query, save_index

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
ASSIGN_MODES = ("simple", "fast-exact", "fast-approx")
DEFAULT_LEVEL = 18
DEFAULT_EPSILON = 1e-3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _warn(msg: str):
    print(f"warning: {msg}", file=sys.stderr)


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(float(t)) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return vals


def _shape(text: str) -> tuple[int, int, int]:
    vals = _int_list(text)
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("shape is STATES,COUNTIES,BLOCKS")
    return tuple(vals)


# ---------------------------------------------------------------- points I/O

def read_points(path, fmt: str = "auto") -> tuple[np.ndarray, np.ndarray, int]:
    """Load points; returns (row indices, (n, 2) lon/lat, skipped count).

    Rows with non-finite or unparsable coordinates are skipped with a
    warning. Row indices count data rows from 0 in file order.
    """
    path = Path(path)
    if fmt == "auto":
        fmt = "bin" if path.suffix in (".bin", ".f64") else "csv"
    if fmt == "bin":
        raw = np.fromfile(path, dtype="<f8")
        if len(raw) % 2:
            raise DataError(f"{path}: binary points file holds an odd number of doubles")
        pts = raw.reshape(-1, 2).astype(np.float64)
        bad = np.zeros(len(pts), dtype=bool)
    else:
        pts, bad = _read_csv(path)
    bad |= ~np.isfinite(pts).all(axis=1)
    skipped = int(np.count_nonzero(bad))
    if skipped:
        first = np.flatnonzero(bad)[:5].tolist()
        _warn(f"{path}: skipped {skipped} row(s) with missing or non-finite coordinates (rows {first}...)")
    keep = np.flatnonzero(~bad)
    return keep, pts[keep], skipped


def _read_csv(path: Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return np.empty((0, 2)), np.empty(0, dtype=bool)
    header = [h.strip().lower() for h in rows[0]]
    if "lon" not in header or "lat" not in header:
        raise DataError(f"{path}: header must name 'lon' and 'lat' columns, got {rows[0]}")
    ix, iy = header.index("lon"), header.index("lat")
    body = rows[1:]
    pts = np.full((len(body), 2), np.nan)
    for k, row in enumerate(body):
        try:
            pts[k] = float(row[ix]), float(row[iy])
        except (ValueError, IndexError):
            pass  # left as NaN, counted as skipped
    return pts, np.zeros(len(body), dtype=bool)


def write_points_csv(path, pts: np.ndarray):
    with open(path, "w", newline="") as fh:
        fh.write("lon,lat\n")
        fh.writelines(f"{x!r},{y!r}\n" for x, y in pts.tolist())


def write_assignments(path, idx: np.ndarray, pts: np.ndarray, fips) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("idx,lon,lat,fips\n")
        fh.writelines(f"{i},{x!r},{y!r},{f}\n" for i, (x, y), f in zip(idx.tolist(), pts.tolist(), fips))


# ---------------------------------------------------------------- engines

def _fast_index(h: RegionHierarchy, mode: str, index_path=None, level=DEFAULT_LEVEL,
                epsilon=DEFAULT_EPSILON, fanout=4):
    if index_path is not None:
        cover = load_index(index_path)
    elif mode == "fast-approx":
        cover = build_cover(h, mode="approx", epsilon=epsilon)
    else:
        cover = build_cover(h, level, "exact")
    return build_trie(cover, fanout)


def run_mode(h, trie, mode: str, pts, strict: bool, threads: int, chunk_size: int) -> AssignmentResult:
    if mode == "simple":
        return assign(h, pts, "strict" if strict else "paper-compat", threads, chunk_size)
    return query(trie, h, pts, "approx" if mode == "fast-approx" else "exact", threads, chunk_size)


# ---------------------------------------------------------------- commands

def cmd_ingest(args) -> int:
    h = load_boundaries(args.states, args.counties, args.blocks)
    save_hierarchy(h, args.out)
    s, c, b = h.counts
    print(f"states={s} counties={c} blocks={b} -> {args.out}")
    return EXIT_OK


def cmd_generate(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_states, n_counties, n_blocks = args.shape
    h = generate_synthetic(args.seed, n_states, n_counties, n_blocks, args.jitter)
    write_geojson(h, out)
    save_hierarchy(h, out / "hierarchy.fmcb")
    if args.distribution == "clustered":
        pts = clustered_points(h, args.points, args.seed + 1)
    else:
        pts = uniform_points(h.bounds(), args.points, args.seed + 1)
    write_points_csv(out / "points.csv", pts)
    leaf = oracle_leaves(h, pts)
    fips = np.append(h.leaf_fips, "")[leaf].tolist()
    write_assignments(out / "oracle.csv", np.arange(len(pts)), pts, fips)
    s, c, b = h.counts
    print(f"states={s} counties={c} blocks={b} points={len(pts)} -> {out}")
    return EXIT_OK


def cmd_build_index(args) -> int:
    h = load_hierarchy(args.hierarchy)
    t0 = time.perf_counter()
    cover = build_cover(h, args.max_level, args.mode, args.epsilon if args.mode == "approx" else None)
    elapsed = time.perf_counter() - t0
    save_index(cover, args.out)
    stats = index_stats(build_trie(cover, args.fanout), cover)
    print(f"entries={stats['entries']} interior={stats['interior']} boundary={stats['boundary']} "
          f"bytes(F{args.fanout})={stats['bytes']} build_seconds={elapsed:.3f} -> {args.out}")
    return EXIT_OK


def cmd_assign(args) -> int:
    if args.strict and args.mode != "simple":
        raise UsageError("--strict applies to --mode simple only")
    h = load_hierarchy(args.hierarchy)
    idx, pts, skipped = read_points(args.points, args.format)
    trie = None
    if args.mode != "simple":
        trie = _fast_index(h, args.mode, args.index, args.level, args.epsilon, args.fanout)
        if args.mode == "fast-approx" and trie.cover.mode != "approx":
            raise DataError(f"{args.index}: fast-approx needs an index built with --mode approx")
    r = run_mode(h, trie, args.mode, pts, args.strict, args.threads, args.chunk_size)
    write_assignments(args.out, idx, pts, r.fips.tolist())
    resolved = int(np.count_nonzero(r.leaf >= 0))
    print(f"points={len(pts)} resolved={resolved} unresolved={len(pts) - resolved} skipped={skipped} "
          f"out_of_domain={r.out_of_domain} pip_evaluations={r.pip_point_evaluations} -> {args.out}",
          file=sys.stderr)
    return EXIT_OK


@dataclass
class BenchReport:
    mode: str
    n_points: int
    threads: int
    build_seconds: float
    assign_seconds: float
    points_per_second: float
    pip_fraction: float
    index_bytes: int


def _timed(func, repeat: int):
    """Best-of-``repeat`` wall time after one untimed warmup call."""
    if repeat < 1:
        raise UsageError("--repeat must be at least 1")
    result = func()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = func()
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench(h: RegionHierarchy, modes, sizes, threads, repeat: int = 3, distribution: str = "uniform",
          seed: int = 0, strict: bool = False, level: int = DEFAULT_LEVEL, epsilon: float = DEFAULT_EPSILON,
          fanout: int = 4, chunk_size: int = DEFAULT_CHUNK) -> list[BenchReport]:
    """Time each (mode, size, thread count); one report row per combination."""
    rows = []
    for mode in modes:
        trie, build_s, nbytes = None, 0.0, 0
        if mode != "simple":
            t0 = time.perf_counter()
            trie = _fast_index(h, mode, None, level, epsilon, fanout)
            build_s = time.perf_counter() - t0
            nbytes = index_stats(trie)["bytes"]
        for n in sorted(sizes):
            if distribution == "clustered":
                pts = clustered_points(h, n, seed)
            else:
                pts = uniform_points(h.bounds(), n, seed)
            for t in threads:
                secs, r = _timed(lambda: run_mode(h, trie, mode, pts, strict, t, chunk_size), repeat)
                rows.append(BenchReport(mode, n, t, build_s, secs, n / secs, pip_fraction(r, n), nbytes))
    return rows


def write_reports(rows: list[BenchReport], prefix) -> list[Path]:
    prefix = Path(prefix)
    names = [f.name for f in fields(BenchReport)]
    paths = [prefix.with_suffix(".csv"), prefix.with_suffix(".tsv"), prefix.with_suffix(".json")]
    for path, sep in zip(paths[:2], (",", "\t")):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, delimiter=sep, lineterminator="\n")
            if sep == "\t":
                fh.write("# " + "\t".join(names) + "\n")  # gnuplot treats '#' lines as comments
            else:
                w.writerow(names)
            w.writerows([getattr(r, k) for k in names] for r in rows)
    paths[2].write_text(json.dumps([asdict(r) for r in rows], indent=1) + "\n")
    return paths


def cmd_bench(args) -> int:
    if args.hierarchy:
        h = load_hierarchy(args.hierarchy)
    else:
        h = generate_synthetic(args.seed, *args.shape, args.jitter)
    modes = [m.strip() for m in args.modes.split(",")]
    unknown = set(modes) - set(ASSIGN_MODES)
    if unknown:
        raise UsageError(f"unknown mode(s) {sorted(unknown)}; choose from {ASSIGN_MODES}")
    rows = bench(h, modes, args.points, args.threads, args.repeat, args.distribution, args.seed,
                 args.strict, args.level, args.epsilon, args.fanout, args.chunk_size)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow([f.name for f in fields(BenchReport)])
    w.writerows([getattr(r, f.name) for f in fields(BenchReport)] for r in rows)
    if args.out:
        for p in write_reports(rows, args.out):
            print(f"wrote {p}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="censusmap", description="Assign lon/lat points to census-style polygon hierarchies.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ingest", help="GeoJSON states/counties/blocks -> hierarchy file")
    s.add_argument("states")
    s.add_argument("counties")
    s.add_argument("blocks")
    s.add_argument("out")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("generate", help="synthetic GeoJSON triple, points and oracle assignments")
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--shape", type=_shape, default=(4, 4, 25), help="STATES,COUNTIES,BLOCKS per parent")
    s.add_argument("--jitter", type=float, default=0.2)
    s.add_argument("--points", type=int, default=1000)
    s.add_argument("--distribution", choices=("uniform", "clustered"), default="uniform")
    s.add_argument("out_dir")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("build-index", help="cell cover index file from a hierarchy file")
    s.add_argument("hierarchy")
    s.add_argument("out")
    s.add_argument("--mode", choices=("exact", "approx"), default="exact")
    s.add_argument("--max-level", type=int, default=DEFAULT_LEVEL)
    s.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON, help="degrees, approx mode")
    s.add_argument("--fanout", type=int, choices=(1, 2, 4), default=4, help="for the reported size")
    s.set_defaults(func=cmd_build_index)

    def engine_flags(s):
        s.add_argument("--strict", action="store_true", help="simple mode: verify every candidate")
        s.add_argument("--level", type=int, default=DEFAULT_LEVEL, help="exact cover level")
        s.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
        s.add_argument("--fanout", type=int, choices=(1, 2, 4), default=4)
        s.add_argument("--chunk-size", type=int, default=DEFAULT_CHUNK)

    s = sub.add_parser("assign", help="assign a points file, writing idx,lon,lat,fips")
    s.add_argument("hierarchy")
    s.add_argument("points", help="CSV with lon,lat header, or .bin of little-endian f64 pairs")
    s.add_argument("out")
    s.add_argument("--mode", choices=ASSIGN_MODES, default="simple")
    s.add_argument("--index", help="prebuilt index file for the fast modes")
    s.add_argument("--format", choices=("auto", "csv", "bin"), default="auto")
    s.add_argument("--threads", type=int, default=None, help="default: $FMCB_THREADS or CPU count")
    engine_flags(s)
    s.set_defaults(func=cmd_assign)

    s = sub.add_parser("bench", help="throughput over point counts and thread counts")
    s.add_argument("hierarchy", nargs="?", help="hierarchy file; default is a synthetic map")
    s.add_argument("--modes", default="simple,fast-exact,fast-approx")
    s.add_argument("--points", type=_int_list, default=[1000, 10000, 100000, 1000000])
    s.add_argument("--threads", type=_int_list, default=[1])
    s.add_argument("--repeat", type=int, default=3)
    s.add_argument("--distribution", choices=("uniform", "clustered"), default="uniform")
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--shape", type=_shape, default=(4, 4, 25))
    s.add_argument("--jitter", type=float, default=0.2)
    s.add_argument("--out", help="write OUT.csv, OUT.tsv and OUT.json")
    engine_flags(s)
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 0) is None:
        args.threads = default_threads()
    try:
        return args.func(args)
    except UsageError as e:
        print(f"censusmap: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError, ValueError) as e:
        print(f"censusmap: error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
