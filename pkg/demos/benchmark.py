"""Time every mode at a few batch sizes and write CSV / TSV / JSON reports.

The same report is available from the command line as ``censusmap bench``.
"""
import sys

from censusmap import generate_synthetic
from censusmap.cli import bench, write_reports

prefix = sys.argv[1] if len(sys.argv) > 1 else "bench_demo"
h = generate_synthetic(seed=7, n_states=4, counties_per_state=4, blocks_per_county=25, jitter=0.2)
rows = bench(h, modes=("simple", "fast-exact", "fast-approx"), sizes=(10_000, 100_000), threads=(1,), repeat=3)
for r in rows:
    print(f"{r.mode:<12} n={r.n_points:<8} {r.assign_seconds:8.4f} s  {r.points_per_second:12.0f} pts/s"
          f"  pip/pt {r.pip_fraction:.3f}  index {r.index_bytes} B")
for p in write_reports(rows, prefix):
    print("wrote", p)
