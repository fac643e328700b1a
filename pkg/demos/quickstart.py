"""Build a small synthetic map and assign points to block groups.

Run with ``python demos/quickstart.py``.
"""
import numpy as np

from censusmap import assign, generate_synthetic, pip_fraction
from censusmap.synthetic import uniform_points

# 2 states x 3 counties x 16 block groups, with jittered shared vertices
h = generate_synthetic(seed=11, n_states=2, counties_per_state=3, blocks_per_county=16, jitter=0.2)
print("regions (states, counties, block groups):", h.counts)

pts = uniform_points(h.bounds(), 10_000, seed=3)
res = assign(h, pts, mode="paper-compat")

hit = res.leaf >= 0
print(f"assigned {hit.sum()} of {len(pts)} points")
print("first five FIPS codes:", res.fips[:5].tolist())
print(f"PIP evaluations per point: {pip_fraction(res, len(pts)):.3f}")

# Points per block group, largest first
codes, counts = np.unique(res.fips[hit], return_counts=True)
for c, n in sorted(zip(codes, counts), key=lambda t: -t[1])[:5]:
    print(f"  {c}  {n}")
