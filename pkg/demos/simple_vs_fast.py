"""Compare the bbox-filter mapper with the cell-trie index.

The exact index agrees with strict mode on every point. Paper-compat mode
trusts a unique bbox hit without a PIP test, so it differs near jittered
edges. The approx index may also differ, but only within epsilon of an edge.
"""
import time

import numpy as np

from censusmap import assign, generate_synthetic
from censusmap.cell_index import build_cover, build_trie, index_stats, query
from censusmap.synthetic import uniform_points

h = generate_synthetic(seed=7, n_states=4, counties_per_state=4, blocks_per_county=25, jitter=0.2)
pts = uniform_points(h.bounds(), 200_000, seed=1)


def timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


strict = assign(h, pts, mode="strict")
simple, t_simple = timed(lambda: assign(h, pts, mode="paper-compat"))
print(f"simple        {t_simple:7.3f} s  differ from strict {np.count_nonzero(simple.leaf != strict.leaf)}")

for mode, kw in (("exact", dict(max_level=18)), ("approx", dict(epsilon=1e-3))):
    cover, t_build = timed(lambda: build_cover(h, mode=mode, **kw))
    trie = build_trie(cover, fanout=4)
    res, t_query = timed(lambda: query(trie, h, pts))
    stats = index_stats(trie)
    diff = np.count_nonzero(res.leaf != strict.leaf)
    print(f"fast-{mode:<7} {t_query:7.3f} s  build {t_build:5.2f} s  "
          f"{stats['bytes'] / 2**20:6.2f} MiB  entries {stats['entries']}  differ from strict {diff}")
