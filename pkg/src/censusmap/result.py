from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

DEFAULT_CHUNK = 1 << 20


_NO_FIPS = np.array([""], dtype="<U12")


@dataclass
class AssignmentResult:
    """Per-point region indices (-1 when unassigned) and PIP work counters.

    ``county`` and ``block`` are indices within their parent; ``leaf`` is the
    global leaf number. ``fips`` is derived from ``leaf`` through
    ``fips_table`` and holds '' for points without a block.
    """

    state: np.ndarray
    county: np.ndarray
    block: np.ndarray
    leaf: np.ndarray
    fips_table: np.ndarray = field(default=_NO_FIPS, repr=False)
    pip_point_evaluations: int = 0
    pip_calls: int = 0
    out_of_domain: int = 0

    def __len__(self):
        return len(self.leaf)

    @property
    def fips(self) -> np.ndarray:
        # The table carries a trailing '' so leaf -1 maps to it.
        return self.fips_table[self.leaf]

    @property
    def fips12(self) -> list[str | None]:
        return [f or None for f in self.fips.tolist()]

    @classmethod
    def empty(cls, n: int = 0, fips_table: np.ndarray = _NO_FIPS) -> AssignmentResult:
        neg = np.full(n, -1, dtype=np.int64)
        return cls(neg, neg.copy(), neg.copy(), neg.copy(), fips_table)

    @classmethod
    def from_leaves(cls, h, leaf: np.ndarray, **counters) -> AssignmentResult:
        leaf = np.asarray(leaf, dtype=np.int64)
        path = h.leaf_path_table[leaf]
        return cls(path[:, 0], path[:, 1], path[:, 2], leaf, h.fips_table, **counters)

    @classmethod
    def concat(cls, parts: Sequence[AssignmentResult]) -> AssignmentResult:
        if not parts:
            return cls.empty()
        return cls(
            *(np.concatenate([getattr(p, f) for p in parts]) for f in ("state", "county", "block", "leaf")),
            fips_table=parts[0].fips_table,
            pip_point_evaluations=sum(p.pip_point_evaluations for p in parts),
            pip_calls=sum(p.pip_calls for p in parts),
            out_of_domain=sum(p.out_of_domain for p in parts),
        )


def pip_fraction(result: AssignmentResult, n_points: int) -> float:
    """Point-in-polygon evaluations per input point."""
    if n_points <= 0:
        raise ValueError("n_points must be positive")
    return result.pip_point_evaluations / n_points


def default_threads() -> int:
    env = os.environ.get("FMCB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_partitioned(func: Callable[[np.ndarray], AssignmentResult], points, threads: int = 1,
                    chunk_size: int = DEFAULT_CHUNK) -> AssignmentResult:
    """Apply ``func`` to contiguous point chunks on a thread pool.

    Chunks are merged in input order and counters are summed, so the result
    does not depend on ``threads`` or ``chunk_size``.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    threads = max(1, int(threads))
    if threads == 1 and n <= chunk_size:
        return func(pts)
    size = max(1, min(chunk_size, -(-n // threads)))
    chunks = [pts[s:s + size] for s in range(0, n, size)]
    if threads == 1:
        return AssignmentResult.concat([func(c) for c in chunks])
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return AssignmentResult.concat(list(pool.map(func, chunks)))
