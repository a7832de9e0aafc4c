"""Search for boards that fill under bootstrap yet die out under recovery."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernel
from .grid import Grid, last_word_mask, pack_bool

EXHAUSTIVE_MAX_N = 4


@dataclass(frozen=True)
class SearchReport:
    n: int
    mode: str
    examined: int
    witness: Grid | None
    exhausted: bool

    def message(self) -> str:
        if self.witness is not None:
            return f"witness found on [{self.n}]^2 after {self.examined} configurations"
        if self.mode == "exhaustive" and self.exhausted:
            return f"no witness among all {self.examined} configurations on [{self.n}]^2"
        return (f"no witness among {self.examined} sampled configurations on [{self.n}]^2 "
                "(budget exhausted; this says nothing about existence)")


def _classify(arrs: np.ndarray) -> np.ndarray:
    """Indices of boards that percolate under bootstrap and go extinct under recovery."""
    m, n, _ = arrs.shape
    rows = pack_bool(arrs.reshape(m * n, n)).reshape(m, n, -1)
    full = Grid.full(n).rows
    mask = last_word_mask(n)
    boot = kernel.evolve_batch(rows, mask, False, full, -1)
    cand = np.nonzero(boot == kernel.PERCOLATED)[0]
    if len(cand) == 0:
        return cand
    rec = kernel.evolve_batch(np.ascontiguousarray(rows[cand]), mask, True, full, -1)
    return cand[rec == kernel.EXTINCT]


def _all_boards(n: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n * n)) & 1
    return bits.astype(bool).reshape(-1, n, n)


def find_bvsr(n: int, budget: int, seed: int = 0, p: float = 0.3,
              batch: int = 4096) -> SearchReport:
    """Exhaustive for ``n <= 4`` (up to ``budget`` boards), random boards otherwise."""
    if n < 1:
        raise ValueError("n must be positive")
    if budget < 0:
        raise ValueError("budget must be non-negative")
    if n <= EXHAUSTIVE_MAX_N:
        total = 1 << (n * n)
        stop = min(total, budget)
        for start in range(0, stop, batch):
            arrs = _all_boards(n, start, min(stop, start + batch))
            hits = _classify(arrs)
            if len(hits):
                return SearchReport(n, "exhaustive", start + int(hits[0]) + 1,
                                    Grid.from_array(arrs[hits[0]]), False)
        return SearchReport(n, "exhaustive", stop, None, stop == total)
    rng = np.random.default_rng(seed)
    done = 0
    while done < budget:
        k = min(batch, budget - done)
        arrs = rng.random((k, n, n)) < p
        hits = _classify(arrs)
        if len(hits):
            return SearchReport(n, "random", done + int(hits[0]) + 1,
                                Grid.from_array(arrs[hits[0]]), False)
        done += k
    return SearchReport(n, "random", done, None, True)
