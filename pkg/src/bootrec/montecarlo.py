"""Seeded Monte Carlo estimates of percolation and crossing probabilities.

Every trial draws from its own counter-based stream: a Philox generator whose
key comes from the master seed and whose counter starts at
``[0, 0, trial, cell]``.  Results therefore depend only on (seed, cell,
trial) and not on how trials are split across worker processes.  Trials that
share a cell index see the same uniforms at every ``p``, which couples them:
a larger ``p`` gives a superset of initially infected sites, trial by trial.
"""

from __future__ import annotations

import concurrent.futures as cf
import enum
import time
import warnings
from dataclasses import dataclass, field, asdict
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.stats import binomtest

from . import kernel
from .dynamics import Kind, Rule, evolve_rows, traversable_batch
from .grid import n_words, pack_bool
from .tiles import double_gaps, project_flags, sample_flags

ROW_CHUNK = 256


class Model(str, enum.Enum):
    SITES = "sites"
    TILES = "tiles"


@lru_cache(maxsize=64)
def stream_key(seed: int) -> tuple[int, int]:
    k = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)
    return int(k[0]), int(k[1])


def trial_rng(seed: int, cell: int, trial: int) -> np.random.Generator:
    """Independent generator for one trial of one cell."""
    if cell < 0 or trial < 0:
        raise ValueError("cell and trial indices must be non-negative")
    bitgen = np.random.Philox(key=np.array(stream_key(seed), dtype=np.uint64),
                              counter=np.array([0, 0, trial, cell], dtype=np.uint64))
    return np.random.Generator(bitgen)


# -- initial conditions ---------------------------------------------------------

def sample_site_rows(rng: np.random.Generator, width: int, height: int, p: float) -> np.ndarray:
    """Packed Bernoulli(``p``) board, drawn bottom row first."""
    out = np.empty((height, n_words(width)), dtype=np.uint64)
    for r0 in range(0, height, ROW_CHUNK):
        r1 = min(height, r0 + ROW_CHUNK)
        out[r0:r1] = pack_bool(rng.random((r1 - r0, width)) < p)
    return out


def sample_tile_rows(rng: np.random.Generator, width: int, height: int, p: float) -> np.ndarray:
    """Packed site board of a random tile configuration.

    Uniforms are consumed in the documented tile order; the board is built in
    row chunks with one row of overlap so partners reaching up are kept.
    """
    sites = np.zeros((height, width), dtype=bool)
    for r0 in range(0, height, ROW_CHUNK):
        r1 = min(height, r0 + ROW_CHUNK)
        flags = sample_flags(width, r1 - r0, p, rng.random(4 * width * (r1 - r0)))
        lo = max(0, r0 - 1)
        hi = min(height, r1 + 1)
        block = np.zeros((hi - lo, width, 4), dtype=bool)
        block[r0 - lo:r0 - lo + (r1 - r0)] = flags
        sites[lo:hi] |= project_flags(block)
    return pack_bool(sites)


def sample_board(model: Model, rng: np.random.Generator, width: int, height: int,
                 p: float) -> np.ndarray:
    if Model(model) is Model.SITES:
        return sample_site_rows(rng, width, height, p)
    return sample_tile_rows(rng, width, height, p)


def _check_p(p: float) -> None:
    if not 0 <= p <= 1:
        raise ValueError(f"p={p} outside [0, 1]")


# -- estimates ---------------------------------------------------------------

@dataclass(frozen=True)
class Estimate:
    """Binomial estimate; ``trials`` excludes trials stopped by the step budget."""

    point: float
    ci_low: float
    ci_high: float
    trials: int
    successes: int
    seed: int
    cell: int = 0
    budget_exceeded: int = 0
    wall_time: float = field(default=0.0, compare=False)

    @classmethod
    def from_counts(cls, successes: int, trials: int, seed: int, cell: int = 0,
                    budget_exceeded: int = 0, wall_time: float = 0.0) -> "Estimate":
        if trials == 0:
            return cls(float("nan"), 0.0, 1.0, 0, 0, seed, cell, budget_exceeded, wall_time)
        lo, hi = wilson_interval(successes, trials)
        point = successes / trials
        return cls(point, min(lo, point), max(hi, point), trials, successes, seed, cell,
                   budget_exceeded, wall_time)

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.point * (1 - self.point) / self.trials)) if self.trials else float("nan")

    def to_dict(self) -> dict:
        return asdict(self)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


def _percolation_trial(n: int, p: float, model: Model, rule: Rule, seed: int, cell: int,
                       trial: int, max_steps: int | None) -> int:
    rng = trial_rng(seed, cell, trial)
    rows = sample_board(model, rng, n, n, p)
    return kernel_kind(evolve_rows(rows, n, rule, max_steps=max_steps).kind)


def kernel_kind(kind: Kind) -> int:
    return {Kind.PERCOLATED: kernel.PERCOLATED, Kind.CYCLE: kernel.CYCLE,
            Kind.EXTINCT: kernel.EXTINCT, Kind.BUDGET_EXCEEDED: kernel.BUDGET}[kind]


def _percolation_chunk(args) -> np.ndarray:
    n, p, model, rule, seed, cell, trials, max_steps = args
    return np.array([_percolation_trial(n, p, model, rule, seed, cell, t, max_steps)
                     for t in trials], dtype=np.int8)


def _map_chunks(fn: Callable, jobs: list, threads: int) -> list:
    if threads <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with cf.ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs))


def _chunks(count: int, threads: int) -> list[range]:
    if count == 0:
        return []
    parts = max(1, min(count, 4 * max(1, threads)))
    edges = np.linspace(0, count, parts + 1).astype(int)
    return [range(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def percolation_outcomes(n: int, p: float, model: Model = Model.SITES, rule: Rule = Rule.RECOVERY,
                         trials: int = 100, seed: int = 0, cell: int = 0, threads: int = 1,
                         max_steps: int | None = None) -> np.ndarray:
    """Kernel outcome code of every trial, in trial order."""
    if n < 1 or trials < 0:
        raise ValueError("n must be positive and trials non-negative")
    _check_p(p)
    model, rule = Model(model), Rule(rule)
    jobs = [(n, p, model, rule, seed, cell, r, max_steps) for r in _chunks(trials, threads)]
    parts = _map_chunks(_percolation_chunk, jobs, threads)
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int8)


def _summarise(codes: np.ndarray, seed: int, cell: int, started: float) -> Estimate:
    budget = int(np.sum(codes == kernel.BUDGET))
    decided = int(len(codes)) - budget
    wins = int(np.sum(codes == kernel.PERCOLATED))
    return Estimate.from_counts(wins, decided, seed, cell, budget, time.perf_counter() - started)


def estimate_percolation(n: int, p: float, model: Model = Model.SITES,
                         rule: Rule = Rule.RECOVERY, trials: int = 100, seed: int = 0,
                         cell: int = 0, threads: int = 1,
                         max_steps: int | None = None) -> Estimate:
    """Probability that ``[n]^2`` percolates from a random initial board."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    t0 = time.perf_counter()
    codes = percolation_outcomes(n, p, model, rule, trials, seed, cell, threads, max_steps)
    return _summarise(codes, seed, cell, t0)


# -- crossings ---------------------------------------------------------------

def _crossing_chunk(args) -> tuple[np.ndarray, np.ndarray]:
    m, h, p, model, rule, seed, cell, trials = args
    if model is Model.SITES:
        sites = np.stack([trial_rng(seed, cell, t).random((h, m)) < p for t in trials])
    else:
        flags = np.stack([sample_flags(m, h, p, trial_rng(seed, cell, t).random(4 * m * h))
                          for t in trials])
        sites = project_flags(flags)
    return traversable_batch(sites, rule), ~double_gaps(sites)


def crossing_outcomes(m: int, h: int, p: float, model: Model = Model.TILES,
                      rule: Rule = Rule.RECOVERY, trials: int = 1000, seed: int = 0,
                      cell: int = 0, threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial (traversable left to right, free of double gaps) indicators."""
    if m < 1 or h < 1:
        raise ValueError("rectangle sides must be positive")
    _check_p(p)
    model, rule = Model(model), Rule(rule)
    jobs = [(m, h, p, model, rule, seed, cell, r) for r in _chunks(trials, threads)]
    parts = _map_chunks(_crossing_chunk, jobs, threads)
    if not parts:
        return np.zeros(0, dtype=bool), np.zeros(0, dtype=bool)
    return np.concatenate([a for a, _ in parts]), np.concatenate([b for _, b in parts])


def estimate_crossing(m: int, h: int, p: float, model: Model = Model.TILES,
                      rule: Rule = Rule.RECOVERY, trials: int = 1000, seed: int = 0,
                      cell: int = 0, threads: int = 1) -> Estimate:
    """Probability that an ``m x h`` rectangle is traversable left to right."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    t0 = time.perf_counter()
    trav, _ = crossing_outcomes(m, h, p, model, rule, trials, seed, cell, threads)
    return Estimate.from_counts(int(trav.sum()), len(trav), seed, cell,
                                wall_time=time.perf_counter() - t0)


# -- critical probability ------------------------------------------------------

@dataclass(frozen=True)
class Probe:
    p: float
    estimate: Estimate


@dataclass(frozen=True)
class CriticalSearch:
    p_hat: float
    bracket: tuple[float, float]
    ci: tuple[float, float]
    probes: tuple[Probe, ...]
    monotone: bool
    warning: str | None = None


def search_critical_p(n: int, trials_per_probe: int = 200, seed: int = 0, tol: float = 1e-3,
                      model: Model = Model.SITES, rule: Rule = Rule.RECOVERY,
                      bracket: tuple[float, float] = (0.0, 1.0), cell: int = 0,
                      threads: int = 1, max_steps: int | None = None,
                      target: float = 0.5, refine: int = 8) -> CriticalSearch:
    """Bisect for the ``p`` at which the percolation probability crosses ``target``.

    All probes share one cell index, so their trials are coupled and the
    estimated curve is monotone in ``p`` unless something is wrong; a
    violation is reported, never hidden.  The returned ``ci`` runs from the
    largest probe whose Wilson interval lies below ``target`` to the smallest
    whose interval lies above it.  After bisection, up to ``refine`` extra
    probes per side step outwards from the final bracket in steps of
    ``tol / 2`` until such a probe is found, so the interval is resolved to
    about ``tol`` rather than to wherever bisection happened to probe.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if not tol > 0:
        raise ValueError("tol must be positive")
    lo, hi = map(float, bracket)
    if not 0 <= lo < hi <= 1:
        raise ValueError(f"bad bracket {bracket}")
    probes: list[Probe] = []

    def probe(p: float) -> Estimate:
        est = estimate_percolation(n, p, model, rule, trials_per_probe, seed, cell, threads,
                                   max_steps)
        probes.append(Probe(p, est))
        return est

    warning = None
    if lo > 0 and probe(lo).point >= target:
        warning = "lower end of the bracket already percolates with probability >= target"
    if hi < 1 and probe(hi).point < target:
        warning = "upper end of the bracket percolates with probability < target"
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if probe(mid).point >= target:
            hi = mid
        else:
            lo = mid

    def outside(side: int) -> list[float]:
        if side > 0:
            return [pr.p for pr in probes if pr.estimate.ci_low > target]
        return [pr.p for pr in probes if pr.estimate.ci_high < target]

    for side, edge in ((1, hi), (-1, lo)):
        for k in range(1, refine + 1):
            p = round(edge + side * k * tol / 2, 12)
            known = outside(side)
            if not 0 <= p <= 1 or (known and (min(known) <= p if side > 0 else max(known) >= p)):
                break
            est = probe(p)
            if (est.ci_low > target) if side > 0 else (est.ci_high < target):
                break

    ordered = sorted(probes, key=lambda pr: pr.p)
    points = [pr.estimate.point for pr in ordered]
    monotone = all(a <= b for a, b in zip(points, points[1:]))
    below = [pr.p for pr in ordered if pr.estimate.ci_high < target]
    above = [pr.p for pr in ordered if pr.estimate.ci_low > target]
    ci_lo = max(below) if below else float(bracket[0])
    ci_hi = min(above) if above else float(bracket[1])
    if not monotone:
        warning = "non-monotone probe sequence"
        ci_lo, ci_hi = min(ci_lo, lo), max(ci_hi, hi)
    if warning:
        warnings.warn(f"search_critical_p(n={n}): {warning}", RuntimeWarning, stacklevel=2)
    return CriticalSearch(0.5 * (lo + hi), (lo, hi), (ci_lo, ci_hi), tuple(probes), monotone,
                          warning)


# -- sweeps ------------------------------------------------------------------

@dataclass(frozen=True)
class Cell:
    n: int
    p: float
    model: Model = Model.SITES
    rule: Rule = Rule.RECOVERY
    trials: int = 100
    max_steps: int | None = None


@dataclass(frozen=True)
class SweepRow:
    n: int
    p: float
    model: Model
    rule: Rule
    estimate: Estimate | None
    error: str | None = None

    CSV_HEADER = ("n", "p", "model", "rule", "trials", "successes", "budget_exceeded",
                  "point", "ci_low", "ci_high", "seed", "cell", "error")

    def csv_fields(self) -> list[str]:
        e = self.estimate
        if e is None:
            stats = ["", "", "", "", "", "", "", ""]
        else:
            stats = [str(e.trials), str(e.successes), str(e.budget_exceeded), repr(e.point),
                     repr(e.ci_low), repr(e.ci_high), str(e.seed), str(e.cell)]
        return [str(self.n), repr(self.p), self.model.value, self.rule.value, *stats,
                self.error or ""]

    def to_dict(self) -> dict:
        d = {"n": self.n, "p": self.p, "model": self.model.value, "rule": self.rule.value,
             "estimate": None if self.estimate is None else self.estimate.to_dict(),
             "error": self.error}
        if d["estimate"] is not None:
            d["estimate"].pop("wall_time")
        return d


def run_sweep(cells: Sequence[Cell], seed: int = 0, threads: int = 1) -> list[SweepRow]:
    """One row per cell, in input order; cell ``i`` uses stream cell index ``i``."""
    rows = []
    for i, c in enumerate(cells):
        try:
            est = estimate_percolation(c.n, c.p, c.model, c.rule, c.trials, seed, i, threads,
                                       c.max_steps)
            rows.append(SweepRow(c.n, c.p, Model(c.model), Rule(c.rule), est))
        except (ValueError, RuntimeError) as exc:
            rows.append(SweepRow(c.n, c.p, Model(c.model), Rule(c.rule), None, str(exc)))
    return rows


__all__ = [
    "Model", "stream_key", "trial_rng", "sample_site_rows", "sample_tile_rows", "sample_board",
    "Estimate", "wilson_interval", "percolation_outcomes", "estimate_percolation",
    "crossing_outcomes", "estimate_crossing", "Probe", "CriticalSearch", "search_critical_p",
    "Cell", "SweepRow", "run_sweep",
]
