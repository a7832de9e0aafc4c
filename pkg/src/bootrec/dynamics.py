"""Recovery and bootstrap dynamics on grids and rectangle predicates."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import kernel
from .grid import Grid, Rect, Site, last_word_mask, n_words, pack_bool


class Rule(str, enum.Enum):
    RECOVERY = "recovery"
    BOOTSTRAP = "bootstrap"


class Direction(str, enum.Enum):
    LEFT_RIGHT = "left-right"
    RIGHT_LEFT = "right-left"
    BOTTOM_TOP = "bottom-top"
    TOP_BOTTOM = "top-bottom"


class Kind(str, enum.Enum):
    PERCOLATED = "percolated"
    CYCLE = "cycle"
    EXTINCT = "extinct"
    BUDGET_EXCEEDED = "budget-exceeded"


_KERNEL_KIND = {
    kernel.PERCOLATED: Kind.PERCOLATED,
    kernel.CYCLE: Kind.CYCLE,
    kernel.EXTINCT: Kind.EXTINCT,
    kernel.BUDGET: Kind.BUDGET_EXCEEDED,
}


@dataclass(frozen=True)
class Outcome:
    kind: Kind
    t_stop: int
    period: int = 0
    populations: tuple[int, ...] | None = field(default=None, compare=False)

    def __str__(self) -> str:
        if self.kind is Kind.CYCLE:
            return f"cycle period={self.period} t={self.t_stop}"
        return f"{self.kind.value} t={self.t_stop}"


def _shifted_neighbours(rows: np.ndarray, width: int):
    """Left, right, up and down neighbour bitsets of a packed board."""
    one, s63 = np.uint64(1), np.uint64(63)
    left = rows << one
    left[:, 1:] |= rows[:, :-1] >> s63
    right = rows >> one
    right[:, :-1] |= rows[:, 1:] << s63
    up = np.zeros_like(rows)
    up[:-1] = rows[1:]
    down = np.zeros_like(rows)
    down[1:] = rows[:-1]
    return left, right, up, down


def _at_least(rows: np.ndarray, width: int):
    left, right, up, down = _shifted_neighbours(rows, width)
    lr, ud = left | right, up | down
    at_least_two = (left & right) | (up & down) | (lr & ud)
    return lr | ud, at_least_two


def step_recovery(g: Grid) -> Grid:
    """Healthy sites with >= 2 infected neighbours are infected; infected
    sites with no infected neighbour recover."""
    any_nb, two_nb = _at_least(g.rows, g.width)
    return Grid(g.width, g.height, two_nb | (g.rows & any_nb))


def step_bootstrap(g: Grid) -> Grid:
    """2-neighbour bootstrap: infected sites stay infected."""
    _, two_nb = _at_least(g.rows, g.width)
    return Grid(g.width, g.height, g.rows | two_nb)


def step(g: Grid, rule: Rule = Rule.RECOVERY) -> Grid:
    return step_recovery(g) if Rule(rule) is Rule.RECOVERY else step_bootstrap(g)


def paired_sites(g: Grid) -> Grid:
    """Sites with an edge-adjacent infected partner.

    Under the recovery rule such sites never recover, so this set only grows.
    """
    any_nb, _ = _at_least(g.rows, g.width)
    return Grid(g.width, g.height, g.rows & any_nb)


def run_dynamics(x0: Grid, rule: Rule = Rule.RECOVERY, max_steps: int | None = None,
                 record_populations: bool = False) -> Outcome:
    """Iterate ``rule`` from ``x0`` until the board is full, empty, or repeats.

    Repeats are found with a 64-bit digest table.  The table is cleared
    whenever the set of paired sites grows, since no earlier state can recur
    after that; digest hits are confirmed by exact comparison.
    """
    rule = Rule(rule)
    nsites = x0.width * x0.height
    state = x0
    pops = [state.popcount()]
    seen: dict[int, tuple[int, Grid]] = {}
    paired = paired_sites(state).popcount() if rule is Rule.RECOVERY else pops[0]
    t = 0
    while True:
        pop = pops[-1]
        done = _pops(pops, record_populations)
        if pop == nsites:
            return Outcome(Kind.PERCOLATED, t, populations=done)
        if pop == 0:
            return Outcome(Kind.EXTINCT, t, populations=done)
        key = state.digest()
        hit = seen.get(key)
        if hit is not None and hit[1] == state:
            return Outcome(Kind.CYCLE, t, t - hit[0], populations=done)
        seen[key] = (t, state)
        if max_steps is not None and t >= max_steps:
            return Outcome(Kind.BUDGET_EXCEEDED, t, populations=done)
        state = step(state, rule)
        t += 1
        pops.append(state.popcount())
        now_paired = paired_sites(state).popcount() if rule is Rule.RECOVERY else pops[-1]
        if now_paired > paired:
            seen.clear()
            paired = now_paired


def _pops(pops: list[int], keep: bool):
    return tuple(pops) if keep else None


def trajectory(x0: Grid, steps: int, rule: Rule = Rule.RECOVERY) -> list[Grid]:
    out = [x0]
    for _ in range(steps):
        out.append(step(out[-1], rule))
    return out


# -- fast evaluation ---------------------------------------------------------

def _full_target(width: int, height: int) -> np.ndarray:
    return Grid.full(width, height).rows


def evolve_rows(rows: np.ndarray, width: int, rule: Rule = Rule.RECOVERY,
                target: np.ndarray | None = None, max_steps: int | None = None) -> Outcome:
    """Run the compiled kernel on packed rows (see :mod:`bootrec.kernel`)."""
    if target is None:
        target = _full_target(width, rows.shape[0])
    kind, t, period = kernel.evolve(
        np.ascontiguousarray(rows, dtype=np.uint64), last_word_mask(width),
        Rule(rule) is Rule.RECOVERY, np.ascontiguousarray(target, dtype=np.uint64),
        -1 if max_steps is None else int(max_steps))
    return Outcome(_KERNEL_KIND[int(kind)], int(t), int(period))


def evolve(x0: Grid, rule: Rule = Rule.RECOVERY, max_steps: int | None = None) -> Outcome:
    """Same classification as :func:`run_dynamics`, via the compiled kernel."""
    return evolve_rows(x0.rows, x0.width, rule, max_steps=max_steps)


def percolates(x0: Grid, rule: Rule = Rule.RECOVERY) -> bool:
    return evolve(x0, rule).kind is Kind.PERCOLATED


def percolates_batch(arrs: np.ndarray, rule: Rule = Rule.RECOVERY) -> np.ndarray:
    """Percolation of each ``[y, x]`` boolean board in a stack."""
    arrs = np.asarray(arrs, dtype=bool)
    n, h, w = arrs.shape
    rows = pack_bool(arrs.reshape(n * h, w)).reshape(n, h, n_words(w))
    kinds = kernel.evolve_batch(rows, last_word_mask(w), Rule(rule) is Rule.RECOVERY,
                                _full_target(w, h), -1)
    return kinds == kernel.PERCOLATED


# -- rectangle predicates ----------------------------------------------------

def _local_array(r: Rect, x0: Iterable[Site]) -> np.ndarray:
    arr = np.zeros((r.height, r.width), dtype=bool)
    for x, y in x0:
        if (x, y) not in r:
            raise ValueError(f"site {(x, y)} lies outside {r}")
        arr[y - r.b1, x - r.a1] = True
    return arr


def _as_sites(x0) -> Iterable[Site]:
    if isinstance(x0, Grid):
        return x0.sites()
    return x0


def internally_spanned(r: Rect, x0, rule: Rule = Rule.RECOVERY) -> bool:
    """Does ``x0`` (all inside ``r``) fill ``r`` with ``r`` as its own universe?"""
    arr = _local_array(r, _as_sites(x0))
    return percolates(Grid.from_array(arr), rule)


def _orient(arr: np.ndarray, direction: Direction) -> np.ndarray:
    """Rotate a local ``[y, x]`` array so that the crossing runs left to right."""
    direction = Direction(direction)
    if direction is Direction.LEFT_RIGHT:
        return arr
    if direction is Direction.RIGHT_LEFT:
        return arr[:, ::-1]
    if direction is Direction.BOTTOM_TOP:
        return arr.T
    return arr[::-1, :].T


def traversable(r: Rect, x0, direction: Direction = Direction.LEFT_RIGHT,
                rule: Rule = Rule.RECOVERY) -> bool:
    """Crossing test with a fully infected phantom column before the near side.

    The universe is the phantom column plus ``r``; every initially infected
    site of ``r`` (the far column included) takes part.  The crossing
    succeeds when the phantom column and all columns of ``r`` but the far one
    are infected at the same time.
    """
    arr = _orient(_local_array(r, _as_sites(x0)), direction)
    return traversable_array(arr, rule)


def traversable_array(arr: np.ndarray, rule: Rule = Rule.RECOVERY) -> bool:
    """Left-to-right crossing of a local ``[y, x]`` boolean array."""
    h, m = arr.shape
    board = np.zeros((h, m + 1), dtype=bool)
    board[:, 0] = True
    board[:, 1:] = arr
    tgt = np.zeros_like(board)
    tgt[:, :m] = True
    out = evolve_rows(Grid.from_array(board).rows, m + 1, rule,
                      target=Grid.from_array(tgt).rows)
    return out.kind is Kind.PERCOLATED


def traversable_batch(arrs: np.ndarray, rule: Rule = Rule.RECOVERY) -> np.ndarray:
    """:func:`traversable_array` over a stack of ``[y, x]`` boards."""
    arrs = np.asarray(arrs, dtype=bool)
    n, h, m = arrs.shape
    boards = np.zeros((n, h, m + 1), dtype=bool)
    boards[:, :, 0] = True
    boards[:, :, 1:] = arrs
    rows = pack_bool(boards.reshape(n * h, m + 1)).reshape(n, h, n_words(m + 1))
    tgt = np.zeros((h, m + 1), dtype=bool)
    tgt[:, :m] = True
    kinds = kernel.evolve_batch(rows, last_word_mask(m + 1), Rule(rule) is Rule.RECOVERY,
                                Grid.from_array(tgt).rows, -1)
    return kinds == kernel.PERCOLATED


def spans_from(inner: Rect, outer: Rect, x, rule: Rule = Rule.RECOVERY) -> bool:
    """Is ``outer`` internally spanned by ``inner`` (fully infected) plus ``x``?"""
    if not outer.contains_rect(inner):
        raise ValueError(f"{inner} is not contained in {outer}")
    sites = set(_as_sites(x))
    outside = [s for s in sites if s not in outer]
    if outside:
        raise ValueError(f"sites {sorted(outside)[:3]} lie outside {outer}")
    sites.update(inner.sites())
    return internally_spanned(outer, sites, rule)


def sub_rects(r: Rect, min_long: int = 1, max_long: int | None = None):
    """All sub-rectangles of ``r`` with long side in range, by area then corner."""
    max_long = r.long if max_long is None else max_long
    dims = [(w, h) for w in range(1, r.width + 1) for h in range(1, r.height + 1)
            if min_long <= max(w, h) <= max_long]
    dims.sort(key=lambda d: (d[0] * d[1], d))
    for w, h in dims:
        for a1, b1 in itertools.product(range(r.a1, r.a2 - w + 2), range(r.b1, r.b2 - h + 2)):
            yield Rect(a1, a1 + w - 1, b1, b1 + h - 1)


def find_spanned_subrect(r: Rect, x0, k: int, rule: Rule = Rule.RECOVERY) -> Rect | None:
    """First internally spanned ``T`` inside ``r`` with ``long(T)`` in ``[k, 2k]``.

    Search order: increasing area, then dimensions, then lower-left corner.
    """
    if k < 1 or r.long < 2 * k:
        raise ValueError(f"k={k} out of range for long side {r.long}")
    sites = set(_as_sites(x0))
    full = _local_array(r, sites)
    for t in sub_rects(r, k, 2 * k):
        local = full[t.b1 - r.b1:t.b2 - r.b1 + 1, t.a1 - r.a1:t.a2 - r.a1 + 1]
        if percolates(Grid.from_array(local), rule):
            return t
    return None


def restrict(x0: Iterable[Site], r: Rect) -> frozenset[Site]:
    return frozenset(s for s in x0 if s in r)


__all__ = [
    "Rule", "Direction", "Kind", "Outcome", "step_recovery", "step_bootstrap", "step",
    "paired_sites", "run_dynamics", "trajectory", "evolve", "evolve_rows", "percolates", "percolates_batch",
    "internally_spanned", "traversable", "traversable_array", "traversable_batch", "spans_from",
    "find_spanned_subrect", "sub_rects", "restrict", "n_words",
]
