"""Configuration transforms X- and X+, and the triplet catalog.

``X-`` drops every isolated site (no other infected site in the surrounding
3x3 block).  ``X+`` also keeps the non-isolated sites, but treats an isolated
``x`` with a partner ``x + 2e`` specially: if anything else is infected near
the segment ``x, x+e, x+2e`` then ``x`` and the gap ``x+e`` are infected,
otherwise ``x`` is dropped.  The three-site patterns that fire that clause
are the triplets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from .grid import Rect, Site

UNIT = ((1, 0), (0, 1), (-1, 0), (0, -1))
_RING = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if (dx, dy) != (0, 0)]


def _l1_ball(r: int) -> list[Site]:
    return [(dx, dy) for dx in range(-r, r + 1) for dy in range(-r, r + 1) if abs(dx) + abs(dy) <= r]


@lru_cache(maxsize=None)
def _segment_region(e: Site) -> tuple[Site, ...]:
    """Offsets of ``B_2({0, e, 2e})`` minus ``{0, 2e}``."""
    ex, ey = e
    out = set()
    for k in range(3):
        for dx, dy in _l1_ball(2):
            out.add((dx + k * ex, dy + k * ey))
    out -= {(0, 0), (2 * ex, 2 * ey)}
    return tuple(sorted(out))


def _shift(arr: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """``out[..., y, x] = arr[..., y + dy, x + dx]`` with zero fill."""
    out = np.zeros_like(arr)
    h, w = arr.shape[-2:]
    if abs(dx) >= w or abs(dy) >= h:
        return out
    ys = slice(max(0, -dy), min(h, h - dy))
    xs = slice(max(0, -dx), min(w, w - dx))
    ys2 = slice(max(0, dy), min(h, h + dy))
    xs2 = slice(max(0, dx), min(w, w + dx))
    out[..., ys, xs] = arr[..., ys2, xs2]
    return out


# -- array forms (the last two axes are [y, x]; leading axes batch) -----------

def isolated_array(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=bool)
    nb = np.zeros_like(arr)
    for dx, dy in _RING:
        nb |= _shift(arr, dx, dy)
    return arr & ~nb


def minus_array(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=bool)
    return arr & ~isolated_array(arr)


def plus_array(arr: np.ndarray) -> np.ndarray:
    """X+ on boolean arrays; sites outside the array do not exist."""
    arr = np.asarray(arr, dtype=bool)
    iso = isolated_array(arr)
    out = arr & ~iso
    for ex, ey in UNIT:
        partner = _shift(arr, 2 * ex, 2 * ey)
        other = np.zeros_like(arr)
        for dx, dy in _segment_region((ex, ey)):
            other |= _shift(arr, dx, dy)
        fire = iso & partner & other
        out |= fire | _shift(fire, -ex, -ey)
    return out


# -- site-set forms -------------------------------------------------------------

def _to_array(x: Iterable[Site], domain: Rect) -> np.ndarray:
    arr = np.zeros((domain.height, domain.width), dtype=bool)
    for sx, sy in x:
        if (sx, sy) not in domain:
            raise ValueError(f"site {(sx, sy)} lies outside {domain}")
        arr[sy - domain.b1, sx - domain.a1] = True
    return arr


def _to_sites(arr: np.ndarray, domain: Rect) -> frozenset[Site]:
    ys, xs = np.nonzero(arr)
    return frozenset(zip((xs + domain.a1).tolist(), (ys + domain.b1).tolist()))


def isolated_sites(x: Iterable[Site], domain: Rect) -> frozenset[Site]:
    return _to_sites(isolated_array(_to_array(x, domain)), domain)


def minus_transform(x: Iterable[Site], domain: Rect) -> frozenset[Site]:
    return _to_sites(minus_array(_to_array(x, domain)), domain)


def plus_transform(x: Iterable[Site], domain: Rect) -> frozenset[Site]:
    return _to_sites(plus_array(_to_array(x, domain)), domain)


def plus_transform_reference(x: Iterable[Site], domain: Rect) -> frozenset[Site]:
    """Clause-by-clause X+ on site sets, kept as an independent check."""
    xs = frozenset(x)
    for s in xs:
        if s not in domain:
            raise ValueError(f"site {s} lies outside {domain}")

    def ball1(c: Site, r: int) -> set[Site]:
        return {(c[0] + dx, c[1] + dy) for dx, dy in _l1_ball(r)
                if (c[0] + dx, c[1] + dy) in domain}

    out: set[Site] = set()
    for s in xs:
        sx, sy = s
        ring = {(sx + dx, sy + dy) for dx, dy in _RING}
        if ring & xs:
            out.add(s)
            continue
        if ball1(s, 2) & xs == {s}:
            continue
        applicable = False
        for ex, ey in UNIT:
            far = (sx + 2 * ex, sy + 2 * ey)
            if far not in xs:
                continue
            applicable = True
            mid = (sx + ex, sy + ey)
            region = ball1(s, 2) | ball1(mid, 2) | ball1(far, 2)
            if (region & xs) - {s, far}:
                out.update((s, mid))
        if not applicable:
            raise AssertionError(f"isolated site {s} fell through every clause")
    return frozenset(out)


# -- triplets -----------------------------------------------------------------

SYMMETRIES = (
    lambda x, y: (x, y), lambda x, y: (-y, x), lambda x, y: (-x, -y), lambda x, y: (y, -x),
    lambda x, y: (-x, y), lambda x, y: (x, -y), lambda x, y: (y, x), lambda x, y: (-y, -x),
)

# Base shapes of the six triplet types, read off the figure of triplets.
BASE_TRIPLETS: tuple[tuple[Site, Site, Site], ...] = (
    ((0, 0), (0, 2), (0, 4)),
    ((0, 0), (0, 1), (0, 3)),
    ((0, 0), (1, 1), (1, 3)),
    ((0, 0), (1, 0), (1, 2)),
    ((0, 0), (0, 2), (2, 0)),
    ((0, 0), (2, 0), (1, 2)),
)
BASE_FILLERS: tuple[tuple[Site, ...], ...] = (
    ((0, 1), (0, 3)),
    ((0, 2),),
    ((1, 2),),
    ((1, 1),),
    ((0, 1), (1, 0)),
    ((1, 0),),
)
STATED_TYPE_COUNTS = (2, 2, 8, 8, 4, 4)


def normalise(cells: Iterable[Site]) -> tuple[Site, ...]:
    """Translate so the left-most, bottom-most cell is the origin; sort."""
    cells = sorted(cells)
    ox, oy = cells[0]
    return tuple((x - ox, y - oy) for x, y in cells)


@dataclass(frozen=True)
class TripletPattern:
    id: int
    type: int
    symmetry: int
    cells: tuple[Site, Site, Site]
    filler: tuple[Site, ...]


def pattern_fillers(cells: Iterable[Site]) -> tuple[Site, ...]:
    """Sites that X+ adds to a lone copy of ``cells``."""
    cells = list(cells)
    dom = Rect(-6, 10, -6, 10)
    return tuple(sorted(plus_transform_reference(cells, dom) - set(cells)))


@lru_cache(maxsize=None)
def triplet_catalog() -> tuple[TripletPattern, ...]:
    """Dihedral images of the six base triplets, deduplicated, ordered by type."""
    seen: set[tuple[Site, ...]] = set()
    out: list[TripletPattern] = []
    for t, base in enumerate(BASE_TRIPLETS, start=1):
        for k, sym in enumerate(SYMMETRIES):
            cells = normalise(sym(x, y) for x, y in base)
            if cells in seen:
                continue
            seen.add(cells)
            out.append(TripletPattern(len(out) + 1, t, k, cells, pattern_fillers(cells)))
    return tuple(out)


def type_counts(catalog: Iterable[TripletPattern] | None = None) -> tuple[int, ...]:
    catalog = triplet_catalog() if catalog is None else catalog
    counts = [0] * len(BASE_TRIPLETS)
    for pat in catalog:
        counts[pat.type - 1] += 1
    return tuple(counts)


def firing_triplets_bruteforce(radius: int = 5) -> frozenset[tuple[Site, ...]]:
    """Every 3-site shape on which the X+ fill clause fires, by enumeration.

    Shapes are taken up to translation, with one cell at the origin and the
    others within ``radius`` in l-infinity; that covers every shape since the
    clause only looks a bounded distance away.
    """
    offsets = [(dx, dy) for dx in range(-radius, radius + 1) for dy in range(-radius, radius + 1)
               if (dx, dy) != (0, 0)]
    dom = Rect(-3 * radius, 3 * radius, -3 * radius, 3 * radius)
    found = set()
    for a, b in itertools.combinations(offsets, 2):
        cells = normalise([(0, 0), a, b])
        if cells in found:
            continue
        if plus_transform_reference(cells, dom) - set(cells):
            found.add(cells)
    return frozenset(found)


def find_triplets(x: Iterable[Site], domain: Rect) -> list[tuple[int, Site]]:
    """Every placement ``(pattern id, anchor)`` of a catalog pattern inside ``x``."""
    xs = frozenset(x)
    for s in xs:
        if s not in domain:
            raise ValueError(f"site {s} lies outside {domain}")
    out = []
    for s in sorted(xs):
        for pat in triplet_catalog():
            if all((s[0] + dx, s[1] + dy) in xs for dx, dy in pat.cells[1:]):
                out.append((pat.id, s))
    return out


def find_triplets_bruteforce(x: Iterable[Site], domain: Rect) -> list[tuple[int, Site]]:
    """Same as :func:`find_triplets` by scanning all 3-subsets of ``x``."""
    by_cells = {p.cells: p.id for p in triplet_catalog()}
    out = []
    for trio in itertools.combinations(sorted(frozenset(x)), 3):
        cells = normalise(trio)
        if cells in by_cells:
            out.append((by_cells[cells], min(trio)))
    return sorted(out, key=lambda t: (t[1], t[0]))


__all__ = [
    "isolated_array", "minus_array", "plus_array", "isolated_sites", "minus_transform",
    "plus_transform", "plus_transform_reference", "TripletPattern", "triplet_catalog",
    "type_counts", "firing_triplets_bruteforce", "find_triplets", "find_triplets_bruteforce",
    "BASE_TRIPLETS", "BASE_FILLERS", "STATED_TYPE_COUNTS", "normalise", "pattern_fillers",
]
