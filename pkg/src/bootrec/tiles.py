"""Independent 2-tile configurations.

A 2-tile is a pair of sites given by an anchor (its left-most, bottom-most
site) and one of four offsets.  Every (anchor, kind) pair on the board is
placed independently with probability ``p**2``.  Partners that fall off the
board are dropped when the configuration is projected to sites.
"""

from __future__ import annotations

import enum
import functools
import json
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .grid import Grid, Rect, Site


class TileKind(enum.Enum):
    UR = (1, 1)
    DR = (1, -1)
    R = (1, 0)
    U = (0, 1)

    @property
    def offset(self) -> tuple[int, int]:
        return self.value

    @property
    def width(self) -> int:
        return 2 if self.value[0] == 1 else 1

    @property
    def code(self) -> str:
        return self.name.lower()

    @classmethod
    def from_code(cls, code: str) -> "TileKind":
        try:
            return cls[code.upper()]
        except KeyError:
            raise ValueError(f"unknown tile kind {code!r}") from None


KINDS: tuple[TileKind, ...] = (TileKind.UR, TileKind.DR, TileKind.R, TileKind.U)
KIND_INDEX = {k: i for i, k in enumerate(KINDS)}


@functools.total_ordering
@dataclass(frozen=True)
class Tile:
    ax: int
    ay: int
    kind: TileKind

    def __lt__(self, other: "Tile") -> bool:
        return (self.ax, self.ay, KIND_INDEX[self.kind]) < (other.ax, other.ay, KIND_INDEX[other.kind])

    @property
    def anchor(self) -> Site:
        return self.ax, self.ay

    @property
    def partner(self) -> Site:
        dx, dy = self.kind.offset
        return self.ax + dx, self.ay + dy

    def sites(self, width: int | None = None, height: int | None = None) -> tuple[Site, ...]:
        """Anchor and partner, the partner dropped if it leaves the board."""
        px, py = self.partner
        if width is not None and not (1 <= px <= width and 1 <= py <= height):
            return (self.anchor,)
        return self.anchor, (px, py)


class ColumnClass(enum.Enum):
    TWO_OCCUPIED = "2-occupied"
    ONE_OCCUPIED_ONLY = "1-occupied"
    UNOCCUPIED = "unoccupied"
    EMPTY = "empty"

    @property
    def occupied(self) -> bool:
        return self in (ColumnClass.TWO_OCCUPIED, ColumnClass.ONE_OCCUPIED_ONLY)


@dataclass(frozen=True)
class TileConfig:
    """A set of placed tiles on a ``width x height`` board (anchors on the board)."""

    width: int
    height: int
    placed: frozenset[Tile] = frozenset()

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("board dimensions must be positive")
        placed = frozenset(self.placed)
        for t in placed:
            if not (1 <= t.ax <= self.width and 1 <= t.ay <= self.height):
                raise ValueError(f"anchor {t.anchor} outside the board")
        object.__setattr__(self, "placed", placed)

    @classmethod
    def square(cls, n: int, placed: Iterable[Tile] = ()) -> "TileConfig":
        return cls(n, n, frozenset(placed))

    @property
    def n(self) -> int:
        if self.width != self.height:
            raise AttributeError("n is only defined for square boards")
        return self.width

    def __len__(self) -> int:
        return len(self.placed)

    def __iter__(self):
        return iter(sorted(self.placed))

    # -- array form ---------------------------------------------------------
    def to_flags(self) -> np.ndarray:
        """Boolean ``[y, x, kind]`` array of placed tiles."""
        flags = np.zeros((self.height, self.width, 4), dtype=bool)
        for t in self.placed:
            flags[t.ay - 1, t.ax - 1, KIND_INDEX[t.kind]] = True
        return flags

    @classmethod
    def from_flags(cls, flags: np.ndarray) -> "TileConfig":
        h, w, _ = flags.shape
        ys, xs, ks = np.nonzero(flags)
        return cls(w, h, frozenset(Tile(int(x) + 1, int(y) + 1, KINDS[k])
                                   for y, x, k in zip(ys, xs, ks)))

    # -- JSON ---------------------------------------------------------------
    def to_json_obj(self) -> list[dict]:
        return [{"ax": t.ax, "ay": t.ay, "kind": t.kind.code} for t in sorted(self.placed)]

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json(cls, data, width: int, height: int | None = None) -> "TileConfig":
        if isinstance(data, str):
            data = json.loads(data)
        tiles = []
        for item in data:
            try:
                tiles.append(Tile(int(item["ax"]), int(item["ay"]), TileKind.from_code(item["kind"])))
            except (KeyError, TypeError) as exc:
                raise ValueError(f"malformed tile entry {item!r}") from exc
        return cls(width, width if height is None else height, frozenset(tiles))


def sample_flags(width: int, height: int, p: float, uniforms: np.ndarray) -> np.ndarray:
    """Tile flags from one uniform per (anchor, kind), anchors row-major."""
    if not 0 <= p <= 1:
        raise ValueError(f"p={p} outside [0, 1]")
    return uniforms.reshape(height, width, 4) < p * p


def sample_tile_config(n: int, p: float, rng: np.random.Generator,
                       height: int | None = None) -> TileConfig:
    """Each of the ``4 * n * height`` (anchor, kind) pairs with probability ``p**2``.

    Draw order: anchors by row (bottom row first, left to right), and for each
    anchor the kinds ``ur, dr, r, u``.
    """
    h = n if height is None else height
    if not 0 <= p <= 1:
        raise ValueError(f"p={p} outside [0, 1]")
    return TileConfig.from_flags(sample_flags(n, h, p, rng.random(4 * n * h)))


def project_flags(flags: np.ndarray) -> np.ndarray:
    """Boolean ``[..., y, x]`` site array covered by the tiles in ``[..., y, x, kind]`` flags."""
    ur, dr, r, u = (flags[..., i] for i in range(4))
    sites = flags.any(axis=-1)
    sites[..., 1:, 1:] |= ur[..., :-1, :-1]
    sites[..., :-1, 1:] |= dr[..., 1:, :-1]
    sites[..., :, 1:] |= r[..., :, :-1]
    sites[..., 1:, :] |= u[..., :-1, :]
    return sites


def project_sites(cfg: TileConfig) -> frozenset[Site]:
    out: set[Site] = set()
    for t in cfg.placed:
        out.update(t.sites(cfg.width, cfg.height))
    return frozenset(out)


def project_grid(cfg: TileConfig) -> Grid:
    return Grid.from_array(project_flags(cfg.to_flags()))


def _check_rect(cfg: TileConfig, r: Rect) -> None:
    if not Rect(1, cfg.width, 1, cfg.height).contains_rect(r):
        raise ValueError(f"{r} is not inside the {cfg.width}x{cfg.height} board")


def classify_columns(cfg: TileConfig, r: Rect) -> list[ColumnClass]:
    """Class of each column of ``r``, left to right.

    Occupancy counts anchors inside ``r``; emptiness looks at every projected
    site inside ``r``, whichever tile it belongs to.
    """
    _check_rect(cfg, r)
    two, one = set(), set()
    for t in cfg.placed:
        if t.anchor in r:
            (two if t.kind.width == 2 else one).add(t.ax)
    filled = {x for x, y in project_sites(cfg) if (x, y) in r}
    out = []
    for x in r.columns():
        if x in two:
            out.append(ColumnClass.TWO_OCCUPIED)
        elif x in one:
            out.append(ColumnClass.ONE_OCCUPIED_ONLY)
        elif x in filled:
            out.append(ColumnClass.UNOCCUPIED)
        else:
            out.append(ColumnClass.EMPTY)
    return out


def empty_columns(sites: np.ndarray) -> np.ndarray:
    return ~sites.any(axis=-2)


def double_gaps(sites: np.ndarray) -> np.ndarray:
    """Per board of a ``[..., y, x]`` stack: two adjacent empty columns?"""
    e = empty_columns(sites)
    return np.any(e[..., :-1] & e[..., 1:], axis=-1)


def double_gap_in(sites: np.ndarray) -> bool:
    """Two adjacent columns of a ``[y, x]`` site array without any site."""
    return bool(double_gaps(sites))


def has_double_gap(cfg: TileConfig, r: Rect) -> bool:
    classes = classify_columns(cfg, r)
    return any(a is ColumnClass.EMPTY and b is ColumnClass.EMPTY
               for a, b in zip(classes, classes[1:]))


def find_triples(cfg: TileConfig) -> list[tuple[Tile, Tile]]:
    """Pairs of placed tiles with sites at l-infinity distance at most 1."""
    owners: dict[Site, list[Tile]] = defaultdict(list)
    for t in cfg.placed:
        for s in t.sites(cfg.width, cfg.height):
            owners[s].append(t)
    pairs: set[tuple[Tile, Tile]] = set()
    for t in cfg.placed:
        for x, y in t.sites(cfg.width, cfg.height):
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    for other in owners.get((x + dx, y + dy), ()):
                        if other != t:
                            pairs.add((t, other) if t < other else (other, t))
    return sorted(pairs)


__all__ = [
    "TileKind", "KINDS", "Tile", "ColumnClass", "TileConfig", "sample_flags",
    "sample_tile_config", "project_flags", "project_sites", "project_grid",
    "classify_columns", "has_double_gap", "double_gap_in", "double_gaps", "empty_columns", "find_triples",
]
