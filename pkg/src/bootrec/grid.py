"""Bit-packed grids and integer rectangles.

Sites are 1-based ``(x, y)`` pairs: ``x`` is the column, ``y`` the row, and
row 1 is the bottom row.  A grid stores one row per array row; bit ``i`` of
word ``w`` holds column ``x = 64 * w + i + 1``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

WORD = 64

Site = tuple[int, int]


def n_words(width: int) -> int:
    return (width + WORD - 1) // WORD


def last_word_mask(width: int) -> np.uint64:
    rem = width % WORD
    if rem == 0:
        return np.uint64(0xFFFFFFFFFFFFFFFF)
    return np.uint64((1 << rem) - 1)


def pack_bool(arr: np.ndarray) -> np.ndarray:
    """Pack a ``(height, width)`` boolean array into ``(height, n_words)`` uint64 rows."""
    arr = np.asarray(arr, dtype=bool)
    h, w = arr.shape
    nw = n_words(w)
    padded = np.zeros((h, nw * WORD), dtype=bool)
    padded[:, :w] = arr
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False).reshape(h, nw)


def unpack_rows(rows: np.ndarray, width: int) -> np.ndarray:
    h = rows.shape[0]
    as_bytes = np.ascontiguousarray(rows, dtype="<u8").view(np.uint8).reshape(h, -1)
    return np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :width].astype(bool)


class Grid:
    """Immutable bit-packed set of infected sites on a ``width x height`` board.

    Most of the package works with square boards (``Grid.n``), but rectangular
    boards are needed to treat a sub-rectangle as its own universe.
    """

    __slots__ = ("width", "height", "rows")

    def __init__(self, width: int, height: int, rows: np.ndarray | None = None):
        if width < 1 or height < 1:
            raise ValueError(f"grid dimensions must be positive, got {width}x{height}")
        nw = n_words(width)
        if rows is None:
            rows = np.zeros((height, nw), dtype=np.uint64)
        else:
            rows = np.array(rows, dtype=np.uint64, copy=True)
            if rows.shape != (height, nw):
                raise ValueError(f"rows shape {rows.shape} != {(height, nw)}")
            rows[:, -1] &= last_word_mask(width)
        rows.setflags(write=False)
        self.width = width
        self.height = height
        self.rows = rows

    # -- constructors -----------------------------------------------------
    @classmethod
    def empty(cls, n: int, height: int | None = None) -> "Grid":
        return cls(n, n if height is None else height)

    @classmethod
    def full(cls, n: int, height: int | None = None) -> "Grid":
        h = n if height is None else height
        rows = np.full((h, n_words(n)), 0xFFFFFFFFFFFFFFFF, dtype=np.uint64)
        return cls(n, h, rows)

    @classmethod
    def from_sites(cls, n: int, sites: Iterable[Site], height: int | None = None) -> "Grid":
        h = n if height is None else height
        arr = np.zeros((h, n), dtype=bool)
        for x, y in sites:
            if not (1 <= x <= n and 1 <= y <= h):
                raise ValueError(f"site {(x, y)} outside [1,{n}]x[1,{h}]")
            arr[y - 1, x - 1] = True
        return cls.from_array(arr)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Grid":
        """Build from a boolean array indexed ``arr[y - 1, x - 1]``."""
        arr = np.asarray(arr, dtype=bool)
        h, w = arr.shape
        return cls(w, h, pack_bool(arr))

    @classmethod
    def checkerboard(cls, n: int, parity: int = 0) -> "Grid":
        ys, xs = np.indices((n, n))
        return cls.from_array((xs + ys) % 2 == parity)

    # -- views ------------------------------------------------------------
    @property
    def n(self) -> int:
        if self.width != self.height:
            raise AttributeError("n is only defined for square grids")
        return self.width

    @property
    def shape(self) -> tuple[int, int]:
        return self.width, self.height

    def to_array(self) -> np.ndarray:
        return unpack_rows(self.rows, self.width)

    def sites(self) -> frozenset[Site]:
        ys, xs = np.nonzero(self.to_array())
        return frozenset(zip((xs + 1).tolist(), (ys + 1).tolist()))

    def __iter__(self) -> Iterator[Site]:
        return iter(sorted(self.sites()))

    def __contains__(self, site: Site) -> bool:
        x, y = site
        if not (1 <= x <= self.width and 1 <= y <= self.height):
            return False
        w, b = divmod(x - 1, WORD)
        return bool((int(self.rows[y - 1, w]) >> b) & 1)

    def popcount(self) -> int:
        return int(np.unpackbits(self.rows.view(np.uint8)).sum())

    def __len__(self) -> int:
        return self.popcount()

    def is_full(self) -> bool:
        return self.popcount() == self.width * self.height

    def is_empty(self) -> bool:
        return not self.rows.any()

    def digest(self) -> int:
        """64-bit digest of the state (blake2b over the packed rows)."""
        h = hashlib.blake2b(self.rows.tobytes(), digest_size=8)
        return int.from_bytes(h.digest(), "little")

    def issubset(self, other: "Grid") -> bool:
        self._check_compatible(other)
        return not np.any(self.rows & ~other.rows)

    def __le__(self, other: "Grid") -> bool:
        return self.issubset(other)

    def __or__(self, other: "Grid") -> "Grid":
        self._check_compatible(other)
        return Grid(self.width, self.height, self.rows | other.rows)

    def __and__(self, other: "Grid") -> "Grid":
        self._check_compatible(other)
        return Grid(self.width, self.height, self.rows & other.rows)

    def complement(self) -> "Grid":
        return Grid(self.width, self.height, ~self.rows)

    def _check_compatible(self, other: "Grid") -> None:
        if self.shape != other.shape:
            raise ValueError(f"grid shapes differ: {self.shape} vs {other.shape}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.rows, other.rows))

    def __hash__(self) -> int:
        return hash((self.width, self.height, self.rows.tobytes()))

    def __repr__(self) -> str:
        return f"Grid({self.width}x{self.height}, infected={self.popcount()})"

    def to_ascii(self) -> str:
        return format_ascii(self)


@dataclass(frozen=True, order=True)
class Rect:
    """Closed integer rectangle ``[a1, a2] x [b1, b2]``."""

    a1: int
    a2: int
    b1: int
    b2: int

    def __post_init__(self):
        if self.a1 > self.a2 or self.b1 > self.b2:
            raise ValueError(f"degenerate rectangle {self}")

    @classmethod
    def square(cls, n: int) -> "Rect":
        return cls(1, n, 1, n)

    @classmethod
    def of_dims(cls, width: int, height: int, a1: int = 1, b1: int = 1) -> "Rect":
        return cls(a1, a1 + width - 1, b1, b1 + height - 1)

    @property
    def dim(self) -> tuple[int, int]:
        return self.a2 - self.a1 + 1, self.b2 - self.b1 + 1

    @property
    def width(self) -> int:
        return self.a2 - self.a1 + 1

    @property
    def height(self) -> int:
        return self.b2 - self.b1 + 1

    @property
    def short(self) -> int:
        return min(self.dim)

    @property
    def long(self) -> int:
        return max(self.dim)

    @property
    def phi(self) -> int:
        """Semi-perimeter."""
        return self.width + self.height

    @property
    def area(self) -> int:
        return self.width * self.height

    def __contains__(self, site: Site) -> bool:
        x, y = site
        return self.a1 <= x <= self.a2 and self.b1 <= y <= self.b2

    def contains_rect(self, other: "Rect") -> bool:
        return (self.a1 <= other.a1 and other.a2 <= self.a2
                and self.b1 <= other.b1 and other.b2 <= self.b2)

    def sites(self) -> Iterator[Site]:
        for y in range(self.b1, self.b2 + 1):
            for x in range(self.a1, self.a2 + 1):
                yield x, y

    def columns(self) -> range:
        return range(self.a1, self.a2 + 1)


class AsciiParseError(ValueError):
    """Malformed ASCII grid fixture; ``line`` is 1-based within the input."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_ascii(text: str) -> Grid:
    """Parse a fixture of ``.``/``#`` lines.  The first line is the top row.

    Blank lines and lines starting with ``;`` are skipped.
    """
    rows: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(";"):
            continue
        bad = set(line) - {".", "#"}
        if bad:
            raise AsciiParseError(f"unexpected characters {sorted(bad)!r}", lineno)
        if rows and len(line) != len(rows[0][1]):
            raise AsciiParseError(
                f"ragged line: width {len(line)}, expected {len(rows[0][1])}", lineno)
        rows.append((lineno, line))
    if not rows:
        raise AsciiParseError("no grid rows", 1)
    arr = np.array([[c == "#" for c in line] for _, line in reversed(rows)], dtype=bool)
    return Grid.from_array(arr)


def format_ascii(grid: Grid) -> str:
    arr = grid.to_array()
    return "\n".join("".join("#" if v else "." for v in row) for row in arr[::-1]) + "\n"
