import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bootrec.grid import (AsciiParseError, Grid, Rect, format_ascii, last_word_mask, n_words,
                          pack_bool, parse_ascii, unpack_rows)


@st.composite
def boards(draw, max_w=130, max_h=6):
    w = draw(st.integers(1, max_w))
    h = draw(st.integers(1, max_h))
    bits = draw(st.lists(st.booleans(), min_size=w * h, max_size=w * h))
    return np.array(bits, dtype=bool).reshape(h, w)


@given(boards())
def test_pack_roundtrip(arr):
    rows = pack_bool(arr)
    assert rows.shape == (arr.shape[0], n_words(arr.shape[1]))
    assert np.array_equal(unpack_rows(rows, arr.shape[1]), arr)


@given(boards())
def test_popcount_matches_site_count(arr):
    g = Grid.from_array(arr)
    assert g.popcount() == int(arr.sum()) == len(g.sites())


def test_bits_outside_board_are_cleared():
    rows = np.full((3, 1), 0xFFFFFFFFFFFFFFFF, dtype=np.uint64)
    g = Grid(5, 3, rows)
    assert g.popcount() == 15
    assert int(g.rows[0, 0]) == int(last_word_mask(5))
    assert g == Grid.full(5, 3)


def test_sites_are_one_based_with_row_one_at_bottom():
    g = Grid.from_sites(3, [(1, 1), (3, 2)])
    arr = g.to_array()
    assert arr[0, 0] and arr[1, 2] and arr.sum() == 2
    assert (1, 1) in g and (3, 2) in g and (2, 2) not in g
    assert format_ascii(g) == "...\n..#\n#..\n"


def test_from_sites_rejects_outside():
    with pytest.raises(ValueError):
        Grid.from_sites(3, [(0, 1)])
    with pytest.raises(ValueError):
        Grid.from_sites(3, [(1, 4)])


def test_grid_is_immutable():
    g = Grid.full(4)
    with pytest.raises(ValueError):
        g.rows[0, 0] = 0


def test_set_operations():
    a = Grid.from_sites(4, [(1, 1), (2, 2)])
    b = Grid.from_sites(4, [(2, 2), (3, 3)])
    assert (a | b).sites() == {(1, 1), (2, 2), (3, 3)}
    assert (a & b).sites() == {(2, 2)}
    assert (a & b) <= a and not a <= b
    assert a.complement().popcount() == 14
    assert Grid.checkerboard(4).complement() == Grid.checkerboard(4, 1)


def test_digest_distinguishes_and_is_stable():
    a = Grid.from_sites(70, [(65, 3)])
    b = Grid.from_sites(70, [(64, 3)])
    assert a.digest() == Grid.from_sites(70, [(65, 3)]).digest()
    assert a.digest() != b.digest()


def test_rect_derived_quantities():
    r = Rect(2, 6, 3, 4)
    assert r.dim == (5, 2)
    assert (r.short, r.long, r.phi, r.area) == (2, 5, 7, 10)
    assert (2, 3) in r and (7, 3) not in r
    assert Rect(1, 10, 1, 10).contains_rect(r)
    assert not r.contains_rect(Rect(1, 2, 3, 3))
    assert len(list(r.sites())) == 10
    assert list(r.columns()) == [2, 3, 4, 5, 6]


def test_rect_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        Rect(3, 2, 1, 1)


def test_parse_ascii_orientation_and_comments():
    g = parse_ascii("; a domino\n#.\n#.\n")
    assert g.sites() == {(1, 1), (1, 2)}
    g = parse_ascii("..#\n...\n")
    assert g.width == 3 and g.height == 2 and g.sites() == {(3, 2)}


@pytest.mark.parametrize("text, line", [("#.\n#..\n", 2), ("#.\nx.\n", 2), ("", 1), ("; only\n", 1)])
def test_parse_ascii_errors_carry_line_numbers(text, line):
    with pytest.raises(AsciiParseError) as info:
        parse_ascii(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


@settings(max_examples=50)
@given(boards(max_w=20, max_h=8))
def test_ascii_roundtrip(arr):
    g = Grid.from_array(arr)
    assert parse_ascii(format_ascii(g)) == g
