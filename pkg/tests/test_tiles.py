import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bootrec.dynamics import traversable
from bootrec.grid import Rect
from bootrec.tiles import (KINDS, ColumnClass, Tile, TileConfig, TileKind, classify_columns,
                           double_gap_in, double_gaps, find_triples, has_double_gap,
                           project_flags, project_grid, project_sites, sample_flags,
                           sample_tile_config)

UR, DR, R, U = TileKind.UR, TileKind.DR, TileKind.R, TileKind.U


def cfg(n, *tiles, height=None):
    return TileConfig(n, n if height is None else height, frozenset(Tile(*t) for t in tiles))


@st.composite
def configs(draw, max_w=6, max_h=4):
    w = draw(st.integers(1, max_w))
    h = draw(st.integers(1, max_h))
    flags = draw(st.lists(st.booleans(), min_size=4 * w * h, max_size=4 * w * h))
    return TileConfig.from_flags(np.array(flags).reshape(h, w, 4))


def test_kinds():
    assert len(KINDS) == 4
    assert [k.offset for k in KINDS] == [(1, 1), (1, -1), (1, 0), (0, 1)]
    for k in KINDS:
        assert (k.width == 2) == (k.offset[0] == 1)
        assert TileKind.from_code(k.code) is k
    with pytest.raises(ValueError):
        TileKind.from_code("ul")


def test_anchor_validation():
    with pytest.raises(ValueError):
        cfg(3, (4, 1, R))
    with pytest.raises(ValueError):
        cfg(3, (1, 0, U))


def test_placed_is_a_set():
    c = cfg(4, (1, 1, R), (1, 1, R), (1, 1, U))
    assert len(c) == 2


def test_sampling_extremes():
    rng = np.random.default_rng(0)
    assert len(sample_tile_config(5, 0.0, rng)) == 0
    assert len(sample_tile_config(5, 1.0, rng)) == 4 * 25
    with pytest.raises(ValueError):
        sample_tile_config(5, 1.2, rng)


def test_sampling_is_reproducible_and_ordered():
    a = sample_tile_config(8, 0.4, np.random.default_rng(42))
    b = sample_tile_config(8, 0.4, np.random.default_rng(42))
    assert a == b
    u = np.random.default_rng(42).random(4 * 64)
    flags = u.reshape(8, 8, 4) < 0.16
    assert a.to_flags().tolist() == flags.tolist()
    # first draw belongs to anchor (1,1), kind ur
    assert (Tile(1, 1, UR) in a.placed) == (u[0] < 0.16)


def test_sampling_mean_count():
    n, p, samples = 64, 0.1, 2000
    rng = np.random.default_rng(7)
    counts = np.array([int(sample_flags(n, n, p, rng.random(4 * n * n)).sum())
                       for _ in range(samples)])
    trials, q = 4 * n * n, p * p
    sigma = np.sqrt(trials * q * (1 - q) / samples)
    assert abs(counts.mean() - trials * q) <= 3 * sigma


def test_projection_examples():
    assert project_sites(cfg(5, (3, 3, R))) == {(3, 3), (4, 3)}
    assert project_sites(cfg(5, (5, 5, UR))) == {(5, 5)}
    assert project_sites(cfg(5, (5, 1, DR))) == {(5, 1)}
    assert project_sites(cfg(5, (1, 5, U))) == {(1, 5)}
    shared = cfg(5, (2, 2, R), (3, 2, U))
    assert project_sites(shared) == {(2, 2), (3, 2), (3, 3)}
    assert project_grid(shared).popcount() == 3


@settings(max_examples=150)
@given(configs())
def test_array_projection_matches_site_projection(c):
    arr = project_flags(c.to_flags())
    ys, xs = np.nonzero(arr)
    assert set(zip((xs + 1).tolist(), (ys + 1).tolist())) == project_sites(c)
    assert project_grid(c).sites() == project_sites(c)


@settings(max_examples=100)
@given(configs())
def test_flags_and_json_roundtrip(c):
    assert TileConfig.from_flags(c.to_flags()) == c
    assert TileConfig.from_json(c.to_json(), c.width, c.height) == c
    assert json.loads(c.to_json()) == c.to_json_obj()


def test_json_format():
    c = cfg(4, (2, 1, DR), (1, 1, U))
    assert c.to_json_obj() == [{"ax": 1, "ay": 1, "kind": "u"}, {"ax": 2, "ay": 1, "kind": "dr"}]
    with pytest.raises(ValueError):
        TileConfig.from_json('[{"ax": 1, "kind": "u"}]', 4)
    with pytest.raises(ValueError):
        TileConfig.from_json('[{"ax": 1, "ay": 1, "kind": "x"}]', 4)


def test_classify_examples():
    r = Rect(1, 5, 1, 5)
    assert classify_columns(cfg(5), r) == [ColumnClass.EMPTY] * 5
    one = classify_columns(cfg(5, (3, 2, U)), r)
    assert one == [ColumnClass.EMPTY, ColumnClass.EMPTY, ColumnClass.ONE_OCCUPIED_ONLY,
                   ColumnClass.EMPTY, ColumnClass.EMPTY]
    two = classify_columns(cfg(5, (2, 2, UR)), r)
    assert two[1] is ColumnClass.TWO_OCCUPIED
    assert two[2] is ColumnClass.UNOCCUPIED and not two[2].occupied
    both = classify_columns(cfg(5, (2, 2, UR), (2, 4, U)), r)
    assert both[1] is ColumnClass.TWO_OCCUPIED


def test_empty_consults_tiles_anchored_outside():
    c = cfg(6, (2, 3, R))
    classes = classify_columns(c, Rect(3, 6, 1, 6))
    assert classes[0] is ColumnClass.UNOCCUPIED
    assert classes[1] is ColumnClass.EMPTY


def test_classify_rejects_rect_off_board():
    with pytest.raises(ValueError):
        classify_columns(cfg(4), Rect(1, 5, 1, 4))


def test_double_gap_examples():
    r = Rect(1, 5, 1, 2)
    assert has_double_gap(cfg(5, height=2), r)
    full = TileConfig.from_flags(np.ones((2, 5, 4), dtype=bool))
    assert not has_double_gap(full, r)
    # columns 1, 3, 5 occupied; 2 and 4 are single empty columns
    alt = cfg(5, (1, 1, U), (3, 1, U), (5, 1, U), height=2)
    assert classify_columns(alt, r)[1] is ColumnClass.EMPTY
    assert not has_double_gap(alt, r)
    assert has_double_gap(cfg(5, (1, 1, U), (4, 1, U), height=2), r)


@settings(max_examples=150)
@given(configs())
def test_array_double_gap_matches_classes(c):
    arr = project_flags(c.to_flags())
    r = Rect(1, c.width, 1, c.height)
    assert double_gap_in(arr) == has_double_gap(c, r)
    assert double_gaps(arr[None])[0] == double_gap_in(arr)


def test_column_class_frequencies():
    """Per-column class frequencies against 1-u, 1-u^3 and u^4."""
    p, h, w, samples = 0.1, 20, 50, 400
    u = (1 - p * p) ** h
    rng = np.random.default_rng(3)
    flags = np.stack([sample_flags(w, h, p, rng.random(4 * w * h)) for _ in range(samples)])
    per_kind = flags.any(axis=1)                       # [sample, x, kind]
    one = per_kind[..., 3]
    two = per_kind[..., :3].any(axis=-1)
    none = ~per_kind.any(axis=-1)
    total = samples * w
    for observed, expected in ((one, 1 - u), (two, 1 - u ** 3), (none, u ** 4)):
        sigma = np.sqrt(expected * (1 - expected) / total)
        assert abs(observed.mean() - expected) <= 3 * sigma


def test_triples_examples():
    assert find_triples(cfg(9, (1, 1, R), (5, 5, R))) == []
    pair = find_triples(cfg(9, (2, 2, R), (3, 2, R)))
    assert pair == [(Tile(2, 2, R), Tile(3, 2, R))]
    assert len(find_triples(cfg(9, (2, 2, U), (3, 3, U)))) == 1
    assert find_triples(cfg(9, (2, 2, U), (4, 2, U))) == []


@settings(max_examples=80)
@given(configs(max_w=5, max_h=5))
def test_triples_match_pairwise_definition(c):
    tiles = sorted(c.placed)
    expected = []
    for i, a in enumerate(tiles):
        for b in tiles[i + 1:]:
            sa, sb = a.sites(c.width, c.height), b.sites(c.width, c.height)
            if any(max(abs(x - y), abs(z - v)) <= 1 for x, z in sa for y, v in sb):
                expected.append((a, b))
    assert find_triples(c) == expected


def _unclipped(c: TileConfig) -> TileConfig:
    return TileConfig(c.width, c.height, frozenset(
        t for t in c.placed if len(t.sites(c.width, c.height)) == 2))


@settings(max_examples=300, deadline=None)
@given(configs(max_w=5, max_h=3))
def test_traversal_iff_no_double_gap_without_clipping(c):
    if c.height < 2:
        return
    c = _unclipped(c)
    r = Rect(1, c.width, 1, c.height)
    assert traversable(r, project_sites(c)) == (not has_double_gap(c, r))


def test_clipped_partner_can_break_the_equivalence():
    """A lone site left by a clipped partner recovers and cannot bridge two columns."""
    c = cfg(4, (1, 1, UR), (4, 1, UR), height=2)
    r = Rect(1, 4, 1, 2)
    assert project_sites(c) == {(1, 1), (2, 2), (4, 1)}
    assert not has_double_gap(c, r)
    assert not traversable(r, project_sites(c))


def test_height_one_phantom_column_recovers():
    """With one row the phantom column is a lone site and dies at the first step."""
    c = cfg(3, (2, 1, R), height=1)
    r = Rect(1, 3, 1, 1)
    assert not has_double_gap(c, r)
    assert not traversable(r, project_sites(c))
    assert traversable(Rect(1, 1, 1, 1), set())
