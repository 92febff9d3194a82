from math import comb

import numpy as np
import pytest

from zodiac import data
from zodiac import transposition as tp
from zodiac.cipher import FormatError, SymbolGrid, decrypt
from zodiac.stats import repeating_bigram_count


def p1(g):
    return repeating_bigram_count(g, 1).total_repeats


def spec(line):
    return tp.parse_spec(line)


def test_decimation_first_cells():
    idx = tp.decimation_order(20, 17, 1, 2).indices
    assert [divmod(int(i), 17) for i in idx[:3]] == [(0, 0), (1, 2), (2, 4)]


def test_improper_decimation():
    with pytest.raises(tp.ImproperDecimationError):
        tp.decimation_order(20, 17, 2, 1)
    # coprime steps, but the sides share a factor so the walk closes early
    with pytest.raises(tp.ImproperDecimationError):
        tp.decimation_order(4, 6, 1, 1)


def test_pseudo_period_trace():
    assert tp.pseudo_period_order(1, 6, 2).one_based() == [1, 3, 5, 2, 4, 6]


def test_period_requires_coprime():
    with pytest.raises(tp.SpecError):
        tp.period_order(20, 17, 17)


def test_equivalences(z340):
    for line in ("decimation n=1 m=2", "pseudo_period p=19", "period p=19"):
        assert p1(tp.apply(z340, spec(line))) == 37, line
    assert p1(tp.apply(z340, tp.parse_spec(data.read_text("sections_9_11.spec")))) == 42


def test_mirror_and_column_moves(z340):
    mirrored = tp.apply(z340, spec("mirror_horizontal"))
    assert repeating_bigram_count(mirrored, 15).total_repeats == 41
    moved = tp.apply(z340, spec("move_column from=17 to=1"))
    assert repeating_bigram_count(moved, 19).total_repeats == 45
    cp = tp.apply(z340, spec("column_period p=2"))
    assert repeating_bigram_count(cp, 18).total_repeats == 44


def test_wrap_period(z340):
    assert p1(tp.apply(z340, spec("wrap_period p=19"))) == 37


def test_identity_and_multiset(z340):
    assert tp.apply(z340, tp.IDENTITY) == z340
    out = tp.apply(z340, spec("decimation n=1 m=2"))
    assert sorted(out.cells) == sorted(z340.cells)
    assert (out.rows, out.cols) == (20, 17)


def test_invert_identity():
    assert tp.invert(tp.IDENTITY, 9, 17) == tp.IDENTITY


def test_invert_decimation_composes_to_identity():
    d = spec("decimation n=1 m=2")
    both = tp.Composite((d, tp.invert(d, 9, 17)))
    assert both.order(9, 17) == tp.CellOrder(np.arange(153))


def test_enumerate_splits_counts():
    assert len(tp.enumerate_splits(17, 2, exact=True)) == 16
    assert len(tp.enumerate_splits(20, 2, exact=True)) == 19
    four = tp.enumerate_splits(20, 4, exact=True)
    assert len(four) == comb(19, 3) == 969 and (9, 9, 1, 1) in four
    assert len(tp.enumerate_splits(20, 3)) == 1 + 19 + comb(19, 2)
    with pytest.raises(ValueError):
        tp.enumerate_splits(5, 0)


def test_sieve(z340):
    space = [tp.IDENTITY, spec("decimation n=1 m=2"), tp.parse_spec(data.read_text("sections_9_11.spec"))]
    tally = tp.SieveTally()
    got = list(tp.enumerate_variants(z340, space, 38, tally))
    assert [c for _, c in got] == [42]
    assert (tally.accepted, tally.rejected) == (1, 2)
    assert len(list(tp.enumerate_variants(z340, space, 0))) == 3


def test_sieve_counts_invalid(z340):
    tally = tp.SieveTally()
    list(tp.enumerate_variants(z340, [spec("decimation n=2 m=1")], 0, tally))
    assert tally.invalid == 1 and tally.total == 1


def test_plan_space_file(z340):
    space = tp.parse_plan_space(data.read_text("z340_rows.space"), data.DATA_DIR)
    assert space.size(20, 17) == 2 * (1 + 19 + 171) + 1
    plans = list(space.plans(20, 17))
    assert len(plans) == space.size(20, 17)
    assert plans == list(space.plans(20, 17))


@pytest.mark.parametrize("text", ["axes diagonal", "max_sections x", "frobnicate 1"])
def test_plan_space_errors(text):
    with pytest.raises(FormatError):
        tp.parse_plan_space(text)


def test_knight_walk():
    for shape in ((9, 17), (20, 17)):
        assert tp.knight_walk_order(*shape) == tp.decimation_order(*shape, 1, 2)
    with pytest.raises(tp.CoverageError):
        tp.knight_walk_order(4, 4)


def test_triangular_rewrite_section1(z340):
    # encipher the Section 1 plaintext by hand and compare with the cipher layout
    key = data.key("z340.key")
    d = spec("decimation n=1 m=2")
    section = z340.subgrid(0, 9)
    pt = decrypt(tp.apply(section, d), key).letters
    hand = tp.triangular_rewrite(SymbolGrid(9, 17, tuple(pt)))
    assert hand.text == decrypt(section, key).letters


def test_triangular_rewrite_trivial_and_unsupported():
    one = SymbolGrid.from_text("x")
    assert tp.triangular_rewrite(one) == one
    with pytest.raises(tp.UnsupportedError):
        tp.triangular_rewrite(SymbolGrid.from_text("abcdefghijkl", 4))


def test_spec_text_roundtrip():
    for name in ("sections_9_11.spec", "z340_final_plan.spec", "decimation_1_2.spec"):
        t = tp.parse_spec(data.read_text(name))
        assert tp.parse_spec(tp.to_text(t)) == t


@pytest.mark.parametrize("text", [
    "decimation n=1",
    "spiral p=2",
    "section 1 identity",
    "axis vertical\nsizes 10 10\nsection 3 identity",
    "axis vertical\nsizes 20\nexclude 1",
    "",
])
def test_bad_specs(text):
    with pytest.raises(FormatError):
        tp.parse_spec(text)


def test_plan_size_mismatch(z340):
    plan = tp.parse_spec("axis vertical\nsizes 10 9")
    with pytest.raises(tp.SpecError):
        tp.apply(z340, plan)


def test_disruptions_semantics():
    g = SymbolGrid.from_text("abcdefghijkl", 4)
    shift = tp.parse_spec("axis vertical\nsizes 3\nrshift row=2 cols=2..4 amount=1")
    assert tp.apply(g, shift).text == "abcdehfgijkl"
    excl = tp.parse_spec("axis vertical\nsizes 3\nsection 1 column_major\nexclude 1,2")
    # b stays put; the rest is read down the columns into the other slots
    assert tp.apply(g, excl).text == "abeifjcgkdhl"


def test_relocate():
    g = SymbolGrid.from_text("abcdef", 6)
    plan = tp.parse_spec("axis vertical\nsizes 1\nexclude 1,1 1,2\nrelocate at=3")
    assert tp.apply(g, plan).text == "cdabef"
