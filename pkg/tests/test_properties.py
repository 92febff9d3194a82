import json
from collections import Counter
from math import gcd

import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from zodiac import generator as gen
from zodiac import language as lang
from zodiac import stats
from zodiac import transposition as tp
from zodiac.cipher import HomophoneTable, Plaintext, SymbolGrid, decrypt, encrypt
from zodiac.cli import main

THOUSAND = settings(max_examples=1000, derandomize=True, deadline=None,
                    suppress_health_check=[HealthCheck.too_slow])
PLENTY = settings(max_examples=200, derandomize=True, deadline=None)
SYMS = gen.SYMBOLS


@st.composite
def grids(draw, min_n=2, max_n=120):
    cols = draw(st.integers(1, 17))
    rows = draw(st.integers(max(1, -(-min_n // cols)), max(1, max_n // cols)))
    alpha = draw(st.integers(1, 12))
    cells = draw(st.lists(st.sampled_from(SYMS[:alpha]), min_size=rows * cols,
                          max_size=rows * cols))
    return SymbolGrid(rows, cols, tuple(cells))


def brute_pairs(cells, p):
    return Counter((cells[j], cells[j + p]) for j in range(len(cells) - p))


@THOUSAND
@given(st.data())
def test_period_pairs_match_brute_force(data):
    g = data.draw(grids())
    p = data.draw(st.integers(1, g.n // 2))
    got = stats.period_bigrams(g, p)
    assert Counter(got.pairs) == brute_pairs(g.cells, p)
    # chain 1 comes first
    assert got.pairs[0] == (g.cells[0], g.cells[p])
    no_junction = stats.repeating_bigram_count(g, p, junctions=False).total_repeats
    assert no_junction == sum(v - 1 for v in brute_pairs(g.cells, p).values())


@st.composite
def simple_specs(draw, rows, cols):
    kind = draw(st.sampled_from(["identity", "column_major", "mirror_horizontal", "decimation",
                                 "period", "pseudo_period", "wrap_period", "move_column",
                                 "column_period", "permutation"]))
    n = rows * cols
    if kind == "decimation":
        a = draw(st.integers(1, max(1, rows - 1)))
        b = draw(st.integers(1, max(1, cols - 1)))
        assume(gcd(a, rows) == 1 and gcd(b, cols) == 1)
        return tp.TranspositionSpec.make(kind, n=a, m=b)
    if kind in ("period", "pseudo_period", "wrap_period"):
        return tp.TranspositionSpec.make(kind, p=draw(st.integers(1, max(1, n // 2))))
    if kind == "column_period":
        return tp.TranspositionSpec.make(kind, p=draw(st.integers(1, cols)))
    if kind == "move_column":
        return tp.TranspositionSpec.make(kind, from_=draw(st.integers(1, cols)),
                                         to=draw(st.integers(1, cols)))
    if kind == "permutation":
        perm = draw(st.permutations(range(1, n + 1)))
        return tp.TranspositionSpec.make(kind, order=perm)
    return tp.TranspositionSpec(kind)


@st.composite
def transforms(draw):
    rows, cols = draw(st.integers(1, 10)), draw(st.integers(1, 10))
    shape = draw(st.sampled_from(["spec", "composite", "plan"]))
    if shape == "spec":
        return rows, cols, draw(simple_specs(rows, cols))
    if shape == "composite":
        steps = draw(st.lists(simple_specs(rows, cols), min_size=1, max_size=3))
        return rows, cols, tp.Composite(tuple(steps))
    axis = draw(st.sampled_from(["vertical", "horizontal"]))
    extent = rows if axis == "vertical" else cols
    sizes = draw(st.sampled_from(tp.enumerate_splits(extent, 3)))
    secs = tuple(draw(simple_specs(*((s, cols) if axis == "vertical" else (rows, s))))
                 for s in sizes)
    disruptions = []
    if cols > 1 and draw(st.booleans()):
        a = draw(st.integers(1, cols))
        b = draw(st.integers(a, cols))
        disruptions.append(tp.DisruptionRule("rshift", row=draw(st.integers(1, rows)),
                                             start_col=a, end_col=b,
                                             amount=draw(st.integers(-3, 3))))
    relocate = None
    if draw(st.booleans()):
        cells = draw(st.lists(st.tuples(st.integers(1, rows), st.integers(1, cols)),
                              min_size=1, max_size=3, unique=True))
        disruptions.append(tp.DisruptionRule("exclude", cells=tuple(cells)))
        if draw(st.booleans()):
            relocate = draw(st.integers(1, rows * cols - len(cells) + 1))
    return rows, cols, tp.SectionPlan(axis, sizes, secs, tuple(disruptions), relocate)


@THOUSAND
@given(transforms())
def test_apply_invert_identity(case):
    rows, cols, t = case
    try:
        order = tp.order_of(t, rows, cols)
    except tp.SpecError:
        assume(False)
    assert sorted(order.indices.tolist()) == list(range(rows * cols))
    g = SymbolGrid(rows, cols, tuple(SYMS[i % len(SYMS)] + str(i) for i in range(rows * cols)))
    back = tp.apply(tp.apply(g, t), tp.invert(t, rows, cols))
    assert back.cells == g.cells
    # the text form describes the same ordering
    assert tp.order_of(tp.parse_spec(tp.to_text(t)), rows, cols) == order


@pytest.mark.parametrize("shape", [(9, 17), (20, 17)])
def test_knight_walk_is_decimation(shape):
    assert tp.knight_walk_order(*shape) == tp.decimation_order(*shape, 1, 2)


@PLENTY
@given(st.lists(st.sampled_from(SYMS), min_size=153, max_size=153))
def test_triangular_rewrite_is_decimation(cells):
    pt = SymbolGrid(9, 17, tuple(cells))
    d = tp.TranspositionSpec.make("decimation", n=1, m=2)
    by_hand = tp.triangular_rewrite(pt)
    assert by_hand == tp.apply(pt, tp.invert(d, 9, 17))
    assert tp.apply(by_hand, d).cells == pt.cells


@st.composite
def tables(draw):
    letters = draw(st.lists(st.sampled_from("ABCDEFGHIJKLMNOPQRSTUVWXYZ"), min_size=1,
                            max_size=26, unique=True))
    pool = iter(draw(st.permutations(SYMS)))
    table = {l: [next(pool) for _ in range(draw(st.integers(1, 2)))] for l in letters}
    return HomophoneTable(table, draw(st.sampled_from(["cyclic", "random"])))


@PLENTY
@given(tables(), st.data(), st.integers(0, 2**32))
def test_encrypt_decrypt_roundtrip(table, data, seed):
    text = data.draw(st.text(alphabet="".join(table.table), min_size=1, max_size=200))
    g = encrypt(text, table, seed)
    assert decrypt(g, table.inverse_key()).letters == text
    assert encrypt(text, table, seed) == g


@PLENTY
@given(st.text(alphabet="ABCDEFGHIJKLMNOPQRSTUVWXYZ", max_size=80))
def test_segment_keeps_letters(s):
    out = lang.segment_words(Plaintext(s))
    assert out.replace(" ", "") == s
    assert "  " not in out and out == out.strip()


SEEDED = {
    "shuffle": ["shuffle-test", "z340.cipher", "--trials", 2000, "--histogram"],
    "pivots": ["shuffle-test", "z340.cipher", "--statistic", "pivots", "--trials", 2000],
    "clean-rows": ["shuffle-test", "z408.cipher", "--statistic", "clean-rows", "--trials", 500],
    "solve": ["solve", "z408.cipher", "--iterations", 20000, "--restarts", 2],
    "enumerate": ["enumerate-and-solve", "z340.cipher", "--space", "z340_rows.space",
                  "--sieve", 42, "--limit", 2, "--iterations", 5000],
    "suite": ["generate-suite", "--count", 5],
}


@pytest.mark.parametrize("name", sorted(SEEDED))
def test_seeded_commands_repeat(name, capsys, tmp_path):
    outputs = []
    for run in ("a", "b"):
        argv = [str(a) for a in SEEDED[name]] + ["--seed", "11",
                                                 "--manifest", str(tmp_path / f"{run}.json")]
        if name == "suite":
            argv += ["--out", str(tmp_path / "suite")]
        main(argv)
        out = capsys.readouterr().out
        manifest = json.loads((tmp_path / f"{run}.json").read_text())
        manifest.pop("arguments")  # names the manifest path
        outputs.append((out, manifest))
    assert outputs[0] == outputs[1]
