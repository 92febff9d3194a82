import math
import random

import numpy as np
import pytest

from zodiac import language as lang
from zodiac import reproduce
from zodiac.cipher import Plaintext


@pytest.fixture(scope="module")
def tiny():
    return lang.build_model(["THE CAT SAT ON THE MAT", "THE DOG"], 3)


def test_single_bigram():
    m = lang.build_model("AB", 2)
    assert m.logprob("AB") == 0.0
    assert m.floor < 0.0 and m.logprob("BA") == pytest.approx(m.floor, rel=1e-6)


def test_floor_below_stored(tiny):
    stored = [lp for _, lp in tiny.top(tiny.size)]
    assert max(stored) <= 0 and tiny.floor == pytest.approx(min(stored) - 2)


def test_build_deterministic_and_order_free(tiny):
    again = lang.build_model(["THE DOG", "THE CAT SAT ON THE MAT"], 3)
    assert again.top(50) == tiny.top(50) and again.floor == tiny.floor


def test_empty_corpus():
    with pytest.raises(lang.BuildError):
        lang.build_model(["123 !!"], 3)


def test_window_boundaries_per_line():
    m = lang.build_model(["AB", "CD"], 2)
    assert m.logprob("BC") == pytest.approx(m.floor, rel=1e-6)


def test_english_ordering(model5):
    assert lang.score("THETHETHE", model5) > lang.score("QZXQZXQZX", model5)


def test_high_ranked_sixgrams():
    m6 = lang.english_model(6)
    for g in ("NOTHIN", "WHENTH"):
        assert m6.rank(g) < 0.02 * m6.size


def test_per_row_accounting(model5):
    pt = Plaintext("THEQUICKBROWNFOXJUMPS", 7)
    rows = sum(lang.score(r, model5) for r in pt.rows())
    assert lang.score(pt, model5, "per-row") == pytest.approx(rows)
    one = Plaintext("THEQUICKBROWN", 13)
    assert lang.score(one, model5, "per-row") == lang.score(one, model5, "linear")


def test_score_short_text(model5):
    with pytest.raises(lang.PreconditionError):
        lang.score("ABC", model5)


def test_normalized_score(model5):
    s = "ATTACKATDAWN"
    assert lang.score(s, model5, normalized=True) == pytest.approx(
        lang.score(s, model5) / (len(s) - 4))


def test_entropy():
    assert lang.letter_entropy("AAAA") == 0.0
    assert lang.letter_entropy("ABCDEFGHIJKLMNOPQRSTUVWXYZ") == pytest.approx(math.log2(26))
    with pytest.raises(lang.PreconditionError):
        lang.letter_entropy("")


def test_final_plaintext_entropy():
    letters = reproduce.reproduce().letters
    assert lang.letter_entropy(letters) == pytest.approx(4.0998113840652675, abs=1e-12)


def test_counts_file_roundtrip(tmp_path, tiny):
    p = tmp_path / "tiny.tsv"
    lang.write_counts(tiny, p)
    first = p.read_text().splitlines()[0]
    assert "\t" in first and first.split("\t")[1].isdigit()
    back = lang.read_counts(p)
    assert back.top(20) == tiny.top(20)


def test_cache_roundtrip(tmp_path, tiny):
    p = tmp_path / "tiny.bin"
    lang.save_cache(tiny, p)
    assert p.read_bytes().startswith(lang.CACHE_MAGIC)
    back = lang.load_model(p)
    assert back.top(20) == tiny.top(20) and back.floor == tiny.floor


def test_bad_cache(tmp_path):
    p = tmp_path / "junk.bin"
    p.write_bytes(b"NOTAMODEL")
    with pytest.raises(lang.BuildError):
        lang.load_cache(p)


def test_conditional_table_is_distribution(model5):
    cond = model5.conditional(3)
    probs = 10.0 ** cond.astype(np.float64).reshape(26 * 26, 26)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-4)


@pytest.mark.parametrize("text,want", [
    ("IHOPEYOUARE", "I HOPE YOU ARE"),
    ("HELLOWORLD", "HELLO WORLD"),
    ("", ""),
])
def test_segment(text, want):
    assert lang.segment_words(text) == want


def test_segment_keeps_letters():
    rng = random.Random(0)
    for _ in range(50):
        s = "".join(rng.choice("ABCDEFGHIJKLMNOPQRSTUVWXYZ") for _ in range(rng.randint(1, 60)))
        assert lang.segment_words(s).replace(" ", "") == s


def test_custom_word_list(tmp_path):
    p = tmp_path / "words.txt"
    p.write_text("ZOD\nIAC\n")
    assert lang.segment_words("ZODIAC", lang.load_words(p)) == "ZOD IAC"
