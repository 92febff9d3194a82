import json

import pytest

from zodiac import generator as gen
from zodiac.cipher import KeyCoverageError, decrypt, load_cipher, load_key


def test_one_to_one():
    g, key, pt = gen.generate(gen.GeneratorSpec(length=4, cols=4, plaintext="ABAB",
                                                allocation={"A": 1, "B": 1}))
    assert g.cells[0] == g.cells[2] != g.cells[1] == g.cells[3]
    assert decrypt(g, key).letters == pt.letters == "ABAB"


def test_missing_allocation():
    with pytest.raises(KeyCoverageError):
        gen.generate(gen.GeneratorSpec(length=3, cols=3, plaintext="ABC",
                                       allocation={"A": 1, "B": 1}))


def test_largest_remainder():
    alloc = gen.largest_remainder({"E": 12.0, "T": 9.0, "Z": 0.1}, 10)
    assert sum(alloc.values()) == 10 and alloc["Z"] == 1 and alloc["E"] > alloc["T"]


def test_proportional_budget(z340):
    alloc = gen.proportional_allocation("THEQUICKBROWNFOXJUMPSOVERTHELAZYDOG" * 10, 63)
    assert sum(alloc.values()) == 63


def test_sample_plaintext():
    assert gen.sample_plaintext(None, 0, 1).letters == ""
    a = gen.sample_plaintext(None, 340, 1)
    assert len(a) == 340 and set(a.letters) <= set("ABCDEFGHIJKLMNOPQRSTUVWXYZ")
    assert gen.sample_plaintext(None, 340, 1) == a
    with pytest.raises(ValueError):
        gen.sample_plaintext("SHORT", 10, 0)


def test_offsets_differ():
    seen = {gen.sample_plaintext(None, 60, s).letters for s in range(200)}
    assert len(seen) == 200


@pytest.mark.parametrize("policy", ["cyclic", "random"])
def test_profile_suite(z340, policy):
    for g, key, pt in gen.generate_suite(25, 3, z340, policy):
        assert g.n == 340 and (g.rows, g.cols) == (20, 17)
        assert len(g.alphabet) <= 63
        assert decrypt(g, key).letters == pt.letters
        assert gen.profile_distance(g, z340) <= 34  # 10% of n


def test_cyclic_runs():
    g, _, _ = gen.generate(gen.GeneratorSpec(length=14, cols=14, plaintext="E" * 14,
                                             allocation={"E": 7}))
    assert g.text[:7] == g.text[7:] and len(set(g.text[:7])) == 7


def test_suite_deterministic(z340):
    a = [g.text for g, _, _ in gen.generate_suite(5, 7, z340)]
    b = [g.text for g, _, _ in gen.generate_suite(5, 7, z340)]
    assert a == b
    assert a != [g.text for g, _, _ in gen.generate_suite(5, 8, z340)]


def test_write_suite(tmp_path, z340):
    manifest = gen.write_suite(tmp_path / "s", 3, 7, z340)
    recs = [json.loads(line) for line in manifest.read_text().splitlines()]
    assert [r["index"] for r in recs] == [0, 1, 2]
    for r in recs:
        g = load_cipher(tmp_path / "s" / r["grid"])
        key = load_key(tmp_path / "s" / r["key"])
        assert decrypt(g, key).letters == (tmp_path / "s" / r["plaintext"]).read_text().strip()


def test_spec_validation():
    with pytest.raises(ValueError):
        gen.GeneratorSpec(policy="spiral")
    with pytest.raises(ValueError):
        gen.GeneratorSpec(length=10, plaintext="ABC")
