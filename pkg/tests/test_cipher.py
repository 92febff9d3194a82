import pytest

from zodiac import data
from zodiac.cipher import (
    FormatError, HomophoneTable, KeyCoverageError, Plaintext, SubstitutionKey, SymbolGrid,
    decrypt, encrypt, parse_cipher, parse_key, serialize_cipher, serialize_key,
)
from zodiac.generator import SYMBOLS
from zodiac.transposition import TranspositionSpec, apply


def test_bundled_dimensions(z340, z408):
    assert (z340.rows, z340.cols, z340.n, len(z340.alphabet)) == (20, 17, 340, 63)
    assert (z408.n, len(z408.alphabet)) == (408, 54)


def test_alphabet_first_appearance_order():
    g = parse_cipher("BA\nCA\n")
    assert g.alphabet.symbols == ("B", "A", "C")


@pytest.mark.parametrize("text", ["AB\nA\n", "", "# only a comment\n"])
def test_bad_cipher_files(text):
    with pytest.raises(FormatError):
        parse_cipher(text)


def test_ragged_error_names_line():
    with pytest.raises(FormatError, match="line 2"):
        parse_cipher("AB\nA")


def test_hash_symbol_is_data_unless_followed_by_space():
    g = parse_cipher("# note\n#A\nB#\n")
    assert g.rows == 2 and g.cells == ("#", "A", "B", "#")


def test_serialize_roundtrip_bundled():
    for name in ("z340.cipher", "z408.cipher"):
        text = data.read_text(name)
        assert serialize_cipher(parse_cipher(text)) == text


def test_key_roundtrip():
    text = data.read_text("z408.key")
    key = parse_key(text)
    assert parse_key(serialize_key(key)) == key


def test_single_cell_decrypt():
    assert decrypt(SymbolGrid.from_text("q"), SubstitutionKey({"q": "A"})).letters == "A"


def test_unknown_marker():
    pt = decrypt(SymbolGrid.from_text("qr"), SubstitutionKey({"q": "A"}))
    assert pt.letters == "A?"
    assert decrypt(SymbolGrid.from_text("qr"), SubstitutionKey({"q": "A"}), "_").letters == "A_"


def test_z408_plaintext(z408):
    assert decrypt(z408, data.key("z408.key")).letters.startswith("ILIKEKILLINGPEOPLE")


def test_z340_untransposed_ends_with_death(z340):
    assert decrypt(z340, data.key("z340.key")).letters.endswith("DEATH")


def test_z340_key_leaves_out_rare_letters():
    used = set(data.key("z340.key").mapping.values())
    assert not used & set("JKQXZ")


def test_cyclic_encrypt():
    table = HomophoneTable({"E": ["x", "y"]})
    assert encrypt("EE", table).text == "xy"


def test_cyclic_policy_identical_runs():
    table = HomophoneTable({"E": list("abcdefg")})
    g = encrypt("E" * 14, table)
    assert g.text[:7] == g.text[7:] == "abcdefg"


def test_encrypt_missing_letter():
    with pytest.raises(KeyCoverageError):
        encrypt("AB", HomophoneTable({"A": ["x"]}))


@pytest.mark.parametrize("policy", ["cyclic", "random"])
@pytest.mark.parametrize("seed", [0, 1, 99])
def test_encrypt_decrypt_roundtrip(policy, seed):
    pt = "THEQUICKBROWNFOXJUMPSOVERTHELAZYDOG" * 3
    pool = iter(SYMBOLS)
    table = HomophoneTable({l: [next(pool) for _ in range(1 + ord(l) % 3)]
                            for l in sorted(set(pt))}, policy)
    g = encrypt(pt, table, seed)
    assert decrypt(g, table.inverse_key()).letters == pt


def test_decrypt_commutes_with_permutation(z340):
    key = data.key("z340.key")
    spec = TranspositionSpec.make("decimation", n=1, m=2)
    left = decrypt(apply(z340, spec), key).letters
    right = "".join(decrypt(z340, key).letters[i] for i in spec.order(20, 17).indices)
    assert left == right


def test_plaintext_rows():
    assert Plaintext("ABCDEF", 3).rows() == ["ABC", "DEF"]
