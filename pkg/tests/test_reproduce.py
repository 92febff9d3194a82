import shutil
from dataclasses import replace

import pytest

from zodiac import data
from zodiac import reproduce as rp
from zodiac import transposition as tp

BRACKETED = (
    "I HOPE YOU ARE HAVING LOTS OF [FAN: FUN] IN TRYING TO CATCH ME THAT WASN'T ME ON THE "
    "TV SHOW WHICH [BRINGO: BRINGS] UP A POINT ABOUT ME I AM NOT AFRAID OF THE GAS CHAMBER "
    "[BECAASE: BECAUSE] IT WILL SEND ME TO [PARADLCE: PARADISE] ALL THE [SOOHER: SOONER] "
    "BECAUSE [E: I] NOW HAVE ENOUGH SLAVES TO [WORV: WORK] FOR ME WHERE EVERYONE ELSE HAS "
    "NOTHING WHEN THEY REACH [PARADICE: PARADISE] SO THEY ARE AFRAID OF DEATH I AM NOT AFRAID "
    "BECAUSE I [VNOW: KNOW] THAT MY NEW LIFE WILL BE AN EASY ONE IN [PARADICE: PARADISE] "
    "LIFE IS DEATH"
)


@pytest.fixture(scope="module")
def rep():
    return rp.reproduce()


def test_bracketed_listing(rep):
    assert rep.bracketed() == BRACKETED


def test_corrected(rep):
    text = rep.corrected()
    assert text.startswith("I HOPE YOU ARE HAVING LOTS OF FUN IN TRYING")
    assert text.endswith("IN PARADISE LIFE IS DEATH")
    assert "[" not in text and "BECAASE" not in text


def test_letters(rep):
    assert len(rep.letters) == 340
    assert rep.letters.startswith("IHOPEYOUAREHAVINGLOTSOFFANIN")
    assert rep.letters.endswith("INPARADICELIFEISDEATH")
    assert rep.plain().replace(" ", "") == rep.letters


def test_row15(rep):
    assert rep.row15 == ("IERRATENYRNOSRVSH", "IERHRATENYRNOSRVS")


def test_crib_counts(rep):
    assert (rep.crib_symbols, rep.section1_symbols) == (27, 63)
    assert (rep.crib_positions, rep.section1_length) == (83, 153)


def test_sections(rep):
    assert rep.section(1).corrected().startswith("I HOPE YOU ARE HAVING LOTS OF FUN")
    assert len(rep.section(1).letters) == 153
    assert rep.section(3).corrected() == "LIFE WILL BE AN EASY ONE IN PARADISE DEATH"
    with pytest.raises(ValueError):
        rep.section(5)


def test_pre_correction_section2():
    early = rp.reproduce(key="initial", corrections=False).section(2)
    assert early.letters.startswith("SOOHENBECURSEE")


def test_no_corrections_diff(rep):
    raw = rp.reproduce(corrections=False)
    plan = tp.parse_spec(data.read_text(rp.PLAN))
    fixed = tp.order_of(plan, 20, 17).indices
    plain = tp.order_of(replace(plan, disruptions=(), relocate=None), 20, 17).indices
    shift = next(d for d in plan.disruptions if d.kind == "rshift")
    excl = next(d for d in plan.disruptions if d.kind == "exclude")
    row15 = {(shift.row - 1) * 17 + c - 1 for c in range(shift.start_col, shift.end_col + 1)}
    life = {(r - 1) * 17 + c - 1 for r, c in excl.cells}
    from_row15 = {k for k in range(340) if fixed[k] in row15 or plain[k] in row15}
    life_reads = [k for k in range(340) if fixed[k] in life or plain[k] in life]
    span = set(range(min(life_reads), max(life_reads) + 1))
    diff = {k for k in range(340) if rep.letters[k] != raw.letters[k]}
    assert diff <= from_row15 | span
    assert diff - span and diff & span
    assert raw.letters.endswith("DEATH")


def test_report_fields(rep):
    doc = rep.report()
    assert doc["crib_symbols"] == [27, 63] and doc["crib_positions"] == [83, 153]
    assert set(doc["digests"]) == set(rp.DIGESTS)


def test_digests_match_files():
    for name, want in rp.DIGESTS.items():
        assert data.sha256(data.path(name)) == want


def test_tampered_data(tmp_path):
    for name in rp.DIGESTS:
        shutil.copy(data.path(name), tmp_path / name)
    rp.reproduce(tmp_path)
    key = tmp_path / rp.KEY
    key.write_text(key.read_text().replace("=I\n", "=E\n", 1))
    with pytest.raises(rp.IntegrityError, match="z340.key"):
        rp.reproduce(tmp_path)


def test_bad_key_choice():
    with pytest.raises(ValueError):
        rp.reproduce(key="newest")


def test_corrections_file():
    table = rp.parse_corrections(data.read_text(rp.CORRECTIONS))
    assert table["PARADLCE"] == "PARADISE" and table["WASNT"] == "WASN'T"
    assert rp.is_display_form("WASNT", "WASN'T") and not rp.is_display_form("FAN", "FUN")
