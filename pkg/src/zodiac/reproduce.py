"""Decrypt Z340 end to end from the bundled plan, key, crib file and word list."""
from __future__ import annotations

import gzip
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import data
from .cipher import FormatError, SymbolGrid, decrypt, is_comment, parse_cipher, parse_key
from .language import segment_words, word_model_from_lines
from .solver import derive_constraints, determined_positions, parse_cribs
from .language import WordModel
from .transposition import SectionPlan, apply, order_of, parse_spec

PLAN = "z340_final_plan.spec"
KEY = "z340.key"
INITIAL_KEY = "z340_breakthrough.key"
CRIBS = "z340_section1.cribs"
SECTION1_SPEC = "decimation_1_2.spec"
CORRECTIONS = "z340_corrections.tsv"

# sha256 of every file the reproduction reads
DIGESTS = {
    "z340.cipher": "c6491bd9dd10ea24c6c871471e3392d144d793cd5d844b4aad188c07098616b4",
    KEY: "509fd612318eb36b8af805fed74d511795783f064866800ce0ad070256b418c4",
    INITIAL_KEY: "d82f1e386ccca5818288e7961fa1cc4535c44830e90a2ae34c3398734337d476",
    PLAN: "feca309af47925097ea918d18e39a09f26b5e7d1909d027ddf96a0a739c43145",
    CRIBS: "39f90625696c8263da44700242aed5ebc057543bf8a4f2c644a49cb62226d1a3",
    SECTION1_SPEC: "8d257a2d7a24781c0ffa844566d8fcc1b9cc289ad4e59a3c01f776d5d49a0d08",
    CORRECTIONS: "9b004ea584136a2d61c8536c4beda53d6a06b3ca7e32262e46e9603d53b3e410",
    "english_words.tsv.gz": "d6b7a0b75903394869366598e527402857d8f268569cae2889a344a649f895a2",
}

# weight given to the raw misspelled words so segmentation keeps them whole
MISSPELLING_LOGP = -3.0


class IntegrityError(RuntimeError):
    pass


def verify(data_dir: str | Path | None = None) -> dict[str, str]:
    """Digest of each input; any mismatch with the pinned value raises."""
    seen = {}
    bad = []
    for name, want in DIGESTS.items():
        got = data.sha256(data.path(name, data_dir))
        seen[name] = got
        if got != want:
            bad.append(name)
    if bad:
        raise IntegrityError("digest mismatch for " + ", ".join(sorted(bad)))
    return seen


def parse_corrections(text: str) -> dict[str, str]:
    table = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or is_comment(line):
            continue
        raw, sep, reading = line.partition("\t")
        if not sep or not raw.isalpha() or not reading.strip():
            raise FormatError(f"line {lineno}: expected RAW<TAB>READING")
        table[raw.upper()] = reading.strip().upper()
    return table


def is_display_form(raw: str, reading: str) -> bool:
    return reading.replace("'", "") == raw


@dataclass(frozen=True)
class Reproduction:
    letters: str
    words: tuple[str, ...]
    corrections: dict
    row15: tuple[str, str]  # decrypted row 15 before and after the shift
    crib_symbols: int
    section1_symbols: int
    crib_positions: int
    section1_length: int
    sections: tuple[int, ...] = ()  # plan section of each output letter
    digests: dict = field(default_factory=dict)
    word_model: WordModel | None = field(default=None, repr=False, compare=False)

    def section(self, number: int) -> "Reproduction":
        """Same report restricted to the letters drawn from one plan section."""
        if number not in set(self.sections):
            raise ValueError(f"no section {number}; plan has {max(self.sections)}")
        letters = "".join(ch for ch, sec in zip(self.letters, self.sections) if sec == number)
        words = tuple(segment_words(letters, self.word_model).split())
        return replace(self, letters=letters, words=words,
                       sections=(number,) * len(letters))

    def corrected(self) -> str:
        return " ".join(self.corrections.get(w, w) for w in self.words)

    def bracketed(self) -> str:
        out = []
        for w in self.words:
            r = self.corrections.get(w)
            if r is None:
                out.append(w)
            elif is_display_form(w, r):
                out.append(r)
            else:
                out.append(f"[{w}: {r}]")
        return " ".join(out)

    def plain(self) -> str:
        return " ".join(self.words)

    def report(self) -> dict:
        return {
            "plaintext": self.corrected(),
            "bracketed": self.bracketed(),
            "letters": self.letters,
            "row15_before": self.row15[0],
            "row15_after": self.row15[1],
            "crib_symbols": [self.crib_symbols, self.section1_symbols],
            "crib_positions": [self.crib_positions, self.section1_length],
            "digests": self.digests,
        }


def _shifted_row(grid: SymbolGrid, plan: SectionPlan, key) -> tuple[str, str]:
    rule = next(d for d in plan.disruptions if d.kind == "rshift")
    before = decrypt(grid, key).rows()[rule.row - 1]
    lo, hi = rule.start_col - 1, rule.end_col
    seg = before[lo:hi]
    a = rule.amount % len(seg)
    after = before[:lo] + seg[-a:] + seg[:-a] + before[hi:] if a else before
    return before, after


def reproduce(data_dir: str | Path | None = None, check: bool = True, key: str = "final",
              corrections: bool = True) -> Reproduction:
    """Decrypt with the final plan. ``key="initial"`` uses the key from the
    first cribbed solve; ``corrections=False`` drops the plan's disruption
    rules (row shift, exclusion, relocation)."""
    if key not in ("final", "initial"):
        raise ValueError(f"key must be 'final' or 'initial', not {key!r}")
    digests = verify(data_dir) if check else {}
    grid = parse_cipher(data.read_text("z340.cipher", data_dir))
    final_key = parse_key(data.read_text(KEY, data_dir))
    use_key = final_key if key == "final" else parse_key(data.read_text(INITIAL_KEY, data_dir))
    plan = parse_spec(data.read_text(PLAN, data_dir))
    if corrections:
        row15 = _shifted_row(grid, plan, final_key)
    else:
        plan = replace(plan, disruptions=(), relocate=None)
        row15 = (decrypt(grid, final_key).rows()[14],) * 2
    letters = decrypt(apply(grid, plan), use_key).letters
    bounds = [0]
    for size in plan.sizes:
        bounds.append(bounds[-1] + size)
    band_of = {b: i + 1 for i in range(len(plan.sizes)) for b in range(bounds[i], bounds[i + 1])}
    order = order_of(plan, grid.rows, grid.cols).indices
    if plan.axis == "vertical":
        sections = tuple(band_of[int(i) // grid.cols] for i in order)
    else:
        sections = tuple(band_of[int(i) % grid.cols] for i in order)

    table = parse_corrections(data.read_text(CORRECTIONS, data_dir))
    misspelled = [w for w, r in table.items() if not is_display_form(w, r)]
    with gzip.open(data.path("english_words.tsv.gz", data_dir), "rt", encoding="ascii") as fh:
        words = word_model_from_lines(fh).with_words(misspelled, MISSPELLING_LOGP)
    spaced = segment_words(letters, words).split()

    section = apply(grid.subgrid(0, 9), parse_spec(data.read_text(SECTION1_SPEC, data_dir)))
    partial = derive_constraints(section, parse_cribs(data.read_text(CRIBS, data_dir)))
    return Reproduction(
        letters=letters,
        words=tuple(spaced),
        corrections=table,
        row15=row15,
        crib_symbols=len(partial.mapping),
        section1_symbols=len(section.alphabet),
        crib_positions=determined_positions(section, partial),
        section1_length=section.n,
        sections=sections,
        digests=digests,
        word_model=words,
    )
