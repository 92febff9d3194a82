"""Ciphertext grids, substitution keys and their text formats.

Cipher files hold one grid row per line, one printable character per symbol.
A line that is ``#`` alone or ``#`` followed by whitespace is a comment; a
bare ``#`` at the start of a row is a symbol (Z340 row 7 starts with one).
Key files hold ``SYMBOL=LETTER`` lines with the same comment rule.
"""
from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
UNKNOWN = "?"


class FormatError(ValueError):
    """Malformed cipher, key, crib or spec text."""


class KeyCoverageError(ValueError):
    """A plaintext letter has no homophones in the table."""


def is_comment(line: str) -> bool:
    return line.startswith("#") and (len(line) == 1 or line[1].isspace())


@dataclass(frozen=True)
class Alphabet:
    """Distinct symbols in order of first appearance."""

    symbols: tuple[str, ...]

    def __post_init__(self):
        if not self.symbols:
            raise ValueError("alphabet must contain at least one symbol")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet symbols must be distinct")

    @classmethod
    def from_cells(cls, cells: Iterable[str]) -> "Alphabet":
        return cls(tuple(dict.fromkeys(cells)))

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        return self.symbols.index(symbol)

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __contains__(self, symbol):
        return symbol in self.symbols


@dataclass(frozen=True)
class SymbolGrid:
    """Row-major grid of cipher symbols.

    Linear positions in reports are 1-indexed: position ``j`` is row
    ``(j-1) // cols``, column ``(j-1) % cols`` (both 0-indexed here).
    """

    rows: int
    cols: int
    cells: tuple[str, ...]
    comments: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid must have at least one row and column")
        if len(self.cells) != self.rows * self.cols:
            raise ValueError(
                f"{len(self.cells)} cells do not fill a {self.rows}x{self.cols} grid"
            )

    @classmethod
    def from_rows(cls, rows: Sequence[str], comments: Sequence[str] = ()) -> "SymbolGrid":
        if not rows:
            raise ValueError("no rows")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("rows have unequal lengths")
        return cls(len(rows), width, tuple("".join(rows)), tuple(comments))

    @classmethod
    def from_text(cls, text: str, cols: int | None = None) -> "SymbolGrid":
        """One-row grid from a string, or ``cols``-wide rows when given."""
        if cols is None:
            cols = len(text)
        if cols == 0 or len(text) % cols:
            raise ValueError(f"length {len(text)} is not a multiple of {cols}")
        return cls(len(text) // cols, cols, tuple(text))

    @property
    def n(self) -> int:
        return len(self.cells)

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet.from_cells(self.cells)

    @property
    def text(self) -> str:
        return "".join(self.cells)

    def row(self, r: int) -> str:
        return "".join(self.cells[r * self.cols:(r + 1) * self.cols])

    def row_strings(self) -> list[str]:
        return [self.row(r) for r in range(self.rows)]

    def at(self, r: int, c: int) -> str:
        return self.cells[r * self.cols + c]

    def subgrid(self, r0: int, r1: int, c0: int = 0, c1: int | None = None) -> "SymbolGrid":
        c1 = self.cols if c1 is None else c1
        rows = [self.row(r)[c0:c1] for r in range(r0, r1)]
        return SymbolGrid.from_rows(rows)

    def codes(self) -> np.ndarray:
        """Cells as small integers, numbered by order of first appearance."""
        lookup = {s: i for i, s in enumerate(self.alphabet)}
        return np.fromiter((lookup[s] for s in self.cells), dtype=np.int64, count=self.n)

    def reshape(self, rows: int, cols: int) -> "SymbolGrid":
        return SymbolGrid(rows, cols, self.cells)

    def __str__(self):
        return "\n".join(self.row_strings())


def parse_cipher(text: str) -> SymbolGrid:
    comments, rows = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.rstrip("\r\n")
        if is_comment(line):
            comments.append(line)
            continue
        if not line.strip():
            continue
        if any(ch.isspace() for ch in line):
            raise FormatError(f"line {lineno}: whitespace inside a cipher row")
        if rows and len(line) != len(rows[0][1]):
            raise FormatError(
                f"line {lineno}: row has {len(line)} symbols, expected {len(rows[0][1])}"
            )
        rows.append((lineno, line))
    if not rows:
        raise FormatError("no cipher rows found")
    return SymbolGrid.from_rows([r for _, r in rows], comments)


def serialize_cipher(grid: SymbolGrid) -> str:
    lines = list(grid.comments) + grid.row_strings()
    return "\n".join(lines) + "\n"


def load_cipher(path: str | Path) -> SymbolGrid:
    return parse_cipher(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class SubstitutionKey:
    """Symbol to plaintext letter map; several symbols may share a letter."""

    mapping: Mapping[str, str]
    letters: str = LETTERS

    def __post_init__(self):
        bad = {s: l for s, l in self.mapping.items() if l not in self.letters}
        if bad:
            raise ValueError(f"letters outside the plaintext alphabet: {bad}")
        object.__setattr__(self, "mapping", dict(self.mapping))

    @property
    def coverage(self) -> frozenset[str]:
        return frozenset(self.mapping)

    def get(self, symbol: str, default: str | None = None) -> str | None:
        return self.mapping.get(symbol, default)

    def __getitem__(self, symbol):
        return self.mapping[symbol]

    def __contains__(self, symbol):
        return symbol in self.mapping

    def __len__(self):
        return len(self.mapping)

    def homophones(self) -> dict[str, list[str]]:
        """Letter -> symbols, in key order."""
        table: dict[str, list[str]] = {}
        for s, l in self.mapping.items():
            table.setdefault(l, []).append(s)
        return table

    def hamming(self, other: "SubstitutionKey") -> int:
        syms = set(self.mapping) | set(other.mapping)
        return sum(self.mapping.get(s) != other.mapping.get(s) for s in syms)

    def updated(self, **changes: str) -> "SubstitutionKey":
        m = dict(self.mapping)
        m.update(changes)
        return SubstitutionKey(m, self.letters)


def parse_key(text: str) -> SubstitutionKey:
    mapping: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if is_comment(line) or not line.strip():
            continue
        if len(line) < 3 or line[1] != "=":
            raise FormatError(f"line {lineno}: expected SYMBOL=LETTER, got {line!r}")
        sym, letter = line[0], line[2:].strip().upper()
        if len(letter) != 1 or letter not in LETTERS:
            raise FormatError(f"line {lineno}: {letter!r} is not a letter A-Z")
        if sym in mapping and mapping[sym] != letter:
            raise FormatError(f"line {lineno}: symbol {sym!r} mapped twice")
        mapping[sym] = letter
    return SubstitutionKey(mapping)


def serialize_key(key: SubstitutionKey, comments: Sequence[str] = ()) -> str:
    lines = list(comments) + [f"{s}={l}" for s, l in key.mapping.items()]
    return "\n".join(lines) + "\n"


def load_key(path: str | Path) -> SubstitutionKey:
    return parse_key(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class Plaintext:
    """Letters only; word spacing is added at presentation time."""

    letters: str
    cols: int | None = None

    def __post_init__(self):
        if self.cols is not None and self.cols < 1:
            raise ValueError("cols must be positive")

    def __str__(self):
        return self.letters

    def __len__(self):
        return len(self.letters)

    def rows(self) -> list[str]:
        if not self.cols:
            return [self.letters]
        return [self.letters[i:i + self.cols] for i in range(0, len(self.letters), self.cols)]


def decrypt(grid: SymbolGrid, key: SubstitutionKey, unknown_marker: str = UNKNOWN) -> Plaintext:
    m = key.mapping
    return Plaintext("".join(m.get(s, unknown_marker) for s in grid.cells), grid.cols)


@dataclass(frozen=True)
class HomophoneTable:
    """Letter -> ordered homophone list, with a selection policy.

    ``cyclic`` uses the i-th occurrence of a letter's list[(i-1) mod len];
    ``random`` picks uniformly with a seeded generator.
    """

    table: Mapping[str, Sequence[str]]
    policy: str = "cyclic"

    def __post_init__(self):
        if self.policy not in ("cyclic", "random"):
            raise ValueError(f"unknown policy {self.policy!r}")
        seen: set[str] = set()
        for letter, syms in self.table.items():
            if not syms:
                raise ValueError(f"empty homophone list for {letter}")
            if seen & set(syms):
                raise ValueError("homophone lists must be disjoint")
            seen |= set(syms)
        object.__setattr__(self, "table", {k: tuple(v) for k, v in self.table.items()})

    def inverse_key(self) -> SubstitutionKey:
        return SubstitutionKey({s: l for l, syms in self.table.items() for s in syms})

    @property
    def symbol_count(self) -> int:
        return sum(len(v) for v in self.table.values())


def encrypt(pt: Plaintext | str, table: HomophoneTable, seed: int = 0,
            cols: int | None = None) -> SymbolGrid:
    letters = pt.letters if isinstance(pt, Plaintext) else pt
    if cols is None:
        cols = pt.cols if isinstance(pt, Plaintext) and pt.cols else len(letters)
    missing = sorted(set(letters) - set(table.table))
    if missing:
        raise KeyCoverageError(f"no homophones for {''.join(missing)}")
    rng = random.Random(seed)
    used: Counter[str] = Counter()
    out = []
    for ch in letters:
        syms = table.table[ch]
        if table.policy == "cyclic":
            out.append(syms[used[ch] % len(syms)])
        else:
            out.append(syms[rng.randrange(len(syms))])
        used[ch] += 1
    return SymbolGrid.from_text("".join(out), cols)
