"""Zodiac-like homophonic test ciphers with ground truth."""
from __future__ import annotations

import gzip
import json
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Mapping

import numpy as np

from . import data
from .cipher import (HomophoneTable, KeyCoverageError, Plaintext, SubstitutionKey, SymbolGrid,
                     encrypt, serialize_cipher, serialize_key)
from .language import normalize

# 63 printable, shell-friendly symbols for generated ciphers
SYMBOLS = ("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789"
           "!@$%^&*()-+=<>?/|~:;[]{}")


@lru_cache(maxsize=2)
def heldout_text(name: str = "english_heldout.txt.gz") -> str:
    with gzip.open(data.path(name), "rt", encoding="ascii") as fh:
        return normalize(fh.read())


def sample_plaintext(corpus: str | None, length: int, seed: int) -> Plaintext:
    """Contiguous excerpt of the normalized corpus at a seeded offset."""
    text = heldout_text() if corpus is None else normalize(corpus)
    if length == 0:
        return Plaintext("")
    if len(text) < length:
        raise ValueError(f"corpus has {len(text)} letters, need {length}")
    start = int(np.random.default_rng(seed).integers(0, len(text) - length + 1))
    return Plaintext(text[start:start + length])


def largest_remainder(weights: Mapping[str, float], total: int, minimum: int = 1) -> dict[str, int]:
    """Integer allocation of ``total`` proportional to ``weights``, each at least ``minimum``."""
    keys = [k for k, w in weights.items() if w > 0]
    if minimum * len(keys) > total:
        raise ValueError(f"{len(keys)} letters cannot each get {minimum} of {total} symbols")
    w = np.array([weights[k] for k in keys], dtype=float)
    spare = total - minimum * len(keys)
    quota = w / w.sum() * spare
    base = np.floor(quota).astype(int)
    rem = spare - base.sum()
    # ties broken by key order so the allocation is deterministic
    order = sorted(range(len(keys)), key=lambda i: (-(quota[i] - base[i]), keys[i]))
    for i in order[:rem]:
        base[i] += 1
    return {k: int(b) + minimum for k, b in zip(keys, base)}


def proportional_allocation(pt: Plaintext | str, budget: int = 63) -> dict[str, int]:
    counts = Counter(str(pt))
    return largest_remainder(counts, min(budget, len(str(pt))) if counts else 0)


# total slot/letter mismatch tolerated before rebalancing, as a fraction of n;
# the greedy layout favours repeats, so it is only corrected as far as needed
PROFILE_SLACK = 0.06


def _profile_targets(counts: Counter, reference: list[int], n: int,
                     slack: float = PROFILE_SLACK) -> dict[str, list[int]]:
    """Split each letter's count over homophones so the sorted symbol profile
    follows ``reference`` (scaled to length n)."""
    ref = np.array(sorted(reference, reverse=True), dtype=float)
    ref = ref * n / ref.sum()
    letters = sorted(counts, key=lambda l: (-counts[l], l))
    if len(ref) < len(letters):
        raise ValueError("reference has fewer symbols than the plaintext has letters")
    deficit = {l: float(counts[l]) for l in letters}
    slots: dict[str, list[float]] = {l: [] for l in letters}
    # largest letters take the largest slots first so every letter gets one
    for l, r in zip(letters, ref):
        slots[l].append(r)
        deficit[l] -= r
    for r in ref[len(letters):]:
        l = max(letters, key=lambda x: (deficit[x], -letters.index(x)))
        slots[l].append(r)
        deficit[l] -= r
    _rebalance(slots, deficit, slack * n)
    out = {}
    for l in letters:
        s = slots[l]
        k = min(len(s), counts[l])
        alloc = largest_remainder({str(i): v for i, v in enumerate(s[:k])}, counts[l], 1)
        out[l] = [alloc[str(i)] for i in range(k)]
    return out


def _rebalance(slots: dict[str, list[float]], deficit: dict[str, float],
               budget: float = 0.0) -> None:
    """Move or swap slots between letters while that shrinks the total
    absolute deficit, stopping once it is within ``budget``; every letter
    keeps at least one slot."""
    letters = list(slots)
    improved = True
    while improved and sum(abs(v) for v in deficit.values()) > budget:
        improved = False
        for a in letters:
            for b in letters:
                if a == b:
                    continue
                base = abs(deficit[a]) + abs(deficit[b])
                for i, x in enumerate(slots[a]):
                    if len(slots[a]) > 1 and abs(deficit[a] + x) + abs(deficit[b] - x) < base - 1e-9:
                        slots[b].append(slots[a].pop(i))
                        deficit[a] += x
                        deficit[b] -= x
                        improved = True
                        break
                    for j, y in enumerate(slots[b]):
                        d = x - y
                        if abs(deficit[a] + d) + abs(deficit[b] - d) < base - 1e-9:
                            slots[a][i], slots[b][j] = y, x
                            deficit[a] += d
                            deficit[b] -= d
                            improved = True
                            break
                    if improved:
                        break
                if improved:
                    break
            if improved:
                break


@dataclass(frozen=True)
class GeneratorSpec:
    length: int = 340
    cols: int = 17
    budget: int = 63
    allocation: Mapping[str, int] | None = None
    reference: SymbolGrid | None = None
    policy: str = "cyclic"
    plaintext: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.policy not in ("cyclic", "random"):
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.length < 0:
            raise ValueError("length must be >= 0")
        if self.plaintext is not None and len(normalize(self.plaintext)) < self.length:
            raise ValueError("plaintext is shorter than the target length")


def _symbols_for(sizes: Mapping[str, int], rng: np.random.Generator) -> dict[str, list[str]]:
    need = sum(sizes.values())
    if need > len(SYMBOLS):
        raise ValueError(f"{need} homophones requested, only {len(SYMBOLS)} symbols available")
    pool = list(rng.permutation(list(SYMBOLS[:max(need, 1)])))
    table, i = {}, 0
    for letter in sorted(sizes):
        table[letter] = pool[i:i + sizes[letter]]
        i += sizes[letter]
    return table


def _weighted_stream(targets: list[int], policy: str, rng: np.random.Generator) -> list[int]:
    """Order in which a letter's homophones are used, with exact counts."""
    if policy == "random":
        seq = np.repeat(np.arange(len(targets)), targets)
        return list(rng.permutation(seq))
    # smooth weighted round robin: each step pick the symbol furthest behind
    total = sum(targets)
    credit = [0.0] * len(targets)
    out = []
    for _ in range(total):
        for i, t in enumerate(targets):
            credit[i] += t
        j = max(range(len(targets)), key=lambda i: (credit[i], -i))
        credit[j] -= total
        out.append(j)
    return out


def profile_distance(grid: SymbolGrid, reference: SymbolGrid) -> int:
    """L1 distance between the sorted symbol-frequency vectors (zero padded)."""
    a = sorted(Counter(grid.cells).values(), reverse=True)
    b = sorted(Counter(reference.cells).values(), reverse=True)
    size = max(len(a), len(b))
    a += [0] * (size - len(a))
    b += [0] * (size - len(b))
    return sum(abs(x - y) for x, y in zip(a, b))


def generate(spec: GeneratorSpec) -> tuple[SymbolGrid, SubstitutionKey, Plaintext]:
    rng = np.random.default_rng(spec.seed)
    if spec.plaintext is not None:
        pt = Plaintext(normalize(spec.plaintext)[:spec.length])
    else:
        pt = sample_plaintext(None, spec.length, int(rng.integers(2**63)))
    letters = pt.letters
    cols = spec.cols if spec.length % spec.cols == 0 else max(spec.length, 1)
    if spec.reference is not None:
        counts = Counter(letters)
        ref_counts = list(Counter(spec.reference.cells).values())
        targets = _profile_targets(counts, ref_counts, len(letters))
        symtab = _symbols_for({l: len(t) for l, t in targets.items()}, rng)
        streams = {l: iter(_weighted_stream(targets[l], spec.policy, rng)) for l in targets}
        out = [symtab[ch][next(streams[ch])] for ch in letters]
        grid = SymbolGrid.from_text("".join(out), cols) if out else SymbolGrid(1, 1, ("?",))
        key = HomophoneTable(symtab).inverse_key()
        return grid, key, Plaintext(letters, cols)
    sizes = dict(spec.allocation) if spec.allocation is not None else \
        proportional_allocation(pt, spec.budget)
    missing = sorted(set(letters) - {l for l, k in sizes.items() if k > 0})
    if missing:
        raise KeyCoverageError(f"allocation has no homophones for {''.join(missing)}")
    table = HomophoneTable(_symbols_for({l: k for l, k in sizes.items() if k > 0}, rng),
                           spec.policy)
    grid = encrypt(pt, table, seed=int(rng.integers(2**63)), cols=cols)
    return grid, table.inverse_key(), Plaintext(letters, cols)


def suite_spec(index: int, seed: int, reference: SymbolGrid | None = None,
               policy: str = "cyclic", length: int = 340) -> GeneratorSpec:
    """Spec for the index-th cipher of a suite; streams derive from (seed, index)."""
    ss = np.random.SeedSequence([seed & 0xFFFFFFFF, index])
    sub = int(ss.generate_state(1, np.uint64)[0])
    return GeneratorSpec(length=length, reference=reference, policy=policy, seed=sub)


def generate_suite(count: int, seed: int, reference: SymbolGrid | None = None,
                   policy: str = "cyclic", length: int = 340):
    for i in range(count):
        yield generate(suite_spec(i, seed, reference, policy, length))


def write_suite(outdir: str | Path, count: int, seed: int, reference: SymbolGrid | None = None,
                policy: str = "cyclic", length: int = 340) -> Path:
    """Write ciphers, keys and plaintexts plus a JSON-lines manifest."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = out / "manifest.jsonl"
    lines = []
    for i, (grid, key, pt) in enumerate(generate_suite(count, seed, reference, policy, length)):
        stem = f"cipher_{i:04d}"
        (out / f"{stem}.cipher").write_text(serialize_cipher(grid), encoding="utf-8")
        (out / f"{stem}.key").write_text(serialize_key(key), encoding="utf-8")
        (out / f"{stem}.txt").write_text(pt.letters + "\n", encoding="ascii")
        lines.append(json.dumps({"index": i, "grid": f"{stem}.cipher", "key": f"{stem}.key",
                                 "plaintext": f"{stem}.txt", "length": grid.n,
                                 "symbols": len(grid.alphabet)}, sort_keys=True))
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest
