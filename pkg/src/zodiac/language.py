"""Letter n-gram models, plaintext scoring, entropy and word segmentation."""
from __future__ import annotations

import gzip
import io
import math
import re
import struct
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .cipher import Plaintext
from . import data

MIN_ORDER, MAX_ORDER = 2, 6
DENSE_MAX_ORDER = 5  # 26**5 float32 is 47 MB; order 6 is stored sparse
DEFAULT_ORDER = 5
DEFAULT_ALPHA = 0.5
CACHE_MAGIC = b"ZNGRAM"
CACHE_VERSION = 1

_NON_LETTERS = re.compile(r"[^A-Z]+")


class BuildError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


def normalize(text: str) -> str:
    return _NON_LETTERS.sub("", text.upper())


def _letters_to_codes(text: str) -> np.ndarray:
    return np.frombuffer(text.encode("ascii"), dtype=np.uint8).astype(np.int64) - 65


def window_codes(codes: np.ndarray, k: int) -> np.ndarray:
    """Integer id of every length-k window (base 26, first letter most significant)."""
    if codes.size < k:
        return np.empty(0, dtype=np.int64)
    out = np.zeros(codes.size - k + 1, dtype=np.int64)
    for i in range(k):
        out = out * 26 + codes[i:codes.size - k + 1 + i]
    return out


def decode_gram(code: int, k: int) -> str:
    chars = []
    for _ in range(k):
        code, r = divmod(int(code), 26)
        chars.append(chr(65 + r))
    return "".join(reversed(chars))


def encode_gram(gram: str) -> int:
    v = 0
    for ch in gram:
        v = v * 26 + (ord(ch) - 65)
    return v


@dataclass(frozen=True, eq=False)
class NGramModel:
    """Order-k log10 probabilities over A-Z.

    ``keys``/``counts`` hold the observed k-grams (sorted ids). ``table`` is a
    dense lookup for k <= 5; for k = 6 lookups binary-search ``keys``.
    """

    k: int
    keys: np.ndarray
    counts: np.ndarray
    logp: np.ndarray
    floor: float
    provenance: str = ""
    alpha: float = DEFAULT_ALPHA
    table: np.ndarray | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.keys.size

    def dense(self) -> bool:
        return self.table is not None

    def logprob(self, gram: str) -> float:
        if len(gram) != self.k or not gram.isalpha():
            raise ValueError(f"expected a {self.k}-letter gram, got {gram!r}")
        return float(self.lookup(np.array([encode_gram(gram.upper())]))[0])

    def lookup(self, ids: np.ndarray) -> np.ndarray:
        if self.table is not None:
            return self.table[ids].astype(np.float64)
        pos = np.searchsorted(self.keys, ids)
        pos = np.minimum(pos, self.keys.size - 1)
        hit = self.keys[pos] == ids
        return np.where(hit, self.logp[pos], self.floor)

    def top(self, count: int = 10) -> list[tuple[str, float]]:
        idx = np.argsort(-self.logp, kind="stable")[:count]
        return [(decode_gram(self.keys[i], self.k), float(self.logp[i])) for i in idx]

    def rank(self, gram: str) -> int:
        """1-based rank of ``gram`` among stored grams (ties share the best rank)."""
        lp = self.logprob(gram)
        return int(np.count_nonzero(self.logp > lp)) + 1

    def conditional(self, order: int | None = None) -> np.ndarray | None:
        """Dense log10 P(last letter | previous order-1) with Witten-Bell
        interpolation down to a unigram, indexed by order-gram id.

        Lower orders are marginals of the k-gram counts, so unseen k-grams
        still rank by their shorter contexts. None for sparse models.
        """
        order = self.k if order is None else order
        if not 1 <= order <= self.k:
            raise ValueError(f"order must be in 1..{self.k}")
        if self.table is None:
            return None
        cache = self.__dict__.setdefault("_conditional", {})
        if order in cache:
            return cache[order]
        k = self.k
        c = np.zeros(26 ** k)
        c[self.keys] = self.counts
        margins = [c.reshape((26,) * k)]
        for _ in range(k - 1):
            margins.append(margins[-1].sum(axis=0))
        uni = margins[-1]
        prob = (uni + 1.0) / (uni.sum() + 26.0)
        cache[1] = np.log10(prob).astype(np.float32)
        for j in range(2, k + 1):
            cj = margins[k - j]
            seen = cj.sum(axis=-1, keepdims=True)
            types = np.count_nonzero(cj, axis=-1)[..., None]
            lower = np.broadcast_to(prob, cj.shape)
            with np.errstate(invalid="ignore", divide="ignore"):
                prob = np.where(seen > 0, (cj + types * lower) / (seen + types), lower)
            cache[j] = np.log10(prob).reshape(-1).astype(np.float32)
        return cache[order]

    def __eq__(self, other):
        return (isinstance(other, NGramModel) and self.k == other.k
                and np.array_equal(self.keys, other.keys)
                and np.array_equal(self.counts, other.counts)
                and self.floor == other.floor)

    __hash__ = None


def _from_counts(k: int, keys: np.ndarray, counts: np.ndarray, provenance: str,
                 alpha: float) -> NGramModel:
    if keys.size == 0:
        raise BuildError("corpus has no windows of the requested order")
    total = counts.sum() + alpha * keys.size
    logp = np.log10((counts + alpha) / total)
    floor = float(logp.min()) - 2.0
    table = None
    if k <= DENSE_MAX_ORDER:
        table = np.full(26 ** k, floor, dtype=np.float32)
        table[keys] = logp
    return NGramModel(k, keys, counts, logp, floor, provenance, alpha, table)


def build_model(corpus: Iterable[str] | str, k: int = DEFAULT_ORDER,
                alpha: float = DEFAULT_ALPHA, provenance: str = "") -> NGramModel:
    """Count k-letter windows within each corpus line (or string) and convert
    to log10 probabilities. Unseen grams score ``min - 2``."""
    if not MIN_ORDER <= k <= MAX_ORDER:
        raise ValueError(f"order must be in {MIN_ORDER}..{MAX_ORDER}")
    if isinstance(corpus, str):
        corpus = [corpus]
    chunks = []
    for line in corpus:
        s = normalize(line)
        if len(s) >= k:
            chunks.append(window_codes(_letters_to_codes(s), k))
    if not chunks:
        raise BuildError("corpus is empty after normalization")
    keys, counts = np.unique(np.concatenate(chunks), return_counts=True)
    return _from_counts(k, keys, counts.astype(np.int64), provenance, alpha)


def corpus_lines(name: str = "english_train.txt.gz", data_dir=None) -> list[str]:
    with gzip.open(data.path(name, data_dir), "rt", encoding="ascii") as fh:
        return fh.read().splitlines()


@lru_cache(maxsize=8)
def english_model(k: int = DEFAULT_ORDER, alpha: float = DEFAULT_ALPHA) -> NGramModel:
    """Model built from the bundled training corpus (cached per process)."""
    return build_model(corpus_lines(), k, alpha, provenance="bundled:english_train.txt.gz")


# --- files ------------------------------------------------------------------

def write_counts(model: NGramModel, path: str | Path) -> None:
    lines = (f"{decode_gram(g, model.k)}\t{c}" for g, c in zip(model.keys, model.counts))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_counts(path: str | Path, alpha: float = DEFAULT_ALPHA) -> NGramModel:
    k = None
    keys, counts = [], []
    for lineno, line in enumerate(Path(path).read_text(encoding="ascii").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        gram, _, cnt = line.partition("\t")
        if not gram.isalpha() or not gram.isupper() or not cnt.strip().isdigit():
            raise BuildError(f"line {lineno}: expected KGRAM<TAB>count")
        if k is None:
            k = len(gram)
        elif len(gram) != k:
            raise BuildError(f"line {lineno}: mixed gram lengths")
        keys.append(encode_gram(gram))
        counts.append(int(cnt))
    if k is None:
        raise BuildError("no n-grams in file")
    order = np.argsort(keys)
    return _from_counts(k, np.array(keys, dtype=np.int64)[order],
                        np.array(counts, dtype=np.int64)[order], f"file:{Path(path).name}", alpha)


def save_cache(model: NGramModel, path: str | Path) -> None:
    """Binary form: magic, version byte, order byte, alpha, count, keys, counts."""
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC + struct.pack("<BBdQ", CACHE_VERSION, model.k, model.alpha, model.size))
        fh.write(model.keys.astype("<u8").tobytes())
        fh.write(model.counts.astype("<u8").tobytes())
        prov = model.provenance.encode("utf-8")
        fh.write(struct.pack("<I", len(prov)) + prov)


def load_cache(path: str | Path) -> NGramModel:
    raw = Path(path).read_bytes()
    head = len(CACHE_MAGIC)
    if raw[:head] != CACHE_MAGIC:
        raise BuildError("not an n-gram cache file")
    version, k, alpha, size = struct.unpack_from("<BBdQ", raw, head)
    if version != CACHE_VERSION:
        raise BuildError(f"unsupported cache version {version}")
    off = head + struct.calcsize("<BBdQ")
    keys = np.frombuffer(raw, "<u8", size, off).astype(np.int64)
    counts = np.frombuffer(raw, "<u8", size, off + 8 * size).astype(np.int64)
    off += 16 * size
    (plen,) = struct.unpack_from("<I", raw, off)
    prov = raw[off + 4:off + 4 + plen].decode("utf-8")
    return _from_counts(k, keys, counts, prov, alpha)


def load_model(path: str | Path) -> NGramModel:
    with open(path, "rb") as fh:
        magic = fh.read(len(CACHE_MAGIC))
    return load_cache(path) if magic == CACHE_MAGIC else read_counts(path)


# --- scoring ----------------------------------------------------------------

def _text(pt) -> str:
    return pt.letters if isinstance(pt, Plaintext) else str(pt)


def score(pt: Plaintext | str, model: NGramModel, mode: str = "linear",
          normalized: bool = False) -> float:
    """Sum of window log-probs; ``per-row`` keeps windows inside rows.

    With ``normalized`` the sum is divided by the number of windows.
    """
    if mode == "linear":
        rows = [_text(pt)]
    elif mode in ("per-row", "per_row"):
        rows = pt.rows() if isinstance(pt, Plaintext) else [str(pt)]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    total, windows = 0.0, 0
    for row in rows:
        if len(row) < model.k:
            raise PreconditionError(f"text of length {len(row)} is shorter than order {model.k}")
        if not row.isalpha() or not row.isupper():
            raise PreconditionError("score expects uppercase letters only")
        ids = window_codes(_letters_to_codes(row), model.k)
        total += float(model.lookup(ids).sum())
        windows += ids.size
    return total / windows if normalized else total


def letter_entropy(pt: Plaintext | str) -> float:
    s = _text(pt)
    if not s:
        raise PreconditionError("entropy of empty text")
    n = len(s)
    return float(-sum(c / n * math.log2(c / n) for c in Counter(s).values()))


# --- words ------------------------------------------------------------------

@dataclass(frozen=True)
class WordModel:
    """Words with log10 unigram probabilities."""

    logp: dict
    max_len: int
    unknown_base: float = -8.0
    unknown_per_letter: float = -2.5

    def __post_init__(self):
        if any(not w or not w.isupper() for w in self.logp):
            raise ValueError("words must be non-empty uppercase strings")

    def with_words(self, words: Iterable[str], logp: float | None = None) -> "WordModel":
        """Copy with extra words; default weight is the median known word."""
        lp = dict(self.logp)
        weight = logp if logp is not None else float(np.median(list(lp.values())))
        for w in words:
            w = normalize(w)
            if w:
                lp[w] = max(lp.get(w, -math.inf), weight)
        return WordModel(lp, max(self.max_len, max(map(len, lp))), self.unknown_base,
                         self.unknown_per_letter)


def word_model_from_lines(lines: Iterable[str], default_zipf: float = 3.0) -> WordModel:
    """Lines are ``WORD`` or ``WORD<TAB>zipf`` (log10 per billion words)."""
    lp = {}
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        word, _, z = line.partition("\t")
        w = normalize(word)
        if not w:
            continue
        zipf = float(z) if z else default_zipf
        lp[w] = max(lp.get(w, -math.inf), zipf - 9.0)
    if not lp:
        raise BuildError("empty word list")
    return WordModel(lp, max(map(len, lp)))


@lru_cache(maxsize=1)
def english_words() -> WordModel:
    with gzip.open(data.path("english_words.tsv.gz"), "rt", encoding="ascii") as fh:
        return word_model_from_lines(fh)


def load_words(path: str | Path) -> WordModel:
    return word_model_from_lines(Path(path).read_text(encoding="utf-8").splitlines())


def segment_words(pt: Plaintext | str, words: WordModel | None = None) -> str:
    """Most probable split into known words; unknown stretches stay unspaced."""
    s = _text(pt)
    if not s:
        return ""
    wm = words or english_words()
    n = len(s)
    best = [0.0] + [-math.inf] * n
    back = [0] * (n + 1)
    unk_max = 24
    for j in range(1, n + 1):
        for i in range(max(0, j - max(wm.max_len, unk_max)), j):
            piece = s[i:j]
            lp = wm.logp.get(piece)
            if lp is None:
                if j - i > unk_max:
                    continue
                lp = wm.unknown_base + wm.unknown_per_letter * (j - i)
            cand = best[i] + lp
            if cand > best[j]:
                best[j], back[j] = cand, i
    pieces = []
    j = n
    while j > 0:
        pieces.append(s[back[j]:j])
        j = back[j]
    return " ".join(reversed(pieces))
