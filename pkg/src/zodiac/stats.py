"""Measurements on cipher grids: periodic bigram repeats, shuffle baselines,
coincidence, row repeats, pivots, homophone cycling and clustering.

Period-p repeat totals follow the chain convention: the period-p chains
(cell 1, 1+p, 1+2p, ... then cell 2, 2+p, ...) are concatenated into one
sequence and every adjacent pair of that sequence is counted, including the
p-1 pairs where one chain meets the next. ``period_bigrams`` returns only the
n-p within-chain pairs.
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field, is_dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .cipher import SymbolGrid

_SHUFFLE_CHUNK = 20_000


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class BigramSet:
    period: int
    pairs: tuple[tuple[str, str], ...]

    def counts(self) -> Counter:
        return Counter(self.pairs)


@dataclass(frozen=True)
class RepeatReport:
    period: int
    total_repeats: int
    distinct_repeating: int
    top: tuple[tuple[str, int], ...] = ()
    junctions: bool = True


@dataclass(frozen=True)
class ShuffleBaseline:
    statistic: str
    period: int
    trials: int
    seed: int
    observed: float
    mean: float
    stddev: float
    z: float
    histogram: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class RowRepeatReport:
    per_row: tuple[int, ...]
    clean_rows: int
    clean_row_indices: tuple[int, ...]


@dataclass(frozen=True)
class Pivot:
    """One L: a corner plus two arms that read the same outward from it.

    ``orientation`` is two letters, horizontal then vertical direction of the
    arms (``LU`` = arm runs left and arm runs up, the backwards L).
    Cells are 1-based (row, col).
    """

    corner: tuple[int, int]
    orientation: str
    trigram: str
    horizontal: tuple[tuple[int, int], ...]
    vertical: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class PivotPattern:
    first: Pivot
    second: Pivot

    @property
    def orientation(self) -> str:
        return self.first.orientation


@dataclass(frozen=True)
class AbsenceReport:
    symbols: tuple[str, ...]
    rectangle: tuple[int, int, int, int]  # r0, c0, r1, c1 (1-based, inclusive)
    area: int
    baseline: ShuffleBaseline | None = None


# --- core counting ----------------------------------------------------------

def _check_period(n: int, p: int) -> None:
    if p < 1:
        raise PreconditionError(f"period must be positive, got {p}")
    if p > n // 2 and not (n == 1 and p == 1):
        raise PreconditionError(f"period {p} exceeds n/2 = {n / 2}")


def chain_order(n: int, p: int) -> np.ndarray:
    return np.concatenate([np.arange(i, n, p) for i in range(p)])


def adjacent_repeats(codes: np.ndarray) -> int:
    """Sum of c(b)-1 over distinct adjacent pairs of an integer sequence."""
    if codes.size < 2:
        return 0
    base = int(codes.max()) + 1
    pair = codes[:-1] * base + codes[1:]
    return int(pair.size - np.unique(pair).size)


def _batch_adjacent_repeats(mat: np.ndarray, base: int) -> np.ndarray:
    pair = mat[:, :-1].astype(np.int32) * base + mat[:, 1:]
    pair.sort(axis=1)
    distinct = 1 + np.count_nonzero(pair[:, 1:] != pair[:, :-1], axis=1)
    return (pair.shape[1] - distinct).astype(np.int64)


def period_bigrams(grid: SymbolGrid, p: int) -> BigramSet:
    """Pairs in the order of the period-p double loop: chain 1 first."""
    n = grid.n
    _check_period(n, p)
    c = grid.cells
    pairs = []
    for i in range(p):
        pairs.extend((c[j], c[j + p]) for j in range(i, n - p, p))
    return BigramSet(p, tuple(pairs))


def repeating_bigram_count(grid: SymbolGrid, p: int, junctions: bool = True,
                           top: int = 5) -> RepeatReport:
    n = grid.n
    _check_period(n, p)
    cells = grid.cells
    if junctions:
        seq = [cells[i] for i in chain_order(n, p)]
        pairs = list(zip(seq, seq[1:]))
    else:
        pairs = list(period_bigrams(grid, p).pairs)
    counts = Counter(pairs)
    total = sum(v - 1 for v in counts.values())
    reps = sorted(((a + b, v) for (a, b), v in counts.items() if v > 1),
                  key=lambda t: (-t[1], pairs.index((t[0][0], t[0][1]))))
    return RepeatReport(p, total, len(reps), tuple(reps[:top]), junctions)


def period_scan(grid: SymbolGrid, p_min: int, p_max: int,
                junctions: bool = True) -> list[RepeatReport]:
    if p_max < p_min:
        return []
    _check_period(grid.n, p_max)
    return [repeating_bigram_count(grid, p, junctions) for p in range(p_min, p_max + 1)]


def shuffle_baseline(grid: SymbolGrid, p: int = 1, trials: int = 100_000,
                     seed: int = 0, junctions: bool = True) -> ShuffleBaseline:
    """Monte Carlo distribution of the period-p total over uniform shuffles."""
    if trials < 2:
        raise PreconditionError("need at least 2 trials for a standard deviation")
    n = grid.n
    _check_period(n, p)
    codes = grid.codes().astype(np.int16)
    base = int(codes.max()) + 1
    observed = repeating_bigram_count(grid, p, junctions).total_repeats
    order = chain_order(n, p)
    rng = np.random.default_rng(seed)
    out = np.empty(trials, dtype=np.int64)
    for start in range(0, trials, _SHUFFLE_CHUNK):
        t = min(_SHUFFLE_CHUNK, trials - start)
        mat = rng.permuted(np.broadcast_to(codes, (t, n)), axis=1)
        if junctions:
            out[start:start + t] = _batch_adjacent_repeats(mat[:, order], base)
        else:
            out[start:start + t] = _batch_chain_repeats(mat, p, base)
    return _baseline("repeating_bigrams", p, trials, seed, observed, out)


def _batch_chain_repeats(mat: np.ndarray, p: int, base: int) -> np.ndarray:
    pair = mat[:, :-p].astype(np.int32) * base + mat[:, p:]
    pair.sort(axis=1)
    distinct = 1 + np.count_nonzero(pair[:, 1:] != pair[:, :-1], axis=1)
    return (pair.shape[1] - distinct).astype(np.int64)


def _baseline(name: str, p: int, trials: int, seed: int, observed: float,
              samples: np.ndarray) -> ShuffleBaseline:
    mean = float(samples.mean())
    sd = float(samples.std(ddof=1))
    z = (observed - mean) / sd if sd > 0 else math.nan
    vals, cnt = np.unique(samples, return_counts=True)
    hist = {str(v): int(c) for v, c in zip(vals.tolist(), cnt.tolist())}
    return ShuffleBaseline(name, p, trials, seed, float(observed), mean, sd, z, hist)


# --- simple ratios ----------------------------------------------------------

def index_of_coincidence(grid: SymbolGrid) -> float:
    n = grid.n
    if n < 2:
        raise PreconditionError("index of coincidence needs at least 2 cells")
    f = np.array(list(Counter(grid.cells).values()), dtype=np.int64)
    return float((f * (f - 1)).sum() / (n * (n - 1)))


def multiplicity(grid: SymbolGrid) -> float:
    return len(grid.alphabet) / grid.n


def row_repeat_analysis(grid: SymbolGrid) -> RowRepeatReport:
    per_row = tuple(len(r) - len(set(r)) for r in grid.row_strings())
    clean = tuple(i + 1 for i, v in enumerate(per_row) if v == 0)
    return RowRepeatReport(per_row, len(clean), clean)


def clean_row_baseline(grid: SymbolGrid, trials: int = 10_000, seed: int = 0) -> ShuffleBaseline:
    if trials < 2:
        raise PreconditionError("need at least 2 trials for a standard deviation")
    codes = grid.codes().astype(np.int16)
    rng = np.random.default_rng(seed)
    out = np.empty(trials, dtype=np.int64)
    for start in range(0, trials, _SHUFFLE_CHUNK):
        t = min(_SHUFFLE_CHUNK, trials - start)
        mat = rng.permuted(np.broadcast_to(codes, (t, grid.n)), axis=1)
        rows = np.sort(mat.reshape(t, grid.rows, grid.cols), axis=2)
        dup = np.any(rows[:, :, 1:] == rows[:, :, :-1], axis=2)
        out[start:start + t] = (~dup).sum(axis=1)
    return _baseline("clean_rows", 0, trials, seed, row_repeat_analysis(grid).clean_rows, out)


# --- pivots -----------------------------------------------------------------

ORIENTATIONS = ("LU", "LD", "RU", "RD")
BACKWARDS_L = ("LU",)


def _dirs(orientation: str) -> tuple[int, int]:
    return (-1 if orientation[0] == "L" else 1), (-1 if orientation[1] == "U" else 1)


def find_pivots(grid: SymbolGrid, orientations: Sequence[str] = ORIENTATIONS,
                arm: int = 3) -> list[Pivot]:
    """Corners whose horizontal and vertical arms read the same outward."""
    g = np.array(grid.cells, dtype=object).reshape(grid.rows, grid.cols)
    R, C = g.shape
    found = []
    for o in orientations:
        dx, dy = _dirs(o)
        for r in range(R):
            for c in range(C):
                hs = [(r, c + dx * k) for k in range(1, arm + 1)]
                vs = [(r + dy * k, c) for k in range(1, arm + 1)]
                if not all(0 <= y < R and 0 <= x < C for y, x in hs + vs):
                    continue
                if all(g[a] == g[b] for a, b in zip(hs, vs)):
                    found.append(Pivot(
                        (r + 1, c + 1), o, "".join(g[a] for a in hs),
                        tuple((y + 1, x + 1) for y, x in hs),
                        tuple((y + 1, x + 1) for y, x in vs)))
    return found


def pivot_search(grid: SymbolGrid, orientations: Sequence[str] = ORIENTATIONS,
                 arm: int = 3) -> list[PivotPattern]:
    """All pairs of same-orientation pivots (two L's that each repeat an
    arm trigram around a shared corner)."""
    if grid.rows < arm or grid.cols < arm:
        raise PreconditionError(f"grid must be at least {arm}x{arm}")
    pivots = find_pivots(grid, orientations, arm)
    return [PivotPattern(a, b) for a, b in combinations(pivots, 2)
            if a.orientation == b.orientation]


def _batch_pivot_counts(mat: np.ndarray, rows: int, cols: int,
                        orientations: Sequence[str], arm: int) -> np.ndarray:
    """Pivot pairs per shuffled grid, summed over orientations."""
    g = mat.reshape(-1, rows, cols)
    t = g.shape[0]
    total = np.zeros(t, dtype=np.int64)
    for o in orientations:
        dx, dy = _dirs(o)
        # corner ranges that keep both arms inside the grid
        r0, r1 = (arm, rows) if dy < 0 else (0, rows - arm)
        c0, c1 = (arm, cols) if dx < 0 else (0, cols - arm)
        ok = np.ones((t, r1 - r0, c1 - c0), dtype=bool)
        for k in range(1, arm + 1):
            h = g[:, r0:r1, c0 + dx * k:c1 + dx * k]
            v = g[:, r0 + dy * k:r1 + dy * k, c0:c1]
            ok &= h == v
        m = ok.reshape(t, -1).sum(axis=1)
        total += m * (m - 1) // 2
    return total


def pivot_shuffle_incidence(grid: SymbolGrid, trials: int, seed: int = 0,
                            orientations: Sequence[str] = ORIENTATIONS,
                            arm: int = 3) -> tuple[int, int]:
    """(shuffles containing at least one pivot pair, trials)."""
    codes = grid.codes().astype(np.int16)
    rng = np.random.default_rng(seed)
    hits = 0
    for start in range(0, trials, _SHUFFLE_CHUNK):
        t = min(_SHUFFLE_CHUNK, trials - start)
        mat = rng.permuted(np.broadcast_to(codes, (t, grid.n)), axis=1)
        hits += int(np.count_nonzero(
            _batch_pivot_counts(mat, grid.rows, grid.cols, orientations, arm)))
    return hits, trials


# --- homophone cycles -------------------------------------------------------

def cycle_score(grid: SymbolGrid, a: str, b: str) -> float:
    """Longest alternating subsequence of the a/b occurrence sequence over
    the number of a and b occurrences."""
    if a == b:
        raise PreconditionError("symbols must differ")
    seq = [s for s in grid.cells if s == a or s == b]
    if a not in seq or b not in seq:
        raise PreconditionError(f"{a if a not in seq else b!r} does not occur in the grid")
    runs = 1 + sum(x != y for x, y in zip(seq, seq[1:]))
    return runs / len(seq)


def _cycle_matrix(codes: np.ndarray, syms: np.ndarray) -> np.ndarray:
    """Scores for all pairs among ``syms`` on one code sequence."""
    k = syms.size
    out = np.zeros((k, k))
    seqs = [np.flatnonzero(codes == s) for s in syms]
    for i in range(k):
        for j in range(i + 1, k):
            pos = np.concatenate([seqs[i], seqs[j]])
            lab = np.concatenate([np.zeros(seqs[i].size), np.ones(seqs[j].size)])
            lab = lab[np.argsort(pos, kind="stable")]
            out[i, j] = (1 + np.count_nonzero(lab[1:] != lab[:-1])) / lab.size
    return out


def top_cycle_pairs(grid: SymbolGrid, k: int = 10, min_count: int = 5
                    ) -> list[tuple[str, str, float]]:
    """Highest-scoring symbol pairs among symbols seen at least ``min_count`` times."""
    counts = Counter(grid.cells)
    syms = [s for s in grid.alphabet if counts[s] >= min_count]
    scored = [(a, b, cycle_score(grid, a, b)) for a, b in combinations(syms, 2)]
    scored.sort(key=lambda t: -t[2])
    return scored[:k]


def cycle_baseline(grid: SymbolGrid, k: int = 10, min_count: int = 5,
                   trials: int = 200, seed: int = 0) -> ShuffleBaseline:
    """Mean of the top-k pair scores, against shuffles of the same cells."""
    if trials < 2:
        raise PreconditionError("need at least 2 trials for a standard deviation")
    codes = grid.codes()
    counts = np.bincount(codes)
    syms = np.flatnonzero(counts >= min_count)

    def stat(seq):
        m = _cycle_matrix(seq, syms)
        vals = np.sort(m[np.triu_indices(syms.size, 1)])[::-1]
        return float(vals[:k].mean())

    rng = np.random.default_rng(seed)
    samples = np.array([stat(rng.permutation(codes)) for _ in range(trials)])
    return _baseline("top_cycle_mean", 0, trials, seed, stat(codes), samples)


# --- n-gram repeats ---------------------------------------------------------

def repeating_ngrams(grid: SymbolGrid, k: int) -> list[tuple[str, tuple[int, ...]]]:
    """Contiguous k-symbol strings seen at least twice, with 1-based starts."""
    n = grid.n
    if k < 1 or k > n:
        raise PreconditionError(f"k must lie in 1..{n}")
    text = grid.text
    where: dict[str, list[int]] = {}
    for j in range(n - k + 1):
        where.setdefault(text[j:j + k], []).append(j + 1)
    return [(g, tuple(p)) for g, p in where.items() if len(p) > 1]


def same_column_repeats(grid: SymbolGrid, k: int = 3) -> list[tuple[str, tuple[int, ...]]]:
    """Repeats that sit in the same columns on different rows, within rows."""
    out = []
    for g, pos in repeating_ngrams(grid, k):
        spots = [((p - 1) // grid.cols, (p - 1) % grid.cols) for p in pos]
        inrow = [s for s in spots if s[1] + k <= grid.cols]
        by_col: dict[int, set[int]] = {}
        for r, c in inrow:
            by_col.setdefault(c, set()).add(r)
        for c, rows in by_col.items():
            if len(rows) > 1:
                out.append((g, tuple(r * grid.cols + c + 1 for r in sorted(rows))))
    return out


# --- clustering -------------------------------------------------------------

def _largest_empty_rectangle(mask: np.ndarray) -> tuple[int, tuple[int, int, int, int]]:
    """Largest all-False axis-aligned rectangle; returns (area, r0, c0, r1, c1)."""
    R, C = mask.shape
    heights = np.zeros(C, dtype=int)
    best = (0, (0, 0, -1, -1))
    for r in range(R):
        heights = np.where(mask[r], 0, heights + 1)
        stack: list[int] = []
        for c in range(C + 1):
            h = heights[c] if c < C else 0
            while stack and heights[stack[-1]] >= h:
                top = stack.pop()
                left = stack[-1] + 1 if stack else 0
                area = int(heights[top]) * (c - left)
                if area > best[0]:
                    best = (area, (r - int(heights[top]) + 1, left, r, c - 1))
            stack.append(c)
    return best


def absence_scan(grid: SymbolGrid, symbols: Iterable[str], trials: int = 2000,
                 seed: int = 0) -> AbsenceReport:
    """Largest rectangle free of every symbol in ``symbols``, with a shuffle
    z-score for its area."""
    syms = tuple(dict.fromkeys(symbols))
    missing = [s for s in syms if s not in grid.cells]
    if missing:
        raise PreconditionError(f"symbols not in grid: {''.join(missing)}")
    cells = np.array(grid.cells, dtype=object)
    hit = np.isin(cells, np.array(syms, dtype=object))
    area, (r0, c0, r1, c1) = _largest_empty_rectangle(hit.reshape(grid.rows, grid.cols))
    baseline = None
    if trials >= 2:
        rng = np.random.default_rng(seed)
        samples = np.array([
            _largest_empty_rectangle(rng.permutation(hit).reshape(grid.rows, grid.cols))[0]
            for _ in range(trials)])
        baseline = _baseline("largest_absence", 0, trials, seed, area, samples)
    return AbsenceReport(syms, (r0 + 1, c0 + 1, r1 + 1, c1 + 1), area, baseline)


# --- output -----------------------------------------------------------------

def _plain(obj):
    if is_dataclass(obj):
        return {k: _plain(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def to_json(obj, indent: int | None = 2) -> str:
    return json.dumps(_plain(obj), indent=indent, sort_keys=True)


def scan_to_csv(reports: Sequence[RepeatReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["period", "total_repeats", "distinct_repeating"])
    for r in reports:
        w.writerow([r.period, r.total_repeats, r.distinct_repeating])
    return buf.getvalue()
