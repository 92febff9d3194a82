"""Simulated annealing over homophonic substitution keys.

Objective: mean log10 n-gram probability per scored window plus
``entropy_weight`` times the plaintext letter entropy in bits. A move remaps
one free symbol to a different letter; only windows touching that symbol's
cells are rescored.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numba
import numpy as np

from .cipher import (LETTERS, FormatError, Plaintext, SubstitutionKey, SymbolGrid,
                     decrypt, is_comment)
from .language import NGramModel, letter_entropy, score as ngram_score

DEFAULT_ENTROPY_WEIGHT = 0.25
# final temperature is the calibrated start divided by this
COOLING_RATIO = 20.0
# the fine stage restarts at the calibrated temperature divided by this
REHEAT_DIVISOR = 5.0


class CribConflictError(ValueError):
    pass


class NoMoveError(ValueError):
    pass


@dataclass(frozen=True)
class Crib:
    start: int  # 1-based position in the grid's reading order
    text: str

    def __post_init__(self):
        if self.start < 1:
            raise ValueError("crib start is 1-based")
        if not self.text or any(ch not in LETTERS for ch in self.text):
            raise ValueError(f"crib text must be letters A-Z: {self.text!r}")


def parse_cribs(text: str) -> list[Crib]:
    cribs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or is_comment(line):
            continue
        pos, sep, word = line.partition("\t")
        if not sep or not pos.strip().isdigit():
            raise FormatError(f"line {lineno}: expected position<TAB>TEXT")
        try:
            cribs.append(Crib(int(pos), word.strip().upper()))
        except ValueError as e:
            raise FormatError(f"line {lineno}: {e}") from None
    return cribs


def load_cribs(path: str | Path) -> list[Crib]:
    return parse_cribs(Path(path).read_text(encoding="utf-8"))


def derive_constraints(grid: SymbolGrid, cribs: Sequence[Crib]) -> SubstitutionKey:
    """Partial key forced by the cribs; conflicting cribs raise."""
    forced: dict[str, tuple[str, int]] = {}
    for crib in cribs:
        end = crib.start + len(crib.text) - 1
        if end > grid.n:
            raise ValueError(f"crib {crib.text!r} at {crib.start} runs past position {grid.n}")
        for off, letter in enumerate(crib.text):
            pos = crib.start + off
            sym = grid.cells[pos - 1]
            if sym in forced and forced[sym][0] != letter:
                prev_letter, prev_pos = forced[sym]
                raise CribConflictError(
                    f"symbol {sym!r} forced to {prev_letter} at position {prev_pos} "
                    f"and to {letter} at position {pos}")
            forced.setdefault(sym, (letter, pos))
    return SubstitutionKey({s: l for s, (l, _) in forced.items()})


def determined_positions(grid: SymbolGrid, partial: SubstitutionKey) -> int:
    return sum(1 for s in grid.cells if s in partial)


@dataclass(frozen=True)
class SolverConfig:
    order: int = 5
    entropy_weight: float = DEFAULT_ENTROPY_WEIGHT
    iterations: int = 4_000_000
    restarts: int = 1
    initial_temperature: float | None = None  # None: calibrate to ~50% acceptance
    decay: float | None = None  # None: cool to initial/COOLING_RATIO over the run
    seed: int = 0
    cribs: tuple[Crib, ...] = ()
    mode: str = "linear"
    jobs: int = 1
    polish: bool = True  # greedy zero-temperature pass after annealing
    coarse_order: int | None = 3  # lower-order first stage; None runs one stage
    coarse_share: float = 0.85  # fraction of iterations spent in the coarse stage

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.decay is not None and not 0 < self.decay < 1:
            raise ValueError("decay must lie in (0, 1)")
        if self.entropy_weight < 0:
            raise ValueError("entropy weight must be >= 0")
        if not 0 <= self.coarse_share < 1:
            raise ValueError("coarse_share must lie in [0, 1)")
        if self.mode not in ("linear", "per-row"):
            raise ValueError(f"unknown scoring mode {self.mode!r}")
        object.__setattr__(self, "cribs", tuple(self.cribs))

    def snapshot(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "cribs"}
        d["cribs"] = [[c.start, c.text] for c in self.cribs]
        return d


@dataclass(frozen=True)
class CandidateSolution:
    key: SubstitutionKey
    plaintext: Plaintext
    score: float
    ngram: float
    entropy: float
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "plan": self.provenance.get("plan"),
            "score": self.score,
            "ngram": self.ngram,
            "entropy": self.entropy,
            "plaintext": self.plaintext.letters,
            "key": "".join(f"{s}={l};" for s, l in self.key.mapping.items()),
            "seed": self.provenance.get("seed"),
            "restart": self.provenance.get("restart"),
        }


# --- objective (pure Python, used for checks and reporting) ---------------

def _valid_windows(n: int, k: int, cols: int | None, mode: str) -> np.ndarray:
    valid = np.ones(max(n - k + 1, 0), dtype=np.uint8)
    if mode == "per-row" and cols:
        starts = np.arange(valid.size)
        valid[(starts % cols) + k > cols] = 0
    return valid


def search_table(model: NGramModel, order: int | None = None) -> tuple[np.ndarray, float] | None:
    """Dense table the search scores windows with, plus its floor.

    Dense models use the interpolated conditional table: joint k-gram
    frequencies from a few million letters leave most windows at the floor,
    which flattens the landscape the annealer has to climb.
    """
    cond = model.conditional(order)
    if cond is None:
        return None
    return cond, float(cond.min())


def ngram_component(pt: Plaintext, model: NGramModel, mode: str = "linear") -> float:
    """Mean window log-probability as seen by the search."""
    st = search_table(model)
    if st is None:
        return ngram_score(pt, model, mode, normalized=True)
    codes = np.frombuffer(pt.letters.encode("ascii"), dtype=np.uint8).astype(np.int64) - 65
    if codes.size < model.k:
        raise ValueError(f"text of length {codes.size} is shorter than the model order {model.k}")
    ids = np.zeros(codes.size - model.k + 1, dtype=np.int64)
    for i in range(model.k):
        ids = ids * 26 + codes[i:i + ids.size]
    valid = _valid_windows(codes.size, model.k, pt.cols, mode).astype(bool)
    return float(st[0][ids[valid]].astype(np.float64).mean())


def objective(pt: Plaintext, model: NGramModel, entropy_weight: float,
              mode: str = "linear") -> tuple[float, float, float]:
    """(composite, normalized n-gram, entropy)."""
    ng = ngram_component(pt, model, mode)
    h = letter_entropy(pt)
    return ng + entropy_weight * h, ng, h


# --- numba kernel ---------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


@numba.njit(cache=True, inline="always")
def _next(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True, inline="always")
def _uniform(state):
    return float(_next(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@numba.njit(cache=True, inline="always")
def _randint(state, m):
    return np.int64(_next(state) % np.uint64(m))


@numba.njit(cache=True)
def accept(delta, t, u):
    """Metropolis rule: improvements always pass, a worsening ``delta`` passes
    when ``u < exp(delta / t)`` for the uniform draw ``u``."""
    if delta > 0:
        return True
    return t > 0 and u < math.exp(delta / t)


@numba.njit(cache=True, inline="always")
def _window_logp(pt, w, k, table, skeys, slogp, floor, dense):
    wid = 0
    for i in range(k):
        wid = wid * 26 + pt[w + i]
    if dense:
        return table[wid]
    lo, hi = 0, skeys.size
    while lo < hi:
        mid = (lo + hi) >> 1
        if skeys[mid] < wid:
            lo = mid + 1
        else:
            hi = mid
    if lo < skeys.size and skeys[lo] == wid:
        return slogp[lo]
    return floor


@numba.njit(cache=True, nogil=True)
def _anneal(codes, occ_start, occ_pos, free, key, table, skeys, slogp, floor, dense,
            k, valid, n_valid, lam, iters, t0, decay, seed_state):
    n = codes.size
    S = occ_start.size - 1
    nw = n - k + 1
    pt = np.empty(n, dtype=np.int64)
    for i in range(n):
        pt[i] = key[codes[i]]
    counts = np.zeros(26, dtype=np.int64)
    for i in range(n):
        counts[pt[i]] += 1
    clog = np.zeros(n + 1)
    for c in range(1, n + 1):
        clog[c] = c * math.log2(c)
    ssum = 0.0
    for a in range(26):
        ssum += clog[counts[a]]
    ng = 0.0
    wlp = np.zeros(max(nw, 1))
    for w in range(nw):
        if valid[w]:
            wlp[w] = _window_logp(pt, w, k, table, skeys, slogp, floor, dense)
            ng += wlp[w]
    log2n = math.log2(n)
    cur = ng / n_valid + lam * (log2n - ssum / n)
    best = cur
    best_key = key.copy()
    best_ng = ng
    best_ss = ssum

    stamp = np.zeros(max(nw, 1), dtype=np.int64)
    wbuf = np.empty(max(nw, 1), dtype=np.int64)
    wnew = np.empty(max(nw, 1))
    t = t0
    nfree = free.size
    for it in range(iters):
        s = free[_randint(seed_state, nfree)]
        old = key[s]
        new = _randint(seed_state, 25)
        if new >= old:
            new += 1
        m = occ_start[s + 1] - occ_start[s]
        # windows touching any occurrence of s
        nb = 0
        tag = it + 1
        for j in range(occ_start[s], occ_start[s + 1]):
            p = occ_pos[j]
            lo = p - k + 1
            if lo < 0:
                lo = 0
            hi = p
            if hi > nw - 1:
                hi = nw - 1
            for w in range(lo, hi + 1):
                if stamp[w] != tag and valid[w]:
                    stamp[w] = tag
                    wbuf[nb] = w
                    nb += 1
        before = 0.0
        for i in range(nb):
            before += wlp[wbuf[i]]
        for j in range(occ_start[s], occ_start[s + 1]):
            pt[occ_pos[j]] = new
        after = 0.0
        for i in range(nb):
            wnew[i] = _window_logp(pt, wbuf[i], k, table, skeys, slogp, floor, dense)
            after += wnew[i]
        ss2 = (ssum - clog[counts[old]] - clog[counts[new]]
               + clog[counts[old] - m] + clog[counts[new] + m])
        ng2 = ng - before + after
        cand = ng2 / n_valid + lam * (log2n - ss2 / n)
        delta = cand - cur
        if delta > 0 or accept(delta, t, _uniform(seed_state)):
            key[s] = new
            for i in range(nb):
                wlp[wbuf[i]] = wnew[i]
            counts[old] -= m
            counts[new] += m
            ssum = ss2
            ng = ng2
            cur = cand
            if cur > best:
                best = cur
                best_key[:] = key
                best_ng = ng
                best_ss = ssum
        else:
            for j in range(occ_start[s], occ_start[s + 1]):
                pt[occ_pos[j]] = old
        t *= decay
    return best_key, best, best_ng / n_valid, log2n - best_ss / n


@numba.njit(cache=True, nogil=True)
def _polish(codes, occ_start, occ_pos, free, key, table, skeys, slogp, floor, dense,
            k, valid, n_valid, lam):
    """Steepest ascent over every single-symbol remap until none improves."""
    n = codes.size
    nw = n - k + 1
    pt = np.empty(n, dtype=np.int64)
    for i in range(n):
        pt[i] = key[codes[i]]
    counts = np.zeros(26, dtype=np.int64)
    for i in range(n):
        counts[pt[i]] += 1
    clog = np.zeros(n + 1)
    for c in range(1, n + 1):
        clog[c] = c * math.log2(c)
    stamp = np.zeros(max(nw, 1), dtype=np.int64)
    wbuf = np.empty(max(nw, 1), dtype=np.int64)
    tag = 0
    while True:
        best_d = 1e-12
        best_s = -1
        best_l = -1
        for fi in range(free.size):
            s = free[fi]
            old = key[s]
            m = occ_start[s + 1] - occ_start[s]
            if m == 0:
                continue
            tag += 1
            nb = 0
            for j in range(occ_start[s], occ_start[s + 1]):
                p = occ_pos[j]
                lo = max(p - k + 1, 0)
                hi = min(p, nw - 1)
                for w in range(lo, hi + 1):
                    if stamp[w] != tag and valid[w]:
                        stamp[w] = tag
                        wbuf[nb] = w
                        nb += 1
            before = 0.0
            for i in range(nb):
                before += _window_logp(pt, wbuf[i], k, table, skeys, slogp, floor, dense)
            for new in range(26):
                if new == old:
                    continue
                for j in range(occ_start[s], occ_start[s + 1]):
                    pt[occ_pos[j]] = new
                after = 0.0
                for i in range(nb):
                    after += _window_logp(pt, wbuf[i], k, table, skeys, slogp, floor, dense)
                dh = (clog[counts[old]] + clog[counts[new]]
                      - clog[counts[old] - m] - clog[counts[new] + m]) / n
                d = (after - before) / n_valid + lam * dh
                if d > best_d:
                    best_d = d
                    best_s = s
                    best_l = new
            for j in range(occ_start[s], occ_start[s + 1]):
                pt[occ_pos[j]] = old
        if best_s < 0:
            return key
        old = key[best_s]
        m = occ_start[best_s + 1] - occ_start[best_s]
        for j in range(occ_start[best_s], occ_start[best_s + 1]):
            pt[occ_pos[j]] = best_l
        counts[old] -= m
        counts[best_l] += m
        key[best_s] = best_l


@numba.njit(cache=True, nogil=True)
def _calibrate(codes, occ_start, occ_pos, free, key, table, skeys, slogp, floor, dense,
               k, valid, n_valid, lam, samples, seed_state):
    """Median worsening delta over random single moves from ``key``."""
    n = codes.size
    nw = n - k + 1
    pt = np.empty(n, dtype=np.int64)
    for i in range(n):
        pt[i] = key[codes[i]]
    counts = np.zeros(26, dtype=np.int64)
    for i in range(n):
        counts[pt[i]] += 1
    out = np.empty(samples)
    got = 0
    for it in range(samples * 4):
        if got == samples:
            break
        s = free[_randint(seed_state, free.size)]
        old = key[s]
        new = _randint(seed_state, 25)
        if new >= old:
            new += 1
        m = occ_start[s + 1] - occ_start[s]
        before = 0.0
        after = 0.0
        seen = np.zeros(max(nw, 1), dtype=np.uint8)
        for j in range(occ_start[s], occ_start[s + 1]):
            p = occ_pos[j]
            for w in range(max(0, p - k + 1), min(p, nw - 1) + 1):
                if not seen[w] and valid[w]:
                    seen[w] = 1
                    before += _window_logp(pt, w, k, table, skeys, slogp, floor, dense)
        for j in range(occ_start[s], occ_start[s + 1]):
            pt[occ_pos[j]] = new
        for w in range(nw):
            if seen[w]:
                after += _window_logp(pt, w, k, table, skeys, slogp, floor, dense)
        for j in range(occ_start[s], occ_start[s + 1]):
            pt[occ_pos[j]] = old
        h_old = 0.0
        h_new = 0.0
        for a in range(26):
            c = counts[a]
            c2 = c - m if a == old else (c + m if a == new else c)
            if c > 0:
                h_old -= c / n * math.log2(c / n)
            if c2 > 0:
                h_new -= c2 / n * math.log2(c2 / n)
        d = (after - before) / n_valid + lam * (h_new - h_old)
        if d < 0:
            out[got] = -d
            got += 1
    if got == 0:
        return 0.0
    return np.median(out[:got])


# --- Python driver ----------------------------------------------------------

@dataclass
class _Prepared:
    grid: SymbolGrid
    symbols: tuple[str, ...]
    codes: np.ndarray
    occ_start: np.ndarray
    occ_pos: np.ndarray
    fixed: dict
    free: np.ndarray
    valid: np.ndarray
    model_args: tuple
    coarse: tuple | None  # (order, valid, model_args) for the first stage


def _dense_args(st: tuple[np.ndarray, float]) -> tuple:
    return st[0], np.zeros(1, np.int64), np.zeros(1, np.float32), np.float32(st[1]), True


def _prepare(grid: SymbolGrid, model: NGramModel, config: SolverConfig) -> _Prepared:
    if grid.n < model.k:
        raise ValueError(f"cipher length {grid.n} is shorter than the model order {model.k}")
    partial = derive_constraints(grid, config.cribs)
    symbols = tuple(grid.alphabet)
    codes = grid.codes()
    order = np.argsort(codes, kind="stable")
    occ_start = np.searchsorted(codes[order], np.arange(len(symbols) + 1)).astype(np.int64)
    fixed = {symbols.index(s): LETTERS.index(l) for s, l in partial.mapping.items()}
    free = np.array([i for i in range(len(symbols)) if i not in fixed], dtype=np.int64)
    valid = _valid_windows(grid.n, model.k, grid.cols, config.mode)
    st = search_table(model)
    if st is not None:
        margs = _dense_args(st)
    else:
        margs = (np.zeros(1, np.float32), model.keys, model.logp.astype(np.float32),
                 np.float32(model.floor), False)
    coarse = None
    co = config.coarse_order
    if st is not None and co is not None and co < model.k and config.coarse_share > 0:
        coarse = (co, _valid_windows(grid.n, co, grid.cols, config.mode),
                  _dense_args(search_table(model, co)))
    return _Prepared(grid, symbols, codes, occ_start, order.astype(np.int64), fixed, free,
                     valid, margs, coarse)


def stream_seed(*parts: int) -> np.ndarray:
    """Independent 64-bit generator state for (seed, restart, variant, ...)."""
    st = np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts]).generate_state(1, np.uint64)
    return st.astype(np.uint64)


def _random_key(prep: _Prepared, state: np.ndarray) -> np.ndarray:
    rng = np.random.default_rng(int(state[0]))
    key = rng.integers(0, 26, len(prep.symbols)).astype(np.int64)
    for i, l in prep.fixed.items():
        key[i] = l
    return key


def _run_restart(prep: _Prepared, model: NGramModel, config: SolverConfig, restart: int,
                 variant: int = 0):
    state = stream_seed(config.seed, restart, variant)
    key = _random_key(prep, state)
    if prep.free.size == 0:
        return key, None
    lam = float(config.entropy_weight)
    fine = (model.k, prep.valid, prep.model_args)
    stages = [fine]
    iters = [config.iterations]
    if prep.coarse is not None:
        first = max(1, min(config.iterations - 1, round(config.iterations * config.coarse_share)))
        if config.iterations > 1:
            stages = [prep.coarse, fine]
            iters = [first, config.iterations - first]

    def run(stage, k_iters, t_start, t_end, key):
        k, valid, margs = stage
        n_valid = max(int(valid.sum()), 1)
        decay = config.decay
        if decay is None:
            decay = (t_end / t_start) ** (1.0 / k_iters) if t_start > 0 else 0.5
        return _anneal(prep.codes, prep.occ_start, prep.occ_pos, prep.free, key, *margs, k,
                       valid, n_valid, lam, k_iters, t_start, decay, state)[0]

    t0 = config.initial_temperature
    if t0 is None:
        k, valid, margs = stages[0]
        t0 = float(_calibrate(prep.codes, prep.occ_start, prep.occ_pos, prep.free, key.copy(),
                              *margs, k, valid, max(int(valid.sum()), 1), lam, 200,
                              state.copy())) / math.log(2)
    key = run(stages[0], iters[0], t0, t0 / COOLING_RATIO, key)
    if len(stages) == 2:
        # reheat below the point where the solution melts, then cool further
        key = run(stages[1], iters[1], t0 / REHEAT_DIVISOR,
                  t0 / (REHEAT_DIVISOR * COOLING_RATIO / 2), key.copy())
    if config.polish:
        key = _polish(prep.codes, prep.occ_start, prep.occ_pos, prep.free, key,
                      *prep.model_args, model.k, prep.valid, max(int(prep.valid.sum()), 1), lam)
    return key, _objective_codes(prep, model, config, key)


def _objective_codes(prep: _Prepared, model: NGramModel, config: SolverConfig, key_codes):
    pt = decrypt(prep.grid, SubstitutionKey(
        {s: LETTERS[int(key_codes[i])] for i, s in enumerate(prep.symbols)}))
    return objective(pt, model, config.entropy_weight, config.mode)


def _candidate(prep: _Prepared, model: NGramModel, config: SolverConfig, key_codes,
               provenance: dict) -> CandidateSolution:
    key = SubstitutionKey({s: LETTERS[int(key_codes[i])] for i, s in enumerate(prep.symbols)})
    pt = decrypt(prep.grid, key)
    total, ng, h = objective(pt, model, config.entropy_weight, config.mode)
    return CandidateSolution(key, pt, total, ng, h, provenance)


def perturb(key: SubstitutionKey, rng: np.random.Generator,
            fixed: Iterable[str] = ()) -> SubstitutionKey:
    """Remap one non-fixed symbol to one of the 25 other letters."""
    fixed = set(fixed)
    free = [s for s in key.mapping if s not in fixed]
    if not free:
        raise NoMoveError("every symbol is fixed by cribs")
    s = free[int(rng.integers(len(free)))]
    others = [l for l in LETTERS if l != key[s]]
    return key.updated(**{s: others[int(rng.integers(25))]})


def solve(grid: SymbolGrid, model: NGramModel, config: SolverConfig = SolverConfig(),
          plan: str | None = None, variant: int = 0) -> CandidateSolution:
    """Best candidate over ``config.restarts`` seeded restarts."""
    prep = _prepare(grid, model, config)

    def one(r):
        return _run_restart(prep, model, config, r, variant)

    if config.jobs > 1 and config.restarts > 1:
        with ThreadPoolExecutor(config.jobs) as ex:
            results = list(ex.map(one, range(config.restarts)))
    else:
        results = [one(r) for r in range(config.restarts)]
    best_r, best_val = 0, -math.inf
    for r, (_, stats) in enumerate(results):
        val = stats[0] if stats is not None else 0.0
        if val > best_val:  # strict: ties keep the lowest restart
            best_r, best_val = r, val
    prov = {"plan": plan, "seed": config.seed, "restart": best_r, "variant": variant}
    return _candidate(prep, model, config, results[best_r][0], prov)


@dataclass
class BatchReport:
    entries: list  # CandidateSolution, best first
    errors: list  # (plan, message)

    def to_json(self) -> str:
        return json.dumps([e.to_dict() for e in self.entries], indent=2)

    def to_csv(self, top: int | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "plan", "score", "ngram", "entropy", "plaintext"])
        for i, e in enumerate(self.entries[:top], 1):
            w.writerow([i, e.provenance.get("plan"), f"{e.score:.6f}", f"{e.ngram:.6f}",
                        f"{e.entropy:.6f}", e.plaintext.letters])
        return buf.getvalue()


def batch_solve(variants: Iterable[tuple[str, SymbolGrid]], model: NGramModel,
                config: SolverConfig = SolverConfig()) -> BatchReport:
    """Solve every (plan label, grid) and rank by composite score."""
    items = list(variants)
    inner = replace(config, jobs=1)

    def one(i):
        label, grid = items[i]
        try:
            return solve(grid, model, inner, plan=label, variant=i), None
        except Exception as e:  # recorded, batch continues
            return None, (label, f"{type(e).__name__}: {e}")

    if config.jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(config.jobs) as ex:
            results = list(ex.map(one, range(len(items))))
    else:
        results = [one(i) for i in range(len(items))]
    entries = [c for c, _ in results if c is not None]
    errors = [e for _, e in results if e is not None]
    entries.sort(key=lambda c: (-c.score, c.provenance["variant"]))
    return BatchReport(entries, errors)
