"""Cell reorderings: decimations, period orders, mirrors, column moves and
sectioned plans with disruptions.

Every transform compiles to a read-out order over 0-based linear indices:
``apply`` produces ``out[k] = grid.cells[order[k]]`` and writes the result
back row-major into a grid of the same shape. Text files use 1-based rows,
columns and positions.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

from .cipher import FormatError, SymbolGrid, is_comment


class SpecError(ValueError):
    """Spec or plan that cannot be applied to the given dimensions."""


class ImproperDecimationError(SpecError):
    """Decimation steps that would miss some cells."""


class CoverageError(SpecError):
    """A walk revisited a cell before covering the grid."""


class UnsupportedError(SpecError):
    pass


@dataclass(frozen=True)
class CellOrder:
    """Read-out order; ``indices[k]`` is the 0-based source cell read k-th."""

    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        n = idx.size
        if n and (idx.min() < 0 or idx.max() >= n or np.unique(idx).size != n):
            raise SpecError("order is not a permutation")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return self.indices.size

    def __eq__(self, other):
        return isinstance(other, CellOrder) and np.array_equal(self.indices, other.indices)

    def __hash__(self):
        return hash(self.indices.tobytes())

    def one_based(self) -> list[int]:
        return (self.indices + 1).tolist()

    def inverse(self) -> "CellOrder":
        return CellOrder(np.argsort(self.indices))


def _check_perm(idx: np.ndarray, n: int, what: str) -> np.ndarray:
    if idx.size != n or np.unique(idx).size != n:
        raise SpecError(f"{what} does not visit every cell exactly once")
    return idx


# --- primitive orders -----------------------------------------------------

def decimation_order(N: int, M: int, n_step: int, m_step: int) -> CellOrder:
    """Visit (n_step*k mod N, m_step*k mod M) for k = 0 .. N*M-1."""
    if math.gcd(n_step, N) != 1 or math.gcd(m_step, M) != 1:
        raise ImproperDecimationError(
            f"({n_step},{m_step})-decimation of {N}x{M}: steps must be coprime to the sides"
        )
    k = np.arange(N * M)
    idx = (n_step * k % N) * M + (m_step * k % M)
    if np.unique(idx).size != N * M:
        # the walk closes after lcm(N, M) steps when the sides share a factor
        raise ImproperDecimationError(
            f"({n_step},{m_step})-decimation of {N}x{M} repeats after "
            f"{math.lcm(N, M)} cells; sides must be coprime"
        )
    return CellOrder(idx)


def pseudo_period_order(rows: int, cols: int, p: int) -> CellOrder:
    """Chains 1, 1+p, 1+2p, ... then 2, 2+p, ... (1-based), concatenated."""
    n = rows * cols
    if p < 1 or p > n // 2:
        if not (n == 1 and p == 1):
            raise SpecError(f"period {p} outside [1, {n // 2}]")
    return CellOrder(np.concatenate([np.arange(i, n, p) for i in range(p)]))


def period_order(rows: int, cols: int, p: int) -> CellOrder:
    """Single cycle through the linear index: k -> p*k mod n."""
    n = rows * cols
    if math.gcd(p, n) != 1:
        raise SpecError(f"period {p} is not coprime to n={n}")
    return CellOrder(np.arange(n) * p % n)


def wrap_period_order(rows: int, cols: int, p: int) -> CellOrder:
    """Single cycle that steps p inside the grid and p-1 across the wrap.

    Equivalent to stepping by p on a ring of n+1 slots with one phantom slot
    at the end that is never read.
    """
    n = rows * cols
    if math.gcd(p, n + 1) != 1:
        raise SpecError(f"wrap period {p} is not coprime to n+1={n + 1}")
    ring = np.arange(n + 1) * p % (n + 1)
    return CellOrder(ring[ring != n])


def column_major_order(rows: int, cols: int) -> CellOrder:
    return CellOrder(np.arange(rows * cols).reshape(rows, cols).T.ravel())


def mirror_order(rows: int, cols: int) -> CellOrder:
    return CellOrder(np.arange(rows * cols).reshape(rows, cols)[:, ::-1].ravel())


def move_column_order(rows: int, cols: int, src: int, dst: int) -> CellOrder:
    if not (1 <= src <= cols and 1 <= dst <= cols):
        raise SpecError(f"column move {src}->{dst} outside 1..{cols}")
    order = list(range(cols))
    c = order.pop(src - 1)
    order.insert(dst - 1, c)
    return CellOrder(np.arange(rows * cols).reshape(rows, cols)[:, order].ravel())


def column_period_order(rows: int, cols: int, p: int) -> CellOrder:
    if not 1 <= p <= cols:
        raise SpecError(f"column period {p} outside 1..{cols}")
    order = [c for i in range(p) for c in range(i, cols, p)]
    return CellOrder(np.arange(rows * cols).reshape(rows, cols)[:, order].ravel())


def knight_walk_order(rows: int, cols: int) -> CellOrder:
    """Start top-left; each step moves down one and right two, wrapping."""
    seen = np.zeros((rows, cols), dtype=bool)
    r = c = 0
    out = []
    for _ in range(rows * cols):
        if seen[r, c]:
            raise CoverageError(
                f"knight walk on {rows}x{cols} revisits ({r + 1},{c + 1}) after {len(out)} cells"
            )
        seen[r, c] = True
        out.append(r * cols + c)
        r, c = (r + 1) % rows, (c + 2) % cols
    return CellOrder(np.array(out))


# --- specs ----------------------------------------------------------------

_INT_PARAMS = {
    "decimation": ("n", "m"),
    "period": ("p",),
    "pseudo_period": ("p",),
    "wrap_period": ("p",),
    "move_column": ("from", "to"),
    "column_period": ("p",),
}
_NO_PARAMS = ("identity", "row_major", "column_major", "mirror_horizontal")
KINDS = _NO_PARAMS + tuple(_INT_PARAMS) + ("permutation",)


@dataclass(frozen=True)
class TranspositionSpec:
    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown transposition kind {self.kind!r}")
        want = _INT_PARAMS.get(self.kind, ("order",) if self.kind == "permutation" else ())
        got = tuple(k for k, _ in self.params)
        if sorted(got) != sorted(want):
            raise SpecError(f"{self.kind} takes parameters {want}, got {got}")
        # canonical parameter order, so equal specs compare equal
        d = dict(self.params)
        object.__setattr__(self, "params", tuple((k, d[k]) for k in want))

    @classmethod
    def make(cls, kind: str, **params) -> "TranspositionSpec":
        if "from_" in params:
            params["from"] = params.pop("from_")
        if kind == "permutation":
            params["order"] = tuple(int(x) for x in params["order"])
        return cls(kind, tuple(params.items()))

    def param(self, name):
        return dict(self.params)[name]

    def order(self, rows: int, cols: int) -> CellOrder:
        k = self.kind
        if k in ("identity", "row_major"):
            return CellOrder(np.arange(rows * cols))
        if k == "column_major":
            return column_major_order(rows, cols)
        if k == "mirror_horizontal":
            return mirror_order(rows, cols)
        if k == "decimation":
            return decimation_order(rows, cols, self.param("n"), self.param("m"))
        if k == "period":
            return period_order(rows, cols, self.param("p"))
        if k == "pseudo_period":
            return pseudo_period_order(rows, cols, self.param("p"))
        if k == "wrap_period":
            return wrap_period_order(rows, cols, self.param("p"))
        if k == "move_column":
            return move_column_order(rows, cols, self.param("from"), self.param("to"))
        if k == "column_period":
            return column_period_order(rows, cols, self.param("p"))
        order = np.array(self.param("order"), dtype=np.int64) - 1
        if order.size != rows * cols:
            raise SpecError(f"permutation has {order.size} entries for {rows * cols} cells")
        return CellOrder(order)

    def to_text(self) -> str:
        parts = [self.kind]
        for k, v in self.params:
            parts.append(f"{k}={','.join(map(str, v))}" if isinstance(v, tuple) else f"{k}={v}")
        return " ".join(parts)


IDENTITY = TranspositionSpec("identity")


@dataclass(frozen=True)
class Composite:
    """Specs applied one after another."""

    steps: tuple[TranspositionSpec, ...]

    def order(self, rows: int, cols: int) -> CellOrder:
        idx = np.arange(rows * cols)
        for s in self.steps:
            idx = idx[s.order(rows, cols).indices]
        return CellOrder(idx)

    def to_text(self) -> str:
        return "\n".join(s.to_text() for s in self.steps)


@dataclass(frozen=True)
class DisruptionRule:
    """``exclude`` keeps cells in place and out of the read order;
    ``rshift`` rotates a row segment right before reordering.

    Coordinates are 1-based and absolute within the whole grid.
    """

    kind: str
    cells: tuple[tuple[int, int], ...] = ()
    row: int = 0
    start_col: int = 0
    end_col: int = 0
    amount: int = 0

    def __post_init__(self):
        if self.kind == "exclude":
            if not self.cells:
                raise SpecError("exclude needs at least one cell")
        elif self.kind == "rshift":
            if self.start_col < 1 or self.end_col < self.start_col:
                raise SpecError("rshift needs a non-empty column range")
        else:
            raise SpecError(f"unknown disruption {self.kind!r}")

    def to_text(self) -> str:
        if self.kind == "exclude":
            return "exclude " + " ".join(f"{r},{c}" for r, c in self.cells)
        return f"rshift row={self.row} cols={self.start_col}..{self.end_col} amount={self.amount}"


Transform = Union[TranspositionSpec, Composite, "SectionPlan"]


@dataclass(frozen=True)
class SectionPlan:
    """Split the grid into bands and reorder each band independently.

    ``axis="vertical"`` stacks bands of rows; ``"horizontal"`` places bands of
    columns side by side. ``relocate`` moves the excluded cells, as a block,
    so the first of them lands at that 1-based output position.
    """

    axis: str
    sizes: tuple[int, ...]
    sections: tuple[Union[TranspositionSpec, Composite], ...] = ()
    disruptions: tuple[DisruptionRule, ...] = ()
    relocate: int | None = None

    def __post_init__(self):
        if self.axis not in ("vertical", "horizontal"):
            raise SpecError(f"axis must be vertical or horizontal, not {self.axis!r}")
        if not self.sizes or any(s < 1 for s in self.sizes):
            raise SpecError("section sizes must be positive")
        secs = tuple(self.sections) or (IDENTITY,) * len(self.sizes)
        if len(secs) != len(self.sizes):
            raise SpecError(f"{len(self.sizes)} sections but {len(secs)} specs")
        object.__setattr__(self, "sections", secs)

    def _bands(self, rows: int, cols: int):
        extent = rows if self.axis == "vertical" else cols
        if sum(self.sizes) != extent:
            raise SpecError(f"section sizes {self.sizes} do not sum to {extent}")
        grid = np.arange(rows * cols).reshape(rows, cols)
        start = 0
        for size in self.sizes:
            if self.axis == "vertical":
                yield grid[start:start + size, :]
            else:
                yield grid[:, start:start + size]
            start += size

    def order(self, rows: int, cols: int) -> CellOrder:
        n = rows * cols
        src = np.arange(n).reshape(rows, cols)
        excluded = set()
        for d in self.disruptions:
            if d.kind == "rshift":
                if not (1 <= d.row <= rows and d.end_col <= cols):
                    raise SpecError(f"rshift outside the {rows}x{cols} grid")
                seg = src[d.row - 1, d.start_col - 1:d.end_col]
                src[d.row - 1, d.start_col - 1:d.end_col] = np.roll(seg, d.amount)
            else:
                for r, c in d.cells:
                    if not (1 <= r <= rows and 1 <= c <= cols):
                        raise SpecError(f"excluded cell {r},{c} outside the grid")
                    excluded.add((r - 1) * cols + (c - 1))
        out = np.empty(n, dtype=np.int64)
        for band, spec in zip(self._bands(rows, cols), self.sections):
            br, bc = band.shape
            pos = band.ravel()  # output slots, row-major within the band
            local = spec.order(br, bc).indices
            keep = np.array([p not in excluded for p in pos])
            reads = [src.ravel()[pos[i]] for i in local if keep[i]]
            out[pos[keep]] = reads
            out[pos[~keep]] = src.ravel()[pos[~keep]]
        if self.relocate is not None and excluded:
            slots = sorted(excluded)
            block = out[slots]
            rest = np.delete(out, slots)
            at = self.relocate - 1
            if not 0 <= at <= rest.size:
                raise SpecError(f"relocate position {self.relocate} outside 1..{rest.size + 1}")
            out = np.concatenate([rest[:at], block, rest[at:]])
        return CellOrder(_check_perm(out, n, "section plan"))

    def to_text(self) -> str:
        lines = [f"axis {self.axis}", "sizes " + " ".join(map(str, self.sizes))]
        for i, spec in enumerate(self.sections, 1):
            steps = spec.steps if isinstance(spec, Composite) else (spec,)
            lines += [f"section {i} {s.to_text()}" for s in steps]
        lines += [d.to_text() for d in self.disruptions]
        if self.relocate is not None:
            lines.append(f"relocate at={self.relocate}")
        return "\n".join(lines)


# --- parsing --------------------------------------------------------------

def _parse_value(key: str, raw: str, lineno: int):
    try:
        if key == "order":
            return tuple(int(x) for x in raw.split(","))
        if ".." in raw:
            a, b = raw.split("..")
            return (int(a), int(b))
        return int(raw)
    except ValueError:
        raise FormatError(f"line {lineno}: bad value {key}={raw!r}") from None


def parse_spec_line(line: str, lineno: int = 0) -> TranspositionSpec:
    kind, *rest = line.split()
    params = {}
    for tok in rest:
        if "=" not in tok:
            raise FormatError(f"line {lineno}: expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        params[k] = _parse_value(k, v, lineno)
    try:
        return TranspositionSpec(kind, tuple(params.items()))
    except SpecError as e:
        raise FormatError(f"line {lineno}: {e}") from None


def parse_spec(text: str) -> Transform:
    """Parse a spec file: plain spec lines (composed in order) or a plan."""
    axis, sizes, relocate = None, None, None
    plain: list[TranspositionSpec] = []
    per_section: dict[int, list[TranspositionSpec]] = {}
    disruptions: list[DisruptionRule] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or is_comment(line):
            continue
        head, _, tail = line.partition(" ")
        if head == "axis":
            axis = tail.strip()
        elif head == "sizes":
            try:
                sizes = tuple(int(x) for x in tail.split())
            except ValueError:
                raise FormatError(f"line {lineno}: bad sizes {tail!r}") from None
        elif head == "section":
            idx, _, rest = tail.strip().partition(" ")
            if not idx.isdigit() or not rest:
                raise FormatError(f"line {lineno}: expected 'section <i> <spec>'")
            per_section.setdefault(int(idx), []).append(parse_spec_line(rest, lineno))
        elif head == "exclude":
            try:
                cells = tuple(tuple(int(v) for v in tok.split(",")) for tok in tail.split())
                if any(len(c) != 2 for c in cells):
                    raise ValueError
            except ValueError:
                raise FormatError(f"line {lineno}: exclude expects r,c pairs") from None
            disruptions.append(DisruptionRule("exclude", cells=cells))
        elif head == "rshift":
            kv = dict(tok.split("=", 1) for tok in tail.split() if "=" in tok)
            try:
                a, b = _parse_value("cols", kv["cols"], lineno)
                disruptions.append(DisruptionRule(
                    "rshift", row=int(kv["row"]), start_col=a, end_col=b,
                    amount=int(kv.get("amount", 1))))
            except (KeyError, TypeError, ValueError) as e:
                raise FormatError(f"line {lineno}: bad rshift ({e})") from None
        elif head == "relocate":
            kv = dict(tok.split("=", 1) for tok in tail.split() if "=" in tok)
            if "at" not in kv or not kv["at"].isdigit():
                raise FormatError(f"line {lineno}: relocate needs at=<position>")
            relocate = int(kv["at"])
        else:
            plain.append(parse_spec_line(line, lineno))
    if axis is None and sizes is None:
        if per_section or disruptions or relocate is not None:
            raise FormatError("section lines need 'axis' and 'sizes'")
        if not plain:
            raise FormatError("empty spec")
        return plain[0] if len(plain) == 1 else Composite(tuple(plain))
    if axis is None or sizes is None:
        raise FormatError("a plan needs both 'axis' and 'sizes'")
    if plain:
        raise FormatError("plain spec lines are not allowed in a plan; use 'section <i>'")
    bad = [i for i in per_section if not 1 <= i <= len(sizes)]
    if bad:
        raise FormatError(f"section index {bad[0]} outside 1..{len(sizes)}")
    secs = []
    for i in range(1, len(sizes) + 1):
        steps = per_section.get(i, [IDENTITY])
        secs.append(steps[0] if len(steps) == 1 else Composite(tuple(steps)))
    try:
        return SectionPlan(axis, sizes, tuple(secs), tuple(disruptions), relocate)
    except SpecError as e:
        raise FormatError(str(e)) from None


def load_spec(path: str | Path) -> Transform:
    return parse_spec(Path(path).read_text(encoding="utf-8"))


def to_text(t: Transform) -> str:
    return t.to_text() + "\n"


# --- apply / invert -------------------------------------------------------

def order_of(t: Transform, rows: int, cols: int) -> CellOrder:
    if isinstance(t, CellOrder):
        return t
    if isinstance(t, (list, tuple)):
        t = Composite(tuple(t))
    return t.order(rows, cols)


def apply(grid: SymbolGrid, t: Transform) -> SymbolGrid:
    idx = order_of(t, grid.rows, grid.cols).indices
    cells = grid.cells
    return SymbolGrid(grid.rows, grid.cols, tuple(cells[i] for i in idx))


def invert(t: Transform, rows: int, cols: int) -> Transform:
    """A transform that undoes ``t`` on grids of this shape."""
    if isinstance(t, TranspositionSpec) and t.kind in ("identity", "row_major"):
        return IDENTITY
    inv = order_of(t, rows, cols).inverse()
    return TranspositionSpec.make("permutation", order=inv.one_based())


def permute_text(text: str, t: Transform, rows: int, cols: int) -> str:
    idx = order_of(t, rows, cols).indices
    return "".join(text[i] for i in idx)


# --- enumeration ----------------------------------------------------------

def enumerate_splits(extent: int, max_sections: int, exact: bool = False) -> list[tuple[int, ...]]:
    """Ordered compositions of ``extent`` into 1..max_sections positive parts
    (exactly ``max_sections`` parts when ``exact``)."""
    if max_sections < 1:
        raise ValueError("max_sections must be >= 1")
    lo = max_sections if exact else 1
    out = []
    for parts in range(lo, min(max_sections, extent) + 1):
        for cuts in itertools.combinations(range(1, extent), parts - 1):
            bounds = (0,) + cuts + (extent,)
            out.append(tuple(b - a for a, b in zip(bounds, bounds[1:])))
    return out


@dataclass(frozen=True)
class PlanSpace:
    """Section splits along each axis crossed with one scheme for all bands.

    ``extra`` holds explicit transforms appended after the generated ones.
    """

    axes: tuple[str, ...] = ("vertical",)
    max_sections: int = 1
    schemes: tuple[TranspositionSpec, ...] = (IDENTITY,)
    extra: tuple = ()

    def plans(self, rows: int, cols: int) -> Iterator[Transform]:
        for axis in self.axes:
            extent = rows if axis == "vertical" else cols
            for sizes in enumerate_splits(extent, self.max_sections):
                for scheme in self.schemes:
                    if len(sizes) == 1:
                        yield scheme
                    else:
                        yield SectionPlan(axis, sizes, (scheme,) * len(sizes))
        yield from self.extra

    def size(self, rows: int, cols: int) -> int:
        n = 0
        for axis in self.axes:
            extent = rows if axis == "vertical" else cols
            n += len(enumerate_splits(extent, self.max_sections)) * len(self.schemes)
        return n + len(self.extra)


def parse_plan_space(text: str, base: Path | None = None) -> PlanSpace:
    """Lines: ``axes vertical horizontal``, ``max_sections 3``,
    ``scheme <spec>`` (repeatable) and ``plan <spec file>`` (repeatable)."""
    axes, max_sections, schemes, extra = ("vertical",), 1, [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or is_comment(line):
            continue
        head, _, tail = line.partition(" ")
        tail = tail.strip()
        if head == "axes":
            axes = tuple(tail.split())
            if not axes or any(a not in ("vertical", "horizontal") for a in axes):
                raise FormatError(f"line {lineno}: axes must be vertical and/or horizontal")
        elif head == "max_sections":
            if not tail.isdigit() or int(tail) < 1:
                raise FormatError(f"line {lineno}: max_sections must be a positive integer")
            max_sections = int(tail)
        elif head == "scheme":
            schemes.append(parse_spec_line(tail, lineno))
        elif head == "plan":
            p = Path(tail)
            if base is not None and not p.is_absolute():
                p = base / p
            try:
                extra.append(load_spec(p))
            except OSError as e:
                raise FormatError(f"line {lineno}: {e}") from None
        else:
            raise FormatError(f"line {lineno}: unknown directive {head!r}")
    return PlanSpace(axes, max_sections, tuple(schemes) or (IDENTITY,), tuple(extra))


@dataclass
class SieveTally:
    accepted: int = 0
    rejected: int = 0
    invalid: int = 0
    errors: list = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.accepted + self.rejected + self.invalid


def enumerate_variants(grid: SymbolGrid, space: PlanSpace | Iterable[Transform],
                       sieve: int = 0, tally: SieveTally | None = None
                       ) -> Iterator[tuple[Transform, int]]:
    """Lazily yield (plan, period-1 repeats) for plans meeting ``sieve``.

    Plans that do not fit the grid count as rejected (``tally.invalid``).
    """
    from .stats import adjacent_repeats

    plans = space.plans(grid.rows, grid.cols) if isinstance(space, PlanSpace) else space
    codes = grid.codes()
    tally = tally if tally is not None else SieveTally()
    for plan in plans:
        try:
            idx = order_of(plan, grid.rows, grid.cols).indices
        except SpecError as e:
            tally.invalid += 1
            tally.errors.append((plan, str(e)))
            continue
        count = adjacent_repeats(codes[idx])
        if count >= sieve:
            tally.accepted += 1
            yield plan, count
        else:
            tally.rejected += 1


# --- construction equivalences -------------------------------------------

def triangular_rewrite(section: SymbolGrid) -> SymbolGrid:
    """Hand method for enciphering an N x M block.

    Write the text down the columns, then slide row r right by 2r places;
    what falls off the right edge is the staircase triangle that is moved to
    the left side. The result equals the (1,2)-decimation encipherment when
    2N = 1 (mod M), which covers the 9 x 17 blocks.
    """
    N, M = section.rows, section.cols
    if (2 * N - 1) % M:
        raise UnsupportedError(f"triangular rewrite needs 2N = 1 mod M, got {N}x{M}")
    text = section.cells
    written = np.array(text, dtype=object).reshape(M, N).T  # column-wise fill
    out = np.empty((N, M), dtype=object)
    for r in range(N):
        out[r] = np.roll(written[r], 2 * r)
    return SymbolGrid(N, M, tuple(out.ravel()))
