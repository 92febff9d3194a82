"""Command-line entry point: ``zodiac <subcommand> ...``.

Exit codes: 0 success, 1 the solver found nothing above ``--threshold``,
2 bad input (missing or malformed files, invalid parameters, tampered data).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from . import __version__, data
from . import generator as gen
from . import language as lang
from . import solver as sv
from . import stats as st
from . import transposition as tp
from .cipher import FormatError, KeyCoverageError, parse_cipher, serialize_cipher
from .reproduce import IntegrityError, reproduce

EXIT_OK, EXIT_NOTHING, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    arguments: dict
    inputs: dict = field(default_factory=dict)  # path -> sha256
    seeds: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    version: str = __version__
    outputs: dict = field(default_factory=dict)  # name -> sha256

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def _digest(b: bytes) -> str:
    return hashlib.sha256(b).hexdigest()


class Context:
    def __init__(self, args):
        self.args = args
        self.data_dir = args.data_dir
        skip = {"func", "manifest", "data_dir"}
        self.manifest = RunManifest(args.command, {k: v for k, v in sorted(vars(args).items())
                                                   if k not in skip})
        if getattr(args, "seed", None) is not None:
            self.manifest.seeds.append(args.seed)

    def resolve(self, name: str) -> Path:
        """A path on disk, else a bundled data file of that name."""
        p = Path(name)
        if p.exists():
            return p
        try:
            return data.path(name, self.data_dir)
        except FileNotFoundError:
            raise InputError(f"no such file: {name}") from None

    def read(self, name: str) -> str:
        if name == "-":
            text = sys.stdin.read()
            self.manifest.inputs["<stdin>"] = _digest(text.encode("utf-8"))
            return text
        p = self.resolve(name)
        raw = p.read_bytes()
        self.manifest.inputs[str(p)] = _digest(raw)
        return raw.decode("utf-8")

    def cipher(self, name: str):
        return parse_cipher(self.read(name))


def _range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    if not sep or not lo.isdigit() or not hi.isdigit():
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}")
    return int(lo), int(hi)


def _model(ctx: Context, order: int) -> lang.NGramModel:
    if ctx.args.model:
        p = ctx.resolve(ctx.args.model)
        ctx.manifest.inputs[str(p)] = data.sha256(p)
        return lang.load_model(p)
    if ctx.data_dir is None:
        return lang.english_model(order)
    p = data.path("english_train.txt.gz", ctx.data_dir)
    ctx.manifest.inputs[str(p)] = data.sha256(p)
    return lang.build_model(lang.corpus_lines(data_dir=ctx.data_dir), order,
                            provenance=f"{p}")


def _solver_config(ctx: Context) -> sv.SolverConfig:
    a = ctx.args
    cribs = ()
    if a.cribs:
        cribs = tuple(sv.parse_cribs(ctx.read(a.cribs)))
    kw = dict(order=a.order, entropy_weight=a.entropy_weight, iterations=a.iterations,
              restarts=a.restarts, seed=a.seed, cribs=cribs, mode=a.mode, jobs=a.jobs)
    if a.temperature is not None:
        kw["initial_temperature"] = a.temperature
    if a.decay is not None:
        kw["decay"] = a.decay
    cfg = sv.SolverConfig(**kw)
    ctx.manifest.config = cfg.snapshot()
    return cfg


# --- subcommands --------------------------------------------------------------

def cmd_stats(ctx: Context) -> tuple[str, int]:
    a = ctx.args
    grid = ctx.cipher(a.cipher)
    if a.scan:
        reports = st.period_scan(grid, a.scan[0], a.scan[1], not a.no_junctions)
        if a.csv:
            return st.scan_to_csv(reports), EXIT_OK
        return st.to_json(reports) + "\n", EXIT_OK
    rep = st.repeating_bigram_count(grid, a.period, not a.no_junctions, a.top)
    out = {
        "rows": grid.rows, "cols": grid.cols, "length": grid.n,
        "symbols": len(grid.alphabet),
        "period": rep.period, "total": rep.total_repeats,
        "distinct_repeating": rep.distinct_repeating, "top": rep.top,
        "junctions": rep.junctions,
        "index_of_coincidence": st.index_of_coincidence(grid),
        "multiplicity": st.multiplicity(grid),
        "clean_rows": st.row_repeat_analysis(grid).clean_rows,
    }
    if grid.rows >= 3 and grid.cols >= 3:
        out["pivot_pairs"] = len(st.pivot_search(grid))
    if a.csv:
        lines = ["metric,value"] + [f"{k},{v}" for k, v in out.items() if k != "top"]
        return "\n".join(lines) + "\n", EXIT_OK
    return st.to_json(out) + "\n", EXIT_OK


def cmd_scan_periods(ctx: Context) -> tuple[str, int]:
    a = ctx.args
    grid = ctx.cipher(a.cipher)
    lo, hi = a.range or (1, grid.n // 2)
    reports = st.period_scan(grid, lo, hi, not a.no_junctions)
    if a.csv:
        return st.scan_to_csv(reports), EXIT_OK
    best = max(reports, key=lambda r: (r.total_repeats, -r.period)) if reports else None
    out = {"range": [lo, hi], "scan": [[r.period, r.total_repeats] for r in reports],
           "max": [best.period, best.total_repeats] if best else None}
    return st.to_json(out) + "\n", EXIT_OK


def _transform(ctx: Context):
    a = ctx.args
    if (a.spec is None) == (a.inline is None):
        raise InputError("give exactly one of --spec FILE or --inline 'KIND k=v ...'")
    text = ctx.read(a.spec) if a.spec else a.inline
    return tp.parse_spec(text)


def cmd_transpose(ctx: Context) -> tuple[str, int]:
    grid = ctx.cipher(ctx.args.cipher)
    t = _transform(ctx)
    if ctx.args.invert:
        t = tp.invert(t, grid.rows, grid.cols)
    return serialize_cipher(tp.apply(grid, t)), EXIT_OK


def cmd_solve(ctx: Context) -> tuple[str, int]:
    a = ctx.args
    grid = ctx.cipher(a.cipher)
    if a.spec or a.inline:
        grid = tp.apply(grid, _transform(ctx))
    cfg = _solver_config(ctx)
    cand = sv.solve(grid, _model(ctx, a.order), cfg, plan=a.spec or a.inline)
    out = cand.to_dict()
    out["spaced"] = lang.segment_words(cand.plaintext) if a.segment else None
    code = EXIT_OK if a.threshold is None or cand.score >= a.threshold else EXIT_NOTHING
    return json.dumps(out, indent=2, sort_keys=True) + "\n", code


def _load_checkpoint(path: Path) -> dict[int, dict]:
    done = {}
    if path.exists():
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                rec = json.loads(line)
                done[rec["variant"]] = rec
    return done


def cmd_enumerate_and_solve(ctx: Context) -> tuple[str, int]:
    a = ctx.args
    grid = ctx.cipher(a.cipher)
    space_path = ctx.resolve(a.space)
    try:
        space = tp.parse_plan_space(ctx.read(a.space), space_path.parent)
    except tp.SpecError as e:
        raise FormatError(str(e)) from None
    model = _model(ctx, a.order)
    cfg = replace(_solver_config(ctx), jobs=1)
    tally = tp.SieveTally()
    variants = [(i, plan, reps) for i, (plan, reps) in
                enumerate(tp.enumerate_variants(grid, space, a.sieve, tally))]
    ckpt = Path(a.checkpoint) if a.checkpoint else None
    done = _load_checkpoint(ckpt) if ckpt else {}
    todo = [v for v in variants if v[0] not in done]
    if a.limit is not None:
        todo = todo[:a.limit]

    def one(item):
        i, plan, reps = item
        label = tp.to_text(plan).strip()
        try:
            cand = sv.solve(tp.apply(grid, plan), model, cfg, plan=label, variant=i)
            return {"variant": i, "plan": label, "repeats": reps, "candidate": cand.to_dict()}
        except (ValueError, tp.SpecError) as e:
            return {"variant": i, "plan": label, "repeats": reps,
                    "error": f"{type(e).__name__}: {e}"}

    fh = ckpt.open("a", encoding="utf-8") if ckpt else None
    try:
        with ThreadPoolExecutor(max(1, a.jobs)) as ex:
            # map preserves variant order, so the checkpoint is append-only and ordered
            for rec in ex.map(one, todo):
                done[rec["variant"]] = rec
                if fh:
                    fh.write(json.dumps(rec, sort_keys=True) + "\n")
                    fh.flush()
    finally:
        if fh:
            fh.close()
    finished = [done[i] for i, _, _ in variants if i in done]
    ok = [r for r in finished if "candidate" in r]
    ok.sort(key=lambda r: (-r["candidate"]["score"], r["variant"]))
    report = {
        "tally": {"accepted": tally.accepted, "rejected": tally.rejected,
                  "invalid": tally.invalid},
        "complete": len(finished) == len(variants),
        "entries": [dict(r["candidate"], variant=r["variant"], repeats=r["repeats"])
                    for r in ok[:a.top]],
        "errors": [[r["plan"], r["error"]] for r in finished if "error" in r],
    }
    if a.csv:
        rows = ["rank,variant,repeats,score,plaintext"]
        rows += [f"{k},{e['variant']},{e['repeats']},{e['score']:.6f},{e['plaintext']}"
                 for k, e in enumerate(report["entries"], 1)]
        return "\n".join(rows) + "\n", EXIT_OK
    best = report["entries"][0]["score"] if report["entries"] else None
    code = EXIT_OK
    if a.threshold is not None and (best is None or best < a.threshold):
        code = EXIT_NOTHING
    return json.dumps(report, indent=2, sort_keys=True) + "\n", code


def cmd_generate_suite(ctx: Context) -> tuple[str, int]:
    a = ctx.args
    ref = None if a.profile == "none" else ctx.cipher(a.profile)
    manifest = gen.write_suite(a.out, a.count, a.seed, ref, a.policy, a.length)
    for p in sorted(Path(a.out).iterdir()):
        ctx.manifest.outputs[p.name] = data.sha256(p)
    return f"{manifest}\n", EXIT_OK


def cmd_shuffle_test(ctx: Context) -> tuple[str, int]:
    a = ctx.args
    grid = ctx.cipher(a.cipher)
    if a.statistic == "repeats":
        res = st.shuffle_baseline(grid, a.period, a.trials, a.seed, not a.no_junctions)
    elif a.statistic == "clean-rows":
        res = st.clean_row_baseline(grid, a.trials, a.seed)
    else:
        hits, trials = st.pivot_shuffle_incidence(grid, a.trials, a.seed)
        res = {"statistic": "pivot_pairs", "trials": trials, "seed": a.seed,
               "hits": hits, "rate": hits / trials,
               "observed": len(st.pivot_search(grid))}
    out = st._plain(res)
    if not a.histogram and isinstance(out, dict):
        out.pop("histogram", None)
    return st.to_json(out) + "\n", EXIT_OK


def cmd_segment(ctx: Context) -> tuple[str, int]:
    a = ctx.args
    text = ctx.read(a.file) if a.file else " ".join(a.text)
    words = lang.load_words(ctx.resolve(a.words)) if a.words else lang.english_words()
    lines = [lang.segment_words(lang.normalize(ln), words) for ln in text.splitlines() if
             lang.normalize(ln)]
    return "\n".join(lines) + "\n", EXIT_OK


def cmd_reproduce(ctx: Context) -> tuple[str, int]:
    a = ctx.args
    rep = reproduce(ctx.data_dir, key=a.key, corrections=not a.no_corrections)
    ctx.manifest.inputs.update(rep.digests)
    if a.section is not None:
        try:
            rep = rep.section(a.section)
        except ValueError as e:
            raise InputError(str(e)) from None
    if a.json:
        return json.dumps(rep.report(), indent=2, sort_keys=True) + "\n", EXIT_OK
    if a.letters:
        return rep.letters + "\n", EXIT_OK
    if a.raw:
        return rep.bracketed() + "\n", EXIT_OK
    return rep.corrected() + "\n", EXIT_OK


# --- parser -------------------------------------------------------------------

def _solver_args(p: argparse.ArgumentParser) -> None:
    d = sv.SolverConfig()
    p.add_argument("--model", help="n-gram counts or cache file (default: bundled corpus)")
    p.add_argument("--order", type=int, default=d.order)
    p.add_argument("--entropy-weight", type=float, default=d.entropy_weight)
    p.add_argument("--iterations", type=int, default=d.iterations)
    p.add_argument("--restarts", type=int, default=d.restarts)
    p.add_argument("--temperature", type=float, help="initial temperature (default: calibrated)")
    p.add_argument("--decay", type=float, help="geometric decay per step")
    p.add_argument("--cribs", help="crib file, lines position<TAB>TEXT")
    p.add_argument("--mode", choices=["linear", "per-row"], default="linear")
    p.add_argument("--threshold", type=float, help="exit 1 when the best score is below this")


def _spec_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", help="transposition spec or plan file")
    p.add_argument("--inline", help="single spec line, e.g. 'decimation n=1 m=2'")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="zodiac", description=__doc__.splitlines()[0])
    top.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--data-dir", help="directory that replaces the bundled data files")
    common.add_argument("--manifest", help="write a run manifest (JSON) to this path")
    common.add_argument("--csv", action="store_true", help="tabular output where available")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", parents=[common], help="repeat statistics of one grid")
    p.add_argument("cipher", help="cipher file, bundled name, or - for stdin")
    p.add_argument("--period", type=int, default=1)
    p.add_argument("--scan", type=_range, help="period range A..B")
    p.add_argument("--top", type=int, default=5)
    p.add_argument("--no-junctions", action="store_true",
                   help="count only bigrams inside each period chain")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("scan-periods", parents=[common], help="repeats for a range of periods")
    p.add_argument("cipher")
    p.add_argument("--range", type=_range)
    p.add_argument("--no-junctions", action="store_true")
    p.set_defaults(func=cmd_scan_periods)

    p = sub.add_parser("transpose", parents=[common], help="apply a transposition")
    p.add_argument("cipher")
    _spec_args(p)
    p.add_argument("--invert", action="store_true")
    p.set_defaults(func=cmd_transpose)

    p = sub.add_parser("solve", parents=[common], help="anneal a substitution key")
    p.add_argument("cipher")
    _spec_args(p)
    _solver_args(p)
    p.add_argument("--segment", action="store_true", help="add a word-spaced plaintext")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("enumerate-and-solve", parents=[common],
                       help="sieve a plan space and solve every surviving variant")
    p.add_argument("cipher")
    p.add_argument("--space", required=True, help="plan-space file")
    p.add_argument("--sieve", type=int, default=0, help="minimum period-1 repeats")
    p.add_argument("--checkpoint", help="JSON-lines file of finished variants (resumable)")
    p.add_argument("--limit", type=int, help="solve at most this many new variants")
    p.add_argument("--top", type=int, default=20)
    _solver_args(p)
    p.set_defaults(func=cmd_enumerate_and_solve)

    p = sub.add_parser("generate-suite", parents=[common], help="write test ciphers")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--out", required=True)
    p.add_argument("--length", type=int, default=340)
    p.add_argument("--profile", default="z340.cipher",
                   help="grid whose symbol-frequency profile to imitate, or 'none'")
    p.add_argument("--policy", choices=["cyclic", "random"], default="cyclic")
    p.set_defaults(func=cmd_generate_suite)

    p = sub.add_parser("shuffle-test", parents=[common], help="Monte Carlo shuffle baseline")
    p.add_argument("cipher")
    p.add_argument("--statistic", choices=["repeats", "clean-rows", "pivots"],
                   default="repeats")
    p.add_argument("--period", type=int, default=1)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--no-junctions", action="store_true")
    p.add_argument("--histogram", action="store_true")
    p.set_defaults(func=cmd_shuffle_test)

    p = sub.add_parser("segment", parents=[common], help="insert word spaces")
    p.add_argument("text", nargs="*")
    p.add_argument("--file")
    p.add_argument("--words", help="word list, WORD or WORD<TAB>zipf per line")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("reproduce-z340", parents=[common], help="decrypt Z340 end to end")
    p.add_argument("--raw", action="store_true", help="misspellings in [RAW: READING] form")
    p.add_argument("--section", type=int, help="only letters from this plan section")
    p.add_argument("--no-corrections", action="store_true",
                   help="drop the row shift and the LIFE IS exclusion")
    p.add_argument("--key", choices=["final", "initial"], default="final")
    p.add_argument("--letters", action="store_true", help="undivided letters")
    p.add_argument("--json", action="store_true", help="full report")
    p.set_defaults(func=cmd_reproduce)
    return top


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    ctx = Context(args)
    try:
        out, code = args.func(ctx)
    except (InputError, FormatError, KeyCoverageError, tp.SpecError, IntegrityError,
            st.PreconditionError, lang.PreconditionError, lang.BuildError, sv.CribConflictError,
            FileNotFoundError, ValueError) as e:
        print(f"zodiac {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(out)
    sys.stdout.flush()
    if args.manifest:
        ctx.manifest.outputs.setdefault("stdout", _digest(out.encode("utf-8")))
        Path(args.manifest).write_text(ctx.manifest.to_json(), encoding="utf-8")
    return code


if __name__ == "__main__":
    sys.exit(main())
