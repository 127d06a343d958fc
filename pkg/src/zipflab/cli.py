"""Command-line surface: reproducible experiments with fixed output schemas.

Subcommands: theory, generate, fit, corpus, compare, rerun. Every run
writes a manifest.json from which `zipflab rerun` reproduces the outputs
byte for byte. Exit codes: 0 success, 2 usage error, 3 data error,
4 internal error.

The default output directory is --out, falling back to $ZIPFLAB_OUT,
falling back to the current directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from . import __version__
from . import io as zio
from .analytic import (
    ModelParams,
    SurvivalProfile,
    analytic_blocks,
    format_profile,
    parse_profile,
    profile_gamma,
    tail_slope,
    theoretical_exponent,
    unfiltered_exponent,
)
from .corpus import (
    ComparisonConfig,
    TokenizationConfig,
    compare_model_to_corpus,
    ingest_text,
    mean_token_length,
    space_prob_from_mean_length,
)
from .errors import DataError, InternalError, ParameterError, ZipflabError
from .estimate import (
    default_fit_window,
    empirical_block_points,
    fit_exponent_mle,
    fit_exponent_ols,
    fit_exponent_points,
    head_mass,
    log_binned_curve,
    rank_frequency,
)
from .generate import (
    GenerationConfig,
    Speller,
    filtered_token_chunks,
    run_symbol_stream,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("ZIPFLAB_OUT") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _model_args(p: argparse.ArgumentParser, with_profile: bool = True) -> None:
    p.add_argument("-m", "--alphabet-size", type=int, default=26,
                   help="number of non-space symbols (default 26)")
    p.add_argument("-q", "--space-prob", type=float, default=0.18,
                   help="space-symbol probability (default 0.18)")
    if with_profile:
        p.add_argument("--profile", default="unfiltered",
                       help="survival profile spec: unfiltered | gamma:C=..,g=.. | "
                            "poly:c0=..,c1=..,b=.. | table:k3=10,...,default=...")
        p.add_argument("--k-min", type=int, default=1, help="minimum word length (default 1)")
        p.add_argument("--k-max", type=int, default=40,
                       help="analytic/generation truncation length (default 40)")


def _build_model(args) -> tuple[ModelParams, SurvivalProfile]:
    params = ModelParams(alphabet_size=args.alphabet_size, space_prob=args.space_prob)
    variant = parse_profile(args.profile)
    profile = SurvivalProfile(variant=variant, k_min=args.k_min, k_max=args.k_max)
    return params, profile


def _record_model_args(args, extra: dict) -> dict:
    rec = {
        "alphabet_size": args.alphabet_size,
        "space_prob": args.space_prob,
        "profile": format_profile(parse_profile(args.profile)),
        "k_min": args.k_min,
        "k_max": args.k_max,
    }
    rec.update(extra)
    return rec


# ---------------------------------------------------------------------------
# theory
# ---------------------------------------------------------------------------


def cmd_theory(args) -> int:
    out = _out_dir(args)
    params, profile = _build_model(args)
    curve = analytic_blocks(params, profile, mode=args.normalization)
    zio.write_blocks_csv(out / "theory_blocks.csv", curve)
    outputs = ["theory_blocks.csv", "theory.json"]
    if args.expand:
        table = curve.expand(cap=args.cap)
        zio.write_table_csv(out / "theory_table.csv", table)
        outputs.insert(1, "theory_table.csv")
    gamma = profile_gamma(profile)
    report = {
        "alphabet_size": params.alphabet_size,
        "space_prob": params.space_prob,
        "profile": format_profile(profile.variant),
        "k_min": profile.k_min,
        "k_max": profile.k_max,
        "normalization_mode": curve.mode,
        "normalization_constant": curve.normalization,
        "tail_mass": curve.tail_mass,
        "excluded_mass": curve.excluded_mass,
        "total_types": curve.total_types,
        "total_mass": curve.total_mass,
        "n_blocks": len(curve.blocks),
        "alpha_unfiltered": unfiltered_exponent(params),
        "profile_gamma": gamma,
        "alpha_formula": theoretical_exponent(params, gamma) if gamma else None,
        "alpha_asymptotic": tail_slope(params, gamma) if gamma else None,
    }
    zio.write_json(out / "theory.json", report)
    zio.write_manifest(
        out, "theory",
        _record_model_args(args, {
            "normalization": args.normalization,
            "expand": args.expand,
            "cap": args.cap,
        }),
        __version__, output_names=outputs,
    )
    print(f"wrote {', '.join(outputs)} to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    out = _out_dir(args)
    params, profile = _build_model(args)
    if args.symbols is not None:
        config = GenerationConfig(
            params=params, profile=profile, n_symbols=args.symbols,
            seed=args.seed, chunk_size=args.chunk_size,
        )
        with open(out / "stream.txt", "w", encoding="utf-8", newline="\n") as sink:
            report, _ = run_symbol_stream(config, text_sink=sink, count_words=False)
        zio.write_json(out / "report.json", report.to_json_dict())
        outputs = ["stream.txt", "report.json"]
    else:
        config = GenerationConfig(
            params=params, profile=profile, n_tokens=args.tokens,
            seed=args.seed, mode=args.mode, chunk_size=args.chunk_size,
        )
        token_file = "tokens.txt" if args.format == "text" else "tokens.bin"
        report = _write_token_run(config, out / token_file, args.format)
        zio.write_json(out / "report.json", report.to_json_dict())
        outputs = [token_file, "report.json"]
    zio.write_manifest(
        out, "generate",
        _record_model_args(args, {
            "tokens": args.tokens,
            "symbols": args.symbols,
            "seed": args.seed,
            "mode": args.mode,
            "format": args.format,
            "chunk_size": args.chunk_size,
        }),
        __version__, output_names=outputs,
    )
    print(f"wrote {', '.join(outputs)} to {out}")
    return EXIT_OK


def _write_token_run(config: GenerationConfig, path: Path, fmt: str):
    """Stream tokens to disk while aggregating the run report."""
    from .generate import HISTOGRAM_CAP, GenerationReport, TypeId

    speller = Speller(config.params, config.profile) if fmt == "text" else None
    histogram: Counter = Counter()
    overflow = 0
    rejected = 0
    emitted = 0
    distinct = set()
    sink = open(path, "w", encoding="utf-8", newline="\n") if fmt == "text" else open(path, "wb")
    try:
        if fmt == "compact":
            sink.write(zio.token_header())
        for chunk in filtered_token_chunks(config):
            rejected += chunk.rejections  # type: ignore[attr-defined]
            emitted += chunk.size
            pieces: list = [None] * chunk.size
            for k, (pos, idx) in chunk.groups.items():
                n = len(pos)
                if k <= HISTOGRAM_CAP:
                    histogram[k] += n
                else:
                    overflow += n
                if speller is not None:
                    spelled = speller.spell_group(k, idx)
                    for p, s in zip(pos.tolist(), spelled):
                        pieces[p] = s
                    for i in (idx.tolist() if isinstance(idx, np.ndarray) else idx):
                        distinct.add((k, int(i)))
                else:
                    enc = [
                        zio._uleb(k) + zio._uleb(int(i))
                        for i in (idx.tolist() if isinstance(idx, np.ndarray) else idx)
                    ]
                    for p, blob in zip(pos.tolist(), enc):
                        pieces[p] = blob
                    for i in (idx.tolist() if isinstance(idx, np.ndarray) else idx):
                        distinct.add((k, int(i)))
            if fmt == "text":
                sink.write("\n".join(pieces) + "\n")
            else:
                sink.write(b"".join(pieces))
    finally:
        sink.close()
    return GenerationReport(
        mode=config.mode,
        seed=config.seed,
        tokens_emitted=emitted,
        rejected_tokens=rejected if config.mode == "rejection" else None,
        length_histogram=dict(histogram),
        histogram_overflow=overflow,
        distinct_types=len(distinct),
    )


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


def _load_counts_table(args):
    """Build a rank-frequency table from --table or --tokens input."""
    if args.table:
        return zio.read_table_csv(args.table), None
    fmt = zio.sniff_token_file(args.tokens)
    counts = (
        zio.read_tokens_compact(args.tokens)
        if fmt == "compact"
        else zio.read_tokens_text(args.tokens)
    )
    if not counts:
        raise DataError(f"{args.tokens}: no tokens")
    table = rank_frequency(counts, provenance="simulated")
    return table, counts


def cmd_fit(args) -> int:
    out = _out_dir(args)
    table, counts = _load_counts_table(args)
    r_min, r_max = default_fit_window(table)
    if args.r_min is not None:
        r_min = args.r_min
    if args.r_max is not None:
        r_max = args.r_max
    if args.method == "ols":
        result = fit_exponent_ols(table, r_min, r_max)
    elif args.method == "mle":
        result = fit_exponent_mle(table, r_min=r_min, r_max=args.r_max)
    elif args.method == "ols-binned":
        pts = log_binned_curve(table, args.bins_per_decade)
        result = fit_exponent_points(pts, r_min=r_min, r_max=r_max, points_kind="log_binned")
    else:  # ols-blocks: needs the model for block structure
        params, profile = _build_model(args)
        curve = analytic_blocks(params, profile)
        if counts is None:
            raise ParameterError("--method ols-blocks requires --tokens input")
        length_counts: Counter = Counter()
        for key, c in counts.items():
            length = key.length if hasattr(key, "length") else len(key)
            length_counts[length] += c
        pts = empirical_block_points(length_counts, sum(counts.values()), curve)
        result = fit_exponent_points(pts, r_min=args.r_min, r_max=args.r_max)
    zio.write_json(out / "fit.json", result.to_json_dict())
    inputs = [args.table or args.tokens]
    record = {
        "table": args.table,
        "tokens": args.tokens,
        "method": args.method,
        "r_min": args.r_min,
        "r_max": args.r_max,
        "bins_per_decade": args.bins_per_decade,
    }
    if args.method == "ols-blocks":
        record = _record_model_args(args, record)
    zio.write_manifest(out, "fit", record, __version__, inputs=inputs,
                       output_names=["fit.json"])
    print(
        f"alpha_hat={result.alpha_hat:.6f} method={result.method} "
        f"points={result.points} window=[{result.r_min}, {result.r_max}] "
        f"stderr={result.stderr:.4g} gof={result.gof:.4g}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# corpus
# ---------------------------------------------------------------------------


def cmd_corpus(args) -> int:
    out = _out_dir(args)
    config = TokenizationConfig(
        lowercase=args.lowercase,
        strip_punctuation=args.strip_punctuation,
        token_pattern=args.pattern,
        min_token_length=args.min_token_length,
    )
    totals: Counter = Counter()
    replaced = 0
    bytes_read = 0
    for path in args.paths:
        counts, report = ingest_text(path, config)
        totals.update(counts)
        replaced += report.replaced_chars
        bytes_read += report.bytes_read
    table = rank_frequency(totals, provenance="empirical")
    zio.write_table_csv(out / "corpus_table.csv", table)
    mean_len = mean_token_length(totals)
    head = {
        "total_tokens": sum(totals.values()),
        "distinct_tokens": len(totals),
        "replaced_chars": replaced,
        "bytes_read": bytes_read,
        "mean_token_length": mean_len,
        "space_prob_estimate": space_prob_from_mean_length(mean_len),
        "head_mass": {},
    }
    for n in (10, 20):
        if n <= len(table):
            head["head_mass"][str(n)] = head_mass(table, n).mass
    zio.write_json(out / "head.json", head)
    zio.write_manifest(
        out, "corpus",
        {
            "paths": list(args.paths),
            "lowercase": args.lowercase,
            "strip_punctuation": args.strip_punctuation,
            "pattern": args.pattern,
            "min_token_length": args.min_token_length,
        },
        __version__, inputs=list(args.paths),
        output_names=["corpus_table.csv", "head.json"],
    )
    print(f"wrote corpus_table.csv, head.json to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------


def cmd_compare(args) -> int:
    out = _out_dir(args)
    params, profile = _build_model(args)
    table = zio.read_table_csv(args.table)
    cmp_config = ComparisonConfig(
        r_min=args.r_min if args.r_min is not None else 50,
        r_max=args.r_max,
        bins_per_decade=args.bins_per_decade,
        run_mle=not args.no_mle,
    )
    report, curve = compare_model_to_corpus(table, params, profile, cmp_config)
    zio.write_json(out / "compare.json", report.to_json_dict())
    zio.write_points_csv(
        out / "overlay.csv",
        [("empirical", report.empirical_binned), ("model", report.model_binned)],
    )
    zio.write_manifest(
        out, "compare",
        _record_model_args(args, {
            "table": args.table,
            "r_min": args.r_min,
            "r_max": args.r_max,
            "bins_per_decade": args.bins_per_decade,
            "no_mle": args.no_mle,
        }),
        __version__, inputs=[args.table],
        output_names=["compare.json", "overlay.csv"],
    )
    gap = report.exponent_gap
    print(
        f"empirical alpha={report.empirical_ols.alpha_hat:.4f}; "
        f"model asymptotic alpha={report.asymptotic_alpha}; gap={gap}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# rerun
# ---------------------------------------------------------------------------


def cmd_rerun(args) -> int:
    manifest = zio.read_json(args.manifest)
    for path, digest in manifest.get("inputs", {}).items():
        actual = zio.sha256_file(path)
        if actual != digest:
            raise DataError(
                f"input {path} changed since the original run "
                f"(sha256 {actual} != {digest})"
            )
    command = manifest["command"]
    margs = manifest["args"]
    argv = _argv_from_manifest(command, margs)
    if args.out:
        argv += ["--out", args.out]
    return main(argv)


def _argv_from_manifest(command: str, margs: dict) -> list[str]:
    argv = [command]
    flags = {
        "alphabet_size": "-m", "space_prob": "-q", "profile": "--profile",
        "k_min": "--k-min", "k_max": "--k-max", "normalization": "--normalization",
        "cap": "--cap", "tokens": "--tokens", "symbols": "--symbols",
        "seed": "--seed", "mode": "--mode", "format": "--format",
        "chunk_size": "--chunk-size", "table": "--table", "method": "--method",
        "r_min": "--r-min", "r_max": "--r-max", "bins_per_decade": "--bins-per-decade",
        "pattern": "--pattern", "min_token_length": "--min-token-length",
    }
    booleans = {
        "expand": ("--expand", None),
        "lowercase": ("--lowercase", "--no-lowercase"),
        "strip_punctuation": ("--strip-punctuation", "--no-strip-punctuation"),
        "no_mle": ("--no-mle", None),
    }
    for key, val in margs.items():
        if key == "paths":
            continue
        if key in booleans:
            on, off = booleans[key]
            if val and on:
                argv.append(on)
            elif not val and off:
                argv.append(off)
        elif key in flags and val is not None:
            argv += [flags[key], str(val)]
    argv += [str(p) for p in margs.get("paths", [])]
    return argv


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zipflab",
        description="Rank-frequency laws of filtered random-typing text: "
                    "analytic curves, simulation, exponent fits, corpus comparison.",
    )
    parser.add_argument("--version", action="version", version=f"zipflab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="write the analytic rank-frequency table")
    _model_args(p)
    p.add_argument("--normalization", choices=["renormalized", "unnormalized"],
                   default="renormalized")
    p.add_argument("--expand", action="store_true",
                   help="also write the expanded per-rank table")
    p.add_argument("--cap", type=int, default=10_000_000,
                   help="entry cap for --expand (default 1e7)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("generate", help="simulate tokens or a raw symbol stream")
    _model_args(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--tokens", type=int, default=None,
                       help="number of filtered tokens to emit")
    group.add_argument("--symbols", type=int, default=None,
                       help="raw-stream mode: number of symbols to emit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["renormalized", "rejection"], default="renormalized")
    p.add_argument("--format", choices=["text", "compact"], default="text")
    p.add_argument("--chunk-size", type=int, default=1 << 20)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit a Zipf exponent to a table or token file")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--table", default=None, help="rank,count,frequency CSV")
    src.add_argument("--tokens", default=None, help="token file (text or compact)")
    p.add_argument("--method", choices=["ols", "mle", "ols-binned", "ols-blocks"],
                   default="ols")
    p.add_argument("--r-min", type=int, default=None)
    p.add_argument("--r-max", type=int, default=None)
    p.add_argument("--bins-per-decade", type=int, default=5)
    _model_args(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("corpus", help="tokenize local text files into a table")
    p.add_argument("paths", nargs="+")
    p.add_argument("--lowercase", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--strip-punctuation", action=argparse.BooleanOptionalAction,
                   default=True)
    p.add_argument("--pattern", choices=["whitespace_blocks", "letter_blocks"],
                   default="whitespace_blocks")
    p.add_argument("--min-token-length", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("compare", help="compare an empirical table against the model")
    p.add_argument("--table", required=True)
    _model_args(p)
    p.add_argument("--r-min", type=int, default=None)
    p.add_argument("--r-max", type=int, default=None)
    p.add_argument("--bins-per-decade", type=int, default=5)
    p.add_argument("--no-mle", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("rerun", help="re-execute a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_rerun)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ZipflabError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
