"""Command-line entry point: one binary, one subcommand per module.

Exit codes: 0 success, 1 domain error, 2 usage error. Data goes to stdout,
diagnostics to stderr. Global flags (--json, --quiet, --seed, --config) are
accepted both before and after the subcommand.
"""

from __future__ import annotations

import argparse
import base64
import csv
import json
import sys
from collections import Counter
from pathlib import Path

from . import __version__, corpusfilter, disfluency, metrics, textprep
from .errors import SstkitError


def _tau_type(value: str) -> float:
    try:
        tau = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {value!r}")
    if not -1.0 <= tau <= 1.0:
        raise argparse.ArgumentTypeError(f"tau must be in [-1, 1], got {value}")
    return tau


def _positive_int(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}")
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return n


def _levels_type(value: str) -> list[int]:
    try:
        levels = [int(v) for v in value.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"levels must be comma-separated integers: {value!r}")
    if not levels or sorted(levels) != levels:
        raise argparse.ArgumentTypeError("levels must be nonempty and ascending")
    return levels


def _global_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument(
        "--json", action="store_true", default=argparse.SUPPRESS,
        help="emit machine-readable JSON on stdout",
    )
    parent.add_argument(
        "--quiet", action="store_true", default=argparse.SUPPRESS,
        help="suppress diagnostics on stderr",
    )
    parent.add_argument(
        "--seed", type=int, default=argparse.SUPPRESS, metavar="N",
        help="seed for randomized operations",
    )
    parent.add_argument(
        "--config", default=argparse.SUPPRESS, metavar="PATH",
        help="configuration file (JSON)",
    )
    return parent


def build_parser() -> argparse.ArgumentParser:
    top = _global_flags()
    parser = argparse.ArgumentParser(
        prog="sstkit",
        parents=[top],
        description="Cascaded speech translation toolkit: pipeline, serving, "
        "corpus filtering, metrics and load testing.",
    )
    parser.add_argument("--version", action="version", version=f"sstkit {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    # bpe ------------------------------------------------------------------
    bpe = sub.add_parser("bpe", help="byte-pair encoding", parents=[top])
    bpe_sub = bpe.add_subparsers(dest="bpe_command", metavar="ACTION")
    learn = bpe_sub.add_parser("learn", help="learn merges from a corpus", parents=[top])
    learn.add_argument("--in", dest="infile", required=True, metavar="FILE")
    learn.add_argument("--merges", type=int, required=True, metavar="N")
    learn.add_argument("--out", required=True, metavar="FILE")
    learn.add_argument("--lang", default="en", choices=["en", "hi", "mr"])
    apply_p = bpe_sub.add_parser("apply", help="split text into subwords", parents=[top])
    apply_p.add_argument("--model", required=True, metavar="FILE")
    apply_p.add_argument("--in", dest="infile", required=True, metavar="FILE")

    # dc -------------------------------------------------------------------
    dc = sub.add_parser("dc", help="disfluency correction", parents=[top])
    dc_sub = dc.add_subparsers(dest="dc_command", metavar="ACTION")
    correct = dc_sub.add_parser("correct", help="remove disfluencies", parents=[top])
    correct.add_argument("--lang", default="en", choices=["en", "hi", "mr"])
    correct.add_argument("--in", dest="infile", required=True, metavar="FILE")
    inject = dc_sub.add_parser("inject", help="insert synthetic disfluencies", parents=[top])
    inject.add_argument("--lang", default="en", choices=["en", "hi", "mr"])
    inject.add_argument("--in", dest="infile", required=True, metavar="FILE")
    ev = dc_sub.add_parser("eval", help="score predicted labels", parents=[top])
    ev.add_argument("--pred", required=True, metavar="TSV")
    ev.add_argument("--gold", required=True, metavar="TSV")

    # metrics ---------------------------------------------------------------
    met = sub.add_parser("metrics", help="evaluation metrics", parents=[top])
    met_sub = met.add_subparsers(dest="metrics_command", metavar="METRIC")
    wer_p = met_sub.add_parser("wer", help="word error rate", parents=[top])
    wer_p.add_argument("--ref", required=True, metavar="FILE")
    wer_p.add_argument("--hyp", required=True, metavar="FILE")
    bleu_p = met_sub.add_parser("bleu", help="corpus BLEU", parents=[top])
    bleu_p.add_argument("--ref", required=True, metavar="FILE")
    bleu_p.add_argument("--hyp", required=True, metavar="FILE")
    bleu_p.add_argument("--smooth", choices=["none", "exp"], default="none")
    mos_p = met_sub.add_parser("mos", help="mean opinion score", parents=[top])
    mos_p.add_argument("--aq", required=True, metavar="RATING")
    mos_p.add_argument("--i", required=True, metavar="RATING")
    kpi_p = met_sub.add_parser("kpi", help="aggregate survey ratings", parents=[top])
    kpi_p.add_argument("--in", dest="infile", required=True, metavar="CSV")

    # filter ----------------------------------------------------------------
    filt = sub.add_parser("filter", help="parallel corpus filtering", parents=[top])
    filt_sub = filt.add_subparsers(dest="filter_command", metavar="TASK")

    def add_backend_flags(p):
        p.add_argument("--src", required=True, metavar="FILE")
        p.add_argument("--tgt", required=True, metavar="FILE")
        p.add_argument("--backend", choices=["test", "remote"], default="test")
        p.add_argument("--url", metavar="URL", help="remote embedder base URL")

    score = filt_sub.add_parser("score", help="score sentence pairs", parents=[top])
    add_backend_flags(score)
    extract = filt_sub.add_parser("extract", help="keep pairs above a threshold", parents=[top])
    add_backend_flags(extract)
    extract.add_argument("--tau", type=_tau_type, required=True, metavar="T")
    extract.add_argument("--kept", metavar="FILE", help="write kept pairs here")
    extract.add_argument("--dropped", metavar="FILE", help="write dropped pairs here")
    align = filt_sub.add_parser("align", help="realign a misaligned corpus", parents=[top])
    add_backend_flags(align)
    align.add_argument("--mode", choices=["argmax", "one2one"], default="one2one")

    # run -------------------------------------------------------------------
    run_p = sub.add_parser("run", help="run the speech pipeline on a WAV file", parents=[top])
    run_p.add_argument("--in", dest="infile", required=True, metavar="WAV")
    run_p.add_argument("--src", required=True, choices=["en", "hi", "mr"])
    run_p.add_argument("--tgt", required=True, choices=["en", "hi", "mr"])
    run_p.add_argument("--pivot", choices=["en", "hi", "mr"])
    run_p.add_argument("--out", metavar="WAV", help="write synthesized audio here")
    run_p.add_argument("--trace", metavar="JSON", help="write the stage trace here")

    # serve -----------------------------------------------------------------
    serve_p = sub.add_parser("serve", help="start the HTTP service", parents=[top])
    serve_p.add_argument("--port", type=int, metavar="PORT", help="override config port")
    serve_p.add_argument("--host", metavar="HOST", help="override config host")

    # loadtest --------------------------------------------------------------
    lt = sub.add_parser("loadtest", help="closed-loop load testing", parents=[top])
    lt_sub = lt.add_subparsers(dest="loadtest_command", metavar="ACTION")
    lt_run = lt_sub.add_parser("run", help="one load level against a target", parents=[top])
    lt_run.add_argument("--target", required=True, metavar="URL")
    lt_run.add_argument("--users", type=_positive_int, required=True, metavar="N")
    lt_run.add_argument("--duration", type=float, required=True, metavar="S")
    lt_run.add_argument("--think", type=float, default=0.0, metavar="MS")
    lt_run.add_argument("--payload", metavar="JSON_FILE", help="request body template")
    lt_sweep = lt_sub.add_parser("sweep", help="sweep user levels, compare targets", parents=[top])
    lt_sweep.add_argument("--levels", type=_levels_type, required=True, metavar="N,N,...")
    lt_sweep.add_argument("--deployed", required=True, metavar="URL")
    lt_sweep.add_argument("--baseline", required=True, metavar="URL")
    lt_sweep.add_argument("--duration", type=float, default=30.0, metavar="S")
    lt_sweep.add_argument("--think", type=float, default=0.0, metavar="MS")
    lt_sweep.add_argument("--payload", metavar="JSON_FILE", help="request body template")
    lt_sweep.add_argument("--out", metavar="REPORT", help="report path (.json/.md, or stem for both)")

    return parser


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _opt(args, name, default=None):
    return getattr(args, name, default)


def _emit(args, data: dict, human: str) -> None:
    if _opt(args, "json", False):
        print(json.dumps(data, ensure_ascii=False))
    else:
        print(human)


def _read_lines(path: str) -> list[str]:
    p = Path(path)
    if not p.is_file():
        raise SstkitError(f"file not found: {path}")
    return p.read_text(encoding="utf-8").splitlines()


def _make_backend(args):
    if args.backend == "remote":
        if not args.url:
            raise SstkitError("--backend remote requires --url")
        return corpusfilter.RemoteEmbedder(args.url)
    return corpusfilter.DeterministicEmbedder()


def _effective_seed(args) -> int:
    return _opt(args, "seed", 0) or 0


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_bpe_learn(args) -> int:
    counts: Counter[str] = Counter()
    for line in _read_lines(args.infile):
        norm = textprep.normalize(line, args.lang)
        counts.update(textprep.tokenize(norm))
    model = textprep.bpe_learn(counts, args.merges)
    textprep.save_bpe(model, args.out)
    _emit(
        args,
        {"merges_learned": len(model.merges), "merges_requested": args.merges,
         "out": args.out, "eow_marker": model.eow_marker},
        f"learned {len(model.merges)} merges (requested {args.merges}) -> {args.out}",
    )
    return 0


def _cmd_bpe_apply(args) -> int:
    model = textprep.load_bpe(args.model)
    lines_out = []
    for line in _read_lines(args.infile):
        subwords: list[str] = []
        for token in line.split():
            subwords.extend(textprep.bpe_apply(model, token))
        lines_out.append(subwords)
    if _opt(args, "json", False):
        print(json.dumps({"lines": lines_out}, ensure_ascii=False))
    else:
        for subwords in lines_out:
            print(" ".join(subwords))
    return 0


def _cmd_dc_correct(args) -> int:
    lexicons = disfluency.load_lexicons(args.lang)
    sentences = []
    for line in _read_lines(args.infile):
        tokens = textprep.tokenize(textprep.normalize(line, args.lang))
        fluent, labeled = disfluency.correct(tokens, lexicons)
        sentences.append(
            {"fluent": textprep.detokenize(fluent), "tokens": labeled.tokens,
             "labels": [1 if d else 0 for d in labeled.labels]}
        )
    if _opt(args, "json", False):
        print(json.dumps({"sentences": sentences}, ensure_ascii=False))
    else:
        for s in sentences:
            print(s["fluent"])
    return 0


def _cmd_dc_inject(args) -> int:
    lexicons = disfluency.load_lexicons(args.lang)
    config_path = _opt(args, "config")
    if config_path:
        config = disfluency.InjectionConfig.from_dict(
            json.loads(Path(config_path).read_text(encoding="utf-8"))
        )
    else:
        config = disfluency.InjectionConfig(
            p_filled_pause=0.5, p_interjection=0.3, p_discourse_marker=0.3,
            p_repetition=0.5,
        )
    seed = _effective_seed(args)
    sentences = []
    for idx, line in enumerate(_read_lines(args.infile)):
        tokens = textprep.tokenize(textprep.normalize(line, args.lang))
        if not tokens:
            continue
        labeled = disfluency.inject(tokens, config, seed=seed + idx, lexicons=lexicons)
        sentences.append(labeled)
    if _opt(args, "json", False):
        print(json.dumps(
            {"sentences": [
                {"tokens": s.tokens, "labels": [1 if d else 0 for d in s.labels]}
                for s in sentences
            ]},
            ensure_ascii=False,
        ))
    else:
        blocks = [
            "\n".join(f"{t}\t{1 if d else 0}" for t, d in zip(s.tokens, s.labels))
            for s in sentences
        ]
        print("\n\n".join(blocks))
    return 0


def _cmd_dc_eval(args) -> int:
    pred = disfluency.read_label_tsv(args.pred)
    gold = disfluency.read_label_tsv(args.gold)
    if len(pred) != len(gold):
        raise SstkitError(f"{len(pred)} predicted sentences vs {len(gold)} gold")
    result = disfluency.evaluate_corpus(zip(pred, gold))
    _emit(
        args,
        {"precision": result.precision, "recall": result.recall, "f1": result.f1,
         "tp": result.tp, "fp": result.fp, "fn": result.fn,
         "no_positives": result.no_positives},
        f"precision={result.precision:.4f} recall={result.recall:.4f} f1={result.f1:.4f}"
        + (" (no positives)" if result.no_positives else ""),
    )
    return 0


def _cmd_metrics_wer(args) -> int:
    refs = _read_lines(args.ref)
    hyps = _read_lines(args.hyp)
    if len(refs) != len(hyps):
        raise SstkitError(f"{len(refs)} reference lines vs {len(hyps)} hypothesis lines")
    total = metrics.WerBreakdown(0, 0, 0, 0)
    for ref_line, hyp_line in zip(refs, hyps):
        total = total + metrics.wer(ref_line.split(), hyp_line.split())
    _emit(
        args,
        {"wer": total.wer, "substitutions": total.substitutions,
         "deletions": total.deletions, "insertions": total.insertions,
         "hits": total.hits, "ref_len": total.ref_len},
        f"WER {total.wer:.4f} (S={total.substitutions} D={total.deletions} "
        f"I={total.insertions} C={total.hits} N={total.ref_len})",
    )
    return 0


def _cmd_metrics_bleu(args) -> int:
    refs = _read_lines(args.ref)
    hyps = _read_lines(args.hyp)
    result = metrics.bleu(hyps, refs, smooth=args.smooth)
    _emit(
        args,
        {"bleu": result.score, "precisions": list(result.ngram_precisions),
         "brevity_penalty": result.brevity_penalty,
         "hyp_len": result.hyp_len, "ref_len": result.ref_len},
        f"BLEU {result.score:.2f} (BP={result.brevity_penalty:.4f}, "
        f"precisions={'/'.join(f'{p:.3f}' for p in result.ngram_precisions)})",
    )
    return 0


def _cmd_metrics_mos(args) -> int:
    result = metrics.mos(args.aq, args.i)
    report = result.report()
    _emit(args, report, f"{report['mos']:.2f}")
    return 0


def _cmd_metrics_kpi(args) -> int:
    path = Path(args.infile)
    if not path.is_file():
        raise SstkitError(f"file not found: {args.infile}")
    by_pair: dict[str, list[tuple]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = {"rater", "pair", "tq", "sq", "i"}
        if reader.fieldnames is None or set(reader.fieldnames) != expected:
            raise SstkitError(f"{args.infile}: header must be rater,pair,tq,sq,i")
        for row in reader:
            by_pair.setdefault(row["pair"], []).append((row["tq"], row["sq"], row["i"]))
    summaries = {
        pair: metrics.kpi_aggregate(rows).report() for pair, rows in sorted(by_pair.items())
    }
    human = "\n".join(
        f"{pair}: tq={s['tq']:.2f} sq={s['sq']:.2f} i={s['i']:.2f} (n={s['n_raters']})"
        for pair, s in summaries.items()
    )
    _emit(args, {"pairs": summaries}, human)
    return 0


def _load_parallel(args) -> tuple[list[str], list[str]]:
    src = _read_lines(args.src)
    tgt = _read_lines(args.tgt)
    if len(src) != len(tgt) and _opt(args, "filter_command") != "align":
        raise SstkitError(f"{len(src)} source lines vs {len(tgt)} target lines")
    return src, tgt


def _cmd_filter_score(args) -> int:
    src, tgt = _load_parallel(args)
    pairs = corpusfilter.score_pairs(src, tgt, _make_backend(args))
    if _opt(args, "json", False):
        print(json.dumps({"scores": [round(p.score, 6) for p in pairs]}))
    else:
        for p in pairs:
            print(f"{p.src}\t{p.tgt}\t{corpusfilter.format_score(p.score)}")
    return 0


def _cmd_filter_extract(args) -> int:
    src, tgt = _load_parallel(args)
    pairs = corpusfilter.score_pairs(src, tgt, _make_backend(args))
    kept, dropped = corpusfilter.filter_by_threshold(pairs, args.tau)

    def dump(pairs_list, path):
        lines = [f"{p.src}\t{p.tgt}\t{corpusfilter.format_score(p.score)}" for p in pairs_list]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")

    if args.kept:
        dump(kept, args.kept)
    if args.dropped:
        dump(dropped, args.dropped)
    if _opt(args, "json", False):
        print(json.dumps({"tau": args.tau, "kept": len(kept), "dropped": len(dropped)}))
    else:
        if not args.kept:
            for p in kept:
                print(f"{p.src}\t{p.tgt}\t{corpusfilter.format_score(p.score)}")
        if not _opt(args, "quiet", False):
            print(f"kept {len(kept)} / dropped {len(dropped)} at tau={args.tau}", file=sys.stderr)
    return 0


def _cmd_filter_align(args) -> int:
    src = _read_lines(args.src)
    tgt = _read_lines(args.tgt)
    mode = "one-to-one" if args.mode == "one2one" else "argmax"
    result = corpusfilter.realign(src, tgt, _make_backend(args), mode=mode)
    if _opt(args, "json", False):
        print(json.dumps(
            {"mode": result.mode,
             "matches": [[i, j, round(s, 6)] for i, j, s in result.matches]}
        ))
    else:
        for i, j, s in result.matches:
            print(f"{i}\t{j}\t{corpusfilter.format_score(s)}")
    return 0


def _cmd_run(args) -> int:
    from .audio import read_wav, write_wav
    from .httpapi import ServerConfig
    from .pipeline import Pipeline, PipelineConfig

    config_path = _opt(args, "config")
    if config_path:
        server_cfg = ServerConfig.load(config_path)
        codec, lexicons, dc_dir = server_cfg.codec, server_cfg.mt_lexicons, server_cfg.dc_lexicon_dir
    else:
        from .codec import CodecParams

        codec, lexicons, dc_dir = CodecParams(), {}, None
    cfg = PipelineConfig(
        src_lang=args.src, tgt_lang=args.tgt, pivot=args.pivot,
        mt_lexicons=lexicons, dc_lexicon_dir=dc_dir, codec=codec,
    )
    utterance = read_wav(args.infile)
    trace = Pipeline(cfg).run(utterance)
    if args.out:
        write_wav(trace.audio, args.out)
    if args.trace:
        Path(args.trace).write_text(
            json.dumps(trace.to_dict(), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
    _emit(args, trace.to_dict(), trace.translation)
    return 0


def _cmd_serve(args) -> int:
    from .httpapi import ServerConfig, serve_http

    config_path = _opt(args, "config")
    config = ServerConfig.load(config_path) if config_path else ServerConfig()
    if args.port is not None:
        config.port = args.port
    if args.host is not None:
        config.host = args.host
    if not _opt(args, "quiet", False):
        total = config.devices * config.replicas_per_device
        print(
            f"serving {config.devices} device(s) x {config.replicas_per_device} "
            f"replica(s) = {total} replicas on {config.host}:{config.port}",
            file=sys.stderr,
        )
    serve_http(config)
    return 0


def _load_payload(args):
    path = _opt(args, "payload")
    if not path:
        return {"text": "hello world", "src": "en", "tgt": "hi"}
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _cmd_loadtest_run(args) -> int:
    from . import loadtest

    profile = loadtest.LoadProfile(
        users=args.users, duration_s=args.duration, target=args.target,
        think_time_ms=args.think, payload=_load_payload(args),
        seed=_effective_seed(args),
    )
    row = loadtest.run_load(profile)
    _emit(
        args,
        row.to_dict(),
        f"users={row.users} median={row.median_ms}ms p95={row.p95_ms}ms "
        f"throughput={row.throughput_rps:.1f}rps errors={row.errors} "
        f"completed={row.completed} seed={row.seed}",
    )
    return 0


def _cmd_loadtest_sweep(args) -> int:
    from . import loadtest

    report = loadtest.sweep_compare(
        deployed_target=args.deployed,
        baseline_target=args.baseline,
        user_levels=args.levels,
        duration_s=args.duration,
        think_time_ms=args.think,
        payload=_load_payload(args),
        seed=_effective_seed(args),
    )
    if args.out:
        out = Path(args.out)
        if out.suffix == ".json":
            targets = [(out, "json")]
        elif out.suffix == ".md":
            targets = [(out, "md")]
        else:
            targets = [(out.with_suffix(".json"), "json"), (out.with_suffix(".md"), "md")]
        for path, kind in targets:
            if kind == "json":
                path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
            else:
                path.write_text(report.to_markdown(), encoding="utf-8")
    _emit(args, report.to_dict(), report.to_markdown().rstrip("\n"))
    return 0


_HANDLERS = {
    ("bpe", "learn"): _cmd_bpe_learn,
    ("bpe", "apply"): _cmd_bpe_apply,
    ("dc", "correct"): _cmd_dc_correct,
    ("dc", "inject"): _cmd_dc_inject,
    ("dc", "eval"): _cmd_dc_eval,
    ("metrics", "wer"): _cmd_metrics_wer,
    ("metrics", "bleu"): _cmd_metrics_bleu,
    ("metrics", "mos"): _cmd_metrics_mos,
    ("metrics", "kpi"): _cmd_metrics_kpi,
    ("filter", "score"): _cmd_filter_score,
    ("filter", "extract"): _cmd_filter_extract,
    ("filter", "align"): _cmd_filter_align,
    ("run", None): _cmd_run,
    ("serve", None): _cmd_serve,
    ("loadtest", "run"): _cmd_loadtest_run,
    ("loadtest", "sweep"): _cmd_loadtest_sweep,
}

_SUBCOMMAND_ATTR = {
    "bpe": "bpe_command",
    "dc": "dc_command",
    "metrics": "metrics_command",
    "filter": "filter_command",
    "loadtest": "loadtest_command",
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    if command is None:
        parser.print_usage(sys.stderr)
        return 2
    action = None
    if command in _SUBCOMMAND_ATTR:
        action = getattr(args, _SUBCOMMAND_ATTR[command], None)
        if action is None:
            print(f"error: {command} requires an action; see sstkit {command} --help",
                  file=sys.stderr)
            return 2
    handler = _HANDLERS.get((command, action))
    if handler is None:
        print(f"error: unknown command {command} {action or ''}", file=sys.stderr)
        return 2
    try:
        return handler(args)
    except SstkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
