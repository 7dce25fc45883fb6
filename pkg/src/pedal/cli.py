"""Single entry point wiring the modules together.

Exit codes: 0 success, 1 usage error, 2 runtime error.  All randomness
flows from explicit --seed flags; no command writes outside its --out
directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .corpus import ColumnSchema, IngestError, ingest_corpus, read_journal
from .learner import LearnerConfig, OnlineEstimator
from .metrics import KERNEL_BACKEND, ter_texts
from .scheduler import EngineConfig, Policy, replay_events
from .simulator import (
    CurvePoint,
    RunConfig,
    compare,
    emit_comparison,
    emit_outputs,
    load_corpus,
    plot_quality_curves,
    run,
    write_corpus_tsv,
)

DEFAULT_SCHEMA = "source=0,hypothesis=1,post_edit=2,reference=3,target_lang=4"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pedal",
        description="Active-learning post-editing engine: estimate, prioritize, simulate.",
    )
    parser.add_argument("--version", action="version", version=f"pedal {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a TSV corpus and report counts")
    p.add_argument("--corpus", required=True, help="TSV corpus file")
    p.add_argument("--schema", default=DEFAULT_SCHEMA, help="column roles, role=index pairs")
    p.add_argument("--lang-pair", default="en-de", help="source-target language codes")
    p.add_argument("--skip-bad-rows", action="store_true", help="skip malformed rows instead of aborting")
    p.add_argument("--out", help="directory for the normalized corpus copy and report")

    p = sub.add_parser("score", help="per-line TER for a hypothesis/reference TSV")
    p.add_argument("--input", required=True, help="two-column TSV: hypothesis, reference")

    p = sub.add_parser("simulate", help="replay gold post-edits under one policy")
    _add_run_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--plot", action="store_true", help="render the quality-vs-effort curve")

    p = sub.add_parser("compare", help="run several configs and align their checkpoints")
    p.add_argument("--config-dir", required=True, help="directory of RunConfig JSON files")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--plot", action="store_true", help="render all curves into one figure")

    p = sub.add_parser("serve", help="run the post-editing HTTP service")
    p.add_argument("--config", help="service config JSON file")
    p.add_argument("--corpus", help="TSV corpus to load at startup")
    p.add_argument("--schema", help="column roles for --corpus")
    p.add_argument("--lang-pair", help="language pair for --corpus")
    p.add_argument("--host", help="bind host")
    p.add_argument("--port", type=int, help="bind port")
    p.add_argument("--token", help="static API token")
    p.add_argument("--data-dir", help="journal and upload directory")
    p.add_argument("--policy", choices=[pol.value for pol in Policy], help="scheduling policy")
    p.add_argument("--seed", type=int, help="seed for warmup/random selection")
    p.add_argument("--tau-close", type=float, help="auto-close threshold (off when absent)")
    p.add_argument("--tau-sanity", type=float, help="sanity-flag discrepancy threshold")
    p.add_argument("--warmup", type=int, help="random-fallback post-edit count")
    p.add_argument("--rescore-interval", type=int, help="train steps between full rescores")
    p.add_argument("--static-dir", help="workbench static assets to serve at /")

    p = sub.add_parser("replay", help="rebuild model state from a journal")
    p.add_argument("--journal", required=True, help="journal file to replay")
    p.add_argument("--corpus", required=True, help="TSV corpus the journal refers to")
    p.add_argument("--schema", default=DEFAULT_SCHEMA)
    p.add_argument("--lang-pair", default="en-de")
    p.add_argument("--config", help="run config or report.json carrying the engine config")
    p.add_argument("--snapshot", help="archived snapshot.json to verify against")
    p.add_argument("--out", required=True, help="directory for the reconstructed snapshot")

    p = sub.add_parser("report", help="render quality-vs-effort plots from run outputs")
    p.add_argument("--run-dir", action="append", required=True,
                   help="simulate output directory (repeatable)")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", help="TSV corpus with gold post-edits and references")
    p.add_argument("--schema", default=DEFAULT_SCHEMA)
    p.add_argument("--lang-pair", default="en-de")
    p.add_argument("--synthetic", type=int, help="generate a synthetic corpus of this size instead")
    p.add_argument("--synthetic-seed", type=int, default=0)
    p.add_argument("--policy", required=True, choices=[pol.value for pol in Policy])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoints", default="20,30,40,50,60,70,80",
                   help="comma-separated effort percentages")
    p.add_argument("--effort-limit", type=float, default=100.0,
                   help="stop after this percentage of the corpus is post-edited")
    p.add_argument("--tau-close", type=float, help="auto-close threshold (off when absent)")
    p.add_argument("--tau-sanity", type=float, default=0.35)
    p.add_argument("--warmup", type=int, default=25)
    p.add_argument("--rescore-interval", type=int, default=1)
    p.add_argument("--embeddings", help="external embedding file")


def _run_config_from_args(args: argparse.Namespace, out: Path) -> RunConfig:
    if (args.corpus is None) == (args.synthetic is None):
        raise UsageError("exactly one of --corpus or --synthetic is required")
    checkpoints = tuple(int(c) for c in args.checkpoints.split(",") if c)
    return RunConfig(
        policy=Policy(args.policy),
        seed=args.seed,
        corpus_path=args.corpus,
        schema=args.schema,
        lang_pair=args.lang_pair,
        synthetic_size=args.synthetic,
        synthetic_seed=args.synthetic_seed,
        checkpoints=checkpoints,
        effort_limit_pct=args.effort_limit,
        tau_close=args.tau_close,
        tau_sanity=args.tau_sanity,
        warmup=args.warmup,
        rescore_interval=args.rescore_interval,
        learner=LearnerConfig(),
        embeddings_path=args.embeddings,
        journal_path=str(out / "journal.log"),
    )


class UsageError(ValueError):
    pass


def cmd_ingest(args: argparse.Namespace) -> int:
    corpus = ingest_corpus(
        args.corpus,
        ColumnSchema.parse(args.schema),
        args.lang_pair,
        skip_bad_rows=args.skip_bad_rows,
    )
    report = corpus.ingest_report
    assert report is not None
    print(f"rows read:    {report.rows_read}")
    print(f"segments:     {report.segments}")
    print(f"skipped rows: {report.skipped_rows}")
    print(f"target langs: {','.join(corpus.target_langs)}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_corpus_tsv(corpus, out / "corpus.tsv")
        (out / "ingest_report.json").write_text(
            json.dumps(
                {
                    "rows_read": report.rows_read,
                    "segments": report.segments,
                    "skipped_rows": report.skipped_rows,
                    "target_langs": corpus.target_langs,
                },
                indent=2,
            )
            + "\n",
            encoding="utf-8",
        )
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    path = Path(args.input)
    if not path.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    scores: list[float] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            cols = line.split("\t")
            if len(cols) < 2:
                raise IngestError(f"{path}:{lineno}: expected 2 columns, got {len(cols)}")
            result = ter_texts(cols[0], cols[1])
            scores.append(result.score)
            print(f"{result.score:.6f}")
    if not scores:
        raise IngestError(f"{path}: empty input")
    print(f"mean\t{sum(scores) / len(scores):.6f}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = _run_config_from_args(args, out)
    if config.synthetic_size is not None:
        write_corpus_tsv(load_corpus(config), out / "synthetic_corpus.tsv")
    report = run(config)
    emit_outputs(report, out)
    if args.plot:
        plot_quality_curves([(report.policy, report.curve)], out / "curve.png")
    print(f"policy:        {report.policy} (seed {report.seed}, kernel {KERNEL_BACKEND})")
    print(f"corpus size:   {report.corpus_size}")
    print(f"post-edits:    {len(report.curve)}")
    print(f"final quality: {report.final_quality:.6f}")
    for pct in sorted(report.checkpoints):
        print(f"  quality@{pct}%: {report.checkpoints[pct]:.6f}")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    config_dir = Path(args.config_dir)
    paths = sorted(config_dir.glob("*.json"))
    if not paths:
        raise UsageError(f"no RunConfig JSON files in {config_dir}")
    configs = [RunConfig.from_dict(json.loads(p.read_text(encoding="utf-8"))) for p in paths]
    report = compare(configs)
    out = Path(args.out)
    emit_comparison(report, out)
    for i, rep in enumerate(report.reports):
        emit_outputs(rep, out / "runs" / f"{rep.policy}-seed{rep.seed}")
    if args.plot:
        curves = [
            (f"{rep.policy} (seed {rep.seed})", rep.curve) for rep in report.reports
        ]
        plot_quality_curves(curves, out / "comparison.png")
    for row in report.rows:
        cells = "  ".join(
            f"{pct}%: {row.quality[pct]:.2f} ({row.delta_pct[pct]:+.2f}%)"
            for pct in report.checkpoints
        )
        print(f"{row.policy:<10} [{len(row.seeds)} seed(s)]  {cells}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import ServiceConfig, serve

    overrides = {
        "corpus_path": args.corpus,
        "schema": args.schema,
        "lang_pair": args.lang_pair,
        "host": args.host,
        "port": args.port,
        "token": args.token,
        "data_dir": args.data_dir,
        "policy": Policy(args.policy) if args.policy else None,
        "seed": args.seed,
        "tau_close": args.tau_close,
        "tau_sanity": args.tau_sanity,
        "warmup": args.warmup,
        "rescore_interval": args.rescore_interval,
        "static_dir": args.static_dir,
    }
    config = ServiceConfig.load(args.config, **overrides)
    print(f"serving on {config.host}:{config.port} (data dir {config.data_dir})")
    serve(config)
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    corpus = ingest_corpus(args.corpus, ColumnSchema.parse(args.schema), args.lang_pair)
    if args.config:
        blob = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if "config" in blob:  # a simulate report.json
            blob = blob["config"]
        engine_config = EngineConfig(
            policy=Policy(blob["policy"]),
            seed=blob.get("seed", 0),
            tau_close=blob.get("tau_close"),
            tau_sanity=blob.get("tau_sanity", 0.35),
            warmup=blob.get("warmup", 25),
            rescore_interval=blob.get("rescore_interval", 1),
            learner=LearnerConfig.from_dict(blob.get("learner", {})),
        )
    else:
        engine_config = EngineConfig()
    events = read_journal(args.journal)
    engine = replay_events(corpus, engine_config, events)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reconstructed = engine.model.snapshot_json() + "\n"
    (out / "snapshot.json").write_text(reconstructed, encoding="utf-8")
    print(f"replayed {len(events)} events; model step {engine.model.step}")
    if args.snapshot:
        archived_blob = json.loads(Path(args.snapshot).read_text(encoding="utf-8"))
        archived = json.dumps(archived_blob, indent=2, sort_keys=True) + "\n"
        if archived == reconstructed:
            print("snapshot match: reconstructed state equals the archived snapshot")
        else:
            raise RuntimeError("snapshot mismatch: replay diverged from the archived snapshot")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    curves = []
    for run_dir in args.run_dir:
        run_path = Path(run_dir)
        report_file = run_path / "report.json"
        curve_file = run_path / "curve.csv"
        if not curve_file.exists():
            raise FileNotFoundError(f"{curve_file} not found")
        label = run_path.name
        if report_file.exists():
            blob = json.loads(report_file.read_text(encoding="utf-8"))
            label = f"{blob['policy']} (seed {blob['seed']})"
        points = []
        with curve_file.open("r", encoding="utf-8") as fh:
            next(fh)  # header
            for line in fh:
                seq, pct, quality = line.rstrip("\n").split(",")
                points.append(CurvePoint(int(seq), float(pct), float(quality)))
        curves.append((label, points))
    plot_quality_curves(curves, out / "quality_vs_effort.png")
    print(f"wrote {out / 'quality_vs_effort.png'} ({len(curves)} curves)")
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "score": cmd_score,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "serve": cmd_serve,
    "replay": cmd_replay,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help, 2 for usage problems; map the
        # latter onto the documented usage-error code
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure contract: exit 2
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
