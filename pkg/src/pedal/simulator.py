"""Deterministic replay engine: a virtual linguist answers each served
segment with the corpus's gold post-edit, corpus quality is logged
after every event, and checkpoint tables compare prioritization
policies.

Also home of the seeded synthetic corpus generator, which plants a
monotone relationship between surface features and true TER so the
estimator's gain over random scheduling is falsifiable at desk scale.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
import random

from . import __version__
from .corpus import ColumnSchema, Corpus, Hypothesis, JournalWriter, Segment, ingest_corpus
from .features import EmbeddingTable
from .learner import LearnerConfig
from .metrics import EvalStats, segment_quality
from .scheduler import Engine, EngineConfig, Policy

DEFAULT_CHECKPOINTS = (20, 30, 40, 50, 60, 70, 80)


@dataclass(frozen=True)
class RunConfig:
    """One simulation run: corpus source, policy, seed, and knobs."""

    policy: Policy
    seed: int = 0
    corpus_path: str | None = None
    schema: str = "source=0,hypothesis=1,post_edit=2,reference=3,target_lang=4"
    lang_pair: str = "en-de"
    synthetic_size: int | None = None
    synthetic_seed: int = 0
    checkpoints: tuple[int, ...] = DEFAULT_CHECKPOINTS
    effort_limit_pct: float = 100.0
    tau_close: float | None = None
    tau_sanity: float = 0.35
    warmup: int = 25
    rescore_interval: int = 1
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    embeddings_path: str | None = None
    journal_path: str | None = None

    def __post_init__(self) -> None:
        if (self.corpus_path is None) == (self.synthetic_size is None):
            raise ValueError("exactly one of corpus_path or synthetic_size is required")
        for p in self.checkpoints:
            if not (0 < p <= 100):
                raise ValueError(f"checkpoint {p} outside (0, 100]")
        if not (0 < self.effort_limit_pct <= 100):
            raise ValueError("effort_limit_pct must be in (0, 100]")

    def corpus_identity(self) -> tuple:
        """What must match for two runs to be comparable."""
        return (
            self.corpus_path,
            self.schema,
            self.lang_pair,
            self.synthetic_size,
            self.synthetic_seed,
            self.checkpoints,
        )

    def to_dict(self) -> dict:
        return {
            "policy": self.policy.value,
            "seed": self.seed,
            "corpus_path": self.corpus_path,
            "schema": self.schema,
            "lang_pair": self.lang_pair,
            "synthetic_size": self.synthetic_size,
            "synthetic_seed": self.synthetic_seed,
            "checkpoints": list(self.checkpoints),
            "effort_limit_pct": self.effort_limit_pct,
            "tau_close": self.tau_close,
            "tau_sanity": self.tau_sanity,
            "warmup": self.warmup,
            "rescore_interval": self.rescore_interval,
            "learner": self.learner.to_dict(),
            "embeddings_path": self.embeddings_path,
            "journal_path": self.journal_path,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        data["policy"] = Policy(data["policy"])
        data["learner"] = LearnerConfig.from_dict(data.get("learner", {}))
        if "checkpoints" in data:
            data["checkpoints"] = tuple(data["checkpoints"])
        return cls(**data)


@dataclass(frozen=True)
class CurvePoint:
    event_seq: int
    pct_post_edited: float
    mean_quality: float


@dataclass
class RunReport:
    policy: str
    seed: int
    corpus_size: int
    initial_quality: float
    final_quality: float
    curve: list[CurvePoint]
    checkpoints: dict[int, float]
    prequential: EvalStats
    auto_closed_total: int
    config: dict
    engine_version: str
    model_snapshot: dict

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "seed": self.seed,
            "corpus_size": self.corpus_size,
            "initial_quality": self.initial_quality,
            "final_quality": self.final_quality,
            "curve": [[p.event_seq, p.pct_post_edited, p.mean_quality] for p in self.curve],
            "checkpoints": {str(k): v for k, v in self.checkpoints.items()},
            "prequential": self.prequential.to_dict(),
            "auto_closed_total": self.auto_closed_total,
            "config": self.config,
            "engine_version": self.engine_version,
        }


# -- synthetic corpus ---------------------------------------------------------

_SYNTH_VOCAB = [
    "the", "station", "update", "filter", "gerade", "system", "wartung",
    "daten", "cloud", "server", "bericht", "kunden", "projekt", "anfrage",
    "signal", "modul", "tarif", "fehler", "analyse", "vertrag", "magnet",
    "prozess", "planung", "antwort", "freigabe", "konto", "umsatz", "lager",
    "schnitt", "faktor", "woche", "leitung", "ausgabe", "eingang", "termin",
    "winkel", "muster", "norm", "sensor", "ventil", "karte", "netz",
    "zyklus", "umfang", "dauer", "quote", "stufe", "punkt", "markt", "liste",
]


def generate_synthetic_corpus(
    size: int,
    seed: int = 0,
    min_len: int = 6,
    max_len: int = 12,
    max_error_rate: float = 0.9,
) -> Corpus:
    """Seeded corpus with a planted monotone feature-TER signal.

    Each segment's reference is a random sentence; its hypothesis is the
    reference corrupted at a per-segment difficulty drawn uniformly, by
    junk-token substitutions and insertions (surface fingerprints:
    digit characters, broken n-gram overlap), deletions (length-ratio
    fingerprint), and adjacent swaps (shift errors).  The gold post-edit
    equals the reference, and target languages alternate to exercise
    the one-hot block.
    """
    rng = random.Random(seed)
    segments: list[Segment] = []
    for i in range(size):
        n = rng.randint(min_len, max_len)
        ref_tokens = [_SYNTH_VOCAB[rng.randrange(len(_SYNTH_VOCAB))] for _ in range(n)]
        difficulty = rng.random()
        n_ops = round(difficulty * max_error_rate * n)
        hyp_tokens = list(ref_tokens)
        for _ in range(n_ops):
            op = rng.random()
            if op < 0.45 and hyp_tokens:
                # substitution, mostly by junk tokens carrying digits
                pos = rng.randrange(len(hyp_tokens))
                if rng.random() < 0.7:
                    hyp_tokens[pos] = f"x{rng.randrange(100)}q"
                else:
                    hyp_tokens[pos] = _SYNTH_VOCAB[rng.randrange(len(_SYNTH_VOCAB))]
            elif op < 0.65 and len(hyp_tokens) > 1:
                del hyp_tokens[rng.randrange(len(hyp_tokens))]
            elif op < 0.85:
                pos = rng.randrange(len(hyp_tokens) + 1)
                hyp_tokens.insert(pos, f"z{rng.randrange(100)}")
            elif len(hyp_tokens) > 1:
                pos = rng.randrange(len(hyp_tokens) - 1)
                hyp_tokens[pos], hyp_tokens[pos + 1] = hyp_tokens[pos + 1], hyp_tokens[pos]
        ref_text = " ".join(ref_tokens)
        segments.append(
            Segment(
                id=i,
                source_text=ref_text,
                source_lang="en",
                target_lang="de" if i % 2 == 0 else "lv",
                hypotheses=[Hypothesis(origin="mt1", text=" ".join(hyp_tokens))],
                reference=ref_text,
                gold_post_edit=ref_text,
            )
        )
    return Corpus(segments=segments, source_path=f"synthetic:{size}:{seed}")


def write_corpus_tsv(corpus: Corpus, path: str | Path) -> None:
    """Dump a single-hypothesis corpus in the default ingest schema
    (source, hypothesis, post_edit, reference, target_lang)."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        for seg in corpus:
            if len(seg.hypotheses) != 1:
                raise ValueError("write_corpus_tsv supports single-hypothesis corpora")
            fh.write(
                "\t".join(
                    (
                        seg.source_text,
                        seg.hypotheses[0].text,
                        seg.gold_post_edit or "",
                        seg.reference or "",
                        seg.target_lang,
                    )
                )
                + "\n"
            )


def load_corpus(config: RunConfig) -> Corpus:
    """Fresh corpus for one run (segment state is mutable, so runs never
    share Corpus objects)."""
    if config.synthetic_size is not None:
        return generate_synthetic_corpus(config.synthetic_size, config.synthetic_seed)
    assert config.corpus_path is not None
    return ingest_corpus(
        config.corpus_path, ColumnSchema.parse(config.schema), config.lang_pair
    )


class _StepClock:
    """Deterministic journal clock: wall_time equals the event seq."""

    def __init__(self) -> None:
        self._t = 0

    def __call__(self) -> int:
        self._t += 1
        return self._t


# -- the replay loop -----------------------------------------------------------


def run(config: RunConfig) -> RunReport:
    """Play the corpus's gold post-edits through the engine under one
    policy, logging mean corpus quality after every event."""
    corpus = load_corpus(config)
    corpus.require_references()
    corpus.require_gold_post_edits()

    engine_config = EngineConfig(
        policy=config.policy,
        seed=config.seed,
        tau_close=config.tau_close,
        tau_sanity=config.tau_sanity,
        warmup=config.warmup,
        rescore_interval=config.rescore_interval,
        learner=config.learner,
    )
    embeddings = (
        EmbeddingTable.load(config.embeddings_path) if config.embeddings_path else None
    )
    journal = JournalWriter(config.journal_path) if config.journal_path else None
    engine = Engine(
        corpus, engine_config, embeddings=embeddings, journal=journal, clock=_StepClock()
    )

    n = len(corpus)
    # Per-segment quality values; mean recomputed by fsum in id order so
    # it matches metrics.corpus_quality bit for bit.
    values = [
        segment_quality(seg.current_text(), seg.reference)  # type: ignore[arg-type]
        for seg in corpus
    ]
    initial_quality = math.fsum(values) / n

    max_events = math.ceil(config.effort_limit_pct * n / 100.0)
    curve: list[CurvePoint] = []
    auto_closed_total = 0
    while len(curve) < max_events:
        task = engine.next(editor_id="simulated-linguist")
        if task is None:
            break
        seg = corpus[task.segment_id]
        result = engine.complete(
            task.segment_id, seg.gold_post_edit or "", "simulated-linguist"
        )
        values[task.segment_id] = segment_quality(
            seg.current_text(), seg.reference  # type: ignore[arg-type]
        )
        for closed_id in result.auto_closed:
            closed = corpus[closed_id]
            values[closed_id] = segment_quality(
                closed.current_text(), closed.reference  # type: ignore[arg-type]
            )
        auto_closed_total += len(result.auto_closed)
        seq = result.event.seq
        curve.append(
            CurvePoint(
                event_seq=seq,
                pct_post_edited=100.0 * seq / n,
                mean_quality=math.fsum(values) / n,
            )
        )

    checkpoints: dict[int, float] = {}
    for pct in config.checkpoints:
        k = math.ceil(pct * n / 100.0)
        if not curve:
            checkpoints[pct] = initial_quality
        elif k <= len(curve):
            checkpoints[pct] = curve[k - 1].mean_quality
        else:
            # queue drained (auto-close) or budget hit before this
            # checkpoint: the terminal quality stands in
            checkpoints[pct] = curve[-1].mean_quality

    if journal is not None:
        journal.close()

    return RunReport(
        policy=config.policy.value,
        seed=config.seed,
        corpus_size=n,
        initial_quality=initial_quality,
        final_quality=curve[-1].mean_quality if curve else initial_quality,
        curve=curve,
        checkpoints=checkpoints,
        prequential=engine.model.prequential_stats(),
        auto_closed_total=auto_closed_total,
        config=config.to_dict(),
        engine_version=__version__,
        model_snapshot=engine.model.snapshot(),
    )


# -- policy comparison ----------------------------------------------------------


@dataclass
class ComparisonRow:
    policy: str
    seeds: list[int]
    quality: dict[int, float]       # checkpoint pct -> mean quality over seeds
    delta_pct: dict[int, float]     # vs the baseline row
    per_seed: dict[int, dict[int, float]]  # seed -> pct -> quality


@dataclass
class ComparisonReport:
    checkpoints: tuple[int, ...]
    baseline_policy: str
    rows: list[ComparisonRow]
    reports: list[RunReport]

    def row(self, policy: str) -> ComparisonRow:
        for r in self.rows:
            if r.policy == policy:
                return r
        raise KeyError(policy)

    def to_dict(self) -> dict:
        return {
            "checkpoints": list(self.checkpoints),
            "baseline_policy": self.baseline_policy,
            "rows": [
                {
                    "policy": r.policy,
                    "seeds": r.seeds,
                    "quality": {str(k): v for k, v in r.quality.items()},
                    "delta_pct": {str(k): v for k, v in r.delta_pct.items()},
                    "per_seed": {
                        str(s): {str(k): v for k, v in q.items()}
                        for s, q in r.per_seed.items()
                    },
                }
                for r in self.rows
            ],
        }


def compare(configs: list[RunConfig]) -> ComparisonReport:
    """Run every config and align checkpoint tables, with per-seed
    breakdown and seed means for repeated policies.

    All configs must share the corpus and checkpoints.  The baseline
    for the delta columns is the random policy when present, otherwise
    the first config's policy.
    """
    if len(configs) < 2:
        raise ValueError("compare needs at least two run configs")
    identity = configs[0].corpus_identity()
    for cfg in configs[1:]:
        if cfg.corpus_identity() != identity:
            raise ValueError("compare requires all configs to share corpus and checkpoints")

    reports = [run(cfg) for cfg in configs]
    checkpoints = configs[0].checkpoints

    by_policy: dict[str, list[RunReport]] = {}
    for rep in reports:
        by_policy.setdefault(rep.policy, []).append(rep)

    baseline_policy = (
        Policy.RANDOM.value if Policy.RANDOM.value in by_policy else reports[0].policy
    )

    rows: list[ComparisonRow] = []
    for policy, reps in by_policy.items():
        quality = {
            pct: math.fsum(r.checkpoints[pct] for r in reps) / len(reps)
            for pct in checkpoints
        }
        rows.append(
            ComparisonRow(
                policy=policy,
                seeds=[r.seed for r in reps],
                quality=quality,
                delta_pct={},
                per_seed={r.seed: dict(r.checkpoints) for r in reps},
            )
        )

    base = next(r for r in rows if r.policy == baseline_policy)
    for row in rows:
        row.delta_pct = {
            pct: 100.0 * (row.quality[pct] - base.quality[pct]) / base.quality[pct]
            for pct in checkpoints
        }

    return ComparisonReport(
        checkpoints=checkpoints,
        baseline_policy=baseline_policy,
        rows=rows,
        reports=reports,
    )


# -- output files ---------------------------------------------------------------


def _fmt(value: float | None, places: int = 6) -> str:
    return "NA" if value is None else f"{value:.{places}f}"


def emit_outputs(report: RunReport, out_dir: str | Path) -> list[Path]:
    """Write curve.csv, checkpoints.csv, prequential.csv, report.json,
    report.txt, and snapshot.json into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    curve_path = out / "curve.csv"
    with curve_path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("event_seq,pct_post_edited,mean_quality\n")
        for p in report.curve:
            fh.write(f"{p.event_seq},{p.pct_post_edited:.6f},{p.mean_quality:.6f}\n")
    written.append(curve_path)

    ckpt_path = out / "checkpoints.csv"
    with ckpt_path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("checkpoint_pct,mean_quality\n")
        for pct in sorted(report.checkpoints):
            fh.write(f"{pct},{report.checkpoints[pct]:.6f}\n")
    written.append(ckpt_path)

    preq_path = out / "prequential.csv"
    s = report.prequential
    with preq_path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("samples,mae,mse,spearman_rho,pearson_r,kendall_tau\n")
        fh.write(
            ",".join(
                (
                    str(s.n),
                    _fmt(s.mae),
                    _fmt(s.mse),
                    _fmt(s.spearman_rho),
                    _fmt(s.pearson_r),
                    _fmt(s.kendall_tau),
                )
            )
            + "\n"
        )
    written.append(preq_path)

    json_path = out / "report.json"
    json_path.write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    written.append(json_path)

    snap_path = out / "snapshot.json"
    snap_path.write_text(
        json.dumps(report.model_snapshot, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    written.append(snap_path)

    txt_path = out / "report.txt"
    with txt_path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(f"pedal run report (engine {report.engine_version})\n")
        fh.write(f"policy: {report.policy}  seed: {report.seed}\n")
        fh.write(f"corpus size: {report.corpus_size}\n")
        fh.write(f"post-edits: {len(report.curve)}  auto-closed: {report.auto_closed_total}\n")
        fh.write(f"initial quality: {report.initial_quality:.6f}\n")
        fh.write(f"final quality:   {report.final_quality:.6f}\n")
        fh.write("\ncheckpoints (pct -> mean quality):\n")
        for pct in sorted(report.checkpoints):
            fh.write(f"  {pct:>3}%  {report.checkpoints[pct]:.6f}\n")
        fh.write("\nprequential estimator performance:\n")
        fh.write("  samples  mae       mse       spearman  pearson   kendall\n")
        fh.write(
            f"  {s.n:<8} {_fmt(s.mae)}  {_fmt(s.mse)}  {_fmt(s.spearman_rho)}  "
            f"{_fmt(s.pearson_r)}  {_fmt(s.kendall_tau)}\n"
        )
    written.append(txt_path)
    return written


def emit_comparison(report: ComparisonReport, out_dir: str | Path) -> list[Path]:
    """Write comparison.csv (paper-table shape: value and delta per
    checkpoint) and comparison.json (with per-seed appendix)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    csv_path = out / "comparison.csv"
    with csv_path.open("w", encoding="utf-8", newline="") as fh:
        header = ["policy", "seeds"]
        for pct in report.checkpoints:
            header += [f"{pct}%", f"Δ{pct}%"]
        fh.write(",".join(header) + "\n")
        for row in report.rows:
            cells = [row.policy, str(len(row.seeds))]
            for pct in report.checkpoints:
                cells.append(f"{row.quality[pct]:.2f}")
                cells.append(f"{row.delta_pct[pct]:+.2f}%")
            fh.write(",".join(cells) + "\n")
    written.append(csv_path)

    json_path = out / "comparison.json"
    json_path.write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    written.append(json_path)
    return written


def plot_quality_curves(
    curves: list[tuple[str, list[CurvePoint]]], path: str | Path
) -> None:
    """Render quality-vs-effort curves for several policies into one
    image (matplotlib, file output only)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    colors = {"estimator": "#d4a017", "random": "#2e8b57", "oracle": "#c0392b"}
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, curve in curves:
        xs = [p.pct_post_edited for p in curve]
        ys = [p.mean_quality for p in curve]
        ax.plot(xs, ys, label=label, color=colors.get(label.split()[0]))
    ax.set_xlabel("% of corpus post-edited")
    ax.set_ylabel("mean corpus quality (100 - TER)")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
