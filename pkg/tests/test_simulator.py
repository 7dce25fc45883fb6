from __future__ import annotations

import json
import math

import pytest

from pedal.corpus import read_journal
from pedal.learner import OnlineEstimator
from pedal.metrics import corpus_quality
from pedal.scheduler import EngineConfig, Policy, replay_events
from pedal.simulator import (
    RunConfig,
    compare,
    emit_comparison,
    emit_outputs,
    generate_synthetic_corpus,
    load_corpus,
    run,
    write_corpus_tsv,
)

SYNTH = dict(synthetic_size=80, synthetic_seed=11, warmup=8)


def cfg(policy: Policy, seed: int = 0, **kw) -> RunConfig:
    merged = {**SYNTH, **kw}
    return RunConfig(policy=policy, seed=seed, **merged)


# -- synthetic corpus ------------------------------------------------------------


def test_synthetic_corpus_deterministic():
    a = generate_synthetic_corpus(50, seed=3)
    b = generate_synthetic_corpus(50, seed=3)
    assert len(a) == 50
    for sa, sb in zip(a, b):
        assert sa.source_text == sb.source_text
        assert sa.hypotheses[0].text == sb.hypotheses[0].text
    c = generate_synthetic_corpus(50, seed=4)
    assert any(
        sa.hypotheses[0].text != sc.hypotheses[0].text for sa, sc in zip(a, c)
    )


def test_synthetic_gold_equals_reference():
    corpus = generate_synthetic_corpus(30, seed=1)
    for seg in corpus:
        assert seg.gold_post_edit == seg.reference
        assert seg.reference is not None
    assert corpus.target_langs == ["de", "lv"]


def test_synthetic_corpus_tsv_round_trip(tmp_path):
    corpus = generate_synthetic_corpus(20, seed=5)
    path = tmp_path / "synth.tsv"
    write_corpus_tsv(corpus, path)
    config = RunConfig(
        policy=Policy.RANDOM,
        corpus_path=str(path),
        lang_pair="en-de",
    )
    loaded = load_corpus(config)
    assert len(loaded) == 20
    for a, b in zip(corpus, loaded):
        assert a.source_text == b.source_text
        assert a.hypotheses[0].text == b.hypotheses[0].text
        assert a.reference == b.reference
        assert a.gold_post_edit == b.gold_post_edit
        assert a.target_lang == b.target_lang


# -- run ------------------------------------------------------------------------------


def test_run_reaches_perfect_quality_at_full_effort():
    report = run(cfg(Policy.RANDOM, seed=2))
    assert report.final_quality == 100.0
    assert len(report.curve) == report.corpus_size
    assert report.curve[-1].pct_post_edited == 100.0


def test_run_curve_monotone_in_events():
    report = run(cfg(Policy.ESTIMATOR, seed=1))
    pcts = [p.pct_post_edited for p in report.curve]
    assert pcts == sorted(pcts)
    assert len(set(pcts)) == len(pcts)
    # gold == reference, so quality never decreases under any policy
    qualities = [report.initial_quality] + [p.mean_quality for p in report.curve]
    assert all(b >= a for a, b in zip(qualities, qualities[1:]))


def test_run_deterministic_reports():
    a = run(cfg(Policy.ESTIMATOR, seed=9))
    b = run(cfg(Policy.ESTIMATOR, seed=9))
    assert a.to_dict() == b.to_dict()
    assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)


def test_run_quality_matches_offline_recomputation():
    config = cfg(Policy.RANDOM, seed=4)
    report = run(config)
    # rebuild final corpus state by replaying the same run
    corpus = load_corpus(config)
    engine_cfg = EngineConfig(
        policy=config.policy, seed=config.seed, warmup=config.warmup
    )
    from pedal.scheduler import Engine

    engine = Engine(corpus, engine_cfg)
    while (task := engine.next()) is not None:
        engine.complete(task.segment_id, corpus[task.segment_id].gold_post_edit, "x")
    assert corpus_quality(corpus) == report.final_quality


def test_oracle_dominates_any_policy_pointwise():
    oracle = run(cfg(Policy.ORACLE, seed=0))
    for seed in (0, 1, 2):
        other = run(cfg(Policy.RANDOM, seed=seed))
        for o, r in zip(oracle.curve, other.curve):
            assert o.mean_quality >= r.mean_quality - 1e-9


def test_terminal_quality_policy_independent():
    finals = {
        run(cfg(policy, seed=3)).final_quality
        for policy in (Policy.ESTIMATOR, Policy.RANDOM, Policy.ORACLE)
    }
    assert len(finals) == 1


def test_checkpoint_interpolation_rule():
    report = run(cfg(Policy.RANDOM, seed=6))
    n = report.corpus_size
    for pct, value in report.checkpoints.items():
        k = math.ceil(pct * n / 100.0)
        assert value == report.curve[k - 1].mean_quality


def test_effort_limit_stops_run():
    report = run(cfg(Policy.RANDOM, seed=1, effort_limit_pct=50.0))
    assert len(report.curve) == math.ceil(0.5 * report.corpus_size)
    # checkpoints beyond the budget fall back to the terminal value
    assert report.checkpoints[80] == report.curve[-1].mean_quality


def test_run_with_auto_close_can_drain_early():
    report = run(cfg(Policy.ESTIMATOR, seed=5, tau_close=0.4))
    assert report.auto_closed_total > 0
    assert len(report.curve) + report.auto_closed_total == report.corpus_size
    # auto-closed hypotheses keep their errors: terminal quality < 100
    assert report.final_quality < 100.0


def test_run_requires_gold_post_edits(tmp_path):
    path = tmp_path / "c.tsv"
    path.write_text("src\thyp\t\tref\ten\n", encoding="utf-8")
    config = RunConfig(policy=Policy.RANDOM, corpus_path=str(path), lang_pair="de-en")
    with pytest.raises(ValueError, match="gold post-edit"):
        run(config)


def test_run_config_validation():
    with pytest.raises(ValueError, match="exactly one"):
        RunConfig(policy=Policy.RANDOM)
    with pytest.raises(ValueError, match="exactly one"):
        RunConfig(policy=Policy.RANDOM, corpus_path="x", synthetic_size=5)
    with pytest.raises(ValueError, match="checkpoint"):
        RunConfig(policy=Policy.RANDOM, synthetic_size=5, checkpoints=(0,))
    with pytest.raises(ValueError, match="checkpoint"):
        RunConfig(policy=Policy.RANDOM, synthetic_size=5, checkpoints=(120,))


def test_run_config_round_trip():
    config = cfg(Policy.ESTIMATOR, seed=7, tau_close=0.1)
    assert RunConfig.from_dict(config.to_dict()) == config


def test_prequential_log_matches_journal(tmp_path):
    config = cfg(Policy.ESTIMATOR, seed=2, journal_path=str(tmp_path / "j.log"))
    report = run(config)
    events = read_journal(tmp_path / "j.log")
    assert len(events) == len(report.curve)
    model = OnlineEstimator.restore(report.model_snapshot)
    assert model.step == len(events)
    # journal audit fields are the 6-decimal roundings of the log
    replayed = replay_events(
        load_corpus(config),
        EngineConfig(policy=config.policy, seed=config.seed, warmup=config.warmup),
        events,
    )
    assert replayed.model.snapshot_json() == model.snapshot_json()
    for (blind, realized), ev in zip(replayed.model.prequential, events):
        assert round(blind, 6) == ev.blind_prediction
        assert round(realized, 6) == ev.realized_target


# -- compare -----------------------------------------------------------------------------


def test_compare_identical_policies_zero_delta():
    report = compare([cfg(Policy.RANDOM, seed=3), cfg(Policy.RANDOM, seed=3)])
    row = report.row("random")
    assert all(d == 0.0 for d in row.delta_pct.values())
    assert row.seeds == [3, 3]


def test_compare_mismatched_corpora_error():
    with pytest.raises(ValueError, match="share corpus"):
        compare([cfg(Policy.RANDOM), RunConfig(policy=Policy.RANDOM, synthetic_size=33)])


def test_compare_aggregates_random_seeds():
    configs = [cfg(Policy.ESTIMATOR, seed=1)] + [cfg(Policy.RANDOM, seed=s) for s in range(3)]
    report = compare(configs)
    assert report.baseline_policy == "random"
    random_row = report.row("random")
    assert random_row.seeds == [0, 1, 2]
    assert set(random_row.per_seed) == {0, 1, 2}
    for pct in report.checkpoints:
        mean = math.fsum(random_row.per_seed[s][pct] for s in range(3)) / 3
        assert random_row.quality[pct] == mean
        assert random_row.delta_pct[pct] == 0.0
    est_row = report.row("estimator")
    for pct in report.checkpoints:
        expected = 100.0 * (est_row.quality[pct] - random_row.quality[pct]) / random_row.quality[pct]
        assert est_row.delta_pct[pct] == expected


# -- emitted files ----------------------------------------------------------------------


def test_emit_outputs_round_trip(tmp_path):
    report = run(cfg(Policy.ESTIMATOR, seed=8))
    emit_outputs(report, tmp_path)
    for name in ("curve.csv", "checkpoints.csv", "prequential.csv", "report.json", "report.txt", "snapshot.json"):
        assert (tmp_path / name).exists()

    lines = (tmp_path / "curve.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "event_seq,pct_post_edited,mean_quality"
    assert len(lines) - 1 == len(report.curve)
    for line, point in zip(lines[1:], report.curve):
        seq, pct, quality = line.split(",")
        assert int(seq) == point.event_seq
        assert float(pct) == pytest.approx(point.pct_post_edited, abs=5e-7)
        assert float(quality) == pytest.approx(point.mean_quality, abs=5e-7)

    preq = (tmp_path / "prequential.csv").read_text(encoding="utf-8").splitlines()
    assert preq[0] == "samples,mae,mse,spearman_rho,pearson_r,kendall_tau"
    assert preq[1].split(",")[0] == str(report.prequential.n)

    snapshot = json.loads((tmp_path / "snapshot.json").read_text(encoding="utf-8"))
    assert OnlineEstimator.restore(snapshot).step == len(report.curve)


def test_emit_comparison_table_shape(tmp_path):
    configs = (
        [cfg(Policy.ESTIMATOR, seed=1), cfg(Policy.ORACLE, seed=1)]
        + [cfg(Policy.RANDOM, seed=s) for s in range(2)]
    )
    report = compare(configs)
    emit_comparison(report, tmp_path)
    lines = (tmp_path / "comparison.csv").read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    # policy, seeds, then a value and a delta column per checkpoint
    assert header[0] == "policy"
    assert len(header) == 2 + 2 * len(report.checkpoints)
    assert len(lines) == 1 + 3  # three policies
    data_cells = sum(len(line.split(",")) - 2 for line in lines[1:])
    assert data_cells == 3 * 2 * len(report.checkpoints)
    blob = json.loads((tmp_path / "comparison.json").read_text(encoding="utf-8"))
    assert {row["policy"] for row in blob["rows"]} == {"estimator", "oracle", "random"}
