"""Priority queue and policy engine.

The Engine owns one corpus, one online estimator, and the pending
queue; next() and complete() are its serialized single-writer
transitions.  Policies: estimator (highest predicted TER first, with
the best-predicted hypothesis designated for editing), random (seeded
uniform baseline), oracle (highest ground-truth TER first; evaluation
only, needs references).

Warmup: the estimator policy falls back to seeded-random selection for
the first ``warmup`` post-edits, and auto-close / sanity flags stay
inactive until the model has trained that many steps.  The oracle
policy never warms up (it uses no model, and random warmup would break
its prefix-dominance guarantee).

Tie-breaking everywhere: lowest segment id, then lowest hypothesis
index.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .corpus import (
    Corpus,
    JournalWriter,
    PostEditEvent,
    PostEditRecord,
    Segment,
    SegmentState,
)
from .features import EmbeddingTable, FeatureLayout, featurize
from .learner import LearnerConfig, OnlineEstimator
from .metrics import ter, ter_texts, tokenize


class Policy(str, Enum):
    ESTIMATOR = "estimator"
    RANDOM = "random"
    ORACLE = "oracle"


class UnknownSegmentError(KeyError):
    """Segment id not present in the corpus."""


class SegmentStateError(ValueError):
    """Operation not valid for the segment's lifecycle state."""


class ReplayError(RuntimeError):
    """Journal replay diverged from the recorded events."""


@dataclass(frozen=True)
class EngineConfig:
    policy: Policy = Policy.ESTIMATOR
    seed: int = 0
    tau_close: float | None = None
    tau_sanity: float = 0.35
    warmup: int = 25
    rescore_interval: int = 1
    learner: LearnerConfig = field(default_factory=LearnerConfig)

    def to_dict(self) -> dict:
        return {
            "policy": self.policy.value,
            "seed": self.seed,
            "tau_close": self.tau_close,
            "tau_sanity": self.tau_sanity,
            "warmup": self.warmup,
            "rescore_interval": self.rescore_interval,
            "learner": self.learner.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        data = dict(data)
        data["policy"] = Policy(data["policy"])
        data["learner"] = LearnerConfig.from_dict(data.get("learner", {}))
        return cls(**data)


@dataclass(frozen=True)
class SanityFlag:
    """Advisory discrepancy alert; never blocks or reverts a post-edit."""

    segment_id: int
    editor_id: str
    blind_prediction: float
    realized_ter: float
    discrepancy: float
    threshold: float


@dataclass(frozen=True)
class ServedTask:
    segment_id: int
    hypothesis_index: int
    source_text: str
    hypothesis_text: str
    predicted_ter: float
    pending_after: int


@dataclass(frozen=True)
class CompletionResult:
    event: PostEditEvent
    sanity_flag: SanityFlag | None
    auto_closed: list[int]
    realized_ter: float
    blind_prediction: float


def realized_post_edit_ter(hypothesis_text: str, edited_text: str) -> float:
    """TER of the served hypothesis against its post-edit.

    An empty post-edit is a valid deletion-heavy edit: with an empty
    reference the edit count is the hypothesis length and the
    denominator is taken as 1.
    """
    hyp = tokenize(hypothesis_text)
    edited = tokenize(edited_text)
    if not edited:
        return float(len(hyp))
    return ter(hyp, edited).score


class Engine:
    """Single-writer state machine over (queue, model, journal)."""

    def __init__(
        self,
        corpus: Corpus,
        config: EngineConfig,
        embeddings: EmbeddingTable | None = None,
        journal: JournalWriter | None = None,
        clock: Callable[[], int] | None = None,
    ):
        self.corpus = corpus
        self.config = config
        self.journal = journal
        self._clock = clock or (lambda: int(time.time() * 1000))
        self._rng = random.Random(config.seed)

        dim = embeddings.dim if embeddings is not None else None
        self.layout = FeatureLayout.build(corpus.target_langs, dim)
        self.model = OnlineEstimator(self.layout, config.learner)

        rows: list[np.ndarray] = []
        self._row_of: dict[tuple[int, int], int] = {}
        self._seg_rows: dict[int, tuple[int, int]] = {}
        for seg in corpus:
            start = len(rows)
            for k in range(len(seg.hypotheses)):
                self._row_of[(seg.id, k)] = len(rows)
                rows.append(featurize(seg, k, self.layout, embeddings))
            self._seg_rows[seg.id] = (start, len(rows))
        self._features = np.vstack(rows)

        self._pending: set[int] = set()
        self._in_progress: dict[int, str] = {}
        for seg in corpus:
            if seg.state is SegmentState.PENDING:
                self._pending.add(seg.id)
            elif seg.state is SegmentState.IN_PROGRESS:
                raise SegmentStateError(f"segment {seg.id} ingested in progress")

        self.flags: list[SanityFlag] = []
        self.rescore_count = 0
        self._row_preds = np.zeros(len(rows), dtype=np.float64)

        self._oracle_scores: dict[int, list[float]] | None = None
        if config.policy is Policy.ORACLE:
            corpus.require_references()
            self._oracle_scores = {
                seg.id: [
                    ter_texts(h.text, seg.reference).score  # type: ignore[arg-type]
                    for h in seg.hypotheses
                ]
                for seg in corpus
            }

        self.rescore()

    # -- queue bookkeeping -------------------------------------------------

    def _get(self, segment_id: int) -> Segment:
        if not (0 <= segment_id < len(self.corpus)):
            raise UnknownSegmentError(segment_id)
        return self.corpus[segment_id]

    def pending_ids(self) -> list[int]:
        return sorted(self._pending)

    def state_counts(self) -> dict[str, int]:
        counts = {state.value: 0 for state in SegmentState}
        for seg in self.corpus:
            counts[seg.state.value] += 1
        return counts

    def rescore(self) -> None:
        """Recompute every row's prediction with the current model."""
        self._row_preds = self.model.predict_batch(self._features)
        self.rescore_count += 1

    def _segment_preds(self, segment_id: int) -> np.ndarray:
        start, stop = self._seg_rows[segment_id]
        return self._row_preds[start:stop]

    def priority_key(self, segment_id: int) -> float:
        """Serving priority: worst (max) predicted TER across hypotheses."""
        return float(self._segment_preds(segment_id).max())

    def designated_index(self, segment_id: int) -> int:
        """Best (min predicted TER) hypothesis, pre-selected for editing."""
        return int(np.argmin(self._segment_preds(segment_id)))

    def pending_keys(self) -> dict[int, float]:
        return {sid: self.priority_key(sid) for sid in self.pending_ids()}

    # -- serving -------------------------------------------------------------

    def claim(self, segment_id: int, hypothesis_index: int, editor_id: str = "default") -> None:
        """Move a pending segment to InProgress on a chosen hypothesis."""
        seg = self._get(segment_id)
        if seg.state is not SegmentState.PENDING:
            raise SegmentStateError(
                f"segment {segment_id} is {seg.state.value}, not pending"
            )
        seg.mark_in_progress(hypothesis_index)
        self._pending.remove(segment_id)
        self._in_progress[segment_id] = editor_id

    def release(self, segment_id: int) -> None:
        """Return an InProgress segment to the pending queue (lease expiry)."""
        seg = self._get(segment_id)
        if seg.state is not SegmentState.IN_PROGRESS:
            raise SegmentStateError(f"segment {segment_id} is not in progress")
        seg.return_to_pending()
        self._in_progress.pop(segment_id, None)
        self._pending.add(segment_id)

    def next(self, editor_id: str = "default") -> ServedTask | None:
        """Select and claim the next segment under the configured policy.

        Returns None when the queue is drained.
        """
        pending = self.pending_ids()
        if not pending:
            return None

        policy = self.config.policy
        if policy is Policy.ESTIMATOR and self.model.step < self.config.warmup:
            policy = Policy.RANDOM

        if policy is Policy.RANDOM:
            seg_id = pending[self._rng.randrange(len(pending))]
            seg = self.corpus[seg_id]
            hyp_idx = self._rng.randrange(len(seg.hypotheses))
        elif policy is Policy.ORACLE:
            assert self._oracle_scores is not None
            seg_id = max(pending, key=lambda sid: (max(self._oracle_scores[sid]), -sid))
            scores = self._oracle_scores[seg_id]
            hyp_idx = min(range(len(scores)), key=lambda k: (scores[k], k))
        else:
            seg_id = max(pending, key=lambda sid: (self.priority_key(sid), -sid))
            hyp_idx = self.designated_index(seg_id)

        self.claim(seg_id, hyp_idx, editor_id)
        seg = self.corpus[seg_id]
        return ServedTask(
            segment_id=seg_id,
            hypothesis_index=hyp_idx,
            source_text=seg.source_text,
            hypothesis_text=seg.hypotheses[hyp_idx].text,
            predicted_ter=float(self._row_preds[self._row_of[(seg_id, hyp_idx)]]),
            pending_after=len(self._pending),
        )

    # -- completion ------------------------------------------------------------

    def complete(
        self, segment_id: int, edited_text: str, editor_id: str = "default"
    ) -> CompletionResult:
        """Accept a post-edit: journal, train, rescore, auto-close, flag.

        Empty edited text is accepted (a valid deletion-heavy edit).
        """
        seg = self._get(segment_id)
        if seg.state is not SegmentState.IN_PROGRESS:
            raise SegmentStateError(
                f"segment {segment_id} is {seg.state.value}, not in progress"
            )
        hyp_idx = seg.displayed_index
        realized = realized_post_edit_ter(seg.hypotheses[hyp_idx].text, edited_text)

        step_before = self.model.step
        x = self._features[self._row_of[(segment_id, hyp_idx)]]
        blind = self.model.train_step(x, realized)

        seg.mark_post_edited(
            PostEditRecord(
                hypothesis_index=hyp_idx,
                edited_text=edited_text,
                editor_id=editor_id,
                realized_ter=realized,
            )
        )
        self._in_progress.pop(segment_id, None)

        event = PostEditEvent(
            seq=self.model.step,
            segment_id=segment_id,
            hypothesis_index=hyp_idx,
            editor_id=editor_id,
            blind_prediction=round(blind, 6),
            realized_target=round(realized, 6),
            edited_text=edited_text,
            wall_time_ms=self._clock(),
        )
        if self.journal is not None:
            self.journal.append(event)

        flag: SanityFlag | None = None
        if step_before >= self.config.warmup:
            discrepancy = abs(blind - realized)
            if discrepancy > self.config.tau_sanity:
                flag = SanityFlag(
                    segment_id=segment_id,
                    editor_id=editor_id,
                    blind_prediction=blind,
                    realized_ter=realized,
                    discrepancy=discrepancy,
                    threshold=self.config.tau_sanity,
                )
                self.flags.append(flag)

        if self.model.step % self.config.rescore_interval == 0:
            self.rescore()
        closed = self.auto_close()

        return CompletionResult(
            event=event,
            sanity_flag=flag,
            auto_closed=closed,
            realized_ter=realized,
            blind_prediction=blind,
        )

    def auto_close(self) -> list[int]:
        """Close every pending segment whose best predicted TER is
        strictly below tau_close; inactive during warmup or when
        tau_close is unset."""
        if self.config.tau_close is None:
            return []
        if self.model.step < self.config.warmup:
            return []
        closed: list[int] = []
        for seg_id in self.pending_ids():
            preds = self._segment_preds(seg_id)
            best_idx = int(np.argmin(preds))
            if float(preds[best_idx]) < self.config.tau_close:
                self.corpus[seg_id].mark_auto_closed(best_idx)
                self._pending.remove(seg_id)
                closed.append(seg_id)
        return closed


def replay_events(
    corpus: Corpus,
    config: EngineConfig,
    events: list[PostEditEvent],
    embeddings: EmbeddingTable | None = None,
    verify: bool = True,
) -> Engine:
    """Re-run a journal's decision sequence against a fresh engine.

    The journal supplies which segment/hypothesis was edited and the
    edited text; blind predictions and realized targets are recomputed
    and, when verify is set, checked against the journal's 6-decimal
    audit fields.
    """
    engine = Engine(corpus, config, embeddings=embeddings)
    for ev in events:
        engine.claim(ev.segment_id, ev.hypothesis_index, ev.editor_id)
        result = engine.complete(ev.segment_id, ev.edited_text, ev.editor_id)
        if verify:
            if result.event.seq != ev.seq:
                raise ReplayError(f"seq diverged: {result.event.seq} vs journal {ev.seq}")
            if result.event.blind_prediction != ev.blind_prediction:
                raise ReplayError(
                    f"event {ev.seq}: blind prediction {result.event.blind_prediction} "
                    f"vs journal {ev.blind_prediction}"
                )
            if result.event.realized_target != ev.realized_target:
                raise ReplayError(
                    f"event {ev.seq}: realized target {result.event.realized_target} "
                    f"vs journal {ev.realized_target}"
                )
    return engine
