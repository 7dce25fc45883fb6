"""Segment data model, TSV corpus ingestion, and the append-only
post-edit journal that makes every run replayable.

Input format: UTF-8 tab-separated, one row per line, no header; column
roles are supplied by a ColumnSchema.  Texts are kept bit-exact apart
from stripping the trailing line break (tokenization belongs to
pedal.metrics).

Journal format: first line ``pedal-journal v1``, then one
tab-separated record per event with fields seq, segment_id,
hypothesis_index, editor_id, blind_prediction (6 decimals),
realized_target (6 decimals), edited_text (escaped), wall_time (integer
ms since epoch).  Tabs, line breaks, and backslashes inside
edited_text are escaped as \\t, \\n, \\r, \\\\.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator

JOURNAL_HEADER = "pedal-journal v1"


class IngestError(ValueError):
    """A malformed corpus file or row."""


class JournalError(RuntimeError):
    """Journal corruption guard: bad header, gap, or seq regression."""


class SegmentState(str, Enum):
    PENDING = "pending"
    IN_PROGRESS = "in_progress"
    POST_EDITED = "post_edited"
    AUTO_CLOSED = "auto_closed"


@dataclass(frozen=True)
class Hypothesis:
    origin: str
    text: str  # may be empty: degenerate MT output is representable


@dataclass(frozen=True)
class PostEditRecord:
    hypothesis_index: int
    edited_text: str
    editor_id: str
    realized_ter: float

    def __post_init__(self) -> None:
        if self.realized_ter < 0.0:
            raise ValueError("realized_ter must be >= 0")


@dataclass
class Segment:
    """One source text with its MT hypotheses and lifecycle state.

    gold_post_edit is the pre-collected edit used by the simulator as
    the linguist oracle; it is never exposed to the estimator before
    the segment's own post-edit event.
    """

    id: int
    source_text: str
    source_lang: str
    target_lang: str
    hypotheses: list[Hypothesis]
    reference: str | None = None
    gold_post_edit: str | None = None
    state: SegmentState = SegmentState.PENDING
    post_edit: PostEditRecord | None = None
    displayed_index: int = 0

    def __post_init__(self) -> None:
        if not self.hypotheses:
            raise ValueError(f"segment {self.id}: hypotheses must be non-empty")
        if self.source_lang == self.target_lang:
            raise ValueError(f"segment {self.id}: source_lang equals target_lang")
        if not (0 <= self.displayed_index < len(self.hypotheses)):
            raise ValueError(f"segment {self.id}: displayed_index out of range")
        self._check_state()

    def _check_state(self) -> None:
        if (self.state is SegmentState.POST_EDITED) != (self.post_edit is not None):
            raise ValueError(
                f"segment {self.id}: state {self.state.value} inconsistent with post_edit"
            )
        if self.state is SegmentState.AUTO_CLOSED and self.post_edit is not None:
            raise ValueError(f"segment {self.id}: auto-closed segment cannot carry a post-edit")

    def current_text(self) -> str:
        """The text that counts for corpus quality right now."""
        if self.post_edit is not None:
            return self.post_edit.edited_text
        return self.hypotheses[self.displayed_index].text

    def mark_in_progress(self, hypothesis_index: int) -> None:
        if self.state is not SegmentState.PENDING:
            raise ValueError(f"segment {self.id}: cannot serve from state {self.state.value}")
        if not (0 <= hypothesis_index < len(self.hypotheses)):
            raise ValueError(f"segment {self.id}: hypothesis index {hypothesis_index} out of range")
        self.displayed_index = hypothesis_index
        self.state = SegmentState.IN_PROGRESS

    def return_to_pending(self) -> None:
        if self.state is not SegmentState.IN_PROGRESS:
            raise ValueError(f"segment {self.id}: not in progress")
        self.state = SegmentState.PENDING

    def mark_post_edited(self, record: PostEditRecord) -> None:
        if self.state is not SegmentState.IN_PROGRESS:
            raise ValueError(f"segment {self.id}: cannot complete from state {self.state.value}")
        self.post_edit = record
        self.displayed_index = record.hypothesis_index
        self.state = SegmentState.POST_EDITED

    def mark_auto_closed(self, hypothesis_index: int) -> None:
        if self.state is not SegmentState.PENDING:
            raise ValueError(f"segment {self.id}: cannot auto-close from state {self.state.value}")
        if not (0 <= hypothesis_index < len(self.hypotheses)):
            raise ValueError(f"segment {self.id}: hypothesis index {hypothesis_index} out of range")
        self.displayed_index = hypothesis_index
        self.state = SegmentState.AUTO_CLOSED


@dataclass(frozen=True)
class IngestReport:
    rows_read: int
    segments: int
    skipped_rows: int


@dataclass
class Corpus:
    """Immutable after ingestion; safe to share between readers."""

    segments: list[Segment]
    source_path: str | None = None
    ingest_report: IngestReport | None = None

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self) -> Iterator[Segment]:
        return iter(self.segments)

    def __getitem__(self, segment_id: int) -> Segment:
        return self.segments[segment_id]

    @property
    def target_langs(self) -> list[str]:
        return sorted({s.target_lang for s in self.segments})

    def require_references(self) -> None:
        for seg in self.segments:
            if seg.reference is None:
                raise ValueError(f"segment {seg.id} lacks a reference")

    def require_gold_post_edits(self) -> None:
        for seg in self.segments:
            if seg.gold_post_edit is None:
                raise ValueError(f"segment {seg.id} lacks a gold post-edit")


@dataclass(frozen=True)
class ColumnSchema:
    """Maps TSV column indices to roles.

    source and hypothesis are required and must be non-empty per row;
    post_edit/reference cells are optional (empty cell means absent).
    group_key merges consecutive rows sharing the key into one
    multi-hypothesis segment.  target_lang overrides the run-level
    language pair per row.
    """

    source: int
    hypothesis: int
    post_edit: int | None = None
    reference: int | None = None
    group_key: int | None = None
    target_lang: int | None = None

    _ROLES = ("source", "hypothesis", "post_edit", "reference", "group_key", "target_lang")

    @classmethod
    def parse(cls, spec: str) -> "ColumnSchema":
        """Parse e.g. ``source=0,hypothesis=1,post_edit=2,reference=3``."""
        kwargs: dict[str, int] = {}
        for part in spec.split(","):
            part = part.strip()
            if not part:
                continue
            if "=" not in part:
                raise IngestError(f"bad schema entry {part!r} (expected role=index)")
            role, _, idx = part.partition("=")
            role = role.strip()
            if role not in cls._ROLES:
                raise IngestError(f"unknown schema role {role!r}")
            try:
                kwargs[role] = int(idx)
            except ValueError:
                raise IngestError(f"bad column index {idx!r} for role {role!r}") from None
        if "source" not in kwargs or "hypothesis" not in kwargs:
            raise IngestError("schema must map at least source and hypothesis")
        return cls(**kwargs)

    def max_index(self) -> int:
        return max(
            idx
            for idx in (
                self.source,
                self.hypothesis,
                self.post_edit,
                self.reference,
                self.group_key,
                self.target_lang,
            )
            if idx is not None
        )


def _split_langs(lang_pair: str) -> tuple[str, str]:
    src, sep, tgt = lang_pair.partition("-")
    if not sep or not src or not tgt:
        raise IngestError(f"bad language pair {lang_pair!r} (expected e.g. de-en)")
    return src, tgt


def ingest_corpus(
    path: str | Path,
    schema: ColumnSchema,
    lang_pair: str,
    skip_bad_rows: bool = False,
) -> Corpus:
    """Read a TSV corpus into one Segment per row (or per group key).

    Malformed rows (wrong column count, empty source or hypothesis
    cell) abort with a line-numbered IngestError unless skip_bad_rows
    is set; an empty file is always an error.
    """
    src_lang, tgt_lang = _split_langs(lang_pair)
    path = Path(path)
    if not path.exists():
        raise IngestError(f"corpus file not found: {path}")
    need = schema.max_index() + 1

    segments: list[Segment] = []
    rows_read = 0
    skipped = 0
    open_key: str | None = None

    with path.open("r", encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            rows_read += 1
            cols = line.split("\t")

            def bad(msg: str) -> bool:
                nonlocal skipped
                if skip_bad_rows:
                    skipped += 1
                    return True
                raise IngestError(f"{path}:{lineno}: {msg}")

            if len(cols) < need:
                if bad(f"expected >= {need} columns, got {len(cols)}"):
                    open_key = None
                    continue
            if not cols[schema.source]:
                if bad("empty source column"):
                    open_key = None
                    continue
            if not cols[schema.hypothesis]:
                if bad("empty hypothesis column"):
                    open_key = None
                    continue

            pe = cols[schema.post_edit] if schema.post_edit is not None else ""
            ref = cols[schema.reference] if schema.reference is not None else ""
            row_tgt = (
                cols[schema.target_lang]
                if schema.target_lang is not None and cols[schema.target_lang]
                else tgt_lang
            )
            key = cols[schema.group_key] if schema.group_key is not None else None

            if key is not None and key == open_key and segments:
                seg = segments[-1]
                seg.hypotheses.append(
                    Hypothesis(origin=f"mt{len(seg.hypotheses) + 1}", text=cols[schema.hypothesis])
                )
                continue

            segments.append(
                Segment(
                    id=len(segments),
                    source_text=cols[schema.source],
                    source_lang=src_lang,
                    target_lang=row_tgt,
                    hypotheses=[Hypothesis(origin="mt1", text=cols[schema.hypothesis])],
                    reference=ref or None,
                    gold_post_edit=pe or None,
                )
            )
            open_key = key

    if rows_read == 0:
        raise IngestError(f"{path}: empty corpus file")
    if not segments:
        raise IngestError(f"{path}: no valid rows ({skipped} skipped)")
    return Corpus(
        segments=segments,
        source_path=str(path),
        ingest_report=IngestReport(rows_read=rows_read, segments=len(segments), skipped_rows=skipped),
    )


@dataclass(frozen=True)
class PostEditEvent:
    """Immutable journal record of one accepted post-edit.

    blind_prediction and realized_target are stored rounded to 6
    decimals (the journal's field precision), so serialize/parse is the
    identity on events.
    """

    seq: int
    segment_id: int
    hypothesis_index: int
    editor_id: str
    blind_prediction: float
    realized_target: float
    edited_text: str
    wall_time_ms: int


def _escape(text: str) -> str:
    return (
        text.replace("\\", "\\\\")
        .replace("\t", "\\t")
        .replace("\n", "\\n")
        .replace("\r", "\\r")
    )


def _unescape(text: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            mapped = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}.get(nxt)
            if mapped is not None:
                out.append(mapped)
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def format_event(event: PostEditEvent) -> str:
    return "\t".join(
        (
            str(event.seq),
            str(event.segment_id),
            str(event.hypothesis_index),
            _escape(event.editor_id),
            f"{event.blind_prediction:.6f}",
            f"{event.realized_target:.6f}",
            _escape(event.edited_text),
            str(event.wall_time_ms),
        )
    )


def parse_event(line: str) -> PostEditEvent:
    cols = line.split("\t")
    if len(cols) != 8:
        raise JournalError(f"bad journal record (expected 8 fields, got {len(cols)})")
    return PostEditEvent(
        seq=int(cols[0]),
        segment_id=int(cols[1]),
        hypothesis_index=int(cols[2]),
        editor_id=_unescape(cols[3]),
        blind_prediction=float(cols[4]),
        realized_target=float(cols[5]),
        edited_text=_unescape(cols[6]),
        wall_time_ms=int(cols[7]),
    )


class JournalWriter:
    """Single-writer append-only journal.

    Each append is flushed before returning (and fsynced when
    configured), so an accepted event survives a process kill.
    """

    def __init__(self, path: str | Path, fsync: bool = False):
        self.path = Path(path)
        self.fsync = fsync
        self._last_seq = 0
        fresh = not self.path.exists() or self.path.stat().st_size == 0
        self._fh = self.path.open("a", encoding="utf-8", newline="")
        if fresh:
            self._fh.write(JOURNAL_HEADER + "\n")
            self._flush()
        else:
            events = read_journal(self.path)
            self._last_seq = events[-1].seq if events else 0

    def append(self, event: PostEditEvent) -> None:
        if event.seq != self._last_seq + 1:
            raise JournalError(
                f"journal seq must be {self._last_seq + 1}, got {event.seq}"
            )
        self._fh.write(format_event(event) + "\n")
        self._flush()
        self._last_seq = event.seq

    def _flush(self) -> None:
        self._fh.flush()
        if self.fsync:
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "JournalWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_journal(path: str | Path) -> list[PostEditEvent]:
    """Parse a journal back into its event sequence, validating the
    header and seq contiguity."""
    path = Path(path)
    events: list[PostEditEvent] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\n")
        if header != JOURNAL_HEADER:
            raise JournalError(f"{path}: bad journal header {header!r}")
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line:
                continue
            try:
                event = parse_event(line)
            except (JournalError, ValueError) as exc:
                raise JournalError(f"{path}:{lineno}: {exc}") from None
            expected = events[-1].seq + 1 if events else 1
            if event.seq != expected:
                raise JournalError(
                    f"{path}:{lineno}: seq {event.seq} breaks contiguity (expected {expected})"
                )
            events.append(event)
    return events
