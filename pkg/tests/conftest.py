from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pedal.corpus import Corpus, Hypothesis, Segment


def make_segment(
    seg_id: int,
    hypothesis: str,
    reference: str | None = None,
    source: str | None = None,
    gold_post_edit: str | None = None,
    target_lang: str = "de",
    hypotheses: list[str] | None = None,
) -> Segment:
    texts = hypotheses if hypotheses is not None else [hypothesis]
    return Segment(
        id=seg_id,
        source_text=source if source is not None else f"source {seg_id}",
        source_lang="en",
        target_lang=target_lang,
        hypotheses=[Hypothesis(origin=f"mt{k + 1}", text=t) for k, t in enumerate(texts)],
        reference=reference,
        gold_post_edit=gold_post_edit,
    )


@pytest.fixture
def tiny_corpus() -> Corpus:
    """Five single-hypothesis segments with references and gold edits."""
    rows = [
        ("das haus brennt lichterloh heute", "the house is on fire today"),
        ("der alte hund schläft draußen", "the old dog sleeps outside"),
        ("wir fahren morgen in die stadt", "we drive to town tomorrow"),
        ("sie liest jeden abend bücher", "she reads books every evening"),
        ("das wetter wird langsam besser", "the weather slowly improves"),
    ]
    segments = []
    for i, (src, ref) in enumerate(rows):
        hyp = ref if i % 2 == 0 else ref.replace("the", "a") + " indeed"
        segments.append(
            make_segment(i, hyp, reference=ref, source=src, gold_post_edit=ref)
        )
    return Corpus(segments=segments)
