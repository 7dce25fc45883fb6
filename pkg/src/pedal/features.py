"""Feature construction for (source, hypothesis) pairs.

Built-in surface features plus optional externally supplied embedding
vectors per segment, combined with the difference, pointwise-product,
and cosine-distance blocks.  The slot order is frozen by FeatureLayout
at engine construction and written into model snapshots, so a snapshot
always knows what its weights mean.

Embedding file format: one record per line, whitespace-separated:
``<segment_id> <side> <v1> ... <vd>`` with side in {source, target}.
Any precomputed per-segment vectors plug in; a 1-dimensional
"embedding" (a scalar score) is legal.
"""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Segment
from .metrics import tokenize

SURFACE_FEATURE_NAMES = (
    "token_count",
    "char_count",
    "avg_word_len",
    "punct_token_count",
    "digit_char_count",
    "upper_ratio",
)

NGRAM_ORDERS = (1, 2, 3)

#: Smoothing constant for length ratios, avoids division by zero on
#: empty texts.
RATIO_SMOOTHING = 1.0


def surface_features(text: str) -> dict[str, float]:
    """Six surface statistics of a text; all zero for empty input."""
    tokens = tokenize(text)
    token_count = float(len(tokens))
    char_count = float(len(text))
    avg_word_len = (
        sum(len(t) for t in tokens) / len(tokens) if tokens else 0.0
    )
    punct_tokens = float(
        sum(1 for t in tokens if all(unicodedata.category(c).startswith("P") for c in t))
    )
    digit_chars = float(sum(1 for c in text if c.isdigit()))
    upper_ratio = (
        sum(1 for c in text if c.isupper()) / len(text) if text else 0.0
    )
    return {
        "token_count": token_count,
        "char_count": char_count,
        "avg_word_len": avg_word_len,
        "punct_token_count": punct_tokens,
        "digit_char_count": digit_chars,
        "upper_ratio": upper_ratio,
    }


def _char_ngrams(text: str, order: int) -> set[str]:
    text = text.lower()
    if len(text) < order:
        return set()
    return {text[i:i + order] for i in range(len(text) - order + 1)}


def ngram_overlap(source: str, target: str, orders: tuple[int, ...] = NGRAM_ORDERS) -> list[float]:
    """Jaccard similarity of character n-gram sets per order.

    Zero when either side lacks n-grams of that order.  A cheap
    cross-lingual similarity proxy for the embedding-free setup.
    """
    out = []
    for k in orders:
        a = _char_ngrams(source, k)
        b = _char_ngrams(target, k)
        if not a or not b:
            out.append(0.0)
        else:
            out.append(len(a & b) / len(a | b))
    return out


def combine(src_vec: np.ndarray, tgt_vec: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """(difference, pointwise product, cosine distance) of two vectors.

    Cosine distance is 1 - cos(src, tgt), defined as 1.0 when either
    vector is all-zero; always in [0, 2].
    """
    src_vec = np.asarray(src_vec, dtype=np.float64)
    tgt_vec = np.asarray(tgt_vec, dtype=np.float64)
    if src_vec.shape != tgt_vec.shape:
        raise ValueError(f"dimension mismatch: {src_vec.shape} vs {tgt_vec.shape}")
    diff = src_vec - tgt_vec
    product = src_vec * tgt_vec
    na2 = float(np.dot(src_vec, src_vec))
    nb2 = float(np.dot(tgt_vec, tgt_vec))
    if na2 == 0.0 or nb2 == 0.0:
        cosine_distance = 1.0
    elif np.array_equal(src_vec, tgt_vec):
        cosine_distance = 0.0  # exact identity, no float residue
    else:
        cosine_distance = 1.0 - float(np.dot(src_vec, tgt_vec)) / math.sqrt(na2 * nb2)
        cosine_distance = min(2.0, max(0.0, cosine_distance))
    return diff, product, cosine_distance


@dataclass(frozen=True)
class FeatureLayout:
    """Fixed slot order for a run; identical for every segment."""

    slot_names: tuple[str, ...]
    target_langs: tuple[str, ...]
    embedding_dim: int | None

    def __len__(self) -> int:
        return len(self.slot_names)

    @classmethod
    def build(cls, target_langs: list[str], embedding_dim: int | None = None) -> "FeatureLayout":
        langs = tuple(sorted(set(target_langs)))
        if not langs:
            raise ValueError("layout needs at least one target language")
        slots: list[str] = []
        slots += [f"src.{n}" for n in SURFACE_FEATURE_NAMES]
        slots += [f"tgt.{n}" for n in SURFACE_FEATURE_NAMES]
        slots += [f"diff.{n}" for n in SURFACE_FEATURE_NAMES]
        slots += ["ratio.tokens", "ratio.chars"]
        slots += [f"overlap.{k}" for k in NGRAM_ORDERS]
        slots += [f"lang.{code}" for code in langs]
        if embedding_dim is not None:
            if embedding_dim < 1:
                raise ValueError("embedding_dim must be >= 1")
            slots += [f"emb_src.{i}" for i in range(embedding_dim)]
            slots += [f"emb_tgt.{i}" for i in range(embedding_dim)]
            slots += [f"emb_diff.{i}" for i in range(embedding_dim)]
            slots += [f"emb_prod.{i}" for i in range(embedding_dim)]
            slots += ["emb_cosine"]
        return cls(slot_names=tuple(slots), target_langs=langs, embedding_dim=embedding_dim)

    def to_dict(self) -> dict:
        return {
            "slots": list(self.slot_names),
            "target_langs": list(self.target_langs),
            "embedding_dim": self.embedding_dim,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureLayout":
        # Layouts are self-describing; compatibility with a live engine
        # is checked at restore time against the expected layout.
        return cls(
            slot_names=tuple(data["slots"]),
            target_langs=tuple(data["target_langs"]),
            embedding_dim=data.get("embedding_dim"),
        )


class EmbeddingTable:
    """Per-segment external vectors, all sharing one dimension."""

    def __init__(self, vectors: dict[tuple[int, str], np.ndarray], dim: int):
        self.dim = dim
        self._vectors = vectors

    def get(self, segment_id: int, side: str) -> np.ndarray:
        try:
            return self._vectors[(segment_id, side)]
        except KeyError:
            raise ValueError(f"no {side} embedding for segment {segment_id}") from None

    def __contains__(self, key: tuple[int, str]) -> bool:
        return key in self._vectors

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingTable":
        vectors: dict[tuple[int, str], np.ndarray] = {}
        dim: int | None = None
        with Path(path).open("r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) < 3:
                    raise ValueError(f"{path}:{lineno}: expected id, side, and values")
                seg_id = int(parts[0])
                side = parts[1]
                if side not in ("source", "target"):
                    raise ValueError(f"{path}:{lineno}: side must be source or target")
                vec = np.array([float(v) for v in parts[2:]], dtype=np.float64)
                if not np.isfinite(vec).all():
                    raise ValueError(f"{path}:{lineno}: non-finite embedding value")
                if dim is None:
                    dim = vec.size
                elif vec.size != dim:
                    raise ValueError(
                        f"{path}:{lineno}: dimension {vec.size} differs from {dim}"
                    )
                vectors[(seg_id, side)] = vec
        if dim is None:
            raise ValueError(f"{path}: empty embedding file")
        return cls(vectors, dim)


def featurize(
    segment: Segment,
    hyp_index: int,
    layout: FeatureLayout,
    embeddings: EmbeddingTable | None = None,
) -> np.ndarray:
    """Deterministic feature vector for one (source, hypothesis) pair."""
    if not (0 <= hyp_index < len(segment.hypotheses)):
        raise ValueError(f"hypothesis index {hyp_index} out of range")
    if layout.embedding_dim is not None and embeddings is None:
        raise ValueError("layout has embedding blocks but no embeddings were supplied")

    src_text = segment.source_text
    tgt_text = segment.hypotheses[hyp_index].text
    src = surface_features(src_text)
    tgt = surface_features(tgt_text)

    values: list[float] = []
    values += [src[n] for n in SURFACE_FEATURE_NAMES]
    values += [tgt[n] for n in SURFACE_FEATURE_NAMES]
    values += [src[n] - tgt[n] for n in SURFACE_FEATURE_NAMES]
    values.append((tgt["token_count"] + RATIO_SMOOTHING) / (src["token_count"] + RATIO_SMOOTHING))
    values.append((tgt["char_count"] + RATIO_SMOOTHING) / (src["char_count"] + RATIO_SMOOTHING))
    values += ngram_overlap(src_text, tgt_text)

    if segment.target_lang not in layout.target_langs:
        raise ValueError(
            f"segment {segment.id} target language {segment.target_lang!r} not in layout"
        )
    values += [1.0 if code == segment.target_lang else 0.0 for code in layout.target_langs]

    if layout.embedding_dim is not None:
        assert embeddings is not None
        if embeddings.dim != layout.embedding_dim:
            raise ValueError(
                f"embedding dimension {embeddings.dim} does not match layout "
                f"{layout.embedding_dim}"
            )
        src_emb = embeddings.get(segment.id, "source")
        tgt_emb = embeddings.get(segment.id, "target")
        diff, product, cosine_distance = combine(src_emb, tgt_emb)
        values += src_emb.tolist()
        values += tgt_emb.tolist()
        values += diff.tolist()
        values += product.tolist()
        values.append(cosine_distance)

    vec = np.array(values, dtype=np.float64)
    if vec.size != len(layout):
        raise ValueError(f"built {vec.size} values for a {len(layout)}-slot layout")
    if not np.isfinite(vec).all():
        raise ValueError(f"segment {segment.id}: non-finite feature value")
    return vec
