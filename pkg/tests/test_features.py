from __future__ import annotations

import random

import numpy as np
import pytest

from pedal.features import (
    EmbeddingTable,
    FeatureLayout,
    SURFACE_FEATURE_NAMES,
    combine,
    featurize,
    ngram_overlap,
    surface_features,
)

from conftest import make_segment


# -- surface features -------------------------------------------------------


def test_surface_counts():
    f = surface_features("the cat sat")
    assert f["token_count"] == 3
    assert f["char_count"] == 11
    assert f["avg_word_len"] == 3.0


def test_surface_empty():
    assert all(v == 0 for v in surface_features("").values())


def test_surface_avg_word_len():
    assert surface_features("ab cdef")["avg_word_len"] == 3.0


def test_surface_punct_digits_upper():
    f = surface_features("Hello, World 42!")
    assert f["punct_token_count"] == 2
    assert f["digit_char_count"] == 2
    assert f["upper_ratio"] == pytest.approx(2 / 16)


# -- n-gram overlap ------------------------------------------------------------


def test_overlap_identity():
    assert ngram_overlap("abc", "abc") == [1.0, 1.0, 1.0]


def test_overlap_disjoint():
    assert ngram_overlap("abc", "xyz") == [0.0, 0.0, 0.0]


def test_overlap_half():
    # order 2: {ab,bc,cd} vs {ab,bc,ce} -> 2 shared of 4 distinct
    assert ngram_overlap("abcd", "abce")[1] == 0.5


def test_overlap_short_sides():
    # order 1: {a} vs {a,b} -> 1/2; higher orders lack grams on one side
    assert ngram_overlap("a", "ab") == [0.5, 0.0, 0.0]
    assert ngram_overlap("", "abc") == [0.0, 0.0, 0.0]


# -- combine -----------------------------------------------------------------------


def test_combine_identity():
    diff, product, cos = combine(np.array([1.0, 2.0]), np.array([1.0, 2.0]))
    assert np.all(diff == 0.0)
    assert cos == 0.0
    assert np.all(product == np.array([1.0, 4.0]))


def test_combine_orthogonal():
    diff, product, cos = combine(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert np.all(product == 0.0)
    assert cos == 1.0


def test_combine_known_cosine():
    _, _, cos = combine(np.array([1.0, 2.0]), np.array([2.0, 1.0]))
    assert cos == pytest.approx(0.2)


def test_combine_zero_vector():
    _, _, cos = combine(np.zeros(3), np.array([1.0, 2.0, 3.0]))
    assert cos == 1.0


def test_combine_dim_mismatch():
    with pytest.raises(ValueError):
        combine(np.array([1.0]), np.array([1.0, 2.0]))


def test_cosine_distance_range_and_scalar_multiples():
    rng = np.random.default_rng(9)
    for _ in range(200):
        a = rng.normal(size=4)
        b = rng.normal(size=4)
        _, _, cos = combine(a, b)
        assert 0.0 <= cos <= 2.0
    for _ in range(50):
        a = rng.normal(size=4)
        _, _, cos = combine(a, a * rng.uniform(0.1, 5.0))
        assert cos == pytest.approx(0.0, abs=1e-12)


# -- layout ---------------------------------------------------------------------------


def test_layout_size_two_languages():
    layout = FeatureLayout.build(["de", "lv"])
    # 2x6 surface + 6 diffs + 2 ratios + 3 overlap + 2 one-hot
    assert len(layout) == 25


def test_layout_with_embeddings():
    layout = FeatureLayout.build(["de"], embedding_dim=4)
    # 24 base slots for one language + 4x4 embedding blocks + cosine
    assert len(layout) == 24 + 17
    assert layout.slot_names[-1] == "emb_cosine"


def test_layout_round_trip():
    layout = FeatureLayout.build(["de", "cs"], embedding_dim=2)
    assert FeatureLayout.from_dict(layout.to_dict()) == layout


def test_layout_needs_language():
    with pytest.raises(ValueError):
        FeatureLayout.build([])


# -- featurize -------------------------------------------------------------------------


def test_featurize_identity_pair_zero_diffs():
    layout = FeatureLayout.build(["de"])
    seg = make_segment(0, "gleicher text", source="gleicher text")
    vec = featurize(seg, 0, layout)
    names = layout.slot_names
    for i, name in enumerate(names):
        if name.startswith("diff."):
            assert vec[i] == 0.0
    assert vec[names.index("ratio.tokens")] == 1.0
    assert vec[names.index("overlap.2")] == 1.0


def test_featurize_deterministic_bitwise():
    layout = FeatureLayout.build(["de", "lv"])
    seg = make_segment(3, "Ein Haus, 42 Fenster!", source="A house with windows", target_lang="lv")
    v1 = featurize(seg, 0, layout)
    v2 = featurize(seg, 0, layout)
    assert v1.tobytes() == v2.tobytes()


def test_featurize_one_hot_exactly_one():
    layout = FeatureLayout.build(["de", "lv", "cs"])
    for lang in ("de", "lv", "cs"):
        seg = make_segment(0, "hallo", target_lang=lang)
        vec = featurize(seg, 0, layout)
        hot = [vec[i] for i, n in enumerate(layout.slot_names) if n.startswith("lang.")]
        assert sorted(hot) == [0.0, 0.0, 1.0]
        assert vec[layout.slot_names.index(f"lang.{lang}")] == 1.0


def test_featurize_unknown_language():
    layout = FeatureLayout.build(["de"])
    seg = make_segment(0, "hej", target_lang="sv")
    with pytest.raises(ValueError, match="target language"):
        featurize(seg, 0, layout)


def test_featurize_surface_diff_antisymmetric():
    layout = FeatureLayout.build(["de"])
    a = make_segment(0, "kurz", source="ein viel laengerer satz hier")
    b = make_segment(1, "ein viel laengerer satz hier", source="kurz")
    va = featurize(a, 0, layout)
    vb = featurize(b, 0, layout)
    for i, name in enumerate(layout.slot_names):
        if name.startswith("diff."):
            assert va[i] == -vb[i]


def test_featurize_requires_embeddings_when_layout_has_them():
    layout = FeatureLayout.build(["de"], embedding_dim=2)
    seg = make_segment(0, "hallo")
    with pytest.raises(ValueError, match="embedding"):
        featurize(seg, 0, layout)


def test_featurize_bad_hyp_index():
    layout = FeatureLayout.build(["de"])
    seg = make_segment(0, "hallo")
    with pytest.raises(ValueError):
        featurize(seg, 5, layout)


# -- embedding table -------------------------------------------------------------------


def test_embedding_table_load_and_featurize(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text(
        "0 source 0.5 -1.0\n0 target 0.25 2.0\n1 source 1 1\n1 target 1 1\n",
        encoding="utf-8",
    )
    table = EmbeddingTable.load(path)
    assert table.dim == 2
    layout = FeatureLayout.build(["de"], embedding_dim=2)
    seg = make_segment(0, "hallo welt")
    vec = featurize(seg, 0, layout, table)
    names = layout.slot_names
    assert vec[names.index("emb_src.0")] == 0.5
    assert vec[names.index("emb_tgt.1")] == 2.0
    assert vec[names.index("emb_diff.0")] == 0.25
    assert vec[names.index("emb_prod.1")] == -2.0
    assert 0.0 <= vec[names.index("emb_cosine")] <= 2.0


def test_embedding_table_missing_segment(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("0 source 1 2\n0 target 1 2\n", encoding="utf-8")
    table = EmbeddingTable.load(path)
    layout = FeatureLayout.build(["de"], embedding_dim=2)
    seg = make_segment(7, "hallo")
    with pytest.raises(ValueError, match="segment 7"):
        featurize(seg, 0, layout, table)


def test_embedding_table_dim_mismatch(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("0 source 1 2\n0 target 1 2 3\n", encoding="utf-8")
    with pytest.raises(ValueError, match="dimension"):
        EmbeddingTable.load(path)


def test_embedding_scalar_score_is_legal(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("0 source 0.7\n0 target 0.6\n", encoding="utf-8")
    table = EmbeddingTable.load(path)
    assert table.dim == 1
    layout = FeatureLayout.build(["de"], embedding_dim=1)
    seg = make_segment(0, "hallo")
    vec = featurize(seg, 0, layout, table)
    assert vec.size == len(layout)


def test_embedding_rejects_non_finite(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("0 source nan 1\n", encoding="utf-8")
    with pytest.raises(ValueError, match="non-finite"):
        EmbeddingTable.load(path)
