"""Feature encoders, the atom vocabulary and the Fuzzifier transformer."""
import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from fuzzyrules.fuzzify import (
    AGE_BIN_LABELS,
    AtomInfo,
    AtomVocabulary,
    Fuzzifier,
    INFREQUENT,
    parse_timestamp,
)


def rows_of(col, values):
    return [{col: v} for v in values]


def test_parse_timestamp():
    assert parse_timestamp(1700000000) == 1700000000
    assert parse_timestamp("1700000000") == 1700000000
    assert parse_timestamp("1970-01-01T00:00:00+00:00") == 0
    assert parse_timestamp("1970-01-01T01:00:00Z") == 3600
    assert parse_timestamp("1970-01-01T00:00:00") == 0  # naive means UTC
    with pytest.raises(ValueError):
        parse_timestamp("")
    with pytest.raises(ValueError):
        parse_timestamp("yesterday")


def test_categorical_top_20_plus_infrequent():
    # 25 distinct values with distinct counts: the 20 most frequent survive
    values = []
    for i in range(25):
        values += [f"c{i:02d}"] * (i + 1)
    fz = Fuzzifier([{"name": "cat", "kind": "categorical"}]).fit(rows_of("cat", values))
    vocab = fz.vocabulary_
    assert len(vocab) == 21
    assert vocab.atoms[-1].bin == INFREQUENT
    kept = {a.bin for a in vocab.atoms[:-1]}
    assert kept == {f"c{i:02d}" for i in range(5, 25)}
    # an infrequent training value maps to the infrequent atom
    vec = fz.fuzzify_row({"cat": "c00"})
    assert vec[-1] == 1.0 and vec.sum() == 1.0


def test_categorical_few_values_still_get_infrequent_atom():
    fz = Fuzzifier([{"name": "cat", "kind": "categorical"}]).fit(
        rows_of("cat", ["a", "b", "b", "c"])
    )
    assert [a.bin for a in fz.vocabulary_.atoms] == ["b", "a", "c", INFREQUENT]
    # unseen value at transform time -> infrequent
    vec = fz.fuzzify_row({"cat": "zebra"})
    assert vec.tolist() == [0.0, 0.0, 0.0, 1.0]


def test_categorical_count_ties_break_lexicographically():
    fz = Fuzzifier([{"name": "cat", "kind": "categorical"}]).fit(
        rows_of("cat", ["b", "a", "c", "a", "c", "b"])
    )
    assert [a.bin for a in fz.vocabulary_.atoms[:-1]] == ["a", "b", "c"]


def test_multiclass_multi_hot_and_empty_cell():
    rows = [{"topics": "sport politics"}, {"topics": "sport"}, {"topics": ""}]
    fz = Fuzzifier([{"name": "topics", "kind": "multiclass"}]).fit(rows)
    assert [a.bin for a in fz.vocabulary_.atoms] == ["sport", "politics"]
    assert fz.fuzzify_row({"topics": "politics sport"}).tolist() == [1.0, 1.0]
    # unseen tokens are dropped, empty cell is an empty set (not imputed)
    assert fz.fuzzify_row({"topics": "opera"}).tolist() == [0.0, 0.0]
    assert fz.fuzzify_row({"topics": ""}).tolist() == [0.0, 0.0]
    assert fz.fuzzify_row({}).tolist() == [0.0, 0.0]


def test_numeric_tertile_cuts():
    # values 1..9: cuts at quantiles 1/3 and 2/3 = 11/3, 19/3
    rows = rows_of("x", [str(v) for v in range(1, 10)])
    fz = Fuzzifier([{"name": "x", "kind": "numeric"}]).fit(rows)
    enc = fz.encoders_[0][1]
    assert enc.cut_low == pytest.approx(11.0 / 3.0)
    assert enc.cut_high == pytest.approx(19.0 / 3.0)
    assert fz.fuzzify_row({"x": "2"}).tolist() == [1.0, 0.0, 0.0]
    assert fz.fuzzify_row({"x": str(11.0 / 3.0)}).tolist() == [1.0, 0.0, 0.0]  # boundary -> low
    assert fz.fuzzify_row({"x": "5"}).tolist() == [0.0, 1.0, 0.0]
    assert fz.fuzzify_row({"x": "9"}).tolist() == [0.0, 0.0, 1.0]


def test_numeric_constant_column():
    fz = Fuzzifier([{"name": "x", "kind": "numeric"}]).fit(rows_of("x", ["5", "5", "5"]))
    assert fz.fuzzify_row({"x": "5"}).tolist() == [1.0, 0.0, 0.0]
    assert fz.fuzzify_row({"x": "6"}).tolist() == [0.0, 0.0, 1.0]


def test_numeric_missing_imputes_train_means():
    rows = rows_of("x", ["1", "2", "9", ""])  # one missing row ignored by fit
    fz = Fuzzifier([{"name": "x", "kind": "numeric"}]).fit(rows)
    # observed rows: 1,2 -> low bins depend on cuts of [1,2,9]
    means = fz.means_[0]
    assert means.sum() == pytest.approx(1.0)
    assert fz.fuzzify_row({"x": ""}).tolist() == means.tolist()
    assert fz.fuzzify_row({"x": "not-a-number"}).tolist() == means.tolist()
    assert fz.fuzzify_row({}).tolist() == means.tolist()


def test_article_age_bins():
    fz = Fuzzifier(
        [
            {
                "name": "article_age",
                "kind": "article_age",
                "published_column": "published",
                "impression_column": "ts",
            }
        ]
    ).fit([{"published": "0", "ts": 600}])
    labels = list(AGE_BIN_LABELS)

    def bin_of(age_seconds):
        vec = fz.fuzzify_row({"published": "0", "ts": age_seconds})
        assert vec.sum() == 1.0
        return labels[int(np.argmax(vec))]

    assert bin_of(600) == "30m"          # 10 minutes
    assert bin_of(1800) == "1h"          # boundary goes up: bound must exceed age
    assert bin_of(3 * 3600) == "4h"      # a 3 hour old article lands in the 4h bin
    assert bin_of(86400) == "2d"
    assert bin_of(5 * 86400) == "3d<"    # overflow bin
    assert bin_of(-50) == "30m"          # clock skew: negative age in the first bin
    assert bin_of(0) == "30m"


def test_article_age_missing_published_imputes():
    rows = [
        {"published": "0", "ts": 600},
        {"published": "0", "ts": 7000},
        {"published": "", "ts": 600},
    ]
    fz = Fuzzifier(
        [
            {
                "name": "article_age",
                "kind": "article_age",
                "published_column": "published",
                "impression_column": "ts",
            }
        ]
    ).fit(rows)
    means = fz.means_[0]
    assert means[0] == pytest.approx(0.5)  # 30m bin in 1 of 2 observed rows
    assert means[2] == pytest.approx(0.5)  # 2h bin in the other
    assert fz.fuzzify_row({"published": "", "ts": 123}).tolist() == means.tolist()


def test_row_is_concatenation_of_feature_blocks():
    rows = [
        {"cat": "a", "topics": "t u", "x": "1"},
        {"cat": "b", "topics": "t", "x": "2"},
        {"cat": "a", "topics": "", "x": "3"},
    ]
    fz = Fuzzifier(
        [
            {"name": "cat", "kind": "categorical"},
            {"name": "topics", "kind": "multiclass"},
            {"name": "x", "kind": "numeric"},
        ]
    ).fit(rows)
    names = fz.vocabulary_.names
    assert names[:3] == ("cat_a", "cat_b", f"cat_{INFREQUENT}")
    assert names[3:5] == ("topics_t", "topics_u")
    assert names[5:] == ("x_low", "x_mid", "x_high")
    vec = fz.fuzzify_row(rows[0])
    assert vec.tolist() == [1, 0, 0, 1, 1, 1, 0, 0]
    mat = fz.transform(rows)
    assert mat.shape == (3, 8)
    assert np.array_equal(mat[0], vec)


def test_one_hot_partition_property():
    # categorical/numeric/age blocks put exactly one unit of mass per observed row
    rng = np.random.default_rng(0)
    rows = [{"cat": f"c{rng.integers(30)}", "x": str(rng.random())} for _ in range(300)]
    fz = Fuzzifier(
        [{"name": "cat", "kind": "categorical"}, {"name": "x", "kind": "numeric"}]
    ).fit(rows)
    mat = fz.transform(rows)
    cat_width = len(fz.encoders_[0][1].bins)
    assert np.allclose(mat[:, :cat_width].sum(axis=1), 1.0)
    assert np.allclose(mat[:, cat_width:].sum(axis=1), 1.0)


def test_fit_is_idempotent_and_deterministic():
    rows = rows_of("cat", ["a", "b", "a", "c", "c"])
    f1 = Fuzzifier([{"name": "cat", "kind": "categorical"}]).fit(rows)
    f2 = Fuzzifier([{"name": "cat", "kind": "categorical"}]).fit(rows)
    assert f1.vocabulary_.names == f2.vocabulary_.names
    assert f1.to_json() == f2.to_json()


def test_transform_requires_fit():
    fz = Fuzzifier([{"name": "cat", "kind": "categorical"}])
    with pytest.raises(NotFittedError):
        fz.transform([{"cat": "a"}])


def test_config_validation():
    with pytest.raises(ValueError):
        Fuzzifier([]).fit([{}])
    with pytest.raises(ValueError):
        Fuzzifier([{"name": "x", "kind": "gaussian"}]).fit([{"x": "1"}])
    with pytest.raises(ValueError):
        Fuzzifier([{"name": "x", "kind": "numeric", "bogus": 1}]).fit([{"x": "1"}])
    with pytest.raises(ValueError):
        Fuzzifier(
            [{"name": "a", "kind": "numeric"}, {"name": "a", "kind": "numeric"}]
        ).fit([{"a": "1"}])
    with pytest.raises(ValueError):
        Fuzzifier([{"name": "age", "kind": "article_age"}]).fit([{}])
    # never-observed feature is an error
    with pytest.raises(ValueError):
        Fuzzifier([{"name": "x", "kind": "numeric"}]).fit([{"x": ""}])


def test_column_override():
    fz = Fuzzifier([{"name": "cat", "kind": "categorical", "column": "raw_cat"}]).fit(
        [{"raw_cat": "a"}, {"raw_cat": "b"}]
    )
    assert fz.fuzzify_row({"raw_cat": "a"})[0] == 1.0


def test_json_round_trip():
    rows = [
        {"cat": "a", "x": "1", "published": "0", "ts": 600},
        {"cat": "b", "x": "2", "published": "0", "ts": 9000},
        {"cat": "a", "x": "", "published": "", "ts": 100},
    ]
    fz = Fuzzifier(
        [
            {"name": "cat", "kind": "categorical"},
            {"name": "x", "kind": "numeric"},
            {
                "name": "article_age",
                "kind": "article_age",
                "published_column": "published",
                "impression_column": "ts",
            },
        ]
    ).fit(rows)
    back = Fuzzifier.from_json(fz.to_json())
    assert back.vocabulary_.names == fz.vocabulary_.names
    for row in rows:
        assert np.array_equal(back.fuzzify_row(row), fz.fuzzify_row(row))
    assert back.to_json() == fz.to_json()


def test_vocabulary_name_sanitization_and_collisions():
    vocab = AtomVocabulary(
        [
            AtomInfo("cat", "local news", "categorical"),
            AtomInfo("cat", "local-news", "categorical"),
            AtomInfo("cat_local", "news", "categorical"),
        ]
    )
    assert vocab.names[0] == "cat_local-news"
    assert vocab.names[1] == "cat_local-news.2"
    assert vocab.names[2] == "cat_local_news"
    assert vocab.index_of("cat_local-news.2") == 1
    with pytest.raises(KeyError):
        vocab.index_of("nope")


def test_vocabulary_span_labels():
    atoms = [AtomInfo("article_age", b, "article_age") for b in AGE_BIN_LABELS]
    vocab = AtomVocabulary(atoms)
    assert vocab.span_label("article_age", 3, 6) == "article_age_2h-1d"
    assert vocab.span_label("article_age", 7, 9) == "article_age_1d<"
    assert vocab.span_label("article_age", 0, 2) == "article_age_0-2h"
    assert vocab.span_label("article_age", 0, 9) == "article_age_any"
    assert vocab.bin_position(4) == 4
    assert vocab.atom_at("article_age", 4) == 4


def test_vocabulary_json_round_trip():
    atoms = [AtomInfo("cat", "a", "categorical"), AtomInfo("x", "low", "numeric")]
    vocab = AtomVocabulary(atoms)
    back = AtomVocabulary.from_json(vocab.to_json())
    assert back.names == vocab.names
    assert back.atoms == vocab.atoms
