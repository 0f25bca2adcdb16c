"""Scikit-learn interface contract of FuzzyNetworkClassifier."""
import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from fuzzyrules.estimator import FuzzyNetworkClassifier
from fuzzyrules.rules import Const, RuleNode


def toy_problem(n=200, seed=0):
    rng = np.random.default_rng(seed)
    x = (rng.random((n, 4)) < 0.5).astype(np.float64)
    # click when atom0 and not atom1
    y = (x[:, 0] * (1.0 - x[:, 1])).astype(np.float64)
    return x, y


def small_clf(**overrides):
    kwargs = dict(
        hidden_layers=(4,),
        output_kind="or",
        epochs=12,
        batch_size=64,
        learning_rate=0.05,
        seed=1,
    )
    kwargs.update(overrides)
    return FuzzyNetworkClassifier(**kwargs)


def test_get_params_round_trip():
    clf = small_clf(lambda_l1=0.01)
    params = clf.get_params()
    assert params["hidden_layers"] == (4,)
    assert params["lambda_l1"] == 0.01
    other = FuzzyNetworkClassifier(**params)
    assert other.get_params() == params


def test_set_params_and_clone():
    clf = small_clf()
    clf.set_params(epochs=3, output_kind="and")
    assert clf.epochs == 3
    cloned = clone(clf)
    assert cloned.get_params() == clf.get_params()
    assert cloned is not clf


def test_unfitted_raises():
    clf = small_clf()
    x, _ = toy_problem()
    for method in (clf.decision_function, clf.predict, clf.predict_proba):
        with pytest.raises(NotFittedError):
            method(x)
    with pytest.raises(NotFittedError):
        clf.extract_rule(0.5)
    with pytest.raises(NotFittedError):
        clf.extract_weighted_rules(0.5)


def test_fit_sets_sklearn_attributes():
    x, y = toy_problem()
    clf = small_clf().fit(x, y)
    assert clf.n_features_in_ == 4
    assert clf.classes_.tolist() == [0, 1]
    assert len(clf.history_) == clf.epochs
    assert clf.lambda_l1_ > 0.0
    assert clf.skipped_no_positive_ == 0


def test_scores_and_predictions():
    x, y = toy_problem()
    clf = small_clf().fit(x, y)
    scores = clf.decision_function(x)
    assert scores.shape == (len(x),)
    assert np.all((scores >= 0.0) & (scores <= 1.0))
    proba = clf.predict_proba(x)
    assert proba.shape == (len(x), 2)
    assert np.allclose(proba.sum(axis=1), 1.0)
    assert np.array_equal(proba[:, 1], scores)
    pred = clf.predict(x)
    assert set(np.unique(pred)) <= {0, 1}
    assert np.array_equal(pred, (scores >= 0.5).astype(np.int64))
    # the toy concept is learnable: positives score above negatives on average
    assert scores[y == 1].mean() > scores[y == 0].mean()


def test_fit_is_deterministic():
    x, y = toy_problem()
    a = small_clf().fit(x, y).decision_function(x)
    b = small_clf().fit(x, y).decision_function(x)
    assert np.array_equal(a, b)
    c = small_clf(seed=2).fit(x, y).decision_function(x)
    assert not np.array_equal(a, c)


def test_extracts_rules_after_fit():
    x, y = toy_problem()
    clf = small_clf().fit(x, y)
    rule = clf.extract_rule(0.5)
    assert isinstance(rule, RuleNode)
    weighted = clf.extract_weighted_rules(0.5)
    assert all(0.0 <= w.weight <= 1.0 for w in weighted)
    # at an unattainable threshold the rule is a constant
    assert isinstance(clf.extract_rule(0.9999999), Const)


def test_rejects_bad_inputs():
    x, y = toy_problem()
    clf = small_clf()
    with pytest.raises(ValueError):
        clf.fit(x * 2.0, y)  # outside the unit interval
    with pytest.raises(ValueError):
        clf.fit(x, y[:-1])
    clf.fit(x, y)
    with pytest.raises(ValueError):
        clf.decision_function(x[:, :3])  # wrong width


def test_impression_grouped_fit():
    x, y = toy_problem(n=120)
    ids = np.repeat(np.arange(20), 6)
    clf = small_clf(negatives_per_impression=2).fit(x, y, impression_ids=ids)
    assert clf.decision_function(x).shape == (120,)
