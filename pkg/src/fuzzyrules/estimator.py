"""Scikit-learn style classifier wrapping network training and extraction."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .logic import LayerKind
from .network import NetworkSpec
from .rules import RuleNode, WeightedRule, extract_rule, extract_weighted_rules
from .training import TrainConfig, train
from .validation import check_unit_matrix

__all__ = ["FuzzyNetworkClassifier"]


class FuzzyNetworkClassifier(BaseEstimator):
    """Binary click classifier built on a layered fuzzy logic network.

    X rows are atom membership vectors in [0, 1] (see Fuzzifier); y holds 0/1
    click labels. hidden_layers sizes the layers between the atoms and the
    single output node, whose connective is output_kind ("and" or "or").
    Scores from predict_proba are the network's fuzzy output, usable directly
    for ranking; extract_rule/extract_weighted_rules expose the crisp rules.
    """

    def __init__(
        self,
        hidden_layers=(16, 8, 4),
        output_kind="and",
        learning_rate=0.01,
        batch_size=8196,
        epochs=20,
        weight_decay=1e-5,
        lambda_l1=None,
        lambda_orth=None,
        negatives_per_impression=4,
        loss="bce",
        seed=0,
    ):
        self.hidden_layers = hidden_layers
        self.output_kind = output_kind
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.weight_decay = weight_decay
        self.lambda_l1 = lambda_l1
        self.lambda_orth = lambda_orth
        self.negatives_per_impression = negatives_per_impression
        self.loss = loss
        self.seed = seed

    def _config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            weight_decay=self.weight_decay,
            lambda_l1=self.lambda_l1,
            lambda_orth=self.lambda_orth,
            negatives_per_impression=self.negatives_per_impression,
            loss=self.loss,
            seed=self.seed,
        )

    def fit(self, X, y, impression_ids=None, eval_split=None) -> "FuzzyNetworkClassifier":
        X = check_unit_matrix(X)
        spec = NetworkSpec(
            (X.shape[1], *(int(h) for h in self.hidden_layers), 1),
            LayerKind(self.output_kind),
        )
        result = train(
            X,
            y,
            spec,
            self._config(),
            impression_ids=impression_ids,
            eval_split=eval_split,
        )
        self.state_ = result.state
        self.history_ = result.history
        self.lambda_l1_ = result.lambda_l1
        self.lambda_orth_ = result.lambda_orth
        self.skipped_no_positive_ = result.skipped_no_positive
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "state_"):
            raise NotFittedError("FuzzyNetworkClassifier is not fitted; call fit first")

    def decision_function(self, X) -> np.ndarray:
        """Fuzzy network output in [0, 1], one score per row."""
        self._check_fitted()
        from .metrics import score_network

        return score_network(self.state_, check_unit_matrix(X, self.n_features_in_))

    def predict_proba(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        return np.column_stack([1.0 - scores, scores])

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) >= 0.5).astype(np.int64)

    def extract_rule(self, threshold: float) -> RuleNode:
        """Crisp rule of the trained network at |w| > threshold."""
        self._check_fitted()
        return extract_rule(self.state_, threshold)

    def extract_weighted_rules(self, threshold: float) -> list[WeightedRule]:
        """Weighted output-node clauses of the trained network."""
        self._check_fitted()
        return extract_weighted_rules(self.state_, threshold)
