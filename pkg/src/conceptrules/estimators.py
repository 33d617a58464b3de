"""Scikit-learn style estimators wrapping the training harness.

``ConceptEmbeddingEncoder`` is a transformer from raw features to concept
bundles, ``DeepConceptReasoner`` a classifier over bundles, and
``ConceptRuleClassifier`` the composed end-to-end pipeline.  Constructor
arguments follow sklearn conventions (stored verbatim, fitted state in
trailing-underscore attributes), so ``get_params``/``set_params``/``clone``
work as usual.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from .encoder import ConceptBundle
from .errors import ContractError
from .pipeline import ReasoningPipeline
from .reasoner import ExecutionResult, execute
from .rules import GlobalRuleSet
from .reasoner import global_rules as _global_rules
from .training import (TrainConfig, train_encoder_arrays, train_reasoner_arrays)
from .validation import (check_binary_matrix, check_degree_matrix,
                         check_feature_matrix, check_labels)


def _holdout_split(n: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_val = max(1, int(n * fraction))
    return np.sort(order[n_val:]), np.sort(order[:n_val])


def _as_bundle(data) -> ConceptBundle:
    if isinstance(data, ConceptBundle):
        return data
    if isinstance(data, (tuple, list)) and len(data) == 2:
        return ConceptBundle(check_degree_matrix(data[0]), np.asarray(data[1]))
    raise ContractError("expected a ConceptBundle or a (degrees, embeddings) pair")


class ConceptEmbeddingEncoder(BaseEstimator, TransformerMixin):
    """Learn truth degrees and embeddings from features and concept labels.

    ``fit`` takes the raw features, a binary concept matrix, and optionally
    the task labels; when labels are present a throwaway linear probe keeps
    task-relevant information in the embeddings.
    """

    def __init__(self, embedding_dim=128, hidden_sizes=(128, 128), leaky_slope=0.01,
                 epochs=500, batch_size=256, learning_rate=1e-2, weight_decay=4e-5,
                 concept_loss_weight=1.0, patience=15, lr_patience=10,
                 lr_decay_factor=0.1, val_fraction=0.1, seed=0):
        self.embedding_dim = embedding_dim
        self.hidden_sizes = hidden_sizes
        self.leaky_slope = leaky_slope
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.concept_loss_weight = concept_loss_weight
        self.patience = patience
        self.lr_patience = lr_patience
        self.lr_decay_factor = lr_decay_factor
        self.val_fraction = val_fraction
        self.seed = seed

    def _config(self) -> TrainConfig:
        return TrainConfig(stage="encoder", epochs=self.epochs, batch_size=self.batch_size,
                           learning_rate=self.learning_rate, weight_decay=self.weight_decay,
                           concept_loss_weight=self.concept_loss_weight,
                           embedding_dim=self.embedding_dim,
                           hidden_sizes=tuple(self.hidden_sizes),
                           leaky_slope=self.leaky_slope, seed=self.seed,
                           patience=self.patience, lr_patience=self.lr_patience,
                           lr_decay_factor=self.lr_decay_factor)

    def fit(self, X, concepts, y=None):
        X = check_feature_matrix(X)
        concepts = check_binary_matrix(concepts, n_rows=X.shape[0])
        n_classes = 0
        if y is not None:
            y = check_labels(y, n_rows=X.shape[0])
            n_classes = int(y.max()) + 1
        train_idx, val_idx = _holdout_split(X.shape[0], self.val_fraction, self.seed)
        self.params_, self.history_ = train_encoder_arrays(
            X[train_idx], concepts[train_idx],
            None if y is None else y[train_idx],
            X[val_idx], concepts[val_idx],
            None if y is None else y[val_idx],
            n_classes, self._config())
        self.n_features_in_ = X.shape[1]
        self.n_concepts_ = concepts.shape[1]
        return self

    def transform(self, X) -> ConceptBundle:
        self._check_fitted()
        X = check_feature_matrix(X, n_features=self.n_features_in_)
        from .encoder import encode_numpy
        return encode_numpy(X, self.params_)

    def predict(self, X) -> np.ndarray:
        """Hardened concept predictions."""
        return (self.transform(X).degrees > 0.5).astype(np.int64)

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise ContractError("encoder is not fitted")


class DeepConceptReasoner(BaseEstimator, ClassifierMixin):
    """Classifier over concept bundles via generated fuzzy rules.

    ``decision_function`` returns the per-class rule truth degrees in
    [0, 1]; ``predict`` takes their argmax.
    """

    def __init__(self, temperature=100.0, semantics="goedel", epochs=3000,
                 batch_size=256, learning_rate=1e-2, weight_decay=4e-5,
                 patience=15, lr_patience=10, lr_decay_factor=0.1,
                 boolean_threshold=0.5, val_fraction=0.1, seed=0):
        self.temperature = temperature
        self.semantics = semantics
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.patience = patience
        self.lr_patience = lr_patience
        self.lr_decay_factor = lr_decay_factor
        self.boolean_threshold = boolean_threshold
        self.val_fraction = val_fraction
        self.seed = seed

    def _config(self, embedding_dim: int) -> TrainConfig:
        return TrainConfig(stage="dcr", epochs=self.epochs, batch_size=self.batch_size,
                           learning_rate=self.learning_rate, weight_decay=self.weight_decay,
                           temperature=self.temperature, semantics=self.semantics,
                           embedding_dim=embedding_dim, seed=self.seed,
                           patience=self.patience, lr_patience=self.lr_patience,
                           lr_decay_factor=self.lr_decay_factor,
                           boolean_threshold=self.boolean_threshold)

    def fit(self, bundle, y):
        bundle = _as_bundle(bundle)
        y = check_labels(y, n_rows=len(bundle))
        self.classes_ = np.unique(y)
        n_classes = int(y.max()) + 1
        train_idx, val_idx = _holdout_split(len(bundle), self.val_fraction, self.seed)
        self.params_, self.history_ = train_reasoner_arrays(
            bundle.subset(train_idx), y[train_idx],
            bundle.subset(val_idx), y[val_idx],
            n_classes, self._config(bundle.embedding_dim))
        return self

    def execute(self, bundle) -> ExecutionResult:
        self._check_fitted()
        bundle = _as_bundle(bundle)
        return execute(bundle.degrees, bundle.embeddings, self.params_)

    def decision_function(self, bundle) -> np.ndarray:
        return self.execute(bundle).scores

    def predict(self, bundle) -> np.ndarray:
        return self.execute(bundle).predictions()

    def global_rules(self, bundle, mode: str = "predicted",
                     labels=None) -> GlobalRuleSet:
        result = self.execute(bundle)
        return _global_rules(result, self.boolean_threshold, mode=mode, labels=labels)

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise ContractError("reasoner is not fitted")


class ConceptRuleClassifier(BaseEstimator, ClassifierMixin):
    """Encoder + reasoner trained in sequence behind one fit/predict surface."""

    def __init__(self, encoder: Optional[ConceptEmbeddingEncoder] = None,
                 reasoner: Optional[DeepConceptReasoner] = None):
        self.encoder = encoder
        self.reasoner = reasoner

    def fit(self, X, y, concepts=None):
        if concepts is None:
            raise ContractError("fit requires the binary concept matrix "
                                "(pass concepts=...)")
        from sklearn.base import clone
        encoder = clone(self.encoder) if self.encoder is not None \
            else ConceptEmbeddingEncoder()
        reasoner = clone(self.reasoner) if self.reasoner is not None \
            else DeepConceptReasoner()
        y = check_labels(y)
        self.encoder_ = encoder.fit(X, concepts, y)
        bundle = self.encoder_.transform(X)
        self.reasoner_ = reasoner.fit(bundle, y)
        self.classes_ = self.reasoner_.classes_
        self.pipeline_ = ReasoningPipeline(self.encoder_.params_, self.reasoner_.params_,
                                           threshold=self.reasoner_.boolean_threshold)
        return self

    def execute(self, X) -> ExecutionResult:
        self._check_fitted()
        return self.pipeline_.execute(check_feature_matrix(
            X, n_features=self.encoder_.n_features_in_))

    def decision_function(self, X) -> np.ndarray:
        return self.execute(X).scores

    def predict(self, X) -> np.ndarray:
        return self.execute(X).predictions()

    def global_rules(self, X, mode: str = "predicted", labels=None) -> GlobalRuleSet:
        result = self.execute(X)
        return _global_rules(result, self.reasoner_.boolean_threshold,
                             mode=mode, labels=labels)

    def _check_fitted(self):
        if not hasattr(self, "pipeline_"):
            raise ContractError("classifier is not fitted")
