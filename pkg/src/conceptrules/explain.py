"""Interpretability evaluations: explanation vectors, sensitivity under
input perturbations, relevance-guided counterfactual search and the
temperature sweep."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .encoder import ConceptBundle
from .errors import ContractError
from .fuzzy import get_semantics
from .metrics import macro_roc_auc
from .reasoner import (ExecutionResult, ReasonerParams, execute, execute_rule,
                       mean_rule_length)
from .training import TrainConfig, train_reasoner_arrays

logger = logging.getLogger(__name__)


# -- explanation vectors ---------------------------------------------------------


def explanation_vectors(result: ExecutionResult, class_ids) -> np.ndarray:
    """Signed importance per concept: relevance times (2*role - 1), in [-1, 1].

    ``class_ids`` is one class id or one id per sample.
    """
    n = result.n_samples
    ids = np.broadcast_to(np.asarray(class_ids, dtype=np.int64), (n,))
    rows = np.arange(n)
    roles = result.roles[ids, rows]
    relevances = result.relevances[ids, rows]
    return relevances * (2.0 * roles - 1.0)


# -- sensitivity -------------------------------------------------------------------


@dataclass
class SensitivityReport:
    radii: np.ndarray            # perturbation radii (fractions of feature scale)
    mean_max_distance: np.ndarray
    auc: float
    n_skipped: int = 0

    def to_records(self) -> list[dict]:
        return [{"radius": float(r), "mean_max_distance": float(d)}
                for r, d in zip(self.radii, self.mean_max_distance)]


def sensitivity(pipeline, x: np.ndarray, radii: Optional[Sequence[float]] = None,
                n_perturb: int = 10, seed: int = 0,
                feature_scale: Optional[np.ndarray] = None) -> SensitivityReport:
    """Largest normalized explanation change under prediction-preserving
    perturbations, per radius, averaged over samples.

    Perturbations are uniform in the per-feature infinity ball of radius
    ``r * feature_scale``; draws that change the predicted class are
    discarded, and a sample whose draws are all discarded contributes 0 at
    that radius.  Samples with a zero-norm explanation are skipped.
    """
    x = np.asarray(x, dtype=np.float64)
    if radii is None:
        radii = np.linspace(0.0, 0.2, 10)
    radii = np.asarray(radii, dtype=np.float64)
    if feature_scale is None:
        feature_scale = x.std(axis=0)
    feature_scale = np.asarray(feature_scale, dtype=np.float64)
    rng = np.random.default_rng(seed)

    base = pipeline.execute(x)
    preds = base.predictions()
    base_expl = explanation_vectors(base, preds)
    norms = np.abs(base_expl).sum(axis=1)
    keep = norms > 0.0
    n_skipped = int((~keep).sum())
    if n_skipped:
        logger.warning("sensitivity: skipping %d samples with zero-norm explanations",
                       n_skipped)
    if not keep.any():
        raise ContractError("all samples have zero-norm explanations")

    mean_max = np.zeros(radii.size)
    for ri, radius in enumerate(radii):
        max_dist = np.zeros(x.shape[0])
        for _ in range(n_perturb):
            noise = rng.uniform(-1.0, 1.0, size=x.shape) * radius * feature_scale
            pert = pipeline.execute(x + noise)
            same = pert.predictions() == preds
            expl = explanation_vectors(pert, preds)
            dist = np.abs(expl - base_expl).sum(axis=1) / np.where(norms > 0, norms, 1.0)
            dist = np.where(same, dist, 0.0)
            max_dist = np.maximum(max_dist, dist)
        mean_max[ri] = max_dist[keep].mean()
    auc = float(np.trapezoid(mean_max, radii))
    return SensitivityReport(radii, mean_max, auc, n_skipped)


# -- counterfactuals ----------------------------------------------------------------


def render_concept_state(hard_concepts: Sequence[int]) -> str:
    return ", ".join(("" if v else "!") + f"c_{i}" for i, v in enumerate(hard_concepts))


def parse_concept_state(text: str) -> list[int]:
    values = []
    for token in text.split(","):
        token = token.strip()
        negated = token.startswith("!")
        if not token.lstrip("!").startswith("c_"):
            raise ContractError(f"cannot parse concept token {token!r}")
        values.append(0 if negated else 1)
    return values


@dataclass
class CounterfactualRecord:
    old_concepts: list[int]
    old_prediction: int
    new_concepts: list[int]
    new_prediction: int
    n_flips: int
    flipped: list[int]
    confidences: list[float]
    changed: bool

    def to_row(self) -> dict:
        return {
            "old_concepts": render_concept_state(self.old_concepts),
            "old_prediction": self.old_prediction,
            "new_concepts": render_concept_state(self.new_concepts),
            "new_prediction": self.new_prediction,
            "n_flips": self.n_flips,
        }


def counterfactual_search(params: ReasonerParams, bundle: ConceptBundle,
                          sample: int = 0, max_flips: Optional[int] = None,
                          threshold: float = 0.5) -> CounterfactualRecord:
    """Flip concept truth degrees, most relevant first, until the hardened
    prediction changes.

    The rule (roles and relevances for every class) is computed once from
    the original embeddings and held fixed while degrees are flipped.
    """
    row = bundle.row(sample)
    result = execute(row.degrees, row.embeddings, params)
    semantics = get_semantics(params.semantics)
    pred = int(result.predictions()[0])
    degrees = row.degrees[0].copy()
    old_hard = (degrees > 0.5).astype(int).tolist()

    relevances = result.relevances[pred, 0]
    relevant = np.nonzero(relevances > threshold)[0]
    # descending relevance; mergesort keeps lower indices first on ties
    order = relevant[np.argsort(-relevances[relevant], kind="mergesort")]
    if max_flips is not None:
        order = order[:max_flips]

    confidences = [float(result.scores[0, pred])]
    flipped: list[int] = []
    new_pred = pred
    for i in order:
        degrees[i] = 1.0 - degrees[i]
        flipped.append(int(i))
        scores = np.array([
            execute_rule(degrees, result.roles[j, 0], result.relevances[j, 0],
                         semantics).data
            for j in range(params.n_classes)
        ]).ravel()
        confidences.append(float(scores[pred]))
        new_pred = int(scores.argmax())
        if new_pred != pred:
            break
    return CounterfactualRecord(
        old_concepts=old_hard,
        old_prediction=pred,
        new_concepts=(degrees > 0.5).astype(int).tolist(),
        new_prediction=new_pred,
        n_flips=len(flipped),
        flipped=flipped,
        confidences=confidences,
        changed=new_pred != pred,
    )


@dataclass
class CounterfactualReport:
    records: list[CounterfactualRecord]
    mean_confidence: np.ndarray   # per flip count, last value carried forward
    auc: float
    n_concepts: int = 0

    def to_records(self) -> list[dict]:
        return [r.to_row() for r in self.records]


def counterfactual_report(params: ReasonerParams, bundle: ConceptBundle,
                          max_flips: Optional[int] = None,
                          threshold: float = 0.5) -> CounterfactualReport:
    """Run the search on every sample and aggregate the confidence curve.

    The per-sample confidence sequence is padded by carrying its last value
    forward; the area is taken over flip counts normalized by the concept
    count."""
    records = [counterfactual_search(params, bundle, i, max_flips, threshold)
               for i in range(len(bundle))]
    k = bundle.n_concepts
    longest = max(len(r.confidences) for r in records)
    padded = np.array([r.confidences + [r.confidences[-1]] * (longest - len(r.confidences))
                       for r in records])
    mean_conf = padded.mean(axis=0)
    positions = np.arange(longest) / float(k)
    auc = float(np.trapezoid(mean_conf, positions)) if longest > 1 else 0.0
    return CounterfactualReport(records, mean_conf, auc, n_concepts=k)


# -- temperature sweep ----------------------------------------------------------------


def tau_sweep(train_bundle: ConceptBundle, y_train: np.ndarray,
              val_bundle: ConceptBundle, y_val: np.ndarray,
              test_bundle: ConceptBundle, y_test: np.ndarray,
              n_classes: int, cfg: TrainConfig, tau_grid: Sequence[float],
              jobs: int = 1) -> list[dict]:
    """Retrain the rule head per temperature (same seed, same bundles) and
    report mean extracted rule length and test AUC."""
    tau_grid = list(tau_grid)
    if not tau_grid:
        raise ContractError("tau grid must be nonempty")

    def one(tau: float) -> dict:
        try:
            head, _ = train_reasoner_arrays(train_bundle, y_train, val_bundle, y_val,
                                            n_classes, cfg.replace(temperature=float(tau)))
            result = execute(test_bundle.degrees, test_bundle.embeddings, head)
            return {"temperature": float(tau),
                    "mean_rule_length": mean_rule_length(result, cfg.boolean_threshold),
                    "auc": macro_roc_auc(result.scores, y_test)}
        except Exception as exc:
            raise type(exc)(f"tau={tau}: {exc}") from exc

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, tau_grid))
    return [one(tau) for tau in tau_grid]
