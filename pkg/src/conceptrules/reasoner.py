"""Per-sample fuzzy rule generation and symbolic execution.

For every class, two small per-class MLPs read one concept embedding at a
time: the *role* network decides whether the concept appears positively
or negated in the class rule, and the *relevance* network decides whether
the concept participates at all.  The rule is then executed on the
concept truth degrees: each literal is the fuzzy biconditional between
its role and the concept degree, irrelevant literals are neutralized via
implication, and the class score is the conjunction of the guarded
literals.  Because the networks consume a single embedding row, a trained
head evaluates on any number of concepts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ContractError, ShapeError
from .fuzzy import Semantics, get_semantics
from .rules import BooleanRule, GlobalRuleSet, aggregate_global


# -- parameters -------------------------------------------------------------


@dataclass
class ReasonerParams:
    """Per-class role/relevance networks plus execution settings."""

    n_classes: int
    embedding_dim: int
    hidden_dim: int
    temperature: float
    semantics: str
    leaky_slope: float = 0.01
    tensors: dict[str, Tensor] = field(default_factory=dict)

    def named_tensors(self) -> dict[str, Tensor]:
        return self.tensors

    def class_net(self, class_id: int, which: str) -> tuple[Tensor, Tensor, Tensor, Tensor]:
        p = self.tensors
        key = f"class{class_id}.{which}"
        return p[f"{key}.w1"], p[f"{key}.b1"], p[f"{key}.w2"], p[f"{key}.b2"]


def init_reasoner_params(n_classes: int, embedding_dim: int, rng: np.random.Generator,
                         temperature: float = 100.0, semantics: str = "goedel",
                         hidden_dim: Optional[int] = None,
                         leaky_slope: float = 0.01) -> ReasonerParams:
    """Two-layer MLPs per class; hidden width defaults to the embedding size."""
    m = int(embedding_dim)
    h = m if hidden_dim is None else int(hidden_dim)
    params = ReasonerParams(n_classes=int(n_classes), embedding_dim=m, hidden_dim=h,
                            temperature=float(temperature), semantics=semantics,
                            leaky_slope=leaky_slope)
    for j in range(n_classes):
        for which in ("role", "relevance"):
            key = f"class{j}.{which}"
            params.tensors[f"{key}.w1"] = Tensor(rng.normal(0.0, np.sqrt(2.0 / m), (m, h)),
                                                 requires_grad=True)
            params.tensors[f"{key}.b1"] = Tensor(np.zeros(h), requires_grad=True)
            params.tensors[f"{key}.w2"] = Tensor(rng.normal(0.0, np.sqrt(1.0 / h), (h, 1)),
                                                 requires_grad=True)
            params.tensors[f"{key}.b2"] = Tensor(np.zeros(1), requires_grad=True)
    return params


def _per_concept_mlp(flat_embeddings: Tensor, net, n: int, k: int, slope: float) -> Tensor:
    """Apply an m->h->1 MLP to every concept embedding row; returns (n, k) logits."""
    w1, b1, w2, b2 = net
    hidden = ad.leaky_relu(flat_embeddings @ w1 + b1, slope)
    logits = hidden @ w2 + b2
    return logits.reshape((n, k))


# -- rule generation ---------------------------------------------------------


def parsimony_activation(logits: Tensor, temperature: float) -> Tensor:
    """Squash per-concept logits into competing relevance scores in (0, 1).

    The logits are log-softmax-normalized across concepts, then shifted by
    ``temperature / k`` times their sum before the sigmoid.  Uniform logits
    give relevance 0.5 at temperature 1; raising the temperature drives all
    relevances toward 1 (longer rules), lowering it toward 0.
    """
    logits = ad.ensure_tensor(logits)
    if logits.data.ndim != 2 or logits.shape[1] == 0:
        raise ContractError("parsimony_activation expects a nonempty (n, k) array")
    k = logits.shape[1]
    gamma = ad.log_softmax(logits, axis=1)
    shift = gamma.sum(axis=1, keepdims=True) * (float(temperature) / k)
    return ad.sigmoid(gamma - shift)


@dataclass
class ClassForward:
    """Differentiable per-class forward pass over a batch."""

    class_id: int
    roles: Tensor       # (n, k) in (0, 1)
    relevances: Tensor  # (n, k) in (0, 1)
    literals: Tensor    # (n, k)
    guarded: Tensor     # (n, k)
    score: Tensor       # (n,)


def execute_rule(degrees, roles, relevances, semantics: Semantics) -> Tensor:
    """Symbolically execute a rule given degree/role/relevance values.

    Accepts (k,) vectors or (n, k) batches; returns the conjunction over
    concepts of ``relevance -> (role <-> degree)``.
    """
    degrees = ad.ensure_tensor(degrees)
    roles = ad.ensure_tensor(roles)
    relevances = ad.ensure_tensor(relevances)
    literals = semantics.iff(roles, degrees)
    guarded = semantics.implies(relevances, literals)
    k = guarded.shape[-1]
    if guarded.data.ndim == 1:
        terms = [guarded[i] for i in range(k)]
    else:
        terms = [guarded[:, i] for i in range(k)]
    return semantics.conj_fold(terms)


def rule_forward(degrees: Tensor, embeddings: Tensor,
                 params: ReasonerParams) -> list[ClassForward]:
    """Generate and execute one rule per class for a batch of samples."""
    if embeddings.data.ndim != 3:
        raise ShapeError("embeddings must be (n, k, m), got %r" % (embeddings.shape,))
    n, k, m = embeddings.shape
    if m != params.embedding_dim:
        raise ShapeError("embedding dim %d does not match reasoner dim %d"
                         % (m, params.embedding_dim))
    if degrees.shape != (n, k):
        raise ShapeError("degrees shape %r does not match embeddings %r"
                         % (degrees.shape, embeddings.shape))
    if k == 0:
        raise ContractError("cannot execute a rule over zero concepts")
    semantics = get_semantics(params.semantics)
    flat = embeddings.reshape((n * k, m))
    out = []
    for j in range(params.n_classes):
        role_logits = _per_concept_mlp(flat, params.class_net(j, "role"), n, k,
                                       params.leaky_slope)
        roles = ad.sigmoid(role_logits)
        rel_logits = _per_concept_mlp(flat, params.class_net(j, "relevance"), n, k,
                                      params.leaky_slope)
        relevances = parsimony_activation(rel_logits, params.temperature)
        literals = semantics.iff(roles, degrees)
        guarded = semantics.implies(relevances, literals)
        score = semantics.conj_fold([guarded[:, i] for i in range(k)])
        out.append(ClassForward(j, roles, relevances, literals, guarded, score))
    return out


# -- evaluation-side containers ----------------------------------------------


@dataclass(frozen=True)
class LocalRuleTrace:
    """Rule internals for one sample and one class."""

    class_id: int
    roles: np.ndarray
    relevances: np.ndarray
    literals: np.ndarray
    guarded: np.ndarray
    score: float


@dataclass
class ExecutionResult:
    """Numpy view of a full forward pass: scores plus per-class rule internals."""

    degrees: np.ndarray     # (n, k)
    scores: np.ndarray      # (n, o)
    roles: np.ndarray       # (o, n, k)
    relevances: np.ndarray  # (o, n, k)
    literals: np.ndarray    # (o, n, k)
    guarded: np.ndarray     # (o, n, k)

    @property
    def n_samples(self) -> int:
        return self.scores.shape[0]

    @property
    def n_classes(self) -> int:
        return self.scores.shape[1]

    def predictions(self) -> np.ndarray:
        return self.scores.argmax(axis=1)

    def trace(self, sample: int, class_id: int) -> LocalRuleTrace:
        return LocalRuleTrace(
            class_id=class_id,
            roles=self.roles[class_id, sample],
            relevances=self.relevances[class_id, sample],
            literals=self.literals[class_id, sample],
            guarded=self.guarded[class_id, sample],
            score=float(self.scores[sample, class_id]),
        )


def execute(degrees: np.ndarray, embeddings: np.ndarray,
            params: ReasonerParams) -> ExecutionResult:
    """Run the head without gradients and collect all rule internals."""
    fwd = rule_forward(Tensor(degrees), Tensor(embeddings), params)
    return ExecutionResult(
        degrees=np.asarray(degrees, dtype=np.float64),
        scores=np.stack([f.score.data for f in fwd], axis=1),
        roles=np.stack([f.roles.data for f in fwd]),
        relevances=np.stack([f.relevances.data for f in fwd]),
        literals=np.stack([f.literals.data for f in fwd]),
        guarded=np.stack([f.guarded.data for f in fwd]),
    )


# -- Booleanization ------------------------------------------------------------


def booleanize(trace: LocalRuleTrace, threshold: float = 0.5) -> BooleanRule:
    """Threshold a trace into a crisp rule: keep concepts whose relevance
    exceeds the threshold, signed by whether their role does."""
    if not 0.0 < threshold < 1.0:
        raise ContractError("threshold must lie strictly inside (0, 1)")
    literals = tuple((i, bool(trace.roles[i] > threshold))
                     for i in range(trace.roles.shape[0])
                     if trace.relevances[i] > threshold)
    return BooleanRule(trace.class_id, literals)


def _booleanize_row(class_id: int, roles: np.ndarray, relevances: np.ndarray,
                    threshold: float) -> BooleanRule:
    literals = tuple((int(i), bool(roles[i] > threshold))
                     for i in np.nonzero(relevances > threshold)[0])
    return BooleanRule(class_id, literals)


def global_rules(result: ExecutionResult, threshold: float = 0.5,
                 mode: str = "predicted",
                 labels: Optional[np.ndarray] = None) -> GlobalRuleSet:
    """Aggregate Booleanized sample rules into one rule multiset per class.

    ``mode='predicted'`` collects, for class j, the rules of samples whose
    hardened score exceeds 0.5 for j.  ``mode='labeled'`` collects the rules
    of samples labeled j instead.
    """
    if mode not in ("predicted", "labeled"):
        raise ContractError(f"unknown aggregation mode {mode!r}")
    if mode == "labeled" and labels is None:
        raise ContractError("mode='labeled' requires labels")
    collected = []
    for j in range(result.n_classes):
        if mode == "predicted":
            members = np.nonzero(result.scores[:, j] > 0.5)[0]
        else:
            members = np.nonzero(np.asarray(labels) == j)[0]
        for i in members:
            collected.append(_booleanize_row(j, result.roles[j, i],
                                             result.relevances[j, i], threshold))
    return aggregate_global(collected)


def mean_rule_length(result: ExecutionResult, threshold: float = 0.5) -> float:
    """Average literal count of the predicted-class rule across samples."""
    preds = result.predictions()
    lengths = [len(_booleanize_row(int(j), result.roles[j, i], result.relevances[j, i],
                                   threshold))
               for i, j in enumerate(preds)]
    return float(np.mean(lengths))


# -- agreement with ground truth -----------------------------------------------


def rule_error_rate(result: ExecutionResult, true_concepts: np.ndarray,
                    rule_table: Sequence[BooleanRule],
                    threshold: float = 0.5, concepts: str = "predicted") -> list[dict]:
    """Per ground-truth rule, how often the Booleanized sample rule and the
    hardened fuzzy score disagree on the samples the ground-truth rule covers.

    Samples are matched to ground-truth rows on their true concepts.  With
    ``concepts='predicted'`` the Booleanized rule is evaluated on the model's
    hardened degrees (Booleanization fidelity w.r.t. the fuzzy rule); with
    ``concepts='true'`` it is evaluated on the ground-truth annotations, which
    additionally charges concept mispredictions to the rule."""
    if concepts not in ("predicted", "true"):
        raise ContractError(f"unknown concepts mode {concepts!r}")
    true_concepts = np.asarray(true_concepts)
    eval_concepts = ((result.degrees > 0.5).astype(np.int64)
                     if concepts == "predicted" else true_concepts)
    report = []
    for gt_rule in rule_table:
        j = gt_rule.class_id
        matched = np.nonzero(gt_rule.evaluate_batch(true_concepts) == 1)[0]
        errors = 0
        for i in matched:
            sample_rule = _booleanize_row(j, result.roles[j, i],
                                          result.relevances[j, i], threshold)
            bool_pred = sample_rule.evaluate(eval_concepts[i])
            fuzzy_pred = int(result.scores[i, j] > 0.5)
            errors += int(bool_pred != fuzzy_pred)
        report.append({
            "rule": gt_rule.render(),
            "n_samples": int(matched.size),
            "n_errors": int(errors),
            "error_rate": float(errors / matched.size) if matched.size else 0.0,
        })
    return report


def explain_misclassifications(result: ExecutionResult, labels: np.ndarray,
                               threshold: float = 0.5) -> list[dict]:
    """One row per sample whose predicted class differs from its label."""
    labels = np.asarray(labels)
    preds = result.predictions()
    rows = []
    for i in np.nonzero(preds != labels)[0]:
        j = int(preds[i])
        rule = _booleanize_row(j, result.roles[j, i], result.relevances[j, i], threshold)
        rows.append({
            "concepts": [float(v) for v in (result.degrees[i] > 0.5).astype(float)],
            "rule": rule.render(),
            "predicted": j,
            "label": int(labels[i]),
        })
    return rows
