"""conceptrules: interpretable classification through differentiable fuzzy
rule generation over concept embeddings, with symbolic rule execution on
concept truth degrees."""

from .autodiff import Adam, Tensor
from .baselines import DecisionTreeBaseline, LogisticRegressionBaseline
from .datasets import LabeledDataset, gen_dot, gen_trig, gen_xor, generate, split_dataset
from .encoder import ConceptBundle, concept_loss, encode, encode_numpy
from .errors import (CheckpointError, ConceptRulesError, ContractError, DomainError,
                     NumericError, ShapeError, TrainingDivergenceError,
                     UndefinedMetricError)
from .estimators import (ConceptEmbeddingEncoder, ConceptRuleClassifier,
                         DeepConceptReasoner)
from .explain import (CounterfactualReport, SensitivityReport, counterfactual_report,
                      counterfactual_search, explanation_vectors, sensitivity, tau_sweep)
from .fuzzy import GoedelSemantics, ProductSemantics, Semantics, get_semantics
from .metrics import macro_roc_auc, roc_auc
from .pipeline import ReasoningPipeline
from .reasoner import (BooleanRule, ExecutionResult, LocalRuleTrace, ReasonerParams,
                       booleanize, execute, execute_rule, explain_misclassifications,
                       global_rules, mean_rule_length, rule_error_rate, rule_forward)
from .rules import GlobalRuleSet, aggregate_global, evaluate_boolean, parse_rule
from .training import (Checkpoint, TrainConfig, load_checkpoint, save_checkpoint,
                       total_loss, train_encoder, train_joint, train_reasoner)

__version__ = "0.1.0"

__all__ = [
    "Adam", "Tensor",
    "DecisionTreeBaseline", "LogisticRegressionBaseline",
    "LabeledDataset", "gen_dot", "gen_trig", "gen_xor", "generate", "split_dataset",
    "ConceptBundle", "concept_loss", "encode", "encode_numpy",
    "CheckpointError", "ConceptRulesError", "ContractError", "DomainError",
    "NumericError", "ShapeError", "TrainingDivergenceError", "UndefinedMetricError",
    "ConceptEmbeddingEncoder", "ConceptRuleClassifier", "DeepConceptReasoner",
    "CounterfactualReport", "SensitivityReport", "counterfactual_report",
    "counterfactual_search", "explanation_vectors", "sensitivity", "tau_sweep",
    "GoedelSemantics", "ProductSemantics", "Semantics", "get_semantics",
    "macro_roc_auc", "roc_auc",
    "ReasoningPipeline",
    "BooleanRule", "ExecutionResult", "LocalRuleTrace", "ReasonerParams",
    "booleanize", "execute", "execute_rule", "explain_misclassifications",
    "global_rules", "mean_rule_length", "rule_error_rate", "rule_forward",
    "GlobalRuleSet", "aggregate_global", "evaluate_boolean", "parse_rule",
    "Checkpoint", "TrainConfig", "load_checkpoint", "save_checkpoint",
    "total_loss", "train_encoder", "train_joint", "train_reasoner",
    "__version__",
]
