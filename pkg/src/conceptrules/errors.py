"""Exception hierarchy shared across the package."""


class ConceptRulesError(Exception):
    """Base class for all library errors."""


class ShapeError(ConceptRulesError, ValueError):
    """Operands or parameters have incompatible shapes."""


class DomainError(ConceptRulesError, ValueError):
    """A value lies outside its mathematical domain (e.g. a truth degree outside [0, 1])."""


class NumericError(ConceptRulesError, ArithmeticError):
    """Non-finite values entered a numeric computation."""


class ContractError(ConceptRulesError, RuntimeError):
    """An API precondition was violated (wrong rank, out-of-range index, ...)."""


class UndefinedMetricError(ConceptRulesError, ValueError):
    """A metric is undefined for the given inputs (e.g. single-class ROC AUC)."""


class CheckpointError(ConceptRulesError, ValueError):
    """A checkpoint file is corrupt, has the wrong version, or mismatched shapes."""


class TrainingDivergenceError(ConceptRulesError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, epoch: int):
        super().__init__(f"{message} (epoch {epoch})")
        self.epoch = epoch
