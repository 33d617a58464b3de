"""Differentiable continuous-logic connectives over truth degrees in [0, 1].

Two semantics are provided.  The Goedel semantics interprets conjunction
as the pointwise minimum and disjunction as the maximum; the product
semantics uses ``x*y`` and ``x + y - x*y``.  Both share the strong
negation ``1 - x``, and derive implication and biconditional from the
primitive connectives, so on Boolean inputs all five connectives reduce
to the classical truth tables.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DomainError

GOEDEL = "goedel"
PRODUCT = "product"


def _check_degree(x: Tensor, name: str) -> None:
    if np.any(x.data < 0.0) or np.any(x.data > 1.0):
        raise DomainError(f"{name} expects truth degrees in [0, 1]")


class Semantics:
    """Base class: negation, implication and biconditional are shared."""

    name = "abstract"

    def neg(self, x) -> Tensor:
        x = ad.ensure_tensor(x)
        _check_degree(x, "neg")
        return 1.0 - x

    def conj(self, x, y) -> Tensor:
        raise NotImplementedError

    def disj(self, x, y) -> Tensor:
        raise NotImplementedError

    def implies(self, x, y) -> Tensor:
        """Material implication: not-x or y."""
        x, y = ad.ensure_tensor(x), ad.ensure_tensor(y)
        _check_degree(x, "implies")
        _check_degree(y, "implies")
        return self.disj(1.0 - x, y)

    def iff(self, x, y) -> Tensor:
        """Fuzzy biconditional: (x -> y) and (y -> x)."""
        x, y = ad.ensure_tensor(x), ad.ensure_tensor(y)
        return self.conj(self.implies(x, y), self.implies(y, x))

    def conj_fold(self, terms) -> Tensor:
        """Left fold of binary conjunction over a nonempty sequence."""
        terms = list(terms)
        if not terms:
            raise DomainError("conj_fold requires at least one term")
        acc = ad.ensure_tensor(terms[0])
        for t in terms[1:]:
            acc = self.conj(acc, t)
        return acc

    def __repr__(self):
        return f"{type(self).__name__}()"


class GoedelSemantics(Semantics):
    """min/max connectives; exactly associative and idempotent."""

    name = GOEDEL

    def conj(self, x, y) -> Tensor:
        x, y = ad.ensure_tensor(x), ad.ensure_tensor(y)
        _check_degree(x, "conj")
        _check_degree(y, "conj")
        return ad.minimum(x, y)

    def disj(self, x, y) -> Tensor:
        x, y = ad.ensure_tensor(x), ad.ensure_tensor(y)
        _check_degree(x, "disj")
        _check_degree(y, "disj")
        return ad.maximum(x, y)


class ProductSemantics(Semantics):
    """Probabilistic-style connectives: x*y and x + y - x*y."""

    name = PRODUCT

    def conj(self, x, y) -> Tensor:
        x, y = ad.ensure_tensor(x), ad.ensure_tensor(y)
        _check_degree(x, "conj")
        _check_degree(y, "conj")
        return x * y

    def disj(self, x, y) -> Tensor:
        x, y = ad.ensure_tensor(x), ad.ensure_tensor(y)
        _check_degree(x, "disj")
        _check_degree(y, "disj")
        return x + y - x * y


_SEMANTICS = {GOEDEL: GoedelSemantics(), PRODUCT: ProductSemantics()}


def get_semantics(name: str) -> Semantics:
    """Resolve a serialized semantics token ('goedel' or 'product')."""
    try:
        return _SEMANTICS[name]
    except KeyError:
        raise DomainError(f"unknown semantics {name!r}; expected one of {sorted(_SEMANTICS)}") from None
