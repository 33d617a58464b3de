"""Crisp conjunction rules over binary concepts, with per-class aggregation.

A :class:`BooleanRule` is a class label plus a conjunction of signed
concept literals in canonical (index-sorted) form.  Rules render as
``y_1 <- !c_0 & c_1`` and parse back losslessly.  The empty rule is the
neutral element of conjunction and always evaluates to 1.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError

EMPTY_BODY = "TRUE"


@dataclass(frozen=True)
class BooleanRule:
    """A class id with a canonical conjunction of (concept index, positive?) literals."""

    class_id: int
    literals: tuple[tuple[int, bool], ...]

    def __post_init__(self):
        lits = tuple(sorted((int(i), bool(p)) for i, p in self.literals))
        indices = [i for i, _ in lits]
        if len(set(indices)) != len(indices):
            raise ContractError(f"duplicate concept index in rule literals: {indices}")
        if any(i < 0 for i in indices):
            raise ContractError(f"negative concept index in rule literals: {indices}")
        object.__setattr__(self, "literals", lits)
        object.__setattr__(self, "class_id", int(self.class_id))

    def __len__(self) -> int:
        return len(self.literals)

    def evaluate(self, concepts: Sequence[int]) -> int:
        """Conjunction of the signed literals on a binary concept vector."""
        c = np.asarray(concepts)
        for i, positive in self.literals:
            if i >= c.shape[-1]:
                raise ContractError(f"concept index {i} out of range for {c.shape[-1]} concepts")
            value = bool(c[..., i] > 0.5) if c.ndim == 1 else None
            if value is None:
                raise ContractError("evaluate expects a single concept vector")
            if value != positive:
                return 0
        return 1

    def evaluate_batch(self, concepts: np.ndarray) -> np.ndarray:
        """Vectorized evaluation on an (n, k) binary concept matrix."""
        c = np.asarray(concepts)
        if c.ndim != 2:
            raise ContractError("evaluate_batch expects an (n, k) matrix")
        out = np.ones(c.shape[0], dtype=bool)
        for i, positive in self.literals:
            if i >= c.shape[1]:
                raise ContractError(f"concept index {i} out of range for {c.shape[1]} concepts")
            out &= (c[:, i] > 0.5) == positive
        return out.astype(np.int64)

    def body(self) -> str:
        if not self.literals:
            return EMPTY_BODY
        return " & ".join(("" if pos else "!") + f"c_{i}" for i, pos in self.literals)

    def render(self) -> str:
        return f"y_{self.class_id} <- {self.body()}"

    def __str__(self):
        return self.render()


_LITERAL_RE = re.compile(r"^(!?)c_(\d+)$")


def parse_rule(text: str) -> BooleanRule:
    """Inverse of :meth:`BooleanRule.render`."""
    head, sep, body = text.partition("<-")
    if not sep:
        raise ContractError(f"cannot parse rule {text!r}: missing '<-'")
    head = head.strip()
    if not head.startswith("y_"):
        raise ContractError(f"cannot parse rule head {head!r}")
    class_id = int(head[2:])
    body = body.strip()
    if body == EMPTY_BODY:
        return BooleanRule(class_id, ())
    literals = []
    for token in body.split("&"):
        m = _LITERAL_RE.match(token.strip())
        if m is None:
            raise ContractError(f"cannot parse literal {token.strip()!r}")
        literals.append((int(m.group(2)), m.group(1) != "!"))
    return BooleanRule(class_id, tuple(literals))


def evaluate_boolean(rule: BooleanRule, concepts: Sequence[int]) -> int:
    return rule.evaluate(concepts)


class GlobalRuleSet:
    """Per class, a multiset of distinct rules with occurrence counts."""

    def __init__(self, rules: Iterable[BooleanRule] = ()):
        self._counts: dict[int, Counter] = {}
        for rule in rules:
            self.add(rule)

    def add(self, rule: BooleanRule, count: int = 1) -> None:
        self._counts.setdefault(rule.class_id, Counter())[rule] += count

    def classes(self) -> list[int]:
        return sorted(self._counts)

    def rules_for(self, class_id: int) -> set[BooleanRule]:
        return set(self._counts.get(class_id, ()))

    def count(self, rule: BooleanRule) -> int:
        return self._counts.get(rule.class_id, Counter()).get(rule, 0)

    def total(self, class_id: int) -> int:
        return sum(self._counts.get(class_id, Counter()).values())

    def items(self) -> list[tuple[BooleanRule, int]]:
        """(rule, count) pairs ordered by class, descending count, then rule text."""
        out: list[tuple[BooleanRule, int]] = []
        for class_id in self.classes():
            entries = self._counts[class_id].items()
            out.extend(sorted(entries, key=lambda rc: (-rc[1], rc[0].render())))
        return out

    def render(self) -> str:
        lines = []
        for class_id in self.classes():
            bodies = [f"({rule.body()})" for rule, _ in self.items() if rule.class_id == class_id]
            lines.append(f"y_{class_id} <- " + " | ".join(bodies))
        return "\n".join(lines)

    def to_records(self) -> list[dict]:
        return [{"class": rule.class_id, "rule": rule.render(), "count": count}
                for rule, count in self.items()]

    def __len__(self):
        return sum(len(c) for c in self._counts.values())


def aggregate_global(rules: Iterable[BooleanRule]) -> GlobalRuleSet:
    """Group canonical rules per class with occurrence counts."""
    return GlobalRuleSet(rules)
