"""Connective algebra for both semantics: worked values, identity elements,
classical truth tables, De Morgan, monotonicity and commutativity."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conceptrules.autodiff import Tensor
from conceptrules.errors import DomainError
from conceptrules.fuzzy import GoedelSemantics, ProductSemantics, get_semantics

GOEDEL = GoedelSemantics()
PRODUCT = ProductSemantics()
BOTH = [GOEDEL, PRODUCT]

degree = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def val(t) -> float:
    return float(t.data)


class TestRegistry:
    def test_tokens(self):
        assert isinstance(get_semantics("goedel"), GoedelSemantics)
        assert isinstance(get_semantics("product"), ProductSemantics)

    def test_unknown_token(self):
        with pytest.raises(DomainError):
            get_semantics("lukasiewicz")


class TestWorkedValues:
    def test_neg(self):
        assert val(GOEDEL.neg(0.2)) == pytest.approx(0.8)
        assert val(GOEDEL.neg(0.0)) == 1.0

    def test_goedel_conj(self):
        assert val(GOEDEL.conj(0.3, 0.7)) == pytest.approx(0.3)

    def test_product_conj(self):
        assert val(PRODUCT.conj(0.5, 0.5)) == pytest.approx(0.25)

    def test_implies_vacuous(self):
        for sem in BOTH:
            assert val(sem.implies(0.0, 0.3)) == pytest.approx(1.0, abs=1e-12)
            assert val(sem.implies(0.0, 0.9)) == pytest.approx(1.0, abs=1e-12)

    def test_goedel_implies(self):
        assert val(GOEDEL.implies(1.0, 0.4)) == pytest.approx(0.4)

    def test_iff_role_examples(self):
        # role 0 with degree 0 -> literal is the negation, fully true
        assert val(GOEDEL.iff(0.0, 0.0)) == 1.0
        # role 1 with degree 0 -> literal fully false
        assert val(GOEDEL.iff(1.0, 0.0)) == 0.0

    def test_domain_errors(self):
        for sem in BOTH:
            with pytest.raises(DomainError):
                sem.conj(1.2, 0.5)
            with pytest.raises(DomainError):
                sem.neg(-0.1)


class TestBooleanRestriction:
    """On {0,1} inputs all five connectives reproduce classical tables."""

    @pytest.mark.parametrize("sem", BOTH, ids=lambda s: s.name)
    def test_truth_tables(self, sem):
        for x, y in itertools.product((0.0, 1.0), repeat=2):
            assert val(sem.conj(x, y)) == x * y
            assert val(sem.disj(x, y)) == max(x, y)
            assert val(sem.implies(x, y)) == (1.0 if x <= y else 0.0)
            assert val(sem.iff(x, y)) == (1.0 if x == y else 0.0)
        assert val(sem.neg(0.0)) == 1.0 and val(sem.neg(1.0)) == 0.0


@pytest.mark.parametrize("sem", BOTH, ids=lambda s: s.name)
class TestAlgebra:
    @given(x=degree)
    @settings(max_examples=50)
    def test_identity_elements(self, sem, x):
        assert val(sem.conj(x, 1.0)) == pytest.approx(x, abs=1e-12)
        assert val(sem.disj(x, 0.0)) == pytest.approx(x, abs=1e-12)

    @given(x=degree)
    @settings(max_examples=50)
    def test_double_negation(self, sem, x):
        assert val(sem.neg(sem.neg(x))) == pytest.approx(x, abs=1e-12)

    @given(x=degree, y=degree)
    @settings(max_examples=50)
    def test_commutativity(self, sem, x, y):
        assert val(sem.conj(x, y)) == pytest.approx(val(sem.conj(y, x)), abs=1e-12)
        assert val(sem.disj(x, y)) == pytest.approx(val(sem.disj(y, x)), abs=1e-12)

    @given(x=degree, y=degree, z=degree)
    @settings(max_examples=50)
    def test_associativity(self, sem, x, y, z):
        left = val(sem.conj(sem.conj(x, y), z))
        right = val(sem.conj(x, sem.conj(y, z)))
        assert left == pytest.approx(right, abs=1e-12)
        left = val(sem.disj(sem.disj(x, y), z))
        right = val(sem.disj(x, sem.disj(y, z)))
        assert left == pytest.approx(right, abs=1e-12)

    @given(x=degree, y=degree)
    @settings(max_examples=50)
    def test_de_morgan(self, sem, x, y):
        lhs = val(sem.neg(sem.conj(x, y)))
        rhs = val(sem.disj(sem.neg(x), sem.neg(y)))
        assert lhs == pytest.approx(rhs, abs=1e-12)

    @given(x=degree, y=degree, bump=st.floats(min_value=0.0, max_value=0.5))
    @settings(max_examples=50)
    def test_monotonicity(self, sem, x, y, bump):
        x2 = min(1.0, x + bump)
        assert val(sem.conj(x2, y)) >= val(sem.conj(x, y)) - 1e-12
        assert val(sem.disj(x2, y)) >= val(sem.disj(x, y)) - 1e-12

    @given(x=st.sampled_from([0.0, 1.0]))
    @settings(max_examples=10)
    def test_iff_reflexive_on_booleans(self, sem, x):
        assert val(sem.iff(x, x)) == 1.0


class TestFold:
    def test_fold_matches_pairwise(self):
        rng = np.random.default_rng(3)
        terms = rng.uniform(0, 1, size=6)
        for sem in BOTH:
            acc = terms[0]
            for t in terms[1:]:
                acc = val(sem.conj(acc, t))
            assert val(sem.conj_fold(list(terms))) == pytest.approx(acc, abs=1e-12)

    def test_fold_empty_raises(self):
        with pytest.raises(DomainError):
            GOEDEL.conj_fold([])

    def test_fold_order_insensitive_within_tolerance(self):
        rng = np.random.default_rng(4)
        terms = list(rng.uniform(0, 1, size=5))
        for sem in BOTH:
            a = val(sem.conj_fold(terms))
            b = val(sem.conj_fold(terms[::-1]))
            assert a == pytest.approx(b, abs=1e-12)


class TestDifferentiability:
    def test_gradients_flow_through_connectives(self):
        for sem in BOTH:
            x = Tensor(0.3, requires_grad=True)
            y = Tensor(0.6, requires_grad=True)
            sem.iff(x, y).backward()
            assert x.grad is not None and y.grad is not None
            assert np.isfinite(x.grad).all() and np.isfinite(y.grad).all()
