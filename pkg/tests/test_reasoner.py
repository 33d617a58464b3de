"""Rule head: parsimony activation, execution semantics, Booleanization and
its exhaustive agreement with crisp evaluation, plus the reporting helpers."""

import itertools

import numpy as np
import pytest

from conceptrules.autodiff import Tensor
from conceptrules.errors import ContractError, ShapeError
from conceptrules.fuzzy import get_semantics
from conceptrules.reasoner import (ExecutionResult, LocalRuleTrace, booleanize,
                                   execute, execute_rule,
                                   explain_misclassifications, global_rules,
                                   init_reasoner_params, mean_rule_length,
                                   parsimony_activation, rule_error_rate,
                                   rule_forward)
from conceptrules.rules import BooleanRule

GOEDEL = get_semantics("goedel")


def make_result(degrees, scores, roles, relevances):
    """Assemble an ExecutionResult from per-class arrays (o, n, k)."""
    roles = np.asarray(roles, dtype=float)
    relevances = np.asarray(relevances, dtype=float)
    return ExecutionResult(
        degrees=np.asarray(degrees, dtype=float),
        scores=np.asarray(scores, dtype=float),
        roles=roles,
        relevances=relevances,
        literals=np.zeros_like(roles),
        guarded=np.zeros_like(roles),
    )


class TestParsimonyActivation:
    def test_uniform_logits_give_half(self):
        logits = Tensor(np.zeros((4, 3)))
        r = parsimony_activation(logits, temperature=1.0)
        assert np.allclose(r.data, 0.5)

    def test_single_concept(self):
        r = parsimony_activation(Tensor([[2.7]]), temperature=1.0)
        assert np.allclose(r.data, 0.5)  # log-softmax of one entry is 0

    def test_monotone_in_temperature(self):
        rng = np.random.default_rng(0)
        logits = rng.normal(size=(5, 4)) * 2
        previous = None
        for tau in (0.1, 1.0, 10.0):
            r = parsimony_activation(Tensor(logits), temperature=tau).data
            if previous is not None:
                assert np.all(r >= previous - 1e-12)
            previous = r

    def test_high_temperature_pins_relevance(self):
        rng = np.random.default_rng(1)
        logits = rng.normal(size=(6, 3))
        r = parsimony_activation(Tensor(logits), temperature=100.0).data
        assert np.all(r > 0.999)

    def test_empty_concepts_rejected(self):
        with pytest.raises(ContractError):
            parsimony_activation(Tensor(np.zeros((2, 0))), 1.0)


class TestExecuteRule:
    def test_worked_fruit_example(self):
        # degrees (soft, round, yellow) = (1, 0, 1), roles (0, 0, 1),
        # relevances (0, 1, 1): score must be exactly 1
        score = execute_rule([1.0, 0.0, 1.0], [0.0, 0.0, 1.0], [0.0, 1.0, 1.0], GOEDEL)
        assert float(score.data) == 1.0

    def test_zero_relevance_neutralizes_concept(self):
        rng = np.random.default_rng(2)
        roles = rng.uniform(size=4)
        relevances = np.array([0.0, 1.0, 1.0, 1.0])
        base = rng.uniform(size=4)
        out1 = execute_rule(base, roles, relevances, GOEDEL).data
        changed = base.copy()
        changed[0] = rng.uniform()
        roles2 = roles.copy()
        roles2[0] = rng.uniform()
        out2 = execute_rule(changed, roles2, relevances, GOEDEL).data
        assert out1 == out2  # exact irrelevance invariance

    def test_all_relevant_matching_booleans(self):
        c = np.array([1.0, 0.0, 1.0])
        score = execute_rule(c, c, np.ones(3), GOEDEL)
        assert float(score.data) == 1.0

    def test_goedel_output_bound(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            d, ro, re = rng.uniform(size=(3, 5))
            score = float(execute_rule(d, ro, re, GOEDEL).data)
            lits = np.minimum(np.maximum(1 - ro, d), np.maximum(1 - d, ro))
            bound = np.maximum(1 - re, lits)
            assert score <= bound.min() + 1e-12

    def test_batch_matches_per_sample(self):
        rng = np.random.default_rng(4)
        d, ro, re = rng.uniform(size=(3, 6, 4))
        batch = execute_rule(d, ro, re, GOEDEL).data
        singles = [float(execute_rule(d[i], ro[i], re[i], GOEDEL).data) for i in range(6)]
        assert np.allclose(batch, singles)


class TestRuleForward:
    def setup_method(self):
        rng = np.random.default_rng(5)
        self.params = init_reasoner_params(2, 8, rng, temperature=2.0)
        self.degrees = rng.uniform(size=(7, 3))
        self.embeddings = rng.normal(size=(7, 3, 8))

    def test_shapes_and_ranges(self):
        fwd = rule_forward(Tensor(self.degrees), Tensor(self.embeddings), self.params)
        assert len(fwd) == 2
        for f in fwd:
            assert f.roles.shape == (7, 3)
            assert np.all((f.roles.data > 0) & (f.roles.data < 1))
            assert np.all((f.relevances.data > 0) & (f.relevances.data < 1))
            assert f.score.shape == (7,)
            assert np.all((f.score.data >= 0) & (f.score.data <= 1))

    def test_score_recomputable_from_guarded(self):
        fwd = rule_forward(Tensor(self.degrees), Tensor(self.embeddings), self.params)
        for f in fwd:
            assert np.array_equal(f.score.data, f.guarded.data.min(axis=1))

    def test_concept_count_independence(self):
        # the same head evaluates on a different number of concepts
        rng = np.random.default_rng(6)
        degrees = rng.uniform(size=(4, 5))
        embeddings = rng.normal(size=(4, 5, 8))
        result = execute(degrees, embeddings, self.params)
        assert result.scores.shape == (4, 2)

    def test_embedding_dim_mismatch(self):
        with pytest.raises(ShapeError):
            execute(self.degrees, np.zeros((7, 3, 9)), self.params)

    def test_degrees_shape_mismatch(self):
        with pytest.raises(ShapeError):
            execute(np.zeros((7, 4)), self.embeddings, self.params)

    def test_execute_is_deterministic(self):
        a = execute(self.degrees, self.embeddings, self.params)
        b = execute(self.degrees, self.embeddings, self.params)
        assert np.array_equal(a.scores, b.scores)

    def test_gradients_reach_all_parameters_cumulatively(self):
        # across a batch of samples every tensor should receive some gradient
        fwd = rule_forward(Tensor(self.degrees), Tensor(self.embeddings), self.params)
        loss = fwd[0].score.sum() + fwd[1].score.sum()
        loss.backward()
        for name, tensor in self.params.tensors.items():
            assert tensor.grad is not None, name


class TestBooleanize:
    def trace(self, roles, relevances, class_id=0):
        roles = np.asarray(roles, dtype=float)
        relevances = np.asarray(relevances, dtype=float)
        return LocalRuleTrace(class_id, roles, relevances, np.zeros_like(roles),
                              np.zeros_like(roles), 1.0)

    def test_threshold_semantics(self):
        rule = booleanize(self.trace([0.8, 0.1], [0.9, 0.2]))
        assert rule == BooleanRule(0, ((0, True),))

    def test_all_below_threshold_gives_empty_rule(self):
        rule = booleanize(self.trace([0.8, 0.1], [0.3, 0.2]))
        assert rule.literals == ()

    def test_invalid_threshold(self):
        with pytest.raises(ContractError):
            booleanize(self.trace([0.5], [0.5]), threshold=1.0)

    def test_idempotent_canonicalization(self):
        rule = booleanize(self.trace([0.9, 0.1, 0.7], [0.9, 0.8, 0.7]))
        again = BooleanRule(rule.class_id, tuple(reversed(rule.literals)))
        assert rule == again

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_exhaustive_agreement_with_hard_execution(self, k):
        """For every Boolean (degrees, roles, relevances) triple the crisp
        evaluation of the Booleanized rule equals the hard fuzzy execution."""
        for degrees in itertools.product((0.0, 1.0), repeat=k):
            for roles in itertools.product((0.0, 1.0), repeat=k):
                for relevances in itertools.product((0.0, 1.0), repeat=k):
                    rule = booleanize(self.trace(roles, relevances))
                    crisp = rule.evaluate(np.array(degrees, dtype=int))
                    fuzzy = float(execute_rule(np.array(degrees), np.array(roles),
                                               np.array(relevances), GOEDEL).data)
                    assert crisp == fuzzy

    def test_exhaustive_agreement_product_semantics(self):
        product = get_semantics("product")
        for degrees in itertools.product((0.0, 1.0), repeat=3):
            for roles in itertools.product((0.0, 1.0), repeat=3):
                rule = booleanize(self.trace(roles, np.ones(3)))
                crisp = rule.evaluate(np.array(degrees, dtype=int))
                fuzzy = float(execute_rule(np.array(degrees), np.array(roles),
                                           np.ones(3), product).data)
                assert crisp == fuzzy


class TestGlobalRules:
    def test_predicted_mode_counts(self):
        result = make_result(
            degrees=[[0.9, 0.1]] * 3,
            scores=[[0.9, 0.2], [0.8, 0.3], [0.2, 0.9]],
            roles=[[[0.9, 0.1]] * 3, [[0.1, 0.9]] * 3],
            relevances=[[[0.9, 0.9]] * 3, [[0.9, 0.9]] * 3],
        )
        rs = global_rules(result)
        assert rs.total(0) == 2  # two samples with class-0 score > 0.5
        assert rs.total(1) == 1
        assert rs.rules_for(0) == {BooleanRule(0, ((0, True), (1, False)))}

    def test_labeled_mode(self):
        result = make_result(
            degrees=[[0.9, 0.1]] * 2,
            scores=[[0.9, 0.2]] * 2,
            roles=[[[0.9, 0.1]] * 2, [[0.1, 0.9]] * 2],
            relevances=[[[0.9, 0.9]] * 2, [[0.9, 0.9]] * 2],
        )
        rs = global_rules(result, mode="labeled", labels=np.array([1, 1]))
        assert rs.total(1) == 2 and rs.total(0) == 0

    def test_labeled_mode_requires_labels(self):
        result = make_result([[0.9]], [[0.9]], [[[0.9]]], [[[0.9]]])
        with pytest.raises(ContractError):
            global_rules(result, mode="labeled")

    def test_unknown_mode(self):
        result = make_result([[0.9]], [[0.9]], [[[0.9]]], [[[0.9]]])
        with pytest.raises(ContractError):
            global_rules(result, mode="argmax")


class TestReports:
    def exact_model_result(self):
        """Hand-set arrays emulating a Boolean-exact two-concept parity model."""
        degrees = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        roles = np.stack([degrees, degrees])  # class rules mirror the state
        relevances = np.ones((2, 4, 2))
        parity = np.array([0, 1, 1, 0])
        scores = np.stack([(parity == 0).astype(float), (parity == 1).astype(float)],
                          axis=1)
        # class-j roles only matter where the class is asserted; keep mirrored
        return make_result(degrees, scores, roles, relevances), degrees.astype(int), parity

    def test_boolean_exact_model_has_zero_error(self):
        result, concepts, parity = self.exact_model_result()
        table = [
            BooleanRule(0, ((0, False), (1, False))),
            BooleanRule(0, ((0, True), (1, True))),
            BooleanRule(1, ((0, True), (1, False))),
            BooleanRule(1, ((0, False), (1, True))),
        ]
        for row in rule_error_rate(result, concepts, table):
            assert row["error_rate"] == 0.0
            assert row["n_samples"] == 1

    def test_error_rate_modes(self):
        result, concepts, parity = self.exact_model_result()
        table = [BooleanRule(0, ((0, False), (1, False)))]
        # corrupt the true concepts so modes diverge
        bad = concepts.copy()
        bad[0, 0] = 0  # row still matches sample 0
        pred = rule_error_rate(result, bad, table, concepts="predicted")
        true = rule_error_rate(result, bad, table, concepts="true")
        assert pred[0]["error_rate"] == 0.0 == true[0]["error_rate"]
        with pytest.raises(ContractError):
            rule_error_rate(result, concepts, table, concepts="other")

    def test_random_model_reports_without_crash(self):
        rng = np.random.default_rng(7)
        params = init_reasoner_params(2, 4, rng)
        degrees = rng.uniform(size=(10, 2))
        embeddings = rng.normal(size=(10, 2, 4))
        result = execute(degrees, embeddings, params)
        table = [BooleanRule(0, ((0, False), (1, False)))]
        rows = rule_error_rate(result, (degrees > 0.5).astype(int), table)
        assert 0.0 <= rows[0]["error_rate"] <= 1.0

    def test_misclassification_rows(self):
        result, concepts, parity = self.exact_model_result()
        rows = explain_misclassifications(result, parity)
        assert rows == []  # perfect model, no mislabeled samples
        flipped = parity.copy()
        flipped[0] = 1  # pretend sample 0 was labeled 1
        rows = explain_misclassifications(result, flipped)
        assert len(rows) == 1
        assert rows[0]["predicted"] == 0 and rows[0]["label"] == 1
        assert rows[0]["rule"] == "y_0 <- !c_0 & !c_1"
        assert rows[0]["concepts"] == [0.0, 0.0]

    def test_mean_rule_length(self):
        result, _, _ = self.exact_model_result()
        assert mean_rule_length(result) == 2.0
