"""Benchmark generators: constructions, determinism, splits, rule-table
consistency and the CSV round trip."""

import numpy as np
import pytest

from conceptrules.datasets import (GENERATORS, from_csv, gen_dot, gen_trig, gen_xor,
                                   generate, split_dataset, to_csv)
from conceptrules.errors import ContractError


class TestXor:
    def test_construction_cases(self):
        ds = gen_xor(500, 0)
        # deterministic recombination of the stated indicators
        assert np.array_equal(ds.concepts, (ds.features > 0.5).astype(int))
        assert np.array_equal(ds.labels, ds.concepts[:, 0] ^ ds.concepts[:, 1])

    def test_hand_cases(self):
        # (0.9, 0.2) -> concepts (1, 0), label 1; both above 0.5 -> label 0
        c = (np.array([0.9, 0.2]) > 0.5).astype(int)
        assert c.tolist() == [1, 0] and (c[0] ^ c[1]) == 1
        c = (np.array([0.51, 0.51]) > 0.5).astype(int)
        assert (c[0] ^ c[1]) == 0

    def test_label_balance(self):
        ds = gen_xor(3000, 1)
        assert 0.45 <= ds.labels.mean() <= 0.55

    def test_rule_table_reproduces_labels(self):
        ds = gen_xor(2000, 3)
        for rule in ds.rule_table:
            fired = rule.evaluate_batch(ds.concepts) == 1
            assert np.all(ds.labels[fired] == rule.class_id)
        # the four rows cover every sample
        coverage = sum(rule.evaluate_batch(ds.concepts) for rule in ds.rule_table)
        assert np.all(coverage == 1)


class TestTrig:
    def test_seven_features(self):
        ds = gen_trig(100, 0)
        assert ds.n_features == 7 and ds.n_concepts == 3

    def test_hand_latents(self):
        h = np.array([1.0, -0.5, 2.0])
        assert ((h > 0).astype(int)).tolist() == [1, 0, 1]
        assert int(h[0] + h[1] > 0) == 1
        h = np.array([-1.0, -1.0, 1e-9])
        assert int(h[0] + h[1] > 0) == 0

    def test_norm_feature(self):
        # feature 7 is the squared latent norm: verify via the latent std
        ds = gen_trig(5000, 2)
        assert np.all(ds.features[:, 6] >= 0)
        # E[h^2] per latent is 4 (std 2), so the mean of the norm is near 12
        assert abs(ds.features[:, 6].mean() - 12.0) < 0.6

    def test_latent_std_is_two(self):
        rng = np.random.default_rng(11)
        h = rng.normal(0.0, 2.0, size=200000)
        assert abs(h.std() - 2.0) < 0.02  # generator draws with scale=2

    def test_rule_table_rows_are_sound(self):
        ds = gen_trig(4000, 5)
        for rule in ds.rule_table:
            fired = rule.evaluate_batch(ds.concepts) == 1
            assert fired.sum() > 0
            assert np.all(ds.labels[fired] == rule.class_id)


class TestDot:
    def test_hand_vectors(self):
        v1 = v2 = np.array([1.0, 0.0])
        w_pos = np.array([1.0, 1.0]) / np.sqrt(2)
        assert float(v1 @ v2) > 0            # label 1
        assert float(v1 @ w_pos) > 0         # concept 1 on
        assert float(v2 @ -w_pos) < 0        # concept 2 off
        assert float(v1 @ -v1) < 0           # opposite vectors -> label 0

    def test_features_recover_latents(self):
        ds = gen_dot(300, 7)
        v1 = (ds.features[:, :2] + ds.features[:, 2:]) / 2
        v2 = (ds.features[:, :2] - ds.features[:, 2:]) / 2
        assert np.array_equal(ds.labels, ((v1 * v2).sum(axis=1) > 0).astype(int))

    def test_label_not_a_function_of_concepts(self):
        # the dataset's designed property: every concept cell contains both labels
        ds = gen_dot(3000, 1)
        for cell in range(4):
            mask = (ds.concepts[:, 0] * 2 + ds.concepts[:, 1]) == cell
            labels = set(ds.labels[mask].tolist())
            assert labels == {0, 1}

    def test_no_rule_table(self):
        assert gen_dot(10, 0).rule_table is None


class TestGenerateAndSplit:
    def test_registry(self):
        for name in ("xor", "trig", "dot"):
            assert generate(name, 10, 0).name == name
        with pytest.raises(ContractError):
            generate("mnist", 10, 0)

    def test_generators_pure(self):
        for name, gen in GENERATORS.items():
            a, b = gen(200, 9), gen(200, 9)
            assert np.array_equal(a.features, b.features)
            assert np.array_equal(a.labels, b.labels)

    def test_invalid_sizes(self):
        for gen in GENERATORS.values():
            with pytest.raises(ContractError):
                gen(0, 1)

    def test_split_proportions(self):
        ds = split_dataset(gen_xor(3000, 1), 1)
        assert len(ds.splits["train"]) == 2100
        assert len(ds.splits["val"]) == 300
        assert len(ds.splits["test"]) == 600

    def test_split_rounding(self):
        ds = split_dataset(gen_xor(10, 1), 1)
        sizes = {k: len(v) for k, v in ds.splits.items()}
        assert sizes == {"train": 7, "val": 1, "test": 2}

    def test_split_disjoint_exhaustive(self):
        ds = split_dataset(gen_trig(533, 4), 4)
        merged = np.concatenate(list(ds.splits.values()))
        assert np.array_equal(np.sort(merged), np.arange(533))

    def test_split_deterministic(self):
        a = split_dataset(gen_xor(100, 2), 5)
        b = split_dataset(gen_xor(100, 2), 5)
        for k in a.splits:
            assert np.array_equal(a.splits[k], b.splits[k])


class TestCsv:
    def test_round_trip(self):
        ds = split_dataset(gen_trig(50, 3), 3)
        text = to_csv(ds)
        back = from_csv(text, name="trig")
        assert np.array_equal(back.features, ds.features)
        assert np.array_equal(back.concepts, ds.concepts)
        assert np.array_equal(back.labels, ds.labels)
        for k in ds.splits:
            assert np.array_equal(back.splits[k], ds.splits[k])
        assert back.rule_table == ds.rule_table

    def test_byte_identical_rerun(self):
        a = to_csv(split_dataset(gen_dot(80, 6), 6))
        b = to_csv(split_dataset(gen_dot(80, 6), 6))
        assert a == b

    def test_requires_split(self):
        with pytest.raises(ContractError):
            to_csv(gen_xor(10, 0))
