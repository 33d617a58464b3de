"""Seeded generators for the XOR, trigonometric and vector-dot benchmarks.

Each generator is a pure function of (n_samples, seed) and returns raw
features, binary concept annotations, class labels and, when the task is
a Boolean function of its concepts, the ground-truth rule table.  The
trigonometric and dot tasks are deliberately *not* decidable from the
binary concepts alone: their labels depend on latent magnitudes that only
survive in continuous representations.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ContractError, ShapeError
from .rules import BooleanRule

SPLIT_NAMES = ("train", "val", "test")

XOR_RULES = (
    BooleanRule(0, ((0, False), (1, False))),
    BooleanRule(0, ((0, True), (1, True))),
    BooleanRule(1, ((0, False), (1, True))),
    BooleanRule(1, ((0, True), (1, False))),
)

TRIG_RULES = (
    BooleanRule(0, ((0, False), (1, False), (2, False))),
    BooleanRule(1, ((0, True), (1, True), (2, True))),
)


@dataclass
class LabeledDataset:
    """Features, binary concepts, labels and split indices for one benchmark."""

    name: str
    features: np.ndarray                 # (n, d) float64
    concepts: np.ndarray                 # (n, k) int64 in {0, 1}
    labels: np.ndarray                   # (n,) int64 class ids
    rule_table: Optional[tuple[BooleanRule, ...]] = None
    splits: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_concepts(self) -> int:
        return self.concepts.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1

    def split_arrays(self, split: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        idx = self.indices(split)
        return self.features[idx], self.concepts[idx], self.labels[idx]

    def indices(self, split: str) -> np.ndarray:
        if split not in self.splits:
            raise ContractError(f"dataset has no split {split!r}; call split_dataset first")
        return self.splits[split]


def gen_xor(n_samples: int, seed: int) -> LabeledDataset:
    """Uniform points on the unit square; concepts threshold each coordinate
    at 0.5 and the label is their exclusive or."""
    if n_samples < 1:
        raise ContractError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(n_samples, 2))
    c = (x > 0.5).astype(np.int64)
    y = (c[:, 0] ^ c[:, 1]).astype(np.int64)
    return LabeledDataset("xor", x, c, y, rule_table=XOR_RULES)


def gen_trig(n_samples: int, seed: int) -> LabeledDataset:
    """Three latent normals with standard deviation 2 drive 7 nonlinear
    features; concepts are the latent signs and the label is the sign of
    the first two latents' sum."""
    if n_samples < 1:
        raise ContractError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    h = rng.normal(0.0, 2.0, size=(n_samples, 3))
    x = np.column_stack([
        np.sin(h[:, 0]) + h[:, 0],
        np.sin(h[:, 1]) + h[:, 1],
        np.sin(h[:, 2]) + h[:, 2],
        np.cos(h[:, 0]) + h[:, 0],
        np.cos(h[:, 1]) + h[:, 1],
        np.cos(h[:, 2]) + h[:, 2],
        (h ** 2).sum(axis=1),
    ])
    c = (h > 0.0).astype(np.int64)
    y = ((h[:, 0] + h[:, 1]) > 0.0).astype(np.int64)
    return LabeledDataset("trig", x, c, y, rule_table=TRIG_RULES)


DOT_REF_POS = np.array([1.0, 1.0]) / np.sqrt(2.0)
DOT_REF_NEG = -DOT_REF_POS


def gen_dot(n_samples: int, seed: int) -> LabeledDataset:
    """Two standard-normal 2-D latent vectors; features are their sum and
    difference, concepts compare each vector against a fixed reference
    direction, and the label is the sign of their dot product.  The label
    is not a Boolean function of the concepts."""
    if n_samples < 1:
        raise ContractError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    v1 = rng.normal(0.0, 1.0, size=(n_samples, 2))
    v2 = rng.normal(0.0, 1.0, size=(n_samples, 2))
    x = np.column_stack([v1 + v2, v1 - v2])
    c = np.column_stack([
        (v1 @ DOT_REF_POS > 0.0),
        (v2 @ DOT_REF_NEG > 0.0),
    ]).astype(np.int64)
    y = ((v1 * v2).sum(axis=1) > 0.0).astype(np.int64)
    return LabeledDataset("dot", x, c, y, rule_table=None)


GENERATORS = {"xor": gen_xor, "trig": gen_trig, "dot": gen_dot}


def generate(name: str, n_samples: int, seed: int) -> LabeledDataset:
    if name not in GENERATORS:
        raise ContractError(f"unknown dataset {name!r}; expected one of {sorted(GENERATORS)}")
    return GENERATORS[name](n_samples, seed)


def split_dataset(dataset: LabeledDataset, seed: int) -> LabeledDataset:
    """Attach a seeded 70/10/20 shuffle split; val and test sizes round down
    and the remainder goes to train."""
    n = dataset.n_samples
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_val = int(n * 0.1)
    n_test = int(n * 0.2)
    n_train = n - n_val - n_test
    dataset.splits = {
        "train": np.sort(order[:n_train]),
        "val": np.sort(order[n_train:n_train + n_val]),
        "test": np.sort(order[n_train + n_val:]),
    }
    return dataset


# -- CSV round trip -------------------------------------------------------------


def to_csv(dataset: LabeledDataset) -> str:
    """Render the dataset (with splits) as deterministic CSV text."""
    if not dataset.splits:
        raise ContractError("dataset must be split before serialization")
    tag = np.empty(dataset.n_samples, dtype=object)
    for split, idx in dataset.splits.items():
        tag[idx] = split
    buf = io.StringIO()
    headers = ([f"x_{i}" for i in range(dataset.n_features)]
               + [f"c_{i}" for i in range(dataset.n_concepts)]
               + ["y", "split"])
    buf.write(",".join(headers) + "\n")
    for i in range(dataset.n_samples):
        cells = [repr(float(v)) for v in dataset.features[i]]
        cells += [str(int(v)) for v in dataset.concepts[i]]
        cells.append(str(int(dataset.labels[i])))
        cells.append(tag[i])
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def save_csv(dataset: LabeledDataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_csv(dataset))


def from_csv(text: str, name: str = "unknown") -> LabeledDataset:
    """Parse CSV text produced by :func:`to_csv`; the rule table is restored
    from the dataset name when it is a known benchmark."""
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    d = sum(1 for h in header if h.startswith("x_"))
    k = sum(1 for h in header if h.startswith("c_"))
    if header[:d + k] + ["y", "split"] != header or d == 0 or k == 0:
        raise ShapeError("unrecognized dataset CSV header")
    rows = [line.split(",") for line in lines[1:]]
    features = np.array([[float(v) for v in r[:d]] for r in rows])
    concepts = np.array([[int(v) for v in r[d:d + k]] for r in rows], dtype=np.int64)
    labels = np.array([int(r[d + k]) for r in rows], dtype=np.int64)
    tags = [r[d + k + 1] for r in rows]
    rule_table = {"xor": XOR_RULES, "trig": TRIG_RULES, "dot": None}.get(name)
    ds = LabeledDataset(name, features, concepts, labels, rule_table=rule_table)
    ds.splits = {s: np.array([i for i, t in enumerate(tags) if t == s], dtype=np.int64)
                 for s in SPLIT_NAMES if s in tags}
    return ds


def load_csv(path, name: str = "unknown") -> LabeledDataset:
    with open(path, "r", encoding="utf-8") as fh:
        return from_csv(fh.read(), name=name)
