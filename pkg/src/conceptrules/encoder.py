"""Concept encoder: raw features -> truth degrees plus concept embeddings.

A shared MLP backbone feeds, per concept, a positive and a negative
embedding head.  A linear scorer over both candidate embeddings yields
the concept truth degree, and the final embedding is the degree-weighted
mixture of the two candidates, so every embedding lies on the segment
between its negative and positive state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ShapeError


@dataclass
class ConceptBundle:
    """Truth degrees (n, k) and embeddings (n, k, m) for a sample batch."""

    degrees: np.ndarray
    embeddings: np.ndarray

    def __post_init__(self):
        self.degrees = np.asarray(self.degrees, dtype=np.float64)
        self.embeddings = np.asarray(self.embeddings, dtype=np.float64)
        if self.degrees.ndim == 1:
            self.degrees = self.degrees[None, :]
        if self.embeddings.ndim == 2:
            self.embeddings = self.embeddings[None, :, :]
        if self.embeddings.shape[:2] != self.degrees.shape:
            raise ShapeError("embeddings %r do not match degrees %r"
                             % (self.embeddings.shape, self.degrees.shape))

    def __len__(self) -> int:
        return self.degrees.shape[0]

    @property
    def n_concepts(self) -> int:
        return self.degrees.shape[1]

    @property
    def embedding_dim(self) -> int:
        return self.embeddings.shape[2]

    def row(self, i: int) -> "ConceptBundle":
        return ConceptBundle(self.degrees[i:i + 1], self.embeddings[i:i + 1])

    def subset(self, idx) -> "ConceptBundle":
        return ConceptBundle(self.degrees[idx], self.embeddings[idx])


@dataclass
class EncoderParams:
    input_dim: int
    n_concepts: int
    embedding_dim: int
    hidden_sizes: tuple[int, ...]
    leaky_slope: float = 0.01
    tensors: dict[str, Tensor] = field(default_factory=dict)

    def named_tensors(self) -> dict[str, Tensor]:
        return self.tensors


def init_encoder_params(input_dim: int, n_concepts: int, embedding_dim: int,
                        rng: np.random.Generator,
                        hidden_sizes: tuple[int, ...] = (128, 128),
                        leaky_slope: float = 0.01) -> EncoderParams:
    params = EncoderParams(int(input_dim), int(n_concepts), int(embedding_dim),
                           tuple(int(h) for h in hidden_sizes), leaky_slope)
    t = params.tensors
    fan_in = params.input_dim
    for li, width in enumerate(params.hidden_sizes):
        t[f"backbone.w{li}"] = Tensor(rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_in, width)),
                                      requires_grad=True)
        t[f"backbone.b{li}"] = Tensor(np.zeros(width), requires_grad=True)
        fan_in = width
    k, m = params.n_concepts, params.embedding_dim
    for sign in ("pos", "neg"):
        t[f"heads.{sign}_w"] = Tensor(rng.normal(0.0, np.sqrt(1.0 / fan_in), (fan_in, k * m)),
                                      requires_grad=True)
        t[f"heads.{sign}_b"] = Tensor(np.zeros(k * m), requires_grad=True)
        t[f"scorer.{sign}_u"] = Tensor(rng.normal(0.0, np.sqrt(1.0 / m), (k, m)),
                                       requires_grad=True)
    t["scorer.b"] = Tensor(np.zeros(k), requires_grad=True)
    return params


def encode(x: Tensor, params: EncoderParams) -> tuple[Tensor, Tensor]:
    """Differentiable forward pass; returns (degrees (n, k), embeddings (n, k, m))."""
    x = ad.ensure_tensor(x)
    if x.data.ndim != 2 or x.shape[1] != params.input_dim:
        raise ShapeError("expected features of shape (n, %d), got %r"
                         % (params.input_dim, x.shape))
    t = params.tensors
    n = x.shape[0]
    k, m = params.n_concepts, params.embedding_dim

    h = x
    for li in range(len(params.hidden_sizes)):
        h = ad.leaky_relu(h @ t[f"backbone.w{li}"] + t[f"backbone.b{li}"], params.leaky_slope)

    pos = (h @ t["heads.pos_w"] + t["heads.pos_b"]).reshape((n, k, m))
    negw = (h @ t["heads.neg_w"] + t["heads.neg_b"]).reshape((n, k, m))
    logits = ((pos * t["scorer.pos_u"]).sum(axis=2)
              + (negw * t["scorer.neg_u"]).sum(axis=2)
              + t["scorer.b"])
    degrees = ad.sigmoid(logits)
    gate = degrees.reshape((n, k, 1))
    embeddings = gate * pos + (1.0 - gate) * negw
    return degrees, embeddings


def encode_numpy(x: np.ndarray, params: EncoderParams) -> ConceptBundle:
    """Gradient-free convenience wrapper around :func:`encode`."""
    degrees, embeddings = encode(Tensor(x), params)
    return ConceptBundle(degrees.data, embeddings.data)


def concept_loss(degrees: Tensor, targets) -> Tensor:
    """Mean binary cross-entropy between predicted degrees and 0/1 annotations."""
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != tuple(degrees.shape):
        raise ShapeError("concept targets %r do not match degrees %r"
                         % (targets.shape, tuple(degrees.shape)))
    return ad.binary_cross_entropy(degrees, targets)
