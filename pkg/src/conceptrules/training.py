"""Two-stage training: concept encoder first, then the rule head on frozen
concept bundles.  Both stages share one loop with Adam, validation-loss
plateau LR decay, early stopping and best-validation snapshotting.  An
optional joint stage optimizes everything against the combined loss.

Checkpoints are JSON: {version, config, meta, params, history}.  Parameter
values serialize as decimal floats via ``repr`` so a save/load round trip
is bit-exact.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Adam, Tensor
from .datasets import LabeledDataset
from .encoder import (ConceptBundle, EncoderParams, concept_loss, encode,
                      encode_numpy, init_encoder_params)
from .errors import (CheckpointError, NumericError, ShapeError,
                     TrainingDivergenceError)
from .reasoner import ReasonerParams, init_reasoner_params, rule_forward

CHECKPOINT_VERSION = 1


@dataclass
class TrainConfig:
    """Hyperparameters for one training stage; serialized with checkpoints."""

    stage: str = "dcr"                     # encoder | dcr | joint
    epochs: int = 3000
    batch_size: int = 256
    learning_rate: float = 1e-2
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 4e-5
    concept_loss_weight: float = 1.0
    temperature: float = 100.0
    semantics: str = "goedel"
    embedding_dim: int = 128
    hidden_sizes: tuple[int, ...] = (128, 128)
    leaky_slope: float = 0.01
    seed: int = 0
    patience: int = 15
    lr_patience: int = 10
    lr_decay_factor: float = 0.1
    boolean_threshold: float = 0.5

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["betas"] = list(self.betas)
        d["hidden_sizes"] = list(self.hidden_sizes)
        return d

    @staticmethod
    def from_dict(d: dict) -> "TrainConfig":
        names = {f.name for f in dataclasses.fields(TrainConfig)}
        unknown = set(d) - names
        if unknown:
            raise CheckpointError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(d)
        if "betas" in kwargs:
            kwargs["betas"] = tuple(kwargs["betas"])
        if "hidden_sizes" in kwargs:
            kwargs["hidden_sizes"] = tuple(kwargs["hidden_sizes"])
        return TrainConfig(**kwargs)

    def replace(self, **kwargs) -> "TrainConfig":
        return dataclasses.replace(self, **kwargs)


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    return np.eye(n_classes, dtype=np.float64)[np.asarray(labels, dtype=np.int64)]


def total_loss(task_scores, task_targets, concept_preds, concept_targets,
               concept_weight: float) -> Tensor:
    """Task BCE plus ``concept_weight`` times the concept BCE.

    ``task_scores`` may be one (n, o) tensor or a per-class list of (n,)
    tensors; fuzzy scores are used directly as probabilities.
    """
    targets = np.asarray(task_targets, dtype=np.float64)
    if isinstance(task_scores, (list, tuple)):
        if targets.shape[1] != len(task_scores):
            raise ShapeError("expected %d target columns, got %r"
                             % (len(task_scores), targets.shape))
        per_class = [ad.binary_cross_entropy(s, targets[:, j])
                     for j, s in enumerate(task_scores)]
        task = per_class[0]
        for t in per_class[1:]:
            task = task + t
        task = task * (1.0 / len(per_class))
    else:
        task = ad.binary_cross_entropy(task_scores, targets)
    if concept_weight == 0.0 or concept_preds is None:
        return task
    return task + concept_weight * concept_loss(concept_preds, concept_targets)


# -- generic loop ----------------------------------------------------------------


def _snapshot(tensors: dict[str, Tensor]) -> dict[str, np.ndarray]:
    return {name: t.data.copy() for name, t in tensors.items()}


def _restore(tensors: dict[str, Tensor], snap: dict[str, np.ndarray]) -> None:
    for name, t in tensors.items():
        t.data = snap[name].copy()


def _fit_loop(trainable: dict[str, Tensor], batch_loss: Callable[[np.ndarray], Tensor],
              val_loss: Callable[[], float], n_train: int, cfg: TrainConfig,
              rng: np.random.Generator) -> list[dict]:
    opt = Adam(list(trainable.values()), lr=cfg.learning_rate, betas=cfg.betas,
               eps=cfg.eps, weight_decay=cfg.weight_decay)
    best = _snapshot(trainable)
    best_val = np.inf
    since_best_lr = since_best_stop = 0
    history: list[dict] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n_train)
        batch_losses = []
        for start in range(0, n_train, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            try:
                loss = batch_loss(idx)
            except NumericError as exc:
                raise TrainingDivergenceError(str(exc), epoch) from exc
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingDivergenceError("non-finite training loss", epoch)
            opt.zero_grad()
            loss.backward()
            opt.step()
            batch_losses.append(value)
        try:
            val = val_loss()
        except NumericError as exc:
            raise TrainingDivergenceError(str(exc), epoch) from exc
        if not np.isfinite(val):
            raise TrainingDivergenceError("non-finite validation loss", epoch)
        history.append({"epoch": epoch, "train_loss": float(np.mean(batch_losses)),
                        "val_loss": float(val), "lr": opt.lr})
        if val < best_val:
            best_val = val
            best = _snapshot(trainable)
            since_best_lr = since_best_stop = 0
        else:
            since_best_lr += 1
            since_best_stop += 1
            if cfg.lr_patience > 0 and since_best_lr >= cfg.lr_patience:
                opt.lr *= cfg.lr_decay_factor
                since_best_lr = 0
            if cfg.patience > 0 and since_best_stop >= cfg.patience:
                break
    _restore(trainable, best)
    return history


# -- stage: encoder ----------------------------------------------------------------


def _encoder_stage_loss(params: EncoderParams, probe: dict[str, Tensor],
                        x: np.ndarray, c: np.ndarray, y1h: Optional[np.ndarray],
                        cfg: TrainConfig) -> Tensor:
    degrees, embeddings = encode(Tensor(x), params)
    loss = cfg.concept_loss_weight * concept_loss(degrees, c)
    if y1h is not None:
        n = x.shape[0]
        flat = embeddings.reshape((n, params.n_concepts * params.embedding_dim))
        logits = flat @ probe["w"] + probe["b"]
        loss = loss + ad.binary_cross_entropy(ad.sigmoid(logits), y1h)
    return loss


def train_encoder_arrays(x_train: np.ndarray, c_train: np.ndarray,
                         y_train: Optional[np.ndarray],
                         x_val: np.ndarray, c_val: np.ndarray,
                         y_val: Optional[np.ndarray],
                         n_classes: int, cfg: TrainConfig
                         ) -> tuple[EncoderParams, list[dict]]:
    """Stage 1: concept supervision plus a throwaway linear task probe on the
    concatenated embeddings (so embeddings keep task-relevant information
    beyond the truth degrees).  The probe is dropped from the result."""
    rng = np.random.default_rng(cfg.seed)
    params = init_encoder_params(x_train.shape[1], c_train.shape[1], cfg.embedding_dim,
                                 rng, cfg.hidden_sizes, cfg.leaky_slope)
    probe: dict[str, Tensor] = {}
    y1h_train = y1h_val = None
    if y_train is not None:
        k, m = params.n_concepts, params.embedding_dim
        probe["w"] = Tensor(rng.normal(0.0, np.sqrt(1.0 / (k * m)), (k * m, n_classes)),
                            requires_grad=True)
        probe["b"] = Tensor(np.zeros(n_classes), requires_grad=True)
        y1h_train = one_hot(y_train, n_classes)
        y1h_val = one_hot(y_val, n_classes)

    trainable = dict(params.tensors)
    trainable.update({f"probe.{n}": t for n, t in probe.items()})

    def batch_loss(idx):
        yb = y1h_train[idx] if y1h_train is not None else None
        return _encoder_stage_loss(params, probe, x_train[idx], c_train[idx], yb, cfg)

    def val_loss():
        return _encoder_stage_loss(params, probe, x_val, c_val, y1h_val, cfg).item()

    history = _fit_loop(trainable, batch_loss, val_loss, x_train.shape[0], cfg, rng)
    return params, history


# -- stage: rule head ----------------------------------------------------------------


def _reasoner_loss(params: ReasonerParams, degrees: np.ndarray, embeddings: np.ndarray,
                   y1h: np.ndarray) -> Tensor:
    fwd = rule_forward(Tensor(degrees), Tensor(embeddings), params)
    return total_loss([f.score for f in fwd], y1h, None, None, 0.0)


def train_reasoner_arrays(train_bundle: ConceptBundle, y_train: np.ndarray,
                          val_bundle: ConceptBundle, y_val: np.ndarray,
                          n_classes: int, cfg: TrainConfig
                          ) -> tuple[ReasonerParams, list[dict]]:
    """Stage 2: optimize the rule head on task BCE over precomputed bundles."""
    rng = np.random.default_rng(cfg.seed)
    params = init_reasoner_params(n_classes, train_bundle.embedding_dim, rng,
                                  temperature=cfg.temperature, semantics=cfg.semantics,
                                  leaky_slope=cfg.leaky_slope)
    y1h_train = one_hot(y_train, n_classes)
    y1h_val = one_hot(y_val, n_classes)

    def batch_loss(idx):
        return _reasoner_loss(params, train_bundle.degrees[idx],
                              train_bundle.embeddings[idx], y1h_train[idx])

    def val_loss():
        return _reasoner_loss(params, val_bundle.degrees, val_bundle.embeddings,
                              y1h_val).item()

    history = _fit_loop(params.tensors, batch_loss, val_loss, len(train_bundle), cfg, rng)
    return params, history


# -- stage: joint ----------------------------------------------------------------


def train_joint_arrays(x_train, c_train, y_train, x_val, c_val, y_val,
                       n_classes: int, cfg: TrainConfig
                       ) -> tuple[EncoderParams, ReasonerParams, list[dict]]:
    """Single optimizer over encoder and rule head against the combined loss."""
    rng = np.random.default_rng(cfg.seed)
    enc = init_encoder_params(x_train.shape[1], c_train.shape[1], cfg.embedding_dim,
                              rng, cfg.hidden_sizes, cfg.leaky_slope)
    head = init_reasoner_params(n_classes, cfg.embedding_dim, rng,
                                temperature=cfg.temperature, semantics=cfg.semantics,
                                leaky_slope=cfg.leaky_slope)
    y1h_train = one_hot(y_train, n_classes)
    y1h_val = one_hot(y_val, n_classes)

    def forward(x, c, y1h):
        degrees, embeddings = encode(Tensor(x), enc)
        fwd = rule_forward(degrees, embeddings, head)
        return total_loss([f.score for f in fwd], y1h, degrees, c,
                          cfg.concept_loss_weight)

    def batch_loss(idx):
        return forward(x_train[idx], c_train[idx], y1h_train[idx])

    def val_loss():
        return forward(x_val, c_val, y1h_val).item()

    trainable = dict(enc.tensors)
    trainable.update(head.tensors)
    history = _fit_loop(trainable, batch_loss, val_loss, x_train.shape[0], cfg, rng)
    return enc, head, history


# -- checkpoints ----------------------------------------------------------------


@dataclass
class Checkpoint:
    version: int
    config: TrainConfig
    meta: dict
    params: dict[str, np.ndarray]
    history: list[dict] = field(default_factory=list)

    def subset(self, prefix: str) -> dict[str, np.ndarray]:
        plen = len(prefix)
        return {name[plen:]: arr for name, arr in self.params.items()
                if name.startswith(prefix)}


def checkpoint_from_models(cfg: TrainConfig, meta: dict,
                           encoder: Optional[EncoderParams],
                           reasoner: Optional[ReasonerParams],
                           history: list[dict]) -> Checkpoint:
    params: dict[str, np.ndarray] = {}
    if encoder is not None:
        params.update({f"encoder.{n}": t.data.copy() for n, t in encoder.tensors.items()})
    if reasoner is not None:
        params.update({f"reasoner.{n}": t.data.copy() for n, t in reasoner.tensors.items()})
    return Checkpoint(CHECKPOINT_VERSION, cfg, dict(meta), params, list(history))


def build_encoder(ckpt: Checkpoint) -> EncoderParams:
    meta, cfg = ckpt.meta, ckpt.config
    params = EncoderParams(meta["input_dim"], meta["n_concepts"], cfg.embedding_dim,
                           tuple(cfg.hidden_sizes), cfg.leaky_slope)
    stored = ckpt.subset("encoder.")
    if not stored:
        raise CheckpointError("checkpoint holds no encoder parameters")
    rng = np.random.default_rng(0)
    expected = init_encoder_params(params.input_dim, params.n_concepts,
                                   params.embedding_dim, rng, params.hidden_sizes,
                                   params.leaky_slope)
    for name, tensor in expected.tensors.items():
        if name not in stored:
            raise CheckpointError(f"checkpoint missing encoder parameter {name!r}")
        if stored[name].shape != tensor.data.shape:
            raise CheckpointError("encoder parameter %r has shape %r, expected %r"
                                  % (name, stored[name].shape, tensor.data.shape))
        params.tensors[name] = Tensor(stored[name].copy(), requires_grad=True)
    return params


def build_reasoner(ckpt: Checkpoint) -> ReasonerParams:
    meta, cfg = ckpt.meta, ckpt.config
    stored = ckpt.subset("reasoner.")
    if not stored:
        raise CheckpointError("checkpoint holds no reasoner parameters")
    rng = np.random.default_rng(0)
    params = init_reasoner_params(meta["n_classes"], cfg.embedding_dim, rng,
                                  temperature=cfg.temperature, semantics=cfg.semantics,
                                  leaky_slope=cfg.leaky_slope)
    for name, tensor in params.tensors.items():
        if name not in stored:
            raise CheckpointError(f"checkpoint missing reasoner parameter {name!r}")
        if stored[name].shape != tensor.data.shape:
            raise CheckpointError("reasoner parameter %r has shape %r, expected %r"
                                  % (name, stored[name].shape, tensor.data.shape))
        tensor.data = stored[name].copy()
    return params


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    payload = {
        "version": ckpt.version,
        "config": ckpt.config.to_dict(),
        "meta": ckpt.meta,
        "params": {name: {"shape": list(arr.shape),
                          "values": [float(v) for v in arr.ravel()]}
                   for name, arr in ckpt.params.items()},
        "history": ckpt.history,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, separators=(",", ":"))


def load_checkpoint(path) -> Checkpoint:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"cannot parse checkpoint {path}: {exc}") from exc
    try:
        version = payload["version"]
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version!r}")
        config = TrainConfig.from_dict(payload["config"])
        meta = payload["meta"]
        params = {}
        for name, entry in payload["params"].items():
            shape = tuple(entry["shape"])
            values = np.asarray(entry["values"], dtype=np.float64)
            expected = int(np.prod(shape)) if shape else 1
            if values.size != expected:
                raise CheckpointError(f"parameter {name!r} has {values.size} values "
                                      f"for shape {shape}")
            params[name] = values.reshape(shape)
        history = payload["history"]
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"malformed checkpoint {path}: {exc}") from exc
    return Checkpoint(version, config, meta, params, history)


# -- dataset-level entry points ----------------------------------------------------


def _split_xy(dataset: LabeledDataset, split: str):
    return dataset.split_arrays(split)


def train_encoder(dataset: LabeledDataset, cfg: TrainConfig) -> Checkpoint:
    x_tr, c_tr, y_tr = _split_xy(dataset, "train")
    x_va, c_va, y_va = _split_xy(dataset, "val")
    params, history = train_encoder_arrays(x_tr, c_tr, y_tr, x_va, c_va, y_va,
                                           dataset.n_classes, cfg.replace(stage="encoder"))
    meta = {"input_dim": dataset.n_features, "n_concepts": dataset.n_concepts,
            "n_classes": dataset.n_classes, "dataset": dataset.name}
    return checkpoint_from_models(cfg.replace(stage="encoder"), meta, params, None, history)


def encode_split(dataset: LabeledDataset, encoder: EncoderParams,
                 split: str) -> tuple[ConceptBundle, np.ndarray]:
    x, _, y = dataset.split_arrays(split)
    return encode_numpy(x, encoder), y


def train_reasoner(dataset: LabeledDataset, cfg: TrainConfig,
                   encoder_ckpt: Checkpoint) -> Checkpoint:
    encoder = build_encoder(encoder_ckpt)
    train_bundle, y_tr = encode_split(dataset, encoder, "train")
    val_bundle, y_va = encode_split(dataset, encoder, "val")
    cfg = cfg.replace(stage="dcr", embedding_dim=encoder_ckpt.config.embedding_dim,
                      hidden_sizes=tuple(encoder_ckpt.config.hidden_sizes))
    head, history = train_reasoner_arrays(train_bundle, y_tr, val_bundle, y_va,
                                          dataset.n_classes, cfg)
    meta = {"input_dim": dataset.n_features, "n_concepts": dataset.n_concepts,
            "n_classes": dataset.n_classes, "dataset": dataset.name}
    return checkpoint_from_models(cfg, meta, encoder, head, history)


def train_joint(dataset: LabeledDataset, cfg: TrainConfig) -> Checkpoint:
    x_tr, c_tr, y_tr = _split_xy(dataset, "train")
    x_va, c_va, y_va = _split_xy(dataset, "val")
    enc, head, history = train_joint_arrays(x_tr, c_tr, y_tr, x_va, c_va, y_va,
                                            dataset.n_classes, cfg.replace(stage="joint"))
    meta = {"input_dim": dataset.n_features, "n_concepts": dataset.n_concepts,
            "n_classes": dataset.n_classes, "dataset": dataset.name}
    return checkpoint_from_models(cfg.replace(stage="joint"), meta, enc, head, history)
