"""End-to-end model: encoder plus rule head behind one forward surface."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import ConceptBundle, EncoderParams, encode_numpy
from .reasoner import ExecutionResult, ReasonerParams, execute
from .training import Checkpoint, build_encoder, build_reasoner


@dataclass
class ReasoningPipeline:
    """Frozen encoder + rule head; all methods are read-only."""

    encoder: EncoderParams
    reasoner: ReasonerParams
    threshold: float = 0.5

    @staticmethod
    def from_checkpoint(ckpt: Checkpoint) -> "ReasoningPipeline":
        return ReasoningPipeline(build_encoder(ckpt), build_reasoner(ckpt),
                                 threshold=ckpt.config.boolean_threshold)

    def encode(self, x: np.ndarray) -> ConceptBundle:
        return encode_numpy(np.asarray(x, dtype=np.float64), self.encoder)

    def execute_bundle(self, bundle: ConceptBundle) -> ExecutionResult:
        return execute(bundle.degrees, bundle.embeddings, self.reasoner)

    def execute(self, x: np.ndarray) -> ExecutionResult:
        return self.execute_bundle(self.encode(x))

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        return self.execute(x).scores

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.execute(x).predictions()
