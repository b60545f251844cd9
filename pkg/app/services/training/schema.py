import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.db.codecs.checkpoints import SCALE_B, SCALE_W
from app.services.frontend.schema import FeatureMatrix
from app.services.loss.schema import LossScale, Reduction
from app.services.network.schema import NetworkParams

Array = NDArray[np.float64]

METRICS_HEADER = ("step", "loss", "grad_norm", "w", "b", "t")


class BatchSpec(BaseModel):
    """Speakers and utterances per batch, and the range of the per-batch frame count."""

    model_config = ConfigDict(frozen=True)

    n_speakers: int = Field(default=16, ge=2)
    m_utterances: int = Field(default=5, ge=2)
    frame_range: tuple[int, int] = (140, 180)

    @model_validator(mode="after")
    def check_frame_range(self) -> "BatchSpec":
        low, high = self.frame_range
        if not 1 <= low <= high:
            msg = f"frame_range must satisfy 1 <= low <= high, got {self.frame_range}."
            raise ValueError(msg)
        return self

    @property
    def batch_size(self) -> int:
        """N·M."""
        return self.n_speakers * self.m_utterances


class TrainConfig(BaseModel):
    """Optimisation loop settings."""

    model_config = ConfigDict(frozen=True)

    seed: int = 0
    epochs: int = Field(default=1, ge=0)
    batches_per_epoch: int | None = Field(default=None, ge=1)
    checkpoint_interval: int = Field(default=1, ge=1)
    reduction: Reduction = Reduction.MEAN
    batch: BatchSpec = BatchSpec()

    learning_rate: float = Field(default=1e-4, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    epsilon: float = Field(default=1e-8, gt=0)
    clip_norm: float = Field(default=3.0, gt=0)
    # Include the (w, b) gradients in the global clipping norm.
    clip_scale_gradients: bool = False
    learnable_scale: bool = True
    initial_scale: tuple[float, float] = (10.0, -5.0)
    projection_grad_scale: float = Field(default=1.0, gt=0)

    max_steps: int | None = Field(default=None, ge=0)
    prefetch_capacity: int = Field(default=4, ge=1)
    log_interval: int = Field(default=10, ge=1)

    def steps_per_epoch(self, total_partials: int) -> int:
        """Explicit batches per epoch, else ⌈partials / (N·M)⌉."""
        if self.batches_per_epoch is not None:
            return self.batches_per_epoch
        return max(1, math.ceil(total_partials / self.batch.batch_size))


@dataclass(slots=True)
class PartialUtteranceCorpus:
    """Training partial utterances grouped by speaker."""

    utterances: dict[str, list[FeatureMatrix]]

    @property
    def speakers(self) -> list[str]:
        """Speaker ids in sorted order."""
        return sorted(self.utterances)

    @property
    def total_partials(self) -> int:
        """Number of partial utterances over all speakers."""
        return sum(len(items) for items in self.utterances.values())

    @property
    def feature_dim(self) -> int:
        """Mel bands of the stored features."""
        for items in self.utterances.values():
            if items:
                return items[0].num_bands
        return 0


@dataclass(frozen=True, slots=True)
class TrainBatch:
    """N·M equal-length segments, rows ordered speaker-major."""

    features: Array
    speaker_ids: tuple[str, ...]
    m_utterances: int
    sources: tuple[tuple[str, str, int, int], ...] = ()

    @property
    def frames(self) -> int:
        """Common segment length t."""
        return int(self.features.shape[1])

    @property
    def n_speakers(self) -> int:
        """N."""
        return len(self.speaker_ids)

    def speaker_rows(self, j: int) -> Array:
        """The M segments of the j-th speaker."""
        return self.features[j * self.m_utterances : (j + 1) * self.m_utterances]


@dataclass(slots=True)
class OptimizerState:
    """Adam moments for every named tensor (network and loss scale)."""

    first_moment: dict[str, Array]
    second_moment: dict[str, Array]
    step: int = 0
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_norm: float = 3.0

    @classmethod
    def initial(
        cls, params: NetworkParams, config: TrainConfig | None = None
    ) -> "OptimizerState":
        """Zero moments shaped like `params` plus the loss scale."""
        config = config or TrainConfig()
        shapes = {name: tensor.shape for name, tensor in params.items()}
        shapes[SCALE_W] = ()
        shapes[SCALE_B] = ()
        return cls(
            first_moment={name: np.zeros(shape) for name, shape in shapes.items()},
            second_moment={name: np.zeros(shape) for name, shape in shapes.items()},
            learning_rate=config.learning_rate,
            beta1=config.beta1,
            beta2=config.beta2,
            epsilon=config.epsilon,
            clip_norm=config.clip_norm,
        )


@dataclass(frozen=True, slots=True)
class StepMetrics:
    """One row of the metrics log."""

    step: int
    loss: float
    grad_norm: float
    w: float
    b: float
    t: int

    def as_row(self) -> tuple[int, float, float, float, float, int]:
        """Values in METRICS_HEADER order."""
        return (self.step, self.loss, self.grad_norm, self.w, self.b, self.t)


@dataclass(slots=True)
class TrainResult:
    """Final state of a training run."""

    params: NetworkParams
    scale: LossScale
    optimizer: OptimizerState
    metrics: list[StepMetrics] = field(default_factory=list)
    checkpoints: list[Path] = field(default_factory=list)
