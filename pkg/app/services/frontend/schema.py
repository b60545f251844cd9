"""Types flowing through the audio frontend."""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.services.exceptions import InvalidInputError, NumericalError, ShapeError

SAMPLE_RATE = 16_000
TARGET_RMS = 0.1
LOG_FLOOR = 1e-6
# Partial utterances must be strictly longer than this many frames.
MIN_PARTIAL_FRAMES = 180


class VadConfig(BaseModel):
    """Frame-energy voice activity detection parameters (seconds and decibels)."""

    model_config = ConfigDict(frozen=True)

    max_silence_length: float = Field(default=0.006, gt=0)
    window_length: float = Field(default=0.030, gt=0)
    prune_threshold_db: float = Field(default=30.0, gt=0)
    reference_percentile: float = Field(default=95.0, gt=0, le=100)

    @model_validator(mode="after")
    def check_window_longer_than_silence(self) -> "VadConfig":
        if self.window_length <= self.max_silence_length:
            msg = "window_length must be longer than max_silence_length."
            raise ValueError(msg)
        return self


class FrameSpec(BaseModel):
    """STFT framing and mel projection parameters."""

    model_config = ConfigDict(frozen=True)

    frame_width: float = Field(default=0.025, gt=0)
    frame_step: float = Field(default=0.010, gt=0)
    n_mels: int = Field(default=40, ge=1)
    fft_size: int = Field(default=512, ge=1)
    sample_rate: int = Field(default=SAMPLE_RATE, gt=0)

    @model_validator(mode="after")
    def check_framing(self) -> "FrameSpec":
        if self.frame_step > self.frame_width:
            msg = "frame_step must not exceed frame_width."
            raise ValueError(msg)
        if self.fft_size & (self.fft_size - 1):
            msg = f"fft_size must be a power of two, got {self.fft_size}."
            raise ValueError(msg)
        if self.fft_size < self.frame_samples:
            msg = f"fft_size {self.fft_size} is shorter than a frame ({self.frame_samples})."
            raise ValueError(msg)
        return self

    @property
    def frame_samples(self) -> int:
        """Samples per analysis frame."""
        return round(self.frame_width * self.sample_rate)

    @property
    def step_samples(self) -> int:
        """Samples between consecutive frame starts."""
        return max(1, round(self.frame_step * self.sample_rate))


class SourceId(NamedTuple):
    """Where a feature matrix comes from."""

    speaker_id: str = ""
    utterance_id: str = ""
    segment: int = 0


@dataclass(frozen=True, slots=True)
class Waveform:
    """Mono audio with its sample rate."""

    samples: NDArray[np.float64]
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            msg = f"Waveform must be mono (1-D), got shape {samples.shape}."
            raise ShapeError(msg)
        if self.sample_rate <= 0:
            msg = f"Sample rate must be positive, got {self.sample_rate}."
            raise InvalidInputError(msg)
        if not np.all(np.isfinite(samples)):
            msg = "Waveform contains non-finite samples."
            raise NumericalError(msg)
        if samples.size and float(np.max(np.abs(samples))) > 1.0:
            peak = float(np.max(np.abs(samples)))
            msg = f"Waveform amplitudes must lie in [-1, 1], got a peak of {peak:.4g}."
            raise InvalidInputError(msg)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration_seconds(self) -> float:
        """Length in seconds."""
        return len(self) / self.sample_rate


@dataclass(frozen=True, slots=True)
class FeatureMatrix:
    """Frames × mel-bands log energies."""

    data: NDArray[np.float64]
    source_id: SourceId = SourceId()

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:  # noqa: PLR2004
            msg = f"Feature matrix must be 2-D with at least one frame, got {data.shape}."
            raise ShapeError(msg)
        if not np.all(np.isfinite(data)):
            msg = f"Feature matrix {self.source_id} contains non-finite values."
            raise NumericalError(msg)
        object.__setattr__(self, "data", data)

    @property
    def num_frames(self) -> int:
        """Row count T."""
        return int(self.data.shape[0])

    @property
    def num_bands(self) -> int:
        """Column count (n_mels)."""
        return int(self.data.shape[1])


@dataclass(frozen=True, slots=True)
class PartialUtterance:
    """One voiced segment of a training utterance."""

    features: FeatureMatrix

    @property
    def min_frames_satisfied(self) -> bool:
        """Whether the segment is long enough for training batches."""
        return self.features.num_frames > MIN_PARTIAL_FRAMES
