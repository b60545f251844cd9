from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.services.frontend.schema import SAMPLE_RATE

# Shortest voiced stretch the generator emits; longer than the 180-frame minimum.
MIN_VOICED_SECONDS = 2.0
MAX_GAP_SECONDS = 0.5
MAX_EDGE_SECONDS = 0.2


class SynthSpec(BaseModel):
    """Synthetic speaker corpus: speakers of each split, utterances and their acoustics."""

    model_config = ConfigDict(frozen=True)

    n_speakers: int = Field(default=8, ge=0, description="Training speakers.")
    n_dev_speakers: int = Field(default=0, ge=0)
    n_test_speakers: int = Field(default=0, ge=0)
    utterances_per_speaker: int = Field(default=20, ge=1)
    duration_range: tuple[float, float] = (3.0, 6.0)
    noise_level: float = Field(default=0.05, ge=0)
    partials_range: tuple[int, int] = (3, 5)
    modulation_range: tuple[float, float] = (0.5, 4.0)
    modulation_depth: float = Field(default=0.3, ge=0, le=1)
    frequency_range: tuple[float, float] = (200.0, 3600.0)
    frequency_grid: int = Field(default=24, ge=5)
    sample_rate: int = Field(default=SAMPLE_RATE, gt=0)
    seed: int = 0

    @model_validator(mode="after")
    def check_ranges(self) -> "SynthSpec":
        low, high = self.duration_range
        if not MIN_VOICED_SECONDS + 2 * MAX_EDGE_SECONDS < low <= high:
            msg = (
                f"duration_range must satisfy {MIN_VOICED_SECONDS + 2 * MAX_EDGE_SECONDS}"
                f" < low <= high, got {self.duration_range}."
            )
            raise ValueError(msg)
        f_low, f_high = self.frequency_range
        if not 0 < f_low < f_high < self.sample_rate / 2:
            msg = f"frequency_range must lie below Nyquist, got {self.frequency_range}."
            raise ValueError(msg)
        p_low, p_high = self.partials_range
        if not 1 <= p_low <= p_high <= self.frequency_grid:
            msg = f"partials_range must lie within [1, frequency_grid], got {self.partials_range}."
            raise ValueError(msg)
        if self.n_speakers + self.n_dev_speakers + self.n_test_speakers == 0:
            msg = "The corpus needs at least one speaker."
            raise ValueError(msg)
        return self

    @property
    def total_speakers(self) -> int:
        """Speakers over all splits."""
        return self.n_speakers + self.n_dev_speakers + self.n_test_speakers


@dataclass(frozen=True, slots=True)
class SpeakerSignature:
    """Resonances and amplitude modulation that identify a synthetic speaker."""

    frequencies: NDArray[np.float64]
    modulation_rates: NDArray[np.float64]
    amplitudes: NDArray[np.float64]


class DVectorSynthSpec(BaseModel):
    """Synthetic d-vector store with controlled speaker separation."""

    model_config = ConfigDict(frozen=True)

    n_speakers: int = Field(default=8, ge=2)
    utterances_per_speaker: int = Field(default=30, ge=1)
    dim: int = Field(default=32, ge=2)
    # Expected norm of the per-utterance noise.
    spread: float = Field(default=0.5, ge=0)
    duration_range: tuple[float, float] = (1.0, 10.0)
    short_boundary: float = Field(default=4.0, gt=0)
    short_noise_scale: float = Field(default=1.0, gt=0)
    seed: int = 0

    @model_validator(mode="after")
    def check_durations(self) -> "DVectorSynthSpec":
        low, high = self.duration_range
        if not 0 < low <= high:
            msg = f"duration_range must satisfy 0 < low <= high, got {self.duration_range}."
            raise ValueError(msg)
        return self
