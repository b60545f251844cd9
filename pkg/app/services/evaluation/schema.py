from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.db.models.dvector import DVector
from app.services.exceptions import InsufficientUtterancesError, NoTrialsError, NumericalError

Array = NDArray[np.float64]

REPORT_HEADER = ("experiment", "subset", "m", "eer", "far", "frr", "threshold")
CURVE_HEADER = ("threshold", "far", "frr")


class WindowSpec(BaseModel):
    """Sliding window used to cut an utterance into network inputs."""

    model_config = ConfigDict(frozen=True)

    window_frames: int = Field(default=160, ge=1)
    step_frames: int = Field(default=80, ge=1)

    @model_validator(mode="after")
    def check_step(self) -> "WindowSpec":
        if self.step_frames > self.window_frames:
            msg = "step_frames must not exceed window_frames."
            raise ValueError(msg)
        return self


@dataclass(frozen=True, slots=True)
class SpeakerModel:
    """Enrollment centroid of a speaker."""

    centroid: Array
    enrolled_utterance_ids: tuple[str, ...]
    speaker_id: str = ""

    @classmethod
    def enroll(cls, dvectors: list[DVector]) -> "SpeakerModel":
        """Arithmetic mean of the enrollment d-vectors.

        Raises:
            InsufficientUtterancesError: If no d-vector is given.
        """
        if not dvectors:
            msg = "Enrollment needs at least one d-vector."
            raise InsufficientUtterancesError(msg)
        return cls(
            centroid=np.mean([d.vector for d in dvectors], axis=0),
            enrolled_utterance_ids=tuple(d.utterance_id for d in dvectors),
            speaker_id=dvectors[0].speaker_id,
        )


@dataclass(frozen=True, slots=True)
class TrialSet:
    """Scores of genuine (same speaker) and impostor trials."""

    genuine: Array
    impostor: Array

    def __post_init__(self) -> None:
        genuine = np.asarray(self.genuine, dtype=np.float64).ravel()
        impostor = np.asarray(self.impostor, dtype=np.float64).ravel()
        if not (np.all(np.isfinite(genuine)) and np.all(np.isfinite(impostor))):
            msg = "Trial scores contain non-finite values."
            raise NumericalError(msg)
        object.__setattr__(self, "genuine", genuine)
        object.__setattr__(self, "impostor", impostor)

    def check_non_empty(self) -> None:
        """Raise NoTrialsError when either list is empty."""
        if self.genuine.size == 0 or self.impostor.size == 0:
            msg = (
                f"Need genuine and impostor trials, got {self.genuine.size} genuine"
                f" and {self.impostor.size} impostor."
            )
            raise NoTrialsError(msg)


@dataclass(frozen=True, slots=True)
class ErrorRateCurve:
    """FAR and FRR over a threshold grid with the equal error rate."""

    thresholds: Array
    far: Array
    frr: Array
    eer: float
    eer_threshold: float


@dataclass(frozen=True, slots=True)
class IterationOutcome:
    """Result of one enrollment/verification draw."""

    eer: float
    threshold: float
    far: float
    frr: float


@dataclass(slots=True)
class ExperimentRow:
    """One line of an experiment report, averaged over iterations."""

    experiment: str
    subset: str
    m: int
    eer: float
    far: float
    frr: float
    threshold: float
    eers: list[float] = field(default_factory=list)

    @classmethod
    def from_outcomes(
        cls, experiment: str, subset: str, m: int, outcomes: list[IterationOutcome]
    ) -> "ExperimentRow":
        """Means of the per-iteration values."""
        return cls(
            experiment=experiment,
            subset=subset,
            m=m,
            eer=float(np.mean([o.eer for o in outcomes])),
            far=float(np.mean([o.far for o in outcomes])),
            frr=float(np.mean([o.frr for o in outcomes])),
            threshold=float(np.mean([o.threshold for o in outcomes])),
            eers=[o.eer for o in outcomes],
        )

    @property
    def std_error(self) -> float:
        """Standard error of the mean EER."""
        if len(self.eers) < 2:  # noqa: PLR2004
            return 0.0
        return float(np.std(self.eers, ddof=1) / np.sqrt(len(self.eers)))

    def as_row(self) -> tuple[str, str, int, float, float, float, float]:
        """Values in REPORT_HEADER order."""
        return (self.experiment, self.subset, self.m, self.eer, self.far, self.frr, self.threshold)
