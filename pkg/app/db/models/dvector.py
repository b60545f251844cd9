"""Utterance d-vectors and the store that groups them by speaker."""

from collections.abc import Iterator
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from app.services.exceptions import InvalidInputError, NumericalError, ShapeError


@dataclass(frozen=True, slots=True)
class DVector:
    """Utterance-level embedding with its provenance."""

    vector: NDArray[np.float64]
    speaker_id: str
    utterance_id: str
    duration_seconds: float

    def __post_init__(self) -> None:
        vector = np.asarray(self.vector, dtype=np.float64)
        if vector.ndim != 1 or vector.size == 0:
            msg = f"A d-vector must be a non-empty 1-D array, got shape {vector.shape}."
            raise ShapeError(msg)
        if not np.all(np.isfinite(vector)):
            msg = f"D-vector {self.key} contains non-finite values."
            raise NumericalError(msg)
        if not self.duration_seconds > 0:
            msg = f"D-vector {self.key} has non-positive duration {self.duration_seconds}."
            raise InvalidInputError(msg)
        object.__setattr__(self, "vector", vector)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DVector):
            return NotImplemented
        return self.key == other.key and self.duration_seconds == other.duration_seconds and (
            np.array_equal(self.vector, other.vector)
        )

    @property
    def key(self) -> tuple[str, str]:
        """(speaker_id, utterance_id)."""
        return self.speaker_id, self.utterance_id

    @property
    def dim(self) -> int:
        """Embedding dimension."""
        return int(self.vector.shape[0])


@dataclass(slots=True)
class DVectorStore:
    """All d-vectors of a corpus split, in insertion order."""

    dim: int
    records: list[DVector] = field(default_factory=list)
    _keys: set[tuple[str, str]] = field(default_factory=set, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.dim <= 0:
            msg = f"Store dimension must be positive, got {self.dim}."
            raise ShapeError(msg)
        for record in self.records:
            self._check(record)
            self._keys.add(record.key)

    def _check(self, record: DVector) -> None:
        if record.dim != self.dim:
            msg = f"D-vector {record.key} has dimension {record.dim}, store holds {self.dim}."
            raise ShapeError(msg)
        if record.key in self._keys:
            msg = f"D-vector {record.key} is already stored."
            raise InvalidInputError(msg)

    def add(self, record: DVector) -> None:
        """Append one record, keeping ids unique."""
        self._check(record)
        self._keys.add(record.key)
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[DVector]:
        return iter(self.records)

    @property
    def speakers(self) -> list[str]:
        """Distinct speaker ids, sorted."""
        return sorted({record.speaker_id for record in self.records})

    def by_speaker(self) -> dict[str, list[DVector]]:
        """Records grouped by speaker id in sorted speaker order, insertion order within."""
        groups: dict[str, list[DVector]] = {speaker: [] for speaker in self.speakers}
        for record in self.records:
            groups[record.speaker_id].append(record)
        return groups

    def matrix(self) -> NDArray[np.float64]:
        """(count, dim) array of all vectors."""
        if not self.records:
            return np.empty((0, self.dim))
        return np.stack([record.vector for record in self.records])
