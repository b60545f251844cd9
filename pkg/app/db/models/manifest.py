"""Corpus manifest entries."""

import enum
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field


class Split(str, enum.Enum):
    """Corpus partition an utterance belongs to."""

    TRAIN = "train"
    DEV = "dev"
    TEST = "test"


class ManifestEntry(BaseModel):
    """One utterance of the corpus."""

    model_config = ConfigDict(frozen=True)

    speaker_id: str = Field(..., min_length=1, examples=["spk-0001"])
    utterance_id: str = Field(..., min_length=1, examples=["spk-0001-0003"])
    path: Path = Field(..., examples=["spk-0001/spk-0001-0003.wav"])
    duration_seconds: float = Field(..., gt=0, examples=[4.2])
    split: Split = Field(..., examples=[Split.TRAIN])

    @property
    def key(self) -> tuple[str, str]:
        """(speaker_id, utterance_id)."""
        return self.speaker_id, self.utterance_id


class Manifest(BaseModel):
    """Ordered manifest entries with the directory their relative paths resolve against."""

    entries: list[ManifestEntry]
    root: Path = Path()

    def resolve(self, entry: ManifestEntry) -> Path:
        """Absolute location of an entry's file."""
        return entry.path if entry.path.is_absolute() else self.root / entry.path

    def split(self, split: Split) -> "Manifest":
        """Entries of one split only."""
        return Manifest(entries=[e for e in self.entries if e.split is split], root=self.root)

    def speakers(self, split: Split | None = None) -> list[str]:
        """Distinct speaker ids, sorted, optionally restricted to a split."""
        return sorted(
            {e.speaker_id for e in self.entries if split is None or e.split is split}
        )

    def __len__(self) -> int:
        return len(self.entries)
