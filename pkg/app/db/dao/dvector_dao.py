from collections.abc import Sequence

from pydantic import BaseModel

from app.db.dao.base import DAOBase
from app.db.exceptions import ElementNotFoundError
from app.db.models.dvector import DVector, DVectorStore


class SpeakerSummary(BaseModel):
    """Enrolled speaker with the amount of speech stored for it."""

    speaker_id: str
    utterances: int
    total_duration_seconds: float


class SpeakerDAO(DAOBase[SpeakerSummary]):
    """Read operations on the speakers of a d-vector store."""

    def _items(self, source: DVectorStore) -> Sequence[SpeakerSummary]:
        return [
            SpeakerSummary(
                speaker_id=speaker,
                utterances=len(records),
                total_duration_seconds=sum(r.duration_seconds for r in records),
            )
            for speaker, records in source.by_speaker().items()
        ]

    def _key(self, item: SpeakerSummary) -> str:
        return item.speaker_id


class DVectorDAO(DAOBase[DVector]):
    """Read operations on the d-vectors of a store."""

    def _items(self, source: DVectorStore) -> Sequence[DVector]:
        return source.records

    def _key(self, item: DVector) -> str:
        return f"{item.speaker_id}/{item.utterance_id}"

    def get_utterance(self, source: DVectorStore, speaker_id: str, utterance_id: str) -> DVector:
        """D-vector of one utterance of a speaker."""
        return self.get_by_id(source, f"{speaker_id}/{utterance_id}")

    def get_speaker(self, source: DVectorStore, speaker_id: str) -> list[DVector]:
        """All d-vectors of a speaker.

        Raises:
            ElementNotFoundError: If the speaker has no d-vector.
        """
        records = [r for r in source.records if r.speaker_id == speaker_id]
        if not records:
            msg = f"Speaker with ID: {speaker_id} not found."
            raise ElementNotFoundError(msg)
        return records


speaker_dao = SpeakerDAO("Speaker")
dvector_dao = DVectorDAO("DVector")
