from app.db.dao.base import Filter
from app.db.dao.dvector_dao import SpeakerSummary, dvector_dao, speaker_dao
from app.db.models.dvector import DVector, DVectorStore


class SpeakerService:
    """Read access to the enrolled speakers."""

    @staticmethod
    def get_speakers(
        store: DVectorStore, limit: int, offset: int, speaker_id: str | None = None
    ) -> tuple[list[SpeakerSummary], int]:
        """A page of speakers, optionally filtered by a speaker id substring, and the total."""
        filters = []
        if speaker_id:
            filters.append(Filter(field="speaker_id", operator="contains", value=speaker_id))
        page = speaker_dao.get_list(store, offset, limit, filters, order_by="speaker_id")
        return page, speaker_dao.count(store, filters)

    @staticmethod
    def get_speaker(store: DVectorStore, speaker_id: str) -> list[DVector]:
        """D-vectors of one speaker.

        Raises:
            ElementNotFoundError: If the speaker is not enrolled.
        """
        return dvector_dao.get_speaker(store, speaker_id)
