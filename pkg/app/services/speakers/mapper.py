from app.controller.api.v1.speakers.schema import (
    SpeakerDataResponse,
    SpeakerDetailResponse,
    UtteranceDataResponse,
)
from app.db.dao.dvector_dao import SpeakerSummary
from app.db.models.dvector import DVector


def to_speaker_response(summary: SpeakerSummary) -> SpeakerDataResponse:
    """
    Convert a SpeakerSummary to its API representation.

    Args:
        summary (SpeakerSummary): Speaker read from the store.

    Returns:
        SpeakerDataResponse: The API response schema.
    """
    return SpeakerDataResponse(
        speakerId=summary.speaker_id,
        utterances=summary.utterances,
        totalDurationSeconds=summary.total_duration_seconds,
    )


def to_detail_response(speaker_id: str, records: list[DVector]) -> SpeakerDetailResponse:
    """Speaker with the ids and durations of its d-vectors."""
    return SpeakerDetailResponse(
        speakerId=speaker_id,
        utterances=[
            UtteranceDataResponse(utteranceId=r.utterance_id, durationSeconds=r.duration_seconds)
            for r in records
        ],
    )
