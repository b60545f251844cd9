from pydantic import BaseModel, Field

from app.controller.utils.pagination import Pagination


class SpeakerDataResponse(BaseModel):
    """Enrolled speaker with the amount of stored speech."""

    speakerId: str = Field(..., examples=["spk-0003"])
    utterances: int = Field(..., ge=0, examples=[42])
    totalDurationSeconds: float = Field(..., ge=0, examples=[311.5])


class SpeakerListResponse(BaseModel):
    """A page of enrolled speakers."""

    data: list[SpeakerDataResponse] = Field(default=[])
    pagination: Pagination | None = Field(default=None)


class UtteranceDataResponse(BaseModel):
    """One stored d-vector of a speaker."""

    utteranceId: str = Field(..., examples=["utt-0007"])
    durationSeconds: float = Field(..., gt=0, examples=[5.2])


class SpeakerDetailResponse(BaseModel):
    """A speaker with its stored utterances."""

    speakerId: str = Field(..., examples=["spk-0003"])
    utterances: list[UtteranceDataResponse] = Field(default=[])
