from pydantic import BaseModel, Field


class ScoreRequest(BaseModel):
    """Verify a stored utterance against a speaker.

    Without `enrollUtteranceIds` the speaker model is the centroid of all of the
    speaker's d-vectors except the test utterance.
    """

    speakerId: str = Field(..., min_length=1, examples=["spk-0003"])
    testUtteranceId: str = Field(..., min_length=1, examples=["utt-0007"])
    enrollUtteranceIds: list[str] | None = Field(
        default=None, min_length=1, examples=[["utt-0001", "utt-0002"]]
    )


class DecisionResponse(BaseModel):
    """Cosine score, threshold and decision of one trial."""

    score: float = Field(..., ge=-1, le=1, examples=[0.71])
    threshold: float = Field(..., examples=[0.42])
    accepted: bool = Field(..., examples=[True])


class EmbedResponse(BaseModel):
    """D-vector of an uploaded recording and, when a speaker is given, the decision."""

    dimension: int = Field(..., ge=1, examples=[256])
    durationSeconds: float = Field(..., gt=0, examples=[4.8])
    dvector: list[float] = Field(...)
    decision: DecisionResponse | None = Field(default=None)
