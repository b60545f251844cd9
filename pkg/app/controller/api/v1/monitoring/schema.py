from pydantic import BaseModel, Field


class ReadinessResponse(BaseModel):
    """What the service can answer right now."""

    ready: bool = Field(..., description="Both the checkpoint and the store are loaded.")
    checkpointLoaded: bool
    embeddingDimension: int | None = Field(default=None, examples=[256])
    storeLoaded: bool
    speakers: int = Field(default=0, ge=0)
    utterances: int = Field(default=0, ge=0)
