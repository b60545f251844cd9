"""Bodies of the error responses of the verification API."""

import enum

from pydantic import BaseModel, Field


class ErrorType(enum.StrEnum):
    """How a client should treat an error."""

    # The request cannot succeed as sent.
    FATAL = "FATAL"
    # The input was rejected; different audio or ids may succeed.
    ERROR = "ERROR"


class ErrorMessageData(BaseModel):
    """One problem with a request."""

    code: str = Field(min_length=1, max_length=50, examples=["UNSUPPORTED_MEDIA_TYPE"])
    error_type: ErrorType = Field(examples=[ErrorType.ERROR])
    message: str = Field(min_length=1, max_length=500, examples=["Unsupported media type"])
    description: str | None = Field(
        default=None,
        min_length=1,
        max_length=500,
        examples=["Expected 16000 Hz audio, got 8000 Hz."],
    )
    exception: str | None = Field(
        default=None,
        max_length=100,
        examples=["SampleRateMismatchError"],
        description="Name of the error behind the response (debug environments only).",
    )


class ErrorMessage(BaseModel):
    """Body of every error response."""

    messages: list[ErrorMessageData] | None = None
