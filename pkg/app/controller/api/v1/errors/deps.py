"""Reusable error response schema definitions for API routes."""

from app.controller.api.v1.errors.schema import ErrorMessage

#: Common HTTP error responses mapped to their OpenAPI schema representation.
CommonBadResponses = {
    400: {"model": ErrorMessage, "description": "Bad Request."},
    404: {"model": ErrorMessage, "description": "Not Found."},
    422: {"model": ErrorMessage, "description": "Unprocessable Entity."},
    500: {"model": ErrorMessage, "description": "Internal Server Error."},
    503: {"model": ErrorMessage, "description": "Service Unavailable."},
}

#: Extra responses of endpoints receiving audio.
AudioBadResponses = {
    413: {"model": ErrorMessage, "description": "Payload Too Large."},
    415: {"model": ErrorMessage, "description": "Unsupported Media Type."},
}


def compose_responses(success_responses: dict, *, audio: bool = False) -> dict:
    """
    Compose a dictionary of success and standardized error responses.

    Example:
        compose_responses({200: {"model": SpeakerListResponse, "description": "OK."}})

    Args:
        success_responses (dict): Response models for successful status codes (e.g., 200).
        audio (bool): Add the responses of endpoints that receive a WAV body.

    Returns:
        dict: Merged mapping of success and standard error response schemas.
    """
    extra = AudioBadResponses if audio else {}
    return {**success_responses, **CommonBadResponses, **extra}
