"""Standard error bodies per HTTP status code.

`ERROR_RESPONSES` maps a status code to the `ErrorMessage` returned for it; the
exception manager copies the entry before filling in request specific details.
"""

from app.controller.api.v1.errors.schema import ErrorMessage, ErrorMessageData, ErrorType

ERROR_RESPONSES = {
    400: ErrorMessage(
        messages=[
            ErrorMessageData(
                code="BAD_REQUEST",
                error_type=ErrorType.FATAL,
                message="Bad Request",
                description="The request parameters are malformed.",
            ),
        ],
    ),
    404: ErrorMessage(
        messages=[
            ErrorMessageData(
                code="NOT_FOUND",
                error_type=ErrorType.FATAL,
                message="Not Found",
                description="Speaker or utterance not found.",
            ),
        ],
    ),
    413: ErrorMessage(
        messages=[
            ErrorMessageData(
                code="PAYLOAD_TOO_LARGE",
                error_type=ErrorType.ERROR,
                message="Payload too large",
                description="The audio exceeds the upload size limit.",
            ),
        ],
    ),
    415: ErrorMessage(
        messages=[
            ErrorMessageData(
                code="UNSUPPORTED_MEDIA_TYPE",
                error_type=ErrorType.ERROR,
                message="Unsupported media type",
                description="The request body must be a mono WAV file.",
            ),
        ],
    ),
    422: ErrorMessage(
        messages=[
            ErrorMessageData(
                code="UNPROCESSABLE_ENTITY",
                error_type=ErrorType.ERROR,
                message="Unprocessable Entity",
                description="The input cannot be verified, for example it holds no speech.",
            ),
        ],
    ),
    500: ErrorMessage(
        messages=[
            ErrorMessageData(
                code="INTERNAL_SERVER_ERROR",
                error_type=ErrorType.FATAL,
                message="Internal Server Error",
                description="Unexpected error from the server.",
            ),
        ],
    ),
    503: ErrorMessage(
        messages=[
            ErrorMessageData(
                code="SERVICE_UNAVAILABLE",
                error_type=ErrorType.FATAL,
                message="Service Unavailable",
                description="The model or the d-vector store is not loaded.",
            ),
        ],
    ),
}
