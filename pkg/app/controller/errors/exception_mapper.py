"""Maps domain exceptions to HTTP status codes.

Order matters: the first matching class wins, so subclasses come first.
"""

from app.db.exceptions import ElementNotFoundError, FormatError, NotLoadedError
from app.services.exceptions import InvalidInputError, NumericalError, SampleRateMismatchError

EXCEPTION_MAPPER: tuple[tuple[type[Exception], int], ...] = (
    (ElementNotFoundError, 404),
    (NotLoadedError, 503),
    (FormatError, 415),
    (SampleRateMismatchError, 415),
    (InvalidInputError, 422),
    (NumericalError, 500),
)


def status_code_for(error: Exception) -> int:
    """HTTP status of a domain exception; 500 when it is not mapped."""
    for error_type, code in EXCEPTION_MAPPER:
        if isinstance(error, error_type):
            return code
    return 500
