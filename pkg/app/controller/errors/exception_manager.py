"""This module provides utilities for managing exceptions in a FastAPI application.

It provides functions for logging exceptions and managing responses to exceptions.

Functions:
    manage_api_exceptions(app: FastAPI) -> None:
        Add Exception listeners so raising errors is easier.
"""

import contextlib
import traceback
from typing import TYPE_CHECKING

from fastapi import FastAPI, Request, status
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from loguru import logger

from app.controller.errors import exceptions
from app.controller.errors.error_responses import ERROR_RESPONSES
from app.controller.errors.exception_mapper import status_code_for
from app.core.config import settings
from app.db.exceptions import BaseExceptionError as PersistenceError
from app.services.exceptions import BaseExceptionError as ServiceError

if TYPE_CHECKING:
    from app.controller.api.v1.errors.schema import ErrorMessage


def _log_exception(request: Request, exc: Exception) -> None:
    exc_str = None
    try:
        exc_str = f"{exc}".replace("\n", " ").replace("   ", " ")
    except Exception:
        exc_str = traceback.format_exc().replace("\n", " ").replace("   ", " ")
    logger.error(f"{request.method} {request.url.path}: {exc_str}")


def _manage_exception(request: Request, exc: Exception, code: int) -> JSONResponse:
    """Manage exceptions.

    Args:
        request (Request): Request object
        exc (Exception): Exception
        code (int): HTTP status code

    Returns:
        JSONResponse: Exception response
    """
    _log_exception(request, exc)
    template: ErrorMessage | None = ERROR_RESPONSES.get(code)
    if not template:
        return JSONResponse(status_code=code, content=None)

    error = template.model_copy(deep=True)
    if settings.ENVIRONMENT in ["pytest", "local", "debug"]:
        with contextlib.suppress(TypeError, ValueError):
            if error.messages:
                error.messages[0].description = str(exc)[:500] or None
                error.messages[0].exception = type(exc).__name__
    return JSONResponse(status_code=code, content=error.model_dump(mode="json"))


def manage_api_exceptions(app: FastAPI) -> None:
    """Add Exception listeners so raising errors is easier.

    Args:
        app (FastAPI): FastAPI application
    """

    @app.exception_handler(RequestValidationError)
    async def bad_request_handler(request: Request, exc: Exception) -> JSONResponse:
        return _manage_exception(request, exc, status.HTTP_400_BAD_REQUEST)

    @app.exception_handler(exceptions.HTTP404NotFoundError)
    async def not_found_handler(request: Request, exc: Exception) -> JSONResponse:
        return _manage_exception(request, exc, status.HTTP_404_NOT_FOUND)

    @app.exception_handler(exceptions.HTTP413PayloadTooLargeError)
    async def payload_too_large_handler(request: Request, exc: Exception) -> JSONResponse:
        return _manage_exception(request, exc, status.HTTP_413_REQUEST_ENTITY_TOO_LARGE)

    @app.exception_handler(exceptions.HTTP415UnsupportedMediaTypeError)
    async def unsupported_media_type_handler(request: Request, exc: Exception) -> JSONResponse:
        return _manage_exception(request, exc, status.HTTP_415_UNSUPPORTED_MEDIA_TYPE)

    @app.exception_handler(ServiceError)
    @app.exception_handler(PersistenceError)
    async def domain_error_handler(request: Request, exc: Exception) -> JSONResponse:
        return _manage_exception(request, exc, status_code_for(exc))
