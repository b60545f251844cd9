import logging

import sentry_sdk
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.middleware.trustedhost import TrustedHostMiddleware
from fastapi.responses import ORJSONResponse
from sentry_sdk.integrations.fastapi import FastApiIntegration
from sentry_sdk.integrations.logging import LoggingIntegration

from app.controller.api.router import api_router
from app.controller.errors.exception_manager import manage_api_exceptions
from app.core.config import settings
from app.core.lifespan import lifespan_setup
from app.core.logger import configure_logging


def init_sentry() -> None:
    """Report errors to Sentry, tagged with the served checkpoint and store."""
    if not settings.SENTRY_DSN or settings.ENVIRONMENT == "local":
        return
    sentry_sdk.init(
        dsn=settings.SENTRY_DSN,
        send_client_reports=settings.SENTRY_ALLOW_BEACON_REPORTS,
        traces_sample_rate=settings.SENTRY_TRACES_SAMPLE_RATE,
        profiles_sample_rate=settings.SENTRY_PROFILES_SAMPLE_RATE,
        environment=settings.ENVIRONMENT,
        release=settings.APP_VERSION,
        integrations=[
            FastApiIntegration(transaction_style="endpoint"),
            LoggingIntegration(
                level=logging.getLevelName(settings.LOG_LEVEL.value),
                event_level=logging.ERROR,
            ),
        ],
    )
    sentry_sdk.set_tag("checkpoint", str(settings.CHECKPOINT_PATH))
    sentry_sdk.set_tag("dvector_store", str(settings.DVECTOR_STORE_PATH))


def get_app() -> FastAPI:
    """
    Build the verification API.

    The checkpoint and the d-vector store are loaded by the lifespan; until then
    (and when they are not configured) `app.state` holds None for both.

    :return: application.
    """
    configure_logging()
    init_sentry()
    app = FastAPI(
        title=settings.PROJECT_NAME,
        version=settings.API_VERSION,
        description=settings.PROJECT_DESCRIPTION,
        contact={
            "name": settings.CONTACT_NAME,
            "email": settings.CONTACT_EMAIL,
        },
        lifespan=lifespan_setup,
        docs_url=f"{settings.API_BASE_PATH}/docs",
        redoc_url=f"{settings.API_BASE_PATH}/redoc",
        openapi_url=f"{settings.API_BASE_PATH}/openapi.json",
        default_response_class=ORJSONResponse,
    )
    app.state.checkpoint = None
    app.state.dvector_store = None

    app.add_middleware(
        CORSMiddleware,
        allow_origins=[str(origin) for origin in settings.CORS_ORIGINS],
        allow_credentials=True,
        allow_methods=["GET", "POST"],
        allow_headers=["X-Requested-With", "X-Request-ID", "Content-Type", "Content-Length"],
        expose_headers=["X-Request-ID"],
    )
    app.add_middleware(TrustedHostMiddleware, allowed_hosts=settings.ALLOWED_HOSTS)

    app.include_router(router=api_router, prefix=settings.API_BASE_PATH)
    manage_api_exceptions(app=app)

    return app
