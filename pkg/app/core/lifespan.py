from collections.abc import AsyncGenerator
from contextlib import asynccontextmanager

from fastapi import FastAPI
from loguru import logger
from prometheus_fastapi_instrumentator.instrumentation import (
    PrometheusFastApiInstrumentator,
)

from app.core.config import settings
from app.db.codecs.checkpoints import read_checkpoint
from app.db.codecs.dvectors import read_store


def load_models(app: FastAPI) -> None:
    """
    Loads the checkpoint and the d-vector store named in the settings.

    Missing settings leave the state empty; the endpoints that need them answer 503.

    :param app: fastAPI application.
    """
    app.state.checkpoint = None
    app.state.dvector_store = None
    if settings.CHECKPOINT_PATH is not None:
        app.state.checkpoint = read_checkpoint(settings.CHECKPOINT_PATH)
        logger.info(f"Checkpoint {settings.CHECKPOINT_PATH} loaded.")
    if settings.DVECTOR_STORE_PATH is not None:
        app.state.dvector_store = read_store(settings.DVECTOR_STORE_PATH)
        logger.info(
            f"D-vector store {settings.DVECTOR_STORE_PATH} loaded:"
            f" {len(app.state.dvector_store)} utterances."
        )


def setup_prometheus(app: FastAPI) -> None:  # pragma: no cover
    """
    Enables prometheus integration.

    :param app: current application.
    """
    PrometheusFastApiInstrumentator(should_group_status_codes=False).instrument(
        app,
    ).expose(app, should_gzip=True, name="prometheus_metrics")


@asynccontextmanager
async def lifespan_setup(
    app: FastAPI,
) -> AsyncGenerator[None]:  # pragma: no cover
    """
    Actions to run on application startup.

    This function uses fastAPI app to store data
    in the state, such as the loaded checkpoint.

    :param app: the fastAPI application.
    :return: function that actually performs actions.
    """
    app.middleware_stack = None
    load_models(app)
    setup_prometheus(app)
    app.middleware_stack = app.build_middleware_stack()
    logger.info(f"Verification threshold {settings.VERIFY_THRESHOLD}.")

    yield
