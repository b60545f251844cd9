from typing import Annotated

from fastapi import Depends
from starlette.requests import Request

from app.db.codecs.checkpoints import Checkpoint
from app.db.exceptions import NotLoadedError
from app.db.models.dvector import DVectorStore


def get_optional_dvector_store(request: Request) -> DVectorStore | None:
    """
    D-vector store loaded by the lifespan, if any.

    :param request: current request.
    :return: the enrolled d-vectors or None.
    """
    return getattr(request.app.state, "dvector_store", None)


def require_dvector_store(store: DVectorStore | None) -> DVectorStore:
    """
    The store itself.

    :param store: store returned by `get_optional_dvector_store`.
    :raises NotLoadedError: if no store is configured.
    :return: the enrolled d-vectors.
    """
    if store is None:
        msg = "No d-vector store is loaded (set DVECTOR_STORE_PATH)."
        raise NotLoadedError(msg)
    return store


def get_dvector_store(
    store: Annotated[DVectorStore | None, Depends(get_optional_dvector_store)],
) -> DVectorStore:
    """
    D-vector store loaded by the lifespan.

    :param store: the optional store.
    :raises NotLoadedError: if no store is configured.
    :return: the enrolled d-vectors.
    """
    return require_dvector_store(store)


def get_optional_checkpoint(request: Request) -> Checkpoint | None:
    """
    Checkpoint loaded by the lifespan, if any.

    :param request: current request.
    :return: network parameters and loss scale, or None.
    """
    return getattr(request.app.state, "checkpoint", None)


def get_checkpoint(
    checkpoint: Annotated[Checkpoint | None, Depends(get_optional_checkpoint)],
) -> Checkpoint:
    """
    Checkpoint loaded by the lifespan.

    :param checkpoint: the optional checkpoint.
    :raises NotLoadedError: if no checkpoint is configured.
    :return: network parameters and loss scale.
    """
    if checkpoint is None:
        msg = "No checkpoint is loaded (set CHECKPOINT_PATH)."
        raise NotLoadedError(msg)
    return checkpoint
