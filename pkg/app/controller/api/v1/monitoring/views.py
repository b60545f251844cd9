from typing import Annotated

from fastapi import APIRouter, Depends, status
from fastapi.responses import JSONResponse

from app.controller.api.v1.monitoring.schema import ReadinessResponse
from app.db.codecs.checkpoints import Checkpoint
from app.db.dependencies import get_optional_checkpoint, get_optional_dvector_store
from app.db.models.dvector import DVectorStore

router = APIRouter()


@router.get("/health")
def health_check() -> None:
    """Liveness: 200 while the process answers, whether or not the models are loaded."""


@router.get("/ready", response_model=ReadinessResponse)
def readiness_check(
    checkpoint: Annotated[Checkpoint | None, Depends(get_optional_checkpoint)],
    store: Annotated[DVectorStore | None, Depends(get_optional_dvector_store)],
) -> JSONResponse:
    """
    Reports which of the checkpoint and the d-vector store are loaded.

    Answers 503 until both are, so orchestrators hold traffic back.
    """
    response = ReadinessResponse(
        ready=checkpoint is not None and store is not None,
        checkpointLoaded=checkpoint is not None,
        embeddingDimension=checkpoint.config.embedding_dim if checkpoint is not None else None,
        storeLoaded=store is not None,
        speakers=len(store.speakers) if store is not None else 0,
        utterances=len(store) if store is not None else 0,
    )
    code = status.HTTP_200_OK if response.ready else status.HTTP_503_SERVICE_UNAVAILABLE
    return JSONResponse(content=response.model_dump(), status_code=code)
