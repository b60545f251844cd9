from typing import Annotated

from fastapi import APIRouter, Body, Depends, Header, Query, Request, status
from fastapi.responses import JSONResponse
from loguru import logger
from starlette.concurrency import run_in_threadpool

from app.controller.api.v1.errors.deps import compose_responses
from app.controller.api.v1.verification.metrics import UPLOAD_SECONDS, record_decision
from app.controller.api.v1.verification.schema import (
    DecisionResponse,
    EmbedResponse,
    ScoreRequest,
)
from app.controller.errors.exceptions import (
    HTTP413PayloadTooLargeError,
    HTTP415UnsupportedMediaTypeError,
)
from app.core.config import settings
from app.db.codecs.checkpoints import Checkpoint
from app.db.dependencies import (
    get_checkpoint,
    get_dvector_store,
    get_optional_dvector_store,
    require_dvector_store,
)
from app.db.models.dvector import DVectorStore
from app.services.verification.mapper import to_decision_response, to_embed_response
from app.services.verification.service import VerificationService

ROUT_TAGS = ["Verification"]
WAV_MEDIA_TYPES = ("audio/wav", "audio/x-wav", "audio/wave")

router = APIRouter()


def get_verification_service() -> VerificationService:
    """Verification service deciding with the configured threshold."""
    return VerificationService(threshold=settings.VERIFY_THRESHOLD)


ServiceDep = Annotated[VerificationService, Depends(get_verification_service)]


@router.post(
    "/score",
    responses=compose_responses({200: {"model": DecisionResponse, "description": "OK."}}),
    tags=ROUT_TAGS,
    summary="Verify a stored utterance against an enrolled speaker.",
    response_model=DecisionResponse,
)
def post_score(
    body: Annotated[ScoreRequest, Body()],
    store: Annotated[DVectorStore, Depends(get_dvector_store)],
    service: ServiceDep,
) -> JSONResponse:
    """
    Score the test utterance against the speaker model and apply the threshold.

    Unknown speakers or utterances answer 404.
    """
    decision = service.score_utterance(
        store, body.speakerId, body.testUtteranceId, body.enrollUtteranceIds
    )
    record_decision("score", decision)
    response = to_decision_response(decision)
    return JSONResponse(content=response.model_dump(), status_code=status.HTTP_200_OK)


async def read_upload(request: Request, limit: int) -> bytes:
    """
    Read the request body, refusing it as soon as it exceeds `limit` bytes.

    A declared Content-Length above the limit is refused before anything is read.

    Raises:
        HTTP413PayloadTooLargeError: If the body is larger than `limit`.
    """
    declared = request.headers.get("content-length")
    if declared is not None and declared.isdigit() and int(declared) > limit:
        msg = f"{declared} bytes exceed the limit of {limit}."
        raise HTTP413PayloadTooLargeError(msg)
    payload = bytearray()
    async for chunk in request.stream():
        payload.extend(chunk)
        if len(payload) > limit:
            msg = f"The body exceeds the limit of {limit} bytes."
            raise HTTP413PayloadTooLargeError(msg)
    return bytes(payload)


@router.post(
    "/embed",
    responses=compose_responses(
        {200: {"model": EmbedResponse, "description": "OK."}}, audio=True
    ),
    tags=ROUT_TAGS,
    summary="D-vector of a WAV recording, optionally verified against a speaker.",
    response_model=EmbedResponse,
    openapi_extra={
        "requestBody": {
            "required": True,
            "description": "Mono 16 kHz WAV.",
            "content": {"audio/wav": {"schema": {"type": "string", "format": "binary"}}},
        }
    },
)
async def post_embed(
    request: Request,
    checkpoint: Annotated[Checkpoint, Depends(get_checkpoint)],
    store: Annotated[DVectorStore | None, Depends(get_optional_dvector_store)],
    service: ServiceDep,
    content_type: Annotated[str | None, Header()] = None,
    speaker_id: Annotated[
        str | None, Query(alias="speakerId", description="Speaker to verify against.")
    ] = None,
) -> JSONResponse:
    """
    Preprocess the recording, embed it with the loaded checkpoint and score it.

    Raises:
        HTTP415UnsupportedMediaTypeError: If the body is not declared as WAV.
        HTTP413PayloadTooLargeError: If the body exceeds MAX_UPLOAD_BYTES.
    """
    media_type = (content_type or "").split(";", 1)[0].strip().lower()
    if media_type not in WAV_MEDIA_TYPES:
        raise HTTP415UnsupportedMediaTypeError(f"Expected audio/wav, got {media_type!r}.")
    audio = await read_upload(request, settings.MAX_UPLOAD_BYTES)

    dvector = await run_in_threadpool(service.embed_audio, checkpoint, audio)
    decision = None
    if speaker_id is not None:
        decision = service.score_dvector(require_dvector_store(store), speaker_id, dvector)
        record_decision("embed", decision)
    UPLOAD_SECONDS.observe(dvector.duration_seconds)
    logger.info(f"Embedded {dvector.duration_seconds:.2f} s of uploaded audio.")
    response = to_embed_response(dvector, decision)
    return JSONResponse(content=response.model_dump(), status_code=status.HTTP_200_OK)
