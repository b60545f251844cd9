from typing import Annotated

from fastapi import APIRouter, Depends, Path, Query, Request, status
from fastapi.responses import JSONResponse
from loguru import logger

from app.controller.api.v1.errors.deps import compose_responses
from app.controller.api.v1.speakers.schema import SpeakerDetailResponse, SpeakerListResponse
from app.controller.errors.exceptions import HTTP404NotFoundError
from app.controller.utils.pagination import MAX_LIMIT, MAX_OFFSET, Pagination
from app.db.dependencies import get_dvector_store
from app.db.exceptions import ElementNotFoundError
from app.db.models.dvector import DVectorStore
from app.services.speakers.mapper import to_detail_response, to_speaker_response
from app.services.speakers.service import SpeakerService

ROUT_TAGS = ["Speakers"]

router = APIRouter()

StoreDep = Annotated[DVectorStore, Depends(get_dvector_store)]


@router.get(
    "/",
    responses=compose_responses({200: {"model": SpeakerListResponse, "description": "OK."}}),
    tags=ROUT_TAGS,
    summary="List of enrolled speakers.",
    response_model=SpeakerListResponse,
)
async def get_speakers(
    request: Request,
    store: StoreDep,
    speaker_id: Annotated[
        str | None, Query(alias="speakerId", description="Filter by speaker id substring.")
    ] = None,
    limit: Annotated[
        int, Query(description="Number of speakers returned per page.", ge=1, le=MAX_LIMIT)
    ] = 10,
    offset: Annotated[
        int, Query(description="Index of the first speaker of the page.", ge=0, le=MAX_OFFSET)
    ] = 0,
) -> JSONResponse:
    """
    Retrieve a paginated list of the speakers in the loaded d-vector store.

    Args:
        request: The current HTTP request.
        store: The loaded d-vector store.
        speaker_id: Optional; filter by speaker id.
        limit: Pagination size.
        offset: Pagination offset.

    Returns:
        JSONResponse: Speakers with pagination metadata.
    """
    speakers, total = SpeakerService.get_speakers(store, limit, offset, speaker_id)
    logger.debug(f"{len(speakers)} of {total} speakers returned.")
    pagination = Pagination.get_pagination(
        offset=offset, limit=limit, total_elements=total, url=str(request.url)
    )
    response = SpeakerListResponse(
        data=[to_speaker_response(s) for s in speakers], pagination=pagination
    )
    return JSONResponse(content=response.model_dump(), status_code=status.HTTP_200_OK)


@router.get(
    "/{speaker_id}",
    responses=compose_responses({200: {"model": SpeakerDetailResponse, "description": "OK."}}),
    tags=ROUT_TAGS,
    summary="Get the stored utterances of a speaker.",
    response_model=SpeakerDetailResponse,
)
async def get_speaker(
    speaker_id: Annotated[str, Path(description="Id of an enrolled speaker.")],
    store: StoreDep,
) -> JSONResponse:
    """
    Retrieve one speaker with the ids and durations of its d-vectors.

    Raises:
        HTTP404NotFoundError: If the speaker is not enrolled.
    """
    try:
        records = SpeakerService.get_speaker(store, speaker_id)
    except ElementNotFoundError as error:
        logger.error(f"Speaker with id={speaker_id} not found")
        raise HTTP404NotFoundError(error.message) from error
    response = to_detail_response(speaker_id, records)
    return JSONResponse(content=response.model_dump(), status_code=status.HTTP_200_OK)
