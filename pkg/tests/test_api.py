import subprocess
import sys
from collections.abc import AsyncIterator
from pathlib import Path

import numpy as np
import pytest
from fastapi import FastAPI
from httpx import AsyncClient
from prometheus_client import REGISTRY
from starlette import status

from app.controller.errors.exception_mapper import status_code_for
from app.core.config import settings
from app.db.codecs.audio import encode_wav
from app.db.dependencies import get_optional_dvector_store
from app.db.exceptions import ElementNotFoundError, FormatError, NotLoadedError
from app.services.exceptions import (
    DegenerateCentroidError,
    NoSpeechError,
    SampleRateMismatchError,
    ShapeError,
    SilentInputError,
)
from app.services.synthesis.schema import DVectorSynthSpec
from app.services.synthesis.service import synthesize_dvector_store
from tests.signals import silence, tone, waveform

WAV = {"Content-Type": "audio/wav"}


def error_code(response_json: dict) -> str:
    return response_json["messages"][0]["code"]


@pytest.mark.anyio
async def test_health(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """
    Checks the health endpoint.

    :param client: client for the app.
    :param fastapi_app: current FastAPI application.
    """
    url = fastapi_app.url_path_for("health_check")
    response = await client.get(url)
    assert response.status_code == status.HTTP_200_OK


@pytest.mark.anyio
async def test_list_speakers_paginated(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """Pages of the eight enrolled speakers in id order."""
    url = fastapi_app.url_path_for("get_speakers")
    response = await client.get(url, params={"limit": 3, "offset": 3})
    assert response.status_code == status.HTTP_200_OK
    body = response.json()
    assert [s["speakerId"] for s in body["data"]] == ["spk-0003", "spk-0004", "spk-0005"]
    assert body["data"][0]["utterances"] == 30
    assert body["pagination"]["total_elements"] == 8
    assert body["pagination"]["total_pages"] == 3
    assert body["pagination"]["page_number"] == 2


@pytest.mark.anyio
async def test_list_speakers_filtered(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """speakerId filters by substring."""
    url = fastapi_app.url_path_for("get_speakers")
    response = await client.get(url, params={"speakerId": "0006"})
    body = response.json()
    assert [s["speakerId"] for s in body["data"]] == ["spk-0006"]
    assert body["pagination"]["total_elements"] == 1


@pytest.mark.anyio
async def test_list_speakers_rejects_bad_limit(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """Query parameters out of range are bad requests."""
    url = fastapi_app.url_path_for("get_speakers")
    response = await client.get(url, params={"limit": 0})
    assert response.status_code == status.HTTP_400_BAD_REQUEST


@pytest.mark.anyio
async def test_get_speaker(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """A speaker lists its utterances with their durations."""
    response = await client.get(fastapi_app.url_path_for("get_speaker", speaker_id="spk-0002"))
    assert response.status_code == status.HTTP_200_OK
    body = response.json()
    assert body["speakerId"] == "spk-0002"
    assert len(body["utterances"]) == 30
    assert body["utterances"][0]["utteranceId"] == "spk-0002-u000"


@pytest.mark.anyio
async def test_get_unknown_speaker(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """Unknown speakers are not found."""
    response = await client.get(fastapi_app.url_path_for("get_speaker", speaker_id="nobody"))
    assert response.status_code == status.HTTP_404_NOT_FOUND
    assert error_code(response.json()) == "NOT_FOUND"


@pytest.mark.anyio
async def test_score_genuine_and_impostor(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """The genuine trial is accepted and scores above the impostor trial."""
    url = fastapi_app.url_path_for("post_score")
    genuine = await client.post(
        url, json={"speakerId": "spk-0000", "testUtteranceId": "spk-0000-u000"}
    )
    impostor = await client.post(
        url, json={"speakerId": "spk-0001", "testUtteranceId": "spk-0000-u000"}
    )
    assert genuine.status_code == impostor.status_code == status.HTTP_200_OK
    assert genuine.json()["accepted"] is True
    assert genuine.json()["threshold"] == pytest.approx(settings.VERIFY_THRESHOLD)
    assert genuine.json()["score"] > impostor.json()["score"]


@pytest.mark.anyio
async def test_score_with_enrollment_ids(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """Enrolling the test utterance itself gives a perfect score."""
    response = await client.post(
        fastapi_app.url_path_for("post_score"),
        json={
            "speakerId": "spk-0004",
            "testUtteranceId": "spk-0004-u001",
            "enrollUtteranceIds": ["spk-0004-u001"],
        },
    )
    assert response.json()["score"] == pytest.approx(1.0)


@pytest.mark.anyio
@pytest.mark.parametrize(
    "body",
    [
        {"speakerId": "nobody", "testUtteranceId": "spk-0000-u000"},
        {"speakerId": "spk-0000", "testUtteranceId": "missing"},
        {"speakerId": "spk-0000", "testUtteranceId": "spk-0000-u000", "enrollUtteranceIds": ["x"]},
    ],
    ids=["speaker", "utterance", "enrollment"],
)
async def test_score_unknown_ids(client: AsyncClient, fastapi_app: FastAPI, body: dict) -> None:
    """Unknown speakers or utterances are not found."""
    response = await client.post(fastapi_app.url_path_for("post_score"), json=body)
    assert response.status_code == status.HTTP_404_NOT_FOUND


@pytest.mark.anyio
async def test_score_without_store(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """Nothing to score against until a store is loaded."""
    fastapi_app.state.dvector_store = None
    response = await client.post(
        fastapi_app.url_path_for("post_score"),
        json={"speakerId": "spk-0000", "testUtteranceId": "spk-0000-u000"},
    )
    assert response.status_code == status.HTTP_503_SERVICE_UNAVAILABLE
    assert error_code(response.json()) == "SERVICE_UNAVAILABLE"


@pytest.mark.anyio
async def test_embed_wav(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """A 3 s recording yields a d-vector of the network's dimension, a mean of unit vectors."""
    payload = encode_wav(waveform(tone(3.0)))
    response = await client.post(
        fastapi_app.url_path_for("post_embed"), content=payload, headers=WAV
    )
    assert response.status_code == status.HTTP_200_OK
    body = response.json()
    assert body["dimension"] == 6
    assert body["durationSeconds"] == pytest.approx(3.0)
    assert 0.0 < np.linalg.norm(body["dvector"]) <= 1.0 + 1e-9
    assert body["decision"] is None


@pytest.mark.anyio
async def test_embed_and_verify(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """With speakerId the upload is scored against that speaker."""
    fastapi_app.state.dvector_store = synthesize_dvector_store(
        DVectorSynthSpec(n_speakers=2, utterances_per_speaker=3, dim=6)
    )
    response = await client.post(
        fastapi_app.url_path_for("post_embed"),
        content=encode_wav(waveform(tone(3.0))),
        headers=WAV,
        params={"speakerId": "spk-0001"},
    )
    assert response.status_code == status.HTTP_200_OK
    decision = response.json()["decision"]
    assert -1.0 <= decision["score"] <= 1.0
    assert decision["accepted"] == (decision["score"] >= decision["threshold"])


@pytest.mark.anyio
async def test_embed_dimension_mismatch(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """An upload embedded in 6 dimensions cannot be scored against 32-dimensional speakers."""
    response = await client.post(
        fastapi_app.url_path_for("post_embed"),
        content=encode_wav(waveform(tone(3.0))),
        headers=WAV,
        params={"speakerId": "spk-0001"},
    )
    assert response.status_code == status.HTTP_422_UNPROCESSABLE_ENTITY


@pytest.mark.anyio
async def test_embed_wrong_content_type(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """Only WAV bodies are accepted."""
    response = await client.post(
        fastapi_app.url_path_for("post_embed"),
        content=b"hello",
        headers={"Content-Type": "text/plain"},
    )
    assert response.status_code == status.HTTP_415_UNSUPPORTED_MEDIA_TYPE


@pytest.mark.anyio
async def test_embed_not_audio(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """A WAV content type with bytes that are not audio is unsupported."""
    response = await client.post(
        fastapi_app.url_path_for("post_embed"), content=b"RIFF....garbage", headers=WAV
    )
    assert response.status_code == status.HTTP_415_UNSUPPORTED_MEDIA_TYPE


@pytest.mark.anyio
async def test_embed_too_large(
    client: AsyncClient, fastapi_app: FastAPI, monkeypatch: pytest.MonkeyPatch
) -> None:
    """Bodies above MAX_UPLOAD_BYTES are refused."""
    monkeypatch.setattr(settings, "MAX_UPLOAD_BYTES", 1024)
    response = await client.post(
        fastapi_app.url_path_for("post_embed"),
        content=encode_wav(waveform(tone(1.0))),
        headers=WAV,
    )
    assert response.status_code == status.HTTP_413_REQUEST_ENTITY_TOO_LARGE
    assert error_code(response.json()) == "PAYLOAD_TOO_LARGE"


@pytest.mark.anyio
async def test_embed_silence(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """A silent recording holds nothing to embed."""
    response = await client.post(
        fastapi_app.url_path_for("post_embed"),
        content=encode_wav(waveform(silence(3.0))),
        headers=WAV,
    )
    assert response.status_code == status.HTTP_422_UNPROCESSABLE_ENTITY


@pytest.mark.anyio
async def test_embed_without_checkpoint(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """Nothing to embed with until a checkpoint is loaded."""
    fastapi_app.state.checkpoint = None
    response = await client.post(
        fastapi_app.url_path_for("post_embed"),
        content=encode_wav(waveform(tone(3.0))),
        headers=WAV,
    )
    assert response.status_code == status.HTTP_503_SERVICE_UNAVAILABLE


@pytest.mark.anyio
async def test_embed_streamed_body_too_large(
    client: AsyncClient, fastapi_app: FastAPI, monkeypatch: pytest.MonkeyPatch
) -> None:
    """A chunked body without Content-Length is cut off once it passes the limit."""
    monkeypatch.setattr(settings, "MAX_UPLOAD_BYTES", 4096)
    payload = encode_wav(waveform(tone(1.0)))

    async def chunks() -> AsyncIterator[bytes]:
        for start in range(0, len(payload), 2048):
            yield payload[start : start + 2048]

    response = await client.post(
        fastapi_app.url_path_for("post_embed"), content=chunks(), headers=WAV
    )
    assert response.status_code == status.HTTP_413_REQUEST_ENTITY_TOO_LARGE


@pytest.mark.anyio
async def test_embed_uses_overridden_store(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """The store used for scoring uploads comes from the dependency, so overrides apply."""
    fastapi_app.state.dvector_store = None
    override = synthesize_dvector_store(
        DVectorSynthSpec(n_speakers=2, utterances_per_speaker=3, dim=6)
    )
    fastapi_app.dependency_overrides[get_optional_dvector_store] = lambda: override
    try:
        response = await client.post(
            fastapi_app.url_path_for("post_embed"),
            content=encode_wav(waveform(tone(3.0))),
            headers=WAV,
            params={"speakerId": "spk-0000"},
        )
    finally:
        fastapi_app.dependency_overrides.clear()
    assert response.status_code == status.HTTP_200_OK
    assert response.json()["decision"] is not None


@pytest.mark.anyio
async def test_embed_and_verify_without_store(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """Embedding works without a store; verifying against a speaker needs one."""
    fastapi_app.state.dvector_store = None
    url = fastapi_app.url_path_for("post_embed")
    payload = encode_wav(waveform(tone(3.0)))
    plain = await client.post(url, content=payload, headers=WAV)
    scored = await client.post(url, content=payload, headers=WAV, params={"speakerId": "spk-0000"})
    assert plain.status_code == status.HTTP_200_OK
    assert scored.status_code == status.HTTP_503_SERVICE_UNAVAILABLE


@pytest.mark.parametrize(
    ("error", "code"),
    [
        (ElementNotFoundError("x"), 404),
        (NotLoadedError("x"), 503),
        (FormatError("x"), 415),
        (SampleRateMismatchError("x"), 415),
        (ShapeError("x"), 422),
        (NoSpeechError("x"), 422),
        (DegenerateCentroidError("x"), 500),
    ],
)
def test_domain_errors_map_to_status_codes(error: Exception, code: int) -> None:
    """Domain errors raised by the services become these HTTP statuses."""
    assert status_code_for(error) == code


@pytest.mark.parametrize(
    "first",
    [
        "app.controller.api.router",
        "app.services.verification.mapper",
        "app.services.speakers.mapper",
        "app.controller.api.v1.verification.views",
    ],
)
def test_api_modules_import_in_a_fresh_interpreter(first: str) -> None:
    """Whichever module is imported first, the application can be built."""
    code = f"import {first}\nfrom app.core.application import get_app\nget_app()\n"
    result = subprocess.run(  # noqa: S603
        [sys.executable, "-c", code],
        cwd=Path(__file__).resolve().parent.parent,
        capture_output=True,
        text=True,
        check=False,
    )
    assert result.returncode == 0, result.stderr


@pytest.mark.anyio
async def test_ready_with_models(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """Loaded checkpoint and store are reported with their sizes."""
    response = await client.get(fastapi_app.url_path_for("readiness_check"))
    assert response.status_code == status.HTTP_200_OK
    body = response.json()
    assert body["ready"] is True
    assert body["embeddingDimension"] == 6
    assert body["speakers"] == 8
    assert body["utterances"] == 240


@pytest.mark.anyio
async def test_not_ready_without_checkpoint(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """Until the checkpoint is loaded the service is not ready."""
    fastapi_app.state.checkpoint = None
    response = await client.get(fastapi_app.url_path_for("readiness_check"))
    assert response.status_code == status.HTTP_503_SERVICE_UNAVAILABLE
    body = response.json()
    assert body["checkpointLoaded"] is False
    assert body["storeLoaded"] is True


@pytest.mark.anyio
async def test_score_counts_decisions(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """Every decision increments the prometheus counter of its outcome."""
    labels = {"endpoint": "score", "accepted": "true"}
    before = REGISTRY.get_sample_value("ge2e_verification_decisions_total", labels) or 0.0
    await client.post(
        fastapi_app.url_path_for("post_score"),
        json={"speakerId": "spk-0000", "testUtteranceId": "spk-0000-u000"},
    )
    after = REGISTRY.get_sample_value("ge2e_verification_decisions_total", labels)
    assert after == before + 1


@pytest.mark.anyio
async def test_error_body_names_the_domain_error(client: AsyncClient, fastapi_app: FastAPI) -> None:
    """In test environments the error body carries the exception name and its message."""
    response = await client.post(
        fastapi_app.url_path_for("post_embed"),
        content=encode_wav(waveform(silence(3.0))),
        headers=WAV,
    )
    message = response.json()["messages"][0]
    assert message["code"] == "UNPROCESSABLE_ENTITY"
    assert message["error_type"] == "ERROR"
    assert message["exception"] == SilentInputError.__name__
    assert message["description"]
