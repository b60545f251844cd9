from collections.abc import AsyncGenerator
from pathlib import Path

import pytest
from fastapi import FastAPI
from httpx import ASGITransport, AsyncClient

from app.core.application import get_app
from app.db.codecs.checkpoints import Checkpoint
from app.db.models.dvector import DVectorStore
from app.db.models.manifest import Manifest
from app.services.loss.schema import LossScale
from app.services.network.lstm import init_params
from app.services.network.schema import NetConfig
from app.services.synthesis.schema import DVectorSynthSpec, SynthSpec
from app.services.synthesis.service import generate_synthetic_corpus, synthesize_dvector_store

TINY_NET = NetConfig(input_dim=40, hidden_dim=8, num_layers=1, embedding_dim=6)


@pytest.fixture(scope="session")
def anyio_backend() -> str:
    """
    Backend for anyio pytest plugin.

    :return: backend name.
    """
    return "asyncio"


@pytest.fixture(scope="session")
def tiny_checkpoint() -> Checkpoint:
    """
    Small randomly initialised network taking 40 mel bands.

    :return: checkpoint with the default loss scale.
    """
    return Checkpoint(init_params(TINY_NET, seed=3), LossScale())


@pytest.fixture(scope="session")
def separable_store() -> DVectorStore:
    """
    D-vectors of 8 well separated speakers, 30 utterances each.

    :return: d-vector store.
    """
    return synthesize_dvector_store(DVectorSynthSpec(spread=0.2, seed=11))


@pytest.fixture(scope="session")
def synthetic_corpus(tmp_path_factory: pytest.TempPathFactory) -> Manifest:
    """
    Small synthetic WAV corpus: 4 training and 2 test speakers, 3 utterances each.

    :param tmp_path_factory: session temporary directories.
    :return: manifest of the written corpus.
    """
    spec = SynthSpec(
        n_speakers=4,
        n_test_speakers=2,
        utterances_per_speaker=3,
        duration_range=(3.0, 4.0),
        seed=5,
    )
    return generate_synthetic_corpus(spec, tmp_path_factory.mktemp("corpus"))


@pytest.fixture
def manifest_path(synthetic_corpus: Manifest) -> Path:
    """
    Location of the synthetic corpus manifest.

    :param synthetic_corpus: the corpus.
    :return: path of manifest.tsv.
    """
    return synthetic_corpus.root / "manifest.tsv"


@pytest.fixture
def fastapi_app(tiny_checkpoint: Checkpoint, separable_store: DVectorStore) -> FastAPI:
    """
    Fixture for creating FastAPI app.

    The lifespan does not run under the test transport, so the loaded
    checkpoint and store are put on the state directly.

    :param tiny_checkpoint: network used by the embed endpoint.
    :param separable_store: enrolled speakers.
    :return: fastapi app with loaded models.
    """
    application = get_app()
    application.state.checkpoint = tiny_checkpoint
    application.state.dvector_store = separable_store
    return application


@pytest.fixture
async def client(
    fastapi_app: FastAPI,
) -> AsyncGenerator[AsyncClient]:
    """
    Fixture that creates client for requesting server.

    :param fastapi_app: the application.
    :yield: client for the app.
    """
    transport = ASGITransport(app=fastapi_app)
    async with AsyncClient(transport=transport, base_url="http://test", timeout=10.0) as ac:
        yield ac
