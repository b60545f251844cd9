import os
import shutil
from pathlib import Path

import uvicorn

from app.core.config import settings


def set_multiproc_dir() -> None:
    """Empty and recreate PROMETHEUS_MULTIPROC_DIR so uvicorn workers share metrics.

    Both spellings of the variable are exported; prometheus-client versions read
    different ones.
    """
    shutil.rmtree(settings.PROMETHEUS_MULTIPROC_DIR, ignore_errors=True)
    Path(settings.PROMETHEUS_MULTIPROC_DIR).mkdir(parents=True)
    os.environ["prometheus_multiproc_dir"] = str(  # noqa: SIM112
        settings.PROMETHEUS_MULTIPROC_DIR.expanduser().absolute(),
    )
    os.environ["PROMETHEUS_MULTIPROC_DIR"] = str(
        settings.PROMETHEUS_MULTIPROC_DIR.expanduser().absolute(),
    )


def run_server(
    host: str | None = None,
    port: int | None = None,
    workers: int | None = None,
) -> None:
    """Serve the verification API with uvicorn; unset arguments come from the settings."""
    set_multiproc_dir()
    uvicorn.run(
        "app.core.application:get_app",
        workers=workers or settings.UVICORN_WORKERS_COUNT,
        host=host or settings.UVICORN_HOST,
        port=port or settings.UVICORN_PORT,
        reload=settings.UVICORN_RELOAD,
        log_level=settings.LOG_LEVEL.value.lower(),
        factory=True,
    )
