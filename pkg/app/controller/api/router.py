from fastapi.routing import APIRouter

from app.controller.api.v1.monitoring import views as monitoring
from app.controller.api.v1.speakers import views as speakers
from app.controller.api.v1.verification import views as verification

api_router = APIRouter()
api_router.include_router(monitoring.router)
api_router.include_router(speakers.router, prefix="/v1/speakers", tags=["speakers"])
api_router.include_router(
    verification.router, prefix="/v1/verification", tags=["verification"]
)
