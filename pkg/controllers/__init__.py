from fastapi import APIRouter

from .prediction import router as predictions_router


api_router = APIRouter()

api_router.include_router(predictions_router)
