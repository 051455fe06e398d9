from fastapi import APIRouter, Depends

from core.prediction import PredictionService
from schemas.prediction import ModelSummary, Prediction, TicketIn


router = APIRouter(
    prefix="/predictions",
    tags=["Predictions"],
    responses={404: {"description": "No model checkpoint is loaded"}},
)


@router.post("/", response_model=Prediction)
def create_prediction_route(
    ticket: TicketIn,
    prediction_service: PredictionService = Depends(PredictionService)
) -> Prediction:
    return prediction_service.predict(ticket)


@router.get("/model", response_model=ModelSummary)
def read_model_route(
    prediction_service: PredictionService = Depends(PredictionService)
) -> ModelSummary:
    return prediction_service.summary()
