import logging
from pathlib import Path
from typing import Optional

from fastapi import Depends, HTTPException, Request, status

from core.checkpoint import CheckpointService
from core.exceptions import LabelerError
from core.preprocess import Preprocessor
from models.base import ModelBundle
from schemas.corpus import Document
from schemas.prediction import ModelSummary, Prediction, TicketIn

logger = logging.getLogger(__name__)


def load_bundle(checkpoint_dir: Path, checkpoints: Optional[CheckpointService] = None) -> Optional[ModelBundle]:
    checkpoints = checkpoints or CheckpointService()
    try:
        return checkpoints.load(checkpoint_dir)
    except LabelerError as e:
        logger.error("No model loaded from %s: %s", checkpoint_dir, e)
        return None


def get_bundle(request: Request) -> ModelBundle:
    bundle = getattr(request.app.state, "bundle", None)
    if bundle is None:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail="No model checkpoint is loaded")
    return bundle


class PredictionService:
    def __init__(self, bundle: ModelBundle = Depends(get_bundle)):
        self.bundle = bundle
        self.preprocessor = Preprocessor(bundle.card.pipeline)

    def summary(self) -> ModelSummary:
        card = self.bundle.card
        return ModelSummary(method=card.method, field=card.field, class_names=card.class_names,
                            vocabulary_hash=card.vocabulary_hash)

    def predict(self, ticket: TicketIn) -> Prediction:
        card = self.bundle.card
        document = Document(id="request", title=ticket.title, body=ticket.content)
        try:
            class_id, probabilities = self.bundle.classifier.predict(self.preprocessor.process(document))
        except LabelerError as e:
            raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
        return Prediction(
            field=card.field,
            label=card.class_names[class_id],
            class_id=class_id,
            probabilities=dict(zip(card.class_names, probabilities)),
        )
