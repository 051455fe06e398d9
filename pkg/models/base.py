from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from models.vocabulary import Vocabulary
from schemas.checkpoint import ModelCard
from schemas.preprocess import ProcessedDocument


class Classifier(ABC):
    """A fitted ticket classifier over preprocessed documents."""

    method: str

    @abstractmethod
    def predict_proba(self, docs: Sequence[ProcessedDocument]) -> NDArray[np.float64]:
        """[documents x classes] rows that sum to one."""

    def predict(self, doc: ProcessedDocument) -> Tuple[int, List[float]]:
        probs = self.predict_proba([doc])[0]
        return int(np.argmax(probs)), probs.tolist()

    def predict_many(self, docs: Sequence[ProcessedDocument]) -> NDArray[np.int64]:
        if not docs:
            return np.zeros(0, dtype=np.int64)
        return self.predict_proba(docs).argmax(axis=1)


@dataclass
class ModelBundle:
    card: ModelCard
    vocabulary: Vocabulary
    classifier: Classifier
