import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence

import numpy as np

from core.exceptions import GridSearchError, LabelerError
from core.methods import MethodContext, fit_method
from core.rng import derive_seed
from core.training import validation_holdout
from models.base import Classifier
from schemas.bench import GridCellScore, GridSearchSpec
from schemas.preprocess import ProcessedDocument

logger = logging.getLogger(__name__)


@dataclass
class GridSearchResult:
    best: Dict[str, Any]
    best_index: int
    scores: List[GridCellScore]
    classifier: Classifier


def grid_search(
    spec: GridSearchSpec,
    docs: Sequence[ProcessedDocument],
    labels: Sequence[int],
    context: MethodContext,
    seed: int = 0,
    validation_fraction: float = 0.15,
    workers: int = 1,
) -> GridSearchResult:
    """Scores every cell on a seeded validation share of the training data.

    Failed cells are recorded and skipped. Ties go to the earliest cell in
    declared order. The winner is refit on all of ``docs``.
    """
    cells = spec.cells()
    labels = np.asarray(labels, dtype=np.int64)

    if len(cells) == 1:
        scores = [GridCellScore(index=0, hyperparameters=cells[0], status="ok")]
        best_index = 0
    else:
        train_idx, val_idx = validation_holdout(len(docs), validation_fraction, seed)
        if not val_idx:
            raise GridSearchError(f"{len(docs)} training documents are too few to hold out validation")
        fit_docs = [docs[i] for i in train_idx]
        val_docs = [docs[i] for i in val_idx]

        def run(index: int) -> GridCellScore:
            hyperparameters = cells[index]
            try:
                classifier = fit_method(spec.method, hyperparameters, fit_docs, labels[train_idx], context,
                                        seed=derive_seed(seed, "cell", index))
                score = float(np.mean(classifier.predict_many(val_docs) == labels[val_idx]))
            except (LabelerError, ValueError) as e:
                logger.warning("Grid cell %d %s of %s failed: %s", index, hyperparameters, spec.method, e)
                return GridCellScore(index=index, hyperparameters=hyperparameters, status="failed", error=str(e))
            logger.info("Grid cell %d %s of %s: validation accuracy %.4f", index, hyperparameters, spec.method, score)
            return GridCellScore(index=index, hyperparameters=hyperparameters, status="ok", validation_accuracy=score)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                scores = list(pool.map(run, range(len(cells))))
        else:
            scores = [run(i) for i in range(len(cells))]

        best_index = -1
        for score in scores:
            if score.status == "ok" and (best_index < 0 or score.validation_accuracy > scores[best_index].validation_accuracy):
                best_index = score.index
        if best_index < 0:
            raise GridSearchError(f"every grid cell of {spec.method} failed")

    best = cells[best_index]
    classifier = fit_method(spec.method, best, docs, labels, context, seed=derive_seed(seed, "final"))
    return GridSearchResult(best=best, best_index=best_index, scores=scores, classifier=classifier)
