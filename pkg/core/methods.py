"""The six benchmarked methods behind one fitting entry point."""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from core.architectures import SequenceClassifier, build_model
from core.baselines import nb_fit, nb_scores, svm_fit, svm_scores
from core.exceptions import ConfigError
from core.features import fit_tfidf, term_counts, transform_tfidf
from core.nn import softmax
from core.preprocess import encode, encode_all
from core.training import predict_many, train
from models.base import Classifier
from models.embedding import EmbeddingTable
from models.features import TfidfModel
from models.linear_svm import LinearSvmModel
from models.naive_bayes import NaiveBayesModel
from models.vocabulary import Vocabulary
from schemas.model import ModelSpec, TrainConfig
from schemas.preprocess import ProcessedDocument

logger = logging.getLogger(__name__)

DEFAULT_GRIDS: Dict[str, Dict[str, List[Any]]] = {
    "nb": {"alpha": [0.1, 0.5, 1.0]},
    "svm": {"lambda_": [1e-5, 1e-4, 1e-3]},
    "embedding-bag": {"learning_rate": [0.01, 0.003]},
    "deeptriage": {"learning_rate": [0.003, 0.001]},
    "han": {"learning_rate": [0.003, 0.001]},
    "proposed": {"learning_rate": [0.003, 0.001]},
}

NB_HYPERPARAMETERS = {"alpha"}
SVM_HYPERPARAMETERS = {"lambda_", "epochs"}
OPTIMIZER_HYPERPARAMETERS = {"learning_rate", "decay", "epsilon"}


class NaiveBayesClassifier(Classifier):
    method = "nb"

    def __init__(self, model: NaiveBayesModel, vocabulary: Vocabulary):
        self.model = model
        self.vocabulary = vocabulary

    def predict_proba(self, docs: Sequence[ProcessedDocument]) -> NDArray[np.float64]:
        scores = np.array([nb_scores(self.model, term_counts(d, self.vocabulary)) for d in docs])
        return softmax(scores)


class LinearSvmClassifier(Classifier):
    """Decision values turned into a distribution with a softmax."""

    method = "svm"

    def __init__(self, tfidf: TfidfModel, model: LinearSvmModel):
        self.tfidf = tfidf
        self.model = model

    def predict_proba(self, docs: Sequence[ProcessedDocument]) -> NDArray[np.float64]:
        scores = np.array([svm_scores(self.model, transform_tfidf(d, self.tfidf)) for d in docs])
        return softmax(scores)


class NeuralClassifier(Classifier):
    def __init__(self, network: SequenceClassifier, vocabulary: Vocabulary, embeddings: EmbeddingTable):
        self.network = network
        self.vocabulary = vocabulary
        self.embeddings = embeddings
        self.method = network.spec.architecture

    def predict_proba(self, docs: Sequence[ProcessedDocument]) -> NDArray[np.float64]:
        return predict_many(self.network, [encode(d, self.vocabulary) for d in docs])[1]


@dataclass
class MethodContext:
    """What every method fit shares within one benchmark cell."""

    vocabulary: Vocabulary
    num_classes: int
    embeddings: Callable[[], EmbeddingTable]
    train_config: TrainConfig = field(default_factory=TrainConfig)
    model_overrides: Dict[str, Dict[str, Any]] = field(default_factory=dict)


def default_grid(method: str) -> Dict[str, List[Any]]:
    try:
        return DEFAULT_GRIDS[method]
    except KeyError:
        raise ConfigError(f"unknown method '{method}'") from None


def _check_names(method: str, hyperparameters: Dict[str, Any], allowed: set) -> None:
    unknown = sorted(set(hyperparameters) - allowed)
    if unknown:
        raise ConfigError(f"method '{method}' has no hyperparameters {unknown}")


def neural_settings(method: str, hyperparameters: Dict[str, Any], context: MethodContext, seed: int):
    """Routes hyperparameters to the model spec, the optimizer or the training loop."""
    spec_fields = set(ModelSpec.model_fields) - {"architecture", "num_classes"}
    train_fields = set(TrainConfig.model_fields) - {"optimizer", "seed"}
    _check_names(method, hyperparameters, spec_fields | train_fields | OPTIMIZER_HYPERPARAMETERS)

    spec_values = dict(context.model_overrides.get(method, {}))
    spec_values.update({k: v for k, v in hyperparameters.items() if k in spec_fields})
    spec = ModelSpec(architecture=method, num_classes=context.num_classes, **spec_values)

    base = context.train_config
    optimizer = base.optimizer.model_copy(
        update={k: v for k, v in hyperparameters.items() if k in OPTIMIZER_HYPERPARAMETERS}
    )
    config = TrainConfig.model_validate({
        **base.model_dump(),
        **{k: v for k, v in hyperparameters.items() if k in train_fields},
        "optimizer": optimizer.model_dump(),
        "seed": seed,
    })
    return spec, config


def fit_method(
    method: str,
    hyperparameters: Dict[str, Any],
    docs: Sequence[ProcessedDocument],
    labels: Sequence[int],
    context: MethodContext,
    seed: int = 0,
    validation: Optional[tuple] = None,
) -> Classifier:
    vocab = context.vocabulary
    if method == "nb":
        _check_names(method, hyperparameters, NB_HYPERPARAMETERS)
        counts = [term_counts(d, vocab) for d in docs]
        model = nb_fit(list(zip(counts, labels)), context.num_classes,
                       alpha=hyperparameters.get("alpha", 1.0), vocabulary_hash=vocab.hash)
        return NaiveBayesClassifier(model, vocab)

    if method == "svm":
        _check_names(method, hyperparameters, SVM_HYPERPARAMETERS)
        tfidf = fit_tfidf(docs, vocab)
        vectors = [transform_tfidf(d, tfidf) for d in docs]
        model = svm_fit(
            list(zip(vectors, labels)),
            context.num_classes,
            lambda_=hyperparameters.get("lambda_", 1e-4),
            epochs=hyperparameters.get("epochs", 10),
            seed=seed,
            vocabulary_hash=vocab.hash,
        )
        return LinearSvmClassifier(tfidf, model)

    if method in ("embedding-bag", "deeptriage", "han", "proposed"):
        spec, config = neural_settings(method, hyperparameters, context, seed)
        embeddings = context.embeddings()
        network = build_model(spec, embeddings, seed=seed)
        result = train(network, encode_all(docs, vocab), labels, config, validation)
        logger.info("Trained %s: best epoch %d of %d", method, result.best_epoch, len(result.history))
        return NeuralClassifier(network, vocab, embeddings)

    raise ConfigError(f"unknown method '{method}'")
