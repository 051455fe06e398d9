"""Checkpoint directories: a model.json card, the vocabulary and per-method files."""
import hashlib
import logging
from pathlib import Path

import numpy as np

from core.architectures import build_model
from core.exceptions import CheckpointFormatError, VocabularyMismatchError
from core.methods import LinearSvmClassifier, NaiveBayesClassifier, NeuralClassifier
from crud.artifact import ArtifactRepository
from crud.checkpoint import TensorRepository
from crud.embedding import EmbeddingRepository
from models.base import ModelBundle
from models.features import TfidfModel
from models.linear_svm import LinearSvmModel
from models.naive_bayes import NaiveBayesModel
from models.vocabulary import Vocabulary
from schemas.checkpoint import CHECKPOINT_VERSION, LinearSvmFile, ModelCard, NaiveBayesFile, TfidfFile
from schemas.preprocess import VocabularyFile

logger = logging.getLogger(__name__)

CARD_FILE = "model.json"
VOCABULARY_FILE = "vocabulary.json"
NAIVE_BAYES_FILE = "naive_bayes.json"
TFIDF_FILE = "tfidf.json"
LINEAR_SVM_FILE = "linear_svm.json"
PARAMETERS_FILE = "parameters.tbnk"
EMBEDDINGS_FILE = "embeddings.txt"


def file_sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _check_vocabulary(recorded: str, vocab: Vocabulary, what: str) -> None:
    if recorded != vocab.hash:
        raise VocabularyMismatchError(recorded, vocab.hash, what)


def naive_bayes_to_file(model: NaiveBayesModel) -> NaiveBayesFile:
    return NaiveBayesFile(
        vocabulary_hash=model.vocabulary_hash,
        alpha=model.alpha,
        class_log_prior=model.class_log_prior.tolist(),
        token_log_likelihood=model.token_log_likelihood.tolist(),
    )


def naive_bayes_from_file(record: NaiveBayesFile, vocab: Vocabulary) -> NaiveBayesModel:
    _check_vocabulary(record.vocabulary_hash, vocab, "naive Bayes model")
    likelihood = np.array(record.token_log_likelihood, dtype=np.float64)
    if likelihood.shape != (len(record.class_log_prior), len(vocab)):
        raise CheckpointFormatError(f"naive Bayes table has shape {likelihood.shape}")
    return NaiveBayesModel(np.array(record.class_log_prior), likelihood, record.alpha, record.vocabulary_hash)


def tfidf_to_file(model: TfidfModel) -> TfidfFile:
    return TfidfFile(vocabulary_hash=model.vocabulary_hash, doc_count=model.doc_count, idf=model.idf.tolist())


def tfidf_from_file(record: TfidfFile, vocab: Vocabulary) -> TfidfModel:
    _check_vocabulary(record.vocabulary_hash, vocab, "TF-IDF model")
    try:
        return TfidfModel(vocabulary=vocab, idf=np.array(record.idf, dtype=np.float64), doc_count=record.doc_count)
    except ValueError as e:
        raise CheckpointFormatError(str(e)) from None


def linear_svm_to_file(model: LinearSvmModel) -> LinearSvmFile:
    return LinearSvmFile(
        vocabulary_hash=model.vocabulary_hash,
        lambda_=model.lambda_,
        epochs=model.epochs,
        weights=model.weights.tolist(),
        bias=model.bias.tolist(),
        objective_history=list(model.objective_history),
    )


def linear_svm_from_file(record: LinearSvmFile, vocab: Vocabulary) -> LinearSvmModel:
    _check_vocabulary(record.vocabulary_hash, vocab, "linear SVM model")
    weights = np.array(record.weights, dtype=np.float64)
    if weights.shape != (len(record.bias), len(vocab)):
        raise CheckpointFormatError(f"SVM weights have shape {weights.shape}")
    return LinearSvmModel(weights, np.array(record.bias), record.lambda_, record.epochs,
                          record.objective_history, record.vocabulary_hash)


class CheckpointService:
    def __init__(
        self,
        artifacts: ArtifactRepository = None,
        tensors: TensorRepository = None,
        embeddings: EmbeddingRepository = None,
    ):
        self.artifacts = artifacts or ArtifactRepository()
        self.tensors = tensors or TensorRepository()
        self.embeddings = embeddings or EmbeddingRepository()

    def save(self, bundle: ModelBundle, directory: Path) -> ModelCard:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        card = bundle.card
        classifier = bundle.classifier
        self.artifacts.save(bundle.vocabulary.to_file(), directory / VOCABULARY_FILE)

        if isinstance(classifier, NaiveBayesClassifier):
            self.artifacts.save(naive_bayes_to_file(classifier.model), directory / NAIVE_BAYES_FILE)
        elif isinstance(classifier, LinearSvmClassifier):
            self.artifacts.save(tfidf_to_file(classifier.tfidf), directory / TFIDF_FILE)
            self.artifacts.save(linear_svm_to_file(classifier.model), directory / LINEAR_SVM_FILE)
        elif isinstance(classifier, NeuralClassifier):
            self.embeddings.save(classifier.embeddings, directory / EMBEDDINGS_FILE)
            self.tensors.save(classifier.network.state(), directory / PARAMETERS_FILE)
            card = card.model_copy(update={
                "spec": classifier.network.spec,
                "embedding_hash": file_sha256(directory / EMBEDDINGS_FILE),
            })
        else:
            raise CheckpointFormatError(f"cannot save classifier of type {type(classifier).__name__}")

        self.artifacts.save(card, directory / CARD_FILE)
        logger.info("Saved %s checkpoint for '%s' to %s", card.method, card.field, directory)
        return card

    def load_card(self, directory: Path) -> ModelCard:
        card = self.artifacts.load(ModelCard, Path(directory) / CARD_FILE)
        if card.version != CHECKPOINT_VERSION:
            raise CheckpointFormatError(f"unsupported checkpoint version {card.version}")
        return card

    def load(self, directory: Path) -> ModelBundle:
        directory = Path(directory)
        card = self.load_card(directory)
        vocab = Vocabulary.from_file(self.artifacts.load(VocabularyFile, directory / VOCABULARY_FILE))
        _check_vocabulary(card.vocabulary_hash, vocab, "checkpoint card")

        if card.method == "nb":
            model = naive_bayes_from_file(self.artifacts.load(NaiveBayesFile, directory / NAIVE_BAYES_FILE), vocab)
            classifier = NaiveBayesClassifier(model, vocab)
        elif card.method == "svm":
            tfidf = tfidf_from_file(self.artifacts.load(TfidfFile, directory / TFIDF_FILE), vocab)
            model = linear_svm_from_file(self.artifacts.load(LinearSvmFile, directory / LINEAR_SVM_FILE), vocab)
            classifier = LinearSvmClassifier(tfidf, model)
        else:
            if card.spec is None:
                raise CheckpointFormatError(f"{card.method} checkpoint has no model spec")
            embeddings_path = directory / EMBEDDINGS_FILE
            table = self.embeddings.load(embeddings_path)
            if card.embedding_hash is not None and file_sha256(embeddings_path) != card.embedding_hash:
                raise CheckpointFormatError("embedding file does not match the checkpoint card")
            _check_vocabulary(table.vocabulary_hash, vocab, "embedding table")
            network = build_model(card.spec, table)
            network.load_state(self.tensors.load(directory / PARAMETERS_FILE))
            classifier = NeuralClassifier(network, vocab, table)

        num_classes = classifier.network.spec.num_classes if isinstance(classifier, NeuralClassifier) else model.num_classes
        if num_classes != len(card.class_names):
            raise CheckpointFormatError(f"model predicts {num_classes} classes but the card names {len(card.class_names)}")
        logger.info("Loaded %s checkpoint for '%s' from %s", card.method, card.field, directory)
        return ModelBundle(card=card, vocabulary=vocab, classifier=classifier)
