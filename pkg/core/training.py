import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from core.architectures import SequenceClassifier, make_batch
from core.corpus import held_out_count
from core.exceptions import ConfigError, TrainingDivergedError
from core.nn import RmsPropState, cross_entropy, rmsprop_step, softmax
from core.preprocess import EncodedDocument
from core.rng import XorShift64Star, derive_seed, numpy_generator
from schemas.model import TrainConfig

logger = logging.getLogger(__name__)

PREDICT_BATCH_SIZE = 64


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    validation_accuracy: float


@dataclass
class TrainingResult:
    model: SequenceClassifier
    history: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0


def validation_holdout(n: int, fraction: float, seed: int) -> Tuple[List[int], List[int]]:
    """Seeded (train, validation) index split; validation is empty when n is too small."""
    held = held_out_count(n, fraction)
    if held == 0 or held >= n:
        return list(range(n)), []
    order = XorShift64Star(derive_seed(seed, "validation")).permutation(n)
    return sorted(order[held:]), sorted(order[:held])


def bucket_batches(docs: Sequence[EncodedDocument], indices: Sequence[int], batch_size: int,
                   rng: Optional[XorShift64Star] = None) -> List[List[int]]:
    """Groups documents of similar sentence count; shuffles within and across buckets when rng is given."""
    order = list(indices)
    if rng is not None:
        rng.shuffle(order)
    order.sort(key=lambda i: len(docs[i]))
    batches = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
    if rng is not None:
        rng.shuffle(batches)
    return batches


def predict_many(model: SequenceClassifier, docs: Sequence[EncodedDocument],
                 batch_size: int = PREDICT_BATCH_SIZE) -> Tuple[NDArray[np.int64], NDArray[np.float64]]:
    if not docs:
        return np.zeros(0, dtype=np.int64), np.zeros((0, model.spec.num_classes))
    probs = np.zeros((len(docs), model.spec.num_classes))
    for chunk in bucket_batches(docs, range(len(docs)), batch_size):
        probs[chunk] = model.predict_proba(make_batch([docs[i] for i in chunk]))
    return probs.argmax(axis=1), probs


def predict(model: SequenceClassifier, doc: EncodedDocument) -> Tuple[int, List[float]]:
    probs = model.predict_proba(make_batch([doc]))[0]
    return int(np.argmax(probs)), probs.tolist()


def train(
    model: SequenceClassifier,
    docs: Sequence[EncodedDocument],
    labels: Sequence[int],
    config: TrainConfig,
    validation: Optional[Tuple[Sequence[EncodedDocument], Sequence[int]]] = None,
) -> TrainingResult:
    """Mini-batch RMSprop on cross-entropy with early stopping on validation accuracy.

    Without an explicit validation set a seeded share of ``docs`` is held out.
    The returned model carries the parameters of its best validation epoch.
    """
    if len(docs) != len(labels):
        raise ConfigError(f"{len(docs)} documents but {len(labels)} labels")
    if not docs:
        raise ConfigError("cannot train on zero documents")
    labels = np.asarray(labels, dtype=np.int64)

    if validation is None:
        train_idx, val_idx = validation_holdout(len(docs), config.validation_fraction, config.seed)
        if not val_idx:
            logger.warning("Training set of %d documents is too small to hold out validation", len(docs))
            val_idx = train_idx
        val_docs, val_labels = [docs[i] for i in val_idx], labels[val_idx]
    else:
        train_idx = list(range(len(docs)))
        val_docs, val_labels = list(validation[0]), np.asarray(validation[1], dtype=np.int64)

    optimizer = RmsPropState.from_config(config.optimizer)
    shuffler = XorShift64Star(derive_seed(config.seed, "batches"))
    dropout_rng = numpy_generator(config.seed, "dropout")
    params = model.parameters()

    result = TrainingResult(model)
    best_accuracy = -1.0
    best_state = model.state()
    stale = 0
    for epoch in range(1, config.epochs + 1):
        loss_sum = 0.0
        correct = 0
        batches = bucket_batches(docs, train_idx, config.batch_size, shuffler)
        for number, chunk in enumerate(batches, start=1):
            batch = make_batch([docs[i] for i in chunk])
            with np.errstate(over="ignore", invalid="ignore"):
                probs = softmax(model.forward(batch, dropout_rng))
            loss, d_logits = cross_entropy(probs, labels[chunk])
            if not np.isfinite(loss) or not np.all(np.isfinite(probs)):
                raise TrainingDivergedError(epoch, number, loss)
            model.backward(d_logits)
            rmsprop_step(params, optimizer)
            loss_sum += loss * len(chunk)
            correct += int((probs.argmax(axis=1) == labels[chunk]).sum())

        with np.errstate(over="ignore", invalid="ignore"):
            predicted, _ = predict_many(model, val_docs)
        record = EpochRecord(
            epoch=epoch,
            train_loss=loss_sum / len(train_idx),
            train_accuracy=correct / len(train_idx),
            validation_accuracy=float((predicted == val_labels).mean()),
        )
        result.history.append(record)
        logger.info("Epoch %d: loss %.4f, train accuracy %.3f, validation accuracy %.3f",
                    epoch, record.train_loss, record.train_accuracy, record.validation_accuracy)

        if record.validation_accuracy > best_accuracy:
            best_accuracy = record.validation_accuracy
            best_state = model.state()
            result.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                logger.info("Stopping early after epoch %d; best validation accuracy %.3f at epoch %d",
                            epoch, best_accuracy, result.best_epoch)
                break

    model.load_state(best_state)
    return result
