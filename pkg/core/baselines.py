import logging
from typing import List, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from core.exceptions import ConfigError, LabelError, ShapeError
from core.rng import XorShift64Star
from models.features import SparseVector
from models.linear_svm import LinearSvmModel
from models.naive_bayes import NEVER_PREDICTED, NaiveBayesModel

logger = logging.getLogger(__name__)

LabeledVectors = Sequence[Tuple[SparseVector, int]]


def _check_training_set(train: LabeledVectors, num_classes: int) -> int:
    if not train:
        raise ConfigError("training set is empty")
    if num_classes < 1:
        raise ConfigError(f"num_classes must be positive, got {num_classes}")
    dim = train[0][0].dim
    for x, c in train:
        if x.dim != dim:
            raise ShapeError(f"training vectors disagree on dimension: {x.dim} vs {dim}")
        if not 0 <= c < num_classes:
            raise LabelError(f"class id {c} outside [0, {num_classes})")
    return dim


def nb_fit(train: LabeledVectors, num_classes: int, alpha: float = 1.0, vocabulary_hash: str = "") -> NaiveBayesModel:
    """Multinomial Naive Bayes with additive smoothing.

    log P(c)   = ln(N_c / N)
    log P(t|c) = ln((count(t, c) + alpha) / (total(c) + alpha * V))
    """
    if alpha <= 0:
        raise ConfigError(f"alpha must be positive, got {alpha}")
    dim = _check_training_set(train, num_classes)

    counts = np.zeros((num_classes, dim))
    docs = np.zeros(num_classes)
    for x, c in train:
        counts[c, x.indices] += x.values
        docs[c] += 1

    prior = np.full(num_classes, NEVER_PREDICTED)
    present = docs > 0
    prior[present] = np.log(docs[present] / len(train))
    if not present.all():
        logger.warning("Classes %s have no training documents and will never be predicted",
                       np.flatnonzero(~present).tolist())

    totals = counts.sum(axis=1, keepdims=True)
    likelihood = np.log((counts + alpha) / (totals + alpha * dim))
    return NaiveBayesModel(prior, likelihood, alpha, vocabulary_hash)


def nb_scores(model: NaiveBayesModel, counts: SparseVector) -> NDArray[np.float64]:
    if counts.dim != model.dim:
        raise ShapeError(f"count vector of dim {counts.dim} does not match model dim {model.dim}")
    return model.class_log_prior + model.token_log_likelihood[:, counts.indices] @ counts.values


def nb_predict(model: NaiveBayesModel, counts: SparseVector) -> Tuple[int, List[float]]:
    scores = nb_scores(model, counts)
    return int(np.argmax(scores)), scores.tolist()


class _CompressedRows:
    """Row-stacked sparse vectors for whole-set dot products."""

    def __init__(self, rows: Sequence[SparseVector]):
        self.n = len(rows)
        self.indices = np.concatenate([r.indices for r in rows]) if rows else np.zeros(0, dtype=np.int64)
        self.values = np.concatenate([r.values for r in rows]) if rows else np.zeros(0)
        self.owner = np.repeat(np.arange(self.n), [len(r) for r in rows])

    def dot(self, w: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.bincount(self.owner, weights=w[self.indices] * self.values, minlength=self.n)


def _objective(w: NDArray[np.float64], b: float, rows: _CompressedRows, y: NDArray[np.float64], lambda_: float) -> float:
    margins = y * (rows.dot(w) + b)
    return 0.5 * lambda_ * (float(w @ w) + b * b) + float(np.maximum(0.0, 1.0 - margins).mean())


def svm_fit(
    train: LabeledVectors,
    num_classes: int,
    lambda_: float = 1e-4,
    epochs: int = 10,
    seed: int = 0,
    vocabulary_hash: str = "",
) -> LinearSvmModel:
    """One-vs-rest linear SVM trained with Pegasos stochastic subgradient steps.

    The bias is an augmented constant feature, so it is regularised with the
    weights. Per class the minimised objective is

        lambda/2 * (||w||^2 + b^2) + mean(max(0, 1 - y * (w.x + b)))

    rather than the textbook lambda/2 * ||w||^2 with a free bias. Iterates
    (w, b together) are projected onto the ball of radius 1/sqrt(lambda), and
    each class keeps the iterate with the lowest epoch-end objective.
    """
    if lambda_ <= 0:
        raise ConfigError(f"lambda must be positive, got {lambda_}")
    if epochs < 1:
        raise ConfigError(f"epochs must be positive, got {epochs}")
    dim = _check_training_set(train, num_classes)
    for x, _ in train:
        if not np.all(np.isfinite(x.values)):
            raise ConfigError("training vectors contain non-finite values")

    vectors = [x for x, _ in train]
    labels = np.array([c for _, c in train])
    sq_lengths = [float(x.values @ x.values) + 1.0 for x in vectors]
    rows = _CompressedRows(vectors)
    n = len(train)
    rng = XorShift64Star(seed)
    radius_sq = 1.0 / lambda_

    # w = scale * v, b = scale * vb; sq_norm tracks ||v||^2 + vb^2
    v = np.zeros((num_classes, dim))
    vb = np.zeros(num_classes)
    scale = np.ones(num_classes)
    sq_norm = np.zeros(num_classes)
    targets = np.where(labels[None, :] == np.arange(num_classes)[:, None], 1.0, -1.0)
    best_w = np.zeros((num_classes, dim))
    best_b = np.zeros(num_classes)
    best_objective = np.full(num_classes, np.inf)
    history = []
    t = 0

    for epoch in range(1, epochs + 1):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lambda_ * t)
            shrink = 1.0 - eta * lambda_
            x = vectors[i]
            raw = v[:, x.indices] @ x.values + vb
            margins = targets[:, i] * scale * raw
            for c in range(num_classes):
                if shrink <= 0.0:
                    v[c] = 0.0
                    vb[c] = 0.0
                    scale[c] = 1.0
                    sq_norm[c] = 0.0
                else:
                    scale[c] *= shrink
                if margins[c] < 1.0:
                    step = eta * targets[c, i] / scale[c]
                    segment = v[c, x.indices]
                    sq_norm[c] += 2.0 * step * (segment @ x.values + vb[c]) + step * step * sq_lengths[i]
                    v[c, x.indices] = segment + step * x.values
                    vb[c] += step
                norm_sq = scale[c] * scale[c] * sq_norm[c]
                if norm_sq > radius_sq:
                    scale[c] *= np.sqrt(radius_sq / norm_sq)
                if scale[c] < 1e-9:
                    v[c] *= scale[c]
                    vb[c] *= scale[c]
                    sq_norm[c] *= scale[c] * scale[c]
                    scale[c] = 1.0

        for c in range(num_classes):
            w_c = scale[c] * v[c]
            b_c = scale[c] * vb[c]
            objective = _objective(w_c, b_c, rows, targets[c], lambda_)
            if objective < best_objective[c]:
                best_objective[c] = objective
                best_w[c] = w_c
                best_b[c] = b_c
        history.append(float(best_objective.mean()))
        logger.debug("SVM epoch %d: objective %.6f", epoch, history[-1])

    return LinearSvmModel(best_w, best_b, lambda_, epochs, history, vocabulary_hash)


def svm_scores(model: LinearSvmModel, x: SparseVector) -> NDArray[np.float64]:
    if x.dim != model.dim:
        raise ShapeError(f"vector of dim {x.dim} does not match model dim {model.dim}")
    return model.weights[:, x.indices] @ x.values + model.bias


def svm_predict(model: LinearSvmModel, x: SparseVector) -> Tuple[int, List[float]]:
    scores = svm_scores(model, x)
    return int(np.argmax(scores)), scores.tolist()
