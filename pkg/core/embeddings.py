import logging
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from core.exceptions import ConfigError, ShapeError
from core.preprocess import EncodedDocument
from core.rng import numpy_generator
from models.embedding import EmbeddingTable
from models.vocabulary import OOV_ID, PAD_ID, Vocabulary
from schemas.embedding import SkipGramConfig

logger = logging.getLogger(__name__)

UNIGRAM_POWER = 0.75


class NegativeSampler:
    """Draws token ids from the unigram distribution raised to the 3/4 power."""

    def __init__(self, counts: NDArray[np.float64]):
        weights = np.power(np.asarray(counts, dtype=np.float64), UNIGRAM_POWER)
        if weights.sum() <= 0:
            raise ConfigError("negative sampling needs at least one token with a positive count")
        self.probabilities = weights / weights.sum()
        self._cdf = np.cumsum(weights)

    @classmethod
    def from_vocabulary(cls, vocab: Vocabulary) -> "NegativeSampler":
        counts = np.array([vocab.frequencies.get(t, 0) for t in vocab.id_to_token], dtype=np.float64)
        counts[[PAD_ID, OOV_ID]] = 0.0
        return cls(counts)

    def sample(self, rng: np.random.Generator, shape) -> NDArray[np.int64]:
        draws = np.searchsorted(self._cdf, rng.random(shape) * self._cdf[-1], side="right")
        return np.minimum(draws, self._cdf.size - 1)


def _log_sigmoid(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return -np.logaddexp(0.0, -x)


def _sigmoid(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def train_skipgram(docs: Sequence[EncodedDocument], vocab: Vocabulary, config: SkipGramConfig) -> EmbeddingTable:
    """Skip-gram with negative sampling over each document's token stream.

    Reserved ids are dropped from the stream, so they are never centers or
    contexts; the PAD row of the published table stays zero.
    """
    size = len(vocab)
    if size < config.negatives + 2:
        raise ConfigError(f"vocabulary of {size} tokens is too small for {config.negatives} negatives")
    streams = []
    for doc in docs:
        stream = np.array([t for sentence in doc for t in sentence if t > OOV_ID], dtype=np.int64)
        if stream.size > 1:
            streams.append(stream)
    if not streams:
        raise ConfigError("corpus has no document with two or more known tokens")

    sampler = NegativeSampler.from_vocabulary(vocab)
    rng = numpy_generator(config.seed, "skipgram")
    dim, window, k = config.dim, config.window, config.negatives
    w_in = rng.uniform(-0.5 / dim, 0.5 / dim, size=(size, dim))
    w_in[PAD_ID] = 0.0
    w_out = np.zeros((size, dim))

    total_centers = config.epochs * sum(s.size for s in streams)
    seen = 0
    history = []
    for epoch in range(1, config.epochs + 1):
        loss_sum = 0.0
        pairs = 0
        for d in rng.permutation(len(streams)):
            stream = streams[d]
            for i, center in enumerate(stream):
                lr = config.learning_rate * max(1.0 - seen / total_centers, 1e-4)
                seen += 1
                contexts = np.concatenate((stream[max(0, i - window):i], stream[i + 1:i + 1 + window]))
                negatives = sampler.sample(rng, (contexts.size, k))

                v = w_in[center]
                u_pos = w_out[contexts]
                u_neg = w_out[negatives]
                s_pos = u_pos @ v
                s_neg = u_neg @ v
                loss_sum -= float(_log_sigmoid(s_pos).sum() + _log_sigmoid(-s_neg).sum())
                pairs += contexts.size

                g_pos = _sigmoid(s_pos) - 1.0
                g_neg = _sigmoid(s_neg)
                grad_v = g_pos @ u_pos + np.einsum("pk,pkd->d", g_neg, u_neg)
                np.add.at(w_out, contexts, -lr * g_pos[:, None] * v)
                np.add.at(w_out, negatives.ravel(), -lr * (g_neg.ravel()[:, None] * v))
                w_in[center] -= lr * grad_v
        history.append(loss_sum / max(pairs, 1))
        logger.info("Skip-gram epoch %d/%d: loss %.4f", epoch, config.epochs, history[-1])

    return EmbeddingTable(w_in, list(vocab.id_to_token), vocab.hash, history)


def lookup(table: EmbeddingTable, ids) -> NDArray[np.float64]:
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.size):
        raise ShapeError(f"token ids must lie in [0, {table.size}), got range [{ids.min()}, {ids.max()}]")
    return table.matrix[ids]
