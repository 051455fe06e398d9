"""The neural ticket classifiers and the padded batch layout they consume."""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from core.exceptions import CheckpointFormatError, ConfigError, ShapeError
from core.nn import (
    Parameter,
    Tensor,
    affine_backward,
    affine_forward,
    dropout_backward,
    dropout_forward,
    glorot_uniform,
    softmax,
    tanh_backward,
    tanh_forward,
    zeros,
)
from core.preprocess import EncodedDocument
from core.recurrent import DeepAttentionBlock, SequenceEncoder
from core.rng import numpy_generator
from models.embedding import EmbeddingTable
from models.vocabulary import OOV_ID, PAD_ID
from schemas.model import ModelSpec
from schemas.nn import DropoutSpec


@dataclass
class Batch:
    """Documents padded with PAD to the batch maximum.

    tokens is [B x S x T]; flat_tokens is the sentence-boundary-free stream [B x L].
    """

    tokens: NDArray[np.int64]
    token_mask: NDArray[np.bool_]
    sentence_mask: NDArray[np.bool_]
    flat_tokens: NDArray[np.int64]
    flat_mask: NDArray[np.bool_]

    @property
    def size(self) -> int:
        return int(self.tokens.shape[0])


def make_batch(docs: Sequence[EncodedDocument]) -> Batch:
    if not docs:
        raise ShapeError("cannot batch zero documents")
    cleaned = []
    for doc in docs:
        sentences = [list(s) for s in doc if len(s) > 0]
        cleaned.append(sentences or [[OOV_ID]])

    batch = len(cleaned)
    max_sentences = max(len(d) for d in cleaned)
    max_tokens = max(len(s) for d in cleaned for s in d)
    max_flat = max(sum(len(s) for s in d) for d in cleaned)

    tokens = np.full((batch, max_sentences, max_tokens), PAD_ID, dtype=np.int64)
    flat = np.full((batch, max_flat), PAD_ID, dtype=np.int64)
    sentence_mask = np.zeros((batch, max_sentences), dtype=bool)
    flat_mask = np.zeros((batch, max_flat), dtype=bool)
    token_mask = np.zeros((batch, max_sentences, max_tokens), dtype=bool)
    for b, doc in enumerate(cleaned):
        stream = [t for s in doc for t in s]
        flat[b, :len(stream)] = stream
        flat_mask[b, :len(stream)] = True
        sentence_mask[b, :len(doc)] = True
        for s, sentence in enumerate(doc):
            tokens[b, s, :len(sentence)] = sentence
            token_mask[b, s, :len(sentence)] = True
    return Batch(tokens, token_mask, sentence_mask, flat, flat_mask)


class EmbeddingLayer:
    def __init__(self, table: EmbeddingTable, trainable: bool = False):
        self.weights = Parameter("embedding", table.matrix.copy())
        self.weights.value[PAD_ID] = 0.0
        self.trainable = trainable

    @property
    def dim(self) -> int:
        return int(self.weights.shape[1])

    def parameters(self) -> List[Parameter]:
        return [self.weights] if self.trainable else []

    def forward(self, ids: NDArray[np.int64]) -> Tensor:
        return self.weights.value[ids]

    def backward(self, ids: NDArray[np.int64], d_out: Tensor) -> None:
        if not self.trainable:
            return
        np.add.at(self.weights.grad, ids.reshape(-1), d_out.reshape(-1, self.dim))
        self.weights.grad[PAD_ID] = 0.0


class _Head:
    """Optional hidden tanh layer with dropout around it, then the class projection."""

    def __init__(self, input_size: int, hidden: int, num_classes: int, dropout: DropoutSpec, rng: np.random.Generator):
        self.dropout = dropout
        self.hidden = None
        if hidden > 0:
            self.hidden = (glorot_uniform("fc1.W", (input_size, hidden), rng), zeros("fc1.b", (hidden,)))
            input_size = hidden
        self.out = (glorot_uniform("fc2.W", (input_size, num_classes), rng), zeros("fc2.b", (num_classes,)))
        self._cache = None

    def parameters(self) -> List[Parameter]:
        return [*(self.hidden or ()), *self.out]

    def forward(self, x: Tensor, rng: Optional[np.random.Generator]) -> Tensor:
        if self.hidden is None:
            logits, out_cache = affine_forward(x, *self.out)
            self._cache = (None, out_cache)
            return logits
        a, hidden_cache = affine_forward(x, *self.hidden)
        h, tanh_cache = tanh_forward(a)
        h, mask = dropout_forward(h, self.dropout, rng) if rng is not None else (h, None)
        logits, out_cache = affine_forward(h, *self.out)
        self._cache = ((hidden_cache, tanh_cache, mask), out_cache)
        return logits

    def backward(self, d_logits: Tensor) -> Tensor:
        hidden_caches, out_cache = self._cache
        d = affine_backward(d_logits, out_cache)
        if hidden_caches is None:
            return d
        hidden_cache, tanh_cache, mask = hidden_caches
        d = tanh_backward(dropout_backward(d, mask), tanh_cache)
        return affine_backward(d, hidden_cache)


class SequenceClassifier(ABC):
    def __init__(self, spec: ModelSpec, embeddings: EmbeddingTable, seed: int):
        self.spec = spec
        self.embedding = EmbeddingLayer(embeddings, spec.fine_tune_embeddings)
        self.dropout = DropoutSpec(p=spec.dropout, seed=seed)
        self.rng = numpy_generator(seed, "init", spec.architecture)

    @property
    @abstractmethod
    def representation_size(self) -> int:
        """Length of the document vector fed to the classifier head."""

    @abstractmethod
    def _parameters(self) -> List[Parameter]:
        ...

    @abstractmethod
    def forward(self, batch: Batch, rng: Optional[np.random.Generator] = None) -> Tensor:
        """Logits [B x C]; dropout is active only when a generator is passed."""

    @abstractmethod
    def backward(self, d_logits: Tensor) -> None:
        ...

    def parameters(self) -> List[Parameter]:
        return self.embedding.parameters() + self._parameters()

    def predict_proba(self, batch: Batch) -> Tensor:
        return softmax(self.forward(batch))

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def state(self) -> Dict[str, Tensor]:
        return {p.name: p.value.copy() for p in self.parameters()}

    def load_state(self, state: Dict[str, Tensor]) -> None:
        params = {p.name: p for p in self.parameters()}
        if set(params) != set(state):
            missing = sorted(set(params) - set(state))
            unexpected = sorted(set(state) - set(params))
            raise CheckpointFormatError(f"parameter set mismatch: missing {missing}, unexpected {unexpected}")
        for name, value in state.items():
            if value.shape != params[name].shape:
                raise CheckpointFormatError(
                    f"parameter {name} has shape {value.shape}, the model expects {params[name].shape}"
                )
            params[name].value[...] = value

    def _dropout(self, x: Tensor, rng: Optional[np.random.Generator]):
        if rng is None:
            return x, None
        return dropout_forward(x, self.dropout, rng)


class EmbeddingBagClassifier(SequenceClassifier):
    """Mean of the word embeddings of the document, then one affine map."""

    def __init__(self, spec: ModelSpec, embeddings: EmbeddingTable, seed: int = 0):
        super().__init__(spec, embeddings, seed)
        self.head = _Head(self.embedding.dim, 0, spec.num_classes, self.dropout, self.rng)

    @property
    def representation_size(self) -> int:
        return self.embedding.dim

    def _parameters(self) -> List[Parameter]:
        return self.head.parameters()

    def forward(self, batch: Batch, rng: Optional[np.random.Generator] = None) -> Tensor:
        mask = batch.flat_mask[:, :, None]
        counts = batch.flat_mask.sum(axis=1)[:, None]
        mean = (self.embedding.forward(batch.flat_tokens) * mask).sum(axis=1) / counts
        self._cache = (batch, mask, counts)
        return self.head.forward(mean, rng)

    def backward(self, d_logits: Tensor) -> None:
        batch, mask, counts = self._cache
        d_mean = self.head.backward(d_logits)
        self.embedding.backward(batch.flat_tokens, d_mean[:, None, :] * mask / counts[:, :, None])


class DeepTriageClassifier(SequenceClassifier):
    """Bidirectional GRU over the flat token stream, then two fully-connected layers."""

    def __init__(self, spec: ModelSpec, embeddings: EmbeddingTable, seed: int = 0):
        super().__init__(spec, embeddings, seed)
        self.encoder = SequenceEncoder("bigru", self.embedding.dim, spec.rnn_size, self.rng, bidirectional=True)
        self.head = _Head(self.encoder.output_size, spec.fc_width, spec.num_classes, self.dropout, self.rng)

    @property
    def representation_size(self) -> int:
        return self.encoder.output_size

    def _parameters(self) -> List[Parameter]:
        return self.encoder.parameters() + self.head.parameters()

    def forward(self, batch: Batch, rng: Optional[np.random.Generator] = None) -> Tensor:
        inputs = self.embedding.forward(batch.flat_tokens.T)
        outputs, final = self.encoder.forward(inputs, batch.flat_mask.T)
        final, mask = self._dropout(final, rng)
        self._cache = (batch, outputs.shape, mask)
        return self.head.forward(final, rng)

    def backward(self, d_logits: Tensor) -> None:
        batch, outputs_shape, mask = self._cache
        d_final = dropout_backward(self.head.backward(d_logits), mask)
        d_inputs = self.encoder.backward(np.zeros(outputs_shape), d_final)
        self.embedding.backward(batch.flat_tokens.T, d_inputs)


class HierarchicalClassifier(SequenceClassifier):
    """Word and sentence attention blocks of several sizes plus a shallow GRU.

    Each block encodes every real sentence with a word-level block, then the
    sentence vectors with a sentence-level block. Block document vectors and
    the shallow encoder's final state are concatenated for the head.
    """

    def __init__(self, spec: ModelSpec, embeddings: EmbeddingTable, seed: int = 0):
        super().__init__(spec, embeddings, seed)
        dim = self.embedding.dim
        projection = spec.attention_projection
        self.blocks = []
        for i, size in enumerate(spec.block_sizes):
            word = DeepAttentionBlock(f"block{i}.word", dim, size, self.dropout, self.rng, projection)
            sentence = DeepAttentionBlock(f"block{i}.sentence", size, size, self.dropout, self.rng, projection)
            self.blocks.append((word, sentence))
        self.shallow = SequenceEncoder("shallow", dim, spec.shallow_size, self.rng) if spec.shallow_size else None
        self.head = _Head(self.representation_size, spec.fc_width, spec.num_classes, self.dropout, self.rng)

    @property
    def representation_size(self) -> int:
        return sum(self.spec.block_sizes) + self.spec.shallow_size

    def _parameters(self) -> List[Parameter]:
        params = [p for word, sentence in self.blocks for p in word.parameters() + sentence.parameters()]
        if self.shallow is not None:
            params += self.shallow.parameters()
        return params + self.head.parameters()

    def forward(self, batch: Batch, rng: Optional[np.random.Generator] = None) -> Tensor:
        doc_index, sentence_index = np.nonzero(batch.sentence_mask)
        word_ids = batch.tokens[doc_index, sentence_index].T
        word_mask = batch.token_mask[doc_index, sentence_index].T
        word_inputs = self.embedding.forward(word_ids)
        sentence_mask = batch.sentence_mask.T
        grid_shape = sentence_mask.shape

        parts = []
        for word, sentence in self.blocks:
            vectors = word.forward(word_inputs, word_mask, rng)
            grid = np.zeros((*grid_shape, vectors.shape[1]))
            grid[sentence_index, doc_index] = vectors
            parts.append(sentence.forward(grid, sentence_mask, rng))

        shallow_cache = None
        if self.shallow is not None:
            outputs, final = self.shallow.forward(self.embedding.forward(batch.flat_tokens.T), batch.flat_mask.T)
            final, mask = self._dropout(final, rng)
            parts.append(final)
            shallow_cache = (outputs.shape, mask)

        self._cache = (batch, doc_index, sentence_index, word_ids, shallow_cache)
        return self.head.forward(np.concatenate(parts, axis=1), rng)

    def backward(self, d_logits: Tensor) -> None:
        batch, doc_index, sentence_index, word_ids, shallow_cache = self._cache
        d_doc = self.head.backward(d_logits)

        offset = 0
        d_word_inputs = None
        for word, sentence in self.blocks:
            size = word.output_size
            d_grid = sentence.backward(d_doc[:, offset:offset + size])
            d_inputs = word.backward(d_grid[sentence_index, doc_index])
            d_word_inputs = d_inputs if d_word_inputs is None else d_word_inputs + d_inputs
            offset += size
        self.embedding.backward(word_ids, d_word_inputs)

        if self.shallow is not None:
            outputs_shape, mask = shallow_cache
            d_final = dropout_backward(d_doc[:, offset:], mask)
            d_flat = self.shallow.backward(np.zeros(outputs_shape), d_final)
            self.embedding.backward(batch.flat_tokens.T, d_flat)


ARCHITECTURES = {
    "embedding-bag": EmbeddingBagClassifier,
    "deeptriage": DeepTriageClassifier,
    "han": HierarchicalClassifier,
    "proposed": HierarchicalClassifier,
}


def build_model(spec: ModelSpec, embeddings: EmbeddingTable, seed: int = 0) -> SequenceClassifier:
    try:
        architecture = ARCHITECTURES[spec.architecture]
    except KeyError:
        raise ConfigError(f"unknown architecture '{spec.architecture}'") from None
    return architecture(spec, embeddings, seed)
