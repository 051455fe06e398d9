import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List

import numpy as np
import pytest

from core.corpus import load_dataset, make_split
from core.embeddings import train_skipgram
from core.methods import MethodContext
from core.nn import Parameter
from core.preprocess import Preprocessor, build_vocabulary, default_pipeline, encode_all
from models.embedding import EmbeddingTable
from models.vocabulary import OOV_TOKEN, PAD_TOKEN, Vocabulary
from schemas.embedding import SkipGramConfig
from schemas.model import TrainConfig
from schemas.preprocess import ProcessedDocument

CLASS_KEYWORDS = {
    "crash": ["kernel", "panic", "segfault", "crash", "oops", "backtrace"],
    "docs": ["manual", "typo", "wiki", "documentation", "guide", "tutorial"],
    "ui": ["button", "color", "font", "layout", "icon", "theme"],
}
FILLER = ["please", "update", "version", "system", "user", "report", "problem", "happens"]

TOPICS = {
    "hardware": ["kernel", "driver", "panic", "module", "crash", "memory"],
    "interface": ["button", "color", "font", "icon", "layout", "theme"],
}


def separable_records(n: int = 600, seed: int = 7) -> List[dict]:
    """Three classes, each marked by its own keywords in every sentence."""
    rng = np.random.default_rng(seed)
    classes = sorted(CLASS_KEYWORDS)
    records = []
    for i in range(n):
        label = classes[i % len(classes)]
        keywords = CLASS_KEYWORDS[label]

        def sentence(k: int) -> str:
            words = list(rng.choice(keywords, size=k)) + list(rng.choice(FILLER, size=2))
            rng.shuffle(words)
            return " ".join(words)

        body = ". ".join(sentence(3) for _ in range(int(rng.integers(1, 4)))) + "."
        records.append({
            "id": f"T-{i:04d}",
            "title": sentence(2),
            "content": body,
            "labels": {"component": label, "priority": ["high", "low"][int(rng.integers(0, 2))]},
        })
    return records


def write_jsonl(path: Path, records: List[dict]) -> Path:
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    return path


def topic_corpus(docs_per_topic: int = 100, length: int = 8, seed: int = 3):
    """Encoded two-topic corpus plus its vocabulary; topics never share a document."""
    rng = np.random.default_rng(seed)
    tokens = [PAD_TOKEN, OOV_TOKEN] + [w for words in TOPICS.values() for w in words]
    vocab_ids = {t: i for i, t in enumerate(tokens)}
    docs = []
    counts = {t: 0 for t in tokens[2:]}
    for _ in range(docs_per_topic):
        for words in TOPICS.values():
            sentence = list(rng.choice(words, size=length))
            for w in sentence:
                counts[w] += 1
            docs.append([[vocab_ids[w] for w in sentence]])
    return docs, Vocabulary(tokens, counts, min_frequency=1)


class CallableFragment:
    """Adapts forward/backward closures to the gradient checker."""

    def __init__(self, params: List[Parameter], forward: Callable[[], float], backward: Callable[[], None]):
        self._params = params
        self._forward = forward
        self._backward = backward

    def parameters(self) -> List[Parameter]:
        return self._params

    def forward(self) -> float:
        return self._forward()

    def backward(self) -> None:
        self._backward()


@pytest.fixture
def separable_path(tmp_path) -> Path:
    return write_jsonl(tmp_path / "separable.jsonl", separable_records())


@pytest.fixture(scope="session")
def session_separable_path(tmp_path_factory) -> Path:
    return write_jsonl(tmp_path_factory.mktemp("data") / "separable.jsonl", separable_records())


@pytest.fixture
def two_topic_corpus():
    return topic_corpus()


@dataclass
class SeparableTask:
    vocabulary: Vocabulary
    class_names: List[str]
    train_docs: List[ProcessedDocument]
    train_labels: List[int]
    test_docs: List[ProcessedDocument]
    test_labels: List[int]
    embeddings: EmbeddingTable

    def context(self, **train_overrides) -> MethodContext:
        return MethodContext(
            vocabulary=self.vocabulary,
            num_classes=len(self.class_names),
            embeddings=lambda: self.embeddings,
            train_config=TrainConfig(**{**FAST_TRAIN, **train_overrides}),
            model_overrides=dict(SMALL_MODELS),
        )


FAST_SKIPGRAM = dict(dim=16, window=3, negatives=3, epochs=5)
FAST_TRAIN = dict(batch_size=16, epochs=15, patience=5, optimizer={"learning_rate": 0.01})
SMALL_MODELS = {
    "embedding-bag": {"fine_tune_embeddings": True},
    "deeptriage": {"rnn_size": 8, "fc_width": 16, "dropout": 0.2, "fine_tune_embeddings": True},
    "han": {"block_sizes": [16], "dropout": 0.2, "fine_tune_embeddings": True},
    "proposed": {"block_sizes": [8, 16], "shallow_size": 8, "dropout": 0.2,
                 "fine_tune_embeddings": True},
}


@pytest.fixture(scope="session")
def separable_task(session_separable_path) -> SeparableTask:
    dataset = load_dataset(session_separable_path)
    preprocessor = Preprocessor(default_pipeline())
    processed = {d.id: preprocessor.process(d) for d in dataset.documents}
    split = make_split(dataset, "component", 0.15, seed=0)
    train_docs = [processed[i] for i in split.train]
    vocab = build_vocabulary(train_docs, min_frequency=1, max_size=50000)
    embeddings = train_skipgram(encode_all(train_docs, vocab), vocab, SkipGramConfig(seed=0, **FAST_SKIPGRAM))
    return SeparableTask(
        vocabulary=vocab,
        class_names=dataset.fields["component"].names,
        train_docs=train_docs,
        train_labels=dataset.label_ids("component", split.train),
        test_docs=[processed[i] for i in split.test],
        test_labels=dataset.label_ids("component", split.test),
        embeddings=embeddings,
    )
