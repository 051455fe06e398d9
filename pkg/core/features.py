from typing import Sequence

import numpy as np

from core.exceptions import ConfigError, ShapeError
from models.features import SparseVector, TfidfModel
from models.vocabulary import PAD_ID, Vocabulary
from schemas.preprocess import ProcessedDocument


def term_counts(doc: ProcessedDocument, vocab: Vocabulary) -> SparseVector:
    ids = np.fromiter((vocab.id_of(t) for t in doc.tokens()), dtype=np.int64)
    ids = ids[ids != PAD_ID]
    if ids.size == 0:
        return SparseVector.empty(len(vocab))
    indices, counts = np.unique(ids, return_counts=True)
    return SparseVector(indices, counts.astype(np.float64), len(vocab))


def fit_tfidf(docs: Sequence[ProcessedDocument], vocab: Vocabulary) -> TfidfModel:
    """Smoothed idf: ln((1 + N) / (1 + df)) + 1."""
    if not docs:
        raise ConfigError("cannot fit TF-IDF on an empty corpus")
    df = np.zeros(len(vocab))
    for doc in docs:
        df[term_counts(doc, vocab).indices] += 1.0
    n = len(docs)
    idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
    return TfidfModel(vocabulary=vocab, idf=idf, doc_count=n)


def weight_counts(counts: SparseVector, model: TfidfModel) -> SparseVector:
    if counts.dim != model.dim:
        raise ShapeError(f"count vector of dim {counts.dim} does not match TF-IDF dim {model.dim}")
    if len(counts) == 0:
        return counts
    raw = counts.values * model.idf[counts.indices]
    return SparseVector(counts.indices, raw / np.linalg.norm(raw), counts.dim)


def transform_tfidf(doc: ProcessedDocument, model: TfidfModel) -> SparseVector:
    return weight_counts(term_counts(doc, model.vocabulary), model)
