from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from models.vocabulary import Vocabulary


@dataclass(frozen=True, eq=False)
class SparseVector:
    indices: NDArray[np.int64]
    values: NDArray[np.float64]
    dim: int

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        if indices.shape != values.shape or indices.ndim != 1:
            raise ValueError("indices and values must be parallel 1-d arrays")
        if indices.size and (np.any(np.diff(indices) <= 0) or indices[0] < 0 or indices[-1] >= self.dim):
            raise ValueError(f"indices must be strictly increasing and below dim {self.dim}")
        if np.any(values == 0.0):
            raise ValueError("sparse vectors do not store zeros")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "values", values)

    @classmethod
    def empty(cls, dim: int) -> "SparseVector":
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0), dim)

    @classmethod
    def from_dict(cls, entries: dict, dim: int) -> "SparseVector":
        keys = sorted(k for k, v in entries.items() if v != 0)
        return cls(np.array(keys, dtype=np.int64), np.array([entries[k] for k in keys], dtype=np.float64), dim)

    def __len__(self) -> int:
        return int(self.indices.size)

    def as_dict(self) -> dict:
        return {int(i): float(v) for i, v in zip(self.indices, self.values)}

    def to_dense(self) -> NDArray[np.float64]:
        dense = np.zeros(self.dim)
        dense[self.indices] = self.values
        return dense

    def scaled(self, factor: float) -> "SparseVector":
        if factor == 0:
            return SparseVector.empty(self.dim)
        return SparseVector(self.indices, self.values * factor, self.dim)

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))


@dataclass(frozen=True, eq=False)
class TfidfModel:
    vocabulary: Vocabulary
    idf: NDArray[np.float64]
    doc_count: int

    def __post_init__(self):
        if self.idf.shape != (len(self.vocabulary),):
            raise ValueError(f"idf length {self.idf.size} does not match vocabulary size {len(self.vocabulary)}")

    @property
    def dim(self) -> int:
        return int(self.idf.size)

    @property
    def vocabulary_hash(self) -> str:
        return self.vocabulary.hash
