from dataclasses import dataclass, field
from typing import List

import numpy as np
from numpy.typing import NDArray


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    matrix: NDArray[np.float64]
    tokens: List[str]
    vocabulary_hash: str = ""
    loss_history: List[float] = field(default_factory=list)

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[0] != len(self.tokens):
            raise ValueError(f"embedding matrix of shape {self.matrix.shape} does not fit {len(self.tokens)} tokens")

    @property
    def size(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def __repr__(self):
        return f"<EmbeddingTable(size={self.size}, dim={self.dim})>"
