from dataclasses import dataclass, field
from typing import List

import numpy as np
from numpy.typing import NDArray


@dataclass(frozen=True, eq=False)
class LinearSvmModel:
    weights: NDArray[np.float64]
    bias: NDArray[np.float64]
    lambda_: float
    epochs: int
    objective_history: List[float] = field(default_factory=list)
    vocabulary_hash: str = ""

    @property
    def num_classes(self) -> int:
        return int(self.bias.size)

    @property
    def dim(self) -> int:
        return int(self.weights.shape[1])

    def __repr__(self):
        return f"<LinearSvmModel(classes={self.num_classes}, dim={self.dim}, lambda={self.lambda_})>"
