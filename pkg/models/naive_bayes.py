from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

# prior of a class without training documents; never wins an argmax
NEVER_PREDICTED = -1e300


@dataclass(frozen=True, eq=False)
class NaiveBayesModel:
    class_log_prior: NDArray[np.float64]
    token_log_likelihood: NDArray[np.float64]
    alpha: float
    vocabulary_hash: str = ""

    @property
    def num_classes(self) -> int:
        return int(self.class_log_prior.size)

    @property
    def dim(self) -> int:
        return int(self.token_log_likelihood.shape[1])

    def __repr__(self):
        return f"<NaiveBayesModel(classes={self.num_classes}, dim={self.dim}, alpha={self.alpha})>"
