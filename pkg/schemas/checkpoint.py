from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from schemas.bench import MethodTag
from schemas.model import ModelSpec
from schemas.preprocess import PipelineConfig

CHECKPOINT_VERSION = 1


class ModelCard(BaseModel):
    """Sidecar describing a saved checkpoint directory."""

    version: int = Field(CHECKPOINT_VERSION, description="Checkpoint layout version")
    method: MethodTag
    field: str = Field(..., description="Label field the model predicts")
    class_names: List[str] = Field(..., min_length=1, description="Class names, position = class id")
    vocabulary_hash: str
    embedding_hash: Optional[str] = Field(None, description="sha256 of the embedding file, neural methods only")
    spec: Optional[ModelSpec] = Field(None, description="Architecture of neural methods")
    hyperparameters: Dict[str, Any] = Field(default_factory=dict)
    pipeline: PipelineConfig


class NaiveBayesFile(BaseModel):
    version: int = CHECKPOINT_VERSION
    vocabulary_hash: str
    alpha: float
    class_log_prior: List[float]
    token_log_likelihood: List[List[float]]


class TfidfFile(BaseModel):
    version: int = CHECKPOINT_VERSION
    vocabulary_hash: str
    doc_count: int
    idf: List[float]


class LinearSvmFile(BaseModel):
    version: int = CHECKPOINT_VERSION
    vocabulary_hash: str
    lambda_: float
    epochs: int
    weights: List[List[float]]
    bias: List[float]
    objective_history: List[float] = Field(default_factory=list)
