from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from schemas.nn import RmsPropConfig

Architecture = Literal["embedding-bag", "deeptriage", "han", "proposed"]

DEFAULT_BLOCK_SIZES = {"han": [64], "proposed": [32, 64, 128]}
DEFAULT_FC_WIDTH = {"deeptriage": 64}


class ModelSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    architecture: Architecture
    num_classes: int = Field(..., ge=2, description="Number of output classes")
    block_sizes: Optional[List[int]] = Field(None, description="GRU size of each deep attention block")
    shallow_size: int = Field(64, ge=0, description="Shallow GRU size; 0 removes the shallow path")
    fc_width: Optional[int] = Field(
        None, ge=0, description="Hidden fully-connected width; 0 maps straight to the classes. Defaults to 64 for deeptriage, 0 otherwise"
    )
    rnn_size: int = Field(64, ge=1, description="Bidirectional GRU size of the flat-sequence model")
    dropout: float = Field(0.5, ge=0.0, lt=1.0, description="Dropout between stacked layers")
    attention_projection: bool = Field(False, description="Apply a tanh projection before attention scores")
    fine_tune_embeddings: bool = Field(False, description="Update word embeddings during training")

    @model_validator(mode="after")
    def resolve_architecture(self) -> "ModelSpec":
        if self.fc_width is None:
            object.__setattr__(self, "fc_width", DEFAULT_FC_WIDTH.get(self.architecture, 0))
        if self.architecture in DEFAULT_BLOCK_SIZES:
            if self.block_sizes is None:
                object.__setattr__(self, "block_sizes", list(DEFAULT_BLOCK_SIZES[self.architecture]))
            if not self.block_sizes or any(size < 1 for size in self.block_sizes):
                raise ValueError("hierarchical models need at least one positive block size")
        if self.architecture == "han":
            if len(self.block_sizes) != 1:
                raise ValueError("the hierarchical attention network has exactly one block")
            object.__setattr__(self, "shallow_size", 0)
            object.__setattr__(self, "fc_width", 0)
        if self.architecture == "deeptriage" and self.fc_width < 1:
            raise ValueError("the flat-sequence model needs a hidden fully-connected layer")
        return self


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    batch_size: int = Field(32, ge=1, description="Documents per mini-batch")
    epochs: int = Field(30, ge=1, description="Maximum passes over the training documents")
    patience: int = Field(5, ge=1, description="Epochs without validation improvement before stopping")
    validation_fraction: float = Field(0.15, gt=0.0, lt=1.0, description="Share of train held out for early stopping")
    optimizer: RmsPropConfig = Field(default_factory=RmsPropConfig)
    seed: int = Field(0, description="Seed for initialisation, shuffling and dropout")
