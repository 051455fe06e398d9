from pydantic import BaseModel, ConfigDict, Field


class SkipGramConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    dim: int = Field(100, ge=1, description="Embedding dimension")
    window: int = Field(5, ge=1, description="Context positions on each side of the center word")
    negatives: int = Field(5, ge=1, description="Negative samples per (center, context) pair")
    epochs: int = Field(5, ge=1, description="Passes over the corpus")
    learning_rate: float = Field(0.025, gt=0.0, description="Initial SGD step, decayed linearly to zero")
    seed: int = Field(0, description="Seed for initialisation, traversal and negative draws")
