from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class DropoutSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    p: float = Field(0.5, ge=0.0, lt=1.0, description="Drop probability")
    mode: Literal["train", "eval"] = Field("train", description="Eval mode is the identity")
    seed: int = Field(0, description="Seed for standalone mask draws")


class RmsPropConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    learning_rate: float = Field(0.001, gt=0.0, description="Step size")
    decay: float = Field(0.9, gt=0.0, lt=1.0, description="Running average factor for squared gradients")
    epsilon: float = Field(1e-8, gt=0.0, description="Denominator floor")
