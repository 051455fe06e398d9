from typing import Dict, List

from pydantic import BaseModel, Field


class TicketIn(BaseModel):
    title: str = Field("", description="Ticket title")
    content: str = Field("", description="Ticket body")


class Prediction(BaseModel):
    field: str = Field(..., description="Label field the model predicts")
    label: str = Field(..., description="Most probable class name")
    class_id: int = Field(..., ge=0)
    probabilities: Dict[str, float] = Field(..., description="Class name -> probability")


class ModelSummary(BaseModel):
    method: str
    field: str
    class_names: List[str]
    vocabulary_hash: str
