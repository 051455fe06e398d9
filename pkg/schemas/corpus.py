from typing import Dict, List

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class DocumentRecord(BaseModel):
    """One line of a dataset file."""

    model_config = ConfigDict(extra="ignore")

    id: str = Field(..., min_length=1, description="Unique ticket identifier")
    title: str = Field(..., description="Ticket title")
    content: str = Field(..., description="Ticket body")
    labels: Dict[str, str] = Field(default_factory=dict, description="Field name -> class name")


class Document(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str = Field(..., min_length=1, description="Unique ticket identifier")
    title: str = Field("", description="Ticket title")
    body: str = Field("", description="Ticket body")
    labels: Dict[str, str] = Field(default_factory=dict, description="Field name -> class name")

    @classmethod
    def from_record(cls, record: DocumentRecord) -> "Document":
        labels = {}
        for field, value in record.labels.items():
            value = value.strip()
            if value:
                labels[field] = value
        return cls(id=record.id, title=record.title, body=record.content, labels=labels)


class ClassSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    names: List[str] = Field(..., description="Class names, position = class id")

    @field_validator("names")
    @classmethod
    def names_unique(cls, names: List[str]) -> List[str]:
        if len(set(names)) != len(names):
            raise ValueError("class names must be unique")
        return names

    @property
    def index(self) -> Dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}

    def id_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown class '{name}'") from None

    def __len__(self) -> int:
        return len(self.names)


class Split(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int = Field(..., description="Seed of the shuffle")
    test_fraction: float = Field(..., gt=0, lt=1, description="Share of labeled documents held out for test")
    train: List[str] = Field(..., description="Training document ids")
    test: List[str] = Field(..., description="Test document ids")

    @model_validator(mode="after")
    def disjoint(self) -> "Split":
        if set(self.train) & set(self.test):
            raise ValueError("train and test ids overlap")
        return self
