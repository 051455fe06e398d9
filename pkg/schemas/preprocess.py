import re
from functools import reduce
from typing import Dict, List, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class GarbageRule(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = Field(..., min_length=1, description="Rule name, used in logs")
    pattern: str = Field(..., description="Regular expression; matches are deleted before tokenization")
    flags: List[Literal["IGNORECASE", "MULTILINE", "DOTALL"]] = Field(
        default_factory=lambda: ["IGNORECASE", "MULTILINE"],
        description="re flags the pattern is compiled with; leave out IGNORECASE for a case-sensitive rule",
    )

    @model_validator(mode="after")
    def pattern_compiles(self) -> "GarbageRule":
        try:
            self.compile()
        except re.error as e:
            raise ValueError(f"pattern does not compile: {e}") from None
        return self

    def compile(self) -> re.Pattern:
        return re.compile(self.pattern, reduce(lambda acc, name: acc | re.RegexFlag[name], self.flags, re.RegexFlag(0)))


class PipelineConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    stopwords: List[str] = Field(default_factory=list, description="Tokens removed after lowercasing")
    garbage_rules: List[GarbageRule] = Field(default_factory=list, description="Applied in order")
    max_sentences: int = Field(30, ge=1, description="Sentence cap per document")
    max_tokens_per_sentence: int = Field(60, ge=1, description="Token cap per sentence")

    @field_validator("stopwords")
    @classmethod
    def normalize_stopwords(cls, stopwords: List[str]) -> List[str]:
        return sorted({w.strip().lower() for w in stopwords if w.strip()})


class ProcessedDocument(BaseModel):
    model_config = ConfigDict(frozen=True)

    doc_id: str = Field(..., description="Id of the source document")
    sentences: List[List[str]] = Field(..., description="Lowercased tokens grouped by sentence")

    def tokens(self) -> List[str]:
        return [token for sentence in self.sentences for token in sentence]


class VocabularyConfig(BaseModel):
    min_frequency: int = Field(2, ge=1, description="Minimum corpus frequency of a kept token")
    max_size: int = Field(50000, ge=1, description="Maximum number of non-reserved tokens")


class VocabularyFile(BaseModel):
    version: int = Field(1, description="File format version")
    min_frequency: int
    tokens: List[str] = Field(..., description="Token strings in id order, reserved tokens first")
    frequencies: Dict[str, int] = Field(default_factory=dict)
