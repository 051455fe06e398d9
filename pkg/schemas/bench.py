import itertools
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from schemas.embedding import SkipGramConfig
from schemas.model import TrainConfig
from schemas.preprocess import PipelineConfig, VocabularyConfig

MethodTag = Literal["nb", "svm", "embedding-bag", "deeptriage", "han", "proposed"]
METHODS: List[str] = ["nb", "svm", "embedding-bag", "deeptriage", "han", "proposed"]
NEURAL_METHODS = ("embedding-bag", "deeptriage", "han", "proposed")


class ClassMetrics(BaseModel):
    name: str
    precision: float = Field(..., ge=0.0, le=1.0)
    recall: float = Field(..., ge=0.0, le=1.0)
    f1: float = Field(..., ge=0.0, le=1.0)
    support: int = Field(..., ge=0)


class Metrics(BaseModel):
    accuracy: float = Field(..., ge=0.0, le=1.0)
    weighted_f1: float = Field(..., ge=0.0, le=1.0)
    per_class: List[ClassMetrics] = Field(default_factory=list)


class GridSearchSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    method: MethodTag
    grid: Dict[str, List[Any]] = Field(..., description="Hyperparameter -> candidates, in declared order")
    metric: Literal["accuracy"] = Field("accuracy", description="Validation score used to pick the winner")

    @field_validator("grid")
    @classmethod
    def candidates_present(cls, grid: Dict[str, List[Any]]) -> Dict[str, List[Any]]:
        if not grid:
            raise ValueError("grid must name at least one hyperparameter")
        empty = [name for name, values in grid.items() if not values]
        if empty:
            raise ValueError(f"hyperparameters without candidates: {empty}")
        return grid

    def cells(self) -> List[Dict[str, Any]]:
        """Every combination; the last hyperparameter varies fastest."""
        names = list(self.grid)
        return [dict(zip(names, values)) for values in itertools.product(*self.grid.values())]


class GridCellScore(BaseModel):
    index: int
    hyperparameters: Dict[str, Any]
    status: Literal["ok", "failed"]
    validation_accuracy: Optional[float] = None
    error: Optional[str] = None


class CellResult(BaseModel):
    method: str
    task: str
    seed: int
    status: Literal["ok", "failed"]
    hyperparameters: Dict[str, Any] = Field(default_factory=dict)
    accuracy: Optional[float] = None
    weighted_f1: Optional[float] = None
    per_class: List[ClassMetrics] = Field(default_factory=list)
    grid: List[GridCellScore] = Field(default_factory=list)
    seconds: float = 0.0
    error: Optional[str] = None


class ReferenceValue(BaseModel):
    method: str
    task: str
    accuracy: float = Field(..., description="Percent")
    weighted_f1: float


class BenchmarkReport(BaseModel):
    version: int = 1
    seeds: List[int]
    notes: List[str] = Field(default_factory=list)
    cells: List[CellResult] = Field(default_factory=list)
    reference: List[ReferenceValue] = Field(default_factory=list)


class BenchmarkConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    datasets: Dict[str, str] = Field(default_factory=dict, description="Dataset name -> JSON-lines path")
    schemas: Dict[str, List[str]] = Field(default_factory=dict, description="Dataset name -> label fields")
    expected_counts: Dict[str, int] = Field(default_factory=dict, description="Dataset name -> record count")
    tasks: List[str] = Field(default_factory=list, description="'dataset:field' pairs")
    methods: List[MethodTag] = Field(default_factory=lambda: list(METHODS))
    seeds: List[int] = Field(default_factory=lambda: [0])
    test_fraction: float = Field(0.15, gt=0.0, lt=1.0)
    validation_fraction: float = Field(0.15, gt=0.0, lt=1.0)
    pipeline: Optional[PipelineConfig] = Field(None, description="Defaults to the bundled stopwords and rules")
    vocabulary: VocabularyConfig = Field(default_factory=VocabularyConfig)
    skipgram: SkipGramConfig = Field(default_factory=SkipGramConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    models: Dict[MethodTag, Dict[str, Any]] = Field(default_factory=dict, description="Per-method ModelSpec overrides")
    grids: Dict[MethodTag, Dict[str, List[Any]]] = Field(default_factory=dict, description="Per-method grid overrides")
    workers: int = Field(1, ge=1, description="Threads for grid cells")

    @field_validator("tasks")
    @classmethod
    def tasks_well_formed(cls, tasks: List[str]) -> List[str]:
        for task in tasks:
            dataset, _, field = task.partition(":")
            if not dataset or not field:
                raise ValueError(f"task '{task}' must look like 'dataset:field'")
        return tasks
