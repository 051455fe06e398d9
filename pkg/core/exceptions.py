from typing import Optional


class LabelerError(Exception):
    """Root of every error raised by the labeling toolkit."""


class ConfigError(LabelerError, ValueError):
    pass


class DatasetError(LabelerError, ValueError):
    pass


class DatasetFormatError(DatasetError):
    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{prefix}{message}")


class DuplicateDocumentError(DatasetError):
    pass


class EmptyDatasetError(DatasetError):
    pass


class SplitError(LabelerError, ValueError):
    pass


class ShapeError(LabelerError, ValueError):
    pass


class LabelError(LabelerError, ValueError):
    pass


class TrainingError(LabelerError):
    pass


class TrainingDivergedError(TrainingError):
    def __init__(self, epoch: int, batch: int, loss: float):
        self.epoch = epoch
        self.batch = batch
        self.loss = loss
        super().__init__(f"non-finite loss {loss} at epoch {epoch}, batch {batch}")


class NonFiniteGradientError(TrainingError):
    def __init__(self, parameter_name: str):
        self.parameter_name = parameter_name
        super().__init__(f"non-finite gradient in parameter '{parameter_name}'")


class GridSearchError(LabelerError):
    pass


class CheckpointFormatError(LabelerError, ValueError):
    pass


class EmbeddingFormatError(LabelerError, ValueError):
    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{prefix}{message}")


class VocabularyMismatchError(LabelerError):
    def __init__(self, expected: str, actual: str, what: str = "artifact"):
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"{what} was built for vocabulary {expected[:12]}… but the current vocabulary is {actual[:12]}…"
        )
