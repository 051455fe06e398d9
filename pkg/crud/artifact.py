import logging
from pathlib import Path
from typing import Type, TypeVar

from pydantic import BaseModel, ValidationError

from core.exceptions import CheckpointFormatError

logger = logging.getLogger(__name__)

Record = TypeVar("Record", bound=BaseModel)


class ArtifactRepository:
    """JSON files holding one pydantic record each."""

    def save(self, record: BaseModel, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(record.model_dump_json(indent=2), encoding="utf-8")
        logger.debug("Wrote %s to %s", type(record).__name__, path)

    def load(self, schema: Type[Record], path: Path) -> Record:
        path = Path(path)
        if not path.exists():
            raise CheckpointFormatError(f"artifact file {path} does not exist")
        try:
            return schema.model_validate_json(path.read_text(encoding="utf-8"))
        except ValidationError as e:
            raise CheckpointFormatError(f"{path.name} is not a valid {schema.__name__}: {e.error_count()} errors") from None
