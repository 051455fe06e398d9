import json
import logging
from pathlib import Path
from typing import Iterable, Iterator, List, Tuple

from pydantic import ValidationError

from core.exceptions import DatasetError, DatasetFormatError
from schemas.corpus import DocumentRecord, Split
from schemas.preprocess import ProcessedDocument

logger = logging.getLogger(__name__)


class DatasetRepository:
    def read_records(self, path: Path) -> Iterator[Tuple[int, DocumentRecord]]:
        path = Path(path)
        if not path.exists():
            raise DatasetError(f"dataset file {path} does not exist")
        with path.open("rb") as handle:
            for line_number, raw_line in enumerate(handle, start=1):
                try:
                    line = raw_line.decode("utf-8").strip()
                except UnicodeDecodeError as e:
                    raise DatasetFormatError(f"invalid UTF-8 at byte {e.start}", line_number) from None
                if not line:
                    continue
                try:
                    payload = json.loads(line)
                except json.JSONDecodeError as e:
                    raise DatasetFormatError(f"invalid JSON ({e.msg})", line_number) from None
                if not isinstance(payload, dict):
                    raise DatasetFormatError("expected a JSON object", line_number)
                try:
                    yield line_number, DocumentRecord.model_validate(payload)
                except ValidationError as e:
                    problems = "; ".join(f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors())
                    raise DatasetFormatError(problems, line_number) from None

    def save_split(self, split: Split, path: Path) -> None:
        Path(path).write_text(split.model_dump_json(indent=2), encoding="utf-8")

    def load_split(self, path: Path) -> Split:
        return Split.model_validate_json(Path(path).read_text(encoding="utf-8"))

    def write_processed(self, documents: Iterable[ProcessedDocument], path: Path) -> int:
        count = 0
        with Path(path).open("w", encoding="utf-8") as handle:
            for document in documents:
                handle.write(document.model_dump_json() + "\n")
                count += 1
        logger.info("Wrote %d processed documents to %s", count, path)
        return count

    def read_processed(self, path: Path) -> List[ProcessedDocument]:
        with Path(path).open("r", encoding="utf-8") as handle:
            return [ProcessedDocument.model_validate_json(line) for line in handle if line.strip()]
