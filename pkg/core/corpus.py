import logging
import math
from collections import Counter
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from core.exceptions import DatasetError, DuplicateDocumentError, EmptyDatasetError, SplitError
from core.rng import XorShift64Star
from crud.dataset import DatasetRepository
from models.dataset import Dataset
from schemas.corpus import ClassSet, Document, Split

logger = logging.getLogger(__name__)


def load_dataset(
    path: Path,
    schema: Optional[Sequence[str]] = None,
    repository: Optional[DatasetRepository] = None,
    expected_count: Optional[int] = None,
) -> Dataset:
    """Load a JSON-lines ticket file.

    Class sets are built from the observed label values of every field in `schema`
    (all observed fields when no schema is given), sorted lexicographically.
    """
    repository = repository or DatasetRepository()
    documents: List[Document] = []
    seen = set()
    for line_number, record in repository.read_records(path):
        if record.id in seen:
            raise DuplicateDocumentError(f"line {line_number}: duplicate document id '{record.id}'")
        seen.add(record.id)
        documents.append(Document.from_record(record))

    if not documents:
        raise EmptyDatasetError(f"dataset file {path} contains no records")
    if expected_count is not None and len(documents) != expected_count:
        raise DatasetError(f"dataset file {path} has {len(documents)} records, expected {expected_count}")

    field_names = list(schema) if schema is not None else sorted({f for d in documents for f in d.labels})
    fields: Dict[str, ClassSet] = {}
    for field_name in field_names:
        values = sorted({d.labels[field_name] for d in documents if field_name in d.labels})
        fields[field_name] = ClassSet(names=values)

    dataset = Dataset(documents=tuple(documents), fields=fields)
    logger.info(
        "Loaded %d documents from %s (%s)",
        len(documents),
        path,
        ", ".join(f"{name}: {len(cs)} classes" for name, cs in fields.items()) or "no label fields",
    )
    return dataset


def held_out_count(total: int, fraction: float) -> int:
    return int(math.floor(fraction * total + 0.5))


def make_split(dataset: Dataset, field: str, test_fraction: float, seed: int) -> Split:
    if field not in dataset.fields:
        raise SplitError(f"field '{field}' is not part of the dataset schema")
    if not 0.0 < test_fraction < 1.0:
        raise SplitError(f"test fraction must lie in (0, 1), got {test_fraction}")

    ids = [d.id for d in dataset.labeled(field)]
    if len(ids) < 2:
        raise SplitError(f"field '{field}' needs at least 2 labeled documents, found {len(ids)}")

    XorShift64Star(seed).shuffle(ids)
    n_test = held_out_count(len(ids), test_fraction)
    if n_test < 1:
        raise SplitError(f"test fraction {test_fraction} of {len(ids)} documents leaves no test document")
    if n_test >= len(ids):
        raise SplitError(f"test fraction {test_fraction} of {len(ids)} documents leaves no training document")

    split = Split(seed=seed, test_fraction=test_fraction, train=ids[n_test:], test=ids[:n_test])
    logger.info(
        "Split '%s' (seed %d): train %s, test %s",
        field,
        seed,
        dict(class_distribution(dataset, field, split.train)),
        dict(class_distribution(dataset, field, split.test)),
    )
    return split


def class_distribution(dataset: Dataset, field: str, doc_ids: Sequence[str]) -> Counter:
    return Counter(dataset.get(i).labels[field] for i in doc_ids)
