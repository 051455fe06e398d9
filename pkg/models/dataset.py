from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from schemas.corpus import ClassSet, Document


@dataclass(frozen=True)
class Dataset:
    documents: Tuple[Document, ...]
    fields: Dict[str, ClassSet]
    _by_id: Dict[str, Document] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {d.id: d for d in self.documents})

    def __len__(self) -> int:
        return len(self.documents)

    def get(self, doc_id: str) -> Document:
        return self._by_id[doc_id]

    def labeled(self, field_name: str) -> List[Document]:
        return [d for d in self.documents if field_name in d.labels]

    def label_ids(self, field_name: str, doc_ids: List[str]) -> List[int]:
        class_set = self.fields[field_name]
        return [class_set.id_of(self._by_id[i].labels[field_name]) for i in doc_ids]

    def __repr__(self):
        return f"<Dataset(documents={len(self.documents)}, fields={list(self.fields)})>"
