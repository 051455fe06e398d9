import hashlib
from typing import Dict, List, Sequence

from schemas.preprocess import VocabularyFile

PAD_TOKEN = "<pad>"
OOV_TOKEN = "<unk>"
PAD_ID = 0
OOV_ID = 1
RESERVED_TOKENS = (PAD_TOKEN, OOV_TOKEN)


def token_list_hash(tokens: Sequence[str]) -> str:
    return hashlib.sha256("\n".join(tokens).encode("utf-8")).hexdigest()


class Vocabulary:
    def __init__(self, tokens: Sequence[str], frequencies: Dict[str, int], min_frequency: int):
        if tuple(tokens[:2]) != RESERVED_TOKENS:
            raise ValueError(f"vocabulary must start with {RESERVED_TOKENS}")
        if len(set(tokens)) != len(tokens):
            raise ValueError("vocabulary tokens must be unique")
        self.id_to_token: List[str] = list(tokens)
        self.token_to_id: Dict[str, int] = {t: i for i, t in enumerate(self.id_to_token)}
        self.frequencies = dict(frequencies)
        self.min_frequency = min_frequency
        self._hash = token_list_hash(self.id_to_token)

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    @property
    def hash(self) -> str:
        return self._hash

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, OOV_ID)

    def decode(self, ids: Sequence[int]) -> List[str]:
        return [self.id_to_token[i] for i in ids]

    def to_file(self) -> VocabularyFile:
        return VocabularyFile(min_frequency=self.min_frequency, tokens=self.id_to_token, frequencies=self.frequencies)

    @classmethod
    def from_file(cls, record: VocabularyFile) -> "Vocabulary":
        return cls(record.tokens, record.frequencies, record.min_frequency)

    def __repr__(self):
        return f"<Vocabulary(size={len(self)}, min_frequency={self.min_frequency})>"
