import logging
from pathlib import Path

import numpy as np

from core.exceptions import EmbeddingFormatError
from models.embedding import EmbeddingTable
from models.vocabulary import token_list_hash

logger = logging.getLogger(__name__)


class EmbeddingRepository:
    """word2vec text format: a "V d" header, then one "token v1 ... vd" line per row."""

    def save(self, table: EmbeddingTable, path: Path) -> None:
        with Path(path).open("w", encoding="utf-8") as handle:
            handle.write(f"{table.size} {table.dim}\n")
            for token, row in zip(table.tokens, table.matrix):
                handle.write(token + " " + " ".join(repr(float(v)) for v in row) + "\n")
        logger.info("Saved %d x %d embeddings to %s", table.size, table.dim, path)

    def load(self, path: Path) -> EmbeddingTable:
        path = Path(path)
        if not path.exists():
            raise EmbeddingFormatError(f"embedding file {path} does not exist")
        with path.open("r", encoding="utf-8") as handle:
            lines = [line.rstrip("\n") for line in handle]
        if not lines:
            raise EmbeddingFormatError("missing header", 1)

        header = lines[0].split()
        if len(header) != 2 or not all(part.isdigit() for part in header):
            raise EmbeddingFormatError(f"header must be 'V d', got {lines[0]!r}", 1)
        size, dim = int(header[0]), int(header[1])
        body = [(n, line) for n, line in enumerate(lines[1:], start=2) if line.strip()]
        if len(body) != size:
            raise EmbeddingFormatError(f"header announces {size} rows but the file has {len(body)}")

        tokens = []
        matrix = np.zeros((size, dim))
        for row, (line_number, line) in enumerate(body):
            parts = line.split(" ")
            if len(parts) != dim + 1:
                raise EmbeddingFormatError(f"expected a token and {dim} values, got {len(parts) - 1} values", line_number)
            try:
                matrix[row] = [float(v) for v in parts[1:]]
            except ValueError:
                raise EmbeddingFormatError("non-numeric embedding value", line_number) from None
            if not np.all(np.isfinite(matrix[row])):
                raise EmbeddingFormatError("non-finite embedding value", line_number)
            tokens.append(parts[0])
        if len(set(tokens)) != len(tokens):
            raise EmbeddingFormatError("duplicate tokens in embedding file")
        return EmbeddingTable(matrix, tokens, token_list_hash(tokens))
