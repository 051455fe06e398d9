import json
import logging
import re
from collections import Counter
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

from core.exceptions import ConfigError
from models.vocabulary import OOV_TOKEN, PAD_TOKEN, RESERVED_TOKENS, Vocabulary
from schemas.corpus import Document
from schemas.preprocess import GarbageRule, PipelineConfig, ProcessedDocument

logger = logging.getLogger(__name__)

RESOURCES_DIR = Path(__file__).resolve().parent.parent / "resources"
STOPWORDS_PATH = RESOURCES_DIR / "stopwords_en.txt"
GARBAGE_RULES_PATH = RESOURCES_DIR / "garbage_rules.json"
STOPWORDS_VERSION = "en-1"

SENTENCE_BOUNDARY = re.compile(r"(?:[.!?](?=\s|$)|\n)")
TOKEN = re.compile(r"[^\W_]+")

EncodedDocument = List[List[int]]


def load_stopwords(path: Path = STOPWORDS_PATH) -> List[str]:
    with Path(path).open("r", encoding="utf-8") as handle:
        return [line.strip() for line in handle if line.strip()]


def load_garbage_rules(path: Path = GARBAGE_RULES_PATH) -> List[GarbageRule]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"garbage rules file {path} is not valid JSON: {e.msg}") from None
    if not isinstance(payload, list):
        raise ConfigError(f"garbage rules file {path} must contain a JSON list")
    return [GarbageRule.model_validate(item) for item in payload]


def default_pipeline(**overrides) -> PipelineConfig:
    values = {"stopwords": load_stopwords(), "garbage_rules": load_garbage_rules()}
    values.update(overrides)
    return PipelineConfig(**values)


class Preprocessor:
    """Garbage rules run in order on the raw text, each with its own flags, before lowercasing."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.stopwords = frozenset(config.stopwords)
        self.rules = [(rule.name, rule.compile()) for rule in config.garbage_rules]

    def clean(self, text: str) -> str:
        for _, pattern in self.rules:
            text = pattern.sub(" ", text)
        return text.lower()

    def sentence_tokens(self, text: str) -> List[List[str]]:
        sentences = []
        for chunk in SENTENCE_BOUNDARY.split(text):
            tokens = [t for t in TOKEN.findall(chunk) if t not in self.stopwords]
            if tokens:
                sentences.append(tokens)
        return sentences

    def process(self, doc: Document) -> ProcessedDocument:
        sentences = []
        title_tokens = [t for t in TOKEN.findall(self.clean(doc.title)) if t not in self.stopwords]
        if title_tokens:
            sentences.append(title_tokens)
        sentences.extend(self.sentence_tokens(self.clean(doc.body)))

        sentences = [s[: self.config.max_tokens_per_sentence] for s in sentences[: self.config.max_sentences]]
        if not sentences:
            sentences = [[OOV_TOKEN]]
        return ProcessedDocument(doc_id=doc.id, sentences=sentences)


def preprocess_document(doc: Document, config: PipelineConfig) -> ProcessedDocument:
    return Preprocessor(config).process(doc)


def preprocess_documents(docs: Iterable[Document], config: PipelineConfig) -> List[ProcessedDocument]:
    preprocessor = Preprocessor(config)
    return [preprocessor.process(doc) for doc in docs]


def build_vocabulary(docs: Sequence[ProcessedDocument], min_frequency: int, max_size: int) -> Vocabulary:
    if max_size < 1:
        raise ConfigError(f"vocabulary max_size must be at least 1, got {max_size}")
    if not docs:
        raise ConfigError("cannot build a vocabulary from an empty corpus")

    counts = Counter(t for doc in docs for t in doc.tokens() if t not in RESERVED_TOKENS)
    eligible = [(token, n) for token, n in counts.items() if n >= min_frequency]
    eligible.sort(key=lambda item: (-item[1], item[0]))
    kept = eligible[:max_size]

    vocabulary = Vocabulary(
        tokens=[PAD_TOKEN, OOV_TOKEN] + [token for token, _ in kept],
        frequencies=dict(kept),
        min_frequency=min_frequency,
    )
    logger.info("Built vocabulary of %d tokens (%d distinct seen)", len(vocabulary), len(counts))
    return vocabulary


def encode(doc: ProcessedDocument, vocab: Vocabulary) -> EncodedDocument:
    return [[vocab.id_of(token) for token in sentence] for sentence in doc.sentences]


def encode_all(docs: Iterable[ProcessedDocument], vocab: Vocabulary) -> List[EncodedDocument]:
    return [encode(doc, vocab) for doc in docs]


def flatten_text(doc: ProcessedDocument) -> Document:
    """Rebuild a raw document from processed sentences (first sentence as title)."""
    sentences = [" ".join(s) for s in doc.sentences]
    title = sentences[0] if sentences else ""
    body = ". ".join(sentences[1:]) + ("." if len(sentences) > 1 else "")
    return Document(id=doc.doc_id, title=title, body=body)
