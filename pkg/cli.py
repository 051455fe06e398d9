import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import click
import typer
import uvicorn
from pydantic import ValidationError
from rich.console import Console

from core.benchmark import BenchmarkService, print_report
from core.checkpoint import CheckpointService
from core.corpus import load_dataset, make_split
from core.embeddings import train_skipgram
from core.exceptions import DatasetError, LabelerError, VocabularyMismatchError
from core.grid_search import grid_search
from core.logs import configure_logging
from core.methods import MethodContext, default_grid
from core.metrics import ConfusionMatrix, evaluate as evaluate_metrics
from core.preprocess import Preprocessor, build_vocabulary, default_pipeline, encode_all
from core.rng import derive_seed
from crud.dataset import DatasetRepository
from crud.embedding import EmbeddingRepository
from main import create_app
from models.base import ModelBundle
from schemas.bench import METHODS, BenchmarkConfig, GridSearchSpec
from schemas.checkpoint import ModelCard
from schemas.corpus import Document, DocumentRecord

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="ticket-labeler",
    help="Bug ticket classification: preprocessing, embeddings, training, evaluation and benchmarks.",
    add_completion=False,
    pretty_exceptions_enable=False,
    no_args_is_help=True,
)

stdout = Console()

SeedOption = typer.Option(0, "--seed", help="Master seed for splits, initialisation and sampling")
ConfigOption = typer.Option(None, "--config", help="JSON configuration file", exists=True, dir_okay=False)
VerboseOption = typer.Option(False, "--verbose", "-v", help="Log at DEBUG level")


def _config(path: Optional[Path]) -> BenchmarkConfig:
    if path is None:
        return BenchmarkConfig()
    return BenchmarkConfig.model_validate_json(path.read_text(encoding="utf-8"))


def _pipeline(config: BenchmarkConfig):
    return config.pipeline or default_pipeline()


def _csv(value: Optional[str]) -> Optional[List[str]]:
    if value is None:
        return None
    return [part.strip() for part in value.split(",") if part.strip()]


def _emit(payload: dict, out: Optional[Path]) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n", encoding="utf-8")
    typer.echo(text)


@app.command()
def ingest(
    dataset: Path = typer.Argument(..., help="JSON-lines dataset file"),
    fields: Optional[str] = typer.Option(None, "--fields", help="Comma-separated label fields"),
    expected_count: Optional[int] = typer.Option(None, "--expected-count", help="Fail unless the file has this many records"),
    seed: int = SeedOption,
    config: Optional[Path] = ConfigOption,
    out: Optional[Path] = typer.Option(None, "--out", help="Write the summary JSON here"),
    verbose: bool = VerboseOption,
):
    """Validate a dataset file and summarise its label fields."""
    configure_logging(verbose)
    loaded = load_dataset(dataset, schema=_csv(fields), expected_count=expected_count)
    summary = {
        "documents": len(loaded),
        "fields": {name: {"classes": cs.names, "labeled": len(loaded.labeled(name))} for name, cs in loaded.fields.items()},
    }
    _emit(summary, out)


@app.command()
def preprocess(
    dataset: Path = typer.Argument(..., help="JSON-lines dataset file"),
    seed: int = SeedOption,
    config: Optional[Path] = ConfigOption,
    out: Path = typer.Option(..., "--out", help="Processed JSON-lines output"),
    verbose: bool = VerboseOption,
):
    """Clean, sentence-split and tokenize every document."""
    configure_logging(verbose)
    preprocessor = Preprocessor(_pipeline(_config(config)))
    loaded = load_dataset(dataset)
    DatasetRepository().write_processed((preprocessor.process(d) for d in loaded.documents), out)


@app.command("train-embeddings")
def train_embeddings(
    dataset: Path = typer.Argument(..., help="JSON-lines dataset file"),
    seed: int = SeedOption,
    config: Optional[Path] = ConfigOption,
    out: Path = typer.Option(..., "--out", help="word2vec text output"),
    verbose: bool = VerboseOption,
):
    """Train skip-gram embeddings on every document of a dataset."""
    configure_logging(verbose)
    settings = _config(config)
    preprocessor = Preprocessor(_pipeline(settings))
    docs = [preprocessor.process(d) for d in load_dataset(dataset).documents]
    vocab = build_vocabulary(docs, settings.vocabulary.min_frequency, settings.vocabulary.max_size)
    table = train_skipgram(encode_all(docs, vocab), vocab, settings.skipgram.model_copy(update={"seed": seed}))
    EmbeddingRepository().save(table, out)


@app.command()
def train(
    dataset: Path = typer.Argument(..., help="JSON-lines dataset file"),
    field: str = typer.Option(..., "--field", help="Label field to predict"),
    method: str = typer.Option(..., "--method", help=f"One of {', '.join(METHODS)}"),
    seed: int = SeedOption,
    config: Optional[Path] = ConfigOption,
    out: Path = typer.Option(..., "--out", help="Checkpoint directory"),
    verbose: bool = VerboseOption,
):
    """Grid-search and fit one method on the training split, then save a checkpoint."""
    configure_logging(verbose)
    if method not in METHODS:
        raise click.BadParameter(f"unknown method '{method}'", param_hint="--method")
    settings = _config(config)
    pipeline = _pipeline(settings)
    loaded = load_dataset(dataset)
    split = make_split(loaded, field, settings.test_fraction, seed)
    preprocessor = Preprocessor(pipeline)
    train_docs = [preprocessor.process(loaded.get(i)) for i in split.train]
    vocab = build_vocabulary(train_docs, settings.vocabulary.min_frequency, settings.vocabulary.max_size)
    class_names = loaded.fields[field].names
    skipgram = settings.skipgram.model_copy(update={"seed": derive_seed(seed, "skipgram")})
    context = MethodContext(
        vocabulary=vocab,
        num_classes=len(class_names),
        embeddings=lambda: train_skipgram(encode_all(train_docs, vocab), vocab, skipgram),
        train_config=settings.train,
        model_overrides=dict(settings.models),
    )
    spec = GridSearchSpec(method=method, grid=settings.grids.get(method) or default_grid(method))
    result = grid_search(spec, train_docs, loaded.label_ids(field, split.train), context,
                         seed=derive_seed(seed, method), validation_fraction=settings.validation_fraction,
                         workers=settings.workers)
    card = ModelCard(method=method, field=field, class_names=class_names, vocabulary_hash=vocab.hash,
                     hyperparameters=result.best, pipeline=pipeline)
    CheckpointService().save(ModelBundle(card=card, vocabulary=vocab, classifier=result.classifier), out)
    DatasetRepository().save_split(split, out / "split.json")


@app.command()
def evaluate(
    checkpoint: Path = typer.Argument(..., help="Checkpoint directory"),
    dataset: Path = typer.Argument(..., help="JSON-lines dataset file"),
    split_file: Optional[Path] = typer.Option(None, "--split", help="Split JSON; defaults to the checkpoint's split"),
    seed: int = SeedOption,
    config: Optional[Path] = ConfigOption,
    out: Optional[Path] = typer.Option(None, "--out", help="Write the metrics JSON here"),
    verbose: bool = VerboseOption,
):
    """Score a checkpoint on the test half of its split."""
    configure_logging(verbose)
    settings = _config(config)
    checkpoints = CheckpointService()
    card = checkpoints.load_card(checkpoint)
    loaded = load_dataset(dataset)
    if card.field not in loaded.fields:
        raise DatasetError(f"dataset has no label field '{card.field}'")
    repository = DatasetRepository()
    split_path = split_file or checkpoint / "split.json"
    split = repository.load_split(split_path) if split_path.exists() else make_split(
        loaded, card.field, settings.test_fraction, seed)

    preprocessor = Preprocessor(card.pipeline)
    train_docs = [preprocessor.process(loaded.get(i)) for i in split.train]
    vocab = build_vocabulary(train_docs, settings.vocabulary.min_frequency, settings.vocabulary.max_size)
    if vocab.hash != card.vocabulary_hash:
        raise VocabularyMismatchError(card.vocabulary_hash, vocab.hash, "checkpoint")
    if loaded.fields[card.field].names != card.class_names:
        raise LabelerError(f"dataset classes for '{card.field}' differ from the checkpoint's classes")

    bundle = checkpoints.load(checkpoint)
    test_docs = [preprocessor.process(loaded.get(i)) for i in split.test]
    predicted = bundle.classifier.predict_many(test_docs)
    cm = ConfusionMatrix.from_predictions(loaded.label_ids(card.field, split.test), predicted, len(card.class_names))
    _emit(evaluate_metrics(cm, card.class_names).model_dump(), out)


@app.command()
def predict(
    checkpoint: Path = typer.Argument(..., help="Checkpoint directory"),
    input_file: Optional[Path] = typer.Option(None, "--input", help="One-line JSON document; stdin when omitted"),
    seed: int = SeedOption,
    config: Optional[Path] = ConfigOption,
    out: Optional[Path] = typer.Option(None, "--out", help="Write the prediction JSON here"),
    verbose: bool = VerboseOption,
):
    """Label one {"title", "content"} document."""
    configure_logging(verbose)
    try:
        raw = input_file.read_text(encoding="utf-8") if input_file is not None else sys.stdin.read()
    except (OSError, UnicodeDecodeError) as e:
        raise click.BadParameter(f"cannot read input: {e}", param_hint="--input") from None
    try:
        payload = json.loads(raw.strip() or "{}")
    except json.JSONDecodeError as e:
        raise click.UsageError(f"input is not valid JSON: {e.msg}") from None
    if not isinstance(payload, dict):
        raise click.UsageError("input must be a JSON object")
    record = DocumentRecord.model_validate({"id": "input", "title": "", "content": "", **payload})
    bundle = CheckpointService().load(checkpoint)
    document = Document.from_record(record)
    class_id, probabilities = bundle.classifier.predict(Preprocessor(bundle.card.pipeline).process(document))
    _emit({
        "field": bundle.card.field,
        "label": bundle.card.class_names[class_id],
        "class_id": class_id,
        "probabilities": dict(zip(bundle.card.class_names, probabilities)),
    }, out)


@app.command()
def benchmark(
    methods: Optional[str] = typer.Option(None, "--methods", help="Comma-separated method tags"),
    tasks: Optional[str] = typer.Option(None, "--tasks", help="Comma-separated dataset:field tasks"),
    seeds: Optional[str] = typer.Option(None, "--seeds", help="Comma-separated seeds; overrides --seed"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Single master seed"),
    config: Optional[Path] = ConfigOption,
    out: Optional[Path] = typer.Option(None, "--out", help="Directory for report.json and report.md"),
    verbose: bool = VerboseOption,
):
    """Run every (method, task, seed) cell and render the comparison tables."""
    configure_logging(verbose)
    settings = _config(config)
    update = {}
    if methods is not None:
        update["methods"] = _csv(methods)
    if tasks is not None:
        update["tasks"] = _csv(tasks)
    if seeds is not None:
        try:
            update["seeds"] = [int(s) for s in _csv(seeds)]
        except ValueError:
            raise click.BadParameter(f"seeds must be integers, got '{seeds}'", param_hint="--seeds") from None
    elif seed is not None:
        update["seeds"] = [seed]
    settings = BenchmarkConfig.model_validate({**settings.model_dump(), **update})
    report = BenchmarkService(settings).run(out)
    print_report(report, stdout)


@app.command()
def serve(
    checkpoint: Path = typer.Argument(..., help="Checkpoint directory"),
    host: str = typer.Option("localhost", "--host"),
    port: int = typer.Option(8900, "--port"),
    verbose: bool = VerboseOption,
):
    """Serve predictions for a checkpoint over HTTP."""
    configure_logging(verbose)
    uvicorn.run(create_app(checkpoint), host=host, port=port)


def main(argv: Optional[List[str]] = None) -> int:
    """Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure."""
    command = typer.main.get_command(app)
    try:
        command.main(args=argv, prog_name="ticket-labeler", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except ValidationError as e:
        typer.echo(f"Error: invalid configuration: {e}", err=True)
        return 1
    except LabelerError as e:
        typer.echo(f"Error: {e}", err=True)
        return 2
    except OSError as e:
        typer.echo(f"Error: {e}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
