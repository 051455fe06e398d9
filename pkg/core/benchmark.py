import logging
import threading
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from rich.console import Console
from rich.table import Table

from core.corpus import load_dataset, make_split
from core.embeddings import train_skipgram
from core.exceptions import ConfigError, LabelerError
from core.grid_search import grid_search
from core.methods import MethodContext, default_grid
from core.metrics import ConfusionMatrix, evaluate
from core.preprocess import Preprocessor, build_vocabulary, default_pipeline, encode_all
from core.rng import derive_seed
from crud.artifact import ArtifactRepository
from models.dataset import Dataset
from models.embedding import EmbeddingTable
from schemas.bench import BenchmarkConfig, BenchmarkReport, CellResult, GridSearchSpec, ReferenceValue
from schemas.preprocess import ProcessedDocument

logger = logging.getLogger(__name__)

REFERENCE_TASKS = ("archlinux:priority", "archlinux:product", "chromium:type")

# accuracy in percent and weighted F1, per method, in REFERENCE_TASKS order
PUBLISHED_REFERENCE: Dict[str, List[Tuple[float, float]]] = {
    "nb": [(51.6, 0.479), (45.6, 0.411), (80.5, 0.787)],
    "svm": [(65.0, 0.568), (61.6, 0.590), (80.5, 0.804)],
    "embedding-bag": [(64.2, 0.542), (58.7, 0.579), (82.2, 0.821)],
    "deeptriage": [(61.4, 0.516), (63.8, 0.604), (81.6, 0.816)],
    "han": [(66.4, 0.573), (58.9, 0.574), (75.9, 0.758)],
    "proposed": [(69.1, 0.579), (58.7, 0.567), (88.2, 0.879)],
}

METHOD_LABELS = {
    "nb": "Naive Bayes",
    "svm": "TF-IDF + linear SVM",
    "embedding-bag": "Embedding bag (fastText stand-in)",
    "deeptriage": "DeepTriage-style BiGRU",
    "han": "Hierarchical attention",
    "proposed": "Multi-block attention + shallow GRU",
}

REPORT_NOTES = [
    "Published reference values are shown for comparison only; they are not pass/fail targets.",
    "Naive Bayes is trained on the full training split.",
    "The embedding-bag model stands in for fastText, read as a bag-of-embeddings linear classifier.",
    "The DeepTriage-style model uses bidirectional GRU cells instead of LSTM cells.",
    "Grid search scores candidates on a seeded validation share of the training split, never on test.",
]


def published_reference() -> List[ReferenceValue]:
    return [
        ReferenceValue(method=method, task=task, accuracy=acc, weighted_f1=f1)
        for method, values in PUBLISHED_REFERENCE.items()
        for task, (acc, f1) in zip(REFERENCE_TASKS, values)
    ]


class _LazyEmbeddings:
    """Trains the skip-gram table on first use; safe to share across grid threads."""

    def __init__(self, factory: Callable[[], EmbeddingTable]):
        self._factory = factory
        self._table: Optional[EmbeddingTable] = None
        self._lock = threading.Lock()

    def __call__(self) -> EmbeddingTable:
        with self._lock:
            if self._table is None:
                self._table = self._factory()
            return self._table


class BenchmarkService:
    def __init__(self, config: BenchmarkConfig, artifacts: Optional[ArtifactRepository] = None):
        self.config = config
        self.artifacts = artifacts or ArtifactRepository()
        self.preprocessor = Preprocessor(config.pipeline or default_pipeline())
        self._datasets: Dict[str, Dataset] = {}
        self._processed: Dict[str, Dict[str, ProcessedDocument]] = {}

    def dataset(self, name: str) -> Dataset:
        if name not in self._datasets:
            if name not in self.config.datasets:
                raise ConfigError(f"task refers to unknown dataset '{name}'")
            self._datasets[name] = load_dataset(
                Path(self.config.datasets[name]),
                schema=self.config.schemas.get(name),
                expected_count=self.config.expected_counts.get(name),
            )
            self._processed[name] = {d.id: self.preprocessor.process(d) for d in self._datasets[name].documents}
        return self._datasets[name]

    def run(self, output_dir: Optional[Path] = None) -> BenchmarkReport:
        report = BenchmarkReport(seeds=list(self.config.seeds), notes=list(REPORT_NOTES), reference=published_reference())
        for seed in self.config.seeds:
            for task in self.config.tasks:
                report.cells.extend(self.run_task(task, seed))
        if output_dir is not None:
            self.write(report, Path(output_dir))
        return report

    def run_task(self, task: str, seed: int) -> List[CellResult]:
        dataset_name, _, field = task.partition(":")
        try:
            dataset = self.dataset(dataset_name)
            split = make_split(dataset, field, self.config.test_fraction, seed)
        except (LabelerError, ValueError) as e:
            logger.error("Task %s (seed %d) could not be prepared: %s", task, seed, e)
            return [CellResult(method=m, task=task, seed=seed, status="failed", error=str(e)) for m in self.config.methods]

        processed = self._processed[dataset_name]
        train_docs = [processed[i] for i in split.train]
        test_docs = [processed[i] for i in split.test]
        train_labels = dataset.label_ids(field, split.train)
        test_labels = dataset.label_ids(field, split.test)
        class_names = dataset.fields[field].names

        vocab = build_vocabulary(train_docs, self.config.vocabulary.min_frequency, self.config.vocabulary.max_size)
        logger.info("Task %s (seed %d): vocabulary of %d tokens", task, seed, len(vocab))
        skipgram = self.config.skipgram.model_copy(update={"seed": derive_seed(seed, task, "skipgram")})
        context = MethodContext(
            vocabulary=vocab,
            num_classes=len(class_names),
            embeddings=_LazyEmbeddings(lambda: train_skipgram(encode_all(train_docs, vocab), vocab, skipgram)),
            train_config=self.config.train,
            model_overrides=dict(self.config.models),
        )

        cells = []
        for method in self.config.methods:
            started = time.perf_counter()
            try:
                spec = GridSearchSpec(method=method, grid=self.config.grids.get(method) or default_grid(method))
                result = grid_search(spec, train_docs, train_labels, context, seed=derive_seed(seed, task, method),
                                     validation_fraction=self.config.validation_fraction, workers=self.config.workers)
                predicted = result.classifier.predict_many(test_docs)
                metrics = evaluate(ConfusionMatrix.from_predictions(test_labels, predicted, len(class_names)), class_names)
                cell = CellResult(
                    method=method, task=task, seed=seed, status="ok", hyperparameters=result.best,
                    accuracy=metrics.accuracy, weighted_f1=metrics.weighted_f1, per_class=metrics.per_class,
                    grid=result.scores, seconds=time.perf_counter() - started,
                )
                logger.info("%s on %s (seed %d): accuracy %.4f, weighted F1 %.4f in %.1fs",
                            method, task, seed, cell.accuracy, cell.weighted_f1, cell.seconds)
            except (LabelerError, ValueError) as e:
                logger.error("%s on %s (seed %d) failed: %s", method, task, seed, e)
                cell = CellResult(method=method, task=task, seed=seed, status="failed", error=str(e),
                                  seconds=time.perf_counter() - started)
            cells.append(cell)
        return cells

    def write(self, report: BenchmarkReport, output_dir: Path) -> None:
        output_dir.mkdir(parents=True, exist_ok=True)
        self.artifacts.save(report, output_dir / "report.json")
        (output_dir / "report.md").write_text(render_markdown(report), encoding="utf-8")
        logger.info("Wrote benchmark report to %s", output_dir)


def _mean_scores(report: BenchmarkReport) -> Dict[Tuple[str, str], Tuple[float, float]]:
    grouped: Dict[Tuple[str, str], List[CellResult]] = {}
    for cell in report.cells:
        if cell.status == "ok":
            grouped.setdefault((cell.method, cell.task), []).append(cell)
    return {
        key: (float(np.mean([c.accuracy for c in cells])), float(np.mean([c.weighted_f1 for c in cells])))
        for key, cells in grouped.items()
    }


def _layout(report: BenchmarkReport) -> Tuple[List[str], List[str]]:
    methods = list(dict.fromkeys(c.method for c in report.cells))
    tasks = list(dict.fromkeys(c.task for c in report.cells))
    return methods, tasks


def _table_rows(report: BenchmarkReport, metric: int) -> Tuple[List[str], List[List[str]]]:
    """Header and rows for one metric (0 = accuracy, 1 = weighted F1)."""
    methods, tasks = _layout(report)
    measured = _mean_scores(report)
    reference = {(r.method, r.task): (r.accuracy, r.weighted_f1) for r in report.reference}
    header = ["Method", *(f"{task} (measured / published)" for task in tasks)]
    rows = []
    for method in methods:
        row = [METHOD_LABELS.get(method, method)]
        for task in tasks:
            value = measured.get((method, task))
            if value is None:
                shown = "failed"
            else:
                shown = f"{100 * value[0]:.1f}" if metric == 0 else f"{value[1]:.3f}"
            published = reference.get((method, task))
            shown += " / " + (("{:.1f}" if metric == 0 else "{:.3f}").format(published[metric]) if published else "-")
            row.append(shown)
        rows.append(row)
    return header, rows


def render_markdown(report: BenchmarkReport) -> str:
    lines = [f"# Benchmark (seeds {', '.join(map(str, report.seeds))})", ""]
    for title, metric in (("Accuracy (%)", 0), ("Weighted F1", 1)):
        header, rows = _table_rows(report, metric)
        lines += [f"## {title}", "", "| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        lines += ["| " + " | ".join(row) + " |" for row in rows]
        lines.append("")
    failures = [c for c in report.cells if c.status == "failed"]
    if failures:
        lines += ["## Failures", ""]
        lines += [f"- {c.method} on {c.task} (seed {c.seed}): {c.error}" for c in failures]
        lines.append("")
    lines += ["## Notes", ""] + [f"- {note}" for note in report.notes]
    return "\n".join(lines) + "\n"


def print_report(report: BenchmarkReport, console: Optional[Console] = None) -> None:
    console = console or Console()
    for title, metric in (("Accuracy (%)", 0), ("Weighted F1", 1)):
        header, rows = _table_rows(report, metric)
        table = Table(title=title)
        for column in header:
            table.add_column(column)
        for row in rows:
            table.add_row(*row)
        console.print(table)
