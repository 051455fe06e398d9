import json

import pytest
from rich.console import Console

from core.benchmark import (
    PUBLISHED_REFERENCE,
    REFERENCE_TASKS,
    BenchmarkService,
    published_reference,
    print_report,
    render_markdown,
)
from schemas.bench import METHODS, BenchmarkConfig, BenchmarkReport, CellResult
from tests.conftest import FAST_SKIPGRAM, FAST_TRAIN, SMALL_MODELS

SINGLE_CELL_GRIDS = {
    "nb": {"alpha": [0.5]},
    "svm": {"lambda_": [1e-4]},
    "embedding-bag": {"learning_rate": [0.01]},
    "deeptriage": {"learning_rate": [0.01]},
    "han": {"learning_rate": [0.01]},
    "proposed": {"learning_rate": [0.01]},
}


def _config(path, **overrides):
    values = dict(
        datasets={"sep": str(path)},
        tasks=["sep:component"],
        vocabulary={"min_frequency": 1},
        skipgram=FAST_SKIPGRAM,
        train=FAST_TRAIN,
        models=SMALL_MODELS,
        grids=SINGLE_CELL_GRIDS,
    )
    values.update(overrides)
    return BenchmarkConfig.model_validate(values)


def test_reference_table_is_complete():
    reference = published_reference()
    assert len(reference) == 18
    assert {r.task for r in reference} == set(REFERENCE_TASKS)
    assert set(PUBLISHED_REFERENCE) == set(METHODS)
    proposed = [r for r in reference if r.method == "proposed" and r.task == "chromium:type"][0]
    assert (proposed.accuracy, proposed.weighted_f1) == (88.2, 0.879)


def test_every_method_learns_the_separable_corpus(session_separable_path, tmp_path):
    report = BenchmarkService(_config(session_separable_path)).run(tmp_path)
    assert [c.method for c in report.cells] == METHODS
    for cell in report.cells:
        assert cell.status == "ok", cell.error
        assert cell.accuracy >= 0.95, (cell.method, cell.accuracy)
        assert 0.0 <= cell.weighted_f1 <= 1.0
        assert [c.name for c in cell.per_class] == ["crash", "docs", "ui"]
        assert sum(c.support for c in cell.per_class) == 90

    saved = BenchmarkReport.model_validate_json((tmp_path / "report.json").read_text())
    assert saved == report
    markdown = (tmp_path / "report.md").read_text()
    assert "## Accuracy (%)" in markdown and "Multi-block attention + shallow GRU" in markdown


def _without_timings(report):
    payload = json.loads(report.model_dump_json())
    for cell in payload["cells"]:
        cell.pop("seconds")
    return payload


def test_reports_are_deterministic(session_separable_path):
    config = _config(session_separable_path, methods=["nb", "svm"], grids={}, seeds=[0, 1])
    first = BenchmarkService(config).run()
    second = BenchmarkService(config).run()
    assert _without_timings(first) == _without_timings(second)
    assert len(first.cells) == 4
    assert {c.seed for c in first.cells} == {0, 1}
    assert all(len(c.grid) == 3 for c in first.cells)


def test_bad_tasks_fail_their_cells_only(session_separable_path):
    config = _config(session_separable_path, methods=["nb"], tasks=["sep:severity", "other:component", "sep:component"])
    report = BenchmarkService(config).run()
    statuses = [(c.task, c.status) for c in report.cells]
    assert statuses == [("sep:severity", "failed"), ("other:component", "failed"), ("sep:component", "ok")]
    assert "unknown dataset" in report.cells[1].error


def test_failing_grid_cell_is_reported(session_separable_path):
    config = _config(session_separable_path, methods=["nb"], grids={"nb": {"alpha": [-1.0]}})
    cell = BenchmarkService(config).run().cells[0]
    assert cell.status == "failed" and "alpha" in cell.error


def test_config_rejects_malformed_tasks():
    with pytest.raises(ValueError):
        BenchmarkConfig(tasks=["no-colon"])
    with pytest.raises(ValueError):
        BenchmarkConfig(methods=["random-forest"])


def _report():
    cells = [
        CellResult(method="nb", task="archlinux:priority", seed=0, status="ok", accuracy=0.5, weighted_f1=0.4),
        CellResult(method="nb", task="archlinux:priority", seed=1, status="ok", accuracy=0.6, weighted_f1=0.5),
        CellResult(method="svm", task="archlinux:priority", seed=0, status="failed", error="boom"),
    ]
    return BenchmarkReport(seeds=[0, 1], notes=["a note"], cells=cells, reference=published_reference())


def test_markdown_averages_seeds_and_lists_failures():
    markdown = render_markdown(_report())
    assert "| Naive Bayes | 55.0 / 51.6 |" in markdown
    assert "| Naive Bayes | 0.450 / 0.479 |" in markdown
    assert "| TF-IDF + linear SVM | failed / 65.0 |" in markdown
    assert "- svm on archlinux:priority (seed 0): boom" in markdown
    assert markdown.rstrip().endswith("- a note")


def test_console_tables():
    console = Console(record=True, width=200)
    print_report(_report(), console)
    text = console.export_text()
    assert "Accuracy (%)" in text and "Weighted F1" in text and "55.0 / 51.6" in text
