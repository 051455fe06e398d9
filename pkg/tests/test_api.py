import pytest
from fastapi.testclient import TestClient

from core.checkpoint import CheckpointService
from core.methods import fit_method
from core.preprocess import default_pipeline
from main import create_app
from models.base import ModelBundle
from schemas.checkpoint import ModelCard


@pytest.fixture(scope="module")
def checkpoint_dir(tmp_path_factory, separable_task):
    task = separable_task
    classifier = fit_method("nb", {"alpha": 0.5}, task.train_docs, task.train_labels, task.context())
    card = ModelCard(method="nb", field="component", class_names=task.class_names,
                     vocabulary_hash=task.vocabulary.hash, hyperparameters={"alpha": 0.5}, pipeline=default_pipeline())
    directory = tmp_path_factory.mktemp("checkpoint")
    CheckpointService().save(ModelBundle(card=card, vocabulary=task.vocabulary, classifier=classifier), directory)
    return directory


@pytest.fixture(scope="module")
def client(checkpoint_dir):
    return TestClient(create_app(checkpoint_dir))


def test_predicts_keyword_class(client):
    response = client.post("/predictions/", json={"title": "Kernel panic", "content": "Segfault with backtrace."})
    assert response.status_code == 200
    body = response.json()
    assert body["field"] == "component" and body["label"] == "crash" and body["class_id"] == 0
    assert set(body["probabilities"]) == {"crash", "docs", "ui"}
    assert sum(body["probabilities"].values()) == pytest.approx(1.0)


def test_empty_ticket_still_gets_a_label(client):
    response = client.post("/predictions/", json={})
    assert response.status_code == 200
    assert response.json()["label"] in {"crash", "docs", "ui"}


def test_invalid_body_is_rejected(client):
    assert client.post("/predictions/", json={"title": ["not", "text"]}).status_code == 422


def test_model_summary(client, separable_task):
    body = client.get("/predictions/model").json()
    assert body == {
        "method": "nb",
        "field": "component",
        "class_names": ["crash", "docs", "ui"],
        "vocabulary_hash": separable_task.vocabulary.hash,
    }


def test_root_redirects_to_docs(client):
    response = client.get("/", follow_redirects=False)
    assert response.status_code in (302, 307) and response.headers["location"] == "/docs"


@pytest.mark.parametrize("directory", [None, "absent"])
def test_without_checkpoint_every_route_is_404(tmp_path, directory):
    client = TestClient(create_app(tmp_path / directory if directory else None))
    assert client.get("/predictions/model").status_code == 404
    assert client.post("/predictions/", json={"title": "x"}).status_code == 404
