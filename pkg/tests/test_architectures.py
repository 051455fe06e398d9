import numpy as np
import pytest
from pydantic import ValidationError

from core.architectures import (
    DeepTriageClassifier,
    EmbeddingBagClassifier,
    HierarchicalClassifier,
    build_model,
    make_batch,
)
from core.exceptions import CheckpointFormatError, ShapeError
from core.nn import cross_entropy, gradient_check, softmax
from models.embedding import EmbeddingTable
from models.vocabulary import OOV_ID, PAD_ID
from schemas.model import ModelSpec
from tests.conftest import CallableFragment

TOKENS = ["<pad>", "<unk>", "a", "b", "c", "d"]

MICRO_SPECS = {
    "embedding-bag": dict(architecture="embedding-bag"),
    "deeptriage": dict(architecture="deeptriage", rnn_size=2, fc_width=3),
    "han": dict(architecture="han", block_sizes=[2]),
    "proposed": dict(architecture="proposed", block_sizes=[2, 3], shallow_size=2, fc_width=3),
    "proposed-projected": dict(architecture="proposed", block_sizes=[2], shallow_size=2, attention_projection=True),
}

MICRO_DOCS = [[[2, 3, 4], [5, 2]], [[3], [4, 4, 5]], [[2, 5]]]


def _table(dim=3, seed=0):
    matrix = np.random.default_rng(seed).standard_normal((len(TOKENS), dim))
    return EmbeddingTable(matrix, list(TOKENS))


def _micro_model(name, seed=0, fine_tune=True):
    spec = ModelSpec(num_classes=2, fine_tune_embeddings=fine_tune, **MICRO_SPECS[name])
    return build_model(spec, _table(seed=seed), seed=seed)


def test_make_batch_layout():
    batch = make_batch([[[2, 3], [4]], [[5, 5, 5]]])
    assert batch.tokens.shape == (2, 2, 3)
    assert batch.tokens[0].tolist() == [[2, 3, PAD_ID], [4, PAD_ID, PAD_ID]]
    assert batch.sentence_mask.tolist() == [[True, True], [True, False]]
    assert batch.flat_tokens.tolist() == [[2, 3, 4], [5, 5, 5]]
    assert batch.flat_mask.all()
    assert batch.size == 2


def test_make_batch_empty_document_becomes_oov():
    batch = make_batch([[], [[]]])
    assert batch.tokens.tolist() == [[[OOV_ID]], [[OOV_ID]]]
    with pytest.raises(ShapeError):
        make_batch([])


@pytest.mark.parametrize("name", sorted(MICRO_SPECS))
@pytest.mark.parametrize("seed", range(5))
def test_full_backward_gradient_check(name, seed):
    model = _micro_model(name, seed)
    batch = make_batch(MICRO_DOCS)
    labels = np.array([0, 1, 1])
    state = {}

    def forward():
        loss, state["d"] = cross_entropy(softmax(model.forward(batch)), labels)
        return loss

    def backward():
        model.backward(state["d"])

    result = gradient_check(CallableFragment(model.parameters(), forward, backward))
    assert result.max_error < 1e-4, result.errors


@pytest.mark.parametrize("name", sorted(MICRO_SPECS))
def test_padding_does_not_change_logits(name):
    model = _micro_model(name, seed=3)
    short = [[2, 3]]
    long = [[4, 5, 2, 3], [3], [2, 2, 5]]
    alone = model.forward(make_batch([short]))
    padded = model.forward(make_batch([short, long]))
    np.testing.assert_allclose(padded[0], alone[0], atol=1e-9)


@pytest.mark.parametrize("name", sorted(MICRO_SPECS))
def test_forward_without_generator_is_deterministic(name):
    model = _micro_model(name)
    batch = make_batch(MICRO_DOCS)
    np.testing.assert_array_equal(model.forward(batch), model.forward(batch))
    probs = model.predict_proba(batch)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)


def test_frozen_embeddings_are_not_parameters():
    model = _micro_model("proposed", fine_tune=False)
    assert "embedding" not in {p.name for p in model.parameters()}
    assert "embedding" in {p.name for p in _micro_model("proposed").parameters()}


def test_pad_row_stays_zero():
    model = _micro_model("embedding-bag")
    assert np.all(model.embedding.weights.value[PAD_ID] == 0)
    model.forward(make_batch(MICRO_DOCS))
    model.backward(np.ones((3, 2)))
    assert np.all(model.embedding.weights.grad[PAD_ID] == 0)


def test_parameter_names_are_unique():
    names = [p.name for p in _micro_model("proposed").parameters()]
    assert len(names) == len(set(names))


def test_representation_sizes():
    table = _table(dim=4)
    proposed = build_model(ModelSpec(architecture="proposed", num_classes=3), table)
    assert isinstance(proposed, HierarchicalClassifier)
    assert proposed.representation_size == 32 + 64 + 128 + 64 == 288
    assert proposed.head.hidden is None and proposed.head.out[0].value.shape == (288, 3)
    han = build_model(ModelSpec(architecture="han", num_classes=3), table)
    assert han.representation_size == 64 and han.head.hidden is None
    bag = build_model(ModelSpec(architecture="embedding-bag", num_classes=3), table)
    assert isinstance(bag, EmbeddingBagClassifier) and bag.representation_size == 4
    triage = build_model(ModelSpec(architecture="deeptriage", num_classes=3, rnn_size=5), table)
    assert isinstance(triage, DeepTriageClassifier) and triage.representation_size == 10


def test_proposed_without_shallow_path():
    model = build_model(ModelSpec(architecture="proposed", num_classes=2, block_sizes=[2], shallow_size=0), _table())
    assert model.shallow is None and model.representation_size == 2
    assert model.forward(make_batch(MICRO_DOCS)).shape == (3, 2)


def test_spec_defaults_and_constraints():
    assert ModelSpec(architecture="proposed", num_classes=2).block_sizes == [32, 64, 128]
    han = ModelSpec(architecture="han", num_classes=2, shallow_size=32, fc_width=16)
    assert (han.block_sizes, han.shallow_size, han.fc_width) == ([64], 0, 0)
    assert ModelSpec(architecture="proposed", num_classes=2).fc_width == 0
    assert ModelSpec(architecture="embedding-bag", num_classes=2).fc_width == 0
    assert ModelSpec(architecture="deeptriage", num_classes=2).fc_width == 64
    assert ModelSpec(architecture="proposed", num_classes=2, fc_width=16).fc_width == 16
    with pytest.raises(ValidationError):
        ModelSpec(architecture="han", num_classes=2, block_sizes=[8, 8])
    with pytest.raises(ValidationError):
        ModelSpec(architecture="deeptriage", num_classes=2, fc_width=0)
    with pytest.raises(ValidationError):
        ModelSpec(architecture="proposed", num_classes=1)
    with pytest.raises(ValidationError):
        ModelSpec(architecture="proposed", num_classes=2, block_sizes=[])


def test_same_seed_same_initialisation():
    a, b = _micro_model("proposed", seed=4), _micro_model("proposed", seed=4)
    for name, value in a.state().items():
        np.testing.assert_array_equal(value, b.state()[name])


def test_load_state_round_trip_and_mismatch():
    source, target = _micro_model("deeptriage", seed=1), _micro_model("deeptriage", seed=2)
    target.load_state(source.state())
    batch = make_batch(MICRO_DOCS)
    np.testing.assert_array_equal(target.forward(batch), source.forward(batch))

    state = source.state()
    state.pop("fc2.b")
    with pytest.raises(CheckpointFormatError, match="fc2.b"):
        target.load_state(state)
    state = source.state()
    state["fc2.b"] = np.zeros(5)
    with pytest.raises(CheckpointFormatError):
        target.load_state(state)


def test_dropout_changes_training_forward():
    model = _micro_model("proposed")
    batch = make_batch(MICRO_DOCS)
    rng = np.random.default_rng(0)
    assert not np.array_equal(model.forward(batch, rng), model.forward(batch))
