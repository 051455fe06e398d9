import math

import numpy as np
import pytest

from core.exceptions import ConfigError, LabelError, NonFiniteGradientError, ShapeError
from core.nn import (
    Parameter,
    ProjectedLoss,
    RmsPropState,
    affine_backward,
    affine_forward,
    cross_entropy,
    dropout_backward,
    dropout_forward,
    glorot_uniform,
    gradient_check,
    relative_error,
    rmsprop_step,
    sigmoid,
    softmax,
    tanh_backward,
    tanh_forward,
    zeros,
)
from schemas.nn import DropoutSpec, RmsPropConfig
from tests.conftest import CallableFragment

TOLERANCE = 1e-4
SEEDS = range(5)


def test_affine_forward_example():
    W = Parameter("W", np.array([[1.0, 2.0], [3.0, 4.0]]))
    b = Parameter("b", np.array([0.5, -0.5]))
    y, _ = affine_forward(np.array([[1.0, 1.0]]), W, b)
    np.testing.assert_allclose(y, [[4.5, 5.5]])


def test_affine_shape_error_names_shapes():
    W = zeros("W", (3, 2))
    with pytest.raises(ShapeError, match=r"\(1, 4\)"):
        affine_forward(np.ones((1, 4)), W, zeros("b", (2,)))


def test_affine_backward_accumulates():
    W = Parameter("W", np.eye(2))
    b = zeros("b", (2,))
    x = np.array([[1.0, 2.0]])
    for _ in range(2):
        _, cache = affine_forward(x, W, b)
        affine_backward(np.ones((1, 2)), cache)
    np.testing.assert_allclose(b.grad, [2.0, 2.0])
    np.testing.assert_allclose(W.grad, [[2.0, 2.0], [4.0, 4.0]])


@pytest.mark.parametrize("seed", SEEDS)
def test_affine_gradient_check(seed):
    rng = np.random.default_rng(seed)
    batch, n, m = (int(v) for v in rng.integers(1, 6, size=3))
    x = Parameter("x", rng.standard_normal((batch, n)))
    W = glorot_uniform("W", (n, m), rng)
    b = Parameter("b", rng.standard_normal(m))
    loss = ProjectedLoss((batch, m), seed)
    state = {}

    def forward():
        y, state["cache"] = affine_forward(x.value, W, b)
        value, state["dy"] = loss(y)
        return value

    def backward():
        x.grad += affine_backward(state["dy"], state["cache"])

    result = gradient_check(CallableFragment([x, W, b], forward, backward))
    assert result.max_error < TOLERANCE


@pytest.mark.parametrize("seed", SEEDS)
def test_tanh_affine_softmax_cross_entropy_gradient_check(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((4, 3))
    W1, b1 = glorot_uniform("W1", (3, 5), rng), Parameter("b1", 0.1 * rng.standard_normal(5))
    W2, b2 = glorot_uniform("W2", (5, 3), rng), zeros("b2", (3,))
    y = rng.integers(0, 3, size=4)
    state = {}

    def forward():
        a, state["c1"] = affine_forward(x, W1, b1)
        h, state["t"] = tanh_forward(a)
        logits, state["c2"] = affine_forward(h, W2, b2)
        value, state["d"] = cross_entropy(softmax(logits), y)
        return value

    def backward():
        d = affine_backward(state["d"], state["c2"])
        affine_backward(tanh_backward(d, state["t"]), state["c1"])

    assert gradient_check(CallableFragment([W1, b1, W2, b2], forward, backward)).max_error < TOLERANCE


@pytest.mark.parametrize("seed", SEEDS)
def test_dropout_gradient_check_with_fixed_mask(seed):
    rng = np.random.default_rng(seed)
    x = Parameter("x", rng.standard_normal((3, 4)))
    spec = DropoutSpec(p=0.3)
    _, mask = dropout_forward(x.value, spec, np.random.default_rng(seed))
    loss = ProjectedLoss((3, 4), seed)
    state = {}

    def forward():
        value, state["d"] = loss(x.value * mask)
        return value

    def backward():
        x.grad += dropout_backward(state["d"], mask)

    assert gradient_check(CallableFragment([x], forward, backward)).max_error < TOLERANCE


def test_softmax_rows_sum_to_one_and_shift_invariant():
    rng = np.random.default_rng(0)
    z = rng.standard_normal((6, 5)) * 10
    p = softmax(z)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)
    np.testing.assert_allclose(softmax(z + rng.standard_normal((6, 1)) * 100), p, atol=1e-9)


def test_softmax_handles_large_logits():
    p = softmax(np.array([[1000.0, 0.0]]))
    assert np.all(np.isfinite(p)) and p[0, 0] == pytest.approx(1.0)


@pytest.mark.parametrize("num_classes", [2, 3, 10])
def test_uniform_predictor_loss_is_log_c(num_classes):
    probs = np.full((4, num_classes), 1.0 / num_classes)
    loss, _ = cross_entropy(probs, [0, 1, 0, 1])
    assert abs(loss - math.log(num_classes)) < 1e-9


def test_cross_entropy_clamps_zero_probability():
    loss, _ = cross_entropy(np.array([[1.0, 0.0]]), [1])
    assert loss == pytest.approx(-math.log(1e-12))


def test_cross_entropy_gradient_is_mean_of_p_minus_onehot():
    probs = np.array([[0.7, 0.3], [0.2, 0.8]])
    _, grad = cross_entropy(probs, [0, 0])
    np.testing.assert_allclose(grad, [[-0.15, 0.15], [0.1, -0.1]])


@pytest.mark.parametrize("labels", [[2], [-1]])
def test_cross_entropy_rejects_bad_labels(labels):
    with pytest.raises(LabelError):
        cross_entropy(np.array([[0.5, 0.5]]), labels)


def test_cross_entropy_rejects_label_count():
    with pytest.raises(ShapeError):
        cross_entropy(np.array([[0.5, 0.5]]), [0, 1])


def test_sigmoid_matches_logistic():
    x = np.linspace(-20, 20, 41)
    np.testing.assert_allclose(sigmoid(x), 1.0 / (1.0 + np.exp(-x)), rtol=1e-12)


def test_dropout_eval_and_zero_rate_are_identity():
    x = np.arange(6.0).reshape(2, 3)
    out, mask = dropout_forward(x, DropoutSpec(p=0.5, mode="eval"))
    assert out is x and mask is None
    out, mask = dropout_forward(x, DropoutSpec(p=0.0))
    assert out is x and mask is None


def test_dropout_statistics():
    x = np.ones((200, 500))
    out, mask = dropout_forward(x, DropoutSpec(p=0.5), np.random.default_rng(1))
    assert abs((out == 0).mean() - 0.5) < 0.01
    assert abs(out.mean() - 1.0) < 0.02
    assert set(np.unique(out)) == {0.0, 2.0}


def test_dropout_seed_fixes_mask():
    x = np.ones((4, 4))
    a, _ = dropout_forward(x, DropoutSpec(p=0.5, seed=3))
    b, _ = dropout_forward(x, DropoutSpec(p=0.5, seed=3))
    np.testing.assert_array_equal(a, b)


def test_dropout_rejects_certain_drop():
    spec = DropoutSpec.model_construct(p=1.0, mode="train", seed=0)
    with pytest.raises(ConfigError):
        dropout_forward(np.ones(3), spec)
    with pytest.raises(ValueError):
        DropoutSpec(p=1.0)


def test_rmsprop_single_step():
    p = Parameter("w", np.array([1.0]))
    p.grad[:] = 1.0
    state = RmsPropState(learning_rate=0.01, decay=0.9, epsilon=1e-8)
    rmsprop_step([p], state)
    assert state.cache["w"][0] == pytest.approx(0.1)
    assert 1.0 - p.value[0] == pytest.approx(0.0316227, abs=1e-6)
    assert p.grad[0] == 0.0


def test_rmsprop_zero_learning_rate_leaves_weights():
    p = Parameter("w", np.array([1.0, -2.0]))
    p.grad[:] = [3.0, 4.0]
    rmsprop_step([p], RmsPropState(learning_rate=0.0))
    np.testing.assert_array_equal(p.value, [1.0, -2.0])


def test_rmsprop_rejects_non_finite_gradient_before_updating():
    good = Parameter("a", np.array([1.0]))
    bad = Parameter("b", np.array([1.0]))
    good.grad[:] = 1.0
    bad.grad[:] = np.nan
    with pytest.raises(NonFiniteGradientError, match="'b'"):
        rmsprop_step([good, bad], RmsPropState())
    assert good.value[0] == 1.0


def test_rmsprop_rejects_duplicate_names():
    with pytest.raises(ConfigError):
        rmsprop_step([Parameter("w", np.zeros(1)), Parameter("w", np.zeros(1))], RmsPropState())


def test_rmsprop_state_from_config():
    state = RmsPropState.from_config(RmsPropConfig(learning_rate=0.05))
    assert (state.learning_rate, state.decay, state.epsilon) == (0.05, 0.9, 1e-8)
    with pytest.raises(ConfigError):
        RmsPropState(decay=1.0)


def test_relative_error_floor():
    assert relative_error(np.zeros(3), np.full(3, 1e-12)) == pytest.approx(np.sqrt(3) * 1e-4)
    assert relative_error(np.array([1.0]), np.array([1.0])) == 0.0


def test_gradient_check_catches_wrong_backward():
    W = Parameter("W", np.array([[1.0, 2.0]]))
    x = np.array([[3.0]])

    def forward():
        return float((x @ W.value).sum())

    def backward():
        W.grad += 2 * x.T @ np.ones((1, 2))

    result = gradient_check(CallableFragment([W], forward, backward))
    assert result.errors["W"] == pytest.approx(0.5)
    assert np.all(W.grad == 0)


def test_parameter_rejects_mismatched_gradient():
    with pytest.raises(ShapeError):
        Parameter("w", np.zeros(2), np.zeros(3))
