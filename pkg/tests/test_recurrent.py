import numpy as np
import pytest

from core.exceptions import ShapeError
from core.nn import Parameter, ProjectedLoss, gradient_check
from core.recurrent import AttentionPool, DeepAttentionBlock, GruCell, SequenceEncoder, attention_pool, encode_sequence, gru_step
from schemas.nn import DropoutSpec
from tests.conftest import CallableFragment

TOLERANCE = 1e-4
SEEDS = range(5)


def _mask(lengths, steps):
    return np.arange(steps)[:, None] < np.asarray(lengths)[None, :]


def test_zero_weight_step_halves_state():
    cell = GruCell("cell", 3, 4, np.random.default_rng(0))
    for p in cell.parameters():
        p.value[...] = 0.0
    h_prev = np.random.default_rng(1).standard_normal((2, 4))
    h = gru_step(cell, np.ones((2, 3)), h_prev)
    np.testing.assert_array_equal(h, 0.5 * h_prev)


def test_parameter_names():
    cell = GruCell("enc", 2, 3, np.random.default_rng(0))
    assert [p.name for p in cell.parameters()] == [
        "enc.W_z", "enc.U_z", "enc.b_z", "enc.W_r", "enc.U_r", "enc.b_r", "enc.W_h", "enc.U_h", "enc.b_h",
    ]


def test_step_rejects_wrong_widths():
    cell = GruCell("cell", 3, 4, np.random.default_rng(0))
    with pytest.raises(ShapeError, match="cell"):
        cell.step_forward(np.ones((2, 5)), np.zeros((2, 4)))
    with pytest.raises(ShapeError):
        GruCell("cell", 0, 4, np.random.default_rng(0))


@pytest.mark.parametrize("seed", SEEDS)
def test_cell_gradient_check_through_three_steps(seed):
    rng = np.random.default_rng(seed)
    n, k = (int(v) for v in rng.integers(1, 5, size=2))
    cell = GruCell("cell", n, k, rng)
    for b in cell.b.values():
        b.value[...] = 0.1 * rng.standard_normal(k)
    xs = [Parameter(f"x{t}", rng.standard_normal((2, n))) for t in range(3)]
    h0 = Parameter("h0", rng.standard_normal((2, k)))
    loss = ProjectedLoss((2, k), seed)
    state = {}

    def forward():
        h, caches = h0.value, []
        for x in xs:
            h, cache = cell.step_forward(x.value, h)
            caches.append(cache)
        state["caches"] = caches
        value, state["dh"] = loss(h)
        return value

    def backward():
        dh = state["dh"]
        for x, cache in zip(reversed(xs), reversed(state["caches"])):
            dx, dh = cell.step_backward(dh, cache)
            x.grad += dx
        h0.grad += dh

    result = gradient_check(CallableFragment(cell.parameters() + xs + [h0], forward, backward))
    assert result.max_error < TOLERANCE


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("bidirectional", [False, True])
def test_encoder_gradient_check_with_padding(seed, bidirectional):
    rng = np.random.default_rng(seed)
    steps, batch, n, k = 4, 3, 3, 2
    encoder = SequenceEncoder("enc", n, k, rng, bidirectional=bidirectional)
    inputs = Parameter("inputs", rng.standard_normal((steps, batch, n)))
    mask = _mask([4, 2, 1], steps)
    out_loss = ProjectedLoss((steps, batch, encoder.output_size), seed)
    final_loss = ProjectedLoss((batch, encoder.output_size), seed + 100)
    state = {}

    def forward():
        outputs, final = encoder.forward(inputs.value, mask)
        a, state["do"] = out_loss(outputs * mask[:, :, None])
        b, state["df"] = final_loss(final)
        return a + b

    def backward():
        inputs.grad += encoder.backward(state["do"] * mask[:, :, None], state["df"])

    result = gradient_check(CallableFragment(encoder.parameters() + [inputs], forward, backward))
    assert result.max_error < TOLERANCE
    padded = ~mask
    assert np.all(encoder.backward(state["do"], state["df"])[padded] == 0.0)


@pytest.mark.parametrize("bidirectional", [False, True])
def test_encoder_padding_invariance(bidirectional):
    rng = np.random.default_rng(7)
    encoder = SequenceEncoder("enc", 3, 4, rng, bidirectional=bidirectional)
    short = rng.standard_normal((3, 2, 3))
    padded = np.concatenate([short, rng.standard_normal((4, 2, 3))])
    out_a, final_a = encoder.forward(short, np.ones((3, 2), dtype=bool))
    out_b, final_b = encoder.forward(padded, _mask([3, 3], 7))
    np.testing.assert_allclose(final_b, final_a, atol=1e-12)
    np.testing.assert_allclose(out_b[:3], out_a, atol=1e-12)


def test_encoder_freezes_state_on_padding():
    encoder = SequenceEncoder("enc", 2, 3, np.random.default_rng(0))
    outputs, final = encoder.forward(np.ones((4, 1, 2)), _mask([2], 4))
    np.testing.assert_array_equal(outputs[2], outputs[1])
    np.testing.assert_array_equal(final, outputs[1])


def test_bidirectional_layout():
    rng = np.random.default_rng(0)
    encoder = SequenceEncoder("enc", 2, 3, rng, bidirectional=True)
    assert encoder.output_size == 6
    assert {p.name.split(".")[1] for p in encoder.parameters()} == {"fwd", "bwd"}
    inputs = rng.standard_normal((5, 2, 2))
    outputs, final = encode_sequence(encoder, inputs, _mask([5, 3], 5))
    assert outputs.shape == (5, 2, 6) and final.shape == (2, 6)
    # the backward direction ends on the first real step
    np.testing.assert_array_equal(final[:, 3:], outputs[0, :, 3:])


def test_encoder_rejects_mismatched_mask():
    encoder = SequenceEncoder("enc", 2, 3, np.random.default_rng(0))
    with pytest.raises(ShapeError):
        encoder.forward(np.ones((4, 2, 2)), np.ones((3, 2), dtype=bool))
    with pytest.raises(ShapeError):
        encoder.forward(np.ones((4, 2, 5)), np.ones((4, 2), dtype=bool))


@pytest.mark.parametrize("projection", [False, True])
def test_attention_weights_respect_mask(projection):
    rng = np.random.default_rng(3)
    pool = AttentionPool("att", 4, rng, projection)
    outputs = rng.standard_normal((5, 3, 4))
    mask = _mask([5, 2, 1], 5)
    pooled, alpha = attention_pool(pool, outputs, mask)
    assert np.all(alpha[~mask] == 0.0)
    np.testing.assert_allclose(alpha.sum(axis=0), 1.0, atol=1e-9)
    np.testing.assert_allclose(pooled[2], outputs[0, 2])
    assert pooled.shape == (3, 4)


def test_attention_equal_scores_give_mean():
    pool = AttentionPool("att", 2, np.random.default_rng(0))
    pool.u.value[...] = 0.0
    outputs = np.arange(12.0).reshape(3, 2, 2)
    pooled, alpha = pool.forward(outputs, np.ones((3, 2), dtype=bool))
    np.testing.assert_allclose(alpha, 1.0 / 3)
    np.testing.assert_allclose(pooled, outputs.mean(axis=0))


def test_attention_padding_invariance():
    rng = np.random.default_rng(4)
    pool = AttentionPool("att", 3, rng, projection=True)
    outputs = rng.standard_normal((2, 1, 3))
    pooled_a, _ = pool.forward(outputs, np.ones((2, 1), dtype=bool))
    padded = np.concatenate([outputs, 50 * rng.standard_normal((3, 1, 3))])
    pooled_b, _ = pool.forward(padded, _mask([2], 5))
    np.testing.assert_allclose(pooled_b, pooled_a, atol=1e-12)


def test_attention_rejects_fully_masked_row():
    pool = AttentionPool("att", 2, np.random.default_rng(0))
    with pytest.raises(ShapeError):
        pool.forward(np.ones((3, 2, 2)), _mask([3, 0], 3))


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("projection", [False, True])
def test_attention_gradient_check(seed, projection):
    rng = np.random.default_rng(seed)
    pool = AttentionPool("att", 3, rng, projection)
    pool.u.value[...] = rng.standard_normal(3)
    outputs = Parameter("h", rng.standard_normal((4, 2, 3)))
    mask = _mask([4, 2], 4)
    loss = ProjectedLoss((2, 3), seed)
    state = {}

    def forward():
        pooled, _ = pool.forward(outputs.value, mask)
        value, state["d"] = loss(pooled)
        return value

    def backward():
        outputs.grad += pool.backward(state["d"])

    result = gradient_check(CallableFragment(pool.parameters() + [outputs], forward, backward))
    assert result.max_error < TOLERANCE


@pytest.mark.parametrize("seed", SEEDS)
def test_deep_attention_block_gradient_check(seed):
    rng = np.random.default_rng(seed)
    block = DeepAttentionBlock("blk", 2, 3, DropoutSpec(p=0.5), rng, projection=True)
    inputs = Parameter("x", rng.standard_normal((3, 2, 2)))
    mask = _mask([3, 1], 3)
    loss = ProjectedLoss((2, 3), seed)
    state = {}

    def forward():
        value, state["d"] = loss(block.forward(inputs.value, mask))
        return value

    def backward():
        inputs.grad += block.backward(state["d"])

    result = gradient_check(CallableFragment(block.parameters() + [inputs], forward, backward))
    assert result.max_error < TOLERANCE


def test_deep_attention_block_dropout_only_with_generator():
    rng = np.random.default_rng(0)
    block = DeepAttentionBlock("blk", 2, 8, DropoutSpec(p=0.5), rng)
    inputs = rng.standard_normal((3, 4, 2))
    mask = np.ones((3, 4), dtype=bool)
    eval_a = block.forward(inputs, mask)
    eval_b = block.forward(inputs, mask)
    np.testing.assert_array_equal(eval_a, eval_b)
    trained = block.forward(inputs, mask, np.random.default_rng(1))
    assert np.any(trained == 0.0)
    assert block.output_size == 8
