"""GRU encoders and attention pooling over padded batches.

Sequences are time-major: inputs are [T x B x n] and masks are boolean
[T x B] arrays where True marks a real position.
"""
from typing import List, Optional, Tuple

import numpy as np

from core.exceptions import ShapeError
from core.nn import (
    Parameter,
    Tensor,
    dropout_backward,
    dropout_forward,
    glorot_uniform,
    sigmoid,
    zeros,
)
from schemas.nn import DropoutSpec


class GruCell:
    """h_t = (1 - z) * h_prev + z * h_candidate."""

    GATES = ("z", "r", "h")

    def __init__(self, name: str, input_size: int, hidden_size: int, rng: np.random.Generator):
        if input_size < 1 or hidden_size < 1:
            raise ShapeError(f"GRU sizes must be positive, got input {input_size}, hidden {hidden_size}")
        self.name = name
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.W = {g: glorot_uniform(f"{name}.W_{g}", (input_size, hidden_size), rng) for g in self.GATES}
        self.U = {g: glorot_uniform(f"{name}.U_{g}", (hidden_size, hidden_size), rng) for g in self.GATES}
        self.b = {g: zeros(f"{name}.b_{g}", (hidden_size,)) for g in self.GATES}

    def parameters(self) -> List[Parameter]:
        return [group[g] for g in self.GATES for group in (self.W, self.U, self.b)]

    def _check(self, x: Tensor, h_prev: Tensor) -> None:
        if x.ndim != 2 or h_prev.ndim != 2 or x.shape[0] != h_prev.shape[0]:
            raise ShapeError(f"GRU step got input {x.shape} and state {h_prev.shape}")
        if x.shape[1] != self.input_size or h_prev.shape[1] != self.hidden_size:
            raise ShapeError(
                f"GRU cell {self.name} expects input width {self.input_size} and state width "
                f"{self.hidden_size}, got {x.shape} and {h_prev.shape}"
            )

    def step_forward(self, x: Tensor, h_prev: Tensor) -> Tuple[Tensor, tuple]:
        self._check(x, h_prev)
        W, U, b = self.W, self.U, self.b
        z = sigmoid(x @ W["z"].value + h_prev @ U["z"].value + b["z"].value)
        r = sigmoid(x @ W["r"].value + h_prev @ U["r"].value + b["r"].value)
        rh = r * h_prev
        candidate = np.tanh(x @ W["h"].value + rh @ U["h"].value + b["h"].value)
        h = (1.0 - z) * h_prev + z * candidate
        return h, (x, h_prev, z, r, rh, candidate)

    def step_backward(self, dh: Tensor, cache: tuple) -> Tuple[Tensor, Tensor]:
        x, h_prev, z, r, rh, candidate = cache
        W, U, b = self.W, self.U, self.b

        dz = dh * (candidate - h_prev)
        dh_prev = dh * (1.0 - z)
        d_candidate = dh * z * (1.0 - candidate * candidate)

        W["h"].grad += x.T @ d_candidate
        U["h"].grad += rh.T @ d_candidate
        b["h"].grad += d_candidate.sum(axis=0)
        dx = d_candidate @ W["h"].value.T
        drh = d_candidate @ U["h"].value.T
        dh_prev += drh * r

        dr = drh * h_prev * r * (1.0 - r)
        dz = dz * z * (1.0 - z)
        for gate, d in (("r", dr), ("z", dz)):
            W[gate].grad += x.T @ d
            U[gate].grad += h_prev.T @ d
            b[gate].grad += d.sum(axis=0)
            dx += d @ W[gate].value.T
            dh_prev += d @ U[gate].value.T
        return dx, dh_prev


def gru_step(cell: GruCell, x: Tensor, h_prev: Tensor) -> Tensor:
    return cell.step_forward(x, h_prev)[0]


def _check_sequence(inputs: Tensor, mask: np.ndarray, width: int) -> None:
    if inputs.ndim != 3 or mask.shape != inputs.shape[:2]:
        raise ShapeError(f"sequence of shape {inputs.shape} does not match mask {mask.shape}")
    if inputs.shape[2] != width:
        raise ShapeError(f"sequence width {inputs.shape[2]} does not match encoder input {width}")


class _Direction:
    def __init__(self, cell: GruCell, reverse: bool):
        self.cell = cell
        self.reverse = reverse
        self._cache = None

    def forward(self, inputs: Tensor, mask: np.ndarray) -> Tuple[Tensor, Tensor]:
        steps, batch, _ = inputs.shape
        k = self.cell.hidden_size
        h = np.zeros((batch, k))
        outputs = np.zeros((steps, batch, k))
        order = range(steps - 1, -1, -1) if self.reverse else range(steps)
        caches = []
        for t in order:
            live = mask[t]
            if live.any():
                h_new, cache = self.cell.step_forward(inputs[t], h)
                # padded positions carry the previous state forward
                h = np.where(live[:, None], h_new, h)
            else:
                cache = None
            outputs[t] = h
            caches.append((t, cache))
        self._cache = (mask, caches, inputs.shape)
        return outputs, h

    def backward(self, d_outputs: Tensor, d_final: Tensor) -> Tensor:
        mask, caches, shape = self._cache
        dx = np.zeros(shape)
        dh = d_final.copy()
        for t, cache in reversed(caches):
            dh = dh + d_outputs[t]
            if cache is None:
                continue
            live = mask[t][:, None]
            dx_t, dh_prev = self.cell.step_backward(np.where(live, dh, 0.0), cache)
            dx[t] = dx_t
            dh = np.where(live, dh_prev, dh)
        return dx


class SequenceEncoder:
    """A GRU run over a padded batch, optionally in both directions.

    Bidirectional outputs concatenate forward and backward states per step; the
    final state is the forward final state followed by the backward one.
    """

    def __init__(self, name: str, input_size: int, hidden_size: int, rng: np.random.Generator,
                 bidirectional: bool = False):
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.bidirectional = bidirectional
        self.directions = [_Direction(GruCell(f"{name}.fwd", input_size, hidden_size, rng), reverse=False)]
        if bidirectional:
            self.directions.append(_Direction(GruCell(f"{name}.bwd", input_size, hidden_size, rng), reverse=True))

    @property
    def output_size(self) -> int:
        return self.hidden_size * len(self.directions)

    def parameters(self) -> List[Parameter]:
        return [p for d in self.directions for p in d.cell.parameters()]

    def forward(self, inputs: Tensor, mask: np.ndarray) -> Tuple[Tensor, Tensor]:
        mask = np.asarray(mask, dtype=bool)
        _check_sequence(inputs, mask, self.input_size)
        results = [d.forward(inputs, mask) for d in self.directions]
        outputs = np.concatenate([o for o, _ in results], axis=2)
        final = np.concatenate([f for _, f in results], axis=1)
        return outputs, final

    def backward(self, d_outputs: Tensor, d_final: Optional[Tensor] = None) -> Tensor:
        k = self.hidden_size
        if d_final is None:
            d_final = np.zeros((d_outputs.shape[1], self.output_size))
        dx = None
        for i, direction in enumerate(self.directions):
            part = direction.backward(d_outputs[:, :, i * k:(i + 1) * k], d_final[:, i * k:(i + 1) * k])
            dx = part if dx is None else dx + part
        return dx


def encode_sequence(encoder: SequenceEncoder, inputs: Tensor, mask: np.ndarray) -> Tuple[Tensor, Tensor]:
    return encoder.forward(inputs, mask)


class AttentionPool:
    """Softmax over unmasked steps of h_t . u, optionally after a tanh projection."""

    def __init__(self, name: str, size: int, rng: np.random.Generator, projection: bool = False):
        self.size = size
        self.u = Parameter(f"{name}.u", rng.uniform(-0.1, 0.1, size=size))
        self.W = glorot_uniform(f"{name}.W", (size, size), rng) if projection else None
        self.b = zeros(f"{name}.b", (size,)) if projection else None
        self._cache = None

    def parameters(self) -> List[Parameter]:
        extra = [self.W, self.b] if self.W is not None else []
        return [self.u, *extra]

    def forward(self, outputs: Tensor, mask: np.ndarray) -> Tuple[Tensor, Tensor]:
        mask = np.asarray(mask, dtype=bool)
        _check_sequence(outputs, mask, self.size)
        if not mask.any(axis=0).all():
            raise ShapeError("attention needs at least one unmasked step in every batch row")

        steps, batch, k = outputs.shape
        if self.W is not None:
            keys = np.tanh(outputs.reshape(-1, k) @ self.W.value + self.b.value).reshape(outputs.shape)
        else:
            keys = outputs
        scores = keys @ self.u.value
        top = np.where(mask, scores, -np.inf).max(axis=0)
        e = np.exp(np.where(mask, scores - top, -np.inf))
        alpha = e / e.sum(axis=0)
        pooled = np.einsum("tb,tbk->bk", alpha, outputs)
        self._cache = (outputs, keys, alpha)
        return pooled, alpha

    def backward(self, d_pooled: Tensor) -> Tensor:
        outputs, keys, alpha = self._cache
        d_outputs = alpha[:, :, None] * d_pooled[None, :, :]
        d_alpha = np.einsum("tbk,bk->tb", outputs, d_pooled)
        d_scores = alpha * (d_alpha - (alpha * d_alpha).sum(axis=0))
        self.u.grad += np.einsum("tb,tbk->k", d_scores, keys)
        d_keys = d_scores[:, :, None] * self.u.value
        if self.W is not None:
            k = outputs.shape[2]
            d_pre = (d_keys * (1.0 - keys * keys)).reshape(-1, k)
            self.W.grad += outputs.reshape(-1, k).T @ d_pre
            self.b.grad += d_pre.sum(axis=0)
            d_outputs += (d_pre @ self.W.value.T).reshape(outputs.shape)
        else:
            d_outputs += d_keys
        return d_outputs


def attention_pool(pool: AttentionPool, outputs: Tensor, mask: np.ndarray) -> Tuple[Tensor, Tensor]:
    return pool.forward(outputs, mask)


class DeepAttentionBlock:
    """GRU encoder, attention pooling, then dropout on the pooled vector."""

    def __init__(self, name: str, input_size: int, hidden_size: int, dropout: DropoutSpec,
                 rng: np.random.Generator, projection: bool = False):
        self.encoder = SequenceEncoder(f"{name}.gru", input_size, hidden_size, rng)
        self.pool = AttentionPool(f"{name}.attention", hidden_size, rng, projection)
        self.dropout = dropout
        self._mask = None

    @property
    def output_size(self) -> int:
        return self.encoder.output_size

    def parameters(self) -> List[Parameter]:
        return self.encoder.parameters() + self.pool.parameters()

    def forward(self, inputs: Tensor, mask: np.ndarray, rng: Optional[np.random.Generator] = None) -> Tensor:
        """Dropout is active only when a generator is passed."""
        outputs, _ = self.encoder.forward(inputs, mask)
        pooled, _ = self.pool.forward(outputs, mask)
        if rng is None:
            self._mask = None
            return pooled
        dropped, self._mask = dropout_forward(pooled, self.dropout, rng)
        return dropped

    def backward(self, d_pooled: Tensor) -> Tensor:
        d_pooled = dropout_backward(d_pooled, self._mask)
        return self.encoder.backward(self.pool.backward(d_pooled))
