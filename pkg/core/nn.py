"""Dense layers with hand-derived backward passes, the classification loss,
RMSprop and a finite-difference gradient checker.

Every forward returns ``(output, cache)``; the matching backward takes the
upstream gradient and the cache, accumulates parameter gradients in place and
returns the gradient with respect to the input.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from core.exceptions import ConfigError, LabelError, NonFiniteGradientError, ShapeError
from schemas.nn import DropoutSpec, RmsPropConfig

logger = logging.getLogger(__name__)

Tensor = NDArray[np.float64]


@dataclass(eq=False)
class Parameter:
    name: str
    value: Tensor
    grad: Optional[Tensor] = None

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64)
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        elif self.grad.shape != self.value.shape:
            raise ShapeError(f"gradient shape {self.grad.shape} does not match value shape {self.value.shape}")

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    def __repr__(self):
        return f"<Parameter(name={self.name!r}, shape={self.value.shape})>"


def glorot_uniform(name: str, shape: Tuple[int, ...], rng: np.random.Generator) -> Parameter:
    fan_in, fan_out = (shape[0], shape[-1]) if len(shape) > 1 else (shape[0], shape[0])
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Parameter(name, rng.uniform(-limit, limit, size=shape))


def zeros(name: str, shape: Tuple[int, ...]) -> Parameter:
    return Parameter(name, np.zeros(shape))


def affine_forward(x: Tensor, W: Parameter, b: Parameter) -> Tuple[Tensor, tuple]:
    if x.ndim != 2 or W.value.ndim != 2 or x.shape[1] != W.shape[0] or b.shape != (W.shape[1],):
        raise ShapeError(
            f"affine map cannot take input of shape {x.shape} with weights {W.shape} and bias {b.shape}"
        )
    return x @ W.value + b.value, (x, W, b)


def affine_backward(dy: Tensor, cache: tuple) -> Tensor:
    x, W, b = cache
    if dy.shape != (x.shape[0], W.shape[1]):
        raise ShapeError(f"upstream gradient of shape {dy.shape} does not match output shape {(x.shape[0], W.shape[1])}")
    W.grad += x.T @ dy
    b.grad += dy.sum(axis=0)
    return dy @ W.value.T


def tanh_forward(x: Tensor) -> Tuple[Tensor, Tensor]:
    y = np.tanh(x)
    return y, y


def tanh_backward(dy: Tensor, cache: Tensor) -> Tensor:
    return dy * (1.0 - cache * cache)


def sigmoid(x: Tensor) -> Tensor:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def softmax(z: Tensor) -> Tensor:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs: Tensor, true_class: Sequence[int]) -> Tuple[float, Tensor]:
    """Mean negative log-likelihood and its gradient with respect to the logits.

    The returned gradient assumes ``probs = softmax(logits)``.
    """
    if probs.ndim != 2:
        raise ShapeError(f"expected a [batch x classes] matrix, got shape {probs.shape}")
    y = np.asarray(true_class, dtype=np.int64)
    batch, num_classes = probs.shape
    if y.shape != (batch,):
        raise ShapeError(f"{y.size} labels for a batch of {batch}")
    if np.any(y < 0) or np.any(y >= num_classes):
        raise LabelError(f"class ids must lie in [0, {num_classes}), got {y.tolist()}")

    picked = np.maximum(probs[np.arange(batch), y], 1e-12)
    loss = float(-np.log(picked).mean())
    grad = probs.copy()
    grad[np.arange(batch), y] -= 1.0
    return loss, grad / batch


def dropout_forward(
    x: Tensor, spec: DropoutSpec, rng: Optional[np.random.Generator] = None
) -> Tuple[Tensor, Optional[Tensor]]:
    """Inverted dropout; the mask already carries the 1/(1-p) scale."""
    if spec.p >= 1.0:
        raise ConfigError("dropout probability must be below 1")
    if spec.mode == "eval" or spec.p == 0.0:
        return x, None
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    mask = (rng.random(x.shape) >= spec.p) / (1.0 - spec.p)
    return x * mask, mask


def dropout_backward(dy: Tensor, mask: Optional[Tensor]) -> Tensor:
    return dy if mask is None else dy * mask


@dataclass
class RmsPropState:
    learning_rate: float = 0.001
    decay: float = 0.9
    epsilon: float = 1e-8
    cache: Dict[str, Tensor] = field(default_factory=dict)

    def __post_init__(self):
        if self.learning_rate < 0 or not 0.0 < self.decay < 1.0 or self.epsilon <= 0:
            raise ConfigError(
                f"invalid RMSprop settings: lr={self.learning_rate}, decay={self.decay}, epsilon={self.epsilon}"
            )

    @classmethod
    def from_config(cls, config: RmsPropConfig) -> "RmsPropState":
        return cls(config.learning_rate, config.decay, config.epsilon)


def rmsprop_step(params: Sequence[Parameter], state: RmsPropState) -> None:
    names = [p.name for p in params]
    if len(set(names)) != len(names):
        raise ConfigError(f"parameter names must be unique, got {names}")
    for p in params:
        if not np.all(np.isfinite(p.grad)):
            raise NonFiniteGradientError(p.name)

    for p in params:
        cache = state.cache.get(p.name)
        if cache is None or cache.shape != p.shape:
            cache = np.zeros_like(p.value)
        cache *= state.decay
        cache += (1.0 - state.decay) * p.grad * p.grad
        state.cache[p.name] = cache
        p.value -= state.learning_rate * p.grad / (np.sqrt(cache) + state.epsilon)
        p.zero_grad()


class ProjectedLoss:
    """Reduces any output tensor to a scalar through a fixed random projection."""

    def __init__(self, shape: Tuple[int, ...], seed: int = 0):
        self.projection = np.random.default_rng(seed).standard_normal(shape)

    def __call__(self, output: Tensor) -> Tuple[float, Tensor]:
        if output.shape != self.projection.shape:
            raise ShapeError(f"output shape {output.shape} does not match projection {self.projection.shape}")
        return float(np.sum(output * self.projection)), self.projection


class GradientFragment(Protocol):
    def parameters(self) -> List[Parameter]:
        ...

    def forward(self) -> float:
        ...

    def backward(self) -> None:
        ...


@dataclass
class GradientCheckResult:
    errors: Dict[str, float]

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)


def relative_error(analytic: Tensor, numeric: Tensor) -> float:
    denom = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)), 1e-8)
    return float(np.linalg.norm(analytic - numeric)) / denom


def gradient_check(fragment: GradientFragment, h: float = 1e-4) -> GradientCheckResult:
    """Compares backward() against central differences of forward().

    backward() must use the cache of the preceding forward() call.
    """
    params = fragment.parameters()
    for p in params:
        p.zero_grad()
    fragment.forward()
    fragment.backward()
    analytic = {p.name: p.grad.copy() for p in params}

    errors = {}
    for p in params:
        numeric = np.zeros_like(p.value)
        for idx in np.ndindex(*p.shape):
            original = p.value[idx]
            p.value[idx] = original + h
            plus = fragment.forward()
            p.value[idx] = original - h
            minus = fragment.forward()
            p.value[idx] = original
            numeric[idx] = (plus - minus) / (2.0 * h)
        errors[p.name] = relative_error(analytic[p.name], numeric)
        logger.debug("gradient check %s: %.3e", p.name, errors[p.name])
    for p in params:
        p.zero_grad()
    return GradientCheckResult(errors)
