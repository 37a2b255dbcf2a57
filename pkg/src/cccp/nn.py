"""Small deterministic feedforward networks trained with plain minibatch SGD.

Only what the two learned metrics need: dense layers with relu, sigmoid,
softmax or identity activations, binary / categorical cross-entropy, and a
finite-difference gradient check.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

ACTIVATIONS = ("relu", "sigmoid", "softmax", "identity")
LOSSES = ("bce", "cce")
EPS = 1e-12
LOG_EPS = float(np.log(EPS))


class DimensionMismatch(ValueError):
    pass


class NonFiniteInput(ValueError):
    pass


class EmptyDataset(ValueError):
    pass


class UntrainedModel(ValueError):
    pass


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class ModelParams:
    layers: tuple[Layer, ...]

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError("a network needs at least one layer")
        for i, layer in enumerate(self.layers):
            if layer.activation not in ACTIVATIONS:
                raise ValueError(f"unknown activation {layer.activation!r}")
            if layer.activation == "softmax" and i != len(self.layers) - 1:
                raise ValueError("softmax is only allowed on the last layer")
            if layer.bias.shape != (layer.n_out,):
                raise DimensionMismatch(f"layer {i}: bias shape {layer.bias.shape} vs {layer.n_out} outputs")
            if i and layer.n_in != self.layers[i - 1].n_out:
                raise DimensionMismatch(f"layer {i} expects {layer.n_in} inputs, previous gives {self.layers[i - 1].n_out}")
            if not (np.all(np.isfinite(layer.weights)) and np.all(np.isfinite(layer.bias))):
                raise NonFiniteInput(f"layer {i} has non-finite parameters")

    @property
    def n_in(self) -> int:
        return self.layers[0].n_in

    @property
    def n_out(self) -> int:
        return self.layers[-1].n_out

    def equals(self, other: "ModelParams") -> bool:
        return len(self.layers) == len(other.layers) and all(
            a.activation == b.activation
            and np.array_equal(a.weights, b.weights)
            and np.array_equal(a.bias, b.bias)
            for a, b in zip(self.layers, other.layers)
        )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 50
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


def init_params(sizes: Sequence[int], activations: Sequence[str], seed: int = 0) -> ModelParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases."""
    if len(activations) != len(sizes) - 1:
        raise ValueError("need one activation per layer")
    rng = np.random.default_rng(seed)
    layers = []
    for n_in, n_out, act in zip(sizes[:-1], sizes[1:], activations):
        bound = 1.0 / np.sqrt(n_in)
        layers.append(Layer(
            rng.uniform(-bound, bound, size=(n_out, n_in)),
            rng.uniform(-bound, bound, size=n_out),
            act,
        ))
    return ModelParams(tuple(layers))


def mlp(n_in: int, hidden: Sequence[int], n_out: int, head: str, seed: int = 0, hidden_activation: str = "relu") -> ModelParams:
    sizes = [n_in, *hidden, n_out]
    return init_params(sizes, [hidden_activation] * len(hidden) + [head], seed)


def _activate(z: np.ndarray, act: str) -> np.ndarray:
    if act == "relu":
        return np.maximum(z, 0.0)
    if act == "sigmoid":
        # two-branch form avoids overflow in exp
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    if act == "softmax":
        shifted = z - z.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=-1, keepdims=True)
    return z


def _as_batch(params: ModelParams, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != params.n_in:
        raise DimensionMismatch(f"input has shape {x.shape}, network expects {params.n_in} features")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("input contains NaN or inf")
    return X, single


def _forward_cache(params: ModelParams, X: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    acts, pre = [X], []
    for layer in params.layers:
        z = acts[-1] @ layer.weights.T + layer.bias
        pre.append(z)
        acts.append(_activate(z, layer.activation))
    return acts, pre


def forward(params: ModelParams, x) -> np.ndarray:
    """Network output for one vector or a batch of row vectors."""
    X, single = _as_batch(params, x)
    out = _forward_cache(params, X)[0][-1]
    return out[0] if single else out


def logits(params: ModelParams, x) -> np.ndarray:
    X, single = _as_batch(params, x)
    z = _forward_cache(params, X)[1][-1]
    return z[0] if single else z


def _check_head(params: ModelParams, loss: str) -> None:
    if loss not in LOSSES:
        raise ValueError(f"unknown loss {loss!r}")
    head = params.layers[-1].activation
    if loss == "bce" and (head != "sigmoid" or params.n_out != 1):
        raise DimensionMismatch("bce needs a single sigmoid output")
    if loss == "cce" and head != "softmax":
        raise DimensionMismatch("cce needs a softmax output")


def _log_probs(z: np.ndarray, loss: str, clamp: bool) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """log p and log(1-p) (bce) or log-softmax (cce) from logits, optionally floored at log(1e-12)."""
    floor = LOG_EPS if clamp else -np.inf
    if loss == "bce":
        return np.maximum(-np.logaddexp(0.0, -z), floor), np.maximum(-np.logaddexp(0.0, z), floor)
    shifted = z - z.max(axis=1, keepdims=True)
    log_sm = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return np.maximum(log_sm, floor), None


def _loss_from_logits(z: np.ndarray, Y: np.ndarray, loss: str, clamp: bool = True) -> float:
    log_p, log_q = _log_probs(z, loss, clamp)
    if loss == "bce":
        per = -(Y * log_p + (1 - Y) * log_q).sum(axis=1)
    else:
        per = -(Y * log_p).sum(axis=1)
    return float(per.mean())


def _prepare(params: ModelParams, X, Y, loss: str) -> tuple[np.ndarray, np.ndarray]:
    _check_head(params, loss)
    X, _ = _as_batch(params, np.atleast_2d(np.asarray(X, dtype=float)))
    Y = np.atleast_1d(np.asarray(Y, dtype=float))
    if Y.ndim == 1:
        Y = Y[:, None] if loss == "bce" else Y[None, :]
    if Y.shape != (X.shape[0], params.n_out):
        raise DimensionMismatch(f"targets have shape {Y.shape}, expected {(X.shape[0], params.n_out)}")
    if loss == "bce" and not np.all((Y == 0) | (Y == 1)):
        raise ValueError("bce targets must be 0 or 1")
    if loss == "cce" and not (np.all((Y == 0) | (Y == 1)) and np.all(Y.sum(axis=1) == 1)):
        raise ValueError("cce targets must be one-hot")
    return X, Y


def loss_value(params: ModelParams, X, Y, loss: str) -> float:
    """Mean cross-entropy over the rows of ``X``."""
    X, Y = _prepare(params, X, Y, loss)
    z = _forward_cache(params, X)[1][-1]
    return _loss_from_logits(z, Y, loss)


def gradients(params: ModelParams, X: np.ndarray, Y: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Backprop gradients of the mean unclamped loss.

    Sigmoid+bce and softmax+cce both give the output delta p - y.
    """
    acts, pre = _forward_cache(params, X)
    delta = (acts[-1] - Y) / X.shape[0]
    grads = []
    for idx in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[idx]
        grads.append((delta.T @ acts[idx], delta.sum(axis=0)))
        if idx:
            back = delta @ layer.weights
            prev = params.layers[idx - 1].activation
            if prev == "relu":
                back = back * (pre[idx - 1] > 0)
            elif prev == "sigmoid":
                back = back * acts[idx] * (1 - acts[idx])
            elif prev == "softmax":
                raise AssertionError("softmax is only allowed on the last layer")
            delta = back
    grads.reverse()
    return grads


def _step(params: ModelParams, grads, lr: float) -> ModelParams:
    return ModelParams(tuple(
        replace(layer, weights=layer.weights - lr * gw, bias=layer.bias - lr * gb)
        for layer, (gw, gb) in zip(params.layers, grads)
    ))


def train(
    params: ModelParams,
    X,
    Y,
    loss: str,
    config: TrainConfig,
    on_epoch: Optional[Callable[[int, float], None]] = None,
) -> ModelParams:
    """Minibatch SGD; returns new parameters and leaves ``params`` untouched.

    ``on_epoch(epoch, full_dataset_loss)`` is called after every epoch if given.
    """
    X = np.asarray(X, dtype=float)
    if X.size == 0 or len(X) == 0:
        raise EmptyDataset("no training rows")
    X, Y = _prepare(params, X, Y, loss)
    rng = np.random.default_rng(config.seed)
    n = X.shape[0]
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            params = _step(params, gradients(params, X[batch], Y[batch]), config.learning_rate)
        if on_epoch is not None:
            on_epoch(epoch, _loss_from_logits(_forward_cache(params, X)[1][-1], Y, loss))
    return params


def numeric_gradients(params: ModelParams, X, Y, loss: str, step: float = 1e-5) -> list[tuple[np.ndarray, np.ndarray]]:
    X, Y = _prepare(params, X, Y, loss)
    out = []
    for i, layer in enumerate(params.layers):
        pair = []
        for attr in ("weights", "bias"):
            base = getattr(layer, attr)
            g = np.zeros_like(base)
            for idx in np.ndindex(base.shape):
                vals = []
                for sign in (1, -1):
                    arr = base.copy()
                    arr[idx] += sign * step
                    layers = list(params.layers)
                    layers[i] = replace(layer, **{attr: arr})
                    z = _forward_cache(ModelParams(tuple(layers)), X)[1][-1]
                    vals.append(_loss_from_logits(z, Y, loss, clamp=False))
                g[idx] = (vals[0] - vals[1]) / (2 * step)
            pair.append(g)
        out.append(tuple(pair))
    return out


def gradient_check(params: ModelParams, x, y, loss: str, step: float = 1e-5, floor: float = 1e-6) -> float:
    """Largest relative error |a - n| / max(|a|, |n|, floor) between backprop and central differences."""
    X, Y = _prepare(params, x, y, loss)
    analytic = gradients(params, X, Y)
    numeric = numeric_gradients(params, X, Y, loss, step)
    worst = 0.0
    for (aw, ab), (nw, nb) in zip(analytic, numeric):
        for a, n in ((aw, nw), (ab, nb)):
            denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
            worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def save_params(params: ModelParams, path) -> None:
    """Plain-text dump: layer count, then per layer ``out in activation``, weights row-major, biases."""
    lines = [str(len(params.layers))]
    for layer in params.layers:
        lines.append(f"{layer.n_out} {layer.n_in} {layer.activation}")
        lines.extend(" ".join(f"{v:.17g}" for v in row) for row in layer.weights)
        lines.append(" ".join(f"{v:.17g}" for v in layer.bias))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_params(path) -> ModelParams:
    it = iter(Path(path).read_text(encoding="utf-8").splitlines())
    layers = []
    for _ in range(int(next(it))):
        n_out, n_in, act = next(it).split()
        w = np.array([[float(v) for v in next(it).split()] for _ in range(int(n_out))]).reshape(int(n_out), int(n_in))
        b = np.array([float(v) for v in next(it).split()])
        layers.append(Layer(w, b, act))
    return ModelParams(tuple(layers))
