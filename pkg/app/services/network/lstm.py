"""Numpy LSTM embedding network with explicit backpropagation through time.

Shapes: a batch is (B, T, D) with every sequence of the same length T. The
network output for a sequence is the projection of the top layer's hidden
state at the last frame. Gate pre-activations are z = x W_ih^T + h W_hh^T + b
with the gate blocks ordered (input, forget, cell, output).
"""

import numpy as np
from scipy.special import expit

from app.services.exceptions import DegenerateEmbeddingError, NumericalError, ShapeError
from app.services.frontend.schema import FeatureMatrix
from app.services.network.schema import (
    GATES,
    Array,
    Embedding,
    LayerTape,
    LstmLayerParams,
    NetConfig,
    NetworkParams,
    TapeState,
)

# Smallest raw-output norm that can be normalised.
MIN_OUTPUT_NORM = 1e-12


def _xavier_normal(rng: np.random.Generator, fan_out: int, fan_in: int) -> Array:
    std = np.sqrt(2.0 / (fan_in + fan_out))
    return rng.normal(0.0, std, size=(fan_out, fan_in))


def init_params(cfg: NetConfig, seed: int) -> NetworkParams:
    """Xavier-normal weights and zero biases, deterministic in `seed`."""
    rng = np.random.default_rng(seed)
    h = cfg.hidden_dim
    layers = []
    for index in range(cfg.num_layers):
        w_ih = _xavier_normal(rng, GATES * h, cfg.layer_input_dim(index))
        w_hh = _xavier_normal(rng, GATES * h, h)
        layers.append(
            LstmLayerParams(
                w_ih=w_ih,
                w_hh=w_hh,
                b_ih=np.zeros(GATES * h),
                b_hh=np.zeros(GATES * h) if cfg.dual_bias else None,
            )
        )
    proj_w = _xavier_normal(rng, cfg.embedding_dim, h)
    return NetworkParams(layers, proj_w, np.zeros(cfg.embedding_dim))


def _layer_forward(layer: LstmLayerParams, inputs: Array) -> LayerTape:
    batch, frames, _ = inputs.shape
    h = layer.hidden_dim
    projected = inputs @ layer.w_ih.T + layer.bias
    gates = np.empty((batch, frames, GATES * h))
    cells = np.zeros((batch, frames + 1, h))
    hiddens = np.zeros((batch, frames + 1, h))
    w_hh_t = layer.w_hh.T

    for t in range(frames):
        z = projected[:, t] + hiddens[:, t] @ w_hh_t
        gate = gates[:, t]
        gate[:, : 2 * h] = expit(z[:, : 2 * h])
        gate[:, 2 * h : 3 * h] = np.tanh(z[:, 2 * h : 3 * h])
        gate[:, 3 * h :] = expit(z[:, 3 * h :])
        i, f, g, o = gate[:, :h], gate[:, h : 2 * h], gate[:, 2 * h : 3 * h], gate[:, 3 * h :]
        cells[:, t + 1] = f * cells[:, t] + i * g
        hiddens[:, t + 1] = o * np.tanh(cells[:, t + 1])
    return LayerTape(inputs=inputs, gates=gates, cells=cells, hiddens=hiddens)


def forward_batch(params: NetworkParams, inputs: Array) -> tuple[Array, TapeState]:
    """Raw outputs (B, E) for a batch of sequences (B, T, D).

    Raises:
        ShapeError: If the input is not (B, T, input_dim) with T ≥ 1.
        NumericalError: If the input holds non-finite values.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    expected_dim = params.layers[0].w_ih.shape[1]
    if inputs.ndim != 3 or inputs.shape[1] < 1 or inputs.shape[2] != expected_dim:  # noqa: PLR2004
        msg = f"Expected input of shape (B, T>=1, {expected_dim}), got {inputs.shape}."
        raise ShapeError(msg)
    if not np.all(np.isfinite(inputs)):
        msg = "Network input contains non-finite values."
        raise NumericalError(msg)

    tapes = []
    layer_input = inputs
    for layer in params.layers:
        tape = _layer_forward(layer, layer_input)
        tapes.append(tape)
        layer_input = tape.hiddens[:, 1:]
    state = TapeState(tapes)
    raw = state.last_hidden() @ params.proj_w.T + params.proj_b
    return raw, state


def forward(params: NetworkParams, features: FeatureMatrix) -> tuple[Array, TapeState]:
    """Raw output (E,) of a single utterance and its tape."""
    raw, tape = forward_batch(params, features.data[np.newaxis])
    return raw[0], tape


def normalize_outputs(raw: Array) -> Array:
    """L2-normalise raw outputs along the last axis.

    Raises:
        DegenerateEmbeddingError: If an output has (numerically) zero norm.
    """
    norms = np.linalg.norm(raw, axis=-1, keepdims=True)
    if np.any(norms <= MIN_OUTPUT_NORM):
        msg = "Network output has zero norm and cannot be normalised."
        raise DegenerateEmbeddingError(msg)
    return raw / norms


def normalization_backward(raw: Array, grad_unit: Array) -> Array:
    """Gradient with respect to `raw` given the gradient with respect to `raw / ||raw||`."""
    norms = np.linalg.norm(raw, axis=-1, keepdims=True)
    unit = raw / norms
    radial = np.sum(unit * grad_unit, axis=-1, keepdims=True)
    return (grad_unit - unit * radial) / norms


def embed(params: NetworkParams, features: FeatureMatrix) -> Embedding:
    """Unit-norm embedding of one utterance."""
    raw, _ = forward(params, features)
    return normalize_outputs(raw)


def _layer_backward(
    layer: LstmLayerParams, tape: LayerTape, grad_hidden: Array
) -> tuple[LstmLayerParams, Array]:
    batch, frames, _ = grad_hidden.shape
    h = layer.hidden_dim
    grad_z = np.empty((batch, frames, GATES * h))
    grad_h_next = np.zeros((batch, h))
    grad_c_next = np.zeros((batch, h))

    for t in reversed(range(frames)):
        gate = tape.gates[:, t]
        i, f, g, o = gate[:, :h], gate[:, h : 2 * h], gate[:, 2 * h : 3 * h], gate[:, 3 * h :]
        tanh_c = np.tanh(tape.cells[:, t + 1])

        grad_h = grad_hidden[:, t] + grad_h_next
        grad_c = grad_h * o * (1.0 - tanh_c**2) + grad_c_next

        step = grad_z[:, t]
        step[:, :h] = grad_c * g * i * (1.0 - i)
        step[:, h : 2 * h] = grad_c * tape.cells[:, t] * f * (1.0 - f)
        step[:, 2 * h : 3 * h] = grad_c * i * (1.0 - g**2)
        step[:, 3 * h :] = grad_h * tanh_c * o * (1.0 - o)

        grad_h_next = step @ layer.w_hh
        grad_c_next = grad_c * f

    flat = grad_z.reshape(-1, GATES * h)
    grad_bias = flat.sum(axis=0)
    grads = LstmLayerParams(
        w_ih=flat.T @ tape.inputs.reshape(batch * frames, -1),
        w_hh=flat.T @ tape.hiddens[:, :-1].reshape(batch * frames, h),
        b_ih=grad_bias,
        b_hh=grad_bias.copy() if layer.b_hh is not None else None,
    )
    return grads, grad_z @ layer.w_ih


def _check_tape(params: NetworkParams, tape: TapeState, grad_raw: Array) -> None:
    if len(tape.layers) != len(params.layers):
        msg = f"Tape has {len(tape.layers)} layers, parameters have {len(params.layers)}."
        raise ShapeError(msg)
    for index, (layer, layer_tape) in enumerate(zip(params.layers, tape.layers, strict=True)):
        if layer_tape.gates.shape[-1] != layer.w_ih.shape[0]:
            msg = f"Tape of layer {index} does not match its parameters."
            raise ShapeError(msg)
        if layer_tape.inputs.shape[-1] != layer.w_ih.shape[1]:
            msg = f"Tape inputs of layer {index} do not match its parameters."
            raise ShapeError(msg)
    if grad_raw.shape != (tape.batch_size, params.proj_w.shape[0]):
        msg = (
            f"Upstream gradient has shape {grad_raw.shape},"
            f" expected {(tape.batch_size, params.proj_w.shape[0])}."
        )
        raise ShapeError(msg)


def backward_batch(
    params: NetworkParams,
    tape: TapeState,
    grad_raw: Array,
    projection_grad_scale: float = 1.0,
) -> NetworkParams:
    """Parameter gradients summed over the batch, given dLoss/d(raw output) of shape (B, E).

    Raises:
        ShapeError: If the tape or the gradient does not match `params`.
    """
    grad_raw = np.asarray(grad_raw, dtype=np.float64)
    _check_tape(params, tape, grad_raw)

    last_hidden = tape.last_hidden()
    grad_proj_w = projection_grad_scale * (grad_raw.T @ last_hidden)
    grad_proj_b = projection_grad_scale * grad_raw.sum(axis=0)

    grad_hidden = np.zeros_like(tape.layers[-1].hiddens[:, 1:])
    grad_hidden[:, -1] = grad_raw @ params.proj_w

    layer_grads: list[LstmLayerParams] = []
    for layer, layer_tape in zip(reversed(params.layers), reversed(tape.layers), strict=True):
        grads, grad_hidden = _layer_backward(layer, layer_tape, grad_hidden)
        layer_grads.append(grads)
    layer_grads.reverse()
    return NetworkParams(layer_grads, grad_proj_w, grad_proj_b)


def backward(
    params: NetworkParams,
    tape: TapeState,
    grad_raw: Array,
    projection_grad_scale: float = 1.0,
) -> NetworkParams:
    """Parameter gradients for one utterance given dLoss/d(raw output) of shape (E,)."""
    grad_raw = np.asarray(grad_raw, dtype=np.float64)
    if grad_raw.ndim != 1:
        msg = f"Expected a single upstream gradient vector, got shape {grad_raw.shape}."
        raise ShapeError(msg)
    return backward_batch(params, tape, grad_raw[np.newaxis], projection_grad_scale)
