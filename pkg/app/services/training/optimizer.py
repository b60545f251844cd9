"""Gradient clipping and the Adam update of the network and the loss scale."""

import numpy as np

from app.services.exceptions import NumericalError, ShapeError
from app.services.loss.ge2e import clamp_scale
from app.services.loss.schema import LossScale
from app.services.network.schema import NetworkParams
from app.services.training.schema import SCALE_B, SCALE_W, Array, OptimizerState


def global_norm(grads: dict[str, Array]) -> float:
    """L2 norm of all tensors taken together.

    Raises:
        NumericalError: If any gradient is non-finite.
    """
    total = 0.0
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            msg = f"Gradient {name} contains non-finite values."
            raise NumericalError(msg)
        total += float(np.sum(np.square(grad)))
    return float(np.sqrt(total))


def clip_gradients(
    grads: dict[str, Array], clip_norm: float = 3.0
) -> tuple[dict[str, Array], float]:
    """Scale all gradients by clip_norm / g when their global norm g exceeds clip_norm.

    Returns:
        The clipped gradients and the global norm before clipping.
    """
    norm = global_norm(grads)
    if norm <= clip_norm:
        return dict(grads), norm
    factor = clip_norm / norm
    return {name: grad * factor for name, grad in grads.items()}, norm


def adam_step(
    params: NetworkParams,
    scale: LossScale,
    grads: dict[str, Array],
    state: OptimizerState,
) -> tuple[NetworkParams, LossScale, OptimizerState]:
    """One bias-corrected Adam update of every network tensor and of (w, b), then clamp w.

    `grads` maps the tensor names of `params` plus "loss.w" and "loss.b" to gradients.

    Raises:
        ShapeError: If a gradient is missing or its shape differs from the moments.
    """
    if set(grads) != set(state.first_moment):
        missing = sorted(set(state.first_moment) - set(grads))
        extra = sorted(set(grads) - set(state.first_moment))
        msg = f"Gradient names do not match the optimizer (missing {missing}, extra {extra})."
        raise ShapeError(msg)

    step = state.step + 1
    correction1 = 1.0 - state.beta1**step
    correction2 = 1.0 - state.beta2**step
    values = params.named_tensors()
    values[SCALE_W] = np.asarray(scale.w, dtype=np.float64)
    values[SCALE_B] = np.asarray(scale.b, dtype=np.float64)

    first: dict[str, Array] = {}
    second: dict[str, Array] = {}
    updated: dict[str, Array] = {}
    for name, grad in grads.items():
        grad_array = np.asarray(grad, dtype=np.float64)
        if grad_array.shape != state.first_moment[name].shape:
            msg = (
                f"Gradient {name} has shape {grad_array.shape},"
                f" expected {state.first_moment[name].shape}."
            )
            raise ShapeError(msg)
        first[name] = state.beta1 * state.first_moment[name] + (1.0 - state.beta1) * grad_array
        second[name] = state.beta2 * state.second_moment[name] + (1.0 - state.beta2) * np.square(
            grad_array
        )
        step_size = (first[name] / correction1) / (
            np.sqrt(second[name] / correction2) + state.epsilon
        )
        updated[name] = values[name] - state.learning_rate * step_size

    new_scale = clamp_scale(LossScale(w=float(updated.pop(SCALE_W)), b=float(updated.pop(SCALE_B))))
    new_params = NetworkParams.from_named_tensors(params.config, updated)
    new_state = OptimizerState(
        first_moment=first,
        second_moment=second,
        step=step,
        learning_rate=state.learning_rate,
        beta1=state.beta1,
        beta2=state.beta2,
        epsilon=state.epsilon,
        clip_norm=state.clip_norm,
    )
    return new_params, new_scale, new_state
