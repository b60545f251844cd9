"""Network configuration, parameters and the forward tape."""

from collections.abc import Callable, Iterator
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field

from app.services.exceptions import NumericalError, ShapeError

Array = NDArray[np.float64]
# An L2-normalised network output.
Embedding = Array

GATES = 4  # input, forget, cell, output


class NetConfig(BaseModel):
    """Stacked LSTM followed by one biased linear projection."""

    model_config = ConfigDict(frozen=True)

    input_dim: int = Field(default=40, ge=1)
    hidden_dim: int = Field(default=768, ge=1)
    num_layers: int = Field(default=3, ge=1)
    embedding_dim: int = Field(default=256, ge=1)
    dual_bias: bool = True

    @property
    def parameter_count(self) -> int:
        """Scalar count implied by the configuration."""
        h = self.hidden_dim
        biases = (2 if self.dual_bias else 1) * GATES * h
        first = GATES * h * (self.input_dim + h) + biases
        others = (self.num_layers - 1) * (GATES * h * 2 * h + biases)
        projection = self.embedding_dim * h + self.embedding_dim
        return first + others + projection

    def layer_input_dim(self, layer: int) -> int:
        """Input width of LSTM layer `layer`."""
        return self.input_dim if layer == 0 else self.hidden_dim


@dataclass(slots=True)
class LstmLayerParams:
    """Weights of one LSTM layer; gate blocks are stacked as (i, f, g, o)."""

    w_ih: Array
    w_hh: Array
    b_ih: Array
    b_hh: Array | None = None

    @property
    def hidden_dim(self) -> int:
        """Hidden units of the layer."""
        return int(self.w_hh.shape[1])

    @property
    def bias(self) -> Array:
        """Sum of the bias vectors."""
        return self.b_ih if self.b_hh is None else self.b_ih + self.b_hh


@dataclass(slots=True)
class NetworkParams:
    """All trainable tensors of the embedding network.

    The same structure carries parameter gradients.
    """

    layers: list[LstmLayerParams]
    proj_w: Array
    proj_b: Array

    @property
    def config(self) -> NetConfig:
        """Configuration recovered from the tensor shapes."""
        first = self.layers[0]
        return NetConfig(
            input_dim=int(first.w_ih.shape[1]),
            hidden_dim=first.hidden_dim,
            num_layers=len(self.layers),
            embedding_dim=int(self.proj_w.shape[0]),
            dual_bias=first.b_hh is not None,
        )

    @property
    def parameter_count(self) -> int:
        """Number of trainable scalars."""
        return sum(tensor.size for _, tensor in self.items())

    def items(self) -> Iterator[tuple[str, Array]]:
        """Named tensors in a stable order."""
        for index, layer in enumerate(self.layers):
            yield f"lstm.{index}.w_ih", layer.w_ih
            yield f"lstm.{index}.w_hh", layer.w_hh
            yield f"lstm.{index}.b_ih", layer.b_ih
            if layer.b_hh is not None:
                yield f"lstm.{index}.b_hh", layer.b_hh
        yield "projection.weight", self.proj_w
        yield "projection.bias", self.proj_b

    def named_tensors(self) -> dict[str, Array]:
        """Dictionary view of :meth:`items`."""
        return dict(self.items())

    @classmethod
    def from_named_tensors(cls, config: NetConfig, tensors: dict[str, Array]) -> "NetworkParams":
        """Rebuild parameters from named tensors, checking every shape against `config`.

        Raises:
            ShapeError: If a tensor is missing, unexpected or has the wrong shape.
        """
        expected = expected_shapes(config)
        if set(expected) != set(tensors):
            missing = sorted(set(expected) - set(tensors))
            extra = sorted(set(tensors) - set(expected))
            msg = f"Tensor names do not match the configuration (missing {missing}, extra {extra})."
            raise ShapeError(msg)
        for name, shape in expected.items():
            if tensors[name].shape != shape:
                msg = f"Tensor {name} has shape {tensors[name].shape}, expected {shape}."
                raise ShapeError(msg)

        layers = [
            LstmLayerParams(
                w_ih=tensors[f"lstm.{index}.w_ih"],
                w_hh=tensors[f"lstm.{index}.w_hh"],
                b_ih=tensors[f"lstm.{index}.b_ih"],
                b_hh=tensors.get(f"lstm.{index}.b_hh"),
            )
            for index in range(config.num_layers)
        ]
        return cls(layers, tensors["projection.weight"], tensors["projection.bias"])

    def map(self, func: Callable[[str, Array], Array]) -> "NetworkParams":
        """New parameters with `func(name, tensor)` applied to every tensor."""
        return NetworkParams.from_named_tensors(
            self.config, {name: func(name, tensor) for name, tensor in self.items()}
        )

    def check_finite(self) -> None:
        """Raise NumericalError when any tensor holds a non-finite value."""
        for name, tensor in self.items():
            if not np.all(np.isfinite(tensor)):
                msg = f"Parameter tensor {name} contains non-finite values."
                raise NumericalError(msg)


def expected_shapes(config: NetConfig) -> dict[str, tuple[int, ...]]:
    """Tensor name to shape for a configuration."""
    h = config.hidden_dim
    shapes: dict[str, tuple[int, ...]] = {}
    for index in range(config.num_layers):
        shapes[f"lstm.{index}.w_ih"] = (GATES * h, config.layer_input_dim(index))
        shapes[f"lstm.{index}.w_hh"] = (GATES * h, h)
        shapes[f"lstm.{index}.b_ih"] = (GATES * h,)
        if config.dual_bias:
            shapes[f"lstm.{index}.b_hh"] = (GATES * h,)
    shapes["projection.weight"] = (config.embedding_dim, h)
    shapes["projection.bias"] = (config.embedding_dim,)
    return shapes


@dataclass(slots=True)
class LayerTape:
    """Activations of one layer over a batch of equal-length sequences.

    `hiddens` and `cells` hold T + 1 steps, the first being the zero state.
    `gates` holds the activated gates (i, f, g, o) stacked on the last axis.
    """

    inputs: Array
    gates: Array
    cells: Array
    hiddens: Array


@dataclass(slots=True)
class TapeState:
    """Everything the backward pass needs from a forward pass."""

    layers: list[LayerTape]

    @property
    def num_frames(self) -> int:
        """Sequence length T."""
        return int(self.layers[0].gates.shape[1])

    @property
    def batch_size(self) -> int:
        """Number of sequences."""
        return int(self.layers[0].gates.shape[0])

    def last_hidden(self) -> Array:
        """Top-layer hidden state at the final frame, (B, hidden)."""
        return self.layers[-1].hiddens[:, -1]
