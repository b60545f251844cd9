import numpy as np
import pytest
from scipy.special import expit

from app.services.exceptions import DegenerateEmbeddingError, NumericalError, ShapeError
from app.services.frontend.schema import FeatureMatrix
from app.services.network.lstm import (
    backward,
    backward_batch,
    embed,
    forward,
    forward_batch,
    init_params,
    normalize_outputs,
)
from app.services.network.schema import NetConfig, NetworkParams, expected_shapes

SMALL = NetConfig(input_dim=3, hidden_dim=4, num_layers=1, embedding_dim=2)


def randomized(params: NetworkParams, seed: int, scale: float = 0.5) -> NetworkParams:
    """Same shapes, every tensor (biases included) drawn at random."""
    rng = np.random.default_rng(seed)
    return params.map(lambda _, tensor: rng.normal(0.0, scale, size=tensor.shape))


def naive_forward(params: NetworkParams, sequence: np.ndarray) -> np.ndarray:
    """Unbatched LSTM written gate by gate."""
    layer_input = sequence
    for layer in params.layers:
        h_dim = layer.hidden_dim
        bias = layer.b_ih + (layer.b_hh if layer.b_hh is not None else 0.0)
        h = np.zeros(h_dim)
        c = np.zeros(h_dim)
        outputs = []
        for x in layer_input:
            z = layer.w_ih @ x + layer.w_hh @ h + bias
            i = expit(z[:h_dim])
            f = expit(z[h_dim : 2 * h_dim])
            g = np.tanh(z[2 * h_dim : 3 * h_dim])
            o = expit(z[3 * h_dim :])
            c = f * c + i * g
            h = o * np.tanh(c)
            outputs.append(h)
        layer_input = np.array(outputs)
    return params.proj_w @ layer_input[-1] + params.proj_b


def test_parameter_count_of_full_configuration() -> None:
    """Three 768-unit layers with two bias sets and a 768 to 256 projection."""
    cfg = NetConfig()
    assert cfg.parameter_count == 12_134_656
    assert sum(int(np.prod(shape)) for shape in expected_shapes(cfg).values()) == 12_134_656


def test_parameter_count_matches_tensors() -> None:
    """The count implied by the configuration is the number of initialised scalars."""
    for cfg in (SMALL, NetConfig(hidden_dim=16, num_layers=2, embedding_dim=8, dual_bias=False)):
        assert init_params(cfg, seed=0).parameter_count == cfg.parameter_count


def test_init_zero_biases() -> None:
    """Every bias vector starts at zero."""
    params = init_params(NetConfig(hidden_dim=16, num_layers=3, embedding_dim=8), seed=1)
    for name, tensor in params.items():
        if "b_" in name or name == "projection.bias":
            assert not tensor.any(), name


def test_init_is_deterministic() -> None:
    """The same seed gives bit-identical parameters."""
    first = init_params(SMALL, seed=7).named_tensors()
    second = init_params(SMALL, seed=7).named_tensors()
    other = init_params(SMALL, seed=8).named_tensors()
    for name, tensor in first.items():
        np.testing.assert_array_equal(tensor, second[name])
    assert any(not np.array_equal(tensor, other[name]) for name, tensor in first.items())


def test_zero_params_give_zero_output() -> None:
    """Zero weights and biases propagate zeros."""
    params = init_params(SMALL, seed=0).map(lambda _, tensor: np.zeros_like(tensor))
    raw, _ = forward_batch(params, np.random.default_rng(0).normal(size=(3, 5, 3)))
    assert not raw.any()


def test_single_frame_input() -> None:
    """A sequence of one frame has a defined output."""
    params = randomized(init_params(SMALL, seed=0), seed=1)
    raw, tape = forward(params, FeatureMatrix(np.ones((1, 3))))
    assert raw.shape == (2,)
    assert tape.num_frames == 1
    assert np.all(np.isfinite(raw))


@pytest.mark.parametrize("num_layers", [1, 3])
def test_forward_matches_naive_lstm(num_layers: int) -> None:
    """Batched forward equals a step-by-step oracle within 1e-10."""
    cfg = NetConfig(input_dim=5, hidden_dim=6, num_layers=num_layers, embedding_dim=4)
    params = randomized(init_params(cfg, seed=0), seed=2)
    inputs = np.random.default_rng(3).normal(size=(4, 7, 5))
    raw, _ = forward_batch(params, inputs)
    for row, sequence in zip(raw, inputs, strict=True):
        np.testing.assert_allclose(row, naive_forward(params, sequence), atol=1e-10)


def test_forward_rejects_bad_input() -> None:
    """Wrong feature width or non-finite values are refused."""
    params = init_params(SMALL, seed=0)
    with pytest.raises(ShapeError):
        forward_batch(params, np.zeros((2, 5, 4)))
    with pytest.raises(NumericalError):
        forward_batch(params, np.full((2, 5, 3), np.nan))


def test_normalization_three_four_five() -> None:
    """(3, 4, 0, 0) normalises to (0.6, 0.8, 0, 0)."""
    np.testing.assert_allclose(
        normalize_outputs(np.array([3.0, 4.0, 0.0, 0.0])), [0.6, 0.8, 0.0, 0.0]
    )


def test_normalization_unit_norm_and_scale_invariance() -> None:
    """Outputs have unit norm and ignore a positive rescaling."""
    rng = np.random.default_rng(4)
    for _ in range(100):
        raw = rng.normal(size=8)
        gain = float(rng.uniform(1e-3, 1e3))
        unit = normalize_outputs(raw)
        assert np.linalg.norm(unit) == pytest.approx(1.0, abs=1e-6)
        np.testing.assert_allclose(normalize_outputs(gain * raw), unit, atol=1e-12)


def test_normalization_of_zero_output() -> None:
    """A zero output cannot be normalised."""
    with pytest.raises(DegenerateEmbeddingError):
        normalize_outputs(np.zeros(4))


def test_embed_has_unit_norm() -> None:
    """Embeddings of single utterances are unit vectors."""
    params = randomized(init_params(SMALL, seed=0), seed=5)
    vector = embed(params, FeatureMatrix(np.random.default_rng(6).normal(size=(5, 3))))
    assert np.linalg.norm(vector) == pytest.approx(1.0, abs=1e-12)


def test_zero_upstream_gradient() -> None:
    """No upstream gradient, no parameter gradient."""
    params = randomized(init_params(SMALL, seed=0), seed=7)
    _, tape = forward_batch(params, np.random.default_rng(8).normal(size=(2, 5, 3)))
    grads = backward_batch(params, tape, np.zeros((2, 2)))
    for name, tensor in grads.items():
        assert not tensor.any(), name


@pytest.mark.parametrize("dual_bias", [True, False])
def test_backward_matches_finite_differences(dual_bias: bool) -> None:
    """Every gradient component matches central differences with step 1e-5."""
    cfg = SMALL.model_copy(update={"dual_bias": dual_bias})
    params = randomized(init_params(cfg, seed=0), seed=9)
    features = FeatureMatrix(np.random.default_rng(10).normal(size=(5, 3)))
    upstream = np.random.default_rng(11).normal(size=2)

    def objective(candidate: NetworkParams) -> float:
        raw, _ = forward(candidate, features)
        return float(raw @ upstream)

    _, tape = forward(params, features)
    analytic = backward(params, tape, upstream).named_tensors()
    tensors = params.named_tensors()
    step = 1e-5
    for name, tensor in tensors.items():
        numeric = np.zeros_like(tensor)
        for index in np.ndindex(tensor.shape):
            shifted = {key: value.copy() for key, value in tensors.items()}
            shifted[name][index] += step
            plus = objective(NetworkParams.from_named_tensors(cfg, shifted))
            shifted[name][index] -= 2 * step
            minus = objective(NetworkParams.from_named_tensors(cfg, shifted))
            numeric[index] = (plus - minus) / (2 * step)
        np.testing.assert_allclose(analytic[name], numeric, rtol=1e-4, atol=1e-8, err_msg=name)


def test_input_gate_gradient_symmetry() -> None:
    """Identical frames under constant weights accumulate identical input-gate gradients."""
    cfg = NetConfig(input_dim=2, hidden_dim=2, num_layers=1, embedding_dim=2)
    params = init_params(cfg, seed=0).map(lambda _, tensor: np.full(tensor.shape, 0.1))
    features = FeatureMatrix(np.ones((2, 2)))
    _, tape = forward(params, features)
    grads = backward(params, tape, np.ones(2))
    input_gate = grads.layers[0].w_ih[:2]
    # Both hidden units see identical weights, so their rows coincide.
    np.testing.assert_allclose(input_gate[0], input_gate[1], atol=1e-15)
    np.testing.assert_allclose(input_gate[:, 0], input_gate[:, 1], atol=1e-15)


def test_backward_rejects_mismatched_tape() -> None:
    """A tape from another network or a wrongly shaped gradient is refused."""
    params = init_params(SMALL, seed=0)
    other = init_params(NetConfig(input_dim=3, hidden_dim=5, num_layers=1, embedding_dim=2), 0)
    _, tape = forward_batch(other, np.zeros((2, 4, 3)))
    with pytest.raises(ShapeError):
        backward_batch(params, tape, np.zeros((2, 2)))
    _, tape = forward_batch(params, np.zeros((2, 4, 3)))
    with pytest.raises(ShapeError):
        backward_batch(params, tape, np.zeros((3, 2)))


def test_named_tensors_must_match_configuration() -> None:
    """Missing or reshaped tensors are refused."""
    tensors = init_params(SMALL, seed=0).named_tensors()
    missing = {k: v for k, v in tensors.items() if k != "projection.bias"}
    with pytest.raises(ShapeError):
        NetworkParams.from_named_tensors(SMALL, missing)
    tensors["projection.bias"] = np.zeros(3)
    with pytest.raises(ShapeError):
        NetworkParams.from_named_tensors(SMALL, tensors)
