import numpy as np
import pytest

from dctnet import gradcheck, nn
from dctnet.errors import NumericalError


def tiny_config(**kw):
    base = dict(input_shape=(8, 8, 3), blocks=((4,), (4,)), hidden=(6,), num_classes=5)
    base.update(kw)
    return nn.NetworkConfig(**base)


def test_default_architecture_shapes():
    shapes = nn.NetworkConfig().shapes()
    assert shapes["conv1.W"] == (3, 3, 3, 32)
    assert shapes["conv4.W"] == (3, 3, 64, 64)
    assert shapes["fc1.W"] == (8 * 8 * 64, 256)
    assert shapes["out.W"] == (256, 10)


def test_config_rejects_too_many_pools():
    with pytest.raises(ValueError):
        nn.NetworkConfig(input_shape=(4, 4, 3), blocks=((2,), (2,), (2,)))


def test_zero_weights_give_uniform_softmax():
    params = nn.init_params(tiny_config(), 0)
    for t in params.tensors.values():
        t[...] = 0
    x = np.random.default_rng(0).uniform(0, 255, (3, 8, 8, 3))
    logits, _ = nn.forward(params, x)
    np.testing.assert_allclose(nn.softmax(logits), np.full((3, 5), 0.2), atol=1e-7)


def test_dropout_zero_matches_inference():
    params = nn.init_params(tiny_config(), 1)
    x = np.random.default_rng(1).uniform(0, 255, (4, 8, 8, 3))
    train_logits, _ = nn.forward(params, x, 0.0, training=True, rng=np.random.default_rng(0))
    eval_logits, _ = nn.forward(params, x)
    np.testing.assert_array_equal(train_logits, eval_logits)


def test_hand_computed_identity_network():
    # centre-tap conv = identity, ReLU, 2x2 max pool, then a 1 -> 2 linear map
    config = nn.NetworkConfig(input_shape=(2, 2, 1), blocks=((1,),), hidden=(), num_classes=2,
                              input_mean=0.0, input_std=1.0)
    params = nn.init_params(config, 0, dtype=np.float64)
    t = params.tensors
    t["conv1.W"][...] = 0
    t["conv1.W"][1, 1, 0, 0] = 1
    t["conv1.b"][...] = 0
    t["out.W"][...] = [[1.0, -1.0]]
    t["out.b"][...] = [0.5, 0.0]
    x = np.array([[[1.0], [3.0]], [[2.0], [-4.0]]])[None]
    logits, _ = nn.forward(params, x)
    np.testing.assert_allclose(logits, [[3.5, -3.0]])


def test_forward_validation():
    params = nn.init_params(tiny_config(), 0)
    with pytest.raises(ValueError):
        nn.forward(params, np.zeros((2, 8, 7, 3)))
    with pytest.raises(ValueError):
        nn.forward(params, np.zeros((2, 8, 8, 3)), dropout_p=1.0, training=True,
                   rng=np.random.default_rng())
    with pytest.raises(ValueError):
        nn.forward(params, np.zeros((2, 8, 8, 3)), dropout_p=0.5, training=True)
    params.tensors["out.b"][0] = np.inf
    with pytest.raises(NumericalError):
        nn.forward(params, np.zeros((2, 8, 8, 3)))


def test_backward_label_checks():
    params = nn.init_params(tiny_config(), 0)
    _, cache = nn.forward(params, np.zeros((2, 8, 8, 3)))
    with pytest.raises(ValueError):
        nn.backward(params, cache, [0, 5])
    with pytest.raises(ValueError):
        nn.backward(params, cache, [0])


def test_zero_gradient_at_stationary_point():
    # zero weights give uniform logits; a batch covering every class once is stationary
    params = nn.init_params(tiny_config(), 0, dtype=np.float64)
    for t in params.tensors.values():
        t[...] = 0
    x = np.random.default_rng(0).uniform(0, 255, (5, 8, 8, 3))
    _, cache = nn.forward(params, x)
    grads = nn.backward(params, cache, np.arange(5))
    for g in grads.values():
        np.testing.assert_allclose(g, 0, atol=1e-12)


def test_duplicated_batch_gives_same_gradient():
    params = nn.init_params(tiny_config(), 2, dtype=np.float64)
    x = np.random.default_rng(2).uniform(0, 255, (1, 8, 8, 3))
    g1 = nn.backward(params, nn.forward(params, x)[1], [3])
    g2 = nn.backward(params, nn.forward(params, np.concatenate([x, x]))[1], [3, 3])
    for k in g1:
        np.testing.assert_allclose(g1[k], g2[k], rtol=1e-10, atol=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_layer_gradients(seed):
    errors = gradcheck.check_layers(np.random.default_rng(seed))
    assert set(errors) == {"conv", "pool", "relu", "dropout", "fc", "softmax_xent"}
    assert max(errors.values()) < 1e-4, errors


@pytest.mark.parametrize("seed", range(3))
def test_network_gradients(seed):
    assert gradcheck.check_network(np.random.default_rng(seed)) < 1e-4


def test_odd_spatial_pool_gradient():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(1, 5, 3, 2))
    out, cache = nn.maxpool_forward(x)
    assert out.shape == (1, 2, 1, 2)
    R = rng.normal(size=out.shape)
    num = gradcheck.numerical_gradient(lambda: float(np.sum(nn.maxpool_forward(x)[0] * R)), x)
    assert gradcheck.relative_error(nn.maxpool_backward(R, cache), num) < 1e-8


def test_sgd_examples():
    p = {"w": np.array([1.0, -2.0, 3.0])}
    new, _ = nn.sgd_step(p, {"w": p["w"].copy()}, None, lr=1.0, momentum=0.0)
    np.testing.assert_array_equal(new["w"], 0)

    new, v = nn.sgd_step(p, {"w": np.zeros(3)}, {"w": np.zeros(3)}, lr=0.1, momentum=0.9)
    np.testing.assert_array_equal(new["w"], p["w"])
    np.testing.assert_array_equal(v["w"], 0)

    g = {"w": np.array([0.5, 1.0, -2.0])}
    lr = 0.01
    p1, v1 = nn.sgd_step(p, g, None, lr, 0.9)
    p2, v2 = nn.sgd_step(p1, g, v1, lr, 0.9)
    np.testing.assert_allclose(v2["w"], -lr * g["w"] * 1.9)
    np.testing.assert_allclose(p2["w"], p["w"] - lr * g["w"] * 2.9)
    assert np.all(p["w"] == [1.0, -2.0, 3.0])  # inputs untouched


def test_sgd_rejects_non_finite():
    with pytest.raises(NumericalError):
        nn.sgd_step({"w": np.ones(2)}, {"w": np.array([np.inf, 0])}, None, 0.1, 0.9)


def test_inverted_dropout_expectation():
    rng = np.random.default_rng(0)
    x = np.linspace(-2, 3, 50)
    for p in (0.1, 0.3, 0.5):
        masks = nn.dropout_mask((20000, 50), p, rng, np.dtype(np.float64))
        mean = (masks * x).mean(axis=0)
        np.testing.assert_allclose(mean, x, atol=0.01 * np.abs(x).max())


def test_predict_matches_argmax():
    params = nn.init_params(tiny_config(), 3)
    x = np.random.default_rng(3).uniform(0, 255, (7, 8, 8, 3))
    logits, _ = nn.forward(params, x)
    np.testing.assert_array_equal(nn.predict(params, x, batch_size=3), logits.argmax(axis=1))
