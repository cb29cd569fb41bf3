import math
import os

import numpy as np
import pytest

from bayesian_hpo.models.neuralnet import (AdamState, MLPParams, NetworkConfig,
        TrainSettings, activate, adam_step, backward, bce_loss, forward, init_params,
        load_params, predict_proba, save_params, sgd_step, train)
from bayesian_hpo.utils import ValidationError

from conftest import DATA_DIR


def blobs(n=400, seed=0):
    """
    Two well-separated Gaussian blobs in 5 dimensions.

    """
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < 0.5).astype(float)
    X = rng.normal(size=(n, 5)) + np.where(y[:, None] == 1, 3.0, -3.0)
    return X, y


def numeric_gradient(loss, array, idx, h=1e-6):
    saved = array[idx]
    array[idx] = saved + h
    up = loss()
    array[idx] = saved - h
    down = loss()
    array[idx] = saved
    return (up - down) / (2 * h)


def assert_gradients_match(params, grads, loss):
    for array, grad in zip(params.arrays(), grads.arrays()):
        for idx in np.ndindex(array.shape):
            num = numeric_gradient(loss, array, idx)
            denom = max(abs(num), abs(grad[idx]), 1e-8)
            assert abs(num - grad[idx]) / denom < 1e-4 or abs(num - grad[idx]) < 1e-9


def test_activation_examples():
    """
    Confirm activation values at a few points, including extreme sigmoid inputs.

    """
    assert activate('ReLU', -2.0) == 0.0
    assert activate('ReLU', 3.0) == 3.0
    assert activate('sigmoid', 0.0) == 0.5
    assert activate('TanH', 0.0) == 0.0
    assert activate('sigmoid', 800.0) == pytest.approx(1.0)
    assert activate('sigmoid', -800.0) == pytest.approx(0.0)
    assert np.array_equal(activate('ReLU', np.array([-1.0, 2.0])), [0.0, 2.0])

    with pytest.raises(ValidationError):
        activate('softplus', 1.0)


def test_bce_examples():
    """
    Confirm cross-entropy values, including the clamp at confident wrong answers.

    """
    assert bce_loss(1, 0.5) == pytest.approx(math.log(2))
    assert bce_loss(0, 0.5) == pytest.approx(math.log(2))
    assert bce_loss(1, 0.0) == pytest.approx(-math.log(1e-7))
    assert bce_loss([1, 0], [0.9, 0.1]) == pytest.approx(-math.log(0.9))


def test_network_config():
    """
    Confirm NetworkConfig validation and dict handling.

    """
    cfg = NetworkConfig.from_dict({'n_hidden_layers': 2, 'n_neurons': 16,
                                   'dropout_rate': 0.1, 'activation': 'TanH',
                                   'optimizer': 'SGD', 'learning_rate': 0.01,
                                   'extra': 'ignored'})
    assert cfg.to_dict()['n_neurons'] == 16

    with pytest.raises(ValidationError):
        NetworkConfig.from_dict({'n_hidden_layers': 2})
    with pytest.raises(ValidationError):
        NetworkConfig(dropout_rate=1.0).validate()
    with pytest.raises(ValidationError):
        NetworkConfig(optimizer='RMSprop').validate()
    with pytest.raises(ValidationError):
        TrainSettings(epochs=0)


def test_params_shapes():
    """
    Confirm initialized parameters have the configured shapes and Glorot bounds.

    """
    cfg = NetworkConfig(n_hidden_layers=3, n_neurons=8)
    params = init_params(10, cfg, np.random.default_rng(0))

    assert params.shapes == [(10, 8), (8, 8), (8, 8), (8, 1)]
    assert np.all(np.abs(params.weights[0]) <= math.sqrt(6 / 18))
    assert all(np.all(b == 0) for b in params.biases)

    with pytest.raises(ValidationError):
        MLPParams([np.zeros((3, 2))], [np.zeros(2)])


def test_gradient_check():
    """
    Confirm backpropagated gradients match central differences for every activation
    and depth, to relative error below 1e-4.

    """
    rng = np.random.default_rng(1)
    X = rng.normal(size=(6, 4))
    y = np.array([0, 1, 1, 0, 1, 0], dtype=float)

    for activation in ['ReLU', 'sigmoid', 'TanH']:
        for depth in [1, 2, 3]:
            cfg = NetworkConfig(n_hidden_layers=depth, n_neurons=5,
                                activation=activation)
            params = init_params(4, cfg, rng)
            if activation == 'ReLU':
                # keep pre-activations away from the kink at zero
                for b in params.biases[:-1]:
                    b += 0.05

            _, cache = forward(params, X)
            grads = backward(params, cache, y)
            assert_gradients_match(params, grads,
                                   lambda: bce_loss(y, forward(params, X)[0]))


def test_gradient_check_with_dropout():
    """
    Confirm train-mode gradients match central differences taken under the same
    dropout masks.

    """
    rng = np.random.default_rng(6)
    X = rng.normal(size=(8, 4))
    y = np.array([0, 1, 1, 0, 1, 0, 0, 1], dtype=float)

    def train_forward(params):
        return forward(params, X, 'train', dropout_rate=0.3,
                       rng=np.random.default_rng(11))

    for activation in ['sigmoid', 'TanH']:
        for depth in [1, 2, 3]:
            cfg = NetworkConfig(n_hidden_layers=depth, n_neurons=5,
                                activation=activation)
            params = init_params(4, cfg, rng)

            _, cache = train_forward(params)
            assert any(np.any(m == 0) for m in cache.masks)
            grads = backward(params, cache, y)
            assert_gradients_match(params, grads,
                                   lambda: bce_loss(y, train_forward(params)[0]))


def test_backward_zero_inputs():
    """
    Confirm a batch of zero inputs gives zero input-layer weight gradients, while the
    output bias still gets a gradient.

    """
    params = init_params(3, NetworkConfig(n_neurons=4, activation='sigmoid'),
                         np.random.default_rng(7))
    y = np.array([1, 1, 1, 0], dtype=float)
    _, cache = forward(params, np.zeros((4, 3)))
    grads = backward(params, cache, y)

    assert np.all(grads.weights[0] == 0)
    assert grads.biases[-1][0] != 0


def test_backward_duplicated_batch():
    """
    Confirm duplicating every sample leaves the mean gradient unchanged.

    """
    rng = np.random.default_rng(8)
    params = init_params(4, NetworkConfig(n_hidden_layers=2, n_neurons=5,
                                          activation='TanH'), rng)
    X = rng.normal(size=(5, 4))
    y = np.array([0, 1, 0, 1, 1], dtype=float)

    once = backward(params, forward(params, X)[1], y)
    twice = backward(params, forward(params, np.vstack([X, X]))[1], np.concatenate([y, y]))

    for a, b in zip(once.arrays(), twice.arrays()):
        assert np.allclose(a, b, rtol=1e-10, atol=1e-12)


def test_backward_errors():
    """
    Confirm that mismatched caches and labels are rejected.

    """
    rng = np.random.default_rng(2)
    small = init_params(3, NetworkConfig(n_neurons=4), rng)
    large = init_params(3, NetworkConfig(n_neurons=6), rng)
    _, cache = forward(small, np.zeros((2, 3)))

    with pytest.raises(ValidationError):
        backward(large, cache, [0, 1])
    with pytest.raises(ValidationError):
        backward(small, cache, [0, 1, 1])


def test_dropout_expectation():
    """
    Confirm the mean of train-mode outputs over 10,000 mask draws is within 3 standard
    errors of the eval-mode output for a linear network, that a zero rate matches eval
    mode, and that eval mode is deterministic.

    """
    params = MLPParams([np.array([[1.0, 0.5, -1.0]]), np.array([[0.04], [0.06], [0.02]])],
                       [np.zeros(3), np.array([-0.05])], 'identity')
    x = np.ones((10000, 1))

    y_train, cache = forward(params, x, 'train', dropout_rate=0.5,
                             rng=np.random.default_rng(3))
    y_eval = predict_proba(params, x[:1])[0]
    assert set(np.unique(cache.masks[0])) <= {0.0, 2.0}

    stderr = np.std(y_train, ddof=1) / math.sqrt(len(y_train))
    assert stderr > 0
    assert abs(np.mean(y_train) - y_eval) <= 3 * stderr

    y_kept, _ = forward(params, x[:5], 'train', dropout_rate=0.0,
                        rng=np.random.default_rng(3))
    assert np.array_equal(y_kept, predict_proba(params, x[:5]))

    a = predict_proba(params, x[:5])
    b = predict_proba(params, x[:5])
    assert np.array_equal(a, b)

    with pytest.raises(ValidationError):
        forward(params, x, 'train', dropout_rate=0.5)


def test_sgd_step():
    """
    Confirm a single SGD update, that a zero learning rate changes nothing, and that
    two steps equal one step at twice the rate.

    """
    params = MLPParams([np.array([[1.0]])], [np.array([0.5])])
    grads = MLPParams([np.array([[2.0]])], [np.array([-1.0])])
    new = sgd_step(params, grads, 0.1)

    assert new.weights[0][0, 0] == pytest.approx(0.8)
    assert new.biases[0][0] == pytest.approx(0.6)
    assert params.weights[0][0, 0] == 1.0

    rng = np.random.default_rng(9)
    params = init_params(3, NetworkConfig(n_neurons=4), rng)
    grads = MLPParams([rng.normal(size=w.shape) for w in params.weights],
                      [rng.normal(size=b.shape) for b in params.biases])

    same = sgd_step(params, grads, 0.0)
    assert all(np.array_equal(p, q) for p, q in zip(params.arrays(), same.arrays()))

    two = sgd_step(sgd_step(params, grads, 0.05), grads, 0.05)
    one = sgd_step(params, grads, 0.1)
    assert all(np.allclose(p, q, rtol=1e-12, atol=1e-14)
               for p, q in zip(two.arrays(), one.arrays()))


def test_adam_step():
    """
    Confirm the first Adam update moves each parameter by about the learning rate
    against the sign of its gradient, whatever the gradient's scale, and that zero
    gradients from a zero state change nothing.

    """
    params = MLPParams([np.array([[1.0]])], [np.array([0.0])])
    grads = MLPParams([np.array([[0.3]])], [np.array([-5.0])])
    new, state = adam_step(params, grads, AdamState.zeros(params), 0.01, 1)

    assert new.weights[0][0, 0] == pytest.approx(0.99, abs=1e-6)
    assert new.biases[0][0] == pytest.approx(0.01, abs=1e-6)
    assert state.m[0][0, 0] == pytest.approx(0.03)

    with pytest.raises(ValidationError):
        adam_step(params, grads, state, 0.01, 0)

    params = init_params(3, NetworkConfig(n_neurons=4), np.random.default_rng(10))
    ones = MLPParams([np.ones_like(w) for w in params.weights],
                     [np.ones_like(b) for b in params.biases])
    new, _ = adam_step(params, ones, AdamState.zeros(params), 0.001, 1)
    for p, q in zip(params.arrays(), new.arrays()):
        assert np.allclose(q - p, -0.001, rtol=1e-6)

    zeros = MLPParams([np.zeros_like(w) for w in params.weights],
                      [np.zeros_like(b) for b in params.biases])
    new, _ = adam_step(params, zeros, AdamState.zeros(params), 0.001, 1)
    assert all(np.array_equal(p, q) for p, q in zip(params.arrays(), new.arrays()))

    grads = MLPParams([np.full(w.shape, -0.2) for w in params.weights],
                      [np.full(b.shape, 0.7) for b in params.biases])
    scaled = MLPParams([10 * g for g in grads.weights], [10 * g for g in grads.biases])
    small, _ = adam_step(params, grads, AdamState.zeros(params), 0.001, 1)
    large, _ = adam_step(params, scaled, AdamState.zeros(params), 0.001, 1)
    for p, a, b in zip(params.arrays(), small.arrays(), large.arrays()):
        assert np.allclose(a - p, b - p, rtol=1e-6)


def test_train_blobs():
    """
    Confirm both optimizers separate two blobs, with a falling loss, and that training
    is deterministic given the seed.

    """
    X, y = blobs()
    for optimizer, lr in [('Adam', 0.01), ('SGD', 0.1)]:
        cfg = NetworkConfig(n_hidden_layers=2, n_neurons=16, dropout_rate=0.1,
                            optimizer=optimizer, learning_rate=lr)
        losses = []
        params = train(cfg, TrainSettings(epochs=50, batch_size=32, rng_seed=4), X, y,
                       on_epoch=lambda e, loss: losses.append(loss))

        accuracy = np.mean((predict_proba(params, X) >= 0.5) == y)
        assert accuracy >= 0.99
        assert losses[-1] < losses[0]
        assert len(losses) == 50

    a = train(cfg, TrainSettings(epochs=3, rng_seed=7), X, y)
    b = train(cfg, TrainSettings(epochs=3, rng_seed=7), X, y)
    assert all(np.array_equal(p, q) for p, q in zip(a.arrays(), b.arrays()))


def test_train_errors():
    """
    Confirm invalid training data is rejected.

    """
    cfg = NetworkConfig()
    with pytest.raises(ValidationError):
        train(cfg, TrainSettings(), np.zeros((3, 2)), [0, 1])
    with pytest.raises(ValidationError):
        train(cfg, TrainSettings(), np.zeros((2, 2)), [0, 2])


def test_weight_snapshot(request):
    """
    Confirm a JSON weight snapshot reloads to identical parameters.

    """
    path = os.path.join(DATA_DIR, 'weights.json')
    request.addfinalizer(lambda: os.remove(path))

    params = init_params(4, NetworkConfig(n_hidden_layers=2, n_neurons=3,
                                          activation='TanH'), np.random.default_rng(5))
    save_params(params, path)
    loaded = load_params(path)

    assert loaded.activation == 'TanH'
    assert all(np.array_equal(p, q) for p, q in zip(params.arrays(), loaded.arrays()))
