"""
Dense feed-forward binary classifier in NumPy.

Hidden layers share one width, activation and dropout rate; the output layer is a
single sigmoid unit. Training minimizes mean binary cross-entropy with SGD or Adam
on shuffled mini-batches.

"""
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ..shared.artifacts import write_json
from ..utils import NumericalError, ValidationError


logger = logging.getLogger(__name__)

BCE_EPS = 1e-7
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

ACTIVATIONS = ('ReLU', 'sigmoid', 'TanH')
OPTIMIZERS = ('Adam', 'SGD')


#################
## ACTIVATIONS ##
#################

def _relu(z):
    return np.maximum(z, 0.0)

def _relu_grad(z, a):
    return (z > 0).astype(float)

def _sigmoid_grad(z, a):
    return a * (1.0 - a)

def _tanh_grad(z, a):
    return 1.0 - a**2

def _identity(z):
    return z

def _identity_grad(z, a):
    return np.ones_like(z)


# 'identity' isn't a searchable choice; it exists for linear test networks
_ACTIVATION_FUNCS = {
    'ReLU': (_relu, _relu_grad),
    'sigmoid': (expit, _sigmoid_grad),
    'TanH': (np.tanh, _tanh_grad),
    'identity': (_identity, _identity_grad),
}


def activate(kind, x):
    """
    Apply an activation function elementwise: 'ReLU' max(x, 0), 'sigmoid'
    e^x / (1 + e^x) computed without overflow, or 'TanH'.

    Parameters
    ----------
    kind : str
    x : float or np.ndarray

    Returns
    -------
    float or np.ndarray

    """
    if kind not in _ACTIVATION_FUNCS:
        raise ValidationError("Unknown activation '{}'".format(kind))
    out = _ACTIVATION_FUNCS[kind][0](np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def bce_loss(y, y_hat):
    """
    Binary cross-entropy -y log(y_hat) - (1 - y) log(1 - y_hat), with predictions
    clamped to [1e-7, 1 - 1e-7]. Arrays give the mean over samples.

    Parameters
    ----------
    y : int or array-like of 0/1 labels
    y_hat : float or array-like of probabilities

    Returns
    -------
    float

    """
    y = np.asarray(y, dtype=float)
    p = np.clip(np.asarray(y_hat, dtype=float), BCE_EPS, 1.0 - BCE_EPS)
    return float(np.mean(-y * np.log(p) - (1.0 - y) * np.log(1.0 - p)))


###########################
## NETWORK CONFIGURATION ##
###########################

class NetworkConfig(object):
    """
    Architecture and optimizer choices for one network, i.e. the hyperparameters the
    search explores. Parameters can be passed to the constructor or set as attributes.

    Parameters
    ----------
    n_hidden_layers : int, default 1
    n_neurons : int, default 64
        Width shared by every hidden layer.
    dropout_rate : float, default 0.5
        Applied after the activation of each hidden layer during training.
    activation : 'ReLU', 'sigmoid', or 'TanH', default 'ReLU'
    optimizer : 'Adam' or 'SGD', default 'Adam'
    learning_rate : float, default 1e-3

    """
    def __init__(self, n_hidden_layers=1, n_neurons=64, dropout_rate=0.5,
                 activation='ReLU', optimizer='Adam', learning_rate=1e-3):
        self.n_hidden_layers = n_hidden_layers
        self.n_neurons = n_neurons
        self.dropout_rate = dropout_rate
        self.activation = activation
        self.optimizer = optimizer
        self.learning_rate = learning_rate


    def validate(self):
        if int(self.n_hidden_layers) < 1 or int(self.n_neurons) < 1:
            raise ValidationError("Networks need at least one hidden layer and neuron")
        if not 0 <= self.dropout_rate < 1:
            raise ValidationError("Dropout rate must be in [0, 1)")
        if self.activation not in ACTIVATIONS:
            raise ValidationError("Unknown activation '{}'".format(self.activation))
        if self.optimizer not in OPTIMIZERS:
            raise ValidationError("Unknown optimizer '{}'".format(self.optimizer))
        if not self.learning_rate > 0:
            raise ValidationError("Learning rate must be positive")
        return self


    @classmethod
    def from_dict(cls, d):
        """
        Build a NetworkConfig from a dict, e.g. a configuration drawn from the DNN
        search space. Keys that aren't network settings are ignored.

        """
        keys = ['n_hidden_layers', 'n_neurons', 'dropout_rate', 'activation',
                'optimizer', 'learning_rate']
        missing = [k for k in keys if k not in d]
        if missing:
            raise ValidationError("Configuration is missing {}".format(missing))

        return cls(n_hidden_layers=int(d['n_hidden_layers']),
                   n_neurons=int(d['n_neurons']),
                   dropout_rate=float(d['dropout_rate']),
                   activation=d['activation'], optimizer=d['optimizer'],
                   learning_rate=float(d['learning_rate'])).validate()


    def to_dict(self):
        return {
            'n_hidden_layers': self.n_hidden_layers,
            'n_neurons': self.n_neurons,
            'dropout_rate': self.dropout_rate,
            'activation': self.activation,
            'optimizer': self.optimizer,
            'learning_rate': self.learning_rate}


@dataclass
class TrainSettings:
    """
    Training-loop settings that aren't searched over. ``learning_rate`` defaults to
    the NetworkConfig's value when left as None.

    """
    epochs: int = 10
    batch_size: int = 256
    rng_seed: int = 0
    learning_rate: float = None

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValidationError("epochs and batch_size must be at least 1")


################
## PARAMETERS ##
################

@dataclass
class MLPParams:
    """
    Weights and biases of a network, layer by layer, ending with the single output
    unit. ``weights[i]`` has shape (fan_in, fan_out) and ``biases[i]`` (fan_out,).
    Gradients use the same container.

    """
    weights: list
    biases: list
    activation: str = 'ReLU'

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or len(self.weights) < 1:
            raise ValidationError("Need one bias vector per weight matrix")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValidationError("Layer {} has inconsistent shapes".format(i))
            if i > 0 and w.shape[0] != self.weights[i-1].shape[1]:
                raise ValidationError("Layer {} doesn't chain onto layer {}".format(i, i-1))
        if self.weights[-1].shape[1] != 1:
            raise ValidationError("The output layer must have a single unit")

    @property
    def input_dim(self):
        return self.weights[0].shape[0]

    @property
    def shapes(self):
        return [w.shape for w in self.weights]

    def copy(self):
        return MLPParams([w.copy() for w in self.weights],
                         [b.copy() for b in self.biases], self.activation)

    def arrays(self):
        """All weight and bias arrays, weights first."""
        return list(self.weights) + list(self.biases)

    def is_finite(self):
        return all(np.all(np.isfinite(a)) for a in self.arrays())


def init_params(input_dim, cfg, rng):
    """
    Glorot-uniform weights, U(-sqrt(6 / (fan_in + fan_out)), +...), and zero biases.

    Parameters
    ----------
    input_dim : int
    cfg : NetworkConfig
    rng : np.random.Generator

    Returns
    -------
    MLPParams

    """
    sizes = [input_dim] + [int(cfg.n_neurons)] * int(cfg.n_hidden_layers) + [1]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MLPParams(weights, biases, cfg.activation)


def save_params(params, path):
    """
    Write a JSON weight snapshot: {"activation", "layers": [{"weight", "bias"}, ...]}.

    """
    return write_json(path, {
        'activation': params.activation,
        'layers': [{'weight': w.tolist(), 'bias': b.tolist()}
                   for w, b in zip(params.weights, params.biases)]})


def load_params(path):
    with open(path) as f:
        d = json.load(f)
    return MLPParams([np.array(layer['weight'], dtype=float) for layer in d['layers']],
                     [np.array(layer['bias'], dtype=float) for layer in d['layers']],
                     d['activation'])


###############################
## FORWARD AND BACKWARD PASS ##
###############################

@dataclass
class ForwardCache:
    """
    Intermediate values from a forward pass, consumed by ``backward()``.

    """
    mode: str
    inputs: list          # input to each layer
    pre_activations: list  # affine output of each hidden layer
    activations: list     # activation output of each hidden layer, before dropout
    masks: list           # scaled keep-masks (None in eval mode or without dropout)
    y_hat: np.ndarray
    shapes: list = field(default_factory=list)


def forward(params, x_batch, mode='eval', dropout_rate=0.0, rng=None):
    """
    Run a batch through the network.

    Each hidden layer applies affine -> activation -> (train mode only) inverted
    dropout, where surviving units are scaled by 1 / (1 - dropout_rate). The output
    layer is affine -> sigmoid.

    Parameters
    ----------
    params : MLPParams
    x_batch : array-like of shape (n, input_dim)
    mode : 'train' or 'eval', default 'eval'
    dropout_rate : float, default 0
    rng : np.random.Generator, optional
        Required in train mode with a positive dropout rate.

    Returns
    -------
    y_hat : np.ndarray of shape (n,)
    cache : ForwardCache

    """
    x = np.atleast_2d(np.asarray(x_batch, dtype=float))
    if x.shape[1] != params.input_dim:
        raise ValidationError("Batch has {} columns, network expects {}".format(
                x.shape[1], params.input_dim))
    if mode not in ('train', 'eval'):
        raise ValidationError("Unknown mode '{}'".format(mode))

    act, _ = _ACTIVATION_FUNCS[params.activation]
    use_dropout = mode == 'train' and dropout_rate > 0
    if use_dropout and rng is None:
        raise ValidationError("Train-mode dropout needs a random generator")

    inputs, pre, post, masks = [], [], [], []
    h = x
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        inputs.append(h)
        z = h @ w + b
        a = act(z)
        pre.append(z)
        post.append(a)
        if use_dropout:
            mask = (rng.random(a.shape) >= dropout_rate) / (1.0 - dropout_rate)
            masks.append(mask)
            h = a * mask
        else:
            masks.append(None)
            h = a

    inputs.append(h)
    y_hat = expit(h @ params.weights[-1] + params.biases[-1]).ravel()

    cache = ForwardCache(mode=mode, inputs=inputs, pre_activations=pre,
                         activations=post, masks=masks, y_hat=y_hat,
                         shapes=params.shapes)
    return y_hat, cache


def backward(params, cache, y_batch):
    """
    Exact gradients of the mean binary cross-entropy with respect to every weight
    and bias, using the dropout masks recorded in the forward pass.

    Parameters
    ----------
    params : MLPParams
    cache : ForwardCache
        From ``forward()`` with the same params and batch.
    y_batch : array-like of shape (n,)

    Returns
    -------
    MLPParams
        Gradients, same shapes as ``params``.

    """
    y = np.asarray(y_batch, dtype=float).ravel()
    if cache.shapes != params.shapes or len(cache.inputs) != len(params.weights):
        raise ValidationError("Forward cache doesn't match these parameters")
    if len(y) != len(cache.y_hat):
        raise ValidationError("Got {} labels for a batch of {}".format(
                len(y), len(cache.y_hat)))

    _, act_grad = _ACTIVATION_FUNCS[params.activation]
    n = len(y)

    grad_w = [None] * len(params.weights)
    grad_b = [None] * len(params.biases)

    # sigmoid output + cross-entropy: dL/dz = (y_hat - y) / n
    delta = ((cache.y_hat - y) / n)[:, None]
    for i in range(len(params.weights) - 1, -1, -1):
        grad_w[i] = cache.inputs[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i == 0:
            break

        upstream = delta @ params.weights[i].T
        if cache.masks[i-1] is not None:
            upstream = upstream * cache.masks[i-1]
        delta = upstream * act_grad(cache.pre_activations[i-1], cache.activations[i-1])

    return MLPParams(grad_w, grad_b, params.activation)


################
## OPTIMIZERS ##
################

def sgd_step(params, grads, learning_rate):
    """
    Gradient-descent update w <- w - learning_rate * g for every array.

    Returns
    -------
    MLPParams
        New parameters; the inputs are not modified.

    """
    if grads.shapes != params.shapes:
        raise ValidationError("Gradient shapes don't match the parameters")
    return MLPParams([w - learning_rate * g for w, g in zip(params.weights, grads.weights)],
                     [b - learning_rate * g for b, g in zip(params.biases, grads.biases)],
                     params.activation)


@dataclass
class AdamState:
    """
    First and second moment estimates, one array per weight and bias array.

    """
    m: list
    v: list

    @classmethod
    def zeros(cls, params):
        return cls([np.zeros_like(a) for a in params.arrays()],
                   [np.zeros_like(a) for a in params.arrays()])


def adam_step(params, grads, state, learning_rate, t):
    """
    Adam update with beta1 = 0.9, beta2 = 0.999, eps = 1e-8 and bias correction.

    Parameters
    ----------
    params : MLPParams
    grads : MLPParams
    state : AdamState
        Zero-initialized before the first step.
    learning_rate : float
    t : int
        Step number, starting at 1.

    Returns
    -------
    (MLPParams, AdamState)

    """
    if t < 1:
        raise ValidationError("Adam step numbers start at 1")
    if grads.shapes != params.shapes:
        raise ValidationError("Gradient shapes don't match the parameters")

    new_m, new_v, updated = [], [], []
    for a, g, m, v in zip(params.arrays(), grads.arrays(), state.m, state.v):
        m = ADAM_BETA1 * m + (1 - ADAM_BETA1) * g
        v = ADAM_BETA2 * v + (1 - ADAM_BETA2) * g**2
        m_hat = m / (1 - ADAM_BETA1**t)
        v_hat = v / (1 - ADAM_BETA2**t)
        updated.append(a - learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS))
        new_m.append(m)
        new_v.append(v)

    k = len(params.weights)
    return (MLPParams(updated[:k], updated[k:], params.activation),
            AdamState(new_m, new_v))


##############
## TRAINING ##
##############

def train(cfg, settings, train_matrix, train_labels, on_epoch=None):
    """
    Train a network from scratch.

    Weights get Glorot-uniform initialization and biases start at zero. Each epoch
    shuffles the rows and makes one pass of mini-batch updates with the configured
    optimizer. Results are deterministic given ``settings.rng_seed``.

    Parameters
    ----------
    cfg : NetworkConfig
    settings : TrainSettings
    train_matrix : array-like of shape (n, input_dim)
    train_labels : array-like of shape (n,), values 0 or 1
    on_epoch : callable, optional
        Called as ``on_epoch(epoch, mean_loss)`` after every epoch.

    Returns
    -------
    MLPParams

    """
    cfg.validate()
    X = np.asarray(train_matrix, dtype=float)
    y = np.asarray(train_labels, dtype=float).ravel()
    if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
        raise ValidationError("Training matrix and labels have inconsistent shapes")
    if not np.all((y == 0) | (y == 1)):
        raise ValidationError("Training labels must be 0 or 1")

    rng = np.random.default_rng(settings.rng_seed)
    lr = cfg.learning_rate if settings.learning_rate is None else settings.learning_rate
    params = init_params(X.shape[1], cfg, rng)
    state = AdamState.zeros(params) if cfg.optimizer == 'Adam' else None
    step = 0

    for epoch in range(settings.epochs):
        order = rng.permutation(len(y))
        total = 0.0

        for start in range(0, len(y), settings.batch_size):
            idx = order[start:start + settings.batch_size]
            y_hat, cache = forward(params, X[idx], 'train', cfg.dropout_rate, rng)
            loss = bce_loss(y[idx], y_hat)
            if not math.isfinite(loss):
                raise NumericalError("Training loss became non-finite in epoch "
                                     "{}".format(epoch))
            total += loss * len(idx)

            grads = backward(params, cache, y[idx])
            step += 1
            if state is None:
                params = sgd_step(params, grads, lr)
            else:
                params, state = adam_step(params, grads, state, lr, step)

        if not params.is_finite():
            raise NumericalError("Network weights became non-finite in epoch "
                                 "{}".format(epoch))

        mean_loss = total / len(y)
        logger.debug("Epoch {}: loss {:.5f}".format(epoch, mean_loss))
        if on_epoch is not None:
            on_epoch(epoch, mean_loss)

    return params


def predict_proba(params, x_batch):
    """
    Attack probabilities for a batch, from an eval-mode forward pass (no dropout).

    Returns
    -------
    np.ndarray of shape (n,), values in [0, 1]

    """
    return forward(params, x_batch, mode='eval')[0]
