"""
Cheap test objectives with known minima, for checking the optimizers without
training any networks. Each objective follows the optimizer's calling convention,
``f(config, seed)``, and ignores the seed.

"""
import math

import numpy as np

from .searchspace import ParamSpec, SearchSpace


BRANIN_MINIMUM = 0.397887
HARTMANN6_MINIMUM = -3.32237

_HARTMANN6_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_HARTMANN6_A = np.array([
    [10, 3, 17, 3.5, 1.7, 8],
    [0.05, 10, 17, 0.1, 8, 14],
    [3, 3.5, 1.7, 10, 17, 8],
    [17, 8, 0.05, 10, 0.1, 14]])
_HARTMANN6_P = 1e-4 * np.array([
    [1312, 1696, 5569, 124, 8283, 5886],
    [2329, 4135, 8307, 3736, 1004, 9991],
    [2348, 1451, 3522, 2883, 3047, 6650],
    [4047, 8828, 8732, 5743, 1091, 381]])


def branin_space():
    """Standard Branin domain, x1 in [-5, 10] and x2 in [0, 15]."""
    return SearchSpace([ParamSpec('x1', 'real', -5.0, 10.0),
                        ParamSpec('x2', 'real', 0.0, 15.0)])


def branin_value(x1, x2):
    """
    Branin-Hoo function. Three global minima of 0.397887, e.g. at (pi, 2.275).

    Works elementwise on arrays.

    """
    b = 5.1 / (4 * math.pi**2)
    c = 5 / math.pi
    t = 1 / (8 * math.pi)
    return (x2 - b * x1**2 + c * x1 - 6)**2 + 10 * (1 - t) * np.cos(x1) + 10


def branin(cfg, seed=None):
    return float(branin_value(cfg['x1'], cfg['x2']))


def hartmann6_space():
    """Unit hypercube in six dimensions."""
    return SearchSpace([ParamSpec('x{}'.format(i), 'real', 0.0, 1.0) for i in range(1, 7)])


def hartmann6(cfg, seed=None):
    """
    Six-dimensional Hartmann function, global minimum -3.32237.

    """
    x = np.array([cfg['x{}'.format(i)] for i in range(1, 7)])
    inner = np.sum(_HARTMANN6_A * (x - _HARTMANN6_P)**2, axis=1)
    return float(-np.sum(_HARTMANN6_ALPHA * np.exp(-inner)))
