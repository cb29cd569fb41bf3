"""
Gaussian-process regression over encoded points.

The model is a zero-mean GP on standardized targets with a stationary kernel
(squared-exponential, rational-quadratic, or Matern-5/2) that has one length scale per
input dimension. Kernel and noise hyperparameters are chosen by maximizing the log
marginal likelihood with Nelder-Mead from several starting points.

"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

from ..utils import NumericalError, ValidationError


logger = logging.getLogger(__name__)

FAMILIES = ('squared-exponential', 'rational-quadratic', 'matern52')

# bounds of the log-parameterized hyperparameters
LOG_LENGTH_SCALE_BOUNDS = (math.log(0.01), math.log(10.0))
LOG_SIGNAL_VARIANCE_BOUNDS = (math.log(0.05), math.log(20.0))
LOG_ALPHA_BOUNDS = (math.log(0.1), math.log(10.0))
LOG_NOISE_BOUNDS = (math.log(1e-8), math.log(1.0))

JITTER_START = 1e-10
JITTER_MAX = 1e-4
MIN_Y_STD = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    """
    Stationary covariance function with per-dimension length scales.

    Attributes
    ----------
    family : str
        One of 'squared-exponential', 'rational-quadratic', 'matern52'.
    length_scales : tuple of float
    signal_variance : float
    alpha : float
        Shape parameter, used by the rational-quadratic family only.

    """
    family: str
    length_scales: tuple
    signal_variance: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError("Unknown kernel family '{}'; choose from {}".format(
                    self.family, FAMILIES))
        object.__setattr__(self, 'length_scales',
                           tuple(float(v) for v in np.atleast_1d(self.length_scales)))
        values = self.length_scales + (self.signal_variance, self.alpha)
        if not all(math.isfinite(v) and v > 0 for v in values):
            raise ValidationError("Kernel parameters must be finite and strictly positive")

    @property
    def dim(self):
        return len(self.length_scales)


def kernel_matrix(k, A, B):
    """
    Cross-covariance matrix between the rows of ``A`` and ``B``.

    Parameters
    ----------
    k : KernelSpec
    A : array-like of shape (n, d)
    B : array-like of shape (m, d)

    Returns
    -------
    np.ndarray of shape (n, m)

    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != k.dim or B.shape[1] != k.dim:
        raise ValidationError("Points have dimension {} and {}, kernel expects {}".format(
                A.shape[1], B.shape[1], k.dim))

    ls = np.asarray(k.length_scales)
    r2 = cdist(A / ls, B / ls, 'sqeuclidean')

    if k.family == 'squared-exponential':
        return k.signal_variance * np.exp(-0.5 * r2)

    if k.family == 'rational-quadratic':
        return k.signal_variance * (1.0 + r2 / (2.0 * k.alpha)) ** (-k.alpha)

    r = np.sqrt(5.0 * r2)
    return k.signal_variance * (1.0 + r + r**2 / 3.0) * np.exp(-r)


def kernel_eval(k, a, b):
    """
    Covariance between two encoded points.

    Parameters
    ----------
    k : KernelSpec
    a, b : array-like of shape (d,)

    Returns
    -------
    float

    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (k.dim,) or b.shape != (k.dim,):
        raise ValidationError("Points have shapes {} and {}, kernel expects ({},)".format(
                a.shape, b.shape, k.dim))
    return float(kernel_matrix(k, a[None, :], b[None, :])[0, 0])


@dataclass(frozen=True, eq=False)
class FittedGP:
    """
    GP posterior conditioned on standardized observations. Treat as read-only.

    Attributes
    ----------
    kernel : KernelSpec
    noise_variance : float
        Observation noise on the standardized scale.
    jitter : float
        Diagonal term added on top of the noise to keep the factorization stable.
    X : np.ndarray of shape (n, d)
    y : np.ndarray of shape (n,)
        Standardized targets.
    y_mean, y_std : float
        Standardization constants, ``raw = y * y_std + y_mean``.
    chol : np.ndarray of shape (n, n)
        Lower Cholesky factor of K + (noise_variance + jitter) I.
    alpha_vec : np.ndarray of shape (n,)
        Solution of (K + (noise_variance + jitter) I) alpha = y.

    """
    kernel: KernelSpec
    noise_variance: float
    jitter: float
    X: np.ndarray
    y: np.ndarray
    y_mean: float
    y_std: float
    chol: np.ndarray
    alpha_vec: np.ndarray

    @property
    def n(self):
        return len(self.y)


def _factorize(K, noise_variance, signal_variance):
    """
    Cholesky factor of K + (noise + jitter) I, escalating the jitter tenfold from
    1e-10 to 1e-4 times the signal variance until the factorization succeeds.

    """
    jitter = JITTER_START * signal_variance
    eye = np.eye(len(K))

    while jitter <= JITTER_MAX * signal_variance * (1 + 1e-9):
        try:
            chol = np.linalg.cholesky(K + (noise_variance + jitter) * eye)
            if np.all(np.isfinite(chol)):
                return chol, jitter
        except np.linalg.LinAlgError:
            pass

        logger.debug("Cholesky failed with jitter {:.1e}, escalating".format(jitter))
        jitter *= 10.0

    raise NumericalError("Gram matrix is not positive definite even with jitter "
                         "{:.1e}".format(JITTER_MAX * signal_variance))


def condition(kernel, X, y, noise_variance=0.0, y_mean=0.0, y_std=1.0):
    """
    Build the posterior for fixed hyperparameters.

    Parameters
    ----------
    kernel : KernelSpec
    X : array-like of shape (n, d)
    y : array-like of shape (n,)
        Targets that are already standardized.
    noise_variance : float, default 0
    y_mean, y_std : float, default 0 and 1
        Constants used to report predictions on the raw scale.

    Returns
    -------
    FittedGP

    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(X) == 0 or len(X) != len(y):
        raise ValidationError("Need at least one point and as many targets as points")
    if noise_variance < 0:
        raise ValidationError("Noise variance must be nonnegative")

    K = kernel_matrix(kernel, X, X)
    chol, jitter = _factorize(K, noise_variance, kernel.signal_variance)
    alpha_vec = linalg.cho_solve((chol, True), y)

    return FittedGP(kernel=kernel, noise_variance=float(noise_variance),
                    jitter=float(jitter), X=X, y=y, y_mean=float(y_mean),
                    y_std=float(y_std), chol=chol, alpha_vec=alpha_vec)


def log_marginal_likelihood(gp):
    """
    Log marginal likelihood of the standardized targets under the GP,
    -1/2 y'alpha - sum(log diag(L)) - n/2 log(2 pi).

    Parameters
    ----------
    gp : FittedGP

    Returns
    -------
    float

    """
    diag = np.diag(gp.chol)
    if np.any(diag <= 0) or not np.all(np.isfinite(diag)):
        raise NumericalError("Invalid Cholesky factor")

    return float(-0.5 * gp.y @ gp.alpha_vec - np.sum(np.log(diag))
                 - 0.5 * gp.n * math.log(2 * math.pi))


def _unpack(theta, family, dim, noise_variance):
    """
    Map a log-parameter vector to (KernelSpec, noise_variance).

    """
    theta = np.asarray(theta)
    ls = np.exp(theta[:dim])
    s2 = math.exp(theta[dim])
    i = dim + 1

    alpha = 1.0
    if family == 'rational-quadratic':
        alpha = math.exp(theta[i])
        i += 1

    if noise_variance is None:
        noise_variance = math.exp(theta[i])

    return KernelSpec(family, tuple(ls), s2, alpha), noise_variance


def fit(X, y, family='matern52', noise_variance=None, n_restarts=5, rng_seed=0):
    """
    Fit a GP to observations: standardize the targets, then select kernel and noise
    hyperparameters by maximizing the log marginal likelihood.

    The search runs Nelder-Mead over log-parameters within fixed bounds, from a
    default starting point followed by random starts, and keeps the best result.

    Parameters
    ----------
    X : array-like of shape (n, d)
        Encoded points.
    y : array-like of shape (n,)
        Raw objective values.
    family : str, default 'matern52'
    noise_variance : float, optional
        Fix the (standardized) noise variance instead of fitting it, e.g. 0 for exact
        interpolation.
    n_restarts : int, default 5
        Number of Nelder-Mead starts.
    rng_seed : int, default 0
        Seed for the random starts.

    Returns
    -------
    FittedGP

    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(y) == 0:
        raise ValidationError("Cannot fit a GP without observations")
    if len(X) != len(y):
        raise ValidationError("Got {} points but {} targets".format(len(X), len(y)))
    if not np.all(np.isfinite(y)):
        raise ValidationError("Targets must be finite")
    if family not in FAMILIES:
        raise ValidationError("Unknown kernel family '{}'".format(family))

    y_mean = float(np.mean(y))
    y_std = float(np.std(y))
    if y_std < MIN_Y_STD:
        y_std = 1.0
    z = (y - y_mean) / y_std

    dim = X.shape[1]
    bounds = [LOG_LENGTH_SCALE_BOUNDS] * dim + [LOG_SIGNAL_VARIANCE_BOUNDS]
    start = [math.log(0.5)] * dim + [0.0]
    if family == 'rational-quadratic':
        bounds.append(LOG_ALPHA_BOUNDS)
        start.append(0.0)
    if noise_variance is None:
        bounds.append(LOG_NOISE_BOUNDS)
        start.append(math.log(1e-3))

    def objective(theta):
        try:
            kernel, noise = _unpack(theta, family, dim, noise_variance)
            gp = condition(kernel, X, z, noise)
            return -log_marginal_likelihood(gp)
        except (NumericalError, ValidationError):
            return 1e25

    rng = np.random.default_rng(rng_seed)
    lower, upper = np.array(bounds).T
    starts = [np.array(start)] + [rng.uniform(lower, upper)
                                  for _ in range(max(n_restarts, 1) - 1)]

    best_theta, best_value = None, np.inf
    for theta0 in starts:
        result = minimize(objective, theta0, method='Nelder-Mead', bounds=bounds,
                          options={'maxiter': 200 * len(theta0), 'xatol': 1e-4,
                                   'fatol': 1e-6})
        if result.fun < best_value:
            best_theta, best_value = result.x, result.fun

    if best_theta is None or not np.isfinite(best_value) or best_value >= 1e25:
        raise NumericalError("No hyperparameter setting gave a valid GP")

    kernel, noise = _unpack(best_theta, family, dim, noise_variance)
    gp = condition(kernel, X, z, noise, y_mean=y_mean, y_std=y_std)
    logger.debug("Fitted {} GP on {} points: LML {:.4f}, noise {:.3g}".format(
            family, gp.n, -best_value, noise))
    return gp


def predict_batch(gp, Xq):
    """
    Posterior mean and variance of the latent function at many points, on the raw
    target scale.

    Parameters
    ----------
    gp : FittedGP
    Xq : array-like of shape (m, d)

    Returns
    -------
    mean : np.ndarray of shape (m,)
    variance : np.ndarray of shape (m,), nonnegative

    """
    Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
    Ks = kernel_matrix(gp.kernel, gp.X, Xq)          # (n, m)
    mean = Ks.T @ gp.alpha_vec

    v = linalg.solve_triangular(gp.chol, Ks, lower=True)
    var = gp.kernel.signal_variance - np.sum(v**2, axis=0)
    var = np.maximum(var, 0.0)

    return mean * gp.y_std + gp.y_mean, var * gp.y_std**2


def predict(gp, x):
    """
    Posterior mean and variance at one encoded point, on the raw target scale.

    Parameters
    ----------
    gp : FittedGP
    x : array-like of shape (d,)

    Returns
    -------
    (float, float)

    """
    x = np.asarray(x, dtype=float)
    if x.shape != (gp.kernel.dim,):
        raise ValidationError("Expected a point of shape ({},), got {}".format(
                gp.kernel.dim, x.shape))
    mean, var = predict_batch(gp, x[None, :])
    return float(mean[0]), float(var[0])
