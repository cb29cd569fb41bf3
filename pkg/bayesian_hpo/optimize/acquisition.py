"""
Expected improvement and the inner search that picks the next point to evaluate.

Everything here follows the minimization convention: ``f_best`` is the smallest
objective observed so far, and EI rewards predictions below it.

"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from ..utils import ValidationError
from .gp_surrogate import predict_batch


logger = logging.getLogger(__name__)

N_CANDIDATES = 1024
N_REFINE = 8
STEP_START = 0.1
STEP_MIN = 1e-3
MAX_SWEEPS = 500


@dataclass(frozen=True, eq=False)
class AcquisitionResult:
    """
    Proposed point and its expected improvement.

    """
    point: np.ndarray
    ei_value: float


def expected_improvement(mean, variance, f_best):
    """
    Expected improvement E[max(0, f_best - f(x))] for a Gaussian prediction.

    With sigma = sqrt(variance) > 0 and z = (f_best - mean) / sigma this is
    sigma * (z * Phi(z) + phi(z)); with sigma = 0 it reduces to max(0, f_best - mean).
    Accepts scalars or arrays.

    Parameters
    ----------
    mean : float or np.ndarray
    variance : float or np.ndarray
    f_best : float

    Returns
    -------
    float or np.ndarray, nonnegative

    """
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    if np.any(variance < 0):
        raise ValidationError("Predictive variance must be nonnegative")

    sigma = np.sqrt(variance)
    improvement = f_best - mean

    with np.errstate(divide='ignore', invalid='ignore'):
        z = np.where(sigma > 0, improvement / np.where(sigma > 0, sigma, 1.0), 0.0)
        ei = sigma * (z * norm.cdf(z) + norm.pdf(z))

    ei = np.where(sigma > 0, ei, np.maximum(improvement, 0.0))
    ei = np.maximum(ei, 0.0)  # guard against tiny negative round-off in the tails

    return float(ei) if ei.ndim == 0 else ei


def _score(gp, points, f_best):
    mean, var = predict_batch(gp, points)
    return expected_improvement(mean, var, f_best)


def _best_index(points, ei):
    """
    Index of the highest EI; ties broken by the lexicographically smallest point so
    the choice doesn't depend on evaluation order.

    """
    # np.lexsort sorts by the last key first
    keys = tuple(points[:, j] for j in range(points.shape[1] - 1, -1, -1)) + (-ei,)
    return int(np.lexsort(keys)[0])


def _refine(gp, x, ei, f_best):
    """
    Coordinate-wise local search: try moving each coordinate up and down by the
    current step, take the best improving move, and halve the step once no move
    improves, from 0.1 down to 1e-3.

    """
    d = len(x)
    step = STEP_START

    for _ in range(MAX_SWEEPS):
        if step < STEP_MIN:
            break

        moves = np.repeat(x[None, :], 2 * d, axis=0)
        idx = np.arange(d)
        moves[idx, idx] += step
        moves[d + idx, idx] -= step
        moves = np.clip(moves, 0.0, 1.0)

        scores = _score(gp, moves, f_best)
        j = _best_index(moves, scores)
        if scores[j] > ei:
            x, ei = moves[j], float(scores[j])
        else:
            step /= 2.0

    return x, ei


def propose_next(gp, history, rng_seed, n_candidates=N_CANDIDATES, n_refine=N_REFINE):
    """
    Select the next point to evaluate by maximizing expected improvement.

    EI is scored at ``n_candidates`` uniform random points in [0, 1]^d plus every
    point already observed; the best ``n_refine`` of these are polished by
    coordinate-wise local search, and the overall best point is returned. If EI is
    zero everywhere, a uniform random point is returned instead.

    Parameters
    ----------
    gp : FittedGP
        Surrogate fitted on the history's encoded points.
    history : OptimizationHistory
        Supplies the incumbent objective (f_best) and the observed points.
    rng_seed : int
    n_candidates : int, default 1024
    n_refine : int, default 8

    Returns
    -------
    AcquisitionResult

    """
    rng = np.random.default_rng(rng_seed)
    d = gp.kernel.dim
    f_best = history.incumbent.objective

    observed = np.array([t.encoded for t in history.trials], dtype=float).reshape(-1, d)
    candidates = np.vstack([rng.random((n_candidates, d)), observed])
    scores = _score(gp, candidates, f_best)

    points, values = [candidates], [scores]
    order = np.lexsort(tuple(candidates[:, j] for j in range(d - 1, -1, -1)) + (-scores,))
    for i in order[:n_refine]:
        x, ei = _refine(gp, candidates[i].copy(), float(scores[i]), f_best)
        points.append(x[None, :])
        values.append(np.array([ei]))

    points = np.vstack(points)
    values = np.concatenate(values)
    best = _best_index(points, values)

    if not values[best] > 0:
        logger.warning("Expected improvement is zero everywhere; proposing a uniform "
                       "random point")
        return AcquisitionResult(point=rng.random(d), ei_value=0.0)

    return AcquisitionResult(point=points[best].copy(), ei_value=float(values[best]))
