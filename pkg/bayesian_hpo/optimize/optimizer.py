"""
Outer optimization loops: Bayesian optimization with a GP surrogate and expected
improvement, and the random-search baseline.

An objective is any callable ``objective(config, seed) -> float`` where ``config`` is a
configuration of the search space and ``seed`` is a per-trial seed the objective should
use for its own randomness. Lower values are better.

"""
import logging
import math
import time
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from ..utils import NumericalError, ValidationError, derive_seed
from . import gp_surrogate
from .acquisition import propose_next


logger = logging.getLogger(__name__)

N_INIT = 8

# stream identifiers for derive_seed(), kept apart from trial indexes
_DESIGN_STREAM = 2**31 - 1
_FIT_STREAM = 2**31 - 2
_PROPOSE_STREAM = 2**31 - 3
_FALLBACK_STREAM = 2**31 - 4


@dataclass(frozen=True, eq=False)
class Trial:
    """
    One evaluation of the objective.

    Attributes
    ----------
    index : int
    cfg : OrderedDict
    encoded : tuple of float
    objective : float
        Finite; penalized when the objective failed (see ``flags``).
    wall_time_s : float
    seed : int
        Seed handed to the objective.
    flags : tuple of str
        Empty for a normal trial. 'non_finite' or 'numerical_failure' mark a
        penalized objective, 'surrogate_failure' a proposal made without a GP.

    """
    index: int
    cfg: OrderedDict
    encoded: tuple
    objective: float
    wall_time_s: float
    seed: int
    flags: tuple = field(default_factory=tuple)

    def to_record(self, include_time=True):
        """
        JSON-ready dict in the trial-log key order.

        """
        return OrderedDict([
            ('index', self.index),
            ('config', dict(self.cfg)),
            ('encoded', list(self.encoded)),
            ('objective', self.objective),
            ('wall_time_s', self.wall_time_s if include_time else None),
            ('seed', self.seed),
            ('flags', list(self.flags))])

    @classmethod
    def from_record(cls, d, space=None):
        cfg = OrderedDict(d['config']) if space is None else space.validate(d['config'])
        return cls(index=int(d['index']), cfg=cfg,
                   encoded=tuple(float(c) for c in d['encoded']),
                   objective=float(d['objective']),
                   wall_time_s=float(d['wall_time_s'] or 0.0),
                   seed=int(d['seed']), flags=tuple(d.get('flags', ())))


class OptimizationHistory(object):
    """
    Append-only record of trials with the incumbent (lowest objective, earliest trial
    on ties) tracked as trials arrive.

    """
    def __init__(self, trials=None):
        self._trials = []
        self._incumbent_index = None
        for t in trials or []:
            self.append(t)


    def append(self, trial):
        if trial.index != len(self._trials):
            raise ValidationError("Expected trial index {}, got {}".format(
                    len(self._trials), trial.index))
        if not math.isfinite(trial.objective):
            raise ValidationError("Trial objectives must be finite")

        self._trials.append(trial)
        if (self._incumbent_index is None or
                trial.objective < self._trials[self._incumbent_index].objective):
            self._incumbent_index = trial.index


    @property
    def trials(self):
        return tuple(self._trials)

    @property
    def incumbent_index(self):
        return self._incumbent_index

    @property
    def incumbent(self):
        if self._incumbent_index is None:
            return None
        return self._trials[self._incumbent_index]

    @property
    def objectives(self):
        return np.array([t.objective for t in self._trials])

    def __len__(self):
        return len(self._trials)


    def to_records(self, include_time=True):
        return [t.to_record(include_time) for t in self._trials]


    @classmethod
    def from_records(cls, records, space=None):
        return cls(Trial.from_record(r, space) for r in records)


def incumbent_curve(history):
    """
    Best objective seen so far after each trial.

    Parameters
    ----------
    history : OptimizationHistory

    Returns
    -------
    list of (int, float)

    """
    if len(history) == 0:
        raise ValidationError("Cannot build an incumbent curve from an empty history")

    best = np.minimum.accumulate(history.objectives)
    return [(i, float(v)) for i, v in enumerate(best)]


def latin_hypercube(space, n, rng_seed):
    """
    Space-filling initial design: a Latin hypercube with one stratified coordinate per
    parameter, mapped to configurations with ``SearchSpace.from_unit_cube()``.

    Parameters
    ----------
    space : SearchSpace
    n : int
    rng_seed : int

    Returns
    -------
    list of OrderedDict

    """
    sampler = qmc.LatinHypercube(d=len(space), seed=np.random.default_rng(rng_seed))
    return [space.from_unit_cube(u) for u in sampler.random(n)]


def _evaluate(space, objective, cfg, history, base_seed, flags=()):
    """
    Run the objective for one configuration and append the trial. Non-finite results
    and numerical failures are replaced by the worst objective so far plus one.

    """
    index = len(history)
    seed = derive_seed(base_seed, index)
    flags = list(flags)

    start = time.perf_counter()
    try:
        value = float(objective(cfg, seed))
        if not math.isfinite(value):
            flags.append('non_finite')
    except NumericalError as e:
        logger.warning("Trial {} failed numerically: {}".format(index, e))
        value = float('nan')
        flags.append('numerical_failure')
    elapsed = time.perf_counter() - start

    if not math.isfinite(value):
        worst = float(np.max(history.objectives)) if len(history) else 0.0
        value = worst + 1.0
        logger.warning("Trial {} penalized with objective {:.6g}".format(index, value))

    encoded = tuple(float(c) for c in space.encode(cfg))
    trial = Trial(index=index, cfg=cfg, encoded=encoded, objective=value,
                  wall_time_s=elapsed, seed=seed, flags=tuple(flags))
    history.append(trial)

    logger.info("Trial {}: objective {:.6g} (best {:.6g})".format(
            index, value, history.incumbent.objective))
    return trial


def bo_minimize(space, objective, budget, n_init=N_INIT, rng_seed=0,
                family='matern52', callback=None):
    """
    Bayesian optimization with a GP surrogate and expected improvement.

    Evaluates a Latin-hypercube design of ``n_init`` configurations, then repeatedly
    fits a GP to every (encoded point, objective) pair, maximizes expected improvement
    to propose the next point, decodes and evaluates it, until ``budget`` trials exist.

    Parameters
    ----------
    space : SearchSpace
    objective : callable
        ``objective(config, seed) -> float``, minimized.
    budget : int
        Total number of trials, including the initial design.
    n_init : int, default 8
    rng_seed : int, default 0
    family : str, default 'matern52'
        GP kernel family.
    callback : callable, optional
        Called with the history after each trial is appended.

    Returns
    -------
    OptimizationHistory

    """
    if not (budget >= n_init >= 1):
        raise ValidationError("Need budget >= n_init >= 1, got budget={} and "
                              "n_init={}".format(budget, n_init))

    history = OptimizationHistory()

    for cfg in latin_hypercube(space, n_init, derive_seed(rng_seed, _DESIGN_STREAM)):
        _evaluate(space, objective, cfg, history, rng_seed)
        if callback is not None:
            callback(history)

    while len(history) < budget:
        t = len(history)
        X = np.array([trial.encoded for trial in history.trials])
        flags = ()
        try:
            gp = gp_surrogate.fit(X, history.objectives, family=family,
                                  rng_seed=derive_seed(rng_seed, _FIT_STREAM, t))
            proposal = propose_next(gp, history, derive_seed(rng_seed, _PROPOSE_STREAM, t))
            cfg = space.decode(proposal.point)

        except NumericalError as e:
            logger.warning("Surrogate fit failed at trial {} ({}); sampling at "
                           "random".format(t, e))
            cfg = space.sample_uniform(derive_seed(rng_seed, _FALLBACK_STREAM, t))
            flags = ('surrogate_failure',)

        _evaluate(space, objective, cfg, history, rng_seed, flags)
        if callback is not None:
            callback(history)

    return history


def random_search_minimize(space, objective, budget, rng_seed=0, callback=None):
    """
    Random-search baseline: ``budget`` independent uniform configurations.

    Parameters
    ----------
    space : SearchSpace
    objective : callable
        ``objective(config, seed) -> float``, minimized.
    budget : int
    rng_seed : int, default 0
    callback : callable, optional
        Called with the history after each trial is appended.

    Returns
    -------
    OptimizationHistory

    """
    if budget < 1:
        raise ValidationError("Need budget >= 1, got {}".format(budget))

    history = OptimizationHistory()
    for i in range(budget):
        cfg = space.sample_uniform(derive_seed(rng_seed, _DESIGN_STREAM, i))
        _evaluate(space, objective, cfg, history, rng_seed)
        if callback is not None:
            callback(history)

    return history
