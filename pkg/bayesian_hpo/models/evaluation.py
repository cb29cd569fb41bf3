"""
Classification metrics with attacks as the positive class, and the factory that turns
a search-space configuration into a fitness value (negated validation accuracy).

"""
import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.metrics import confusion_matrix

from ..utils import ValidationError, derive_seed
from .neuralnet import NetworkConfig, TrainSettings, predict_proba, train


logger = logging.getLogger(__name__)

METRIC_NAMES = ('accuracy', 'precision', 'recall', 'f1')


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValidationError("Confusion matrix cells must be nonnegative")

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricsReport:
    """
    Accuracy, precision, recall and F1 as fractions in [0, 1]. A metric whose
    denominator is zero is reported as 0 and listed in ``undefined``.

    """
    accuracy: float
    precision: float
    recall: float
    f1: float
    undefined: tuple = field(default_factory=tuple)

    def as_percentages(self):
        """
        The four metrics as percentages rounded to 2 decimals, in table column order.

        Returns
        -------
        dict

        """
        return {k: round(100.0 * getattr(self, k), 2) for k in METRIC_NAMES}


def confusion(y_true, y_prob, threshold=0.5):
    """
    Count TP/FP/FN/TN, predicting an attack whenever ``y_prob >= threshold``.

    Parameters
    ----------
    y_true : array-like of 0/1
    y_prob : array-like of probabilities in [0, 1]
    threshold : float, default 0.5

    Returns
    -------
    ConfusionMatrix

    """
    y_true = np.asarray(y_true).ravel()
    y_prob = np.asarray(y_prob, dtype=float).ravel()
    if len(y_true) != len(y_prob):
        raise ValidationError("Got {} labels and {} probabilities".format(
                len(y_true), len(y_prob)))
    if np.any((y_prob < 0) | (y_prob > 1)):
        raise ValidationError("Probabilities must be in [0, 1]")

    y_pred = (y_prob >= threshold).astype(int)
    tn, fp, fn, tp = confusion_matrix(y_true.astype(int), y_pred, labels=[0, 1]).ravel()
    return ConfusionMatrix(tp=int(tp), fp=int(fp), fn=int(fn), tn=int(tn))


def _ratio(num, den, name, undefined):
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def metrics(cm):
    """
    Accuracy (tp+tn)/total, precision tp/(tp+fp), recall tp/(tp+fn), and F1 as the
    harmonic mean of precision and recall.

    Parameters
    ----------
    cm : ConfusionMatrix

    Returns
    -------
    MetricsReport

    """
    if cm.total == 0:
        raise ValidationError("Cannot compute metrics from an empty confusion matrix")

    undefined = []
    accuracy = (cm.tp + cm.tn) / cm.total
    precision = _ratio(cm.tp, cm.tp + cm.fp, 'precision', undefined)
    recall = _ratio(cm.tp, cm.tp + cm.fn, 'recall', undefined)

    if 'precision' in undefined or 'recall' in undefined:
        undefined.append('f1')
        f1 = 0.0
    else:
        f1 = _ratio(2 * precision * recall, precision + recall, 'f1', undefined)

    return MetricsReport(accuracy, precision, recall, f1, tuple(undefined))


def make_objective(fit_part, val_part, base_seed=0, epochs=10, batch_size=256,
                   threshold=0.5):
    """
    Build the fitness function the optimizers minimize.

    The returned callable takes a configuration and a trial seed, trains a fresh
    network on ``fit_part`` with a seed derived from ``base_seed`` and the trial seed,
    and returns minus its accuracy on ``val_part``. Numerical failures during training
    propagate so the optimizer can record a penalized trial.

    Parameters
    ----------
    fit_part : DesignMatrix
    val_part : DesignMatrix
        Encoded with the same EncoderState as ``fit_part``.
    base_seed : int, default 0
    epochs : int, default 10
    batch_size : int, default 256
    threshold : float, default 0.5

    Returns
    -------
    callable
        ``objective(config, seed) -> float`` in [-1, 0].

    """
    if fit_part.X.shape[1] != val_part.X.shape[1]:
        raise ValidationError("Fit and validation matrices have different widths; "
                              "were they encoded with the same encoder?")

    def objective(cfg, seed=0):
        net = NetworkConfig.from_dict(cfg)
        settings = TrainSettings(epochs=epochs, batch_size=batch_size,
                                 rng_seed=derive_seed(base_seed, seed))
        params = train(net, settings, fit_part.X, fit_part.y)
        cm = confusion(val_part.y, predict_proba(params, val_part.X), threshold)
        return -metrics(cm).accuracy

    return objective
