"""
Study artifacts derived from the trial log: the incumbent, convergence and sampling
tables, GP landscapes, test-set results of the retrained incumbent, and the dataset
class distribution.

"""
import json
import logging
import os
from collections import OrderedDict

import numpy as np
import pandas as pd

from ..data import nslkdd
from ..models import neuralnet
from ..models.evaluation import METRIC_NAMES, confusion, metrics
from ..models.neuralnet import NetworkConfig, TrainSettings, predict_proba, save_params
from ..optimize import gp_surrogate
from ..optimize.optimizer import N_INIT, OptimizationHistory, incumbent_curve
from ..shared.artifacts import write_csv, write_json, write_jsonl
from ..utils import ValidationError, derive_seed


logger = logging.getLogger(__name__)

LANDSCAPE_GRID = 50
_LANDSCAPE_STREAM = 2**31 - 5

DATASET_NAMES = OrderedDict([('train', 'KDDTrain+'), ('test_plus', 'KDDTest+'),
                             ('test_21', 'KDDTest-21')])


#######################
## HISTORY ARTIFACTS ##
#######################

def read_trials(path, space=None):
    """
    Rebuild an OptimizationHistory from a trials.jsonl file.

    Parameters
    ----------
    path : str
    space : SearchSpace, optional
        If provided, every logged configuration is validated against it.

    Returns
    -------
    OptimizationHistory

    """
    with open(path) as f:
        records = [json.loads(line, object_pairs_hook=OrderedDict)
                   for line in f if line.strip()]
    return OptimizationHistory.from_records(records, space)


def sample_counts(history, param):
    """
    How often each label of a categorical parameter was sampled, including labels
    that were never tried.

    """
    if param.kind != 'categorical':
        raise ValidationError("'{}' is not categorical".format(param.name))

    counts = pd.Series([t.cfg[param.name] for t in history.trials], dtype=object)
    counts = counts.value_counts().reindex(param.labels, fill_value=0)
    return pd.DataFrame({'category': param.labels, 'count': counts.to_numpy(dtype=int)})


def write_history_artifacts(history, space, output_dir, include_time=False):
    """
    Write every artifact that depends on the trial log alone: trials.jsonl,
    incumbent.json, convergence.csv, samples_<param>.csv for each categorical
    parameter, and timings.csv.

    Parameters
    ----------
    history : OptimizationHistory
    space : SearchSpace
    output_dir : str
    include_time : bool, default False
        Write wall-clock times into trials.jsonl.

    """
    write_jsonl(os.path.join(output_dir, 'trials.jsonl'), history.to_records(include_time))

    best = history.incumbent
    write_json(os.path.join(output_dir, 'incumbent.json'), OrderedDict([
        ('index', best.index),
        ('config', dict(best.cfg)),
        ('objective', best.objective),
        ('validation_accuracy', -best.objective)]))

    curve = pd.DataFrame(incumbent_curve(history), columns=['index', 'best_so_far'])
    write_csv(os.path.join(output_dir, 'convergence.csv'), curve)

    for param in space.params:
        if param.kind == 'categorical':
            write_csv(os.path.join(output_dir, 'samples_{}.csv'.format(param.name)),
                      sample_counts(history, param))

    timings = pd.DataFrame({'index': [t.index for t in history.trials],
                            'wall_time_s': [t.wall_time_s for t in history.trials]})
    write_csv(os.path.join(output_dir, 'timings.csv'), timings)


###############
## LANDSCAPE ##
###############

def _axis(space, name):
    if name not in space.names:
        raise ValidationError("Unknown parameter '{}'".format(name))
    param = space[name]
    if param.kind == 'categorical':
        raise ValidationError("Landscapes need numeric axes; '{}' is "
                              "categorical".format(name))
    return param, space.block(name).start


def emit_landscape(trials_path, param_x, param_y, space, output_dir=None,
                   grid=LANDSCAPE_GRID, n_init=N_INIT, family='matern52', rng_seed=0):
    """
    Estimated fitness over two numeric parameters, from a GP refit on the trial log.

    Both axes span their parameter's full range on a ``grid`` x ``grid`` lattice in
    encoded coordinates; every other coordinate is held at the incumbent's encoded
    value. Writes landscape.csv (x, y, estimated_fitness) with the GP posterior mean,
    and landscape_points.csv (x, y, objective, is_incumbent) with the sampled
    locations.

    Parameters
    ----------
    trials_path : str
        trials.jsonl of a completed study.
    param_x, param_y : str
        Names of two different integer or real parameters.
    space : SearchSpace
    output_dir : str, optional
        Defaults to the directory holding ``trials_path``.
    grid : int, default 50
    n_init : int, default 8
        The log must have at least this many trials.
    family : str, default 'matern52'
    rng_seed : int, default 0

    Returns
    -------
    pd.DataFrame
        The landscape grid.

    """
    if param_x == param_y:
        raise ValidationError("Please provide two different parameters")
    px, jx = _axis(space, param_x)
    py, jy = _axis(space, param_y)

    history = read_trials(trials_path, space)
    if len(history) < n_init:
        raise ValidationError("The trial log has {} trials; a landscape needs at least "
                              "{}".format(len(history), n_init))

    X = np.array([t.encoded for t in history.trials])
    gp = gp_surrogate.fit(X, history.objectives, family=family,
                          rng_seed=derive_seed(rng_seed, _LANDSCAPE_STREAM))

    ticks = np.linspace(0.0, 1.0, grid)
    cx, cy = np.meshgrid(ticks, ticks, indexing='ij')
    points = np.repeat(np.array(history.incumbent.encoded)[None, :], grid * grid, axis=0)
    points[:, jx] = cx.ravel()
    points[:, jy] = cy.ravel()
    mean, _ = gp_surrogate.predict_batch(gp, points)

    landscape = pd.DataFrame({
        'x': [px.from_unit(c, snap=False) for c in cx.ravel()],
        'y': [py.from_unit(c, snap=False) for c in cy.ravel()],
        'estimated_fitness': mean})

    sampled = pd.DataFrame({
        'x': [t.cfg[param_x] for t in history.trials],
        'y': [t.cfg[param_y] for t in history.trials],
        'objective': history.objectives,
        'is_incumbent': [t.index == history.incumbent_index for t in history.trials]})

    out = output_dir or os.path.dirname(os.path.abspath(trials_path))
    write_csv(os.path.join(out, 'landscape.csv'), landscape)
    write_csv(os.path.join(out, 'landscape_points.csv'), sampled)
    logger.info("Wrote a {}x{} landscape over '{}' and '{}'".format(
            grid, grid, param_x, param_y))
    return landscape


################
## EVALUATION ##
################

def _check_test_ordering(results):
    acc = results.set_index('dataset')['accuracy']
    if acc[DATASET_NAMES['test_21']] > acc[DATASET_NAMES['test_plus']]:
        logger.warning("Accuracy on {} ({:.2f}) exceeds accuracy on {} ({:.2f}); the "
                       "harder subset usually scores lower".format(
                       DATASET_NAMES['test_21'], acc[DATASET_NAMES['test_21']],
                       DATASET_NAMES['test_plus'], acc[DATASET_NAMES['test_plus']]))


def evaluate_incumbent(incumbent, cfg, train=None, encoder=None):
    """
    Retrain the incumbent configuration on all training data (fit and validation parts
    together) with ``cfg.final_seed``, then evaluate it on KDDTest+ and KDDTest-21.

    Writes results.csv to ``cfg.output_dir`` with one row per test set and the columns
    dataset, accuracy, precision, recall, f1 as percentages with 2 decimals. Also
    writes incumbent_weights.json when ``cfg.save_weights`` is set.

    Parameters
    ----------
    incumbent : dict
        Configuration to retrain.
    cfg : StudyConfig
    train : DesignMatrix, optional
        Encoded training data; re-derived from ``cfg`` when omitted.
    encoder : EncoderState, optional
        Required together with ``train``.

    Returns
    -------
    pd.DataFrame

    """
    from .study import TEST_21_TABLE, TEST_PLUS_TABLE, load_records, prepare_data

    for path in [cfg.test_plus_path, cfg.test_21_path]:
        if path is None:
            raise ValidationError("Please provide paths for both test datasets")
        if not os.path.exists(path):
            raise FileNotFoundError("Dataset not found: '{}'".format(path))

    if train is None or encoder is None:
        data = prepare_data(cfg)
        train, encoder = data.train, data.encoder

    net = NetworkConfig.from_dict(cfg.space().validate(incumbent))
    settings = TrainSettings(epochs=cfg.epochs, batch_size=cfg.batch_size,
                             rng_seed=cfg.final_seed)
    logger.info("Retraining the incumbent on {} rows".format(len(train)))
    params = neuralnet.train(net, settings, train.X, train.y)

    rows = []
    for key, table, path in [('test_plus', TEST_PLUS_TABLE, cfg.test_plus_path),
                             ('test_21', TEST_21_TABLE, cfg.test_21_path)]:
        test = nslkdd.transform(encoder, load_records(table, path))
        report = metrics(confusion(test.y, predict_proba(params, test.X), cfg.threshold))
        if report.undefined:
            logger.warning("Undefined metrics on {}: {}".format(
                    DATASET_NAMES[key], list(report.undefined)))
        rows.append(dict(dataset=DATASET_NAMES[key], **report.as_percentages()))

    results = pd.DataFrame(rows, columns=['dataset'] + list(METRIC_NAMES))
    _check_test_ordering(results)

    os.makedirs(cfg.output_dir, exist_ok=True)
    write_csv(os.path.join(cfg.output_dir, 'results.csv'), results, float_format='%.2f')
    if cfg.save_weights:
        save_params(params, os.path.join(cfg.output_dir, 'incumbent_weights.json'))

    return results


###################
## DISTRIBUTIONS ##
###################

def describe_datasets(paths, output_dir, expected_dim=None):
    """
    Class distribution of each NSL-KDD file, written to distribution.csv with one row
    per record type (normal, attack, total) and one column per dataset. The encoder's
    input dimension is computed from the training file and logged.

    Parameters
    ----------
    paths : dict
        Keys among 'train', 'test_plus', 'test_21'; values are file paths. 'train' is
        required.
    output_dir : str
    expected_dim : int, optional

    Returns
    -------
    pd.DataFrame

    """
    if paths.get('train') is None:
        raise ValidationError("Please provide a training data path")

    table = pd.DataFrame({'type': ['normal', 'attack', 'total']})
    for key, name in DATASET_NAMES.items():
        path = paths.get(key)
        if path is None:
            continue
        if not os.path.exists(path):
            raise FileNotFoundError("Dataset not found: '{}'".format(path))

        records = nslkdd.parse(path)
        counts = nslkdd.class_counts(records)
        table[name] = [counts['normal'], counts['attack'], len(records)]

        if key == 'train':
            nslkdd.fit_encoder(records, expected_dim=expected_dim)

    write_csv(os.path.join(output_dir, 'distribution.csv'), table)
    return table
