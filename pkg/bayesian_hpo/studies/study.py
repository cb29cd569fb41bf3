import json
import logging
import os
from collections import OrderedDict
from dataclasses import dataclass

import pandas as pd

from bayesian_hpo import modelmanager, __version__
from bayesian_hpo.data import nslkdd
from bayesian_hpo.data.load_table import LoadNSLKDD, LoadSettings
from bayesian_hpo.models.evaluation import make_objective
from bayesian_hpo.optimize import gp_surrogate
from bayesian_hpo.optimize.optimizer import (OptimizationHistory, bo_minimize,
        random_search_minimize)
from bayesian_hpo.optimize.searchspace import SearchSpace
from bayesian_hpo.shared import CoreTemplateSettings, write_csv, write_json, write_jsonl
from bayesian_hpo.studies import reporting
from bayesian_hpo.utils import ValidationError, get_df


logger = logging.getLogger(__name__)

METHODS = ('bo-gp', 'random')

TRAIN_TABLE = 'nslkdd_train'
TEST_PLUS_TABLE = 'nslkdd_test_plus'
TEST_21_TABLE = 'nslkdd_test_21'


class StudyConfig():
    """
    Settings for one hyperparameter study. Parameters can be passed to the constructor
    or set as attributes, and config files are JSON documents mirroring ``to_dict()``.

    Parameters
    ----------
    train_path : str, optional
        KDDTrain+ file. Required before running.

    test_plus_path : str, optional
        KDDTest+ file, used to evaluate the retrained incumbent.

    test_21_path : str, optional
        KDDTest-21 file, used to evaluate the retrained incumbent.

    search_space : str or list, default 'default'
        Preset name ('default' or 'table2'), path to a JSON search-space document, or
        the document itself.

    method : 'bo-gp' or 'random', default 'bo-gp'

    budget : int, default 40
        Total number of trials. Random search uses the same budget.

    n_init : int, default 8
        Size of the Latin-hypercube initial design for 'bo-gp'.

    kernel : str, default 'matern52'
        GP kernel family: 'squared-exponential', 'rational-quadratic' or 'matern52'.

    epochs : int, default 10

    batch_size : int, default 256

    seed : int, default 0
        Base seed for the optimizer, the data split and every trial's training.

    output_dir : str, default 'study-output'

    fit_fraction : float, default 0.8
        Share of the training data used to fit each trial's network; the rest is the
        validation data the fitness is computed on.

    threshold : float, default 0.5
        Probability at or above which a record is classified as an attack.

    train_subsample : int, optional
        Stratified subsample size for desk-scale studies. Default uses every row.

    expected_input_dim : int, optional
        If provided, the encoder's input dimension must equal this value.

    final_seed : int, default 2021
        Fixed seed for retraining the incumbent before test evaluation.

    log_wall_time : bool, default False
        Record trial timings in trials.jsonl. They always go to timings.csv; leaving
        them out of the trial log keeps reruns byte-identical.

    save_weights : bool, default True
        Write the retrained incumbent's weights to incumbent_weights.json.

    """
    def __init__(self,
            train_path = None,
            test_plus_path = None,
            test_21_path = None,
            search_space = 'default',
            method = 'bo-gp',
            budget = 40,
            n_init = 8,
            kernel = 'matern52',
            epochs = 10,
            batch_size = 256,
            seed = 0,
            output_dir = 'study-output',
            fit_fraction = 0.8,
            threshold = 0.5,
            train_subsample = None,
            expected_input_dim = None,
            final_seed = 2021,
            log_wall_time = False,
            save_weights = True):

        self.train_path = train_path
        self.test_plus_path = test_plus_path
        self.test_21_path = test_21_path
        self.search_space = search_space
        self.method = method
        self.budget = budget
        self.n_init = n_init
        self.kernel = kernel
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.output_dir = output_dir
        self.fit_fraction = fit_fraction
        self.threshold = threshold
        self.train_subsample = train_subsample
        self.expected_input_dim = expected_input_dim
        self.final_seed = final_seed
        self.log_wall_time = log_wall_time
        self.save_weights = save_weights


    @classmethod
    def from_dict(cls, d):
        """
        Create a class instance from a dictionary. Unknown keys are rejected.

        """
        unknown = set(d) - set(cls().to_dict())
        if unknown:
            raise ValidationError("Unknown study settings: {}".format(sorted(unknown)))
        return cls(**d)


    def to_dict(self):
        return OrderedDict([
            ('train_path', self.train_path),
            ('test_plus_path', self.test_plus_path),
            ('test_21_path', self.test_21_path),
            ('search_space', self.search_space),
            ('method', self.method),
            ('budget', self.budget),
            ('n_init', self.n_init),
            ('kernel', self.kernel),
            ('epochs', self.epochs),
            ('batch_size', self.batch_size),
            ('seed', self.seed),
            ('output_dir', self.output_dir),
            ('fit_fraction', self.fit_fraction),
            ('threshold', self.threshold),
            ('train_subsample', self.train_subsample),
            ('expected_input_dim', self.expected_input_dim),
            ('final_seed', self.final_seed),
            ('log_wall_time', self.log_wall_time),
            ('save_weights', self.save_weights)])


    @classmethod
    def from_json(cls, path):
        with open(path, encoding='utf-8') as f:
            d = json.load(f)
        if not isinstance(d, dict):
            raise ValidationError("Study config '{}' must be a JSON object".format(path))
        return cls.from_dict(d)


    def to_json(self, path):
        write_json(path, self.to_dict())


    def space(self):
        return SearchSpace.load(self.search_space)


    def validate(self, check_paths=False):
        """
        Check the settings for consistency, and optionally that the dataset files
        exist. Returns the object itself.

        """
        if self.method not in METHODS:
            raise ValidationError("Please provide a method of 'bo-gp' or 'random'")

        if self.kernel not in gp_surrogate.FAMILIES:
            raise ValidationError("Please provide a kernel from {}".format(
                    list(gp_surrogate.FAMILIES)))

        if not (int(self.budget) >= int(self.n_init) >= 1):
            raise ValidationError("Need budget >= n_init >= 1, got budget={} and "
                                  "n_init={}".format(self.budget, self.n_init))

        if not 0 < self.fit_fraction < 1:
            raise ValidationError("Please provide a fit_fraction between 0 and 1")

        if not 0 <= self.threshold <= 1:
            raise ValidationError("Please provide a threshold between 0 and 1")

        if int(self.epochs) < 1 or int(self.batch_size) < 1:
            raise ValidationError("epochs and batch_size must be at least 1")

        if int(self.seed) < 0 or int(self.final_seed) < 0:
            raise ValidationError("Seeds must be non-negative")

        if self.train_subsample is not None and int(self.train_subsample) < 2:
            raise ValidationError("Please provide a train_subsample of at least 2")

        self.space()

        if check_paths:
            if self.train_path is None:
                raise ValidationError("Please provide a training data path")
            for path in [self.train_path, self.test_plus_path, self.test_21_path]:
                if path is not None and not os.path.exists(path):
                    raise FileNotFoundError("Dataset not found: '{}'".format(path))

        return self


@dataclass
class StudyData:
    """
    Encoded training data for a study: the full (possibly subsampled) training
    matrix and its fit / validation split.

    """
    encoder: nslkdd.EncoderState
    train: nslkdd.DesignMatrix
    fit: nslkdd.DesignMatrix
    validation: nslkdd.DesignMatrix


def load_records(table, path):
    """
    Register an NSL-KDD file as an Orca table through the LoadNSLKDD template, and
    return the parsed records.

    """
    step = LoadNSLKDD(data=LoadSettings(table=table, path=path))
    step.run()
    return get_df(table)


def prepare_data(cfg):
    """
    Parse the training file, fit the encoder, encode, subsample and split.

    Parameters
    ----------
    cfg : StudyConfig

    Returns
    -------
    StudyData

    """
    records = load_records(TRAIN_TABLE, cfg.train_path)
    counts = nslkdd.class_counts(records)
    logger.info("Training data: {} normal, {} attack".format(
            counts['normal'], counts['attack']))

    encoder = nslkdd.fit_encoder(records, expected_dim=cfg.expected_input_dim)
    train = nslkdd.transform(encoder, records)
    train = nslkdd.subsample(train, cfg.train_subsample, cfg.seed)
    fit, validation = nslkdd.split(train, cfg.fit_fraction, cfg.seed)

    logger.info("Fitting on {} rows, validating on {} rows".format(
            len(fit), len(validation)))
    return StudyData(encoder, train, fit, validation)


def run_study(cfg, data=None):
    """
    Run a study end to end and write its artifacts to ``cfg.output_dir``:
    config.json, encoder.json, trials.jsonl (rewritten after every trial),
    incumbent.json, convergence.csv, samples_<param>.csv, timings.csv, and, when
    both test paths are configured, results.csv and the incumbent's weights.

    Parameters
    ----------
    cfg : StudyConfig
    data : StudyData, optional
        Pre-encoded data, e.g. shared between the arms of a comparison.

    Returns
    -------
    OptimizationHistory

    """
    cfg.validate(check_paths=data is None)
    space = cfg.space()
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)

    cfg.to_json(os.path.join(out, 'config.json'))

    if data is None:
        data = prepare_data(cfg)
    write_json(os.path.join(out, 'encoder.json'), data.encoder.to_dict())

    objective = make_objective(data.fit, data.validation, base_seed=cfg.seed,
                               epochs=cfg.epochs, batch_size=cfg.batch_size,
                               threshold=cfg.threshold)

    trials_path = os.path.join(out, 'trials.jsonl')

    def log_trials(history):
        write_jsonl(trials_path, history.to_records(include_time=cfg.log_wall_time))

    logger.info("Running {} study with budget {}".format(cfg.method, cfg.budget))
    if cfg.method == 'bo-gp':
        history = bo_minimize(space, objective, cfg.budget, n_init=cfg.n_init,
                              rng_seed=cfg.seed, family=cfg.kernel, callback=log_trials)
    else:
        history = random_search_minimize(space, objective, cfg.budget,
                                         rng_seed=cfg.seed, callback=log_trials)

    reporting.write_history_artifacts(history, space, out,
                                      include_time=cfg.log_wall_time)

    best = history.incumbent
    logger.info("Incumbent: trial {} with validation accuracy {:.4f}".format(
            best.index, -best.objective))

    if cfg.test_plus_path is not None and cfg.test_21_path is not None:
        reporting.evaluate_incumbent(best.cfg, cfg, train=data.train,
                                     encoder=data.encoder)
    else:
        logger.warning("Test paths not configured; skipping incumbent evaluation")

    return history


def run_comparison(cfg):
    """
    Run both arms, BO-GP and random search, with the same seed, budget and encoded
    data, into ``<output_dir>/bo-gp`` and ``<output_dir>/random``. Then write
    optima.csv (the incumbent of each arm, one row per parameter) and comparison.csv
    (test metrics of each arm, when test paths are configured).

    Parameters
    ----------
    cfg : StudyConfig

    Returns
    -------
    dict of str -> OptimizationHistory

    """
    cfg.validate(check_paths=True)
    data = prepare_data(cfg)

    histories = OrderedDict()
    for method in ['random', 'bo-gp']:
        arm = StudyConfig.from_dict(dict(cfg.to_dict(), method=method,
                output_dir=os.path.join(cfg.output_dir, method)))
        histories[method] = run_study(arm, data=data)

    space = cfg.space()
    optima = pd.DataFrame({'parameter': space.names + ['validation_accuracy']})
    for method, history in histories.items():
        best = history.incumbent
        optima[method] = list(best.cfg.values()) + [-best.objective]
    write_csv(os.path.join(cfg.output_dir, 'optima.csv'), optima)

    results = []
    for method in histories:
        path = os.path.join(cfg.output_dir, method, 'results.csv')
        if os.path.exists(path):
            df = pd.read_csv(path)
            df.insert(0, 'method', method)
            results.append(df)

    if results:
        write_csv(os.path.join(cfg.output_dir, 'comparison.csv'),
                  pd.concat(results, ignore_index=True), float_format='%.2f')

    return histories


@modelmanager.template
class HyperparameterStudy():
    """
    Template for a hyperparameter study on NSL-KDD: searches the DNN hyperparameter
    space with BO-GP or random search, then retrains and evaluates the incumbent.
    Parameters may be passed to the constructor, but they are easier to set as
    attributes.

    After running, the trial log is kept in ``history`` and saved alongside the step
    as a supplemental object.

    Parameters
    ----------
    meta : :mod:`~bayesian_hpo.shared.CoreTemplateSettings`, optional
        Standard parameters.

    config : :mod:`~bayesian_hpo.studies.StudyConfig`, optional
        Settings for the study.

    history : :mod:`~bayesian_hpo.optimize.OptimizationHistory`, optional
        Trials from a completed run. Set automatically by ``run()``.

    """
    def __init__(self, meta=None, config=None, history=None):

        self.meta = CoreTemplateSettings() if meta is None else meta
        self.meta.template = self.__class__.__name__
        self.meta.template_version = __version__

        self.config = StudyConfig() if config is None else config
        self.history = history


    @classmethod
    def from_dict(cls, d):
        """
        Create a class instance from a saved dictionary.

        """
        config = StudyConfig.from_dict(d['config'])
        history = None
        for item in d.get('supplemental_objects') or []:
            if item['name'] == 'trials' and item.get('content') is not None:
                history = OptimizationHistory.from_records(item['content'],
                                                           config.space())

        return cls(meta=CoreTemplateSettings.from_dict(d['meta']), config=config,
                   history=history)


    def to_dict(self):
        """
        Create a dictionary representation of the object.

        """
        d = {'meta': self.meta.to_dict(), 'config': self.config.to_dict()}

        if self.history is not None:
            d['supplemental_objects'] = [{
                'name': 'trials',
                'content': self.history.to_records(self.config.log_wall_time),
                'content_type': 'jsonl',
                'required': True}]
        return d


    def run(self):
        """
        Run the study. Requires ``config.train_path`` to be set.

        Returns
        -------
        OptimizationHistory

        """
        if self.config.train_path is None:
            raise ValidationError("Please provide a training data path")

        self.history = run_study(self.config)
        return self.history
