"""
Command-line front end, installed as ``study``.

    study run --config study.json [--seed N] [--register configs]
    study compare --config study.json [--seed N]
    study landscape --trials out/trials.jsonl --x learning_rate --y n_neurons
    study evaluate --incumbent out/incumbent.json [--config study.json]
    study describe --train KDDTrain+.txt [--test-plus ...] [--test-21 ...]

Exit status is 0 on success, 2 for numerical failures, and 1 for anything else:
usage errors, invalid input, unreadable files or unexpected errors. On failure a JSON
error object is printed to stderr and, when the output directory is known, written to
error.json.

"""
import argparse
import json
import logging
import os
import sys
from collections import OrderedDict

from bayesian_hpo import modelmanager, __version__
from bayesian_hpo.shared.artifacts import write_json
from bayesian_hpo.studies import reporting
from bayesian_hpo.studies.study import HyperparameterStudy, StudyConfig, run_comparison
from bayesian_hpo.utils import NumericalError, ValidationError


logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'

EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_NUMERICAL = 2


class StudyArgumentParser(argparse.ArgumentParser):
    """
    Argument parser that raises usage errors instead of exiting, so they are reported
    like any other invalid input.

    """
    def error(self, message):
        raise ValidationError("{}: {}".format(self.prog, message))


def build_parser():
    parser = StudyArgumentParser(prog='study',
            description="Bayesian hyperparameter optimization of NSL-KDD intrusion "
                        "detection networks.")
    parser.add_argument('--version', action='version', version=__version__)
    parser.add_argument('-v', '--verbose', action='store_true',
                        help="log debug messages")
    commands = parser.add_subparsers(dest='command', required=True)

    run = commands.add_parser('run', help="run one study")
    run.add_argument('--config', required=True, help="study config JSON")
    run.add_argument('--seed', type=int, help="override the config's seed")
    run.add_argument('--register', metavar='DIR',
                     help="save the finished study as a ModelManager step in DIR")

    compare = commands.add_parser('compare', help="run BO-GP and random search")
    compare.add_argument('--config', required=True, help="study config JSON")
    compare.add_argument('--seed', type=int, help="override the config's seed")

    landscape = commands.add_parser('landscape', help="GP fitness landscape")
    landscape.add_argument('--trials', required=True, help="trials.jsonl")
    landscape.add_argument('--x', required=True, help="parameter on the x axis")
    landscape.add_argument('--y', required=True, help="parameter on the y axis")
    landscape.add_argument('--config',
                           help="study config JSON (default: config.json next to the "
                                "trial log)")
    landscape.add_argument('--grid', type=int, default=reporting.LANDSCAPE_GRID)
    landscape.add_argument('--output', help="output directory")

    evaluate = commands.add_parser('evaluate', help="retrain and test an incumbent")
    evaluate.add_argument('--incumbent', required=True, help="incumbent.json")
    evaluate.add_argument('--config',
                          help="study config JSON (default: config.json next to the "
                               "incumbent)")
    evaluate.add_argument('--seed', type=int, help="override the config's seed")

    describe = commands.add_parser('describe', help="class distribution of the data")
    describe.add_argument('--train', required=True)
    describe.add_argument('--test-plus')
    describe.add_argument('--test-21')
    describe.add_argument('--expected-input-dim', type=int)
    describe.add_argument('--output', default='.', help="output directory")

    return parser


def configure_logging(verbose=False):
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root = logging.getLogger('bayesian_hpo')
    root.handlers = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def load_config(path, seed=None, fallback_dir=None):
    """
    Read a StudyConfig, falling back to config.json in ``fallback_dir``.

    """
    if path is None and fallback_dir is not None:
        path = os.path.join(fallback_dir, 'config.json')
    if path is None or not os.path.exists(path):
        raise FileNotFoundError("Study config not found: '{}'".format(path))

    cfg = StudyConfig.from_json(path)
    if seed is not None:
        cfg.seed = seed
    return cfg.validate()


def _run(args, state):
    cfg = load_config(args.config, args.seed)
    state['output_dir'] = cfg.output_dir

    study = HyperparameterStudy(config=cfg)
    study.run()

    if args.register is not None:
        os.makedirs(args.register, exist_ok=True)
        modelmanager.initialize(args.register)
        modelmanager.register(study)


def _compare(args, state):
    cfg = load_config(args.config, args.seed)
    state['output_dir'] = cfg.output_dir
    run_comparison(cfg)


def _landscape(args, state):
    trials_dir = os.path.dirname(os.path.abspath(args.trials))
    state['output_dir'] = args.output or trials_dir

    saved_config = os.path.join(trials_dir, 'config.json')
    if args.config is None and not os.path.exists(saved_config):
        cfg = StudyConfig()
    else:
        cfg = load_config(args.config, fallback_dir=trials_dir)

    reporting.emit_landscape(args.trials, args.x, args.y, cfg.space(),
                             output_dir=state['output_dir'], grid=args.grid,
                             n_init=cfg.n_init, family=cfg.kernel, rng_seed=cfg.seed)


def _evaluate(args, state):
    incumbent_dir = os.path.dirname(os.path.abspath(args.incumbent))
    cfg = load_config(args.config, args.seed, fallback_dir=incumbent_dir)
    state['output_dir'] = cfg.output_dir

    with open(args.incumbent) as f:
        incumbent = json.load(f, object_pairs_hook=OrderedDict)
    reporting.evaluate_incumbent(incumbent.get('config', incumbent), cfg)


def _describe(args, state):
    state['output_dir'] = args.output
    paths = {'train': args.train, 'test_plus': args.test_plus, 'test_21': args.test_21}
    reporting.describe_datasets(paths, args.output, expected_dim=args.expected_input_dim)


COMMANDS = {'run': _run, 'compare': _compare, 'landscape': _landscape,
            'evaluate': _evaluate, 'describe': _describe}


def report_error(exc, exit_code, output_dir=None):
    """
    Print a machine-readable error to stderr, and save it as error.json when the
    output directory is known.

    """
    err = OrderedDict([('error', type(exc).__name__), ('message', str(exc)),
                       ('exit_code', exit_code)])
    print(json.dumps(err), file=sys.stderr)

    if output_dir is not None:
        try:
            write_json(os.path.join(output_dir, 'error.json'), err)
        except OSError:
            logger.error("Could not write error.json to '{}'".format(output_dir))


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except ValidationError as e:
        report_error(e, EXIT_USER_ERROR)
        return EXIT_USER_ERROR
    configure_logging(args.verbose)

    state = {'output_dir': None}
    try:
        COMMANDS[args.command](args, state)

    except NumericalError as e:
        logger.error(str(e))
        report_error(e, EXIT_NUMERICAL, state['output_dir'])
        return EXIT_NUMERICAL

    except (ValidationError, OSError, UnicodeDecodeError, json.JSONDecodeError,
            KeyError) as e:
        logger.error(str(e))
        report_error(e, EXIT_USER_ERROR, state['output_dir'])
        return EXIT_USER_ERROR

    except Exception as e:
        logger.exception("Unexpected error")
        report_error(e, EXIT_USER_ERROR, state['output_dir'])
        return EXIT_USER_ERROR

    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
