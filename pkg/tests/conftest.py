import os

import numpy as np
import pandas as pd
import pytest

import orca

from bayesian_hpo.data.nslkdd import COLUMNS, NUMERIC


TESTS_DIR = os.path.dirname(os.path.abspath(__file__))
DATA_DIR = os.path.join(TESTS_DIR, 'data')
CONFIGS_DIR = os.path.join(TESTS_DIR, 'configs')

SERVICES = ['http', 'ftp', 'smtp', 'private', 'domain_u']
FLAGS = ['SF', 'S0', 'REJ']


def synthetic_records(n, seed=0, attack_share=0.45, services=SERVICES):
    """
    NSL-KDD-shaped records where attacks have visibly different traffic statistics,
    so a small network can separate them.

    """
    rng = np.random.default_rng(seed)
    attack = rng.random(n) < attack_share

    df = pd.DataFrame(rng.random((n, len(NUMERIC))), columns=NUMERIC)
    df['serror_rate'] = np.where(attack, rng.uniform(0.7, 1.0, n), rng.uniform(0, 0.3, n))
    df['same_srv_rate'] = np.where(attack, rng.uniform(0, 0.3, n), rng.uniform(0.7, 1, n))
    df['src_bytes'] = np.where(attack, 0, rng.integers(100, 5000, n))
    df['num_outbound_cmds'] = 0  # constant, as in the real files
    df['protocol_type'] = rng.choice(['tcp', 'udp', 'icmp'], n)
    df['service'] = rng.choice(services, n)
    df['flag'] = np.where(attack, 'S0', rng.choice(FLAGS, n))
    df['label'] = np.where(attack, rng.choice(['neptune', 'smurf'], n), 'normal')
    df['difficulty'] = rng.integers(1, 22, n)
    return df[COLUMNS]


def write_records(path, df, difficulty=True):
    cols = COLUMNS if difficulty else COLUMNS[:-1]
    df[cols].to_csv(path, header=False, index=False)
    return path


@pytest.fixture
def orca_session():
    """
    Set up a clean Orca session.

    """
    orca.clear_all()


@pytest.fixture
def nslkdd_files(request):
    """
    Write small synthetic KDDTrain+, KDDTest+ and KDDTest-21 files. The test files
    include a service value the training file never uses.

    """
    paths = {
        'train': os.path.join(DATA_DIR, 'KDDTrain+.txt'),
        'test_plus': os.path.join(DATA_DIR, 'KDDTest+.txt'),
        'test_21': os.path.join(DATA_DIR, 'KDDTest-21.txt')}

    write_records(paths['train'], synthetic_records(400, seed=1))
    write_records(paths['test_plus'],
                  synthetic_records(150, seed=2, services=SERVICES + ['telnet']))
    write_records(paths['test_21'], synthetic_records(100, seed=3, attack_share=0.8),
                  difficulty=False)

    def teardown():
        for p in paths.values():
            if os.path.exists(p):
                os.remove(p)

    request.addfinalizer(teardown)
    return paths
