import os

import pytest

import orca

from bayesian_hpo import modelmanager
from bayesian_hpo.data import LoadNSLKDD, LoadSettings
from bayesian_hpo.utils import ValidationError, validate_template

from conftest import CONFIGS_DIR


@pytest.fixture
def mm_session(orca_session):
    """
    Set up a clean Orca session and initialize ModelManager.

    """
    modelmanager.initialize(CONFIGS_DIR)


def test_template_validity():
    """
    Run the templates through the standard validation check.

    """
    assert validate_template(LoadNSLKDD)


def test_property_persistence(mm_session):
    """
    Test persistence of properties across registration, saving, and reloading.

    """
    t = LoadNSLKDD()
    t.data.table = 'nslkdd_train'
    t.data.path = 'data/KDDTrain+.txt'
    t.data.cache = False
    t.data.cache_scope = 'iteration'
    t.meta.name = 'train-data'
    t.meta.tags = ['nsl-kdd', 'train']
    t.meta.autorun = False

    d1 = t.to_dict()
    modelmanager.register(t)
    modelmanager.initialize(CONFIGS_DIR)
    d2 = modelmanager.get_step(t.meta.name).to_dict()

    assert d1 == d2
    assert 'train-data' in [s['name'] for s in modelmanager.list_steps()]
    modelmanager.remove_step(t.meta.name)
    assert not os.path.exists(os.path.join(CONFIGS_DIR, 'train-data.json'))


def test_load(mm_session, nslkdd_files):
    """
    Test registering an NSL-KDD file as a table, with autorun.

    """
    t = LoadNSLKDD(data=LoadSettings(table='nslkdd_train', path=nslkdd_files['train']))

    assert 'nslkdd_train' not in orca.list_tables()

    modelmanager.register(t)
    assert 'nslkdd_train' in orca.list_tables()
    df = orca.get_table('nslkdd_train').to_frame()
    assert len(df) == 400
    assert 'service' in df.columns

    modelmanager.initialize(CONFIGS_DIR)
    assert 'nslkdd_train' in orca.list_tables()

    modelmanager.remove_step(t.meta.name)


def test_without_autorun(mm_session, nslkdd_files):
    """
    Confirm that disabling autorun works.

    """
    t = LoadNSLKDD(data=LoadSettings(table='nslkdd_train', path=nslkdd_files['train']))
    t.meta.autorun = False

    modelmanager.register(t)
    assert 'nslkdd_train' not in orca.list_tables()

    modelmanager.remove_step(t.meta.name)


def test_missing_settings():
    """
    Confirm running without a table name or path raises an error.

    """
    with pytest.raises(ValidationError, match='table name'):
        LoadNSLKDD(data=LoadSettings(path='KDDTrain+.txt')).run()
    with pytest.raises(ValidationError, match='file path'):
        LoadNSLKDD(data=LoadSettings(table='nslkdd_train')).run()


def test_unknown_template():
    """
    Confirm building a step from an unregistered template raises an error.

    """
    with pytest.raises(KeyError):
        modelmanager.build_step({'meta': {'template': 'LoadTable', 'name': 'x'}})
