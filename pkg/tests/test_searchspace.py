import json
import os

import numpy as np
import pytest

from bayesian_hpo.models.neuralnet import ACTIVATIONS, OPTIMIZERS, NetworkConfig
from bayesian_hpo.optimize.searchspace import ParamSpec, SearchSpace
from bayesian_hpo.utils import ValidationError

from conftest import CONFIGS_DIR


@pytest.fixture
def space():
    return SearchSpace.preset('default')


def test_param_spec_invariants():
    """
    Confirm that malformed parameter declarations are rejected.

    """
    with pytest.raises(ValidationError):
        ParamSpec('n', 'integer', 3, 1)
    with pytest.raises(ValidationError):
        ParamSpec('lr', 'real', 0.1, 0.1)
    with pytest.raises(ValidationError):
        ParamSpec('lr', 'real', 0.0, 0.1, scale='log10')
    with pytest.raises(ValidationError):
        ParamSpec('act', 'categorical', labels=['ReLU'])
    with pytest.raises(ValidationError):
        ParamSpec('act', 'categorical', labels=['ReLU', 'ReLU'])
    with pytest.raises(ValidationError):
        SearchSpace([ParamSpec('a', 'integer', 0, 1), ParamSpec('a', 'integer', 0, 1)])

    p = ParamSpec('n', 'integer', 1, 3)
    with pytest.raises(AttributeError):
        p.lo = 0


def test_presets(space):
    """
    Confirm the preset spaces have the expected parameters and encoded dimension.

    """
    assert space.names == ['n_hidden_layers', 'n_neurons', 'dropout_rate', 'activation',
                           'optimizer', 'learning_rate']
    assert space.encoded_dim == 1 + 1 + 1 + 3 + 2 + 1
    assert space['activation'].labels == ('ReLU', 'sigmoid', 'TanH')
    assert space['learning_rate'].scale == 'log10'

    table2 = SearchSpace.preset('table2')
    assert table2['activation'].labels == ('ReLU', 'sigmoid')
    assert table2.encoded_dim == 8

    with pytest.raises(ValidationError):
        SearchSpace.preset('missing')


def test_presets_match_network_choices(space):
    """
    Confirm the preset labels are the choices the network accepts, so every sampled
    configuration builds a valid NetworkConfig.

    """
    assert space['activation'].labels == ACTIVATIONS
    assert space['optimizer'].labels == OPTIMIZERS
    assert set(SearchSpace.preset('table2')['activation'].labels) < set(ACTIVATIONS)

    for seed in range(50):
        NetworkConfig.from_dict(space.sample_uniform(seed)).validate()


def test_encode_examples():
    """
    Confirm the encoding of bounds, log-scale endpoints, and one-hot blocks.

    """
    s = SearchSpace([ParamSpec('layers', 'integer', 1, 3),
                     ParamSpec('lr', 'real', 1e-6, 1e-1, scale='log10'),
                     ParamSpec('act', 'categorical', labels=['ReLU', 'sigmoid'])])

    assert list(s.encode({'layers': 1, 'lr': 1e-6, 'act': 'sigmoid'})) == [0, 0, 0, 1]
    assert s.encode({'layers': 3, 'lr': 1e-1, 'act': 'ReLU'})[1] == pytest.approx(1.0)


def test_encode_rejects_bad_values(space):
    """
    Confirm that invalid values raise errors naming the parameter.

    """
    cfg = space.sample_uniform(0)
    cfg['n_neurons'] = 101
    with pytest.raises(ValidationError, match='n_neurons'):
        space.encode(cfg)

    cfg = space.sample_uniform(0)
    cfg['activation'] = 'softplus'
    with pytest.raises(ValidationError, match='activation'):
        space.encode(cfg)

    cfg = space.sample_uniform(0)
    del cfg['optimizer']
    with pytest.raises(ValidationError):
        space.encode(cfg)


def test_decode_examples():
    """
    Confirm integer rounding and the first-label tie-break.

    """
    s = SearchSpace([ParamSpec('n', 'integer', 10, 100),
                     ParamSpec('act', 'categorical', labels=['ReLU', 'sigmoid'])])

    cfg = s.decode([0.5, 0.2, 0.2])
    assert cfg['n'] == 55
    assert cfg['act'] == 'ReLU'

    with pytest.raises(ValidationError):
        s.decode([0.5, 0.2])
    with pytest.raises(ValidationError):
        s.decode([1.5, 0.2, 0.2])


def test_round_trip_and_range(space):
    """
    Confirm that decode inverts encode on random configurations and that every
    encoded coordinate is in [0, 1].

    """
    for seed in range(200):
        cfg = space.sample_uniform(seed)
        p = space.encode(cfg)
        assert np.all((p >= 0) & (p <= 1))

        back = space.decode(p)
        for name in ['n_hidden_layers', 'n_neurons', 'activation', 'optimizer']:
            assert back[name] == cfg[name]
        assert back['dropout_rate'] == pytest.approx(cfg['dropout_rate'])
        assert back['learning_rate'] == pytest.approx(cfg['learning_rate'], rel=1e-9)


def test_log_scale_monotonic(space):
    """
    Confirm encoding is strictly increasing in a log-scale parameter.

    """
    cfg = space.sample_uniform(1)
    coords = []
    for lr in np.logspace(-6, -1, 30):
        cfg['learning_rate'] = float(lr)
        coords.append(space.encode(cfg)[space.block('learning_rate')][0])

    assert np.all(np.diff(coords) > 0)


def test_sample_uniform(space):
    """
    Confirm determinism, and the marginal distributions of an integer and a log-scale
    parameter over 10,000 draws.

    """
    assert space.sample_uniform(7) == space.sample_uniform(7)

    draws = [space.sample_uniform(seed) for seed in range(10000)]

    layers = np.array([d['n_hidden_layers'] for d in draws])
    for v in [1, 2, 3]:
        assert 0.30 <= np.mean(layers == v) <= 0.37

    lr = np.array([d['learning_rate'] for d in draws])
    assert 10**-3.8 <= np.median(lr) <= 10**-3.2


def test_from_unit_cube_edges(space):
    """
    Confirm that unit coordinates of exactly 0 and 1 map to the first and last values.

    """
    lo = space.from_unit_cube(np.zeros(len(space)))
    hi = space.from_unit_cube(np.ones(len(space)))

    assert lo['n_hidden_layers'] == 1 and hi['n_hidden_layers'] == 3
    assert lo['activation'] == 'ReLU' and hi['activation'] == 'TanH'
    assert hi['learning_rate'] == pytest.approx(0.1)


def test_json_document(request, space):
    """
    Confirm that a space survives a round trip through its JSON document, and that
    unknown keys are rejected.

    """
    path = os.path.join(CONFIGS_DIR, 'space.json')
    request.addfinalizer(lambda: os.remove(path))

    space.to_json(path)
    assert SearchSpace.load(path) == space

    with open(path) as f:
        doc = json.load(f)
    assert doc[5] == {'name': 'learning_rate', 'kind': 'real', 'lo': 1e-6, 'hi': 0.1,
                      'scale': 'log10', 'labels': None}

    with pytest.raises(ValidationError):
        SearchSpace.from_dict([{'name': 'a', 'kind': 'integer', 'lo': 0, 'hi': 1,
                                'step': 1}])
