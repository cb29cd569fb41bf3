"""
Mixed hyperparameter spaces and their mapping to the unit hypercube.

A configuration is an ordered dict of parameter values. The GP surrogate never sees
configurations directly: it works on encoded points, vectors with one coordinate per
integer or real parameter and a one-hot block per categorical parameter, every
coordinate in [0, 1].

"""
import json
import logging
import math
from collections import OrderedDict

import numpy as np

from ..models.neuralnet import ACTIVATIONS, OPTIMIZERS
from ..shared.artifacts import write_text
from ..utils import ValidationError


logger = logging.getLogger(__name__)

KINDS = ('integer', 'real', 'categorical')
SCALES = ('linear', 'log10')


class ParamSpec(object):
    """
    One dimension of a search space. Immutable after construction.

    Parameters
    ----------
    name : str
    kind : 'integer', 'real', or 'categorical'
    lo, hi : numeric, optional
        Inclusive bounds, required for integer and real parameters.
    scale : 'linear' or 'log10', default 'linear'
        Real parameters only. A log10 scale requires lo > 0.
    labels : list of str, optional
        Categorical parameters only; at least two distinct labels. Order matters, it
        fixes the position of each label in the one-hot block.

    """
    __slots__ = ('name', 'kind', 'lo', 'hi', 'scale', 'labels')

    def __init__(self, name, kind, lo=None, hi=None, scale='linear', labels=None):
        if not name or not isinstance(name, str):
            raise ValidationError("Please provide a parameter name")

        if kind not in KINDS:
            raise ValidationError("Parameter '{}': unknown kind '{}'".format(name, kind))

        if kind == 'categorical':
            labels = tuple(labels or ())
            if len(labels) < 2 or len(set(labels)) != len(labels):
                raise ValidationError("Parameter '{}': needs at least two distinct "
                                      "labels".format(name))
            lo = hi = None
            scale = None

        else:
            if lo is None or hi is None:
                raise ValidationError("Parameter '{}': lo and hi are required".format(name))
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValidationError("Parameter '{}': bounds must be finite".format(name))

            if kind == 'integer':
                if lo != int(lo) or hi != int(hi):
                    raise ValidationError("Parameter '{}': integer bounds must be "
                                          "whole numbers".format(name))
                lo, hi = int(lo), int(hi)
                if lo > hi:
                    raise ValidationError("Parameter '{}': lo > hi".format(name))
                scale = None

            else:
                lo, hi = float(lo), float(hi)
                if scale not in SCALES:
                    raise ValidationError("Parameter '{}': unknown scale '{}'".format(
                            name, scale))
                if not lo < hi:
                    raise ValidationError("Parameter '{}': lo must be below hi".format(name))
                if scale == 'log10' and lo <= 0:
                    raise ValidationError("Parameter '{}': log10 scale needs lo > 0".format(
                            name))
            labels = None

        for attr, value in zip(self.__slots__, (name, kind, lo, hi, scale, labels)):
            object.__setattr__(self, attr, value)


    def __setattr__(self, key, value):
        raise AttributeError("ParamSpec is immutable")


    def __eq__(self, other):
        return isinstance(other, ParamSpec) and self.to_dict() == other.to_dict()


    def __hash__(self):
        return hash(json.dumps(self.to_dict(), sort_keys=True))


    def __repr__(self):
        return 'ParamSpec({})'.format(self.to_dict())


    @property
    def width(self):
        """Number of encoded coordinates this parameter occupies."""
        return len(self.labels) if self.kind == 'categorical' else 1


    @classmethod
    def from_dict(cls, d):
        """
        Build a ParamSpec from an entry of a search-space document:
        {name, kind, lo, hi, scale, labels}.

        """
        unknown = set(d) - {'name', 'kind', 'lo', 'hi', 'scale', 'labels'}
        if unknown:
            raise ValidationError("Unknown search-space keys: {}".format(sorted(unknown)))

        return cls(name=d.get('name'), kind=d.get('kind'), lo=d.get('lo'),
                   hi=d.get('hi'), scale=d.get('scale') or 'linear',
                   labels=d.get('labels'))


    def to_dict(self):
        return {
            'name': self.name,
            'kind': self.kind,
            'lo': self.lo,
            'hi': self.hi,
            'scale': self.scale,
            'labels': list(self.labels) if self.labels is not None else None}


    def check(self, value):
        """
        Validate one value and return it in canonical form (int, float, or str).

        """
        if self.kind == 'categorical':
            if value not in self.labels:
                raise ValidationError("Parameter '{}': '{}' is not one of {}".format(
                        self.name, value, list(self.labels)))
            return value

        if isinstance(value, (bool, np.bool_)) or not isinstance(
                value, (int, float, np.integer, np.floating)):
            raise ValidationError("Parameter '{}': expected a number, got {!r}".format(
                    self.name, value))

        if self.kind == 'integer':
            if value != int(value):
                raise ValidationError("Parameter '{}': {} is not an integer".format(
                        self.name, value))
            value = int(value)

        else:
            value = float(value)

        if not (self.lo <= value <= self.hi):
            raise ValidationError("Parameter '{}': {} is outside [{}, {}]".format(
                    self.name, value, self.lo, self.hi))
        return value


    def to_unit(self, value):
        """
        Position of a (valid) numeric value within the parameter's range, in [0, 1].

        """
        if self.kind == 'integer':
            span = self.hi - self.lo
            return 0.0 if span == 0 else (value - self.lo) / span

        if self.scale == 'log10':
            lo, hi = math.log10(self.lo), math.log10(self.hi)
            return (math.log10(value) - lo) / (hi - lo)

        return (value - self.lo) / (self.hi - self.lo)


    def from_unit(self, c, snap=True):
        """
        Inverse of ``to_unit()``. Integers are rounded unless ``snap`` is False, in
        which case the continuous value is returned (useful for plotting axes).

        """
        if self.kind == 'integer':
            value = self.lo + c * (self.hi - self.lo)
            if not snap:
                return value
            # round half up, then guard the bounds against float noise
            return int(min(max(math.floor(value + 0.5), self.lo), self.hi))

        if self.scale == 'log10':
            lo, hi = math.log10(self.lo), math.log10(self.hi)
            value = 10 ** (lo + c * (hi - lo))
        else:
            value = self.lo + c * (self.hi - self.lo)

        return min(max(value, self.lo), self.hi)


class SearchSpace(object):
    """
    Ordered collection of ParamSpecs with conversions between configurations and the
    unit-hypercube points the surrogate model works on.

    Parameters
    ----------
    params : list of ParamSpec or dict
        Dicts are converted with ``ParamSpec.from_dict()``.

    """
    def __init__(self, params):
        params = tuple(p if isinstance(p, ParamSpec) else ParamSpec.from_dict(p)
                       for p in params)
        if len(params) == 0:
            raise ValidationError("A search space needs at least one parameter")

        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ValidationError("Parameter names must be unique: {}".format(names))

        self._params = params
        self._offsets = np.cumsum([0] + [p.width for p in params])


    @property
    def params(self):
        return self._params

    @property
    def names(self):
        return [p.name for p in self._params]

    @property
    def encoded_dim(self):
        return int(self._offsets[-1])

    def __len__(self):
        return len(self._params)

    def __getitem__(self, name):
        for p in self._params:
            if p.name == name:
                return p
        raise KeyError(name)

    def __eq__(self, other):
        return isinstance(other, SearchSpace) and self._params == other._params

    def __repr__(self):
        return 'SearchSpace({})'.format(', '.join(self.names))


    def block(self, name):
        """
        Slice of encoded coordinates belonging to a parameter.

        """
        i = self.names.index(name)
        return slice(int(self._offsets[i]), int(self._offsets[i+1]))


    ########################
    ## PERSISTENCE

    @classmethod
    def from_dict(cls, d):
        """
        Build a space from a search-space document, i.e. a list of parameter entries.

        """
        if not isinstance(d, list):
            raise ValidationError("A search-space document must be a JSON array")
        return cls(d)


    def to_dict(self):
        return [p.to_dict() for p in self._params]


    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))


    def to_json(self, path=None):
        """
        Serialize the space. Writes to ``path`` if provided, otherwise returns the
        JSON text.

        """
        text = json.dumps(self.to_dict(), indent=2) + '\n'
        if path is None:
            return text
        write_text(path, text)


    @classmethod
    def preset(cls, name='default'):
        """
        Named search spaces for the DNN intrusion-detection experiment.

        'default' explores ReLU, sigmoid and TanH activations; 'table2' restricts the
        activations to ReLU and sigmoid. Both share the remaining ranges: 1-3 dense
        layers, 10-100 neurons, dropout 0.1-0.6, Adam or SGD, and a learning rate
        between 1e-6 and 1e-1 on a log scale.

        Parameters
        ----------
        name : 'default' or 'table2'

        Returns
        -------
        SearchSpace

        """
        activations = {'default': ACTIVATIONS, 'table2': ACTIVATIONS[:2]}
        if name not in activations:
            raise ValidationError("Unknown search-space preset '{}'".format(name))

        return cls([
            ParamSpec('n_hidden_layers', 'integer', 1, 3),
            ParamSpec('n_neurons', 'integer', 10, 100),
            ParamSpec('dropout_rate', 'real', 0.1, 0.6),
            ParamSpec('activation', 'categorical', labels=activations[name]),
            ParamSpec('optimizer', 'categorical', labels=OPTIMIZERS),
            ParamSpec('learning_rate', 'real', 1e-6, 1e-1, scale='log10')])


    @classmethod
    def load(cls, source):
        """
        Resolve a preset name, a path to a JSON document, or an existing space.

        """
        if isinstance(source, SearchSpace):
            return source
        if isinstance(source, list):
            return cls.from_dict(source)
        if source in ('default', 'table2'):
            return cls.preset(source)
        return cls.from_json(source)


    ########################
    ## CONVERSIONS

    def validate(self, cfg):
        """
        Check that a configuration has exactly one valid value per parameter.

        Parameters
        ----------
        cfg : dict

        Returns
        -------
        OrderedDict
            Canonical configuration in parameter order.

        """
        missing = [n for n in self.names if n not in cfg]
        unknown = [n for n in cfg if n not in self.names]
        if missing or unknown:
            raise ValidationError("Configuration does not match the search space "
                                  "(missing {}, unknown {})".format(missing, unknown))

        return OrderedDict((p.name, p.check(cfg[p.name])) for p in self._params)


    def encode(self, cfg):
        """
        Map a configuration to an encoded point in [0, 1]^encoded_dim.

        Integer and linear-real values are scaled by their bounds, log10-real values by
        the bounds of their exponent, and categorical values become one-hot blocks.

        Parameters
        ----------
        cfg : dict

        Returns
        -------
        np.ndarray of shape (encoded_dim,)

        """
        cfg = self.validate(cfg)
        coords = np.zeros(self.encoded_dim)

        for p, start in zip(self._params, self._offsets):
            value = cfg[p.name]
            if p.kind == 'categorical':
                coords[start + p.labels.index(value)] = 1.0
            else:
                coords[start] = p.to_unit(value)

        return coords


    def decode(self, point):
        """
        Map an encoded point back to a configuration. Integers are rounded, categorical
        blocks resolve to their largest coordinate with ties going to the first label.

        Parameters
        ----------
        point : array-like of shape (encoded_dim,)

        Returns
        -------
        OrderedDict

        """
        point = np.asarray(point, dtype=float)
        if point.shape != (self.encoded_dim,):
            raise ValidationError("Expected an encoded point of length {}, got shape "
                                  "{}".format(self.encoded_dim, point.shape))
        if not np.all(np.isfinite(point)):
            raise ValidationError("Encoded point has non-finite coordinates")
        if np.any(point < -1e-9) or np.any(point > 1 + 1e-9):
            raise ValidationError("Encoded coordinates must lie in [0, 1]")
        point = np.clip(point, 0.0, 1.0)

        cfg = OrderedDict()
        for p, start in zip(self._params, self._offsets):
            if p.kind == 'categorical':
                block = point[start:start + p.width]
                cfg[p.name] = p.labels[int(np.argmax(block))]  # argmax: first max wins
            else:
                cfg[p.name] = p.from_unit(float(point[start]))

        return cfg


    def from_unit_cube(self, u):
        """
        Map one unit coordinate per parameter (not per encoded dimension) to a valid
        configuration. Each integer value and each label gets an equal share of [0, 1),
        so a uniform ``u`` gives uniform values and a Latin-hypercube ``u`` gives a
        stratified design.

        Parameters
        ----------
        u : array-like of shape (len(space),)

        Returns
        -------
        OrderedDict

        """
        u = np.asarray(u, dtype=float)
        if u.shape != (len(self),):
            raise ValidationError("Expected {} unit coordinates, got shape {}".format(
                    len(self), u.shape))

        cfg = OrderedDict()
        for p, c in zip(self._params, u):
            if p.kind == 'categorical':
                cfg[p.name] = p.labels[min(int(c * len(p.labels)), len(p.labels) - 1)]
            elif p.kind == 'integer':
                n = p.hi - p.lo + 1
                cfg[p.name] = p.lo + min(int(c * n), n - 1)
            else:
                cfg[p.name] = p.from_unit(float(c))
        return cfg


    def sample_uniform(self, rng_seed):
        """
        Draw one configuration uniformly at random: integers uniform over their values,
        linear reals uniform over [lo, hi], log10 reals uniform in the exponent,
        labels uniform over the label set. Deterministic given the seed.

        Parameters
        ----------
        rng_seed : int

        Returns
        -------
        OrderedDict

        """
        rng = np.random.default_rng(rng_seed)
        return self.from_unit_cube(rng.random(len(self)))
