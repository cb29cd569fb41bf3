import logging

import orca

from bayesian_hpo import modelmanager, __version__
from bayesian_hpo.data import nslkdd
from bayesian_hpo.shared import CoreTemplateSettings
from bayesian_hpo.utils import ValidationError


logger = logging.getLogger(__name__)


class LoadSettings():
    """
    Stores custom parameters used by the :mod:`~bayesian_hpo.data.LoadNSLKDD`
    template. Parameters can be passed to the constructor or set as attributes.

    Parameters
    ----------
    table : str, optional
        Name of the Orca table to be created. Required before running the step.

    path : str, optional
        Local path of an NSL-KDD text file. Relative paths are resolved against the
        Python working directory. Required before running the step.

    cache : bool, default True
        Passed to ``orca.table()``. Files read from disk don't need to be re-parsed
        during a run.

    cache_scope : 'step', 'iteration', or 'forever', default 'forever'
        Passed to ``orca.table()``.

    """
    def __init__(self, table=None, path=None, cache=True, cache_scope='forever'):
        self.table = table
        self.path = path
        self.cache = cache
        self.cache_scope = cache_scope

    @classmethod
    def from_dict(cls, d):
        return cls(table=d['table'], path=d['path'], cache=d['cache'],
                   cache_scope=d['cache_scope'])

    def to_dict(self):
        return {'table': self.table, 'path': self.path, 'cache': self.cache,
                'cache_scope': self.cache_scope}


@modelmanager.template
class LoadNSLKDD():
    """
    Template for registering a parsed NSL-KDD file as an Orca table. Parameters may be
    passed to the constructor, but they are easier to set as attributes.

    An instance of this template class stores *instructions for loading a data file*,
    packaged into an Orca step. Running the instructions registers the table with Orca;
    the file is parsed lazily, the first time the table is requested.

    Parameters
    ----------
    meta : :mod:`~bayesian_hpo.shared.CoreTemplateSettings`, optional
        Standard parameters. This template sets the default value of ``meta.autorun``
        to True.

    data : :mod:`~bayesian_hpo.data.LoadSettings`, optional
        Special parameters for this template.

    """
    def __init__(self, meta=None, data=None):

        self.meta = CoreTemplateSettings(autorun=True) if meta is None else meta
        self.meta.template = self.__class__.__name__
        self.meta.template_version = __version__

        self.data = LoadSettings() if data is None else data


    @classmethod
    def from_dict(cls, d):
        """
        Create a class instance from a saved dictionary.

        """
        return cls(meta=CoreTemplateSettings.from_dict(d['meta']),
                   data=LoadSettings.from_dict(d['data']))


    def to_dict(self):
        """
        Create a dictionary representation of the object.

        """
        return {'meta': self.meta.to_dict(), 'data': self.data.to_dict()}


    def run(self):
        """
        Register the NSL-KDD file as an Orca table.

        Requires values to be set for ``data.table`` and ``data.path``.

        """
        if self.data.table is None:
            raise ValidationError("Please provide a table name")

        if self.data.path is None:
            raise ValidationError("Please provide a file path")

        path = self.data.path

        @orca.table(table_name=self.data.table, cache=self.data.cache,
                    cache_scope=self.data.cache_scope)
        def orca_table():
            logger.info("Parsing '{}' into table '{}'".format(path, self.data.table))
            return nslkdd.parse(path)
