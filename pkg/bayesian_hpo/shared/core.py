from bayesian_hpo import __version__
from bayesian_hpo.utils import update_name


class CoreTemplateSettings():
    """
    Metadata shared by every template in the package: how a configured step is named,
    tagged and described, and whether ModelManager runs it as soon as it's registered.
    Parameters can be passed to the constructor or set as attributes.

    Parameters
    ----------
    name : str, optional
        Name of the configured step. Generated from the template name and a timestamp
        when the step is registered without one.

    tags : list of str, optional

    notes : str, optional
        Free-form description, e.g. which experiment arm a study belongs to.

    autorun : bool, default False
        Run the step as soon as it's registered or reloaded. Data-loading templates
        switch this on by default.

    template : str
        Class name of the template, filled in by the template itself.

    template_version : str
        Package version the template was configured with.

    """
    def __init__(self,
            name = None,
            tags = None,
            notes = None,
            autorun = False,
            template = None,
            template_version = None):

        self.name = name
        self.tags = [] if tags is None else tags
        self.notes = notes
        self.autorun = autorun
        self.template = template
        self.template_version = template_version

        # automatic attributes
        self.modelmanager_version = __version__


    def assign_name(self):
        """
        Make sure the step has a name, generating one if needed, and return it.

        Returns
        -------
        str

        """
        self.name = update_name(self.template, self.name)
        return self.name


    @classmethod
    def from_dict(cls, d):
        """
        Create a class instance from a saved dictionary representation.

        Parameters
        ----------
        d : dict

        Returns
        -------
        obj : CoreTemplateSettings

        """
        return cls(
            name = d['name'],
            tags = d['tags'],
            notes = d.get('notes'),
            autorun = d['autorun'],
            template = d['template'],
            template_version = d['template_version'])


    def to_dict(self):
        """
        Create a dictionary representation of the object.

        Returns
        -------
        d : dict

        """
        return {
            'name': self.name,
            'tags': self.tags,
            'notes': self.notes,
            'autorun': self.autorun,
            'template': self.template,
            'template_version': self.template_version,
            'modelmanager_version': self.modelmanager_version}
