"""
.. module:: config
    :synopsis: Experiment configuration, read from a parameter file

An experiment is described by a parameter file of ``data.<field> = <value>``
lines, values being Python literals (see :mod:`io_nb`). Every field has a
desk-scale default; a field that NetBurst does not know is an error, so that a
typo never silently falls back to a default.

The resolved configuration is written back in the same syntax as the
`log.param` of every output folder, which can be given again to `--config` to
reproduce a run.
"""
import os

import netburst.io_nb as io_nb
import netburst.token_model as token_model
from netburst.series import SplitSpec

DECODE_MODES = token_model.DecodeMode.KINDS


class ExperimentConfig(object):
    """
    All the settings of a NetBurst run

    The dataset is, by order of precedence, a trace file (`trace`), a corpus
    manifest (`manifest`) or a generated corpus (`synth`, a dictionary with a
    `preset`, a number of `entities`, a `seed` and any generator setting).

    """
    DEFAULTS = (
        ('trace', None),
        ('manifest', None),
        ('synth', {'preset': 'pattern', 'entities': 4, 'seed': 0}),
        ('seasonal', None),
        ('window', 100.),
        ('t_act', 0.),
        ('split', [0.7, 0.1, 0.2]),
        ('ibg_model', {}),
        ('bi_model', {}),
        ('raw_model', {}),
        ('bins', [256, 256]),
        ('raw_bins', 256),
        ('raw_scheme', 'uniform'),
        ('centroid', 'mean'),
        ('horizon', None),
        ('decode_mode', 'sample'),
        ('temperature', 1.),
        ('seeds', [0]),
        ('tokenized_oracle', False),
        ('max_events_factor', 10),
        ('mase_denominator', 'full'),
        ('thresholds', [100., 200., 300.]),
        ('group_size', 16),
        ('histogram_bins', 32),
        ('transfer_reference', False),
        ('ks', [2, 3, 4, 5]),
        ('max_lag', 50),
        ('fano_windows', [1, 10, 100]),
        ('fano_thresholds', [0., 100.]),
        ('out', 'output'),
    )

    def __init__(self, **fields):
        values = dict(self.DEFAULTS)
        unknown = sorted(set(fields) - set(values))
        if unknown:
            raise io_nb.ConfigurationError(
                "unknown parameter(s) %s. Known parameters are %s" % (
                    ', '.join('data.' + name for name in unknown),
                    ', '.join(name for name, _ in self.DEFAULTS)))
        values.update(fields)
        for name, value in values.items():
            setattr(self, name, value)
        self.check()

    @classmethod
    def from_file(cls, path):
        """Read a parameter file (or a log.param)"""
        if not os.path.isfile(path):
            raise io_nb.ConfigurationError(
                "The parameter file '%s' does not exist" % path)
        return cls(**io_nb.read_structured(path, 'data'))

    def check(self):
        """Validate every field, raising a ConfigurationError"""
        self.split_spec = SplitSpec(*self.split)
        if self.window <= 0:
            raise io_nb.ConfigurationError("data.window must be positive")
        if self.t_act < 0:
            raise io_nb.ConfigurationError("data.t_act must be >= 0")
        if len(self.bins) != 2 or min(self.bins) < 2:
            raise io_nb.ConfigurationError(
                "data.bins should read [gap bins, intensity bins], both >= 2")
        if self.raw_bins < 2 or self.histogram_bins < 2:
            raise io_nb.ConfigurationError(
                "data.raw_bins and data.histogram_bins must be >= 2")
        for name, allowed in (('raw_scheme', ('uniform', 'quantile')),
                              ('centroid', ('mean', 'median')),
                              ('decode_mode', DECODE_MODES),
                              ('mase_denominator', ('full', 'events'))):
            if getattr(self, name) not in allowed:
                raise io_nb.ConfigurationError(
                    "data.%s should be one of %s, not %r" % (
                        name, ', '.join(allowed), getattr(self, name)))
        if self.temperature <= 0:
            raise io_nb.ConfigurationError("data.temperature must be positive")
        if not self.seeds or any(
                int(seed) != seed or seed < 0 for seed in self.seeds):
            raise io_nb.ConfigurationError(
                "data.seeds should be a non empty list of integers >= 0")
        if self.horizon is not None and self.horizon < 1:
            raise io_nb.ConfigurationError("data.horizon must be >= 1 when set")
        if self.group_size < 1 or self.max_lag < 1 or self.max_events_factor < 1:
            raise io_nb.ConfigurationError(
                "data.group_size, data.max_lag and data.max_events_factor "
                "must be >= 1")
        if any(k < 1 for k in self.ks) or any(
                factor < 1 for factor in self.fano_windows):
            raise io_nb.ConfigurationError(
                "data.ks and data.fano_windows must hold integers >= 1")
        if any(threshold < 0 for threshold in
               list(self.thresholds) + list(self.fano_thresholds)):
            raise io_nb.ConfigurationError("thresholds must be >= 0")
        for name in ('synth', 'seasonal'):
            value = getattr(self, name)
            if value is not None and 'preset' not in value:
                raise io_nb.ConfigurationError(
                    "data.%s needs a 'preset' entry" % name)
        # model overrides fail here rather than after hours of work
        for name in ('ibg_model', 'bi_model', 'raw_model'):
            self.model_config(name, self.seeds[0])

    def model_config(self, name, seed):
        """ModelConfig of `ibg_model`, `bi_model` or `raw_model` for a seed"""
        fields = dict(getattr(self, name))
        fields['seed'] = int(seed)
        return token_model.ModelConfig(**fields)

    def decode(self, seed):
        """Decoding mode of a forecast"""
        return token_model.DecodeMode(self.decode_mode, self.temperature,
                                      int(seed))

    def replace(self, **changes):
        fields = self.as_dict()
        fields.update(changes)
        return ExperimentConfig(**fields)

    def as_dict(self):
        return dict((name, getattr(self, name)) for name, _ in self.DEFAULTS)

    def as_fields(self):
        """Fields in declaration order, for the log.param"""
        return [(name, getattr(self, name)) for name, _ in self.DEFAULTS]

    def echo(self):
        """Settings recalled in every report: all of them"""
        return self.as_dict()
