"""
.. module:: synth
    :synopsis: Synthetic telemetry generators and corpora

Three generators, all deterministic given their seed:

* :func:`gen_bursty`, heavy-tailed bursty telemetry: Pareto gaps between burst
  starts, Pareto burst intensities, geometric (or Pareto) burst durations, and
  an optional floor of sub-threshold chatter on idle windows,
* :func:`gen_seasonal`, a smooth periodic series with Gaussian noise, the
  regime of classical forecasting benchmarks,
* :func:`gen_pattern`, bursts repeating a fixed cycle of gaps and intensities,
  which a forecaster can learn by heart.

Corpora of many entities are built from presets by :func:`generate_corpus`.
The seed of entity `i` is :func:`mix_seed` of the corpus seed and `i`, and the
manifest written next to a corpus records every entity configuration, so that
:func:`regenerate` rebuilds it exactly.
"""
import math
from collections import OrderedDict

import numpy as np

import netburst.io_nb as io_nb
from netburst.eventizer import EventSequence
from netburst.series import TimeSeries

MASK64 = 2**64 - 1
GOLDEN = 0x9E3779B97F4A7C15

# Attempts at drawing a gap longer than the previous burst
MAX_REDRAWS = 1000

DURATIONS = ('geometric', 'pareto')


def mix_seed(seed, index):
    """
    splitmix64 of `seed` advanced `index+1` times

    >>> mix_seed(0, 0) == mix_seed(0, 0), mix_seed(0, 0) == mix_seed(0, 1)
    (True, False)

    """
    state = (int(seed) + (int(index) + 1)*GOLDEN) & MASK64
    state = ((state ^ (state >> 30))*0xBF58476D1CE4E5B9) & MASK64
    state = ((state ^ (state >> 27))*0x94D049BB133111EB) & MASK64
    return state ^ (state >> 31)


def pareto_inverse_cdf(u, alpha, xm):
    """
    Pareto quantile function, `xm*(1-u)**(-1/alpha)`

    >>> pareto_inverse_cdf(0., 2., 3.)
    3.0

    """
    return xm*np.power(1. - np.asarray(u, dtype=np.float64), -1./alpha)


def pareto_sample(alpha, xm, seed, n):
    """`n` Pareto draws by inversion of uniform draws on [0, 1)"""
    if alpha <= 0 or xm <= 0:
        raise io_nb.ArgumentError(
            "Pareto parameters must be positive (alpha=%s, xm=%s)" % (alpha, xm))
    return pareto_inverse_cdf(np.random.default_rng(seed).random(int(n)),
                              alpha, xm)


class GeneratorConfig(object):
    """
    Settings of a generator, with strict keywords

    Subclasses list their fields and defaults in DEFAULTS and validate them in
    :meth:`check`.

    """
    DEFAULTS = ()
    generator = None

    def __init__(self, **kwargs):
        fields = dict(self.DEFAULTS)
        unknown = sorted(set(kwargs) - set(fields))
        if unknown:
            raise io_nb.ConfigurationError(
                "unknown %s setting(s) %s, known ones are %s" % (
                    self.generator, ', '.join(unknown),
                    ', '.join(name for name, _ in self.DEFAULTS)))
        fields.update(kwargs)
        for name, value in fields.items():
            setattr(self, name, value)
        self.check()

    def check(self):
        pass

    def _positive(self, *names):
        for name in names:
            if not getattr(self, name) > 0:
                raise io_nb.ConfigurationError(
                    "%s setting '%s' must be positive, not %r" % (
                        self.generator, name, getattr(self, name)))

    def replace(self, **changes):
        fields = self.as_dict()
        fields.update(changes)
        return self.__class__(**fields)

    def as_dict(self):
        return dict((name, getattr(self, name)) for name, _ in self.DEFAULTS)

    def __eq__(self, other):
        return type(self) is type(other) and self.as_dict() == other.as_dict()

    def __repr__(self):
        return '%s(%s)' % (self.__class__.__name__, ', '.join(
            '%s=%r' % (name, getattr(self, name)) for name, _ in self.DEFAULTS))


class BurstyConfig(GeneratorConfig):
    """
    Heavy-tailed bursty telemetry

    Gaps (start to start) and durations are in windows, intensities in bytes.
    With `length` set, the series has exactly `length` windows and holds the
    bursts that fit entirely in it (at most `n_events`); otherwise it ends one
    window after the last burst.

    """
    generator = 'bursty'
    DEFAULTS = (
        ('alpha_gap', 1.5),
        ('alpha_bi', 1.2),
        ('xm_gap', 4.),
        ('xm_bi', 1000.),
        ('n_events', 200),
        ('window', 100.),
        ('burst_len_p', 0.6),
        ('duration', 'geometric'),
        ('alpha_len', 2.),
        ('noise_rate', 0.),
        ('noise_max', 0.),
        ('length', None),
        ('seed', 0),
    )

    def check(self):
        self._positive('alpha_gap', 'alpha_bi', 'xm_gap', 'xm_bi', 'n_events',
                       'window', 'alpha_len')
        self.n_events = int(self.n_events)
        if not 0 < self.burst_len_p <= 1:
            raise io_nb.ConfigurationError(
                "burst_len_p must lie in (0, 1], not %r" % self.burst_len_p)
        if self.duration not in DURATIONS:
            raise io_nb.ConfigurationError(
                "duration should be one of %s, not %r" % (DURATIONS, self.duration))
        if not 0 <= self.noise_rate <= 1 or self.noise_max < 0:
            raise io_nb.ConfigurationError(
                "noise_rate must lie in [0, 1] and noise_max be >= 0")
        if self.length is not None and int(self.length) < 1:
            raise io_nb.ConfigurationError("length must be >= 1 when set")


class SeasonalConfig(GeneratorConfig):
    """Sinusoid plus Gaussian noise, clipped at zero"""
    generator = 'seasonal'
    DEFAULTS = (
        ('period', 24),
        ('amplitude', 30.),
        ('offset', 100.),
        ('noise_sd', 5.),
        ('length', 5000),
        ('window', 1000.),
        ('seed', 0),
    )

    def check(self):
        if int(self.period) != self.period or self.period < 2:
            raise io_nb.ConfigurationError(
                "the period must be an integer >= 2, not %r" % self.period)
        self._positive('length', 'window')
        if self.amplitude < 0 or self.offset < 0 or self.noise_sd < 0:
            raise io_nb.ConfigurationError(
                "amplitude, offset and noise_sd must be >= 0")


class PatternConfig(GeneratorConfig):
    """
    Bursts repeating cycles of gaps and intensities

    The two cycles may differ in length; the first burst starts at `gaps[0]`.

    """
    generator = 'pattern'
    DEFAULTS = (
        ('gaps', (5, 9)),
        ('intensities', (10., 1000.)),
        ('n_events', 400),
        ('window', 100.),
        ('seed', 0),
    )

    def check(self):
        self.gaps = tuple(int(gap) for gap in self.gaps)
        self.intensities = tuple(float(bi) for bi in self.intensities)
        if not self.gaps or min(self.gaps) < 2:
            raise io_nb.ConfigurationError(
                "pattern gaps must be >= 2 windows (single-window bursts need "
                "an idle window in between)")
        if not self.intensities or min(self.intensities) <= 0:
            raise io_nb.ConfigurationError("pattern intensities must be positive")
        self._positive('n_events', 'window')
        self.n_events = int(self.n_events)


def _durations(config, rng, n):
    if config.duration == 'geometric':
        return rng.geometric(config.burst_len_p, n).astype(np.int64)
    return np.ceil(pareto_inverse_cdf(rng.random(n), config.alpha_len, 1.)
                   ).astype(np.int64)


def gen_bursty(config, key=''):
    """
    Heavy-tailed bursty series and its planted events

    Each intensity is spread evenly over the windows of its burst. A gap not
    longer than the previous burst is drawn again, up to MAX_REDRAWS times,
    and then set to one window more than that burst, so bursts never touch:
    eventizing the series at `noise_max` gives back the planted events (as
    long as burst windows stay above the noise).

    Returns
    -------
    series : TimeSeries
    events : EventSequence
        the planted bursts, with their spans

    """
    gap_seed, duration_seed, bi_seed, noise_seed = \
        np.random.SeedSequence(int(config.seed)).spawn(4)
    gap_rng = np.random.default_rng(gap_seed)
    n = config.n_events
    durations = _durations(config, np.random.default_rng(duration_seed), n)
    intensities = pareto_inverse_cdf(
        np.random.default_rng(bi_seed).random(n), config.alpha_bi, config.xm_bi)

    def draw_gap():
        return int(math.ceil(pareto_inverse_cdf(gap_rng.random(),
                                                config.alpha_gap, config.xm_gap)))

    starts = np.zeros(n, dtype=np.int64)
    starts[0] = draw_gap()
    for index in range(1, n):
        previous = int(durations[index-1])
        gap = draw_gap()
        for _ in range(MAX_REDRAWS):
            if gap > previous:
                break
            gap = draw_gap()
        else:
            gap = previous + 1
        starts[index] = starts[index-1] + gap
    ends = starts + durations

    if config.length is None:
        length = int(ends[-1]) + 1
    else:
        length = int(config.length)
        kept = ends <= length
        starts, durations, intensities = \
            starts[kept], durations[kept], intensities[kept]
        ends = ends[kept]

    values = np.zeros(length)
    if config.noise_rate > 0 and config.noise_max > 0:
        noise_rng = np.random.default_rng(noise_seed)
        chatter = noise_rng.random(length) < config.noise_rate
        values[chatter] = noise_rng.uniform(0., config.noise_max,
                                            int(chatter.sum()))
    bi = np.zeros(len(starts))
    for index, (start, end) in enumerate(zip(starts, ends)):
        values[start:end] = intensities[index]/(end - start)
        bi[index] = values[start:end].sum()

    series = TimeSeries(values, config.window, key=key)
    events = EventSequence(np.diff(np.concatenate([[0], starts])), bi,
                           np.column_stack([starts, ends-1]),
                           config.noise_max, config.window, key)
    return series, events


def gen_seasonal(config, key=''):
    """
    `max(0, offset + amplitude*sin(2 pi t/period) + noise)`

    >>> gen_seasonal(SeasonalConfig(noise_sd=0., length=3)).values[0]
    100.0

    """
    t = np.arange(int(config.length))
    noise = np.random.default_rng(int(config.seed)).normal(
        0., config.noise_sd, len(t))
    values = config.offset + config.amplitude*np.sin(
        2*np.pi*t/config.period) + noise
    return TimeSeries(np.maximum(values, 0.), config.window, key=key)


def gen_pattern(config, key=''):
    """
    Single-window bursts cycling through the configured gaps and intensities

    >>> series, events = gen_pattern(PatternConfig(gaps=(2, 3), intensities=(1., 5.), n_events=3))
    >>> series.values.tolist()
    [0.0, 0.0, 1.0, 0.0, 0.0, 5.0, 0.0, 1.0, 0.0]

    """
    n = config.n_events
    ibg = np.resize(np.array(config.gaps, dtype=np.int64), n)
    bi = np.resize(np.array(config.intensities), n)
    starts = np.cumsum(ibg)
    values = np.zeros(int(starts[-1]) + 2)
    values[starts] = bi
    return (TimeSeries(values, config.window, key=key),
            EventSequence(ibg, bi, np.column_stack([starts, starts]), 0.,
                          config.window, key))


GENERATORS = OrderedDict([
    ('bursty', (BurstyConfig, gen_bursty)),
    ('seasonal', (SeasonalConfig, gen_seasonal)),
    ('pattern', (PatternConfig, gen_pattern)),
])


def aggregate_groups(series_list, group_size, seed=0):
    """
    Sum random groups of `group_size` series window by window

    The last group may be smaller. Groups are keyed `g0000`, `g0001`...

    """
    if int(group_size) < 1:
        raise io_nb.ArgumentError("the group size must be >= 1")
    if not series_list:
        return []
    lengths = set(len(series) for series in series_list)
    if len(lengths) > 1:
        raise io_nb.DataError(
            "series to aggregate must have equal lengths, got %s" % sorted(
                lengths))
    order = np.random.default_rng(seed).permutation(len(series_list))
    groups = []
    for number, begin in enumerate(range(0, len(order), int(group_size))):
        members = [series_list[index] for index in order[begin:begin+group_size]]
        groups.append(TimeSeries(
            np.sum([member.values for member in members], axis=0),
            members[0].window, members[0].start, 'g%04d' % number))
    return groups


SPARSE = ('bursty', 'sparse', dict(
    alpha_gap=2., xm_gap=40., alpha_bi=1.2, xm_bi=1000., burst_len_p=1.))
DENSE = ('bursty', 'dense', dict(
    alpha_gap=3., xm_gap=2., alpha_bi=2.5, xm_bi=1000., burst_len_p=0.5))

# Regimes of the experiments, as (generator, label, settings) per entity
# class; entities cycle through the classes of their preset.
PRESETS = OrderedDict([
    ('sparse', [SPARSE]),
    ('dense', [DENSE]),
    ('pattern', [('pattern', 'pattern', {})]),
    ('mixed', [SPARSE, DENSE]),
    ('seasonal', [('seasonal', 'seasonal', {})]),
])


class Entity(object):
    """One generated entity of a corpus"""

    def __init__(self, key, generator, label, config, series, events=None):
        self.key = key
        self.generator = generator
        self.label = label
        self.config = config
        self.series = series
        self.events = events

    def as_dict(self):
        return {'key': self.key, 'generator': self.generator,
                'label': self.label, 'config': self.config.as_dict()}


def _build(key, generator, label, config):
    result = GENERATORS[generator][1](config, key)
    if isinstance(result, tuple):
        return Entity(key, generator, label, config, *result)
    return Entity(key, generator, label, config, result)


def generate_corpus(preset, entities, seed=0, **overrides):
    """
    Corpus of `entities` series of a preset regime

    Entity `i` is keyed `e0000`, `e0001`... and generated with the seed
    `mix_seed(seed, i)`. Overrides apply to the settings of every entity
    (`length`, `n_events`, `noise_rate`...); an unknown setting raises a
    :class:`io_nb.ConfigurationError`.

    """
    if preset not in PRESETS:
        raise io_nb.ConfigurationError(
            "unknown corpus preset '%s', known ones are %s" % (
                preset, ', '.join(PRESETS)))
    if int(entities) < 0:
        raise io_nb.ConfigurationError("the number of entities must be >= 0")
    classes = PRESETS[preset]
    corpus = []
    for index in range(int(entities)):
        generator, label, settings = classes[index % len(classes)]
        fields = dict(settings)
        fields.update(overrides)
        fields['seed'] = mix_seed(seed, index)
        config = GENERATORS[generator][0](**fields)
        corpus.append(_build('e%04d' % index, generator, label, config))
    return corpus


def write_manifest(corpus, path, preset=None, seed=None):
    """Structured text recording every entity configuration"""
    io_nb.write_structured(path, 'corpus', [
        ('preset', preset), ('seed', seed), ('entities', len(corpus)),
        ('members', [entity.as_dict() for entity in corpus])])


def read_manifest(path):
    fields = io_nb.read_structured(path, 'corpus')
    if 'members' not in fields:
        raise io_nb.ConfigurationError("%s: no corpus.members field" % path)
    return fields


def regenerate(manifest):
    """Corpus described by a manifest (see :func:`write_manifest`)"""
    corpus = []
    for member in manifest['members']:
        try:
            generator = member['generator']
            config = GENERATORS[generator][0](**member['config'])
            corpus.append(_build(member['key'], generator,
                                 member.get('label'), config))
        except (KeyError, TypeError) as error:
            raise io_nb.ConfigurationError(
                "malformed corpus member %r (%s)" % (member, error))
    return corpus
