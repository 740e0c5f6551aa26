"""
.. module:: metrics
    :synopsis: Evaluation statistics and the metrics report

Forecast accuracy (MASE restricted to event windows and the underlying
absolute scaled errors), distributional fidelity (1-Wasserstein distance,
Jensen-Shannon divergence of activity histograms), burstiness statistics
(Fano factor, autocorrelation, fraction of idle windows) and the clustering
tools of the embedding study (k-means, silhouette, PCA, anisotropy).

Every function is pure. Undefined values raise a :class:`MetricError`, that
the harness records per entity before moving on; a test split without any
event window gives ``None``, the *no-events* marker, which is excluded from
every aggregate.
"""
import math
from collections import OrderedDict

import numpy as np
import scipy.stats
from sklearn.cluster import KMeans
from sklearn.decomposition import PCA
from sklearn.metrics import silhouette_score
from sklearn.metrics.pairwise import cosine_similarity

import netburst.io_nb as io_nb
import netburst.quantizer as quantizer

DENOMINATORS = ('full', 'events')


class MetricsReport(object):
    """
    Per-entity values of every metric, and their aggregates

    Aggregates are the mean over the entities for which the metric is defined
    (values equal to ``None`` are left out), computed with compensated
    summation so that they do not depend on the order in which entities were
    added.

    Attributes
    ----------
    config : dict
        echo of the resolved run parameters
    per_entity : OrderedDict
        entity key -> {metric name: value or None}
    errors : OrderedDict
        metric name -> list of (entity key, message), for values that could
        not be computed at all
    events : int
        number of event windows in the evaluated splits
    timings : OrderedDict
        stage name -> wall-clock seconds spent before the report was written

    """

    def __init__(self, config=None, timings=None):
        self.config = dict(config or {})
        self.per_entity = OrderedDict()
        self.errors = OrderedDict()
        self.events = 0
        self.timings = OrderedDict(timings or ())

    def add(self, key, values, events=0):
        """Record the metric values of one entity"""
        self.per_entity.setdefault(key, OrderedDict()).update(values)
        self.events += int(events)

    def fail(self, key, metric, error):
        """Record an undefined metric for one entity"""
        self.per_entity.setdefault(key, OrderedDict())[metric] = None
        self.errors.setdefault(metric, []).append((key, getattr(
            error, 'message', str(error))))

    @property
    def metrics(self):
        names = []
        for values in self.per_entity.values():
            names.extend(name for name in values if name not in names)
        return names

    def values(self, metric):
        """Defined values of a metric, in entity order"""
        return [values[metric] for values in self.per_entity.values()
                if values.get(metric) is not None]

    @property
    def aggregate(self):
        aggregate = OrderedDict()
        for name in self.metrics:
            defined = self.values(name)
            aggregate[name] = math.fsum(defined)/len(defined) if defined \
                else None
        return aggregate

    @property
    def counts(self):
        counts = OrderedDict([('entities', len(self.per_entity)),
                              ('events', self.events)])
        for name in self.metrics:
            counts['excluded_' + name] = len(self.per_entity) - len(
                self.values(name))
        return counts

    def as_fields(self):
        return [('config', self.config),
                ('counts', dict(self.counts)),
                ('aggregate', dict(self.aggregate)),
                ('errors', dict((name, [list(elem) for elem in failures])
                                for name, failures in self.errors.items())),
                ('per_entity', dict((key, dict(values)) for key, values in
                                    self.per_entity.items())),
                ('timings', dict(self.timings))]

    def write(self, folder, name, version=None, timings=None):
        """
        Write `<name>.report` (structured text) and `<name>_entities.csv`

        The csv has one row per entity and one column per metric, undefined
        values being left empty. `timings` replaces the recorded stage times;
        they come last in the report, the only line that changes when a run
        is repeated.

        """
        if timings is not None:
            self.timings = OrderedDict(timings)
        header = None if version is None else '-----NetBurst %s-----' % version
        io_nb.write_structured('%s/%s.report' % (folder, name), 'report',
                               self.as_fields(), header=header)
        metrics = self.metrics
        io_nb.write_columns(
            '%s/%s_entities.csv' % (folder, name), ['key'] + metrics,
            [[key] + [values.get(metric) for metric in metrics]
             for key, values in self.per_entity.items()])


def read_report(path):
    """Read back the structured part of a report"""
    fields = io_nb.read_structured(path, 'report')
    report = MetricsReport(fields.get('config'))
    for key, values in sorted(fields.get('per_entity', {}).items()):
        report.per_entity[key] = OrderedDict(sorted(values.items()))
    for name, failures in sorted(fields.get('errors', {}).items()):
        report.errors[name] = [tuple(elem) for elem in failures]
    report.events = fields.get('counts', {}).get('events', 0)
    report.timings = OrderedDict(sorted(fields.get('timings', {}).items()))
    return report


def naive_scale(train, t_act=0., denominator='full'):
    """
    In-sample mean absolute error of the one-step naive forecast

    With ``denominator='events'``, only the steps ending on an event window
    (value above `t_act`) are averaged.

    """
    if denominator not in DENOMINATORS:
        raise io_nb.ConfigurationError(
            "the MASE denominator should be one of %s, not '%s'" % (
                DENOMINATORS, denominator))
    values = np.asarray(getattr(train, 'values', train), dtype=np.float64)
    if len(values) < 2:
        raise io_nb.MetricError(
            "the naive scale needs at least two training windows")
    steps = np.abs(np.diff(values))
    if denominator == 'events':
        steps = steps[values[1:] > t_act]
    if len(steps) == 0 or not np.any(steps > 0):
        raise io_nb.MetricError(
            "the training series has no variation: MASE is undefined")
    return math.fsum(steps)/len(steps)


def absolute_scaled_errors(forecast, truth, train, t_act, denominator='full'):
    """
    Absolute errors on the event windows of `truth`, over the naive scale

    Returns an empty array when the truth has no event window.

    """
    predicted = np.asarray(getattr(forecast, 'values', forecast),
                           dtype=np.float64)
    actual = np.asarray(getattr(truth, 'values', truth), dtype=np.float64)
    if len(predicted) != len(actual):
        raise io_nb.ArgumentError(
            "forecast and truth differ in length (%d, %d)" % (
                len(predicted), len(actual)))
    scale = naive_scale(train, t_act, denominator)
    events = actual > t_act
    return np.abs(predicted[events] - actual[events])/scale


def mase_events(forecast, truth, train, t_act, denominator='full'):
    """
    Mean absolute scaled error, restricted to the event windows of `truth`

    Parameters
    ----------
    forecast, truth : TimeSeries or array
        of equal length
    train : TimeSeries or array
        in-sample series giving the scale
    t_act : float
        activity threshold: windows of `truth` above it are events
    denominator : str
        `full` (all training steps) or `events`

    Returns
    -------
    mase : float or None
        None when `truth` has no event window

    >>> mase_events([0., 0.], [0., 4.], [0., 2., 0., 2.], 0.)
    2.0

    """
    errors = absolute_scaled_errors(forecast, truth, train, t_act, denominator)
    if len(errors) == 0:
        return None
    return math.fsum(errors)/len(errors)


def _samples(values, name):
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if len(values) == 0:
        raise io_nb.ArgumentError("the sample %s is empty" % name)
    if not np.all(np.isfinite(values)):
        raise io_nb.ArgumentError("the sample %s is not finite" % name)
    return values


def wasserstein1(a, b):
    """
    1-Wasserstein distance between two empirical distributions

    >>> wasserstein1([0, 1], [0, 3])
    1.0

    """
    return float(scipy.stats.wasserstein_distance(
        _samples(a, 'a'), _samples(b, 'b')))


def fano(series):
    """Population variance over mean of the window values"""
    values = np.asarray(getattr(series, 'values', series), dtype=np.float64)
    if len(values) == 0 or values.mean() <= 0:
        raise io_nb.MetricError("the Fano factor needs a positive mean")
    return float(values.var()/values.mean())


def acf(series, max_lag):
    """
    Sample autocorrelation for the lags 0 to `max_lag`

    Returns
    -------
    r : numpy.ndarray
        max_lag+1 values, r[0] = 1

    """
    values = np.asarray(getattr(series, 'values', series), dtype=np.float64)
    if not 0 <= max_lag < len(values):
        raise io_nb.ArgumentError(
            "the lag %d is out of range for a series of %d windows" % (
                max_lag, len(values)))
    centred = values - values.mean()
    energy = np.dot(centred, centred)
    if energy <= 0:
        raise io_nb.MetricError("the autocorrelation of a constant is undefined")
    return np.array([np.dot(centred[:len(values)-lag], centred[lag:])/energy
                     for lag in range(max_lag+1)])


def idle_fraction(series, t_act):
    """Fraction of windows at or below the activity threshold"""
    values = np.asarray(getattr(series, 'values', series), dtype=np.float64)
    if len(values) == 0:
        raise io_nb.MetricError("the idle fraction of an empty series")
    return float(np.mean(values <= t_act))


def _histogram(values, name):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or len(values) == 0:
        raise io_nb.ArgumentError("the histogram %s is empty" % name)
    if np.any(values < 0) or abs(math.fsum(values) - 1.) > 1e-9:
        raise io_nb.ArgumentError(
            "the histogram %s is not a probability vector" % name)
    return values


def jsd(p, q):
    """
    Jensen-Shannon divergence in bits, between 0 and 1

    >>> round(jsd([0.5, 0.5], [1., 0.]), 4)
    0.3113

    """
    p, q = _histogram(p, 'p'), _histogram(q, 'q')
    if len(p) != len(q):
        raise io_nb.ArgumentError(
            "histograms have %d and %d bins" % (len(p), len(q)))
    middle = 0.5*(p + q)
    value = 0.5*scipy.stats.entropy(p, middle, base=2) + \
        0.5*scipy.stats.entropy(q, middle, base=2)
    return float(min(max(value, 0.), 1.))


def activity_counts(series, t_act, cb):
    """Token counts of the windows above `t_act`, one entry per bin"""
    values = np.asarray(getattr(series, 'values', series), dtype=np.float64)
    active = values[values > t_act]
    return np.bincount(quantizer.encode_many(cb, active),
                       minlength=cb.bins).astype(np.int64)


def build_activity_histogram(series, t_act, cb):
    """Normalised :func:`activity_counts`"""
    counts = activity_counts(series, t_act, cb)
    return normalise(counts)


def normalise(counts):
    total = counts.sum()
    if total == 0:
        raise io_nb.MetricError(
            "no active window: the activity histogram is undefined")
    return counts/float(total)


def _points(points):
    try:
        points = np.asarray(points, dtype=np.float64)
    except ValueError:
        raise io_nb.ArgumentError("points have different dimensions")
    if points.ndim != 2 or len(points) == 0:
        raise io_nb.ArgumentError(
            "expected a non empty list of vectors of equal dimension")
    return points


def kmeans(points, k, seed=0, max_iter=300):
    """
    k-means++ seeding followed by Lloyd iterations

    Iterations stop when the assignment no longer changes, or after
    `max_iter` of them.

    Returns
    -------
    assignments : numpy.ndarray
        cluster index of every point
    centroids : numpy.ndarray
        k x dimension

    """
    points = _points(points)
    if not 1 <= k <= len(points):
        raise io_nb.ArgumentError(
            "k = %d is out of range for %d points" % (k, len(points)))
    estimator = KMeans(n_clusters=k, init='k-means++', n_init=1,
                       max_iter=max_iter, tol=0., algorithm='lloyd',
                       random_state=seed % 2**32)
    assignments = estimator.fit_predict(points)
    return assignments.astype(np.int64), estimator.cluster_centers_


def kmeans_objective(points, assignments, centroids):
    """Sum of squared distances of every point to its centroid"""
    points = _points(points)
    return float(np.sum((points - np.asarray(centroids)[assignments])**2))


def silhouette(points, assignments):
    """
    Mean silhouette coefficient, Euclidean distance

    Points alone in their cluster score 0, so that a partition into
    singletons scores 0 overall.

    """
    points = _points(points)
    assignments = np.asarray(assignments)
    if len(assignments) != len(points):
        raise io_nb.ArgumentError("one assignment per point is needed")
    clusters = len(np.unique(assignments))
    if clusters < 2:
        raise io_nb.ArgumentError("the silhouette needs at least two clusters")
    if clusters == len(points):
        return 0.
    return float(silhouette_score(points, assignments, metric='euclidean'))


def pca_2d(points):
    """Projection on the two first principal components"""
    points = _points(points)
    if len(points) < 2 or points.shape[1] < 2:
        raise io_nb.ArgumentError(
            "a 2d projection needs two points of dimension two at least")
    return PCA(n_components=2, svd_solver='full').fit_transform(points)


def anisotropy(points):
    """Mean cosine similarity over every pair of distinct points"""
    points = _points(points)
    if len(points) < 2:
        raise io_nb.ArgumentError("anisotropy needs two points at least")
    similarity = cosine_similarity(points)
    count = len(points)
    return float((similarity.sum() - np.trace(similarity))/(count*(count-1)))


def ecdf(values):
    """
    Empirical cumulative distribution, one point per sample

    >>> x, y = ecdf([3., 1., 2.])
    >>> x.tolist(), y.tolist()
    ([1.0, 2.0, 3.0], [0.3333333333333333, 0.6666666666666666, 1.0])

    """
    x = np.sort(_samples(values, 'values'))
    return x, np.arange(1, len(x)+1)/float(len(x))


def ccdf(values):
    """Complementary distribution P(X >= x), one point per sample"""
    x = np.sort(_samples(values, 'values'))
    return x, (len(x) - np.arange(len(x)))/float(len(x))
