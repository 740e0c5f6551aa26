"""
.. module:: quantizer
    :synopsis: Quantile and uniform codebooks

A codebook cuts the real line into `B` bins and represents each bin by a
centroid. Bins are left-closed and right-open, except the last one which is
closed on the right. Values outside of the fitted range are clamped to the
edge bins, since test data routinely exceed what was seen in training.

* **quantile** codebooks place their boundaries at the empirical quantiles of
  levels `i/B` (linear interpolation between order statistics, Hazen plotting
  positions), so that every bin holds about the same number of training
  values. Heavy ties produce duplicate boundaries, which are merged: the
  effective number of bins can then be smaller than the one requested, but
  never smaller than two: values tied down to a single bin are cut at the
  middle of the gap next to their median.
* **uniform** codebooks split `[min, max]` in `B` bins of equal width.

Centroids of a quantile codebook are the mean of the training values falling
in each bin (or their median, with `centroid='median'`); centroids of a
uniform codebook are the bin midpoints. An empty bin is represented by its
midpoint.
"""
import numpy as np

import netburst.io_nb as io_nb

SCHEMES = ('quantile', 'uniform')
CENTROIDS = ('mean', 'median')


class Codebook(object):
    """
    An immutable discretiser

    Attributes
    ----------
    scheme : str
        `quantile` or `uniform`
    boundaries : numpy.ndarray
        B+1 strictly increasing values
    centroids : numpy.ndarray
        B values, centroids[i] within [boundaries[i], boundaries[i+1]]
    requested : int
        number of bins asked for at fit time (B may be smaller after merging)

    """

    def __init__(self, scheme, boundaries, centroids, requested=None):
        if scheme not in SCHEMES:
            raise io_nb.ArgumentError("unknown codebook scheme '%s'" % scheme)
        boundaries = np.array(boundaries, dtype=np.float64)
        centroids = np.array(centroids, dtype=np.float64)
        if len(boundaries) != len(centroids) + 1 or len(centroids) < 2:
            raise io_nb.FitError(
                "a codebook needs B >= 2 centroids and B+1 boundaries "
                "(got %d and %d)" % (len(centroids), len(boundaries)))
        if np.any(np.diff(boundaries) <= 0):
            raise io_nb.FitError("codebook boundaries must strictly increase")
        if not np.all(np.isfinite(centroids)) or np.any(
                centroids < boundaries[:-1]) or np.any(centroids > boundaries[1:]):
            raise io_nb.FitError("every centroid must lie within its bin")
        boundaries.setflags(write=False)
        centroids.setflags(write=False)
        self.scheme = scheme
        self.boundaries = boundaries
        self.centroids = centroids
        self.requested = int(requested or len(centroids))

    @property
    def bins(self):
        """Effective number of bins"""
        return len(self.centroids)

    def __repr__(self):
        return 'Codebook(%s, bins=%d, requested=%d)' % (
            self.scheme, self.bins, self.requested)

    def __eq__(self, other):
        if not isinstance(other, Codebook):
            return NotImplemented
        return (self.scheme == other.scheme and
                np.array_equal(self.boundaries, other.boundaries) and
                np.array_equal(self.centroids, other.centroids))

    def width(self, token):
        """Width of the bin `token`"""
        return self.boundaries[token+1] - self.boundaries[token]


def _check_values(values, bins):
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if len(values) == 0:
        raise io_nb.FitError("cannot fit a codebook on an empty set of values")
    if not np.all(np.isfinite(values)):
        raise io_nb.FitError("cannot fit a codebook on non finite values")
    if bins < 2:
        raise io_nb.FitError("a codebook needs at least 2 bins, not %d" % bins)
    if len(np.unique(values)) < 2:
        raise io_nb.FitError(
            "cannot fit a codebook on a single distinct value (%g)" % values[0])
    return values


def _bin_centroids(values, boundaries, centroid):
    """Per-bin mean (or median) of the training values, midpoint if empty"""
    tokens = _lookup(boundaries, values)
    centroids = 0.5*(boundaries[:-1] + boundaries[1:])
    reduce = np.mean if centroid == 'mean' else np.median
    for token in np.unique(tokens):
        members = values[tokens == token]
        # clip away one-ulp excursions of the floating mean
        centroids[token] = min(max(reduce(members), boundaries[token]),
                               boundaries[token+1])
    return centroids


def fit_quantile(values, bins, centroid='mean'):
    """
    Equal-mass codebook

    >>> cb = fit_quantile([1, 2, 3, 4, 5, 6, 7, 8], 4)
    >>> cb.boundaries.tolist(), cb.centroids.tolist()
    ([1.0, 2.5, 4.5, 6.5, 8.0], [1.5, 3.5, 5.5, 7.5])

    """
    if centroid not in CENTROIDS:
        raise io_nb.ConfigurationError(
            "centroid should be one of %s, not '%s'" % (CENTROIDS, centroid))
    values = _check_values(values, bins)
    levels = np.arange(bins+1)/float(bins)
    boundaries = np.unique(np.quantile(values, levels, method='hazen'))
    if len(boundaries) < 3:
        # everything merged into one bin: cut at the gap around the median
        distinct = np.unique(values)
        index = int(np.clip(np.searchsorted(distinct, np.median(values),
                                            side='right'), 1, len(distinct)-1))
        boundaries = np.array([distinct[0],
                               0.5*(distinct[index-1] + distinct[index]),
                               distinct[-1]])
    return Codebook('quantile', boundaries,
                    _bin_centroids(values, boundaries, centroid), bins)


def fit_uniform(values, bins):
    """
    Equal-width codebook on [min, max]

    >>> fit_uniform([0, 1, 100], 2).boundaries.tolist()
    [0.0, 50.0, 100.0]

    """
    values = _check_values(values, bins)
    boundaries = np.linspace(values.min(), values.max(), bins+1)
    return Codebook('uniform', boundaries,
                    0.5*(boundaries[:-1] + boundaries[1:]), bins)


def fit(values, bins, scheme='quantile', centroid='mean'):
    """Dispatch on the scheme name"""
    if scheme == 'quantile':
        return fit_quantile(values, bins, centroid)
    elif scheme == 'uniform':
        return fit_uniform(values, bins)
    raise io_nb.ConfigurationError(
        "codebook scheme should be one of %s, not '%s'" % (SCHEMES, scheme))


def _lookup(boundaries, values):
    tokens = np.searchsorted(boundaries, values, side='right') - 1
    return np.clip(tokens, 0, len(boundaries)-2)


def encode(cb, value):
    """
    Token of a single value (clamped to the edge bins)

    >>> cb = fit_quantile([1, 2, 3, 4, 5, 6, 7, 8], 4)
    >>> encode(cb, 6), encode(cb, 1), encode(cb, 1e9)
    (2, 0, 3)

    """
    if not np.isfinite(value):
        raise io_nb.ArgumentError("cannot encode the non finite value %s" % value)
    return int(_lookup(cb.boundaries, value))


def encode_many(cb, values):
    """Vectorised :func:`encode`, returns an int64 array"""
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise io_nb.ArgumentError("cannot encode non finite values")
    return _lookup(cb.boundaries, values).astype(np.int64)


def decode(cb, token):
    """Centroid of a token"""
    if not 0 <= token < cb.bins:
        raise io_nb.ArgumentError(
            "token %s is out of range for a codebook of %d bins" % (
                token, cb.bins))
    return float(cb.centroids[token])


def decode_many(cb, tokens):
    """Vectorised :func:`decode`"""
    tokens = np.asarray(tokens, dtype=np.int64)
    if np.any(tokens < 0) or np.any(tokens >= cb.bins):
        raise io_nb.ArgumentError(
            "tokens out of range for a codebook of %d bins" % cb.bins)
    return cb.centroids[tokens]


def roundtrip(cb, values):
    """decode(encode(values)), the quantised version of `values`"""
    return cb.centroids[encode_many(cb, values)]


def write_codebook(cb, path):
    """Structured text, floats with 17 significant digits"""
    io_nb.write_structured(path, 'codebook', [
        ('scheme', cb.scheme), ('bins', cb.bins), ('requested', cb.requested),
        ('boundaries', [float(elem) for elem in cb.boundaries]),
        ('centroids', [float(elem) for elem in cb.centroids])])


def read_codebook(path):
    fields = io_nb.read_structured(path, 'codebook')
    try:
        cb = Codebook(fields['scheme'], fields['boundaries'],
                      fields['centroids'], fields.get('requested'))
    except KeyError as missing:
        raise io_nb.DataError("%s: missing codebook field %s" % (path, missing))
    if cb.bins != fields.get('bins', cb.bins):
        raise io_nb.DataError("%s: bins does not match the centroids" % path)
    return cb
