"""
.. module:: series
    :synopsis: Windowed byte-count series, trace ingestion and splitting

Raw telemetry records (one line per observation: a timestamp in nanoseconds,
an entity key and a byte count) are aggregated into fixed-window byte-count
series, one per entity. Windows are aligned on the earliest timestamp of the
trace, floored to a multiple of the window, so that the result does not depend
on the order of the records.

Indexing is 0-based: the value at index `t` covers
`[start + t*window, start + (t+1)*window)`.
"""
import math
import os
from collections import OrderedDict

import numpy as np

import netburst.io_nb as io_nb

NS_PER_MS = 1000000

TRACE_HEADER = ['timestamp_ns', 'key', 'bytes']
SERIES_HEADER = ['index', 'value']


class RawRecord(object):
    """One observation of a trace"""

    __slots__ = ('timestamp', 'key', 'bytes')

    def __init__(self, timestamp, key, nbytes):
        if timestamp < 0:
            raise io_nb.DataError(
                "negative timestamp %s for key '%s'" % (timestamp, key))
        if nbytes < 0:
            raise io_nb.DataError(
                "negative byte count %s for key '%s'" % (nbytes, key))
        self.timestamp = int(timestamp)
        self.key = str(key)
        self.bytes = int(nbytes)

    def __repr__(self):
        return 'RawRecord(%d, %r, %d)' % (self.timestamp, self.key, self.bytes)


class TimeSeries(object):
    """
    Byte counts of one entity at one granularity

    Attributes
    ----------
    values : numpy.ndarray
        float64, non-negative and finite
    window : float
        window duration in milliseconds
    start : int
        absolute time of window 0, in nanoseconds
    key : str
        entity identifier

    """

    def __init__(self, values, window, start=0, key=''):
        values = np.array(values, dtype=np.float64).reshape(-1)
        if window <= 0:
            raise io_nb.DataError("the window must be positive, not %s" % window)
        if not np.all(np.isfinite(values)):
            raise io_nb.DataError(
                "the series '%s' contains non finite values" % key)
        if np.any(values < 0):
            raise io_nb.DataError(
                "the series '%s' contains negative values" % key)
        values.setflags(write=False)
        self.values = values
        self.window = float(window)
        self.start = int(start)
        self.key = str(key)

    def __len__(self):
        return len(self.values)

    def __repr__(self):
        return 'TimeSeries(key=%r, window=%g, length=%d)' % (
            self.key, self.window, len(self))

    def time_of(self, index):
        """Absolute start time (ns) of the window `index`"""
        return self.start + int(round(index*self.window*NS_PER_MS))

    def slice(self, begin, end):
        """Sub-series on windows [begin, end), keeping absolute time"""
        return TimeSeries(self.values[begin:end], self.window,
                          self.time_of(begin), self.key)

    def derive(self, values):
        """Series with other values on the same time grid"""
        return TimeSeries(values, self.window, self.start, self.key)


class SplitSpec(object):
    """Fractions of a chronological train/validation/test split"""

    def __init__(self, train_frac=0.7, val_frac=0.1, test_frac=0.2):
        fractions = (train_frac, val_frac, test_frac)
        for fraction in fractions:
            if not 0 < fraction < 1:
                raise io_nb.ConfigurationError(
                    "split fractions must lie in (0, 1), got %s" % (
                        list(fractions),))
        if abs(math.fsum(fractions) - 1.) > 1e-9:
            raise io_nb.ConfigurationError(
                "split fractions must sum to 1, got %s (sum %s)" % (
                    list(fractions), math.fsum(fractions)))
        self.train_frac, self.val_frac, self.test_frac = fractions


def read_trace(path):
    """
    Read a trace file into a list of :class:`RawRecord`

    The file is a UTF-8 CSV with the header `timestamp_ns,key,bytes`. Any
    malformed line (wrong number of fields, non integer values, negative
    bytes) raises a :class:`io_nb.DataError` naming the line.

    """
    if not os.path.isfile(path):
        raise io_nb.ConfigurationError("The trace file '%s' does not exist" % path)
    records = []
    with open(path, 'r', encoding='utf-8') as trace:
        header = trace.readline().strip()
        if header.split(',') != TRACE_HEADER:
            raise io_nb.DataError("%s, line 1: expected the header '%s'" % (
                path, ','.join(TRACE_HEADER)))
        for number, line in enumerate(trace, start=2):
            line = line.strip()
            if not line:
                continue
            # the key may itself contain commas, the numbers may not
            fields = line.split(',')
            if len(fields) < 3:
                raise io_nb.DataError("%s, line %d: expected 3 fields in '%s'" % (
                    path, number, line))
            try:
                timestamp = int(fields[0])
                nbytes = int(fields[-1])
            except ValueError:
                raise io_nb.DataError("%s, line %d: non integer field in '%s'" % (
                    path, number, line))
            try:
                records.append(RawRecord(timestamp, ','.join(fields[1:-1]),
                                         nbytes))
            except io_nb.DataError as error:
                raise io_nb.DataError("%s, line %d: %s" % (
                    path, number, error.message))
    return records


def aggregate_records(records, window):
    """
    Sum the bytes of each key per window

    Parameters
    ----------
    records : list of RawRecord
        in any order
    window : float
        window duration in milliseconds

    Returns
    -------
    series : OrderedDict
        key -> :class:`TimeSeries`, keys sorted. All series share the same
        start (earliest timestamp floored to the window grid) and the same
        length, `ceil(span/window)` windows.

    >>> records = [RawRecord(0, 'a', 5), RawRecord(50*NS_PER_MS, 'a', 7),
    ...            RawRecord(150*NS_PER_MS, 'b', 3)]
    >>> [s.values.tolist() for s in aggregate_records(records, 100).values()]
    [[12.0, 0.0], [0.0, 3.0]]

    """
    if window <= 0:
        raise io_nb.ConfigurationError("the window must be positive, not %s" % window)
    if not records:
        return OrderedDict()
    for record in records:
        if record.bytes < 0:
            raise io_nb.DataError("negative byte count in %r" % (record,))
    # integer nanoseconds, epoch timestamps do not fit a float exactly
    width = int(round(window*NS_PER_MS))
    if width < 1:
        raise io_nb.ConfigurationError(
            "the window %s ms is shorter than a nanosecond" % window)
    timestamps = np.array([record.timestamp for record in records], dtype=np.int64)
    first = int(timestamps.min())
    start = first - first % width
    indices = (timestamps - start)//width
    length = int(indices.max()) + 1

    keys = sorted(set(record.key for record in records))
    rank = dict((key, index) for index, key in enumerate(keys))
    table = np.zeros((len(keys), length), dtype=np.float64)
    rows = np.array([rank[record.key] for record in records], dtype=np.int64)
    amounts = np.array([record.bytes for record in records], dtype=np.float64)
    np.add.at(table, (rows, indices), amounts)

    return OrderedDict(
        (key, TimeSeries(table[rank[key]], window, start, key)) for key in keys)


def chronological_split(series, spec):
    """
    Contiguous train/validation/test partition of a series

    The training part is the first `floor(train_frac*T)` windows, validation
    the next `floor(val_frac*T)`, and test the remainder.

    >>> parts = chronological_split(TimeSeries(range(10), 1.), SplitSpec())
    >>> [len(part) for part in parts]
    [7, 1, 2]

    """
    length = len(series)
    if length < 10:
        raise io_nb.DataError(
            "the series '%s' is too short to be split (%d windows, at least "
            "10 needed)" % (series.key, length))
    n_train = int(math.floor(spec.train_frac*length))
    n_val = int(math.floor(spec.val_frac*length))
    return (series.slice(0, n_train),
            series.slice(n_train, n_train+n_val),
            series.slice(n_train+n_val, length))


def threshold_series(series, t_act):
    """
    Zero every window whose value is not strictly above `t_act`

    >>> threshold_series(TimeSeries([5, 100, 50], 1.), 50).values.tolist()
    [0.0, 100.0, 0.0]

    """
    if t_act < 0:
        raise io_nb.ArgumentError("the activity threshold must be >= 0")
    values = series.values
    return series.derive(np.where(values > t_act, values, 0.))


def rebin(series, factor):
    """
    Coarser series, summing `factor` consecutive windows

    A trailing incomplete group is dropped.
    """
    if factor < 1:
        raise io_nb.ArgumentError("the rebin factor must be >= 1")
    length = (len(series)//factor)*factor
    values = series.values[:length].reshape(-1, factor).sum(axis=1)
    return TimeSeries(values, series.window*factor, series.start, series.key)


def concatenate(first, second):
    """Join two contiguous pieces of the same series"""
    return first.derive(np.concatenate([first.values, second.values]))


def write_series(series, folder, name=None):
    """
    Write a series as `<name>.csv` with a `<name>.param` sidecar

    Returns the path of the csv file.
    """
    name = name or series.key
    path = os.path.join(folder, name + '.csv')
    io_nb.write_columns(path, SERIES_HEADER, enumerate(
        float(value) for value in series.values))
    io_nb.write_structured(
        os.path.join(folder, name + '.param'), 'series',
        [('key', series.key), ('window', series.window),
         ('start', series.start)])
    return path


def read_series(path):
    """Read back a series written by :func:`write_series`"""
    index, values = io_nb.read_columns(path, SERIES_HEADER)
    if not np.array_equal(index, np.arange(len(index))):
        raise io_nb.DataError("%s: the index column is not 0, 1, 2, ..." % path)
    meta = io_nb.read_structured(os.path.splitext(path)[0] + '.param', 'series')
    try:
        return TimeSeries(values, meta['window'], meta['start'], meta['key'])
    except KeyError as missing:
        raise io_nb.DataError("%s: missing metadata field %s" % (path, missing))
