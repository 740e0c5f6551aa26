"""
.. module:: eventizer
    :synopsis: From byte counts to bursts, and back

A burst is a maximal run of consecutive windows whose value is strictly above
the activity threshold `t_act`. Each burst `k` spans windows
`[tau_k, rho_k]` and is summarised by two numbers:

* its inter-burst gap `ibg[k] = tau_k - tau_{k-1}`, measured start to start,
  with `ibg[0] = tau_0` (so a burst in the very first window has a zero gap,
  the only place where a zero gap may appear),
* its intensity `bi[k]`, the total of the bytes over its windows.

Reconstruction goes the other way by *spike placement*: the whole intensity of
a burst is put in its starting window. Burst durations are kept in `spans`
for diagnostics only.
"""
import os

import numpy as np

import netburst.io_nb as io_nb

EVENTS_HEADER = ['ibg', 'bi']


class EventSequence(object):
    """
    Parallel gap and intensity streams of one series

    Attributes
    ----------
    ibg : numpy.ndarray of int64
    bi : numpy.ndarray of float64
    spans : numpy.ndarray of int64, shape (K, 2), or None
        inclusive (tau, rho) of each burst, when known
    t_act : float
    window : float
    key : str

    """

    def __init__(self, ibg, bi, spans=None, t_act=0., window=1., key=''):
        self.ibg = np.array(ibg, dtype=np.int64).reshape(-1)
        self.bi = np.array(bi, dtype=np.float64).reshape(-1)
        if len(self.ibg) != len(self.bi):
            raise io_nb.DataError(
                "gap and intensity streams of '%s' differ in length (%d, %d)" % (
                    key, len(self.ibg), len(self.bi)))
        if len(self.ibg):
            if self.ibg[0] < 0 or np.any(self.ibg[1:] <= 0):
                raise io_nb.DataError(
                    "inter-burst gaps of '%s' must be positive (the first one "
                    "may be zero)" % key)
            if np.any(self.bi <= 0) or not np.all(np.isfinite(self.bi)):
                raise io_nb.DataError(
                    "burst intensities of '%s' must be positive and finite" % key)
        if spans is not None:
            spans = np.array(spans, dtype=np.int64).reshape(-1, 2)
            if len(spans) != len(self.ibg):
                raise io_nb.DataError("'%s': one span is needed per burst" % key)
            if len(spans) and (
                    np.any(np.cumsum(self.ibg) != spans[:, 0]) or
                    np.any(spans[:, 1] < spans[:, 0]) or
                    np.any(spans[1:, 0] <= spans[:-1, 1])):
                raise io_nb.DataError(
                    "'%s': spans are not ordered, disjoint and consistent with "
                    "the gaps" % key)
        self.spans = spans
        self.t_act = float(t_act)
        self.window = float(window)
        self.key = str(key)

    def __len__(self):
        return len(self.ibg)

    def __eq__(self, other):
        if not isinstance(other, EventSequence):
            return NotImplemented
        same_spans = (self.spans is None and other.spans is None) or (
            self.spans is not None and other.spans is not None and
            np.array_equal(self.spans, other.spans))
        return (np.array_equal(self.ibg, other.ibg) and
                np.array_equal(self.bi, other.bi) and same_spans)

    def __repr__(self):
        return 'EventSequence(key=%r, t_act=%g, bursts=%d)' % (
            self.key, self.t_act, len(self))

    @property
    def starts(self):
        """Absolute start window of every burst"""
        return np.cumsum(self.ibg)


def eventize(series, t_act):
    """
    Bursts of a series at the activity threshold `t_act`

    >>> from netburst.series import TimeSeries
    >>> events = eventize(TimeSeries([0, 5, 7, 0, 0, 3, 0], 1.), 2)
    >>> events.spans.tolist(), events.ibg.tolist(), events.bi.tolist()
    ([[1, 2], [5, 5]], [1, 4], [12.0, 3.0])

    """
    if t_act < 0:
        raise io_nb.ArgumentError("the activity threshold must be >= 0")
    values = series.values
    active = np.concatenate([[False], values > t_act, [False]])
    edges = np.diff(active.astype(np.int8))
    taus = np.flatnonzero(edges == 1)
    rhos = np.flatnonzero(edges == -1) - 1
    bi = [values[tau:rho+1].sum() for tau, rho in zip(taus, rhos)]
    ibg = np.diff(np.concatenate([[0], taus]))
    return EventSequence(ibg, bi, np.column_stack([taus, rhos]),
                         t_act, series.window, series.key)


def place_spikes(starts, intensities, horizon):
    """
    Put each intensity at its start window, on a grid of `horizon` windows

    Starts outside `[0, horizon)` are dropped; intensities landing in the same
    window add up.
    """
    if horizon < 0:
        raise io_nb.ArgumentError("the horizon must be >= 0")
    output = np.zeros(int(horizon), dtype=np.float64)
    starts = np.asarray(starts, dtype=np.int64)
    intensities = np.asarray(intensities, dtype=np.float64)
    inside = (starts >= 0) & (starts < horizon)
    np.add.at(output, starts[inside], intensities[inside])
    return output


def reconstruct(events, horizon, origin=0):
    """
    Spike-placed series of `horizon` windows

    Start times are the prefix sums of the gaps, counted from `origin` (0 for
    a series reconstructed from its own start; forecasts pass a negative
    origin to count the first gap from the last burst of their context).

    Parameters
    ----------
    events : EventSequence or any object with `ibg`, `bi` and `window`

    >>> list(reconstruct(EventSequence([1, 4], [12, 3]), 7).values)
    [0.0, 12.0, 0.0, 0.0, 0.0, 3.0, 0.0]

    """
    from netburst.series import TimeSeries
    starts = origin + np.cumsum(np.asarray(events.ibg, dtype=np.int64))
    return TimeSeries(place_spikes(starts, events.bi, horizon),
                      getattr(events, 'window', 1.),
                      key=getattr(events, 'key', ''))


def write_events(events, folder, name=None):
    """Write `<name>.events.csv` and its `<name>.events.param` sidecar"""
    name = (name or events.key) + '.events'
    path = os.path.join(folder, name + '.csv')
    io_nb.write_columns(path, EVENTS_HEADER, zip(
        events.ibg.tolist(), events.bi.tolist()))
    io_nb.write_structured(
        os.path.join(folder, name + '.param'), 'events',
        [('key', events.key), ('t_act', events.t_act),
         ('window', events.window)])
    return path


def read_events(path):
    """Read back an event stream written by :func:`write_events`"""
    ibg, bi = io_nb.read_columns(path, EVENTS_HEADER)
    if np.any(ibg != np.round(ibg)):
        raise io_nb.DataError("%s: inter-burst gaps must be integers" % path)
    meta = io_nb.read_structured(os.path.splitext(path)[0] + '.param', 'events')
    return EventSequence(ibg.astype(np.int64), bi, None,
                         meta.get('t_act', 0.), meta.get('window', 1.),
                         meta.get('key', ''))
