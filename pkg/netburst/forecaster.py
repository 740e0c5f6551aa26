"""
.. module:: forecaster
    :synopsis: The assembled event-centric forecaster

Training series are eventized at the activity threshold, the pooled gaps and
intensities each get a global quantile codebook, and one token model is
trained on each token stream, independently.

Forecasting encodes the bursts of the context, decodes gap and intensity
tokens autoregressively, maps them back to values through the codebook
centroids, and places every decoded intensity at its decoded start window.
The first decoded gap is counted from the start of the last burst of the
context, so that gaps stay start-to-start across the forecast origin. Gaps
are decoded until the next start falls beyond the horizon (that last event is
then dropped by the placement), or until a cap on the number of events
starting at or after the origin. Decoded starts before the origin are
dropped by the placement.

The oracle variants replace one decoded stream (or both) by the true one,
which isolates the error due to timing from the error due to magnitude.
"""
import itertools
import math
import os

import numpy as np

import netburst.io_nb as io_nb
import netburst.quantizer as quantizer
import netburst.token_model as token_model
from netburst.eventizer import eventize, place_spikes
from netburst.series import TimeSeries

ORACLES = ('IBG', 'BI', 'both')


class NetBurstModel(object):
    """
    Two codebooks and two token models, at one activity threshold

    Attributes
    ----------
    t_act : float
    window : float
    ibg_codebook, bi_codebook : quantizer.Codebook
    ibg_model, bi_model : token_model.TokenModel
    transferred : bool
        codebooks were refitted on another granularity (see :func:`transfer`),
        decoded tokens beyond their bins are clamped to the last bin
    reports : dict
        training reports of the two token models, when known

    """

    def __init__(self, t_act, ibg_codebook, bi_codebook, ibg_model, bi_model,
                 window=1., transferred=False, reports=None):
        if not transferred:
            for name, cb, model in (('gap', ibg_codebook, ibg_model),
                                    ('intensity', bi_codebook, bi_model)):
                if cb.bins != model.config.vocab:
                    raise io_nb.FitError(
                        "the %s codebook has %d bins but its model a vocabulary"
                        " of %d" % (name, cb.bins, model.config.vocab))
        self.t_act = float(t_act)
        self.window = float(window)
        self.ibg_codebook = ibg_codebook
        self.bi_codebook = bi_codebook
        self.ibg_model = ibg_model
        self.bi_model = bi_model
        self.transferred = transferred
        self.reports = reports or {}

    def __repr__(self):
        return 'NetBurstModel(t_act=%g, ibg=%r, bi=%r)' % (
            self.t_act, self.ibg_codebook, self.bi_codebook)

    def tokens(self, events):
        """Gap and intensity token streams of an event sequence"""
        return (quantizer.encode_many(self.ibg_codebook, events.ibg),
                quantizer.encode_many(self.bi_codebook, events.bi))


class DecodedEvents(object):
    """
    Audit record of the streams behind a forecast

    `starts` are relative to the forecast origin (negative before it).
    """

    def __init__(self, ibg_tokens, bi_tokens, ibg, bi, starts):
        self.ibg_tokens = np.asarray(ibg_tokens, dtype=np.int64)
        self.bi_tokens = np.asarray(bi_tokens, dtype=np.int64)
        self.ibg = np.asarray(ibg, dtype=np.int64)
        self.bi = np.asarray(bi, dtype=np.float64)
        self.starts = np.asarray(starts, dtype=np.int64)

    def __len__(self):
        return len(self.ibg)

    def as_fields(self):
        return [('ibg_tokens', self.ibg_tokens), ('bi_tokens', self.bi_tokens),
                ('ibg', self.ibg), ('bi', self.bi), ('starts', self.starts)]


class Forecast(object):
    """Reconstructed byte counts over the horizon, and the decoded streams"""

    def __init__(self, series, events, horizon):
        self.series = series
        self.events = events
        self.horizon = int(horizon)

    def __repr__(self):
        return 'Forecast(horizon=%d, events=%d)' % (self.horizon, len(self.events))


def fit(train_series, t_act, configs, bins=(256, 256), centroid='mean',
        val_series=(), command_line=None):
    """
    Fit the codebooks and train the two token models

    Parameters
    ----------
    train_series : list of TimeSeries
    t_act : float
    configs : (ModelConfig, ModelConfig)
        settings of the gap and intensity models; their vocabulary is set to
        the effective number of bins of the matching codebook
    bins : (int, int)
        requested bins of the gap and intensity codebooks

    Keyword Arguments
    -----------------
    centroid : str
        `mean` or `median`
    val_series : list of TimeSeries
        validation parts, eventized with the same threshold for early
        stopping
    command_line : Namespace
        for progress display

    """
    train_events = [eventize(series, t_act) for series in train_series]
    if not any(len(events) >= 2 for events in train_events):
        raise io_nb.FitError(
            "no training series has two bursts or more above t_act = %g: "
            "the threshold is too high" % t_act)
    ibg_values = np.concatenate([events.ibg for events in train_events])
    bi_values = np.concatenate([events.bi for events in train_events])
    ibg_codebook = quantizer.fit_quantile(ibg_values, bins[0], centroid)
    bi_codebook = quantizer.fit_quantile(bi_values, bins[1], centroid)

    val_events = [eventize(series, t_act) for series in val_series]
    models, reports = [], {}
    for name, cb, config in (('ibg', ibg_codebook, configs[0]),
                             ('bi', bi_codebook, configs[1])):
        io_nb.progress(command_line, "training the %s model (%d tokens)" % (
            name, cb.bins))
        train_seqs = [quantizer.encode_many(cb, getattr(events, name))
                      for events in train_events]
        val_seqs = [quantizer.encode_many(cb, getattr(events, name))
                    for events in val_events]
        model, report = token_model.train(
            config.replace(vocab=cb.bins), train_seqs, val_seqs, command_line)
        models.append(model)
        reports[name] = report

    window = train_series[0].window if len(train_series) else 1.
    return NetBurstModel(t_act, ibg_codebook, bi_codebook, models[0], models[1],
                         window, reports=reports)


def transfer(model, train_series, t_act, centroid='mean'):
    """
    Re-use the token models of `model` with codebooks refitted on other data

    The new codebooks are fitted on the events of `train_series` at `t_act`,
    with as many requested bins as the models have tokens.
    """
    events = [eventize(series, t_act) for series in train_series]
    if not any(len(elem) for elem in events):
        raise io_nb.FitError(
            "no burst above t_act = %g in the target series" % t_act)
    ibg_codebook = quantizer.fit_quantile(
        np.concatenate([elem.ibg for elem in events]),
        model.ibg_model.config.vocab, centroid)
    bi_codebook = quantizer.fit_quantile(
        np.concatenate([elem.bi for elem in events]),
        model.bi_model.config.vocab, centroid)
    return NetBurstModel(t_act, ibg_codebook, bi_codebook, model.ibg_model,
                         model.bi_model, train_series[0].window,
                         transferred=True)


def _values(cb, tokens):
    """Centroids of decoded tokens, clamped to the bins of `cb`"""
    return quantizer.decode_many(cb, np.minimum(tokens, cb.bins - 1))


def _gaps(values):
    """Decoded gaps in whole windows (never negative)"""
    return np.maximum(np.rint(np.asarray(values, dtype=np.float64)), 0).astype(
        np.int64)


def _context(model, context, horizon):
    if horizon <= 0:
        raise io_nb.ArgumentError("the horizon must be positive, not %s" % horizon)
    events = eventize(context, model.t_act)
    if len(events) == 0:
        raise io_nb.ForecastError(
            "the context holds no burst above t_act = %g; try a lower "
            "activity threshold" % model.t_act, key=context.key)
    # start of the last context burst, relative to the forecast origin
    anchor = int(events.starts[-1]) - len(context)
    return events, anchor


def _modes(mode):
    mode = mode or token_model.DecodeMode.sample(1., 0)
    return mode.reseed(mode.seed), mode.reseed(mode.seed + 1)


def _series(context, values):
    return TimeSeries(values, context.window, context.time_of(len(context)),
                      context.key)


def event_cap(events, horizon, factor=10):
    """
    Maximum number of events decoded over `horizon` windows

    `factor` times the number of events expected from the mean gap of the
    context (at least one).
    """
    gaps = events.ibg[1:] if len(events) > 1 else events.ibg
    mean_gap = max(float(np.mean(gaps)), 1.)
    return max(1, int(factor*math.ceil(horizon/mean_gap)))


def _decode_gaps(model, ibg_tokens, mode, anchor, wanted, limit, horizon=None):
    """
    Decode gaps from `anchor` until `wanted` starts fall at or after the origin

    Decoding also stops at the first start beyond `horizon` (when given), or
    after `limit` tokens in all, since a gap of zero windows does not move
    the start forward. Returns the tokens, the gaps and the starts.
    """
    decoded, gaps, starts = [], [], []
    position, after = anchor, 0
    for token in itertools.islice(
            token_model.iterate(model.ibg_model, ibg_tokens, mode), limit):
        gap = int(_gaps(_values(model.ibg_codebook, [token]))[0])
        position += gap
        decoded.append(token)
        gaps.append(gap)
        starts.append(position)
        if position >= 0:
            after += 1
        if after >= wanted or (horizon is not None and position >= horizon):
            break
    return (np.asarray(decoded, dtype=np.int64),
            np.asarray(gaps, dtype=np.int64),
            np.asarray(starts, dtype=np.int64))


def forecast(model, context, horizon, mode=None, max_events=None,
             max_events_factor=10):
    """
    Forecast the `horizon` windows following `context`

    Parameters
    ----------
    model : NetBurstModel
    context : TimeSeries
    horizon : int
    mode : token_model.DecodeMode
        sampling at temperature 1 when omitted; the intensity stream uses
        `seed + 1`

    Keyword Arguments
    -----------------
    max_events : int
        cap on decoded events starting at or after the origin, by default
        :func:`event_cap`; as many again may start before it

    Returns
    -------
    Forecast

    """
    events, anchor = _context(model, context, horizon)
    ibg_tokens, bi_tokens = model.tokens(events)
    ibg_mode, bi_mode = _modes(mode)
    cap = max_events or event_cap(events, horizon, max_events_factor)

    decoded, gaps, starts = _decode_gaps(model, ibg_tokens, ibg_mode, anchor,
                                         cap, 2*cap, horizon)
    new_bi = token_model.generate(model.bi_model, bi_tokens, len(decoded),
                                  bi_mode)
    intensities = _values(model.bi_codebook, new_bi)
    return Forecast(_series(context, place_spikes(starts, intensities, horizon)),
                    DecodedEvents(decoded, new_bi, gaps, intensities, starts),
                    horizon)


def forecast_oracle(model, context, horizon, oracle, truth, mode=None,
                    tokenized=False):
    """
    Forecast with one stream, or both, taken from the truth

    Parameters
    ----------
    oracle : str
        `IBG` (true gaps, decoded intensities), `BI` (decoded gaps, true
        intensities) or `both`
    truth : EventSequence
        bursts of the series following the context, with windows counted
        from the forecast origin

    Keyword Arguments
    -----------------
    tokenized : bool
        pass the true values through their codebook first, to measure the
        quantisation error alone

    The number of events is the number of true bursts starting within the
    horizon. With decoded gaps, decoding goes on until that many starts fall
    at or after the origin; earlier starts are left out.
    """
    if oracle not in ORACLES:
        raise io_nb.ArgumentError(
            "oracle should be one of %s, not '%s'" % (ORACLES, oracle))
    events, anchor = _context(model, context, horizon)
    ibg_tokens, bi_tokens = model.tokens(events)
    ibg_mode, bi_mode = _modes(mode)

    true_starts = truth.starts
    count = int(np.sum(true_starts < horizon))
    true_gaps = np.diff(np.concatenate([[anchor], true_starts[:count]]))
    true_bi = truth.bi[:count]

    if oracle in ('IBG', 'both'):
        gap_tokens = quantizer.encode_many(model.ibg_codebook, true_gaps)
        gaps = _gaps(quantizer.roundtrip(model.ibg_codebook, true_gaps)) \
            if tokenized else true_gaps.astype(np.int64)
        starts = anchor + np.cumsum(gaps)
    elif count:
        gap_tokens, gaps, starts = _decode_gaps(
            model, ibg_tokens, ibg_mode, anchor, count,
            count + event_cap(events, horizon))
        # true intensities go to the decoded starts at or after the origin
        kept = starts >= 0
        gap_tokens, starts = gap_tokens[kept], starts[kept]
        gaps = np.diff(np.concatenate([[anchor], starts])).astype(np.int64)
        count = len(starts)
        true_bi = true_bi[:count]
    else:
        gap_tokens = gaps = starts = np.zeros(0, dtype=np.int64)

    if oracle in ('BI', 'both'):
        intensity_tokens = quantizer.encode_many(model.bi_codebook, true_bi)
        intensities = quantizer.roundtrip(model.bi_codebook, true_bi) \
            if tokenized else np.array(true_bi, dtype=np.float64)
    else:
        intensity_tokens = token_model.generate(model.bi_model, bi_tokens,
                                                count, bi_mode)
        intensities = _values(model.bi_codebook, intensity_tokens)

    return Forecast(_series(context, place_spikes(starts, intensities, horizon)),
                    DecodedEvents(gap_tokens, intensity_tokens, gaps,
                                  intensities, starts),
                    horizon)


def embed_series(model, series):
    """Gap-model embedding followed by the intensity-model embedding"""
    events = eventize(series, model.t_act)
    if len(events) == 0:
        raise io_nb.EmbeddingError(
            "the series holds no burst above t_act = %g" % model.t_act,
            key=series.key)
    ibg_tokens, bi_tokens = model.tokens(events)
    ibg_tokens = np.minimum(ibg_tokens, model.ibg_model.config.vocab - 1)
    bi_tokens = np.minimum(bi_tokens, model.bi_model.config.vocab - 1)
    return np.concatenate([token_model.embed(model.ibg_model, ibg_tokens),
                           token_model.embed(model.bi_model, bi_tokens)])


def save_model(model, folder):
    """Codebooks, checkpoints and a `model.param` description in `folder`"""
    if not os.path.isdir(folder):
        os.makedirs(folder)
    quantizer.write_codebook(model.ibg_codebook,
                             os.path.join(folder, 'ibg.codebook'))
    quantizer.write_codebook(model.bi_codebook,
                             os.path.join(folder, 'bi.codebook'))
    token_model.save_checkpoint(model.ibg_model, os.path.join(folder, 'ibg.ckpt'))
    token_model.save_checkpoint(model.bi_model, os.path.join(folder, 'bi.ckpt'))
    fields = [('t_act', model.t_act), ('window', model.window),
              ('transferred', model.transferred)]
    for name in sorted(model.reports):
        fields.extend(('%s_%s' % (name, field), value) for field, value in
                      model.reports[name].as_fields())
    io_nb.write_structured(os.path.join(folder, 'model.param'), 'model', fields)


def load_model(folder):
    meta = io_nb.read_structured(os.path.join(folder, 'model.param'), 'model')
    return NetBurstModel(
        meta['t_act'],
        quantizer.read_codebook(os.path.join(folder, 'ibg.codebook')),
        quantizer.read_codebook(os.path.join(folder, 'bi.codebook')),
        token_model.load_checkpoint(os.path.join(folder, 'ibg.ckpt')),
        token_model.load_checkpoint(os.path.join(folder, 'bi.ckpt')),
        meta.get('window', 1.), meta.get('transferred', False))


def write_forecast(result, folder, name):
    """Forecast series as csv, decoded streams as structured text"""
    from netburst.series import write_series
    path = write_series(result.series, folder, name)
    io_nb.write_structured(os.path.join(folder, name + '.decoded.param'),
                           'decoded', [('horizon', result.horizon)] +
                           result.events.as_fields())
    return path
