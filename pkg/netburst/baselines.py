"""
.. module:: baselines
    :synopsis: Comparators for the event-centric forecaster

Two naive forecasters (always zero, repeat the last value) and a token
forecaster working directly on the raw window values, one token per window.
The raw forecaster is the binning ablation: with a uniform codebook it mimics
a forecaster with fixed-width value bins, with a quantile codebook it keeps
the architecture and only changes the binning.
"""
import numpy as np

import netburst.io_nb as io_nb
import netburst.quantizer as quantizer
import netburst.token_model as token_model
from netburst.series import TimeSeries


def zero_forecast(horizon, window=1., start=0, key=''):
    """`horizon` windows of zeros"""
    if horizon < 0:
        raise io_nb.ArgumentError("the horizon must be >= 0")
    return TimeSeries(np.zeros(int(horizon)), window, start, key)


def persistence_forecast(context, horizon):
    """Repeat the last value of the context"""
    if len(context) == 0:
        raise io_nb.ArgumentError("persistence needs a non empty context")
    if horizon < 0:
        raise io_nb.ArgumentError("the horizon must be >= 0")
    return TimeSeries(np.full(int(horizon), context.values[-1]), context.window,
                      context.time_of(len(context)), context.key)


class RawTokenForecaster(object):
    """A codebook over raw window values and one token model"""

    def __init__(self, codebook, model, report=None):
        if codebook.bins != model.config.vocab:
            raise io_nb.FitError(
                "the raw codebook has %d bins but the model a vocabulary of %d"
                % (codebook.bins, model.config.vocab))
        self.codebook = codebook
        self.model = model
        self.report = report

    def __repr__(self):
        return 'RawTokenForecaster(%r)' % (self.codebook,)


def raw_fit(train_series, scheme, config, bins=256, val_series=(),
            centroid='mean', command_line=None):
    """
    Fit a codebook on every training window value, then a token model

    Parameters
    ----------
    train_series : list of TimeSeries
    scheme : str
        `uniform` or `quantile`
    config : token_model.ModelConfig
        its vocabulary is set to the effective number of bins

    """
    values = np.concatenate([series.values for series in train_series]) \
        if len(train_series) else np.zeros(0)
    codebook = quantizer.fit(values, bins, scheme, centroid)
    io_nb.progress(command_line, "training the raw %s model (%d tokens)" % (
        scheme, codebook.bins))
    model, report = token_model.train(
        config.replace(vocab=codebook.bins),
        [quantizer.encode_many(codebook, series.values) for series in train_series],
        [quantizer.encode_many(codebook, series.values) for series in val_series],
        command_line)
    return RawTokenForecaster(codebook, model, report)


def raw_forecast(forecaster, context, horizon, mode=None):
    """Decode `horizon` window tokens after the context"""
    if horizon < 0:
        raise io_nb.ArgumentError("the horizon must be >= 0")
    if len(context) == 0:
        raise io_nb.ArgumentError("the raw forecaster needs a non empty context")
    tokens = token_model.generate(
        forecaster.model, quantizer.encode_many(forecaster.codebook,
                                                context.values),
        int(horizon), mode)
    return TimeSeries(quantizer.decode_many(forecaster.codebook, tokens),
                      context.window, context.time_of(len(context)), context.key)


def raw_embed(forecaster, series):
    """Mean final hidden state over the window tokens of `series`"""
    return token_model.embed(
        forecaster.model, quantizer.encode_many(forecaster.codebook,
                                                series.values))
