"""
.. module:: experiments
    :synopsis: Drivers of the command line subcommands

Every subcommand is a function `cmd_<name>(config, command_line, version)`
registered in :data:`COMMANDS`. They all follow the same course:

* the dataset is loaded (a trace, a corpus manifest or a generated corpus),
  and every series is split chronologically,
* each stage runs inside :meth:`Stopwatch.stage`, which tags the errors with
  the stage name and records its wall-clock time,
* per-entity work goes through :func:`pool_map` (a thread pool when
  `--jobs` > 1) and is reduced in entity order, so that outputs do not depend
  on the number of workers,
* outputs are written in the output folder: reports as structured text, plot
  data as CSV, and the stage timings in `timings.param`. Reports also end
  with the timings of the stages run before them.

For the commands running over seeds, each seed gets its own `seed_<s>`
subfolder, and a summary over seeds is written at the top.

The forecast context of an entity is its training and validation parts; the
forecast origin is the start of its test part, and the horizon is the length
of the test part (capped by `data.horizon`).
"""
import contextlib
import itertools
import os
import re
import threading
import time
import warnings
from collections import namedtuple, OrderedDict
from concurrent.futures import ThreadPoolExecutor

import numpy as np

import netburst.baselines as baselines
import netburst.forecaster as forecaster
import netburst.io_nb as io_nb
import netburst.metrics as metrics
import netburst.quantizer as quantizer
import netburst.synth as synth
from netburst.eventizer import eventize, write_events
from netburst.series import (read_trace, aggregate_records, chronological_split,
                             concatenate, threshold_series, rebin, write_series)

Member = namedtuple('Member', ['key', 'series', 'label', 'events'])
Part = namedtuple('Part', ['member', 'train', 'val', 'test'])

ABLATION_MODELS = ('raw_uniform', 'raw_quantile', 'netburst', 'oracle_ibg',
                   'oracle_bi')


class Stopwatch(object):
    """Wall-clock time of the stages of a command, summed per stage name"""

    def __init__(self):
        self.timings = OrderedDict()
        self.lock = threading.Lock()

    @contextlib.contextmanager
    def stage(self, name, key=None):
        begin = time.perf_counter()
        try:
            yield
        except io_nb.NetBurstError as error:
            raise error.tag(name, key)
        finally:
            with self.lock:
                self.timings[name] = self.timings.get(name, 0.) + \
                    time.perf_counter() - begin

    def write(self, folder):
        io_nb.log_timings(folder, list(self.timings.items()))


def pool_map(function, items, jobs=1):
    """`[function(item) for item in items]`, on `jobs` threads"""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [function(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(function, items))


def file_names(keys):
    """File-system safe and distinct names for entity keys"""
    names, used = [], set()
    for index, key in enumerate(keys):
        name = re.sub(r'[^A-Za-z0-9_.-]', '_', key) or 'entity'
        if name in used:
            name = '%s_%d' % (name, index)
        used.add(name)
        names.append(name)
    return names


def _folder(*parts):
    folder = os.path.join(*parts)
    if not os.path.isdir(folder):
        os.makedirs(folder)
    return folder


# ----------------------------------------------------------------------------
# Datasets
# ----------------------------------------------------------------------------
def corpus_members(spec):
    """Members of a generated corpus, from a `data.synth` like dictionary"""
    settings = dict(spec)
    preset = settings.pop('preset')
    entities = settings.pop('entities', 4)
    seed = settings.pop('seed', 0)
    corpus = synth.generate_corpus(preset, entities, seed, **settings)
    return [Member(entity.key, entity.series, entity.label, entity.events)
            for entity in corpus], corpus


def load_dataset(config):
    """
    Entities of the run: from `data.trace`, else `data.manifest`, else
    `data.synth`
    """
    if config.trace is not None:
        series = aggregate_records(read_trace(config.trace), config.window)
        return [Member(key, value, None, None) for key, value in series.items()]
    if config.manifest is not None:
        corpus = synth.regenerate(synth.read_manifest(config.manifest))
        return [Member(entity.key, entity.series, entity.label, entity.events)
                for entity in corpus]
    if config.synth is not None:
        return corpus_members(config.synth)[0]
    raise io_nb.ConfigurationError(
        "No dataset: set one of data.trace, data.manifest or data.synth")


def split_members(members, config):
    parts = []
    for member in members:
        try:
            parts.append(Part(member, *chronological_split(
                member.series, config.split_spec)))
        except io_nb.NetBurstError as error:
            raise error.tag('split', member.key)
    return parts


def horizon_of(part, config):
    if config.horizon is None:
        return len(part.test)
    return min(int(config.horizon), len(part.test))


def context_of(part):
    return concatenate(part.train, part.val)


def entity_seed(seed, index):
    return synth.mix_seed(seed, index)


def fit_netburst(config, parts, seed, command_line=None, t_act=None,
                 transform=None):
    """Forecaster fitted on the training parts, validated on the others"""
    t_act = config.t_act if t_act is None else t_act
    transform = transform or (lambda series: series)
    configs = (config.model_config('ibg_model', seed),
               config.model_config('bi_model', seed))
    return forecaster.fit(
        [transform(part.train) for part in parts], t_act, configs,
        tuple(config.bins), config.centroid,
        [transform(part.val) for part in parts], command_line)


def fit_raw(config, parts, seed, scheme, command_line=None):
    return baselines.raw_fit(
        [part.train for part in parts], scheme,
        config.model_config('raw_model', seed), config.raw_bins,
        [part.val for part in parts], config.centroid, command_line)


# ----------------------------------------------------------------------------
# Scoring
# ----------------------------------------------------------------------------
def measure(values, failures, name, function, *args):
    """Store `function(*args)` as `values[name]`, or record its MetricError"""
    try:
        values[name] = function(*args)
    except io_nb.MetricError as error:
        values[name] = None
        failures.append((name, error))


def event_distances(decoded, truth, horizon):
    """
    Wasserstein distances between decoded and true gaps and intensities

    Only events starting within the horizon count; gaps are counted from the
    last burst of the context for both. None when either side is empty.
    """
    inside = (decoded.starts >= 0) & (decoded.starts < horizon)
    if not inside.any() or len(truth) == 0:
        return None, None
    anchor = decoded.starts[0] - decoded.ibg[0]
    predicted = np.diff(np.concatenate([[anchor], decoded.starts[inside]]))
    actual = np.diff(np.concatenate([[anchor], truth.starts]))
    return (metrics.wasserstein1(predicted, actual),
            metrics.wasserstein1(decoded.bi[inside], truth.bi))


def score(config, train, truth, predicted, prefix='', t_act=None):
    """Event MASE and window-value Wasserstein distance of one forecast"""
    t_act = config.t_act if t_act is None else t_act
    values, failures = OrderedDict(), []
    measure(values, failures, prefix + 'mase', metrics.mase_events,
            predicted, truth, train, t_act, config.mase_denominator)
    values[prefix + 'wd'] = metrics.wasserstein1(predicted.values, truth.values)
    return values, failures


def record(report, results):
    """Reduce per-entity results, in entity order"""
    for key, values, events, failures in results:
        report.add(key, values, events)
        for name, error in failures:
            report.fail(key, name, error)
    return report


def write_summary(path, reports):
    """One row per seed with the aggregate of every metric"""
    names = []
    for report in reports.values():
        names.extend(name for name in report.metrics if name not in names)
    io_nb.write_columns(path, ['seed'] + names, [
        [seed] + [report.aggregate.get(name) for name in names]
        for seed, report in reports.items()])


# ----------------------------------------------------------------------------
# Unit commands
# ----------------------------------------------------------------------------
def cmd_ingest(config, command_line, version):
    """Aggregate `data.trace` into one series file per entity"""
    if config.trace is None:
        raise io_nb.ConfigurationError("ingest needs data.trace")
    stopwatch = Stopwatch()
    with stopwatch.stage('ingest'):
        members = load_dataset(config)
        folder = _folder(config.out, 'series')
        for member, name in zip(members, file_names(
                [member.key for member in members])):
            write_series(member.series, folder, name)
    io_nb.progress(command_line, "%d series written to %s" % (
        len(members), folder))
    stopwatch.write(config.out)
    return members


def cmd_synth(config, command_line, version):
    """Generate `data.synth`, with its planted events and its manifest"""
    if config.synth is None:
        raise io_nb.ConfigurationError("synth needs data.synth")
    stopwatch = Stopwatch()
    with stopwatch.stage('synth'):
        members, corpus = corpus_members(config.synth)
        series_folder = _folder(config.out, 'series')
        events_folder = _folder(config.out, 'events')
        for member, name in zip(members, file_names(
                [member.key for member in members])):
            write_series(member.series, series_folder, name)
            if member.events is not None:
                write_events(member.events, events_folder, name)
        synth.write_manifest(corpus, os.path.join(config.out, 'corpus.manifest'),
                             config.synth['preset'], config.synth.get('seed', 0))
    io_nb.progress(command_line, "%d series generated in %s" % (
        len(members), series_folder))
    stopwatch.write(config.out)
    return corpus


def cmd_eventize(config, command_line, version):
    """Burst streams of every series at `data.t_act`"""
    stopwatch = Stopwatch()
    with stopwatch.stage('load'):
        members = load_dataset(config)
    folder = _folder(config.out, 'events')
    streams = []
    for member, name in zip(members, file_names(
            [member.key for member in members])):
        with stopwatch.stage('eventize', member.key):
            events = eventize(member.series, config.t_act)
            write_events(events, folder, name)
            streams.append(events)
    stopwatch.write(config.out)
    return streams


def cmd_fit_codebook(config, command_line, version):
    """Gap and intensity codebooks on the training parts, and the raw one"""
    stopwatch = Stopwatch()
    with stopwatch.stage('load'):
        parts = split_members(load_dataset(config), config)
    folder = _folder(config.out, 'codebooks')
    with stopwatch.stage('fit_codebook'):
        events = [eventize(part.train, config.t_act) for part in parts]
        if not any(len(elem) for elem in events):
            raise io_nb.FitError(
                "no burst above t_act = %g in the training parts" % config.t_act)
        codebooks = OrderedDict([
            ('ibg', quantizer.fit_quantile(
                np.concatenate([elem.ibg for elem in events]), config.bins[0],
                config.centroid)),
            ('bi', quantizer.fit_quantile(
                np.concatenate([elem.bi for elem in events]), config.bins[1],
                config.centroid)),
            ('raw', quantizer.fit(
                np.concatenate([part.train.values for part in parts]),
                config.raw_bins, config.raw_scheme, config.centroid))])
        for name, cb in codebooks.items():
            quantizer.write_codebook(cb, os.path.join(folder, name + '.codebook'))
            io_nb.progress(command_line, "%s codebook: %d bins out of %d" % (
                name, cb.bins, cb.requested))
    stopwatch.write(config.out)
    return codebooks


def cmd_train(config, command_line, version):
    """Fit the forecaster with the first seed and save it in `<out>/model`"""
    stopwatch = Stopwatch()
    with stopwatch.stage('load'):
        parts = split_members(load_dataset(config), config)
    with stopwatch.stage('fit'):
        model = fit_netburst(config, parts, config.seeds[0], command_line)
    with stopwatch.stage('save'):
        forecaster.save_model(model, os.path.join(config.out, 'model'))
    stopwatch.write(config.out)
    return model


def cmd_forecast(config, command_line, version):
    """Forecast the test part of every entity"""
    stopwatch = Stopwatch()
    with stopwatch.stage('load'):
        parts = split_members(load_dataset(config), config)
    seed = config.seeds[0]
    model_folder = getattr(command_line, 'model', None)
    with stopwatch.stage('fit'):
        if model_folder is not None:
            model = forecaster.load_model(model_folder)
        else:
            model = fit_netburst(config, parts, seed, command_line)
    folder = _folder(config.out, 'forecasts')
    names = file_names([part.member.key for part in parts])

    def task(item):
        index, part = item
        with stopwatch.stage('forecast', part.member.key):
            result = forecaster.forecast(
                model, context_of(part), horizon_of(part, config),
                config.decode(entity_seed(seed, index)),
                max_events_factor=config.max_events_factor)
        forecaster.write_forecast(result, folder, names[index])
        return result

    results = pool_map(task, enumerate(parts), command_line.jobs)
    stopwatch.write(config.out)
    return results


# ----------------------------------------------------------------------------
# Experiments
# ----------------------------------------------------------------------------
def cmd_pipeline(config, command_line, version):
    """
    End-to-end evaluation (the `evaluate` command)

    For every seed: fit the forecaster, forecast the test part of every
    entity, and measure event MASE (with the zero and persistence forecasts as
    references), the Wasserstein distances of the window values, the gaps and
    the intensities, and the absolute scaled errors of every event window.

    Returns
    -------
    reports : OrderedDict
        seed -> :class:`metrics.MetricsReport`

    """
    stopwatch = Stopwatch()
    with stopwatch.stage('load'):
        parts = split_members(load_dataset(config), config)
    reports = OrderedDict()
    for seed in config.seeds:
        io_nb.progress(command_line, "seed %d: fitting" % seed)
        with stopwatch.stage('fit_seed%d' % seed):
            model = fit_netburst(config, parts, seed, command_line)

        def task(item):
            index, part = item
            key, horizon = part.member.key, horizon_of(part, config)
            context, truth = context_of(part), part.test.slice(0, horizon)
            with stopwatch.stage('forecast', key):
                result = forecaster.forecast(
                    model, context, horizon,
                    config.decode(entity_seed(seed, index)),
                    max_events_factor=config.max_events_factor)
            with stopwatch.stage('metrics', key):
                values, failures = score(config, part.train, truth,
                                         result.series)
                for name, reference in (
                        ('zero', baselines.zero_forecast(
                            horizon, truth.window, truth.start, key)),
                        ('persistence', baselines.persistence_forecast(
                            context, horizon))):
                    measure(values, failures, 'mase_' + name,
                            metrics.mase_events, reference, truth, part.train,
                            config.t_act, config.mase_denominator)
                true_events = eventize(truth, config.t_act)
                values['wd_ibg'], values['wd_bi'] = event_distances(
                    result.events, true_events, horizon)
                try:
                    errors = metrics.absolute_scaled_errors(
                        result.series, truth, part.train, config.t_act,
                        config.mase_denominator)
                except io_nb.MetricError:
                    errors = np.zeros(0)
            return (key, values, int(np.sum(truth.values > config.t_act)),
                    failures), errors

        results = pool_map(task, enumerate(parts), command_line.jobs)
        report = record(metrics.MetricsReport(config.echo()),
                        [result for result, _ in results])
        folder = _folder(config.out, 'seed_%d' % seed)
        report.write(folder, 'evaluate', version, stopwatch.timings)
        errors = np.concatenate([errors for _, errors in results]) \
            if results else np.zeros(0)
        if len(errors):
            io_nb.write_curve(os.path.join(folder, 'ase_cdf.csv'),
                              *metrics.ecdf(errors))
        io_nb.progress(command_line, "seed %d: event MASE %s" % (
            seed, report.aggregate.get('mase')))
        reports[seed] = report
    write_summary(os.path.join(config.out, 'evaluate_seeds.csv'), reports)
    stopwatch.write(config.out)
    return reports


def cmd_ablate(config, command_line, version):
    """
    Binning ablation and oracle study

    The raw forecasters (uniform and quantile codebooks over window values),
    NetBurst and its two oracle variants forecast the same test parts. The
    grouped bar chart data (`ablation.csv`, model x metric) and the share of
    the error each oracle removes (`oracle_gain.csv`) are written per seed.
    """
    stopwatch = Stopwatch()
    with stopwatch.stage('load'):
        parts = split_members(load_dataset(config), config)
    models = list(ABLATION_MODELS)
    if config.tokenized_oracle:
        models += ['oracle_ibg_tokenized', 'oracle_bi_tokenized']
    reports = OrderedDict()
    for seed in config.seeds:
        io_nb.progress(command_line, "seed %d: fitting the three models" % seed)
        with stopwatch.stage('fit_raw_seed%d' % seed):
            raw = dict((scheme, fit_raw(config, parts, seed, scheme,
                                        command_line))
                       for scheme in ('uniform', 'quantile'))
        with stopwatch.stage('fit_seed%d' % seed):
            model = fit_netburst(config, parts, seed, command_line)

        def task(item):
            index, part = item
            key, horizon = part.member.key, horizon_of(part, config)
            context, truth = context_of(part), part.test.slice(0, horizon)
            mode = config.decode(entity_seed(seed, index))
            true_events = eventize(truth, config.t_act)
            forecasts = OrderedDict()
            with stopwatch.stage('forecast', key):
                for scheme in ('uniform', 'quantile'):
                    forecasts['raw_' + scheme] = baselines.raw_forecast(
                        raw[scheme], context, horizon, mode)
                forecasts['netburst'] = forecaster.forecast(
                    model, context, horizon, mode,
                    max_events_factor=config.max_events_factor).series
                for name in models[len(ABLATION_MODELS) - 2:]:
                    oracle = 'IBG' if name.startswith('oracle_ibg') else 'BI'
                    forecasts[name] = forecaster.forecast_oracle(
                        model, context, horizon, oracle, true_events, mode,
                        tokenized=name.endswith('tokenized')).series
            values, failures = OrderedDict(), []
            with stopwatch.stage('metrics', key):
                for name, predicted in forecasts.items():
                    scores, missing = score(config, part.train, truth, predicted,
                                            name + '_')
                    values.update(scores)
                    failures.extend(missing)
            return (key, values, int(np.sum(truth.values > config.t_act)),
                    failures)

        report = record(metrics.MetricsReport(config.echo()),
                        pool_map(task, enumerate(parts), command_line.jobs))
        folder = _folder(config.out, 'seed_%d' % seed)
        report.write(folder, 'ablate', version, stopwatch.timings)
        aggregate = report.aggregate
        io_nb.write_columns(os.path.join(folder, 'ablation.csv'),
                            ['model', 'mase', 'wd'], [
                                [name, aggregate.get(name + '_mase'),
                                 aggregate.get(name + '_wd')]
                                for name in models])
        io_nb.write_columns(os.path.join(folder, 'oracle_gain.csv'),
                            ['oracle', 'mase_reduction', 'wd_reduction'], [
                                [name] + [_reduction(aggregate.get(
                                    'netburst_' + metric), aggregate.get(
                                        name + '_' + metric))
                                    for metric in ('mase', 'wd')]
                                for name in models[len(ABLATION_MODELS) - 2:]])
        reports[seed] = report
    write_summary(os.path.join(config.out, 'ablate_seeds.csv'), reports)
    stopwatch.write(config.out)
    return reports


def _reduction(plain, oracle):
    """Share of the plain error removed by an oracle"""
    if plain is None or oracle is None or plain == 0:
        return None
    return (plain - oracle)/plain


def cmd_transfer(config, command_line, version):
    """
    Cross-granularity threshold sweep

    The entities of the dataset are the fine granularity; random groups of
    `data.group_size` of them are summed into the coarse one. For every
    threshold of `data.thresholds`, the activity histogram of the thresholded
    coarse series is compared to the fine one (Jensen-Shannon divergence, on a
    quantile codebook of the fine active windows), and the model trained on
    the fine entities is evaluated on the coarse ones with refitted
    codebooks. With `data.transfer_reference`, a model trained on the coarse
    series themselves is evaluated alongside.
    """
    stopwatch = Stopwatch()
    with stopwatch.stage('load'):
        members = load_dataset(config)
        fine = split_members(members, config)
    header = ['threshold', 'jsd', 'mase', 'wd']
    if config.transfer_reference:
        header += ['mase_reference', 'wd_reference']
    tables = OrderedDict()
    for seed in config.seeds:
        with stopwatch.stage('aggregate_seed%d' % seed):
            coarse_series = synth.aggregate_groups(
                [member.series for member in members], config.group_size, seed)
            coarse = split_members([Member(series.key, series, None, None)
                                    for series in coarse_series], config)
        with stopwatch.stage('histogram_seed%d' % seed):
            active = np.concatenate([
                member.series.values[member.series.values > config.t_act]
                for member in members]) if members else np.zeros(0)
            cb = quantizer.fit_quantile(active, config.histogram_bins)
            fine_histogram = metrics.normalise(sum(
                metrics.activity_counts(member.series, config.t_act, cb)
                for member in members))
        io_nb.progress(command_line, "seed %d: fitting the fine model" % seed)
        with stopwatch.stage('fit_seed%d' % seed):
            model = fit_netburst(config, fine, seed, command_line)

        folder = _folder(config.out, 'seed_%d' % seed)
        rows = []
        for number, threshold in enumerate(config.thresholds):
            def cut(series, threshold=threshold):
                return threshold_series(series, threshold)

            with stopwatch.stage('jsd_%d' % number):
                coarse_histogram = metrics.normalise(sum(
                    metrics.activity_counts(series, threshold, cb)
                    for series in coarse_series))
                divergence = metrics.jsd(fine_histogram, coarse_histogram)
            with stopwatch.stage('transfer_%d' % number):
                transferred = forecaster.transfer(
                    model, [cut(part.train) for part in coarse], threshold,
                    config.centroid)
                report = _transfer_report(config, command_line, transferred,
                                          coarse, threshold, seed, cut)
                report.write(folder, 'transfer_%02d' % number, version,
                             stopwatch.timings)
            row = [float(threshold), divergence,
                   report.aggregate.get('mase'), report.aggregate.get('wd')]
            if config.transfer_reference:
                with stopwatch.stage('reference_%d' % number):
                    reference = fit_netburst(config, coarse, seed, command_line,
                                             threshold, cut)
                    report = _transfer_report(config, command_line, reference,
                                              coarse, threshold, seed, cut)
                    report.write(folder, 'reference_%02d' % number, version,
                                 stopwatch.timings)
                row += [report.aggregate.get('mase'), report.aggregate.get('wd')]
            io_nb.progress(command_line, "threshold %g: JSD %.4f" % (
                threshold, divergence))
            rows.append(row)
        io_nb.write_columns(os.path.join(folder, 'transfer.csv'), header, rows)
        tables[seed] = rows
    stopwatch.write(config.out)
    return tables


def _transfer_report(config, command_line, model, parts, threshold, seed, cut):
    def task(item):
        index, part = item
        horizon = horizon_of(part, config)
        truth = cut(part.test.slice(0, horizon))
        result = forecaster.forecast(
            model, cut(context_of(part)), horizon,
            config.decode(entity_seed(seed, index)),
            max_events_factor=config.max_events_factor)
        values, failures = score(config, cut(part.train), truth, result.series,
                                 t_act=threshold)
        return (part.member.key, values, int(np.sum(truth.values > threshold)),
                failures)

    echo = config.echo()
    echo['t_act'] = float(threshold)
    results = []
    for result in pool_map(_skipping(task), enumerate(parts), command_line.jobs):
        if result is not None:
            results.append(result)
    return record(metrics.MetricsReport(echo), results)


def _skipping(task):
    """Coarse entities without a burst in their context are left out"""
    def wrapped(item):
        try:
            return task(item)
        except io_nb.ForecastError as error:
            warnings.warn("entity '%s' skipped: %s" % (
                item[1].member.key, error.message))
            return None
    return wrapped


def cmd_embed(config, command_line, version):
    """
    Clustering of series embeddings

    NetBurst embeddings (gap model then intensity model) and those of the raw
    comparator (`data.raw_scheme`) are clustered by k-means for every k of
    `data.ks`; silhouette curves, anisotropies, the silhouette of the known
    regime labels and 2d PCA projections are written per seed.
    """
    stopwatch = Stopwatch()
    with stopwatch.stage('load'):
        members = load_dataset(config)
        parts = split_members(members, config)
    summaries = OrderedDict()
    for seed in config.seeds:
        with stopwatch.stage('fit_seed%d' % seed):
            model = fit_netburst(config, parts, seed, command_line)
            raw = fit_raw(config, parts, seed, config.raw_scheme, command_line)

        def task(member):
            with stopwatch.stage('embed', member.key):
                try:
                    return (forecaster.embed_series(model, member.series),
                            baselines.raw_embed(raw, member.series))
                except io_nb.EmbeddingError:
                    return None

        vectors = pool_map(task, members, command_line.jobs)
        kept = [index for index, vector in enumerate(vectors)
                if vector is not None]
        keys = [members[index].key for index in kept]
        sets = OrderedDict([
            ('netburst', np.array([vectors[index][0] for index in kept])),
            ('comparator', np.array([vectors[index][1] for index in kept]))])

        folder = _folder(config.out, 'seed_%d' % seed)
        rows, errors = [], OrderedDict()
        with stopwatch.stage('cluster_seed%d' % seed):
            for k in config.ks:
                row = [int(k)]
                for name, points in sets.items():
                    try:
                        assignments, _ = metrics.kmeans(points, int(k), seed)
                        row.append(metrics.silhouette(points, assignments))
                    except io_nb.ArgumentError as error:
                        row.append(None)
                        errors['%s_k%d' % (name, k)] = error.message
                rows.append(row)
        io_nb.write_columns(os.path.join(folder, 'silhouette.csv'),
                            ['k'] + list(sets), rows)

        labels = [members[index].label for index in kept]
        summary = OrderedDict([('entities', len(members)),
                               ('skipped', len(members) - len(kept)),
                               ('silhouette', dict((row[0], row[1:])
                                                   for row in rows))])
        for name, points in sets.items():
            try:
                summary['anisotropy_' + name] = metrics.anisotropy(points)
                projection = metrics.pca_2d(points)
                io_nb.write_columns(
                    os.path.join(folder, 'pca_%s.csv' % name), ['key', 'x', 'y'],
                    [[key, float(x), float(y)]
                     for key, (x, y) in zip(keys, projection)])
            except io_nb.ArgumentError as error:
                errors['projection_' + name] = error.message
            if None not in labels and len(set(labels)) >= 2:
                summary['label_silhouette_' + name] = metrics.silhouette(
                    points, labels)
        summary['errors'] = dict(errors)
        summary['config'] = config.echo()
        summary['timings'] = dict(stopwatch.timings)
        io_nb.write_structured(os.path.join(folder, 'embed.report'), 'report',
                               list(summary.items()),
                               header='-----NetBurst %s-----' % version)
        summaries[seed] = summary
    stopwatch.write(config.out)
    return summaries


def corpus_statistics(name, members, config, report):
    """Fano factor, idle fraction and ACF of every entity of a corpus"""
    curves = []
    for member in members:
        key = '%s/%s' % (name, member.key)
        values, failures = OrderedDict(), []
        measure(values, failures, 'fano', metrics.fano, member.series)
        measure(values, failures, 'idle_fraction', metrics.idle_fraction,
                member.series, config.t_act)
        lag = min(int(config.max_lag), len(member.series) - 1)
        try:
            curves.append((member.key, metrics.acf(member.series, lag)))
        except (io_nb.MetricError, io_nb.ArgumentError) as error:
            failures.append(('acf', error))
        record(report, [(key, values, 0, failures)])
    return curves


def _mean_curve(curves):
    """Mean of curves of possibly different lengths, lag by lag"""
    longest = max(len(curve) for _, curve in curves)
    lags, means = [], []
    for lag in range(longest):
        column = [curve[lag] for _, curve in curves if len(curve) > lag]
        lags.append(lag)
        means.append(float(np.mean(column)))
    return lags, means


def cmd_stats(config, command_line, version):
    """
    Burstiness statistics

    Fano factors, idle fractions and autocorrelations of the dataset (the
    bursty corpus) and of `data.seasonal` when set; CCDFs of the Fano factors,
    mean ACFs, the ACF of the first bursty entity and the Fano factor of the
    bursty entities after re-windowing and thresholding (`fano_grid.csv`).
    """
    stopwatch = Stopwatch()
    with stopwatch.stage('load'):
        corpora = OrderedDict([('bursty', load_dataset(config))])
        if config.seasonal is not None:
            corpora['seasonal'] = corpus_members(config.seasonal)[0]
    report = metrics.MetricsReport(config.echo())
    for name, members in corpora.items():
        with stopwatch.stage('stats_' + name):
            curves = corpus_statistics(name, members, config, report)
            fanos = [values['fano'] for key, values in report.per_entity.items()
                     if key.startswith(name + '/') and
                     values.get('fano') is not None]
            if fanos:
                io_nb.write_curve(
                    os.path.join(config.out, 'fano_ccdf_%s.csv' % name),
                    *metrics.ccdf(fanos))
            if curves:
                io_nb.write_curve(
                    os.path.join(config.out, 'acf_mean_%s.csv' % name),
                    *_mean_curve(curves))
                if name == 'bursty':
                    io_nb.write_curve(
                        os.path.join(config.out, 'acf_entity.csv'),
                        range(len(curves[0][1])), curves[0][1])

    with stopwatch.stage('fano_grid'):
        rows = []
        for factor, threshold in itertools.product(config.fano_windows,
                                                   config.fano_thresholds):
            fanos = []
            for member in corpora['bursty']:
                try:
                    fanos.append(metrics.fano(threshold_series(
                        rebin(member.series, int(factor)), threshold)))
                except io_nb.MetricError:
                    continue
            rows.append([int(factor), float(threshold),
                         float(np.mean(fanos)) if fanos else None,
                         float(np.percentile(fanos, 95)) if fanos else None,
                         len(fanos)])
        io_nb.write_columns(os.path.join(config.out, 'fano_grid.csv'),
                            ['window_factor', 'threshold', 'mean', 'p95',
                             'count'], rows)
    report.write(config.out, 'stats', version, stopwatch.timings)
    io_nb.progress(command_line, "%d entities described" % len(
        report.per_entity))
    stopwatch.write(config.out)
    return report


COMMANDS = OrderedDict([
    ('ingest', cmd_ingest),
    ('synth', cmd_synth),
    ('eventize', cmd_eventize),
    ('fit-codebook', cmd_fit_codebook),
    ('train', cmd_train),
    ('forecast', cmd_forecast),
    ('evaluate', cmd_pipeline),
    ('ablate', cmd_ablate),
    ('transfer', cmd_transfer),
    ('embed', cmd_embed),
    ('stats', cmd_stats),
])
