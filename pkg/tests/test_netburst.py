"""
.. module:: test_netburst

Command line behaviour and tiny end-to-end runs. To run it, do
~] pytest tests/test_netburst.py

The experiment trends take minutes, and only run with
~] NETBURST_SLOW=1 pytest tests/test_netburst.py
"""
import os
import shutil
import tempfile
import unittest
import warnings

warnings.filterwarnings('ignore')

# ---- local imports -----#
from netburst import experiments
from netburst import io_nb
from netburst import metrics
from netburst import parser_nb
from netburst.config import ExperimentConfig
from netburst.initialise import initialise
from netburst.run import run
from tests import TestNetBurst

TINY_MODEL = {'context': 16, 'layers': 1, 'hidden': 16, 'heads': 2,
              'max_steps': 40, 'eval_every': 20, 'learning_rate': 1e-3}


def write_parameters(path, **fields):
    """Parameter file with tiny models, and the given fields"""
    values = dict(ibg_model=TINY_MODEL, bi_model=TINY_MODEL,
                  raw_model=TINY_MODEL, bins=[8, 8], raw_bins=8,
                  synth={'preset': 'pattern', 'entities': 2, 'seed': 0,
                         'n_events': 120})
    values.update(fields)
    io_nb.write_structured(path, 'data', values)
    return path


class Test01CommandLineInputBehaviour(TestNetBurst):
    """
    Testing basic reaction to user input
    """

    def setUp(self):
        """set up the data used in the tests"""
        self.temp_folder_path = tempfile.mkdtemp(prefix='netburst_cli_')

    def tearDown(self):
        shutil.rmtree(self.temp_folder_path)
        del self.temp_folder_path

    def test_no_command(self):
        """
        If you ask the code to run without a command, it should stop
        """
        self.assertRaises(io_nb.ConfigurationError, parser_nb.parse,
                          '--silent')

    def test_unknown_command(self):
        """Is an unknown command refused?"""
        self.assertRaises(io_nb.ConfigurationError, parser_nb.parse,
                          'frobnicate')

    def test_wrong_jobs(self):
        """Is a non positive number of workers refused?"""
        self.assertRaises(io_nb.ConfigurationError, parser_nb.parse,
                          '--jobs 0 stats')
        self.assertRaises(io_nb.ConfigurationError, parser_nb.parse,
                          '--seed -1 stats')

    def test_missing_parameter_file(self):
        """Does a missing parameter file stop the code?"""
        self.assertRaises(io_nb.ConfigurationError, parser_nb.parse,
                          '--config %s stats' % os.path.join(
                              self.temp_folder_path, 'nope.param'))

    def test_options(self):
        """Are the options read where they belong?"""
        command_line = parser_nb.parse(
            '--seed 3 --jobs 2 --out somewhere forecast --model trained')
        self.assertEqual(command_line.subparser_name, 'forecast')
        self.assertEqual((command_line.seed, command_line.jobs),
                         (3, 2))
        self.assertEqual(command_line.model, 'trained')
        self.assertEqual(command_line.out, 'somewhere')

    def test_unknown_parameter(self):
        """Is a misspelled parameter a configuration error?"""
        path = os.path.join(self.temp_folder_path, 'typo.param')
        with open(path, 'w') as param:
            param.write("data.tact = 3.\n")
        self.assertRaises(io_nb.ConfigurationError, ExperimentConfig.from_file,
                          path)
        with open(path, 'w') as param:
            param.write("data.t_act = -3.\n")
        self.assertRaises(io_nb.ConfigurationError, ExperimentConfig.from_file,
                          path)
        with open(path, 'w') as param:
            param.write("data.ibg_model = {'hidden': 10, 'heads': 4}\n")
        self.assertRaises(io_nb.ConfigurationError, ExperimentConfig.from_file,
                          path)

    def test_exit_codes(self):
        """Do errors reach the shell with their exit code?"""
        missing = write_parameters(
            os.path.join(self.temp_folder_path, 'missing.param'),
            trace=os.path.join(self.temp_folder_path, 'nope.csv'))
        self.assertEqual(run('--silent --config %s --out %s ingest' % (
            missing, os.path.join(self.temp_folder_path, 'a'))), 1)
        high = write_parameters(
            os.path.join(self.temp_folder_path, 'high.param'), t_act=1e9)
        self.assertEqual(run('--silent --config %s --out %s fit-codebook' % (
            high, os.path.join(self.temp_folder_path, 'b'))), 2)


class Test02Setup(TestNetBurst):
    """
    Testing the initialisation of a run
    """

    def setUp(self):
        """set up the data used in the tests"""
        self.temp_folder_path = tempfile.mkdtemp(prefix='netburst_setup_')
        self.param = write_parameters(
            os.path.join(self.temp_folder_path, 'run.param'), t_act=0.)
        self.out = os.path.join(self.temp_folder_path, 'out')
        self.config, self.command_line, self.version = initialise(
            '--silent --config %s --out %s --seed 5 stats' % (
                self.param, self.out))

    def tearDown(self):
        shutil.rmtree(self.temp_folder_path)
        del self.temp_folder_path
        del self.config
        del self.command_line
        del self.version

    def test_folder_creation(self):
        """Is the initialisation creating a folder?"""
        self.assertTrue(os.path.isdir(self.out))

    def test_log_param(self):
        """Is the log.param written, and a valid parameter file?"""
        log = os.path.join(self.out, 'log.param')
        self.assertTrue(os.path.exists(log))
        self.assertEqual(ExperimentConfig.from_file(log).as_dict(),
                         self.config.as_dict())

    def test_overrides(self):
        """Do the command line options override the parameter file?"""
        self.assertEqual(self.config.seeds, [5])
        self.assertEqual(self.config.out, self.out)
        self.assertEqual(self.config.bins, [8, 8])

    def test_decoding_default(self):
        """Is sampling at temperature 1 the default decoding?"""
        self.assertEqual(self.config.decode_mode, 'sample')
        mode = ExperimentConfig().decode(3)
        self.assertEqual((mode.kind, mode.temperature, mode.seed),
                         ('sample', 1., 3))
        mode = ExperimentConfig(decode_mode='median').decode(3)
        self.assertEqual(mode.kind, 'median')

    def test_version(self):
        """Is the version the one of the distribution?"""
        self.assertEqual(self.version, parser_nb.read_version())


class Test03Commands(TestNetBurst):
    """
    Tiny runs of every command
    """

    def setUp(self):
        self.temp_folder_path = tempfile.mkdtemp(prefix='netburst_runs_')

    def tearDown(self):
        shutil.rmtree(self.temp_folder_path)
        del self.temp_folder_path

    def path(self, *parts):
        return os.path.join(self.temp_folder_path, *parts)

    def command(self, name, options='', after='', **fields):
        param = write_parameters(self.path(name + '.param'), **fields)
        return run('--silent --config %s %s %s %s' % (param, options, name,
                                                       after))

    def read(self, *parts):
        with open(self.path(*parts), 'rb') as source:
            return source.read()

    def outputs(self, name):
        """
        Every file written under `name`, but `timings.param`

        The timing line of the reports is left out, and the output folder
        (recalled by the reports and the log.param) is masked.
        """
        folder = self.path(name)
        files = {}
        for root, _, names in os.walk(folder):
            for file_name in names:
                if file_name == 'timings.param':
                    continue
                path = os.path.join(root, file_name)
                with open(path, 'rb') as source:
                    content = source.read()
                if file_name.endswith(('.report', '.param')):
                    content = b'\n'.join(
                        line.replace(folder.encode(), b'<out>')
                        for line in content.split(b'\n')
                        if not line.startswith(b'report.timings'))
                files[os.path.relpath(path, folder)] = content
        return files

    def test_ingest(self):
        """Is a trace turned into one series per key?"""
        trace = self.path('trace.csv')
        with open(trace, 'w') as out:
            out.write('timestamp_ns,key,bytes\n0,a,5\n150000000,b,3\n'
                      '250000000,a,1\n')
        self.assertEqual(self.command('ingest', '--out %s' % self.path('ing'),
                                      trace=trace), 0)
        for key in ('a', 'b'):
            self.assertTrue(os.path.exists(self.path('ing', 'series',
                                                     key + '.csv')))

    def test_synth(self):
        """Does synth write the series, the events and a manifest?"""
        self.assertEqual(self.command('synth', '--out %s' % self.path('syn')), 0)
        self.assertTrue(os.path.exists(self.path('syn', 'series', 'e0001.csv')))
        self.assertTrue(os.path.exists(self.path('syn', 'events',
                                                 'e0001.events.csv')))
        self.assertTrue(os.path.exists(self.path('syn', 'corpus.manifest')))
        # the manifest is a dataset on its own
        self.assertEqual(self.command(
            'eventize', '--out %s' % self.path('eve'),
            manifest=self.path('syn', 'corpus.manifest')), 0)
        self.assertEqual(self.read('syn', 'events', 'e0001.events.csv'),
                         self.read('eve', 'events', 'e0001.events.csv'))

    def test_train_and_forecast(self):
        """Can a saved model forecast every entity?"""
        self.assertEqual(self.command('fit-codebook',
                                      '--out %s' % self.path('cb')), 0)
        for name in ('ibg', 'bi', 'raw'):
            self.assertTrue(os.path.exists(self.path('cb', 'codebooks',
                                                     name + '.codebook')))
        self.assertEqual(self.command('train', '--out %s' % self.path('tr')), 0)
        self.assertTrue(os.path.exists(self.path('tr', 'model', 'ibg.ckpt')))
        self.assertEqual(self.command(
            'forecast', '--out %s' % self.path('fc'),
            '--model %s' % self.path('tr', 'model')), 0)
        self.assertTrue(os.path.exists(self.path('fc', 'forecasts',
                                                 'e0000.csv')))

    def test_evaluate_reproducible(self):
        """Are reports identical across runs and numbers of workers?"""
        for name, options in (('first', ''), ('second', '--jobs 2')):
            self.assertEqual(self.command(
                'evaluate', '--out %s %s' % (self.path(name), options)), 0)
        first = self.outputs('first')
        self.assertEqual(first, self.outputs('second'))
        for name in ('evaluate.report', 'evaluate_entities.csv'):
            self.assertIn(os.path.join('seed_0', name), first)
        self.assertTrue(os.path.exists(self.path('first', 'timings.param')))
        self.assertTrue(os.path.exists(self.path('first',
                                                 'evaluate_seeds.csv')))
        # the report recalls the whole configuration, and the stage times
        report = metrics.read_report(self.path('first', 'seed_0',
                                               'evaluate.report'))
        self.assertEqual(report.config, ExperimentConfig.from_file(
            self.path('first', 'log.param')).as_dict())
        for stage in ('load', 'fit_seed0'):
            self.assertIn(stage, report.timings)

    def test_reruns_identical(self):
        """Do ingest, eventize and train write the same files twice?"""
        trace = self.path('trace.csv')
        with open(trace, 'w') as out:
            out.write('timestamp_ns,key,bytes\n0,a,5\n150000000,b,3\n'
                      '250000000,a,1\n')
        for name in ('first', 'second'):
            self.assertEqual(self.command(
                'ingest', '--out %s' % self.path(name, 'ing'), trace=trace), 0)
            self.assertEqual(self.command(
                'eventize', '--out %s' % self.path(name, 'eve')), 0)
            self.assertEqual(self.command(
                'train', '--out %s' % self.path(name, 'tr')), 0)
        for folder in ('ing', 'eve', 'tr'):
            first = self.outputs(os.path.join('first', folder))
            self.assertEqual(first, self.outputs(os.path.join('second', folder)))
        self.assertIn(os.path.join('model', 'ibg.ckpt'),
                      self.outputs(os.path.join('first', 'tr')))

    def test_ablate(self):
        """Are the five models of the ablation scored?"""
        self.assertEqual(self.command('ablate', '--out %s' % self.path('abl'),
                                      tokenized_oracle=True), 0)
        with open(self.path('abl', 'seed_0', 'ablation.csv')) as table:
            rows = table.read().strip().split('\n')
        self.assertEqual(rows[0], 'model,mase,wd')
        self.assertEqual([row.split(',')[0] for row in rows[1:]], [
            'raw_uniform', 'raw_quantile', 'netburst', 'oracle_ibg',
            'oracle_bi', 'oracle_ibg_tokenized', 'oracle_bi_tokenized'])
        self.assertTrue(os.path.exists(self.path('abl', 'seed_0',
                                                 'oracle_gain.csv')))

    def test_transfer(self):
        """Is the threshold sweep written, one row per threshold?"""
        self.assertEqual(self.command(
            'transfer', '--out %s' % self.path('tra'), t_act=50.,
            thresholds=[50., 1000.], group_size=2, histogram_bins=8,
            synth={'preset': 'sparse', 'entities': 4, 'seed': 0,
                   'length': 800, 'n_events': 400, 'noise_rate': 0.3,
                   'noise_max': 50.}), 0)
        with open(self.path('tra', 'seed_0', 'transfer.csv')) as table:
            rows = table.read().strip().split('\n')
        self.assertEqual(rows[0], 'threshold,jsd,mase,wd')
        self.assertEqual(len(rows), 3)

    def test_embed(self):
        """Are silhouette curves and projections written?"""
        self.assertEqual(self.command(
            'embed', '--out %s' % self.path('emb'), ks=[2, 3],
            synth={'preset': 'mixed', 'entities': 6, 'seed': 0,
                   'n_events': 80}), 0)
        for name in ('silhouette.csv', 'pca_netburst.csv', 'pca_comparator.csv',
                     'embed.report'):
            self.assertTrue(os.path.exists(self.path('emb', 'seed_0', name)))

    def test_stats(self):
        """Are the burstiness statistics of both regimes written?"""
        self.assertEqual(self.command(
            'stats', '--out %s' % self.path('sta'),
            synth={'preset': 'mixed', 'entities': 4, 'seed': 0,
                   'n_events': 200},
            seasonal={'preset': 'seasonal', 'entities': 2, 'length': 600}), 0)
        for name in ('fano_ccdf_bursty.csv', 'fano_ccdf_seasonal.csv',
                     'acf_mean_seasonal.csv', 'acf_entity.csv', 'fano_grid.csv',
                     'stats.report'):
            self.assertTrue(os.path.exists(self.path('sta', name)))

SLOW = unittest.skipUnless(os.environ.get('NETBURST_SLOW'),
                           'set NETBURST_SLOW=1 to run the experiment trends')

SMALL_MODEL = {'context': 64, 'layers': 1, 'hidden': 32, 'heads': 4,
               'max_steps': 300, 'eval_every': 50, 'learning_rate': 1e-3}


class Test04Trends(TestNetBurst):
    """
    Experiment trends, on small corpora and models (minutes per test)
    """

    def setUp(self):
        self.temp_folder_path = tempfile.mkdtemp(prefix='netburst_trends_')

    def tearDown(self):
        shutil.rmtree(self.temp_folder_path)
        del self.temp_folder_path

    def run_command(self, command, name, **fields):
        values = dict(ibg_model=SMALL_MODEL, bi_model=SMALL_MODEL,
                      raw_model=SMALL_MODEL, bins=[64, 64], raw_bins=64)
        values.update(fields)
        param = write_parameters(
            os.path.join(self.temp_folder_path, name + '.param'), **values)
        config, command_line, version = initialise(
            '--silent --config %s --out %s %s' % (
                param, os.path.join(self.temp_folder_path, name), name))
        return command(config, command_line, version)

    @SLOW
    def test_ablation_distances(self):
        """Does binning by events beat binning raw values on WD?"""
        reports = self.run_command(
            experiments.cmd_ablate, 'ablate', centroid='median',
            decode_mode='sample', horizon=3000, seeds=list(range(5)),
            synth={'preset': 'sparse', 'entities': 6, 'seed': 0,
                   'n_events': 300})
        ordered = 0
        for report in reports.values():
            wd = dict((name, report.aggregate[name + '_wd']) for name in
                      ('raw_uniform', 'raw_quantile', 'netburst'))
            if wd['raw_uniform'] >= wd['raw_quantile'] >= wd['netburst']:
                ordered += 1
        self.assertGreaterEqual(ordered, 4)

    @SLOW
    def test_oracle_errors(self):
        """Is NetBurst no better on MASE than its oracles?"""
        reports = self.run_command(
            experiments.cmd_ablate, 'ablate', centroid='median',
            decode_mode='median', horizon=200, seeds=list(range(5)),
            synth={'preset': 'sparse', 'entities': 6, 'seed': 0,
                   'n_events': 300})
        for oracle in ('oracle_ibg', 'oracle_bi'):
            kept = 0
            for report in reports.values():
                plain = report.aggregate.get('netburst_mase')
                informed = report.aggregate.get(oracle + '_mase')
                if plain is None or informed is None or informed <= plain:
                    kept += 1
            self.assertGreaterEqual(kept, 4, oracle)

    @SLOW
    def test_transfer_divergence(self):
        """Does the histogram divergence fall as the threshold rises?"""
        tables = self.run_command(
            experiments.cmd_transfer, 'transfer', t_act=50., group_size=16,
            thresholds=[100., 200., 300.], horizon=400, seeds=[0, 1],
            synth={'preset': 'sparse', 'entities': 32, 'seed': 0,
                   'length': 4000, 'n_events': 1000, 'noise_rate': 0.3,
                   'noise_max': 50.})
        for rows in tables.values():
            divergences = [row[1] for row in rows]
            for before, after in zip(divergences, divergences[1:]):
                self.assertLess(after, before)

    @SLOW
    def test_embedding_clusters(self):
        """Do event embeddings separate regimes better than raw ones?"""
        summaries = self.run_command(
            experiments.cmd_embed, 'embed', ks=[2], seeds=[0],
            synth={'preset': 'mixed', 'entities': 16, 'seed': 0,
                   'n_events': 200})
        netburst, comparator = summaries[0]['silhouette'][2]
        self.assertGreater(netburst, -1. if comparator is None else comparator)


if __name__ == '__main__':
    unittest.main()
