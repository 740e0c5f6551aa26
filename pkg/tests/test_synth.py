"""
.. module:: test_synth

Synthetic generators and corpora. To run it, do
~] pytest tests/test_synth.py
"""
import os
import shutil
import tempfile
import warnings

import numpy as np

warnings.filterwarnings('ignore')

# ---- local imports -----#
from netburst import io_nb
from netburst import metrics
from netburst import synth
from netburst.eventizer import eventize
from netburst.series import TimeSeries
from tests import TestNetBurst


class Test01Pareto(TestNetBurst):
    """
    Pareto draws by inversion
    """

    def test_inverse_cdf(self):
        """Does u = 0 give the scale, and the median its closed form?"""
        self.assertEqual(float(synth.pareto_inverse_cdf(0., 2., 3.)), 3.)
        self.assertAlmostEqual(float(synth.pareto_inverse_cdf(0.5, 1.5, 1.)),
                               2**(1/1.5), places=12)

    def test_moments(self):
        """Are the mean and the median of large samples as expected?"""
        self.assertTrue(1.98 <= synth.pareto_sample(2., 1., 0, 10**6).mean()
                        <= 2.02)
        median = np.median(synth.pareto_sample(1.5, 1., 1, 10**6))
        self.assertTrue(1.57 <= median <= 1.60)

    def test_bad_parameters(self):
        """Are non positive parameters refused?"""
        self.assertRaises(io_nb.ArgumentError, synth.pareto_sample, 0., 1., 0, 3)

    def test_mix_seed(self):
        """Is the seed mix deterministic, 64 bit and spread out?"""
        seeds = [synth.mix_seed(42, index) for index in range(1000)]
        self.assertEqual(seeds, [synth.mix_seed(42, index)
                                 for index in range(1000)])
        self.assertEqual(len(set(seeds)), 1000)
        self.assertTrue(all(0 <= seed < 2**64 for seed in seeds))
        self.assertNotEqual(synth.mix_seed(0, 0), synth.mix_seed(1, 0))


class Test02Generators(TestNetBurst):
    """
    Bursty, seasonal and pattern series
    """

    def test_planted_single_windows(self):
        """Are planted single-window bursts recovered exactly?"""
        config = synth.BurstyConfig(burst_len_p=1., n_events=300, seed=3)
        series, planted = synth.gen_bursty(config)
        self.assertEqual(eventize(series, 0.), planted)
        self.assertTrue(np.all(planted.spans[:, 0] == planted.spans[:, 1]))

    def test_planted_durations(self):
        """Are planted bursts of several windows recovered exactly?"""
        for seed in range(5):
            config = synth.BurstyConfig(burst_len_p=0.4, n_events=200,
                                        seed=seed)
            series, planted = synth.gen_bursty(config)
            self.assertEqual(eventize(series, 0.), planted)
            self.assertAlmostEqual(series.values.sum(), planted.bi.sum(),
                                   delta=1e-6*planted.bi.sum())

    def test_planted_under_noise(self):
        """Do bursts stand out of the sub-threshold chatter?"""
        config = synth.BurstyConfig(n_events=150, noise_rate=0.3,
                                    noise_max=50., seed=4)
        series, planted = synth.gen_bursty(config)
        self.assertEqual(eventize(series, 50.), planted)
        self.assertGreater(np.sum((series.values > 0) &
                                  (series.values < 50.)), 0)

    def test_single_event(self):
        """Does a single event give a single span?"""
        series, planted = synth.gen_bursty(synth.BurstyConfig(n_events=1))
        self.assertEqual(len(eventize(series, 0.)), 1)
        self.assertEqual(len(planted), 1)

    def test_fixed_length(self):
        """Does a fixed length keep only the bursts that fit?"""
        config = synth.BurstyConfig(n_events=500, length=300, seed=2)
        series, planted = synth.gen_bursty(config)
        self.assertEqual(len(series), 300)
        self.assertTrue(np.all(planted.spans[:, 1] < 300))
        self.assertEqual(eventize(series, 0.), planted)

    def test_deterministic(self):
        """Does a seed fix the series?"""
        config = synth.BurstyConfig(n_events=50, seed=9)
        first, _ = synth.gen_bursty(config)
        second, _ = synth.gen_bursty(config)
        third, _ = synth.gen_bursty(config.replace(seed=10))
        self.assertTrue(np.array_equal(first.values, second.values))
        self.assertFalse(len(first) == len(third) and
                         np.array_equal(first.values, third.values))

    def test_regimes(self):
        """Are bursty series far burstier than seasonal ones?"""
        for seed in range(3):
            series, _ = synth.gen_bursty(synth.BurstyConfig(
                alpha_bi=1.2, n_events=5000, seed=seed))
            self.assertGreater(metrics.fano(series), 100.)
            seasonal = synth.gen_seasonal(synth.SeasonalConfig(seed=seed))
            self.assertLess(metrics.fano(seasonal), 10.)

    def test_seasonal(self):
        """Is a noiseless seasonal series periodic?"""
        series = synth.gen_seasonal(synth.SeasonalConfig(noise_sd=0.))
        self.assertEqual(len(series), 5000)
        self.assertGreaterEqual(metrics.acf(series, 24)[24], 0.99)
        self.assertTrue(np.all(series.values >= 0))

    def test_pattern(self):
        """Does the pattern cycle through its gaps and intensities?"""
        series, events = synth.gen_pattern(synth.PatternConfig(n_events=6))
        self.assertEqual(events.ibg.tolist(), [5, 9, 5, 9, 5, 9])
        self.assertEqual(events.bi.tolist(), [10., 1000.]*3)
        self.assertEqual(eventize(series, 0.), events)
        self.assertRaises(io_nb.ConfigurationError, synth.PatternConfig,
                          gaps=(1, 3))

    def test_unknown_setting(self):
        """Is an unknown generator setting refused?"""
        self.assertRaises(io_nb.ConfigurationError, synth.BurstyConfig,
                          alpha=1.)
        self.assertRaises(io_nb.ConfigurationError, synth.BurstyConfig,
                          burst_len_p=0.)


class Test03Corpus(TestNetBurst):
    """
    Aggregation groups, corpora and manifests
    """

    def setUp(self):
        self.temp_folder_path = tempfile.mkdtemp(prefix='netburst_corpus_')

    def tearDown(self):
        shutil.rmtree(self.temp_folder_path)
        del self.temp_folder_path

    def test_aggregate_pair(self):
        """Are two series summed window by window?"""
        groups = synth.aggregate_groups(
            [TimeSeries([1, 2], 1.), TimeSeries([3, 4], 1.)], 2)
        self.assertEqual(len(groups), 1)
        self.assertEqual(groups[0].values.tolist(), [4., 6.])
        self.assertEqual(groups[0].key, 'g0000')

    def test_aggregate_identity(self):
        """Do groups of one give back the series, and conserve the bytes?"""
        series = [TimeSeries(np.random.default_rng(index).random(20), 1.)
                  for index in range(7)]
        groups = synth.aggregate_groups(series, 1, seed=5)
        self.assertEqual(sorted(tuple(group.values) for group in groups),
                         sorted(tuple(elem.values) for elem in series))
        groups = synth.aggregate_groups(series, 3, seed=5)
        self.assertEqual(len(groups), 3)
        self.assertAlmostEqual(sum(group.values.sum() for group in groups),
                               sum(elem.values.sum() for elem in series))

    def test_aggregate_errors(self):
        """Are empty lists accepted and unequal lengths refused?"""
        self.assertEqual(synth.aggregate_groups([], 4), [])
        self.assertRaises(io_nb.DataError, synth.aggregate_groups,
                          [TimeSeries([1], 1.), TimeSeries([1, 2], 1.)], 2)

    def test_corpus(self):
        """Do entities get their own seeds and alternate in mixed corpora?"""
        corpus = synth.generate_corpus('mixed', 4, seed=7, n_events=30)
        self.assertEqual([entity.key for entity in corpus],
                         ['e0000', 'e0001', 'e0002', 'e0003'])
        self.assertEqual([entity.label for entity in corpus],
                         ['sparse', 'dense', 'sparse', 'dense'])
        self.assertEqual(corpus[0].config.seed, synth.mix_seed(7, 0))
        self.assertRaises(io_nb.ConfigurationError, synth.generate_corpus,
                          'unknown', 2)

    def test_manifest(self):
        """Does a manifest regenerate its corpus exactly?"""
        corpus = synth.generate_corpus('mixed', 3, seed=1, n_events=40)
        path = os.path.join(self.temp_folder_path, 'corpus.manifest')
        synth.write_manifest(corpus, path, 'mixed', 1)
        copy = synth.regenerate(synth.read_manifest(path))
        for entity, other in zip(corpus, copy):
            self.assertEqual(entity.key, other.key)
            self.assertEqual(entity.config, other.config)
            self.assertTrue(np.array_equal(entity.series.values,
                                           other.series.values))


if __name__ == '__main__':
    import unittest
    unittest.main()
