"""
.. module:: test_token_model

Token models, the assembled forecaster and its baselines. The models trained
here are tiny, but each still takes a few seconds. To run it, do
~] pytest tests/test_token_model.py
"""
import os
import shutil
import tempfile
import warnings

import numpy as np
import torch

warnings.filterwarnings('ignore')

# ---- local imports -----#
from netburst import io_nb
from netburst import baselines
from netburst import forecaster
from netburst import metrics
from netburst import quantizer
from netburst import token_model
from netburst.eventizer import eventize
from netburst.series import TimeSeries
from netburst.synth import PatternConfig, gen_pattern
from tests import TestNetBurst

TINY = dict(context=16, layers=1, hidden=32, heads=2, learning_rate=1e-3,
            batch=16, max_steps=300, eval_every=50)
GREEDY = token_model.DecodeMode.greedy()


class Test01ModelConfig(TestNetBurst):
    """
    Validation of the model settings
    """

    def test_unknown_setting(self):
        """Is an unknown setting a configuration error?"""
        self.assertRaises(io_nb.ConfigurationError, token_model.ModelConfig,
                          dropout=0.1)

    def test_heads(self):
        """Must the hidden size be a multiple of the number of heads?"""
        self.assertRaises(io_nb.ConfigurationError, token_model.ModelConfig,
                          hidden=10, heads=4)
        self.assertRaises(io_nb.ConfigurationError, token_model.ModelConfig,
                          layers=0)

    def test_replace(self):
        """Does replace leave the original untouched?"""
        config = token_model.ModelConfig(vocab=8)
        other = config.replace(vocab=16)
        self.assertEqual((config.vocab, other.vocab), (8, 16))
        self.assertEqual(config, token_model.ModelConfig(vocab=8))


class Test02Network(TestNetBurst):
    """
    Gradients, padding, decoding and checkpoints of an untrained model
    """

    def setUp(self):
        self.config = token_model.ModelConfig(vocab=8, context=16, layers=1,
                                              hidden=16, heads=2)
        self.model = token_model.TokenModel(self.config)
        self.temp_folder_path = tempfile.mkdtemp(prefix='netburst_model_')

    def tearDown(self):
        shutil.rmtree(self.temp_folder_path)
        del self.model
        del self.config
        del self.temp_folder_path

    def test_gradients(self):
        """Do back-propagated gradients match finite differences?"""
        rng = np.random.default_rng(0)
        seq = rng.integers(0, 8, 17)
        indices = rng.choice(self.model.parameter_count(), 100, replace=False)
        self.assertLess(token_model.grad_check(self.config, seq, indices), 1e-4)

    def test_causality(self):
        """Do later tokens leave the earlier predictions unchanged?"""
        seq = np.array([1, 5, 2, 7, 3, 3, 0, 6, 4, 1, 2, 5])
        changed = seq.copy()
        changed[8:] = [7, 7, 0, 0]
        first = token_model.sequence_log_probs(self.model, seq)
        second = token_model.sequence_log_probs(self.model, changed)
        self.assertTrue(np.allclose(first[:8], second[:8], rtol=0., atol=1e-12))
        self.assertFalse(np.allclose(first[8:], second[8:]))
        self.assertTrue(np.allclose(
            np.exp(first[4]), token_model.next_token_dist(self.model, seq[:5]),
            rtol=0., atol=1e-12))

    def test_padding(self):
        """Does a left-padded context predict what the bare one does?"""
        pad = self.config.vocab
        bare = torch.tensor([[3, 1, 4, 1, 5]])
        padded = torch.tensor([[pad, pad, pad, 3, 1, 4, 1, 5]])
        with torch.no_grad():
            first = self.model.network(bare)[0, -1]
            second = self.model.network(padded)[0, -1]
        self.assertTrue(torch.allclose(first, second, atol=1e-10))

    def test_distribution(self):
        """Is the next-token distribution a probability vector?"""
        probabilities = token_model.next_token_dist(self.model, [1, 2, 3])
        self.assertEqual(probabilities.shape, (8,))
        self.assertAlmostEqual(probabilities.sum(), 1., places=12)
        self.assertTrue(np.all(probabilities > 0))

    def test_bad_contexts(self):
        """Are empty contexts and foreign tokens refused?"""
        self.assertRaises(io_nb.ArgumentError, token_model.generate,
                          self.model, [], 3)
        self.assertRaises(io_nb.ArgumentError, token_model.generate,
                          self.model, [1, 8], 3)
        self.assertRaises(io_nb.ArgumentError, token_model.embed,
                          self.model, [])
        self.assertRaises(io_nb.DataError, token_model.train,
                          self.config, [[1, 2, 9]])

    def test_long_context(self):
        """Are contexts longer than the model window truncated?"""
        tokens = token_model.generate(self.model, np.arange(100) % 8, 5)
        self.assertEqual(tokens.shape, (5,))
        self.assertEqual(len(token_model.generate(self.model, [1], 0)), 0)
        self.assertEqual(token_model.sequence_log_probs(
            self.model, np.arange(40) % 8).shape, (16, 8))

    def test_sampling_seed(self):
        """Does a decoding seed fix the sampled tokens?"""
        mode = token_model.DecodeMode.sample(temperature=1., seed=3)
        first = token_model.generate(self.model, [1, 2], 20, mode)
        second = token_model.generate(self.model, [1, 2], 20, mode)
        other = token_model.generate(self.model, [1, 2], 20, mode.reseed(4))
        self.assertTrue(np.array_equal(first, second))
        self.assertFalse(np.array_equal(first, other))
        self.assertRaises(io_nb.ArgumentError, token_model.DecodeMode.sample,
                          0.)

    def test_median_decoding(self):
        """Does median decoding pick the bin where half the mass is reached?"""
        probabilities = token_model.next_token_dist(self.model, [1, 2])
        expected = int(np.searchsorted(np.cumsum(probabilities), 0.5))
        tokens = token_model.generate(self.model, [1, 2], 3,
                                      token_model.DecodeMode.median())
        self.assertEqual(int(tokens[0]), expected)
        self.assertTrue(np.array_equal(tokens, token_model.generate(
            self.model, [1, 2], 3, token_model.DecodeMode.median())))
        self.assertRaises(io_nb.ConfigurationError, token_model.DecodeMode,
                          'mode')

    def test_embedding(self):
        """Is the embedding a deterministic vector of the hidden size?"""
        vector = token_model.embed(self.model, [1, 2, 3])
        self.assertEqual(vector.shape, (16,))
        self.assertTrue(np.array_equal(vector,
                                       token_model.embed(self.model, [1, 2, 3])))

    def test_embedding_tokens(self):
        """Do constant sequences of different tokens embed apart?"""
        zeros = token_model.embed(self.model, [0, 0, 0, 0])
        threes = token_model.embed(self.model, [3, 3, 3, 3])
        cosine = np.dot(zeros, threes)/(np.linalg.norm(zeros)*np.linalg.norm(
            threes))
        self.assertLess(cosine, 0.99)

    def test_embedding_chunks(self):
        """Is a long sequence embedded chunk by chunk, every position counted?"""
        seq = np.arange(40) % 8
        chunks = [token_model.embed(self.model, seq[begin:begin+16])
                  for begin in (0, 16, 32)]
        self.assertTrue(np.allclose(
            token_model.embed(self.model, seq),
            (16*chunks[0] + 16*chunks[1] + 8*chunks[2])/40., rtol=0.,
            atol=1e-12))

    def test_checkpoint(self):
        """Is a saved model restored bit for bit?"""
        path = os.path.join(self.temp_folder_path, 'model.ckpt')
        token_model.save_checkpoint(self.model, path)
        copy = token_model.load_checkpoint(path)
        self.assertEqual(copy.config, self.config)
        self.assertTrue(np.array_equal(copy.params, self.model.params))
        self.assertTrue(np.array_equal(
            token_model.next_token_dist(copy, [4, 5]),
            token_model.next_token_dist(self.model, [4, 5])))

    def test_truncated_checkpoint(self):
        """Is a checkpoint missing part of its payload refused?"""
        path = os.path.join(self.temp_folder_path, 'model.ckpt')
        token_model.save_checkpoint(self.model, path)
        with open(path, 'rb') as source:
            content = source.read()
        with open(path, 'wb') as out:
            out.write(content[:-8])
        self.assertRaises(io_nb.DataError, token_model.load_checkpoint, path)
        self.assertRaises(io_nb.ConfigurationError, token_model.load_checkpoint,
                          os.path.join(self.temp_folder_path, 'nope.ckpt'))


class Test03Training(TestNetBurst):
    """
    A model learns a deterministic cycle
    """

    def test_memorisation(self):
        """Does greedy decoding continue a learnt cycle?"""
        cycle = [0, 1, 2, 3]*50
        config = token_model.ModelConfig(vocab=4, **dict(TINY, context=8))
        model, report = token_model.train(config, [cycle], [cycle[:40]])
        self.assertTrue(model.trained)
        self.assertLessEqual(report.steps, config.max_steps)
        self.assertTrue(len(report.loss_curve) > 0)
        self.assertEqual(
            token_model.generate(model, [0, 1, 2, 3, 0, 1], 8, GREEDY).tolist(),
            [2, 3, 0, 1, 2, 3, 0, 1])
        self.assertGreater(token_model.next_token_dist(model, [1, 2])[3], 0.5)

    def test_deterministic(self):
        """Does a seed fix the trained parameters bit for bit?"""
        cycle = [0, 1, 2, 3]*30
        config = token_model.ModelConfig(vocab=4, **dict(TINY, max_steps=60))
        first, first_report = token_model.train(config, [cycle], [cycle[:40]])
        second, second_report = token_model.train(config, [cycle], [cycle[:40]])
        self.assertTrue(np.array_equal(first.params, second.params))
        self.assertEqual(first_report.loss_curve, second_report.loss_curve)

    def test_random_tokens(self):
        """Does the validation loss stay at log V on random tokens?"""
        rng = np.random.default_rng(1)
        config = token_model.ModelConfig(vocab=8, **dict(TINY, max_steps=200))
        _, report = token_model.train(config, [rng.integers(0, 8, 3000)],
                                      [rng.integers(0, 8, 1000)])
        self.assertLess(abs(report.best_val_loss - np.log(8)), 0.1)


class Test04Forecaster(TestNetBurst):
    """
    The event forecaster on a learnable pattern
    """

    @classmethod
    def setUpClass(cls):
        cls.series, cls.events = gen_pattern(PatternConfig(n_events=200))
        cls.train = cls.series.slice(0, 1000)
        cls.context = cls.series.slice(0, 1200)
        cls.truth = cls.series.slice(1200, 1230)
        config = token_model.ModelConfig(**TINY)
        cls.model = forecaster.fit(
            [cls.train], 0., (config, config.replace(seed=1)), bins=(8, 8),
            val_series=[cls.series.slice(1000, 1200)])

    def setUp(self):
        self.temp_folder_path = tempfile.mkdtemp(prefix='netburst_forecast_')

    def tearDown(self):
        shutil.rmtree(self.temp_folder_path)
        del self.temp_folder_path

    def test_codebooks(self):
        """Do the two levels of the pattern get a bin each?"""
        self.assertEqual(self.model.ibg_codebook.centroids.tolist(), [5., 9.])
        self.assertEqual(self.model.bi_codebook.centroids.tolist(),
                         [10., 1000.])
        self.assertEqual(self.model.ibg_model.config.vocab, 2)

    def test_pattern_forecast(self):
        """Is the pattern continued exactly?"""
        result = forecaster.forecast(self.model, self.context, 30, GREEDY)
        self.assertTrue(np.array_equal(result.series.values, self.truth.values))
        self.assertEqual(result.series.start, self.truth.start)
        self.assertEqual(metrics.mase_events(result.series, self.truth,
                                             self.train, 0.), 0.)

    def test_oracles(self):
        """Do true gaps and intensities rebuild the truth?"""
        truth_events = eventize(self.truth, 0.)
        for tokenized in (False, True):
            result = forecaster.forecast_oracle(
                self.model, self.context, 30, 'both', truth_events,
                tokenized=tokenized)
            self.assertTrue(np.array_equal(result.series.values,
                                           self.truth.values))
        result = forecaster.forecast_oracle(self.model, self.context, 30, 'BI',
                                            truth_events, GREEDY)
        self.assertEqual(len(result.events), len(truth_events))
        self.assertRaises(io_nb.ArgumentError, forecaster.forecast_oracle,
                          self.model, self.context, 30, 'gaps', truth_events)

    def test_event_cap(self):
        """Is the number of decoded events capped?"""
        result = forecaster.forecast(self.model, self.context, 100,
                                     max_events=2)
        self.assertLessEqual(np.sum(result.events.starts >= 0), 2)
        self.assertLessEqual(len(result.events), 4)
        self.assertEqual(forecaster.event_cap(
            eventize(TimeSeries([0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0,
                                 1], 1.), 0.), 30), 50)

    def test_no_context_burst(self):
        """Is an idle context a forecast error?"""
        self.assertRaises(io_nb.ForecastError, forecaster.forecast, self.model,
                          TimeSeries(np.zeros(50), 100.), 10)
        self.assertRaises(io_nb.ArgumentError, forecaster.forecast, self.model,
                          self.context, 0)

    def test_sampling_seed(self):
        """Are sampled forecasts fixed by their seed?"""
        mode = token_model.DecodeMode.sample(seed=12)
        first = forecaster.forecast(self.model, self.context, 50, mode)
        second = forecaster.forecast(self.model, self.context, 50, mode)
        self.assertTrue(np.array_equal(first.series.values,
                                       second.series.values))

    def test_default_decoding(self):
        """Is sampling at temperature 1 the default decoding?"""
        default = forecaster.forecast(self.model, self.context, 50)
        sampled = forecaster.forecast(self.model, self.context, 50,
                                      token_model.DecodeMode.sample(1., 0))
        self.assertTrue(np.array_equal(default.series.values,
                                       sampled.series.values))
        self.assertTrue(np.array_equal(default.events.ibg_tokens,
                                       sampled.events.ibg_tokens))

    def test_idle_context(self):
        """After a long idle stretch, are the true intensities still placed?"""
        idle = TimeSeries(np.concatenate([self.context.values, np.zeros(300)]),
                          self.context.window, self.context.start,
                          self.context.key)
        truth_events = eventize(self.series.slice(1200, 1260), 0.)
        count = int(np.sum(truth_events.starts < 60))
        result = forecaster.forecast_oracle(self.model, idle, 60, 'BI',
                                            truth_events, GREEDY)
        self.assertEqual(len(result.events), count)
        self.assertTrue(np.all(result.events.starts >= 0))
        self.assertEqual(result.events.bi.tolist(),
                         truth_events.bi[:count].tolist())
        placed = result.series.values[result.series.values > 0]
        self.assertGreater(len(placed), 0)
        self.assertTrue(set(placed.tolist()) <= {10., 1000.})
        plain = forecaster.forecast(self.model, idle, 60, GREEDY)
        self.assertTrue(np.any(plain.events.starts < 0))
        self.assertGreater(plain.series.values.sum(), 0.)

    def test_fit_deterministic(self):
        """Does refitting with the same seeds give the same forecaster?"""
        config = token_model.ModelConfig(**TINY)
        again = forecaster.fit(
            [self.train], 0., (config, config.replace(seed=1)), bins=(8, 8),
            val_series=[self.series.slice(1000, 1200)])
        for name in ('ibg_model', 'bi_model'):
            self.assertTrue(np.array_equal(getattr(again, name).params,
                                           getattr(self.model, name).params))
        mode = token_model.DecodeMode.sample(seed=4)
        self.assertTrue(np.array_equal(
            forecaster.forecast(again, self.context, 50, mode).series.values,
            forecaster.forecast(self.model, self.context, 50,
                                mode).series.values))

    def test_save_load(self):
        """Does a saved forecaster forecast the same?"""
        folder = os.path.join(self.temp_folder_path, 'model')
        forecaster.save_model(self.model, folder)
        copy = forecaster.load_model(folder)
        self.assertEqual(copy.ibg_codebook, self.model.ibg_codebook)
        self.assertTrue(np.array_equal(
            forecaster.forecast(copy, self.context, 30).series.values,
            forecaster.forecast(self.model, self.context, 30).series.values))

    def test_transfer(self):
        """Does a model transferred to scaled data forecast scaled values?"""
        scaled = forecaster.transfer(self.model,
                                     [self.train.derive(3*self.train.values)],
                                     0.)
        self.assertTrue(scaled.transferred)
        result = forecaster.forecast(
            scaled, self.context.derive(3*self.context.values), 30, GREEDY)
        self.assertTrue(np.array_equal(result.series.values,
                                       3*self.truth.values))

    def test_embedding(self):
        """Are series embedded, and idle ones refused?"""
        vector = forecaster.embed_series(self.model, self.context)
        self.assertEqual(vector.shape, (64,))
        self.assertRaises(io_nb.EmbeddingError, forecaster.embed_series,
                          self.model, TimeSeries(np.zeros(20), 100.))


class Test05Baselines(TestNetBurst):
    """
    Naive forecasts and the raw token forecaster
    """

    def test_naive(self):
        """Do the zero and persistence forecasts have the right values?"""
        context = TimeSeries([1., 0., 7.], 10., 0, 'a')
        self.assertEqual(baselines.zero_forecast(3).values.tolist(), [0.]*3)
        persistence = baselines.persistence_forecast(context, 2)
        self.assertEqual(persistence.values.tolist(), [7., 7.])
        self.assertEqual(persistence.start, context.time_of(3))
        self.assertRaises(io_nb.ArgumentError, baselines.persistence_forecast,
                          TimeSeries([], 10.), 2)

    def test_raw_forecaster(self):
        """Does the raw forecaster decode window values of its codebook?"""
        series, _ = gen_pattern(PatternConfig(n_events=60))
        train, context = series.slice(0, 300), series.slice(0, 350)
        raw = baselines.raw_fit([train], 'uniform', token_model.ModelConfig(
            **dict(TINY, max_steps=50)), bins=16)
        self.assertEqual(raw.codebook.bins, 16)
        result = baselines.raw_forecast(raw, context, 20)
        self.assertEqual(len(result), 20)
        self.assertTrue(set(result.values.tolist()) <=
                        set(raw.codebook.centroids.tolist()))
        self.assertEqual(baselines.raw_embed(raw, context).shape, (32,))
        self.assertRaises(io_nb.FitError, baselines.RawTokenForecaster,
                          raw.codebook, token_model.TokenModel(
                              token_model.ModelConfig(vocab=4)))

    def test_raw_periodic(self):
        """Is a periodic series continued exactly with either codebook?"""
        series = TimeSeries(np.tile([0., 300., 600., 1000.], 150), 100.)
        truth = series.slice(500, 540).values
        for scheme in ('uniform', 'quantile'):
            raw = baselines.raw_fit([series.slice(0, 400)], scheme,
                                    token_model.ModelConfig(**TINY), bins=8,
                                    val_series=[series.slice(400, 500)])
            result = baselines.raw_forecast(raw, series.slice(0, 500), 40,
                                            GREEDY)
            self.assertTrue(np.array_equal(
                result.values, quantizer.roundtrip(raw.codebook, truth)))

    def test_raw_spikes(self):
        """Do uniform bins lose the spike magnitude that quantile bins keep?"""
        series = TimeSeries(np.tile([10., 10., 1000.], 200), 100.)
        truth = series.slice(540, 570).values
        forecasts = {}
        for scheme in ('uniform', 'quantile'):
            raw = baselines.raw_fit(
                [series.slice(0, 450)], scheme,
                token_model.ModelConfig(**dict(TINY, max_steps=500)), bins=4,
                val_series=[series.slice(450, 540)])
            forecasts[scheme] = baselines.raw_forecast(
                raw, series.slice(0, 540), 30, GREEDY).values
        self.assertTrue(np.array_equal(forecasts['quantile'], truth))
        self.assertTrue(np.array_equal(forecasts['uniform'] > 500.,
                                       truth > 500.))
        self.assertFalse(np.any(forecasts['uniform'] == 1000.))


if __name__ == '__main__':
    import unittest
    unittest.main()
