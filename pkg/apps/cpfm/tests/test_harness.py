import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase

from apps.cpfm.adaptation import CPFMModel
from apps.cpfm.datasets import read_dataset, write_dataset
from apps.cpfm.encoder import read_checkpoint, write_checkpoint
from apps.cpfm.exceptions import ConfigError, ContractError, DataError
from apps.cpfm.harness.config import load_run_config
from apps.cpfm.harness.cpfm import adapt, load_target_checkpoint, target_checkpoint
from apps.cpfm.harness.embeddings import dump_embeddings
from apps.cpfm.harness.evaluate import evaluate_checkpoint
from apps.cpfm.harness.metrics import confusion, macro_f1
from apps.cpfm.harness.report import RunReport
from apps.cpfm.harness.suite import SuiteCache, ablation_variants, run_scenario_suite
from apps.cpfm.harness.training import source_checkpoint, train_source
from apps.cpfm.models import Run
from apps.cpfm.teacher_service import LocalTeacher, SourcePredictor, serve
from apps.cpfm.tests.utils import TINY, tiny_domain, tiny_run

TINY_OPTIONS = dict(
    series_len=16, channels=2, patch_len=4, model_dim=8, heads=2, layers=1, prompt_len=2, classes=3,
    mask_ratio=0.25, epochs=2, source_epochs=2, batch_size=8, lr=1e-2, samples_per_class=6,
)


def tiny_teacher(name: str = 'd1', seed: int = 0) -> LocalTeacher:
    model = train_source(tiny_run(), tiny_domain(name), seed).model
    return LocalTeacher(SourcePredictor(model), name)


class RunConfigTests(SimpleTestCase):
    def write(self, tmp, text) -> Path:
        path = Path(tmp) / 'run.env'
        path.write_text(text)
        return path

    def test_defaults(self):
        config = load_run_config()
        self.assertEqual(config.gamma_ema, 0.7)
        self.assertEqual((config.epochs, config.batch_size, config.lr), (40, 32, 1e-3))
        self.assertEqual(config.seeds, (0, 1, 2))
        self.assertEqual(config.weights.gamma1, 0.1)
        self.assertEqual(config.encoder.model_dim, 64)

    def test_file_then_flag_precedence(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = self.write(tmp, 'epochs=5\ngamma_ema=0.5\nseeds=3,4\nnaive_avg=true\n')
            config = load_run_config(path, {'epochs': '7'})
        self.assertEqual(config.epochs, 7)
        self.assertEqual(config.gamma_ema, 0.5)
        self.assertEqual(config.seeds, (3, 4))
        self.assertTrue(config.flags.naive_avg)

    def test_unknown_key(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = self.write(tmp, 'epochz=5\n')
            with self.assertRaises(ConfigError):
                load_run_config(path)

    def test_invalid_value(self):
        with self.assertRaises(ConfigError):
            load_run_config(None, {'batch_size': '0'})

    def test_flat_form_survives_replace(self):
        config = tiny_run()
        self.assertEqual(config.replace(epochs=3).encoder, config.encoder)
        self.assertEqual(config.replace(no_prompt=True).flags.label, 'no_prompt')


class MetricsTests(SimpleTestCase):
    def test_perfect(self):
        self.assertEqual(macro_f1([0, 1, 2], [0, 1, 2], 3), 100.0)

    def test_hand_values(self):
        self.assertAlmostEqual(macro_f1([0, 1, 1, 1], [0, 0, 1, 1], 2), 73.3333, places=3)
        self.assertAlmostEqual(macro_f1([1, 1, 1, 1], [0, 0, 1, 1], 2), 33.3333, places=3)

    def test_matches_confusion_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            k = int(rng.integers(2, 7))
            n = int(rng.integers(1, 51))
            labels, preds = rng.integers(0, k, n), rng.integers(0, k, n)
            cm = confusion(preds, labels, k)
            scores = []
            for c in range(k):
                tp, fp, fn = cm[c, c], cm[:, c].sum() - cm[c, c], cm[c, :].sum() - cm[c, c]
                scores.append(0.0 if 2 * tp + fp + fn == 0 else 2 * tp / (2 * tp + fp + fn))
            self.assertAlmostEqual(macro_f1(preds, labels, k), 100 * np.mean(scores), places=9)
            order = rng.permutation(n)
            self.assertAlmostEqual(macro_f1(preds[order], labels[order], k), macro_f1(preds, labels, k), places=12)

    def test_empty(self):
        with self.assertRaises(ContractError):
            macro_f1([], [], 2)


class TrainingTests(SimpleTestCase):
    def test_fixed_seed_identical_checkpoint(self):
        data = tiny_domain('d1')
        a = source_checkpoint(train_source(tiny_run(), data, 3).model)
        b = source_checkpoint(train_source(tiny_run(), data, 3).model)
        for name in a.params:
            np.testing.assert_array_equal(a.params[name], b.params[name])

    def test_class_count_mismatch(self):
        data = tiny_domain('d1')
        with self.assertRaises(DataError):
            train_source(tiny_run(classes=4), data, 0)

    def test_unlabeled_data(self):
        with self.assertRaises(DataError):
            train_source(tiny_run(), tiny_domain('d1').unlabeled(), 0)


class AdaptTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.teachers = [tiny_teacher('d1'), tiny_teacher('d2')]
        cls.target = tiny_domain('d0').unlabeled()

    def test_only_adaptable_parameters_move(self):
        config = tiny_run(epochs=5)
        initial = CPFMModel.create(config.encoder, 1, config.foundation_seed, 0)
        result = adapt(config, self.target, self.teachers[:1], 0)
        for name, t in result.model.frozen_parameters().items():
            np.testing.assert_array_equal(t.values, initial.frozen_parameters()[name].values)
        for prefix in ('teacher.0.branch1.prompt', 'teacher.0.branch2.head.weight', 'recon_head.weight', 'autoencoder.w2'):
            self.assertFalse(
                np.array_equal(result.model.trainable_parameters()[prefix].values,
                               initial.trainable_parameters()[prefix].values),
                prefix,
            )
        self.assertEqual(len(result.epochs), 5)
        for record in result.epochs:
            self.assertTrue(np.isfinite([record.ce, record.pr, record.ir]).all())
        for buffer in result.buffers:
            buffer.check_simplex()

    def test_naive_average_keeps_uniform_weights(self):
        result = adapt(tiny_run(naive_avg=True), self.target, self.teachers, 0)
        for record in result.epochs:
            self.assertEqual(record.lam, [0.5, 0.5])

    def test_deterministic(self):
        a = adapt(tiny_run(), self.target, self.teachers, 1)
        b = adapt(tiny_run(), self.target, self.teachers, 1)
        self.assertEqual([(r.ce, r.pr, r.ir, r.lam) for r in a.epochs], [(r.ce, r.pr, r.ir, r.lam) for r in b.epochs])

    def test_teacher_shape_mismatch(self):
        with self.assertRaises(ContractError):
            adapt(tiny_run(series_len=32), tiny_domain('d0').unlabeled(), self.teachers[:1], 0)

    def test_checkpoint_restores_predictions(self):
        result = adapt(tiny_run(epochs=1), self.target, self.teachers, 0)
        with tempfile.TemporaryDirectory() as tmp:
            path = write_checkpoint(Path(tmp) / 'target.ckpt', target_checkpoint(result))
            restored = load_target_checkpoint(path)
        np.testing.assert_array_equal(restored.model.predict_proba(self.target.x), result.model.predict_proba(self.target.x))
        np.testing.assert_array_equal(restored.buffers[1].values, result.buffers[1].values)
        np.testing.assert_array_equal(restored.model.teacher_weights, result.model.teacher_weights)

    def test_source_checkpoint_refused(self):
        model = train_source(tiny_run(source_epochs=1), tiny_domain('d1'), 0).model
        with tempfile.TemporaryDirectory() as tmp:
            path = write_checkpoint(Path(tmp) / 'source.ckpt', source_checkpoint(model))
            with self.assertRaises(ContractError):
                load_target_checkpoint(path)

    def test_warm_start(self):
        first = adapt(tiny_run(epochs=1), self.target, self.teachers, 0)
        second = adapt(tiny_run(epochs=1), self.target, self.teachers, 0, init=first)
        self.assertIs(second.model, first.model)

    def test_embedding_dump(self):
        result = adapt(tiny_run(epochs=1), self.target, self.teachers[:1], 0)
        labeled = tiny_domain('d0')
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'emb.csv'
            rows = dump_embeddings(result.model, labeled, 2, path)
            frame = pd.read_csv(path)
            other = dump_embeddings(result.model, labeled, 1, Path(tmp) / 'emb1.csv')
        self.assertEqual(rows.shape, (len(labeled), TINY.model_dim))
        self.assertEqual(list(frame.columns[:2]), ['sample_id', 'label'])
        self.assertEqual(len(frame), len(labeled))
        self.assertGreater(np.linalg.norm(rows - other, axis=1).mean(), 0.0)


class SuiteTests(TestCase):
    def test_rows_summary_and_persistence(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = tiny_run(seeds=(0, 1), output_dir=tmp)
            report = run_scenario_suite(config, targets=('d0', 'd1'), cache=SuiteCache())
            self.assertEqual(len(report.rows), 4)
            self.assertTrue((Path(tmp) / 'checkpoints' / 'source_d1_s0.ckpt').is_file())
            summary = report.summary_frame()
            self.assertEqual(summary['scenario'].tolist(), ['d1->d0', 'd2->d1', 'AVG'])
            self.assertTrue((summary['seeds'] == 2).all())
            self.assertIn('±', report.to_text())
            out = report.write(Path(tmp) / 'report')
            self.assertTrue((out / 'summary.csv').is_file())

        run = report.persist('suite', 'tiny', config.to_flat())
        self.assertEqual(run.results.count(), 4)
        self.assertEqual(run.epochs.count(), 4 * config.epochs)
        rebuilt = RunReport.from_run(run)
        self.assertEqual(rebuilt.to_text(), report.to_text())

    def test_identical_config_identical_numbers(self):
        def scores():
            with tempfile.TemporaryDirectory() as tmp:
                report = run_scenario_suite(tiny_run(output_dir=tmp), targets=('d2',), with_upper_bound=False)
            return [(r.source_only_mf1, r.cpfm_mf1) for r in report.rows]

        self.assertEqual(scores(), scores())

    def test_ablation_variants(self):
        self.assertEqual(list(ablation_variants()), ['full', 'no_prompt', 'no_input_recon', 'no_prompt_recon', 'naive_avg'])
        with tempfile.TemporaryDirectory() as tmp:
            config = tiny_run(output_dir=tmp, sources=2, epochs=1)
            report = run_scenario_suite(
                config, ablation_variants(['full', 'naive_avg']), targets=('d0',), with_upper_bound=False
            )
        self.assertEqual([r.variant for r in report.rows], ['full', 'naive_avg'])
        self.assertEqual(report.rows[0].sources, 'd1,d2')


class CommandTests(TestCase):
    def test_pipeline(self):
        with tempfile.TemporaryDirectory() as tmp:
            tmp = Path(tmp)
            out = StringIO()
            call_command('gen_data', 'd0', 'd1', out=str(tmp / 'data'), stdout=out, **TINY_OPTIONS)
            self.assertTrue((tmp / 'data' / 'd0_test.tsds').is_file())
            train = read_dataset(tmp / 'data' / 'd1_train.tsds')
            self.assertEqual(train.series_len, 16)

            call_command(
                'train_source', data=str(tmp / 'data' / 'd1_train.tsds'), out=str(tmp / 'd1.ckpt'),
                stdout=out, **TINY_OPTIONS,
            )
            self.assertEqual(read_checkpoint(tmp / 'd1.ckpt').kind, 'source')

            service = serve(SourcePredictor.from_checkpoint(tmp / 'd1.ckpt'), ('127.0.0.1', 0), background=True)
            try:
                call_command(
                    'adapt', data=str(tmp / 'data' / 'd0_train.tsds'), teacher=[service.address],
                    out=str(tmp / 'd0.ckpt'), stdout=out, **TINY_OPTIONS,
                )
            finally:
                service.stop()
            self.assertEqual(read_checkpoint(tmp / 'd0.ckpt').kind, 'target')
            self.assertEqual(Run.objects.filter(kind='adapt').count(), 1)

            call_command('eval', checkpoint=str(tmp / 'd0.ckpt'), data=str(tmp / 'data' / 'd0_test.tsds'), stdout=out)
            self.assertIn('MF1', out.getvalue())
            evaluation = evaluate_checkpoint(tmp / 'd0.ckpt', read_dataset(tmp / 'data' / 'd0_test.tsds'))
            self.assertEqual(Run.objects.get(kind='eval').results.get().cpfm_mf1, evaluation.mf1)

            call_command(
                'dump_embeddings', checkpoint=str(tmp / 'd0.ckpt'), data=str(tmp / 'data' / 'd0_test.tsds'),
                branch=2, out=str(tmp / 'emb.csv'), stdout=out,
            )
            self.assertTrue((tmp / 'emb.csv').is_file())

            report_out = StringIO()
            call_command('report', stdout=report_out)
            self.assertIn('source-only', report_out.getvalue())

    def test_init_only_dump_with_cloned_prompts(self):
        with tempfile.TemporaryDirectory() as tmp:
            tmp = Path(tmp)
            write_dataset(tiny_domain('d0'), tmp / 'd0.tsds')

            def dump(branch, **extra):
                out = tmp / f'emb{branch}.csv'
                call_command(
                    'dump_embeddings', init_only=True, data=str(tmp / 'd0.tsds'), branch=branch, out=str(out),
                    stdout=StringIO(), **TINY_OPTIONS, **extra,
                )
                return pd.read_csv(out)

            pd.testing.assert_frame_equal(dump(1, clone_prompt_init=True), dump(2, clone_prompt_init=True))
            self.assertFalse(dump(1).equals(dump(2)))

    def test_dump_needs_one_source(self):
        with self.assertRaises(CommandError):
            call_command('dump_embeddings', data='x.tsds', out='x.csv', stdout=StringIO())

    def test_cpfm_errors_become_command_errors(self):
        with tempfile.TemporaryDirectory() as tmp:
            missing = Path(tmp) / 'missing.env'
            with self.assertRaises(CommandError):
                call_command('gen_data', 'd0', config=str(missing), out=tmp)

    def test_report_without_runs(self):
        with self.assertRaises(CommandError):
            call_command('report')

