"""
Unit Tests untuk Trainer (prepare -> train -> evaluate -> compare)
"""

import unittest
import tempfile
import shutil
import numpy as np
import pandas as pd
import sys
import os

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.settings import DATASET_CONFIG
from src.attention import ScoreTable
from src.data_processor import format_points, generate_synthetic_tracks
from src.run_config import RunConfig
from src.trainer import Trainer, compare_runs
from src.utils import ConfigError, EvaluationError, export_to_csv, read_csv_with_header


def write_scene(directory, n_peds=8, n_frames=120, lifetime=60, seed=0):
    """Scene kecepatan konstan kecil (preset SYNTHETIC dalam skala mini) ke file anotasi"""
    points = generate_synthetic_tracks(n_peds=n_peds, n_frames=n_frames, seed=seed, lifetime=lifetime,
                                       speed_range=DATASET_CONFIG["synthetic"]["speed_range"])
    path = os.path.join(directory, f"scene_{n_peds}_{n_frames}.txt")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(format_points(points))
    return path


def small_config(out_dir, **overrides):
    values = dict(embedding_dim=4, hidden_dim=6, epochs=1, dropout=0.0, stride=10,
                  split_fractions=(0.6, 0.2, 0.2), batch_size=4, out_dir=out_dir)
    if "data_file" not in overrides:
        os.makedirs(out_dir, exist_ok=True)
        values["data_file"] = write_scene(out_dir)
    values.update(overrides)
    return RunConfig(**values)


def write_metrics(out_dir, dataset, mode, ade, fde, split_hash="abc"):
    df = pd.DataFrame([{"dataset": dataset, "mode": mode, "ADE": ade, "FDE": fde,
                        "pedestrians": 10, "samples": 2, "split_hash": split_hash}])
    export_to_csv(df, os.path.join(out_dir, dataset, mode, "metrics.csv"), {"seed": 0})


class TestTrainerPrepare(unittest.TestCase):
    """Test prepare dataset sintetis"""

    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def test_prepare_writes_outputs(self):
        """prepare menulis file ternormalisasi, manifest, dan dump local map"""
        trainer = Trainer(small_config(self.tmp))
        dump = os.path.join(self.tmp, "maps.csv")
        splits = trainer.prepare(dump_maps=dump, write_outputs=True)

        self.assertTrue(splits.train)
        data_dir = os.path.join(self.tmp, "SYNTHETIC", "data")
        self.assertTrue(os.path.exists(os.path.join(data_dir, "normalized.txt")))
        self.assertTrue(os.path.exists(os.path.join(data_dir, "split_manifest.csv")))

        df, header = read_csv_with_header(dump)
        self.assertEqual(header["split_hash"], splits.manifest_hash)
        self.assertEqual(header["resolved_frame_step"], "10")
        self.assertIn("occupancy", df.columns)

    def test_prepare_deterministic(self):
        """Seed sama -> hash split sama"""
        a = Trainer(small_config(self.tmp)).prepare()
        b = Trainer(small_config(self.tmp)).prepare()
        self.assertEqual(a.manifest_hash, b.manifest_hash)

    def test_missing_annotation_file(self):
        """File anotasi yang tidak ada ditolak"""
        trainer = Trainer(small_config(self.tmp, dataset="custom", data_file=os.path.join(self.tmp, "none.txt")))
        with self.assertRaises(ConfigError):
            trainer.prepare()


class TestTrainerRun(unittest.TestCase):
    """Test train dan evaluate"""

    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def test_zero_epochs_keeps_initial_checkpoint(self):
        """epochs=0 -> checkpoint parameter awal, kurva kosong"""
        result = Trainer(small_config(self.tmp, epochs=0, mode="social")).train()
        self.assertTrue(os.path.exists(result.checkpoint))
        self.assertEqual(result.best_epoch, 0)
        self.assertEqual(len(result.curve), 0)

    def test_train_is_deterministic(self):
        """Dua run dengan seed dan RunConfig sama -> kurva dan checkpoint identik byte per byte"""
        config = small_config(self.tmp, epochs=2, dropout=0.5)
        first = Trainer(config).train()
        with open(first.checkpoint, "rb") as handle:
            first_bytes = handle.read()

        second = Trainer(config).train()
        with open(second.checkpoint, "rb") as handle:
            second_bytes = handle.read()

        self.assertEqual(first.checkpoint, second.checkpoint)
        pd.testing.assert_frame_equal(first.curve, second.curve)
        self.assertEqual(first_bytes, second_bytes)
        self.assertEqual(list(first.curve["epoch"]), [1, 2])
        self.assertTrue(np.all(np.isfinite(first.curve["train_loss"])))
        self.assertIn(first.best_epoch, (1, 2))

    def test_evaluate_writes_metrics(self):
        """evaluate menulis metrics.csv dan predictions.csv"""
        trainer = Trainer(small_config(self.tmp, mode="social"))
        trainer.train()
        result = trainer.evaluate()

        self.assertGreaterEqual(result.summary["ADE"], 0.0)
        self.assertGreaterEqual(result.summary["FDE"], 0.0)
        self.assertEqual(result.summary["mode"], "social")

        df, header = read_csv_with_header(result.metrics_path)
        self.assertEqual(df.iloc[0]["split_hash"], trainer.splits.manifest_hash)
        self.assertEqual(header["mode"], "social")
        predictions, _ = read_csv_with_header(result.predictions_path)
        self.assertEqual(len(predictions), result.summary["pedestrians"] * 12)

    def test_evaluate_without_checkpoint(self):
        """Evaluasi tanpa checkpoint ditolak"""
        with self.assertRaises(EvaluationError):
            Trainer(small_config(self.tmp)).evaluate()

    def test_dump_scores_loadable(self):
        """File skor hasil dump bisa dipakai sebagai skor beku"""
        trainer = Trainer(small_config(self.tmp))
        path = trainer.dump_scores(os.path.join(self.tmp, "scores.csv"))
        table = ScoreTable.load(path)
        self.assertGreater(len(table), 0)


class TestSyntheticPreset(unittest.TestCase):
    """Test preset SYNTHETIC bawaan"""

    def test_preset_gives_many_full_windows(self):
        """Semua 50 pejalan kaki masuk window penuh dan split cukup besar untuk training"""
        with tempfile.TemporaryDirectory() as tmp:
            trainer = Trainer(RunConfig(out_dir=tmp))
            splits = trainer.prepare()

        samples = splits.train + splits.val + splits.test
        ped_ids = {pid for s in samples for pid in s.ped_ids}
        self.assertEqual(len(ped_ids), DATASET_CONFIG["synthetic"]["n_peds"])
        self.assertGreaterEqual(len(samples), 250)
        self.assertGreaterEqual(len(splits.train) // RunConfig().batch_size, 25)
        self.assertGreaterEqual(len(splits.val), 20)
        self.assertGreaterEqual(len(splits.test), 20)
        self.assertTrue(all(s.num_peds >= 1 for s in samples))


class TestLearnability(unittest.TestCase):
    """Sanity training: data kecepatan konstan, hyperparameter default, seed 0"""

    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.mkdtemp()
        data_file = write_scene(cls.tmp, n_peds=20, n_frames=800, lifetime=60)
        config = RunConfig(data_file=data_file, epochs=5, out_dir=cls.tmp)
        cls.trainer = Trainer(config)
        cls.result = cls.trainer.train()

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmp, ignore_errors=True)

    def test_defaults_used(self):
        """Run memakai lr, dropout, dan batch bawaan"""
        config = self.trainer.config
        self.assertEqual((config.learning_rate, config.dropout, config.batch_size), (0.003, 0.5, 8))
        self.assertGreaterEqual(len(self.trainer.splits.train) // config.batch_size, 6)

    def test_train_loss_decreases_each_epoch(self):
        """Rata-rata loss training per epoch turun monoton selama 5 epoch"""
        losses = self.result.curve["train_loss"].to_numpy()
        self.assertEqual(len(losses), 5)
        self.assertTrue(np.all(np.diff(losses) < 0), f"train loss not decreasing: {losses}")

    def test_validation_improves(self):
        """Loss dan ADE validasi epoch terakhir lebih baik dari epoch pertama"""
        curve = self.result.curve
        self.assertLess(curve["val_loss"].iloc[-1], curve["val_loss"].iloc[0])
        self.assertLess(curve["val_ade"].iloc[-1], curve["val_ade"].iloc[0])


class TestCompareRuns(unittest.TestCase):
    """Test perbandingan mode"""

    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def test_compare_writes_reports(self):
        """Laporan CSV, Excel, dan Markdown ditulis"""
        write_metrics(self.tmp, "ETH", "social", 2.0067, 3.4321)
        write_metrics(self.tmp, "ETH", "attention", 1.8822, 3.2277)
        report = compare_runs(self.tmp, ["eth"], header={"seed": 0})

        self.assertAlmostEqual(report.improvement("ADE"), 6.204, places=2)
        for ext in ("csv", "xlsx", "md"):
            self.assertTrue(os.path.exists(os.path.join(self.tmp, f"comparison.{ext}")))

    def test_split_mismatch(self):
        """Mode yang dievaluasi pada split berbeda ditolak"""
        write_metrics(self.tmp, "ETH", "social", 2.0, 3.0, split_hash="one")
        write_metrics(self.tmp, "ETH", "attention", 1.9, 2.9, split_hash="two")
        with self.assertRaises(EvaluationError):
            compare_runs(self.tmp, ["ETH"])

    def test_missing_metrics(self):
        """Metrics salah satu mode belum ada"""
        write_metrics(self.tmp, "ETH", "social", 2.0, 3.0)
        with self.assertRaises(EvaluationError):
            compare_runs(self.tmp, ["ETH"])


if __name__ == '__main__':
    unittest.main()
