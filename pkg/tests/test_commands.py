"""
Unit Tests untuk CLI (run.py + src/commands.py)
"""

import unittest
import tempfile
import shutil
import pandas as pd
import sys
import os

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from run import build_parser, main
from config.settings import GRADCHECK_CONFIG
from src.commands import build_checker, build_config
from src.utils import export_to_csv


class TestParser(unittest.TestCase):
    """Test parsing flag"""

    def setUp(self):
        self.parser = build_parser()

    def test_flags_map_to_config(self):
        """Flag CLI menimpa default RunConfig"""
        args = self.parser.parse_args(["train", "--dataset", "zara1", "--mode", "social", "--lr", "0.01",
                                       "--epochs", "3", "--out", "runs_test"])
        config = build_config(args)
        self.assertEqual(config.dataset, "ZARA1")
        self.assertEqual(config.mode, "social")
        self.assertEqual(config.learning_rate, 0.01)
        self.assertEqual(config.epochs, 3)
        self.assertEqual(config.out_dir, "runs_test")
        self.assertFalse(config.sample)

    def test_repeated_dataset_uses_last(self):
        """--dataset berulang; perintah satu dataset memakai yang terakhir"""
        args = self.parser.parse_args(["eval", "--dataset", "ETH", "--dataset", "HOTEL"])
        self.assertEqual(args.dataset, ["ETH", "HOTEL"])
        self.assertEqual(build_config(args).dataset, "HOTEL")

    def test_config_file_then_flags(self):
        """File --config dibaca lalu flag menang"""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "run.cfg")
            with open(path, "w", encoding="utf-8") as handle:
                handle.write("epochs=4\nseed=9\n")
            args = self.parser.parse_args(["train", "--config", path, "--epochs", "2"])
            config = build_config(args)
        self.assertEqual((config.epochs, config.seed), (2, 9))

    def test_invalid_mode_rejected(self):
        """Pilihan mode dibatasi argparse"""
        with self.assertRaises(SystemExit):
            self.parser.parse_args(["train", "--mode", "vanilla"])

    def test_gradcheck_default_samples_entries(self):
        """gradcheck tanpa flag entri memakai sampel dari settings, bukan semua entri"""
        checker = build_checker(self.parser.parse_args(["gradcheck"]))
        self.assertEqual(checker.max_entries, GRADCHECK_CONFIG["max_entries"])
        self.assertIsNotNone(checker.max_entries)

    def test_gradcheck_entry_flags(self):
        """--max-entries menimpa sampel, --all-entries mengecek semua entri"""
        self.assertEqual(build_checker(self.parser.parse_args(["gradcheck", "--max-entries", "3"])).max_entries, 3)
        self.assertIsNone(build_checker(self.parser.parse_args(["gradcheck", "--all-entries"])).max_entries)


class TestMain(unittest.TestCase):
    """Test dispatch dan exit code"""

    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def test_no_command(self):
        """Tanpa perintah -> help dan exit code 1"""
        self.assertEqual(main([]), 1)

    def test_compare_without_dataset(self):
        """compare tanpa --dataset gagal dengan exit code 1"""
        self.assertEqual(main(["compare", "-q", "--out", self.tmp]), 1)

    def test_invalid_config_value(self):
        """Nilai konfigurasi di luar rentang -> exit code 1"""
        self.assertEqual(main(["train", "-q", "--dropout", "1.5", "--out", self.tmp]), 1)

    def test_compare_success(self):
        """compare membaca metrics kedua mode"""
        for mode, ade, fde in (("social", 2.0067, 3.4321), ("attention", 1.8822, 3.2277)):
            df = pd.DataFrame([{"dataset": "ZARA1", "mode": mode, "ADE": ade, "FDE": fde,
                                "pedestrians": 5, "samples": 1, "split_hash": "h"}])
            export_to_csv(df, os.path.join(self.tmp, "ZARA1", mode, "metrics.csv"))
        self.assertEqual(main(["compare", "-q", "--dataset", "ZARA1", "--out", self.tmp]), 0)
        self.assertTrue(os.path.exists(os.path.join(self.tmp, "comparison.md")))


if __name__ == '__main__':
    unittest.main()
