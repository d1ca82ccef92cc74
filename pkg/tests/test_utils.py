"""
Unit Tests untuk Utils Module
"""

import unittest
import tempfile
import pandas as pd
import sys
import os

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.settings import APP_VERSION
from src.utils import (
    chunk_list, format_duration, validate_file_extension, generate_hash,
    parse_key_value_text, format_header_lines, export_to_csv, read_csv_with_header,
    export_to_excel, ConfigError, ParseError, CrowdcastError, TrainingDivergedError,
    NonFiniteError
)


class TestExceptions(unittest.TestCase):
    """Test hierarki exception"""

    def test_all_derive_from_value_error(self):
        """Semua error kontrak adalah ValueError"""
        self.assertTrue(issubclass(CrowdcastError, ValueError))
        self.assertTrue(issubclass(ConfigError, CrowdcastError))

    def test_parse_error_line_number(self):
        """ParseError menyebut nomor baris"""
        err = ParseError("bad token", line_no=7)
        self.assertEqual(err.line_no, 7)
        self.assertIn("line 7", str(err))

    def test_training_diverged_is_non_finite(self):
        """TrainingDivergedError membawa epoch dan step"""
        err = TrainingDivergedError(3, 5, float("nan"))
        self.assertIsInstance(err, NonFiniteError)
        self.assertEqual((err.epoch, err.step), (3, 5))
        self.assertIn("epoch 3", str(err))


class TestPerformanceUtils(unittest.TestCase):
    """Test performance utility functions"""

    def test_chunk_list(self):
        """Test chunking list"""
        lst = list(range(10))
        chunks = chunk_list(lst, 3)

        self.assertEqual(len(chunks), 4)
        self.assertEqual(chunks[0], [0, 1, 2])
        self.assertEqual(chunks[-1], [9])

    def test_chunk_list_invalid_size(self):
        """Ukuran chunk harus positif"""
        with self.assertRaises(ConfigError):
            chunk_list([1, 2], 0)

    def test_format_duration(self):
        """Test format durasi"""
        self.assertEqual(format_duration(5), "5.00 detik")
        self.assertEqual(format_duration(125), "2 menit 5 detik")
        self.assertEqual(format_duration(3 * 3600 + 120), "3 jam 2 menit")

    def test_generate_hash(self):
        """Hash deterministik"""
        self.assertEqual(generate_hash("abc"), generate_hash("abc"))
        self.assertNotEqual(generate_hash("abc"), generate_hash("abd"))
        self.assertEqual(len(generate_hash("abc")), 64)


class TestValidationUtils(unittest.TestCase):
    """Test validation utility functions"""

    def test_validate_file_extension(self):
        """Test file extension validation"""
        self.assertTrue(validate_file_extension('crowds_zara01.txt'))
        self.assertTrue(validate_file_extension('scores.csv'))
        self.assertFalse(validate_file_extension('model.bin'))
        self.assertTrue(validate_file_extension('model.bin', ['.bin']))


class TestKeyValueUtils(unittest.TestCase):
    """Test parser key=value"""

    def test_parse_with_comments(self):
        """Komentar dan baris kosong diabaikan"""
        text = "# run\n\nmode = social\nepochs=3  # short\n"
        entries = parse_key_value_text(text)
        self.assertEqual(entries, [(3, "mode", "social"), (4, "epochs", "3")])

    def test_parse_missing_equals(self):
        """Baris tanpa '=' ditolak dengan nomor baris"""
        with self.assertRaises(ConfigError) as ctx:
            parse_key_value_text("mode=social\nbroken\n")
        self.assertIn("line 2", str(ctx.exception))

    def test_header_lines_start_with_version(self):
        """Header selalu diawali versi"""
        lines = format_header_lines({"seed": 0, "mode": "attention"})
        self.assertEqual(lines[0], f"# version={APP_VERSION}")
        self.assertEqual(lines[1:], ["# seed=0", "# mode=attention"])


class TestExportUtils(unittest.TestCase):
    """Test export CSV/Excel"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.df = pd.DataFrame({"dataset": ["ZARA1", "HOTEL"], "ADE": [1.2586, 0.5]})

    def tearDown(self):
        self.tmp.cleanup()

    def test_csv_header_round_trip(self):
        """Header audit dan data bisa dibaca ulang"""
        path = os.path.join(self.tmp.name, "sub", "metrics.csv")
        export_to_csv(self.df, path, {"seed": 4, "mode": "social"})

        df, header = read_csv_with_header(path)
        self.assertEqual(header["version"], APP_VERSION)
        self.assertEqual(header["seed"], "4")
        self.assertEqual(header["mode"], "social")
        self.assertEqual(list(df["dataset"]), ["ZARA1", "HOTEL"])
        self.assertAlmostEqual(df["ADE"].iloc[0], 1.2586)

    def test_csv_deterministic_bytes(self):
        """Dua export identik menghasilkan byte yang sama"""
        a = os.path.join(self.tmp.name, "a.csv")
        b = os.path.join(self.tmp.name, "b.csv")
        export_to_csv(self.df, a, {"seed": 0})
        export_to_csv(self.df, b, {"seed": 0})
        with open(a, "rb") as fa, open(b, "rb") as fb:
            self.assertEqual(fa.read(), fb.read())

    def test_excel_sheets(self):
        """Workbook berisi sheet data dan sheet Run"""
        path = os.path.join(self.tmp.name, "report.xlsx")
        export_to_excel({"Metrics": self.df}, path, {"seed": 0})

        sheets = pd.read_excel(path, sheet_name=None, engine="openpyxl")
        self.assertIn("Metrics", sheets)
        self.assertIn("Run", sheets)
        self.assertEqual(len(sheets["Metrics"]), 2)


if __name__ == '__main__':
    unittest.main()
