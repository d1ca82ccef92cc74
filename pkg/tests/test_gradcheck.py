"""
Unit Tests untuk Gradient Checker
"""

import unittest
import sys
import os

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.gradcheck import GradientChecker, GradCheckReport, two_pedestrian_scene
from src.predictor import ModelDims

SMALL = ModelDims(embedding_dim=4, hidden_dim=5, attention_hidden_dim=6,
                  attention_embedding_dim=3, attention_mlp_dim=4)


class TestScene(unittest.TestCase):
    """Test scene sintetis"""

    def test_shape(self):
        """Dua pejalan kaki, 20 frame, frame_step 10"""
        sample = two_pedestrian_scene()
        self.assertEqual(sample.positions.shape, (2, 20, 2))
        self.assertEqual(sample.frame_step, 10)
        self.assertAlmostEqual(sample.time_step(1), 0.4)


class TestGradientChecker(unittest.TestCase):
    """Test semua pengecekan gradient"""

    @classmethod
    def setUpClass(cls):
        cls.report = GradCheckReport(GradientChecker(dims=SMALL, max_entries=3))
        cls.result = cls.report.run()

    def test_all_pass(self):
        """Semua komponen lolos toleransi 1e-4"""
        failed = [(r.component, r.parameter, r.worst_error) for r in self.result["results"]
                  if r.worst_error >= 1e-4]
        self.assertEqual(failed, [])
        self.assertTrue(self.result["passed"])

    def test_components(self):
        """Kernel, modul, dan model lengkap dicek"""
        components = self.result["components"]
        for name in ("linear_relu", "softmax", "lstm", "nll", "social_pooling", "attention",
                     "model[attention/scores]", "model[attention/crowd]", "model[social/scores]"):
            self.assertIn(name, components)

    def test_social_mode_skips_attention_parameters(self):
        """Mode social tidak mengecek parameter attention"""
        social = [r.parameter for r in self.result["results"] if r.component == "model[social/scores]"]
        self.assertTrue(social)
        self.assertFalse(any(p.startswith("attention.") for p in social))

    def test_summary_card(self):
        """Ringkasan PASS"""
        card = self.report.generate_summary_card()
        self.assertEqual(card["status"], "PASS")
        self.assertEqual(card["failed"], 0)
        self.assertEqual(card["checked"], len(self.report.to_frame()))

    def test_detailed_report(self):
        """Laporan teks memuat status dan komponen"""
        text = self.report.generate_detailed_report()
        self.assertIn("GRADIENT CHECK REPORT", text)
        self.assertIn("Status: PASS", text)
        self.assertIn("social_pooling", text)


if __name__ == '__main__':
    unittest.main()
