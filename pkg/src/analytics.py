"""
Analytics & Reporting untuk CrowdCast
Metrik ADE/FDE, agregasi per dataset, tabel perbandingan mode attention vs social
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional

import numpy as np
import pandas as pd

from src.data_processor import SequenceSample
from src.utils import logger, DimensionError, EvaluationError, export_to_csv, export_to_excel

BASELINE_MODE = "social"
PROPOSED_MODE = "attention"
METRICS = ("ADE", "FDE")


# ==========================================
# DISPLACEMENT ERRORS
# ==========================================
def displacement_errors(predicted: np.ndarray, ground_truth: np.ndarray) -> np.ndarray:
    """
    Jarak Euclidean per frame

    Args:
        predicted: Posisi prediksi (..., T, 2)
        ground_truth: Posisi aktual (..., T, 2)

    Returns:
        Array jarak (..., T)
    """
    predicted = np.asarray(predicted, dtype=np.float64)
    ground_truth = np.asarray(ground_truth, dtype=np.float64)
    if predicted.shape != ground_truth.shape:
        raise DimensionError(f"prediction shape {predicted.shape} != ground truth shape {ground_truth.shape}")
    if predicted.ndim < 2 or predicted.shape[-1] != 2 or predicted.shape[-2] == 0:
        raise DimensionError(f"trajectories must be non-empty (..., T, 2), got {predicted.shape}")
    return np.linalg.norm(predicted - ground_truth, axis=-1)


def ade(predicted: np.ndarray, ground_truth: np.ndarray) -> float:
    """Average Displacement Error satu trajektori (T, 2)"""
    return float(displacement_errors(predicted, ground_truth).mean())


def fde(predicted: np.ndarray, ground_truth: np.ndarray) -> float:
    """Final Displacement Error satu trajektori (T, 2)"""
    return float(displacement_errors(predicted, ground_truth)[..., -1].mean())


def improvement_percent(base: float, ours: float) -> float:
    """
    Persentase perbaikan 100 * (base - ours) / base

    Menukar base dan ours hanya membalik tanda; besarnya ikut berubah karena
    penyebut selalu nilai baseline. improvement_percent(b, a) = -100 * (b - a) / b,
    bukan -improvement_percent(a, b) kecuali a = b.

    Args:
        base: Nilai baseline
        ours: Nilai pembanding

    Returns:
        Persentase (positif = ours lebih kecil)
    """
    if base == ours:
        return 0.0
    if base <= 0:
        raise EvaluationError(f"improvement undefined for baseline value {base}")
    return 100.0 * (base - ours) / base


# ==========================================
# PER-SAMPLE METRICS
# ==========================================
class MetricsCalculator:
    """
    Akumulator metrik per pejalan kaki untuk satu dataset dan satu mode
    """

    def __init__(self, dataset: str, mode: str):
        """
        Inisialisasi MetricsCalculator

        Args:
            dataset: Nama dataset
            mode: 'attention' atau 'social'
        """
        self.dataset = dataset
        self.mode = mode
        self.rows: List[Dict[str, Any]] = []
        self.prediction_rows: List[Dict[str, Any]] = []

    def add(self, sample: SequenceSample, predictions: np.ndarray) -> 'MetricsCalculator':
        """
        Tambahkan prediksi satu sample

        Args:
            sample: SequenceSample
            predictions: Posisi prediksi (P, pred_len, 2)

        Returns:
            Self untuk method chaining
        """
        future = sample.future
        errors = displacement_errors(predictions, future)
        future_frames = sample.frames[sample.obs_len:]
        for i, ped in enumerate(sample.ped_ids):
            self.rows.append({
                "dataset": sample.dataset, "sample_id": sample.sample_id, "ped_id": ped,
                "ade": float(errors[i].mean()), "fde": float(errors[i, -1]),
            })
            for k, frame in enumerate(future_frames):
                self.prediction_rows.append({
                    "dataset": sample.dataset, "sample_id": sample.sample_id, "ped_id": ped,
                    "frame": int(frame),
                    "pred_x": predictions[i, k, 0], "pred_y": predictions[i, k, 1],
                    "gt_x": future[i, k, 0], "gt_y": future[i, k, 1],
                })
        return self

    @property
    def count(self) -> int:
        return len(self.rows)

    def summary(self) -> Dict[str, float]:
        """
        ADE/FDE dataset: rata-rata atas semua pejalan kaki di semua sample

        Returns:
            Dictionary {'ADE', 'FDE', 'pedestrians'}
        """
        if not self.rows:
            raise EvaluationError(f"no predictions collected for {self.dataset} ({self.mode})")
        df = self.per_pedestrian()
        return {"ADE": float(df["ade"].mean()), "FDE": float(df["fde"].mean()), "pedestrians": len(df)}

    def per_pedestrian(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=["dataset", "sample_id", "ped_id", "ade", "fde"])

    def predictions(self) -> pd.DataFrame:
        return pd.DataFrame(self.prediction_rows, columns=[
            "dataset", "sample_id", "ped_id", "frame", "pred_x", "pred_y", "gt_x", "gt_y"
        ])


# ==========================================
# REPORT
# ==========================================
@dataclass
class MetricsReport:
    """ADE/FDE per (dataset, mode) beserta rata-rata dan perbaikan"""
    values: Dict[str, Dict[str, Dict[str, float]]] = field(default_factory=dict)

    def add(self, dataset: str, mode: str, ade_value: float, fde_value: float) -> 'MetricsReport':
        if ade_value < 0 or fde_value < 0:
            raise EvaluationError(f"negative metric for {dataset} ({mode})")
        self.values.setdefault(dataset, {})[mode] = {"ADE": float(ade_value), "FDE": float(fde_value)}
        return self

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> "MetricsReport":
        """Bangun dari metrics CSV (kolom dataset, mode, ADE, FDE)"""
        report = cls()
        for row in df.itertuples(index=False):
            report.add(str(row.dataset), str(row.mode), float(row.ADE), float(row.FDE))
        return report

    @property
    def datasets(self) -> List[str]:
        return list(self.values)

    def modes(self) -> List[str]:
        seen: List[str] = []
        for per_mode in self.values.values():
            seen.extend(m for m in per_mode if m not in seen)
        return seen

    def average(self, mode: str, metric: str) -> float:
        """Rata-rata metrik atas dataset yang punya nilai untuk mode tersebut"""
        values = [per_mode[mode][metric] for per_mode in self.values.values() if mode in per_mode]
        if not values:
            raise EvaluationError(f"no {metric} values for mode {mode!r}")
        return float(np.mean(values))

    def improvement(self, metric: str, base: str = BASELINE_MODE, ours: str = PROPOSED_MODE) -> float:
        """Perbaikan rata-rata metrik ours terhadap base (persen)"""
        return improvement_percent(self.average(base, metric), self.average(ours, metric))

    def to_frame(self) -> pd.DataFrame:
        """Format panjang: dataset, mode, ADE, FDE"""
        rows = [
            {"dataset": dataset, "mode": mode, "ADE": m["ADE"], "FDE": m["FDE"]}
            for dataset, per_mode in self.values.items() for mode, m in per_mode.items()
        ]
        return pd.DataFrame(rows, columns=["dataset", "mode", "ADE", "FDE"])

    def comparison_table(self, base: str = BASELINE_MODE, ours: str = PROPOSED_MODE) -> pd.DataFrame:
        """
        Tabel side-by-side: satu baris per (metric, dataset) plus baris Avg

        Returns:
            DataFrame kolom metric, dataset, <base>, <ours>, improvement_pct
        """
        rows = []
        for metric in METRICS:
            for dataset, per_mode in self.values.items():
                if base not in per_mode or ours not in per_mode:
                    raise EvaluationError(f"dataset {dataset} lacks results for both modes")
                b, o = per_mode[base][metric], per_mode[ours][metric]
                rows.append({"metric": metric, "dataset": dataset, base: b, ours: o,
                             "improvement_pct": improvement_percent(b, o)})
            rows.append({"metric": metric, "dataset": "Avg",
                         base: self.average(base, metric), ours: self.average(ours, metric),
                         "improvement_pct": self.improvement(metric, base, ours)})
        return pd.DataFrame(rows, columns=["metric", "dataset", base, ours, "improvement_pct"])


class ReportGenerator:
    """
    Generator laporan perbandingan (Markdown, CSV, Excel)
    """

    def __init__(self, report: MetricsReport, base: str = BASELINE_MODE, ours: str = PROPOSED_MODE):
        """
        Inisialisasi ReportGenerator

        Args:
            report: MetricsReport berisi kedua mode
            base: Mode baseline
            ours: Mode pembanding
        """
        self.report = report
        self.base = base
        self.ours = ours

    def generate_markdown_report(self, title: str = "CrowdCast Comparison",
                                 header: Optional[Mapping[str, Any]] = None) -> str:
        """
        Generate laporan dalam format Markdown

        Args:
            title: Judul laporan
            header: Metadata run (ditulis sebagai daftar)

        Returns:
            String Markdown
        """
        table = self.report.comparison_table(self.base, self.ours)
        md = f"# {title}\n\n"
        if header:
            md += "".join(f"- **{key}:** {value}\n" for key, value in header.items())
            md += "\n"
        for metric in METRICS:
            md += f"## {metric}\n\n"
            md += f"| Dataset | {self.base} | {self.ours} | Improvement |\n"
            md += "|---------|------|------|-------------|\n"
            for values in table[table["metric"] == metric].to_dict("records"):
                md += (f"| {values['dataset']} | {values[self.base]:.4f} | "
                       f"{values[self.ours]:.4f} | {values['improvement_pct']:+.1f}% |\n")
            md += "\n"
        return md

    def to_csv(self, path: str, header: Optional[Mapping[str, Any]] = None) -> str:
        return export_to_csv(self.report.comparison_table(self.base, self.ours), path, header)

    def to_excel(self, path: str, header: Optional[Mapping[str, Any]] = None) -> str:
        """Workbook dengan sheet Comparison dan Metrics"""
        sheets = {
            "Comparison": self.report.comparison_table(self.base, self.ours),
            "Metrics": self.report.to_frame(),
        }
        path = export_to_excel(sheets, path, header)
        logger.info(f"Comparison report written to {path}")
        return path
