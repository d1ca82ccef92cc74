"""
Data Processor untuk CrowdCast
Parse file anotasi ETH/UCY, turunkan kecepatan, bentuk window 8+12 frame,
dan bagi menjadi split train/validation/test
"""

import math
import re
from dataclasses import dataclass
from functools import reduce
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
import pandas as pd

from config.settings import DATASET_CONFIG
from src.utils import (
    logger, generate_hash, validate_file_extension, export_to_csv,
    CrowdcastError, ConfigError, ParseError
)

FIELDS = ("frame", "ped", "x", "y")
_SPLIT_RE = re.compile(r"[\s,]+")


# ==========================================
# DOMAIN TYPES
# ==========================================
@dataclass(frozen=True, order=True)
class TrackPoint:
    """Satu baris anotasi"""
    frame: int
    ped_id: int
    x: float
    y: float


@dataclass(frozen=True)
class Velocity:
    vx: float
    vy: float


@dataclass
class SequenceSample:
    """
    Window 20 frame untuk satu scene

    positions dan velocities berbentuk (P, T, 2), urutan pejalan kaki
    mengikuti ped_ids (naik)
    """
    dataset: str
    start_index: int
    frames: np.ndarray
    ped_ids: Tuple[int, ...]
    positions: np.ndarray
    velocities: np.ndarray
    frame_period: float
    frame_step: int = 1
    obs_len: int = 8
    pred_len: int = 12

    @property
    def sample_id(self) -> str:
        return f"{self.dataset}:{self.start_index}"

    @property
    def num_peds(self) -> int:
        return len(self.ped_ids)

    @property
    def seq_len(self) -> int:
        return self.obs_len + self.pred_len

    @property
    def observed(self) -> np.ndarray:
        return self.positions[:, :self.obs_len]

    @property
    def future(self) -> np.ndarray:
        return self.positions[:, self.obs_len:]

    def time_step(self, t: int) -> float:
        """Delta t (detik) antara frame t-1 dan t"""
        gap = int(self.frames[t]) - int(self.frames[t - 1])
        return gap / self.frame_step * self.frame_period

    def position(self, ped_id: int, t: int) -> np.ndarray:
        return self.positions[self.ped_ids.index(ped_id), t]


@dataclass
class DatasetSplits:
    train: List[SequenceSample]
    val: List[SequenceSample]
    test: List[SequenceSample]
    manifest: pd.DataFrame
    manifest_hash: str


# ==========================================
# PARSING
# ==========================================
def resolve_column_order(order: Union[str, Sequence[str], None]) -> Tuple[str, ...]:
    """
    Normalisasi konfigurasi urutan kolom

    Args:
        order: Nama preset ('default', 'swapped'), string 'frame,ped,x,y', atau tuple

    Returns:
        Tuple 4 nama kolom
    """
    if order is None:
        return tuple(DATASET_CONFIG["default_column_order"])
    if isinstance(order, str):
        presets = DATASET_CONFIG["column_presets"]
        if order in presets:
            return tuple(presets[order])
        order = [part.strip() for part in order.split(",")]
    order = tuple(order)
    if sorted(order) != sorted(FIELDS):
        raise ConfigError(f"column order must be a permutation of {FIELDS}, got {order}")
    return order


def parse_dataset(stream: Union[str, TextIO, Iterable[str]],
                  column_order: Union[str, Sequence[str], None] = None) -> List[TrackPoint]:
    """
    Parse teks anotasi menjadi TrackPoint terurut (frame, ped_id)

    Args:
        stream: Teks lengkap, file handle, atau iterable baris
        column_order: Urutan kolom 4 field pertama

    Returns:
        List TrackPoint
    """
    order = resolve_column_order(column_order)
    lines = stream.splitlines() if isinstance(stream, str) else stream

    points: List[TrackPoint] = []
    seen: Dict[Tuple[int, int], int] = {}
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        parts = [p for p in _SPLIT_RE.split(line) if p]
        if len(parts) < 4:
            raise ParseError(f"expected at least 4 fields, got {len(parts)}", line_no)
        try:
            values = dict(zip(order, (float(p) for p in parts[:4])))
        except ValueError:
            raise ParseError(f"non-numeric field in {line!r}", line_no) from None
        if not all(math.isfinite(v) for v in values.values()):
            raise ParseError(f"non-finite value in {line!r}", line_no)
        if not (values["frame"].is_integer() and values["ped"].is_integer()):
            raise ParseError(f"frame and ped id must be integers in {line!r}", line_no)

        point = TrackPoint(int(values["frame"]), int(values["ped"]), values["x"], values["y"])
        key = (point.frame, point.ped_id)
        if key in seen:
            raise ParseError(f"duplicate (frame, ped_id) {key}, first seen at line {seen[key]}", line_no)
        seen[key] = line_no
        points.append(point)

    if not points:
        raise ParseError("empty annotation file")

    points.sort(key=lambda p: (p.frame, p.ped_id))
    logger.info(f"Parsed {len(points)} track points ({len({p.ped_id for p in points})} pedestrians)")
    return points


def format_points(points: Sequence[TrackPoint],
                  column_order: Union[str, Sequence[str], None] = None) -> str:
    """
    Serialisasi TrackPoint ke format 4 kolom (lossless)

    Args:
        points: TrackPoint
        column_order: Urutan kolom output

    Returns:
        Teks dengan satu baris per point
    """
    order = resolve_column_order(column_order)
    lines = []
    for p in points:
        values = {"frame": str(p.frame), "ped": str(p.ped_id), "x": repr(p.x), "y": repr(p.y)}
        lines.append("\t".join(values[name] for name in order))
    return "\n".join(lines) + "\n"


def points_to_frame(points: Sequence[TrackPoint]) -> pd.DataFrame:
    return pd.DataFrame(
        [(p.frame, p.ped_id, p.x, p.y) for p in points],
        columns=["frame", "ped_id", "x", "y"]
    )


# ==========================================
# VELOCITY
# ==========================================
def compute_velocity(prev: TrackPoint, cur: TrackPoint, frame_period: float,
                     frame_step: int = 1) -> Velocity:
    """
    Kecepatan beda-hingga antara dua point berurutan satu track

    Args:
        prev: Point pada frame t-1
        cur: Point pada frame t
        frame_period: Detik per frame anotasi
        frame_step: Selisih frame id antar anotasi berurutan

    Returns:
        Velocity (unit per detik)
    """
    if prev.ped_id != cur.ped_id:
        raise CrowdcastError(f"velocity across different pedestrians ({prev.ped_id}, {cur.ped_id})")
    if frame_period <= 0 or frame_step <= 0:
        raise ConfigError(f"frame_period and frame_step must be positive ({frame_period}, {frame_step})")
    dt = (cur.frame - prev.frame) / frame_step * frame_period
    if dt <= 0:
        raise CrowdcastError(f"non-positive time step between frames {prev.frame} and {cur.frame}")
    return Velocity((cur.x - prev.x) / dt, (cur.y - prev.y) / dt)


def detect_frame_step(points: Sequence[TrackPoint]) -> int:
    """gcd selisih frame id positif antar frame anotasi (1 bila hanya satu frame)"""
    frames = sorted({p.frame for p in points})
    gaps = [b - a for a, b in zip(frames, frames[1:])]
    return reduce(math.gcd, gaps, 0) or 1


def track_velocities(points: Sequence[TrackPoint], frame_period: float,
                     frame_step: int = 1) -> pd.DataFrame:
    """
    Kecepatan per point untuk semua track; point pertama track bernilai (0, 0)

    Args:
        points: TrackPoint
        frame_period: Detik per frame anotasi
        frame_step: Selisih frame id antar anotasi

    Returns:
        DataFrame kolom frame, ped_id, x, y, vx, vy terurut (frame, ped_id)
    """
    if frame_period <= 0 or frame_step <= 0:
        raise ConfigError(f"frame_period and frame_step must be positive ({frame_period}, {frame_step})")

    df = points_to_frame(points).sort_values(["ped_id", "frame"], kind="stable")
    grouped = df.groupby("ped_id", sort=False)
    dt = grouped["frame"].diff() / frame_step * frame_period
    df["vx"] = (grouped["x"].diff() / dt).fillna(0.0)
    df["vy"] = (grouped["y"].diff() / dt).fillna(0.0)
    return df.sort_values(["frame", "ped_id"], kind="stable").reset_index(drop=True)


# ==========================================
# WINDOWING
# ==========================================
def build_sequences(points: Union[Sequence[TrackPoint], pd.DataFrame], obs: int = 8, pred: int = 12,
                    stride: int = 10, frame_period: float = 0.4, frame_step: int = 1,
                    dataset: str = "") -> List[SequenceSample]:
    """
    Bentuk window obs+pred frame anotasi berurutan

    Args:
        points: TrackPoint terurut atau DataFrame dari track_velocities
        obs: Panjang horizon observasi
        pred: Panjang horizon prediksi
        stride: Pergeseran awal window (dalam frame anotasi)
        frame_period: Detik per frame anotasi
        frame_step: Selisih frame id antar anotasi
        dataset: Nama dataset untuk id sample

    Returns:
        List SequenceSample (window tanpa pejalan kaki lengkap dibuang)
    """
    if obs < 1 or pred < 1 or stride < 1:
        raise ConfigError(f"obs, pred and stride must be positive ({obs}, {pred}, {stride})")

    df = points if isinstance(points, pd.DataFrame) else track_velocities(points, frame_period, frame_step)
    seq_len = obs + pred
    frames = np.sort(df["frame"].unique())
    by_frame = {frame: group for frame, group in df.groupby("frame", sort=True)}

    samples: List[SequenceSample] = []
    for start in range(0, len(frames) - seq_len + 1, stride):
        window = frames[start:start + seq_len]
        sub = pd.concat([by_frame[f] for f in window], ignore_index=True)
        counts = sub.groupby("ped_id").size()
        ped_ids = tuple(int(p) for p in sorted(counts[counts == seq_len].index))
        if not ped_ids:
            continue

        sub = sub[sub["ped_id"].isin(ped_ids)].sort_values(["ped_id", "frame"], kind="stable")
        positions = sub[["x", "y"]].to_numpy(dtype=np.float64).reshape(len(ped_ids), seq_len, 2)
        velocities = sub[["vx", "vy"]].to_numpy(dtype=np.float64).reshape(len(ped_ids), seq_len, 2)
        samples.append(SequenceSample(
            dataset=dataset,
            start_index=start,
            frames=window.astype(np.int64),
            ped_ids=ped_ids,
            positions=positions,
            velocities=velocities,
            frame_period=frame_period,
            frame_step=frame_step,
            obs_len=obs,
            pred_len=pred,
        ))

    logger.info(f"Built {len(samples)} sequence samples from {len(frames)} annotated frames")
    return samples


# ==========================================
# SPLITTING
# ==========================================
def split_dataset(samples: Sequence[SequenceSample], fractions: Sequence[float] = (0.8, 0.1, 0.1),
                  seed: int = 0) -> Tuple[List[SequenceSample], List[SequenceSample], List[SequenceSample]]:
    """
    Acak deterministik lalu bagi menjadi train/val/test

    Args:
        samples: Semua sample
        fractions: Fraksi (train, val, test), jumlah 1
        seed: Seed pengacakan

    Returns:
        Tuple (train, val, test)
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must be three non-negative numbers summing to 1, got {fractions}")
    if fractions[0] == 0:
        raise ConfigError("train fraction must be positive")

    n = len(samples)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(round(fractions[0] * n))
    n_val = min(int(round(fractions[1] * n)), n - n_train)

    shuffled = [samples[i] for i in order]
    train = shuffled[:n_train]
    val = shuffled[n_train:n_train + n_val]
    test = shuffled[n_train + n_val:]
    logger.info(f"Split {n} samples into train={len(train)}, val={len(val)}, test={len(test)}")
    return train, val, test


def split_manifest(train: Sequence[SequenceSample], val: Sequence[SequenceSample],
                   test: Sequence[SequenceSample]) -> pd.DataFrame:
    """Manifest window per split"""
    rows = []
    for split_name, split in (("train", train), ("val", val), ("test", test)):
        for s in split:
            rows.append({
                "split": split_name,
                "sample_id": s.sample_id,
                "dataset": s.dataset,
                "start_index": s.start_index,
                "start_frame": int(s.frames[0]),
                "n_peds": s.num_peds,
            })
    return pd.DataFrame(rows, columns=["split", "sample_id", "dataset", "start_index", "start_frame", "n_peds"])


def manifest_hash(manifest: pd.DataFrame) -> str:
    """Hash isi manifest untuk membandingkan split antar run"""
    return generate_hash(manifest.to_csv(index=False, lineterminator="\n"))


# ==========================================
# SYNTHETIC DATA
# ==========================================
def generate_synthetic_tracks(n_peds: int = 50, n_frames: int = 40, noise: float = 0.01,
                              seed: int = 0, speed_range: Tuple[float, float] = (0.5, 1.5),
                              spacing: float = 6.0, frame_period: float = 0.4,
                              frame_step: int = 10, lifetime: Optional[int] = None) -> List[TrackPoint]:
    """
    Track kecepatan konstan dengan noise Gaussian aditif

    Dengan lifetime, pejalan kaki masuk bergiliran: track ke-k mulai pada
    round(k * (n_frames - lifetime) / (n_peds - 1)) sehingga setiap frame
    tetap terisi dan setiap track menghasilkan banyak window penuh.

    Args:
        n_peds: Jumlah pejalan kaki
        n_frames: Jumlah frame anotasi
        noise: Standar deviasi noise posisi
        seed: Seed generator
        speed_range: Rentang kecepatan (unit/detik)
        spacing: Jarak rata-rata antar titik awal
        frame_period: Detik per frame anotasi
        frame_step: Selisih frame id antar anotasi
        lifetime: Panjang setiap track (frame); None = seluruh frame

    Returns:
        List TrackPoint terurut (frame, ped_id)
    """
    if n_peds < 1 or n_frames < 1:
        raise ConfigError(f"n_peds and n_frames must be positive ({n_peds}, {n_frames})")
    length = n_frames if lifetime is None else min(int(lifetime), n_frames)
    if length < 1:
        raise ConfigError(f"lifetime must be positive, got {lifetime}")
    gap = (n_frames - length) / max(n_peds - 1, 1)

    rng = np.random.default_rng(seed)
    side = spacing * math.ceil(math.sqrt(n_peds))
    points: List[TrackPoint] = []
    for ped in range(n_peds):
        start = rng.uniform(0.0, side, size=2)
        heading = rng.uniform(0.0, 2.0 * math.pi)
        speed = rng.uniform(*speed_range)
        velocity = speed * np.array([math.cos(heading), math.sin(heading)])
        first = int(round(ped * gap))

        for k in range(length):
            pos = start + velocity * (k * frame_period)
            if noise > 0:
                pos = pos + rng.normal(0.0, noise, size=2)
            points.append(TrackPoint((first + k) * frame_step, ped + 1, float(pos[0]), float(pos[1])))

    points.sort(key=lambda p: (p.frame, p.ped_id))
    return points


# ==========================================
# PIPELINE
# ==========================================
class DatasetProcessor:
    """
    Pipeline ingest dataset dengan method chaining
    """

    def __init__(self, dataset: str = "SYNTHETIC", frame_period: float = DATASET_CONFIG["frame_period"],
                 frame_step: int = DATASET_CONFIG["frame_step"], obs_len: int = DATASET_CONFIG["obs_len"],
                 pred_len: int = DATASET_CONFIG["pred_len"], stride: int = DATASET_CONFIG["stride"],
                 column_order: Union[str, Sequence[str], None] = None):
        """
        Inisialisasi DatasetProcessor

        Args:
            dataset: Nama dataset / preset
            frame_period: Detik per frame anotasi
            frame_step: Selisih frame id antar anotasi (0 = deteksi otomatis)
            obs_len: Panjang horizon observasi
            pred_len: Panjang horizon prediksi
            stride: Pergeseran window
            column_order: Urutan kolom file anotasi
        """
        if frame_period <= 0:
            raise ConfigError(f"frame_period must be positive, got {frame_period}")
        if frame_step < 0:
            raise ConfigError(f"frame_step must be >= 0, got {frame_step}")
        self.dataset = dataset.upper()
        self.frame_period = frame_period
        self.frame_step = frame_step
        self.obs_len = obs_len
        self.pred_len = pred_len
        self.stride = stride
        self.column_order = resolve_column_order(column_order)
        self.points: Optional[List[TrackPoint]] = None
        self.df_tracks: Optional[pd.DataFrame] = None
        self.samples: Optional[List[SequenceSample]] = None
        self.splits: Optional[DatasetSplits] = None
        self.stats: Dict[str, object] = {}

        logger.info(f"DatasetProcessor initialized for dataset: {self.dataset}")

    def load_text(self, text: Union[str, TextIO]) -> 'DatasetProcessor':
        """Parse teks anotasi"""
        return self.load_points(parse_dataset(text, self.column_order))

    def load_file(self, path: str) -> 'DatasetProcessor':
        """
        Parse file anotasi

        Args:
            path: Path file .txt/.csv/.tsv

        Returns:
            Self untuk method chaining
        """
        if not validate_file_extension(path):
            raise ConfigError(f"unsupported annotation file extension: {path}")
        with open(path, "r", encoding="utf-8") as handle:
            points = parse_dataset(handle, self.column_order)
        self.stats['source'] = path
        return self.load_points(points)

    def load_points(self, points: Sequence[TrackPoint]) -> 'DatasetProcessor':
        """Pakai TrackPoint yang sudah ada"""
        self.points = sorted(points, key=lambda p: (p.frame, p.ped_id))
        self.stats['points'] = len(self.points)
        self.stats['pedestrians'] = len({p.ped_id for p in self.points})
        self.stats['frames'] = len({p.frame for p in self.points})
        return self

    def compute_velocities(self) -> 'DatasetProcessor':
        """Turunkan kecepatan per track"""
        if self.points is None:
            raise CrowdcastError("Data belum di-load. Panggil load_file() terlebih dahulu.")
        if self.frame_step == 0:
            self.frame_step = detect_frame_step(self.points)
            logger.info(f"Detected frame step {self.frame_step}")
        self.df_tracks = track_velocities(self.points, self.frame_period, self.frame_step)
        self.stats['frame_step'] = self.frame_step
        return self

    def build_sequences(self) -> 'DatasetProcessor':
        """Bentuk window sequence"""
        if self.df_tracks is None:
            self.compute_velocities()
        self.samples = build_sequences(
            self.df_tracks, obs=self.obs_len, pred=self.pred_len, stride=self.stride,
            frame_period=self.frame_period, frame_step=self.frame_step, dataset=self.dataset
        )
        self.stats['samples'] = len(self.samples)
        return self

    def split(self, fractions: Sequence[float] = DATASET_CONFIG["split_fractions"],
              seed: int = 0) -> 'DatasetProcessor':
        """Bagi sample menjadi train/val/test"""
        if self.samples is None:
            self.build_sequences()
        train, val, test = split_dataset(self.samples, fractions, seed)
        manifest = split_manifest(train, val, test)
        self.splits = DatasetSplits(train, val, test, manifest, manifest_hash(manifest))
        self.stats.update({'train': len(train), 'val': len(val), 'test': len(test)})
        return self

    def write_normalized(self, path: str) -> str:
        """Tulis file intermediate 4 kolom (frame, ped, x, y)"""
        if self.points is None:
            raise CrowdcastError("Data belum di-load. Panggil load_file() terlebih dahulu.")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(format_points(self.points))
        logger.info(f"Wrote normalized annotations to {path}")
        return path

    def write_manifest(self, path: str, header: Optional[Dict[str, object]] = None) -> str:
        """Tulis manifest split"""
        if self.splits is None:
            raise CrowdcastError("Data belum di-split. Panggil split() terlebih dahulu.")
        return export_to_csv(self.splits.manifest, path, header)

    def get_splits(self) -> DatasetSplits:
        if self.splits is None:
            raise CrowdcastError("Data belum di-split. Panggil split() terlebih dahulu.")
        return self.splits

    def get_stats(self) -> Dict[str, object]:
        """
        Dapatkan statistik processing

        Returns:
            Dictionary statistik
        """
        return self.stats

    def process_all(self, points: Sequence[TrackPoint],
                    fractions: Sequence[float] = DATASET_CONFIG["split_fractions"],
                    seed: int = 0) -> DatasetSplits:
        """
        Jalankan semua proses dalam satu method

        Args:
            points: TrackPoint
            fractions: Fraksi split
            seed: Seed split

        Returns:
            DatasetSplits
        """
        return (self
                .load_points(points)
                .compute_velocities()
                .build_sequences()
                .split(fractions, seed)
                .get_splits())
