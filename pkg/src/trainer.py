"""
Trainer untuk CrowdCast
Orkestrasi prepare -> train -> evaluate -> compare beserta artefaknya
"""

import math
import os
import time
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from config.settings import APP_VERSION, DATASET_CONFIG, EXPORT_CONFIG
from src.analytics import BASELINE_MODE, PROPOSED_MODE, MetricsCalculator, MetricsReport, ReportGenerator
from src.attention import ScoreTable, scene_attention, scores_to_frame, write_scores
from src.data_processor import DatasetProcessor, DatasetSplits, SequenceSample, generate_synthetic_tracks
from src.local_map import AgentState, local_maps_frame
from src.predictor import AttentionSocialLSTM, init_params
from src.run_config import RunConfig
from src.tensor_kernels import rmsprop_step
from src.utils import (
    logger, chunk_list, export_to_csv, format_duration, read_csv_with_header,
    ConfigError, EvaluationError, NonFiniteError, TrainingDivergedError
)

CURVE_COLUMNS = ["epoch", "train_loss", "val_loss", "val_ade", "val_fde"]


@dataclass
class TrainResult:
    checkpoint: str
    curve: pd.DataFrame
    best_epoch: int


@dataclass
class EvalResult:
    summary: Dict[str, Any]
    calculator: MetricsCalculator
    metrics_path: str
    predictions_path: str


class Trainer:
    """
    Menjalankan satu RunConfig
    """

    def __init__(self, config: RunConfig):
        """
        Inisialisasi Trainer

        Args:
            config: RunConfig lengkap
        """
        self.config = config
        self.processor: Optional[DatasetProcessor] = None
        self.splits: Optional[DatasetSplits] = None
        self.scores: Optional[ScoreTable] = (
            ScoreTable.load(config.scores_file) if config.scores_file else None
        )

    # ------------------------------------------
    # Data
    # ------------------------------------------
    def prepare(self, dump_maps: Optional[str] = None, write_outputs: bool = False) -> DatasetSplits:
        """
        Load dataset, bentuk window, dan split

        Args:
            dump_maps: Path CSV dump local map per frame (opsional)
            write_outputs: Tulis file anotasi ternormalisasi dan manifest split

        Returns:
            DatasetSplits
        """
        if self.splits is not None and dump_maps is None and not write_outputs:
            return self.splits

        cfg = self.config
        processor = DatasetProcessor(
            dataset=cfg.dataset, frame_period=cfg.frame_period, frame_step=cfg.frame_step,
            obs_len=cfg.obs_len, pred_len=cfg.pred_len, stride=cfg.stride,
            column_order=cfg.resolved_column_order(),
        )
        path = cfg.data_path()
        if path is None:
            synthetic = DATASET_CONFIG["synthetic"]
            processor.load_points(generate_synthetic_tracks(
                n_peds=synthetic["n_peds"], n_frames=synthetic["n_frames"], noise=synthetic["noise"],
                seed=cfg.seed, speed_range=synthetic["speed_range"], spacing=synthetic["spacing"],
                frame_period=cfg.frame_period, frame_step=synthetic["frame_step"],
                lifetime=synthetic["lifetime"],
            ))
        else:
            if not os.path.exists(path):
                raise ConfigError(f"annotation file not found: {path}")
            processor.load_file(path)

        self.splits = processor.compute_velocities().build_sequences().split(cfg.split_fractions, cfg.seed).get_splits()
        self.processor = processor

        if write_outputs:
            data_dir = os.path.join(cfg.out_dir, cfg.dataset, "data")
            os.makedirs(data_dir, exist_ok=True)
            processor.write_normalized(os.path.join(data_dir, EXPORT_CONFIG["normalized_name"]))
            processor.write_manifest(os.path.join(data_dir, EXPORT_CONFIG["manifest_name"]), self.header())
        if dump_maps:
            export_to_csv(self._local_map_rows(), dump_maps, self.header())

        logger.info(f"Prepared {cfg.dataset}: {processor.get_stats()}")
        return self.splits

    def header(self, **extra: Any) -> Dict[str, Any]:
        """Header audit: RunConfig + hash split + metadata tambahan"""
        header: Dict[str, Any] = {"version": APP_VERSION}
        header.update(self.config.header())
        if self.splits is not None:
            header["split_hash"] = self.splits.manifest_hash
        if self.processor is not None:
            header["resolved_frame_step"] = self.processor.frame_step
        header.update(extra)
        return header

    def _frame_states(self):
        tracks = self.processor.df_tracks
        for frame, group in tracks.groupby("frame", sort=True):
            yield int(frame), [
                AgentState(int(r.ped_id), float(r.x), float(r.y), float(r.vx), float(r.vy))
                for r in group.itertuples(index=False)
            ]

    def _local_map_rows(self) -> pd.DataFrame:
        frames = [local_maps_frame(self.config.dataset, frame, states) for frame, states in self._frame_states()]
        return pd.concat(frames, ignore_index=True) if frames else local_maps_frame(self.config.dataset, 0, [])

    # ------------------------------------------
    # Model
    # ------------------------------------------
    def build_model(self, mode: Optional[str] = None) -> AttentionSocialLSTM:
        cfg = self.config
        store = init_params(cfg.model_dims(), cfg.seed, cfg.attention_input)
        return AttentionSocialLSTM(store, cfg.model_dims(), mode or cfg.mode, cfg.attention_input,
                                   cfg.dropout, self.scores)

    def _checkpoint_header(self, epoch: int) -> Dict[str, Any]:
        cfg = self.config
        return {
            "version": APP_VERSION,
            "epoch": epoch,
            "seed": cfg.seed,
            "optimizer": {"name": "rmsprop", "learning_rate": cfg.learning_rate,
                          "decay": cfg.rms_decay, "eps": cfg.rms_eps, "clip_norm": cfg.clip_norm},
            "run_config": cfg.header(),
            "split_hash": self.splits.manifest_hash if self.splits else "",
        }

    def mean_loss(self, model: AttentionSocialLSTM, samples: Sequence[SequenceSample]) -> float:
        """Rata-rata loss per sample tanpa dropout"""
        if not samples:
            return math.nan
        return float(np.mean([model.sample_loss(s, training=False) for s in samples]))

    def rollout_metrics(self, model: AttentionSocialLSTM, samples: Sequence[SequenceSample],
                        social_log: Optional[List[Dict[str, Any]]] = None,
                        stochastic: bool = False) -> MetricsCalculator:
        cfg = self.config
        rng = np.random.default_rng([cfg.seed, 2]) if stochastic else None
        calculator = MetricsCalculator(cfg.dataset, model.mode)
        for sample in samples:
            calculator.add(sample, model.rollout(sample, rng, stochastic, social_log))
        return calculator

    # ------------------------------------------
    # Train
    # ------------------------------------------
    def train(self) -> TrainResult:
        """
        Training RMSprop dengan mini-batch dan checkpoint validasi terbaik

        Returns:
            TrainResult (path checkpoint, kurva loss, epoch terbaik)
        """
        cfg = self.config
        splits = self.prepare()
        if not splits.train:
            raise ConfigError(f"training split of {cfg.dataset} is empty")
        if not splits.val:
            logger.warning("Validation split is empty; selecting checkpoints by training loss")

        model = self.build_model()
        store = model.store
        run_dir = cfg.run_dir()
        checkpoint = os.path.join(run_dir, EXPORT_CONFIG["checkpoint_name"])
        shuffle_rng = np.random.default_rng([cfg.seed, 0])
        dropout_rng = np.random.default_rng([cfg.seed, 1])

        model.save(checkpoint, self._checkpoint_header(0))
        best_score, best_epoch = math.inf, 0
        rows: List[Dict[str, float]] = []
        start = time.time()

        for epoch in range(1, cfg.epochs + 1):
            order = shuffle_rng.permutation(len(splits.train)).tolist()
            total = 0.0
            for step, batch in enumerate(chunk_list(order, cfg.batch_size), start=1):
                try:
                    for index in batch:
                        total += model.sample_loss(splits.train[index], training=True,
                                                   rng=dropout_rng, with_grad=True)
                    store.scale_grads(1.0 / len(batch))
                    norm = store.clip_grad_norm(cfg.clip_norm)
                    rmsprop_step(store, cfg.learning_rate, cfg.rms_decay, cfg.rms_eps)
                except NonFiniteError as exc:
                    logger.error(f"Training diverged: {exc}")
                    raise TrainingDivergedError(epoch, step, total) from exc
                logger.debug(f"epoch {epoch} step {step}: grad norm {norm:.4f}")

            train_loss = total / len(splits.train)
            eval_model = AttentionSocialLSTM(store, model.dims, model.mode, model.attention_input, 0.0, self.scores)
            val_loss = self.mean_loss(eval_model, splits.val)
            if splits.val:
                val_summary = self.rollout_metrics(eval_model, splits.val).summary()
                val_ade, val_fde = val_summary["ADE"], val_summary["FDE"]
            else:
                val_ade = val_fde = math.nan
            rows.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss,
                         "val_ade": val_ade, "val_fde": val_fde})
            logger.info(f"Epoch {epoch}/{cfg.epochs}: train {train_loss:.4f}, val {val_loss:.4f}, "
                        f"ADE {val_ade:.4f}, FDE {val_fde:.4f}")

            score = val_loss if splits.val else train_loss
            if score < best_score:
                best_score, best_epoch = score, epoch
                model.save(checkpoint, self._checkpoint_header(epoch))

        curve = pd.DataFrame(rows, columns=CURVE_COLUMNS)
        export_to_csv(curve, os.path.join(run_dir, EXPORT_CONFIG["loss_curve_name"]),
                      self.header(best_epoch=best_epoch))
        logger.info(f"Training finished in {format_duration(time.time() - start)}; best epoch {best_epoch}")
        return TrainResult(checkpoint, curve, best_epoch)

    # ------------------------------------------
    # Evaluate
    # ------------------------------------------
    def evaluate(self, checkpoint: Optional[str] = None, mode: Optional[str] = None,
                 dump_social: Optional[str] = None) -> EvalResult:
        """
        Rollout semua sample test dan hitung ADE/FDE

        Args:
            checkpoint: Path checkpoint (default: checkpoint run ini)
            mode: Override mode
            dump_social: Path CSV norm cell social tensor (opsional)

        Returns:
            EvalResult
        """
        cfg = self.config
        mode = mode or cfg.mode
        splits = self.prepare()
        if not splits.test:
            raise EvaluationError(f"test split of {cfg.dataset} is empty")

        checkpoint = checkpoint or os.path.join(cfg.run_dir(mode), EXPORT_CONFIG["checkpoint_name"])
        if not os.path.exists(checkpoint):
            raise EvaluationError(f"checkpoint not found: {checkpoint}")
        model = AttentionSocialLSTM.load(checkpoint, mode=mode, scores=self.scores, dims=cfg.model_dims())

        social_log: Optional[List[Dict[str, Any]]] = [] if dump_social else None
        calculator = self.rollout_metrics(model, splits.test, social_log, cfg.sample)
        summary = calculator.summary()
        summary.update({"dataset": cfg.dataset, "mode": mode, "samples": len(splits.test)})

        run_dir = cfg.run_dir(mode)
        header = self.header(checkpoint=checkpoint, eval_mode=mode)
        metrics = pd.DataFrame([{
            "dataset": cfg.dataset, "mode": mode, "ADE": summary["ADE"], "FDE": summary["FDE"],
            "pedestrians": summary["pedestrians"], "samples": summary["samples"],
            "split_hash": splits.manifest_hash,
        }])
        metrics_path = export_to_csv(metrics, os.path.join(run_dir, EXPORT_CONFIG["metrics_name"]), header)
        predictions_path = export_to_csv(calculator.predictions(),
                                         os.path.join(run_dir, EXPORT_CONFIG["predictions_name"]), header)
        if dump_social:
            export_to_csv(pd.DataFrame(social_log, columns=["sample_id", "frame", "ped_id", "cell_x",
                                                            "cell_y", "norm"]), dump_social, header)

        logger.info(f"{cfg.dataset} [{mode}] ADE {summary['ADE']:.4f} FDE {summary['FDE']:.4f}")
        return EvalResult(summary, calculator, metrics_path, predictions_path)

    # ------------------------------------------
    # Frozen scores export
    # ------------------------------------------
    def dump_scores(self, path: str, checkpoint: Optional[str] = None) -> str:
        """
        Tulis skor attention untuk setiap (frame, target, neighbor) dataset

        Args:
            path: Path CSV output
            checkpoint: Checkpoint sumber parameter (default: parameter awal seed)

        Returns:
            Path file
        """
        cfg = self.config
        self.prepare()
        if checkpoint:
            model = AttentionSocialLSTM.load(checkpoint, mode="attention", dims=cfg.model_dims())
        else:
            model = self.build_model("attention")
        dims = model.dims

        frames = []
        for frame, states in self._frame_states():
            if len(states) < 2:
                continue
            positions = np.array([[s.x, s.y] for s in states])
            velocities = np.array([[s.vx, s.vy] for s in states])
            scores = scene_attention(positions, velocities, [s.ped_id for s in states], model.store,
                                     dims.local_map_grid, dims.local_map_cell)
            frames.append(scores_to_frame(cfg.dataset, frame, scores))
        df = pd.concat(frames, ignore_index=True) if frames else scores_to_frame(cfg.dataset, 0, [])
        return write_scores(df, path, self.header(checkpoint=checkpoint or ""))


# ==========================================
# COMPARISON
# ==========================================
def compare_runs(out_dir: str, datasets: Sequence[str], base: str = BASELINE_MODE,
                 ours: str = PROPOSED_MODE, header: Optional[Dict[str, Any]] = None) -> MetricsReport:
    """
    Bandingkan metrics.csv kedua mode untuk setiap dataset

    Args:
        out_dir: Root direktori run (<out_dir>/<DATASET>/<mode>/metrics.csv)
        datasets: Nama dataset
        base: Mode baseline
        ours: Mode pembanding
        header: Header audit untuk laporan

    Returns:
        MetricsReport
    """
    report = MetricsReport()
    for dataset in datasets:
        hashes = {}
        for mode in (base, ours):
            path = os.path.join(out_dir, dataset.upper(), mode, EXPORT_CONFIG["metrics_name"])
            if not os.path.exists(path):
                raise EvaluationError(f"missing metrics for {dataset} [{mode}]: {path}")
            df, _ = read_csv_with_header(path)
            row = df.iloc[0]
            hashes[mode] = str(row["split_hash"])
            report.add(dataset.upper(), mode, float(row["ADE"]), float(row["FDE"]))
        if hashes[base] != hashes[ours]:
            raise EvaluationError(f"{dataset}: modes were evaluated on different splits")

    generator = ReportGenerator(report, base, ours)
    prefix = os.path.join(out_dir, EXPORT_CONFIG["report_name"])
    generator.to_csv(f"{prefix}.csv", header)
    generator.to_excel(f"{prefix}.xlsx", header)
    with open(f"{prefix}.md", "w", encoding="utf-8") as handle:
        handle.write(generator.generate_markdown_report(header=header))
    logger.info(f"ADE improvement {report.improvement('ADE', base, ours):+.2f}%, "
                f"FDE improvement {report.improvement('FDE', base, ours):+.2f}%")
    return report
