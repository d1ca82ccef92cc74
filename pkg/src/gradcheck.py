"""
Gradient Checker untuk CrowdCast
Bandingkan gradient analitik setiap layer dan model lengkap dengan
central finite difference
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from config.settings import GRADCHECK_CONFIG
from src.attention import attention_backward, attention_forward, init_attention_params
from src.data_processor import SequenceSample
from src.predictor import AttentionSocialLSTM, ModelDims, init_params, nll_with_grad
from src.social_pooling import PoolGeometry, build_social_tensor, init_social_params, social_tensor_backward
from src.tensor_kernels import (
    LossFn, LstmState, ParamStore, grad_check_report, init_uniform, linear_backward, linear_forward,
    lstm_cell, lstm_cell_backward, relu, relu_backward, softmax, softmax_backward
)
from src.utils import logger


class CheckLevel(Enum):
    """Status satu pengecekan"""
    PASS = "pass"
    FAIL = "fail"


@dataclass
class GradCheckResult:
    """Hasil satu parameter dalam satu komponen"""
    component: str
    parameter: str
    worst_error: float
    level: CheckLevel


def two_pedestrian_scene(seed: int = 0, obs_len: int = 8, pred_len: int = 12,
                         n_peds: int = 2, frame_period: float = 0.4) -> SequenceSample:
    """
    Scene sintetis kecil: pejalan kaki berdekatan dengan kecepatan hampir konstan

    Args:
        seed: Seed noise
        obs_len: Horizon observasi
        pred_len: Horizon prediksi
        n_peds: Jumlah pejalan kaki
        frame_period: Detik per frame

    Returns:
        SequenceSample
    """
    rng = np.random.default_rng(seed)
    seq_len = obs_len + pred_len
    starts = np.array([[0.3 * k, 0.4 * k] for k in range(n_peds)])
    velocities = 0.5 + 0.1 * rng.standard_normal((n_peds, 2))
    t = np.arange(seq_len) * frame_period
    positions = starts[:, None, :] + velocities[:, None, :] * t[None, :, None]
    positions = positions + 0.02 * rng.standard_normal(positions.shape)
    derived = np.zeros_like(positions)
    derived[:, 1:] = np.diff(positions, axis=1) / frame_period
    return SequenceSample(
        dataset="GRADCHECK", start_index=0, frames=np.arange(seq_len) * 10,
        ped_ids=tuple(range(1, n_peds + 1)), positions=positions, velocities=derived,
        frame_period=frame_period, frame_step=10, obs_len=obs_len, pred_len=pred_len,
    )


class GradientChecker:
    """
    Checker gradient untuk semua layer dan model lengkap
    """

    def __init__(self, dims: Optional[ModelDims] = None, h: float = GRADCHECK_CONFIG["h"],
                 tol: float = GRADCHECK_CONFIG["tol"], floor: float = GRADCHECK_CONFIG["floor"],
                 max_entries: Optional[int] = GRADCHECK_CONFIG["max_entries"],
                 seed: int = GRADCHECK_CONFIG["seed"]):
        """
        Inisialisasi GradientChecker

        Args:
            dims: Dimensi model (default ModelDims())
            h: Langkah finite difference
            tol: Toleransi error relatif
            floor: Batas bawah penyebut error relatif
            max_entries: Entri per parameter yang dicek (None = semua)
            seed: Seed parameter, input, dan pemilihan entri
        """
        self.dims = dims or ModelDims()
        self.h = h
        self.tol = tol
        self.floor = floor
        self.max_entries = max_entries
        self.seed = seed
        self.results: List[GradCheckResult] = []

    def run_all_checks(self) -> Dict[str, Any]:
        """
        Jalankan semua pengecekan

        Returns:
            Dictionary ringkasan
        """
        logger.info("Running all gradient checks...")
        self.results = []

        self.check_linear_relu()
        self.check_softmax()
        self.check_lstm()
        self.check_nll()
        self.check_social_pooling()
        self.check_attention()
        self.check_full_model("attention", "scores")
        self.check_full_model("attention", "crowd")
        self.check_full_model("social", "scores")

        worst = max((r.worst_error for r in self.results), default=0.0)
        failed = [r for r in self.results if r.level is CheckLevel.FAIL]
        return {
            "worst_error": worst,
            "passed": not failed,
            "failed": len(failed),
            "checked": len(self.results),
            "components": sorted({r.component for r in self.results}),
            "results": self.results,
        }

    # ------------------------------------------
    # Helpers
    # ------------------------------------------
    def _rng(self, offset: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, offset])

    def _run(self, component: str, loss_fn: LossFn, store: ParamStore,
             names: Optional[List[str]] = None) -> Dict[str, float]:
        report = grad_check_report(loss_fn, store, h=self.h, names=names, max_entries=self.max_entries,
                                   rng=self._rng(99), floor=self.floor)
        for name, worst in report.items():
            level = CheckLevel.PASS if worst < self.tol else CheckLevel.FAIL
            self.results.append(GradCheckResult(component, name, worst, level))
        worst = max(report.values(), default=0.0)
        logger.info(f"{component}: worst relative error {worst:.3e}")
        return report

    # ------------------------------------------
    # Kernel checks
    # ------------------------------------------
    def check_linear_relu(self) -> Dict[str, float]:
        """Dua layer linear+ReLU pada batch"""
        rng = self._rng(1)
        store = ParamStore()
        store.add("w1", init_uniform(rng, 6, (6, 5)))
        store.add("b1", 0.1 * rng.standard_normal(5))
        store.add("w2", init_uniform(rng, 5, (5, 3)))
        store.add("b2", 0.1 * rng.standard_normal(3))
        x = rng.standard_normal((4, 6))
        coef = rng.standard_normal((4, 3))

        def loss_fn(s: ParamStore, with_grad: bool) -> float:
            z1 = linear_forward(x, s["w1"], s["b1"])
            a1 = relu(z1)
            y = linear_forward(a1, s["w2"], s["b2"])
            if with_grad:
                d_a1, dw2, db2 = linear_backward(coef, a1, s["w2"])
                _, dw1, db1 = linear_backward(relu_backward(d_a1, z1), x, s["w1"])
                for name, grad in (("w1", dw1), ("b1", db1), ("w2", dw2), ("b2", db2)):
                    s.accumulate(name, grad)
            return float(np.sum(coef * y))

        return self._run("linear_relu", loss_fn, store)

    def check_softmax(self) -> Dict[str, float]:
        rng = self._rng(2)
        store = ParamStore()
        store.add("logits", rng.standard_normal(6))
        coef = rng.standard_normal(6)

        def loss_fn(s: ParamStore, with_grad: bool) -> float:
            p = softmax(s["logits"])
            if with_grad:
                s.accumulate("logits", softmax_backward(coef, p))
            return float(coef @ p)

        return self._run("softmax", loss_fn, store)

    def check_lstm(self, steps: int = 5) -> Dict[str, float]:
        """LSTM beberapa langkah dengan BPTT"""
        rng = self._rng(3)
        n, hidden = 4, 3
        store = ParamStore()
        store.add("w_x", init_uniform(rng, hidden, (n, 4 * hidden)))
        store.add("w_h", init_uniform(rng, hidden, (hidden, 4 * hidden)))
        store.add("b", 0.1 * rng.standard_normal(4 * hidden))
        xs = rng.standard_normal((steps, n))
        coef = rng.standard_normal((steps, hidden))

        def loss_fn(s: ParamStore, with_grad: bool) -> float:
            state = LstmState.zeros(hidden)
            caches, loss = [], 0.0
            for t in range(steps):
                state, cache = lstm_cell(xs[t], state, s["w_x"], s["w_h"], s["b"])
                caches.append(cache)
                loss += float(coef[t] @ state.hidden)
            if with_grad:
                dh, dc = np.zeros(hidden), np.zeros(hidden)
                for t in reversed(range(steps)):
                    _, dh, dc, dw_x, dw_h, db = lstm_cell_backward(dh + coef[t], dc, caches[t], s["w_x"], s["w_h"])
                    s.accumulate("w_x", dw_x)
                    s.accumulate("w_h", dw_h)
                    s.accumulate("b", db)
            return loss

        return self._run("lstm", loss_fn, store)

    def check_nll(self) -> Dict[str, float]:
        rng = self._rng(4)
        store = ParamStore()
        store.add("raw", 0.3 * rng.standard_normal(5))
        target = rng.standard_normal(2)

        def loss_fn(s: ParamStore, with_grad: bool) -> float:
            loss, grad = nll_with_grad(s["raw"], target)
            if with_grad:
                s.accumulate("raw", grad)
            return loss

        return self._run("nll", loss_fn, store)

    # ------------------------------------------
    # Module checks
    # ------------------------------------------
    def check_social_pooling(self) -> Dict[str, float]:
        rng = self._rng(5)
        hidden, channels, k = 6, 4, 5
        geometry = PoolGeometry(self.dims.pool_grid, self.dims.pool_window, self.dims.pool_region_side)
        store = ParamStore()
        init_social_params(store, rng, hidden, channels)
        store.set("social.embed.bias", 0.1 * rng.standard_normal(channels))
        store.add("neighbor_hidden", rng.standard_normal((k, hidden)))
        target = np.zeros(2)
        neighbors = rng.uniform(-1.9, 1.9, size=(k, 2))
        ids = list(rng.permutation(k) + 1)
        coef = rng.standard_normal(geometry.pooled ** 2 * channels)

        def loss_fn(s: ParamStore, with_grad: bool) -> float:
            tensor, cache = build_social_tensor(target, ids, neighbors, s["neighbor_hidden"], s, geometry)
            if with_grad:
                s.accumulate("neighbor_hidden", social_tensor_backward(coef, cache, s))
            return float(coef @ tensor)

        return self._run("social_pooling", loss_fn, store)

    def check_attention(self) -> Dict[str, float]:
        """Skor dan embedding attention untuk empat neighbor"""
        rng = self._rng(6)
        d = self.dims
        k = 4
        store = ParamStore()
        init_attention_params(store, rng, d.pair_feature_dim, d.attention_hidden_dim,
                              d.attention_embedding_dim, d.attention_mlp_dim)
        for name in list(store):
            if name.endswith(".bias"):
                store.set(name, 0.1 * rng.standard_normal(store[name].shape))
        features = rng.standard_normal((k, d.pair_feature_dim))
        ids = [4, 2, 3, 1]
        coef_w = rng.standard_normal(k)
        coef_e = rng.standard_normal((k, d.attention_embedding_dim))

        def loss_fn(s: ParamStore, with_grad: bool) -> float:
            weights, embeddings, cache = attention_forward(ids, features, s)
            if with_grad:
                attention_backward(coef_w, coef_e, cache, s)
            return float(coef_w @ weights + np.sum(coef_e * embeddings))

        return self._run("attention", loss_fn, store)

    def check_full_model(self, mode: str = "attention", attention_input: str = "scores") -> Dict[str, float]:
        """Model lengkap pada scene dua pejalan kaki, dropout off"""
        sample = two_pedestrian_scene(self.seed)
        store = init_params(self.dims, self.seed, attention_input)
        rng = self._rng(7)
        for name in list(store):
            if name.endswith(".bias"):
                store.set(name, 0.05 * rng.standard_normal(store[name].shape))
        model = AttentionSocialLSTM(store, self.dims, mode, attention_input, dropout_rate=0.0)

        def loss_fn(s: ParamStore, with_grad: bool) -> float:
            return model.sample_loss(sample, training=False, with_grad=with_grad)

        names = [n for n in store if mode == "attention" or not n.startswith(("attention.", "predictor.attention_embed."))]
        return self._run(f"model[{mode}/{attention_input}]", loss_fn, store, names)


class GradCheckReport:
    """
    Generator laporan gradient check
    """

    def __init__(self, checker: GradientChecker):
        """
        Inisialisasi GradCheckReport

        Args:
            checker: GradientChecker
        """
        self.checker = checker
        self.result: Optional[Dict[str, Any]] = None

    def run(self) -> Dict[str, Any]:
        if self.result is None:
            self.result = self.checker.run_all_checks()
        return self.result

    def to_frame(self) -> pd.DataFrame:
        result = self.run()
        return pd.DataFrame(
            [(r.component, r.parameter, r.worst_error, r.level.value) for r in result["results"]],
            columns=["component", "parameter", "worst_error", "level"],
        )

    def generate_summary_card(self) -> Dict[str, Any]:
        result = self.run()
        return {
            "worst_error": result["worst_error"],
            "status": "PASS" if result["passed"] else "FAIL",
            "checked": result["checked"],
            "failed": result["failed"],
        }

    def generate_detailed_report(self) -> str:
        """
        Generate laporan detail dalam format text

        Returns:
            String laporan
        """
        result = self.run()
        df = self.to_frame()
        report = f"""
{'='*60}
GRADIENT CHECK REPORT
{'='*60}

Worst Relative Error: {result['worst_error']:.3e}
Tolerance: {self.checker.tol:g} (h={self.checker.h:g})
Status: {'PASS' if result['passed'] else 'FAIL'}
Checked: {result['checked']} parameter(s), failed: {result['failed']}

{'='*60}
PER COMPONENT
{'='*60}
"""
        for component, group in df.groupby("component", sort=False):
            status = "FAIL" if (group["level"] == CheckLevel.FAIL.value).any() else "ok"
            report += f"  {component:28s} {group['worst_error'].max():.3e}  {status}\n"

        failed = df[df["level"] == CheckLevel.FAIL.value]
        if len(failed):
            report += f"\n{'='*60}\nFAILED PARAMETERS\n{'='*60}\n"
            for row in failed.itertuples(index=False):
                report += f"  {row.component} :: {row.parameter}  {row.worst_error:.3e}\n"

        report += f"\n{'='*60}\n"
        return report
