"""
Predictor untuk CrowdCast
LSTM per pejalan kaki dengan parameter bersama. Input tiap langkah adalah
[embedding posisi | fitur attention | embedding social tensor], output adalah
parameter Gaussian bivariat posisi berikutnya.
"""

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.settings import MODEL_CONFIG
from src.attention import (
    AttentionCache, AttentionScores, ScoreTable, attention_backward, attention_forward,
    init_attention_params, pair_feature_dim, scene_pair_features
)
from src.checkpoint import load_checkpoint, save_checkpoint
from src.data_processor import SequenceSample
from src.local_map import scene_local_maps
from src.social_pooling import (
    PoolGeometry, SocialCache, build_social_tensor, init_social_params, social_cell_norms,
    social_tensor_backward
)
from src.tensor_kernels import (
    LstmCache, LstmState, ParamStore, check_finite, dropout, dropout_backward, init_uniform,
    linear_backward, linear_forward, lstm_cell, lstm_cell_backward, relu, relu_backward
)
from src.utils import logger, CheckpointError, ConfigError, DimensionError, NonFiniteError

POS_EMBED = "predictor.pos_embed"
ATT_EMBED = "predictor.attention_embed"
SOC_EMBED = "predictor.social_embed"
LSTM = "predictor.lstm"
OUTPUT = "predictor.output"
ATTENTION_BRANCH = ("attention.", f"{ATT_EMBED}.")

MODES = ("attention", "social")
ATTENTION_INPUTS = ("scores", "crowd")
LOG_2PI = math.log(2.0 * math.pi)
LOG_SIGMA_MAX = MODEL_CONFIG["log_sigma_max"]


# ==========================================
# DIMENSIONS
# ==========================================
@dataclass(frozen=True)
class ModelDims:
    """Dimensi model; default mengikuti MODEL_CONFIG"""
    embedding_dim: int = MODEL_CONFIG["embedding_dim"]
    hidden_dim: int = MODEL_CONFIG["hidden_dim"]
    attention_hidden_dim: int = MODEL_CONFIG["attention_hidden_dim"]
    attention_embedding_dim: int = MODEL_CONFIG["attention_embedding_dim"]
    attention_mlp_dim: int = MODEL_CONFIG["attention_mlp_dim"]
    local_map_grid: int = MODEL_CONFIG["local_map_grid"]
    local_map_cell: float = MODEL_CONFIG["local_map_cell"]
    pool_grid: int = MODEL_CONFIG["pool_grid"]
    pool_window: int = MODEL_CONFIG["pool_window"]
    pool_region_side: float = MODEL_CONFIG["pool_region_side"]

    def __post_init__(self):
        ints = (self.embedding_dim, self.hidden_dim, self.attention_hidden_dim,
                self.attention_embedding_dim, self.attention_mlp_dim, self.local_map_grid,
                self.pool_grid, self.pool_window)
        if min(ints) < 1 or self.local_map_cell <= 0 or self.pool_region_side <= 0:
            raise ConfigError(f"model dimensions must be positive: {self}")
        if self.pool_grid % self.pool_window:
            raise ConfigError(f"pool_grid {self.pool_grid} is not a multiple of pool_window {self.pool_window}")

    @property
    def pair_feature_dim(self) -> int:
        return pair_feature_dim(self.local_map_grid)

    @property
    def social_dim(self) -> int:
        return (self.pool_grid // self.pool_window) ** 2 * self.embedding_dim

    @property
    def input_dim(self) -> int:
        return 3 * self.embedding_dim

    @property
    def geometry(self) -> PoolGeometry:
        return PoolGeometry(self.pool_grid, self.pool_window, self.pool_region_side)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


# ==========================================
# GAUSSIAN HEAD
# ==========================================
@dataclass(frozen=True)
class GaussianParams:
    mux: float
    muy: float
    sx: float
    sy: float
    rho: float

    @property
    def mean(self) -> np.ndarray:
        return np.array([self.mux, self.muy])

    def covariance(self) -> np.ndarray:
        cross = self.rho * self.sx * self.sy
        return np.array([[self.sx ** 2, cross], [cross, self.sy ** 2]])

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Ambil satu sampel posisi"""
        z1, z2 = rng.standard_normal(2)
        return np.array([
            self.mux + self.sx * z1,
            self.muy + self.sy * (self.rho * z1 + math.sqrt(1.0 - self.rho ** 2) * z2),
        ])


def _sigma(log_sigma: float, sigma_floor: float) -> float:
    return max(math.exp(min(log_sigma, LOG_SIGMA_MAX)), sigma_floor)


def transform_outputs(raw: np.ndarray, rho_clamp: float = MODEL_CONFIG["rho_clamp"],
                      sigma_floor: float = MODEL_CONFIG["sigma_floor"]) -> GaussianParams:
    """
    Ubah output mentah 5 dimensi menjadi GaussianParams

    Args:
        raw: [mux, muy, log sx, log sy, atanh-ish rho]
        rho_clamp: Batas |rho|
        sigma_floor: Batas bawah sigma (log sigma juga dibatasi atas LOG_SIGMA_MAX)

    Returns:
        GaussianParams
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.shape != (5,):
        raise DimensionError(f"raw output must have 5 values, got shape {raw.shape}")
    check_finite(raw, "raw output")
    return GaussianParams(
        float(raw[0]), float(raw[1]),
        _sigma(raw[2], sigma_floor), _sigma(raw[3], sigma_floor),
        rho_clamp * math.tanh(raw[4]),
    )


def nll_loss(params: GaussianParams, target: Sequence[float]) -> float:
    """
    Negative log-likelihood Gaussian bivariat

    Args:
        params: GaussianParams
        target: Posisi aktual (x, y)

    Returns:
        -log N(target; mu, Sigma)
    """
    dx = (target[0] - params.mux) / params.sx
    dy = (target[1] - params.muy) / params.sy
    om = 1.0 - params.rho ** 2
    z = dx * dx + dy * dy - 2.0 * params.rho * dx * dy
    return z / (2.0 * om) + LOG_2PI + math.log(params.sx * params.sy) + 0.5 * math.log(om)


def nll_with_grad(raw: np.ndarray, target: Sequence[float], rho_clamp: float = MODEL_CONFIG["rho_clamp"],
                  sigma_floor: float = MODEL_CONFIG["sigma_floor"]) -> Tuple[float, np.ndarray]:
    """
    NLL beserta gradient terhadap output mentah

    Returns:
        Tuple (loss, d_raw (5,))
    """
    params = transform_outputs(raw, rho_clamp, sigma_floor)
    loss = nll_loss(params, target)

    dx = (target[0] - params.mux) / params.sx
    dy = (target[1] - params.muy) / params.sy
    rho = params.rho
    om = 1.0 - rho ** 2
    z = dx * dx + dy * dy - 2.0 * rho * dx * dy

    d_rho = -dx * dy / om + z * rho / om ** 2 - rho / om
    grad = np.array([
        -(dx - rho * dy) / (params.sx * om),
        -(dy - rho * dx) / (params.sy * om),
        1.0 - (dx * dx - rho * dx * dy) / om,
        1.0 - (dy * dy - rho * dx * dy) / om,
        d_rho * rho_clamp * (1.0 - math.tanh(raw[4]) ** 2),
    ])
    # sigma yang di-clamp tidak bergantung pada raw
    for k in (2, 3):
        if raw[k] > LOG_SIGMA_MAX or math.exp(min(raw[k], LOG_SIGMA_MAX)) < sigma_floor:
            grad[k] = 0.0
    return loss, grad


# ==========================================
# PARAMETERS
# ==========================================
def init_params(dims: ModelDims = ModelDims(), seed: int = 0,
                attention_input: str = "scores") -> ParamStore:
    """
    Inisialisasi semua parameter dengan urutan tetap

    Kedua mode memakai set parameter yang sama; mode social tidak membaca
    parameter attention.

    Args:
        dims: ModelDims
        seed: Seed inisialisasi
        attention_input: 'scores' atau 'crowd'

    Returns:
        ParamStore
    """
    if attention_input not in ATTENTION_INPUTS:
        raise ConfigError(f"attention_input must be one of {ATTENTION_INPUTS}, got {attention_input!r}")
    rng = np.random.default_rng(seed)
    store = ParamStore()
    E, H = dims.embedding_dim, dims.hidden_dim
    att_in = 1 if attention_input == "scores" else dims.attention_embedding_dim

    for name, fan_in in ((POS_EMBED, 2), (ATT_EMBED, att_in), (SOC_EMBED, dims.social_dim)):
        store.add(f"{name}.weight", init_uniform(rng, fan_in, (fan_in, E)))
        store.add(f"{name}.bias", np.zeros(E))
    store.add(f"{LSTM}.w_x", init_uniform(rng, H, (dims.input_dim, 4 * H)))
    store.add(f"{LSTM}.w_h", init_uniform(rng, H, (H, 4 * H)))
    lstm_bias = np.zeros(4 * H)
    lstm_bias[H:2 * H] = MODEL_CONFIG["lstm_forget_bias"]
    store.add(f"{LSTM}.bias", lstm_bias)
    store.add(f"{OUTPUT}.weight", init_uniform(rng, H, (H, 5)))
    store.add(f"{OUTPUT}.bias", np.zeros(5))

    init_social_params(store, rng, H, E)
    init_attention_params(store, rng, dims.pair_feature_dim, dims.attention_hidden_dim,
                          dims.attention_embedding_dim, dims.attention_mlp_dim)
    logger.debug(f"Initialized {len(store)} tensors ({store.num_parameters()} parameters), seed {seed}")
    return store


def zero_attention_branch(store: ParamStore) -> None:
    """Set semua parameter cabang attention ke nol"""
    for name in store:
        if name.startswith(ATTENTION_BRANCH):
            store.set(name, np.zeros_like(store[name]))


# ==========================================
# CACHES
# ==========================================
@dataclass
class PedState:
    """State rekuren satu pejalan kaki dalam satu sample"""
    ped_id: int
    lstm: LstmState
    last_input: Optional[np.ndarray] = None

    @classmethod
    def initial(cls, ped_id: int, hidden_dim: int) -> "PedState":
        return cls(ped_id, LstmState.zeros(hidden_dim))


@dataclass
class AttentionFeatureCache:
    weights: np.ndarray
    embeddings: Optional[np.ndarray]
    pre_activation: np.ndarray
    crowd: Optional[np.ndarray] = None


@dataclass
class EmbedCache:
    position: np.ndarray
    pos_pre: np.ndarray
    attention: Optional[AttentionFeatureCache]
    social: np.ndarray
    soc_pre: np.ndarray
    masks: Tuple[Optional[np.ndarray], Optional[np.ndarray], Optional[np.ndarray]]


@dataclass
class StepRecord:
    """Semua yang dibutuhkan backward untuk satu pejalan kaki pada satu langkah"""
    others: np.ndarray
    embed: EmbedCache
    lstm: LstmCache
    hidden: np.ndarray
    raw: np.ndarray
    gaussian: GaussianParams
    social: np.ndarray
    social_cache: SocialCache
    attention_cache: Optional[AttentionCache] = None
    frozen_scores: bool = False
    d_raw: Optional[np.ndarray] = None


# ==========================================
# MODEL
# ==========================================
class AttentionSocialLSTM:
    """
    Model prediksi trajektori per sample scene
    """

    def __init__(self, store: ParamStore, dims: ModelDims = ModelDims(), mode: str = "attention",
                 attention_input: str = "scores", dropout_rate: float = 0.0,
                 scores: Optional[ScoreTable] = None,
                 rho_clamp: float = MODEL_CONFIG["rho_clamp"],
                 sigma_floor: float = MODEL_CONFIG["sigma_floor"]):
        """
        Inisialisasi model

        Args:
            store: ParamStore (lihat init_params)
            dims: ModelDims
            mode: 'attention' atau 'social'
            attention_input: 'scores' (skor per neighbor) atau 'crowd' (fitur crowd berbobot)
            dropout_rate: Rate dropout per blok 64 saat training
            scores: Tabel skor beku; None = skor dihitung oleh jaringan attention
            rho_clamp: Batas |rho|
            sigma_floor: Batas bawah sigma
        """
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
        if attention_input not in ATTENTION_INPUTS:
            raise ConfigError(f"attention_input must be one of {ATTENTION_INPUTS}, got {attention_input!r}")
        if not 0.0 <= dropout_rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {dropout_rate}")
        self.store = store
        self.dims = dims
        self.mode = mode
        self.attention_input = attention_input
        self.dropout_rate = dropout_rate
        self.scores = scores
        self.rho_clamp = rho_clamp
        self.sigma_floor = sigma_floor

    @classmethod
    def create(cls, dims: ModelDims = ModelDims(), seed: int = 0, **kwargs) -> "AttentionSocialLSTM":
        return cls(init_params(dims, seed, kwargs.get("attention_input", "scores")), dims, **kwargs)

    # ------------------------------------------
    # Attention feature
    # ------------------------------------------
    def attention_feature(self, weights: np.ndarray,
                          embeddings: Optional[np.ndarray] = None) -> Tuple[np.ndarray, Optional[AttentionFeatureCache]]:
        """
        Fitur attention (E,) dari bobot neighbor

        Mode 'scores': sum_j relu(alpha_j * w + b). Mode 'crowd': relu(sum_j alpha_j e_j W + b).
        Tanpa neighbor hasilnya vector nol.
        """
        E = self.dims.embedding_dim
        weights = np.asarray(weights, dtype=np.float64)
        if weights.size == 0:
            return np.zeros(E), None
        w, b = self.store[f"{ATT_EMBED}.weight"], self.store[f"{ATT_EMBED}.bias"]
        if self.attention_input == "scores":
            pre = linear_forward(weights[:, None], w, b)
            return relu(pre).sum(axis=0), AttentionFeatureCache(weights, None, pre)
        if embeddings is None or embeddings.shape != (weights.size, w.shape[0]):
            raise DimensionError("crowd attention input needs one embedding per neighbor")
        crowd = weights @ embeddings
        pre = linear_forward(crowd, w, b)
        return relu(pre), AttentionFeatureCache(weights, embeddings, pre, crowd)

    def _attention_feature_backward(self, d_feature: np.ndarray,
                                    cache: AttentionFeatureCache) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        w = self.store[f"{ATT_EMBED}.weight"]
        if cache.crowd is None:
            d_pre = relu_backward(np.broadcast_to(d_feature, cache.pre_activation.shape), cache.pre_activation)
            d_in, dw, db = linear_backward(d_pre, cache.weights[:, None], w)
            d_weights, d_embeddings = d_in[:, 0], None
        else:
            d_pre = relu_backward(d_feature, cache.pre_activation)
            d_crowd, dw, db = linear_backward(d_pre, cache.crowd, w)
            d_weights = cache.embeddings @ d_crowd
            d_embeddings = np.outer(cache.weights, d_crowd)
        self.store.accumulate(f"{ATT_EMBED}.weight", dw)
        self.store.accumulate(f"{ATT_EMBED}.bias", db)
        return d_weights, d_embeddings

    # ------------------------------------------
    # Input embedding and step
    # ------------------------------------------
    def embed_inputs(self, position: np.ndarray, scores: Union[AttentionScores, np.ndarray, None],
                     social: np.ndarray, training: bool = False, rng: Optional[np.random.Generator] = None,
                     embeddings: Optional[np.ndarray] = None) -> Tuple[np.ndarray, EmbedCache]:
        """
        Bangun input LSTM [posisi | attention | social]

        Args:
            position: Posisi relatif terhadap frame observasi pertama (2,)
            scores: AttentionScores / bobot (K,); None = blok attention nol (mode social)
            social: Social tensor (social_dim,)
            training: Aktifkan dropout
            rng: Generator dropout
            embeddings: Embedding pasangan (K, 50) untuk attention_input 'crowd'

        Returns:
            Tuple (vector input 3E, cache)
        """
        position = np.asarray(position, dtype=np.float64)
        social = np.asarray(social, dtype=np.float64)
        if position.shape != (2,):
            raise DimensionError(f"position must be (2,), got {position.shape}")
        if social.shape != (self.dims.social_dim,):
            raise DimensionError(f"social tensor must be ({self.dims.social_dim},), got {social.shape}")

        pos_pre = linear_forward(position, self.store[f"{POS_EMBED}.weight"], self.store[f"{POS_EMBED}.bias"])
        if scores is None:
            att, att_cache = np.zeros(self.dims.embedding_dim), None
        else:
            weights = scores.weights if isinstance(scores, AttentionScores) else scores
            att, att_cache = self.attention_feature(weights, embeddings)
        soc_pre = linear_forward(social, self.store[f"{SOC_EMBED}.weight"], self.store[f"{SOC_EMBED}.bias"])

        blocks, masks = [], []
        for block in (relu(pos_pre), att, relu(soc_pre)):
            out, mask = dropout(block, self.dropout_rate, training, rng)
            blocks.append(out)
            masks.append(mask)
        cache = EmbedCache(position, pos_pre, att_cache, social, soc_pre, tuple(masks))
        return np.concatenate(blocks), cache

    def _embed_backward(self, dx: np.ndarray,
                        cache: EmbedCache) -> Tuple[Optional[np.ndarray], Optional[np.ndarray], np.ndarray]:
        E = self.dims.embedding_dim
        d_pos, d_att, d_soc = (dropout_backward(dx[k * E:(k + 1) * E], cache.masks[k]) for k in range(3))

        _, dw, db = linear_backward(relu_backward(d_pos, cache.pos_pre), cache.position,
                                    self.store[f"{POS_EMBED}.weight"])
        self.store.accumulate(f"{POS_EMBED}.weight", dw)
        self.store.accumulate(f"{POS_EMBED}.bias", db)

        d_social, dw, db = linear_backward(relu_backward(d_soc, cache.soc_pre), cache.social,
                                           self.store[f"{SOC_EMBED}.weight"])
        self.store.accumulate(f"{SOC_EMBED}.weight", dw)
        self.store.accumulate(f"{SOC_EMBED}.bias", db)

        d_weights, d_embeddings = None, None
        if cache.attention is not None:
            d_weights, d_embeddings = self._attention_feature_backward(d_att, cache.attention)
        return d_weights, d_embeddings, d_social

    def _step(self, state: PedState, x: np.ndarray,
              frame: Optional[int] = None) -> Tuple[PedState, GaussianParams, LstmCache, np.ndarray]:
        new_lstm, lstm_cache = lstm_cell(x, state.lstm, self.store[f"{LSTM}.w_x"],
                                         self.store[f"{LSTM}.w_h"], self.store[f"{LSTM}.bias"])
        raw = linear_forward(new_lstm.hidden, self.store[f"{OUTPUT}.weight"], self.store[f"{OUTPUT}.bias"])
        if not np.all(np.isfinite(raw)):
            where = f" at frame {frame}" if frame is not None else ""
            raise NonFiniteError(f"non-finite output for pedestrian {state.ped_id}{where}")
        gaussian = transform_outputs(raw, self.rho_clamp, self.sigma_floor)
        return PedState(state.ped_id, new_lstm, x), gaussian, lstm_cache, raw

    def step(self, state: PedState, x: np.ndarray,
             frame: Optional[int] = None) -> Tuple[PedState, GaussianParams]:
        """
        Majukan LSTM satu langkah dan keluarkan GaussianParams

        Args:
            state: PedState sebelumnya
            x: Input dari embed_inputs (3E,)
            frame: Frame id untuk pesan error

        Returns:
            Tuple (state baru, GaussianParams)
        """
        new_state, gaussian, _, _ = self._step(state, x, frame)
        return new_state, gaussian

    # ------------------------------------------
    # Scene step
    # ------------------------------------------
    def _scene_step(self, sample: SequenceSample, t: int, positions: np.ndarray, velocities: np.ndarray,
                    inputs: np.ndarray, states: List[PedState], training: bool,
                    rng: Optional[np.random.Generator]) -> Tuple[List[StepRecord], List[PedState]]:
        n = sample.num_peds
        ids = sample.ped_ids
        frame = int(sample.frames[t])
        hidden_prev = np.stack([s.lstm.hidden for s in states])
        use_attention = self.mode == "attention"
        maps = None
        if use_attention and n > 1 and (self.scores is None or self.attention_input == "crowd"):
            maps = scene_local_maps(positions, velocities, self.dims.local_map_grid, self.dims.local_map_cell)

        records, new_states = [], []
        for i in range(n):
            others = np.array([j for j in range(n) if j != i], dtype=np.int64)
            other_ids = [ids[j] for j in others]

            weights, embeddings, att_cache, frozen = None, None, None, False
            if use_attention:
                weights = np.zeros(0)
                if maps is not None:
                    features = scene_pair_features(i, others, positions, velocities, maps)
                    weights, embeddings, att_cache = attention_forward(other_ids, features, self.store)
                if self.scores is not None and len(others):
                    weights = self.scores.weights(sample.dataset, frame, ids[i], other_ids)
                    frozen = True

            social, social_cache = build_social_tensor(
                positions[i], other_ids, positions[others], hidden_prev[others], self.store, self.dims.geometry
            )
            x, embed_cache = self.embed_inputs(inputs[i], weights, social, training, rng, embeddings)
            new_state, gaussian, lstm_cache, raw = self._step(states[i], x, frame)
            new_states.append(new_state)
            records.append(StepRecord(others, embed_cache, lstm_cache, new_state.lstm.hidden, raw,
                                      gaussian, social, social_cache, att_cache, frozen))
        return records, new_states

    # ------------------------------------------
    # Training loss
    # ------------------------------------------
    def sample_loss(self, sample: SequenceSample, training: bool = False,
                    rng: Optional[np.random.Generator] = None, with_grad: bool = False) -> float:
        """
        Loss teacher-forced satu sample

        Jumlah NLL atas semua pejalan kaki dan pred_len frame horizon prediksi.
        Bila with_grad, gradient diakumulasi ke store.grads (BPTT penuh).

        Args:
            sample: SequenceSample
            training: Dropout aktif
            rng: Generator dropout
            with_grad: Hitung gradient

        Returns:
            Loss sample
        """
        n, seq_len, obs = sample.num_peds, sample.seq_len, sample.obs_len
        if n == 0:
            raise DimensionError(f"sample {sample.sample_id} has no pedestrians")
        H = self.dims.hidden_dim
        rel = sample.positions - sample.positions[:, :1]
        states = [PedState.initial(pid, H) for pid in sample.ped_ids]

        history: List[List[StepRecord]] = []
        loss = 0.0
        for t in range(seq_len - 1):
            records, states = self._scene_step(sample, t, sample.positions[:, t], sample.velocities[:, t],
                                               rel[:, t], states, training, rng)
            if t >= obs - 1:
                for i, record in enumerate(records):
                    step_loss, record.d_raw = nll_with_grad(record.raw, rel[i, t + 1],
                                                            self.rho_clamp, self.sigma_floor)
                    loss += step_loss
            if with_grad:
                history.append(records)

        if not math.isfinite(loss):
            raise NonFiniteError(f"non-finite loss for sample {sample.sample_id}")
        if with_grad:
            self._backward(history)
        return loss

    def _backward(self, history: List[List[StepRecord]]) -> None:
        store = self.store
        w_x, w_h, w_out = store[f"{LSTM}.w_x"], store[f"{LSTM}.w_h"], store[f"{OUTPUT}.weight"]
        n = len(history[0])
        H = self.dims.hidden_dim
        dh = np.zeros((n, H))
        dc = np.zeros((n, H))

        for records in reversed(history):
            dh_prev = np.zeros((n, H))
            dc_prev = np.zeros((n, H))
            for i, record in enumerate(records):
                dh_i = dh[i]
                if record.d_raw is not None:
                    d_hidden, dw, db = linear_backward(record.d_raw, record.hidden, w_out)
                    store.accumulate(f"{OUTPUT}.weight", dw)
                    store.accumulate(f"{OUTPUT}.bias", db)
                    dh_i = dh_i + d_hidden

                dx, d_h, d_c, dw_x, dw_h, db = lstm_cell_backward(dh_i, dc[i], record.lstm, w_x, w_h)
                store.accumulate(f"{LSTM}.w_x", dw_x)
                store.accumulate(f"{LSTM}.w_h", dw_h)
                store.accumulate(f"{LSTM}.bias", db)
                dh_prev[i] += d_h
                dc_prev[i] = d_c

                d_weights, d_embeddings, d_social = self._embed_backward(dx, record.embed)
                if record.attention_cache is not None:
                    if record.frozen_scores or d_weights is None:
                        d_weights = np.zeros(len(record.others))
                    attention_backward(d_weights, d_embeddings, record.attention_cache, store)
                dh_prev[record.others] += social_tensor_backward(d_social, record.social_cache, store)
            dh, dc = dh_prev, dc_prev

    # ------------------------------------------
    # Rollout
    # ------------------------------------------
    def rollout(self, sample: SequenceSample, rng: Optional[np.random.Generator] = None,
                stochastic: bool = False, social_log: Optional[List[Dict[str, Any]]] = None) -> np.ndarray:
        """
        Prediksi pred_len posisi untuk setiap pejalan kaki

        obs_len frame pertama memakai ground truth; setelah itu mu (atau sampel
        bila stochastic) diumpankan kembali sebagai posisi input.

        Args:
            sample: SequenceSample
            rng: Generator untuk rollout stochastic
            stochastic: Ambil sampel dari Gaussian alih-alih mu
            social_log: Bila diberikan, baris norm cell social tensor ditambahkan di sini

        Returns:
            Posisi absolut prediksi (P, pred_len, 2)
        """
        n, seq_len, obs = sample.num_peds, sample.seq_len, sample.obs_len
        if n == 0:
            raise DimensionError(f"sample {sample.sample_id} has no pedestrians")
        if stochastic and rng is None:
            raise ConfigError("stochastic rollout needs a random generator")

        origin = sample.positions[:, 0]
        rel = sample.positions - origin[:, None]
        positions = sample.positions.copy()
        velocities = sample.velocities.copy()
        states = [PedState.initial(pid, self.dims.hidden_dim) for pid in sample.ped_ids]
        predictions = np.zeros((n, sample.pred_len, 2))

        for t in range(seq_len - 1):
            records, states = self._scene_step(sample, t, positions[:, t], velocities[:, t],
                                               rel[:, t], states, False, None)
            if social_log is not None:
                self._log_social(sample, t, records, social_log)
            if t < obs - 1:
                continue
            for i, record in enumerate(records):
                rel[i, t + 1] = record.gaussian.sample(rng) if stochastic else record.gaussian.mean
            positions[:, t + 1] = origin + rel[:, t + 1]
            velocities[:, t + 1] = (positions[:, t + 1] - positions[:, t]) / sample.time_step(t + 1)
            predictions[:, t + 1 - obs] = positions[:, t + 1]
        return predictions

    def _log_social(self, sample: SequenceSample, t: int, records: List[StepRecord],
                    social_log: List[Dict[str, Any]]) -> None:
        for i, record in enumerate(records):
            norms = social_cell_norms(record.social, self.dims.geometry)
            for (px, py), value in np.ndenumerate(norms):
                if value > 0.0:
                    social_log.append({
                        "sample_id": sample.sample_id, "frame": int(sample.frames[t]),
                        "ped_id": sample.ped_ids[i], "cell_x": int(px), "cell_y": int(py), "norm": float(value),
                    })

    # ------------------------------------------
    # Checkpoint
    # ------------------------------------------
    def header(self) -> Dict[str, Any]:
        return {
            "dims": self.dims.to_dict(),
            "attention_input": self.attention_input,
            "dropout": self.dropout_rate,
            "mode": self.mode,
        }

    def save(self, path: str, extra: Optional[Dict[str, Any]] = None) -> str:
        """Simpan checkpoint dengan header model + metadata tambahan"""
        header = self.header()
        header.update(extra or {})
        return save_checkpoint(path, self.store, header)

    @classmethod
    def load(cls, path: str, mode: Optional[str] = None, scores: Optional[ScoreTable] = None,
             dims: Optional[ModelDims] = None) -> "AttentionSocialLSTM":
        """
        Muat model dari checkpoint

        Args:
            path: Path checkpoint
            mode: Override mode (default dari header)
            scores: Tabel skor beku
            dims: Dimensi yang diharapkan; harus sama dengan header

        Returns:
            AttentionSocialLSTM (dropout 0)
        """
        header, tensors = load_checkpoint(path)
        try:
            saved_dims = ModelDims(**header["dims"])
        except (KeyError, TypeError) as exc:
            raise CheckpointError(f"{path}: invalid model header ({exc})") from None
        if dims is not None and dims != saved_dims:
            raise CheckpointError(f"{path}: checkpoint dims {saved_dims.to_dict()} do not match {dims.to_dict()}")
        attention_input = header.get("attention_input", "scores")

        store = init_params(saved_dims, 0, attention_input)
        for name, shape in store.shapes().items():
            if name not in tensors or tensors[name].shape != shape:
                raise CheckpointError(f"{path}: tensor {name!r} missing or has wrong shape")
        unknown = set(tensors) - set(store.params)
        if unknown:
            raise CheckpointError(f"{path}: unexpected tensors {sorted(unknown)}")
        store.load_state_dict(tensors)
        logger.info(f"Loaded checkpoint {path} ({store.num_parameters()} parameters)")
        return cls(store, saved_dims, mode or header.get("mode", "attention"), attention_input,
                   scores=scores)
