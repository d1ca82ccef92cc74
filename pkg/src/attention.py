"""
Attention Module untuk CrowdCast
Skor perhatian human-human: embed pasangan (target, neighbor, local map neighbor),
gabungkan dengan rata-rata embedding, skor skalar, softmax atas neighbor
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.local_map import AgentState, build_local_map, scene_local_maps
from src.tensor_kernels import (
    ParamStore, linear_forward, linear_backward, relu, relu_backward,
    softmax, softmax_backward, init_uniform, stack_rows
)
from src.utils import logger, DimensionError, ParseError, CrowdcastError, read_csv_with_header, export_to_csv

PREFIX = "attention"
LAYERS = ("embed1", "embed2", "score1", "score2")
SCORE_COLUMNS = ["dataset", "frame", "target_ped", "neighbor_ped", "alpha"]
NORMALIZATION_TOL = 1e-6


@dataclass
class AttentionScores:
    """Bobot perhatian target terhadap neighbor-nya (urutan mengikuti neighbor_ids)"""
    target: int
    neighbor_ids: Tuple[int, ...]
    weights: np.ndarray

    @classmethod
    def empty(cls, target: int) -> "AttentionScores":
        return cls(target, (), np.zeros(0))

    @property
    def is_empty(self) -> bool:
        return len(self.neighbor_ids) == 0

    def as_dict(self) -> Dict[int, float]:
        return {ped: float(w) for ped, w in zip(self.neighbor_ids, self.weights)}


@dataclass
class AttentionCache:
    order: np.ndarray
    features: np.ndarray
    z1: np.ndarray
    a1: np.ndarray
    z2: np.ndarray
    embeddings: np.ndarray
    context: np.ndarray
    z3: np.ndarray
    a3: np.ndarray
    weights: np.ndarray


def pair_feature_dim(map_size: int) -> int:
    """vel target (2) + posisi relatif neighbor (2) + vel neighbor (2) + local map"""
    return 6 + map_size * map_size * 3


def init_attention_params(store: ParamStore, rng: np.random.Generator, feature_dim: int,
                          hidden_dim: int = 100, embedding_dim: int = 50, mlp_dim: int = 100) -> None:
    """
    Inisialisasi parameter attention

    Args:
        store: ParamStore tujuan
        rng: Generator numpy
        feature_dim: Lebar PairFeature
        hidden_dim: Lebar layer embed pertama
        embedding_dim: Lebar embedding pasangan
        mlp_dim: Lebar MLP skor
    """
    shapes = {
        "embed1": (feature_dim, hidden_dim),
        "embed2": (hidden_dim, embedding_dim),
        "score1": (2 * embedding_dim, mlp_dim),
        "score2": (mlp_dim, 1),
    }
    for layer in LAYERS:
        fan_in, fan_out = shapes[layer]
        store.add(f"{PREFIX}.{layer}.weight", init_uniform(rng, fan_in, (fan_in, fan_out)))
        store.add(f"{PREFIX}.{layer}.bias", np.zeros(fan_out))


def _layer(store: ParamStore, layer: str) -> Tuple[np.ndarray, np.ndarray]:
    return store[f"{PREFIX}.{layer}.weight"], store[f"{PREFIX}.{layer}.bias"]


# ==========================================
# FEATURES
# ==========================================
def pair_feature(target: AgentState, neighbor: AgentState, neighbor_map: np.ndarray) -> np.ndarray:
    """
    PairFeature satu pasangan

    Args:
        target: State target (origin)
        neighbor: State neighbor
        neighbor_map: Local map berpusat di neighbor (flat)

    Returns:
        Vector [vel target, posisi relatif neighbor, vel neighbor, map]
    """
    return np.concatenate([
        target.velocity,
        neighbor.position - target.position,
        neighbor.velocity,
        np.asarray(neighbor_map, dtype=np.float64).reshape(-1),
    ])


def scene_pair_features(target_index: int, neighbor_indices: Sequence[int], positions: np.ndarray,
                        velocities: np.ndarray, maps: np.ndarray) -> np.ndarray:
    """PairFeature (K, F) untuk satu target dari array scene (posisi, kecepatan, map per pejalan kaki)"""
    nbr = np.asarray(neighbor_indices, dtype=np.int64)
    k = len(nbr)
    return np.hstack([
        np.tile(velocities[target_index], (k, 1)),
        positions[nbr] - positions[target_index],
        velocities[nbr],
        maps[nbr],
    ]) if k else np.zeros((0, 6 + maps.shape[1]))


# ==========================================
# FORWARD / BACKWARD
# ==========================================
def embed_pair(feature: np.ndarray, store: ParamStore) -> np.ndarray:
    """
    Embedding pasangan: linear+ReLU dua kali (F -> 100 -> 50)

    Args:
        feature: PairFeature (F,) atau batch (K, F)
        store: ParamStore

    Returns:
        Embedding (50,) atau (K, 50)
    """
    w1, b1 = _layer(store, "embed1")
    if np.shape(feature)[-1] != w1.shape[0]:
        raise DimensionError(f"pair feature width {np.shape(feature)[-1]} != configured {w1.shape[0]}")
    w2, b2 = _layer(store, "embed2")
    return relu(linear_forward(relu(linear_forward(np.asarray(feature, dtype=np.float64), w1, b1)), w2, b2))


def attention_forward(neighbor_ids: Sequence[int], features: np.ndarray,
                      store: ParamStore) -> Tuple[np.ndarray, np.ndarray, Optional[AttentionCache]]:
    """
    Skor semua neighbor satu target

    Neighbor diproses urut ped_id naik; hasil dikembalikan dalam urutan input.

    Args:
        neighbor_ids: Ped id neighbor (K)
        features: PairFeature (K, F)
        store: ParamStore

    Returns:
        Tuple (bobot (K,), embedding (K, 50), cache); K=0 menghasilkan array kosong dan cache None
    """
    w1, b1 = _layer(store, "embed1")
    w2, b2 = _layer(store, "embed2")
    w3, b3 = _layer(store, "score1")
    w4, b4 = _layer(store, "score2")
    k = len(neighbor_ids)
    if k == 0:
        return np.zeros(0), np.zeros((0, w2.shape[1])), None
    if features.shape != (k, w1.shape[0]):
        raise DimensionError(f"pair features must be ({k}, {w1.shape[0]}), got {features.shape}")

    order = np.argsort(np.asarray(neighbor_ids, dtype=np.int64), kind="stable")
    x = features[order]
    z1 = linear_forward(x, w1, b1)
    a1 = relu(z1)
    z2 = linear_forward(a1, w2, b2)
    e = relu(z2)
    context = np.hstack([e, np.tile(e.mean(axis=0), (k, 1))])
    z3 = linear_forward(context, w3, b3)
    a3 = relu(z3)
    scores = linear_forward(a3, w4, b4)[:, 0]
    weights = softmax(scores)

    cache = AttentionCache(order, x, z1, a1, z2, e, context, z3, a3, weights)
    inverse = np.empty_like(order)
    inverse[order] = np.arange(k)
    return weights[inverse], e[inverse], cache


def attention_backward(d_weights: np.ndarray, d_embeddings: Optional[np.ndarray],
                       cache: AttentionCache, store: ParamStore) -> None:
    """
    Backward attention; gradient diakumulasi ke store

    Args:
        d_weights: Gradient bobot (K,) dalam urutan input
        d_embeddings: Gradient tambahan embedding (K, 50) dalam urutan input, atau None
        cache: Cache dari attention_forward
        store: ParamStore
    """
    w2, _ = _layer(store, "embed2")
    w3, _ = _layer(store, "score1")
    w4, _ = _layer(store, "score2")
    k = len(cache.order)
    emb_dim = cache.embeddings.shape[1]

    d_scores = softmax_backward(d_weights[cache.order], cache.weights)
    d_a3, dw4, db4 = linear_backward(d_scores[:, None], cache.a3, w4)
    d_context, dw3, db3 = linear_backward(relu_backward(d_a3, cache.z3), cache.context, w3)

    d_e = d_context[:, :emb_dim] + d_context[:, emb_dim:].sum(axis=0) / k
    if d_embeddings is not None:
        d_e = d_e + d_embeddings[cache.order]
    d_a1, dw2, db2 = linear_backward(relu_backward(d_e, cache.z2), cache.a1, w2)
    _, dw1, db1 = linear_backward(relu_backward(d_a1, cache.z1), cache.features, store[f"{PREFIX}.embed1.weight"])

    for layer, dw, db in (("embed1", dw1, db1), ("embed2", dw2, db2),
                          ("score1", dw3, db3), ("score2", dw4, db4)):
        store.accumulate(f"{PREFIX}.{layer}.weight", dw)
        store.accumulate(f"{PREFIX}.{layer}.bias", db)


def score_neighbors(target: AgentState, neighbors: Sequence[AgentState], store: ParamStore,
                    map_size: int = 4, map_cell: float = 1.0) -> AttentionScores:
    """
    Hitung AttentionScores target terhadap semua neighbor

    Local map setiap neighbor dibangun dari scene {target} + neighbors.

    Args:
        target: State target
        neighbors: State neighbor pada frame yang sama
        store: ParamStore
        map_size: Jumlah cell local map per sisi
        map_cell: Sisi cell local map

    Returns:
        AttentionScores (kosong bila tidak ada neighbor)
    """
    neighbors = [n for n in neighbors if n.ped_id != target.ped_id]
    if not neighbors:
        return AttentionScores.empty(target.ped_id)

    scene = sorted([target] + neighbors, key=lambda s: s.ped_id)
    features = stack_rows([
        pair_feature(target, n, build_local_map(n, scene, map_size, map_cell).flatten())
        for n in neighbors
    ], pair_feature_dim(map_size))
    ids = tuple(n.ped_id for n in neighbors)
    weights, _, _ = attention_forward(ids, features, store)
    return AttentionScores(target.ped_id, ids, weights)


def weighted_crowd_feature(weights: np.ndarray, embeddings: np.ndarray) -> np.ndarray:
    """
    Jumlah embedding berbobot sum_j alpha_j * e_j

    Args:
        weights: Bobot (K,)
        embeddings: Embedding (K, D)

    Returns:
        Vector (D,)
    """
    weights = np.asarray(weights, dtype=np.float64)
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if embeddings.ndim != 2 or weights.shape != (embeddings.shape[0],):
        raise DimensionError(f"{weights.shape[0]} weights for embeddings of shape {embeddings.shape}")
    return weights @ embeddings


def scene_attention(positions: np.ndarray, velocities: np.ndarray, ped_ids: Sequence[int],
                    store: ParamStore, map_size: int = 4,
                    map_cell: float = 1.0) -> List[AttentionScores]:
    """Skor untuk setiap target dalam satu frame (semua pejalan kaki lain sebagai neighbor)"""
    maps = scene_local_maps(positions, velocities, map_size, map_cell)
    results = []
    for i, ped in enumerate(ped_ids):
        others = [j for j in range(len(ped_ids)) if j != i]
        ids = tuple(int(ped_ids[j]) for j in others)
        if not others:
            results.append(AttentionScores.empty(int(ped)))
            continue
        features = scene_pair_features(i, others, positions, velocities, maps)
        weights, _, _ = attention_forward(ids, features, store)
        results.append(AttentionScores(int(ped), ids, weights))
    return results


# ==========================================
# FROZEN SCORE FILE
# ==========================================
def scores_to_frame(dataset: str, frame: int, scores: Sequence[AttentionScores]) -> pd.DataFrame:
    """Baris file skor untuk satu frame"""
    rows = [
        (dataset, int(frame), s.target, neighbor, float(w))
        for s in scores for neighbor, w in zip(s.neighbor_ids, s.weights)
    ]
    return pd.DataFrame(rows, columns=SCORE_COLUMNS)


class ScoreTable:
    """
    Skor attention beku dari file eksternal

    Kolom: dataset, frame, target_ped, neighbor_ped, alpha.
    Setiap (dataset, frame, target_ped) harus ternormalisasi (jumlah 1).
    """

    def __init__(self, df: pd.DataFrame):
        missing = [c for c in SCORE_COLUMNS if c not in df.columns]
        if missing:
            raise ParseError(f"scores file is missing columns {missing}")
        df = df[SCORE_COLUMNS].copy()
        if df["alpha"].isna().any() or (df["alpha"] < 0).any():
            raise ParseError("scores file contains missing or negative alpha values")
        if df.duplicated(["dataset", "frame", "target_ped", "neighbor_ped"]).any():
            raise ParseError("scores file contains duplicate (dataset, frame, target, neighbor) rows")

        sums = df.groupby(["dataset", "frame", "target_ped"])["alpha"].sum()
        bad = sums[(sums - 1.0).abs() > NORMALIZATION_TOL]
        if len(bad):
            key = bad.index[0]
            raise ParseError(f"scores for dataset={key[0]} frame={key[1]} target={key[2]} sum to {bad.iloc[0]:.9f}")

        self._lookup: Dict[Tuple[str, int, int], Dict[int, float]] = {}
        for (dataset, frame, target), group in df.groupby(["dataset", "frame", "target_ped"], sort=False):
            self._lookup[(str(dataset), int(frame), int(target))] = dict(
                zip(group["neighbor_ped"].astype(int), group["alpha"].astype(float))
            )
        self.header: Dict[str, str] = {}
        logger.info(f"Loaded frozen attention scores for {len(self._lookup)} (frame, target) pairs")

    @classmethod
    def load(cls, path: str) -> "ScoreTable":
        df, header = read_csv_with_header(path)
        table = cls(df)
        table.header = header
        return table

    def __len__(self) -> int:
        return len(self._lookup)

    def weights(self, dataset: str, frame: int, target: int, neighbor_ids: Sequence[int]) -> np.ndarray:
        """
        Bobot untuk subset neighbor, dinormalisasi ulang atas subset itu

        Returns:
            Bobot (K,) dalam urutan neighbor_ids
        """
        if not neighbor_ids:
            return np.zeros(0)
        record = self._lookup.get((dataset, int(frame), int(target)))
        if record is None:
            raise CrowdcastError(f"no frozen scores for dataset={dataset} frame={frame} target={target}")
        unknown = [n for n in neighbor_ids if int(n) not in record]
        if unknown:
            raise CrowdcastError(f"frozen scores for frame={frame} target={target} lack neighbors {unknown}")
        raw = np.array([record[int(n)] for n in neighbor_ids])
        total = raw.sum()
        if total <= 0.0:
            logger.warning(f"Zero frozen scores for frame={frame} target={target}; using uniform weights")
            return np.full(len(neighbor_ids), 1.0 / len(neighbor_ids))
        return raw / total


def write_scores(df: pd.DataFrame, path: str, header: Optional[Dict[str, object]] = None) -> str:
    """Tulis file skor dengan header audit"""
    return export_to_csv(df, path, header)
