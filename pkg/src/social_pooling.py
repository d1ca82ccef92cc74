"""
Social Pooling untuk CrowdCast
Hidden state neighbor (t-1) diproyeksikan ke 64 channel, dijumlahkan ke grid
halus 32x32 berpusat di target, lalu di-sum-pool 8x8 menjadi 4x4 x 64 = 1024
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from config.settings import MODEL_CONFIG
from src.tensor_kernels import (
    ParamStore, linear_forward, linear_backward, relu, relu_backward, init_uniform
)
from src.utils import DimensionError

EMBED = "social.embed"


@dataclass(frozen=True)
class PoolGeometry:
    grid: int = MODEL_CONFIG["pool_grid"]
    window: int = MODEL_CONFIG["pool_window"]
    region_side: float = MODEL_CONFIG["pool_region_side"]

    @property
    def pooled(self) -> int:
        return self.grid // self.window

    @property
    def cell(self) -> float:
        return self.region_side / self.grid


@dataclass
class SocialCache:
    """Cache forward untuk backward social tensor"""
    order: np.ndarray
    hidden: np.ndarray
    pre_activation: np.ndarray
    slots: np.ndarray
    num_neighbors: int


def init_social_params(store: ParamStore, rng: np.random.Generator, hidden_dim: int,
                       channels: int) -> None:
    """Proyeksi hidden -> channel bersama untuk semua neighbor"""
    store.add(f"{EMBED}.weight", init_uniform(rng, hidden_dim, (hidden_dim, channels)))
    store.add(f"{EMBED}.bias", np.zeros(channels))


def pool_cell_index(target_position: np.ndarray, neighbor_position: np.ndarray,
                    region_side: float = MODEL_CONFIG["pool_region_side"],
                    grid: int = MODEL_CONFIG["pool_grid"]) -> Optional[Tuple[int, int]]:
    """
    Cell grid halus untuk neighbor

    Args:
        target_position: Posisi target (pusat region)
        neighbor_position: Posisi neighbor
        region_side: Sisi region persegi
        grid: Jumlah cell halus per sisi

    Returns:
        (gx, gy) dalam 0..grid-1, atau None bila di luar region
    """
    cell = region_side / grid
    rel = np.asarray(neighbor_position, dtype=np.float64) - np.asarray(target_position, dtype=np.float64)
    gx = int(np.floor((rel[0] + region_side / 2.0) / cell))
    gy = int(np.floor((rel[1] + region_side / 2.0) / cell))
    if 0 <= gx < grid and 0 <= gy < grid:
        return gx, gy
    return None


def build_social_tensor(target_position: np.ndarray, neighbor_ids: Sequence[int],
                        neighbor_positions: np.ndarray, neighbor_hidden: np.ndarray,
                        store: ParamStore,
                        geometry: PoolGeometry = PoolGeometry()) -> Tuple[np.ndarray, SocialCache]:
    """
    Bangun social tensor untuk satu target

    Args:
        target_position: Posisi target (2,)
        neighbor_ids: Ped id neighbor
        neighbor_positions: Posisi neighbor (K, 2)
        neighbor_hidden: Hidden state neighbor dari frame sebelumnya (K, H)
        store: ParamStore dengan proyeksi social.embed
        geometry: Geometri grid

    Returns:
        Tuple (tensor flat pooled*pooled*C, cache)
    """
    weight = store[f"{EMBED}.weight"]
    bias = store[f"{EMBED}.bias"]
    hidden_dim, channels = weight.shape
    k = len(neighbor_ids)
    neighbor_positions = np.asarray(neighbor_positions, dtype=np.float64).reshape(k, 2)
    neighbor_hidden = np.asarray(neighbor_hidden, dtype=np.float64)
    if neighbor_hidden.shape != (k, hidden_dim):
        raise DimensionError(f"neighbor hidden states must be ({k}, {hidden_dim}), got {neighbor_hidden.shape}")

    pooled = geometry.pooled
    tensor = np.zeros((pooled * pooled, channels))
    order = np.argsort(np.asarray(neighbor_ids, dtype=np.int64), kind="stable")

    rel = neighbor_positions[order] - np.asarray(target_position, dtype=np.float64)
    idx = np.floor((rel + geometry.region_side / 2.0) / geometry.cell).astype(np.int64)
    in_range = np.all((idx >= 0) & (idx < geometry.grid), axis=1) if k else np.zeros(0, dtype=bool)
    order = order[in_range]
    idx = idx[in_range]

    hidden = neighbor_hidden[order]
    pre_activation = linear_forward(hidden, weight, bias) if len(order) else np.zeros((0, channels))
    slots = (idx[:, 0] // geometry.window) * pooled + idx[:, 1] // geometry.window
    np.add.at(tensor, slots, relu(pre_activation))

    cache = SocialCache(order, hidden, pre_activation, slots, k)
    return tensor.reshape(-1), cache


def social_tensor_backward(d_tensor: np.ndarray, cache: SocialCache, store: ParamStore) -> np.ndarray:
    """
    Backward social tensor; gradient proyeksi diakumulasi ke store

    Returns:
        Gradient hidden neighbor (K, H) dalam urutan input
    """
    weight = store[f"{EMBED}.weight"]
    d_hidden = np.zeros((cache.num_neighbors, weight.shape[0]))
    if len(cache.order) == 0:
        return d_hidden

    d_cells = d_tensor.reshape(-1, weight.shape[1])
    d_pre = relu_backward(d_cells[cache.slots], cache.pre_activation)
    dh, dw, db = linear_backward(d_pre, cache.hidden, weight)
    store.accumulate(f"{EMBED}.weight", dw)
    store.accumulate(f"{EMBED}.bias", db)
    d_hidden[cache.order] = dh
    return d_hidden


def social_cell_norms(tensor: np.ndarray, geometry: PoolGeometry = PoolGeometry()) -> np.ndarray:
    """Norm L2 per cell pooled, shape (pooled, pooled)"""
    pooled = geometry.pooled
    return np.linalg.norm(tensor.reshape(pooled, pooled, -1), axis=2)
