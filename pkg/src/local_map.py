"""
Local Map untuk CrowdCast
Grid 4x4 berpusat di target: occupancy, jumlah vx, jumlah vy per cell
"""

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config.settings import MODEL_CONFIG
from src.utils import logger, DimensionError

CHANNELS = ("occupancy", "vx_sum", "vy_sum")


@dataclass(frozen=True)
class AgentState:
    """Posisi dan kecepatan satu pejalan kaki pada satu frame"""
    ped_id: int
    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def velocity(self) -> np.ndarray:
        return np.array([self.vx, self.vy])

    def translated(self, dx: float, dy: float) -> "AgentState":
        return AgentState(self.ped_id, self.x + dx, self.y + dy, self.vx, self.vy)


@dataclass
class LocalMap:
    """
    Grid (G, G, 3) diindeks [gx, gy, channel]

    Flatten row-major dengan channel paling dalam:
    index = (gx * G + gy) * 3 + channel
    """
    grid: np.ndarray

    @classmethod
    def empty(cls, size: int = MODEL_CONFIG["local_map_grid"]) -> "LocalMap":
        return cls(np.zeros((size, size, len(CHANNELS))))

    @property
    def size(self) -> int:
        return self.grid.shape[0]

    @property
    def occupancy(self) -> np.ndarray:
        return self.grid[:, :, 0]

    def flatten(self) -> np.ndarray:
        return self.grid.reshape(-1)


def relative_state(target: AgentState, neighbor: AgentState) -> Tuple[np.ndarray, np.ndarray]:
    """
    Posisi neighbor relatif terhadap target; kecepatan diteruskan apa adanya

    Returns:
        Tuple (posisi relatif, kecepatan neighbor)
    """
    return neighbor.position - target.position, neighbor.velocity


def local_map_cell(rel: np.ndarray, size: int = MODEL_CONFIG["local_map_grid"],
                   cell: float = MODEL_CONFIG["local_map_cell"]) -> Optional[Tuple[int, int]]:
    """
    Cell (gx, gy) untuk posisi relatif, atau None bila di luar [-G*cell/2, G*cell/2)
    """
    half = size * cell / 2.0
    gx = int(np.floor((rel[0] + half) / cell))
    gy = int(np.floor((rel[1] + half) / cell))
    if 0 <= gx < size and 0 <= gy < size:
        return gx, gy
    return None


def build_local_map(target: AgentState, neighbors: Iterable[AgentState],
                    size: int = MODEL_CONFIG["local_map_grid"],
                    cell: float = MODEL_CONFIG["local_map_cell"]) -> LocalMap:
    """
    Bangun local map untuk target

    Args:
        target: State target (pusat grid)
        neighbors: State pejalan kaki lain pada frame yang sama
        size: Jumlah cell per sisi
        cell: Panjang sisi cell

    Returns:
        LocalMap; neighbor di luar jangkauan dan target sendiri diabaikan
    """
    local_map = LocalMap.empty(size)
    for neighbor in neighbors:
        if neighbor.ped_id == target.ped_id:
            continue
        rel, velocity = relative_state(target, neighbor)
        index = local_map_cell(rel, size, cell)
        if index is None:
            continue
        local_map.grid[index[0], index[1]] += (1.0, velocity[0], velocity[1])
    return local_map


def scene_local_maps(positions: np.ndarray, velocities: np.ndarray,
                     size: int = MODEL_CONFIG["local_map_grid"],
                     cell: float = MODEL_CONFIG["local_map_cell"]) -> np.ndarray:
    """
    Local map untuk setiap pejalan kaki dalam satu frame sekaligus

    Args:
        positions: Posisi (P, 2)
        velocities: Kecepatan (P, 2)
        size: Jumlah cell per sisi
        cell: Panjang sisi cell

    Returns:
        Array (P, G*G*3); baris i = map berpusat di i, semua pejalan kaki lain dihitung
    """
    if positions.shape != velocities.shape or positions.ndim != 2 or positions.shape[1] != 2:
        raise DimensionError(f"positions {positions.shape} and velocities {velocities.shape} must be (P, 2)")

    n = positions.shape[0]
    maps = np.zeros((n, size * size, len(CHANNELS)))
    if n < 2:
        return maps.reshape(n, -1)

    half = size * cell / 2.0
    rel = positions[None, :, :] - positions[:, None, :]
    idx = np.floor((rel + half) / cell).astype(np.int64)
    valid = np.all((idx >= 0) & (idx < size), axis=2)
    np.fill_diagonal(valid, False)

    centers, others = np.nonzero(valid)
    slots = idx[centers, others, 0] * size + idx[centers, others, 1]
    values = np.column_stack([np.ones(len(others)), velocities[others]])
    np.add.at(maps, (centers, slots), values)
    return maps.reshape(n, -1)


def local_maps_frame(dataset: str, frame: int, states: Sequence[AgentState],
                     size: int = MODEL_CONFIG["local_map_grid"],
                     cell: float = MODEL_CONFIG["local_map_cell"]) -> pd.DataFrame:
    """Baris dump (cell yang terisi saja) untuk semua pejalan kaki satu frame"""
    rows: List[dict] = []
    for target in states:
        local_map = build_local_map(target, states, size, cell)
        for gx, gy in zip(*np.nonzero(local_map.occupancy)):
            occupancy, vx_sum, vy_sum = local_map.grid[gx, gy]
            rows.append({
                "dataset": dataset, "frame": frame, "ped_id": target.ped_id,
                "gx": int(gx), "gy": int(gy), "occupancy": int(occupancy),
                "vx_sum": vx_sum, "vy_sum": vy_sum,
            })
    if rows:
        logger.debug(f"Local maps for frame {frame}: {len(rows)} occupied cells")
    return pd.DataFrame(rows, columns=["dataset", "frame", "ped_id", "gx", "gy",
                                       "occupancy", "vx_sum", "vy_sum"])
