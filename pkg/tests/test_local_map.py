"""
Unit Tests untuk Local Map
"""

import unittest
import numpy as np
import sys
import os

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.local_map import (
    AgentState, LocalMap, relative_state, local_map_cell, build_local_map,
    scene_local_maps, local_maps_frame
)
from src.utils import DimensionError


class TestRelativeState(unittest.TestCase):
    """Test posisi relatif"""

    def test_same_position(self):
        """Neighbor di posisi target -> (0, 0)"""
        rel, _ = relative_state(AgentState(1, 3.0, 4.0), AgentState(2, 3.0, 4.0))
        np.testing.assert_array_equal(rel, [0.0, 0.0])

    def test_subtraction(self):
        """Target (1, 1), neighbor (2, 3) -> (1, 2)"""
        rel, velocity = relative_state(AgentState(1, 1.0, 1.0), AgentState(2, 2.0, 3.0, 0.5, -0.5))
        np.testing.assert_array_equal(rel, [1.0, 2.0])
        np.testing.assert_array_equal(velocity, [0.5, -0.5])


class TestLocalMap(unittest.TestCase):
    """Test grid 4x4 occupancy + kecepatan"""

    def setUp(self):
        self.target = AgentState(1, 10.0, 20.0, 0.3, 0.3)

    def test_no_neighbors(self):
        """Tanpa neighbor semua 48 channel nol"""
        local_map = build_local_map(self.target, [])
        self.assertEqual(local_map.flatten().shape, (48,))
        self.assertFalse(np.any(local_map.flatten()))

    def test_single_neighbor_cell(self):
        """Relatif (0.4, 0.4) dengan kecepatan (1, 0) -> cell (2, 2)"""
        neighbor = AgentState(2, 10.4, 20.4, 1.0, 0.0)
        local_map = build_local_map(self.target, [neighbor])

        np.testing.assert_array_equal(local_map.grid[2, 2], [1.0, 1.0, 0.0])
        mask = np.ones((4, 4), dtype=bool)
        mask[2, 2] = False
        self.assertFalse(np.any(local_map.grid[mask]))

    def test_out_of_range(self):
        """Relatif (5, 0) di luar grid"""
        local_map = build_local_map(self.target, [AgentState(2, 15.0, 20.0, 1.0, 1.0)])
        self.assertFalse(np.any(local_map.flatten()))

    def test_edges(self):
        """Batas bawah inklusif, batas atas eksklusif"""
        self.assertEqual(local_map_cell(np.array([-2.0, -2.0])), (0, 0))
        self.assertEqual(local_map_cell(np.array([1.999, 0.0])), (3, 2))
        self.assertIsNone(local_map_cell(np.array([2.0, 0.0])))

    def test_target_excluded(self):
        """Target tidak dihitung di map-nya sendiri"""
        local_map = build_local_map(self.target, [self.target])
        self.assertFalse(np.any(local_map.flatten()))

    def test_accumulates_same_cell(self):
        """Dua neighbor di cell sama dijumlahkan"""
        neighbors = [AgentState(2, 10.1, 20.1, 1.0, 2.0), AgentState(3, 10.2, 20.3, 0.5, -1.0)]
        local_map = build_local_map(self.target, neighbors)
        np.testing.assert_allclose(local_map.grid[2, 2], [2.0, 1.5, 1.0])

    def test_flatten_layout(self):
        """Index flatten = (gx * G + gy) * 3 + channel"""
        local_map = LocalMap.empty()
        local_map.grid[1, 3, 2] = 7.0
        self.assertEqual(local_map.flatten()[(1 * 4 + 3) * 3 + 2], 7.0)

    def test_translation_invariant(self):
        """Translasi seluruh scene tidak mengubah map"""
        rng = np.random.default_rng(0)
        neighbors = [AgentState(i, *(rng.uniform(8.5, 11.5, 2) + [0, 10]), *rng.normal(size=2))
                     for i in range(2, 8)]
        before = build_local_map(self.target, neighbors).flatten()
        shifted = [n.translated(0.25, -0.5) for n in neighbors]
        after = build_local_map(self.target.translated(0.25, -0.5), shifted).flatten()
        np.testing.assert_allclose(before, after)


class TestSceneLocalMaps(unittest.TestCase):
    """Test versi vectorized"""

    def test_matches_per_target_maps(self):
        """Hasil sama dengan build_local_map per target"""
        rng = np.random.default_rng(4)
        positions = rng.uniform(0.0, 3.0, size=(7, 2))
        velocities = rng.normal(size=(7, 2))
        maps = scene_local_maps(positions, velocities)

        states = [AgentState(i, *positions[i], *velocities[i]) for i in range(7)]
        for i, target in enumerate(states):
            np.testing.assert_allclose(maps[i], build_local_map(target, states).flatten())

    def test_single_pedestrian(self):
        """Satu pejalan kaki -> map nol"""
        maps = scene_local_maps(np.zeros((1, 2)), np.zeros((1, 2)))
        self.assertEqual(maps.shape, (1, 48))
        self.assertFalse(np.any(maps))

    def test_shape_mismatch(self):
        """Shape posisi dan kecepatan harus (P, 2)"""
        with self.assertRaises(DimensionError):
            scene_local_maps(np.zeros((3, 2)), np.zeros((2, 2)))


def brute_force_occupancy(positions, size=4, cell=1.0):
    """Hitung neighbor per cell dengan membandingkan setiap pasangan ke batas setiap cell"""
    half = size * cell / 2.0
    n = len(positions)
    counts = np.zeros((n, size, size))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            dx = positions[j][0] - positions[i][0]
            dy = positions[j][1] - positions[i][1]
            for gx in range(size):
                for gy in range(size):
                    x_lo, y_lo = -half + gx * cell, -half + gy * cell
                    if x_lo <= dx < x_lo + cell and y_lo <= dy < y_lo + cell:
                        counts[i, gx, gy] += 1
    return counts


class TestOccupancyOracle(unittest.TestCase):
    """Bandingkan occupancy dengan hitungan brute-force pada scene acak"""

    def test_matches_brute_force_1000_scenes(self):
        """1000 scene acak: occupancy scene_local_maps dan build_local_map sama persis"""
        rng = np.random.default_rng(11)
        for _ in range(1000):
            n = int(rng.integers(1, 7))
            positions = rng.uniform(-3.0, 3.0, size=(n, 2))
            velocities = rng.normal(size=(n, 2))
            expected = brute_force_occupancy(positions)

            maps = scene_local_maps(positions, velocities).reshape(n, 4, 4, 3)
            np.testing.assert_array_equal(maps[..., 0], expected)

            states = [AgentState(i, *positions[i], *velocities[i]) for i in range(n)]
            target = int(rng.integers(0, n))
            occupancy = build_local_map(states[target], states).occupancy
            np.testing.assert_array_equal(occupancy, expected[target])


class TestLocalMapsFrame(unittest.TestCase):
    """Test dump per frame"""

    def test_rows_for_occupied_cells(self):
        """Satu baris per cell terisi"""
        states = [AgentState(1, 0.0, 0.0, 1.0, 0.0), AgentState(2, 0.5, 0.0, -1.0, 0.0)]
        df = local_maps_frame("TOY", 40, states)

        self.assertEqual(len(df), 2)
        self.assertEqual(list(df["ped_id"]), [1, 2])
        row = df[df["ped_id"] == 1].iloc[0]
        self.assertEqual((row["gx"], row["gy"]), (2, 2))
        self.assertEqual(row["vx_sum"], -1.0)

    def test_empty_frame(self):
        """Frame tanpa neighbor menghasilkan tabel kosong dengan kolom lengkap"""
        df = local_maps_frame("TOY", 0, [AgentState(1, 0.0, 0.0)])
        self.assertEqual(len(df), 0)
        self.assertIn("occupancy", df.columns)


if __name__ == '__main__':
    unittest.main()
