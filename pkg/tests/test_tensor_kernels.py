"""
Unit Tests untuk Tensor Kernels
"""

import unittest
import numpy as np
import sys
import os

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.tensor_kernels import (
    linear_forward, linear_backward, relu, relu_backward, softmax, softmax_backward,
    dropout, LstmState, lstm_cell, lstm_cell_backward, ParamStore, rmsprop_step, grad_check,
    grad_check_report, relative_error, init_uniform, stack_rows
)
from src.predictor import AttentionSocialLSTM, ModelDims
from src.utils import DimensionError, NonFiniteError, ConfigError


class TestMatrixPrimitives(unittest.TestCase):
    """Test linear, ReLU, dan softmax"""

    def test_linear_rejects_non_finite_input(self):
        """NaN/Inf di input linear langsung ditolak"""
        W, b = np.ones((2, 3)), np.zeros(3)
        with self.assertRaises(NonFiniteError):
            linear_forward(np.array([1.0, float("nan")]), W, b)
        with self.assertRaises(NonFiniteError):
            linear_forward(np.array([[1.0, 2.0], [float("inf"), 0.0]]), W, b)

    def test_model_stops_at_non_finite_position(self):
        """Posisi NaN berhenti di embedding, bukan di output LSTM"""
        dims = ModelDims(embedding_dim=2, hidden_dim=3)
        model = AttentionSocialLSTM.create(dims, mode="social")
        with self.assertRaisesRegex(NonFiniteError, "linear input"):
            model.embed_inputs(np.array([np.nan, 0.0]), None, np.zeros(dims.social_dim))

    def test_linear_dimension_mismatch(self):
        """Lebar input harus sama dengan baris bobot"""
        with self.assertRaises(DimensionError):
            linear_forward(np.ones(3), np.ones((4, 2)), np.zeros(2))
        with self.assertRaises(DimensionError):
            linear_forward(np.ones(4), np.ones((4, 2)), np.zeros(3))

    def test_linear_values(self):
        """y = xW + b"""
        W = np.array([[1.0, 2.0], [3.0, 4.0]])
        y = linear_forward(np.array([1.0, 1.0]), W, np.array([0.5, -0.5]))
        np.testing.assert_allclose(y, [4.5, 5.5])

    def test_linear_hand_examples(self):
        """Identity, bobot nol, dan perkalian manual"""
        np.testing.assert_allclose(linear_forward(np.array([1.0, 2.0]), np.eye(2), np.zeros(2)), [1.0, 2.0])
        np.testing.assert_allclose(linear_forward(np.array([3.0, -4.0]), np.zeros((2, 2)), np.zeros(2)), [0.0, 0.0])
        W = np.array([[1.0, 0.0], [1.0, 1.0]])
        np.testing.assert_allclose(linear_forward(np.array([1.0, 2.0]), W, np.array([0.5, 0.5])), [3.5, 2.5])

    def test_linear_backward_shapes(self):
        """Gradient batch punya shape yang benar"""
        x = np.ones((5, 3))
        W = np.ones((3, 2))
        dx, dW, db = linear_backward(np.ones((5, 2)), x, W)
        self.assertEqual(dx.shape, (5, 3))
        self.assertEqual(dW.shape, (3, 2))
        np.testing.assert_allclose(db, [5.0, 5.0])

    def test_relu(self):
        """ReLU dan gradient-nya"""
        x = np.array([-1.0, 0.0, 2.0])
        np.testing.assert_allclose(relu(x), [0.0, 0.0, 2.0])
        np.testing.assert_allclose(relu(np.array([-1e9, 1e-12])), [0.0, 1e-12])
        np.testing.assert_allclose(relu_backward(np.ones(3), x), [0.0, 0.0, 1.0])

    def test_softmax_sums_to_one(self):
        """Softmax positif dan berjumlah 1"""
        p = softmax(np.array([0.3, -1.2, 2.0, 0.0]))
        self.assertAlmostEqual(p.sum(), 1.0, places=12)
        self.assertTrue(np.all(p > 0))

    def test_softmax_stable_large_values(self):
        """Nilai besar tidak overflow"""
        p = softmax(np.array([1000.0, 1000.0]))
        np.testing.assert_allclose(p, [0.5, 0.5])

    def test_softmax_log_two(self):
        """[0, ln 2] -> [1/3, 2/3]"""
        np.testing.assert_allclose(softmax(np.array([0.0, np.log(2.0)])), [1 / 3, 2 / 3])

    def test_softmax_single_element(self):
        """Satu elemen selalu 1"""
        np.testing.assert_allclose(softmax(np.array([-7.0])), [1.0])

    def test_softmax_empty(self):
        """Vector kosong ditolak"""
        with self.assertRaises(DimensionError):
            softmax(np.array([]))

    def test_softmax_backward_zero_sum(self):
        """Gradient softmax berjumlah nol"""
        p = softmax(np.array([0.1, 0.2, 0.7]))
        dv = softmax_backward(np.array([1.0, -2.0, 0.5]), p)
        self.assertAlmostEqual(dv.sum(), 0.0, places=12)


class TestDropout(unittest.TestCase):
    """Test inverted dropout"""

    def test_eval_identity(self):
        """Mode evaluasi tidak mengubah input"""
        x = np.arange(5.0)
        y, mask = dropout(x, 0.5, training=False)
        self.assertIs(y, x)
        self.assertIsNone(mask)

    def test_training_scaling(self):
        """Elemen yang tersisa diskalakan 1/(1-rate)"""
        x = np.ones(1000)
        y, mask = dropout(x, 0.5, training=True, rng=np.random.default_rng(0))
        kept = y[y > 0]
        np.testing.assert_allclose(kept, 2.0)
        self.assertTrue(300 < len(kept) < 700)

    def test_training_mask_reproducible(self):
        """Seed sama menghasilkan mask sama; rata-rata terjaga"""
        x = np.ones(100000)
        y1, _ = dropout(x, 0.5, training=True, rng=np.random.default_rng(7))
        y2, _ = dropout(x, 0.5, training=True, rng=np.random.default_rng(7))
        np.testing.assert_array_equal(y1, y2)
        self.assertAlmostEqual(y1.mean(), 1.0, delta=0.1)

    def test_invalid_rate(self):
        """Rate di luar [0, 1) ditolak"""
        with self.assertRaises(ConfigError):
            dropout(np.ones(2), 1.0, training=True, rng=np.random.default_rng(0))

    def test_training_needs_rng(self):
        """Training dengan rate > 0 butuh generator"""
        with self.assertRaises(ConfigError):
            dropout(np.ones(2), 0.5, training=True)


class TestLstmCell(unittest.TestCase):
    """Test LSTM cell"""

    def test_zero_weights(self):
        """Bobot nol: semua gate 0.5, candidate 0"""
        H, n = 3, 2
        state = LstmState(np.zeros(H), np.ones(H))
        new, _ = lstm_cell(np.ones(n), state, np.zeros((n, 4 * H)), np.zeros((H, 4 * H)), np.zeros(4 * H))
        np.testing.assert_allclose(new.cell, 0.5 * np.ones(H))
        np.testing.assert_allclose(new.hidden, 0.5 * np.tanh(0.5) * np.ones(H))
        self.assertAlmostEqual(new.hidden[0], 0.2311, places=4)

    def test_zero_everything(self):
        """Bobot nol dan state nol menghasilkan state nol"""
        new, _ = lstm_cell(np.ones(2), LstmState.zeros(3), np.zeros((2, 12)), np.zeros((3, 12)), np.zeros(12))
        np.testing.assert_array_equal(new.hidden, np.zeros(3))
        np.testing.assert_array_equal(new.cell, np.zeros(3))

    def test_shape_mismatch(self):
        """Bobot recurrent harus (H, 4H)"""
        with self.assertRaises(DimensionError):
            lstm_cell(np.ones(2), LstmState.zeros(3), np.zeros((2, 12)), np.zeros((3, 8)), np.zeros(12))

    def test_input_width_mismatch(self):
        """Lebar input harus sama dengan baris w_x"""
        with self.assertRaises(DimensionError):
            lstm_cell(np.ones(5), LstmState.zeros(3), np.zeros((2, 12)), np.zeros((3, 12)), np.zeros(12))

    def test_backward_matches_finite_difference(self):
        """BPTT lima langkah lolos gradient check"""
        rng = np.random.default_rng(1)
        n, H, T = 3, 4, 5
        store = ParamStore()
        store.add("w_x", init_uniform(rng, n, (n, 4 * H)))
        store.add("w_h", init_uniform(rng, H, (H, 4 * H)))
        store.add("b", init_uniform(rng, H, (4 * H,)))
        xs = rng.normal(size=(T, n))
        targets = rng.normal(size=(T, H))

        def loss_fn(s, with_grad):
            state = LstmState.zeros(H)
            caches, hiddens = [], []
            for t in range(T):
                state, cache = lstm_cell(xs[t], state, s["w_x"], s["w_h"], s["b"])
                caches.append(cache)
                hiddens.append(state.hidden)
            loss = 0.5 * sum(float(np.sum((h - y) ** 2)) for h, y in zip(hiddens, targets))
            if with_grad:
                dh_next, dc_next = np.zeros(H), np.zeros(H)
                for t in reversed(range(T)):
                    dh = hiddens[t] - targets[t] + dh_next
                    _, dh_next, dc_next, dwx, dwh, db = lstm_cell_backward(
                        dh, dc_next, caches[t], s["w_x"], s["w_h"])
                    s.accumulate("w_x", dwx)
                    s.accumulate("w_h", dwh)
                    s.accumulate("b", db)
            return loss

        worst = grad_check(loss_fn, store, h=1e-5, tol=1e-5)
        self.assertLess(worst, 1e-5)


class TestParamStore(unittest.TestCase):
    """Test ParamStore dan RMSprop"""

    def setUp(self):
        self.store = ParamStore()
        self.store.add("w", np.array([1.0, -1.0]))
        self.store.add("b", np.array([0.0]))

    def test_duplicate_name(self):
        """Nama parameter unik"""
        with self.assertRaises(ConfigError):
            self.store.add("w", np.zeros(2))

    def test_accumulate_shape(self):
        """Gradient harus sama shape-nya"""
        with self.assertRaises(DimensionError):
            self.store.accumulate("w", np.zeros(3))

    def test_num_parameters(self):
        """Hitung jumlah skalar"""
        self.assertEqual(self.store.num_parameters(), 3)
        self.assertEqual(len(self.store), 2)

    def test_clip_grad_norm(self):
        """Global norm di-clip"""
        self.store.accumulate("w", np.array([3.0, 0.0]))
        self.store.accumulate("b", np.array([4.0]))
        norm = self.store.clip_grad_norm(1.0)
        self.assertAlmostEqual(norm, 5.0)
        self.assertAlmostEqual(self.store.grad_norm(), 1.0)

    def test_rmsprop_step(self):
        """Satu langkah RMSprop dari momen nol"""
        self.store.accumulate("w", np.array([2.0, 0.0]))
        rmsprop_step(self.store, lr=0.01, decay=0.99, eps=1e-8)

        # s = 0.01 * 4 = 0.04 -> update = 0.01 * 2 / 0.2
        self.assertAlmostEqual(self.store["w"][0], 0.9, places=6)
        self.assertEqual(self.store["w"][1], -1.0)
        self.assertEqual(self.store.grad_norm(), 0.0)

    def test_rmsprop_scalar_first_step(self):
        """theta=0, g=2, lr=0.003 -> sekitar -0.03"""
        store = ParamStore()
        store.add("theta", np.zeros(1))
        store.accumulate("theta", np.array([2.0]))
        rmsprop_step(store, lr=0.003, decay=0.99, eps=1e-8)
        expected = -0.003 * 2.0 / (np.sqrt(0.01 * 4.0) + 1e-8)
        self.assertAlmostEqual(store["theta"][0], expected, places=12)
        self.assertAlmostEqual(store["theta"][0], -0.03, places=6)

    def test_rmsprop_zero_gradient(self):
        """Gradient nol tidak mengubah parameter"""
        before = self.store.state_dict()
        rmsprop_step(self.store, lr=0.01)
        for name in before:
            np.testing.assert_array_equal(self.store[name], before[name])

    def test_rmsprop_non_finite(self):
        """Gradient NaN menghentikan update"""
        self.store.accumulate("w", np.array([np.nan, 0.0]))
        with self.assertRaises(NonFiniteError):
            rmsprop_step(self.store, lr=0.01)

    def test_load_state_dict_mismatch(self):
        """Set parameter harus identik"""
        with self.assertRaises(DimensionError):
            self.store.load_state_dict({"w": np.zeros(2)})
        with self.assertRaises(DimensionError):
            self.store.load_state_dict({"w": np.zeros(3), "b": np.zeros(1)})


class TestGradCheck(unittest.TestCase):
    """Test finite-difference gradient check"""

    def test_relative_error_floor(self):
        """Penyebut tidak lebih kecil dari floor"""
        self.assertAlmostEqual(relative_error(0.0, 1e-6, floor=1e-4), 1e-2)
        self.assertAlmostEqual(relative_error(2.0, 1.0), 0.5)

    def test_detects_wrong_gradient(self):
        """Gradient yang salah terdeteksi"""
        store = ParamStore()
        store.add("w", np.array([0.5, -0.3]))

        def loss_fn(s, with_grad):
            if with_grad:
                s.accumulate("w", 3.0 * s["w"])
            return float(np.sum(s["w"] ** 2))

        report = grad_check_report(loss_fn, store)
        self.assertGreater(report["w"], 0.1)

    def test_linear_relu_chain(self):
        """Linear -> ReLU -> linear lolos gradient check"""
        rng = np.random.default_rng(3)
        store = ParamStore()
        store.add("W1", init_uniform(rng, 4, (4, 5)))
        store.add("b1", init_uniform(rng, 4, (5,)))
        store.add("W2", init_uniform(rng, 5, (5, 2)))
        store.add("b2", np.zeros(2))
        x = rng.normal(size=(3, 4))

        def loss_fn(s, with_grad):
            pre = linear_forward(x, s["W1"], s["b1"])
            hidden = relu(pre)
            out = linear_forward(hidden, s["W2"], s["b2"])
            if with_grad:
                d_hidden, dW2, db2 = linear_backward(out, hidden, s["W2"])
                _, dW1, db1 = linear_backward(relu_backward(d_hidden, pre), x, s["W1"])
                for name, g in (("W1", dW1), ("b1", db1), ("W2", dW2), ("b2", db2)):
                    s.accumulate(name, g)
            return 0.5 * float(np.sum(out ** 2))

        self.assertLess(grad_check(loss_fn, store, h=1e-5, tol=1e-6), 1e-6)

    def test_stack_rows_empty(self):
        """Tanpa baris menghasilkan (0, width)"""
        self.assertEqual(stack_rows([], 4).shape, (0, 4))


if __name__ == '__main__':
    unittest.main()
