"""
Tensor Kernels untuk CrowdCast
Lapisan numerik minimal: primitive differentiable (linear, ReLU, softmax,
dropout, LSTM cell), ParamStore, RMSprop, dan finite-difference gradient check.
Semua tensor adalah numpy float64; forward mengembalikan cache untuk backward.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.utils import logger, DimensionError, ConfigError, NonFiniteError

Matrix = np.ndarray
LossFn = Callable[["ParamStore", bool], float]


# ==========================================
# CHECKS
# ==========================================
def check_finite(x: np.ndarray, what: str) -> None:
    """Raise NonFiniteError bila ada NaN/Inf"""
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"non-finite values in {what}")


def _require_shape(x: np.ndarray, shape: Tuple[int, ...], what: str) -> None:
    if x.shape != shape:
        raise DimensionError(f"{what}: expected shape {shape}, got {x.shape}")


# ==========================================
# LINEAR / RELU
# ==========================================
def linear_forward(x: Matrix, W: Matrix, b: Matrix) -> Matrix:
    """
    y = xW + b untuk satu baris (n,) atau batch baris (k, n)

    Args:
        x: Input (n,) atau (k, n)
        W: Bobot (n, m)
        b: Bias (m,)

    Returns:
        Output (m,) atau (k, m)
    """
    if W.ndim != 2:
        raise DimensionError(f"weight must be 2-D, got shape {W.shape}")
    if x.shape[-1] != W.shape[0]:
        raise DimensionError(f"input width {x.shape[-1]} does not match weight rows {W.shape[0]}")
    if b.shape != (W.shape[1],):
        raise DimensionError(f"bias shape {b.shape} does not match weight cols {W.shape[1]}")
    check_finite(x, "linear input")
    return x @ W + b


def linear_backward(dy: Matrix, x: Matrix, W: Matrix) -> Tuple[Matrix, Matrix, Matrix]:
    """
    Gradient dari linear_forward

    Returns:
        Tuple (dx, dW, db)
    """
    if dy.ndim == 1:
        return W @ dy, np.outer(x, dy), dy.copy()
    return dy @ W.T, x.T @ dy, dy.sum(axis=0)


def relu(x: Matrix) -> Matrix:
    """Elementwise max(0, x)"""
    return np.maximum(x, 0.0)


def relu_backward(dy: Matrix, x: Matrix) -> Matrix:
    """Gradient ReLU terhadap pre-activation x"""
    return dy * (x > 0.0)


def sigmoid(x: Matrix) -> Matrix:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


# ==========================================
# SOFTMAX
# ==========================================
def softmax(v: Matrix) -> Matrix:
    """
    Softmax stabil (dengan pengurangan maksimum)

    Args:
        v: Vector (k,) dengan k >= 1

    Returns:
        Probabilitas positif yang berjumlah 1
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"softmax needs a non-empty vector, got shape {v.shape}")
    check_finite(v, "softmax input")
    e = np.exp(v - v.max())
    return e / e.sum()


def softmax_backward(dp: Matrix, p: Matrix) -> Matrix:
    """Gradient softmax: p * (dp - <dp, p>)"""
    return p * (dp - np.dot(dp, p))


# ==========================================
# DROPOUT
# ==========================================
def dropout(x: Matrix, rate: float, training: bool,
            rng: Optional[np.random.Generator] = None) -> Tuple[Matrix, Optional[Matrix]]:
    """
    Inverted dropout

    Args:
        x: Input
        rate: Probabilitas drop, 0 <= rate < 1
        training: Mode training (False = identity)
        rng: Generator numpy (wajib saat training dengan rate > 0)

    Returns:
        Tuple (output, mask skala) - mask None bila identity
    """
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x, None
    if rng is None:
        raise ConfigError("dropout in training mode needs a random generator")
    keep = rng.random(x.shape) >= rate
    mask = keep / (1.0 - rate)
    return x * mask, mask


def dropout_backward(dy: Matrix, mask: Optional[Matrix]) -> Matrix:
    return dy if mask is None else dy * mask


# ==========================================
# LSTM CELL
# ==========================================
@dataclass
class LstmState:
    """Hidden dan cell state satu LSTM"""
    hidden: Matrix
    cell: Matrix

    @classmethod
    def zeros(cls, size: int) -> "LstmState":
        return cls(np.zeros(size), np.zeros(size))

    @property
    def size(self) -> int:
        return self.hidden.shape[0]


@dataclass
class LstmCache:
    x: Matrix
    h_prev: Matrix
    c_prev: Matrix
    i: Matrix
    f: Matrix
    g: Matrix
    o: Matrix
    c: Matrix
    tanh_c: Matrix


def lstm_cell(x: Matrix, state: LstmState, w_x: Matrix, w_h: Matrix,
              b: Matrix) -> Tuple[LstmState, LstmCache]:
    """
    Satu langkah LSTM, urutan gate i, f, g, o

    Args:
        x: Input (n,)
        state: State sebelumnya (H,)
        w_x: Bobot input (n, 4H)
        w_h: Bobot recurrent (H, 4H)
        b: Bias (4H,)

    Returns:
        Tuple (state baru, cache backward)
    """
    H = state.size
    if state.cell.shape != (H,):
        raise DimensionError(f"cell state shape {state.cell.shape} != hidden shape {(H,)}")
    _require_shape(w_h, (H, 4 * H), "lstm recurrent weight")
    if x.shape != (w_x.shape[0],):
        raise DimensionError(f"lstm input width {x.shape} does not match weight rows {w_x.shape[0]}")
    _require_shape(w_x, (w_x.shape[0], 4 * H), "lstm input weight")
    _require_shape(b, (4 * H,), "lstm bias")

    z = x @ w_x + state.hidden @ w_h + b
    i = sigmoid(z[:H])
    f = sigmoid(z[H:2 * H])
    g = np.tanh(z[2 * H:3 * H])
    o = sigmoid(z[3 * H:])
    c = f * state.cell + i * g
    tanh_c = np.tanh(c)
    h = o * tanh_c
    cache = LstmCache(x, state.hidden, state.cell, i, f, g, o, c, tanh_c)
    return LstmState(h, c), cache


def lstm_cell_backward(dh: Matrix, dc: Matrix, cache: LstmCache, w_x: Matrix,
                       w_h: Matrix) -> Tuple[Matrix, Matrix, Matrix, Matrix, Matrix, Matrix]:
    """
    Backward satu langkah LSTM

    Args:
        dh: Gradient terhadap hidden output
        dc: Gradient terhadap cell output (dari langkah berikutnya)
        cache: Cache dari lstm_cell
        w_x: Bobot input
        w_h: Bobot recurrent

    Returns:
        Tuple (dx, dh_prev, dc_prev, dw_x, dw_h, db)
    """
    do = dh * cache.tanh_c
    dc_total = dc + dh * cache.o * (1.0 - cache.tanh_c ** 2)
    di = dc_total * cache.g
    df = dc_total * cache.c_prev
    dg = dc_total * cache.i
    dc_prev = dc_total * cache.f

    dz = np.concatenate([
        di * cache.i * (1.0 - cache.i),
        df * cache.f * (1.0 - cache.f),
        dg * (1.0 - cache.g ** 2),
        do * cache.o * (1.0 - cache.o),
    ])
    dx = w_x @ dz
    dh_prev = w_h @ dz
    return dx, dh_prev, dc_prev, np.outer(cache.x, dz), np.outer(cache.h_prev, dz), dz


# ==========================================
# PARAMETER STORE
# ==========================================
def init_uniform(rng: np.random.Generator, fan_in: int, shape: Tuple[int, ...]) -> Matrix:
    """Inisialisasi uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))"""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class ParamStore:
    """
    Penyimpanan parameter bernama beserta gradient dan momen RMSprop
    """

    def __init__(self):
        self.params: Dict[str, Matrix] = {}
        self.grads: Dict[str, Matrix] = {}
        self.moments: Dict[str, Matrix] = {}

    def add(self, name: str, value: Matrix) -> Matrix:
        """
        Tambah parameter baru

        Args:
            name: Nama unik parameter
            value: Nilai awal

        Returns:
            Parameter yang disimpan
        """
        if name in self.params:
            raise ConfigError(f"duplicate parameter name {name!r}")
        value = np.array(value, dtype=np.float64)
        check_finite(value, name)
        self.params[name] = value
        self.grads[name] = np.zeros_like(value)
        self.moments[name] = np.zeros_like(value)
        return value

    def __getitem__(self, name: str) -> Matrix:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def __iter__(self) -> Iterator[str]:
        return iter(self.params)

    def __len__(self) -> int:
        return len(self.params)

    def set(self, name: str, value: Matrix) -> None:
        """Ganti nilai parameter (shape harus sama)"""
        value = np.array(value, dtype=np.float64)
        _require_shape(value, self.params[name].shape, name)
        self.params[name] = value

    def accumulate(self, name: str, grad: Matrix) -> None:
        """Tambahkan gradient ke akumulator parameter"""
        _require_shape(grad, self.grads[name].shape, f"gradient of {name}")
        self.grads[name] = self.grads[name] + grad

    def zero_grad(self) -> None:
        for name in self.grads:
            self.grads[name] = np.zeros_like(self.params[name])

    def scale_grads(self, factor: float) -> None:
        for name in self.grads:
            self.grads[name] = self.grads[name] * factor

    def grad_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(g * g)) for g in self.grads.values())))

    def clip_grad_norm(self, max_norm: float) -> float:
        """
        Clip gradient berdasarkan global norm

        Args:
            max_norm: Batas norm

        Returns:
            Norm sebelum clipping
        """
        norm = self.grad_norm()
        if np.isfinite(norm) and norm > max_norm:
            self.scale_grads(max_norm / norm)
        return norm

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: p.shape for name, p in self.params.items()}

    def state_dict(self) -> Dict[str, Matrix]:
        return {name: p.copy() for name, p in self.params.items()}

    def load_state_dict(self, state: Dict[str, Matrix]) -> None:
        """Muat nilai parameter; nama dan shape harus identik"""
        missing = set(self.params) - set(state)
        unknown = set(state) - set(self.params)
        if missing or unknown:
            raise DimensionError(f"parameter set mismatch: missing={sorted(missing)} unknown={sorted(unknown)}")
        for name, value in state.items():
            self.set(name, value)


# ==========================================
# OPTIMIZER
# ==========================================
def rmsprop_step(store: ParamStore, lr: float, decay: float = 0.99, eps: float = 1e-8) -> None:
    """
    Satu langkah RMSprop lalu kosongkan gradient

    Args:
        store: ParamStore dengan gradient terisi
        lr: Learning rate
        decay: Faktor peluruhan momen kedua
        eps: Konstanta stabilitas
    """
    for name in store.params:
        g = store.grads[name]
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient for parameter {name!r}")
        s = decay * store.moments[name] + (1.0 - decay) * g * g
        store.moments[name] = s
        store.params[name] = store.params[name] - lr * g / (np.sqrt(s) + eps)
    store.zero_grad()


# ==========================================
# GRADIENT CHECK
# ==========================================
def relative_error(analytic: float, numeric: float, floor: float = 1e-4) -> float:
    """|a - n| / max(|a|, |n|, floor)"""
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def grad_check_report(loss_fn: LossFn, store: ParamStore, h: float = 1e-5,
                      names: Optional[Sequence[str]] = None,
                      max_entries: Optional[int] = None,
                      rng: Optional[np.random.Generator] = None,
                      floor: float = 1e-4) -> Dict[str, float]:
    """
    Bandingkan gradient analitik dengan central difference per parameter

    Args:
        loss_fn: Callable(store, with_grad) -> loss; with_grad=True mengisi store.grads
        store: ParamStore yang dicek
        h: Langkah finite difference
        names: Subset parameter (default semua)
        max_entries: Batas entri yang dicek per parameter (default semua)
        rng: Generator untuk memilih entri
        floor: Batas bawah penyebut error relatif

    Returns:
        Dictionary nama parameter -> error relatif terburuk
    """
    names = list(names) if names is not None else list(store.params)
    rng = rng if rng is not None else np.random.default_rng(0)

    store.zero_grad()
    loss_fn(store, True)
    analytic = {name: store.grads[name].copy() for name in names}
    store.zero_grad()

    report: Dict[str, float] = {}
    for name in names:
        original = store.params[name]
        size = original.size
        if max_entries is not None and size > max_entries:
            entries = np.sort(rng.choice(size, size=max_entries, replace=False))
        else:
            entries = np.arange(size)

        worst = 0.0
        for k in entries:
            plus = original.copy()
            plus.flat[k] += h
            store.params[name] = plus
            f_plus = loss_fn(store, False)

            minus = original.copy()
            minus.flat[k] -= h
            store.params[name] = minus
            f_minus = loss_fn(store, False)

            store.params[name] = original
            numeric = (f_plus - f_minus) / (2.0 * h)
            worst = max(worst, relative_error(float(analytic[name].flat[k]), numeric, floor))
        report[name] = worst
        logger.debug(f"grad_check {name}: {len(entries)} entries, worst rel error {worst:.3e}")
    return report


def grad_check(loss_fn: LossFn, store: ParamStore, h: float = 1e-5, tol: float = 1e-4,
               **kwargs) -> float:
    """
    Gradient check seluruh parameter

    Args:
        loss_fn: Callable(store, with_grad) -> loss (deterministik, dropout off)
        store: ParamStore
        h: Langkah finite difference
        tol: Toleransi (hanya untuk logging)

    Returns:
        Error relatif terburuk
    """
    report = grad_check_report(loss_fn, store, h=h, **kwargs)
    worst = max(report.values()) if report else 0.0
    status = "ok" if worst < tol else "FAILED"
    logger.info(f"grad_check over {len(report)} parameter(s): worst {worst:.3e} ({status}, tol {tol:g})")
    return worst


def stack_rows(rows: List[Matrix], width: int) -> Matrix:
    """Gabungkan vector menjadi matrix (k, width); k=0 menghasilkan (0, width)"""
    if not rows:
        return np.zeros((0, width))
    return np.vstack(rows)
