"""Minimal dense reverse-mode automatic differentiation.

Tensors are strictly 2-D float64 arrays. Operations executed while a
Tape is active record their backward closures in execution order; the
backward pass replays them in exact reverse order. A tape is single-use:
a second backward without rebuilding the forward pass raises.

The op set is deliberately small: exactly what the transmission-aware
GCN needs (affine maps, ReLU, column concat, weighted neighbor sums,
row softmax, cross-entropy, Adam).
"""
from __future__ import annotations

import threading

import numpy as np

from .errors import DataError, GraphError, ShapeError, TrainingError

_tls = threading.local()


def _active_tape():
    return getattr(_tls, "tape", None)


class Tensor:
    """A (rows, cols) float64 array with an optional gradient buffer."""

    def __init__(self, data, requires_grad=False, name=None):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got shape {arr.shape}")
        self.data = arr
        self.requires_grad = requires_grad
        self.grad = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad = None

    def item(self):
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, got {self.shape}")
        return float(self.data[0, 0])

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag})"


def _accumulate(tensor, grad):
    if tensor.grad is None:
        tensor.grad = np.zeros_like(tensor.data)
    tensor.grad += grad


class Tape:
    """Ordered record of executed ops; context manager activating recording.

    Execution order is a topological order of the eager forward pass, so
    replaying the records reversed implements reverse-mode AD. One tape
    serves one forward/backward pair.
    """

    def __init__(self):
        self._records = []
        self._consumed = False

    def __len__(self):
        return len(self._records)

    def __enter__(self):
        if _active_tape() is not None:
            raise TrainingError("a tape is already active in this thread")
        _tls.tape = self
        return self

    def __exit__(self, exc_type, exc, tb):
        _tls.tape = None
        return False

    def record(self, backward_fn):
        self._records.append(backward_fn)

    def backward(self, loss):
        """Seed d(loss)/d(loss)=1 and propagate through all records."""
        if self._consumed:
            raise TrainingError("tape already consumed; rebuild the forward pass")
        if loss.data.size != 1:
            raise ShapeError(f"backward needs a scalar loss, got {loss.shape}")
        self._consumed = True
        loss.grad = np.ones_like(loss.data)
        for fn in reversed(self._records):
            fn()


def _record(backward_fn):
    tape = _active_tape()
    if tape is not None:
        tape.record(backward_fn)


def linear(x, w, b=None):
    """out = x @ w (+ b broadcast over rows). b is a (1, q) row or None."""
    if x.shape[1] != w.shape[0]:
        raise ShapeError(f"linear: x {x.shape} does not conform with w {w.shape}")
    out_data = x.data @ w.data
    if b is not None:
        if b.shape != (1, w.shape[1]):
            raise ShapeError(f"linear: bias {b.shape} must be (1, {w.shape[1]})")
        out_data = out_data + b.data
    out = Tensor(out_data)

    def backward():
        g = out.grad
        if g is None:
            return
        _accumulate(w, x.data.T @ g)
        _accumulate(x, g @ w.data.T)
        if b is not None:
            _accumulate(b, g.sum(axis=0, keepdims=True))

    _record(backward)
    return out


def relu(x):
    """Elementwise max(0, x); subgradient at 0 is 0."""
    mask = x.data > 0.0
    out = Tensor(np.where(mask, x.data, 0.0))

    def backward():
        if out.grad is None:
            return
        _accumulate(x, out.grad * mask)

    _record(backward)
    return out


def add(a, b):
    if a.shape != b.shape:
        raise ShapeError(f"add: shapes {a.shape} and {b.shape} differ")
    out = Tensor(a.data + b.data)

    def backward():
        if out.grad is None:
            return
        _accumulate(a, out.grad)
        _accumulate(b, out.grad)

    _record(backward)
    return out


def sub(a, b):
    if a.shape != b.shape:
        raise ShapeError(f"sub: shapes {a.shape} and {b.shape} differ")
    out = Tensor(a.data - b.data)

    def backward():
        if out.grad is None:
            return
        _accumulate(a, out.grad)
        _accumulate(b, -out.grad)

    _record(backward)
    return out


def concat_cols(a, b):
    """Column-wise concatenation; backward splits the gradient at a's width."""
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"concat_cols: row counts {a.shape[0]} and {b.shape[0]} differ")
    split = a.shape[1]
    out = Tensor(np.concatenate([a.data, b.data], axis=1))

    def backward():
        g = out.grad
        if g is None:
            return
        _accumulate(a, g[:, :split])
        if b.shape[1] > 0:
            _accumulate(b, g[:, split:])

    _record(backward)
    return out


def weighted_neighbor_sum(node_emb, edges):
    """out[v] = sum over edges (w -> v, e) of e * node_emb[w].

    `edges` is a sequence of (src, dst, weight) triples or an (E, 3) array.
    Equivalent to A @ X with A[v, w] = weight of edge w -> v.
    """
    n = node_emb.shape[0]
    arr = np.asarray(edges, dtype=np.float64)
    if arr.size == 0:
        src = dst = np.zeros(0, dtype=np.intp)
        wts = np.zeros(0)
    else:
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise GraphError(f"edges must be (E, 3) triples, got shape {arr.shape}")
        src = arr[:, 0].astype(np.intp)
        dst = arr[:, 1].astype(np.intp)
        wts = arr[:, 2]
        if not np.all(np.isfinite(wts)):
            raise GraphError("edge weights must be finite")
        if src.min(initial=0) < 0 or dst.min(initial=0) < 0 \
                or src.max(initial=-1) >= n or dst.max(initial=-1) >= n:
            raise GraphError(f"edge index out of range for {n} nodes")

    out_data = np.zeros_like(node_emb.data)
    np.add.at(out_data, dst, wts[:, None] * node_emb.data[src])
    out = Tensor(out_data)

    def backward():
        g = out.grad
        if g is None:
            return
        gx = np.zeros_like(node_emb.data)
        np.add.at(gx, src, wts[:, None] * g[dst])
        _accumulate(node_emb, gx)

    _record(backward)
    return out


def softmax_rows(x):
    """Row-wise softmax, stabilized by subtracting each row's maximum."""
    shifted = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    probs = e / e.sum(axis=1, keepdims=True)
    out = Tensor(probs)
    # lets cross_entropy fuse its gradient straight into x
    out._softmax_input = x

    def backward():
        g = out.grad
        if g is None:
            return
        inner = (g * probs).sum(axis=1, keepdims=True)
        _accumulate(x, probs * (g - inner))

    _record(backward)
    return out


PROB_FLOOR = 1e-12


def cross_entropy(probs, labels, weights=None):
    """Weighted mean of -log probs[i, labels[i]]; returns a (1, 1) tensor.

    When `probs` came from softmax_rows the gradient is the fused
    (probs - one_hot) form written directly into the softmax input,
    which stays finite even for near-one-hot predictions.
    """
    n, c = probs.shape
    lab = np.asarray(labels, dtype=np.intp).reshape(-1)
    if lab.shape[0] != n:
        raise DataError(f"expected {n} labels, got {lab.shape[0]}")
    if lab.min(initial=0) < 0 or lab.max(initial=-1) >= c:
        raise DataError(f"label out of range for {c} classes")
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if w.shape[0] != n:
            raise DataError(f"expected {n} sample weights, got {w.shape[0]}")
    wsum = w.sum()
    if wsum <= 0:
        raise DataError("sample weights sum to zero")

    rows = np.arange(n)
    picked = np.clip(probs.data[rows, lab], PROB_FLOOR, None)
    loss = float((w * -np.log(picked)).sum() / wsum)
    out = Tensor([[loss]])
    src = getattr(probs, "_softmax_input", None)

    def backward():
        if out.grad is None:
            return
        g = out.grad[0, 0]
        one_hot = np.zeros_like(probs.data)
        one_hot[rows, lab] = 1.0
        if src is not None:
            _accumulate(src, g * (w[:, None] * (probs.data - one_hot)) / wsum)
        else:
            gp = np.zeros_like(probs.data)
            gp[rows, lab] = -w / picked / wsum
            _accumulate(probs, g * gp)

    _record(backward)
    return out


def adam_step(param, grad, m, v, t, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update, in place on `param`.

    Returns the updated first/second moment arrays. `t` is the 1-based
    step count.
    """
    m = beta1 * m + (1.0 - beta1) * grad
    v = beta2 * v + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    param -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return m, v


class Adam:
    """Adam over a name -> Tensor parameter map. Missing grads count as zero."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self._v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def step(self):
        self.t += 1
        for name, p in self.params.items():
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if not np.all(np.isfinite(g)):
                raise TrainingError(f"non-finite gradient for parameter {name!r}")
            self._m[name], self._v[name] = adam_step(
                p.data, g, self._m[name], self._v[name], self.t,
                lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps=self.eps,
            )

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()
