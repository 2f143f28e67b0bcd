"""Minimal reverse-mode autodiff over float64 numpy arrays.

Everything the pointer policy needs and nothing more: a flat parameter store
whose named views alias one vector, a tape of primitive ops replayed in
reverse for gradients, an LSTM step and masked softmax built from those
primitives, a bias-corrected Adam ascent step, and npz checkpoints.

Replay order is the recording order reversed and every accumulation is a
plain in-place add, so identical inputs give bit-identical values and
gradients.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

__all__ = [
    "ParameterStore",
    "Node",
    "Tape",
    "lstm_step",
    "linear",
    "AdamState",
    "init_adam",
    "adam_update",
    "save_checkpoint",
    "load_checkpoint",
]


class ParameterStore:
    """Named float64 arrays backed by one flat vector.

    Views returned by ``store[name]`` alias ``store.flat``: writing through
    either side is visible through the other. That keeps optimizer math
    (which wants one long vector) and layer math (which wants shaped
    matrices) on the same memory.
    """

    def __init__(self, specs):
        self._offsets: dict[str, tuple[int, int, tuple[int, ...]]] = {}
        total = 0
        for name, shape in specs:
            if name in self._offsets:
                raise ValueError(f"duplicate parameter name {name!r}")
            shape = tuple(int(s) for s in shape)
            size = int(np.prod(shape)) if shape else 1
            self._offsets[name] = (total, total + size, shape)
            total += size
        self.flat = np.zeros(total, dtype=np.float64)
        self._views = {
            name: self.flat[start:stop].reshape(shape)
            for name, (start, stop, shape) in self._offsets.items()
        }

    def __getitem__(self, name: str) -> np.ndarray:
        return self._views[name]

    def __contains__(self, name: str) -> bool:
        return name in self._offsets

    @property
    def names(self) -> list[str]:
        return list(self._offsets)

    @property
    def size(self) -> int:
        return self.flat.size

    def spec(self) -> list[tuple[str, tuple[int, ...]]]:
        return [(name, shape) for name, (_, _, shape) in self._offsets.items()]

    def shape(self, name: str) -> tuple[int, ...]:
        return self._offsets[name][2]

    def slice(self, name: str) -> slice:
        start, stop, _ = self._offsets[name]
        return slice(start, stop)

    def name_at(self, flat_index: int) -> str:
        if not 0 <= flat_index < self.size:
            raise IndexError(flat_index)
        for name, (start, stop, _) in self._offsets.items():
            if start <= flat_index < stop:
                return name
        raise AssertionError("offset table inconsistent")

    def copy(self) -> "ParameterStore":
        out = ParameterStore(self.spec())
        out.flat[:] = self.flat
        return out

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: view.copy() for name, view in self._views.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        missing = set(self._offsets) - set(arrays)
        extra = set(arrays) - set(self._offsets)
        if missing or extra:
            raise ValueError(
                f"parameter name mismatch: missing {sorted(missing)}, "
                f"unexpected {sorted(extra)}"
            )
        for name, arr in arrays.items():
            arr = np.asarray(arr, dtype=np.float64)
            if arr.shape != self.shape(name):
                raise ValueError(
                    f"parameter {name!r} has shape {arr.shape}, "
                    f"expected {self.shape(name)}"
                )
            self._views[name][...] = arr


class Node:
    """One tape value. ``grad`` stays None until backward touches it."""

    __slots__ = ("value", "grad", "requires_grad")

    def __init__(self, value, requires_grad):
        self.value = value
        self.grad = None
        self.requires_grad = requires_grad


def _acc(node: Node, g: np.ndarray) -> None:
    if node.grad is None:
        node.grad = np.zeros_like(node.value)
    node.grad += g


class Tape:
    """Records primitive ops; ``backward`` replays them newest-first.

    With ``recording=False`` the same op methods run value-only, which keeps
    finite-difference probing on the exact code path of the recorded forward.
    """

    def __init__(self, recording: bool = True):
        self.recording = recording
        self._backops: list[tuple[Node, object]] = []
        self._params: dict[tuple[int, str], Node] = {}
        self._backward_done = False

    # -- leaves ------------------------------------------------------------

    def const(self, value) -> Node:
        return Node(np.asarray(value, dtype=np.float64), False)

    def param(self, store: ParameterStore, name: str) -> Node:
        """Leaf bound to a store entry; one node per name, reuse accumulates.

        The node aliases live store memory, so run backward before mutating
        the store (the training loop's forward/backward/update order).
        """
        key = (id(store), name)
        node = self._params.get(key)
        if node is None:
            node = Node(store[name], True)
            self._params[key] = node
        return node

    def _emit(self, value, requires, backward) -> Node:
        node = Node(value, requires)
        if self.recording and requires:
            self._backops.append((node, backward))
        return node

    # -- primitives ----------------------------------------------------------

    def matmul(self, a: Node, b: Node) -> Node:
        if a.value.ndim != 2 or b.value.ndim != 2 or a.value.shape[1] != b.value.shape[0]:
            raise ValueError(
                f"matmul shapes {a.value.shape} x {b.value.shape} do not chain"
            )
        v = a.value @ b.value

        def bw(g, a=a, b=b):
            if a.requires_grad:
                _acc(a, g @ b.value.T)
            if b.requires_grad:
                _acc(b, a.value.T @ g)

        return self._emit(v, a.requires_grad or b.requires_grad, bw)

    def add(self, a: Node, b: Node) -> Node:
        """Elementwise add; also accepts a 1-D bias against a 2-D left side."""
        bias = a.value.ndim == 2 and b.value.ndim == 1
        if bias:
            if a.value.shape[1] != b.value.shape[0]:
                raise ValueError(
                    f"bias length {b.value.shape[0]} does not match "
                    f"width {a.value.shape[1]}"
                )
        elif a.value.shape != b.value.shape:
            raise ValueError(f"add shapes {a.value.shape} vs {b.value.shape}")
        v = a.value + b.value

        def bw(g, a=a, b=b, bias=bias):
            if a.requires_grad:
                _acc(a, g)
            if b.requires_grad:
                _acc(b, g.sum(axis=0) if bias else g)

        return self._emit(v, a.requires_grad or b.requires_grad, bw)

    def mul(self, a: Node, b: Node) -> Node:
        if a.value.shape != b.value.shape:
            raise ValueError(f"mul shapes {a.value.shape} vs {b.value.shape}")
        v = a.value * b.value

        def bw(g, a=a, b=b):
            if a.requires_grad:
                _acc(a, g * b.value)
            if b.requires_grad:
                _acc(b, g * a.value)

        return self._emit(v, a.requires_grad or b.requires_grad, bw)

    def tanh(self, a: Node) -> Node:
        v = np.tanh(a.value)

        def bw(g, a=a, v=v):
            _acc(a, g * (1.0 - v * v))

        return self._emit(v, a.requires_grad, bw)

    def sigmoid(self, a: Node) -> Node:
        v = expit(a.value)

        def bw(g, a=a, v=v):
            _acc(a, g * v * (1.0 - v))

        return self._emit(v, a.requires_grad, bw)

    def log(self, a: Node) -> Node:
        v = np.log(a.value)

        def bw(g, a=a):
            _acc(a, g / a.value)

        return self._emit(v, a.requires_grad, bw)

    def slice_cols(self, a: Node, start: int, stop: int) -> Node:
        if a.value.ndim != 2:
            raise ValueError("slice_cols wants a 2-D node")
        v = a.value[:, start:stop]

        def bw(g, a=a, start=start, stop=stop):
            if a.grad is None:
                a.grad = np.zeros_like(a.value)
            a.grad[:, start:stop] += g

        return self._emit(v, a.requires_grad, bw)

    def concat_cols(self, parts: list[Node]) -> Node:
        if not parts:
            raise ValueError("nothing to concatenate")
        v = np.concatenate([p.value for p in parts], axis=1)
        widths = [p.value.shape[1] for p in parts]

        def bw(g, parts=parts, widths=widths):
            off = 0
            for p, w in zip(parts, widths):
                if p.requires_grad:
                    _acc(p, g[:, off : off + w])
                off += w

        return self._emit(v, any(p.requires_grad for p in parts), bw)

    def broadcast_rows(self, a: Node, num_rows: int) -> Node:
        if a.value.ndim != 1:
            raise ValueError("broadcast_rows wants a 1-D node")
        v = np.broadcast_to(a.value, (num_rows, a.value.shape[0])).copy()

        def bw(g, a=a):
            _acc(a, g.sum(axis=0))

        return self._emit(v, a.requires_grad, bw)

    def gather_cols(self, a: Node, idx: np.ndarray) -> Node:
        """Pick one column per row: out[i] = a[i, idx[i]]."""
        idx = np.asarray(idx, dtype=np.int64)
        rows = np.arange(a.value.shape[0])
        v = a.value[rows, idx]

        def bw(g, a=a, rows=rows, idx=idx):
            if a.grad is None:
                a.grad = np.zeros_like(a.value)
            a.grad[rows, idx] += g

        return self._emit(v, a.requires_grad, bw)

    def pick_per_row(self, parts: list[Node], idx: np.ndarray) -> Node:
        """Row-wise choice among same-shaped nodes: out[i] = parts[idx[i]].value[i].

        The index is data (not differentiated); gradients flow to each part's
        selected rows only.
        """
        idx = np.asarray(idx, dtype=np.int64)
        if not parts:
            raise ValueError("nothing to pick from")
        rows = parts[0].value.shape[0]
        if any(p.value.shape != parts[0].value.shape for p in parts):
            raise ValueError("pick_per_row parts must share one shape")
        if idx.shape != (rows,):
            raise ValueError(f"index shape {idx.shape}, expected ({rows},)")
        if idx.min() < 0 or idx.max() >= len(parts):
            raise ValueError("pick_per_row index out of range")
        v = np.empty_like(parts[0].value)
        for j, part in enumerate(parts):
            sel = idx == j
            if sel.any():
                v[sel] = part.value[sel]

        def bw(g, parts=parts, idx=idx):
            for j, part in enumerate(parts):
                if part.requires_grad:
                    sel = idx == j
                    if sel.any():
                        masked = np.zeros_like(g)
                        masked[sel] = g[sel]
                        _acc(part, masked)

        return self._emit(v, any(p.requires_grad for p in parts), bw)

    def masked_softmax(self, logits: Node, mask: np.ndarray) -> Node:
        """Softmax restricted to unmasked columns; masked entries are exactly 0.

        Max-subtraction runs over the unmasked entries only, so huge logits
        cannot overflow. A row with nothing unmasked is an error, not a nan.
        """
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != logits.value.shape:
            raise ValueError(
                f"mask shape {mask.shape} vs logits {logits.value.shape}"
            )
        if not mask.any(axis=1).all():
            row = int(np.flatnonzero(~mask.any(axis=1))[0])
            raise ValueError(f"row {row} has no unmasked entry; nothing to point at")
        shifted = np.where(mask, logits.value, -np.inf)
        shifted = shifted - shifted.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        p = e / e.sum(axis=1, keepdims=True)

        def bw(g, logits=logits, p=p):
            inner = (g * p).sum(axis=1, keepdims=True)
            _acc(logits, p * (g - inner))

        return self._emit(p, logits.requires_grad, bw)

    def sum(self, a: Node) -> Node:
        v = np.float64(a.value.sum())

        def bw(g, a=a):
            _acc(a, np.full_like(a.value, g))

        return self._emit(v, a.requires_grad, bw)

    def dot(self, a: Node, weights: np.ndarray) -> Node:
        """Weighted sum of a 1-D node against constant weights."""
        weights = np.asarray(weights, dtype=np.float64)
        if a.value.shape != weights.shape:
            raise ValueError(f"dot shapes {a.value.shape} vs {weights.shape}")
        v = np.float64(a.value @ weights)

        def bw(g, a=a, weights=weights):
            _acc(a, g * weights)

        return self._emit(v, a.requires_grad, bw)

    # -- reverse pass --------------------------------------------------------

    def backward(self, node: Node) -> None:
        if not self.recording:
            raise RuntimeError("cannot backward on a non-recording tape")
        if self._backward_done:
            raise RuntimeError("backward already ran on this tape")
        if not self._backops:
            raise RuntimeError("backward called before any forward op was recorded")
        if np.ndim(node.value) != 0:
            raise ValueError("backward seeds a scalar node only")
        self._backward_done = True
        node.grad = np.float64(1.0)
        for out, bw in reversed(self._backops):
            if out.grad is not None:
                bw(out.grad)

    def grads(self, store: ParameterStore) -> np.ndarray:
        """Flat gradient vector for ``store``; untouched parameters are zero."""
        if not self._backward_done:
            raise RuntimeError("grads requested before backward")
        out = np.zeros(store.size, dtype=np.float64)
        for (sid, name), node in self._params.items():
            if sid == id(store) and node.grad is not None:
                out[store.slice(name)] = np.asarray(node.grad).ravel()
        return out


def linear(tape: Tape, x: Node, w: Node, b: Node | None = None) -> Node:
    """Affine map x @ w (+ b)."""
    y = tape.matmul(x, w)
    return y if b is None else tape.add(y, b)


def lstm_step(
    tape: Tape, x: Node, state: tuple[Node, Node], wx: Node, wh: Node, b: Node
) -> tuple[Node, Node]:
    """One LSTM step over a batch of rows.

    Gate layout along the 4H axis is [input, forget, candidate, output]:

        c' = sigmoid(f) * c + sigmoid(i) * tanh(g)
        h' = sigmoid(o) * tanh(c')
    """
    h, c = state
    e_in, four_h = wx.value.shape
    hidden = wh.value.shape[0]
    if four_h != 4 * hidden or wh.value.shape[1] != four_h:
        raise ValueError(
            f"weight shapes disagree: wx {wx.value.shape}, wh {wh.value.shape}"
        )
    if b.value.shape != (four_h,):
        raise ValueError(f"bias shape {b.value.shape}, expected ({four_h},)")
    if x.value.ndim != 2 or x.value.shape[1] != e_in:
        raise ValueError(f"input shape {x.value.shape} does not match wx {wx.value.shape}")
    if h.value.shape != (x.value.shape[0], hidden) or c.value.shape != h.value.shape:
        raise ValueError(
            f"state shapes h {h.value.shape}, c {c.value.shape} do not match "
            f"batch {x.value.shape[0]} x hidden {hidden}"
        )

    z = tape.add(tape.add(tape.matmul(x, wx), tape.matmul(h, wh)), b)
    i = tape.sigmoid(tape.slice_cols(z, 0, hidden))
    f = tape.sigmoid(tape.slice_cols(z, hidden, 2 * hidden))
    g = tape.tanh(tape.slice_cols(z, 2 * hidden, 3 * hidden))
    o = tape.sigmoid(tape.slice_cols(z, 3 * hidden, 4 * hidden))
    c_new = tape.add(tape.mul(f, c), tape.mul(i, g))
    h_new = tape.mul(o, tape.tanh(c_new))
    return h_new, c_new


@dataclass
class AdamState:
    """First/second moment accumulators for the ascent step."""

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)


def init_adam(
    store: ParameterStore,
    learning_rate: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    return AdamState(
        learning_rate=learning_rate,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
        t=0,
        m=np.zeros(store.size, dtype=np.float64),
        v=np.zeros(store.size, dtype=np.float64),
    )


def adam_update(store: ParameterStore, grads: np.ndarray, state: AdamState) -> None:
    """Bias-corrected Adam step in the ascent direction, in place.

    For a constant gradient the per-coordinate displacement tends to the
    learning rate, which is what makes the step size directly interpretable.
    """
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != (store.size,):
        raise ValueError(f"gradient shape {grads.shape}, expected ({store.size},)")
    finite = np.isfinite(grads)
    if not finite.all():
        idx = int(np.flatnonzero(~finite)[0])
        raise FloatingPointError(
            f"non-finite gradient in parameter {store.name_at(idx)!r} "
            f"(flat index {idx})"
        )
    state.t += 1
    state.m *= state.beta1
    state.m += (1.0 - state.beta1) * grads
    state.v *= state.beta2
    state.v += (1.0 - state.beta2) * grads * grads
    m_hat = state.m / (1.0 - state.beta1**state.t)
    v_hat = state.v / (1.0 - state.beta2**state.t)
    store.flat += state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)


def save_checkpoint(
    path,
    store: ParameterStore,
    extras: dict[str, np.ndarray] | None = None,
    meta: dict | None = None,
) -> None:
    """Write parameters (+ named extras + JSON meta) as an npz archive."""
    payload: dict[str, np.ndarray] = {}
    for name in store.names:
        payload[f"param/{name}"] = store[name]
    for name, arr in (extras or {}).items():
        payload[f"extra/{name}"] = np.asarray(arr)
    payload["meta"] = np.asarray(json.dumps(meta or {}, sort_keys=True))
    # np.savez appends ".npz" to bare paths; write through a handle so the
    # file lands exactly where the caller said.
    with open(path, "wb") as f:
        np.savez(f, **payload)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray], dict]:
    """Read back (params, extras, meta) from ``save_checkpoint`` output."""
    path = Path(path)
    with np.load(path, allow_pickle=False) as z:
        params, extras, meta = {}, {}, {}
        for key in z.files:
            if key.startswith("param/"):
                params[key[len("param/") :]] = z[key]
            elif key.startswith("extra/"):
                extras[key[len("extra/") :]] = z[key]
            elif key == "meta":
                meta = json.loads(str(z[key][()]))
    return params, extras, meta
