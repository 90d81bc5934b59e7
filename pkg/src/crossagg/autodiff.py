"""Dense tensors with a record-replay gradient tape.

The tensor core is deliberately small: it provides exactly the primitives the
cross-aggregation attention graph needs (matmul, softmax, layer norm, GELU,
3x3 convolution, pixel shuffle, and the index/reshape plumbing between them),
each with a hand-derived backward rule. Tensors wrap contiguous numpy arrays,
are immutable once constructed, and carry either 32- or 64-bit IEEE-754
elements. Images use the channels-last layout [N, H, W, C].

Recording is opt-in: operations executed while a :class:`GradientTape` is
active append nodes to it, and :func:`backward` replays the tape in reverse
execution order (which is a valid reverse topological order) exactly once per
node.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import erf

__all__ = [
    "Tensor",
    "GradientTape",
    "ShapeError",
    "GraphError",
    "OptimizerHyper",
    "AdamState",
    "tensor",
    "matmul",
    "softmax_lastdim",
    "layer_norm",
    "gelu",
    "relu",
    "linear",
    "conv2d_3x3",
    "pixel_shuffle",
    "add",
    "sub",
    "mul",
    "neg",
    "reshape",
    "transpose",
    "narrow",
    "concat",
    "gather",
    "pad_reflect_spatial",
    "roll_spatial",
    "sum_all",
    "mean_all",
    "abs_val",
    "backward",
    "adam_step",
    "init_adam_state",
]

FLOAT_DTYPES = (np.float32, np.float64)

_uid_counter = itertools.count(1)


class ShapeError(ValueError):
    """Shape, extent, or dtype mismatch between operands."""


class GraphError(RuntimeError):
    """Violation of the gradient-tape contract (e.g. non-scalar loss)."""


class Tensor:
    """Immutable dense array value.

    ``data`` is a contiguous, write-protected numpy array of float32 or
    float64 elements. Construction copies its argument, so later mutation of
    the source buffer is never observable through the tensor.
    """

    __slots__ = ("data", "uid")

    def __init__(self, data, dtype=None):
        arr = np.array(data, dtype=dtype, copy=True)
        if arr.dtype not in FLOAT_DTYPES:
            arr = arr.astype(np.float32)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "uid", next(_uid_counter))

    def __setattr__(self, name, value):
        raise AttributeError("Tensor is immutable")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        """Writable copy of the underlying data."""
        return np.array(self.data, copy=True)

    def astype(self, dtype) -> "Tensor":
        return Tensor(self.data, dtype=dtype)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype.name})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def tensor(data, dtype=None) -> Tensor:
    return data if isinstance(data, Tensor) and dtype is None else Tensor(data, dtype=dtype)


def _freeze(arr: np.ndarray) -> Tensor:
    t = Tensor.__new__(Tensor)
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    object.__setattr__(t, "data", arr)
    object.__setattr__(t, "uid", next(_uid_counter))
    return t


# ---------------------------------------------------------------------------
# Tape machinery
# ---------------------------------------------------------------------------

_ACTIVE_TAPES: list["GradientTape"] = []


@dataclass
class _Node:
    out_uid: int
    input_uids: tuple[int, ...]
    backward_fn: Callable[[np.ndarray], Sequence[np.ndarray | None]]


class GradientTape:
    """Records primitive applications for reverse-mode differentiation.

    A tape is single-writer: record (by running ops inside its ``with`` block)
    and call :func:`backward` from one logical thread of control. Gradients
    are returned for watched tensors only; a watched tensor with no path to
    the loss gets an exact zero gradient.
    """

    def __init__(self):
        self._nodes: list[_Node] = []
        self._watched: dict[int, Tensor] = {}
        self._tracked: set[int] = set()

    def __enter__(self):
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _ACTIVE_TAPES.pop()
        if popped is not self:
            raise GraphError("tape exit out of order")
        return False

    def watch(self, *tensors: Tensor | Iterable[Tensor]):
        for t in tensors:
            if isinstance(t, Tensor):
                self._watched[t.uid] = t
                self._tracked.add(t.uid)
            else:
                self.watch(*t)

    def _record(self, out: Tensor, inputs: tuple[Tensor, ...], backward_fn):
        if any(t.uid in self._tracked for t in inputs):
            self._tracked.add(out.uid)
            self._nodes.append(_Node(out.uid, tuple(t.uid for t in inputs), backward_fn))

    def gradients(self, loss: Tensor) -> dict[Tensor, Tensor]:
        return backward(self, loss)


def _tape() -> GradientTape | None:
    return _ACTIVE_TAPES[-1] if _ACTIVE_TAPES else None


def _record(out: Tensor, inputs: tuple[Tensor, ...], backward_fn):
    tape = _tape()
    if tape is not None:
        tape._record(out, inputs, backward_fn)


def backward(tape: GradientTape, loss: Tensor) -> dict[Tensor, Tensor]:
    """Accumulate d(loss)/d(p) for every watched tensor p on the tape."""
    if loss.size != 1:
        raise GraphError(f"backward expects a scalar loss, got shape {loss.shape}")
    if loss.uid not in tape._tracked:
        raise GraphError("loss was not recorded on this tape")
    grads: dict[int, np.ndarray] = {loss.uid: np.ones_like(loss.data)}
    for node in reversed(tape._nodes):
        g_out = grads.pop(node.out_uid, None)
        if g_out is None:
            continue
        for uid, g_in in zip(node.input_uids, node.backward_fn(g_out)):
            if g_in is None:
                continue
            held = grads.get(uid)
            grads[uid] = g_in if held is None else held + g_in
    result: dict[Tensor, Tensor] = {}
    for uid, t in tape._watched.items():
        g = grads.get(uid)
        result[t] = _freeze(np.zeros_like(t.data) if g is None else np.asarray(g))
    return result


# ---------------------------------------------------------------------------
# Shape / dtype validation helpers
# ---------------------------------------------------------------------------


def _check_same_dtype(*tensors: Tensor):
    dts = {t.dtype for t in tensors}
    if len(dts) > 1:
        raise ShapeError(f"mixed dtypes {sorted(d.name for d in dts)}; cast operands explicitly")


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _as_operands(a, b):
    if isinstance(a, Tensor) and isinstance(b, Tensor):
        _check_same_dtype(a, b)
        return a, b, None
    if isinstance(a, Tensor):
        return a, None, float(b)
    if isinstance(b, Tensor):
        return b, None, float(a)
    raise TypeError("at least one operand must be a Tensor")


# ---------------------------------------------------------------------------
# Elementwise primitives
# ---------------------------------------------------------------------------


def add(a, b) -> Tensor:
    if isinstance(a, Tensor) and isinstance(b, Tensor):
        _check_same_dtype(a, b)
        try:
            out = _freeze(a.data + b.data)
        except ValueError:
            raise ShapeError(f"add: shapes {a.shape} and {b.shape} do not broadcast") from None
        _record(out, (a, b), lambda g, sa=a.shape, sb=b.shape: (_unbroadcast(g, sa), _unbroadcast(g, sb)))
        return out
    t, _, s = _as_operands(a, b)
    out = _freeze(t.data + s)
    _record(out, (t,), lambda g: (g,))
    return out


def sub(a, b) -> Tensor:
    if isinstance(a, Tensor) and isinstance(b, Tensor):
        _check_same_dtype(a, b)
        try:
            out = _freeze(a.data - b.data)
        except ValueError:
            raise ShapeError(f"sub: shapes {a.shape} and {b.shape} do not broadcast") from None
        _record(out, (a, b), lambda g, sa=a.shape, sb=b.shape: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))
        return out
    if isinstance(a, Tensor):
        out = _freeze(a.data - float(b))
        _record(out, (a,), lambda g: (g,))
        return out
    t = b
    out = _freeze(float(a) - t.data)
    _record(out, (t,), lambda g: (-g,))
    return out


def mul(a, b) -> Tensor:
    if isinstance(a, Tensor) and isinstance(b, Tensor):
        _check_same_dtype(a, b)
        try:
            out = _freeze(a.data * b.data)
        except ValueError:
            raise ShapeError(f"mul: shapes {a.shape} and {b.shape} do not broadcast") from None

        def bwd(g, ta=a, tb=b):
            return (_unbroadcast(g * tb.data, ta.shape), _unbroadcast(g * ta.data, tb.shape))

        _record(out, (a, b), bwd)
        return out
    t, _, s = _as_operands(a, b)
    out = _freeze(t.data * s)
    _record(out, (t,), lambda g, s=s: (g * s,))
    return out


def neg(x: Tensor) -> Tensor:
    out = _freeze(-x.data)
    _record(out, (x,), lambda g: (-g,))
    return out


def relu(x: Tensor) -> Tensor:
    out = _freeze(np.maximum(x.data, 0))
    _record(out, (x,), lambda g, xd=x.data: (g * (xd > 0),))
    return out


def abs_val(x: Tensor) -> Tensor:
    out = _freeze(np.abs(x.data))
    _record(out, (x,), lambda g, xd=x.data: (g * np.sign(xd),))
    return out


def gelu(x: Tensor) -> Tensor:
    """Exact erf-based GELU, elementwise: 0.5 * x * (1 + erf(x / sqrt(2)))."""
    xd = x.data
    cdf = 0.5 * (1.0 + erf(xd / np.sqrt(xd.dtype.type(2.0))))
    out = _freeze(xd * cdf)

    def bwd(g, xd=xd, cdf=cdf):
        pdf = np.exp(-0.5 * xd * xd) * xd.dtype.type(1.0 / math.sqrt(2.0 * math.pi))
        return (g * (cdf + xd * pdf),)

    _record(out, (x,), bwd)
    return out


def softmax_lastdim(x: Tensor) -> Tensor:
    """Stabilized softmax over the last dimension; each slice sums to 1."""
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)
    out = _freeze(y)

    def bwd(g, y=y):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    _record(out, (x,), bwd)
    return out


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last (channel) dimension to zero mean / unit variance, then apply affine."""
    c = x.shape[-1]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ShapeError(
            f"layer_norm: affine shapes {gamma.shape}/{beta.shape} do not match channel extent {c}"
        )
    _check_same_dtype(x, gamma, beta)
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + x.dtype.type(eps))
    xhat = centered * inv
    out = _freeze(xhat * gamma.data + beta.data)

    def bwd(g, xhat=xhat, inv=inv, gd=gamma.data, c=c):
        lead = tuple(range(g.ndim - 1))
        dbeta = g.sum(axis=lead)
        dgamma = (g * xhat).sum(axis=lead)
        dxhat = g * gd
        dx = inv * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )
        return (dx, dgamma, dbeta)

    _record(out, (x, gamma, beta), bwd)
    return out


# ---------------------------------------------------------------------------
# Linear algebra
# ---------------------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two dimensions, broadcasting leading ones."""
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs rank >= 2 operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: inner extents differ for shapes {a.shape} and {b.shape}")
    _check_same_dtype(a, b)
    try:
        out = _freeze(np.matmul(a.data, b.data))
    except ValueError:
        raise ShapeError(f"matmul: batch dims of {a.shape} and {b.shape} do not broadcast") from None

    def bwd(g, ad=a.data, bd=b.data, sa=a.shape, sb=b.shape):
        ga = np.matmul(g, bd.swapaxes(-1, -2))
        gb = np.matmul(ad.swapaxes(-1, -2), g)
        return (_unbroadcast(ga, sa), _unbroadcast(gb, sb))

    _record(out, (a, b), bwd)
    return out


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """Affine map over the last dimension: x @ weight (+ bias)."""
    if weight.ndim != 2:
        raise ShapeError(f"linear: weight must be rank 2, got {weight.shape}")
    if x.shape[-1] != weight.shape[0]:
        raise ShapeError(f"linear: input shape {x.shape} does not match weight shape {weight.shape}")
    if bias is not None and bias.shape != (weight.shape[1],):
        raise ShapeError(f"linear: bias shape {bias.shape} does not match weight shape {weight.shape}")
    lead = x.shape[:-1]
    flat = reshape(x, (-1, x.shape[-1])) if x.ndim != 2 else x
    y = matmul(flat, weight)
    if x.ndim != 2:
        y = reshape(y, lead + (weight.shape[1],))
    if bias is not None:
        y = add(y, bias)
    return y


# ---------------------------------------------------------------------------
# Layout / indexing primitives
# ---------------------------------------------------------------------------


def reshape(x: Tensor, shape) -> Tensor:
    try:
        out_data = x.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot view shape {x.shape} as {tuple(shape)}") from None
    out = _freeze(out_data)
    _record(out, (x,), lambda g, s=x.shape: (g.reshape(s),))
    return out


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    if sorted(axes) != list(range(x.ndim)):
        raise ShapeError(f"transpose: {axes} is not a permutation of rank {x.ndim}")
    out = _freeze(np.ascontiguousarray(x.data.transpose(axes)))
    inv = tuple(np.argsort(axes))
    _record(out, (x,), lambda g, inv=inv: (np.ascontiguousarray(g.transpose(inv)),))
    return out


def narrow(x: Tensor, axis: int, start: int, length: int) -> Tensor:
    """Contiguous slice of ``length`` extents along ``axis`` starting at ``start``."""
    axis = axis % x.ndim
    if start < 0 or length < 1 or start + length > x.shape[axis]:
        raise ShapeError(f"narrow: [{start}:{start + length}) out of bounds for axis {axis} of {x.shape}")
    key = tuple(slice(None) if i != axis else slice(start, start + length) for i in range(x.ndim))
    out = _freeze(np.ascontiguousarray(x.data[key]))

    def bwd(g, key=key, shape=x.shape, dtype=x.dtype):
        full = np.zeros(shape, dtype=dtype)
        full[key] = g
        return (full,)

    _record(out, (x,), bwd)
    return out


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    if not tensors:
        raise ShapeError("concat of an empty sequence")
    _check_same_dtype(*tensors)
    axis = axis % tensors[0].ndim
    try:
        out = _freeze(np.concatenate([t.data for t in tensors], axis=axis))
    except ValueError:
        raise ShapeError(f"concat: incompatible shapes {[t.shape for t in tensors]}") from None
    sizes = [t.shape[axis] for t in tensors]

    def bwd(g, sizes=sizes, axis=axis):
        pieces = []
        off = 0
        for s in sizes:
            key = tuple(
                slice(None) if i != axis else slice(off, off + s) for i in range(g.ndim)
            )
            pieces.append(np.ascontiguousarray(g[key]))
            off += s
        return pieces

    _record(out, tuple(tensors), bwd)
    return out


def gather(x: Tensor, indices: np.ndarray, axis: int = 0) -> Tensor:
    """Select rows along ``axis`` by a 1-D integer index array (with repeats)."""
    idx = np.asarray(indices)
    if idx.ndim != 1 or not np.issubdtype(idx.dtype, np.integer):
        raise ShapeError("gather: indices must be a 1-D integer array")
    axis = axis % x.ndim
    out = _freeze(np.take(x.data, idx, axis=axis))

    def bwd(g, idx=idx, axis=axis, shape=x.shape, dtype=x.dtype):
        moved = np.moveaxis(g, axis, 0)
        acc = np.zeros((shape[axis],) + moved.shape[1:], dtype=dtype)
        np.add.at(acc, idx, moved)
        return (np.moveaxis(acc, 0, axis),)

    _record(out, (x,), bwd)
    return out


def _reflect_index(n: int, pad: int) -> np.ndarray:
    idx = np.arange(n + pad)
    return np.where(idx < n, idx, 2 * n - 2 - idx)


def pad_reflect_spatial(x: Tensor, pad_h: int, pad_w: int) -> Tensor:
    """Reflect-pad the bottom/right spatial borders of an [N, H, W, C] tensor."""
    if x.ndim != 4:
        raise ShapeError(f"pad_reflect_spatial expects rank 4, got {x.shape}")
    n, h, w, _ = x.shape
    if pad_h < 0 or pad_w < 0 or pad_h > h - 1 or pad_w > w - 1:
        raise ShapeError(f"pad_reflect_spatial: pads ({pad_h},{pad_w}) invalid for {x.shape}")
    if pad_h == 0 and pad_w == 0:
        return x
    rows = _reflect_index(h, pad_h)
    cols = _reflect_index(w, pad_w)
    out = _freeze(np.ascontiguousarray(x.data[:, rows][:, :, cols]))

    def bwd(g, rows=rows, cols=cols, h=h, w=w, dtype=x.dtype):
        gh = np.moveaxis(g, 2, 0)
        acc_w = np.zeros((w,) + gh.shape[1:], dtype=dtype)
        np.add.at(acc_w, cols, gh)
        gw = np.moveaxis(acc_w, 0, 2)
        gr = np.moveaxis(gw, 1, 0)
        acc_h = np.zeros((h,) + gr.shape[1:], dtype=dtype)
        np.add.at(acc_h, rows, gr)
        return (np.moveaxis(acc_h, 0, 1),)

    _record(out, (x,), bwd)
    return out


def roll_spatial(x: Tensor, down: int, left: int) -> Tensor:
    """Cyclic shift: rows move down by ``down``, columns move left by ``left``."""
    if x.ndim != 4:
        raise ShapeError(f"roll_spatial expects rank 4, got {x.shape}")
    if down == 0 and left == 0:
        return x
    out = _freeze(np.roll(x.data, (down, -left), axis=(1, 2)))
    _record(out, (x,), lambda g, d=down, l=left: (np.roll(g, (-d, l), axis=(1, 2)),))
    return out


# ---------------------------------------------------------------------------
# Convolution and pixel shuffle
# ---------------------------------------------------------------------------


def conv2d_3x3(x: Tensor, kernel: Tensor, bias: Tensor | None = None, depthwise: bool = False) -> Tensor:
    """3x3 cross-correlation with zero padding 1, preserving spatial size.

    ``kernel`` is [3, 3, Cin, Cout]; in depthwise mode it is [3, 3, C, 1] and
    each channel is filtered independently (Cin == Cout == C).
    """
    if x.ndim != 4:
        raise ShapeError(f"conv2d_3x3 expects input rank 4, got {x.shape}")
    if kernel.ndim != 4 or kernel.shape[0] != 3 or kernel.shape[1] != 3:
        raise ShapeError(f"conv2d_3x3: kernel shape {kernel.shape} is not [3,3,Cin,Cout]")
    n, h, w, cin = x.shape
    if depthwise:
        if kernel.shape[2] != cin or kernel.shape[3] != 1:
            raise ShapeError(
                f"conv2d_3x3 depthwise: kernel shape {kernel.shape} does not match input channels {cin}"
            )
        cout = cin
    else:
        if kernel.shape[2] != cin:
            raise ShapeError(
                f"conv2d_3x3: kernel input channels {kernel.shape} do not match input shape {x.shape}"
            )
        cout = kernel.shape[3]
    if bias is not None and bias.shape != (cout,):
        raise ShapeError(f"conv2d_3x3: bias shape {bias.shape} does not match output channels {cout}")
    _check_same_dtype(*(t for t in (x, kernel, bias) if t is not None))

    xp = np.zeros((n, h + 2, w + 2, cin), dtype=x.dtype)
    xp[:, 1 : h + 1, 1 : w + 1, :] = x.data
    out_data = np.zeros((n, h, w, cout), dtype=x.dtype)
    kd = kernel.data
    for u in range(3):
        for v in range(3):
            patch = xp[:, u : u + h, v : v + w, :]
            if depthwise:
                out_data += patch * kd[u, v, :, 0]
            else:
                out_data += patch @ kd[u, v]
    if bias is not None:
        out_data += bias.data
    out = _freeze(out_data)

    inputs = (x, kernel) if bias is None else (x, kernel, bias)

    def bwd(g, xp=xp, kd=kd, n=n, h=h, w=w, cin=cin, depthwise=depthwise, has_bias=bias is not None):
        gxp = np.zeros_like(xp)
        gk = np.zeros_like(kd)
        for u in range(3):
            for v in range(3):
                patch = xp[:, u : u + h, v : v + w, :]
                if depthwise:
                    gk[u, v, :, 0] = (patch * g).sum(axis=(0, 1, 2))
                    gxp[:, u : u + h, v : v + w, :] += g * kd[u, v, :, 0]
                else:
                    gk[u, v] = np.einsum("nhwc,nhwo->co", patch, g)
                    gxp[:, u : u + h, v : v + w, :] += g @ kd[u, v].T
        gx = np.ascontiguousarray(gxp[:, 1 : h + 1, 1 : w + 1, :])
        if has_bias:
            return (gx, gk, g.sum(axis=(0, 1, 2)))
        return (gx, gk)

    _record(out, inputs, bwd)
    return out


def pixel_shuffle(x: Tensor, r: int) -> Tensor:
    """Rearrange channels into space: [N,H,W,C*r^2] -> [N,rH,rW,C].

    Element (n, h, w, c*r^2 + dy*r + dx) lands at (n, h*r + dy, w*r + dx, c).
    """
    if x.ndim != 4:
        raise ShapeError(f"pixel_shuffle expects rank 4, got {x.shape}")
    if r < 1:
        raise ShapeError(f"pixel_shuffle: scale {r} must be positive")
    n, h, w, c_total = x.shape
    if c_total % (r * r) != 0:
        raise ShapeError(f"pixel_shuffle: channels {c_total} not divisible by {r}^2")
    if r == 1:
        return x
    c = c_total // (r * r)
    out_data = (
        x.data.reshape(n, h, w, c, r, r).transpose(0, 1, 4, 2, 5, 3).reshape(n, h * r, w * r, c)
    )
    out = _freeze(np.ascontiguousarray(out_data))

    def bwd(g, n=n, h=h, w=w, c=c, r=r):
        back = g.reshape(n, h, r, w, r, c).transpose(0, 1, 3, 5, 2, 4).reshape(n, h, w, c * r * r)
        return (np.ascontiguousarray(back),)

    _record(out, (x,), bwd)
    return out


# ---------------------------------------------------------------------------
# Reductions
# ---------------------------------------------------------------------------


def sum_all(x: Tensor) -> Tensor:
    out = _freeze(np.asarray(x.data.sum(), dtype=x.dtype))
    _record(out, (x,), lambda g, s=x.shape, d=x.dtype: (np.ones(s, dtype=d) * g,))
    return out


def mean_all(x: Tensor) -> Tensor:
    return mul(sum_all(x), 1.0 / x.size)


# ---------------------------------------------------------------------------
# Adam optimizer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OptimizerHyper:
    """Adam hyperparameters; the step counter lives in :class:`AdamState`."""

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("betas must lie in [0, 1)")
        if self.eps <= 0:
            raise ValueError("eps must be positive")


@dataclass
class AdamState:
    m: dict[str, Tensor] = field(default_factory=dict)
    v: dict[str, Tensor] = field(default_factory=dict)
    step: int = 0


def init_adam_state(params: Mapping[str, Tensor]) -> AdamState:
    return AdamState(
        m={k: _freeze(np.zeros_like(p.data)) for k, p in params.items()},
        v={k: _freeze(np.zeros_like(p.data)) for k, p in params.items()},
        step=0,
    )


def adam_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, Tensor],
    state: AdamState,
    hyper: OptimizerHyper,
) -> tuple[dict[str, Tensor], AdamState]:
    """One bias-corrected Adam update; returns fresh params and state."""
    t = state.step + 1
    new_params: dict[str, Tensor] = {}
    new_m: dict[str, Tensor] = {}
    new_v: dict[str, Tensor] = {}
    corr1 = 1.0 - hyper.beta1**t
    corr2 = 1.0 - hyper.beta2**t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape or state.m[name].shape != p.shape:
            raise ShapeError(
                f"adam_step: shape mismatch for '{name}': param {p.shape}, grad {g.shape}"
            )
        m = hyper.beta1 * state.m[name].data + (1.0 - hyper.beta1) * g.data
        v = hyper.beta2 * state.v[name].data + (1.0 - hyper.beta2) * (g.data * g.data)
        update = hyper.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + hyper.eps)
        new_params[name] = _freeze(p.data - update)
        new_m[name] = _freeze(m)
        new_v[name] = _freeze(v)
    return new_params, AdamState(m=new_m, v=new_v, step=t)
