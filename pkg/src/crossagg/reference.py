"""Slow reference computations used to cross-check the fast paths.

Everything here recomputes results from first principles on plain numpy
arrays: attention is evaluated as one dense (H*W) x (H*W) problem per head
with an additive penalty on cross-window pairs, window membership is derived
directly from pixel coordinates, and the depthwise convolution walks its taps
pixel by pixel. None of the window partition / shift machinery is reused.
"""

from __future__ import annotations

import math

import numpy as np

from .windowing import HORIZONTAL, MASK_VALUE, VERTICAL, WindowSpec

__all__ = [
    "oriented_window_dims",
    "position_bias_table",
    "naive_depthwise_conv3x3",
    "full_attention_oracle",
]


def oriented_window_dims(spec: WindowSpec, orientation: str, height: int, width: int) -> tuple[int, int]:
    """Window extents for one orientation, restated independently of the
    geometry resolver: horizontal windows are wide, vertical tall, axial
    windows span the full image on one axis."""
    if spec.kind == "regular":
        lo, hi = sorted((spec.sh, spec.sw))
        return (lo, hi) if orientation == HORIZONTAL else (hi, lo)
    if orientation == HORIZONTAL:
        return (min(spec.sl, height), width)
    return (height, min(spec.sl, width))


def position_bias_table(net: dict[str, np.ndarray], sh: int, sw: int) -> np.ndarray:
    """Bias [M, n, n] by evaluating the offset network on every pixel pair."""
    ys, xs = np.meshgrid(np.arange(sh), np.arange(sw), indexing="ij")
    pos = np.stack([ys.ravel(), xs.ravel()], axis=1).astype(np.float64)
    delta = pos[:, None, :] - pos[None, :, :]
    delta[..., 0] /= max(sh - 1, 1)
    delta[..., 1] /= max(sw - 1, 1)
    flat = delta.reshape(-1, 2)
    h = np.maximum(flat @ net["w1"] + net["b1"], 0.0)
    h = np.maximum(h @ net["w2"] + net["b2"], 0.0)
    out = h @ net["w3"] + net["b3"]
    n = sh * sw
    return out.reshape(n, n, -1).transpose(2, 0, 1)


def naive_depthwise_conv3x3(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Per-pixel 3x3 depthwise cross-correlation with zero borders."""
    h, w, c = x.shape
    out = np.zeros_like(x)
    for yy in range(h):
        for xx in range(w):
            acc = np.zeros(c, dtype=x.dtype)
            for u in range(3):
                for v in range(3):
                    sy, sx = yy + u - 1, xx + v - 1
                    if 0 <= sy < h and 0 <= sx < w:
                        acc += x[sy, sx] * kernel[u, v, :, 0]
            out[yy, xx] = acc + bias
    return out


def full_attention_oracle(
    x: np.ndarray,
    params: dict[str, np.ndarray],
    spec: WindowSpec,
    heads: int,
    lcm: bool,
) -> np.ndarray:
    """Unshifted rectangle-window attention computed as dense full-image
    attention with MASK_VALUE added to every cross-window pixel pair.

    ``x`` is [H, W, C]; ``params`` holds numpy copies of the block weights
    (qkv_w/qkv_b/proj_w/proj_b, lcm_w/lcm_b, and the pos net w1..b3). Window
    extents must divide the resolution.
    """
    h, w, c = x.shape
    d = c // heads
    qkv = x.reshape(-1, c) @ params["qkv_w"] + params["qkv_b"]
    q, k, v = qkv[:, :c], qkv[:, c : 2 * c], qkv[:, 2 * c :]

    coords_y, coords_x = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    coords_y, coords_x = coords_y.ravel(), coords_x.ravel()

    net = {key: params[key] for key in ("w1", "b1", "w2", "b2", "w3", "b3")}
    heads_out = []
    for m in range(heads):
        orientation = HORIZONTAL if m < heads // 2 else VERTICAL
        sh, sw = oriented_window_dims(spec, orientation, h, w)
        assert h % sh == 0 and w % sw == 0, "oracle requires divisible extents"
        window_id = (coords_y // sh) * (w // sw) + (coords_x // sw)

        # Pixels sharing a window also share its internal offset pattern, so
        # the global-offset bias agrees with the in-window bias on every
        # unmasked pair.
        dy = (coords_y[:, None] - coords_y[None, :]) / max(sh - 1, 1)
        dx = (coords_x[:, None] - coords_x[None, :]) / max(sw - 1, 1)
        flat = np.stack([dy.ravel(), dx.ravel()], axis=1)
        hh = np.maximum(flat @ net["w1"] + net["b1"], 0.0)
        hh = np.maximum(hh @ net["w2"] + net["b2"], 0.0)
        bias_full = (hh @ net["w3"] + net["b3"])[:, m].reshape(h * w, h * w)

        qm = q[:, m * d : (m + 1) * d].astype(np.float64)
        km = k[:, m * d : (m + 1) * d].astype(np.float64)
        vm = v[:, m * d : (m + 1) * d].astype(np.float64)
        logits = qm @ km.T / math.sqrt(d) + bias_full
        logits = np.where(window_id[:, None] == window_id[None, :], logits, logits + MASK_VALUE)
        logits -= logits.max(axis=1, keepdims=True)
        weights = np.exp(logits)
        weights /= weights.sum(axis=1, keepdims=True)
        heads_out.append(weights @ vm)
    y = np.concatenate(heads_out, axis=1).reshape(h, w, c)
    if lcm:
        y = y + naive_depthwise_conv3x3(
            v.reshape(h, w, c).astype(np.float64), params["lcm_w"], params["lcm_b"]
        )
    out = y.reshape(-1, c) @ params["proj_w"] + params["proj_b"]
    return out.reshape(h, w, c)
