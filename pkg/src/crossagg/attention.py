"""Rectangle-window self-attention with a dynamic position bias and a
locality complement.

The head axis is split in half: the first M/2 heads attend inside horizontal
(wide) windows, the remaining heads inside vertical (tall) windows, both
resolved from the same spec. Per window, attention is
``softmax(Q K^T / sqrt(d) + B + mask) V`` where B comes from a small network
evaluated on the relative offset between the two pixels, normalized to
[-1, 1] by the window extents. The optional locality complement adds a 3x3
depthwise convolution of the full-resolution value map to the concatenated
head outputs before the final projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .windowing import (
    HORIZONTAL,
    VERTICAL,
    WindowGeometry,
    WindowSpec,
    build_shift_mask,
    cyclic_shift,
    merge,
    partition,
    resolve_geometry,
)

__all__ = [
    "POS_HIDDEN",
    "PositionBiasParams",
    "AttentionParams",
    "relative_position_bias",
    "locality_complement",
    "rwin_self_attention",
]

POS_HIDDEN = 96


@dataclass(frozen=True)
class PositionBiasParams:
    """Three affine layers (Delta y, Delta x) -> hidden -> hidden -> per-head bias."""

    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor
    w3: Tensor
    b3: Tensor

    def __post_init__(self):
        if self.w1.shape[0] != 2:
            raise ValueError(f"position bias net expects 2 offset inputs, got {self.w1.shape}")
        if self.w1.shape[1] != self.w2.shape[0] or self.w2.shape[1] != self.w3.shape[0]:
            raise ValueError("position bias net layer widths do not chain")

    @property
    def heads(self) -> int:
        return self.w3.shape[1]


@dataclass(frozen=True)
class AttentionParams:
    """Weights for one attention block.

    The query/key/value projections are stored fused as one [C, 3C] map; the
    position-bias network may be shared between blocks (it is a function of
    normalized offsets only, so one network serves every window geometry).
    """

    qkv_weight: Tensor
    qkv_bias: Tensor
    proj_weight: Tensor
    proj_bias: Tensor
    lcm_weight: Tensor | None
    lcm_bias: Tensor | None
    pos_net: PositionBiasParams
    heads: int

    def __post_init__(self):
        c = self.channels
        if self.heads < 2 or self.heads % 2 != 0:
            raise ValueError(f"head count must be even and >= 2, got {self.heads}")
        if c % self.heads != 0:
            raise ValueError(f"channels {c} not divisible by {self.heads} heads")
        if self.qkv_weight.shape != (c, 3 * c):
            raise ValueError(f"fused qkv weight must be [C, 3C], got {self.qkv_weight.shape}")
        if self.proj_weight.shape != (c, c):
            raise ValueError(f"output projection must be [C, C], got {self.proj_weight.shape}")
        if self.pos_net.heads != self.heads:
            raise ValueError(
                f"position bias net emits {self.pos_net.heads} biases for {self.heads} heads"
            )

    @property
    def channels(self) -> int:
        return self.qkv_weight.shape[0]

    @property
    def head_dim(self) -> int:
        return self.channels // self.heads


def _offset_table(sh: int, sw: int, dtype) -> tuple[np.ndarray, np.ndarray]:
    """All distinct relative offsets of an sh x sw window, plus the flat
    [n*n] index mapping pixel pair (i, j) to its offset row."""
    ys, xs = np.meshgrid(np.arange(sh), np.arange(sw), indexing="ij")
    pos = np.stack([ys.ravel(), xs.ravel()], axis=1)
    delta = pos[:, None, :] - pos[None, :, :]
    index = (delta[..., 0] + sh - 1) * (2 * sw - 1) + (delta[..., 1] + sw - 1)
    dys = np.arange(-(sh - 1), sh)
    dxs = np.arange(-(sw - 1), sw)
    grid_y, grid_x = np.meshgrid(dys, dxs, indexing="ij")
    offsets = np.stack(
        [grid_y.ravel() / max(sh - 1, 1), grid_x.ravel() / max(sw - 1, 1)], axis=1
    ).astype(dtype)
    return offsets, index.ravel()


def relative_position_bias(g: WindowGeometry, net: PositionBiasParams) -> Tensor:
    """Per-head additive bias [M, n, n]; entry (m, i, j) depends only on the
    relative offset between pixels i and j."""
    offsets, index = _offset_table(g.sh, g.sw, net.w1.dtype)
    h = ad.relu(ad.linear(Tensor(offsets, dtype=net.w1.dtype), net.w1, net.b1))
    h = ad.relu(ad.linear(h, net.w2, net.b2))
    out = ad.linear(h, net.w3, net.b3)
    n = g.window_pixels
    table = ad.gather(out, index, axis=0)
    table = ad.reshape(table, (n, n, net.heads))
    return ad.transpose(table, (2, 0, 1))


def locality_complement(v: Tensor, params: AttentionParams) -> Tensor:
    """Depthwise 3x3 convolution of the full-resolution value map."""
    if params.lcm_weight is None:
        raise ValueError("attention params carry no locality-complement kernel")
    if params.lcm_weight.shape[2] != v.shape[-1]:
        raise ValueError(
            f"locality complement kernel {params.lcm_weight.shape} does not match channels {v.shape[-1]}"
        )
    return ad.conv2d_3x3(v, params.lcm_weight, params.lcm_bias, depthwise=True)


def _oriented_attention(
    q: Tensor,
    k: Tensor,
    v: Tensor,
    g: WindowGeometry,
    bias: Tensor,
    params: AttentionParams,
    cache: dict,
    probe: dict | None,
) -> Tensor:
    batch = q.shape[0]
    heads = params.heads // 2
    d = params.head_dim
    n = g.window_pixels

    pieces = []
    for t in (q, k, v):
        if g.pad_h or g.pad_w:
            t = ad.pad_reflect_spatial(t, g.pad_h, g.pad_w)
        if g.shifted:
            t = cyclic_shift(t, g.shift_down, g.shift_left)
        t = partition(t, g)  # [N*nw, n, heads*d]
        t = ad.reshape(t, (t.shape[0], n, heads, d))
        pieces.append(ad.transpose(t, (0, 2, 1, 3)))  # [N*nw, heads, n, d]
    qw, kw, vw = pieces

    logits = ad.mul(ad.matmul(qw, ad.transpose(kw, (0, 1, 3, 2))), 1.0 / math.sqrt(d))
    logits = ad.add(logits, bias)
    if g.shifted:
        mask_key = ("mask", g.padded_h, g.padded_w, g.sh, g.sw, g.shift_down, g.shift_left, str(q.dtype))
        mask = cache.get(mask_key)
        if mask is None:
            mask = build_shift_mask(g, dtype=q.dtype).values
            cache[mask_key] = mask
        nw = g.num_windows
        logits = ad.reshape(logits, (batch, nw, heads, n, n))
        logits = ad.add(logits, ad.reshape(mask, (1, nw, 1, n, n)))
        logits = ad.reshape(logits, (batch * nw, heads, n, n))
    attn = ad.softmax_lastdim(logits)
    if probe is not None:
        probe.setdefault("weights", {})[g.orientation] = attn.numpy()
        probe.setdefault("geometries", {})[g.orientation] = g

    y = ad.matmul(attn, vw)  # [N*nw, heads, n, d]
    y = ad.transpose(y, (0, 2, 1, 3))
    y = ad.reshape(y, (y.shape[0], n, heads * d))
    y = merge(y, g, batch, g.padded_h, g.padded_w)
    if g.shifted:
        y = cyclic_shift(y, -g.shift_down, -g.shift_left)
    if g.pad_h or g.pad_w:
        y = ad.narrow(ad.narrow(y, 1, 0, g.height), 2, 0, g.width)
    return y


def rwin_self_attention(
    x: Tensor,
    params: AttentionParams,
    spec: WindowSpec,
    shifted: bool = False,
    lcm: bool = True,
    cache: dict | None = None,
    probe: dict | None = None,
) -> Tensor:
    """Rectangle-window self-attention over [N, H, W, C].

    ``cache`` memoizes position-bias tables and shift masks per geometry; pass
    a fresh dict whenever the parameters may have changed since the cached
    entries were built (e.g. between training steps).
    """
    if x.ndim != 4:
        raise ValueError(f"attention expects rank 4 input, got {x.shape}")
    c = params.channels
    if x.shape[-1] != c:
        raise ValueError(f"input channels {x.shape[-1]} do not match parameters ({c})")
    if cache is None:
        cache = {}
    n_batch, height, width, _ = x.shape
    half = c // 2
    m_half = params.heads // 2

    qkv = ad.linear(x, params.qkv_weight, params.qkv_bias)
    q = ad.narrow(qkv, -1, 0, c)
    k = ad.narrow(qkv, -1, c, c)
    v = ad.narrow(qkv, -1, 2 * c, c)

    outs = []
    for oi, orientation in enumerate((HORIZONTAL, VERTICAL)):
        g = resolve_geometry(spec, orientation, height, width, shifted)
        bias_key = ("bias", g.sh, g.sw, str(x.dtype))
        bias_full = cache.get(bias_key)
        if bias_full is None:
            bias_full = relative_position_bias(g, params.pos_net)
            cache[bias_key] = bias_full
        bias = ad.narrow(bias_full, 0, oi * m_half, m_half)
        qo = ad.narrow(q, -1, oi * half, half)
        ko = ad.narrow(k, -1, oi * half, half)
        vo = ad.narrow(v, -1, oi * half, half)
        outs.append(_oriented_attention(qo, ko, vo, g, bias, params, cache, probe))

    y = ad.concat(outs, axis=-1)
    if lcm:
        y = ad.add(y, locality_complement(v, params))
    return ad.linear(y, params.proj_weight, params.proj_bias)
