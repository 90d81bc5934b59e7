"""Shared test utilities: small random parameter sets, numpy views of them,
and a finite-difference gradient checker."""

from pathlib import Path

import numpy as np

from crossagg import autodiff as ad
from crossagg.attention import AttentionParams, PositionBiasParams
from crossagg.autodiff import GradientTape, Tensor, backward


def repo_root() -> Path:
    return Path(__file__).resolve().parent.parent


def rand(shape, seed, scale=0.1, dtype=np.float64) -> np.ndarray:
    return np.random.default_rng(seed).normal(0.0, scale, size=shape).astype(dtype)


def tiny_attention_params(
    c=4, heads=2, seed=0, dtype=np.float64, hidden=8, scale=0.1, lcm=True
) -> AttentionParams:
    rng = np.random.default_rng(seed)

    def t(*shape):
        return Tensor(rng.normal(0.0, scale, size=shape), dtype=dtype)

    net = PositionBiasParams(
        w1=t(2, hidden),
        b1=t(hidden),
        w2=t(hidden, hidden),
        b2=t(hidden),
        w3=t(hidden, heads),
        b3=t(heads),
    )
    return AttentionParams(
        qkv_weight=t(c, 3 * c),
        qkv_bias=t(3 * c),
        proj_weight=t(c, c),
        proj_bias=t(c),
        lcm_weight=t(3, 3, c, 1) if lcm else None,
        lcm_bias=t(c) if lcm else None,
        pos_net=net,
        heads=heads,
    )


def attention_params_numpy(p: AttentionParams) -> dict:
    out = {
        "qkv_w": p.qkv_weight.numpy(),
        "qkv_b": p.qkv_bias.numpy(),
        "proj_w": p.proj_weight.numpy(),
        "proj_b": p.proj_bias.numpy(),
        "w1": p.pos_net.w1.numpy(),
        "b1": p.pos_net.b1.numpy(),
        "w2": p.pos_net.w2.numpy(),
        "b2": p.pos_net.b2.numpy(),
        "w3": p.pos_net.w3.numpy(),
        "b3": p.pos_net.b3.numpy(),
    }
    if p.lcm_weight is not None:
        out["lcm_w"] = p.lcm_weight.numpy()
        out["lcm_b"] = p.lcm_bias.numpy()
    return out


def eval_pos_net_numpy(p: AttentionParams, offsets: np.ndarray) -> np.ndarray:
    """Directly evaluate the offset network on [K, 2] normalized offsets."""
    h = np.maximum(offsets @ p.pos_net.w1.numpy() + p.pos_net.b1.numpy(), 0.0)
    h = np.maximum(h @ p.pos_net.w2.numpy() + p.pos_net.b2.numpy(), 0.0)
    return h @ p.pos_net.w3.numpy() + p.pos_net.b3.numpy()


def assert_grads_match_fd(build, arrays: dict, step=1e-4, rtol=1e-3, atol=1e-6):
    """Check tape gradients of sum(build(tensors) * R) against central
    finite differences for every element of every input array.

    ``build`` maps a dict of float64 Tensors to an output Tensor; ``arrays``
    are the numpy starting values.
    """
    tensors = {k: Tensor(v, dtype=np.float64) for k, v in arrays.items()}
    probe = np.random.default_rng(99).normal(size=build(tensors).shape)
    probe_t = Tensor(probe, dtype=np.float64)

    tape = GradientTape()
    tape.watch(tensors.values())
    with tape:
        loss = ad.sum_all(ad.mul(build(tensors), probe_t))
    analytic = backward(tape, loss)

    def loss_at(variant: dict) -> float:
        out = build({k: Tensor(v, dtype=np.float64) for k, v in variant.items()})
        return float((out.data * probe).sum())

    for key, base in arrays.items():
        an = analytic[tensors[key]].numpy()
        fd = np.zeros_like(np.asarray(base, dtype=np.float64))
        flat = fd.reshape(-1)
        for i in range(flat.size):
            plus = {k: np.array(v, dtype=np.float64) for k, v in arrays.items()}
            minus = {k: np.array(v, dtype=np.float64) for k, v in arrays.items()}
            plus[key].reshape(-1)[i] += step
            minus[key].reshape(-1)[i] -= step
            flat[i] = (loss_at(plus) - loss_at(minus)) / (2.0 * step)
        assert np.allclose(an, fd, rtol=rtol, atol=atol), (
            key,
            np.max(np.abs(an - fd)),
        )
