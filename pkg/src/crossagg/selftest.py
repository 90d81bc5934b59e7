"""Named, fast invariant checks runnable without a test framework.

Each check raises AssertionError on failure; the runner prints one line per
check and reports overall success. These mirror (a quick subset of) the
pytest property suites so an installed build can be sanity-checked from the
command line.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import replace

import numpy as np

from . import autodiff as ad
from .attention import AttentionParams, PositionBiasParams, rwin_self_attention
from .autodiff import GradientTape, OptimizerHyper, Tensor, adam_step, backward, init_adam_state
from .analysis import model_flops
from .harness import dihedral_inverse, dihedral_transform
from .imaging import bicubic_weights, psnr, ssim
from .model import (
    cat_forward,
    count_params,
    init_params,
    load_weights,
    preset_config,
    save_weights,
)
from .reference import full_attention_oracle
from .windowing import (
    HORIZONTAL,
    VERTICAL,
    WindowSpec,
    build_shift_mask,
    cyclic_shift,
    merge,
    partition,
    resolve_geometry,
)

__all__ = ["CHECKS", "run_selftests"]


def _rng(seed=0):
    return np.random.default_rng(seed)


def _tiny_attention_params(c=4, heads=2, seed=0, dtype=np.float64, hidden=8):
    r = _rng(seed)

    def t(*shape):
        return Tensor(r.normal(0, 0.1, size=shape), dtype=dtype)

    net = PositionBiasParams(
        w1=t(2, hidden), b1=t(hidden), w2=t(hidden, hidden), b2=t(hidden), w3=t(hidden, heads), b3=t(heads)
    )
    return AttentionParams(
        qkv_weight=t(c, 3 * c),
        qkv_bias=t(3 * c),
        proj_weight=t(c, c),
        proj_bias=t(c),
        lcm_weight=t(3, 3, c, 1),
        lcm_bias=t(c),
        pos_net=net,
        heads=heads,
    )


def _params_as_numpy(p: AttentionParams) -> dict:
    return {
        "qkv_w": p.qkv_weight.numpy(),
        "qkv_b": p.qkv_bias.numpy(),
        "proj_w": p.proj_weight.numpy(),
        "proj_b": p.proj_bias.numpy(),
        "lcm_w": p.lcm_weight.numpy(),
        "lcm_b": p.lcm_bias.numpy(),
        "w1": p.pos_net.w1.numpy(),
        "b1": p.pos_net.b1.numpy(),
        "w2": p.pos_net.w2.numpy(),
        "b2": p.pos_net.b2.numpy(),
        "w3": p.pos_net.w3.numpy(),
        "b3": p.pos_net.b3.numpy(),
    }


def check_softmax_rows():
    x = Tensor(_rng(1).uniform(-50, 50, size=(40, 9)))
    s = ad.softmax_lastdim(x).numpy()
    assert np.all(np.abs(s.sum(axis=-1) - 1.0) <= 1e-6)
    masked = ad.softmax_lastdim(Tensor([[0.0, -1e9]])).numpy()
    assert masked[0, 1] < 1e-9 and abs(masked[0, 0] - 1.0) < 1e-6


def check_gelu_values():
    for v in (-3.0, -1.0, 0.0, 0.5, 1.0, 4.0):
        got = ad.gelu(Tensor([v], dtype=np.float64)).numpy()[0]
        want = 0.5 * v * (1.0 + math.erf(v / math.sqrt(2.0)))
        assert abs(got - want) < 1e-12, (v, got, want)


def check_partition_merge_roundtrip():
    x = Tensor(_rng(2).normal(size=(2, 6, 8, 3)))
    g = resolve_geometry(WindowSpec.regular(2, 4), HORIZONTAL, 6, 8)
    back = merge(partition(x, g), g, 2, 6, 8)
    assert np.array_equal(back.data, x.data)


def check_cyclic_shift_group_law():
    x = Tensor(_rng(3).normal(size=(1, 5, 7, 2)))
    y = cyclic_shift(cyclic_shift(x, 2, 3), -2, -3)
    assert np.array_equal(y.data, x.data)


def check_pixel_shuffle_bijection():
    x = Tensor(_rng(4).normal(size=(1, 3, 5, 8)))
    y = ad.pixel_shuffle(x, 2)
    back = np.zeros_like(x.data)
    for c in range(8):
        cc, rem = divmod(c, 4)
        dy, dx = divmod(rem, 2)
        back[0, :, :, c] = y.data[0, dy::2, dx::2, cc]
    assert np.array_equal(back, x.data)


def check_conv_identity():
    c = 3
    k = np.zeros((3, 3, c, c))
    for i in range(c):
        k[1, 1, i, i] = 1.0
    x = Tensor(_rng(5).normal(size=(1, 5, 6, c)))
    y = ad.conv2d_3x3(x, Tensor(k, dtype=x.dtype))
    assert np.allclose(y.data, x.data)


def check_mask_regions():
    g = resolve_geometry(WindowSpec.regular(2, 2), HORIZONTAL, 4, 4, shifted=True)
    mask = build_shift_mask(g).values.numpy()
    assert np.array_equal(mask, mask.transpose(0, 2, 1))
    assert np.all(np.diagonal(mask, axis1=1, axis2=2) == 0.0)


def check_attention_bruteforce():
    for spec, shape in ((WindowSpec.regular(2, 4), (4, 8, 4)), (WindowSpec.axial(2), (6, 6, 4))):
        h, w, c = shape
        params = _tiny_attention_params(c=c, heads=2, seed=7)
        x = _rng(8).normal(size=(h, w, c))
        got = rwin_self_attention(Tensor(x[None], dtype=np.float64), params, spec, lcm=True).numpy()[0]
        want = full_attention_oracle(x, _params_as_numpy(params), spec, heads=2, lcm=True)
        assert np.max(np.abs(got - want)) <= 1e-9, spec


def check_shifted_attention_support():
    spec = WindowSpec.regular(2, 4)
    c = 4
    params = _tiny_attention_params(c=c, heads=2, seed=9)
    x = Tensor(_rng(10).normal(scale=0.5, size=(1, 6, 8, c)), dtype=np.float64)
    probe: dict = {}
    rwin_self_attention(x, params, spec, shifted=True, lcm=False, probe=probe)
    for orientation in (HORIZONTAL, VERTICAL):
        g = probe["geometries"][orientation]
        weights = probe["weights"][orientation]
        ids = np.zeros((g.padded_h, g.padded_w), dtype=int)
        ids[: g.shift_down, :] += 2
        ids[:, g.padded_w - g.shift_left :] += 1
        win = (
            ids.reshape(g.padded_h // g.sh, g.sh, g.padded_w // g.sw, g.sw)
            .transpose(0, 2, 1, 3)
            .reshape(-1, g.window_pixels)
        )
        differ = win[:, :, None] != win[:, None, :]
        assert np.all(weights[differ[:, None, :, :].repeat(weights.shape[1], 1)] < 1e-9)


def check_gradient_small():
    spec = WindowSpec.regular(2, 2)
    c, heads = 4, 2
    params = _tiny_attention_params(c=c, heads=heads, seed=11, hidden=6)
    x = Tensor(_rng(12).normal(size=(1, 4, 4, c)), dtype=np.float64)
    probe_weights = [params.qkv_weight, params.pos_net.w3, params.lcm_bias]
    tape = GradientTape()
    tape.watch(probe_weights)
    with tape:
        y = rwin_self_attention(x, params, spec, shifted=True, lcm=True)
        loss = ad.sum_all(ad.mul(y, y))
    grads = backward(tape, loss)

    def loss_at(pt: Tensor, flat_idx: int, delta: float) -> float:
        data = pt.numpy()
        data.flat[flat_idx] += delta
        repl = Tensor(data, dtype=np.float64)
        mapping = {id(pt): repl}
        new = AttentionParams(
            qkv_weight=mapping.get(id(params.qkv_weight), params.qkv_weight),
            qkv_bias=params.qkv_bias,
            proj_weight=params.proj_weight,
            proj_bias=params.proj_bias,
            lcm_weight=params.lcm_weight,
            lcm_bias=mapping.get(id(params.lcm_bias), params.lcm_bias),
            pos_net=PositionBiasParams(
                w1=params.pos_net.w1,
                b1=params.pos_net.b1,
                w2=params.pos_net.w2,
                b2=params.pos_net.b2,
                w3=mapping.get(id(params.pos_net.w3), params.pos_net.w3),
                b3=params.pos_net.b3,
            ),
            heads=heads,
        )
        out = rwin_self_attention(x, new, spec, shifted=True, lcm=True)
        return ad.sum_all(ad.mul(out, out)).item()

    step = 1e-4
    for pt in probe_weights:
        g = grads[pt].numpy()
        for flat_idx in range(0, pt.size, max(1, pt.size // 5)):
            fd = (loss_at(pt, flat_idx, step) - loss_at(pt, flat_idx, -step)) / (2 * step)
            an = g.flat[flat_idx]
            assert abs(fd - an) <= 1e-3 * max(1.0, abs(fd), abs(an)), (fd, an)


def check_zero_weight_car_identity():
    config = replace(
        preset_config("cat_a_car"),
        channels=8,
        num_groups=1,
        blocks_per_group=2,
        num_heads=2,
        axial_lengths=(2,),
        mlp_ratio=2.0,
    )
    store = init_params(config, seed=0)
    zeros = {name: Tensor(np.zeros(t.shape, dtype=np.float32)) for name, t in store.items()}
    store = store.with_values(zeros)
    x = Tensor(_rng(13).uniform(0, 1, size=(1, 8, 8, 1)).astype(np.float32))
    y = cat_forward(x, store, config)
    assert np.array_equal(y.data, x.data)


def check_adam_first_step():
    p = {"w": Tensor(np.zeros(3, dtype=np.float64))}
    g = {"w": Tensor(np.array([0.5, -2.0, 1e-3]))}
    hyper = OptimizerHyper(learning_rate=0.01, eps=1e-12)
    new, _ = adam_step(p, g, init_adam_state(p), hyper)
    assert np.allclose(np.abs(new["w"].numpy()), 0.01, atol=1e-6)


def check_psnr_closed_form():
    a = np.full((16, 16, 3), 100.0)
    assert abs(psnr(a, a + 1.0) - 20.0 * math.log10(255.0)) < 1e-9
    assert psnr(a, a) == 100.0


def check_ssim_identity():
    a = _rng(14).uniform(0, 255, size=(24, 24, 3))
    assert ssim(a, a) == 1.0


def check_weights_roundtrip():
    config = preset_config("tiny_sr_x2")
    store = init_params(config, seed=3)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "w.catw")
        save_weights(store, path)
        loaded = load_weights(path, expected_names=store.names())
    assert loaded.names() == store.names()
    for name, t in store.items():
        assert np.array_equal(loaded[name].data, t.data), name


def check_bicubic_taps():
    sig = np.zeros(16)
    sig[8] = 1.0
    up = bicubic_weights(16, 32) @ sig
    assert abs(up[17] - 0.5625) < 1e-12
    assert abs(up[19] + 0.0625) < 1e-12
    w = bicubic_weights(33, 11)
    assert np.allclose(w.sum(axis=1), 1.0, atol=1e-12)


def check_dihedral_inverses():
    x = _rng(15).normal(size=(5, 7, 3))
    for k in range(8):
        assert np.array_equal(dihedral_inverse(dihedral_transform(x, k), k), x)


def check_param_count_consistency():
    config = preset_config("tiny_sr_x2")
    assert count_params(config) == init_params(config, seed=0).total_elements()
    big = count_params(preset_config("cat_r_x4"))
    assert abs(big - 16.60e6) <= 0.02 * 16.60e6


def check_flops_tables():
    targets = {
        "cat_r_x4": 292.7e9,
        "cat_a_x4": 360.7e9,
    }
    for name, want in targets.items():
        got = model_flops(preset_config(name), 128, 128).total_flops
        assert abs(got - want) <= 0.02 * want, (name, got)


def check_overfit_smoke():
    from .harness import run_overfit

    result = run_overfit(steps=8, seed=0)
    assert len(result.losses) == 8
    again = run_overfit(steps=8, seed=0)
    assert result.losses == again.losses


CHECKS = {
    "softmax_rows": check_softmax_rows,
    "gelu_values": check_gelu_values,
    "partition_merge_roundtrip": check_partition_merge_roundtrip,
    "cyclic_shift_group_law": check_cyclic_shift_group_law,
    "pixel_shuffle_bijection": check_pixel_shuffle_bijection,
    "conv_identity": check_conv_identity,
    "mask_regions": check_mask_regions,
    "attention_bruteforce": check_attention_bruteforce,
    "shifted_attention_support": check_shifted_attention_support,
    "gradient_small": check_gradient_small,
    "zero_weight_car_identity": check_zero_weight_car_identity,
    "adam_first_step": check_adam_first_step,
    "psnr_closed_form": check_psnr_closed_form,
    "ssim_identity": check_ssim_identity,
    "weights_roundtrip": check_weights_roundtrip,
    "bicubic_taps": check_bicubic_taps,
    "dihedral_inverses": check_dihedral_inverses,
    "param_count_consistency": check_param_count_consistency,
    "flops_tables": check_flops_tables,
    "overfit_smoke": check_overfit_smoke,
}


def run_selftests(name_filter: str | None = None, emit=print) -> bool:
    selected = {k: v for k, v in CHECKS.items() if not name_filter or name_filter in k}
    if not selected:
        emit(f"no selftests match filter {name_filter!r}")
        return False
    ok = True
    for name, fn in selected.items():
        try:
            fn()
        except Exception as e:  # noqa: BLE001 - report and continue
            ok = False
            emit(f"[FAIL] {name}: {e}")
        else:
            emit(f"[PASS] {name}")
    return ok
