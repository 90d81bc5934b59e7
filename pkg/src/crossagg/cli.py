"""Command-line entry point.

Subcommands: ``analyze`` (cost report for a config), ``selftest`` (invariant
checks), ``infer`` (restore one image), ``overfit`` (toy training demo), and
``metrics`` (PSNR/SSIM between two images). Diagnostics go to stderr; the
exit code is 0 exactly when the documented success condition held.
"""

from __future__ import annotations

import argparse
import sys

from .analysis import model_flops, report_render
from .harness import restore_image, run_overfit
from .imaging import load_image, psnr, save_image, ssim
from .model import load_weights, parameter_schema, parse_config

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crossagg",
        description="rectangle/axial window restoration model: analysis, inference, metrics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="print the FLOPs/parameter report for a config")
    p.add_argument("--config", required=True, help="model config file")
    p.add_argument("--height", type=int, default=128, help="input height (default 128)")
    p.add_argument("--width", type=int, default=128, help="input width (default 128)")

    p = sub.add_parser("selftest", help="run the built-in invariant checks")
    p.add_argument("--filter", default=None, help="only run checks whose name contains this")

    p = sub.add_parser("infer", help="restore one image")
    p.add_argument("--config", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--ensemble", action="store_true", help="average the 8 dihedral transforms")

    p = sub.add_parser("overfit", help="train the tiny demo model on one fixed patch")
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("metrics", help="PSNR/SSIM between a reference and a test image")
    p.add_argument("--ref", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--y", action="store_true", help="evaluate on the luma channel")
    p.add_argument("--crop", type=int, default=0, help="border pixels to ignore per side")
    return parser


def _cmd_analyze(args) -> int:
    config = parse_config(args.config)
    print(report_render(model_flops(config, args.height, args.width)))
    return 0


def _cmd_selftest(args) -> int:
    from .selftest import run_selftests

    return 0 if run_selftests(args.filter) else 1


def _cmd_infer(args) -> int:
    config = parse_config(args.config)
    expected = [name for name, _, _ in parameter_schema(config)]
    store = load_weights(args.weights, expected_names=expected)
    img = load_image(args.input)
    out = restore_image(store, config, img, ensemble=args.ensemble)
    save_image(out, args.output)
    return 0


def _cmd_overfit(args) -> int:
    every = max(1, args.steps // 10)

    def on_step(step, loss):
        if step % every == 0 or step == args.steps - 1:
            print(f"step {step:4d}  loss={loss:.6f}")

    result = run_overfit(steps=args.steps, seed=args.seed, on_step=on_step)
    print(
        f"loss {result.initial_loss:.6f} -> {result.final_loss:.6f} "
        f"({100.0 * result.reduction:.1f}% reduction)"
    )
    return 0 if result.reduction >= 0.9 else 1


def _cmd_metrics(args) -> int:
    ref = load_image(args.ref)
    test = load_image(args.test)
    mode = "y" if args.y else "rgb"
    p = psnr(ref, test, mode, args.crop)
    s = ssim(ref, test, mode, args.crop)
    print(f"PSNR={p:.4f} SSIM={s:.4f}")
    return 0


_COMMANDS = {
    "analyze": _cmd_analyze,
    "selftest": _cmd_selftest,
    "infer": _cmd_infer,
    "overfit": _cmd_overfit,
    "metrics": _cmd_metrics,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse already wrote the diagnosis to stderr
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except BrokenPipeError:
        return 1
    except Exception as e:  # noqa: BLE001 - one-line diagnosis, nonzero exit
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
