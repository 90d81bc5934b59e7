"""Overfit the tiny model on one fixed patch and print the loss curve.

Drives the complete forward/backward stack (windowed attention, position
bias network, locality complement, staged sub-pixel head, Adam) on CPU in
well under a minute.
"""

import argparse
import sys

from crossagg.harness import run_overfit


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=500)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--learning-rate", type=float, default=1e-3)
    args = parser.parse_args()

    def on_step(step, loss):
        if step % 25 == 0 or step == args.steps - 1:
            print(f"step {step:4d}  loss={loss:.6f}")

    result = run_overfit(steps=args.steps, seed=args.seed, learning_rate=args.learning_rate, on_step=on_step)
    print(
        f"loss {result.initial_loss:.6f} -> {result.final_loss:.6f} "
        f"({100.0 * result.reduction:.1f}% reduction)"
    )
    return 0 if result.reduction >= 0.9 else 1


if __name__ == "__main__":
    sys.exit(main())
