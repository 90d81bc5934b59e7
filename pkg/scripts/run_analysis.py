"""Render FLOPs/parameter reports for the stock configurations.

Reproduces the published complexity numbers: the x4 models at a 128x128
input (512x512 output), the x2 locality-complement ablation, and the axial
side-length sweep.
"""

import argparse
import dataclasses

from crossagg.analysis import model_flops, report_render
from crossagg.model import preset_config


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--height", type=int, default=128)
    parser.add_argument("--width", type=int, default=128)
    args = parser.parse_args()

    for name in ("cat_r_x4", "cat_a_x4"):
        print(f"== {name} ==")
        print(report_render(model_flops(preset_config(name), args.height, args.width)))
        print()

    x2 = preset_config("cat_r_x2")
    on = model_flops(x2, args.height, args.width).total_flops
    off = model_flops(dataclasses.replace(x2, use_lcm=False), args.height, args.width).total_flops
    print("== locality complement ablation (x2) ==")
    print(f"with LCM:    {on / 1e9:.2f}G")
    print(f"without LCM: {off / 1e9:.2f}G")
    print(f"delta:       {100.0 * (on - off) / off:.3f}%")
    print()

    print("== axial side-length sweep (x2) ==")
    for lengths in ((2, 2, 2, 2, 2, 2), (2, 2, 2, 4, 4, 4), (4, 4, 4, 4, 4, 4)):
        config = dataclasses.replace(preset_config("cat_a_x2"), axial_lengths=lengths)
        total = model_flops(config, args.height, args.width).total_flops
        print(f"sl={list(lengths)}: {total / 1e9:.2f}G")


if __name__ == "__main__":
    main()
