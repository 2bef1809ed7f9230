"""Fit the kernel-route constant against the pipeline on several grids."""

import argparse
import json

from ricciquant.algebra import SpaceParams
from ricciquant.grid import GridSpec
from ricciquant.products import ProductConfig, calibrate_constant
from ricciquant.suites import _gaussians


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--theta", type=float, nargs="+", default=[0.25, 0.5, 1.0])
    p.add_argument("--points", type=int, nargs="+", default=[64, 128])
    args = p.parse_args()
    rows = []
    for n, grids in ((0, [GridSpec.box(0, -6, 6, k) for k in args.points]), (1, [GridSpec.box(1, -4, 4, 12)])):
        for spec in grids:
            for th in args.theta:
                cfg = ProductConfig(SpaceParams(n), th, grid=spec, boundary_tol=None)
                ratio, resid = calibrate_constant(cfg, _gaussians(n)[:2])
                rows.append(dict(n=n, points=spec.axes[0].points, theta=th, ratio=ratio, residual=resid))
                print(json.dumps(rows[-1]))


if __name__ == "__main__":
    main()
