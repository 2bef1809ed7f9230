"""Kernel, tracial-kernel and pipeline products side by side, with timings."""

import argparse
import dataclasses
import time

import numpy as np

from ricciquant import multipliers as mu
from ricciquant import products as pr
from ricciquant.algebra import SpaceParams
from ricciquant.grid import GridSpec, rel_l2
from ricciquant.suites import _gaussians


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--points", type=int, nargs="+", default=[64, 128])
    args = p.parse_args()
    taus = {"one": mu.ONE,
            "tracial-arctan": mu.tracial_multiplier(0, psi=lambda th, xi: np.arctan(th * xi)),
            "odd-arctan": mu.Multiplier(lambda th, xi: 1j * np.arctan(th * xi), name="odd")}
    print(f"{'points':>6} {'multiplier':>15} {'route':>15} {'rel_l2':>10} {'seconds':>8}")
    for pts in args.points:
        spec = GridSpec.box(0, -6, 6, pts)
        u, v, _ = (g.sample(spec) for g in _gaussians(0))
        for name, tau in taus.items():
            base = pr.ProductConfig(SpaceParams(0), args.theta, tau, grid=spec)
            ref = pr.star(u, v, base)
            routes = [pr.KERNEL] + ([pr.TRACIAL_KERNEL] if tau.is_tracial else [])
            for route in routes:
                t0 = time.perf_counter()
                w = pr.star(u, v, dataclasses.replace(base, route=route))
                dt = time.perf_counter() - t0
                print(f"{pts:>6} {name:>15} {route:>15} {rel_l2(w, ref):>10.2e} {dt:>8.2f}")


if __name__ == "__main__":
    main()
