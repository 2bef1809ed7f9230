"""Residuals of the pipeline product against the formal expansion over a theta sweep."""

import argparse
import csv
import sys

import sympy as sp

from ricciquant import multipliers as mu
from ricciquant.algebra import SpaceParams
from ricciquant.grid import GridSpec
from ricciquant.products import ProductConfig, asymptotic_compare


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--thetas", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.025])
    p.add_argument("--points", type=int, default=128)
    p.add_argument("--orders", type=int, default=2)
    p.add_argument("--borel", type=float, default=None,
                   help="use tau = beta i theta xi^2 (Borel-realized) with this beta")
    args = p.parse_args()
    spec = GridSpec.box(0, -6, 6, args.points)
    tau, taylor = mu.ONE, None
    if args.borel is not None:
        beta = args.borel
        tau = mu.borel_realize([lambda xi: 1j * beta * xi ** 2], mu.BorelSchedule(eps0=1, window=1))
        taylor = [sp.I * sp.nsimplify(beta) * sp.Symbol("xi") ** 2]
    rep = asymptotic_compare(ProductConfig(SpaceParams(0), 0.5, tau, grid=spec), args.orders,
                             args.thetas, tau_taylor=taylor)
    w = csv.writer(sys.stdout)
    w.writerow(["theta", "order", "residual", "corrected_slope", "plain_slope"])
    for K, res in enumerate(rep.info["residuals"]):
        for th, r in zip(rep.info["thetas"], res):
            w.writerow([th, K, r, rep.info[f"slope_{K}"], rep.info[f"plain_slope_{K}"]])


if __name__ == "__main__":
    main()
