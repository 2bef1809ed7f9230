"""Acceptance criteria 1-9; each test records one PASS/FAIL line, printed in the summary."""

import dataclasses
import math
import time

import numpy as np
import pytest

from ricciquant import cochains as co
from ricciquant import multipliers as mu
from ricciquant import products as pr
from ricciquant.algebra import SpaceParams
from ricciquant.grid import GridSpec
from ricciquant.suites import (algebra_suite, cochain_identity_residuals, commutator_slope,
                               connection_residuals, formal_associativity, gaussian_idempotent,
                               phase_invariance_residuals, products_battery,
                               symmetric_space_residuals, transport_slope, SuiteParams)
from ricciquant.transforms import FORWARD, T_apply, TwistParams

from .acceptance_log import record

SEED = 20240601


def _fmt(d):
    return ", ".join(f"{k}={v:.2e}" for k, v in d.items())


def test_criterion_1_symmetric_space_axioms():
    t0 = time.perf_counter()
    worst = {"involution": 0.0, "braid": 0.0}
    for n in (0, 1, 2):
        r = symmetric_space_residuals(n, 1000, SEED + n)
        for k in worst:
            worst[k] = max(worst[k], r[k])
    dt = time.perf_counter() - t0
    ok = worst["involution"] < 1e-12 and worst["braid"] < 1e-9 and dt < 5
    record(1, ok, f"{_fmt(worst)}, {dt:.2f} s")
    assert ok


def test_criterion_2_algebra_suite():
    t0 = time.perf_counter()
    rep = algebra_suite(SuiteParams(seed=SEED))
    dt = time.perf_counter() - t0
    dims = {c.id: c.note for c in rep.checks if c.id.endswith(("bivector_dim", "h2_dim"))}
    gaps = min(c.residual for c in rep.checks if c.id.endswith("svd_gap"))
    worst = max(c.residual for c in rep.checks if c.tolerance == 1e-12)
    ok = rep.passed and dt < 30
    record(2, ok, f"worst identity {worst:.1e}, {dims}, min gap {gaps:.1e}, {dt:.1f} s")
    assert ok, rep.failed()


def test_criterion_3_phase_amplitude_identities():
    t0 = time.perf_counter()
    worst = {}
    for n in (0, 1, 2):
        r = phase_invariance_residuals(n, 1000, SEED + n)
        r["admissible"] = co.admissibility_check(co.phase_cochain(), n, 1000, SEED + n)["admissible"].residual
        for k, v in r.items():
            worst[k] = max(worst.get(k, 0.0), v)
    dt = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-9 and dt < 5
    record(3, ok, f"{_fmt(worst)}, {dt:.2f} s")
    assert ok


def test_criterion_4_cochain_identities():
    worst = {"delta2": 0.0, "delta_op2": 0.0, "heuristic_ratio": 0.0}
    for n in (0, 1):
        r = cochain_identity_residuals(n, 1000, SEED + n)
        for k in worst:
            worst[k] = max(worst[k], r[k])
    ok = max(worst.values()) < 1e-12
    record(4, ok, _fmt(worst))
    assert ok


def test_criterion_5_moyal_core():
    t0 = time.perf_counter()
    idem = {f"idempotent_{th}": gaussian_idempotent(th, 256) for th in (0.5, 1.0)}
    slope, _ = commutator_slope()
    assoc = all(formal_associativity(n, 4, SEED + n) for n in (0, 1))
    dt = time.perf_counter() - t0
    ok = max(idem.values()) < 1e-6 and abs(slope - 2) <= 0.2 and assoc and dt < 60
    record(5, ok, f"{_fmt(idem)}, commutator slope {slope:.3f}, formal assoc {assoc}, {dt:.1f} s")
    assert ok


def test_criterion_6_star_product_battery():
    t0 = time.perf_counter()
    r0 = products_battery(0, 0.5, 128, SEED)
    r1 = products_battery(1, 0.5, 12, SEED)
    dt = time.perf_counter() - t0
    vals = {"assoc_n0": r0["associativity"].residual,
            "kernel_n0": r0["kernel_vs_pipeline"].residual,
            "kernel_n1": r1["kernel_vs_pipeline"].residual}
    ok = vals["assoc_n0"] < 1e-4 and vals["kernel_n0"] < 1e-3 and vals["kernel_n1"] < 5e-2 and dt < 600
    record(6, ok, f"{_fmt(vals)}, {dt:.1f} s")
    assert ok


def _hilbert_residuals():
    spec = GridSpec.box(0, -6, 6, 128)
    cfg = pr.ProductConfig(SpaceParams(0), 0.5, grid=spec)
    bat = products_battery(0, 0.5, 128, SEED)
    out = {"compat": bat["hilbert_compatibility"].residual,
           "invariance": bat["inner_product_invariance"].residual}
    tracial = mu.tracial_multiplier(0, psi=lambda th, xi: np.arctan(th * xi))
    tr = pr.trace_symmetry_check(dataclasses.replace(cfg, tau=tracial), seed=SEED)
    out["trace_tracial"] = tr.info["trace_residual"]
    unit = tr.info["unitarity_residual"]
    v = pr.Gaussian((0.2, 0.1, 0.0, -0.1), (0.8, 1.5, 1.5, 2.0)).sample(GridSpec.box(1, -6, 6, 32))
    Tv = T_apply(v, TwistParams(0.25, 1), mu.tracial_multiplier(1), FORWARD, None)
    out["unitarity"] = max(unit, abs(Tv.norm() / v.norm() - 1))
    nt = pr.trace_symmetry_check(dataclasses.replace(cfg, tau=pr.nontracial_witness()), seed=SEED)
    out["trace_witness"] = nt.info["trace_residual"]
    out["closedness_witness"] = nt.info["closedness_residual"]
    return out


def test_criterion_7_hilbert_structure():
    r = _hilbert_residuals()
    attainable = (r["compat"] < 1e-6 and r["invariance"] < 1e-6 and r["unitarity"] < 1e-6
                  and r["trace_tracial"] < 1e-6 and r["closedness_witness"] > 1e-3)
    literal = r["trace_witness"] > 1e-3
    record(7, attainable and literal,
           f"{_fmt(r)}; trace-symmetry witness for non-tracial tau unattainable "
           f"(int T f = exp(tau(0)) int f), closedness witness used instead")
    assert attainable


@pytest.mark.xfail(strict=True, reason="int u*v = int v*u for every multiplier, so the "
                   "non-tracial trace-symmetry witness stays at rounding level")
def test_criterion_7_literal_trace_witness():
    assert _hilbert_residuals()["trace_witness"] > 1e-3


def test_criterion_8_asymptotics():
    slope_T, _ = transport_slope()
    cfg = pr.ProductConfig(SpaceParams(0), 0.5, grid=GridSpec.box(0, -6, 6, 128))
    asym = pr.asymptotic_compare(cfg, orders=1)
    cs = [(lambda xi, k=k: xi ** k / math.factorial(k)) for k in range(1, 5)]
    borel = mu.taylor_match(mu.borel_realize(cs), cs, np.linspace(-5, 5, 51))
    vals = {"transport_slope": slope_T, "order0_slope": asym.info["slope_0"],
            "order1_slope": asym.info["slope_1"], "borel_taylor": borel}
    ok = (abs(slope_T - 2) <= 0.2 and vals["order0_slope"] >= 1 and vals["order1_slope"] >= 2
          and borel < 1e-4)
    record(8, ok, _fmt(vals))
    assert ok


def test_criterion_9_connection():
    worst = {}
    for n in (0, 1):
        tors, nab = connection_residuals(n, 20, SEED + n)
        worst[f"torsion_n{n}"], worst[f"nabla_omega_n{n}"] = tors, nab
    ok = max(worst.values()) < 1e-6
    record(9, ok, _fmt(worst))
    assert ok
