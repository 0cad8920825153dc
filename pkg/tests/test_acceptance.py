"""Acceptance suite: fourteen criteria at their stated tolerances.

Each test records one PASS/FAIL line (shown in the terminal summary) before
asserting. Slow criteria are marked ``slow``.
"""
import math
import time

import numpy as np
import pytest

from lorentz_tori import (FourierMode, TorusModel, build_table, burago_split,
                          construct_alpha_maximal, dual_stable, htau_estimate, integrate,
                          separable_oracle_1p1, stable_time_separation, time_separation)
from lorentz_tori.checks import (cone_checks, default_covectors, sample_margin_chords)
from lorentz_tori.cli import main
from lorentz_tori.geometry import MinkowskiSpace
from lorentz_tori.stable import subarc_rotation_spread, support_set, velocity_margin

from conftest import ACCEPTANCE_LINES, CONFIGS

SEED = 20240


def verdict(num: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  C{num:02d} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def single():
    return TorusModel.build(2, 1.0, [FourierMode((1, 0), 0.3, 0.0)])


@pytest.fixture(scope="module")
def table(single):
    """Level-2, depth-5 table with neighbour probes on the single-mode model."""
    return build_table(single, 0.2, 2, 5, seed=SEED)


def test_c01_flat_oracle():
    flat = TorusModel.flat(2)
    rng = np.random.default_rng(SEED + 1)
    vs = sample_margin_chords(flat.space, 0.1, 50, rng, 0.05, 10.0)
    assert np.all(flat.space.norm(vs) <= 10.0)
    t0 = time.perf_counter()
    rel = [abs(time_separation(flat, np.zeros(2), v).lower / float(flat.space.magnitude(v)) - 1)
           for v in vs]
    wall = time.perf_counter() - t0
    verdict(1, "flat oracle", max(rel) <= 1e-6 and wall <= 60,
            f"max rel err {max(rel):.2e} (tol 1e-6), {wall:.1f} s (limit 60 s)")


def test_c02_separable_oracle(single):
    rng = np.random.default_rng(SEED + 2)
    chords = sample_margin_chords(single.space, 0.2, 20, rng, 1.0, 16.0)
    t0 = time.perf_counter()
    rel = []
    for v in chords:
        x = rng.uniform(0.0, 1.0, size=2)
        exact = separable_oracle_1p1(single.factor, x, x + v)
        rel.append(abs(time_separation(single, x, x + v).lower - exact) / exact)
    wall = time.perf_counter() - t0
    verdict(2, "separable oracle", max(rel) <= 1e-3 and wall <= 300,
            f"max rel err {max(rel):.2e} (tol 1e-3), {wall:.1f} s (limit 300 s)")


def test_c03_geodesic_energy(single):
    x0, v0 = np.array([0.1, 0.0]), np.array([1.0, 0.4])
    h = 1e-3
    arcs = [integrate(single, x0, v0, 1.0, h / 2 ** k) for k in range(3)]
    drift = arcs[0].energy_drift
    ends = [np.concatenate([a.x[-1], a.v[-1]]) for a in arcs]
    order = math.log2(np.linalg.norm(ends[0] - ends[1]) / np.linalg.norm(ends[1] - ends[2]))
    verdict(3, "geodesic energy", drift <= 1e-8 and abs(order - 4.0) <= 0.3,
            f"drift {drift:.2e} (tol 1e-8), order {order:.3f} (4.0 +- 0.3)")


def test_c04_cone_inequalities():
    results = []
    for dim, kind in ((2, "euclidean"), (3, "euclidean"), (2, "sup"), (3, "sup")):
        results += [(f"m={dim} {kind} {r.name}", r)
                    for r in cone_checks(MinkowskiSpace(dim, kind), 10_000, SEED)]
    bad = [name for name, r in results if not r.passed]
    worst = max(r.measured for _, r in results)
    verdict(4, "cone inequalities", not bad,
            f"{len(results)} checks x 1e4 samples, worst excess {worst:.2e} (slack 1e-9)"
            + (f", failing: {bad}" if bad else ""))


def test_c05_table_sandwich(single, table):
    fac = single.factor
    mag = single.space.magnitude(table.directions)
    lo = table.values + table.errs - fac.inf_bound * mag
    hi = fac.sup_bound * mag - (table.values - table.errs)
    bad = int(np.sum(lo < 0) + np.sum(hi < 0))
    verdict(5, "table sandwich", bad == 0,
            f"{bad} violations over {len(mag)} directions, min margins {lo.min():.3g}, "
            f"{hi.min():.3g}")


@pytest.mark.slow
def test_c06_growth_constant_surrogate(single):
    fine = build_table(single, 0.2, 3, 7, seed=SEED, probes=False)
    Ks = [max(abs(time_separation(single, np.zeros(2), s * d).lower - s * val)
              for d, val in zip(fine.directions, fine.values)) for s in (4.0, 8.0, 16.0)]
    var = (max(Ks) - min(Ks)) / min(Ks)
    verdict(6, "growth constant surrogate", var < 0.25,
            "K at |v| = 4, 8, 16: " + ", ".join(f"{k:.4g}" for k in Ks)
            + f", variation {var:.1%} (limit 25%)")


def test_c07_deficits(table):
    sup = [p["superadditivity"] + p["super_err"] for p in table.probes if p["weight"] == 0.5]
    con = [p["concavity"] + p["concave_err"] for p in table.probes]
    bad = sum(s < 0 for s in sup) + sum(c < 0 for c in con)
    verdict(7, "superadditivity and concavity", bad == 0,
            f"{bad} violations over {len(sup)} sums and {len(con)} midpoints, "
            f"min slack {min(sup):.3g}, {min(con):.3g}")


@pytest.mark.slow
def test_c08_doubling_convergence(single):
    rng = np.random.default_rng(SEED + 8)
    worst, bad = -math.inf, 0
    for v in sample_margin_chords(single.space, 0.2, 10, rng, 1.0, 1.0):
        sv = stable_time_separation(single, v, depth=10, seed=SEED)
        gaps = [abs(d / t - sv.value) for t, d in sv.samples[1:6]]
        rise = max((gaps[i + 1] - gaps[i]) / sv.solver_tol for i in range(4))
        worst = max(worst, rise)
        bad += rise > 1.0
    verdict(8, "doubling convergence", bad == 0,
            f"{bad}/10 directions non-monotone, worst rise {worst:.3g} solver tolerances")


def test_c09_duality(table):
    flat_table = build_table(TorusModel.flat(2), 0.2, 2, 3, seed=SEED, probes=False)
    flat_dt = dual_stable(np.array([1.0, 0.0]), flat_table).value
    pts = list(zip(table.directions, table.values, table.errs))
    pts += [(p["weight"] * table.directions[p["i"]] + (1 - p["weight"]) * table.directions[p["j"]],
             p["value"], p["err"]) for p in table.probes]
    worst = -math.inf
    for alpha in default_covectors(2):
        du = dual_stable(alpha, table)
        for v, val, e in pts:
            worst = max(worst, du.value * val - float(alpha @ v) - (du.value * e + du.err * val))
    verdict(9, "duality", abs(flat_dt - 1) <= 1e-3 and worst <= 0,
            f"flat dual(dt) = {flat_dt:.8f}, worst support excess {worst:.3g} over "
            f"{len(pts)} directions")


@pytest.mark.slow
def test_c10_htau_slope(table):
    parts, ok = [], True
    for alpha in default_covectors(2):
        du = dual_stable(alpha, table)
        hv = htau_estimate(alpha, 32.0, table, dual=du, direct=True)
        ratio = 32.0 / hv.direct
        gap = abs(ratio - du.value) / du.err
        ok &= gap <= 2.0
        parts.append(f"{ratio:.5f} vs {du.value:.5f} ({gap:.2f} radii)")
    verdict(10, "progress slope", ok, "; ".join(parts))


@pytest.mark.slow
def test_c11_velocity_cone(single, table):
    deltas = []
    for H in (8.0, 16.0, 32.0):
        deltas.append(min(velocity_margin(construct_alpha_maximal(single, a, H, table),
                                          single.space) for a in default_covectors(2)))
    ok = min(deltas) > 0 and all(deltas[i + 1] >= deltas[i] for i in range(2))
    verdict(11, "velocity margin", ok,
            "delta at horizons 8, 16, 32: " + ", ".join(f"{d:.4f}" for d in deltas))


@pytest.mark.slow
def test_c12_rotation_convergence(single, table):
    parts, ok = [], True
    for alpha in default_covectors(2):
        arc = construct_alpha_maximal(single, alpha, 96.0, table)
        sup = support_set(alpha, table)
        s8 = subarc_rotation_spread(arc, table, sup, 8.0)
        s16 = subarc_rotation_spread(arc, table, sup, 16.0)
        ok &= s16 <= s8
        parts.append(f"{s8:.3g} -> {s16:.3g}")
    verdict(12, "rotation convergence", ok, "spread at threshold 8 -> 16: " + ", ".join(parts))


def test_c13_burago_split():
    rng = np.random.default_rng(SEED + 13)
    worst = 0.0
    for dim in (2, 3):
        for _ in range(20):
            P = np.cumsum(rng.normal(size=(rng.integers(3, 30), dim)), axis=0)
            res = burago_split(P)
            worst = max(worst, res.residual / np.linalg.norm(P[-1] - P[0]))
    verdict(13, "burago split", worst <= 1e-4,
            f"worst residual / |displacement| {worst:.2e} over 40 polylines (tol 1e-4)")


@pytest.mark.slow
@pytest.mark.parametrize("name", ["flat", "single_mode"])
def test_c14_verify_quick(name, tmp_path):
    t0 = time.perf_counter()
    code = main(["verify", "--config", str(CONFIGS / f"{name}.ini"), "--level", "quick",
                 "--out", str(tmp_path)])
    wall = time.perf_counter() - t0
    verdict(14, f"verify quick [{name}]", code == 0 and wall < 600,
            f"exit {code}, {wall:.1f} s (limit 600 s)")
