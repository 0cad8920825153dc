"""Property checks run by ``verify``.

Each check returns a :class:`CheckResult` with a measured value and the
tolerance it was compared against. Checks are ordered from cone geometry up to
rotation vectors of constructed geodesics; all randomness comes from one seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conformal import ConformalFactor, FourierMode, TorusModel
from .geometry import MinkowskiSpace, estimate_cone_constants, sample_cone
from .separation import (separable_oracle_1p1, solver_tolerance,
                         time_separation)
from .stable import (CapMap, _hexnorm, build_table, construct_alpha_maximal, dual_stable,
                     subarc_rotation_spread, support_set, velocity_margin)

SLACK = 1e-9
ORACLE_REL = 1e-3
FLAT_REL = 1e-6
# documented tolerances for the empirical checks
MARGIN_DROP = 0.1          # allowed drop of the velocity margin per horizon doubling
LIPSCHITZ_GROWTH = 1.5  # allowed growth of the difference-quotient max under refinement
GROWTH_RATIO = 4.0     # K estimates may not scale linearly over a 4x range of |v|


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def as_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "measured": _clean(self.measured),
                "tolerance": _clean(self.tolerance), "detail": self.detail}

    def line(self) -> str:
        return (f"{self.status.upper():4s}  {self.name:28s} measured={self.measured:.6g} "
                f"tol={self.tolerance:.6g}  {self.detail}")


def _clean(x: float):
    return None if x is None or not math.isfinite(x) else float(x)


@dataclass
class VerifySettings:
    level: str
    cone_dim: int
    cone_samples: int
    depth: int
    grid: int
    flat_count: int
    oracle_count: int
    sandwich_count: int
    triangle_count: int
    growth_dirs: int
    lipschitz_pairs: int
    horizons: tuple[float, ...]
    thresholds: tuple[float, float]
    covectors: list = field(default_factory=list)

    @classmethod
    def for_level(cls, level: str, dim: int, depth: int, grid: int) -> "VerifySettings":
        if level == "quick":
            return cls("quick", 2, 10_000, 3, 1, 10, 4, 6, 3, 2, 4, (4.0, 8.0, 16.0), (4.0, 8.0))
        if level == "full":
            return cls("full", dim, 10_000, depth, grid, 50, 20, 20, 6, 4, 10,
                       (8.0, 16.0, 32.0), (8.0, 16.0))
        raise ValueError(f"unknown verify level {level!r}")


def reference_single_mode(model: TorusModel) -> TorusModel:
    """``f = 1 + 0.3 cos(2 pi t)`` on the standard lattice, the separable test model."""
    return TorusModel.build(2, 1.0, [FourierMode((1, 0), 0.3, 0.0)],
                            norm_kind=model.space.norm_kind)


def flat_twin(model: TorusModel) -> TorusModel:
    return TorusModel(model.space, model.lattice, ConformalFactor.constant(model.lattice))


def sample_margin_chords(space: MinkowskiSpace, eps: float, n: int, rng, lo: float,
                         hi: float) -> np.ndarray:
    """Random vectors of ``T_eps`` with norm uniform in ``[lo, hi]``."""
    cap = CapMap(space, eps)
    out = []
    while len(out) < n:
        z = rng.uniform(-1.0, 1.0, size=space.dim - 1)
        if space.dim == 3 and _hexnorm(z) > 1:
            continue
        out.append(rng.uniform(lo, hi) * cap(z))
    return np.array(out)


# -- cone geometry ---------------------------------------------------------------


def _push_to_margin(space: MinkowskiSpace, w: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Rescale the spatial part of ``w`` so ``dist(w, dT) / ||w||`` equals ``target``."""
    n = len(w)
    u = w[:, 1:] / np.maximum(np.linalg.norm(w[:, 1:], axis=1, keepdims=True), 1e-300)
    lo, hi = np.zeros(n), np.ones(n)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        W = np.concatenate([np.ones((n, 1)), mid[:, None] * u], axis=1)
        big = space.dist_to_cone_boundary(W) / space.norm(W) > target
        lo, hi = np.where(big, mid, lo), np.where(big, hi, mid)
    return np.concatenate([np.ones((n, 1)), lo[:, None] * u], axis=1) * w[:, :1]


def cone_checks(space: MinkowskiSpace, n: int, seed: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    cc = estimate_cone_constants(space, seed=seed)
    v = sample_cone(space, n, rng)
    w = sample_cone(space, n, rng)
    dv, dw = space.dist_to_cone_boundary(v), space.dist_to_cone_boundary(w)
    nv, nw = space.norm(v), space.norm(w)
    out = []

    def record(name, excess, detail=""):
        excess = np.asarray(excess, dtype=float)
        bad = int(np.sum(excess > SLACK))
        out.append(CheckResult(name, bad == 0, float(np.max(excess)), SLACK,
                               f"{bad}/{excess.size} violations {detail}".strip()))

    record("cone.inner_product_lower", cc.c * nw * dv - np.abs(space.inner(v, w)), f"c={cc.c:.6g}")
    record("cone.magnitude_upper", np.abs(space.inner(v, v)) - cc.C * nv * dv, f"C={cc.C:.6g}")
    dvw = space.dist_to_cone_boundary(v + w)
    record("cone.distance_superadditive", dv + dw - dvw)
    k = 5
    groups = v[rng.integers(0, n, size=(n // k, k))]
    record("cone.sum_norm", cc.eta * space.norm(groups).sum(axis=1)
           - space.norm(groups.sum(axis=1)), f"eta={cc.eta:.6g}")
    # polylines: the chord is at least eta times the norm length
    steps = v[rng.integers(0, n, size=(n // 8, 8))]
    record("cone.chord_length", cc.eta * space.norm(steps).sum(axis=1)
           - space.norm(steps.sum(axis=1)))
    lam = rng.uniform(0.0, 1.0, size=(n, 1))
    mix = space.dist_to_cone_boundary(lam * v + (1 - lam) * w)
    record("cone.distance_concavity", lam[:, 0] * dv + (1 - lam[:, 0]) * dw - mix)
    eps = 0.2
    ve = sample_margin_chords(space, eps, n // 10, rng, 0.1, 10.0)
    we = sample_margin_chords(space, eps, n // 10, rng, 0.1, 10.0)
    s = ve + we
    record("cone.margin_convexity", eps * space.norm(s) - space.dist_to_cone_boundary(s),
           f"eps={eps}")

    worst, bad, total = -math.inf, 0, 0
    for lam1 in (0.5, 1.0, 2.0, 4.0):
        mu = cc.c * cc.eta / (4 * lam1 ** 2 * cc.C)
        rv = dv / nv
        W = _push_to_margin(space, w, rng.uniform(0.0, 1.0, n) * mu ** 2 * rv)
        smin = space.dist_to_cone_boundary(W) / (mu * dv)
        smax = mu * space.norm(W) / nv
        ok = smin <= smax
        sc = smin + rng.uniform(0.0, 1.0, n) * (smax - smin)
        V = v * sc[:, None]
        excess = (lam1 * (space.magnitude(V) + space.magnitude(W)) - space.magnitude(V + W))[ok]
        worst = max(worst, float(np.max(excess)))
        bad += int(np.sum(excess > SLACK))
        total += int(ok.sum())
    out.append(CheckResult("cone.magnitude_superadditive", bad == 0, worst, SLACK,
                           f"{bad}/{total} violations, lambda_1 in 0.5..4"))
    return out


# -- time separation --------------------------------------------------------------


def oracle_checks(model: TorusModel, st: VerifySettings, seed: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed + 1)
    out = []
    flat = flat_twin(model)
    vs = sample_margin_chords(flat.space, 0.1, st.flat_count, rng, 0.5, 10.0)
    rel = [abs(time_separation(flat, np.zeros(flat.dim), v).lower / float(flat.space.magnitude(v))
               - 1.0) for v in vs]
    out.append(CheckResult("oracle.flat", max(rel) <= FLAT_REL, max(rel), FLAT_REL,
                           f"{len(vs)} chords"))

    ref = model if model.dim == 2 and model.factor.time_only else reference_single_mode(model)
    chords = sample_margin_chords(ref.space, 0.2, st.oracle_count, rng, 1.0, 16.0)
    rel = []
    for v in chords:
        x = rng.uniform(0.0, 1.0, size=2)
        exact = separable_oracle_1p1(ref.factor, x, x + v)
        rel.append(abs(time_separation(ref, x, x + v).lower - exact) / exact)
    name = "oracle.separable" + ("" if ref is model else "[reference f(t)]")
    out.append(CheckResult(name, max(rel) <= ORACLE_REL, max(rel), ORACLE_REL,
                           f"{len(chords)} chords"))
    return out


def sandwich_checks(model: TorusModel, st: VerifySettings, seed: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed + 2)
    fac, space = model.factor, model.space
    worst = -math.inf
    for v in sample_margin_chords(space, 0.1, st.sandwich_count, rng, 0.5, 16.0):
        x = rng.uniform(0.0, 1.0, size=model.dim)
        est = time_separation(model, x, x + v)
        mag = float(space.magnitude(v))
        worst = max(worst, fac.inf_bound * mag - solver_tolerance(model, v) - est.lower,
                    est.lower - fac.sup_bound * mag - 1e-12)
    return [CheckResult("separation.sandwich", worst <= 0, worst, 0.0,
                        "excess over inf f|v| - tol <= d <= sup f|v|")]


def triangle_check(model: TorusModel, st: VerifySettings, seed: int) -> CheckResult:
    rng = np.random.default_rng(seed + 3)
    worst = -math.inf
    for v in sample_margin_chords(model.space, 0.2, st.triangle_count, rng, 2.0, 12.0):
        x = rng.uniform(0.0, 1.0, size=model.dim)
        xz = time_separation(model, x, x + v)
        nodes = xz.path.nodes
        y = nodes[len(nodes) // 2]
        xy = time_separation(model, x, y)
        yz = time_separation(model, y, x + v)
        tol = 2 * solver_tolerance(model, v)
        worst = max(worst, (xy.lower + yz.lower - xz.lower - tol) / tol)
    return CheckResult("separation.reverse_triangle", worst <= 0, worst, 0.0,
                       "(d(x,y)+d(y,z)-d(x,z)-2 tol)/(2 tol), y on the maximizer")


def growth_checks(model: TorusModel, st: VerifySettings, seed: int) -> list[CheckResult]:
    """Empirical constants of the scaling and doubling inequalities at |v| and 2|v|."""
    rng = np.random.default_rng(seed + 4)
    dirs = sample_margin_chords(model.space, 0.2, st.growth_dirs, rng, 1.0, 1.0)
    base = np.zeros(model.dim)
    scales = (2.0, 4.0)

    def d(v):
        return time_separation(model, base, base + v).lower

    kz = {s: -math.inf for s in scales}
    k2 = {s: -math.inf for s in scales}
    tol = 0.0
    for u in dirs:
        for s in scales:
            d1 = d(s * u)
            d2 = d(2 * s * u)
            d3 = d(3 * s * u)
            kz[s] = max(kz[s], 2 * d1 - d2, 3 * d1 - d3)
            k2[s] = max(k2[s], d2 - 2 * d1)
            tol = max(tol, solver_tolerance(model, 3 * s * u))
    # natural scale of the constants: oscillation of f times the lattice reach
    floor = (model.factor.sup_bound - model.factor.inf_bound) * model.lattice.fil + 3 * tol
    out = []
    for name, K in (("separation.scaling_const", kz), ("separation.doubling_const", k2)):
        lo, hi = K[scales[0]], K[scales[1]]
        bound = 2 * abs(lo) + floor
        out.append(CheckResult(name, hi <= bound, hi, bound,
                               f"K(|v|={scales[0]:g})={lo:.4g}, K(|v|={scales[1]:g})={hi:.4g}"))
    return out


def lipschitz_check(model: TorusModel, st: VerifySettings, seed: int) -> CheckResult:
    """Largest difference quotient of ``d`` for perturbations of size ``h`` and ``h/2``."""
    rng = np.random.default_rng(seed + 5)
    base = sample_margin_chords(model.space, 0.2, st.lipschitz_pairs, rng, 2.0, 8.0)
    L = {}
    for h in (0.2, 0.1):
        worst = 0.0
        for v in base:
            x = rng.uniform(0.0, 1.0, size=model.dim)
            dx = rng.normal(size=model.dim)
            dy = rng.normal(size=model.dim)
            dx *= h / np.linalg.norm(dx)
            dy *= h / np.linalg.norm(dy)
            d0 = time_separation(model, x, x + v).lower
            d1 = time_separation(model, x + dx, x + v + dy).lower
            den = float(model.space.norm(dx) + model.space.norm(dy))
            worst = max(worst, abs(d1 - d0) / den)
        L[h] = worst
    ratio = L[0.1] / L[0.2] if L[0.2] > 0 else 1.0
    return CheckResult("separation.lipschitz", ratio <= LIPSCHITZ_GROWTH, ratio, LIPSCHITZ_GROWTH,
                       f"L(h=0.2)={L[0.2]:.4g}, L(h=0.1)={L[0.1]:.4g}")


# -- stable time separation ---------------------------------------------------------


def stable_checks(model: TorusModel, table, seed: int) -> list[CheckResult]:
    out = []
    space, fac = model.space, model.factor
    base = np.zeros(model.dim) if table.x0 is None else table.x0
    Ks = []
    for s in (4.0, 8.0, 16.0):
        Ks.append(max(abs(time_separation(model, base, base + s * d).lower - s * val)
                      for d, val in zip(table.directions, table.values)))
    floor = 16.0 * table.max_err
    ratio = max(Ks) / max(min(Ks), floor)
    out.append(CheckResult("stable.growth_bounded", ratio < GROWTH_RATIO, ratio, GROWTH_RATIO,
                           "K at |v| = 4, 8, 16: " + ", ".join(f"{k:.4g}" for k in Ks)))

    mag = space.magnitude(table.directions)
    excess = np.maximum(fac.inf_bound * mag - table.values - table.errs,
                        table.values - table.errs - fac.sup_bound * mag)
    bad = int(np.sum(excess > 0))
    out.append(CheckResult("stable.sandwich", bad == 0, float(np.max(excess)), 0.0,
                           f"{bad}/{len(mag)} violations"))
    defs = table.deficits()
    out.append(CheckResult("stable.superadditive", defs["superadditivity_slack"] >= 0,
                           -defs["superadditivity_slack"], 0.0, "worst deficit beyond error radii"))
    out.append(CheckResult("stable.concavity", defs["concavity_slack"] >= 0,
                           -defs["concavity_slack"], 0.0, "weights 1/4, 1/2, 3/4"))
    return out


def default_covectors(dim: int) -> list[np.ndarray]:
    if dim == 2:
        return [np.array([1.0, 0.0]), np.array([1.0, 0.15]), np.array([1.0, -0.25])]
    return [np.array([1.0, 0.0, 0.0]), np.array([1.0, 0.15, 0.0]),
            np.array([1.0, -0.1, 0.2])]


def duality_checks(model: TorusModel, table, flat_table) -> list[CheckResult]:
    out = []
    dual = dual_stable(model.space.time_axis, flat_table)
    out.append(CheckResult("dual.flat_dt", abs(dual.value - 1.0) <= 1e-3,
                           abs(dual.value - 1.0), 1e-3, f"dual(dt) = {dual.value:.8g}"))
    pts = [(d, val, e) for d, val, e in zip(table.directions, table.values, table.errs)]
    pts += [(p["weight"] * table.directions[p["i"]] + (1 - p["weight"]) * table.directions[p["j"]],
             p["value"], p["err"]) for p in table.probes]
    worst = -math.inf
    for alpha in default_covectors(model.dim):
        du = dual_stable(alpha, table)
        for v, val, e in pts:
            gap = du.value * val - float(alpha @ v) - (du.value * e + du.err * val)
            worst = max(worst, gap)
    out.append(CheckResult("dual.support_inequality", worst <= 0, worst, 0.0,
                           f"{len(pts)} directions x 3 covectors"))
    return out


def geodesic_checks(model: TorusModel, table, st: VerifySettings) -> list[CheckResult]:
    covs = default_covectors(model.dim)
    deltas = []
    arcs = {}
    for H in st.horizons:
        margins = []
        for k, alpha in enumerate(covs):
            arc = construct_alpha_maximal(model, alpha, H, table)
            arcs[(k, H)] = arc
            margins.append(velocity_margin(arc, model.space))
        deltas.append(min(margins))
    drop = max(deltas[i] - deltas[i + 1] for i in range(len(deltas) - 1))
    ok = min(deltas) > 0 and drop <= MARGIN_DROP
    out = [CheckResult("geodesic.velocity_margin", ok, drop, MARGIN_DROP,
                       "delta per horizon " + ", ".join(f"{d:.4f}" for d in deltas))]

    K1, K2 = st.thresholds
    worst = -math.inf
    parts = []
    for k, alpha in enumerate(covs):
        arc = arcs[(k, st.horizons[-1])]
        sup = support_set(alpha, table)
        s1 = subarc_rotation_spread(arc, table, sup, K1)
        s2 = subarc_rotation_spread(arc, table, sup, K2)
        if math.isnan(s1) or math.isnan(s2):
            worst = math.inf
        else:
            worst = max(worst, s2 - s1)
        parts.append(f"{s1:.3g}->{s2:.3g}")
    out.append(CheckResult("rotation.support_convergence", worst <= 0, worst, 0.0,
                           f"spread at K={K1:g} -> {K2:g}: " + ", ".join(parts)))
    return out


# -- driver ---------------------------------------------------------------------------


def run_checks(model: TorusModel, eps: float, settings: VerifySettings, seed: int = 0,
               progress=None) -> list[CheckResult]:
    """All checks, in order. ``progress`` receives each result as it completes."""
    results: list[CheckResult] = []

    def emit(items):
        for r in items if isinstance(items, list) else [items]:
            results.append(r)
            if progress is not None:
                progress(r)

    space = model.space if settings.cone_dim == model.dim else MinkowskiSpace(
        settings.cone_dim, model.space.norm_kind)
    emit(cone_checks(space, settings.cone_samples, seed))
    emit(oracle_checks(model, settings, seed))
    emit(sandwich_checks(model, settings, seed))
    emit(triangle_check(model, settings, seed))
    emit(growth_checks(model, settings, seed))

    table = build_table(model, eps, settings.grid, settings.depth, seed=seed)
    flat_table = build_table(flat_twin(model), eps, settings.grid, 3, seed=seed, probes=False)
    emit(stable_checks(model, table, seed))
    emit(duality_checks(model, table, flat_table))
    geo = geodesic_checks(model, table, settings)
    emit(geo[0])
    emit(lipschitz_check(model, settings, seed))
    emit(geo[1])
    return results

