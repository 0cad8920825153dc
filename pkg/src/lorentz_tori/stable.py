"""Stable time separation, its dual, rotation vectors and alpha-maximal geodesics."""
from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .conformal import TorusModel
from .flow import GeodesicArc, integrate, shoot_to_target
from .geometry import DomainError
from .separation import (LEVELS, CausalPath, maximize_slice_path, solver_tolerance,
                         time_separation)

DEFAULT_DEPTH = 5
DEFAULT_LEVEL = 2
PROBE_WEIGHTS = (0.25, 0.5, 0.75)
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ConstructionError(RuntimeError):
    """A numerical construction did not converge."""


@dataclass
class GrowthFit:
    a: float
    max_residual: float
    doubling_defect: float
    scaling_defect: float

    @property
    def K_hat(self) -> float:
        """Smallest ``K`` for which both growth hypotheses hold on the samples."""
        return max(self.doubling_defect, self.scaling_defect, 0.0)

    def certified(self, K: float | None = None) -> bool:
        K = self.K_hat if K is None else K
        return self.max_residual <= 2.0 * K


def linear_growth_extrapolate(samples, K: float | None = None) -> GrowthFit:
    """Slope of a nearly linear function from samples at ``t, 2t, 4t, ...``.

    The slope is the last ratio ``f(t_max) / t_max``; the fit also records the
    sampled defects ``f(2t) - 2 f(t)`` and ``z f(t) - f(z t)``, which bound
    the residual ``|f(t) - a t| <= 2K``.
    """
    pts = sorted((float(t), float(v)) for t, v in samples)
    if len(pts) < 3:
        raise ValueError("need samples at three or more doublings")
    t = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    a = y[-1] / t[-1]
    residual = float(np.max(np.abs(y - a * t)))
    dbl = [y[j] - 2 * y[i] for i, j in itertools.combinations(range(len(t)), 2)
           if math.isclose(t[j], 2 * t[i])]
    scl = [(t[j] / t[i]) * y[i] - y[j] for i, j in itertools.combinations(range(len(t)), 2)
           if abs(t[j] / t[i] - round(t[j] / t[i])) < 1e-9]
    return GrowthFit(float(a), residual, float(max(dbl, default=0.0)),
                     float(max(scl, default=0.0)))


@dataclass
class StableValue:
    direction: np.ndarray
    value: float
    err: float
    depth: int
    samples: list[tuple[float, float]]
    residual: float
    solver_tol: float


def stable_time_separation(model: TorusModel, v, depth: int = DEFAULT_DEPTH, x0=None,
                           eps: float = 0.2, levels=LEVELS, seed: int = 0) -> StableValue:
    """Estimate of the stable time separation at ``v`` from ``d(x0, x0 + 2^k v)``, ``k <= depth``.

    Error radius: largest extrapolation residual over the longest chord
    parameter, plus the solver tolerance at ``v``.
    """
    v = np.asarray(v, dtype=float)
    space = model.space
    if depth < 3:
        raise ValueError("depth must be >= 3")
    if not space.in_cone(v) or float(space.dist_to_cone_boundary(v)) < eps * float(
            space.norm(v)) * (1 - 1e-9):
        raise DomainError(f"direction {v.tolist()} is outside the cone with margin {eps}")
    x0 = np.zeros(model.dim) if x0 is None else np.asarray(x0, dtype=float)
    samples = []
    for k in range(depth + 1):
        t = 2.0 ** k
        samples.append((t, time_separation(model, x0, x0 + t * v, levels=levels,
                                           seed=seed).lower))
    fit = linear_growth_extrapolate(samples)
    tol = solver_tolerance(model, v)
    err = fit.max_residual / samples[-1][0] + tol
    return StableValue(v, fit.a, err, depth, samples, fit.max_residual, tol)


# -- direction grid on the cone cap --------------------------------------------


def _hexnorm(z: np.ndarray) -> np.ndarray:
    ang = np.pi / 6 + np.arange(6) * np.pi / 3
    normals = np.stack([np.cos(ang), np.sin(ang)], axis=-1) / math.cos(math.pi / 6)
    return np.max(z @ normals.T, axis=-1)


def disk_grid(dim: int, level: int):
    """Points of the unit disk (interval in dimension 2, hexagon in 3) and their simplices."""
    if dim == 2:
        n = 2 ** (level + 1)
        pts = np.linspace(-1.0, 1.0, n + 1)[:, None]
        simp = np.array([(i, i + 1) for i in range(n)])
        return pts, simp
    if dim != 3:
        raise ValueError("direction tables are available in dimensions 2 and 3")
    hexv = [np.array([math.cos(k * math.pi / 3), math.sin(k * math.pi / 3)]) for k in range(6)]
    n = 2 ** level
    index: dict[tuple, int] = {}
    pts: list[np.ndarray] = []

    def key(p):
        return tuple(np.round(p, 12) + 0.0)

    def idx(p):
        k = key(p)
        if k not in index:
            index[k] = len(pts)
            pts.append(p)
        return index[k]

    simp = []
    for k in range(6):
        a, b, c = np.zeros(2), hexv[k], hexv[(k + 1) % 6]
        bary = lambda i, j: a + (b - a) * i / n + (c - a) * j / n  # noqa: E731
        for i in range(n):
            for j in range(n - i):
                simp.append((idx(bary(i, j)), idx(bary(i + 1, j)), idx(bary(i, j + 1))))
                if i + j < n - 1:
                    simp.append((idx(bary(i + 1, j)), idx(bary(i + 1, j + 1)),
                                 idx(bary(i, j + 1))))
    return np.array(pts), np.array(simp)


class CapMap:
    """Radial map from the unit disk onto the cap ``{||v|| = 1} cap T_eps``."""

    def __init__(self, space, eps: float):
        if not 0 < eps < float(space.dist_to_cone_boundary(space.time_axis)):
            raise ValueError(f"cone margin must lie in (0, inradius of e_1), got {eps}")
        self.space = space
        self.eps = eps

    def _margin(self, r: float, u: np.ndarray) -> float:
        v = np.concatenate([[1.0], r * u])
        return float(self.space.dist_to_cone_boundary(v) / self.space.norm(v)) - self.eps

    def slope_limit(self, u: np.ndarray) -> float:
        return brentq(self._margin, 0.0, 1.0, args=(u,), xtol=1e-14)

    def __call__(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        rad = float(np.abs(z[0])) if len(z) == 1 else float(_hexnorm(z))
        if rad > 1 + 1e-12:
            raise DomainError("disk coordinate outside the unit disk")
        if rad == 0:
            return self.space.time_axis.copy()
        u = z / np.linalg.norm(z)
        v = np.concatenate([[1.0], rad * self.slope_limit(u) * u])
        return v / self.space.norm(v)


@dataclass
class StableNormTable:
    """Stable values on a simplicial grid of the cone cap, extended 1-homogeneously."""

    model: TorusModel
    eps: float
    level: int
    depth: int
    disk: np.ndarray
    directions: np.ndarray
    values: np.ndarray
    errs: np.ndarray
    simplices: np.ndarray
    stable: list[StableValue]
    probes: list[dict] = field(default_factory=list)
    x0: np.ndarray | None = None
    seed: int = 0

    @property
    def max_err(self) -> float:
        return float(np.max(self.errs))

    @property
    def edges(self) -> np.ndarray:
        e = set()
        for s in self.simplices:
            for i, j in itertools.combinations(sorted(s), 2):
                e.add((int(i), int(j)))
        return np.array(sorted(e))

    def locate(self, v) -> tuple[np.ndarray, np.ndarray]:
        """Simplex index vector and nonnegative weights with ``v = sum w_j d_j``."""
        v = np.asarray(v, dtype=float)
        V = self.directions[self.simplices]  # (S, m, m): rows are directions
        lam = np.linalg.solve(np.transpose(V, (0, 2, 1)), np.broadcast_to(v, V.shape[:2])[..., None])[..., 0]
        ok = np.min(lam, axis=1) >= -1e-9 * max(1.0, float(np.max(np.abs(lam))))
        if not ok.any():
            raise DomainError(f"vector {v.tolist()} is outside the tabulated cone")
        s = int(np.flatnonzero(ok)[0])
        return self.simplices[s], np.maximum(lam[s], 0.0)

    def value(self, v) -> float:
        idx, lam = self.locate(v)
        return float(lam @ self.values[idx])

    def error(self, v) -> float:
        idx, lam = self.locate(v)
        return float(lam @ self.errs[idx])

    def direction_at(self, z) -> np.ndarray:
        return CapMap(self.model.space, self.eps)(z)

    def evaluate(self, v) -> StableValue:
        """Direct stable estimate at ``v`` with the table's settings."""
        return stable_time_separation(self.model, v, self.depth, self.x0, self.eps,
                                      seed=self.seed)

    def deficits(self) -> dict:
        """Worst superadditivity and concavity margins over the neighbour probes."""
        sup = [p["superadditivity"] + p["super_err"] for p in self.probes if p["weight"] == 0.5]
        con = [p["concavity"] + p["concave_err"] for p in self.probes]
        return {"superadditivity_slack": min(sup, default=math.inf),
                "concavity_slack": min(con, default=math.inf)}

    def as_dict(self) -> dict:
        return {"model": self.model.as_dict(), "model_hash": self.model.digest, "eps": self.eps,
                "level": self.level, "depth": self.depth, "seed": self.seed,
                "x0": (np.zeros(self.model.dim) if self.x0 is None else self.x0).tolist(),
                "directions": self.directions.tolist(), "values": self.values.tolist(),
                "errors": self.errs.tolist(), "simplices": self.simplices.tolist(),
                "probes": self.probes}

    def write_json(self, fh) -> None:
        json.dump(self.as_dict(), fh, sort_keys=True, indent=1)

    def write_csv(self, fh) -> None:
        m = self.model.dim
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"v_{j + 1}" for j in range(m)] + ["stable", "error"])
        for d, val, e in zip(self.directions, self.values, self.errs):
            w.writerow([format(float(c), ".17g") for c in (*d, val, e)])


def build_table(model: TorusModel, eps: float = 0.2, level: int = DEFAULT_LEVEL,
                depth: int = DEFAULT_DEPTH, x0=None, seed: int = 0,
                probes: bool = True) -> StableNormTable:
    """Tabulate stable values over a subdivided grid of the cone cap.

    With ``probes`` set, every neighbour pair ``(v, w)`` is also evaluated
    directly at ``l v + (1 - l) w`` for ``l`` in 1/4, 1/2, 3/4 to record
    concavity and superadditivity margins.
    """
    cap = CapMap(model.space, eps)
    disk, simp = disk_grid(model.dim, level)
    dirs = np.array([cap(z) for z in disk])
    stab = [stable_time_separation(model, d, depth, x0, eps, seed=seed) for d in dirs]
    table = StableNormTable(model, eps, level, depth, disk, dirs,
                            np.array([s.value for s in stab]), np.array([s.err for s in stab]),
                            simp, stab, [], None if x0 is None else np.asarray(x0, float), seed)
    if probes:
        for i, j in table.edges:
            for lam in PROBE_WEIGHTS:
                w = lam * dirs[i] + (1 - lam) * dirs[j]
                sv = table.evaluate(w)
                lin = lam * table.values[i] + (1 - lam) * table.values[j]
                rec = {"i": int(i), "j": int(j), "weight": lam, "value": sv.value, "err": sv.err,
                       "concavity": sv.value - lin,
                       "concave_err": lam * table.errs[i] + (1 - lam) * table.errs[j] + sv.err}
                if lam == 0.5:
                    # l(v + w) = 2 l((v + w) / 2) by homogeneity
                    rec["superadditivity"] = 2 * sv.value - table.values[i] - table.values[j]
                    rec["super_err"] = table.errs[i] + table.errs[j] + 2 * sv.err
                table.probes.append(rec)
    return table


# -- dual and support -----------------------------------------------------------


@dataclass
class DualValue:
    value: float
    err: float
    direction: np.ndarray
    stable: float
    grid_value: float
    disk: np.ndarray | None = None


def _check_interior_dual(model: TorusModel, alpha: np.ndarray, table: StableNormTable) -> None:
    if not model.space.interior_dual(alpha) or np.any(table.directions @ alpha <= 0):
        raise DomainError(f"covector {alpha.tolist()} is not in the interior of the dual cone")


def _golden_min(fun, lo: float, hi: float, iters: int):
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc[0] < fd[0]:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = fun(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = fun(d)
    return (c, fc) if fc[0] < fd[0] else (d, fd)


def dual_stable(alpha, table: StableNormTable, refine: bool = True,
                refine_iters: int = 12) -> DualValue:
    """``min alpha(v) / l(v)`` over the cap: grid minimum, then golden-section
    refinement along each disk axis with direct stable estimates."""
    model = table.model
    alpha = np.asarray(alpha, dtype=float)
    _check_interior_dual(model, alpha, table)
    ratio = (table.directions @ alpha) / table.values
    j = int(np.argmin(ratio))
    grid_value = float(ratio[j])
    best = (grid_value, table.directions[j], table.values[j], table.errs[j])
    best_z = table.disk[j].astype(float)
    if refine:
        cache: dict[tuple, tuple] = {}
        z0 = table.disk[j].astype(float)
        spacing = 2.0 ** -table.level

        def objective(z):
            k = tuple(np.round(z, 14))
            if k not in cache:
                d = table.direction_at(z)
                sv = table.evaluate(d)
                cache[k] = (float(alpha @ d) / sv.value, d, sv.value, sv.err, np.array(z))
            return cache[k]

        z = z0.copy()
        for axis in range(len(z)):
            def along(s, axis=axis):
                zz = z.copy()
                zz[axis] = s
                return objective(zz)

            lo, hi = z[axis] - spacing, z[axis] + spacing
            if model.dim == 2:
                lo, hi = max(lo, -1.0), min(hi, 1.0)
            else:
                # keep the segment inside the hexagon
                while lo < z[axis] and _hexnorm(np.where(np.arange(2) == axis, lo, z)) > 1:
                    lo = 0.5 * (lo + z[axis])
                while hi > z[axis] and _hexnorm(np.where(np.arange(2) == axis, hi, z)) > 1:
                    hi = 0.5 * (hi + z[axis])
            if hi - lo <= 1e-12:
                continue
            s, val = _golden_min(along, lo, hi, refine_iters)
            if val[0] < best[0]:
                best, best_z = val[:4], val[4]
                z[axis] = s
    value, d, ell, err = best
    return DualValue(float(value), float(value * err / ell), np.asarray(d), float(ell), grid_value,
                     best_z)


def support_set(alpha, table: StableNormTable, tol: float | None = None,
                dual: DualValue | None = None) -> np.ndarray:
    """Directions ``v / l(v)`` with ``alpha_n(v / l(v)) <= 1 + tol``, ``alpha_n = alpha / l*(alpha)``.

    The refined minimizer is always included.
    """
    alpha = np.asarray(alpha, dtype=float)
    dual = dual_stable(alpha, table) if dual is None else dual
    if tol is None:
        tol = 3.0 * table.max_err
    an = alpha / dual.value
    pts = table.directions / table.values[:, None]
    keep = pts @ an <= 1 + tol
    refined = dual.direction / dual.stable
    return np.vstack([refined[None, :], pts[keep]])


@dataclass(frozen=True)
class CovectorSlice:
    """Linear temporal function ``tau(x) = alpha(x)`` for ``alpha`` in the open dual cone."""

    alpha: tuple[float, ...]
    normalized: bool = False

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        if not a[0] > np.linalg.norm(a[1:]):
            raise DomainError(f"covector {list(self.alpha)} is not in the interior of the dual cone")

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.alpha, dtype=float)

    def tau(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.vector

    def normalize(self, table: StableNormTable) -> "CovectorSlice":
        dual = dual_stable(self.vector, table)
        return CovectorSlice(tuple((self.vector / dual.value).tolist()), True)


@dataclass
class RotationSample:
    s: float
    t: float
    displacement: np.ndarray
    stable: float
    rho: np.ndarray
    err_rel: float


def rotation_vector(arc, s: float, t: float, table: StableNormTable) -> RotationSample:
    """``rho = (gamma(t) - gamma(s)) / l(gamma(t) - gamma(s))`` from the table."""
    if isinstance(arc, GeodesicArc):
        disp = arc.point_at(t) - arc.point_at(s)
    else:
        P = np.asarray(getattr(arc, "points", arc), dtype=float)
        disp = P[int(t)] - P[int(s)]
    ell = table.value(disp)
    err = table.error(disp)
    return RotationSample(float(s), float(t), disp, ell, disp / ell, err / ell)


# -- tau-progress maximization ----------------------------------------------------


@dataclass
class HtauValue:
    sigma: float
    value: float
    direction: np.ndarray
    direct: float | None = None
    endpoint: np.ndarray | None = None


def htau_estimate(alpha, sigma: float, table: StableNormTable, dual: DualValue | None = None,
                  direct: bool = False, x=None) -> HtauValue:
    """Longest length per unit ``alpha`` progress from the table, ``sigma / l*(alpha)``,
    with an optional direct slice maximization for comparison."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    alpha = np.asarray(alpha, dtype=float)
    dual = dual_stable(alpha, table) if dual is None else dual
    out = HtauValue(sigma, sigma / dual.value, dual.direction)
    if direct:
        res = htau_direct(table.model, alpha, sigma, x=x,
                          directions=_default_starts(table.model, alpha, table, sigma, dual))
        out.direct, out.endpoint = res.value, res.endpoint
    return out


def slice_starts(table: StableNormTable, dual: DualValue, count: int) -> np.ndarray:
    """Start directions for slice maximization: a window of disk coordinates around
    the dual minimizer, one grid spacing wide, ``count`` points per axis."""
    if dual.disk is None:
        return dual.direction[None, :]
    w = 2.0 ** -table.level
    ticks = np.linspace(-w, w, max(count, 1)) if count > 1 else np.zeros(1)
    out = [dual.direction]
    for off in itertools.product(ticks, repeat=len(dual.disk)):
        z = dual.disk + np.array(off)
        rad = abs(z[0]) if len(z) == 1 else _hexnorm(z)
        if rad <= 1.0 and np.any(off):
            out.append(table.direction_at(z))
    return np.array(out)


def slice_maximize(model: TorusModel, alpha, sigma: float, x=None, directions=None,
                   levels=LEVELS):
    """Longest broken path from ``x`` to the slice ``alpha(y - x) = sigma``.

    Free-endpoint Newton ascent from each start direction; the slice problem
    has many local maxima, and the longest result is kept.
    Returns ``(nodes, length)``.
    """
    alpha = np.asarray(alpha, dtype=float)
    if not model.space.interior_dual(alpha):
        raise DomainError("covector is not in the interior of the dual cone")
    x = np.zeros(model.dim) if x is None else np.asarray(x, dtype=float)
    dirs = [model.space.time_axis] if directions is None else np.atleast_2d(directions)
    best = None
    for u in dirs:
        chord = sigma * u / float(alpha @ u)
        nodes, length, _ = maximize_slice_path(model, x, chord, alpha=alpha, free_end=True,
                                               levels=levels)
        if best is None or length > best[1]:
            best = (nodes, length)
    return best


def _default_starts(model, alpha, table, horizon_progress, dual=None):
    if table is None:
        return None
    dual = dual_stable(alpha, table) if dual is None else dual
    count = 1 + 2 * int(math.ceil(horizon_progress / 32.0)) if model.dim == 2 else 3
    return slice_starts(table, dual, count)


def htau_direct(model: TorusModel, alpha, sigma: float, x=None, directions=None,
                table: StableNormTable | None = None, levels=LEVELS,
                shoot: bool = True) -> HtauValue:
    """Maximize the length of causal curves from ``x`` to the slice ``alpha(y - x) = sigma``."""
    alpha = np.asarray(alpha, dtype=float)
    x = np.zeros(model.dim) if x is None else np.asarray(x, dtype=float)
    if directions is None:
        directions = _default_starts(model, alpha, table, sigma)
    nodes, length = slice_maximize(model, alpha, sigma, x, directions, levels)
    y = nodes[-1]
    value = length
    if shoot and not model.factor.is_constant:
        res = shoot_to_target(model, x, y, starts=[_warm_velocity(model, nodes, length)])
        if res.converged:
            value = max(value, res.length)
    return HtauValue(sigma, float(value), (y - x) / float(model.space.norm(y - x)), None, y)


def _warm_velocity(model: TorusModel, nodes: np.ndarray, length: float) -> np.ndarray:
    d0 = nodes[1] - nodes[0]
    return length * d0 / (float(model.f(nodes[0])) * float(model.space.magnitude(d0)))


def construct_alpha_maximal(model: TorusModel, alpha, horizon: float, table=None, x=None,
                            directions=None, oversample: int = 4) -> GeodesicArc:
    """Finite-horizon surrogate of an alpha-maximal geodesic.

    Maximizes length to the slice ``alpha = 2 * horizon`` (starts around the
    dual minimizer of ``table`` when given), then returns the geodesic through
    the middle third of the maximizer, obtained by shooting between its nodes
    at ``alpha``-progress ``2h/3`` and ``4h/3``.
    """
    alpha = np.asarray(alpha, dtype=float)
    if directions is None:
        directions = _default_starts(model, alpha, table, 2.0 * horizon)
    nodes, _ = slice_maximize(model, alpha, 2.0 * horizon, x, directions)
    n = len(nodes) - 1
    i0, i1 = n // 3, (2 * n) // 3
    a, b = nodes[i0], nodes[i1]
    sub = CausalPath.from_nodes(model, nodes[i0:i1 + 1])
    if model.factor.is_constant:
        v0 = b - a
        steps = 16 * oversample
    else:
        res = shoot_to_target(model, a, b, starts=[_warm_velocity(model, nodes[i0:], sub.length)])
        if not res.converged:
            raise ConstructionError(
                f"shooting across the middle third did not converge (miss "
                f"{float(np.linalg.norm(res.miss)):.3g})")
        v0 = res.v0
        steps = res.steps * oversample
    return integrate(model, a, v0, 1.0, 1.0 / steps)


def velocity_margin(arc: GeodesicArc, space) -> float:
    """``min dist(v / ||v||, dT)`` along the arc, refined by parabolic interpolation."""
    v = arc.v
    m = space.dist_to_cone_boundary(v) / space.norm(v)
    i = int(np.argmin(m))
    if 0 < i < len(m) - 1:
        y0, y1, y2 = m[i - 1], m[i], m[i + 1]
        den = y0 - 2 * y1 + y2
        if den > 0:
            return float(y1 - (y0 - y2) ** 2 / (8 * den))
    return float(m[i])


def subarc_rotation_spread(arc: GeodesicArc, table: StableNormTable, support: np.ndarray,
                           threshold: float, samples: int = 64) -> float:
    """Largest distance from ``rho`` of a subarc to the support set, over subarcs
    whose displacement norm lies in ``[threshold, 2 threshold)``."""
    space = table.model.space
    idx = np.unique(np.linspace(0, len(arc.t) - 1, samples).astype(int))
    worst = 0.0
    found = False
    for i, j in itertools.combinations(idx, 2):
        disp = arc.x[j] - arc.x[i]
        nrm = float(space.norm(disp))
        if not threshold <= nrm < 2 * threshold:
            continue
        found = True
        rho = disp / table.value(disp)
        worst = max(worst, float(np.min(np.linalg.norm(support - rho, axis=1))))
    return worst if found else math.nan


@dataclass
class GeodesicFamily:
    arcs: list[GeodesicArc]
    rhos: np.ndarray
    errs: np.ndarray
    distinct: np.ndarray

    @property
    def certified_distinct(self) -> bool:
        off = ~np.eye(len(self.arcs), dtype=bool)
        return bool(np.all(self.distinct[off]))


def distinct_geodesic_family(model: TorusModel, slices, horizon: float,
                             table: StableNormTable) -> GeodesicFamily:
    """One alpha-maximal arc per slice, with a pairwise distinctness certificate
    based on the rotation vectors of the whole arcs."""
    arcs, rhos, errs = [], [], []
    for sl in slices:
        alpha = sl.vector if isinstance(sl, CovectorSlice) else np.asarray(sl, dtype=float)
        arc = construct_alpha_maximal(model, alpha, horizon, table)
        rs = rotation_vector(arc, arc.t[0], arc.t[-1], table)
        arcs.append(arc)
        rhos.append(rs.rho)
        errs.append(rs.err_rel * float(np.linalg.norm(rs.rho)) + 1e-9)
    rhos = np.array(rhos)
    errs = np.array(errs)
    gap = np.linalg.norm(rhos[:, None] - rhos[None], axis=-1)
    distinct = gap > errs[:, None] + errs[None]
    return GeodesicFamily(arcs, rhos, errs, distinct)

