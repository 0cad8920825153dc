"""Time separation on the cover: broken-path maximization, shooting refinement,
exact oracles and the quantitative curve predicates."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.linalg import LinAlgError, null_space, solveh_banded
from scipy.optimize import brentq, least_squares

from .conformal import ConformalFactor, TorusModel
from .flow import GeodesicArc, ShootingResult, shoot_to_target
from .geometry import DomainError, MinkowskiSpace

LEVELS = (8, 16, 32)
MARGIN_REL = 1e-6

_GL_X, _GL_W = np.polynomial.legendre.leggauss(3)
GAUSS_S = 0.5 * (_GL_X + 1.0)
GAUSS_W = 0.5 * _GL_W


def _euclid_margin(D: np.ndarray) -> np.ndarray:
    """Euclidean distance to the cone boundary, negative outside the future cone."""
    return (D[..., 0] - np.linalg.norm(D[..., 1:], axis=-1)) / math.sqrt(2.0)


def segment_lengths(model: TorusModel, nodes: np.ndarray) -> np.ndarray:
    """Three-point Gauss quadrature of ``f |.|`` along each chord of a polyline."""
    D = np.diff(nodes, axis=0)
    Q = nodes[:-1, None, :] + GAUSS_S[None, :, None] * D[:, None, :]
    A = model.f(Q) @ GAUSS_W
    return A * model.space.magnitude(D)


@dataclass
class CausalPath:
    """Broken future causal curve in the cover."""

    nodes: np.ndarray
    seg_length: np.ndarray
    margins: np.ndarray
    iterations: int = 0

    @classmethod
    def from_nodes(cls, model: TorusModel, nodes, iterations: int = 0) -> "CausalPath":
        nodes = np.asarray(nodes, dtype=float)
        D = np.diff(nodes, axis=0)
        if not np.all(model.space.in_cone(D)):
            raise DomainError("every segment of a causal path must be future causal")
        return cls(nodes, segment_lengths(model, nodes),
                   model.space.dist_to_cone_boundary(D), iterations)

    @property
    def length(self) -> float:
        return float(np.sum(self.seg_length))

    @property
    def cum_length(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.seg_length)])

    @property
    def points(self) -> np.ndarray:
        return self.nodes

    def write_csv(self, fh) -> None:
        m = self.nodes.shape[1]
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node"] + [f"x_{j + 1}" for j in range(m)] + ["segment_margin", "cum_length"])
        margins = np.concatenate([self.margins, [np.nan]])
        for i, (p, mg, cl) in enumerate(zip(self.nodes, margins, self.cum_length)):
            w.writerow([i] + [format(float(c), ".17g") for c in (*p, mg, cl)])


@dataclass
class DistanceEstimate:
    """Bracket ``lower <= d(x, y) <= upper``."""

    lower: float
    upper: float
    method: str
    tag: str
    iterations: int = 0
    seed: int = 0
    solver_tol: float = 0.0
    path: CausalPath | None = None
    shooting: ShootingResult | None = None

    def as_row(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "method": self.method,
                "tag": self.tag, "iterations": self.iterations, "solver_tol": self.solver_tol}


@dataclass(frozen=True)
class AlmostMaximalSpec:
    F: float
    G: float
    eps: float

    def __post_init__(self):
        vals = (self.F, self.G, self.eps)
        if not all(math.isfinite(v) for v in vals) or self.F < 0 or self.G < 0 or self.eps <= 0:
            raise ValueError("need finite F >= 0, G >= 0 and eps > 0")


# -- slice-parameterized polyline maximization --------------------------------


@dataclass
class SliceProblem:
    """Polylines ``p_i = x + (i/N) chord + E z_i`` with the last node optionally free.

    The columns of ``E`` span the kernel of a covector ``alpha`` with
    ``alpha(chord) > 0``, so node ``i`` lies on the level ``alpha = i/N``
    of the chord's progress. Every causal curve crosses each level once.
    """

    model: TorusModel
    x: np.ndarray
    chord: np.ndarray
    E: np.ndarray
    free_end: bool = False

    @classmethod
    def build(cls, model, x, chord, alpha=None, free_end=False) -> "SliceProblem":
        m = model.dim
        alpha = model.space.time_axis if alpha is None else np.asarray(alpha, dtype=float)
        if alpha[0] == 1.0 and not np.any(alpha[1:]):
            E = np.eye(m)[:, 1:]
        else:
            E = null_space(alpha[None, :])
        return cls(model, np.asarray(x, float), np.asarray(chord, float), E, free_end)

    def nodes(self, z: np.ndarray) -> np.ndarray:
        n = len(z) + (1 if self.free_end else 2)
        frac = np.arange(n)[:, None] / (n - 1)
        base = self.x + frac * self.chord
        zz = np.zeros((n, self.E.shape[1]))
        zz[1:1 + len(z)] = z
        return base + zz @ self.E.T

    def length(self, z) -> float:
        return float(np.sum(segment_lengths(self.model, self.nodes(z))))

    def derivatives(self, z):
        """Length, gradient and block-tridiagonal Hessian in the free variables."""
        P = self.nodes(z)
        space, fac = self.model.space, self.model.factor
        D = np.diff(P, axis=0)
        Q = P[:-1, None, :] + GAUSS_S[None, :, None] * D[:, None, :]
        f, df, hf = fac.value_and_derivatives(Q)
        s, w = GAUSS_S, GAUSS_W
        A = f @ w
        a0 = np.einsum("k,nkj->nj", w * (1 - s), df)
        a1 = np.einsum("k,nkj->nj", w * s, df)
        H00 = np.einsum("k,nkij->nij", w * (1 - s) ** 2, hf)
        H01 = np.einsum("k,nkij->nij", w * s * (1 - s), hf)
        H11 = np.einsum("k,nkij->nij", w * s * s, hf)
        g = space.magnitude(D)
        gD = -space.signature * D / g[:, None]
        Hg = (-np.diag(space.signature)[None] / g[:, None, None]
              - np.einsum("ni,nj->nij", gD, gD) / g[:, None, None])
        length = float(np.sum(g * A))
        G0 = -A[:, None] * gD + g[:, None] * a0
        G1 = A[:, None] * gD + g[:, None] * a1
        Ah = A[:, None, None]
        gh = g[:, None, None]
        outer = lambda u, v: np.einsum("ni,nj->nij", u, v)  # noqa: E731
        B00 = Ah * Hg + gh * H00 - outer(gD, a0) - outer(a0, gD)
        B01 = -Ah * Hg + gh * H01 - outer(gD, a1) + outer(a0, gD)
        B11 = Ah * Hg + gh * H11 + outer(gD, a1) + outer(a1, gD)

        E = self.E
        nseg = len(D)
        nvar = len(z)
        grad = np.zeros((nvar, E.shape[1]))
        diag = np.zeros((nvar, E.shape[1], E.shape[1]))
        off = np.zeros((max(nvar - 1, 0), E.shape[1], E.shape[1]))
        proj = lambda B: np.einsum("ai,nij,jb->nab", E.T, B, E)  # noqa: E731
        # node j (1-based) is the right end of segment j-1 and the left end of segment j
        grad += (G1 @ E)[:nvar]
        diag += proj(B11)[:nvar]
        right = slice(1, nseg)
        grad[: nseg - 1] += (G0[right] @ E)
        diag[: nseg - 1] += proj(B00[right])
        if nvar > 1:
            off[:] = proj(B01[1:1 + nvar - 1])
        return length, grad, diag, off

    def feasible(self, z, margin: float) -> bool:
        D = np.diff(self.nodes(z), axis=0)
        return bool(np.all(_euclid_margin(D) >= margin))


def _banded_upper(diag: np.ndarray, off: np.ndarray, shift: float) -> np.ndarray:
    """Upper banded storage of the symmetric block-tridiagonal matrix ``-H + shift I``."""
    n, d, _ = diag.shape
    u = 2 * d - 1
    ab = np.zeros((u + 1, n * d))
    base = (np.arange(n) * d)[:, None]
    ii, jj = np.triu_indices(d)
    r, c = base + ii, base + jj
    ab[u + r - c, c] = -diag[:, ii, jj]
    if n > 1:
        rr, cc = (a.ravel() for a in np.meshgrid(np.arange(d), np.arange(d), indexing="ij"))
        r, c = base[:-1] + rr, base[:-1] + d + cc
        ab[u + r - c, c] = -off[:, rr, cc]
    ab[u] += shift
    return ab


def newton_maximize(prob: SliceProblem, z0: np.ndarray, iters: int = 50,
                    margin: float = 0.0) -> tuple[np.ndarray, float, int]:
    """Damped Newton ascent of the polyline length with a feasibility line search.

    The Hessian is shifted by a multiple of the identity whenever it is not
    negative definite. Accepted steps never decrease the length.
    """
    z = np.array(z0, dtype=float)
    if not len(z):
        return z, prob.length(z), 0
    it = 0
    length = prob.length(z)
    for it in range(1, iters + 1):
        length, grad, diag, off = prob.derivatives(z)
        scale = max(float(np.max(np.abs(diag))), 1e-300)
        shift = 0.0
        g = grad.ravel()
        while True:
            try:
                step = solveh_banded(_banded_upper(diag, off, shift), g)
                break
            except LinAlgError:
                shift = max(10.0 * shift, 1e-8 * scale)
        decrement = float(g @ step)
        if decrement <= 1e-15 * max(abs(length), 1e-300):
            break
        step = step.reshape(z.shape)
        t = 1.0
        accepted = False
        for _ in range(40):
            zt = z + t * step
            if prob.feasible(zt, margin):
                lt = prob.length(zt)
                if lt >= length + 1e-4 * t * decrement:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            break
        gain = lt - length
        z, length = zt, lt
        if gain <= 1e-15 * abs(length):
            break
    return z, length, it


def _refine_nodes(z: np.ndarray, free_end: bool) -> np.ndarray:
    """Variables for the doubled segment count, interpolating nodes linearly."""
    d = z.shape[1]
    full = np.vstack([np.zeros((1, d)), z] + ([] if free_end else [np.zeros((1, d))]))
    out = np.empty((2 * len(full) - 1, d))
    out[0::2] = full
    out[1::2] = 0.5 * (full[:-1] + full[1:])
    return out[1:] if free_end else out[1:-1]


def segment_scale(model: TorusModel, chord) -> int:
    """Segment multiplier: one per oscillation of ``f`` along the chord."""
    span = float(np.linalg.norm(chord)) * model.factor.cycles_per_unit
    return max(1, int(math.ceil(span - 1e-9)))


def maximize_slice_path(model: TorusModel, x, chord, alpha=None, free_end: bool = False,
                        levels=LEVELS, iters: int = 50, z0=None, scale: bool = True):
    """Maximize polyline length through the level schedule; returns (nodes, length, iterations).

    With ``scale`` set, each level's segment count is multiplied by the number
    of oscillations of ``f`` along the chord.
    """
    prob = SliceProblem.build(model, x, chord, alpha, free_end)
    dist = float(_euclid_margin(prob.chord))
    if dist <= 0:
        raise DomainError("chord must be future timelike")
    s = segment_scale(model, chord) if scale else 1
    total = 0
    z = None
    for lev in levels:
        n = lev * s
        nvar = n if free_end else n - 1
        if z is None:
            z = np.zeros((nvar, prob.E.shape[1])) if z0 is None else np.asarray(z0, float)
            if len(z) != nvar:
                raise ValueError("warm start has the wrong number of nodes")
        else:
            while len(z) < nvar:
                z = _refine_nodes(z, free_end)
        margin = min(MARGIN_REL * float(np.linalg.norm(chord)), 0.5 * dist) / n
        z, length, it = newton_maximize(prob, z, iters, margin)
        total += it
    return prob.nodes(z), length, total


def broken_path_maximize(model: TorusModel, x, y, N: int, iters: int = 50,
                         seed: int = 0) -> CausalPath:
    """Longest broken causal path from ``x`` to ``y`` with ``N`` segments.

    Nodes sit on equally spaced time levels; the search is deterministic and
    ``seed`` is only recorded.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if N < 1:
        raise ValueError("N must be >= 1")
    chord = y - x
    if not model.space.in_cone(chord):
        raise DomainError("target must lie in the causal future of the start")
    if float(_euclid_margin(chord)) <= 0:
        return CausalPath.from_nodes(model, np.vstack([x, y]))
    nodes, _, it = maximize_slice_path(model, x, chord, levels=(N,), iters=iters, scale=False)
    return CausalPath.from_nodes(model, nodes, it)


def solver_tolerance(model: TorusModel, chord) -> float:
    return 1e-4 * model.factor.sup_bound * float(model.space.magnitude(chord))


def time_separation(model: TorusModel, x, y, levels=LEVELS, iters: int = 50, seed: int = 0,
                    shoot: bool = True) -> DistanceEstimate:
    """Bracket for the time separation ``d(x, y)`` on the cover.

    The lower bound is the longest causal curve found: the optimal broken path
    over the level schedule, or the geodesic obtained by shooting between the
    endpoints from that path's initial direction, whichever is longer.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    space = model.space
    chord = y - x
    if not space.in_cone(chord):
        return DistanceEstimate(0.0, 0.0, "none", "acausal", seed=seed)
    upper = model.factor.sup_bound * float(space.magnitude(chord))
    tol = solver_tolerance(model, chord)
    if float(_euclid_margin(chord)) <= 1e-12 * float(np.linalg.norm(chord)):
        return DistanceEstimate(0.0, 0.0, "none", "lightlike", seed=seed, solver_tol=tol)
    nodes, plen, it = maximize_slice_path(model, x, chord, levels=levels, iters=iters)
    path = CausalPath.from_nodes(model, nodes, it)
    lower, method, shot = path.length, "broken_path", None
    if shoot and not model.factor.is_constant:
        d0 = nodes[1] - nodes[0]
        warm = lower * d0 / (float(model.f(x)) * float(space.magnitude(d0)))
        shot = shoot_to_target(model, x, y, starts=[warm], seed=seed)
        if shot.converged and shot.length > lower:
            lower, method = shot.length, "shooting"
    lower = min(lower, upper)
    return DistanceEstimate(lower, upper, method, "timelike", it, seed, tol, path, shot)


def distance_batch(model: TorusModel, pairs, seed: int = 0) -> list[DistanceEstimate]:
    return [time_separation(model, x, y, seed=seed) for x, y in pairs]


# -- exact oracle for time-dependent factors ----------------------------------


def separable_oracle_1p1(factor: ConformalFactor, x, y, tol: float = 1e-11) -> float:
    """Time separation for ``f = f(t)`` in two dimensions via the conserved momentum.

    Maximizers satisfy ``x'(t) = p / sqrt(f^2 + p^2)`` for a constant ``p``
    fixed by the spatial displacement; the length is
    ``int f^2 / sqrt(f^2 + p^2) dt``.
    """
    if factor.dim != 2 or not factor.time_only:
        raise ValueError("oracle needs a two-dimensional factor depending on time only")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    t0, t1 = x[0], y[0]
    dt, dx = t1 - t0, y[1] - x[1]
    if not abs(dx) < dt:
        raise DomainError("oracle needs a future timelike chord")

    w = factor.wave[:, 0].tolist()
    ab = list(zip(w, factor.a.tolist(), factor.b.tolist()))
    c0 = factor.c0

    def f(t):
        return c0 + sum(a * math.cos(k * t) + b * math.sin(k * t) for k, a, b in ab)

    limit = max(200, int(20 * dt * max(factor.cycles_per_unit, 1.0)))
    opts = dict(epsabs=tol * max(dt, 1.0), epsrel=tol, limit=limit)
    if dx == 0:
        return quad(f, t0, t1, **opts)[0]

    def drift(p):
        return quad(lambda t: p / math.sqrt(f(t) ** 2 + p * p), t0, t1, **opts)[0] - dx

    bound = 1.0
    while drift(bound) < 0 or drift(-bound) > 0:
        bound *= 2.0
        if bound > 1e12:
            raise DomainError("momentum bracket failure")
    p = brentq(drift, -bound, bound, xtol=1e-15 * bound, rtol=1e-15)
    return quad(lambda t: f(t) ** 2 / math.sqrt(f(t) ** 2 + p * p), t0, t1, **opts)[0]


# -- curve predicates ---------------------------------------------------------


def is_G_eps_timelike(points, space: MinkowskiSpace, G: float, eps: float) -> bool:
    """Some chord ``gamma(b) - gamma(a)``, ``a < b``, lies in ``T_eps`` with norm ``>= G``."""
    P = np.asarray(getattr(points, "points", points), dtype=float)
    for i in range(len(P) - 1):
        D = P[i + 1:] - P[i]
        ok = space.norm(D) >= G
        if not ok.any():
            continue
        if np.any(space.in_margin_cone(D[ok], eps)):
            return True
    return False


def _sub_length(curve, i: int, j: int, model: TorusModel) -> float:
    if isinstance(curve, GeodesicArc):
        return float(curve.cum_length[j] - curve.cum_length[i])
    if isinstance(curve, CausalPath):
        return float(curve.cum_length[j] - curve.cum_length[i])
    return float(np.sum(segment_lengths(model, np.asarray(curve)[i:j + 1])))


def is_F_almost_maximal(curve, model: TorusModel, F: float, probes: int = 8,
                        seed: int = 0) -> tuple[bool, float]:
    """Probe random subarcs for ``L(gamma|[s,t]) >= d(gamma(s), gamma(t)) - F``.

    Returns the verdict and the worst deficit ``d.lower - L``. A failure
    refutes almost maximality; a pass is evidence only.
    """
    P = np.asarray(getattr(curve, "points", curve), dtype=float)
    rng = np.random.default_rng(seed)
    worst = -math.inf
    n = len(P)
    for _ in range(probes):
        i, j = sorted(rng.choice(n, size=2, replace=False))
        d = time_separation(model, P[i], P[j], seed=seed).lower
        worst = max(worst, d - _sub_length(curve, i, j, model))
    return worst <= F, worst


# -- half-displacement splitting ----------------------------------------------


@dataclass
class SplitResult:
    intervals: list[tuple[float, float]]
    residual: float
    success: bool
    k: int
    notes: list[str] = field(default_factory=list)


def _polyline_eval(P: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Point at parameter ``s`` in ``[0, 1]``, nodes equally spaced in parameter."""
    n = len(P) - 1
    u = np.clip(np.asarray(s, dtype=float), 0.0, 1.0) * n
    i = np.minimum(np.floor(u).astype(int), n - 1)
    lam = (u - i)[..., None]
    return (1 - lam) * P[i] + lam * P[i + 1]


def burago_split(points, tol: float | None = None, k: int | None = None,
                 grid: int | None = None) -> SplitResult:
    """Disjoint parameter intervals whose displacements sum to half the total.

    Uses ``k = ceil(m/2)`` intervals by default: cutting at ``m`` points
    always suffices for the ``m`` coordinate functions, and the smaller of the
    two alternating families has ``ceil(m/2)`` members. The search is a grid
    scan over ordered cut points followed by least-squares refinement.
    """
    P = np.asarray(points, dtype=float)
    if len(P) < 2:
        raise ValueError("need a polyline with at least two nodes")
    m = P.shape[1]
    k = int(math.ceil(m / 2)) if k is None else int(k)
    half = 0.5 * (P[-1] - P[0])
    total = float(np.linalg.norm(P[-1] - P[0]))
    if tol is None:
        tol = 1e-4 * max(total, 1e-300)
    if grid is None:
        grid = 241 if k == 1 else 21 if k == 2 else 9

    def residual(c):
        c = np.sort(np.clip(c, 0.0, 1.0), axis=-1)
        pts = _polyline_eval(P, c)
        disp = sum(pts[..., 2 * i + 1, :] - pts[..., 2 * i, :] for i in range(k))
        return disp - half

    ticks = np.linspace(0.0, 1.0, grid)
    combos = np.array(list(itertools.combinations_with_replacement(range(grid), 2 * k)))
    cand = ticks[combos]
    res = np.linalg.norm(residual(cand), axis=-1)
    order = np.argsort(res)[:8]
    best_c, best_r = cand[order[0]], float(res[order[0]])
    for idx in order:
        sol = least_squares(residual, cand[idx], bounds=(0.0, 1.0), xtol=1e-15, ftol=1e-15,
                            gtol=1e-15, max_nfev=400)
        r = float(np.linalg.norm(residual(sol.x)))
        if r < best_r:
            best_c, best_r = sol.x, r
        if best_r <= 1e-3 * tol:
            break
    c = np.sort(np.clip(best_c, 0.0, 1.0))
    intervals = [(float(c[2 * i]), float(c[2 * i + 1])) for i in range(k)]
    ok = best_r <= tol
    notes = [] if ok else [f"best residual {best_r:.3g} exceeds tolerance {tol:.3g}"]
    return SplitResult(intervals, best_r, ok, k, notes)
