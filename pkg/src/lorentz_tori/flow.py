"""Geodesic integration on the cover, projection to the torus and two-point shooting."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .conformal import TorusModel
from .geometry import DomainError, Lattice, nearest_lattice_representative

ENERGY_WARN = 1e-4


@numba.njit(cache=True)
def _deriv(x, v, wave, a, b, c0, grad, dv):
    m = x.shape[0]
    f = c0
    for j in range(m):
        grad[j] = 0.0
    for k in range(wave.shape[0]):
        ph = 0.0
        for j in range(m):
            ph += wave[k, j] * x[j]
        c = math.cos(ph)
        s = math.sin(ph)
        f += a[k] * c + b[k] * s
        coef = -a[k] * s + b[k] * c
        for j in range(m):
            grad[j] += coef * wave[k, j]
    dsv = 0.0
    vv = -v[0] * v[0]
    for j in range(m):
        dsv += grad[j] * v[j] / f
        if j > 0:
            vv += v[j] * v[j]
    for j in range(m):
        sig = -1.0 if j == 0 else 1.0
        dv[j] = -2.0 * dsv * v[j] + vv * sig * grad[j] / f
    return f * math.sqrt(max(-vv, 0.0))


@numba.njit(cache=True)
def _rk4(x0, v0, h, n, wave, a, b, c0, record):
    """RK4 for ``x' = v, v' = acc, l' = f |v|``; returns trajectory samples."""
    m = x0.shape[0]
    rows = n + 1 if record else 1
    xs = np.empty((rows, m))
    vs = np.empty((rows, m))
    ls = np.empty(rows)
    x = x0.copy()
    v = v0.copy()
    length = 0.0
    grad = np.empty(m)
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    xt = np.empty(m)
    vt = np.empty(m)
    v2 = np.empty(m)
    v3 = np.empty(m)
    v4 = np.empty(m)
    if record:
        xs[0] = x
        vs[0] = v
        ls[0] = 0.0
    for i in range(n):
        l1 = _deriv(x, v, wave, a, b, c0, grad, k1)
        for j in range(m):
            xt[j] = x[j] + 0.5 * h * v[j]
            v2[j] = v[j] + 0.5 * h * k1[j]
        l2 = _deriv(xt, v2, wave, a, b, c0, grad, k2)
        for j in range(m):
            xt[j] = x[j] + 0.5 * h * v2[j]
            v3[j] = v[j] + 0.5 * h * k2[j]
        l3 = _deriv(xt, v3, wave, a, b, c0, grad, k3)
        for j in range(m):
            xt[j] = x[j] + h * v3[j]
            v4[j] = v[j] + h * k3[j]
        l4 = _deriv(xt, v4, wave, a, b, c0, grad, k4)
        for j in range(m):
            x[j] += h / 6.0 * (v[j] + 2.0 * v2[j] + 2.0 * v3[j] + v4[j])
        for j in range(m):
            v[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        length += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4)
        if record:
            xs[i + 1] = x
            vs[i + 1] = v
            ls[i + 1] = length
    if not record:
        xs[0] = x
        vs[0] = v
        ls[0] = length
    return xs, vs, ls


@numba.njit(cache=True)
def _flow_batch(X0, V0, h, n, wave, a, b, c0):
    B = X0.shape[0]
    X = np.empty_like(X0)
    V = np.empty_like(V0)
    L = np.empty(B)
    for i in range(B):
        xs, vs, ls = _rk4(X0[i], V0[i], h, n, wave, a, b, c0, False)
        X[i] = xs[0]
        V[i] = vs[0]
        L[i] = ls[0]
    return X, V, L


def _kernel_args(model: TorusModel):
    fac = model.factor
    return (np.ascontiguousarray(fac.wave), np.ascontiguousarray(fac.a),
            np.ascontiguousarray(fac.b), fac.c0)


def flow_endpoints(model: TorusModel, x0, v0, t_end: float, steps: int):
    """Endpoints, velocities and lengths of a batch of geodesics (rows of ``x0``, ``v0``)."""
    X0 = np.atleast_2d(np.asarray(x0, dtype=float))
    V0 = np.atleast_2d(np.asarray(v0, dtype=float))
    X0 = np.ascontiguousarray(np.broadcast_to(X0, V0.shape))
    return _flow_batch(X0, np.ascontiguousarray(V0), t_end / steps, int(steps),
                       *_kernel_args(model))


@dataclass
class GeodesicArc:
    """Samples of a geodesic lift in affine parameter."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    energy: np.ndarray
    cum_length: np.ndarray
    h: float
    warnings: list[str] = field(default_factory=list)

    @property
    def points(self) -> np.ndarray:
        return self.x

    @property
    def length(self) -> float:
        return float(self.cum_length[-1] - self.cum_length[0])

    @property
    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.energy[0])))

    def point_at(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.stack([np.interp(s, self.t, self.x[:, j]) for j in range(self.x.shape[1])],
                        axis=-1)

    def length_between(self, s, t) -> float:
        return float(np.interp(t, self.t, self.cum_length) - np.interp(s, self.t, self.cum_length))

    def slice(self, start: int, stop: int) -> "GeodesicArc":
        return GeodesicArc(self.t[start:stop], self.x[start:stop], self.v[start:stop],
                           self.energy[start:stop], self.cum_length[start:stop], self.h,
                           list(self.warnings))

    def write_csv(self, fh) -> None:
        m = self.x.shape[1]
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"x_{j + 1}" for j in range(m)] + [f"v_{j + 1}" for j in range(m)]
                   + ["energy", "cum_length"])
        for i in range(len(self.t)):
            row = [self.t[i], *self.x[i], *self.v[i], self.energy[i], self.cum_length[i]]
            w.writerow([format(float(r), ".17g") for r in row])


def integrate(model: TorusModel, x0, v0, t_end: float, h: float) -> GeodesicArc:
    """Fixed-step RK4 integration of the geodesic equation from ``(x0, v0)``.

    The step is shrunk slightly if needed so that ``t_end`` is hit exactly.
    """
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if h <= 0 or t_end <= 0:
        raise ValueError("step and end time must be positive")
    if not model.space.in_cone(v0):
        raise DomainError("initial velocity must be future causal")
    n = max(1, int(math.ceil(t_end / h - 1e-9)))
    h = t_end / n
    xs, vs, ls = _rk4(x0, v0, h, n, *_kernel_args(model), True)
    t = np.arange(n + 1) * h
    arc = GeodesicArc(t, xs, vs, model.energy(xs, vs), ls, h)
    drift = arc.energy_drift
    if drift > ENERGY_WARN:
        arc.warnings.append(f"energy drift {drift:.3g} exceeds {ENERGY_WARN:g}")
    return arc


def project_to_torus(x, lattice: Lattice) -> np.ndarray:
    """Representative in the half-open fundamental parallelepiped of the basis."""
    c = lattice.coords(x)
    frac = c - np.floor(c)
    frac = np.where(frac >= 1.0, 0.0, frac)
    return lattice.point(frac)


def lift_path(points, lattice: Lattice, start=None) -> np.ndarray:
    """Continuous lift of a sampled path on the torus (consecutive jumps minimized)."""
    points = np.asarray(points, dtype=float)
    out = np.empty_like(points)
    out[0] = points[0] if start is None else start
    for i in range(1, len(points)):
        out[i] = points[i] + nearest_lattice_representative(out[i - 1], points[i], lattice)
    return out


@dataclass
class ShootingResult:
    v0: np.ndarray
    miss: np.ndarray
    length: float
    converged: bool
    iterations: int
    n_converged: int = 0
    steps: int = 0


def shooting_steps(model: TorusModel, chord) -> int:
    """RK4 steps on ``[0, 1]``: about 64 per oscillation of ``f`` along the chord."""
    if model.factor.is_constant:
        return 16
    span = float(np.linalg.norm(chord)) * model.factor.cycles_per_unit
    return max(48, int(math.ceil(64 * span)))


def _perturbed_starts(chord, space, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    scale = float(np.linalg.norm(chord))
    out = []
    for _ in range(count):
        d = rng.normal(size=chord.shape)
        amp = 0.05
        while amp > 1e-6:
            cand = chord + amp * scale * d / np.linalg.norm(d)
            if space.in_cone(cand):
                break
            amp /= 2
        out.append(cand)
    return np.array(out).reshape(count, len(chord))


def shoot_to_target(model: TorusModel, x, y, tol: float | None = None, max_iter: int = 30,
                    starts=None, n_perturb: int = 8, seed: int = 0,
                    steps: int | None = None) -> ShootingResult:
    """Initial velocity of the geodesic ``gamma`` on ``[0, 1]`` with ``gamma(0) = x``, ``gamma(1) = y``.

    Damped Newton on the endpoint map with a forward-difference Jacobian, run
    from the straight-line velocity, ``n_perturb`` perturbations of it and any
    extra ``starts``. The longest converged geodesic wins.
    """
    space = model.space
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    chord = y - x
    if not space.in_cone(chord):
        raise DomainError("shooting target must lie in the causal future of the start")
    m = model.dim
    if tol is None:
        tol = 1e-10 * (1.0 + float(np.linalg.norm(chord)))
    if steps is None:
        steps = shooting_steps(model, chord)
    cands = [np.asarray(s, dtype=float) for s in (starts if starts is not None else ())]
    cands.append(chord)
    V = np.vstack([np.array(cands).reshape(-1, m), _perturbed_starts(chord, space, n_perturb, seed)])
    S = len(V)

    def endpoint(vel):
        X, _, L = flow_endpoints(model, x, vel, 1.0, steps)
        return X, L

    X, L = endpoint(V)
    miss = X - y
    err = np.linalg.norm(miss, axis=1)
    active = err > tol
    iters = np.zeros(S, dtype=int)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if not len(idx):
            break
        iters[idx] += 1
        hJ = 1e-6 * (1.0 + np.linalg.norm(V[idx], axis=1))
        probe = np.concatenate([V[idx] + hJ[:, None] * e for e in np.eye(m)])
        Xp, _ = endpoint(probe)
        J = np.empty((len(idx), m, m))
        for j in range(m):
            J[:, :, j] = (Xp[j * len(idx):(j + 1) * len(idx)] - X[idx]) / hJ[:, None]
        try:
            step = np.linalg.solve(J, -miss[idx][..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.array([np.linalg.lstsq(Ji, -mi, rcond=None)[0]
                             for Ji, mi in zip(J, miss[idx])])
        lam = np.ones(len(idx))
        pending = np.ones(len(idx), dtype=bool)
        for _ in range(30):
            if not pending.any():
                break
            sel = np.flatnonzero(pending)
            trial = V[idx[sel]] + lam[sel, None] * step[sel]
            ok = space.in_cone(trial)
            Xt = np.full_like(trial, np.inf)
            Lt = np.zeros(len(sel))
            if ok.any():
                Xt[ok], Lt[ok] = endpoint(trial[ok])
            et = np.linalg.norm(Xt - y, axis=1)
            better = ok & (et < err[idx[sel]])
            for r in np.flatnonzero(better):
                k = idx[sel[r]]
                V[k], X[k], L[k], err[k] = trial[r], Xt[r], Lt[r], et[r]
                pending[sel[r]] = False
            lam[sel[~better]] /= 2.0
        stalled = idx[pending]
        active[stalled] = False
        miss = X - y
        active &= err > tol
    conv = err <= tol
    if conv.any():
        # deterministic reduce: longest converged, ties to the lowest start index
        best = int(np.flatnonzero(conv)[np.argmax(L[conv])])
    else:
        best = int(np.argmin(err))
    return ShootingResult(V[best].copy(), miss[best].copy(), float(L[best]), bool(conv[best]),
                          int(iters[best]), int(conv.sum()), steps)
