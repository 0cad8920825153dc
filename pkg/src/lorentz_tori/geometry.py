"""Minkowski form, causal cones, cone-boundary distance and lattice arithmetic.

Vectors are numpy arrays whose last axis has length ``dim``; every vectorized
routine accepts arbitrary leading axes. Coordinates are taken in a fixed
orthonormal basis ``e_1, ..., e_m`` with ``<e_1, e_1> = -1`` (the time axis).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

NORM_KINDS = ("euclidean", "sup")

# number of boundary rays sampled per level when no closed form is available
BOUNDARY_SAMPLES = 4096

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


def _as_vec(v, dim: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape[-1:] != (dim,):
        raise ValueError(f"expected vectors of dimension {dim}, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class MinkowskiSpace:
    """``R^m`` with the form of signature (-,+,...,+) and a reference norm."""

    dim: int
    norm_kind: str = "euclidean"

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.dim}")
        if self.norm_kind not in NORM_KINDS:
            raise ValueError(f"norm_kind must be one of {NORM_KINDS}, got {self.norm_kind!r}")

    @cached_property
    def signature(self) -> np.ndarray:
        sig = np.ones(self.dim)
        sig[0] = -1.0
        return sig

    @property
    def time_axis(self) -> np.ndarray:
        e1 = np.zeros(self.dim)
        e1[0] = 1.0
        return e1

    def inner(self, v, w) -> np.ndarray:
        v = _as_vec(v, self.dim)
        w = _as_vec(w, self.dim)
        return np.sum(self.signature * v * w, axis=-1)

    def magnitude(self, v) -> np.ndarray:
        """``sqrt(|<v, v>|)``."""
        return np.sqrt(np.abs(self.inner(v, v)))

    def norm(self, v) -> np.ndarray:
        v = _as_vec(v, self.dim)
        if self.norm_kind == "euclidean":
            return np.linalg.norm(v, axis=-1)
        return np.max(np.abs(v), axis=-1)

    def dual_norm(self, alpha) -> np.ndarray:
        alpha = _as_vec(alpha, self.dim)
        if self.norm_kind == "euclidean":
            return np.linalg.norm(alpha, axis=-1)
        return np.sum(np.abs(alpha), axis=-1)

    def lowered(self, v) -> np.ndarray:
        """Covector ``<v, .>`` in components."""
        return self.signature * _as_vec(v, self.dim)

    # -- causal structure -------------------------------------------------

    def _null_tol(self, v) -> np.ndarray:
        return 1e-12 * np.sum(v * v, axis=-1)

    def in_cone(self, v) -> np.ndarray:
        """Membership in the future causal cone (zero excluded)."""
        v = _as_vec(v, self.dim)
        q = self.inner(v, v)
        return (q <= self._null_tol(v)) & (v[..., 0] > 0)

    def classify(self, v) -> str:
        v = _as_vec(v, self.dim)
        if v.ndim != 1:
            raise ValueError("classify takes a single vector")
        if not np.any(v):
            return "zero"
        q = float(self.inner(v, v))
        tol = float(self._null_tol(v))
        if q > tol:
            return "spacelike"
        kind = "timelike" if q < -tol else "lightlike"
        # <v, e_1> = -v_0 < 0 means future pointing
        return ("future_" if v[0] > 0 else "past_") + kind

    def dist_to_cone_boundary(self, v) -> np.ndarray:
        """Distance in the reference norm from ``v`` in the cone to its boundary.

        The future cone is the intersection of the half-spaces
        ``t - u.x >= 0`` over spatial unit vectors ``u``; the distance from an
        interior point is the minimum over these of
        ``(t - u.x) / ||(1, -u)||_*``.
        """
        v = _as_vec(v, self.dim)
        if not np.all(self.in_cone(v)):
            raise DomainError("dist_to_cone_boundary requires future causal vectors")
        t = v[..., 0]
        x = v[..., 1:]
        r = np.linalg.norm(x, axis=-1)
        if self.norm_kind == "euclidean":
            out = (t - r) / np.sqrt(2.0)
        elif self.dim == 2:
            out = (t - r) / 2.0
        else:
            out = self._sup_dist_sampled(t, x)
        return np.maximum(out, 0.0)

    def _sup_dist_sampled(self, t, x) -> np.ndarray:
        def ratio(u):
            # u: (..., S, m-1) unit spatial directions
            num = t[..., None] - np.sum(x[..., None, :] * u, axis=-1)
            return num / (1.0 + np.sum(np.abs(u), axis=-1))

        if self.dim == 3:
            theta = np.linspace(0.0, 2 * np.pi, BOUNDARY_SAMPLES, endpoint=False)
            u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
            vals = ratio(u)
            best = np.argmin(vals, axis=-1)
            step = 2 * np.pi / BOUNDARY_SAMPLES
            lo = theta[best] - step
            hi = theta[best] + step
            # golden-section refinement, vectorized over the leading axes
            c = hi - _GOLDEN * (hi - lo)
            d = lo + _GOLDEN * (hi - lo)

            def at(th):
                return ratio(np.stack([np.cos(th), np.sin(th)], axis=-1)[..., None, :])[..., 0]

            fc, fd = at(c), at(d)
            for _ in range(60):
                left = fc < fd
                hi = np.where(left, d, hi)
                lo = np.where(left, lo, c)
                c = hi - _GOLDEN * (hi - lo)
                d = lo + _GOLDEN * (hi - lo)
                fc, fd = at(c), at(d)
            return np.minimum(np.min(vals, axis=-1), np.minimum(fc, fd))
        rng = np.random.default_rng(12345)
        u = rng.normal(size=(BOUNDARY_SAMPLES, self.dim - 1))
        u /= np.linalg.norm(u, axis=-1, keepdims=True)
        u = np.concatenate([u, np.eye(self.dim - 1), -np.eye(self.dim - 1)])
        return np.min(ratio(u), axis=-1)

    def in_margin_cone(self, v, eps: float) -> np.ndarray:
        """Membership in ``T_eps``: causal with ``dist(v, dT) >= eps ||v||``."""
        v = _as_vec(v, self.dim)
        inside = self.in_cone(v)
        out = np.zeros(inside.shape, dtype=bool)
        if np.any(inside):
            vi = v[inside]
            slack = 1e-12 * self.norm(vi)
            out[inside] = self.dist_to_cone_boundary(vi) >= eps * self.norm(vi) - slack
        return out

    def interior_dual(self, alpha) -> bool:
        """``alpha > 0`` on the whole closed cone minus zero."""
        alpha = _as_vec(alpha, self.dim)
        return bool(alpha[0] > np.linalg.norm(alpha[1:]))


@dataclass(frozen=True)
class ConeSpec:
    """The future cone of a Minkowski space together with a margin ``eps``."""

    space: MinkowskiSpace
    eps: float = 0.0

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("cone margin must be non-negative")

    def contains(self, v) -> np.ndarray:
        if self.eps == 0:
            return self.space.in_cone(v)
        return self.space.in_margin_cone(v, self.eps)

    @cached_property
    def inradius(self) -> float:
        """Radius of the largest ball around ``e_1`` inside the cone."""
        return float(self.space.dist_to_cone_boundary(self.space.time_axis))


@dataclass(frozen=True)
class ConeConstants:
    """Structure constants ``c``, ``C``, ``eta`` of the future cone."""

    c: float
    C: float
    eta: float
    method: str
    sampled: tuple[float, float, float] | None = None
    analytic: tuple[float, float, float] | None = None


def sample_cone(space: MinkowskiSpace, n: int, rng: np.random.Generator,
                boundary_bias: float = 2.0) -> np.ndarray:
    """Random future causal vectors, weighted towards the cone boundary."""
    u = rng.normal(size=(n, space.dim - 1))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    # slope |x|/t in [0, 1); boundary_bias > 1 concentrates near the null cone
    slope = 1.0 - rng.uniform(size=n) ** boundary_bias
    slope = np.minimum(slope, 1.0 - 1e-9)
    scale = np.exp(rng.uniform(-1.0, 1.0, size=n))
    v = np.concatenate([np.ones((n, 1)), slope[:, None] * u], axis=1)
    return scale[:, None] * v


def estimate_cone_constants(space: MinkowskiSpace, samples: int = 2000,
                            seed: int = 0) -> ConeConstants:
    """Constants for ``c||w|| dist(v, dT) <= |<v, w>|``, ``|v|^2 <= C ||v|| dist(v, dT)``
    and ``||sum v_i|| >= eta sum ||v_i||``.

    Sample-based values carry safety factors 0.9 (``c``, ``eta``) and 1.1
    (``C``). For the Euclidean norm the exact extremal values ``c = 1``,
    ``C = 2`` and ``eta = 1/sqrt(2)`` are known and reported, with the
    sampled values kept alongside.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    v = sample_cone(space, samples, rng)
    w = sample_cone(space, samples, rng)
    dv = space.dist_to_cone_boundary(v)
    nv, nw = space.norm(v), space.norm(w)
    c_s = 0.9 * float(np.min(np.abs(space.inner(v, w)) / (nw * dv)))
    C_s = 1.1 * float(np.max(np.abs(space.inner(v, v)) / (nv * dv)))

    ratios = [1.0]
    # pairs and small random subsets, plus exact opposite null rays
    ratios.append(np.min(space.norm(v + w) / (nv + nw)))
    for k in (3, 5):
        idx = rng.integers(0, samples, size=(max(samples // k, 1), k))
        s = v[idx]
        ratios.append(np.min(space.norm(s.sum(axis=1)) / space.norm(s).sum(axis=1)))
    e = np.eye(space.dim)
    for i in range(1, space.dim):
        pair = np.array([e[0] + e[i], e[0] - e[i]])
        ratios.append(space.norm(pair.sum(axis=0)) / space.norm(pair).sum())
    eta_s = 0.9 * float(min(ratios))
    sampled = (c_s, C_s, eta_s)

    if space.norm_kind != "euclidean":
        return ConeConstants(c_s, C_s, eta_s, method="sampled", sampled=sampled)
    # exact extremal values: a valid sampled bound can never be tighter
    analytic = (1.0, 2.0, 1.0 / np.sqrt(2.0))
    return ConeConstants(*analytic, method="analytic", sampled=sampled, analytic=analytic)


@dataclass(frozen=True, eq=False)
class Lattice:
    """Co-compact lattice spanned by the columns of ``basis``."""

    basis: np.ndarray
    space: MinkowskiSpace = field(default=None)

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError("lattice basis must be a square matrix")
        if abs(np.linalg.det(b)) < 1e-12:
            raise ValueError("lattice basis is singular")
        object.__setattr__(self, "basis", b)
        if self.space is None:
            object.__setattr__(self, "space", MinkowskiSpace(b.shape[0]))
        if self.space.dim != b.shape[0]:
            raise ValueError("lattice and space dimensions differ")

    @classmethod
    def standard(cls, space: MinkowskiSpace) -> "Lattice":
        return cls(np.eye(space.dim), space)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @cached_property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.basis)

    @cached_property
    def diam(self) -> float:
        """Half the largest basis vector norm for the stored basis."""
        return 0.5 * float(np.max(self.space.norm(self.basis.T)))

    @cached_property
    def reach(self) -> float:
        """Bound on the distance from any point to the rounded lattice point.

        Rounding coordinates leaves a residual ``sum theta_i k_i`` with
        ``|theta_i| <= 1/2``, whose norm is maximal at a vertex of that
        parallelepiped.
        """
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=self.dim)))
        return 0.5 * float(np.max(self.space.norm(signs @ self.basis.T)))

    @cached_property
    def shift_factor(self) -> float:
        """Smallest admissible multiple of ``e_1`` in the causal shift construction."""
        inrad = float(self.space.dist_to_cone_boundary(self.space.time_axis))
        return self.reach / inrad * (1.0 + 1e-9)

    @cached_property
    def fil(self) -> float:
        return self.reach + self.shift_factor * float(self.space.norm(self.space.time_axis))

    def coords(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.inverse.T

    def point(self, n) -> np.ndarray:
        return np.asarray(n, dtype=float) @ self.basis.T

    def contains(self, k, atol: float = 1e-9) -> bool:
        c = self.coords(k)
        return bool(np.all(np.abs(c - np.round(c)) <= atol))

    @property
    def min_period(self) -> float:
        return float(np.min(np.linalg.norm(self.basis, axis=0)))


def nearest_lattice_representative(x, y, lattice: Lattice) -> np.ndarray:
    """Lattice vector ``l`` making ``||x - (y + l)||`` small.

    Rounds ``x - y`` in lattice coordinates, then searches the +-1 coordinate
    neighbourhood. The result satisfies ``||x - (y + l)|| <= lattice.reach``.
    """
    diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    base = np.round(lattice.coords(diff))
    offsets = np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=lattice.dim)))
    cand = base + offsets
    res = lattice.space.norm(diff - lattice.point(cand))
    return lattice.point(cand[np.argmin(res)])


def causal_lattice_shift(x, y, lattice: Lattice) -> np.ndarray:
    """Lattice vector ``k`` with ``y + k - x`` future causal and ``||x - (y + k)|| <= Fil``."""
    x = np.asarray(x, dtype=float)
    target = x + lattice.shift_factor * lattice.space.time_axis
    return nearest_lattice_representative(target, y, lattice)
