"""Conformal factors and the metric ``f^2 <.,.>`` on the cover of the torus."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .geometry import Lattice, MinkowskiSpace


@dataclass(frozen=True)
class FourierMode:
    """One term ``a cos(2 pi n.c(x)) + b sin(2 pi n.c(x))``, ``c(x)`` the lattice coordinates."""

    freq: tuple[int, ...]
    a: float
    b: float = 0.0

    @property
    def amplitude(self) -> float:
        return float(np.hypot(self.a, self.b))


class ConformalFactor:
    """Finite Fourier series ``f = c0 + sum of modes``, periodic under the lattice.

    Frequencies are integer vectors in the dual basis, so every mode is
    invariant under lattice translations. Positivity is enforced through the
    sufficient condition ``c0 > sum sqrt(a^2 + b^2)``.
    """

    def __init__(self, c0: float, modes, lattice: Lattice):
        modes = tuple(m if isinstance(m, FourierMode) else FourierMode(tuple(m[0]), *m[1:])
                      for m in modes)
        for m in modes:
            if len(m.freq) != lattice.dim:
                raise ValueError(f"mode frequency {m.freq} does not have dimension {lattice.dim}")
            if any(int(n) != n for n in m.freq):
                raise ValueError(f"mode frequency {m.freq} must be an integer vector")
        total = sum(m.amplitude for m in modes)
        if not c0 > total:
            raise ValueError(
                f"positivity invariant violated: c0 = {c0} must exceed the sum of mode "
                f"amplitudes {total}")
        self.c0 = float(c0)
        self.modes = modes
        self.lattice = lattice
        n = np.array([m.freq for m in modes], dtype=float).reshape(len(modes), lattice.dim)
        self.wave = 2 * np.pi * n @ lattice.inverse
        self.a = np.array([m.a for m in modes], dtype=float)
        self.b = np.array([m.b for m in modes], dtype=float)

    @classmethod
    def constant(cls, lattice: Lattice, c0: float = 1.0) -> "ConformalFactor":
        return cls(c0, (), lattice)

    @property
    def dim(self) -> int:
        return self.lattice.dim

    @property
    def inf_bound(self) -> float:
        return self.c0 - sum(m.amplitude for m in self.modes)

    @property
    def sup_bound(self) -> float:
        return self.c0 + sum(m.amplitude for m in self.modes)

    @property
    def is_constant(self) -> bool:
        return not np.any(self.a) and not np.any(self.b)

    @property
    def time_only(self) -> bool:
        """True when ``f`` depends on the time coordinate alone."""
        return bool(np.all(self.wave[:, 1:] == 0))

    @property
    def cycles_per_unit(self) -> float:
        """Largest spatial frequency, in oscillations per unit length."""
        if not len(self.modes):
            return 0.0
        return float(np.max(np.linalg.norm(self.wave, axis=1))) / (2 * np.pi)

    def _trig(self, x):
        x = np.asarray(x, dtype=float)
        phase = x @ self.wave.T
        return np.cos(phase), np.sin(phase)

    def value(self, x) -> np.ndarray:
        cos, sin = self._trig(x)
        return self.c0 + cos @ self.a + sin @ self.b

    def gradient(self, x) -> np.ndarray:
        cos, sin = self._trig(x)
        return (-sin * self.a + cos * self.b) @ self.wave

    def hessian(self, x) -> np.ndarray:
        cos, sin = self._trig(x)
        weights = -(cos * self.a + sin * self.b)
        return np.einsum("...k,ki,kj->...ij", weights, self.wave, self.wave)

    def value_and_derivatives(self, x):
        """``f``, gradient and Hessian at ``x`` from a single trigonometric evaluation."""
        cos, sin = self._trig(x)
        f = self.c0 + cos @ self.a + sin @ self.b
        grad = (-sin * self.a + cos * self.b) @ self.wave
        weights = -(cos * self.a + sin * self.b)
        hess = np.einsum("...k,ki,kj->...ij", weights, self.wave, self.wave)
        return f, grad, hess

    def as_dict(self) -> dict:
        return {"c0": self.c0,
                "modes": [{"freq": list(m.freq), "a": m.a, "b": m.b} for m in self.modes]}


class TorusModel:
    """Conformally flat Lorentzian torus: space, lattice and conformal factor."""

    def __init__(self, space: MinkowskiSpace, lattice: Lattice, factor: ConformalFactor):
        if not (space.dim == lattice.dim == factor.dim):
            raise ValueError("space, lattice and conformal factor dimensions differ")
        self.space = space
        self.lattice = lattice
        self.factor = factor

    @classmethod
    def build(cls, dim: int, c0: float = 1.0, modes=(), basis=None,
              norm_kind: str = "euclidean") -> "TorusModel":
        space = MinkowskiSpace(dim, norm_kind)
        lattice = Lattice(np.eye(dim) if basis is None else basis, space)
        return cls(space, lattice, ConformalFactor(c0, modes, lattice))

    @classmethod
    def flat(cls, dim: int = 2, norm_kind: str = "euclidean") -> "TorusModel":
        return cls.build(dim, norm_kind=norm_kind)

    @property
    def dim(self) -> int:
        return self.space.dim

    def f(self, x):
        return self.factor.value(x)

    def metric(self, x, v, w):
        """``f(x)^2 <v, w>``."""
        return self.factor.value(x) ** 2 * self.space.inner(v, w)

    def energy(self, x, v):
        return self.metric(x, v, v)

    def geodesic_acceleration(self, x, v) -> np.ndarray:
        """``-Gamma^k_ij v^i v^j`` for the conformal metric.

        With ``s = ln f``: ``a = -2 (ds.v) v + <v, v> grad s``, where the
        gradient is raised with the flat form.
        """
        v = np.asarray(v, dtype=float)
        ds = self.factor.gradient(x) / self.factor.value(x)[..., None]
        dv = np.sum(ds * v, axis=-1)[..., None]
        return -2.0 * dv * v + self.space.inner(v, v)[..., None] * self.space.signature * ds

    def as_dict(self) -> dict:
        return {"dim": self.dim, "norm": self.space.norm_kind,
                "lattice": self.lattice.basis.T.tolist(), "conformal": self.factor.as_dict()}

    @cached_property
    def digest(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]
