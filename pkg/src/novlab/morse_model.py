"""Standard Morse model around a zero of index ``i`` in ``R^n``.

Coordinates are split as ``x = (xm, xp)`` with ``xm`` in ``R^i`` (unstable
directions) and ``xp`` in ``R^(n-i)``. The quadratic form is
``Q = -|xm|^2 + |xp|^2`` and the gradient flow is linear, so every map here is
closed form. The top boundary is ``Q = +delta_star`` and the bottom boundary
is ``Q = -delta_star``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ._accel import kernels
from .errors import OnCoSphereError, ValidationError

#: Points with ``|xm|`` below this are treated as lying on the co-sphere.
COSPHERE_EPS = 1e-9


@dataclass(frozen=True)
class MorseModelConfig:
    n: int = 4
    i: int = 2
    delta: float = 1.0
    delta_star: float = 1.0

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 2:
            raise ValidationError(f"dimension n must be an integer >= 2, got {self.n!r}")
        if not isinstance(self.i, int) or not 1 <= self.i <= self.n - 1:
            raise ValidationError(f"index i must satisfy 1 <= i <= n-1, got {self.i!r}")
        for name in ("delta", "delta_star"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be a positive real, got {v!r}")

    @property
    def dim_minus(self) -> int:
        return self.i

    @property
    def dim_plus(self) -> int:
        return self.n - self.i

    @classmethod
    def from_json(cls, doc: Mapping) -> "MorseModelConfig":
        try:
            return cls(int(doc["n"]), int(doc["i"]), float(doc.get("delta", 1.0)), float(doc.get("delta_star", 1.0)))
        except KeyError as exc:
            raise ValidationError(f"model config: missing field {exc.args[0]!r}") from None

    def to_json(self) -> dict:
        return {"n": self.n, "i": self.i, "delta": self.delta, "delta_star": self.delta_star}


@dataclass(frozen=True)
class ModelPoint:
    """Point of the model in cartesian coordinates."""

    xm: np.ndarray
    xp: np.ndarray

    def __post_init__(self):
        xm = np.array(self.xm, dtype=float).reshape(-1)
        xp = np.array(self.xp, dtype=float).reshape(-1)
        xm.setflags(write=False)
        xp.setflags(write=False)
        object.__setattr__(self, "xm", xm)
        object.__setattr__(self, "xp", xp)

    def __eq__(self, other):
        if not isinstance(other, ModelPoint):
            return NotImplemented
        return np.array_equal(self.xm, other.xm) and np.array_equal(self.xp, other.xp)

    def __hash__(self):
        return hash((self.xm.tobytes(), self.xp.tobytes()))

    def spherical(self, side: str) -> tuple[np.ndarray, float, np.ndarray]:
        """``(phi, r, psi)``; ``r = |xm|`` on ``"top"`` and ``|xp|`` on ``"bottom"``.

        Undefined directions come back as NaN vectors.
        """
        a = float(np.linalg.norm(self.xm))
        b = float(np.linalg.norm(self.xp))
        phi = self.xm / a if a > 0 else np.full_like(self.xm, np.nan)
        psi = self.xp / b if b > 0 else np.full_like(self.xp, np.nan)
        if side == "top":
            return phi, a, psi
        if side == "bottom":
            return phi, b, psi
        raise ValidationError(f"side must be 'top' or 'bottom', got {side!r}")

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.xm, self.xp])


def q_value(p: ModelPoint) -> float:
    return float(-(p.xm @ p.xm) + p.xp @ p.xp)


def flow(p: ModelPoint, t: float) -> ModelPoint:
    """Time-``t`` map of the linear gradient flow."""
    return ModelPoint(p.xm * math.exp(2.0 * t), p.xp * math.exp(-2.0 * t))


def in_model(p: ModelPoint, cfg: MorseModelConfig) -> bool:
    q = q_value(p)
    prod = float(p.xm @ p.xm) * float(p.xp @ p.xp)
    return -cfg.delta_star <= q <= cfg.delta_star and prod <= cfg.delta * cfg.delta_star


def descend(p: ModelPoint, cfg: MorseModelConfig) -> ModelPoint:
    """Follow the flow from the top boundary to the bottom boundary."""
    if np.linalg.norm(p.xm) < COSPHERE_EPS:
        raise OnCoSphereError("point lies on the co-sphere and never reaches the bottom boundary")
    om, op = kernels.descend_batch(p.xm[None, :], p.xp[None, :], cfg.delta_star, COSPHERE_EPS)
    return ModelPoint(om[0], op[0])


def ascend(p: ModelPoint, cfg: MorseModelConfig) -> ModelPoint:
    """Follow the flow backwards from the bottom boundary to the top boundary."""
    if np.linalg.norm(p.xp) < COSPHERE_EPS:
        raise OnCoSphereError("point lies on the attaching sphere and never reaches the top boundary")
    om, op = kernels.ascend_batch(p.xm[None, :], p.xp[None, :], cfg.delta_star, COSPHERE_EPS)
    return ModelPoint(om[0], op[0])


def exit_time(p: ModelPoint, cfg: MorseModelConfig) -> float:
    """Time for a top-boundary point to reach the bottom boundary."""
    a2 = float(p.xm @ p.xm)
    if a2 < COSPHERE_EPS**2:
        raise OnCoSphereError("point lies on the co-sphere and never reaches the bottom boundary")
    b2 = float(p.xp @ p.xp)
    ds = cfg.delta_star
    return 0.25 * math.log((ds + math.sqrt(ds * ds + 4.0 * a2 * b2)) / (2.0 * a2))


def descend_arrays(xm, xp, cfg: MorseModelConfig):
    """Batch descent; co-sphere rows become NaN."""
    return kernels.descend_batch(np.atleast_2d(xm), np.atleast_2d(xp), cfg.delta_star, COSPHERE_EPS)


def ascend_arrays(xm, xp, cfg: MorseModelConfig):
    return kernels.ascend_batch(np.atleast_2d(xm), np.atleast_2d(xp), cfg.delta_star, COSPHERE_EPS)


# boundary coordinates


def bottom_point(phi, w, cfg: MorseModelConfig) -> ModelPoint:
    """Bottom-boundary point with direction ``phi`` and ``xp = w``."""
    phi = np.asarray(phi, dtype=float)
    w = np.asarray(w, dtype=float)
    return ModelPoint(phi * math.sqrt(cfg.delta_star + float(w @ w)), w)


def top_point(u, psi, cfg: MorseModelConfig) -> ModelPoint:
    """Top-boundary point with ``xm = u`` and direction ``psi``."""
    u = np.asarray(u, dtype=float)
    psi = np.asarray(psi, dtype=float)
    return ModelPoint(u, psi * math.sqrt(cfg.delta_star + float(u @ u)))


@dataclass(frozen=True)
class LatitudeFrame:
    """Co-oriented equator of a sphere, given by a unit normal (the north pole)."""

    normal: np.ndarray

    def __post_init__(self):
        v = np.array(self.normal, dtype=float).reshape(-1)
        nv = float(np.linalg.norm(v))
        if not abs(nv - 1.0) < 1e-9:
            raise ValidationError(f"latitude frame normal must be a unit vector (norm {nv})")
        v.setflags(write=False)
        object.__setattr__(self, "normal", v)

    @property
    def north(self) -> np.ndarray:
        return self.normal

    @property
    def south(self) -> np.ndarray:
        return -self.normal

    @property
    def sphere_dim(self) -> int:
        return self.normal.size - 1

    def on_equator(self, theta, tol: float = 1e-12) -> bool:
        return abs(latitude(self, theta)) <= tol


def latitude(frame: LatitudeFrame, theta) -> float:
    """Cosine of the angle between ``theta`` and the north pole."""
    return float(np.dot(np.asarray(theta, dtype=float), frame.normal))
