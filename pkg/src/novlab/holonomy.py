"""Holonomy families of a homoclinic tube and their self-slide invariants.

A family is ``H_s = chart_plus^-1 o A_s o chart_minus`` where ``chart_minus``
sends a neighbourhood of ``a-`` in the bottom boundary to tube coordinates
``z = (x, y, v)`` with ``x`` in ``R^(i-1)``, ``y`` in ``R^(n-i-1)``, ``v`` real,
``chart_plus`` does the same near ``a+`` in the top boundary, and the core
``A_s(z) = z + s (c + B z)`` is affine with ``A_0 = Id``.

Both charts are linear in boundary coordinates:

* bottom: ``xm = phi sqrt(delta_star + |w|^2)``, ``xp = w`` with ``phi`` the
  gnomonic image of ``xi`` at ``phi0``; the chart is
  ``xi = x + vx v`` and ``w = E_psi (y + vy v) + eta_bar nu_psi v``;
* top: ``xm = u``, ``xp = psi sqrt(delta_star + |u|^2)`` with ``psi`` the
  gnomonic image of ``y`` at ``psi0``; the chart is ``u = E_phi x + nu_phi v``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import optimize

from .errors import InvalidFamilyError, UnsupportedConfigurationError, ValidationError
from .morse_model import (
    LatitudeFrame,
    ModelPoint,
    MorseModelConfig,
    bottom_point,
    latitude,
    top_point,
)

#: Latitudes and characters below this magnitude count as zero.
ZERO_THRESHOLD = 1e-7
#: Values within ``[ZERO_THRESHOLD, MARGINAL_BAND)`` are flagged as marginal.
MARGINAL_BAND = 1e-5
#: Default radius of the tube box ``max(|x|, |y|, |v|) <= radius``.
DEFAULT_RADIUS = 0.3
#: Families are evaluated only for ``|s| <= S_FRACTION * radius``.
S_FRACTION = 0.1

LABELS = ("S_g^+", "S_g^-", "S_g^0", "S_g^{0,+}", "S_g^{0,-}", "S_g^{0,0}", "phi-axis", "psi-axis")


# sphere helpers


def sphere_tangent_basis(c) -> np.ndarray:
    """Orthonormal basis of ``c``'s orthogonal complement, positively oriented after ``c``.

    Returns a ``(k, k-1)`` array ``T`` with ``det([c | T]) = +1``. In the plane
    this is the quarter turn of ``c``.
    """
    c = np.asarray(c, dtype=float)
    k = c.size
    if k == 1:
        return np.zeros((1, 0))
    if k == 2:
        return np.array([[-c[1]], [c[0]]])
    pivot = int(np.argmin(np.abs(c)))
    m = np.column_stack([c] + [np.eye(k)[:, j] for j in range(k) if j != pivot])
    q, _ = np.linalg.qr(m)
    q[:, 0] *= np.sign(q[:, 0] @ c)
    t = q[:, 1:]
    if np.linalg.det(np.column_stack([c, t])) < 0:
        t[:, -1] *= -1.0
    return t


def gnomonic(c, basis, xi) -> np.ndarray:
    """Unit vectors ``normalize(c + basis @ xi)`` for rows of ``xi``."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    v = c[None, :] + xi @ basis.T
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def gnomonic_inverse(c, basis, theta):
    """Inverse of :func:`gnomonic`; rows with ``theta . c <= 0`` are flagged invalid."""
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    dot = theta @ c
    ok = dot > 1e-12
    safe = np.where(ok, dot, 1.0)
    xi = (theta @ basis) / safe[:, None]
    return xi, ok


def _unit(v, what="vector") -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    nv = float(np.linalg.norm(v))
    if not nv > 0 or not math.isfinite(nv):
        raise ValidationError(f"{what} must be a nonzero finite vector")
    return v / nv


def tilted(c, omega: float, towards=None) -> np.ndarray:
    """Unit vector with inner product ``omega`` against ``c``.

    It is tilted from ``c`` towards ``towards`` (default: first tangent vector).
    """
    c = _unit(c)
    if c.size == 1:
        if abs(abs(omega) - 1.0) > 1e-12:
            raise UnsupportedConfigurationError("on a 0-sphere the latitude can only be +1 or -1")
        return c * math.copysign(1.0, omega)
    if towards is None:
        m = sphere_tangent_basis(c)[:, 0]
    else:
        m = np.asarray(towards, dtype=float)
        m = _unit(m - (m @ c) * c, "tilt direction")
    return omega * c + math.sqrt(max(0.0, 1.0 - omega * omega)) * m


# family


@dataclass(frozen=True, eq=False)
class HolonomyFamily:
    """One-parameter family of holonomy maps near a homoclinic orbit."""

    cfg: MorseModelConfig
    phi0: np.ndarray
    psi0: np.ndarray
    nu_phi: np.ndarray
    e_phi: np.ndarray
    nu_psi: np.ndarray
    e_psi: np.ndarray
    eta_bar: float
    vx: np.ndarray
    vy: np.ndarray
    core_matrix: np.ndarray
    core_vector: np.ndarray
    radius: float = DEFAULT_RADIUS
    targets: Mapping = field(default_factory=dict)

    def __post_init__(self):
        cfg = self.cfg
        i, j = cfg.i, cfg.n - cfg.i
        m = cfg.n - 1

        def arr(name, shape):
            a = np.array(getattr(self, name), dtype=float).reshape(shape)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
            return a

        phi0 = arr("phi0", (i,))
        psi0 = arr("psi0", (j,))
        nu_phi = arr("nu_phi", (i,))
        e_phi = arr("e_phi", (i, i - 1))
        nu_psi = arr("nu_psi", (j,))
        e_psi = arr("e_psi", (j, j - 1))
        arr("vx", (i - 1,))
        arr("vy", (j - 1,))
        arr("core_matrix", (m, m))
        arr("core_vector", (m,))
        for name, v in (("phi0", phi0), ("psi0", psi0), ("nu_phi", nu_phi), ("nu_psi", nu_psi)):
            if abs(np.linalg.norm(v) - 1.0) > 1e-9:
                raise InvalidFamilyError(f"{name} must be a unit vector")
        for name, nu, e in (("phi", nu_phi, e_phi), ("psi", nu_psi, e_psi)):
            frame = np.column_stack([nu, e])
            if not np.allclose(frame.T @ frame, np.eye(frame.shape[1]), atol=1e-9):
                raise InvalidFamilyError(f"{name}-frame is not orthonormal")
        if np.linalg.det(np.column_stack([nu_phi, e_phi])) < 0:
            raise InvalidFamilyError("phi-frame (nu_phi, e_phi) must be positively oriented")
        if not (math.isfinite(self.eta_bar) and self.eta_bar > 0):
            raise InvalidFamilyError("eta_bar must be positive")
        if not self.radius > 0:
            raise InvalidFamilyError("radius must be positive")
        object.__setattr__(self, "t_phi", sphere_tangent_basis(phi0))
        object.__setattr__(self, "t_psi", sphere_tangent_basis(psi0))

    # dimensions

    @property
    def dx(self) -> int:
        return self.cfg.i - 1

    @property
    def dy(self) -> int:
        return self.cfg.n - self.cfg.i - 1

    @property
    def s_bound(self) -> float:
        return S_FRACTION * self.radius

    def s_valid(self, s: float) -> bool:
        return abs(s) <= self.s_bound * (1 + 1e-12)

    def split(self, z):
        z = np.atleast_2d(z)
        return z[:, : self.dx], z[:, self.dx : self.dx + self.dy], z[:, -1]

    def in_box(self, z) -> np.ndarray:
        z = np.atleast_2d(z)
        return np.all(np.abs(z) <= self.radius, axis=1) & np.all(np.isfinite(z), axis=1)

    # charts (batched over rows)

    def bottom_to_tube(self, xm, xp):
        """Bottom-boundary points to tube coordinates; returns ``(z, ok)``."""
        xm = np.atleast_2d(xm)
        xp = np.atleast_2d(xp)
        a = np.linalg.norm(xm, axis=1)
        good = a > 0
        phi = xm / np.where(good, a, 1.0)[:, None]
        xi, ok = gnomonic_inverse(self.phi0, self.t_phi, phi)
        ok &= good & np.all(np.isfinite(xm), axis=1) & np.all(np.isfinite(xp), axis=1)
        v = (xp @ self.nu_psi) / self.eta_bar
        y = xp @ self.e_psi - v[:, None] * self.vy[None, :]
        x = xi - v[:, None] * self.vx[None, :]
        z = np.column_stack([x, y, v])
        z[~ok] = np.nan
        return z, ok

    def tube_to_bottom(self, z):
        x, y, v = self.split(z)
        xi = x + v[:, None] * self.vx[None, :]
        w = (y + v[:, None] * self.vy[None, :]) @ self.e_psi.T + (self.eta_bar * v)[:, None] * self.nu_psi[None, :]
        phi = gnomonic(self.phi0, self.t_phi, xi)
        rad = np.sqrt(self.cfg.delta_star + np.einsum("ij,ij->i", w, w))
        return phi * rad[:, None], w

    def top_to_tube(self, xm, xp):
        xm = np.atleast_2d(xm)
        xp = np.atleast_2d(xp)
        b = np.linalg.norm(xp, axis=1)
        good = b > 0
        psi = xp / np.where(good, b, 1.0)[:, None]
        yv, ok = gnomonic_inverse(self.psi0, self.t_psi, psi)
        ok &= good & np.all(np.isfinite(xm), axis=1) & np.all(np.isfinite(xp), axis=1)
        x = xm @ self.e_phi
        v = xm @ self.nu_phi
        z = np.column_stack([x, yv, v])
        z[~ok] = np.nan
        return z, ok

    def tube_to_top(self, z):
        x, y, v = self.split(z)
        u = x @ self.e_phi.T + v[:, None] * self.nu_phi[None, :]
        psi = gnomonic(self.psi0, self.t_psi, y)
        rad = np.sqrt(self.cfg.delta_star + np.einsum("ij,ij->i", u, u))
        return u, psi * rad[:, None]

    # core

    def core(self, s: float, z):
        z = np.atleast_2d(z)
        return z + s * (self.core_vector[None, :] + z @ self.core_matrix.T)

    def core_inverse(self, s: float, z):
        z = np.atleast_2d(z)
        m = np.eye(self.cfg.n - 1) + s * self.core_matrix
        return np.linalg.solve(m, (z - s * self.core_vector[None, :]).T).T

    def core_inverse_affine(self, s: float):
        """``(M, m0)`` with ``A_s^-1(z) = M z + m0``."""
        m = np.linalg.inv(np.eye(self.cfg.n - 1) + s * self.core_matrix)
        return m, -s * (m @ self.core_vector)

    # holonomy (batched)

    def holonomy_arrays(self, s: float, xm, xp):
        """Apply ``H_s`` to bottom points; out-of-domain rows come back NaN."""
        z, ok = self.bottom_to_tube(xm, xp)
        ok &= self.in_box(z)
        if not self.s_valid(s):
            ok[:] = False
        zz = self.core(s, np.where(ok[:, None], z, 0.0))
        om, op = self.tube_to_top(zz)
        om[~ok] = np.nan
        op[~ok] = np.nan
        return om, op

    def inverse_holonomy_arrays(self, s: float, xm, xp):
        """Apply ``H_s^-1`` to top points; out-of-domain rows come back NaN."""
        zz, ok = self.top_to_tube(xm, xp)
        if not self.s_valid(s):
            ok[:] = False
        z = self.core_inverse(s, np.where(ok[:, None], zz, 0.0))
        ok &= self.in_box(z)
        om, op = self.tube_to_bottom(z)
        om[~ok] = np.nan
        op[~ok] = np.nan
        return om, op

    # named points

    @property
    def a_minus(self) -> ModelPoint:
        om, op = self.tube_to_bottom(np.zeros((1, self.cfg.n - 1)))
        return ModelPoint(om[0], op[0])

    @property
    def a_plus(self) -> ModelPoint:
        om, op = self.tube_to_top(np.zeros((1, self.cfg.n - 1)))
        return ModelPoint(om[0], op[0])

    def with_radius(self, radius: float) -> "HolonomyFamily":
        return _replace(self, radius=radius)

    def to_json(self) -> dict:
        return {
            "model": self.cfg.to_json(),
            "phi0": self.phi0.tolist(),
            "psi0": self.psi0.tolist(),
            "nu_phi": self.nu_phi.tolist(),
            "nu_psi": self.nu_psi.tolist(),
            "eta": 1.0 / self.eta_bar,
            "radius": self.radius,
            "targets": dict(self.targets),
        }


def _replace(f: HolonomyFamily, **changes) -> HolonomyFamily:
    kw = {
        name: getattr(f, name)
        for name in (
            "cfg", "phi0", "psi0", "nu_phi", "e_phi", "nu_psi", "e_psi", "eta_bar",
            "vx", "vy", "core_matrix", "core_vector", "radius", "targets",
        )
    }
    kw.update(changes)
    return HolonomyFamily(**kw)


def make_family(
    cfg: MorseModelConfig,
    phi0,
    psi0,
    nu_phi,
    nu_psi,
    eta: float,
    *,
    vx=None,
    vy=None,
    core_matrix=None,
    core_vector=None,
    radius: float = DEFAULT_RADIUS,
    targets: Mapping | None = None,
) -> HolonomyFamily:
    """Family with prescribed frames.

    ``nu_phi`` and ``nu_psi`` are the co-oriented normals of the preferred
    hyperplanes; the hyperplane bases are completed automatically, with the
    phi-frame positively oriented. The core defaults to a unit translation in
    ``v``.
    """
    i, j = cfg.i, cfg.n - cfg.i
    phi0 = _unit(phi0, "phi0")
    psi0 = _unit(psi0, "psi0")
    nu_phi = _unit(nu_phi, "nu_phi")
    nu_psi = _unit(nu_psi, "nu_psi")
    if phi0.size != i or nu_phi.size != i:
        raise ValidationError(f"phi-side vectors must have dimension {i}")
    if psi0.size != j or nu_psi.size != j:
        raise ValidationError(f"psi-side vectors must have dimension {j}")
    if not (math.isfinite(eta) and eta > 0):
        raise ValidationError(f"holonomic factor must be positive, got {eta!r}")
    m = cfg.n - 1
    cv = np.zeros(m) if core_vector is None else np.asarray(core_vector, dtype=float)
    if core_vector is None:
        cv[-1] = 1.0
    return HolonomyFamily(
        cfg=cfg,
        phi0=phi0,
        psi0=psi0,
        nu_phi=nu_phi,
        e_phi=sphere_tangent_basis(nu_phi),
        nu_psi=nu_psi,
        e_psi=sphere_tangent_basis(nu_psi),
        eta_bar=1.0 / eta,
        vx=np.zeros(i - 1) if vx is None else vx,
        vy=np.zeros(j - 1) if vy is None else vy,
        core_matrix=np.zeros((m, m)) if core_matrix is None else core_matrix,
        core_vector=cv,
        radius=radius,
        targets=dict(targets or {}),
    )


def make_elementary_family(
    cfg: MorseModelConfig,
    omega_phi: float,
    omega_psi: float,
    eta: float,
    *,
    a_minus=None,
    a_plus=None,
    radius: float = DEFAULT_RADIUS,
    vx=None,
    vy=None,
) -> HolonomyFamily:
    """Elementary crossing family with target latitudes and holonomic factor.

    ``a_minus`` and ``a_plus`` give the directions of the orbit ends (any
    nonzero vectors; they are normalized). The core is the unit translation
    in ``v``, which makes the elementary conditions hold exactly.
    """
    if abs(omega_psi) < ZERO_THRESHOLD:
        raise UnsupportedConfigurationError("elementary families need a nonzero psi-latitude")
    for name, w in (("omega_phi", omega_phi), ("omega_psi", omega_psi)):
        if not (math.isfinite(w) and abs(w) <= 1.0):
            raise ValidationError(f"{name} must lie in [-1, 1], got {w!r}")
    if not (math.isfinite(eta) and eta > 0):
        raise ValidationError(f"holonomic factor must be positive, got {eta!r}")
    i, j = cfg.i, cfg.n - cfg.i
    phi0 = _unit(np.eye(i)[0] if a_minus is None else a_minus, "a_minus")
    psi0 = _unit(np.eye(j)[0] if a_plus is None else a_plus, "a_plus")
    nu_phi = tilted(phi0, omega_phi)
    nu_psi = tilted(psi0, omega_psi)
    targets = {"omega_phi": omega_phi, "omega_psi": omega_psi, "eta": eta}
    return make_family(cfg, phi0, psi0, nu_phi, nu_psi, eta, vx=vx, vy=vy, radius=radius, targets=targets)


def moved_family(base: HolonomyFamily, omega_phi: float) -> HolonomyFamily:
    """Same family with ``a-`` slid so that its phi-latitude becomes ``omega_phi``.

    The phi-frame, ``a+``, the psi-frame and the holonomic factor are kept.
    In the plane the slide is a rotation, so the side of ``a-`` relative to
    the hyperplane basis is preserved.
    """
    if not abs(omega_phi) < 1.0:
        raise UnsupportedConfigurationError("the slid latitude must stay in (-1, 1)")
    nu, e = base.nu_phi, base.e_phi
    if e.shape[1] == 0:
        raise UnsupportedConfigurationError("latitudes cannot be varied on a 0-sphere")
    side = e.T @ base.phi0
    ns = float(np.linalg.norm(side))
    direction = e @ (side / ns) if ns > 0 else e[:, 0]
    phi0 = omega_phi * nu + math.sqrt(1.0 - omega_phi**2) * direction
    targets = dict(base.targets)
    targets["omega_phi"] = omega_phi
    return _replace(base, phi0=phi0, targets=targets)


# point-level evaluation


def _point_arrays(p: ModelPoint):
    return p.xm[None, :], p.xp[None, :]


def evaluate_holonomy(f: HolonomyFamily, s: float, p: ModelPoint) -> ModelPoint | None:
    """``H_s(p)`` for a bottom-boundary point, or ``None`` when out of domain."""
    om, op = f.holonomy_arrays(s, *_point_arrays(p))
    if np.isnan(om[0]).any():
        return None
    return ModelPoint(om[0], op[0])


def inverse_holonomy(f: HolonomyFamily, s: float, p: ModelPoint) -> ModelPoint | None:
    """``H_s^-1(p)`` for a top-boundary point, or ``None`` when out of domain."""
    om, op = f.inverse_holonomy_arrays(s, *_point_arrays(p))
    if np.isnan(om[0]).any():
        return None
    return ModelPoint(om[0], op[0])


def tube_coordinates(f: HolonomyFamily, p: ModelPoint, side: str) -> np.ndarray | None:
    if side == "bottom":
        z, ok = f.bottom_to_tube(*_point_arrays(p))
    elif side == "top":
        z, ok = f.top_to_tube(*_point_arrays(p))
    else:
        raise ValidationError(f"side must be 'top' or 'bottom', got {side!r}")
    return z[0] if ok[0] else None


def from_tube(f: HolonomyFamily, z, side: str) -> ModelPoint:
    z = np.atleast_2d(np.asarray(z, dtype=float))
    om, op = f.tube_to_bottom(z) if side == "bottom" else f.tube_to_top(z)
    return ModelPoint(om[0], op[0])


# invariants


@dataclass(frozen=True)
class SelfSlideInvariants:
    a_minus: ModelPoint
    a_plus: ModelPoint
    delta_phi: LatitudeFrame
    delta_psi: LatitudeFrame
    delta_phi_basis: np.ndarray
    delta_psi_basis: np.ndarray
    omega_phi: float
    omega_psi: float
    eta: float
    eta_bar: float
    chi: float
    label: str
    marginal: bool
    vx: np.ndarray
    vy: np.ndarray

    def to_json(self) -> dict:
        return {
            "a_minus": {"xm": self.a_minus.xm.tolist(), "xp": self.a_minus.xp.tolist()},
            "a_plus": {"xm": self.a_plus.xm.tolist(), "xp": self.a_plus.xp.tolist()},
            "nu_phi": self.delta_phi.normal.tolist(),
            "nu_psi": self.delta_psi.normal.tolist(),
            "omega_phi": self.omega_phi,
            "omega_psi": self.omega_psi,
            "eta": self.eta,
            "chi": self.chi,
            "label": self.label,
            "marginal": self.marginal,
        }


def classify(omega_phi: float, omega_psi: float, chi: float, zero: float = ZERO_THRESHOLD) -> str:
    """Stratum label from the sign pattern of the latitudes and the character."""
    phi0 = abs(omega_phi) < zero
    psi0 = abs(omega_psi) < zero
    if phi0 and psi0:
        return "S_g^{0,0}"
    if psi0:
        return "phi-axis"
    if phi0:
        return "psi-axis"
    if abs(chi) < zero:
        return "S_g^{0,+}" if omega_phi > 0 else "S_g^{0,-}"
    return "S_g^+" if chi > 0 else "S_g^-"


def _is_marginal(*values: float) -> bool:
    return any(ZERO_THRESHOLD <= abs(v) < MARGINAL_BAND for v in values)


def _central(fun: Callable[[np.ndarray], np.ndarray], dim: int, h: float) -> np.ndarray:
    """Columns ``d fun / d e_k`` at the origin by central differences."""
    cols = []
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = h
        cols.append((fun(e) - fun(-e)) / (2.0 * h))
    return np.column_stack(cols) if cols else np.zeros((0, 0))


def _normal(tangents: np.ndarray, coorient: np.ndarray) -> np.ndarray:
    """Unit normal to the span of ``tangents`` with positive ``coorient`` component."""
    if tangents.shape[1] == 0:
        nv = coorient.copy()
    else:
        q, _ = np.linalg.qr(tangents, mode="complete")
        nv = q[:, -1].copy()
    d = float(nv @ coorient)
    if d == 0.0:
        raise InvalidFamilyError("co-orientation vector is tangent to the hyperplane")
    return nv * math.copysign(1.0, d) / np.linalg.norm(nv)


def compute_invariants(f: HolonomyFamily, h: float = 1e-5) -> SelfSlideInvariants:
    """Recover hyperplanes, latitudes, holonomic factor and character of ``H_0``.

    Everything is measured through the model maps by central differences; the
    family's stored frames are not read.
    """
    cfg = f.cfg
    a_minus = f.a_minus
    if np.linalg.norm(a_minus.xp) > 1e-12:
        raise InvalidFamilyError("chart origin on the bottom side is not on the attaching sphere")
    a_plus = evaluate_holonomy(f, 0.0, a_minus)
    if a_plus is None or np.linalg.norm(a_plus.xm) > 1e-10:
        raise InvalidFamilyError("H_0(a-) does not lie on the co-sphere")
    phi0 = a_minus.xm / np.linalg.norm(a_minus.xm)
    psi0 = a_plus.xp / np.linalg.norm(a_plus.xp)
    tphi = sphere_tangent_basis(phi0)
    tpsi = sphere_tangent_basis(psi0)
    rs = math.sqrt(cfg.delta_star)

    def push_sigma_minus(xi):
        phi = gnomonic(phi0, tphi, xi)[0]
        q = evaluate_holonomy(f, 0.0, ModelPoint(phi * rs, np.zeros(cfg.n - cfg.i)))
        if q is None:
            raise InvalidFamilyError("attaching sphere leaves the holonomy domain near a-")
        return q.xm

    def pull_sigma_plus(beta):
        psi = gnomonic(psi0, tpsi, beta)[0]
        q = inverse_holonomy(f, 0.0, ModelPoint(np.zeros(cfg.i), psi * rs))
        if q is None:
            raise InvalidFamilyError("co-sphere leaves the inverse holonomy domain near a+")
        return q.xp

    # chart v-directions on both sides
    def top_v(t):
        return from_tube(f, np.r_[np.zeros(cfg.n - 2), t[0]], "top").xm

    def bottom_v(t):
        return from_tube(f, np.r_[np.zeros(cfg.n - 2), t[0]], "bottom").xp

    dv_top = _central(top_v, 1, h)[:, 0]
    dv_bottom = _central(bottom_v, 1, h)[:, 0]

    t_phi = _central(push_sigma_minus, cfg.i - 1, h).reshape(cfg.i, cfg.i - 1)
    nu_phi = _normal(t_phi, dv_top)
    t_psi = _central(pull_sigma_plus, cfg.n - cfg.i - 1, h).reshape(cfg.n - cfg.i, cfg.n - cfg.i - 1)
    nu_psi = _normal(t_psi, dv_bottom)

    omega_phi = latitude(LatitudeFrame(nu_phi), phi0)
    omega_psi = latitude(LatitudeFrame(nu_psi), psi0)

    # linearized inverse holonomy applied to the radial vector towards nu_phi
    def pull_radial(t):
        q = inverse_holonomy(f, 0.0, top_point(t[0] * nu_phi, psi0, cfg))
        if q is None:
            raise InvalidFamilyError("inverse holonomy undefined along the nu_phi axis")
        xi, _ = gnomonic_inverse(phi0, tphi, q.xm / np.linalg.norm(q.xm))
        return np.concatenate([xi[0], q.xp])

    d = _central(pull_radial, 1, h)[:, 0]
    d_xi, d_w = d[: cfg.i - 1], d[cfg.i - 1 :]
    eta_bar = float(d_w @ nu_psi)
    if not eta_bar > 0:
        raise InvalidFamilyError(f"holonomic factor inverse is not positive ({eta_bar:.3e})")
    eta = 1.0 / eta_bar
    e_psi = sphere_tangent_basis(nu_psi)
    chi = eta * omega_psi + omega_phi
    label = classify(omega_phi, omega_psi, chi)
    return SelfSlideInvariants(
        a_minus=a_minus,
        a_plus=a_plus,
        delta_phi=LatitudeFrame(nu_phi),
        delta_psi=LatitudeFrame(nu_psi),
        delta_phi_basis=t_phi,
        delta_psi_basis=t_psi,
        omega_phi=omega_phi,
        omega_psi=omega_psi,
        eta=eta,
        eta_bar=eta_bar,
        chi=chi,
        label=label,
        marginal=_is_marginal(omega_phi, omega_psi, chi),
        vx=d_xi,
        vy=d_w @ e_psi,
    )


# elementary conditions


def _solve(fun, x0, what):
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.size == 0:
        return x0
    if np.linalg.norm(fun(x0)) <= 1e-13:
        return x0
    sol = optimize.root(fun, x0, method="hybr", tol=1e-14)
    if np.linalg.norm(fun(sol.x)) > 1e-10:
        raise InvalidFamilyError(f"could not solve for {what}")
    return sol.x


def d1_axis_point(f: HolonomyFamily, s: float) -> ModelPoint:
    """Point of ``H_s(attaching sphere)`` on the pole axis through ``a+``."""
    cfg = f.cfg
    rs = math.sqrt(cfg.delta_star)

    def image(xi):
        phi = gnomonic(f.phi0, f.t_phi, xi)[0]
        return evaluate_holonomy(f, s, ModelPoint(phi * rs, np.zeros(cfg.n - cfg.i)))

    def resid(xi):
        q = image(xi)
        if q is None:
            return np.full(cfg.i - 1, 1e3)
        return f.e_phi.T @ q.xm

    xi = _solve(resid, np.zeros(cfg.i - 1), "the pole-axis point of D1")
    q = image(xi)
    if q is None:
        raise InvalidFamilyError("pole-axis point of D1 is out of domain")
    return q


def b_point(f: HolonomyFamily, s: float) -> ModelPoint | None:
    """Point of ``H_s^-1(co-sphere)`` on the annulus ``psi = psi0`` near ``a-``."""
    cfg = f.cfg
    rs = math.sqrt(cfg.delta_star)
    tpsi = sphere_tangent_basis(f.psi0)

    def image(beta):
        psi = gnomonic(f.psi0, f.t_psi, beta)[0]
        return inverse_holonomy(f, s, ModelPoint(np.zeros(cfg.i), psi * rs))

    def resid(beta):
        q = image(beta)
        if q is None:
            return np.full(cfg.n - cfg.i - 1, 1e3)
        return tpsi.T @ q.xp

    beta = _solve(resid, np.zeros(cfg.n - cfg.i - 1), "the annulus point of D'1")
    return image(beta)


@dataclass(frozen=True)
class ElementaryReport:
    meridian_residual: float
    parallel_residual: float
    a_plus_velocity: float
    b_on_ray: bool
    b_velocity: float
    b_velocity_expected: float
    tolerance: float

    @property
    def ok(self) -> bool:
        tol = self.tolerance
        return (
            self.meridian_residual < tol
            and self.parallel_residual < tol
            and abs(self.a_plus_velocity - 1.0) < tol
            and self.b_on_ray
            and abs(self.b_velocity - self.b_velocity_expected) < tol
        )


def verify_elementary(f: HolonomyFamily, h: float = 1e-4, tol: float = 1e-5) -> ElementaryReport:
    """Check the four elementary conditions by finite differences.

    1. ``D1(s)`` stays in the meridian ``psi = psi0`` and moves parallel to the
       phi-hyperplane; 2. its pole-axis point moves with unit speed;
    3. ``b(s)`` runs on the ray through ``(phi0, psi0)`` on the side opposite
       to the sign of the psi-latitude; 4. ``b`` has radial speed
       ``-1 / (eta omega_psi)``.
    """
    cfg = f.cfg
    inv = compute_invariants(f)
    rs = math.sqrt(cfg.delta_star)
    nu = inv.delta_phi.normal
    psi0 = f.psi0
    merid = 0.0
    par = 0.0
    xis = np.linspace(-0.5, 0.5, 5)[:, None] * f.radius if cfg.i > 1 else np.zeros((1, 0))
    for s in (-h, h):
        heights = []
        for xi in xis:
            phi = gnomonic(f.phi0, f.t_phi, xi)[0]
            q = evaluate_holonomy(f, s, ModelPoint(phi * rs, np.zeros(cfg.n - cfg.i)))
            if q is None:
                continue
            merid = max(merid, float(np.linalg.norm(q.xp / np.linalg.norm(q.xp) - psi0)))
            heights.append(float(q.xm @ nu))
        if heights:
            par = max(par, max(heights) - min(heights))
    ap = [float(d1_axis_point(f, s).xm @ nu) for s in (-h, h)]
    a_vel = (ap[1] - ap[0]) / (2 * h)
    sgn = -math.copysign(1.0, inv.omega_psi)
    rays = []
    for s in (sgn * h, 2 * sgn * h):
        b = b_point(f, s)
        if b is None:
            rays.append(None)
            continue
        phi = b.xm / np.linalg.norm(b.xm)
        rays.append((float(np.linalg.norm(phi - f.phi0)), float(b.xp @ psi0)))
    on_ray = all(r is not None and r[0] < tol and r[1] > 0 for r in rays)
    b_vel = (rays[1][1] - rays[0][1]) / (sgn * h) if on_ray else float("nan")
    return ElementaryReport(
        meridian_residual=merid,
        parallel_residual=par / h,
        a_plus_velocity=a_vel,
        b_on_ray=on_ray,
        b_velocity=b_vel,
        b_velocity_expected=-1.0 / (inv.eta * inv.omega_psi),
        tolerance=tol,
    )


# velocity balance


def _richardson_central(fun: Callable[[float], float], h0: float, levels: int = 3) -> float:
    """Central difference at 0 refined by Richardson extrapolation."""
    table = []
    h = h0
    for _ in range(levels):
        table.append((fun(h) - fun(-h)) / (2 * h))
        h /= 2
    for order in range(1, levels):
        fac = 4.0**order
        table = [(fac * table[j + 1] - table[j]) / (fac - 1) for j in range(len(table) - 1)]
    return table[0]


@dataclass(frozen=True)
class VelocityBalance:
    forward: float
    backward: float

    @property
    def total(self) -> float:
        return self.forward + self.backward


def velocity_balance(f: HolonomyFamily, h0: float | None = None) -> VelocityBalance:
    """Speeds of ``v o H_s(x_s,0,0)`` and ``v o H_s^-1(0,y_s,0)`` at ``s = 0``.

    ``x_s`` is chosen so that the forward image has ``x = 0``, ``y_s`` so that
    the backward image has ``y = 0``. Both are computed through the model
    maps, not the core.
    """
    cfg = f.cfg
    dx, dy, m = f.dx, f.dy, cfg.n - 1
    h0 = 1e-4 * f.radius if h0 is None else h0

    def fwd_z(s, x):
        p = from_tube(f, np.r_[x, np.zeros(dy + 1)], "bottom")
        q = evaluate_holonomy(f, s, p)
        if q is None:
            raise InvalidFamilyError("forward holonomy left its domain")
        return tube_coordinates(f, q, "top")

    def bwd_z(s, y):
        p = from_tube(f, np.r_[np.zeros(dx), y, 0.0], "top")
        q = inverse_holonomy(f, s, p)
        if q is None:
            raise InvalidFamilyError("inverse holonomy left its domain")
        return tube_coordinates(f, q, "bottom")

    def forward(s):
        x = _solve(lambda x: fwd_z(s, x)[:dx], np.zeros(dx), "x_s")
        return float(fwd_z(s, x)[-1])

    def backward(s):
        y = _solve(lambda y: bwd_z(s, y)[dx : dx + dy], np.zeros(dy), "y_s")
        return float(bwd_z(s, y)[-1])

    assert m == dx + dy + 1
    return VelocityBalance(_richardson_central(forward, h0), _richardson_central(backward, h0))
