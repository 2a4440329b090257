"""Passage discs, homoclinic detection and signed incidence counting.

The attaching sphere near ``a-`` is parametrized by the tube coordinate
``tau = x`` (a single real for ``i = 2``; for ``i = 1`` it is one point).
Stage ``k`` sends ``tau`` to ``C_k`` by ``k`` rounds of "holonomy, then
descent"; a round is only defined while the previous stage sits in the tube
box. Curves are sampled adaptively so that consecutive images stay close, and
every root is polished by bisection on ``tau``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NonGenericError, UnsupportedConfigurationError, ValidationError
from .groupoid import Arrow, compose, power
from .holonomy import (
    ZERO_THRESHOLD,
    HolonomyFamily,
    compute_invariants,
    moved_family,
)
from .morse_model import ModelPoint, descend_arrays
from .novikov import RingElement, TruncationContext

#: Homoclinic gaps at most this large count as zero.
GAP_TOL = 1e-9
#: Tangency threshold for counted crossings (sine of the crossing angle).
TANGENCY_TOL = 1e-6
#: Adaptive sampling stops splitting below this fraction of the sampled span.
REFINE_RTOL = 1e-12
_EPS16 = 16 * np.finfo(float).eps


def _check_dims(f: HolonomyFamily) -> None:
    if f.cfg.i > 2:
        raise UnsupportedConfigurationError("passage discs are implemented for index 1 and 2 only")


class _Stages:
    """Stage maps ``tau -> C_k(tau)`` for one family member."""

    def __init__(self, f: HolonomyFamily, s: float):
        _check_dims(f)
        self.f = f
        self.s = s
        self.m = f.cfg.n - 1
        self.affine = f.core_inverse_affine(s)

    def tube_point(self, taus):
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        z = np.zeros((taus.size, self.m))
        if self.f.dx == 1:
            z[:, 0] = taus
        return z

    def __call__(self, k: int, taus):
        """Bottom-boundary points of stage ``k``; NaN rows where undefined."""
        f = self.f
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        z = self.tube_point(taus)
        xm, xp = f.tube_to_bottom(z)
        bad = np.abs(taus) > f.radius
        xm[bad] = np.nan
        xp[bad] = np.nan
        for _ in range(k):
            hm, hp = f.holonomy_arrays(self.s, xm, xp)
            xm, xp = descend_arrays(hm, hp, f.cfg)
        return xm, xp

    def stacked(self, k: int, taus):
        xm, xp = self(k, taus)
        return np.hstack([xm, xp])


def _adaptive(fun, taus0, max_step: float, max_points: int = 40000):
    """Refine a sampled curve until consecutive valid images are within ``max_step``.

    Segments between a valid and an invalid sample are bisected down to
    ``REFINE_RTOL`` times the initial span, which pins domain boundaries.
    """
    taus = np.unique(np.asarray(taus0, dtype=float))
    pts = fun(taus)
    floor = REFINE_RTOL * (taus[-1] - taus[0]) if taus.size > 1 else 0.0
    for _ in range(400):
        valid = np.isfinite(pts).all(axis=1)
        dt = np.diff(taus)
        scale = np.maximum(np.abs(taus[:-1]), np.abs(taus[1:]))
        splittable = (dt > floor) & (dt > _EPS16 * np.maximum(scale, 1e-300))
        both = valid[:-1] & valid[1:]
        with np.errstate(invalid="ignore"):
            dist = np.sqrt(np.sum((pts[1:] - pts[:-1]) ** 2, axis=1))
        mixed = valid[:-1] != valid[1:]
        with np.errstate(invalid="ignore"):
            far = both & (dist > max_step) & (dt > 1e3 * floor)
        refine = splittable & (far | mixed)
        if not refine.any() or taus.size > max_points:
            break
        mids = 0.5 * (taus[:-1][refine] + taus[1:][refine])
        new = fun(mids)
        taus = np.concatenate([taus, mids])
        pts = np.vstack([pts, new])
        order = np.argsort(taus, kind="stable")
        taus, pts = taus[order], pts[order]
    return taus, pts


def _pieces(taus, pts, max_step):
    """Index ranges ``[a, b)`` of maximal runs of valid, close samples."""
    valid = np.isfinite(pts).all(axis=1)
    if not valid.any():
        return []
    gaps = np.linalg.norm(np.diff(pts, axis=0), axis=1) > max_step
    breaks = ~valid[:-1] | ~valid[1:] | gaps
    cuts = np.flatnonzero(breaks) + 1
    out = []
    for a, b in zip(np.r_[0, cuts], np.r_[cuts, taus.size]):
        if valid[a]:
            out.append((int(a), int(b)))
    return out


@dataclass(frozen=True, eq=False)
class DiscCloud:
    """Sampled passage disc ``C_k`` on the bottom boundary.

    ``orientation`` compares the parametrization with the reference
    orientation of the attaching sphere (``+1`` preserving, ``-1`` reversing,
    ``0`` for an empty cloud).
    """

    k: int
    s: float
    taus: np.ndarray
    xm: np.ndarray
    xp: np.ndarray
    pieces: tuple
    orientation: int
    piece_orientations: tuple = field(default=())
    side: str = "bottom"

    @property
    def empty(self) -> bool:
        return self.taus.size == 0

    def __len__(self):
        return int(self.taus.size)

    def points(self) -> list[ModelPoint]:
        return [ModelPoint(a, b) for a, b in zip(self.xm, self.xp)]


def _angles(f: HolonomyFamily, xm):
    """Angle of ``xm`` in the oriented plane spanned by ``(phi0, t_phi)``."""
    return np.arctan2(xm @ f.t_phi[:, 0], xm @ f.phi0)


def _wrap(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


def _orientation(f: HolonomyFamily, xm_piece) -> int:
    if f.dx == 0:
        return int(np.sign(xm_piece[0] @ f.phi0))
    if xm_piece.shape[0] < 2:
        return 0
    d = _wrap(np.diff(_angles(f, xm_piece)))
    total = float(np.sum(d))
    return int(np.sign(total))


def _make_cloud(f, s, k, taus, pts, max_step) -> DiscCloud:
    i = f.cfg.i
    pcs = _pieces(taus, pts, max_step)
    keep = np.zeros(taus.size, dtype=bool)
    for a, b in pcs:
        keep[a:b] = True
    idx = np.flatnonzero(keep)
    remap = {old: new for new, old in enumerate(idx)}
    new_pieces = tuple((remap[a], remap[b - 1] + 1) for a, b in pcs)
    xm = pts[keep, :i]
    xp = pts[keep, i:]
    orients = tuple(_orientation(f, xm[a:b]) for a, b in new_pieces)
    nonzero = [o for o in orients if o]
    overall = 0
    if nonzero:
        overall = nonzero[0] if all(o == nonzero[0] for o in nonzero) else int(np.sign(sum(nonzero)))
    return DiscCloud(k, s, taus[keep], xm, xp, new_pieces, overall, orients)


def default_max_step(f: HolonomyFamily) -> float:
    return f.radius / 10.0


def passage_discs(
    f: HolonomyFamily,
    s: float,
    k_max: int,
    *,
    n_initial: int = 129,
    max_step: float | None = None,
) -> list[DiscCloud]:
    """Clouds ``C_1 .. C_k_max``; the list stops after the first empty stage."""
    if k_max < 1:
        raise ValidationError("k_max must be at least 1")
    if s == 0.0:
        raise ValidationError("passage discs are undefined at s = 0")
    stages = _Stages(f, s)
    step = default_max_step(f) if max_step is None else max_step
    out = []
    if f.dx == 0:
        for k in range(0, k_max + 1):
            pts = stages.stacked(k, [0.0])
            cloud = _make_cloud(f, s, k, np.array([0.0]), pts, step)
            out.append(cloud)
            if cloud.empty:
                break
        return out[1:]
    r = f.radius
    taus0 = np.linspace(-r, r, n_initial)
    taus, pts = _adaptive(lambda t: stages.stacked(0, t), taus0, step)
    clouds = [_make_cloud(f, s, 0, taus, pts, step)]
    for k in range(1, k_max + 1):
        prev = clouds[-1]
        if prev.empty:
            break
        zprev, _ = f.bottom_to_tube(prev.xm, prev.xp)
        inside = f.in_box(zprev)
        seeds = []
        for a, b in prev.pieces:
            if not inside[a:b].any():
                continue
            t = prev.taus[a:b]
            seeds.append(t)
            if t.size > 1:
                seeds.append(np.linspace(t[0], t[-1], 33))
        if not seeds:
            clouds.append(_make_cloud(f, s, k, np.zeros(0), np.zeros((0, f.cfg.n)), step))
            break
        taus, pts = _adaptive(lambda t, k=k: stages.stacked(k, t), np.concatenate(seeds), step)
        clouds.append(_make_cloud(f, s, k, taus, pts, step))
    return clouds[1:]


# gap matching against the preimage of the co-sphere


@dataclass(frozen=True)
class GapMatch:
    """Point of ``C_k`` whose tube ``(x, y)`` matches a point of ``D'_1``."""

    k: int
    tau: float
    gap: float
    crossing: int
    z: np.ndarray


def _dprime_residual(f: HolonomyFamily, s: float, z, affine=None):
    """``(x - x_D, v - v_D)`` where ``D'_1`` is matched on ``y``."""
    dx, dy = f.dx, f.dy
    mat, m0 = f.core_inverse_affine(s) if affine is None else affine
    z = np.atleast_2d(z)
    x, y, v = z[:, :dx], z[:, dx : dx + dy], z[:, -1]
    if dy:
        yy = np.linalg.solve(mat[dx : dx + dy, dx : dx + dy], (y - m0[dx : dx + dy]).T).T
        xd = yy @ mat[:dx, dx : dx + dy].T + m0[:dx]
        vd = yy @ mat[-1, dx : dx + dy] + m0[-1]
    else:
        xd = np.broadcast_to(m0[:dx], x.shape)
        vd = np.full(v.shape, m0[-1])
    return x - xd, v - vd


def _eval_match(f, stages, k, tau):
    xm, xp = stages(k, [tau])
    z, ok = f.bottom_to_tube(xm, xp)
    if not (ok[0] and f.in_box(z)[0]):
        return None
    fx, gv = _dprime_residual(f, stages.s, z, stages.affine)
    return (fx[0, 0] if f.dx else 0.0), gv[0], z[0]


def _root(fun, a, fa, b, fb, rtol: float = 1e-13):
    """Root of ``fun`` on a sign-changing bracket (Illinois false position).

    Stops once ``|fun|`` drops below ``rtol`` times the larger end value or the
    bracket reaches floating-point resolution. Points where ``fun`` is not
    evaluable fall back to bisection steps.
    """
    ftol = rtol * max(abs(fa), abs(fb))
    side = 0
    c, fc = (a, fa) if abs(fa) <= abs(fb) else (b, fb)
    for _ in range(200):
        if abs(fc) <= ftol:
            return c
        c = (a * fb - b * fa) / (fb - fa)
        lo, hi = min(a, b), max(a, b)
        if not lo < c < hi:
            c = 0.5 * (a + b)
            if not lo < c < hi:
                break
        fc = fun(c)
        if fc is None:
            c = 0.5 * (a + b)
            fc = fun(c)
            if fc is None:
                break
        if fc == 0.0:
            return c
        if (fc > 0) == (fb > 0):
            b, fb = c, fc
            if side == -1:
                fa *= 0.5
            side = -1
        else:
            a, fa = c, fc
            if side == 1:
                fb *= 0.5
            side = 1
    return a if abs(fa) <= abs(fb) else b


def gap_matches(f: HolonomyFamily, s: float, k: int, clouds: list[DiscCloud] | None = None) -> list[GapMatch]:
    """All points where ``C_k`` (``C_0`` is the attaching sphere) meets ``D'_1`` in ``(x, y)``.

    A zero gap at such a point is a homoclinic orbit of class ``g^(k+1)``.
    """
    stages = _Stages(f, s)
    if k == 0:
        if f.dx == 0:
            cl = _make_cloud(f, s, 0, np.array([0.0]), stages.stacked(0, [0.0]), default_max_step(f))
        else:
            r = f.radius
            t = np.linspace(-r, r, 129)
            cl = _make_cloud(f, s, 0, t, stages.stacked(0, t), default_max_step(f))
    else:
        if s == 0.0:
            return []
        if clouds is None or len(clouds) < k:
            clouds = passage_discs(f, s, k)
        if len(clouds) < k:
            return []
        cl = clouds[k - 1]
    if cl.empty:
        return []
    z, ok = f.bottom_to_tube(cl.xm, cl.xp)
    inside = ok & f.in_box(z)
    fx, gv = _dprime_residual(f, s, z)
    out = []
    if f.dx == 0:
        if inside[0]:
            out.append(GapMatch(k, 0.0, float(gv[0]), 1, z[0]))
        return out
    fx = fx[:, 0]

    def fval(t):
        r = _eval_match(f, stages, k, t)
        return None if r is None else r[0]

    for a, b in cl.pieces:
        for j in range(a, b):
            if not inside[j]:
                continue
            if fx[j] == 0.0:
                roots = [(cl.taus[j], j)]
            elif j + 1 < b and inside[j + 1] and (fx[j] > 0) != (fx[j + 1] > 0) and fx[j + 1] != 0.0:
                t = _root(fval, cl.taus[j], fx[j], cl.taus[j + 1], fx[j + 1])
                roots = [(t, j)]
            else:
                continue
            for t, jj in roots:
                r = _eval_match(f, stages, k, t)
                if r is None:
                    continue
                lo, hi = max(a, jj - 1), min(b - 1, jj + 1)
                slope = fx[hi] - fx[lo]
                out.append(GapMatch(k, float(t), float(r[1]), int(np.sign(slope)) or 1, r[2]))
    return out


@dataclass(frozen=True)
class HomoclinicRecord:
    k: int
    s: float
    tau: float
    label: str
    gap: float
    sign: int


def _class_label(k: int) -> str:
    return "g" if k == 0 else f"g^{k + 1}"


def detect_homoclinic(
    f: HolonomyFamily, s: float, k: int, tol: float = GAP_TOL, clouds: list[DiscCloud] | None = None
) -> list[HomoclinicRecord]:
    """Homoclinic orbits of class ``g^(k+1)`` at parameter ``s``.

    ``sign`` is the direction in which ``C_k`` crosses ``D'_1`` along ``x``.
    """
    return [
        HomoclinicRecord(m.k, s, m.tau, _class_label(k), m.gap, m.crossing)
        for m in gap_matches(f, s, k, clouds)
        if abs(m.gap) <= tol
    ]


# first-passage gap and its speed


def v1(f: HolonomyFamily, s: float) -> float | None:
    """Signed gap between ``C_1(s)`` and ``D'_1(s)`` near ``a-``; ``None`` if undefined."""
    ms = gap_matches(f, s, 1)
    if not ms:
        return None
    return min(ms, key=lambda m: float(np.linalg.norm(m.z))).gap


def v1_dot(f: HolonomyFamily, h0: float | None = None, levels: int = 3) -> float:
    """Speed of the first-passage gap at ``s = 0``.

    ``C_1(s)`` only reaches the tube from one side of ``s = 0``, so the
    estimate uses one-sided quotients ``v1(h)/h`` (the gap vanishes in the
    limit) refined by Richardson extrapolation.
    """
    inv = compute_invariants(f)
    if abs(inv.omega_phi) < ZERO_THRESHOLD:
        raise UnsupportedConfigurationError("the phi-latitude vanishes; the first passage never reaches the tube")
    side = math.copysign(1.0, inv.omega_phi)
    h = 1e-4 * f.radius if h0 is None else h0
    table = []
    for _ in range(levels):
        val = v1(f, side * h)
        if val is None:
            raise UnsupportedConfigurationError("first passage does not reach the tube")
        table.append(val / (side * h))
        h /= 2
    for order in range(1, levels):
        fac = 2.0**order
        table = [(fac * table[j + 1] - table[j]) / (fac - 1) for j in range(len(table) - 1)]
    return table[0]


# signed incidence counting


@dataclass(frozen=True)
class Crossing:
    k: int
    tau: float
    sign: int
    radius: float


@dataclass(frozen=True)
class IncidenceCount:
    element: RingElement
    crossings: tuple[Crossing, ...]
    s: float
    hemisphere: int


def _meridian_crossings(f, stages, cloud, theta_b, rho):
    out = []
    if cloud.empty or f.dx == 0:
        return out
    th = _angles(f, cloud.xm)
    d = _wrap(th - theta_b)

    def dval(t):
        xm, _ = stages(cloud.k, [t])
        if not np.isfinite(xm).all():
            return None
        return float(_wrap(_angles(f, xm)[0] - theta_b))

    for a, b in cloud.pieces:
        for j in range(a, b - 1):
            if abs(d[j]) > np.pi / 2 or abs(d[j + 1]) > np.pi / 2:
                continue
            if d[j] == 0.0:
                t = cloud.taus[j]
            elif (d[j] > 0) != (d[j + 1] > 0) and d[j + 1] != 0.0:
                t = _root(dval, cloud.taus[j], d[j], cloud.taus[j + 1], d[j + 1])
            else:
                continue
            xm, xp = stages(cloud.k, [t])
            w = float(np.linalg.norm(xp[0]))
            if w > rho:
                continue
            ht = max(abs(cloud.taus[j + 1] - cloud.taus[j]), 1e-300) * 1e-3
            pa = stages.stacked(cloud.k, [t - ht, t + ht])
            if not np.isfinite(pa).all():
                pa = stages.stacked(cloud.k, [cloud.taus[j], cloud.taus[j + 1]])
            dth = float(_wrap(_angles(f, pa[1:, : f.cfg.i])[0] - _angles(f, pa[:1, : f.cfg.i])[0]))
            dp = float(np.linalg.norm(pa[1] - pa[0]))
            r = float(np.linalg.norm(xm[0]))
            if dp == 0.0 or abs(dth) * r / dp < TANGENCY_TOL:
                raise NonGenericError(f"C_{cloud.k} is tangent to the stable disc at tau={t:.6g}")
            out.append(Crossing(cloud.k, float(t), int(np.sign(dth)), w))
    return out


def far_point(f: HolonomyFamily, latitude: float) -> np.ndarray:
    """Direction of the attaching sphere with the given phi-latitude, on the side away from ``a-``.

    Only for index 2, where the attaching sphere is a circle.
    """
    if f.cfg.i != 2:
        raise UnsupportedConfigurationError("test points are only defined for index 2")
    if not -1.0 < latitude < 1.0:
        raise ValidationError("latitude must lie in (-1, 1)")
    e = f.e_phi[:, 0]
    side = -1.0 if e @ f.phi0 > 0 else 1.0
    return latitude * f.nu_phi + side * math.sqrt(1.0 - latitude * latitude) * e


def count_incidence(
    f: HolonomyFamily,
    s: float,
    b,
    g: Arrow,
    gamma: Arrow,
    context: TruncationContext,
    *,
    k_max: int | None = None,
    disc_radius: float | None = None,
    gamma_sign: int = 1,
    clouds: list[DiscCloud] | None = None,
) -> IncidenceCount:
    """Signed count of orbits from ``p`` through the stable disc at ``b``.

    ``b`` is a direction in ``R^i`` naming a point of the attaching sphere
    away from the tube; the stable disc is the meridian ``phi = b`` of radius
    ``disc_radius``. The connecting orbit through ``b`` itself has class
    ``gamma`` and sign ``gamma_sign``; each crossing of ``C_k`` adds
    ``sign * g^k . gamma``. Powers whose valuation is cut off by the context
    are not computed when ``k_max`` is omitted.
    """
    if f.cfg.i != 2:
        raise UnsupportedConfigurationError("incidence counting needs index 2")
    if g.source != g.target or g.target != gamma.source:
        raise ValidationError("g must be a loop at the source of gamma")
    b = np.asarray(b, dtype=float)
    b = b / np.linalg.norm(b)
    inv = compute_invariants(f)
    hemi = float(b @ inv.delta_phi.normal)
    if abs(hemi) < ZERO_THRESHOLD:
        raise NonGenericError("test point lies on the phi-equator")
    if b @ f.phi0 > 0:
        tb = abs(float(b @ f.t_phi[:, 0]) / float(b @ f.phi0))
        if tb <= f.radius:
            raise ValidationError("test point lies inside the tube; move it away from a-")
    rho = 0.5 * math.sqrt(f.cfg.delta) if disc_radius is None else disc_radius
    if k_max is None:
        k_max = 0
        while k_max < 64:
            nxt = compose(power(g, k_max + 1), gamma)
            if not nxt.u_value() > -context.L:
                break
            k_max += 1
    theta_b = float(_angles(f, b[None, :])[0])
    stages = _Stages(f, s)
    total = RingElement.from_arrow(gamma, context, gamma_sign)
    crossings = []
    if k_max >= 1:
        if clouds is None:
            clouds = passage_discs(f, s, k_max)
        for cloud in clouds[:k_max]:
            for c in _meridian_crossings(f, stages, cloud, theta_b, rho):
                crossings.append(c)
                arrow = compose(power(g, c.k), gamma)
                total = total + RingElement.from_arrow(arrow, context, c.sign * gamma_sign)
    return IncidenceCount(total, tuple(crossings), s, int(np.sign(hemi)))


# doubling sweep


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("NOVLAB_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Gaps on an ``(s, t)`` grid and the cells where each class is detected.

    ``gaps[k]`` has shape ``(len(t), len(s))``; class ``g^(k+1)``.
    ``cells[k][a, b]`` refers to ``t in [t_a, t_(a+1)]``, ``s in [s_b, s_(b+1)]``.
    """

    s_values: np.ndarray
    t_values: np.ndarray
    gaps: tuple
    cells: tuple
    base_label: str
    tol: float
    t_slope_sign: int

    def locus(self, k: int) -> list[tuple[int, int]]:
        return [tuple(map(int, ij)) for ij in np.argwhere(self.cells[k])]

    def class_labels(self, a: int, b: int) -> list[str]:
        return [_class_label(k) for k in range(len(self.cells)) if self.cells[k][a, b]]

    def half_line(self, k: int = 1) -> str | None:
        """``"s<0"``, ``"s>0"`` or ``None`` describing where class ``g^(k+1)`` sits."""
        cells = self.locus(k)
        if not cells:
            return None
        s, t = self.s_values, self.t_values
        touches_t0 = all(t[a] <= 0.0 <= t[a + 1] for a, _ in cells)
        if not touches_t0:
            return "mixed"
        if all(s[b] < 0.0 for _, b in cells) and all(s[b + 1] <= 0.0 for _, b in cells):
            return "s<0"
        if all(s[b + 1] > 0.0 for _, b in cells) and all(s[b] >= 0.0 for _, b in cells):
            return "s>0"
        return "mixed"


def _cell_detect(corners, tol):
    vals = [v for v in corners if np.isfinite(v)]
    if any(abs(v) <= tol for v in vals):
        return True
    return any(v > 0 for v in vals) and any(v < 0 for v in vals)


def sweep_doubling(
    base: HolonomyFamily,
    s_values,
    t_values,
    *,
    k_max: int = 2,
    tol: float = GAP_TOL,
    threads: int | None = None,
) -> SweepResult:
    """Detect homoclinic classes ``g .. g^(k_max+1)`` on a grid around a doubling point.

    ``base`` is normally on ``S_g^0`` away from ``S_g^{0,0}``; the second
    parameter ``t`` raises the phi-latitude of ``a-`` by ``t`` while the other
    data stay fixed, which makes ``t`` cross ``S_g^0`` towards ``S_g^+``.
    """
    inv = compute_invariants(base)
    if inv.label in ("S_g^{0,0}", "phi-axis", "psi-axis"):
        raise ValidationError(f"sweep base must have nonzero latitudes, got {inv.label}")
    s_values = np.asarray(s_values, dtype=float)
    t_values = np.asarray(t_values, dtype=float)
    ns, nt = s_values.size, t_values.size
    gaps = np.full((k_max + 1, nt, ns), np.nan)

    def row(a):
        fam = moved_family(base, inv.omega_phi + t_values[a])
        out = np.full((k_max + 1, ns), np.nan)
        for b, s in enumerate(s_values):
            clouds = passage_discs(fam, s, k_max) if s != 0.0 else None
            for k in range(k_max + 1):
                if k and s == 0.0:
                    continue
                ms = gap_matches(fam, s, k, clouds)
                if ms:
                    out[k, b] = min((m.gap for m in ms), key=abs)
        return a, out

    workers = _threads() if threads is None else threads
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(row, range(nt)))
    else:
        results = [row(a) for a in range(nt)]
    for a, out in results:
        gaps[:, a, :] = out
    cells = []
    for k in range(k_max + 1):
        c = np.zeros((nt - 1, ns - 1), dtype=bool)
        for a in range(nt - 1):
            for b in range(ns - 1):
                corners = gaps[k, a : a + 2, b : b + 2].ravel()
                c[a, b] = _cell_detect(corners, tol)
        cells.append(c)
    slope = 0
    if k_max >= 1:
        side = s_values < 0 if inv.omega_phi < 0 else s_values > 0
        lo = np.flatnonzero(t_values < 0)
        hi = np.flatnonzero(t_values > 0)
        if lo.size and hi.size:
            diffs = gaps[1, hi[0], side] - gaps[1, lo[-1], side]
            diffs = diffs[np.isfinite(diffs)]
            if diffs.size:
                slope = int(np.sign(np.median(diffs)))
    return SweepResult(s_values, t_values, tuple(gaps), tuple(cells), inv.label, tol, slope)
