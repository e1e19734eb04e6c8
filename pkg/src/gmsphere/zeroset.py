"""Zero-curvature plane templates, the Z1-Z4 point classifiers, and
constructive witnesses.

A point g = (a b; c d) of Sp(2) projects into the zero-curvature set of the
quotient exactly when one of four conditions holds:

    Z1: a, b != 0 and det(I - Ad(a^-1) - Ad(b^-1)) = 0
    Z2: |a| = |b|, w := Im(a^-1 b) satisfies <w - 2 a^-1 w a, w> = 0,
        and |Im a| >= |a|/2
    Z3: b = c = 0 and |Im a| >= 1/2
    Z4: a = d = 0 and |Im b| >= 1/2

For every flagged point an explicit horizontal zero-curvature plane is
constructed from one of three template families and re-verified
numerically; a flagged point whose construction fails raises, it is never
ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .quat import (ImQuaternion, Quaternion, ad_rotation, apply_ad, mul,
                   rotation_angle, solve_rotation_mapping, _unit_orthogonal)
from .sp2 import (AlgebraElement, GroupElement, QMatrix2, alg_diag, alg_p,
                  alg_q, haar_sample, random_quaternion, _as_generator)
from .cheeger import (MetricParams, algebra_to_coords, coords_to_algebra,
                      kappa_G, untilde)
from .submersion import horizontality_residual_tilded

CLASSIFY_TOL = 1e-9
WITNESS_HORIZ_TOL = 1e-8
WITNESS_KAPPA_TOL = 1e-9
KERNEL_SV_TOL = 1e-10


class ZeroPlaneConstructionError(RuntimeError):
    """A classifier flag was set but the witness construction failed."""


# templates ------------------------------------------------------------------

@dataclass(frozen=True)
class PlaneTemplate:
    """One of the three tilded zero-plane families.

    type1:  X~ = diag(0, y),        Y~ = diag(y, 0)
    type2a: X~ = offdiag(x),        Y~ = diag(y, x y x^-1)
    type2b: X~ = ((y, x), (x, y)),  Y~ = diag(y, -y), with imaginary x perp y
    """

    kind: str
    x: Optional[Quaternion]
    y: ImQuaternion

    def tilded_pair(self) -> tuple[AlgebraElement, AlgebraElement]:
        if self.kind == "type1":
            return (alg_diag(ImQuaternion(), self.y),
                    alg_diag(self.y, ImQuaternion()))
        if self.kind == "type2a":
            y2 = apply_ad(self.x, self.y)
            return alg_p(self.x), alg_diag(self.y, y2)
        if self.kind == "type2b":
            Xt = AlgebraElement(self.x, self.y, self.y)
            return Xt, alg_q(self.y)
        raise ValueError(f"unknown template kind {self.kind!r}")

    def plane(self, m: MetricParams) -> tuple[AlgebraElement, AlgebraElement]:
        """The actual (untilded) spanning pair for the metric m."""
        Xt, Yt = self.tilded_pair()
        return untilde(Xt, m.t_tilde), untilde(Yt, m.t_tilde)


def build_template(kind: str, x: Optional[Quaternion],
                   y: ImQuaternion, tol: float = 1e-10) -> PlaneTemplate:
    """Validated template constructor; raises ValueError on precondition
    violations (zero entries, or type2b with x not orthogonal to y)."""
    if y.norm() == 0.0:
        raise ValueError("template requires y != 0")
    if kind == "type1":
        return PlaneTemplate("type1", None, y)
    if x is None or x.norm() == 0.0:
        raise ValueError(f"{kind} requires x != 0")
    if kind == "type2a":
        return PlaneTemplate("type2a", x, y)
    if kind == "type2b":
        if abs(x.w) > tol * x.norm():
            raise ValueError("type2b requires imaginary x")
        xi = x.im
        if abs(xi.dot(y)) > tol * xi.norm() * y.norm():
            raise ValueError("type2b requires x perpendicular to y")
        flipped = apply_ad(x, y) + y
        if flipped.norm() > 1e-10 * max(1.0, y.norm()):
            raise ValueError("type2b requires x y x^-1 = -y")
        return PlaneTemplate("type2b", Quaternion(0.0, xi.x, xi.y, xi.z), y)
    raise ValueError(f"unknown template kind {kind!r}")


# point conditions -----------------------------------------------------------

def det_condition(a: Quaternion, b: Quaternion) -> float:
    """det(I - Ad(a^-1) - Ad(b^-1)); scale-invariant in a and b."""
    if a.norm2() == 0.0 or b.norm2() == 0.0:
        raise ValueError("det_condition requires nonzero a and b")
    M = np.eye(3) - ad_rotation(a.inverse()) - ad_rotation(b.inverse())
    return float(np.linalg.det(M))


def w_condition(a: Quaternion, b: Quaternion) -> tuple[ImQuaternion, float]:
    """w = Im(a^-1 b) and the orthogonality value <w - 2 a^-1 w a, w>."""
    if a.norm2() == 0.0:
        raise ValueError("w_condition requires a != 0")
    w = mul(a.inverse(), b).im
    rotated = apply_ad(a.inverse(), w)
    return w, w.dot(w) - 2.0 * rotated.dot(w)


def kernel_vector(M: np.ndarray, sv_tol: float = KERNEL_SV_TOL) -> np.ndarray:
    """Unit kernel vector of a 3x3 matrix via the smallest singular
    direction; raises if the smallest singular value exceeds sv_tol."""
    _, s, vt = np.linalg.svd(M)
    if s[-1] > sv_tol:
        raise ZeroPlaneConstructionError(
            f"matrix has no kernel: smallest singular value {s[-1]:.3e}")
    return vt[-1]


# classification ---------------------------------------------------------------

@dataclass
class ZClassification:
    """Membership flags for Z1-Z4 with the residuals that drove them."""

    z1: bool
    z2: bool
    z3: bool
    z4: bool
    residuals: dict
    witness: Optional["ZeroPlaneWitness"] = field(default=None)

    @property
    def any(self) -> bool:
        return self.z1 or self.z2 or self.z3 or self.z4

    def flags(self) -> tuple[bool, bool, bool, bool]:
        return (self.z1, self.z2, self.z3, self.z4)

    def to_record(self) -> dict:
        rec = {"z1": self.z1, "z2": self.z2, "z3": self.z3, "z4": self.z4,
               "residuals": {k: (None if v is None else float(v))
                             for k, v in self.residuals.items()}}
        if self.witness is not None:
            rec["witness"] = self.witness.to_record()
        return rec


def classify(g: GroupElement, tol: float = CLASSIFY_TOL) -> ZClassification:
    """Evaluate the four point conditions at g with inclusive tol-slack."""
    a, b, c, d = g.a, g.b, g.c, g.d
    na, nb, nc, nd = a.norm(), b.norm(), c.norm(), d.norm()
    res: dict = {
        "a_norm": na, "b_norm": nb, "c_norm": nc, "d_norm": nd,
        "im_a": a.im_norm(), "im_b": b.im_norm(),
    }

    if na > tol and nb > tol:
        res["det"] = det_condition(a, b)
        z1 = abs(res["det"]) <= tol
    else:
        res["det"] = None
        z1 = False

    res["ab_gap"] = na - nb
    res["a_sqrt2_gap"] = na - 1.0 / math.sqrt(2.0)
    if na > tol:
        _, wval = w_condition(a, b)
        res["w_value"] = wval
        z2 = (abs(res["ab_gap"]) <= tol
              and abs(res["a_sqrt2_gap"]) <= tol
              and abs(wval) <= tol
              and a.im_norm() >= na / 2.0 - tol)
    else:
        res["w_value"] = None
        z2 = False

    z3 = nb <= tol and nc <= tol and a.im_norm() >= 0.5 - tol
    z4 = na <= tol and nd <= tol and b.im_norm() >= 0.5 - tol
    return ZClassification(z1, z2, z3, z4, res)


# witness construction ---------------------------------------------------------

@dataclass(frozen=True)
class ZeroPlaneWitness:
    """A verified horizontal zero-curvature plane at a base point."""

    template: PlaneTemplate
    source: str              # which Z clause produced it
    horiz_residual: float    # max |<X~, v_g>_1| over both vectors, unit scale
    kappa: float             # curvature of the orthonormalized untilded pair

    def to_record(self) -> dict:
        t = self.template
        return {
            "kind": t.kind,
            "source": self.source,
            "x": None if t.x is None else list(t.x.to_array()),
            "y": list(t.y.to_vec3()),
            "horiz_residual": self.horiz_residual,
            "kappa": self.kappa,
        }


def _rotated_by_pi_over_3(r: Quaternion) -> ImQuaternion:
    """Unit imaginary y whose angle to Ad(r) y is exactly pi/3.

    Requires rotation_angle(r) >= pi/3 (up to slack; the polar angle is
    clamped at the boundary, where y is perpendicular to the axis)."""
    phi = rotation_angle(r)
    imr = r.im
    if imr.norm() == 0.0:
        raise ZeroPlaneConstructionError("rotation axis undefined: real quaternion")
    n = imr.scale(1.0 / imr.norm())
    c2 = (0.5 - math.cos(phi)) / (1.0 - math.cos(phi))
    c2 = min(1.0, max(0.0, c2))
    cpsi = math.sqrt(c2)
    spsi = math.sqrt(1.0 - c2)
    nperp = _unit_orthogonal(n)
    return n.scale(cpsi) + nperp.scale(spsi)


def _witness_z1(g: GroupElement) -> PlaneTemplate:
    a, b = g.a, g.b
    M = np.eye(3) - ad_rotation(a.inverse()) - ad_rotation(b.inverse())
    w = ImQuaternion.from_vec3(kernel_vector(M))
    y = apply_ad(a.inverse(), w)
    x = mul(b.inverse(), a)
    return build_template("type2a", x, y)


def _witness_z2(g: GroupElement, m: MetricParams,
                tol: float = CLASSIFY_TOL) -> PlaneTemplate:
    a, b = g.a, g.b
    w = mul(a.inverse(), b).im
    if w.norm() > tol:
        y = w
        p = mul(a.inverse(), b).scale(1.0 / m.s_tilde)
        target = apply_ad(a.inverse(), w).scale(2.0) - w
        x = mul(p.inverse(), target.as_quaternion()).im
        return build_template("type2b", x.as_quaternion(), y)
    # a = +/- b: pick y rotated by exactly pi/3 under Ad(a^-1)
    eps = 1.0 if mul(a.inverse(), b).w >= 0.0 else -1.0
    y = _rotated_by_pi_over_3(a.inverse())
    x = (apply_ad(a.inverse(), y).scale(2.0) - y).scale(eps * m.s_tilde)
    return build_template("type2b", x.as_quaternion(), y)


def _witness_z3(g: GroupElement) -> PlaneTemplate:
    a = g.a
    y = _rotated_by_pi_over_3(a)
    u = apply_ad(a, y) - y
    x = solve_rotation_mapping(y, u)
    return build_template("type2a", x, y)


def _witness_z4(g: GroupElement) -> PlaneTemplate:
    b = g.b
    z = _rotated_by_pi_over_3(b)
    u = apply_ad(b, z) - z
    xinv = solve_rotation_mapping(z, u)
    return build_template("type2a", xinv.conjugate(), u)


def verify_witness(tpl: PlaneTemplate, g: GroupElement, m: MetricParams,
                   source: str = "") -> ZeroPlaneWitness:
    """Re-check a template at g: tilded horizontality and curvature of the
    orthonormalized untilded pair."""
    Xt, Yt = tpl.tilded_pair()
    rx = horizontality_residual_tilded(Xt, g, m)
    ry = horizontality_residual_tilded(Yt, g, m)
    nx = max(np.linalg.norm(algebra_to_coords(Xt, m)), 1e-30)
    ny = max(np.linalg.norm(algebra_to_coords(Yt, m)), 1e-30)
    horiz = max(np.abs(rx).max() / nx, np.abs(ry).max() / ny)
    X, Y = tpl.plane(m)
    xc = algebra_to_coords(X, m)
    yc = algebra_to_coords(Y, m)
    xc = xc / np.linalg.norm(xc)
    yc = yc - (yc @ xc) * xc
    yc = yc / np.linalg.norm(yc)
    from .cheeger import curvature_tensor
    kappa = curvature_tensor(m).kappa_coords(xc, yc)
    return ZeroPlaneWitness(tpl, source, float(horiz), float(kappa))


def construct_zero_horizontal_plane(
        g: GroupElement, m: MetricParams, tol: float = CLASSIFY_TOL,
        horiz_tol: float = WITNESS_HORIZ_TOL,
        kappa_tol: float = WITNESS_KAPPA_TOL) -> Optional[ZeroPlaneWitness]:
    """For a point with any Z flag set, build and verify a horizontal
    zero-curvature plane; returns None when no flag is set.

    Every flagged clause must yield a verifiable witness; a failure raises
    ZeroPlaneConstructionError rather than being skipped.
    """
    cls = classify(g, tol=tol)
    if not cls.any:
        return None
    builders = [("z1", cls.z1, lambda: _witness_z1(g)),
                ("z2", cls.z2, lambda: _witness_z2(g, m, tol)),
                ("z3", cls.z3, lambda: _witness_z3(g)),
                ("z4", cls.z4, lambda: _witness_z4(g))]
    best: Optional[ZeroPlaneWitness] = None
    for name, flagged, make in builders:
        if not flagged:
            continue
        try:
            wit = verify_witness(make(), g, m, source=name)
        except (ValueError, ZeroPlaneConstructionError) as e:
            raise ZeroPlaneConstructionError(
                f"{name} flagged at g but construction failed: {e}") from e
        if wit.horiz_residual > horiz_tol or abs(wit.kappa) > kappa_tol:
            raise ZeroPlaneConstructionError(
                f"{name} witness out of tolerance: horiz {wit.horiz_residual:.3e}, "
                f"kappa {wit.kappa:.3e}")
        if best is None or wit.horiz_residual < best.horiz_residual:
            best = wit
    return best


def classify_with_witness(g: GroupElement, m: MetricParams,
                          tol: float = CLASSIFY_TOL) -> ZClassification:
    cls = classify(g, tol=tol)
    if cls.any:
        cls.witness = construct_zero_horizontal_plane(g, m, tol=tol)
    return cls


# the nowhere-horizontal obstruction -----------------------------------------

def nowhere_horizontal_residual(g: GroupElement, y: ImQuaternion) -> float:
    """Obstruction to horizontality of the diagonal-pair template at g:
    max(|a y conj(a) - y|, |b y conj(b) - y|). Bounded below by
    max(|a|^2, 1 - |a|^2) |y| > 0, so the template is nowhere horizontal."""
    a, b = g.a, g.b
    yq = y.as_quaternion()
    r1 = (mul(mul(a, yq), a.conjugate()) - yq).norm()
    r2 = (mul(mul(b, yq), b.conjugate()) - yq).norm()
    return max(r1, r2)


# plane type identification ----------------------------------------------------

def plane_type(X: AlgebraElement, Y: AlgebraElement, m: MetricParams,
               tol: float = 1e-6) -> tuple[str, dict]:
    """Identify which template family a (near-)zero plane belongs to.

    Returns (kind, info); kind is 'type1', 'type2a' or 'type2b'. The pair is
    reduced so the second vector has no p-component, then the first is
    <,>_2-orthogonalized against it; the diagonal part of its tilde decides
    2a vs 2b.
    """
    scale = max(X.norm(), Y.norm(), 1e-30)
    px, py = X.off.norm(), Y.off.norm()
    if max(px, py) <= tol * scale:
        return "type1", {"p_norm": max(px, py)}
    U, V = (X, Y) if px >= py else (Y, X)
    lam = V.off.dot(U.off) / U.off.norm2()
    V2 = V - U.scale(lam)
    p_residual = V2.off.norm()
    from .cheeger import inner2
    n2 = inner2(V2, V2, m)
    if n2 <= 1e-20:
        return "degenerate", {"p_residual": p_residual}
    U2 = U - V2.scale(inner2(U, V2, m) / n2)
    from .cheeger import tilde
    Ut = tilde(U2, m.t_tilde)
    diag_norm = math.sqrt(Ut.x1.norm() ** 2 + Ut.x2.norm() ** 2)
    info = {"p_residual": p_residual, "alpha_norm": diag_norm,
            "x": U2.off, "y": tilde(V2, m.t_tilde).x1}
    kind = "type2b" if diag_norm > tol * max(1.0, Ut.off.norm()) else "type2a"
    return kind, info


# manufactured points on the four strata ---------------------------------------

def complete_first_row(a: Quaternion, b: Quaternion, rng) -> GroupElement:
    """Unitary completion of a unit first row (a, b) by row-wise
    Gram-Schmidt (left coefficients, per g g* = I)."""
    gen = _as_generator(rng)
    nrm2 = a.norm2() + b.norm2()
    if abs(nrm2 - 1.0) > 1e-9:
        raise ValueError(f"first row must be unit, |row|^2 = {nrm2!r}")
    for _ in range(64):
        w1, w2 = random_quaternion(gen), random_quaternion(gen)
        for _ in range(2):
            coef = mul(w1, a.conjugate()) + mul(w2, b.conjugate())
            w1 = w1 - mul(coef, a)
            w2 = w2 - mul(coef, b)
        n = math.sqrt(w1.norm2() + w2.norm2())
        if n > 1e-6:
            return GroupElement(QMatrix2(a, b, w1.scale(1.0 / n), w2.scale(1.0 / n)))
    raise RuntimeError("failed to complete row to a unitary matrix")


def _random_angled_unit(rng, min_angle: float = math.pi / 3.0) -> Quaternion:
    """Unit quaternion with rotation angle uniform in [min_angle, pi]."""
    gen = _as_generator(rng)
    theta = gen.uniform(min_angle, math.pi)
    axis = ImQuaternion.from_vec3(gen.standard_normal(3))
    axis = axis.scale(1.0 / axis.norm())
    return Quaternion(math.cos(theta / 2.0), *(axis.scale(math.sin(theta / 2.0)).to_vec3()))


def make_z1_point(rng, det_tol: float = 1e-13) -> GroupElement:
    """Root of the determinant condition along a one-parameter quaternion
    path, located by scan plus bisection, then completed to a group element
    with a random norm split between a and b."""
    gen = _as_generator(rng)
    for _ in range(256):
        b = random_quaternion(gen).normalized()
        axis = ImQuaternion.from_vec3(gen.standard_normal(3))
        axis = axis.scale(1.0 / axis.norm())

        def a_of(theta: float) -> Quaternion:
            return Quaternion(math.cos(theta), *(axis.scale(math.sin(theta)).to_vec3()))

        thetas = np.linspace(0.05, math.pi - 0.05, 80)
        vals = [det_condition(a_of(t), b) for t in thetas]
        bracket_idx = next((k for k in range(len(vals) - 1)
                            if vals[k] == 0.0 or vals[k] * vals[k + 1] < 0.0), None)
        if bracket_idx is None:
            continue
        lo, hi = thetas[bracket_idx], thetas[bracket_idx + 1]
        flo = vals[bracket_idx]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fmid = det_condition(a_of(mid), b)
            if abs(fmid) <= det_tol:
                lo = hi = mid
                break
            if flo * fmid <= 0.0:
                hi = mid
            else:
                lo, flo = mid, fmid
        theta = 0.5 * (lo + hi)
        a = a_of(theta)
        if abs(det_condition(a, b)) > 10 * det_tol:
            continue
        lam = gen.uniform(0.2, 0.8)
        row_a = a.scale(math.sqrt(lam))
        row_b = b.scale(math.sqrt(1.0 - lam))
        return complete_first_row(row_a, row_b, gen)
    raise RuntimeError("no det-condition root found")


def make_z2_point(rng, w_zero: bool = False) -> GroupElement:
    gen = _as_generator(rng)
    a = _random_angled_unit(gen).scale(1.0 / math.sqrt(2.0))
    if w_zero:
        sign = 1.0 if gen.uniform() < 0.5 else -1.0
        b = a.scale(sign)
    else:
        yhat = _rotated_by_pi_over_3(a.inverse())
        rho = gen.uniform(0.1, 0.9)
        re = math.sqrt(1.0 - rho * rho) * (1.0 if gen.uniform() < 0.5 else -1.0)
        w = yhat.scale(rho)
        b = mul(a, Quaternion(re, w.x, w.y, w.z))
    return complete_first_row(a, b, gen)


def make_z3_point(rng) -> GroupElement:
    gen = _as_generator(rng)
    a = _random_angled_unit(gen)
    d = random_quaternion(gen).normalized()
    return GroupElement(QMatrix2.diag(a, d))


def make_z4_point(rng) -> GroupElement:
    gen = _as_generator(rng)
    b = _random_angled_unit(gen)
    c = random_quaternion(gen).normalized()
    return GroupElement(QMatrix2(Quaternion(), b, c, Quaternion()))


_Z_MAKERS = (make_z1_point, make_z2_point, make_z3_point, make_z4_point)


def make_z_point(rng, which: int) -> GroupElement:
    """which in {1, 2, 3, 4}."""
    return _Z_MAKERS[which - 1](rng)


def z_residual_proxy(g: GroupElement) -> float:
    """Classifier-side distance proxy to the zero set: the smallest of the
    per-stratum condition residuals, with violated inequality clauses
    contributing their margin. Zero exactly on Z; no minimizer involved."""
    a, b, c, d = g.a, g.b, g.c, g.d
    na, nb = a.norm(), b.norm()
    rs = []
    if na > 1e-12 and nb > 1e-12:
        rs.append(abs(det_condition(a, b)))
    if na > 1e-12:
        _, wval = w_condition(a, b)
        r2 = max(abs(na - nb), abs(wval))
        r2 = max(r2, max(0.0, na / 2.0 - a.im_norm()))
        rs.append(r2)
    rs.append(max(nb, c.norm(), max(0.0, 0.5 - a.im_norm())))
    rs.append(max(na, d.norm(), max(0.0, 0.5 - b.im_norm())))
    return min(rs)


def perturb_point(g: GroupElement, rng, eps: float = 1e-2,
                  controlled: bool = True) -> GroupElement:
    """Geodesic-style displacement g exp(eps X) with random unit X.

    With controlled=True the draw is rejected until the displaced point
    sits at a controlled distance off the zero set (residual proxy at
    least eps/4), so displacements nearly tangent to a stratum are not
    mistaken for off-set samples."""
    from .sp2 import exp as sp2_exp, random_algebra_element
    gen = _as_generator(rng)
    for _ in range(256):
        X = random_algebra_element(gen, unit=True)
        moved = GroupElement(g.mat @ sp2_exp(X.scale(eps)).mat)
        if not controlled or z_residual_proxy(moved) >= 0.25 * eps:
            return moved
    raise RuntimeError("could not displace the point off the zero set")
