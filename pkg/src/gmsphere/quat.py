"""Quaternion arithmetic and conjugation rotations of the imaginary 3-space.

Conjugation v -> q v q^-1 by a nonzero quaternion q restricts to a rotation
of Im H = span{i, j, k}; everything downstream (vertical spaces, the
determinant and orthogonality point conditions) is phrased in terms of that
rotation and its angle.
"""

from __future__ import annotations

import math

import numpy as np


class Quaternion:
    """q = w + x*i + y*j + z*k with real components, Hamilton product."""

    __slots__ = ("w", "x", "y", "z")

    def __init__(self, w=0.0, x=0.0, y=0.0, z=0.0):
        self.w = float(w)
        self.x = float(x)
        self.y = float(y)
        self.z = float(z)

    @classmethod
    def from_array(cls, a) -> "Quaternion":
        w, x, y, z = a
        return cls(w, x, y, z)

    def to_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def __repr__(self):
        return f"Quaternion({self.w!r}, {self.x!r}, {self.y!r}, {self.z!r})"

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w + other.w, self.x + other.x,
                          self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w - other.w, self.x - other.x,
                          self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return mul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        # real scalars commute with quaternions
        return self.scale(other)

    def scale(self, r: float) -> "Quaternion":
        r = float(r)
        return Quaternion(r * self.w, r * self.x, r * self.y, r * self.z)

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm2(self) -> float:
        return self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z

    def norm(self) -> float:
        return math.sqrt(self.norm2())

    def inverse(self) -> "Quaternion":
        n2 = self.norm2()
        if n2 == 0.0:
            raise ZeroDivisionError("zero quaternion has no inverse")
        return self.conjugate().scale(1.0 / n2)

    def normalized(self) -> "Quaternion":
        n = self.norm()
        if n == 0.0:
            raise ZeroDivisionError("cannot normalize the zero quaternion")
        return self.scale(1.0 / n)

    @property
    def re(self) -> float:
        return self.w

    @property
    def im(self) -> "ImQuaternion":
        return ImQuaternion(self.x, self.y, self.z)

    def im_norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def dot(self, other: "Quaternion") -> float:
        """Euclidean inner product of the 4 components; equals Re(conj(self)*other)."""
        return (self.w * other.w + self.x * other.x
                + self.y * other.y + self.z * other.z)

    def is_unit(self, tol: float = 1e-10) -> bool:
        return abs(self.norm2() - 1.0) <= tol

    def approx_eq(self, other: "Quaternion", tol: float = 1e-12) -> bool:
        return (self - other).norm() <= tol


class ImQuaternion:
    """Purely imaginary quaternion x*i + y*j + z*k, identified with R^3."""

    __slots__ = ("x", "y", "z")

    def __init__(self, x=0.0, y=0.0, z=0.0):
        self.x = float(x)
        self.y = float(y)
        self.z = float(z)

    @classmethod
    def from_vec3(cls, v) -> "ImQuaternion":
        x, y, z = v
        return cls(x, y, z)

    def to_vec3(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def as_quaternion(self) -> Quaternion:
        return Quaternion(0.0, self.x, self.y, self.z)

    def __repr__(self):
        return f"ImQuaternion({self.x!r}, {self.y!r}, {self.z!r})"

    def __add__(self, other: "ImQuaternion") -> "ImQuaternion":
        return ImQuaternion(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "ImQuaternion") -> "ImQuaternion":
        return ImQuaternion(self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> "ImQuaternion":
        return ImQuaternion(-self.x, -self.y, -self.z)

    def scale(self, r: float) -> "ImQuaternion":
        r = float(r)
        return ImQuaternion(r * self.x, r * self.y, r * self.z)

    __rmul__ = scale
    __mul__ = scale

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def dot(self, other: "ImQuaternion") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z


ONE = Quaternion(1.0)
QI = Quaternion(0.0, 1.0)
QJ = Quaternion(0.0, 0.0, 1.0)
QK = Quaternion(0.0, 0.0, 0.0, 1.0)


def mul(q1: Quaternion, q2: Quaternion) -> Quaternion:
    """Hamilton product q1*q2 (i*j = k, j*k = i, k*i = j)."""
    a, b, c, d = q1.w, q1.x, q1.y, q1.z
    e, f, g, h = q2.w, q2.x, q2.y, q2.z
    return Quaternion(
        a * e - b * f - c * g - d * h,
        a * f + b * e + c * h - d * g,
        a * g - b * h + c * e + d * f,
        a * h + b * g - c * f + d * e,
    )


def ad_rotation(q: Quaternion) -> np.ndarray:
    """Matrix of v -> q v q^-1 on Im H, as a 3x3 rotation (row-major).

    Scale-invariant in q; raises ValueError on the zero quaternion.
    """
    n2 = q.norm2()
    if n2 == 0.0:
        raise ValueError("ad_rotation undefined for the zero quaternion")
    w, x, y, z = q.w / math.sqrt(n2), q.x / math.sqrt(n2), q.y / math.sqrt(n2), q.z / math.sqrt(n2)
    v = np.array([x, y, z])
    cross = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return (w * w - v @ v) * np.eye(3) + 2.0 * np.outer(v, v) + 2.0 * w * cross


def apply_ad(q: Quaternion, v: ImQuaternion) -> ImQuaternion:
    """q v q^-1 for imaginary v, computed by quaternion products."""
    return mul(mul(q, v.as_quaternion()), q.inverse()).im


def rotation_angle(q: Quaternion) -> float:
    """Rotation angle of ad_rotation(q), folded into [0, pi].

    Uses theta = 2*arccos(Re q/|q|) folded so that q and -q agree; satisfies
    theta >= pi/3 iff |Im q|/|q| >= 1/2.
    """
    n = q.norm()
    if n == 0.0:
        raise ValueError("rotation_angle undefined for the zero quaternion")
    c = min(1.0, max(-1.0, q.w / n))
    theta = 2.0 * math.acos(c)
    if theta > math.pi:
        theta = 2.0 * math.pi - theta
    return theta


def _unit_orthogonal(y: ImQuaternion) -> ImQuaternion:
    """Deterministic unit vector orthogonal to y: the smallest-index
    coordinate direction (i, then j, then k) with its y-component removed."""
    yv = y.to_vec3()
    yn = np.linalg.norm(yv)
    if yn == 0.0:
        raise ValueError("no direction is orthogonal to the zero vector")
    yhat = yv / yn
    for idx in range(3):
        e = np.zeros(3)
        e[idx] = 1.0
        cand = e - (e @ yhat) * yhat
        cn = np.linalg.norm(cand)
        if cn > 1e-7:
            return ImQuaternion.from_vec3(cand / cn)
    raise AssertionError("unreachable: some coordinate direction is independent of y")


def solve_rotation_mapping(y: ImQuaternion, u: ImQuaternion,
                           norm_tol: float = 1e-9) -> Quaternion:
    """Unit quaternion x with x y x^-1 = u, for |y| = |u| > 0.

    For u = -y any rotation axis orthogonal to y works; the axis is then
    chosen deterministically via the smallest-index coordinate rule of
    `_unit_orthogonal`, with rotation angle pi.
    """
    ny, nu = y.norm(), u.norm()
    if ny == 0.0 or nu == 0.0:
        raise ValueError("solve_rotation_mapping requires nonzero vectors")
    if abs(ny - nu) > norm_tol * max(1.0, ny):
        raise ValueError(f"norm mismatch |y|={ny!r} vs |u|={nu!r}")
    yhat = y.scale(1.0 / ny)
    uhat = u.scale(1.0 / nu)
    if uhat.dot(yhat) >= -0.9:
        # x ~ 1 - uhat*yhat rotates yhat onto uhat about the axis yhat x uhat
        return (ONE - mul(uhat.as_quaternion(), yhat.as_quaternion())).normalized()
    # near-antipodal: compose a pi-rotation about the deterministic
    # perpendicular axis with the well-conditioned correction from -yhat
    x_pi = _unit_orthogonal(yhat).as_quaternion()
    x_fix = ONE + mul(uhat.as_quaternion(), yhat.as_quaternion())
    if x_fix.norm() < 1e-12:
        return x_pi
    return mul(x_fix.normalized(), x_pi)
