"""Pointwise Clifford algebra for 2-component spinors on a surface.

Everything here is exact 2x2 linear algebra in the representation where the
Clifford action of the orthonormal frame (e1, e2) is

    E1 = [[0, -1], [1, 0]],      E2 = [[0, 1j], [1j, 0]],

the chirality operator is G = diag(1, -1), and the positive/negative
chirality components sit in the first/second slot.  Metric factors never
enter at this level; vectors are given by their orthonormal-frame
coefficients.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

E1 = np.array([[0.0, -1.0], [1.0, 0.0]], dtype=complex)
E2 = np.array([[0.0, 1.0j], [1.0j, 0.0]], dtype=complex)
G = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


@dataclass(frozen=True)
class SpinorValue:
    """One spinor fiber value: (positive, negative) chirality components."""

    plus: complex
    minus: complex

    def norm_sq(self) -> float:
        return abs(self.plus) ** 2 + abs(self.minus) ** 2

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def as_vector(self) -> np.ndarray:
        return np.array([self.plus, self.minus], dtype=complex)

    @staticmethod
    def from_vector(v) -> "SpinorValue":
        return SpinorValue(complex(v[0]), complex(v[1]))


@dataclass(frozen=True)
class CliffordVector:
    """Tangent vector by its coefficients in the orthonormal frame (e1, e2)."""

    a: float
    b: float

    def norm_sq(self) -> float:
        return self.a ** 2 + self.b ** 2

    def matrix(self) -> np.ndarray:
        return self.a * E1 + self.b * E2


@dataclass(frozen=True)
class BoundaryPoint:
    """Point of the unit circle, stored as its angle; z is derived."""

    theta: float

    @property
    def z(self) -> complex:
        return cmath.exp(1j * self.theta)

    def outward_normal(self) -> CliffordVector:
        return CliffordVector(math.cos(self.theta), math.sin(self.theta))


def clifford_mul(x: CliffordVector, s: SpinorValue) -> SpinorValue:
    """Clifford action (a*E1 + b*E2) s of a frame vector on a spinor."""
    return SpinorValue(-(x.a - 1j * x.b) * s.minus, (x.a + 1j * x.b) * s.plus)


def chirality_apply(s: SpinorValue) -> SpinorValue:
    """Chirality operator G = diag(1, -1)."""
    return SpinorValue(s.plus, -s.minus)


def normal_clifford_matrix(z: complex) -> np.ndarray:
    """Matrix of n. (Clifford action of the outward normal) at z on |z|=1."""
    return np.array([[0.0, -np.conj(z)], [z, 0.0]], dtype=complex)


def chiral_projector_matrix(sign: int, z: complex) -> np.ndarray:
    """B^sign = (Id + sign * n.G)/2 at the boundary point z = e^{i theta}."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    zb = np.conj(z)
    return 0.5 * np.array([[1.0, sign * zb], [sign * z, 1.0]], dtype=complex)


def mit_projector_matrix(sign: int, z: complex) -> np.ndarray:
    """B^sign_MIT = (Id + sign * i n.)/2 at the boundary point z."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    zb = np.conj(z)
    return 0.5 * np.array([[1.0, -sign * 1j * zb], [sign * 1j * z, 1.0]], dtype=complex)


def boundary_multiplier(sign: int, variant: str) -> complex:
    """Scalar mu with B psi = B psi0  <=>  f+ + mu*conj(z)*f- = (same for psi0).

    Both projector families have rank one per point; the single scalar
    condition is the first row of the projector matrix.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if variant == "chiral":
        return complex(sign)
    if variant == "mit":
        return -1j * sign
    raise ValueError(f"unknown boundary variant {variant!r}")


def chiral_projector(sign: int, p: BoundaryPoint, s: SpinorValue) -> SpinorValue:
    """Apply the chiral boundary projector B^sign at a boundary point."""
    return SpinorValue.from_vector(chiral_projector_matrix(sign, p.z) @ s.as_vector())


def mit_projector(sign: int, p: BoundaryPoint, s: SpinorValue) -> SpinorValue:
    """Apply the MIT bag boundary projector B^sign_MIT at a boundary point."""
    return SpinorValue.from_vector(mit_projector_matrix(sign, p.z) @ s.as_vector())


def hermitian_inner(s: SpinorValue, t: SpinorValue) -> complex:
    """Fiber Hermitian product, conjugate-linear in the second argument."""
    return s.plus * np.conj(t.plus) + s.minus * np.conj(t.minus)


def re_inner(s: SpinorValue, t: SpinorValue) -> float:
    return hermitian_inner(s, t).real
