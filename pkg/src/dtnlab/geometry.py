"""Reference circle geometry, boundary fields, and tangential calculus.

The reference interface is a circle of radius ``R`` sitting inside an annular
exterior bounded by ``R_ext``.  Everything downstream (diffeomorphisms,
elliptic solves, boundary operators) works on top of two objects defined here:

* :class:`Geometry` -- the immutable reference configuration, and
* :class:`BoundaryField` -- a scalar function on the interface, stored dually
  as point values on the uniform angular grid and as truncated Fourier
  coefficients.

On the circle the tangent space is one-dimensional, so tangential gradients
and divergences are scalars along the unit tangent and both reduce to the
arc-length derivative (1/R) d/dtheta.
"""
from __future__ import annotations

import dataclasses
from functools import cached_property
from typing import Callable, Sequence

import numpy as np


@dataclasses.dataclass(frozen=True)
class Geometry:
    """Reference configuration: radii, tubular half-width, grid resolutions.

    ``n_theta`` must leave enough headroom over the Fourier truncation
    ``n_modes`` that pointwise products of two band-limited fields are
    alias-free after re-truncation: n_theta >= 2 (2 n_modes + 1).
    """

    R: float = 1.0
    R_ext: float = 2.0
    eps0: float = 0.3
    n_theta: int = 256
    n_r: int = 64
    n_modes: int = 32

    def __post_init__(self) -> None:
        if not (self.R_ext > self.R > 0.0):
            raise ValueError(f"need R_ext > R > 0, got R={self.R}, R_ext={self.R_ext}")
        if not (0.0 < self.eps0 <= min(self.R, self.R_ext - self.R) / 2.0):
            raise ValueError(
                f"tubular half-width eps0={self.eps0} must lie in "
                f"(0, {min(self.R, self.R_ext - self.R) / 2.0}]"
            )
        if self.n_theta & (self.n_theta - 1):
            raise ValueError(f"n_theta={self.n_theta} must be a power of two")
        if self.n_theta < 2 * (2 * self.n_modes + 1):
            raise ValueError(
                f"aliasing rule violated: n_theta={self.n_theta} "
                f"< 2(2 n_modes+1)={2 * (2 * self.n_modes + 1)}"
            )
        if self.n_r < 4:
            raise ValueError("n_r too small")

    @cached_property
    def theta(self) -> np.ndarray:
        return np.arange(self.n_theta) * (2.0 * np.pi / self.n_theta)

    @property
    def h_interior(self) -> float:
        return self.R / self.n_r

    @property
    def h_exterior(self) -> float:
        return (self.R_ext - self.R) / self.n_r

    # -- fields ------------------------------------------------------------

    def field_from_values(self, values: np.ndarray) -> "BoundaryField":
        return BoundaryField.from_values(self, values)

    def field_from_coeffs(self, coeffs: np.ndarray) -> "BoundaryField":
        return BoundaryField(self, np.asarray(coeffs, dtype=complex))

    def field_from_function(self, fn: Callable[[np.ndarray], np.ndarray]) -> "BoundaryField":
        return BoundaryField.from_values(self, np.asarray(fn(self.theta)))

    def zero_field(self) -> "BoundaryField":
        return BoundaryField(self, np.zeros(2 * self.n_modes + 1, dtype=complex))

    def constant_field(self, c: complex) -> "BoundaryField":
        z = np.zeros(2 * self.n_modes + 1, dtype=complex)
        z[self.n_modes] = c
        return BoundaryField(self, z)

    def mode_field(self, n: int, amplitude: complex = 1.0) -> "BoundaryField":
        """The single complex mode amplitude * e^{i n theta}."""
        if abs(n) > self.n_modes:
            raise ValueError(f"mode {n} exceeds truncation {self.n_modes}")
        z = np.zeros(2 * self.n_modes + 1, dtype=complex)
        z[self.n_modes + n] = amplitude
        return BoundaryField(self, z)


class BoundaryField:
    """A scalar function on the interface, band-limited to |n| <= n_modes.

    The canonical representation is the centered coefficient vector
    ``coeffs[k]`` = c_n with n = k - n_modes, for f = sum_n c_n e^{i n theta};
    grid values are the evaluation of the truncated series on the uniform
    theta-grid, kept consistent under the DFT by construction.
    """

    __slots__ = ("geom", "coeffs", "_values")

    def __init__(self, geom: Geometry, coeffs: np.ndarray):
        if coeffs.shape != (2 * geom.n_modes + 1,):
            raise ValueError("coefficient vector has wrong length")
        self.geom = geom
        self.coeffs = np.asarray(coeffs, dtype=complex)
        self._values: np.ndarray | None = None

    @classmethod
    def from_values(cls, geom: Geometry, values: np.ndarray) -> "BoundaryField":
        values = np.asarray(values)
        if values.shape != (geom.n_theta,):
            raise ValueError(
                f"expected {geom.n_theta} grid values, got shape {values.shape}"
            )
        spec = np.fft.fft(values) / geom.n_theta
        m = geom.n_modes
        coeffs = np.empty(2 * m + 1, dtype=complex)
        coeffs[m:] = spec[: m + 1]          # n = 0..m
        coeffs[:m] = spec[-m:]              # n = -m..-1
        return cls(geom, coeffs)

    # -- representations ---------------------------------------------------

    @property
    def values(self) -> np.ndarray:
        """Complex grid values of the truncated series (cached)."""
        if self._values is None:
            g = self.geom
            spec = np.zeros(g.n_theta, dtype=complex)
            m = g.n_modes
            spec[: m + 1] = self.coeffs[m:]
            spec[-m:] = self.coeffs[:m]
            self._values = np.fft.ifft(spec) * g.n_theta
        return self._values

    @property
    def real_values(self) -> np.ndarray:
        return np.real(self.values)

    @property
    def is_real(self) -> bool:
        """Hermitian symmetry c_{-n} = conj(c_n) up to rounding."""
        return bool(
            np.allclose(self.coeffs[::-1], np.conj(self.coeffs), atol=1e-13 * (1 + self.linf()))
        )

    def mode(self, n: int) -> complex:
        if abs(n) > self.geom.n_modes:
            return 0.0
        return complex(self.coeffs[self.geom.n_modes + n])

    # -- algebra -----------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, BoundaryField):
            self._check_compatible(other)
            return BoundaryField(self.geom, self.coeffs + other.coeffs)
        return self + self.geom.constant_field(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __mul__(self, other):
        """Pointwise product; field*field products go through the grid and
        are re-truncated (alias-free by the n_theta >= 2(2 n_modes+1) rule)."""
        if isinstance(other, BoundaryField):
            self._check_compatible(other)
            return BoundaryField.from_values(self.geom, self.values * other.values)
        return BoundaryField(self.geom, self.coeffs * other)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def __truediv__(self, other):
        if isinstance(other, BoundaryField):
            self._check_compatible(other)
            return BoundaryField.from_values(self.geom, self.values / other.values)
        return BoundaryField(self.geom, self.coeffs / other)

    def __rtruediv__(self, other):
        return BoundaryField.from_values(self.geom, other / self.values)

    def conj(self) -> "BoundaryField":
        return BoundaryField(self.geom, np.conj(self.coeffs[::-1]))

    def _check_compatible(self, other: "BoundaryField") -> None:
        if other.geom is not self.geom and other.geom != self.geom:
            raise ValueError("fields live on different geometries")

    # -- calculus and norms ------------------------------------------------

    @property
    def _mode_numbers(self) -> np.ndarray:
        m = self.geom.n_modes
        return np.arange(-m, m + 1)

    def derivative(self) -> "BoundaryField":
        """Arc-length derivative (1/R) d/dtheta, exact on the truncation."""
        return BoundaryField(
            self.geom, self.coeffs * (1j * self._mode_numbers / self.geom.R)
        )

    def mean(self) -> complex:
        return self.mode(0)

    def l2_norm(self) -> float:
        """L^2(Gamma_0) norm with the arc-length measure R dtheta."""
        return float(
            np.sqrt(2.0 * np.pi * self.geom.R * np.sum(np.abs(self.coeffs) ** 2))
        )

    def hs_norm(self, s: float) -> float:
        w = (1.0 + (self._mode_numbers / self.geom.R) ** 2) ** s
        return float(
            np.sqrt(2.0 * np.pi * self.geom.R * np.sum(w * np.abs(self.coeffs) ** 2))
        )

    def linf(self) -> float:
        return float(np.max(np.abs(self.values)))

    def inner(self, other: "BoundaryField") -> complex:
        """<f, g> = R int f conj(g) dtheta, exact on the truncation."""
        self._check_compatible(other)
        return complex(
            2.0 * np.pi * self.geom.R * np.sum(self.coeffs * np.conj(other.coeffs))
        )

    def weighted_inner(self, other: "BoundaryField", weight: "BoundaryField") -> complex:
        """<f, g>_w = R int f conj(g) w dtheta via the (alias-free) grid."""
        g = self.geom
        integrand = self.values * np.conj(other.values) * weight.values
        return complex(g.R * np.sum(integrand) * (2.0 * np.pi / g.n_theta))

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        lead = sorted(
            range(len(self.coeffs)), key=lambda k: -abs(self.coeffs[k])
        )[:3]
        m = self.geom.n_modes
        terms = ", ".join(f"c[{k - m}]={self.coeffs[k]:.3g}" for k in lead)
        return f"<BoundaryField {terms}>"


# ---------------------------------------------------------------------------
# tangential calculus (d = 1: scalars along the unit tangent)
# ---------------------------------------------------------------------------

def tangential_gradient(f: BoundaryField, geom: Geometry | None = None) -> BoundaryField:
    """nabla_{Gamma_0} f as its (scalar) component along the unit tangent."""
    return f.derivative()


def tangential_divergence(v: BoundaryField, geom: Geometry | None = None) -> BoundaryField:
    """div_{Gamma_0} of the field with tangential component v (d = 1)."""
    return v.derivative()


def curvature_data(geom: Geometry) -> tuple[float, float]:
    """Mean curvature H_0 and Weingarten scalar L of the circle: both 1/R."""
    return 1.0 / geom.R, 1.0 / geom.R


def laplace_beltrami_basis(geom: Geometry, n: int) -> list[BoundaryField]:
    """First n real eigenfunctions of the surface Laplacian, ordered by
    eigenvalue: constant, cos, sin, cos 2., sin 2., ...; orthonormal in the
    R-weighted L^2 inner product."""
    if n > 2 * geom.n_modes + 1:
        raise ValueError(
            f"requested {n} basis functions, truncation holds {2 * geom.n_modes + 1}"
        )
    out: list[BoundaryField] = []
    R = geom.R
    for j in range(n):
        if j == 0:
            out.append(geom.constant_field(1.0 / np.sqrt(2.0 * np.pi * R)))
            continue
        k = (j + 1) // 2
        amp = 0.5 / np.sqrt(np.pi * R)  # cos = (e^{ik} + e^{-ik})/2
        z = np.zeros(2 * geom.n_modes + 1, dtype=complex)
        if j % 2 == 1:  # cos(k theta)
            z[geom.n_modes + k] = amp
            z[geom.n_modes - k] = amp
        else:  # sin(k theta)
            z[geom.n_modes + k] = -1j * amp
            z[geom.n_modes - k] = 1j * amp
        out.append(BoundaryField(geom, z))
    return out


def basis_eigenvalue(j: int, geom: Geometry) -> float:
    """-Laplace-Beltrami eigenvalue of the j-th basis function: (k/R)^2."""
    k = (j + 1) // 2
    return (k / geom.R) ** 2


def project_on_basis(f: BoundaryField, basis: Sequence[BoundaryField]) -> np.ndarray:
    return np.array([f.inner(b) for b in basis])


def combine_basis(coeffs: np.ndarray, basis: Sequence[BoundaryField]) -> BoundaryField:
    geom = basis[0].geom
    z = np.zeros(2 * geom.n_modes + 1, dtype=complex)
    for a, b in zip(coeffs, basis):
        z = z + a * b.coeffs
    return BoundaryField(geom, z)
