"""Admissible normal-cutoff diffeomorphisms and transported coefficients.

A parametrization rho (a height function over the reference circle) is pushed
into a diffeomorphism of the plane that moves the interface to the graph
r = R + rho(theta) while leaving everything outside a tubular collar fixed:

    sigma(X + x n0(X)) = X + (delta(x) rho(X) + x) n0(X),

with a fixed C^2 cutoff delta equal to x+1 on [-eps1/2, 0] and 0 below -eps1.
In polar coordinates this is the radial map s(r, theta) = r + delta(.) rho.
The elliptic solver never sees sigma itself, only the transported coefficient
matrix P(sigma) = |det d sigma| (d sigma)^{-1} t(d sigma)^{-1}, evaluated here
in the orthonormal polar frame (radial, tangential):

    P_rr = (s^2 + s_theta^2) / (r s s_r),   P_rt = -s_theta / s,
    P_tt = r s_r / s,                        det d sigma = s s_r / r.
"""
from __future__ import annotations

import dataclasses
from typing import Callable, Literal

import numpy as np

from .geometry import BoundaryField, Geometry, curvature_data, tangential_gradient

Subdomain = Literal["interior", "exterior"]


# ---------------------------------------------------------------------------
# cutoff profiles
# ---------------------------------------------------------------------------

def eps1_of(geom: Geometry) -> float:
    """Transition-layer width eps1 = min(eps0, 1/(3 ||L||_inf)) = min(eps0, R/3)."""
    return min(geom.eps0, geom.R / 3.0)


def cutoff_delta(x: np.ndarray | float, eps1: float, profile: str = "quintic"):
    """The normal cutoff delta evaluated at x <= 0.

    delta = 0 for x <= -eps1, delta = x + 1 on [-eps1/2, 0], joined on
    [-eps1, -eps1/2] by a quintic that matches value/slope/curvature at both
    ends (the default), or by a C^1 cubic used only in the
    cutoff-independence test.
    """
    scalar = np.isscalar(x) or np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    plateau = x >= -eps1 / 2.0
    out[plateau] = x[plateau] + 1.0
    trans = (~plateau) & (x > -eps1)
    if np.any(trans):
        h = eps1 / 2.0
        tau = (x[trans] + eps1) / h
        v = 1.0 - eps1 / 2.0   # value at the right end of the transition
        s = h                  # d(delta)/d(tau) at the right end
        if profile == "quintic":
            a, b, c = 10.0 * v - 4.0 * s, 7.0 * s - 15.0 * v, 6.0 * v - 3.0 * s
            out[trans] = a * tau**3 + b * tau**4 + c * tau**5
        elif profile == "cubic":
            a, b = 3.0 * v - s, s - 2.0 * v
            out[trans] = a * tau**2 + b * tau**3
        else:
            raise ValueError(f"unknown cutoff profile {profile!r}")
    return out[0] if scalar else out


def cutoff_delta_prime(x: np.ndarray | float, eps1: float, profile: str = "quintic"):
    """d delta / dx."""
    scalar = np.isscalar(x) or np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    plateau = x >= -eps1 / 2.0
    out[plateau] = 1.0
    trans = (~plateau) & (x > -eps1)
    if np.any(trans):
        h = eps1 / 2.0
        tau = (x[trans] + eps1) / h
        v = 1.0 - eps1 / 2.0
        s = h
        if profile == "quintic":
            a, b, c = 10.0 * v - 4.0 * s, 7.0 * s - 15.0 * v, 6.0 * v - 3.0 * s
            out[trans] = (3 * a * tau**2 + 4 * b * tau**3 + 5 * c * tau**4) / h
        elif profile == "cubic":
            a, b = 3.0 * v - s, s - 2.0 * v
            out[trans] = (2 * a * tau + 3 * b * tau**2) / h
        else:
            raise ValueError(f"unknown cutoff profile {profile!r}")
    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# admissibility
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    linf: float
    linf_budget: float          # min(eps0/6, 1/(18 L))
    w1inf: float
    w1inf_budget: float         # 1
    margin_linf: float
    margin_w1inf: float

    @property
    def margin(self) -> float:
        return min(self.margin_linf, self.margin_w1inf)


def check_admissible(rho: BoundaryField, geom: Geometry) -> AdmissibilityReport:
    """Direct evaluation of the smallness bounds defining admissibility:
    ||rho||_inf < min(eps0/6, 1/(18 L)) and ||rho||_{W^{1,inf}} < 1."""
    _, L = curvature_data(geom)
    linf = float(np.max(np.abs(rho.real_values)))
    grad_inf = float(np.max(np.abs(tangential_gradient(rho).real_values)))
    w1inf = max(linf, grad_inf)
    linf_budget = min(geom.eps0 / 6.0, 1.0 / (18.0 * L))
    return AdmissibilityReport(
        admissible=(linf < linf_budget and w1inf < 1.0),
        linf=linf,
        linf_budget=linf_budget,
        w1inf=w1inf,
        w1inf_budget=1.0,
        margin_linf=linf_budget - linf,
        margin_w1inf=1.0 - w1inf,
    )


# ---------------------------------------------------------------------------
# deformation state and boundary caches
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class DeformationState:
    """rho plus the derived per-point boundary data at x = 0."""

    rho: BoundaryField
    report: AdmissibilityReport
    cutoff_eps1: float
    K: BoundaryField            # 1 + rho L on the boundary
    detK: BoundaryField         # d = 1: det K = K
    N_tangential: BoundaryField  # -K^{-1} grad rho
    N_norm: BoundaryField        # |N| = sqrt(1 + (K^{-1} grad rho)^2)

    @property
    def admissible(self) -> bool:
        return self.report.admissible


def deformation_state(rho: BoundaryField, geom: Geometry) -> DeformationState:
    rep = check_admissible(rho, geom)
    _, L = curvature_data(geom)
    K = 1.0 + L * rho
    grad = tangential_gradient(rho)
    nt = -1.0 * (grad / K)
    nn = geom.field_from_values(np.sqrt(1.0 + np.abs(nt.values) ** 2))
    return DeformationState(
        rho=rho, report=rep, cutoff_eps1=eps1_of(geom),
        K=K, detK=K, N_tangential=nt, N_norm=nn,
    )


def normal_vector_data(rho: BoundaryField, geom: Geometry) -> tuple[BoundaryField, BoundaryField]:
    st = deformation_state(rho, geom)
    return st.N_tangential, st.N_norm


class SigmaEvaluator:
    """Evaluates the radial part of sigma in normal coordinates (X, x):
    (X, x) maps to (X, delta(x) rho(X) + x)."""

    def __init__(self, rho: BoundaryField, geom: Geometry, profile: str = "quintic"):
        rep = check_admissible(rho, geom)
        if not rep.admissible:
            raise ValueError(
                f"rho not admissible: |rho|={rep.linf:.4g} vs budget "
                f"{rep.linf_budget:.4g}, W1inf={rep.w1inf:.4g}"
            )
        self.rho = rho
        self.geom = geom
        self.eps1 = eps1_of(geom)
        self.profile = profile

    def normal_offset(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        """The moved normal coordinate delta(x) rho(X) + x."""
        rho_v = np.real(
            np.interp(theta, self.geom.theta, self.rho.real_values, period=2 * np.pi)
        )
        return cutoff_delta(x, self.eps1, self.profile) * rho_v + x

    def det_dsigma_grid(self, subdomain: Subdomain) -> np.ndarray:
        return transported_coefficients(
            self.rho, self.geom, subdomain, self.profile
        ).detds


def build_sigma(rho: BoundaryField, geom: Geometry, profile: str = "quintic") -> tuple[DeformationState, SigmaEvaluator]:
    ev = SigmaEvaluator(rho, geom, profile)  # raises on non-admissible rho
    return deformation_state(rho, geom), ev


# ---------------------------------------------------------------------------
# pointwise boundary-layer kinematics (paper-facing conventions)
# ---------------------------------------------------------------------------

def K_at(rho: BoundaryField, geom: Geometry, X: float, x: float) -> float:
    """K = 1 + ((x+1) rho(X) + x) L in the plateau region |x| <= eps1/2."""
    if abs(x) > eps1_of(geom) / 2.0:
        raise ValueError(
            f"normal offset x={x} outside the plateau region |x| <= {eps1_of(geom) / 2.0}"
        )
    rho_X = float(
        np.interp(X % (2 * np.pi), geom.theta, rho.real_values, period=2 * np.pi)
    )
    _, L = curvature_data(geom)
    return 1.0 + ((x + 1.0) * rho_X + x) * L


def dsigma_at(rho: BoundaryField, geom: Geometry, X: float, x: float) -> np.ndarray:
    """d sigma in the (tangent, normal) block frame at (X, x), plateau region."""
    K = K_at(rho, geom, X, x)
    rho_X = float(
        np.interp(X % (2 * np.pi), geom.theta, rho.real_values, period=2 * np.pi)
    )
    ds = float(
        np.interp(
            X % (2 * np.pi),
            geom.theta,
            tangential_gradient(rho).real_values,
            period=2 * np.pi,
        )
    )
    return np.array([[K, 0.0], [(x + 1.0) * ds, 1.0 + rho_X]])


def dsigma_inverse_transpose(rho: BoundaryField, geom: Geometry, X: float, x: float) -> np.ndarray:
    """t(d sigma)^{-1} in the (tangent, normal) block frame: tangent-tangent
    entry K^{-1}, normal column (-(x+1) K^{-1} grad rho, 1)/(1 + rho)."""
    d = dsigma_at(rho, geom, X, x)
    K, ds, one_rho = d[0, 0], d[1, 0] / (x + 1.0) if x != -1.0 else 0.0, d[1, 1]
    return np.array(
        [
            [1.0 / K, -(x + 1.0) * ds / (K * one_rho)],
            [0.0, 1.0 / one_rho],
        ]
    )


# ---------------------------------------------------------------------------
# transported coefficients on the solver grids
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class TransportedCoefficients:
    """P(sigma) and det(d sigma) sampled on the (r, theta) nodes of one
    subdomain, plus an exact re-evaluator for arbitrary radii (the solver
    asks for half-levels; delta is always sampled analytically)."""

    subdomain: Subdomain
    r: np.ndarray                       # radial nodes, shape (n_r+1,)
    P_rr: np.ndarray                    # shape (n_r+1, n_theta)
    P_rt: np.ndarray
    P_tt: np.ndarray
    detds: np.ndarray
    coercivity: float                   # min eigenvalue of P over the grid
    max_dsigma: float                   # observed max singular value (recorded, not enforced)
    at_radius: Callable[[float], tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]


def _kinematics(rho: BoundaryField, geom: Geometry, subdomain: Subdomain, profile: str):
    """Return a closure r -> (s, s_r, s_theta) on the theta-grid."""
    eps1 = eps1_of(geom)
    rho_v = rho.real_values
    drho_v = np.real(rho.derivative().values) * geom.R  # d rho / d theta

    def kin(r: float | np.ndarray):
        r = np.asarray(r, dtype=float)[..., None]
        x = r - geom.R if subdomain == "interior" else geom.R - r
        d = cutoff_delta(x, eps1, profile)
        dp = cutoff_delta_prime(x, eps1, profile)
        if subdomain == "exterior":
            dp = -dp  # chain rule through x = R - r
        s = r + d * rho_v
        s_r = 1.0 + dp * rho_v
        s_th = d * drho_v
        return s, s_r, s_th

    return kin


def transported_coefficients(
    rho: BoundaryField,
    geom: Geometry,
    subdomain: Subdomain,
    profile: str = "quintic",
) -> TransportedCoefficients:
    rep = check_admissible(rho, geom)
    if not rep.admissible:
        raise ValueError("rho not admissible")
    kin = _kinematics(rho, geom, subdomain, profile)

    if subdomain == "interior":
        r = np.linspace(0.0, geom.R, geom.n_r + 1)
    else:
        r = np.linspace(geom.R, geom.R_ext, geom.n_r + 1)

    def at_radius(rv: float):
        s, s_r, s_th = kin(rv)
        rvv = np.asarray(rv, dtype=float)[..., None]
        with np.errstate(divide="ignore", invalid="ignore"):
            p_rr = (s**2 + s_th**2) / (rvv * s * s_r)
            p_rt = -s_th / s
            p_tt = rvv * s_r / s
            dd = s * s_r / rvv
        # r = 0 sits deep in the sigma = Id region; P is the identity there.
        origin = np.broadcast_to(rvv == 0.0, p_rr.shape)
        for arr, idv in ((p_rr, 1.0), (p_rt, 0.0), (p_tt, 1.0), (dd, 1.0)):
            arr[origin] = idv
        return p_rr, p_rt, p_tt, dd

    P_rr, P_rt, P_tt, detds = at_radius(r)
    # eigenvalues of the symmetric 2x2 [[a, b], [b, c]]
    a, b, c = P_rr, P_rt, P_tt
    disc = np.sqrt(((a - c) / 2.0) ** 2 + b**2)
    lam_min = float(np.min((a + c) / 2.0 - disc))
    # singular values of d sigma = [[s_r, s_th/r], [0, s/r]]
    s, s_r, s_th = kin(r[1:] if subdomain == "interior" else r)
    rr = (r[1:] if subdomain == "interior" else r)[:, None]
    m11, m12, m22 = s_r, s_th / rr, s / rr
    frob = m11**2 + m12**2 + m22**2
    det = np.abs(m11 * m22)
    smax = np.sqrt(
        frob / 2.0 + np.sqrt(np.maximum((frob / 2.0) ** 2 - det**2, 0.0))
    )
    return TransportedCoefficients(
        subdomain=subdomain,
        r=r,
        P_rr=P_rr,
        P_rt=P_rt,
        P_tt=P_tt,
        detds=detds,
        coercivity=lam_min,
        max_dsigma=float(np.max(smax)),
        at_radius=at_radius,
    )


def assemble_P(rho: BoundaryField, geom: Geometry, subdomain: Subdomain) -> TransportedCoefficients:
    """Spec-facing name for :func:`transported_coefficients`."""
    return transported_coefficients(rho, geom, subdomain)
