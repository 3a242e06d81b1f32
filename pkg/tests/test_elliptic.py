import numpy as np
import pytest

from dtnlab.diffeo import transported_coefficients
from dtnlab.elliptic import (
    EllipticProblem,
    TransportedSolver,
    dump_csv,
    flat_exterior_dtn,
    flat_exterior_ntd,
    flat_interior_dtn,
    flat_spectra,
    solve,
)
from dtnlab.geometry import BoundaryField, Geometry

GEOM = Geometry(n_theta=64, n_r=64, n_modes=8)


def exact_g_e(m, geom):
    if m == 0:
        return 1.0 / (geom.R * np.log(geom.R_ext / geom.R))
    q = geom.R / geom.R_ext
    return (abs(m) / geom.R) * (1 + q ** (2 * abs(m))) / (1 - q ** (2 * abs(m)))


class TestFlatPath:
    def test_interior_spectrum_accuracy(self):
        for m in (1, 2, 5, 8, 16, 32):
            g = flat_interior_dtn(m, GEOM)
            assert abs(g - m / GEOM.R) / (m / GEOM.R) < 1e-4

    def test_interior_zero_mode(self):
        assert flat_interior_dtn(0, GEOM) == 0.0

    def test_exterior_spectrum_accuracy(self):
        for m in range(0, 33):
            g = flat_exterior_dtn(m, GEOM)
            ref = exact_g_e(m, GEOM)
            assert abs(g - ref) / ref < 1e-4

    def test_exterior_refinement_order(self):
        # fourth-order scheme: error drops ~16x per refinement
        errs = []
        for n_r in (16, 32, 64):
            g = flat_exterior_dtn(6, GEOM, n_r=n_r)
            errs.append(abs(g - exact_g_e(6, GEOM)))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders > 3.5)

    def test_ntd_is_exact_inverse(self):
        for m in (0, 1, 3, 8):
            prod = flat_exterior_ntd(m, GEOM) * flat_exterior_dtn(m, GEOM)
            assert abs(prod - 1.0) < 1e-12

    def test_spectra_table_shapes(self):
        sp = flat_spectra(GEOM)
        assert sp["g_i"].shape == (GEOM.n_modes + 1,)
        assert np.all(sp["g_e"] > 0)
        assert sp["g_i"][0] == 0.0

    def test_nonuniform_geometry(self):
        g2 = Geometry(R=2.0, R_ext=3.0, eps0=0.4, n_theta=64, n_r=64, n_modes=8)
        assert abs(flat_interior_dtn(4, g2) - 2.0) < 2e-4
        ref = exact_g_e(3, g2)
        assert abs(flat_exterior_dtn(3, g2) - ref) / ref < 1e-4


class TestCoupledFlat:
    """rho = 0 through the coupled machinery: exact harmonic references."""

    def test_interior_dirichlet_flux(self):
        rho = GEOM.zero_field()
        errs = []
        for n_r in (32, 64):
            geom = Geometry(n_theta=64, n_r=n_r, n_modes=8)
            s = TransportedSolver(geom, geom.zero_field(), "interior")
            sol = s.solve_dirichlet(geom.mode_field(3))
            # phi = (r/R)^3 e^{3 i theta}: flux = 3/R
            err = np.max(np.abs(sol.conormal_flux.coeffs - 3.0 * geom.mode_field(3).coeffs))
            errs.append(err)
        assert errs[-1] < 5e-3
        assert errs[0] / errs[1] > 3.0  # second order

    def test_interior_constant_zero_flux(self):
        s = TransportedSolver(GEOM, GEOM.zero_field(), "interior")
        sol = s.solve_dirichlet(GEOM.constant_field(2.5))
        assert sol.conormal_flux.linf() < 1e-10
        assert np.max(np.abs(sol.phi - 2.5)) < 1e-10

    def test_exterior_dirichlet_flux(self):
        s = TransportedSolver(GEOM, GEOM.zero_field(), "exterior")
        sol = s.solve_dirichlet(GEOM.mode_field(2))
        ref = exact_g_e(2, GEOM)
        err = np.abs(sol.conormal_flux.mode(2) - ref)
        assert err / ref < 2e-3

    def test_exterior_neumann_constant(self):
        # -phi'(R)=c with phi = a ln(r/R_ext): trace c R ln(R_ext/R)
        s = TransportedSolver(GEOM, GEOM.zero_field(), "exterior")
        sol = s.solve_neumann(GEOM.constant_field(1.0))
        ref = GEOM.R * np.log(GEOM.R_ext / GEOM.R)
        assert abs(sol.trace.mode(0) - ref) < 2e-3

    def test_neumann_dirichlet_roundtrip_exact(self):
        # G^e(F^e psi) = psi at machine precision by construction
        s = TransportedSolver(GEOM, GEOM.zero_field(), "exterior")
        psi = GEOM.field_from_function(lambda t: 1.0 + np.cos(t) + 0.3 * np.sin(4 * t))
        tr = s.solve_neumann(psi).trace
        back = s.solve_dirichlet(tr).conormal_flux
        assert np.max(np.abs(back.coeffs - psi.coeffs)) < 1e-10

    def test_residual_recorded(self):
        s = TransportedSolver(GEOM, GEOM.zero_field(), "interior")
        sol = s.solve_dirichlet(GEOM.mode_field(1))
        assert sol.residual_norm < 1e-10


class TestCoupledDeformed:
    def test_dilated_disk_mode_one(self):
        # rho = eps const: interior domain is a disk of radius R + eps, so
        # G[rho] e^{i theta} = e^{i theta} / (R + eps) in the pulled-back
        # normalization (detK = 1 + eps/R)
        eps = 0.03
        errs = []
        for n_r in (64, 128):
            geom = Geometry(n_theta=64, n_r=n_r, n_modes=8)
            s = TransportedSolver(geom, geom.constant_field(eps), "interior")
            sol = s.solve_dirichlet(geom.mode_field(1))
            ref = 1.0 / (geom.R + eps)
            errs.append(abs(sol.conormal_flux.mode(1) - ref))
        assert errs[-1] < 5e-4
        assert errs[0] / errs[1] > 3.0

    def test_dilated_disk_exterior(self):
        # rho = eps const: exterior annulus (R + eps, R_ext); mode-1 flux
        # in the pulled-back normalization is the annulus DtN eigenvalue
        eps = 0.03
        geom = Geometry(n_theta=64, n_r=128, n_modes=8)
        s = TransportedSolver(geom, geom.constant_field(eps), "exterior")
        sol = s.solve_dirichlet(geom.mode_field(1))
        a = geom.R + eps
        q = a / geom.R_ext
        ref = (1.0 / a) * (1 + q**2) / (1 - q**2)
        assert abs(sol.conormal_flux.mode(1) - ref) < 1e-3

    def test_deformed_constant_zero_flux(self):
        rho = GEOM.field_from_function(lambda t: 0.03 * np.cos(t))
        s = TransportedSolver(GEOM, rho, "interior")
        sol = s.solve_dirichlet(GEOM.constant_field(1.0))
        assert sol.conormal_flux.linf() < 1e-9

    def test_deformed_roundtrip_exact(self):
        rho = GEOM.field_from_function(lambda t: 0.03 * np.cos(t))
        s = TransportedSolver(GEOM, rho, "exterior")
        psi = GEOM.field_from_function(lambda t: np.cos(t) - 0.2 * np.sin(3 * t) + 0.5)
        tr = s.solve_neumann(psi).trace
        back = s.solve_dirichlet(tr).conormal_flux
        assert np.max(np.abs(back.coeffs - psi.coeffs)) < 1e-9

    def test_interior_neumann_rejected(self):
        rho = GEOM.zero_field()
        with pytest.raises(ValueError):
            EllipticProblem(
                coeffs=transported_coefficients(rho, GEOM, "interior"),
                geom=GEOM,
                rho=rho,
                bc_inner="neumann",
                data=GEOM.constant_field(1.0),
            )

    def test_solve_frontend(self):
        rho = GEOM.zero_field()
        prob = EllipticProblem(
            coeffs=transported_coefficients(rho, GEOM, "interior"),
            geom=GEOM,
            rho=rho,
            bc_inner="dirichlet",
            data=GEOM.mode_field(2),
        )
        sol = solve(prob)
        assert abs(sol.conormal_flux.mode(2) - 2.0) < 5e-3

    def test_dump_csv(self, tmp_path):
        s = TransportedSolver(GEOM, GEOM.zero_field(), "interior")
        sol = s.solve_dirichlet(GEOM.constant_field(1.0))
        p = tmp_path / "field.csv"
        dump_csv(sol, GEOM, p)
        lines = p.read_text().splitlines()
        assert lines[0] == "r,theta,value"
        assert len(lines) == 1 + (GEOM.n_r + 1) * GEOM.n_theta
