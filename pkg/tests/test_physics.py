"""Conductivity laws, residual/flux operators and loss assembly."""

import numpy as np
import pytest

from potcol import bench
from potcol.net import ActivationKind, NetworkParams, NetworkSpec, init_params
from potcol.physics import (
    Exponential,
    Parabolic,
    Poly3D,
    Trigonometric,
    assemble_loss,
    attach_case_bcs,
    check_positive_conductivity,
    conductivity,
    flux,
    loss_and_grad,
    pde_residual,
)
from potcol.sampling import AnnularCylinder, CollocationSet, SamplerKind, UnitCube, sample_domain

ALL_MODELS = [
    Parabolic(5.0, 1.0, 2.0, axis="z"),
    Exponential(5.0, 1.0, 0.0, beta=1.0, axis="z"),
    Exponential(3.0, 1.2, 0.7, beta=0.8, axis="x"),
    Trigonometric(5.0, 1.0, 2.0, beta=1.0, axis="z"),
    Poly3D((5.0, 0.2, 0.4, 0.6, 0.1, 0.2, 0.3, 0.7)),
]


class TestConductivity:
    def test_parabolic_at_origin(self):
        k, gk = conductivity(Parabolic(5.0, 1.0, 2.0, axis="z"), np.zeros(3))
        assert k == 5.0
        np.testing.assert_array_equal(gk, [0.0, 0.0, 20.0])

    def test_exponential_matches_5_exp_2z(self):
        # k0 (a1 e^{beta z})^2 with beta = 1 is exactly 5 e^{2z}
        model = Exponential(5.0, 1.0, 0.0, beta=1.0, axis="z")
        k, gk = conductivity(model, np.zeros(3))
        assert k == pytest.approx(5.0, rel=1e-15)
        np.testing.assert_allclose(gk, [0.0, 0.0, 10.0], rtol=1e-15)
        z = np.array([[0.0, 0.0, 0.7]])
        k, gk = conductivity(model, z)
        assert k[0] == pytest.approx(5.0 * np.exp(1.4), rel=1e-14)
        assert gk[0, 2] == pytest.approx(10.0 * np.exp(1.4), rel=1e-14)

    def test_squared_trilinear_at_origin(self):
        k, gk = conductivity(Poly3D((5.0, 0.2, 0.4, 0.6, 0.1, 0.2, 0.3, 0.7)), np.zeros(3))
        assert k == 25.0
        np.testing.assert_allclose(gk, [2.0, 4.0, 6.0], rtol=1e-15)

    @pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: type(m).__name__)
    def test_gradient_matches_finite_differences(self, model):
        rng = np.random.default_rng(0)
        pts = rng.random((50, 3))
        _, gk = conductivity(model, pts)
        h = 1e-6
        for d in range(3):
            e = np.zeros(3)
            e[d] = h
            kp, _ = conductivity(model, pts + e)
            km, _ = conductivity(model, pts - e)
            fd = (kp - km) / (2 * h)
            np.testing.assert_allclose(gk[:, d], fd, rtol=1e-8, atol=1e-7)

    def test_positivity_scan_all_cases(self):
        for case in bench.CaseId:
            model = bench.case_material(case)
            assert check_positive_conductivity(model, bench.case_geometry(case)) > 0

    def test_positivity_scan_rejects_vanishing_profile(self):
        # a1 = 0 makes k = 5 z^2 vanish on the bottom face
        with pytest.raises(ValueError, match="not positive"):
            check_positive_conductivity(Parabolic(5.0, 0.0, 1.0, axis="z"), UnitCube())

    def test_poly3d_needs_eight_coefficients(self):
        with pytest.raises(ValueError, match="8 coefficients"):
            Poly3D((1.0, 2.0))


class _ConstantField:
    def __init__(self, c):
        self.c = c

    def jet(self, x):
        from potcol.net import JetTriple

        n = len(np.atleast_2d(x))
        return JetTriple(np.full(n, self.c), np.zeros((n, 3)), np.zeros((n, 3)))


class TestPdeResidual:
    def test_constant_field_annihilates(self):
        pts = np.random.default_rng(1).random((20, 3))
        for model in ALL_MODELS:
            np.testing.assert_array_equal(pde_residual(_ConstantField(4.2), model, pts), 0.0)

    @pytest.mark.parametrize("case", list(bench.CaseId), ids=lambda c: c.value)
    def test_reference_solutions_annihilate_residual(self, case):
        rng = np.random.default_rng(2)
        geom = bench.case_geometry(case)
        if isinstance(geom, UnitCube):
            pts = rng.random((1000, 3))
        else:
            r = np.sqrt(rng.uniform(geom.r_inner**2, geom.r_outer**2, 1000))
            th = rng.uniform(0, 2 * np.pi, 1000)
            pts = np.column_stack([r * np.cos(th), r * np.sin(th),
                                   rng.uniform(0, geom.height, 1000)])
        resid = pde_residual(bench.analytic_solution(case), bench.case_material(case), pts)
        assert np.abs(resid).max() <= 1e-9

    def test_linear_slope_against_graded_conductivity(self):
        # phi = z under k = 5 e^{2z}: residual reduces to dk/dz = 10 e^{2z}
        model = Exponential(5.0, 1.0, 0.0, beta=1.0, axis="z")
        field = bench._AxisProfileSolution(
            phi=lambda z: z, dphi=lambda z: np.ones_like(z), d2phi=lambda z: np.zeros_like(z))
        pts = np.random.default_rng(3).random((30, 3))
        np.testing.assert_allclose(
            pde_residual(field, model, pts), 10.0 * np.exp(2.0 * pts[:, 2]), rtol=1e-13)

    def test_reduced_axis_form_recovered_up_to_common_factor(self):
        # expanded residual of the parabolic law equals
        # k0 (a1 + a2 z) * [(a1 + a2 z) lap(phi) + 2 a2 phi_z]
        k0, a1, a2 = 5.0, 1.0, 2.0
        model = Parabolic(k0, a1, a2, axis="z")
        spec = NetworkSpec((6,), ActivationKind("tanh"), seed=8)
        field = init_params(spec)
        from potcol.net import NetworkField

        nf = NetworkField(field)
        pts = np.random.default_rng(4).random((40, 3))
        jet = nf.jet(pts)
        factor = k0 * (a1 + a2 * pts[:, 2])
        reduced = (a1 + a2 * pts[:, 2]) * jet.lap_diag.sum(axis=1) + 2 * a2 * jet.grad[:, 2]
        np.testing.assert_allclose(pde_residual(nf, model, pts), factor * reduced, rtol=1e-12)

    def test_scale_covariance_in_k0(self):
        base = Trigonometric(5.0, 1.0, 2.0, beta=1.0, axis="z")
        doubled = Trigonometric(10.0, 1.0, 2.0, beta=1.0, axis="z")
        field = _case1_oracle_perturbed()
        pts = np.random.default_rng(5).random((25, 3))
        r1 = pde_residual(field, base, pts)
        r2 = pde_residual(field, doubled, pts)
        np.testing.assert_array_equal(r2, 2.0 * r1)


def _case1_oracle_perturbed():
    # any smooth non-trivial field works; a small random net is convenient
    return __import__("potcol.net", fromlist=["NetworkField"]).NetworkField(
        init_params(NetworkSpec((5,), ActivationKind("mish"), seed=3)))


class TestFlux:
    def test_constant_field_has_zero_flux(self):
        model = Parabolic(5.0, 1.0, 2.0, axis="z")
        q = flux(_ConstantField(7.0), model, np.array([0.2, 0.2, 0.2]), np.array([0, 0, 1.0]))
        assert q == 0.0

    def test_exponential_case_flux_is_z_independent(self):
        model = bench.case_material(bench.CaseId.CASE1_EXPONENTIAL)
        oracle = bench.analytic_solution(bench.CaseId.CASE1_EXPONENTIAL)
        z = np.linspace(0.05, 0.95, 19)
        pts = np.column_stack([np.full_like(z, 0.3), np.full_like(z, 0.7), z])
        q = flux(oracle, model, pts, np.array([0.0, 0.0, 1.0]))
        expected = -1000.0 / (1.0 - np.exp(-2.0))
        np.testing.assert_allclose(q, expected, rtol=1e-12)
        assert expected == pytest.approx(-1156.5176, abs=5e-5)

    def test_parabolic_case_flux_constant(self):
        model = bench.case_material(bench.CaseId.CASE1_PARABOLIC)
        oracle = bench.analytic_solution(bench.CaseId.CASE1_PARABOLIC)
        pts = np.column_stack([np.full(11, 0.5), np.full(11, 0.5), np.linspace(0.1, 0.9, 11)])
        np.testing.assert_allclose(flux(oracle, model, pts, [0.0, 0.0, 1.0]), -1500.0,
                                   rtol=1e-12)

    def test_non_unit_normal_rejected(self):
        model = Parabolic(5.0, 1.0, 2.0, axis="z")
        with pytest.raises(ValueError, match="unit normal"):
            flux(_ConstantField(0.0), model, np.zeros(3), np.array([0.0, 0.0, 1.1]))


def case1_set(n_interior=40, n_per_face=25, kind=None):
    kind = kind or SamplerKind("latin_hypercube", seed=0)
    raw = sample_domain(kind, UnitCube(), n_interior, n_per_face)
    return attach_case_bcs(bench.CaseId.CASE1_EXPONENTIAL, raw)


class TestAssembleLoss:
    def test_oracle_field_gives_vanishing_loss(self):
        cs = case1_set()
        oracle = bench.analytic_solution(bench.CaseId.CASE1_EXPONENTIAL)
        model = bench.case_material(bench.CaseId.CASE1_EXPONENTIAL)
        report = assemble_loss(oracle, model, cs)
        assert report.mse_g <= 1e-18
        assert report.mse_d <= 1e-18
        assert report.mse_n <= 1e-18

    def test_zero_network_loss_by_hand(self):
        cs = case1_set(n_interior=30, n_per_face=50)
        spec = NetworkSpec((4,), ActivationKind("tanh"), seed=0)
        p = init_params(spec)
        zero = NetworkParams([np.zeros_like(w) for w in p.weights],
                             [np.zeros_like(b) for b in p.biases], p.activation)
        model = bench.case_material(bench.CaseId.CASE1_EXPONENTIAL)
        report = assemble_loss(zero, model, cs)
        # zero field: residual 0, flux 0; only the heated top face contributes
        n_top = np.count_nonzero(cs.dirichlet_values == 100.0)
        assert report.mse_g == 0.0
        assert report.mse_n == 0.0
        assert report.mse_d == pytest.approx(100.0**2 * n_top / len(cs.dirichlet_values))

    def test_total_is_exact_sum_of_parts(self):
        cs = case1_set()
        model = bench.case_material(bench.CaseId.CASE1_EXPONENTIAL)
        p = init_params(NetworkSpec((7, 7), ActivationKind("arctan"), seed=1))
        r = assemble_loss(p, model, cs)
        assert r.total == r.mse_g + r.mse_d + r.mse_n

    def test_duplicated_interior_leaves_mse_g_unchanged(self):
        cs = case1_set(n_interior=16)
        model = bench.case_material(bench.CaseId.CASE1_EXPONENTIAL)
        p = init_params(NetworkSpec((6,), ActivationKind("tanh"), seed=2))
        doubled = CollocationSet(
            geometry=cs.geometry,
            interior=np.vstack([cs.interior, cs.interior]),
            dirichlet_points=cs.dirichlet_points,
            dirichlet_values=cs.dirichlet_values,
            neumann_points=cs.neumann_points,
            neumann_normals=cs.neumann_normals,
            neumann_values=cs.neumann_values,
        )
        assert assemble_loss(p, model, doubled).mse_g == assemble_loss(p, model, cs).mse_g

    def test_empty_interior_rejected(self):
        cs = case1_set()
        model = bench.case_material(bench.CaseId.CASE1_EXPONENTIAL)
        bad = CollocationSet(geometry=cs.geometry, interior=np.zeros((0, 3)),
                             dirichlet_points=cs.dirichlet_points,
                             dirichlet_values=cs.dirichlet_values)
        p = init_params(NetworkSpec((4,), ActivationKind("tanh"), seed=0))
        with pytest.raises(ValueError, match="empty interior"):
            assemble_loss(p, model, bad)

    def test_parameter_gradient_matches_finite_differences(self):
        # 3 -> 10 -> 1 tanh net on a 50-point case-1 loss, per-parameter FD
        cs = case1_set(n_interior=20, n_per_face=5)
        model = bench.case_material(bench.CaseId.CASE1_EXPONENTIAL)
        p = init_params(NetworkSpec((10,), ActivationKind("tanh"), seed=6))
        report, grad = loss_and_grad(p, model, cs)
        theta = p.to_vector()
        h = 1e-5
        fd = np.empty_like(theta)
        for i in range(len(theta)):
            tp, tm = theta.copy(), theta.copy()
            tp[i] += h
            tm[i] -= h
            fd[i] = (assemble_loss(p.with_vector(tp), model, cs).total
                     - assemble_loss(p.with_vector(tm), model, cs).total) / (2 * h)
        assert np.linalg.norm(grad - fd) / np.linalg.norm(fd) <= 1e-5
        assert report.total == assemble_loss(p, model, cs).total  # replay is bit-exact


class TestAttachCaseBcs:
    def test_case1_faces(self):
        raw = sample_domain(SamplerKind("halton"), UnitCube(), 10, 20)
        cs = attach_case_bcs("case1_parabolic", raw)
        assert cs.counts == (10, 40, 80)
        top = cs.dirichlet_points[:, 2] == 1.0
        np.testing.assert_array_equal(cs.dirichlet_values[top], 100.0)
        np.testing.assert_array_equal(cs.dirichlet_values[~top], 0.0)
        np.testing.assert_array_equal(cs.neumann_values, 0.0)
        assert np.abs(cs.neumann_normals[:, 2]).max() == 0.0

    def test_case2_far_faces_carry_reference_flux(self):
        raw = sample_domain(SamplerKind("halton"), UnitCube(), 10, 30)
        cs = attach_case_bcs(bench.CaseId.CASE2_POLY3D, raw)
        assert cs.counts == (10, 90, 90)
        np.testing.assert_array_equal(cs.dirichlet_values, 0.0)
        # hand-derived closed forms on each far face: q = -yz (g - x g_x) etc.
        for p, n, q in zip(cs.neumann_points, cs.neumann_normals, cs.neumann_values):
            x, y, z = p
            if n[0] > 0.5:
                expected = -0.2 * y * z * (25 + 2 * y + 3 * z + y * z)
            elif n[1] > 0.5:
                expected = -0.1 * x * z * (50 + 2 * x + 6 * z + 3 * x * z)
            else:
                expected = -0.1 * x * y * (50 + 2 * x + 4 * y + x * y)
            assert q == pytest.approx(expected, rel=1e-12)

    def test_case3_radial_dirichlet(self):
        raw = sample_domain(SamplerKind("halton"), AnnularCylinder(0.3, 0.5, 0.1), 10, 25)
        cs = attach_case_bcs("case3_cylinder", raw)
        r = np.hypot(cs.dirichlet_points[:, 0], cs.dirichlet_points[:, 1])
        np.testing.assert_array_equal(cs.dirichlet_values[np.isclose(r, 0.3)], 0.0)
        np.testing.assert_array_equal(cs.dirichlet_values[np.isclose(r, 0.5)], 100.0)
        assert np.abs(cs.neumann_normals[:, 2]).min() == 1.0  # only the flats remain
        np.testing.assert_array_equal(cs.neumann_values, 0.0)

    def test_geometry_mismatch_rejected(self):
        raw = sample_domain(SamplerKind("halton"), UnitCube(), 5, 5)
        with pytest.raises(ValueError, match="does not match"):
            attach_case_bcs("case3_cylinder", raw)

    def test_already_attached_rejected(self):
        raw = sample_domain(SamplerKind("halton"), UnitCube(), 5, 5)
        cs = attach_case_bcs("case1_exponential", raw)
        with pytest.raises(ValueError, match="raw sampled set"):
            attach_case_bcs("case1_exponential", cs)
