import numpy as np
import pytest
from numpy.testing import assert_allclose

from oracles import ellipsoid_total_mean_curvature
from qlm import calculus as calc
from qlm.embedding import (EmbeddingR3, WeylOptions, WeylSolver, align_rigid,
                           extract_geometry, graph_embedding, herglotz_report,
                           minkowski_identity_residual, solve_weyl)
from qlm.errors import ConvergenceError, GeometryError, PreconditionError
from qlm.fields import Metric2, ScalarField
from qlm.grid import sphere_grid
from test_grid_calculus import ellipsoid_metric


@pytest.fixture(scope="module")
def solver32(grid32):
    return WeylSolver(grid32, WeylOptions(tol=1e-10))


def mode_field(grid, ell, m, kind, amp):
    basis = grid.basis(max(ell, 2))
    coeffs = np.zeros(basis.n_modes)
    coeffs[basis.mode_index(ell, m, kind)] = amp
    return ScalarField(grid, basis.synthesize(coeffs))


def test_round_sphere_embedding(grid32):
    r = 2.0
    emb = solve_weyl(Metric2.round(grid32, r))
    assert emb.residual < 1e-10
    radius = np.sqrt((emb.xyz ** 2).sum(0))
    assert_allclose(radius, r, atol=1e-9)
    geom = extract_geometry(emb)
    assert_allclose(geom.mean_curvature.values, 2.0 / r, atol=1e-9)
    assert_allclose(geom.lambda1.values, 1.0 / r, atol=1e-7)
    assert_allclose(geom.lambda2.values, 1.0 / r, atol=1e-7)


def test_ellipsoid_total_mean_curvature_vs_oracle(grid32, solver32):
    axes = (1.0, 1.0, 1.2)
    sigma = ellipsoid_metric(grid32, axes)
    emb = solver32.solve(sigma)
    geom = extract_geometry(emb)
    total = calc.integrate(sigma, geom.mean_curvature)
    oracle = ellipsoid_total_mean_curvature(axes, 4 * grid32.n_theta)
    assert abs(total - oracle) <= 1e-6 * abs(oracle)


def test_gauss_equation(grid32, solver32):
    sigma = ellipsoid_metric(grid32, (1.0, 1.0, 1.2))
    geom = extract_geometry(solver32.solve(sigma))
    k_int = calc.gauss_curvature(sigma)
    assert_allclose(geom.lambda1.values * geom.lambda2.values,
                    k_int.values, atol=1e-7)


def test_tau_perturbed_embedding_two_resolutions():
    totals = []
    for n in (32, 48):
        grid = sphere_grid(n, 2 * n)
        tau = mode_field(grid, 1, 0, 0, 0.1)
        sigma_hat = calc.metric_add_dtau(Metric2.round(grid, 1.0), tau)
        emb = solve_weyl(sigma_hat, WeylOptions(tol=1e-9))
        assert emb.residual < 1e-8
        geom = extract_geometry(emb)
        assert geom.lambda2.values.min() > 0.0
        totals.append(calc.integrate(sigma_hat, geom.mean_curvature))
    assert abs(totals[0] - totals[1]) <= 1e-6 * abs(totals[1])


def test_position_laplacian_identity(grid32, solver32):
    sigma = ellipsoid_metric(grid32, (1.0, 1.05, 1.2))
    emb = solver32.solve(sigma)
    geom = extract_geometry(emb)
    lap = np.stack([calc.laplacian(sigma, ScalarField(grid32, c)).values
                    for c in emb.xyz])
    norm = np.sqrt((lap * lap).sum(0))
    assert_allclose(norm, geom.mean_curvature.values, atol=1e-8)
    cosine = (lap * geom.normal).sum(0) / norm
    assert_allclose(cosine, -1.0, atol=1e-8)


def test_cut_embedding_against_revolution_oracle(grid48):
    # The bumped-cut metric has no closed-form embedding; cross-check the
    # spectral solve against an independent surface-of-revolution quadrature.
    from oracles import revolution_mean_curvature

    amp2, amp1 = 0.12, 0.05
    n20 = np.sqrt(5.0 / (16.0 * np.pi))
    n10 = np.sqrt(3.0 / (4.0 * np.pi))
    g_of_x = lambda x: amp2 * n20 * (3.0 * x * x - 1.0) + amp1 * n10 * x
    dg_dx = lambda x: amp2 * n20 * 6.0 * x + amp1 * n10 + 0.0 * x

    th, ph = grid48.nodes
    f = np.exp(g_of_x(np.cos(th)))
    sigma = Metric2(grid48, f * f, np.zeros(grid48.shape),
                    (f * np.sin(th)) ** 2)
    emb = solve_weyl(sigma, WeylOptions(tol=1e-11))
    geom = extract_geometry(emb)
    total = calc.integrate(sigma, geom.mean_curvature)

    th_fine, mean_h_fine, total_oracle = revolution_mean_curvature(g_of_x, dg_dx)
    assert abs(total - total_oracle) <= 1e-8 * abs(total_oracle)
    sampled = np.interp(grid48.theta, th_fine, mean_h_fine)
    assert np.max(np.abs(geom.mean_curvature.values
                         - sampled[:, None])) < 1e-7


def test_minkowski_identity(grid32, solver32):
    assert minkowski_identity_residual(
        solver32.solve(Metric2.round(grid32, 1.5))) < 1e-10
    assert minkowski_identity_residual(
        solver32.solve(ellipsoid_metric(grid32, (1.0, 1.0, 1.2)))) < 1e-7
    tau = mode_field(grid32, 1, 0, 0, 0.1)
    sigma_hat = calc.metric_add_dtau(Metric2.round(grid32, 1.0), tau)
    assert minkowski_identity_residual(solve_weyl(sigma_hat)) < 1e-6


def test_area_invariance_and_area_form_relation(grid32, solver32):
    sigma = Metric2.round(grid32, 1.0)
    tau = mode_field(grid32, 2, 1, 0, 0.08)
    sigma_hat = calc.metric_add_dtau(sigma, tau)
    emb = solver32.solve(sigma_hat)
    induced = emb.induced_metric()
    a1 = calc.area(induced)
    a2 = calc.area(sigma_hat)
    assert abs(a1 - a2) <= 1e-9 * a2
    ratio = np.sqrt(induced.det() / sigma.det())
    w = np.sqrt(1.0 + calc.norm_grad_sq(sigma, tau))
    assert_allclose(ratio, w, atol=1e-10)


def test_rigid_motion_equivariance(grid32):
    sigma = ellipsoid_metric(grid32, (1.0, 1.1, 1.2))
    emb = WeylSolver(grid32).solve(sigma)
    k = 6
    rolled = Metric2(grid32, np.roll(sigma.tt, k, axis=1),
                     np.roll(sigma.tp, k, axis=1),
                     np.roll(sigma.pp, k, axis=1))
    emb_roll = WeylSolver(grid32).solve(rolled)
    back = np.roll(emb_roll.xyz, -k, axis=2)
    _, rms = align_rigid(back, emb.xyz, grid32.quad_weights)
    assert rms < 1e-7


def test_herglotz_uniqueness(grid32, lightcone32):
    sigma = lightcone32.data.sigma
    emb1 = WeylSolver(grid32).solve(sigma)
    # Same metric from an independent continuation path.
    emb2 = WeylSolver(grid32, WeylOptions(continuation_step=0.11,
                                          l_start=6)).solve(sigma)
    rep = herglotz_report(sigma, emb1, emb2)
    assert abs(rep.total_mean_curvature_diff) < 1e-7
    assert rep.max_second_form_diff < 1e-5
    assert rep.aligned_coordinate_rms < 1e-6

    ang = 0.6
    rot = np.array([[np.cos(ang), -np.sin(ang), 0.0],
                    [np.sin(ang), np.cos(ang), 0.0],
                    [0.0, 0.0, 1.0]])
    emb_rot = EmbeddingR3(grid32, np.einsum("ij,jtk->itk", rot, emb1.xyz),
                          emb1.residual, emb1.l_max)
    rep2 = herglotz_report(sigma, emb1, emb_rot)
    assert abs(rep2.total_mean_curvature_diff) < 1e-8
    assert abs(rep2.herglotz_rhs) < 1e-8
    assert rep2.max_second_form_diff < 1e-8

    round_emb = WeylSolver(grid32).solve(Metric2.round(grid32, 1.0))
    with pytest.raises(PreconditionError):
        herglotz_report(sigma, emb1, round_emb)


def test_graph_embedding_reduces_at_zero_tau(grid32):
    sigma = Metric2.round(grid32, 4.0)
    graph = graph_embedding(sigma, ScalarField.constant(grid32, 0.0))
    geom = extract_geometry(graph.space)
    assert_allclose(np.sqrt(graph.h0_sq.values), geom.mean_curvature.values,
                    atol=1e-9)


def test_graph_embedding_lorentz_residual_and_time_component(grid32):
    sigma = Metric2.round(grid32, 4.0)
    tau = mode_field(grid32, 1, 0, 0, 0.1)
    graph = graph_embedding(sigma, tau)
    assert graph.lorentz_residual < 1e-8
    lap_tau = calc.laplacian(sigma, tau)
    assert_allclose(graph.mean_vec[0], lap_tau.values, atol=1e-10)


def test_nonconvex_precondition_names_node(grid32):
    th, _ = grid32.nodes
    waist = Metric2(grid32, np.ones(grid32.shape), np.zeros(grid32.shape),
                    (np.sin(th) * (1.0 + 0.9 * np.cos(th) ** 2)) ** 2)
    with pytest.raises(PreconditionError) as err:
        solve_weyl(waist)
    assert err.value.node is not None


def test_continuation_stall_carries_last_iterate(grid32, lightcone32):
    with pytest.raises(ConvergenceError) as err:
        solve_weyl(lightcone32.data.sigma,
                   WeylOptions(tol=1e-12, l_start=2, l_cap=2))
    iterate = err.value.diagnostics.get("last_iterate")
    assert isinstance(iterate, EmbeddingR3)


def test_degenerate_tangent_plane(grid32):
    flat = EmbeddingR3(grid32, np.ones((3,) + grid32.shape), 0.0, 1)
    with pytest.raises(GeometryError):
        extract_geometry(flat)
