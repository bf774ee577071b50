import numpy as np
import pytest
from numpy.testing import assert_allclose

from oracles import ellipsoid_mean_curvature
from qlm import calculus as calc
from qlm.catalog import (MinkowskiSurfaceSpec, SphericalSphereSpec,
                         imcf_hawking_monotonicity, lightcone_rigidity_report,
                         minkowski_surface_data, mass_relation_check,
                         schwarzschild_sphere_data)
from qlm.errors import DomainError, GenerationError
from qlm.functionals import byly_mass, hawking_mass, wang_yau_energy

CUT_BUMP = {(2, 0, 0): 0.12, (1, 0, 0): 0.05}


def test_schwarzschild_closed_forms(grid32):
    spec = SphericalSphereSpec(1.0, 4.0)
    sphere = schwarzschild_sphere_data(spec, grid32)
    assert_allclose(sphere.data.h_norm.values, 0.5 * np.sqrt(0.5), rtol=1e-15)
    assert sphere.refs["m_hawking"] == 1.0
    assert_allclose(sphere.refs["M_byly"], 4.0 * (1.0 - np.sqrt(0.5)), rtol=1e-15)
    assert np.max(np.abs(sphere.data.alpha.a_theta)) == 0.0


def test_schwarzschild_flat_limit(grid32):
    sphere = schwarzschild_sphere_data(SphericalSphereSpec(0.0, 2.0), grid32)
    assert abs(hawking_mass(sphere.data)) < 1e-12
    assert sphere.refs["M_byly"] == 0.0


def test_schwarzschild_horizon_and_domain(grid32):
    horizon = schwarzschild_sphere_data(SphericalSphereSpec(1.0, 2.0), grid32)
    assert horizon.data is None
    assert horizon.refs["m_hawking"] == 1.0
    with pytest.raises(DomainError):
        SphericalSphereSpec(1.0, 1.5)


def test_catalog_roundtrip_reproduces_references(grid32, ws32, schw32):
    assert abs(hawking_mass(schw32.data) - schw32.refs["m_hawking"]) < 1e-7
    assert abs(byly_mass(schw32.data, workspace=ws32) - schw32.refs["M_byly"]) < 1e-7


def test_mass_relation(grid32):
    for r in (3.0, 4.0, 10.0):
        assert mass_relation_check(SphericalSphereSpec(1.0, r)) < 1e-12
    assert mass_relation_check(SphericalSphereSpec(0.0, 5.0)) == 0.0


def test_flat_ellipsoid_data(grid32, flat_ellipsoid32):
    data = flat_ellipsoid32.data
    assert np.max(np.abs(data.alpha.a_theta)) < 1e-12
    assert np.max(np.abs(data.alpha.a_phi)) < 1e-12
    assert np.max(np.abs(flat_ellipsoid32.tau_bar.tau.values)) < 1e-12
    th, ph = grid32.nodes
    assert_allclose(data.h_norm.values,
                    ellipsoid_mean_curvature((1.0, 1.0, 1.2), th, ph),
                    atol=1e-9)


def test_round_lightcone_cut(grid32):
    cut = minkowski_surface_data(MinkowskiSurfaceSpec("lightcone_cut"), grid32)
    assert_allclose(cut.data.h_norm.values, 2.0, atol=1e-10)
    assert np.max(np.abs(cut.data.alpha.a_theta)) < 1e-9
    assert_allclose(cut.data.sigma.tt, 1.0, atol=1e-10)


def test_lightcone_curvature_identity(grid32, lightcone32):
    k = calc.gauss_curvature(lightcone32.data.sigma)
    assert_allclose(k.values, lightcone32.data.h_norm.values ** 2 / 4.0,
                    atol=1e-7)


def test_lightcone_rigidity_reports(grid32, ws32):
    round_rep = lightcone_rigidity_report(
        MinkowskiSurfaceSpec("lightcone_cut"), grid32, workspace=ws32)
    assert abs(round_rep.hawking) < 1e-9
    assert abs(round_rep.byly) < 1e-9
    assert abs(round_rep.byly_from_principal_curvatures) < 1e-9

    bumped = lightcone_rigidity_report(
        MinkowskiSurfaceSpec("lightcone_cut", log_modes=CUT_BUMP), grid32,
        workspace=ws32)
    assert abs(bumped.hawking) < 1e-7
    assert bumped.byly > 1e-8
    assert bumped.mismatch < 1e-6

    # Flat non-round surfaces have negative Hawking mass.
    flat = minkowski_surface_data(
        MinkowskiSurfaceSpec("flat_r3", axes=(1.0, 1.0, 1.2)), grid32)
    assert hawking_mass(flat.data) < 0.0


def test_every_minkowski_surface_has_zero_energy(grid32, ws32):
    specs = [MinkowskiSurfaceSpec("flat_r3", axes=(1.0, 1.0, 1.2)),
             MinkowskiSurfaceSpec("lightcone_cut", log_modes=CUT_BUMP),
             MinkowskiSurfaceSpec("boosted_sphere", velocity=0.3),
             MinkowskiSurfaceSpec("graph",
                                  tau_modes={(2, 0, 0): 0.12, (2, 1, 1): 0.06})]
    for spec in specs:
        surface = minkowski_surface_data(spec, grid32)
        e = wang_yau_energy(surface.data, surface.tau_bar, workspace=ws32)
        assert abs(e.energy) < 1e-6, spec.variant


def test_imcf_monotonicity_tables(grid32):
    rs = np.linspace(3.0, 12.0, 10)
    table = imcf_hawking_monotonicity(1.0, rs, grid32)
    assert_allclose(table[:, 1], 1.0, atol=1e-10)

    zero = imcf_hawking_monotonicity(0.0, rs, grid32)
    assert np.max(np.abs(zero[:, 1])) < 1e-12

    # Perturbed lapse profile: closed form m + eps/(2r), which decreases in r.
    eps = 0.1
    profile = lambda r: 1.0 - 2.0 / r - eps / r ** 2
    table2 = imcf_hawking_monotonicity(1.0, rs, grid32,
                                       grad_r_sq_profile=profile)
    assert_allclose(table2[:, 1], 1.0 + eps / (2.0 * rs), atol=1e-10)
    assert np.all(np.diff(table2[:, 1]) < 0.0)


def test_generation_errors(grid32):
    with pytest.raises(GenerationError):
        MinkowskiSurfaceSpec("boosted_sphere", velocity=1.2)
    with pytest.raises(GenerationError):
        MinkowskiSurfaceSpec("no-such-variant")
    with pytest.raises(GenerationError):
        # Steep graph: induced metric is no longer spacelike.
        minkowski_surface_data(
            MinkowskiSurfaceSpec("graph", tau_modes={(1, 1, 0): 3.0}), grid32)
