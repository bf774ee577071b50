import os

# Pin linear algebra to one thread before numpy loads: the suite asserts
# byte-level reproducibility in a few places.
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
             "NUMEXPR_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import numpy as np
import pytest

from qlm.catalog import (MinkowskiSurfaceSpec, SphericalSphereSpec,
                         minkowski_surface_data, schwarzschild_sphere_data)
from qlm.functionals import EnergyWorkspace
from qlm.grid import sphere_grid

CUT_BUMP = {(2, 0, 0): 0.12, (1, 0, 0): 0.05}


@pytest.fixture(scope="session")
def grid32():
    return sphere_grid(32, 64)


@pytest.fixture(scope="session")
def grid48():
    return sphere_grid(48, 96)


@pytest.fixture(scope="session")
def ws32(grid32):
    return EnergyWorkspace(grid32, weyl_tol=1e-11)


@pytest.fixture(scope="session")
def schw32(grid32):
    """Schwarzschild m=1, r=4 sphere data at the working resolution."""
    return schwarzschild_sphere_data(SphericalSphereSpec(1.0, 4.0), grid32)


@pytest.fixture(scope="session")
def lightcone32(grid32):
    return minkowski_surface_data(
        MinkowskiSurfaceSpec("lightcone_cut", log_modes=CUT_BUMP), grid32)


@pytest.fixture(scope="session")
def flat_ellipsoid32(grid32):
    return minkowski_surface_data(
        MinkowskiSurfaceSpec("flat_r3", axes=(1.0, 1.0, 1.2)), grid32)


def random_band_limited(grid, count, lmax=8, decay=0.7, seed=0, lmin=1):
    rng = np.random.default_rng(seed)
    basis = grid.basis(lmax, lmin=lmin)
    ells = np.array([ell for ell, _, _ in basis.modes], dtype=float)
    fields = []
    from qlm.fields import ScalarField
    for _ in range(count):
        coeffs = rng.standard_normal(basis.n_modes) * np.exp(-decay * ells)
        fields.append(ScalarField(grid, basis.synthesize(coeffs)))
    return fields
