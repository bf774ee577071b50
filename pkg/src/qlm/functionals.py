"""Quasi-local mass and energy functionals of surface data.

The physical data of a spacelike 2-surface is the triple (metric, norm of the
mean-curvature vector, connection one-form of the normal frame in
mean-curvature gauge). This module evaluates on that triple:

* the Hawking mass,
* the Brown-York-Liu-Yau mass (reference: embedding into Euclidean 3-space),
* the Wang-Yau quasi-local energy of a candidate time function, its gauge
  functional, mass density, and the Euler-Lagrange residual that is the
  L2-gradient of the energy.

Geometric units G = c = 1 throughout; the classical 1/(8 pi) and 1/(16 pi)
normalizations are kept.
"""

from __future__ import annotations

import hashlib
from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import calculus as calc
from .embedding import WeylOptions, WeylSolver, extract_geometry, graph_embedding
from .errors import AdmissibilityError, GeometryError, PreconditionError
from .fields import Metric2, OneForm, ScalarField, same_grid, worst_node

__all__ = [
    "SurfaceData",
    "TimeFunction",
    "EnergyBreakdown",
    "EnergyWorkspace",
    "check_admissible",
    "hawking_mass",
    "byly_mass",
    "boost_angle",
    "wang_yau_energy",
    "gauge_functional",
    "mass_density",
    "euler_lagrange_residual",
    "conservation_defect",
    "total_mean_curvature_variation",
]


@dataclass(frozen=True)
class SurfaceData:
    """Physical data (sigma, |H|, alpha) of a spacelike 2-surface.

    ``h_norm`` must be strictly positive: the mean-curvature vector is
    assumed spacelike everywhere.
    """

    sigma: Metric2
    h_norm: ScalarField
    alpha: OneForm

    def __post_init__(self):
        same_grid(self.sigma, self.h_norm, self.alpha)
        if np.any(self.h_norm.values <= 0.0):
            node = worst_node(self.h_norm.values)
            raise PreconditionError(
                f"|H| must be positive; min {self.h_norm.values[node]:.3e} "
                f"at node {node}", node=node,
                value=float(self.h_norm.values[node]))

    @property
    def grid(self):
        return self.sigma.grid

    def rescaled(self, factor):
        """Data of the surface with lengths scaled by ``factor``."""
        c = float(factor)
        return SurfaceData(
            Metric2(self.grid, c * c * self.sigma.tt, c * c * self.sigma.tp,
                    c * c * self.sigma.pp),
            ScalarField(self.grid, self.h_norm.values / c),
            self.alpha)


@dataclass(frozen=True)
class TimeFunction:
    """Candidate time function; the observer direction is fixed to (1,0,0,0)."""

    tau: ScalarField

    @property
    def grid(self):
        return self.tau.grid

    @classmethod
    def zero(cls, grid):
        return cls(ScalarField.constant(grid, 0.0))

    @classmethod
    def from_modes(cls, grid, modes, lmax=None):
        """Build tau from {(l, m, kind): amplitude} in the orthonormal basis."""
        if not modes:
            return cls.zero(grid)
        if lmax is None:
            lmax = max(ell for ell, _, _ in modes)
        basis = grid.basis(lmax)
        coeffs = np.zeros(basis.n_modes)
        for key, amp in modes.items():
            coeffs[basis.mode_index(*key)] = amp
        return cls(ScalarField(grid, basis.synthesize(coeffs)))

    def mean_removed(self):
        return TimeFunction(self.tau - self.tau.mean_round())

    def __add__(self, other):
        tau2 = other.tau if isinstance(other, TimeFunction) else other
        return TimeFunction(self.tau + tau2)


@dataclass(frozen=True)
class EnergyBreakdown:
    """Wang-Yau energy split into reference and physical Hamiltonian terms."""

    reference_term: float
    physical_term: float
    energy: float
    theta: ScalarField
    rho: Optional[ScalarField] = None


def check_admissible(sigma, tau):
    """Graph metric of tau, raising AdmissibilityError if it loses convexity."""
    sigma_hat = calc.metric_add_dtau(sigma, tau.tau)
    calc.require_positive_curvature(
        sigma_hat, "time function (graph metric)", AdmissibilityError)
    return sigma_hat


def _digest(*arrays):
    h = hashlib.sha1()
    for a in arrays:
        h.update(a.tobytes())
    return h.digest()


class EnergyWorkspace:
    """Shared embedding solver and graph-state cache for one grid.

    Energy, density and Euler-Lagrange evaluations at one (data, tau) pair
    share a single convex-embedding solve; the workspace keeps the most
    recent states so optimizer sweeps and finite-difference probes do not
    re-solve from scratch. Like the solver it wraps, a workspace is not
    thread-safe: concurrent evaluations need separate instances.
    """

    def __init__(self, grid, weyl_tol=1e-10, l_start=10, cache_size=16):
        self.grid = grid
        self.solver = WeylSolver(grid, WeylOptions(tol=weyl_tol, l_start=l_start))
        self.cache_size = cache_size
        self._states = OrderedDict()

    def graph_state(self, sigma, tau):
        key = _digest(sigma.tt, sigma.tp, sigma.pp, tau.tau.values)
        state = self._states.get(key)
        if state is not None:
            self._states.move_to_end(key)
            return state
        state = self._build_state(sigma, tau)
        self._states[key] = state
        while len(self._states) > self.cache_size:
            self._states.popitem(last=False)
        return state

    def _build_state(self, sigma, tau):
        grid = self.grid
        sigma_hat = check_admissible(sigma, tau)
        graph = graph_embedding(sigma, tau.tau, solver=self.solver)
        geom = extract_geometry(graph.space)
        grad_tau = calc.gradient(sigma, tau.tau)
        grad_sq = calc.norm_grad_sq(sigma, tau.tau)
        w = np.sqrt(1.0 + grad_sq)
        lap_tau = calc.laplacian(sigma, tau.tau)
        reference = calc.integrate(sigma_hat, geom.mean_curvature)
        return {
            "sigma": sigma,
            "sigma_hat": sigma_hat,
            "graph": graph,
            "geom": geom,
            "grad_tau": grad_tau,
            "w": w,
            "lap_tau": lap_tau,
            "reference": reference,
        }


def _workspace(data, workspace):
    return workspace if workspace is not None else EnergyWorkspace(data.grid)


def hawking_mass(data):
    """sqrt(|Sigma| / 16 pi) * (1 - (1/16 pi) * integral of |H|^2)."""
    total_area = calc.area(data.sigma)
    flux = calc.integrate(data.sigma,
                          ScalarField(data.grid, data.h_norm.values ** 2))
    return float(np.sqrt(total_area / (16.0 * np.pi))
                 * (1.0 - flux / (16.0 * np.pi)))


def byly_mass(data, workspace=None):
    """(1/8 pi) * (total Euclidean reference mean curvature - total |H|).

    The reference is the convex embedding of the induced metric itself, so
    positive Gauss curvature of the data metric is required.
    """
    ws = _workspace(data, workspace)
    state = ws.graph_state(data.sigma, TimeFunction.zero(data.grid))
    int_h = calc.integrate(data.sigma, data.h_norm)
    return (state["reference"] - int_h) / (8.0 * np.pi)


def boost_angle(data, tau):
    """Pointwise boost angle of the canonical gauge.

    asinh of -(Laplacian tau) / (|H| * sqrt(1 + |grad tau|^2)); finite
    everywhere since |H| > 0.
    """
    grid = same_grid(data.sigma, tau.tau)
    lap = calc.laplacian(data.sigma, tau.tau)
    w = np.sqrt(1.0 + calc.norm_grad_sq(data.sigma, tau.tau))
    return ScalarField(grid, np.arcsinh(-lap.values / (data.h_norm.values * w)))


def _physical_term(data, tau, angle, w=None, grad_tau=None):
    """(1/8 pi) * integral of the gauge-dependent Hamiltonian density."""
    sigma = data.sigma
    if grad_tau is None:
        grad_tau = calc.gradient(sigma, tau.tau)
    if w is None:
        w = np.sqrt(1.0 + calc.norm_grad_sq(sigma, tau.tau))
    grad_angle = calc.gradient(sigma, angle)
    density = (w * np.cosh(angle.values) * data.h_norm.values
               - calc.form_dot(sigma, grad_tau, grad_angle)
               - calc.form_dot(sigma, data.alpha, grad_tau))
    return calc.integrate(sigma, ScalarField(data.grid, density)) / (8.0 * np.pi)


def wang_yau_energy(data, tau, workspace=None, with_density=False):
    """Quasi-local energy of (data, tau): reference term minus physical term."""
    ws = _workspace(data, workspace)
    state = ws.graph_state(data.sigma, tau)
    angle = ScalarField(
        data.grid,
        np.arcsinh(-state["lap_tau"].values
                   / (data.h_norm.values * state["w"])))
    reference = state["reference"] / (8.0 * np.pi)
    physical = _physical_term(data, tau, angle,
                              w=state["w"], grad_tau=state["grad_tau"])
    rho = mass_density(data, tau, workspace=ws) if with_density else None
    return EnergyBreakdown(
        reference_term=reference,
        physical_term=physical,
        energy=reference - physical,
        theta=angle,
        rho=rho)


def gauge_functional(data, tau, phi):
    """Physical Hamiltonian term with an arbitrary gauge angle ``phi``.

    At the canonical angle it reproduces the physical term of
    :func:`wang_yau_energy`; any other angle cannot decrease it.
    """
    if isinstance(phi, ScalarField):
        angle = phi
    else:
        angle = ScalarField(data.grid, phi)
    return _physical_term(data, tau, angle)


def mass_density(data, tau, workspace=None):
    """Pointwise quasi-local mass density of the pair (data, tau)."""
    ws = _workspace(data, workspace)
    state = ws.graph_state(data.sigma, tau)
    h0_sq = state["graph"].h0_sq.values
    if np.any(h0_sq <= 0.0):
        node = worst_node(h0_sq)
        raise GeometryError(
            f"reference mean-curvature vector not spacelike: |H0|^2 = "
            f"{h0_sq[node]:.3e} at node {node}")
    w = state["w"]
    common = state["lap_tau"].values ** 2 / w ** 2
    rho = (np.sqrt(h0_sq + common)
           - np.sqrt(data.h_norm.values ** 2 + common)) / w
    return ScalarField(data.grid, rho)


def euler_lagrange_residual(data, tau, workspace=None):
    """L2-gradient density of 8 pi times the energy, as a scalar field.

    Vanishes at critical time functions; for data with divergence-free
    connection form it vanishes identically at tau = 0.
    """
    ws = _workspace(data, workspace)
    state = ws.graph_state(data.sigma, tau)
    sigma = data.sigma
    sigma_hat = state["sigma_hat"]
    geom = state["geom"]
    w = state["w"]

    itt, itp, ipp = sigma_hat.inverse_components()
    h = geom.second_form
    h_tt = itt * itt * h.tt + 2.0 * itt * itp * h.tp + itp * itp * h.pp
    h_tp = itt * itp * h.tt + (itt * ipp + itp * itp) * h.tp + itp * ipp * h.pp
    h_pp = itp * itp * h.tt + 2.0 * itp * ipp * h.tp + ipp * ipp * h.pp
    mean_h = geom.mean_curvature.values
    a_tt = h_tt - mean_h * itt
    a_tp = h_tp - mean_h * itp
    a_pp = h_pp - mean_h * ipp

    hess = calc.covariant_hessian(sigma, tau.tau)
    bulk = (a_tt * hess.tt + 2.0 * a_tp * hess.tp + a_pp * hess.pp) / w

    angle = ScalarField(
        data.grid,
        np.arcsinh(-state["lap_tau"].values / (data.h_norm.values * w)))
    grad_angle = calc.gradient(sigma, angle)
    factor = np.cosh(angle.values) * data.h_norm.values / w
    flux_form = state["grad_tau"] * factor - grad_angle - data.alpha
    return ScalarField(
        data.grid, bulk + calc.divergence(sigma, flux_form).values)


def conservation_defect(data, tau, workspace=None):
    """Node-wise defect of the reference/physical Hamiltonian identity.

    For data generated from a surface in Minkowski space, evaluated with its
    own time function, the reference mean curvature (weighted by the area
    form ratio) matches the physical Hamiltonian density pointwise.
    """
    ws = _workspace(data, workspace)
    state = ws.graph_state(data.sigma, tau)
    angle = ScalarField(
        data.grid,
        np.arcsinh(-state["lap_tau"].values
                   / (data.h_norm.values * state["w"])))
    grad_angle = calc.gradient(data.sigma, angle)
    density = (state["w"] * np.cosh(angle.values) * data.h_norm.values
               - calc.form_dot(data.sigma, state["grad_tau"], grad_angle)
               - calc.form_dot(data.sigma, data.alpha, state["grad_tau"]))
    lhs = state["geom"].mean_curvature.values * state["w"]
    return ScalarField(data.grid, lhs - density)


def total_mean_curvature_variation(sigma_hat, delta, workspace=None):
    """First variation of the total reference mean curvature.

    ``delta`` is a covariant symmetric perturbation of ``sigma_hat``; the
    variation is -(1/2) * integral of <h - H sigma_hat, delta> in the
    raised-index pairing, over the embedding of ``sigma_hat``.
    """
    grid = same_grid(sigma_hat, delta)
    if workspace is None:
        workspace = EnergyWorkspace(grid)
    emb = workspace.solver.solve(sigma_hat)
    geom = extract_geometry(emb)
    itt, itp, ipp = sigma_hat.inverse_components()
    mean_h = geom.mean_curvature.values
    b_tt = geom.second_form.tt - mean_h * sigma_hat.tt
    b_tp = geom.second_form.tp - mean_h * sigma_hat.tp
    b_pp = geom.second_form.pp - mean_h * sigma_hat.pp

    # Raise both indices of delta with sigma_hat.
    d_tt = itt * itt * delta.tt + 2.0 * itt * itp * delta.tp + itp * itp * delta.pp
    d_tp = itt * itp * delta.tt + (itt * ipp + itp * itp) * delta.tp + itp * ipp * delta.pp
    d_pp = itp * itp * delta.tt + 2.0 * itp * ipp * delta.tp + ipp * ipp * delta.pp

    pairing = b_tt * d_tt + 2.0 * b_tp * d_tp + b_pp * d_pp
    return -0.5 * calc.integrate(sigma_hat, ScalarField(grid, pairing))
