"""Covariant calculus on the sphere for an arbitrary Riemannian 2-metric.

All operators take the metric explicitly and act on the field containers of
:mod:`qlm.fields`. Derivatives are spectral (see :mod:`qlm.harmonics`);
everything else is pointwise algebra. The Laplacian is literally the
composition divergence(gradient(.)), so the two share one code path.
"""

from __future__ import annotations

import numpy as np

from .errors import PreconditionError
from .fields import Metric2, OneForm, ScalarField, SymTensor2, same_grid, worst_node

__all__ = [
    "integrate",
    "area",
    "gradient",
    "gradient_raised",
    "divergence",
    "laplacian",
    "gauss_curvature",
    "metric_add_dtau",
    "norm_grad_sq",
    "form_dot",
    "christoffels",
    "covariant_hessian",
    "require_positive_curvature",
    "spectral_tail_fraction",
    "metric_tail_fraction",
]


def integrate(sigma, f):
    """Integral of a scalar against the area measure of ``sigma``."""
    grid = same_grid(sigma, f)
    jac = sigma.sqrt_det() / grid.sin_theta[:, None]
    return float(np.sum(grid.quad_weights * f.values * jac))


def area(sigma):
    return integrate(sigma, ScalarField.constant(sigma.grid, 1.0))


def gradient(sigma, f):
    """Differential df as a covariant one-form."""
    grid = same_grid(sigma, f)
    t = grid.transform
    return OneForm(grid, t.dtheta(f.values, 0), t.dphi(f.values))


def gradient_raised(sigma, f):
    """Gradient with the index raised by ``sigma``.

    The result is packaged in a :class:`OneForm` container but its entries
    are the contravariant components in the same chart.
    """
    df = gradient(sigma, f)
    v_t, v_p = _raise_form(sigma, df)
    return OneForm(sigma.grid, v_t, v_p)


def _raise_form(sigma, omega):
    itt, itp, ipp = sigma.inverse_components()
    v_t = itt * omega.a_theta + itp * omega.a_phi
    v_p = itp * omega.a_theta + ipp * omega.a_phi
    return v_t, v_p


def divergence(sigma, omega):
    """Covariant divergence of a one-form (index raised internally)."""
    grid = same_grid(sigma, omega)
    t = grid.transform
    v_t, v_p = _raise_form(sigma, omega)
    sq = sigma.sqrt_det()
    # Contravariant density sqrt(det) * v^theta carries theta-rank 2.
    d_t = t.dtheta(sq * v_t, 2)
    d_p = t.dphi(sq * v_p)
    return ScalarField(grid, (d_t + d_p) / sq)


def laplacian(sigma, f):
    """Laplace-Beltrami operator of ``sigma``."""
    return divergence(sigma, gradient(sigma, f))


def christoffels(sigma):
    """Connection coefficients of ``sigma`` in the fixed chart.

    Returns a dict with keys 'ttt', 'ttp', 'tpp', 'ptt', 'ptp', 'ppp';
    key 'cab' holds Gamma^c_ab (symmetric in a, b).
    """
    grid = sigma.grid
    t = grid.transform
    tt, tp, pp = sigma.components()
    itt, itp, ipp = sigma.inverse_components()
    dt_tt = t.dtheta(tt, 2)
    dt_tp = t.dtheta(tp, 1)
    dt_pp = t.dtheta(pp, 0)
    dp_tt = t.dphi(tt)
    dp_tp = t.dphi(tp)
    dp_pp = t.dphi(pp)
    return {
        "ttt": 0.5 * (itt * dt_tt + itp * (2.0 * dt_tp - dp_tt)),
        "ttp": 0.5 * (itt * dp_tt + itp * dt_pp),
        "tpp": 0.5 * (itt * (2.0 * dp_tp - dt_pp) + itp * dp_pp),
        "ptt": 0.5 * (itp * dt_tt + ipp * (2.0 * dt_tp - dp_tt)),
        "ptp": 0.5 * (itp * dp_tt + ipp * dt_pp),
        "ppp": 0.5 * (itp * (2.0 * dp_tp - dt_pp) + ipp * dp_pp),
    }


def covariant_hessian(sigma, f, gamma=None):
    """Second covariant derivative of a scalar, as a SymTensor2."""
    grid = same_grid(sigma, f)
    t = grid.transform
    if gamma is None:
        gamma = christoffels(sigma)
    f_t = t.dtheta(f.values, 0)
    f_p = t.dphi(f.values)
    f_ttheta = t.dtheta(f_t, 1)
    f_tphi = t.dphi(f_t)
    f_pphi = t.dphi(f_p)
    h_tt = f_ttheta - gamma["ttt"] * f_t - gamma["ptt"] * f_p
    h_tp = f_tphi - gamma["ttp"] * f_t - gamma["ptp"] * f_p
    h_pp = f_pphi - gamma["tpp"] * f_t - gamma["ppp"] * f_p
    return SymTensor2(grid, h_tt, h_tp, h_pp)


def gauss_curvature(sigma):
    """Intrinsic Gauss curvature via the Brioschi determinant formula."""
    grid = sigma.grid
    t = grid.transform
    e, f, g = sigma.components()
    e_u = t.dtheta(e, 2)
    e_v = t.dphi(e)
    e_vv = t.dphi(e_v)
    f_u = t.dtheta(f, 1)
    f_v = t.dphi(f)
    f_uv = t.dphi(f_u)
    g_u = t.dtheta(g, 0)
    g_v = t.dphi(g)
    g_uu = t.dtheta(g_u, 1)

    a00 = -0.5 * e_vv + f_uv - 0.5 * g_uu
    a01 = 0.5 * e_u
    a02 = f_u - 0.5 * e_v
    a10 = f_v - 0.5 * g_u
    b01 = 0.5 * e_v
    b02 = 0.5 * g_u

    det1 = (a00 * (e * g - f * f)
            - a01 * (a10 * g - f * 0.5 * g_v)
            + a02 * (a10 * f - e * 0.5 * g_v))
    det2 = (0.0 * (e * g - f * f)
            - b01 * (b01 * g - f * b02)
            + b02 * (b01 * f - e * b02))
    det_sigma = sigma.det()
    return ScalarField(grid, (det1 - det2) / det_sigma ** 2)


def metric_add_dtau(sigma, tau):
    """Graph metric sigma + dtau (x) dtau."""
    grid = same_grid(sigma, tau)
    df = gradient(sigma, tau)
    return Metric2(grid,
                   sigma.tt + df.a_theta ** 2,
                   sigma.tp + df.a_theta * df.a_phi,
                   sigma.pp + df.a_phi ** 2)


def hodge_star(sigma, omega):
    """Rotation of a one-form by 90 degrees in the oriented metric sense."""
    grid = same_grid(sigma, omega)
    v_t, v_p = _raise_form(sigma, omega)
    sq = sigma.sqrt_det()
    return OneForm(grid, -sq * v_p, sq * v_t)


def norm_grad_sq(sigma, f):
    """|grad f|^2 with respect to ``sigma`` (raw array)."""
    df = gradient(sigma, f)
    v_t, v_p = _raise_form(sigma, df)
    return v_t * df.a_theta + v_p * df.a_phi


def form_dot(sigma, omega, nu):
    """Pointwise pairing sigma^{ab} omega_a nu_b (raw array)."""
    same_grid(sigma, omega, nu)
    v_t, v_p = _raise_form(sigma, omega)
    return v_t * nu.a_theta + v_p * nu.a_phi


def require_positive_curvature(sigma, what="metric", err=PreconditionError):
    """Check pointwise positive Gauss curvature; returns the curvature field."""
    k = gauss_curvature(sigma)
    if np.any(k.values <= 0.0):
        node = worst_node(k.values)
        raise err(
            f"{what}: Gauss curvature not positive "
            f"(min {k.values[node]:.6e} at node {node})",
            node=node, value=float(k.values[node]))
    return k


def spectral_tail_fraction(grid, values, tail=1.0 / 3.0):
    """Fraction of spectral energy in the top ``tail`` of the degree range.

    Diagnostic smoothness proxy: analyzes the array in the scalar harmonic
    basis up to the grid's full degree support and reports the energy
    fraction carried by the highest degrees.
    """
    lmax = grid.n_theta - 1
    table = grid.transform.scalar_coefficients(values, lmax)
    by_l = table.sum(axis=1)
    total = by_l.sum()
    if total == 0.0:
        return 0.0
    l_cut = int(np.floor((1.0 - tail) * lmax))
    return float(by_l[l_cut + 1:].sum() / total)


def metric_tail_fraction(sigma, tail=1.0 / 3.0):
    """Smoothness proxy of a metric: joint high-degree energy fraction.

    Components are pooled so that an identically vanishing component (whose
    roundoff noise has a flat spectrum) cannot dominate the diagnostic.
    """
    grid = sigma.grid
    lmax = grid.n_theta - 1
    l_cut = int(np.floor((1.0 - tail) * lmax))
    head = 0.0
    tail_energy = 0.0
    for comp in sigma.components():
        by_l = grid.transform.scalar_coefficients(comp, lmax).sum(axis=1)
        head += by_l[:l_cut + 1].sum()
        tail_energy += by_l[l_cut + 1:].sum()
    total = head + tail_energy
    return 0.0 if total == 0.0 else float(tail_energy / total)
