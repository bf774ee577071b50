"""Isometric embedding of convex 2-metrics into Euclidean 3-space.

``WeylSolver`` finds coordinate functions X with <dX, dX> = sigma_hat for a
positive-curvature metric by Gauss-Newton iteration on real harmonic
coefficients, with continuation from an area-matched round metric. The
rigid-motion kernel is removed by excluding the degree-0 modes (translations)
and penalizing the three infinitesimal rotations of the current iterate.

``extract_geometry`` recovers outward normal, second fundamental form, mean
and principal curvatures from an embedding; the remaining helpers provide the
classical convex-surface integral identities used as diagnostics, and the
graph construction that lifts an embedding to a spacelike surface in
Minkowski space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import calculus as calc
from .errors import ConvergenceError, GeometryError, PreconditionError
from .fields import Metric2, ScalarField, SymTensor2, same_grid, worst_node
from .grid import SphereGrid

__all__ = [
    "EmbeddingR3",
    "EmbeddedGeometry",
    "GraphEmbedding",
    "WeylOptions",
    "WeylSolver",
    "solve_weyl",
    "extract_geometry",
    "minkowski_identity_residual",
    "herglotz_report",
    "HerglotzReport",
    "graph_embedding",
    "align_rigid",
]


@dataclass(frozen=True)
class EmbeddingR3:
    """Solved embedding: three coordinate functions on the grid."""

    grid: SphereGrid
    xyz: np.ndarray          # (3, n_theta, n_phi)
    residual: float          # max-node isometry residual, relative
    l_max: int

    def __post_init__(self):
        arr = np.asarray(self.xyz, dtype=float).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "xyz", arr)

    def induced_metric(self):
        t = self.grid.transform
        xt = np.stack([t.dtheta(c, 0) for c in self.xyz])
        xp = np.stack([t.dphi(c) for c in self.xyz])
        return Metric2(self.grid,
                       (xt * xt).sum(0), (xt * xp).sum(0), (xp * xp).sum(0))

    def shifted(self, offset):
        return EmbeddingR3(self.grid, self.xyz + np.asarray(offset)[:, None, None],
                           self.residual, self.l_max)


@dataclass(frozen=True)
class EmbeddedGeometry:
    """Extrinsic geometry of an embedding (outward-normal convention)."""

    grid: SphereGrid
    normal: np.ndarray            # (3, n_theta, n_phi), unit outward
    mean_curvature: ScalarField   # positive on convex surfaces
    second_form: SymTensor2
    lambda1: ScalarField          # principal curvatures, lambda1 >= lambda2
    lambda2: ScalarField
    induced: Metric2


class WeylOptions:
    """Tuning knobs for :class:`WeylSolver`.

    tol : target max-node isometry residual (relative).
    l_start / l_cap : initial and maximal harmonic degree of the unknowns;
        the cap defaults to 2/3 of the grid degree to leave an anti-aliasing
        margin.
    continuation_step / min_step : initial and minimal continuation step.
    """

    def __init__(self, tol=1e-8, l_start=10, l_cap=None,
                 continuation_step=0.25, min_step=1e-4, max_gn_iter=25,
                 verbose=False):
        self.tol = tol
        self.l_start = l_start
        self.l_cap = l_cap
        self.continuation_step = continuation_step
        self.min_step = min_step
        self.max_gn_iter = max_gn_iter
        self.verbose = verbose


def _round_coefficients(basis, radius):
    """Coefficients of the round sphere of given radius in a lmin=1 basis."""
    grid = basis.transform
    th = grid.theta[:, None]
    ph = 2.0 * np.pi * np.arange(grid.n_phi) / grid.n_phi
    unit = np.stack([
        np.sin(th) * np.cos(ph)[None, :],
        np.sin(th) * np.sin(ph)[None, :],
        np.broadcast_to(np.cos(th), (grid.n_theta, grid.n_phi)),
    ])
    return np.stack([basis.analyze(radius * comp) for comp in unit])


class WeylSolver:
    """Stateful isometric-embedding solver with warm restarts.

    One instance per grid; repeated solves for slowly varying metrics reuse
    the previous solution and normal-matrix factorization. Instances are
    single-threaded state machines: share inputs and outputs freely (both
    are immutable), but give each concurrent solve its own instance.
    """

    def __init__(self, grid, opts=None):
        self.grid = grid
        self.opts = opts or WeylOptions()
        n23 = max(8, (2 * grid.n_theta) // 3)
        self.l_cap = self.opts.l_cap or n23
        self._warm_coeffs = None
        self._warm_l = None
        self._factor = None
        self._factor_l = None
        w = grid.quad_weights
        sin2 = grid.sin_theta[:, None] ** 2
        self._w_tt = w
        self._w_tp = 2.0 * w / sin2
        self._w_pp = w / sin2 ** 2

    # -- residual machinery -------------------------------------------------

    def _basis(self, l_max):
        return self.grid.basis(l_max, lmin=1)

    def _fields(self, basis, coeffs):
        shape = (self.grid.n_theta, self.grid.n_phi)
        x = (basis.values @ coeffs.T).T.reshape((3,) + shape)
        xt = (basis.d_theta @ coeffs.T).T.reshape((3,) + shape)
        xp = (basis.d_phi @ coeffs.T).T.reshape((3,) + shape)
        return x, xt, xp

    def _residual(self, xt, xp, target):
        r_tt = (xt * xt).sum(0) - target[0]
        r_tp = (xt * xp).sum(0) - target[1]
        r_pp = (xp * xp).sum(0) - target[2]
        return r_tt, r_tp, r_pp

    def _objective(self, res):
        r_tt, r_tp, r_pp = res
        return float(np.sum(self._w_tt * r_tt ** 2)
                     + np.sum(self._w_tp * r_tp ** 2)
                     + np.sum(self._w_pp * r_pp ** 2))

    @staticmethod
    def _max_rel(res, target):
        scale = max(np.max(np.abs(target[0])), np.max(np.abs(target[2])))
        return max(np.max(np.abs(r)) for r in res) / scale

    def _gradient(self, basis, xt, xp, res):
        """Exact J^T r for the weighted least-squares functional."""
        r_tt, r_tp, r_pp = res
        u_tt = (self._w_tt * r_tt).ravel()
        u_tp = (self._w_tp * r_tp).ravel()
        u_pp = (self._w_pp * r_pp).ravel()
        n_modes = basis.n_modes
        g = np.empty((3, n_modes))
        for i in range(3):
            a = 2.0 * u_tt * xt[i].ravel() + u_tp * xp[i].ravel()
            b = u_tp * xt[i].ravel() + 2.0 * u_pp * xp[i].ravel()
            g[i] = basis.d_theta.T @ a + basis.d_phi.T @ b
        return g.ravel()

    def _normal_matrix(self, basis, x, xt, xp):
        """Gauss-Newton normal matrix with rotation-gauge penalty rows."""
        n_modes = basis.n_modes
        n_nodes = basis.values.shape[0]
        m3 = 3 * n_modes
        jtj = np.zeros((m3, m3))
        s_tt = np.sqrt(self._w_tt).ravel()[:, None]
        s_tp = np.sqrt(self._w_tp).ravel()[:, None]
        s_pp = np.sqrt(self._w_pp).ravel()[:, None]
        block = np.empty((n_nodes, m3))
        for comp, scale in (("tt", s_tt), ("tp", s_tp), ("pp", s_pp)):
            for i in range(3):
                dt = xt[i].ravel()[:, None]
                dp = xp[i].ravel()[:, None]
                cols = slice(i * n_modes, (i + 1) * n_modes)
                if comp == "tt":
                    block[:, cols] = scale * (2.0 * dt * basis.d_theta)
                elif comp == "pp":
                    block[:, cols] = scale * (2.0 * dp * basis.d_phi)
                else:
                    block[:, cols] = scale * (dt * basis.d_phi + dp * basis.d_theta)
            jtj += block.T @ block

        # Rotation gauge: penalize motion along e_k x X.
        wnode = basis.node_weights
        gamma2 = np.trace(jtj) / m3
        for k in range(3):
            rot = np.cross(np.eye(3)[k], x.reshape(3, -1).T).T
            row = np.concatenate([basis.values.T @ (wnode * rot[i]) for i in range(3)])
            jtj += gamma2 * np.outer(row, row)
        return jtj

    def _factorize(self, jtj, damping):
        d = jtj.diagonal().copy()
        a = jtj + np.diag(damping * d + 1e-14 * d.max())
        return scipy.linalg.cho_factor(a, lower=True, check_finite=False)

    # -- Gauss-Newton core ---------------------------------------------------

    def _gauss_newton(self, coeffs, basis, target, tol, max_iter, allow_stale=True):
        """Iterate to ``tol`` on the given target; returns (coeffs, rel, ok)."""
        x, xt, xp = self._fields(basis, coeffs)
        res = self._residual(xt, xp, target)
        obj = self._objective(res)
        rel = self._max_rel(res, target)
        stale = (allow_stale and self._factor is not None
                 and self._factor_l == basis.lmax)
        for _ in range(max_iter):
            if rel < tol:
                return coeffs, rel, True
            if not stale:
                jtj = self._normal_matrix(basis, x, xt, xp)
                self._factor = self._factorize(jtj, 0.0)
                self._factor_l = basis.lmax
            g = self._gradient(basis, xt, xp, res)
            step = scipy.linalg.cho_solve(self._factor, g, check_finite=False)
            step = step.reshape(3, -1)

            improved = False
            damp = 1.0
            for _ in range(6):
                trial = coeffs - damp * step
                x2, xt2, xp2 = self._fields(basis, trial)
                res2 = self._residual(xt2, xp2, target)
                obj2 = self._objective(res2)
                if np.isfinite(obj2) and obj2 < obj:
                    improved = True
                    break
                damp *= 0.25
            if not improved:
                if stale:
                    stale = False     # retry with a fresh factorization
                    continue
                return coeffs, rel, rel < tol
            slow = obj2 > 0.01 * obj
            coeffs, x, xt, xp, res, obj = trial, x2, xt2, xp2, res2, obj2
            rel = self._max_rel(res, target)
            if stale and slow:
                stale = False
        return coeffs, rel, rel < tol

    def solve(self, sigma_hat, initial=None, check_curvature=True):
        """Solve <dX, dX> = sigma_hat; returns an :class:`EmbeddingR3`."""
        grid = self.grid
        if sigma_hat.grid is not grid:
            raise PreconditionError("metric grid does not match solver grid")
        if check_curvature:
            calc.require_positive_curvature(
                sigma_hat, "isometric embedding target", PreconditionError)
        opts = self.opts
        target_full = np.stack(sigma_hat.components())

        coeffs = initial
        l_now = None
        if coeffs is None and self._warm_coeffs is not None:
            coeffs, l_now = self._warm_coeffs, self._warm_l
        if coeffs is not None:
            if l_now is None:
                l_now = int(np.sqrt(coeffs.shape[1] + 1) - 1 + 0.5)
            basis = self._basis(l_now)
            coeffs, rel, ok = self._gauss_newton(
                coeffs, basis, target_full, opts.tol, opts.max_gn_iter)
            if ok:
                coeffs, rel = self._escalate(coeffs, l_now, target_full, rel)
                if rel < opts.tol:
                    return self._package(coeffs, rel)
            coeffs = None            # warm path failed: fall through to cold

        l_now = min(opts.l_start, self.l_cap)
        basis = self._basis(l_now)
        radius = np.sqrt(calc.area(sigma_hat) / (4.0 * np.pi))
        coeffs = _round_coefficients(basis, radius)
        round_components = np.stack(Metric2.round(grid, radius).components())

        t = 0.0
        step = opts.continuation_step
        self._factor = None
        while t < 1.0:
            t_next = min(1.0, t + step)
            target = (1.0 - t_next) * round_components + t_next * target_full
            # Mid-path solves only have to hand the next step a usable start.
            tol_here = opts.tol if t_next >= 1.0 else max(10.0 * opts.tol, 1e-5)
            trial, rel, ok = self._gauss_newton(
                coeffs, basis, target, tol_here, opts.max_gn_iter,
                allow_stale=False)
            if ok:
                coeffs, t = trial, t_next
            elif l_now < self.l_cap:
                # Truncation-limited rather than diverging: enlarge the basis
                # and retry the same continuation target.
                l_now = min(l_now + 8, self.l_cap)
                basis = self._basis(l_now)
                grown = np.zeros((3, basis.n_modes))
                grown[:, :trial.shape[1]] = trial
                coeffs = grown
                self._factor = None
            else:
                step *= 0.5
                if step < opts.min_step:
                    at_cap = (t_next >= 1.0 and rel < 1e-3)
                    why = (f"residual floor {rel:.3e} at the degree cap "
                           f"L={self.l_cap} exceeds tolerance {opts.tol:.1e}"
                           if at_cap else
                           f"continuation stalled at t={t:.4f} "
                           f"(residual {rel:.3e}, step {step:.1e})")
                    raise ConvergenceError(
                        "embedding " + why,
                        diagnostics={"last_iterate": self._package(trial, rel),
                                     "t": t, "step": step, "l_cap": self.l_cap})
        coeffs, rel = self._escalate(coeffs, l_now, target_full, None)
        if rel >= opts.tol:
            raise ConvergenceError(
                f"embedding residual {rel:.3e} above tolerance {opts.tol:.1e}",
                diagnostics={"last_iterate": self._package(coeffs, rel)})
        return self._package(coeffs, rel)

    def _escalate(self, coeffs, l_now, target, rel):
        """Raise the truncation degree until the node residual meets tol."""
        if rel is None:
            basis = self._basis(l_now)
            _, xt, xp = self._fields(basis, coeffs)
            rel = self._max_rel(self._residual(xt, xp, target), target)
        while rel >= self.opts.tol and l_now < self.l_cap:
            l_new = min(l_now + 8, self.l_cap)
            basis_new = self._basis(l_new)
            grown = np.zeros((3, basis_new.n_modes))
            grown[:, :coeffs.shape[1]] = coeffs
            self._factor = None
            coeffs, rel, _ = self._gauss_newton(
                grown, basis_new, target, self.opts.tol,
                self.opts.max_gn_iter, allow_stale=False)
            l_now = l_new
        return coeffs, rel

    def _package(self, coeffs, rel):
        l_now = int(np.sqrt(coeffs.shape[1] + 1) - 1 + 0.5)
        basis = self._basis(l_now)
        x, _, _ = self._fields(basis, coeffs)
        self._warm_coeffs = coeffs.copy()
        self._warm_l = l_now
        emb = EmbeddingR3(self.grid, x, rel, l_now)
        # Pin the induced-measure centroid at the origin.
        sig = emb.induced_metric()
        total = calc.area(sig)
        jac = self.grid.quad_weights * sig.sqrt_det() / self.grid.sin_theta[:, None]
        centroid = np.array([(jac * c).sum() for c in x]) / total
        return emb.shifted(-centroid)


def solve_weyl(sigma_hat, opts=None, solver=None, initial=None):
    """One-shot convenience wrapper around :class:`WeylSolver`."""
    if solver is None:
        solver = WeylSolver(sigma_hat.grid, opts)
    return solver.solve(sigma_hat, initial=initial)


def extract_geometry(emb):
    """Outward normal, second fundamental form and curvatures of ``emb``."""
    grid = emb.grid
    t = grid.transform
    x = emb.xyz
    xt = np.stack([t.dtheta(c, 0) for c in x])
    xp = np.stack([t.dphi(c) for c in x])

    raw = np.cross(xt, xp, axis=0)
    norm = np.sqrt((raw * raw).sum(0))
    scale = np.max((xt * xt).sum(0)) * np.max(np.abs(grid.sin_theta))
    if np.any(norm < 1e-12 * scale):
        raise GeometryError(
            f"degenerate tangent plane at node {worst_node(norm)}")
    sigma = Metric2(grid, (xt * xt).sum(0), (xt * xp).sum(0), (xp * xp).sum(0))
    nu = raw / norm
    w = grid.quad_weights
    centroid = (w * x).reshape(3, -1).sum(1) / (4.0 * np.pi)
    outward = np.sum(w * ((x - centroid[:, None, None]) * nu).sum(0))
    if outward < 0:
        nu = -nu

    xtt = np.stack([t.dtheta(c, 1) for c in xt])
    xtp = np.stack([t.dphi(c) for c in xt])
    xpp = np.stack([t.dphi(c) for c in xp])
    h = SymTensor2(grid,
                   -(xtt * nu).sum(0), -(xtp * nu).sum(0), -(xpp * nu).sum(0))
    itt, itp, ipp = sigma.inverse_components()
    mean_h = itt * h.tt + 2.0 * itp * h.tp + ipp * h.pp
    k_ext = h.det() / sigma.det()
    disc = np.sqrt(np.clip(mean_h ** 2 / 4.0 - k_ext, 0.0, None))
    return EmbeddedGeometry(
        grid=grid,
        normal=nu,
        mean_curvature=ScalarField(grid, mean_h),
        second_form=h,
        lambda1=ScalarField(grid, mean_h / 2.0 + disc),
        lambda2=ScalarField(grid, mean_h / 2.0 - disc),
        induced=sigma,
    )


def minkowski_identity_residual(emb, geom=None):
    """Defect of the identity total-mean-curvature = 2 * integral K <X, nu>."""
    if geom is None:
        geom = extract_geometry(emb)
    grid = emb.grid
    sigma = geom.induced
    total = calc.area(sigma)
    jac = grid.quad_weights * sigma.sqrt_det() / grid.sin_theta[:, None]
    centroid = np.array([(jac * c).sum() for c in emb.xyz]) / total
    x = emb.xyz - centroid[:, None, None]
    support = (x * geom.normal).sum(0)
    k_ext = geom.lambda1.values * geom.lambda2.values
    int_h = calc.integrate(sigma, geom.mean_curvature)
    rhs = float(np.sum(jac * 2.0 * k_ext * support))
    return abs(int_h - rhs) / abs(int_h)


@dataclass(frozen=True)
class HerglotzReport:
    total_mean_curvature_diff: float
    herglotz_rhs: float
    max_second_form_diff: float
    aligned_coordinate_rms: float


def herglotz_report(sigma_hat, emb1, emb2, residual_tol=1e-6):
    """Uniqueness diagnostics for two embeddings of one metric.

    All three report entries vanish (to solver accuracy) exactly when the two
    embeddings differ by a rigid motion, which is what uniqueness of the
    convex embedding predicts.
    """
    same_grid(sigma_hat, emb1.induced_metric())
    for which, emb in (("first", emb1), ("second", emb2)):
        rel = _isometry_defect(sigma_hat, emb)
        if rel > residual_tol:
            raise PreconditionError(
                f"{which} embedding is not isometric for the given metric "
                f"(residual {rel:.3e} > {residual_tol:.1e})")
    g1 = extract_geometry(emb1)
    g2 = extract_geometry(emb2)
    int_h1 = calc.integrate(sigma_hat, g1.mean_curvature)
    int_h2 = calc.integrate(sigma_hat, g2.mean_curvature)
    dh = SymTensor2(sigma_hat.grid,
                    g1.second_form.tt - g2.second_form.tt,
                    g1.second_form.tp - g2.second_form.tp,
                    g1.second_form.pp - g2.second_form.pp)
    det_rel = dh.det() / sigma_hat.det()
    grid = sigma_hat.grid
    jac = grid.quad_weights * sigma_hat.sqrt_det() / grid.sin_theta[:, None]
    support = (emb1.xyz * g1.normal).sum(0)
    rhs = float(np.sum(jac * 2.0 * det_rel * support))
    max_dh = float(max(np.max(np.abs(dh.tt)), np.max(np.abs(dh.tp)),
                       np.max(np.abs(dh.pp))))
    _, rms = align_rigid(emb2.xyz, emb1.xyz, grid.quad_weights)
    return HerglotzReport(
        total_mean_curvature_diff=int_h1 - int_h2,
        herglotz_rhs=rhs,
        max_second_form_diff=max_dh,
        aligned_coordinate_rms=rms,
    )


def _isometry_defect(sigma_hat, emb):
    ind = emb.induced_metric()
    scale = max(np.max(np.abs(sigma_hat.tt)), np.max(np.abs(sigma_hat.pp)))
    return max(np.max(np.abs(ind.tt - sigma_hat.tt)),
               np.max(np.abs(ind.tp - sigma_hat.tp)),
               np.max(np.abs(ind.pp - sigma_hat.pp))) / scale


def align_rigid(xyz, target, weights):
    """Best rigid motion (orthogonal map + shift) taking xyz onto target.

    Returns the transformed copy of ``xyz`` and the weighted rms distance to
    ``target``. Reflections are allowed: convex-embedding uniqueness is up to
    the full isometry group.
    """
    w = weights / weights.sum()
    a = xyz.reshape(3, -1)
    b = target.reshape(3, -1)
    wf = w.ravel()
    ca = (a * wf).sum(1)
    cb = (b * wf).sum(1)
    a0 = a - ca[:, None]
    b0 = b - cb[:, None]
    m = (b0 * wf) @ a0.T
    u, _, vt = np.linalg.svd(m)
    rot = u @ vt
    mapped = rot @ a0 + cb[:, None]
    rms = float(np.sqrt((wf * ((mapped - b) ** 2).sum(0)).sum()))
    return mapped.reshape(xyz.shape), rms


@dataclass(frozen=True)
class GraphEmbedding:
    """Spacelike surface in Minkowski space built as a graph over a convex base.

    ``time`` is the height function, ``space`` the convex base embedding of
    the graph metric, ``mean_vec`` the Minkowski mean-curvature vector
    (time component first) and ``h0_sq`` its Lorentz norm squared.
    """

    time: ScalarField
    space: EmbeddingR3
    sigma: Metric2
    sigma_hat: Metric2
    mean_vec: np.ndarray          # (4, n_theta, n_phi)
    h0_sq: ScalarField
    lorentz_residual: float


def graph_embedding(sigma, tau, solver=None, opts=None):
    """Lift (sigma, tau) to X = (tau, X_space) in Minkowski space.

    The spatial part isometrically embeds sigma + dtau (x) dtau; the induced
    Lorentz metric of the graph then reproduces sigma up to solver residual.
    The mean-curvature vector is computed as the sigma-Laplacian of the four
    coordinate functions.
    """
    grid = same_grid(sigma, tau)
    sigma_hat = calc.metric_add_dtau(sigma, tau)
    calc.require_positive_curvature(sigma_hat, "graph metric", PreconditionError)
    if solver is None:
        solver = WeylSolver(grid, opts)
    emb = solver.solve(sigma_hat, check_curvature=False)

    lap_t = calc.laplacian(sigma, tau).values
    lap_x = np.stack([calc.laplacian(sigma, ScalarField(grid, c)).values
                      for c in emb.xyz])
    mean_vec = np.concatenate([lap_t[None], lap_x])
    h0_sq = (lap_x * lap_x).sum(0) - lap_t ** 2

    ind = emb.induced_metric()
    df = calc.gradient(sigma, tau)
    scale = max(np.max(np.abs(sigma.tt)), np.max(np.abs(sigma.pp)))
    lorentz_residual = max(
        np.max(np.abs(ind.tt - df.a_theta ** 2 - sigma.tt)),
        np.max(np.abs(ind.tp - df.a_theta * df.a_phi - sigma.tp)),
        np.max(np.abs(ind.pp - df.a_phi ** 2 - sigma.pp))) / scale
    return GraphEmbedding(
        time=tau, space=emb, sigma=sigma, sigma_hat=sigma_hat,
        mean_vec=mean_vec, h0_sq=ScalarField(grid, h0_sq),
        lorentz_residual=float(lorentz_residual))
