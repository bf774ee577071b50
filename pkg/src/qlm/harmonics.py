"""Spectral differentiation and synthesis on Gauss-Legendre x uniform-phi grids.

Fields live on a tensor grid: Gauss-Legendre nodes in x = cos(theta) and
equispaced longitudes. Longitudinal derivatives are Fourier; colatitude
derivatives are computed by projecting each azimuthal Fourier mode onto a
normalized Legendre basis and differentiating the basis analytically.

The colatitude projection has to respect the pole behaviour of the quantity
being differentiated. The azimuthal mode m of a smooth *scalar* behaves like
sin(theta)^m near the poles when m is even, sin(theta)^(m-1)*sin(theta) when
odd; a tensor component with k theta-indices has that exponent shifted by k.
Only the parity (m + k) mod 2 matters: even-parity modes are exactly spanned
by Legendre polynomials P_l(x), odd-parity modes by the order-1 associated
functions P^1_l(x) (each times a polynomial). Using the matching family makes
the mode projection exact for band-limited fields, so derivatives of smooth
tensor components converge spectrally instead of stalling on sqrt(1-x^2)
endpoint singularities.

Callers therefore pass ``theta_rank``, the number of theta-indices carried by
the array being differentiated (a plain scalar has rank 0, the theta-component
of a one-form rank 1, and each d/dtheta raises the rank by one).
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidFieldError

__all__ = [
    "gauss_legendre_colatitude",
    "legendre_functions",
    "SphereTransform",
    "RealHarmonicBasis",
    "real_mode_table",
]


def gauss_legendre_colatitude(n_theta):
    """Gauss-Legendre nodes/weights reordered so theta increases from pole.

    Returns
    -------
    theta : (n_theta,) colatitudes in (0, pi)
    x : (n_theta,) cos(theta), decreasing
    w : (n_theta,) weights for integration in dx = sin(theta) dtheta
    """
    x, w = np.polynomial.legendre.leggauss(n_theta)
    order = np.argsort(-x)
    x = x[order]
    w = w[order]
    return np.arccos(x), x, w


def legendre_functions(m, lmax, x):
    """Normalized associated Legendre functions and their theta-derivatives.

    Returns ``P[k]`` and ``dP[k]`` sampled at ``x`` for degree l = m + k up to
    ``lmax``.  Normalization is orthonormal on [-1, 1]:
    integral of P_l^m * P_l'^m dx = delta.  The derivative is with respect to
    theta (x = cos(theta)), evaluated through the stable two-term recurrence
    sin(theta) * dP_l^m/dtheta = l*x*P_l^m - c(l, m)*P_(l-1)^m.
    """
    if lmax < m:
        raise ValueError("lmax must be >= m")
    x = np.asarray(x, dtype=float)
    sin_theta = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    n_l = lmax - m + 1
    p = np.zeros((n_l,) + x.shape)
    dp = np.zeros_like(p)

    # Seed P_m^m by the diagonal recurrence from P_0^0 = 1/sqrt(2).
    pmm = np.full_like(x, 1.0 / np.sqrt(2.0))
    for mu in range(1, m + 1):
        pmm = np.sqrt((2 * mu + 1) / (2.0 * mu)) * sin_theta * pmm
    p[0] = pmm
    if n_l > 1:
        p[1] = np.sqrt(2 * m + 3.0) * x * pmm
    for k in range(2, n_l):
        ell = m + k
        a = np.sqrt((4.0 * ell * ell - 1.0) / (ell * ell - m * m))
        b = np.sqrt(((2.0 * ell + 1.0) * ((ell - 1.0) ** 2 - m * m))
                    / ((2.0 * ell - 3.0) * (ell * ell - m * m)))
        p[k] = a * x * p[k - 1] - b * p[k - 2]

    inv_sin = 1.0 / sin_theta
    for k in range(n_l):
        ell = m + k
        if ell == 0:
            continue
        c = np.sqrt((ell * ell - m * m) * (2.0 * ell + 1.0) / (2.0 * ell - 1.0))
        below = p[k - 1] if k >= 1 else np.zeros_like(x)
        dp[k] = (ell * x * p[k] - c * below) * inv_sin
    return p, dp


class SphereTransform:
    """Derivative and quadrature engine bound to one collocation grid.

    Instances are immutable and cache the two dense colatitude
    differentiation matrices (one per pole parity).
    """

    def __init__(self, theta, x, w, n_phi):
        self.theta = theta
        self.x = x
        self.w = w
        self.n_theta = theta.size
        self.n_phi = int(n_phi)
        self.sin_theta = np.sin(theta)
        self._dtheta_mats = {}
        # Longitude wavenumbers for the real FFT layout.
        self._m = np.arange(self.n_phi // 2 + 1)

    def _dtheta_matrix(self, parity):
        """Dense matrix applying d/dtheta to one parity class of modes."""
        mat = self._dtheta_mats.get(parity)
        if mat is None:
            lmax = self.n_theta - 1
            if parity == 0:
                p, dp = legendre_functions(0, lmax, self.x)
            else:
                p, dp = legendre_functions(1, lmax, self.x)
            # Analysis by Gauss quadrature, synthesis with the derivative.
            mat = dp.T @ (p * self.w)
            self._dtheta_mats[parity] = mat
        return mat

    def dtheta(self, values, theta_rank):
        """d/dtheta of a tensor-component array carrying ``theta_rank`` indices."""
        f_hat = np.fft.rfft(values, axis=1)
        out = np.empty_like(f_hat)
        even_cols = (self._m + theta_rank) % 2 == 0
        odd_cols = ~even_cols
        if even_cols.any():
            out[:, even_cols] = self._dtheta_matrix(0) @ f_hat[:, even_cols]
        if odd_cols.any():
            out[:, odd_cols] = self._dtheta_matrix(1) @ f_hat[:, odd_cols]
        return np.fft.irfft(out, n=self.n_phi, axis=1)

    def dphi(self, values):
        """d/dphi by Fourier differentiation (Nyquist mode dropped)."""
        f_hat = np.fft.rfft(values, axis=1)
        f_hat *= 1j * self._m
        if self.n_phi % 2 == 0:
            f_hat[:, -1] = 0.0
        return np.fft.irfft(f_hat, n=self.n_phi, axis=1)

    def integrate_round(self, values):
        """Integral against sin(theta) dtheta dphi."""
        return float(2.0 * np.pi / self.n_phi * (self.w @ values.sum(axis=1)))

    def fourier_modes(self, values):
        """Complex azimuthal modes (unit-normalized): shape (n_theta, n_phi//2+1)."""
        return np.fft.rfft(values, axis=1) / self.n_phi

    def scalar_coefficients(self, values, lmax):
        """Legendre-mode energy table of a scalar field.

        Returns a (lmax+1, lmax+1) array ``c`` with ``c[l, m]`` the squared
        amplitude in degree l, azimuthal order m. Used for spectral-decay
        diagnostics.
        """
        modes = self.fourier_modes(values)
        out = np.zeros((lmax + 1, lmax + 1))
        m_top = min(lmax, self.n_phi // 2)
        for m in range(m_top + 1):
            p, _ = legendre_functions(m, lmax, self.x)
            re = p @ (self.w * modes[:, m].real)
            im = p @ (self.w * modes[:, m].imag)
            amp2 = re ** 2 + im ** 2
            if m > 0:
                amp2 = 2.0 * amp2
            out[m:, m] = amp2
        return out


def real_mode_table(lmax, lmin=0):
    """Mode list [(l, m, kind)] for the real harmonic basis.

    ``kind`` is 0 for the cos(m phi) branch (and the m = 0 zonal modes),
    1 for sin(m phi).
    """
    table = []
    for ell in range(lmin, lmax + 1):
        table.append((ell, 0, 0))
        for m in range(1, ell + 1):
            table.append((ell, m, 0))
            table.append((ell, m, 1))
    return table


class RealHarmonicBasis:
    """Dense real spherical-harmonic basis sampled on a grid.

    Rows are grid nodes (theta-major), columns the modes of
    :func:`real_mode_table`. The basis is orthonormal for the round measure,
    so analysis is a weighted transpose product. Three matrices are kept:
    values, d/dtheta, d/dphi.
    """

    def __init__(self, transform, lmax, lmin=0):
        if lmax > transform.n_theta - 1:
            raise InvalidFieldError(
                f"basis degree {lmax} exceeds grid support {transform.n_theta - 1}")
        if lmax >= transform.n_phi // 2:
            raise InvalidFieldError(
                f"basis degree {lmax} exceeds longitudinal Nyquist {transform.n_phi // 2 - 1}")
        self.lmax = lmax
        self.lmin = lmin
        self.transform = transform
        self.modes = real_mode_table(lmax, lmin)
        n_theta, n_phi = transform.n_theta, transform.n_phi
        phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
        n_nodes = n_theta * n_phi
        n_modes = len(self.modes)
        self.values = np.empty((n_nodes, n_modes))
        self.d_theta = np.empty((n_nodes, n_modes))
        self.d_phi = np.empty((n_nodes, n_modes))

        tables = {}
        for m in range(lmax + 1):
            tables[m] = legendre_functions(m, lmax, transform.x)
        inv_sqrt_pi = 1.0 / np.sqrt(np.pi)
        for col, (ell, m, kind) in enumerate(self.modes):
            p, dp = tables[m]
            k = ell - m
            if m == 0:
                azim = np.full(n_phi, 1.0 / np.sqrt(2.0 * np.pi))
                dazim = np.zeros(n_phi)
            elif kind == 0:
                azim = np.cos(m * phi) * inv_sqrt_pi
                dazim = -m * np.sin(m * phi) * inv_sqrt_pi
            else:
                azim = np.sin(m * phi) * inv_sqrt_pi
                dazim = m * np.cos(m * phi) * inv_sqrt_pi
            self.values[:, col] = np.outer(p[k], azim).ravel()
            self.d_theta[:, col] = np.outer(dp[k], azim).ravel()
            self.d_phi[:, col] = np.outer(p[k], dazim).ravel()

        w2d = np.repeat(transform.w, n_phi) * (2.0 * np.pi / n_phi)
        self.node_weights = w2d

    @property
    def n_modes(self):
        return len(self.modes)

    def synthesize(self, coeffs):
        """Field values (2D) from a real coefficient vector."""
        t = self.transform
        return (self.values @ coeffs).reshape(t.n_theta, t.n_phi)

    def synthesize_grad(self, coeffs):
        """(d_theta, d_phi) fields from a coefficient vector."""
        t = self.transform
        shape = (t.n_theta, t.n_phi)
        return ((self.d_theta @ coeffs).reshape(shape),
                (self.d_phi @ coeffs).reshape(shape))

    def analyze(self, values):
        """Round-measure projection of a field onto the basis."""
        return self.values.T @ (self.node_weights * values.ravel())

    def mode_index(self, ell, m=0, kind=0):
        return self.modes.index((ell, m, kind))
