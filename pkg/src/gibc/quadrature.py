"""Product quadrature on spheres: Gauss-Legendre in cos(theta), trapezoid in phi."""
from __future__ import annotations

import numpy as np

from .special_functions import angular_tables, spherical_frame


class SphereQuadrature:
    """Tensor grid on the sphere of radius ``radius``.

    Exact for band-limited integrands of total degree below ``2 * n_theta``
    (theta) and ``n_phi`` (phi).
    """

    def __init__(self, n_theta, n_phi=None, radius=1.0):
        n_phi = n_phi or 2 * n_theta
        x, w = np.polynomial.legendre.leggauss(n_theta)
        self.theta1d = np.arccos(x)
        self.wtheta = w
        self.phi1d = 2.0 * np.pi * np.arange(n_phi) / n_phi
        self.radius = float(radius)
        self.theta, self.phi = np.meshgrid(self.theta1d, self.phi1d, indexing="ij")
        self.r_hat, self.t_hat, self.p_hat = spherical_frame(self.theta, self.phi)
        self.weights = np.outer(w, np.full(n_phi, 2.0 * np.pi / n_phi)) * self.radius**2
        self._tables = {}

    @property
    def points(self):
        return self.radius * self.r_hat

    @property
    def n_theta(self):
        return self.theta1d.size

    @property
    def n_phi(self):
        return self.phi1d.size

    def integrate(self, values):
        """Surface integral of a scalar grid function of shape ``(n_theta, n_phi)``."""
        return np.sum(self.weights * values)

    def tables(self, nmax):
        if nmax not in self._tables:
            self._tables[nmax] = angular_tables(nmax, self.theta1d)
        return self._tables[nmax]

    def _phi_transform(self, g, nmax):
        # G[m] = int_0^{2pi} g exp(-i m phi) dphi, for m = -nmax..nmax
        m = np.arange(-nmax, nmax + 1)
        ex = np.exp(-1j * np.outer(self.phi1d, m)) * (2.0 * np.pi / self.n_phi)
        return g @ ex  # (n_theta, 2 nmax + 1)

    def project_tangent(self, F, nmax):
        """L2 coefficients ``(alpha, beta)`` of a tangential field on the U/V basis.

        ``F`` has shape ``(n_theta, n_phi, 3)`` (Cartesian components).
        """
        Ft = np.sum(F * self.t_hat, axis=-1)
        Fp = np.sum(F * self.p_hat, axis=-1)
        Gt = self._phi_transform(Ft, nmax)
        Gp = self._phi_transform(Fp, nmax)
        _, A, B, ms = self.tables(nmax)
        cols = ms + nmax
        Gt_k = Gt[:, cols].T  # (K, n_theta)
        Gp_k = Gp[:, cols].T
        w = self.wtheta
        # Modes normalised on the radius-a sphere carry a factor 1/a; ds = a^2 dOmega.
        alpha = self.radius * np.sum(w * (Gt_k * np.conj(A) + Gp_k * np.conj(B)), axis=1)
        beta = self.radius * np.sum(w * (Gp_k * np.conj(A) - Gt_k * np.conj(B)), axis=1)
        return alpha, beta

    def project_scalar(self, g, nmax):
        """Coefficients on the radius-normalised harmonics ``Y / a`` (degrees 1..nmax)."""
        G = self._phi_transform(g, nmax)
        Yt, _, _, ms = self.tables(nmax)
        Gk = G[:, ms + nmax].T
        return self.radius * np.sum(self.wtheta * Gk * Yt, axis=1)

    def synthesize_tangent(self, alpha, beta, nmax):
        """Evaluate ``sum alpha U + beta V`` on the grid (Cartesian, radius-normalised)."""
        _, A, B, ms = self.tables(nmax)
        e = np.exp(1j * np.outer(ms, self.phi1d))  # (K, n_phi)
        ct = (alpha[:, None] * A - beta[:, None] * B)  # theta component, (K, n_theta)
        cp = (alpha[:, None] * B + beta[:, None] * A)
        Ft = np.einsum("kt,kp->tp", ct, e)
        Fp = np.einsum("kt,kp->tp", cp, e)
        return (Ft[..., None] * self.t_hat + Fp[..., None] * self.p_hat) / self.radius

