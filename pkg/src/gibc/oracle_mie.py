"""Textbook Mie series for PEC and scalar-impedance spheres.

Independent reference for the surface solver: only the Riccati-Bessel tables
are shared. Incident field is ``E = x_hat exp(i k z)``; time factor ``exp(-i omega t)``.

Coefficients use the T-matrix sign (scattered / incident multipole amplitude):
``a_n`` for the TM (electric) multipoles, ``b_n`` for the TE (magnetic) ones.
For the condition ``nu x E + lam H_T = 0`` on ``r = a``::

    a_n = -(psi' + i lam psi) / (xi' + i lam xi)
    b_n = -(psi - i lam psi') / (xi - i lam xi')

``lam = 0`` is the perfect conductor.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from .special_functions import Kind, riccati_table


@dataclasses.dataclass(frozen=True)
class PEC:
    pass


@dataclasses.dataclass(frozen=True)
class ImpedanceSurface:
    lam: complex


@dataclasses.dataclass(frozen=True)
class MieCoefficients:
    n: int
    a_n: complex
    b_n: complex


def _lam(surface):
    if isinstance(surface, PEC):
        return 0.0
    if isinstance(surface, ImpedanceSurface):
        return complex(surface.lam)
    raise TypeError(f"unsupported surface {surface!r}")


def default_terms(x):
    return int(math.ceil(x + 4.05 * x ** (1.0 / 3.0) + 2)) + 10


def mie_table(surface, omega, a, nmax):
    """``(a_n, b_n)`` arrays for ``n = 1..nmax``."""
    x = omega * a
    psi, dpsi = riccati_table(Kind.J, nmax, x)
    xi, dxi = riccati_table(Kind.H1, nmax, x)
    psi, dpsi, xi, dxi = psi[1:], dpsi[1:], xi[1:], dxi[1:]
    if isinstance(surface, PEC):
        return -dpsi / dxi, -psi / xi
    lam = _lam(surface)
    an = -(dpsi + 1j * lam * psi) / (dxi + 1j * lam * xi)
    bn = -(psi - 1j * lam * dpsi) / (xi - 1j * lam * dxi)
    return an, bn


def mie_coefficients(surface, omega, a, n) -> MieCoefficients:
    if n < 1:
        raise ValueError("n must be >= 1")
    an, bn = mie_table(surface, omega, a, n)
    return MieCoefficients(n, complex(an[-1]), complex(bn[-1]))


def _pi_tau(nmax, mu):
    pi = np.zeros(nmax + 1)
    tau = np.zeros(nmax + 1)
    pi[1] = 1.0
    tau[1] = mu
    for n in range(2, nmax + 1):
        pi[n] = (2 * n - 1) / (n - 1) * mu * pi[n - 1] - n / (n - 1) * pi[n - 2]
        tau[n] = n * mu * pi[n] - (n + 1) * pi[n - 1]
    return pi[1:], tau[1:]


def amplitude_functions(surface, omega, a, theta, nmax=None):
    """Scattering amplitudes ``(S1, S2)`` at polar angle ``theta``."""
    nmax = nmax or default_terms(omega * a)
    an, bn = mie_table(surface, omega, a, nmax)
    # textbook amplitudes use the opposite sign
    an, bn = -an, -bn
    n = np.arange(1, nmax + 1)
    pi, tau = _pi_tau(nmax, math.cos(theta))
    w = (2 * n + 1) / (n * (n + 1.0))
    S1 = np.sum(w * (an * pi + bn * tau))
    S2 = np.sum(w * (an * tau + bn * pi))
    return complex(S1), complex(S2)


def mie_rcs(surface, omega, a, direction, nmax=None):
    """``4 pi |E_inf|^2`` for unit incident amplitude, ``d = z_hat``, ``p = x_hat``."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    theta = math.acos(max(-1.0, min(1.0, d[2])))
    phi = math.atan2(d[1], d[0])
    S1, S2 = amplitude_functions(surface, omega, a, theta, nmax)
    k = omega
    return 4.0 * math.pi / k**2 * (abs(S2) ** 2 * math.cos(phi) ** 2 + abs(S1) ** 2 * math.sin(phi) ** 2)


def cross_sections(surface, omega, a, nmax=None):
    """``(C_ext, C_sca)``; absorption is their difference."""
    nmax = nmax or default_terms(omega * a)
    an, bn = mie_table(surface, omega, a, nmax)
    n = np.arange(1, nmax + 1)
    k = omega
    c_ext = -2.0 * math.pi / k**2 * np.sum((2 * n + 1) * (an + bn).real)
    c_sca = 2.0 * math.pi / k**2 * np.sum((2 * n + 1) * (abs(an) ** 2 + abs(bn) ** 2))
    return float(c_ext), float(c_sca)


def power_balance(surface, omega, a, nmax=None):
    """Absorbed power ``C_ext - C_sca`` (nonnegative for passive surfaces)."""
    c_ext, c_sca = cross_sections(surface, omega, a, nmax)
    return c_ext - c_sca
