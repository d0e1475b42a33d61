"""Spherical Bessel/Hankel functions, Riccati derivatives and spherical harmonics.

Conventions
-----------
* ``h_n = j_n + i y_n`` (outgoing for the ``exp(-i omega t)`` time factor).
* ``Y_n^m`` is orthonormal on the unit sphere and carries the Condon-Shortley
  phase; ``Y_n^{-m} = (-1)^m conj(Y_n^m)``.
* ``U_n^m = grad_S Y_n^m / sqrt(n(n+1))`` and ``V_n^m = r_hat x U_n^m`` on the
  unit sphere. On a sphere of radius ``a`` both are divided by ``a`` so that
  they stay L2-orthonormal there.
* Modes are ordered by ``n`` ascending, then ``m`` ascending.
"""
from __future__ import annotations

import enum
import math

import numpy as np

from .errors import DomainError, RangeError

MAX_DEGREE = 200


class Kind(str, enum.Enum):
    J = "J"
    Y = "Y"
    H1 = "H1"


class Polarization(str, enum.Enum):
    GRAD = "U"  # gradient-like modes U_n^m
    CURL = "V"  # rotated modes V_n^m = nu x U_n^m


def _kind(kind) -> Kind:
    try:
        return Kind(kind.value if isinstance(kind, Kind) else str(kind).upper())
    except ValueError:
        raise DomainError(f"unknown Bessel kind {kind!r}") from None


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("spherical Bessel argument must be finite and > 0")
    return x


def _check_degree(n):
    if n < 0:
        raise DomainError(f"degree must be >= 0, got {n}")
    if n > MAX_DEGREE:
        raise RangeError(f"degree {n} exceeds supported maximum {MAX_DEGREE}")


# ---------------------------------------------------------------------------
# Bessel tables
# ---------------------------------------------------------------------------

def _jn_series(nmax, x):
    # Two-term-corrected power series, used for x < 1e-3.
    out = np.empty((nmax + 1,) + x.shape)
    lead = np.ones_like(x)
    x2 = x * x
    for n in range(nmax + 1):
        if n > 0:
            lead = lead * x / (2 * n + 1)
        c1 = x2 / (2 * (2 * n + 3))
        c2 = x2 * x2 / (8 * (2 * n + 3) * (2 * n + 5))
        out[n] = lead * (1.0 - c1 + c2)
    return out


def _jn_miller(nmax, x):
    # Miller's downward recurrence normalised against the closed forms of j0 or j1.
    top = int(max(nmax, float(np.max(x))))
    start = top + int(math.sqrt(40.0 * max(top, 1))) + 20
    f = np.zeros((start + 2,) + x.shape)
    f[start] = 1e-300
    for n in range(start, 0, -1):
        f[n - 1] = (2 * n + 1) / x * f[n] - f[n + 1]
        big = np.abs(f[n - 1]) > 1e250
        if np.any(big):
            f[n - 1:, big] *= 1e-250
    j0 = np.sin(x) / x
    j1 = np.sin(x) / x**2 - np.cos(x) / x
    use0 = np.abs(j0) >= np.abs(j1)
    scale = np.where(use0, j0 / np.where(use0, f[0], 1.0), j1 / np.where(use0, 1.0, f[1]))
    out = f[: nmax + 1] * scale
    out[0] = j0
    if nmax >= 1:
        out[1] = np.where(x > 1.0, j1, out[1])
    return out


def spherical_jn_table(nmax, x):
    """``j_n(x)`` for ``n = 0..nmax``; shape ``(nmax+1,) + x.shape``."""
    _check_degree(nmax)
    x = _check_x(x)
    small = x < 1e-3
    out = np.empty((nmax + 1,) + x.shape)
    if np.any(small):
        out[:, small] = _jn_series(nmax, x[small])
    if np.any(~small):
        out[:, ~small] = _jn_miller(nmax, x[~small])
    return out


def spherical_yn_table(nmax, x):
    """``y_n(x)`` for ``n = 0..nmax`` by upward recurrence (may contain inf)."""
    _check_degree(nmax)
    x = _check_x(x)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = -np.cos(x) / x
    if nmax >= 1:
        out[1] = -np.cos(x) / x**2 - np.sin(x) / x
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, nmax):
            out[n + 1] = (2 * n + 1) / x * out[n] - out[n - 1]
    return out


def sph_bessel_table(kind, nmax, x):
    kind = _kind(kind)
    if kind is Kind.J:
        return spherical_jn_table(nmax, x)
    if kind is Kind.Y:
        return spherical_yn_table(nmax, x)
    return spherical_jn_table(nmax, x) + 1j * spherical_yn_table(nmax, x)


def _minus_one(kind, x):
    # z_{-1}: j_{-1} = cos x / x, y_{-1} = sin x / x
    if kind is Kind.J:
        return np.cos(x) / x
    if kind is Kind.Y:
        return np.sin(x) / x
    return (np.cos(x) + 1j * np.sin(x)) / x


def riccati_table(kind, nmax, x):
    """Return ``(x z_n(x), d/dx[x z_n(x)])`` for ``n = 0..nmax``."""
    kind = _kind(kind)
    x = _check_x(x)
    z = sph_bessel_table(kind, nmax, x)
    zm1 = np.concatenate([_minus_one(kind, x)[None], z[:-1]], axis=0)
    n = np.arange(nmax + 1).reshape((-1,) + (1,) * x.ndim)
    with np.errstate(over="ignore", invalid="ignore"):
        return x * z, x * zm1 - n * z


def _finite_or_raise(value, what):
    if not np.all(np.isfinite(value)):
        raise RangeError(f"{what} overflows double precision")
    return value


def sph_bessel(kind, n: int, x):
    """Spherical Bessel function of the given kind: ``j_n``, ``y_n`` or ``h_n^(1)``."""
    _check_degree(n)
    val = sph_bessel_table(kind, n, x)[n]
    _finite_or_raise(val, f"sph_bessel({_kind(kind).value}, {n})")
    return val[()] if np.ndim(val) == 0 else val


def riccati_deriv(kind, n: int, x):
    """``d/dx [x z_n(x)]`` via ``(x z_n)' = x z_{n-1} - n z_n``."""
    kind = _kind(kind)
    _check_degree(n)
    _, d = riccati_table(kind, n, x)
    val = _finite_or_raise(d[n], f"riccati_deriv({kind.value}, {n})")
    return val[()] if np.ndim(val) == 0 else val


# ---------------------------------------------------------------------------
# Spherical harmonics
# ---------------------------------------------------------------------------

def mode_count(nmax: int) -> int:
    return (nmax + 1) ** 2 - 1


def mode_index(n: int, m: int) -> int:
    return n * n - 1 + m + n


def mode_list(nmax: int):
    return [(n, m) for n in range(1, nmax + 1) for m in range(-n, n + 1)]


def legendre_tables(nmax, theta):
    """Normalised associated Legendre data for ``m >= 0``.

    Returns ``(P, Q, dP)`` of shape ``(nmax+1, nmax+1) + theta.shape`` indexed
    ``[n, m]`` where ``P = Pbar_n^m(cos theta)`` (orthonormal, Condon-Shortley),
    ``Q = P / sin(theta)`` (finite at the poles, zero for m = 0) and
    ``dP = d P / d theta``.
    """
    theta = np.asarray(theta, dtype=float)
    ct, st = np.cos(theta), np.sin(theta)
    shape = (nmax + 1, nmax + 1) + theta.shape
    P = np.zeros(shape)
    Q = np.zeros(shape)
    dP = np.zeros(shape)

    # m = 0 column
    P[0, 0] = 1.0 / math.sqrt(4.0 * math.pi)
    if nmax >= 1:
        P[1, 0] = math.sqrt(3.0) * ct * P[0, 0]
    for n in range(2, nmax + 1):
        a = math.sqrt((4.0 * n * n - 1.0) / (n * n))
        b = math.sqrt(((n - 1.0) ** 2) / (4.0 * (n - 1.0) ** 2 - 1.0))
        P[n, 0] = a * (ct * P[n - 1, 0] - b * P[n - 2, 0])

    # m >= 1 columns via Q = P / sin(theta)
    diag_prev = P[0, 0] * np.ones_like(theta)  # Pbar_{m-1}^{m-1}
    for m in range(1, nmax + 1):
        Q[m, m] = -math.sqrt((2.0 * m + 1.0) / (2.0 * m)) * diag_prev
        if m + 1 <= nmax:
            Q[m + 1, m] = math.sqrt(2.0 * m + 3.0) * ct * Q[m, m]
        for n in range(m + 2, nmax + 1):
            a = math.sqrt((4.0 * n * n - 1.0) / (n * n - m * m))
            b = math.sqrt(((n - 1.0) ** 2 - m * m) / (4.0 * (n - 1.0) ** 2 - 1.0))
            Q[n, m] = a * (ct * Q[n - 1, m] - b * Q[n - 2, m])
        P[m:, m] = Q[m:, m] * st
        diag_prev = P[m, m]

    for n in range(1, nmax + 1):
        dP[n, 0] = math.sqrt(n * (n + 1.0)) * P[n, 1]
        for m in range(1, n + 1):
            c = math.sqrt((2.0 * n + 1.0) * (n * n - m * m) / (2.0 * n - 1.0))
            dP[n, m] = n * ct * Q[n, m] - c * Q[n - 1, m]
    return P, Q, dP


def ylm(n: int, m: int, theta, phi):
    """Orthonormal spherical harmonic ``Y_n^m(theta, phi)`` (Condon-Shortley phase)."""
    if n < 0 or abs(m) > n:
        raise DomainError(f"invalid (n, m) = ({n}, {m})")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    P, _, _ = legendre_tables(n, theta)
    val = P[n, abs(m)] * np.exp(1j * m * phi)
    if m < 0:
        val = val * (-1) ** (-m)
    return val[()] if np.ndim(val) == 0 else val


def angular_tables(nmax, theta):
    """Per-mode theta-dependence of ``Y``, ``U`` and ``V`` on the unit sphere.

    For mode ``k = mode_index(n, m)``:

    * ``Y_n^m = Yt[k] exp(i m phi)``
    * ``U_n^m = exp(i m phi) (A[k] theta_hat + B[k] phi_hat)``
    * ``V_n^m = exp(i m phi) (A[k] phi_hat - B[k] theta_hat)``

    Returns ``(Yt, A, B, ms)`` with arrays of shape ``(K,) + theta.shape``.
    """
    theta = np.asarray(theta, dtype=float)
    P, Q, dP = legendre_tables(nmax, theta)
    K = mode_count(nmax)
    Yt = np.zeros((K,) + theta.shape)
    A = np.zeros((K,) + theta.shape)
    B = np.zeros((K,) + theta.shape, dtype=complex)
    ms = np.zeros(K, dtype=int)
    for n in range(1, nmax + 1):
        s = math.sqrt(n * (n + 1.0))
        for m in range(-n, n + 1):
            k = mode_index(n, m)
            am = abs(m)
            sign = (-1) ** am if m < 0 else 1
            ms[k] = m
            Yt[k] = sign * P[n, am]
            A[k] = sign * dP[n, am] / s
            B[k] = 1j * m * sign * Q[n, am] / s
    return Yt, A, B, ms


def spherical_frame(theta, phi):
    """Unit vectors ``(r_hat, theta_hat, phi_hat)`` with trailing axis of size 3."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ct, st, cp, sp = np.cos(theta), np.sin(theta), np.cos(phi), np.sin(phi)
    r = np.stack([st * cp, st * sp, ct], axis=-1)
    t = np.stack([ct * cp, ct * sp, -st], axis=-1)
    p = np.stack([-sp, cp, np.zeros_like(ct)], axis=-1)
    return r, t, p


def vsh_eval(pol, mode, theta, phi, a: float = 1.0):
    """Tangential vector spherical harmonic ``U_n^m`` or ``V_n^m`` in Cartesian form.

    The result is L2-normalised on the sphere of radius ``a``.
    """
    n, m = mode
    if n < 1 or abs(m) > n:
        raise DomainError(f"invalid mode (n, m) = ({n}, {m})")
    pol = Polarization(pol)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    _, A, B, _ = angular_tables(n, theta)
    k = mode_index(n, m)
    _, th, ph = spherical_frame(theta, phi)
    e = np.exp(1j * m * phi)[..., None]
    if pol is Polarization.GRAD:
        val = e * (A[k][..., None] * th + B[k][..., None] * ph)
    else:
        val = e * (A[k][..., None] * ph - B[k][..., None] * th)
    return val / a
