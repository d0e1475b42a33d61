"""Surface formulation ``(S_Gamma + Z) u = f`` on the sphere, field reconstruction
and the energy / radiation diagnostics.

Exterior fields are expanded in TE and TM multipoles. With ``rho = omega r``,
``Y, U0, V0`` the unit-sphere harmonics and ``s = sqrt(n(n+1))``::

    E = sum c z V0 - i d (Z'/rho) U0 - i s d (z/rho) Y r_hat
    H = sum d z V0 + i c (Z'/rho) U0 + i s c (z/rho) Y r_hat

where ``z`` is ``h_n`` (outgoing) or ``j_n`` (regular) and ``Z = rho z``.
``c`` is the TE amplitude and ``d`` the TM amplitude.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from . import spectral_core as sc
from .errors import DomainError, ParameterError, ResonanceError
from .quadrature import SphereQuadrature
from .special_functions import (
    Kind,
    angular_tables,
    mode_count,
    mode_list,
    riccati_table,
    sph_bessel_table,
    spherical_frame,
)
from .spectral_core import SpectralTangentField


# ---------------------------------------------------------------------------
# Incident fields
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True, eq=False)
class PlaneWave:
    """``E = p exp(i omega x.d)``, ``H = (d x p) exp(i omega x.d)``."""
    d: np.ndarray
    p: np.ndarray
    omega: float

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        p = np.asarray(self.p, dtype=complex)
        if not math.isclose(np.linalg.norm(d), 1.0, rel_tol=1e-12):
            raise ParameterError("plane-wave direction must be a unit vector")
        if abs(np.dot(d, p)) > 1e-12 * max(1.0, np.linalg.norm(p)):
            raise ParameterError("plane-wave polarisation must satisfy d . p = 0")
        if self.omega <= 0:
            raise ParameterError("omega must be positive")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "p", p)

    @property
    def amplitude(self):
        return float(np.linalg.norm(self.p))

    def fields(self, x):
        x = np.asarray(x, dtype=float)
        phase = np.exp(1j * self.omega * (x @ self.d))[..., None]
        return phase * self.p, phase * np.cross(self.d, self.p)


@dataclasses.dataclass(frozen=True, eq=False)
class Dipole:
    """Point dipole (electric or magnetic) radiating from ``position``."""
    moment: np.ndarray
    position: np.ndarray
    omega: float
    electric: bool = True

    def __post_init__(self):
        object.__setattr__(self, "moment", np.asarray(self.moment, dtype=complex))
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        if self.omega <= 0:
            raise ParameterError("omega must be positive")

    @property
    def amplitude(self):
        return 1.0

    def fields(self, x):
        x = np.asarray(x, dtype=float) - self.position
        k = self.omega
        r = np.linalg.norm(x, axis=-1)[..., None]
        n = x / r
        p = np.broadcast_to(self.moment, x.shape)
        g = np.exp(1j * k * r) / r
        nxp = np.cross(n, p)
        H = k**2 * nxp * g * (1.0 - 1.0 / (1j * k * r))
        n_dot_p = np.sum(n * p, axis=-1)[..., None]
        E = k**2 * np.cross(nxp, n) * g + (3.0 * n * n_dot_p - p) * (1.0 / r**3 - 1j * k / r**2) * np.exp(1j * k * r)
        if self.electric:
            return E, H
        return -H, E


# ---------------------------------------------------------------------------
# Multipole machinery
# ---------------------------------------------------------------------------

def _radial(kind, nmax, rho):
    z = sph_bessel_table(kind, nmax, rho)
    _, dZ = riccati_table(kind, nmax, rho)
    return z, dZ


def outgoing_amplitudes(u: SpectralTangentField, omega):
    """TE and TM amplitudes ``(c, d)`` of the radiating field with ``H_T = u`` on ``r = a``."""
    x = omega * u.a
    h, dxi = _radial(Kind.H1, u.nmax, x)
    n = u.degrees
    c = u.alpha * omega / (1j * dxi[n])
    d = u.beta / (u.a * h[n])
    return c, d


def regular_traces(c, d, nmax, omega, a):
    """``(nu x E, H_T)`` on ``r = a`` of a regular (entire) multipole field."""
    x = omega * a
    j, dpsi = _radial(Kind.J, nmax, x)
    n = np.array([nn for nn, _ in mode_list(nmax)])
    nxe = SpectralTangentField(nmax, a, -c * a * j[n], -1j * d * dpsi[n] / omega)
    ht = SpectralTangentField(nmax, a, 1j * c * dpsi[n] / omega, d * a * j[n])
    return nxe, ht


def multipole_fields(c, d, nmax, omega, x, kind=Kind.H1):
    """Evaluate a TE/TM multipole expansion at Cartesian points ``x`` (shape ``(..., 3)``)."""
    x = np.asarray(x, dtype=float)
    shape = x.shape[:-1]
    pts = x.reshape(-1, 3)
    r = np.linalg.norm(pts, axis=1)
    theta = np.arccos(np.clip(pts[:, 2] / r, -1.0, 1.0))
    phi = np.arctan2(pts[:, 1], pts[:, 0])
    rho = omega * r
    z, dZ = _radial(kind, nmax, rho)
    Yt, A, B, ms = angular_tables(nmax, theta)
    n = np.array([nn for nn, _ in mode_list(nmax)])
    s = np.sqrt(n * (n + 1.0))[:, None]
    e = np.exp(1j * ms[:, None] * phi[None, :])
    zn, dn = z[n], dZ[n] / rho
    c = np.asarray(c)[:, None]
    d = np.asarray(d)[:, None]
    E_t = np.sum(e * (-c * zn * B - 1j * d * dn * A), axis=0)
    E_p = np.sum(e * (c * zn * A - 1j * d * dn * B), axis=0)
    E_r = np.sum(e * (-1j * s * d * zn / rho * Yt), axis=0)
    H_t = np.sum(e * (-d * zn * B + 1j * c * dn * A), axis=0)
    H_p = np.sum(e * (d * zn * A + 1j * c * dn * B), axis=0)
    H_r = np.sum(e * (1j * s * c * zn / rho * Yt), axis=0)
    rh, th, ph = spherical_frame(theta, phi)
    E = E_r[:, None] * rh + E_t[:, None] * th + E_p[:, None] * ph
    H = H_r[:, None] * rh + H_t[:, None] * th + H_p[:, None] * ph
    return E.reshape(shape + (3,)), H.reshape(shape + (3,))


def plane_wave_amplitudes(inc: PlaneWave, nmax):
    """Closed-form regular TE/TM amplitudes of a plane wave travelling along +z."""
    if not np.allclose(inc.d, [0.0, 0.0, 1.0], atol=1e-14):
        raise ParameterError("closed-form expansion implemented for d = z_hat only")
    px, py = inc.p[0], inc.p[1]
    K = mode_count(nmax)
    c = np.zeros(K, complex)
    d = np.zeros(K, complex)
    for k, (n, m) in enumerate(mode_list(nmax)):
        if abs(m) != 1:
            continue
        amp = math.sqrt(math.pi * (2 * n + 1))
        sgn = -1.0 if m == 1 else 1.0
        # x-polarised part
        c[k] += px * 1j ** (n - 1) * amp
        d[k] += px * sgn * 1j**n * amp
        # y-polarised part
        c[k] += py * sgn * 1j**n * amp
        d[k] += py * 1j ** (n + 1) * amp
    return c, d


def _quadrature_for(nmax, omega, radius, extra=0):
    n_theta = int(2 * nmax + math.ceil(omega * radius) + 16 + extra)
    return SphereQuadrature(n_theta, 2 * n_theta, radius)


def _project_traces(inc, a, nmax, extra):
    quad = _quadrature_for(nmax, inc.omega, a, extra)
    E, H = inc.fields(quad.points)
    nu = quad.r_hat
    nxe = np.cross(nu, E)
    ht = H - np.sum(H * nu, axis=-1)[..., None] * nu
    a1, b1 = quad.project_tangent(nxe, nmax)
    a2, b2 = quad.project_tangent(ht, nmax)
    return SpectralTangentField(nmax, a, a1, b1), SpectralTangentField(nmax, a, a2, b2)


def incident_traces(inc, a, nmax, method="quadrature", tol=1e-12, max_refine=4):
    """``(nu x E^i, H^i_T)`` on the sphere ``r = a`` as spectral fields.

    The quadrature path is checked against a finer grid and refined until the
    coefficients agree to ``tol`` relative; persistent disagreement raises.
    """
    if method == "closed_form":
        c, d = plane_wave_amplitudes(inc, nmax)
        return regular_traces(c, d, nmax, inc.omega, a)
    if method != "quadrature":
        raise ParameterError(f"unknown expansion method {method!r}")
    extra = 0
    coarse = _project_traces(inc, a, nmax, extra)
    for _ in range(max_refine):
        extra += 16
        fine = _project_traces(inc, a, nmax, extra)
        diff = (coarse[0] - fine[0]).norm_l2() + (coarse[1] - fine[1]).norm_l2()
        scale = fine[0].norm_l2() + fine[1].norm_l2()
        if diff <= tol * max(scale, 1e-300) or scale == 0.0:
            return fine
        coarse = fine
    raise ParameterError(f"surface quadrature did not resolve the incident field (N_max={nmax})")


def incident_trace(inc, model, a, nmax, method="quadrature"):
    """Right-hand side ``f = -(nu x E^i + Z H^i_T)``."""
    nxe, ht = incident_traces(inc, a, nmax, method)
    zh = sc.apply_operator(sc.Impedance(model, inc.omega), ht)
    return -(nxe + zh)


# ---------------------------------------------------------------------------
# Solve
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class SolveReport:
    u: SpectralTangentField
    mode_condition_numbers: np.ndarray  # indexed by degree 1..nmax
    energy_residual: float | None = None
    flux: float | None = None
    silver_muller: list = dataclasses.field(default_factory=list)
    far_field: list = dataclasses.field(default_factory=list)
    hypothesis: object = None
    warnings: list = dataclasses.field(default_factory=list)


def mode_matrix(model, n, omega, a):
    zu, zv = sc.impedance_eigenvalues(model, n, a, omega)
    return sc.calderon_block(n, omega, a).M + np.diag([zu, zv])


def solve_surface(f: SpectralTangentField, model, omega, a=None, nmax=None) -> SolveReport:
    """Solve ``S_Gamma u + Z u = f`` mode by mode."""
    a = f.a if a is None else a
    if not math.isclose(a, f.a, rel_tol=1e-12):
        raise ParameterError("right-hand side radius does not match a")
    if nmax is not None and nmax != f.nmax:
        f = f.truncated(nmax)
    nmax = f.nmax
    hyp = sc.hypothesis_check(model, omega)
    warnings = []
    if not hyp.uniqueness_ok:
        warnings.append("uniqueness hypothesis violated: " + ", ".join(hyp.violated_conditions))
    stable = sc.max_stable_degree(nmax, omega, a)
    if stable < nmax:
        warnings.append(f"Calderon entries overflow beyond n={stable}; truncating")
    alpha = np.zeros(mode_count(nmax), complex)
    beta = np.zeros(mode_count(nmax), complex)
    conds = np.full(nmax, np.nan)
    degrees = f.degrees
    for n in range(1, stable + 1):
        M = mode_matrix(model, n, omega, a)
        cond = np.linalg.cond(M)
        if not np.isfinite(cond) or cond > 1e14:
            raise ResonanceError(f"mode n={n} is resonant for {model!r} (cond={cond:.3g})", n=n, model=model)
        conds[n - 1] = cond
        idx = np.nonzero(degrees == n)[0]
        rhs = np.vstack([f.alpha[idx], f.beta[idx]])
        sol = np.linalg.solve(M, rhs)
        alpha[idx], beta[idx] = sol[0], sol[1]
    u = SpectralTangentField(nmax, a, alpha, beta)
    top = np.abs(np.concatenate([alpha[degrees == nmax], beta[degrees == nmax]]))
    scale = max(np.max(np.abs(alpha)), np.max(np.abs(beta)), 0.0)
    if scale > 0 and np.max(top) > 1e-12 * scale:
        warnings.append(f"solution has not decayed below 1e-12 at n={nmax}; increase N_max")
    return SolveReport(u=u, mode_condition_numbers=conds, hypothesis=hyp, warnings=warnings)


# ---------------------------------------------------------------------------
# Fields and diagnostics
# ---------------------------------------------------------------------------

def evaluate_fields(u: SpectralTangentField, omega, x):
    """Scattered ``(E, H)`` at points ``x`` with ``|x| > a``."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r <= u.a):
        raise DomainError("field evaluation requires |x| > a")
    c, d = outgoing_amplitudes(u, omega)
    return multipole_fields(c, d, u.nmax, omega, x)


def far_field_pattern(u: SpectralTangentField, omega, directions):
    """``E_inf`` with ``E^s(r x) = exp(i omega r)/r (E_inf(x) + O(1/r))``."""
    dirs = np.asarray(directions, dtype=float).reshape(-1, 3)
    dirs = dirs / np.linalg.norm(dirs, axis=1)[:, None]
    theta = np.arccos(np.clip(dirs[:, 2], -1.0, 1.0))
    phi = np.arctan2(dirs[:, 1], dirs[:, 0])
    c, d = outgoing_amplitudes(u, omega)
    _, A, B, ms = angular_tables(u.nmax, theta)
    n = u.degrees
    ph = ((-1j) ** (n + 1) / omega)[:, None]
    e = np.exp(1j * ms[:, None] * phi[None, :])
    cc, dd = c[:, None], d[:, None]
    # c V0 + d U0
    Ft = np.sum(ph * e * (-cc * B + dd * A), axis=0)
    Fp = np.sum(ph * e * (cc * A + dd * B), axis=0)
    _, th, pp = spherical_frame(theta, phi)
    return Ft[:, None] * th + Fp[:, None] * pp


def far_field_rcs(u: SpectralTangentField, omega, directions, incident_amplitude=1.0):
    """Radar cross section ``4 pi |E_inf|^2 / |E^i|^2`` per direction."""
    dirs = np.asarray(directions, dtype=float).reshape(-1, 3)
    Einf = far_field_pattern(u, omega, dirs)
    sigma = 4.0 * math.pi * np.sum(abs(Einf) ** 2, axis=1) / incident_amplitude**2
    return [(tuple(dv), float(sv)) for dv, sv in zip(dirs, sigma)]


def fields_on_sphere(c, d, nmax, omega, quad, kind=Kind.H1):
    """Multipole fields on a quadrature grid, summed degree-first then over ``m``."""
    rho = omega * quad.radius
    z, dZ = _radial(kind, nmax, rho)
    Yt, A, B, ms = quad.tables(nmax)
    n = np.array([nn for nn, _ in mode_list(nmax)])
    s = np.sqrt(n * (n + 1.0))
    zn, dn = z[n], dZ[n] / rho
    sel = np.zeros((ms.size, 2 * nmax + 1))
    sel[np.arange(ms.size), ms + nmax] = 1.0
    ephi = np.exp(1j * np.outer(np.arange(-nmax, nmax + 1), quad.phi1d))

    def synth(fa, fb, fy):
        g = (fa[:, None] * A + fb[:, None] * B + fy[:, None] * Yt).T @ sel
        return g @ ephi

    zero = np.zeros_like(zn * c)
    E_t = synth(-1j * d * dn, -c * zn, zero)
    E_p = synth(c * zn, -1j * d * dn, zero)
    E_r = synth(zero, zero, -1j * s * d * zn / rho)
    H_t = synth(1j * c * dn, -d * zn, zero)
    H_p = synth(d * zn, 1j * c * dn, zero)
    H_r = synth(zero, zero, 1j * s * c * zn / rho)
    E = E_r[..., None] * quad.r_hat + E_t[..., None] * quad.t_hat + E_p[..., None] * quad.p_hat
    H = H_r[..., None] * quad.r_hat + H_t[..., None] * quad.t_hat + H_p[..., None] * quad.p_hat
    return E, H


def _sphere_fields(u, omega, R, incident=None):
    quad = _quadrature_for(u.nmax, omega, R)
    c, d = outgoing_amplitudes(u, omega)
    E, H = fields_on_sphere(c, d, u.nmax, omega, quad)
    if incident is not None:
        Ei, Hi = incident.fields(quad.points)
        E, H = E + Ei, H + Hi
    return quad, E, H


def flux(u, omega, R, incident=None):
    """``(Re int_{|x|=R} (x_hat x E) . conj(H) ds, int |(x_hat x E) . conj(H)| ds)``."""
    quad, E, H = _sphere_fields(u, omega, R, incident)
    integrand = np.sum(np.cross(quad.r_hat, E) * np.conj(H), axis=-1)
    return float(quad.integrate(integrand).real), float(quad.integrate(abs(integrand)))


def energy_identity_residual(u, model, omega, R, incident=None, f=None):
    """Relative defect of ``-Re<Z H_T, H_T> = Re int_{|x|=R} (x_hat x E) . conj(H) ds``.

    With ``incident`` the identity is checked on the total field, which meets
    the homogeneous condition ``nu x E + Z H_T = 0``. Without it ``u`` is taken
    as a field with ``nu x E + Z H_T = f`` and the term ``Re<f, u>`` is added.
    The defect is normalised by ``|<Z H_T, H_T>| + int |(x_hat x E).conj(H)| ds``.
    """
    if R <= u.a:
        raise DomainError("R must exceed the scatterer radius")
    ht = u
    if incident is not None:
        _, ht_inc = incident_traces(incident, u.a, u.nmax)
        ht = u + ht_inc
    zpair = sc.pairing(sc.apply_operator(sc.Impedance(model, omega), ht), ht)
    fl, fl_abs = flux(u, omega, R, incident)
    src = 0.0 if (f is None or incident is not None) else sc.pairing(f, u).real
    scale = abs(zpair) + fl_abs + (abs(src) if f is not None else 0.0)
    if scale == 0.0:
        return 0.0
    return abs(zpair.real + fl - src) / scale


def silver_muller_residual(u, omega, R_list):
    """``int_{|x|=R} |H x x_hat - (x_hat x E) x x_hat|^2 ds`` for each ``R``."""
    out = []
    for R in R_list:
        if R <= u.a:
            raise DomainError("R must exceed the scatterer radius")
        quad, E, H = _sphere_fields(u, omega, R)
        xh = quad.r_hat
        q = np.cross(H, xh) - np.cross(np.cross(xh, E), xh)
        out.append((float(R), float(quad.integrate(np.sum(abs(q) ** 2, axis=-1)))))
    return out


def backscatter_direction(inc):
    return -np.asarray(inc.d, dtype=float)


def scatter(inc, model, a, nmax=None, energy_radii=None, sm_radii=None, directions=None,
            method="quadrature"):
    """Incident field -> right-hand side -> surface solve -> diagnostics."""
    omega = inc.omega
    nmax = nmax or sc.default_nmax(omega, a)
    f = incident_trace(inc, model, a, nmax, method)
    report = solve_surface(f, model, omega, a)
    u = report.u
    energy_radii = energy_radii or [2.0 * a]
    report.energy_residual = max(
        energy_identity_residual(u, model, omega, R, incident=inc) for R in energy_radii
    )
    fl, fl_abs = flux(u, omega, energy_radii[0], incident=inc)
    report.flux = fl / fl_abs if fl_abs > 0 else 0.0
    report.silver_muller = silver_muller_residual(u, omega, sm_radii or [4.0 * a, 8.0 * a, 16.0 * a])
    if directions is None:
        directions = [backscatter_direction(inc)] if isinstance(inc, PlaneWave) else [[0.0, 0.0, 1.0]]
    report.far_field = far_field_rcs(u, omega, directions, inc.amplitude)
    return report
