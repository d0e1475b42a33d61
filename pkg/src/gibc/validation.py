"""Invariant suites behind ``gibc validate``. Each check returns ``(name, passed, detail)``."""
from __future__ import annotations

import math

import numpy as np

from . import oracle_mie as om
from . import solver_surface as ss
from . import solver_volume as sv
from . import spectral_core as sc
from . import surface_calculus as scm
from .special_functions import Kind, Polarization, sph_bessel_table

PRESETS = {
    "scalar": sc.Scalar(1 + 0.5j),
    "full": sc.FullSecondOrder(1.0, 1 + 1j, -1 - 1j),
    "curl_only": sc.CurlOnly(1 + 0.5j, 0.5 + 0.5j),
    "div_only": sc.DivOnly(1j, -1j),
    "thin_coating_dielectric": sc.ThinCoating(0.01, 4.0),
    "thin_coating_metal": sc.ThinCoating(0.01, -2 + 0.1j),
}

# Per-mode Silver-Mueller residual of an outgoing wave decays like R^-4.
SM_RATIO = 1.0 / 16.0


def _z_pw(omega):
    return ss.PlaneWave([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], omega)


def check_special_functions():
    worst = 0.0
    for n in (0, 1, 5, 20, 50):
        for x in (0.1, 1.0, 7.3, 50.0):
            if n > 25 and x < 1.0:
                continue
            h = 1e-6 * x
            j = sph_bessel_table(Kind.J, n + 1, np.array([x - h, x, x + h]))
            y = sph_bessel_table(Kind.Y, n + 1, np.array([x - h, x, x + h]))
            dj = n / x * j[n, 1] - j[n + 1, 1]
            dy = n / x * y[n, 1] - y[n + 1, 1]
            w = j[n, 1] * dy - dj * y[n, 1]
            worst = max(worst, abs(w * x * x - 1.0))
    return "wronskian", worst <= 1e-10, f"max rel err {worst:.2e}"


def check_calderon_dipole():
    worst = 0.0
    for r in (1.0, 2.0):
        for electric in (True, False):
            dp = ss.Dipole([0.3, -0.2, 1.0], [0.0, 0.0, 0.0], 1.0, electric)
            nxe, ht = ss.incident_traces(dp, r, 4)
            diff = (sc.apply_operator(sc.Calderon(1.0), ht) - nxe).norm_l2()
            worst = max(worst, diff)
    return "calderon_dipole", worst <= 1e-8, f"max ||S H_T - nu x E|| = {worst:.2e}"


def mie_errors(model_lambda, ka, method="closed_form"):
    """Relative oracle errors ``(per-mode coefficient, backscatter RCS)``.

    With the closed-form right-hand side every mode is compared relatively. The
    quadrature right-hand side carries absolute rounding noise, so its
    coefficients are compared relative to the coefficient norm instead.
    """
    inc = _z_pw(ka)
    model = sc.Scalar(model_lambda)
    nmax = sc.default_nmax(ka, 1.0)
    f = ss.incident_trace(inc, model, 1.0, nmax, method)
    u = ss.solve_surface(f, model, ka, 1.0).u
    cs, ds = ss.outgoing_amplitudes(u, ka)
    ci, di = ss.plane_wave_amplitudes(inc, nmax)
    an, bn = om.mie_table(om.ImpedanceSurface(model_lambda), ka, 1.0, nmax)
    n = u.degrees
    ref_c, ref_d = bn[n - 1] * ci, an[n - 1] * di
    if method == "closed_form":
        live = ci != 0
        coef = max(np.max(abs(cs[live] - ref_c[live]) / abs(ref_c[live])),
                   np.max(abs(ds[live] - ref_d[live]) / abs(ref_d[live])))
    else:
        ref = np.concatenate([ref_c, ref_d])
        coef = np.linalg.norm(np.concatenate([cs, ds]) - ref) / np.linalg.norm(ref)
    back = [0.0, 0.0, -1.0]
    sig = ss.far_field_rcs(u, ka, [back])[0][1]
    sig_ref = om.mie_rcs(om.ImpedanceSurface(model_lambda), ka, 1.0, back)
    return float(coef), abs(sig - sig_ref) / sig_ref


def check_mie():
    worst = 0.0
    for ka in (0.5, 1.0, 2.0):
        for method in ("closed_form", "quadrature"):
            worst = max(worst, *mie_errors(1 + 0.5j, ka, method))
    return "mie_agreement", worst <= 1e-8, f"max rel err {worst:.2e}"


def energy_diagnostics(model, omega=1.0, a=1.0, radii=(2.0, 4.0)):
    inc = _z_pw(omega)
    nmax = sc.default_nmax(omega, a)
    f = ss.incident_trace(inc, model, a, nmax)
    rep = ss.solve_surface(f, model, omega, a)
    res = max(ss.energy_identity_residual(rep.u, model, omega, R * a, incident=inc) for R in radii)
    fl, fl_abs = ss.flux(rep.u, omega, radii[0] * a, incident=inc)
    return res, fl / fl_abs, rep


def check_energy():
    worst_res, worst_flux = 0.0, -np.inf
    for name, model in PRESETS.items():
        if not sc.hypothesis_check(model, 1.0).uniqueness_ok:
            continue
        res, flux, _ = energy_diagnostics(model)
        worst_res = max(worst_res, res)
        worst_flux = max(worst_flux, flux)
    ok = worst_res <= 1e-8 and worst_flux <= 1e-10
    return "energy_identity", ok, f"max residual {worst_res:.2e}, max normalised flux {worst_flux:.2e}"


def check_signs(trials=100, nmax=12):
    rng = np.random.default_rng(0)
    worst = np.inf
    for model in (PRESETS["full"], PRESETS["curl_only"], PRESETS["div_only"]):
        for _ in range(trials):
            u = sc.SpectralTangentField.random(nmax, 1.0, rng)
            val = sc.pairing(sc.apply_operator(sc.Impedance(model, 1.0), u), u).real
            worst = min(worst, val / u.norm_l2() ** 2)
    report = sc.hypothesis_check(sc.FullSecondOrder(1.0, 1 + 1j, -1 + 1j))
    flagged = any("opposite sign" in c for c in report.violated_conditions) and report.existence_route == "none"
    return "sign_hypotheses", worst >= -1e-12 and flagged, f"min Re<Zv,v>/|v|^2 = {worst:.3g}, same-sign flagged = {flagged}"


def check_equivalence():
    worst = 0.0
    for name in ("scalar", "curl_only", "div_only", "thin_coating_dielectric"):
        rep = sv.volume_surface_equivalence(PRESETS[name], 1.0, 1.0, _z_pw(1.0), 8)
        worst = max(worst, rep.max_rel_diff)
    return "volume_surface_equivalence", worst <= 1e-10, f"max rel diff {worst:.2e}"


def check_fem_rates():
    worst = np.inf
    for order in (1, 2):
        for pol in (Polarization.GRAD, Polarization.CURL):
            _, rates = sv.fem_convergence((2, 0), pol, PRESETS["div_only"], 1.0, 1.0, 2.0, order, (8, 16, 32))
            worst = min(worst, rates[-1] - (order + 1))
    return "fem_convergence", worst >= -0.2, f"min (rate - (order+1)) = {worst:.3f}"


def helmholtz_errors(lam, trials=50, nmax=8, omega=1.0):
    rng = np.random.default_rng(1)
    model = sc.Scalar(lam)
    recon = xres = idem = 0.0
    for _ in range(trials):
        u = sc.SpectralTangentField.random(nmax, 1.0, rng)
        p, w = sc.helmholtz_decompose_spectral(u, model, omega)
        g = sc.grad_of(p, nmax, 1.0)
        recon = max(recon, (g + w - u).norm_hdiv() + (g + w - u).norm_hcurl())
        xres = max(xres, float(np.max(abs(sc.x_membership_residual(w, model, omega)))))
        p2, w2 = sc.helmholtz_decompose_spectral(g + w, model, omega)
        idem = max(idem, float(np.max(abs(p2 - p))), (w2 - w).norm_l2())
    mult = min(abs(sc.as_mode_multiplier(model, n, omega, 1.0)) for n in range(1, 51))
    return recon, xres, idem, mult


def check_helmholtz():
    ok, parts = True, []
    for lam in (1.0, 1 + 1j):
        recon, xres, idem, mult = helmholtz_errors(lam)
        ok &= recon <= 1e-10 and xres <= 1e-12 and idem <= 1e-12 and mult > 0
        parts.append(f"lambda={lam}: recon {recon:.1e} X {xres:.1e} idem {idem:.1e}")
    return "helmholtz_decomposition", bool(ok), "; ".join(parts)


def mesh_identities(mesh, rng=None):
    rng = np.random.default_rng(rng)
    p = rng.standard_normal(mesh.n_vertices) + 1j * rng.standard_normal(mesh.n_vertices)
    v = scm.tangential_projection(mesh, rng.standard_normal((mesh.n_faces, 3)) + 1j * rng.standard_normal((mesh.n_faces, 3)))
    # adjointness: int grad(conj xi) . v + <xi, div v> = 0 with xi real-linear in the hat basis
    xi = rng.standard_normal(mesh.n_vertices)
    lhs = np.sum(mesh.areas * np.sum(scm.grad_gamma(mesh, xi) * v, axis=1))
    adj = abs(lhs + np.dot(xi, scm.weak_div_gamma(mesh, v))) / (np.linalg.norm(xi) * scm.l2_norm_faces(mesh, v))
    rot = np.max(abs(scm.weak_div_gamma(mesh, v) - scm.weak_curl_gamma(mesh, scm.rotate(mesh, v))))
    cg = np.max(abs(scm.weak_curl_gamma(mesh, scm.grad_gamma(mesh, p))))
    dc = np.max(abs(scm.weak_div_gamma(mesh, scm.curlvec_gamma(mesh, p))))
    return float(adj), float(rot), float(cg), float(dc)


def rayleigh_rates(levels=(2, 3, 4), n=2, m=1):
    hs, e1, e2 = [], [], []
    for L in levels:
        mesh = scm.icosphere(L)
        p = scm.sample_ylm(mesh, n, m)
        q1, q2 = scm.rayleigh_quotients(mesh, p)
        hs.append(mesh.h)
        e1.append(abs(q1 - n * (n + 1)))
        e2.append(abs(q2 - n * (n + 1)))
    rate = lambda e: math.log(e[-2] / e[-1]) / math.log(hs[-2] / hs[-1])  # noqa: E731
    return rate(e1), rate(e2)


def check_surface_calculus():
    adj, rot, cg, dc = mesh_identities(scm.icosphere(3), 0)
    r1, r2 = rayleigh_rates()
    ok = max(adj, rot, cg, dc) <= 1e-12 and min(r1, r2) >= 0.9
    return "surface_calculus", ok, f"identities {max(adj, rot, cg, dc):.1e}, Rayleigh rates {r1:.2f}/{r2:.2f}"


def sm_ratios(u, omega, a):
    vals = ss.silver_muller_residual(u, omega, [4 * a, 8 * a, 16 * a])
    return [vals[i + 1][1] / vals[i][1] for i in range(len(vals) - 1)]


def check_radiation():
    inc = _z_pw(1.0)
    rep = ss.scatter(inc, PRESETS["scalar"], 1.0)
    ratios = sm_ratios(rep.u, 1.0, 1.0)
    ok = all(abs(r / SM_RATIO - 1.0) <= 0.2 for r in ratios)
    return "radiation_condition", ok, "ratios " + ", ".join(f"{r:.4f}" for r in ratios) + " (law 1/16)"


def check_negative_eps():
    model = PRESETS["thin_coating_metal"]
    res, flux, rep = energy_diagnostics(model)
    cond = float(np.nanmax(rep.mode_condition_numbers))
    ok = cond < 1e6 and res <= 1e-8 and flux <= 1e-10
    return "negative_permittivity", ok, f"max cond {cond:.2e}, energy residual {res:.1e}"


SUITES = (
    check_special_functions, check_calderon_dipole, check_mie, check_energy, check_signs,
    check_equivalence, check_fem_rates, check_helmholtz, check_surface_calculus,
    check_radiation, check_negative_eps,
)


def run_all():
    rows = []
    for suite in SUITES:
        try:
            rows.append(suite())
        except Exception as exc:  # a crashing suite is a failing suite
            rows.append((suite.__name__.removeprefix("check_"), False, f"error: {exc}"))
    return rows

