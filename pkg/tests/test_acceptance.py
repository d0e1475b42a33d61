"""Acceptance criteria 1-9, one PASS/FAIL line each."""
import time

import numpy as np

from gibc import solver_surface as ss
from gibc import solver_volume as sv
from gibc import spectral_core as sc
from gibc import surface_calculus as scm
from gibc.special_functions import Polarization
from gibc.validation import PRESETS, energy_diagnostics, helmholtz_errors, mesh_identities, mie_errors, rayleigh_rates


def z_wave(omega=1.0):
    return ss.PlaneWave([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], omega)


def sm_ratios(u, omega, a):
    vals = ss.silver_muller_residual(u, omega, [4 * a, 8 * a, 16 * a])
    return [vals[i + 1][1] / vals[i][1] for i in range(len(vals) - 1)]


def test_criterion_1_scalar_oracle(criterion):
    t0 = time.perf_counter()
    worst_coef = worst_rcs = 0.0
    for ka in (0.5, 1.0, 2.0):
        coef, rcs = mie_errors(1 + 0.5j, ka)
        worst_coef, worst_rcs = max(worst_coef, coef), max(worst_rcs, rcs)
    elapsed = time.perf_counter() - t0
    ok = worst_coef <= 1e-8 and worst_rcs <= 1e-8 and elapsed < 5.0
    assert criterion(1, ok, f"per-mode rel err {worst_coef:.2e}, backscatter rel err {worst_rcs:.2e}, {elapsed:.2f} s")


def test_criterion_2_energy_identity(criterion):
    worst_res, worst_flux, names = 0.0, -np.inf, []
    for name, model in PRESETS.items():
        if not sc.hypothesis_check(model, 1.0).uniqueness_ok:
            continue
        res, flux, _ = energy_diagnostics(model, radii=(2.0, 4.0))
        worst_res, worst_flux = max(worst_res, res), max(worst_flux, flux)
        names.append(name)
    ok = worst_res <= 1e-8 and worst_flux <= 1e-10 and len(names) == len(PRESETS)
    assert criterion(2, ok, f"{len(names)} presets, max residual {worst_res:.2e}, max normalised flux {worst_flux:.2e}")


def test_criterion_3_sign_hypotheses(criterion):
    rng = np.random.default_rng(0)
    worst = np.inf
    models = [PRESETS[k] for k in ("full", "curl_only", "div_only", "thin_coating_dielectric", "thin_coating_metal")]
    for model in models:
        for _ in range(100):
            u = sc.SpectralTangentField.random(12, 1.0, rng)
            val = sc.pairing(sc.apply_operator(sc.Impedance(model, 1.0), u), u).real
            worst = min(worst, val / u.norm_l2() ** 2)
    bad = sc.hypothesis_check(sc.FullSecondOrder(1.0, 1 + 1j, -1 + 1j))
    flagged = any("opposite sign" in c for c in bad.violated_conditions)
    ok = worst >= -1e-12 and flagged
    assert criterion(3, ok, f"min Re<Zv,v>/|v|^2 = {worst:.2e}, same-sign model flagged = {flagged}")


def test_criterion_4_equivalence(criterion):
    worst = 0.0
    for name in ("scalar", "curl_only", "div_only"):
        worst = max(worst, sv.volume_surface_equivalence(PRESETS[name], 1.0, 1.0, z_wave(), 8).max_rel_diff)
    margin = np.inf
    for order in (1, 2):
        for pol in (Polarization.GRAD, Polarization.CURL):
            _, rates = sv.fem_convergence((2, 0), pol, PRESETS["scalar"], 1.0, 1.0, 2.0, order, (8, 16, 32, 64))
            margin = min(margin, rates[-1] - order)
    ok = worst <= 1e-10 and margin >= 0.8
    assert criterion(4, ok, f"max per-mode rel diff {worst:.2e}, min (FEM rate - order) {margin:.3f}")


def test_criterion_5_helmholtz(criterion):
    worst = [0.0, 0.0, 0.0]
    mult = np.inf
    for lam in (1.0, 1 + 1j):
        recon, xres, idem, m = helmholtz_errors(lam)
        worst = [max(w, v) for w, v in zip(worst, (recon, xres, idem))]
        mult = min(mult, m)
    ok = worst[0] <= 1e-10 and worst[1] <= 1e-12 and worst[2] <= 1e-12 and mult > 0
    assert criterion(5, ok, f"recon {worst[0]:.1e}, X residual {worst[1]:.1e}, idempotence {worst[2]:.1e}, "
                            f"min |t_n| (n <= 50) {mult:.2e}")


def test_criterion_6_surface_calculus(criterion):
    adj, rot, cg, dc = mesh_identities(scm.icosphere(3), 0)
    r1, r2 = rayleigh_rates((2, 3, 4), 2, 1)
    ok = max(adj, rot, cg, dc) <= 1e-12 and min(r1, r2) >= 0.9
    assert criterion(6, ok, f"adjointness {adj:.1e}, rot equality {rot:.1e}, curl grad {cg:.1e}, "
                            f"div curl {dc:.1e}, Rayleigh rates {r1:.2f}/{r2:.2f}")


def test_criterion_7_radiation_condition(criterion):
    rep = ss.scatter(z_wave(), PRESETS["scalar"], 1.0)
    ratios = sm_ratios(rep.u, 1.0, 1.0)
    ok = all(abs(r / 0.25 - 1.0) <= 0.2 for r in ratios)
    assert criterion(7, ok, "doubling ratios " + ", ".join(f"{r:.4f}" for r in ratios) + " against target 0.25")


def test_criterion_8_negative_permittivity(criterion):
    model = PRESETS["thin_coating_metal"]
    res, flux, rep = energy_diagnostics(model)
    cond = float(np.max(rep.mode_condition_numbers))
    ratios = sm_ratios(rep.u, 1.0, 1.0)
    energy_ok = res <= 1e-8 and flux <= 1e-10
    sm_ok = all(abs(r / 0.25 - 1.0) <= 0.2 for r in ratios)
    ok = cond < 1e6 and energy_ok and sm_ok
    assert criterion(8, ok, f"max cond {cond:.2e}, energy residual {res:.1e} (ok={energy_ok}), "
                            "doubling ratios " + ", ".join(f"{r:.4f}" for r in ratios) + " against 0.25")


def test_criterion_9_calderon_dipole(criterion):
    worst = 0.0
    for r in (1.0, 2.0):
        for electric in (True, False):
            dp = ss.Dipole([0.3, -0.2, 1.0], [0.0, 0.0, 0.0], 1.0, electric)
            nxe, ht = ss.incident_traces(dp, r, 4)
            worst = max(worst, (sc.apply_operator(sc.Calderon(1.0), ht) - nxe).norm_l2())
    assert criterion(9, worst <= 1e-8, f"max ||S(H_T) - nu x E|| = {worst:.2e}")
