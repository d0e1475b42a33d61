import numpy as np
import pytest

from gibc import oracle_mie as om
from gibc import solver_surface as ss
from gibc import spectral_core as sc
from gibc.errors import DomainError, ParameterError, ResonanceError
from gibc.quadrature import SphereQuadrature
from gibc.spectral_core import SpectralTangentField as STF
from gibc.validation import SM_RATIO, mie_errors


def pw(omega=1.0, p=(1.0, 0.0, 0.0)):
    return ss.PlaneWave([0.0, 0.0, 1.0], list(p), omega)


def test_plane_wave_invariants():
    with pytest.raises(ParameterError):
        ss.PlaneWave([0, 0, 1], [0, 0, 1], 1.0)
    with pytest.raises(ParameterError):
        ss.PlaneWave([0, 0, 2], [1, 0, 0], 1.0)
    x = np.array([[0.2, -0.4, 0.7]])
    inc = pw(1.3)
    h = 1e-5
    # curl H + i omega E = 0 by central differences
    E, H = inc.fields(x)
    J = np.zeros((3, 3), complex)
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        J[:, k] = (inc.fields(x + e)[1] - inc.fields(x - e)[1])[0] / (2 * h)
    curl = np.array([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])
    assert np.max(abs(curl + 1j * 1.3 * E[0])) <= 1e-8


def test_zero_polarisation_gives_zero_data():
    f = ss.incident_trace(pw(p=(0, 0, 0)), sc.Scalar(1.0), 1.0, 6)
    assert f.norm_l2() == 0


def test_scalar_zero_reduces_to_electric_trace():
    inc = pw()
    nxe, _ = ss.incident_traces(inc, 1.0, 8)
    f = ss.incident_trace(inc, sc.Scalar(0.0), 1.0, 8)
    assert (f + nxe).norm_l2() == 0


@pytest.mark.parametrize("p", [(1, 0, 0), (0, 1, 0), (1, 0.5j, 0)])
def test_quadrature_matches_closed_form(p):
    for omega in (1.0, 2.5):
        inc = pw(omega, p)
        q = ss.incident_trace(inc, sc.FullSecondOrder(1, 1 + 1j, -1 - 1j), 1.0, 12)
        c = ss.incident_trace(inc, sc.FullSecondOrder(1, 1 + 1j, -1 - 1j), 1.0, 12, method="closed_form")
        assert np.max(abs(np.concatenate([q.alpha - c.alpha, q.beta - c.beta]))) <= 1e-10


def test_regular_expansion_reproduces_plane_wave():
    inc = pw(1.0, (0.3, 1.0, 0))
    c, d = ss.plane_wave_amplitudes(inc, 30)
    x = np.random.default_rng(0).uniform(-1.5, 1.5, (20, 3))
    E, H = ss.multipole_fields(c, d, 30, 1.0, x, kind=ss.Kind.J)
    Ei, Hi = inc.fields(x)
    assert np.max(abs(E - Ei)) <= 1e-12 and np.max(abs(H - Hi)) <= 1e-12


def test_unresolved_quadrature_raises():
    with pytest.raises(ParameterError):
        ss.incident_traces(pw(60.0), 1.0, 3, max_refine=1, tol=1e-15)


def test_solve_zero_and_linearity():
    model = sc.FullSecondOrder(1, 1 + 1j, -1 - 1j)
    zero = ss.solve_surface(STF.zeros(8, 1.0), model, 1.0)
    assert zero.u.norm_l2() == 0
    rng = np.random.default_rng(4)
    f1, f2 = STF.random(8, 1.0, rng), STF.random(8, 1.0, rng)
    c = 0.3 - 1.2j
    u1 = ss.solve_surface(f1, model, 1.0).u
    u2 = ss.solve_surface(f2, model, 1.0).u
    u12 = ss.solve_surface(f1 + f2 * c, model, 1.0).u
    assert (u12 - u1 - u2 * c).norm_l2() <= 1e-12 * u12.norm_l2()


def test_solution_satisfies_operator_equation():
    model = sc.CurlOnly(0.4 + 1j, 0.2 - 0.3j)
    f = STF.random(10, 1.3, 9)
    u = ss.solve_surface(f, model, 0.8).u
    lhs = sc.apply_operator(sc.Calderon(0.8), u) + sc.apply_operator(sc.Impedance(model, 0.8), u)
    assert (lhs - f).norm_l2() <= 1e-12 * f.norm_l2()


def test_condition_numbers_and_report_fields():
    rep = ss.scatter(pw(), sc.Scalar(1 + 0.5j), 1.0)
    assert np.all(rep.mode_condition_numbers >= 1.0)
    assert np.isfinite(rep.energy_residual)
    assert all(np.isfinite(v) for _, v in rep.silver_muller)
    assert len(rep.far_field) == 1


def test_resonance_raises():
    # z_V = -S_VV makes the V block singular
    n, omega, a = 1, 1.0, 1.0
    s_vv = sc.calderon_block(n, omega, a).M[1, 1]
    with pytest.raises(ResonanceError) as info:
        ss.solve_surface(STF.random(2, a, 0), sc.Scalar(-s_vv), omega)
    assert info.value.n == 1


def test_truncation_warning():
    rep = ss.solve_surface(STF.random(3, 1.0, 0), sc.Scalar(1.0), 1.0)
    assert any("N_max" in w for w in rep.warnings)


def test_violation_is_flagged_not_raised():
    rep = ss.solve_surface(STF.random(4, 1.0, 0), sc.FullSecondOrder(1, 1 + 1j, -1 + 1j), 1.0)
    assert rep.hypothesis.existence_route == "none"
    assert rep.warnings


@pytest.mark.parametrize("ka", [0.5, 1.0, 2.0])
def test_scalar_impedance_matches_mie(ka):
    coef, rcs = mie_errors(1 + 0.5j, ka)
    assert coef <= 1e-8 and rcs <= 1e-8
    coef_q, rcs_q = mie_errors(1 + 0.5j, ka, method="quadrature")
    assert coef_q <= 1e-8 and rcs_q <= 1e-8


def test_pec_rcs_matches_mie():
    inc = pw(1.0)
    rep = ss.scatter(inc, sc.Scalar(0.0), 1.0)
    sig = rep.far_field[0][1]
    ref = om.mie_rcs(om.PEC(), 1.0, 1.0, [0, 0, -1])
    assert abs(sig - ref) <= 1e-8 * ref
    dirs = [[np.sin(t) * np.cos(0.4), np.sin(t) * np.sin(0.4), np.cos(t)] for t in np.linspace(0, np.pi, 9)]
    for (d, s) in ss.far_field_rcs(rep.u, 1.0, dirs):
        assert abs(s - om.mie_rcs(om.PEC(), 1.0, 1.0, d)) <= 1e-8 * max(s, 1e-3)


def test_negative_permittivity_thin_coating():
    rep = ss.scatter(pw(), sc.ThinCoating(0.01, -2 + 0.1j), 1.0)
    conds = rep.mode_condition_numbers
    assert np.all(np.isfinite(conds)) and np.max(conds) < 1e6


def test_evaluate_fields_zero_and_domain():
    u = STF.zeros(4, 1.0)
    E, H = ss.evaluate_fields(u, 1.0, [[0, 0, 2.0]])
    assert np.all(E == 0) and np.all(H == 0)
    with pytest.raises(DomainError):
        ss.evaluate_fields(u, 1.0, [[0, 0, 0.5]])


def test_fields_satisfy_maxwell():
    u = STF.random(6, 1.0, 8)
    omega, a = 1.4, 1.0
    h = 1e-4 * a
    rng = np.random.default_rng(1)
    for _ in range(5):
        x = rng.standard_normal(3)
        x *= 2 * a / np.linalg.norm(x)
        E, H = ss.evaluate_fields(u, omega, x[None])
        JE = np.zeros((3, 3), complex)
        JH = np.zeros((3, 3), complex)
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            Ep, Hp = ss.evaluate_fields(u, omega, (x + e)[None])
            Em, Hm = ss.evaluate_fields(u, omega, (x - e)[None])
            JE[:, k] = (Ep - Em)[0] / (2 * h)
            JH[:, k] = (Hp - Hm)[0] / (2 * h)
        curl = lambda J: np.array([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])  # noqa: E731
        scale = omega * max(np.linalg.norm(E), np.linalg.norm(H))
        assert np.linalg.norm(curl(JH) + 1j * omega * E[0]) <= 1e-6 * scale
        assert np.linalg.norm(curl(JE) - 1j * omega * H[0]) <= 1e-6 * scale


def test_trace_round_trip():
    u = STF.random(6, 1.2, 3)
    q = SphereQuadrature(30, 60, radius=1.2 * (1 + 1e-12))
    E, H = ss.evaluate_fields(u, 0.9, q.points)
    Ht = H - np.sum(H * q.r_hat, axis=-1)[..., None] * q.r_hat
    alpha, beta = q.project_tangent(Ht, 6)
    assert np.max(abs(np.concatenate([alpha - u.alpha, beta - u.beta]))) <= 1e-8 * np.max(abs(u.alpha))


def test_far_field_consistency():
    rep = ss.scatter(pw(1.0), sc.Scalar(1 + 0.5j), 1.0)
    dirs = np.array([[0, 0, -1.0], [0.6, 0, 0.8], [0, 1.0, 0]])
    Einf = ss.far_field_pattern(rep.u, 1.0, dirs)
    r = 1e6
    E, _ = ss.evaluate_fields(rep.u, 1.0, dirs * r)
    assert np.all(abs(np.linalg.norm(E, axis=1) * r - np.linalg.norm(Einf, axis=1)) <= 1e-4 * np.linalg.norm(Einf, axis=1))
    assert all(s == 0 for _, s in ss.far_field_rcs(STF.zeros(3, 1.0), 1.0, dirs))


@pytest.mark.parametrize("model", [sc.Scalar(1 + 0.5j), sc.FullSecondOrder(1, 1 + 1j, -1 - 1j),
                                   sc.DivOnly(1j, -1j), sc.ThinCoating(0.01, -2 + 0.1j)], ids=repr)
def test_energy_identity_total_field(model):
    inc = pw(1.0)
    f = ss.incident_trace(inc, model, 1.0, 15)
    u = ss.solve_surface(f, model, 1.0).u
    r2 = ss.energy_identity_residual(u, model, 1.0, 2.0, incident=inc)
    r4 = ss.energy_identity_residual(u, model, 1.0, 4.0, incident=inc)
    assert r2 <= 1e-8 and r4 <= 1e-8 and abs(r2 - r4) <= 1e-8
    fl, fl_abs = ss.flux(u, 1.0, 2.0, incident=inc)
    assert fl / fl_abs <= 1e-10


def test_energy_identity_scattered_field_with_source_term():
    model = sc.Scalar(1 + 0.5j)
    inc = pw(1.0)
    f = ss.incident_trace(inc, model, 1.0, 15)
    u = ss.solve_surface(f, model, 1.0).u
    assert ss.energy_identity_residual(u, model, 1.0, 2.0, f=f) <= 1e-8
    assert ss.energy_identity_residual(STF.zeros(5, 1.0), model, 1.0, 2.0) == 0.0


def test_silver_muller_zero_and_decay_law():
    assert all(v == 0 for _, v in ss.silver_muller_residual(STF.zeros(3, 1.0), 1.0, [4, 8, 16]))
    single = STF.single(4, 1.0, 1, 0, "V", 1.0)
    vals = ss.silver_muller_residual(single, 1.0, [4.0, 8.0, 16.0, 32.0])
    ratios = [vals[i + 1][1] / vals[i][1] for i in range(3)]
    assert all(abs(r / SM_RATIO - 1) <= 0.2 for r in ratios)
    rep = ss.scatter(pw(1.0), sc.Scalar(1 + 0.5j), 1.0)
    ratios = [rep.silver_muller[i + 1][1] / rep.silver_muller[i][1] for i in range(2)]
    assert all(abs(r / SM_RATIO - 1) <= 0.2 for r in ratios)


def test_truncation_robustness():
    for ka in (0.5, 2.0):
        inc = pw(ka)
        model = sc.Scalar(1 + 0.5j)
        n0 = sc.default_nmax(ka, 1.0)
        sig = []
        for n in (n0, 2 * n0):
            f = ss.incident_trace(inc, model, 1.0, n, method="closed_form")
            u = ss.solve_surface(f, model, ka).u
            sig.append(ss.far_field_rcs(u, ka, [[0, 0, -1.0]])[0][1])
        assert abs(sig[0] - sig[1]) <= 1e-10 * sig[1]


def test_dipole_incidence_runs():
    inc = ss.Dipole([1.0, 0, 0.5], [0, 0, 6.0], 1.0)
    rep = ss.scatter(inc, sc.Scalar(1.0), 1.0, nmax=20, energy_radii=[2.0, 4.0])
    assert rep.energy_residual <= 1e-8
