import math

import numpy as np
import pytest
import scipy.special as scs
from hypothesis import given, settings
from hypothesis import strategies as st

from gibc.errors import DomainError, RangeError
from gibc.quadrature import SphereQuadrature
from gibc.special_functions import (
    MAX_DEGREE,
    Kind,
    Polarization,
    mode_index,
    mode_list,
    riccati_deriv,
    sph_bessel,
    sph_bessel_table,
    spherical_frame,
    vsh_eval,
    ylm,
)


def test_j0_at_one_matches_power_series():
    series = sum((-1) ** k / math.factorial(2 * k + 1) for k in range(30))
    assert abs(sph_bessel(Kind.J, 0, 1.0) - series) <= 1e-15
    assert abs(sph_bessel(Kind.J, 0, 1.0) - 0.841470984807897) <= 1e-14


def test_h0_closed_form():
    expected = -1j * np.exp(1j * 1.0) / 1.0
    assert abs(sph_bessel(Kind.H1, 0, 1.0) - expected) <= 1e-15
    assert abs(sph_bessel(Kind.H1, 0, 1.0) - (0.841470984807897 - 0.540302305868140j)) <= 1e-14


def test_jn_vanishes_at_origin_limit():
    for n in (1, 2, 5):
        assert abs(sph_bessel(Kind.J, n, 1e-12)) <= 1e-12


def test_riccati_j0_at_pi():
    assert abs(riccati_deriv(Kind.J, 0, math.pi) - (-1.0)) <= 1e-14


@pytest.mark.parametrize("kind,n,x", [(Kind.J, 1, 1.0), (Kind.H1, 1, 2.0), (Kind.J, 7, 3.3), (Kind.H1, 4, 0.8)])
def test_riccati_deriv_finite_difference(kind, n, x):
    h = 1e-5
    fd = ((x + h) * sph_bessel(kind, n, x + h) - (x - h) * sph_bessel(kind, n, x - h)) / (2 * h)
    val = riccati_deriv(kind, n, x)
    assert abs(val - fd) <= 1e-8 * max(1.0, abs(val))


def test_matches_scipy_oracle():
    x = np.array([0.01, 0.3, 1.0, 4.7, 12.0, 49.0])
    for n in range(0, 40):
        j = sph_bessel_table(Kind.J, n, x)[n]
        y = sph_bessel_table(Kind.Y, n, x)[n]
        ref_j = scs.spherical_jn(n, x)
        ref_y = scs.spherical_yn(n, x)
        ok = np.abs(ref_j) > 1e-280
        assert np.all(abs(j[ok] - ref_j[ok]) <= 1e-12 * np.maximum(abs(ref_j[ok]), 1e-3 * np.max(abs(ref_j))))
        assert np.all(abs(y - ref_y) <= 1e-12 * abs(ref_y))


def test_wronskian():
    for n in range(0, 51):
        for x in np.linspace(0.1, 50.0, 25):
            if n > 30 and x < 2.0:
                continue  # y_n overflows double precision here
            j = sph_bessel_table(Kind.J, n + 1, x)
            y = sph_bessel_table(Kind.Y, n + 1, x)
            dj = n / x * j[n] - j[n + 1]
            dy = n / x * y[n] - y[n + 1]
            assert abs((j[n] * dy - dj * y[n]) * x * x - 1.0) <= 1e-10


@pytest.mark.parametrize("kind", [Kind.J, Kind.Y, Kind.H1])
def test_three_term_recurrence(kind):
    for x in (0.5, 3.0, 17.0):
        z = sph_bessel_table(kind, 30, x)
        for n in range(1, 30):
            lhs = z[n - 1] + z[n + 1]
            rhs = (2 * n + 1) * z[n] / x
            assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), abs(rhs), abs(z[n - 1]), abs(z[n + 1]))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(min_value=1, max_value=60), x=st.floats(min_value=0.05, max_value=80.0))
def test_recurrence_property(n, x):
    z = sph_bessel_table(Kind.J, n + 1, x)
    scale = max(abs(z[n - 1]), abs(z[n + 1]), abs(z[n]), 1e-300)
    assert abs(z[n - 1] + z[n + 1] - (2 * n + 1) * z[n] / x) <= 1e-10 * scale


def test_domain_and_range_errors():
    with pytest.raises(DomainError):
        sph_bessel(Kind.J, 1, 0.0)
    with pytest.raises(DomainError):
        sph_bessel(Kind.J, 1, -1.0)
    with pytest.raises(RangeError):
        sph_bessel(Kind.J, MAX_DEGREE + 1, 1.0)
    with pytest.raises(RangeError):
        sph_bessel(Kind.Y, 150, 0.01)


def test_ylm_values():
    assert abs(ylm(0, 0, 0.4, 1.3) - 1 / math.sqrt(4 * math.pi)) <= 1e-15
    assert abs(ylm(1, 0, 0.0, 0.0) - math.sqrt(3 / (4 * math.pi))) <= 1e-15
    with pytest.raises(DomainError):
        ylm(2, 3, 0.1, 0.1)


def test_ylm_matches_scipy():
    th, ph = 1.1, 0.7
    for n in range(0, 8):
        for m in range(-n, n + 1):
            ref = scs.sph_harm_y(n, m, th, ph)
            assert abs(ylm(n, m, th, ph) - ref) <= 1e-13


def test_ylm_gram_matrix():
    q = SphereQuadrature(64, 128)
    nmax = 6
    rows = [ylm(n, m, q.theta, q.phi) for n in range(nmax + 1) for m in range(-n, n + 1)]
    G = np.array([[q.integrate(a * np.conj(b)) for b in rows] for a in rows])
    assert np.max(abs(G - np.eye(len(rows)))) <= 1e-10
    assert abs(ylm(5, 3, 1.1, 0.7)) > 0


def test_vsh_gram_and_tangentiality():
    a = 1.7
    q = SphereQuadrature(40, 80, radius=a)
    fields = []
    for pol in (Polarization.GRAD, Polarization.CURL):
        for n, m in mode_list(4):
            F = vsh_eval(pol, (n, m), q.theta, q.phi, a)
            assert np.max(abs(np.sum(F * q.r_hat, axis=-1))) <= 1e-14
            fields.append(F)
    G = np.array([[q.integrate(np.sum(f * np.conj(g), axis=-1)) for g in fields] for f in fields])
    assert np.max(abs(G - np.eye(len(fields)))) <= 1e-10


def test_vsh_u10_direction_and_finite_difference():
    th, ph = 0.9, 0.4
    U = vsh_eval("U", (1, 0), th, ph)
    _, t_hat, _ = spherical_frame(th, ph)
    c = math.sqrt(3 / (4 * math.pi)) / math.sqrt(2)
    assert np.allclose(U, -c * math.sin(th) * t_hat, atol=1e-14)
    h = 1e-6
    dY = (ylm(1, 0, th + h, ph) - ylm(1, 0, th - h, ph)) / (2 * h)
    assert abs(np.dot(U, t_hat) - dY / math.sqrt(2)) <= 1e-9


def test_rotation_relations():
    rng = np.random.default_rng(3)
    th = rng.uniform(0.05, math.pi - 0.05, 20)
    ph = rng.uniform(0, 2 * math.pi, 20)
    r_hat, _, _ = spherical_frame(th, ph)
    for n, m in mode_list(5):
        U = vsh_eval("U", (n, m), th, ph)
        V = vsh_eval("V", (n, m), th, ph)
        assert np.max(abs(np.cross(r_hat, U) - V)) <= 1e-12
        assert np.max(abs(np.cross(r_hat, V) + U)) <= 1e-12


def test_mode_index_ordering():
    modes = mode_list(3)
    assert modes[0] == (1, -1)
    assert [mode_index(n, m) for n, m in modes] == list(range(len(modes)))
    assert len(modes) == 15
