"""Per-mode realisation on the sphere of impedance operators, the Calderon
(magnetic-to-electric) operator, the form a_Gamma, the operator A_S and the
weighted Helmholtz decomposition.

A tangential field is stored as ``u = sum alpha_k U_k + beta_k V_k`` with the
modes normalised on the sphere of radius ``a``. Dual objects (``Z u``,
``S u``, right-hand sides) use the same layout with the L2 pivot, so that
``<A u, v> = sum A u . conj(v)`` coefficientwise.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import DecompositionError, ParameterError
from .special_functions import Kind, mode_count, mode_index, mode_list, riccati_table


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True, eq=False)
class SpectralTangentField:
    nmax: int
    a: float
    alpha: np.ndarray  # U-coefficients, ordered by mode_index
    beta: np.ndarray   # V-coefficients

    def __post_init__(self):
        K = mode_count(self.nmax)
        alpha = np.asarray(self.alpha, dtype=complex).reshape(-1)
        beta = np.asarray(self.beta, dtype=complex).reshape(-1)
        if alpha.shape != (K,) or beta.shape != (K,):
            raise ParameterError(f"expected {K} coefficients per family for nmax={self.nmax}")
        if self.a <= 0:
            raise ParameterError("radius must be positive")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def zeros(cls, nmax, a):
        K = mode_count(nmax)
        return cls(nmax, a, np.zeros(K, complex), np.zeros(K, complex))

    @classmethod
    def random(cls, nmax, a, rng=None):
        rng = np.random.default_rng(rng)
        K = mode_count(nmax)

        def draw():
            return rng.standard_normal(K) + 1j * rng.standard_normal(K)

        return cls(nmax, a, draw(), draw())

    @classmethod
    def single(cls, nmax, a, n, m, pol, value=1.0):
        f = cls.zeros(nmax, a)
        target = f.alpha if str(getattr(pol, "value", pol)) == "U" else f.beta
        target[mode_index(n, m)] = value
        return f

    @property
    def modes(self):
        return mode_list(self.nmax)

    @property
    def degrees(self):
        return np.array([n for n, _ in self.modes])

    def eigen_weights(self):
        """``n(n+1)/a^2`` per coefficient."""
        n = self.degrees
        return n * (n + 1.0) / self.a**2

    def coeff(self, n, m, pol):
        k = mode_index(n, m)
        return self.alpha[k] if str(getattr(pol, "value", pol)) == "U" else self.beta[k]

    def same_layout(self, other):
        return self.nmax == other.nmax and math.isclose(self.a, other.a, rel_tol=1e-14)

    def _check(self, other):
        if not self.same_layout(other):
            raise ParameterError("fields have different truncation or radius")

    def __add__(self, other):
        self._check(other)
        return SpectralTangentField(self.nmax, self.a, self.alpha + other.alpha, self.beta + other.beta)

    def __sub__(self, other):
        self._check(other)
        return SpectralTangentField(self.nmax, self.a, self.alpha - other.alpha, self.beta - other.beta)

    def __mul__(self, c):
        return SpectralTangentField(self.nmax, self.a, c * self.alpha, c * self.beta)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def truncated(self, nmax):
        """Restrict to (or zero-pad up to) degree ``nmax``."""
        out = SpectralTangentField.zeros(nmax, self.a)
        K = min(mode_count(nmax), mode_count(self.nmax))
        out.alpha[:K] = self.alpha[:K]
        out.beta[:K] = self.beta[:K]
        return out

    # norms -----------------------------------------------------------------
    def norm_l2(self):
        return float(np.sqrt(np.sum(abs(self.alpha) ** 2 + abs(self.beta) ** 2)))

    def norm_hcurl(self):
        w = self.eigen_weights()
        return float(np.sqrt(self.norm_l2() ** 2 + np.sum(w * abs(self.beta) ** 2)))

    def norm_hdiv(self):
        w = self.eigen_weights()
        return float(np.sqrt(self.norm_l2() ** 2 + np.sum(w * abs(self.alpha) ** 2)))

    def norm_hm12_curl(self):
        n = self.degrees
        lam = 1.0 + n * (n + 1.0)
        w = self.eigen_weights()
        s = np.sum(lam**-0.5 * (abs(self.alpha) ** 2 + abs(self.beta) ** 2))
        s += np.sum(lam**-0.5 * w * abs(self.beta) ** 2)
        return float(np.sqrt(s))


# ---------------------------------------------------------------------------
# Impedance models
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class FullSecondOrder:
    """``Z = rot eta curl + grad gamma div + lambda``."""
    lam: complex
    eta: complex
    gamma: complex

    def coefficients(self, omega=None):
        return complex(self.lam), complex(self.eta), complex(self.gamma)


@dataclasses.dataclass(frozen=True)
class CurlOnly:
    """``Z = rot eta curl + lambda``."""
    lam: complex
    eta: complex

    def coefficients(self, omega=None):
        return complex(self.lam), complex(self.eta), 0j


@dataclasses.dataclass(frozen=True)
class DivOnly:
    """``Z = grad gamma div + lambda``."""
    lam: complex
    gamma: complex

    def coefficients(self, omega=None):
        return complex(self.lam), 0j, complex(self.gamma)


@dataclasses.dataclass(frozen=True)
class Scalar:
    lam: complex

    def coefficients(self, omega=None):
        return complex(self.lam), 0j, 0j


@dataclasses.dataclass(frozen=True)
class ThinCoating:
    """Thin layer of thickness ``delta``: ``Z = i delta/(omega eps) rot curl - i omega mu delta``."""
    delta: float
    eps: complex
    mu: complex = 1.0

    def as_curl_only(self, omega) -> CurlOnly:
        if omega is None or omega <= 0:
            raise ParameterError("thin-coating model needs a positive frequency")
        eta = 1j * self.delta / (omega * complex(self.eps))
        lam = -1j * omega * complex(self.mu) * self.delta
        return CurlOnly(lam, eta)

    def coefficients(self, omega=None):
        return self.as_curl_only(omega).coefficients()


ImpedanceModel = FullSecondOrder | CurlOnly | DivOnly | Scalar | ThinCoating


def resolve(model, omega=None):
    """Replace a thin-coating description by its CurlOnly equivalent."""
    if isinstance(model, ThinCoating):
        return model.as_curl_only(omega)
    return model


def impedance_eigenvalues(model, n, a, omega=None):
    """Eigenvalues ``(z_U, z_V)`` of ``Z`` on ``U_n^m`` and ``V_n^m``."""
    if n < 1 or a <= 0:
        raise ParameterError("need n >= 1 and a > 0")
    lam, eta, gamma = model.coefficients(omega)
    w = n * (n + 1.0) / a**2
    return lam - gamma * w, lam + eta * w


@dataclasses.dataclass
class HypothesisReport:
    uniqueness_ok: bool
    existence_route: str  # surface_coercive | surface_helmholtz | volume_thdiv | none
    violated_conditions: list
    family: str


def hypothesis_check(model, omega=1.0) -> HypothesisReport:
    """Evaluate the sign hypotheses for constant coefficients.

    Violations are reported, never raised.
    """
    family = type(model).__name__
    model = resolve(model, omega)
    lam, eta, gamma = model.coefficients()
    violated = []
    if lam.real < 0:
        violated.append("Re(lambda) >= 0")
    if isinstance(model, (FullSecondOrder, CurlOnly)) and eta.real < 0:
        violated.append("Re(eta) >= 0")
    if isinstance(model, (FullSecondOrder, DivOnly)) and gamma.real > 0:
        violated.append("Re(gamma) <= 0")
    uniqueness = not violated

    route = "none"
    if isinstance(model, FullSecondOrder):
        extra = []
        if gamma == 0:
            extra.append("|gamma| >= c")
        if eta == 0:
            extra.append("|eta| >= c")
        if not (gamma.imag * eta.imag < 0 or (gamma.imag == 0 and eta.imag == 0)):
            extra.append("Im(gamma), Im(eta) of opposite sign")
        violated += extra
        if uniqueness and not extra:
            route = "surface_coercive"
    elif isinstance(model, CurlOnly):
        extra = []
        if lam == 0:
            extra.append("|lambda| >= c")
        if eta == 0:
            extra.append("|eta| >= c")
        violated += extra
        if uniqueness and not extra:
            route = "surface_helmholtz" if lam.imag * eta.imag < 0 else "surface_coercive"
    elif isinstance(model, DivOnly):
        extra = []
        if not lam.imag > 0:
            extra.append("Im(lambda) >= c")
        if not gamma.imag < 0:
            extra.append("Im(gamma) <= -c")
        violated += extra
        if uniqueness and not extra:
            route = "volume_thdiv"
    elif isinstance(model, Scalar):
        if uniqueness and lam.imag > 0:
            route = "volume_thdiv"
    return HypothesisReport(uniqueness, route, violated, family)


# ---------------------------------------------------------------------------
# Calderon operator
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True, eq=False)
class CalderonBlock:
    """Maps ``(alpha, beta)`` of ``H_T`` to the ``(U, V)`` coefficients of ``nu x E``."""
    n: int
    kr: float
    M: np.ndarray
    degraded: bool = False


def _calderon_entries(nmax, kr):
    xi, dxi = riccati_table(Kind.H1, nmax, np.asarray(kr, dtype=float))
    with np.errstate(all="ignore"):
        s_uu = 1j * xi / dxi
        s_vv = -1j * dxi / xi
    ok = np.isfinite(s_uu) & np.isfinite(s_vv) & np.isfinite(xi) & np.isfinite(dxi)
    return s_uu, s_vv, ok


def calderon_block(n, omega, r) -> CalderonBlock:
    """Per-degree block of the magnetic-to-electric operator on the sphere of radius ``r``.

    For ``xi_n(x) = x h_n(x)`` and ``x = omega r``::

        M = diag(i xi_n / xi_n', -i xi_n' / xi_n)

    The block is diagonal: a ``U``-type magnetic trace belongs to a TE wave whose
    rotated electric trace is again ``U``-type, and likewise for ``V``.
    """
    if omega <= 0 or r <= 0 or n < 1:
        raise ParameterError("need omega > 0, r > 0, n >= 1")
    s_uu, s_vv, ok = _calderon_entries(n, omega * r)
    M = np.array([[s_uu[n], 0.0], [0.0, s_vv[n]]], dtype=complex)
    return CalderonBlock(n, omega * r, M, degraded=not bool(ok[n]))


def calderon_diagonals(nmax, omega, r):
    """``(S_UU, S_VV, ok)`` arrays indexed by degree ``0..nmax``."""
    return _calderon_entries(nmax, omega * r)


def max_stable_degree(nmax, omega, r):
    """Largest degree ``<= nmax`` for which the Calderon entries are finite."""
    _, _, ok = _calderon_entries(nmax, omega * r)
    bad = np.nonzero(~ok[1:])[0]
    return nmax if bad.size == 0 else int(bad[0])


def _per_mode(values_by_degree, nmax):
    n = np.array([n for n, _ in mode_list(nmax)])
    return np.asarray(values_by_degree)[n]


@dataclasses.dataclass(frozen=True)
class Impedance:
    model: object
    omega: float | None = None


@dataclasses.dataclass(frozen=True)
class Calderon:
    omega: float


def impedance_diagonals(model, nmax, a, omega=None):
    n = np.arange(nmax + 1, dtype=float)
    lam, eta, gamma = model.coefficients(omega)
    w = n * (n + 1.0) / a**2
    return lam - gamma * w, lam + eta * w


def apply_operator(op, u: SpectralTangentField, a=None) -> SpectralTangentField:
    """Apply ``Z`` or ``S_Gamma`` mode by mode. Output uses the dual layout."""
    if a is not None and not math.isclose(a, u.a, rel_tol=1e-12):
        raise ParameterError(f"operator radius {a} does not match field radius {u.a}")
    if isinstance(op, Calderon):
        s_uu, s_vv, _ = calderon_diagonals(u.nmax, op.omega, u.a)
        du, dv = _per_mode(s_uu, u.nmax), _per_mode(s_vv, u.nmax)
    else:
        if not isinstance(op, Impedance):
            op = Impedance(op)
        zu, zv = impedance_diagonals(op.model, u.nmax, u.a, op.omega)
        du, dv = _per_mode(zu, u.nmax), _per_mode(zv, u.nmax)
    return SpectralTangentField(u.nmax, u.a, du * u.alpha, dv * u.beta)


def pairing(Au: SpectralTangentField, v: SpectralTangentField) -> complex:
    """Duality pairing ``<A u, v>`` with L2 pivot (antilinear in ``v``)."""
    if not Au.same_layout(v):
        raise ParameterError("pairing needs identical mode sets")
    return complex(np.vdot(v.alpha, Au.alpha) + np.vdot(v.beta, Au.beta))


def a_gamma(u, v, model, omega):
    """``a_Gamma(u, v) = <Z u, v> + <S_Gamma u, v>`` assembled from the generic operators."""
    zu = apply_operator(Impedance(model, omega), u)
    su = apply_operator(Calderon(omega), u)
    return pairing(zu + su, v)


def v_norm(u: SpectralTangentField, model) -> float:
    """Norm of the energy space ``V(Gamma)`` attached to the model family."""
    model = resolve(model, 1.0) if isinstance(model, ThinCoating) else model
    if isinstance(model, FullSecondOrder):
        return u.norm_hdiv() + u.norm_hcurl()
    if isinstance(model, CurlOnly):
        return u.norm_hcurl()
    if isinstance(model, DivOnly):
        return u.norm_hdiv()
    return u.norm_l2()


# ---------------------------------------------------------------------------
# A_S and the weighted Helmholtz decomposition
# ---------------------------------------------------------------------------

def as_mode_multiplier(model, n, omega, a):
    """``t_n`` with ``a_Gamma(grad Y, grad Y) = t_n`` for unit-L2 ``Y`` of degree ``n``.

    ``A_S`` acts on degree-``n`` harmonics as multiplication by
    ``t_n / (1 + n(n+1)/a^2)`` in the H1 inner product. Only ``lambda`` and the
    Calderon part contribute because ``curl grad = 0``.
    """
    lam = model.coefficients(omega)[0]
    w = n * (n + 1.0) / a**2
    M = calderon_block(n, omega, a).M
    # grad Y = sqrt(w) U; U -> (S U).U = M[0, 0]
    return w * lam + w * M[0, 0]


def helmholtz_decompose_spectral(u: SpectralTangentField, model, omega):
    """Split ``u = grad p + w`` with ``w`` in the a_Gamma-orthogonal complement X.

    Returns ``(p, w)``; ``p`` holds coefficients of the radius-``a``-normalised
    scalar harmonics (``grad_Gamma Yhat = sqrt(n(n+1))/a U``), indexed like the
    tangent coefficients.
    """
    nmax, a = u.nmax, u.a
    lam = resolve(model, omega).coefficients(omega)[0]
    su = apply_operator(Calderon(omega), u)
    w_n = u.eigen_weights()
    s_n = np.sqrt(w_n)
    # l_Gamma(grad xi) per mode: sqrt(w) * (lam alpha + (S u)_U)
    rhs = s_n * (lam * u.alpha + su.alpha)
    t = np.array([as_mode_multiplier(Scalar(lam), n, omega, a) for n in range(1, nmax + 1)])
    t_modes = t[u.degrees - 1]
    if np.any(t_modes == 0):
        n_bad = int(u.degrees[np.nonzero(t_modes == 0)[0][0]])
        raise DecompositionError(f"A_S multiplier vanishes at degree n={n_bad}")
    p = rhs / t_modes
    grad_p = SpectralTangentField(nmax, a, s_n * p, np.zeros_like(p))
    return p, u - grad_p


def grad_of(p, nmax, a) -> SpectralTangentField:
    w = SpectralTangentField.zeros(nmax, a).eigen_weights()
    return SpectralTangentField(nmax, a, np.sqrt(w) * np.asarray(p), np.zeros(len(p), complex))


def x_membership_residual(w: SpectralTangentField, model, omega):
    """Per-mode residual of the constraint defining X (zero for ``w`` in X)."""
    lam = resolve(model, omega).coefficients(omega)[0]
    sw = apply_operator(Calderon(omega), w)
    return np.sqrt(w.eigen_weights()) * (lam * w.alpha + sw.alpha)


def default_nmax(omega, a):
    ka = omega * a
    return int(math.ceil(ka + 6.0 * ka ** (1.0 / 3.0) + 8.0))


def mode_degrees(nmax):
    return np.array([n for n, _ in mode_list(nmax)])
