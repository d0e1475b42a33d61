"""Per-mode volume formulation on the shell ``a < r < R`` with a transparent condition at ``R``.

For one mode the field reduces to radial functions. ``U(r), V(r)`` are the
tangential harmonics normalised on the radius-``r`` sphere, ``s = sqrt(n(n+1))``.

TM (CurlType, ``H_T = w(r) V``)::

    int w' t' + (s^2/r^2 - omega^2) w t  - i omega z_V w(a) t(a) - i omega S_VV(R) w(R) t(R)
        = -i omega f_V t(a)

TE (GradType, ``H_T = p(r) U``, ``H_r = h(r) Y``) in mixed form, ``c = p' - s h``::

    int c conj(c_v) - omega^2 (p p_v + r^2 h h_v)  - i omega z_U p(a) p_v(a) - i omega S_UU(R) p(R) p_v(R)
        = -i omega f_U p_v(a)

``p`` is continuous, ``h`` is discontinuous of one order lower. Exact solutions are
``w = Z(omega r)`` and ``p = i Z'(omega r) / omega`` with ``Z`` in ``span{psi_n, xi_n}``.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from . import spectral_core as sc
from .errors import ParameterError, ResonanceError
from .special_functions import Kind, Polarization, mode_list, riccati_table


@dataclasses.dataclass(frozen=True, eq=False)
class RadialGrid:
    a: float
    R: float
    nodes: np.ndarray
    order: int = 2

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if not self.a < self.R:
            raise ParameterError("need a < R")
        if self.order not in (1, 2):
            raise ParameterError("element order must be 1 or 2")
        if nodes.size < 5:
            raise ParameterError("need at least 4 elements")
        if np.any(np.diff(nodes) <= 0):
            raise ParameterError("nodes must be strictly increasing")
        if not (math.isclose(nodes[0], self.a) and math.isclose(nodes[-1], self.R)):
            raise ParameterError("nodes must span [a, R]")

    @classmethod
    def uniform(cls, a, R, n_elements, order=2):
        return cls(a, R, np.linspace(a, R, n_elements + 1), order)

    @classmethod
    def default(cls, a, R, omega, order=2):
        """64 elements per wavelength, at least 4."""
        n_el = max(4, int(math.ceil(64 * (R - a) * omega / (2 * math.pi))))
        return cls.uniform(a, R, n_el, order)

    @property
    def n_elements(self):
        return self.nodes.size - 1

    @property
    def h(self):
        return float(np.max(np.diff(self.nodes)))


@dataclasses.dataclass
class ModeSolution:
    mode: tuple
    pol: Polarization
    w: np.ndarray  # nodal values of w (TM) or p (TE) on grid nodes
    trace_coeff: complex
    grid: RadialGrid | None = None
    radial: object = None  # callable r -> radial function values
    aux: object = None  # TE: callable r -> h(r)


# ---------------------------------------------------------------------------
# Boundary data
# ---------------------------------------------------------------------------

def transparent_block(n, omega, R) -> sc.CalderonBlock:
    return sc.calderon_block(n, omega, R)


def _pol(pol):
    if isinstance(pol, Polarization):
        return pol
    return Polarization(str(pol).upper()[:1] if str(pol).upper()[:1] in "UV" else pol)


def _boundary(mode, pol, model, omega, a, R):
    n = mode[0]
    zu, zv = sc.impedance_eigenvalues(model, n, a, omega)
    M = transparent_block(n, omega, R).M
    if pol is Polarization.GRAD:
        return zu, M[0, 0]
    return zv, M[1, 1]


# ---------------------------------------------------------------------------
# Exact radial solution
# ---------------------------------------------------------------------------

def _riccati(n, x):
    psi, dpsi = riccati_table(Kind.J, n, np.asarray(x, dtype=float))
    xi, dxi = riccati_table(Kind.H1, n, np.asarray(x, dtype=float))
    return psi[n], dpsi[n], xi[n], dxi[n]


def _riccati_dd(n, x, Z):
    return (n * (n + 1.0) / x**2 - 1.0) * Z


def solve_mode_exact(mode, pol, model, omega, a, R, f_coeff) -> ModeSolution:
    """Radial solution in ``span{psi_n, xi_n}`` fixed by the two boundary conditions."""
    pol = _pol(pol)
    n = mode[0]
    z, S = _boundary(mode, pol, model, omega, a, R)
    pa, dpa, xa, dxa = _riccati(n, omega * a)
    pR, dpR, xR, dxR = _riccati(n, omega * R)
    if pol is Polarization.CURL:
        # w = A psi + B xi;  w' + i omega z w = i omega f at a;  w' = i omega S w at R
        M = np.array([
            [omega * dpa + 1j * omega * z * pa, omega * dxa + 1j * omega * z * xa],
            [omega * dpR - 1j * omega * S * pR, omega * dxR - 1j * omega * S * xR],
        ])
        rhs = np.array([1j * omega * f_coeff, 0.0])
    else:
        # p = i (A psi' + B xi') / omega, c = -i (A psi + B xi)
        M = np.array([
            [-1j * pa - z * dpa, -1j * xa - z * dxa],
            [-1j * pR + S * dpR, -1j * xR + S * dxR],
        ])
        rhs = np.array([1j * omega * f_coeff, 0.0])
    if not np.all(np.isfinite(M)) or np.linalg.cond(M) > 1e14:
        raise ResonanceError(f"exact radial system singular at n={n}", n=n, model=model)
    A, B = np.linalg.solve(M, rhs)

    def radial(r):
        x = omega * np.atleast_1d(np.asarray(r, dtype=float))
        vals = np.array([_riccati(n, xx) for xx in x])
        if pol is Polarization.CURL:
            return A * vals[:, 0] + B * vals[:, 2]
        return 1j * (A * vals[:, 1] + B * vals[:, 3]) / omega

    def aux(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        x = omega * r
        vals = np.array([_riccati(n, xx) for xx in x])
        Zr = A * vals[:, 0] + B * vals[:, 2]
        return 1j * math.sqrt(n * (n + 1.0)) * Zr / x**2

    trace = complex(radial(a)[0])
    return ModeSolution(tuple(mode), pol, radial(np.array([a, R])), trace, None, radial,
                        aux if pol is Polarization.GRAD else None)


# ---------------------------------------------------------------------------
# Finite elements
# ---------------------------------------------------------------------------

_GAUSS = np.polynomial.legendre.leggauss(8)


def _lagrange(order, xi):
    """Shape functions and derivatives on [-1, 1] at points ``xi``."""
    xi = np.asarray(xi, dtype=float)
    if order == 1:
        N = np.stack([(1 - xi) / 2, (1 + xi) / 2])
        dN = np.stack([-0.5 * np.ones_like(xi), 0.5 * np.ones_like(xi)])
    else:
        N = np.stack([xi * (xi - 1) / 2, (1 + xi) * (1 - xi), xi * (xi + 1) / 2])
        dN = np.stack([xi - 0.5, -2 * xi, xi + 0.5])
    return N, dN


def _legendre_basis(k, xi):
    """Discontinuous basis of degree ``< k`` (Legendre polynomials) on [-1, 1]."""
    xi = np.asarray(xi, dtype=float)
    return np.stack([np.polynomial.legendre.Legendre.basis(j)(xi) for j in range(k)])


def _dof_layout(grid):
    k = grid.order
    ne = grid.n_elements
    n_cont = k * ne + 1
    conn = np.array([[k * e + j for j in range(k + 1)] for e in range(ne)])
    return n_cont, conn


def _assemble(grid, mode, pol, omega, z, S):
    k = grid.order
    n = mode[0]
    s2 = n * (n + 1.0)
    s = math.sqrt(s2)
    xg, wg = _GAUSS
    N, dN = _lagrange(k, xg)
    n_cont, conn = _dof_layout(grid)
    te = pol is Polarization.GRAD
    n_aux = k * grid.n_elements if te else 0
    size = n_cont + n_aux
    K = np.zeros((size, size), complex)
    for e in range(grid.n_elements):
        r0, r1 = grid.nodes[e], grid.nodes[e + 1]
        J = (r1 - r0) / 2
        r = r0 + (xg + 1) * J
        dNr = dN / J
        idx = conn[e]
        if not te:
            Ke = (dNr * wg * J) @ dNr.T + (N * wg * J * (s2 / r**2 - omega**2)) @ N.T
            K[np.ix_(idx, idx)] += Ke
            continue
        L = _legendre_basis(k, xg)
        aidx = n_cont + k * e + np.arange(k)
        W = wg * J
        # c = p' - s h
        Kpp = (dNr * W) @ dNr.T - omega**2 * (N * W) @ N.T
        Kph = -s * (dNr * W) @ L.T
        Khh = s2 * (L * W) @ L.T - omega**2 * (L * W * r**2) @ L.T
        K[np.ix_(idx, idx)] += Kpp
        K[np.ix_(idx, aidx)] += Kph
        K[np.ix_(aidx, idx)] += Kph.T
        K[np.ix_(aidx, aidx)] += Khh
    K[0, 0] += -1j * omega * z
    K[n_cont - 1, n_cont - 1] += -1j * omega * S
    return K, n_cont, conn


def solve_mode_fem(mode, pol, model, omega, a, R, grid: RadialGrid | None = None, f_coeff=1.0) -> ModeSolution:
    """Galerkin solution of the single-mode volume problem."""
    pol = _pol(pol)
    grid = grid or RadialGrid.default(a, R, omega)
    if not (math.isclose(grid.a, a) and math.isclose(grid.R, R)):
        raise ParameterError("grid does not span [a, R]")
    z, S = _boundary(mode, pol, model, omega, a, R)
    K, n_cont, conn = _assemble(grid, mode, pol, omega, z, S)
    rhs = np.zeros(K.shape[0], complex)
    rhs[0] = -1j * omega * f_coeff
    if f_coeff == 0:
        sol = np.zeros_like(rhs)
    else:
        cond = np.linalg.cond(K)
        if not np.isfinite(cond) or cond > 1e14:
            raise ResonanceError(f"radial stiffness singular at n={mode[0]}", n=mode[0], model=model)
        sol = np.linalg.solve(K, rhs)
    k = grid.order
    cont = sol[:n_cont]
    nodal = cont[::k]
    te = pol is Polarization.GRAD
    auxc = sol[n_cont:]

    def locate(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        e = np.clip(np.searchsorted(grid.nodes, r, side="right") - 1, 0, grid.n_elements - 1)
        r0, r1 = grid.nodes[e], grid.nodes[e + 1]
        return e, 2 * (r - r0) / (r1 - r0) - 1

    def radial(r):
        e, xi = locate(r)
        out = np.zeros(xi.shape, complex)
        for j in range(k + 1):
            N, _ = _lagrange(k, xi)
            out += N[j] * cont[conn[e, j]]
        return out

    def aux(r):
        e, xi = locate(r)
        L = _legendre_basis(k, xi)
        return np.sum(L * auxc.reshape(-1, k)[e].T, axis=0)

    return ModeSolution(tuple(mode), pol, nodal, complex(cont[0]), grid, radial, aux if te else None)


def l2_error(sol: ModeSolution, ref: ModeSolution, grid: RadialGrid):
    """``||sol - ref||_{L2(a, R)}`` of the radial functions by per-element Gauss quadrature."""
    xg, wg = _GAUSS
    total = 0.0
    for e in range(grid.n_elements):
        r0, r1 = grid.nodes[e], grid.nodes[e + 1]
        J = (r1 - r0) / 2
        r = r0 + (xg + 1) * J
        diff = sol.radial(r) - ref.radial(r)
        total += np.sum(wg * J * abs(diff) ** 2)
    return math.sqrt(total)


def fem_convergence(mode, pol, model, omega, a, R, order=2, levels=(8, 16, 32, 64), f_coeff=1.0):
    """Errors against the exact radial solution under uniform refinement.

    Returns rows ``(h, l2_error, trace_error)`` and the observed L2 rates.
    """
    ref = solve_mode_exact(mode, pol, model, omega, a, R, f_coeff)
    rows = []
    for ne in levels:
        grid = RadialGrid.uniform(a, R, ne, order)
        sol = solve_mode_fem(mode, pol, model, omega, a, R, grid, f_coeff)
        rows.append((grid.h, l2_error(sol, ref, grid), abs(sol.trace_coeff - ref.trace_coeff)))
    rates = [math.log(rows[i][1] / rows[i + 1][1]) / math.log(rows[i][0] / rows[i + 1][0])
             for i in range(len(rows) - 1)]
    return rows, rates


# ---------------------------------------------------------------------------
# Equivalence and coercivity
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class EquivalenceReport:
    modes: list  # (n, m, pol)
    volume: np.ndarray
    surface: np.ndarray
    rel_diff: np.ndarray

    @property
    def max_rel_diff(self):
        return float(np.max(self.rel_diff)) if self.rel_diff.size else 0.0


def volume_surface_equivalence(model, omega, a, incident, nmax, grid=None, R=None, solver="exact"):
    """Per-mode comparison of the volume trace with the surface solution.

    Modes with zero data are solved too; their relative difference is measured
    against ``|u| + 1e-300``.
    """
    from . import solver_surface as ss

    R = R or 2.0 * a
    f = ss.incident_trace(incident, model, a, nmax)
    u = ss.solve_surface(f, model, omega, a).u
    modes, vol, surf = [], [], []
    for k, (n, m) in enumerate(mode_list(nmax)):
        for pol, fc, uc in ((Polarization.GRAD, f.alpha[k], u.alpha[k]), (Polarization.CURL, f.beta[k], u.beta[k])):
            if solver == "exact":
                sol = solve_mode_exact((n, m), pol, model, omega, a, R, fc)
            else:
                g = grid or RadialGrid.default(a, R, omega)
                sol = solve_mode_fem((n, m), pol, model, omega, a, R, g, fc)
            modes.append((n, m, pol.value))
            vol.append(sol.trace_coeff)
            surf.append(uc)
    vol, surf = np.array(vol), np.array(surf)
    rel = abs(vol - surf) / (abs(surf) + 1e-300)
    return EquivalenceReport(modes, vol, surf, rel)


def coercivity_witness(mode, pol, model, omega, a, R, grid=None, trials=50, rng=None):
    """Smallest ``|q(v)| / ||v||^2`` over random discrete ``v``.

    ``q(v) = int (|curl v|^2 + |v|^2) dr - i omega z |v_T(a)|^2`` on the mode subspace.
    """
    pol = _pol(pol)
    grid = grid or RadialGrid.default(a, R, omega)
    z, _ = _boundary(mode, pol, model, omega, a, R)
    n = mode[0]
    s2 = n * (n + 1.0)
    s = math.sqrt(s2)
    k = grid.order
    xg, wg = _GAUSS
    N, dN = _lagrange(k, xg)
    n_cont, conn = _dof_layout(grid)
    te = pol is Polarization.GRAD
    n_aux = k * grid.n_elements if te else 0
    G = np.zeros((n_cont + n_aux,) * 2)  # int |curl v|^2 + |v|^2
    for e in range(grid.n_elements):
        r0, r1 = grid.nodes[e], grid.nodes[e + 1]
        J = (r1 - r0) / 2
        r = r0 + (xg + 1) * J
        W = wg * J
        dNr = dN / J
        idx = conn[e]
        if not te:
            G[np.ix_(idx, idx)] += (dNr * W) @ dNr.T + (N * W * (s2 / r**2 + 1.0)) @ N.T
            continue
        L = _legendre_basis(k, xg)
        aidx = n_cont + k * e + np.arange(k)
        G[np.ix_(idx, idx)] += (dNr * W) @ dNr.T + (N * W) @ N.T
        G[np.ix_(idx, aidx)] += -s * (dNr * W) @ L.T
        G[np.ix_(aidx, idx)] += -s * ((dNr * W) @ L.T).T
        G[np.ix_(aidx, aidx)] += s2 * (L * W) @ L.T + (L * W * r**2) @ L.T
    rng = np.random.default_rng(rng)
    worst = np.inf
    for _ in range(trials):
        v = rng.standard_normal(G.shape[0]) + 1j * rng.standard_normal(G.shape[0])
        vol = float(np.real(np.vdot(v, G @ v)))
        q = vol - 1j * omega * z * abs(v[0]) ** 2
        worst = min(worst, abs(q) / (vol + abs(v[0]) ** 2))
    return worst
