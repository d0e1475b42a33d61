"""Tangential differential calculus on closed triangle meshes.

P1 nodal scalars, per-face constant tangent vectors. The weak operators are
defined by adjointness against the P1 hat functions, so the discrete identities
hold to rounding::

    weak_div(v)[i]  = -int grad(phi_i) . v
    weak_curl(v)[i] =  int curlvec(phi_i) . v,    curlvec = -nu x grad
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .errors import MeshError, TopologyError


@dataclasses.dataclass(frozen=True, eq=False)
class TriMesh:
    """Closed, consistently oriented triangle surface. Validated on construction."""
    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        V = np.ascontiguousarray(self.vertices, dtype=float)
        F = np.ascontiguousarray(self.faces, dtype=np.int64)
        if V.ndim != 2 or V.shape[1] != 3:
            raise MeshError("vertices must have shape (V, 3)")
        if F.ndim != 2 or F.shape[1] != 3:
            raise MeshError("faces must have shape (F, 3)")
        if F.size and (F.min() < 0 or F.max() >= len(V)):
            raise MeshError("face references a missing vertex")
        V.setflags(write=False)
        F.setflags(write=False)
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "faces", F)
        _validate(self)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def edges(self):
        e = np.sort(self.faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        return np.unique(e, axis=0)

    @property
    def euler_characteristic(self):
        return self.n_vertices - len(self.edges) + self.n_faces

    @property
    def genus(self):
        return (2 - self.euler_characteristic) // 2

    @property
    def cross(self):
        x = self.vertices[self.faces]
        return np.cross(x[:, 1] - x[:, 0], x[:, 2] - x[:, 0])

    @property
    def areas(self):
        return 0.5 * np.linalg.norm(self.cross, axis=1)

    @property
    def face_normals(self):
        c = self.cross
        return c / np.linalg.norm(c, axis=1)[:, None]

    @property
    def barycenters(self):
        return self.vertices[self.faces].mean(axis=1)

    @property
    def h(self):
        """Longest edge length."""
        e = self.edges
        return float(np.max(np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)))

    def components(self):
        n = self.n_vertices
        e = self.edges
        adj = sp.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
        return connected_components(adj, directed=False)[0]

    def topology_report(self):
        return {
            "vertices": self.n_vertices,
            "edges": len(self.edges),
            "faces": self.n_faces,
            "euler_characteristic": self.euler_characteristic,
            "genus": self.genus,
            "components": self.components(),
        }


def _validate(mesh: TriMesh):
    F = mesh.faces
    if len(F) == 0:
        raise MeshError("mesh has no faces")
    if np.any((F[:, 0] == F[:, 1]) | (F[:, 1] == F[:, 2]) | (F[:, 0] == F[:, 2])):
        raise MeshError("face with repeated vertex")
    area = mesh.areas
    bad = np.nonzero(area <= 1e-14 * area.mean())[0]
    if bad.size:
        raise MeshError(f"degenerate face {int(bad[0])}")
    directed = F[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    und = np.sort(directed, axis=1)
    uniq, counts = np.unique(und, axis=0, return_counts=True)
    if np.any(counts > 2):
        e = uniq[np.argmax(counts > 2)]
        raise MeshError(f"non-manifold edge ({e[0]}, {e[1]})")
    if np.any(counts < 2):
        e = uniq[np.argmax(counts < 2)]
        raise MeshError(f"mesh is not closed: boundary edge ({e[0]}, {e[1]})")
    d_uniq, d_counts = np.unique(directed, axis=0, return_counts=True)
    if np.any(d_counts > 1):
        e = d_uniq[np.argmax(d_counts > 1)]
        raise MeshError(f"inconsistent orientation at edge ({e[0]}, {e[1]})")


# ---------------------------------------------------------------------------
# Test meshes
# ---------------------------------------------------------------------------

def icosahedron():
    t = (1.0 + math.sqrt(5.0)) / 2.0
    V = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    V /= np.linalg.norm(V, axis=1)[:, None]
    F = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ])
    return V, F


def icosphere(level: int, radius: float = 1.0) -> TriMesh:
    """Recursively subdivided icosahedron with vertices projected to the sphere."""
    V, F = icosahedron()
    V = list(V)
    for _ in range(level):
        cache = {}

        def mid(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in cache:
                p = V[i] + V[j]
                V.append(p / np.linalg.norm(p))
                cache[key] = len(V) - 1
            return cache[key]

        newF = []
        for a, b, c in F:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            newF += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        F = np.array(newF)
    return TriMesh(radius * np.array(V), F)


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------

def _check_scalar(mesh, p):
    p = np.asarray(p)
    if p.shape != (mesh.n_vertices,):
        raise MeshError(f"scalar field length {p.shape} does not match {mesh.n_vertices} vertices")
    return p


def _check_tangent(mesh, v, tol=1e-12):
    v = np.asarray(v)
    if v.shape != (mesh.n_faces, 3):
        raise MeshError(f"tangent field shape {v.shape} does not match ({mesh.n_faces}, 3)")
    nrm = np.linalg.norm(v, axis=1)
    normal = np.abs(np.sum(v * mesh.face_normals, axis=1))
    bad = np.nonzero(normal > tol * np.maximum(nrm, 1e-300))[0]
    if bad.size:
        raise MeshError(f"tangent field not tangential on face {int(bad[0])}")
    return v


def hat_gradients(mesh: TriMesh):
    """``grad phi_i`` on every face for its three local vertices, shape ``(F, 3, 3)``."""
    x = mesh.vertices[mesh.faces]
    nu = mesh.face_normals
    A2 = 2.0 * mesh.areas
    opp = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    return np.cross(nu[:, None, :], opp) / A2[:, None, None]


def grad_gamma(mesh: TriMesh, p):
    p = _check_scalar(mesh, p)
    G = hat_gradients(mesh)
    return np.einsum("fk,fkd->fd", p[mesh.faces], G)


def curlvec_gamma(mesh: TriMesh, p):
    return -np.cross(mesh.face_normals, grad_gamma(mesh, p))


def rotate(mesh: TriMesh, v):
    """``nu x v`` per face."""
    return np.cross(mesh.face_normals, v)


def tangential_projection(mesh: TriMesh, v):
    nu = mesh.face_normals
    v = np.asarray(v)
    return v - np.sum(v * nu, axis=1)[:, None] * nu


def _scatter(mesh, local):
    out = np.zeros(mesh.n_vertices, dtype=np.result_type(local, float))
    np.add.at(out, mesh.faces.ravel(), local.ravel())
    return out


def weak_div_gamma(mesh: TriMesh, v):
    """Functional ``w[i] = -int grad(phi_i) . v ds``."""
    v = _check_tangent(mesh, v)
    G = hat_gradients(mesh)
    local = -mesh.areas[:, None] * np.einsum("fkd,fd->fk", G, v)
    return _scatter(mesh, local)


def weak_curl_gamma(mesh: TriMesh, v):
    """Functional ``w[i] = int curlvec(phi_i) . v ds``."""
    v = _check_tangent(mesh, v)
    G = hat_gradients(mesh)
    C = -np.cross(mesh.face_normals[:, None, :], G)
    local = mesh.areas[:, None] * np.einsum("fkd,fd->fk", C, v)
    return _scatter(mesh, local)


def l2_inner_faces(mesh: TriMesh, u, v):
    """``int u . conj(v) ds`` for per-face constant fields."""
    return complex(np.sum(mesh.areas * np.sum(u * np.conj(v), axis=1)))


def l2_norm_faces(mesh: TriMesh, v):
    return math.sqrt(max(l2_inner_faces(mesh, v, v).real, 0.0))


def stiffness_matrix(mesh: TriMesh):
    """``K_ij = int grad phi_i . grad phi_j`` (sparse, real symmetric)."""
    G = hat_gradients(mesh)
    local = mesh.areas[:, None, None] * np.einsum("fid,fjd->fij", G, G)
    rows = np.repeat(mesh.faces, 3, axis=1).ravel()
    cols = np.tile(mesh.faces, (1, 3)).ravel()
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(mesh.n_vertices,) * 2)


def mass_matrix(mesh: TriMesh):
    """Consistent P1 mass matrix."""
    ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    local = mesh.areas[:, None, None] * ref[None]
    rows = np.repeat(mesh.faces, 3, axis=1).ravel()
    cols = np.tile(mesh.faces, (1, 3)).ravel()
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(mesh.n_vertices,) * 2)


def lumped_weights(mesh: TriMesh):
    """``int phi_i ds``."""
    return _scatter(mesh, np.repeat(mesh.areas[:, None] / 3.0, 3, axis=1))


class _ZeroMeanLaplace:
    """Factorised ``[[K, m], [m^T, 0]]`` enforcing ``int p ds = 0``."""

    def __init__(self, mesh):
        if mesh.components() != 1:
            raise TopologyError("Laplace system singular: mesh is disconnected")
        K = stiffness_matrix(mesh)
        m = lumped_weights(mesh)[:, None]
        A = sp.bmat([[K, sp.csr_matrix(m)], [sp.csr_matrix(m.T), None]], format="csc")
        self.n = mesh.n_vertices
        self._lu = spla.splu(A)

    def solve(self, rhs):
        rhs = np.asarray(rhs)
        b = np.concatenate([rhs, [0.0]])
        if np.iscomplexobj(b):
            x = self._lu.solve(b.real.copy()) + 1j * self._lu.solve(b.imag.copy())
        else:
            x = self._lu.solve(b)
        return x[: self.n]


@dataclasses.dataclass
class HodgeResult:
    p: np.ndarray
    q: np.ndarray
    r: np.ndarray
    residual_l2: float


def hodge_decompose_mesh(mesh: TriMesh, v, solver=None) -> HodgeResult:
    """``v = grad p + curlvec q + r`` with zero-mean ``p`` and ``q``.

    ``r`` is the L2-orthogonal remainder; it vanishes for fields in the span of
    discrete gradients and rotated gradients.
    """
    if mesh.genus != 0:
        raise TopologyError(f"Hodge decomposition needs genus 0, mesh has genus {mesh.genus}")
    v = _check_tangent(mesh, v)
    solver = solver or _ZeroMeanLaplace(mesh)
    p = solver.solve(-weak_div_gamma(mesh, v))
    q = solver.solve(weak_curl_gamma(mesh, v))
    r = v - grad_gamma(mesh, p) - curlvec_gamma(mesh, q)
    return HodgeResult(p, q, r, l2_norm_faces(mesh, r))


# ---------------------------------------------------------------------------
# Spectral sampling and quotients
# ---------------------------------------------------------------------------

def spherical_angles(points):
    points = np.asarray(points, dtype=float)
    r = np.linalg.norm(points, axis=-1)
    theta = np.arccos(np.clip(points[..., 2] / r, -1.0, 1.0))
    phi = np.arctan2(points[..., 1], points[..., 0])
    return theta, phi


def sample_ylm(mesh: TriMesh, n, m):
    from .special_functions import ylm

    theta, phi = spherical_angles(mesh.vertices)
    return ylm(n, m, theta, phi)


def sample_vsh(mesh: TriMesh, pol, mode, a=1.0):
    """VSH at face barycentres, projected onto the face planes."""
    from .special_functions import vsh_eval

    theta, phi = spherical_angles(mesh.barycenters)
    return tangential_projection(mesh, vsh_eval(pol, mode, theta, phi, a))


def rayleigh_quotients(mesh: TriMesh, p):
    """``(p^H K p / p^H M p, p^H K M^-1 K p / p^H K p)``.

    The second is the weak ``(rot curl - grad div)`` form on ``grad p`` over
    ``||grad p||^2``; ``curl grad = 0`` leaves only the divergence part.
    """
    K = stiffness_matrix(mesh)
    M = mass_matrix(mesh).tocsc()
    Kp = K @ p
    pKp = np.vdot(p, Kp).real
    lap = np.vdot(p, M @ p).real
    vec = np.vdot(Kp, spla.spsolve(M, Kp)).real
    return pKp / lap, vec / pKp
