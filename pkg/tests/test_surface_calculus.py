import math

import numpy as np
import pytest

from gibc import surface_calculus as scm
from gibc.errors import MeshError, TopologyError
from gibc.validation import mesh_identities, rayleigh_rates

LEVELS = (2, 3, 4)


@pytest.fixture(scope="module")
def meshes():
    return {L: scm.icosphere(L) for L in LEVELS}


def rate(errs, hs):
    return math.log(errs[-2] / errs[-1]) / math.log(hs[-2] / hs[-1])


def torus(n=12, m=8, R=2.0, r=0.7):
    u, v = np.meshgrid(np.arange(n) * 2 * np.pi / n, np.arange(m) * 2 * np.pi / m, indexing="ij")
    V = np.stack([(R + r * np.cos(v)) * np.cos(u), (R + r * np.cos(v)) * np.sin(u), r * np.sin(v)], -1).reshape(-1, 3)
    idx = lambda i, j: (i % n) * m + (j % m)  # noqa: E731
    F = []
    for i in range(n):
        for j in range(m):
            F.append([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)])
            F.append([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)])
    return scm.TriMesh(V, np.array(F))


def test_icosahedron_topology():
    mesh = scm.icosphere(0)
    rep = mesh.topology_report()
    assert (rep["vertices"], rep["edges"], rep["faces"]) == (12, 30, 20)
    assert rep["euler_characteristic"] == 2 and rep["genus"] == 0 and rep["components"] == 1
    assert np.all(np.sum(mesh.face_normals * mesh.barycenters, axis=1) > 0)


def test_torus_genus():
    assert torus().genus == 1


def test_mesh_errors():
    ico = scm.icosphere(0)
    V, F = np.array(ico.vertices), np.array(ico.faces)
    with pytest.raises(MeshError, match="not closed"):
        scm.TriMesh(V, F[1:])
    flipped = F.copy()
    flipped[0] = flipped[0, ::-1]
    with pytest.raises(MeshError, match="orientation"):
        scm.TriMesh(V, flipped)
    a, b = F[0, 0], F[0, 1]
    extra = np.vstack([V, [[0.0, 0.0, 0.0]]])
    with pytest.raises(MeshError, match="non-manifold edge"):
        scm.TriMesh(extra, np.vstack([F, [[a, b, len(V)]]]))
    with pytest.raises(MeshError, match="repeated vertex"):
        scm.TriMesh(V, np.vstack([F, [[a, a, b]]]))
    tet = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0.5, 0.5, 0]], float)
    with pytest.raises(MeshError, match="degenerate"):
        scm.TriMesh(tet, np.array([[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]]))
    with pytest.raises(MeshError):
        scm.grad_gamma(ico, np.zeros(5))
    with pytest.raises(MeshError, match="not tangential"):
        scm.weak_div_gamma(ico, ico.face_normals)


def test_constant_fields(meshes):
    mesh = meshes[2]
    c = np.full(mesh.n_vertices, 3.5 - 1j)
    assert np.max(abs(scm.grad_gamma(mesh, c))) <= 1e-13
    assert np.max(abs(scm.curlvec_gamma(mesh, c))) <= 1e-13
    z = np.zeros((mesh.n_faces, 3))
    assert np.all(scm.weak_div_gamma(mesh, z) == 0) and np.all(scm.weak_curl_gamma(mesh, z) == 0)


def test_gradient_of_height(meshes):
    errs, hs = [], []
    for L in LEVELS:
        mesh = meshes[L]
        g = scm.grad_gamma(mesh, mesh.vertices[:, 2])
        x = mesh.barycenters / np.linalg.norm(mesh.barycenters, axis=1)[:, None]
        smooth = np.array([0.0, 0.0, 1.0]) - x[:, 2:3] * x
        errs.append(np.max(np.linalg.norm(g - smooth, axis=1)))
        hs.append(mesh.h)
    assert errs[-1] <= 2 * hs[-1]
    assert rate(errs, hs) >= 0.9


def test_gradient_matches_vsh(meshes):
    errs, cerrs, hs = [], [], []
    for L in LEVELS:
        mesh = meshes[L]
        g = scm.grad_gamma(mesh, scm.sample_ylm(mesh, 2, 1))
        ref = math.sqrt(6.0) * scm.sample_vsh(mesh, "U", (2, 1))
        errs.append(scm.l2_norm_faces(mesh, g - ref))
        c = scm.curlvec_gamma(mesh, scm.sample_ylm(mesh, 1, 0))
        cref = -math.sqrt(2.0) * scm.sample_vsh(mesh, "V", (1, 0))
        cerrs.append(scm.l2_norm_faces(mesh, c - cref))
        hs.append(mesh.h)
    assert rate(errs, hs) >= 0.9 and rate(cerrs, hs) >= 0.9


def test_curlvec_is_rotated_gradient(meshes):
    mesh = meshes[3]
    p = np.random.default_rng(0).standard_normal(mesh.n_vertices)
    assert np.max(abs(scm.rotate(mesh, scm.grad_gamma(mesh, p)) + scm.curlvec_gamma(mesh, p))) <= 1e-13


@pytest.mark.parametrize("level", [2, 3])
def test_discrete_identities(meshes, level):
    adj, rot, cg, dc = mesh_identities(meshes[level], level)
    assert adj <= 1e-12 and rot <= 1e-12 and cg <= 1e-12 and dc <= 1e-12


def test_spectral_pairings(meshes):
    d_err, c_err, hs = [], [], []
    for L in LEVELS:
        mesh = meshes[L]
        y1 = scm.sample_ylm(mesh, 1, 0).real
        d = np.dot(y1, scm.weak_div_gamma(mesh, scm.grad_gamma(mesh, y1)))
        y2 = scm.sample_ylm(mesh, 2, 0).real
        c = np.dot(y2, scm.weak_curl_gamma(mesh, scm.sample_vsh(mesh, "V", (2, 0)).real))
        d_err.append(abs(d + 2.0))
        c_err.append(abs(c + math.sqrt(6.0)))
        hs.append(mesh.h)
    assert d_err[-1] <= 0.05 and c_err[-1] <= 0.05
    assert d_err[-1] < d_err[0] and c_err[-1] < c_err[0]


def test_laplace_matrix_psd_with_constant_kernel(meshes):
    mesh = meshes[2]
    K = scm.stiffness_matrix(mesh).toarray()
    assert np.max(abs(K - K.T)) <= 1e-14
    ev = np.linalg.eigvalsh(K)
    assert ev[0] >= -1e-12 and ev[1] > 1e-3
    assert np.max(abs(K @ np.ones(mesh.n_vertices))) <= 1e-12


def test_rayleigh_and_vector_laplacian_rates():
    r1, r2 = rayleigh_rates(LEVELS, 2, 1)
    assert r1 >= 0.9 and r2 >= 0.9


def test_hodge_pure_gradient_and_curl(meshes):
    mesh = meshes[3]
    rng = np.random.default_rng(2)
    p0 = rng.standard_normal(mesh.n_vertices)
    res = scm.hodge_decompose_mesh(mesh, scm.grad_gamma(mesh, p0))
    diff = res.p - p0
    assert np.ptp(diff) <= 1e-10
    assert np.max(abs(res.q)) <= 1e-10 and res.residual_l2 <= 1e-10
    res = scm.hodge_decompose_mesh(mesh, scm.curlvec_gamma(mesh, p0))
    assert np.max(abs(res.p)) <= 1e-10 and res.residual_l2 <= 1e-10
    assert abs(np.dot(scm.lumped_weights(mesh), res.q)) <= 1e-10


def test_hodge_idempotence_random(meshes):
    mesh = meshes[3]
    rng = np.random.default_rng(5)
    v = scm.tangential_projection(mesh, rng.standard_normal((mesh.n_faces, 3)) + 1j * rng.standard_normal((mesh.n_faces, 3)))
    res = scm.hodge_decompose_mesh(mesh, v)
    rec = scm.grad_gamma(mesh, res.p) + scm.curlvec_gamma(mesh, res.q)
    again = scm.hodge_decompose_mesh(mesh, rec)
    assert np.max(abs(again.p - res.p)) <= 1e-10 and np.max(abs(again.q - res.q)) <= 1e-10
    assert again.residual_l2 <= 1e-10
    assert res.residual_l2 > 0.1  # P0 fields are richer than gradients plus rotated gradients


def test_hodge_topology_errors():
    with pytest.raises(TopologyError):
        scm.hodge_decompose_mesh(torus(), np.zeros((torus().n_faces, 3)))
    a = scm.icosphere(0)
    b_vertices = np.array(a.vertices) + [5.0, 0.0, 0.0]
    two = scm.TriMesh(np.vstack([a.vertices, b_vertices]), np.vstack([a.faces, np.array(a.faces) + 12]))
    assert two.components() == 2
    with pytest.raises(TopologyError):
        scm.hodge_decompose_mesh(two, np.zeros((two.n_faces, 3)))
