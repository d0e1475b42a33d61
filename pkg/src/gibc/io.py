"""Mesh ingestion (OFF, OBJ) and CSV / SVG emission."""
from __future__ import annotations

import csv
import math
import os

import numpy as np

from .errors import MeshError, ParseError
from .special_functions import mode_list
from .spectral_core import SpectralTangentField
from .surface_calculus import TriMesh

FLOAT_FMT = "%.17g"


class UnsupportedElementError(MeshError):
    """Mesh contains faces other than triangles."""


def fmt(x):
    return FLOAT_FMT % x


# ---------------------------------------------------------------------------
# Meshes
# ---------------------------------------------------------------------------

def _tokens(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if body:
                yield lineno, body.split()


def _load_off(path):
    it = _tokens(path)
    try:
        lineno, head = next(it)
    except StopIteration:
        raise ParseError(f"{path}: empty OFF file") from None
    if head[0] != "OFF":
        raise ParseError(f"{path}: missing OFF header", lineno)
    counts = head[1:] if len(head) > 1 else next(it)[1]
    try:
        nv, nf = int(counts[0]), int(counts[1])
        verts, faces = [], []
        for _ in range(nv):
            lineno, t = next(it)
            verts.append([float(x) for x in t[:3]])
        for _ in range(nf):
            lineno, t = next(it)
            k = int(t[0])
            if k != 3:
                raise UnsupportedElementError(f"{path}:{lineno}: face with {k} vertices (triangles only)")
            faces.append([int(x) for x in t[1:4]])
    except (StopIteration, ValueError, IndexError):
        raise ParseError(f"{path}: truncated or malformed OFF data") from None
    return np.array(verts), np.array(faces)


def _load_obj(path):
    verts, faces = [], []
    for lineno, t in _tokens(path):
        if t[0] == "v":
            try:
                verts.append([float(x) for x in t[1:4]])
            except ValueError:
                raise ParseError(f"{path}: malformed vertex", lineno) from None
        elif t[0] == "f":
            if len(t) != 4:
                raise UnsupportedElementError(f"{path}:{lineno}: face with {len(t) - 1} vertices (triangles only)")
            idx = []
            for tok in t[1:]:
                i = int(tok.split("/")[0])
                idx.append(i - 1 if i > 0 else len(verts) + i)
            faces.append(idx)
    return np.array(verts), np.array(faces)


def load_mesh(path) -> TriMesh:
    """Read an OFF or OBJ triangle mesh and validate it (closed, oriented, non-degenerate)."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".off":
        V, F = _load_off(path)
    elif ext == ".obj":
        V, F = _load_obj(path)
    else:
        raise ParseError(f"{path}: unsupported mesh format {ext!r} (OFF or OBJ)")
    return TriMesh(V, F)


def write_off(path, mesh: TriMesh):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"OFF\n{mesh.n_vertices} {mesh.n_faces} 0\n")
        for v in mesh.vertices:
            fh.write(" ".join(fmt(x) for x in v) + "\n")
        for f in mesh.faces:
            fh.write("3 " + " ".join(str(int(i)) for i in f) + "\n")


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])


def write_coefficients(path, u: SpectralTangentField):
    """Rows ``(n, m, pol, re, im)``: n ascending, m ascending, U before V."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# a={fmt(u.a)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "m", "pol", "re", "im"])
        for k, (n, m) in enumerate(mode_list(u.nmax)):
            for pol, c in (("U", u.alpha[k]), ("V", u.beta[k])):
                w.writerow([n, m, pol, fmt(c.real), fmt(c.imag)])


def read_coefficients(path) -> SpectralTangentField:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# a="):
            raise ParseError(f"{path}: missing '# a=' radius line", 1)
        a = float(first[4:])
        rows = list(csv.DictReader(fh))
    nmax = max(int(r["n"]) for r in rows)
    u = SpectralTangentField.zeros(nmax, a)
    for r in rows:
        k = int(r["n"]) ** 2 - 1 + int(r["m"]) + int(r["n"])
        target = u.alpha if r["pol"] == "U" else u.beta
        target[k] = complex(float(r["re"]), float(r["im"]))
    return u


def write_scalar_field(path, values):
    write_rows(path, ["entity_index", "re", "im"],
               ((i, float(v.real), float(v.imag)) for i, v in enumerate(np.asarray(values, complex))))


def write_vector_field(path, vectors):
    header = ["entity_index"] + [f"{p}_{c}" for c in "xyz" for p in ("re", "im")]
    rows = []
    for i, v in enumerate(np.asarray(vectors, complex)):
        rows.append([i] + [float(x) for c in v for x in (c.real, c.imag)])
    write_rows(path, header, rows)


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

def polar_svg(theta, values, title="", size=400, db=True, floor_db=-40.0):
    """Minimal polar chart: circular grid, axes, one polyline. Angle measured from +z (up)."""
    theta = np.asarray(theta, dtype=float)
    v = np.asarray(values, dtype=float)
    if db:
        peak = np.max(v) if np.max(v) > 0 else 1.0
        v = 10.0 * np.log10(np.maximum(v / peak, 10 ** (floor_db / 10)))
        rad = (v - floor_db) / -floor_db
    else:
        rad = v / (np.max(v) or 1.0)
    c = size / 2.0
    scale = 0.42 * size
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
             '<rect width="100%" height="100%" fill="white"/>']
    for frac in (0.25, 0.5, 0.75, 1.0):
        parts.append(f'<circle cx="{c}" cy="{c}" r="{frac * scale:.2f}" fill="none" stroke="#ccc"/>')
    parts.append(f'<line x1="{c}" y1="{c - scale}" x2="{c}" y2="{c + scale}" stroke="#888"/>')
    parts.append(f'<line x1="{c - scale}" y1="{c}" x2="{c + scale}" y2="{c}" stroke="#888"/>')
    pts = []
    for t, r in zip(theta, rad):
        x = c + scale * r * math.sin(t)
        y = c - scale * r * math.cos(t)
        pts.append(f"{x:.2f},{y:.2f}")
    parts.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="#1f4e9c" stroke-width="1.5"/>')
    if title:
        parts.append(f'<text x="8" y="18" font-family="sans-serif" font-size="13">{title}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
