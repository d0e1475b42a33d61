"""``gibc <command> [--config path] [--key value ...]``

Exit codes: 0 ok, 1 validation or runtime failure, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import io as gio
from . import oracle_mie as om
from . import solver_surface as ss
from . import solver_volume as sv
from . import spectral_core as sc
from . import surface_calculus as scm
from . import validation
from .config import COMMANDS, RunConfig, parse_config
from .errors import GibcError, ParseError
from .special_functions import Polarization, mode_list


def _out(cfg, name):
    os.makedirs(cfg.output_dir, exist_ok=True)
    return os.path.join(cfg.output_dir, name)


def _report_text(items):
    lines = []
    for k, v in items:
        if isinstance(v, float):
            v = gio.fmt(v)
        lines.append(f"{k}: {v}")
    return "\n".join(lines) + "\n"


def _solve(cfg: RunConfig):
    model = cfg.build_model()
    inc = cfg.build_incident()
    return ss.scatter(inc, model, cfg.a, nmax=cfg.resolved_nmax(),
                      energy_radii=[cfg.outer_radius], directions=None), model, inc


def cmd_solve(cfg: RunConfig, out):
    rep, model, inc = _solve(cfg)
    gio.write_coefficients(_out(cfg, "coefficients.csv"), rep.u)
    hyp = rep.hypothesis
    conds = rep.mode_condition_numbers
    items = [
        ("model", repr(model)),
        ("omega", float(cfg.omega)),
        ("a", float(cfg.a)),
        ("n_max", rep.u.nmax),
        ("uniqueness_ok", hyp.uniqueness_ok),
        ("existence_route", hyp.existence_route),
        ("violated_conditions", ", ".join(hyp.violated_conditions) or "none"),
        ("energy_residual", float(rep.energy_residual)),
        ("normalised_flux", float(rep.flux)),
        ("max_condition_number", float(np.nanmax(conds))),
    ]
    items += [(f"silver_muller_R={gio.fmt(R)}", float(v)) for R, v in rep.silver_muller]
    for d, s in rep.far_field:
        label = ",".join(f"{float(x) + 0.0:g}" for x in d)
        items.append((f"rcs_direction=({label})", float(s)))
    items += [("warning", w) for w in rep.warnings]
    text = _report_text(items)
    with open(_out(cfg, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    out.write(text)
    return 0


def _oracle_surface(cfg, inc):
    """Mie oracle applies to PEC / scalar models under a unit z-travelling x-polarised wave."""
    fam = cfg.model.family
    if fam not in ("pec", "scalar") or not isinstance(inc, ss.PlaneWave):
        return None
    if not (np.allclose(inc.d, [0, 0, 1]) and np.allclose(inc.p, [1, 0, 0])):
        return None
    return om.PEC() if fam == "pec" else om.ImpedanceSurface(complex(cfg.model.params.get("lambda", 0.0)))


def cmd_rcs(cfg: RunConfig, out):
    model = cfg.build_model()
    inc = cfg.build_incident()
    nmax = cfg.resolved_nmax()
    f = ss.incident_trace(inc, model, cfg.a, nmax)
    rep = ss.solve_surface(f, model, cfg.omega, cfg.a)
    theta = np.linspace(0.0, math.pi, cfg.rcs_points)
    phi = math.radians(cfg.rcs_phi)
    dirs = np.stack([np.sin(theta) * math.cos(phi), np.sin(theta) * math.sin(phi), np.cos(theta)], axis=1)
    sig = [s for _, s in ss.far_field_rcs(rep.u, cfg.omega, dirs, inc.amplitude)]
    surface = _oracle_surface(cfg, inc)
    header = ["theta", "phi", "sigma"]
    rows = []
    for t, s, d in zip(theta, sig, dirs):
        row = [float(t), float(phi), float(s)]
        if surface is not None:
            row.append(float(om.mie_rcs(surface, cfg.omega, cfg.a, d)))
        rows.append(row)
    if surface is not None:
        header.append("sigma_oracle")
    gio.write_rows(_out(cfg, "rcs.csv"), header, rows)
    if cfg.plot:
        svg = gio.polar_svg(theta, sig, title=f"RCS, omega a = {cfg.omega * cfg.a:g}")
        with open(_out(cfg, "rcs.svg"), "w", encoding="utf-8") as fh:
            fh.write(svg)
    out.write(f"wrote {len(rows)} directions to {_out(cfg, 'rcs.csv')}\n")
    for w in rep.warnings:
        out.write(f"warning: {w}\n")
    if surface is not None:
        worst = max(abs(r[2] - r[3]) / max(r[3], 1e-300) for r in rows)
        out.write(f"max relative deviation from oracle: {worst:.3e}\n")
    return 0


def cmd_validate(cfg: RunConfig, out):
    rows = validation.run_all()
    width = max(len(r[0]) for r in rows)
    for name, ok, detail in rows:
        out.write(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}\n")
    gio.write_rows(_out(cfg, "validate.csv"), ["suite", "passed", "detail"],
                   [(n, "true" if ok else "false", d) for n, ok, d in rows])
    return 0 if all(ok for _, ok, _ in rows) else 1


def cmd_decompose(cfg: RunConfig, out):
    rng = np.random.default_rng(cfg.seed)
    if cfg.decompose == "spectral":
        model = cfg.build_model()
        nmax = cfg.nmax or 8
        u = sc.SpectralTangentField.random(nmax, cfg.a, rng)
        if cfg.input == "gradient":
            u = sc.grad_of(u.alpha, nmax, cfg.a)
        elif cfg.input == "curl":
            u = sc.SpectralTangentField(nmax, cfg.a, np.zeros_like(u.beta), u.beta)
        p, w = sc.helmholtz_decompose_spectral(u, model, cfg.omega)
        g = sc.grad_of(p, nmax, cfg.a)
        recon = (g + w - u).norm_hdiv() + (g + w - u).norm_hcurl()
        xres = float(np.max(abs(sc.x_membership_residual(w, model, cfg.omega))))
        rows = [(n, m, float(p[k].real), float(p[k].imag)) for k, (n, m) in enumerate(mode_list(nmax))]
        gio.write_rows(_out(cfg, "decompose.csv"), ["n", "m", "p_re", "p_im"], rows)
        gio.write_coefficients(_out(cfg, "decompose_w.csv"), w)
        gio.write_rows(_out(cfg, "decompose_summary.csv"), ["input", "reconstruction_error", "x_membership_residual"],
                       [(cfg.input, float(recon), xres)])
        out.write(f"spectral decomposition: reconstruction {recon:.3e}, X residual {xres:.3e}\n")
        return 0
    mesh = gio.load_mesh(cfg.mesh_path) if cfg.mesh_path else scm.icosphere(cfg.mesh_level, cfg.a)
    if cfg.input == "gradient":
        v = scm.grad_gamma(mesh, rng.standard_normal(mesh.n_vertices))
    elif cfg.input == "curl":
        v = scm.curlvec_gamma(mesh, rng.standard_normal(mesh.n_vertices))
    else:
        v = scm.tangential_projection(mesh, rng.standard_normal((mesh.n_faces, 3)))
    res = scm.hodge_decompose_mesh(mesh, v)
    norm = scm.l2_norm_faces(mesh, v) or 1.0
    recon = scm.l2_norm_faces(mesh, scm.grad_gamma(mesh, res.p) + scm.curlvec_gamma(mesh, res.q) - v) / norm
    rows = [(i, float(np.real(pi)), float(np.imag(pi)), float(np.real(qi)), float(np.imag(qi)))
            for i, (pi, qi) in enumerate(zip(res.p, res.q))]
    gio.write_rows(_out(cfg, "decompose.csv"), ["vertex", "p_re", "p_im", "q_re", "q_im"], rows)
    gio.write_vector_field(_out(cfg, "decompose_r.csv"), res.r)
    gio.write_rows(_out(cfg, "decompose_summary.csv"), ["input", "reconstruction_error", "residual_l2"],
                   [(cfg.input, float(recon), float(res.residual_l2 / norm))])
    topo = mesh.topology_report()
    out.write(f"mesh V={topo['vertices']} E={topo['edges']} F={topo['faces']} genus={topo['genus']}\n")
    out.write(f"mesh decomposition: reconstruction {recon:.3e}, remainder {res.residual_l2 / norm:.3e}\n")
    return 0


def cmd_equivalence(cfg: RunConfig, out):
    model = cfg.build_model()
    inc = cfg.build_incident()
    nmax = cfg.nmax or 8
    grid = None
    if cfg.solver == "fem":
        R = cfg.outer_radius
        grid = (sv.RadialGrid.uniform(cfg.a, R, cfg.elements, cfg.order) if cfg.elements
                else sv.RadialGrid.default(cfg.a, R, cfg.omega, cfg.order))
    rep = sv.volume_surface_equivalence(model, cfg.omega, cfg.a, inc, nmax, grid=grid,
                                        R=cfg.outer_radius, solver=cfg.solver)
    rows = [(n, m, pol, float(v.real), float(v.imag), float(s.real), float(s.imag), float(r))
            for (n, m, pol), v, s, r in zip(rep.modes, rep.volume, rep.surface, rep.rel_diff)]
    gio.write_rows(_out(cfg, "equivalence.csv"),
                   ["n", "m", "pol", "volume_re", "volume_im", "surface_re", "surface_im", "rel_diff"], rows)
    tol = cfg.tol if cfg.tol is not None else (1e-10 if cfg.solver == "exact" else 1e-4)
    out.write(f"max relative difference {rep.max_rel_diff:.3e} (tol {tol:g})\n")
    return 0 if rep.max_rel_diff <= tol else 1


def cmd_convergence(cfg: RunConfig, out):
    if cfg.convergence == "fem":
        model = cfg.build_model()
        rows_all = []
        for pol in (Polarization.GRAD, Polarization.CURL):
            rows, rates = sv.fem_convergence((1, 0), pol, model, cfg.omega, cfg.a, cfg.outer_radius,
                                             cfg.order, (8, 16, 32, 64))
            rows_all += [(pol.value, h, e, t) for h, e, t in rows]
            out.write(f"{pol.value}: observed L2 rates " + ", ".join(f"{r:.3f}" for r in rates) + "\n")
        gio.write_rows(_out(cfg, "convergence.csv"), ["pol", "h", "l2_error", "trace_error"], rows_all)
    elif cfg.convergence == "nmax":
        model = cfg.build_model()
        inc = cfg.build_incident()
        base = cfg.resolved_nmax()
        levels = sorted({max(1, base // 4), max(1, base // 2), base, 2 * base})
        back = -inc.d if isinstance(inc, ss.PlaneWave) else np.array([0.0, 0.0, 1.0])
        sig = []
        for n in levels:
            f = ss.incident_trace(inc, model, cfg.a, n)
            u = ss.solve_surface(f, model, cfg.omega, cfg.a).u
            sig.append(ss.far_field_rcs(u, cfg.omega, [back], inc.amplitude)[0][1])
        ref = sig[-1]
        rows = [(n, float(s), float(abs(s - ref) / ref)) for n, s in zip(levels, sig)]
        gio.write_rows(_out(cfg, "convergence.csv"), ["n_max", "sigma_backscatter", "rel_change"], rows)
        out.write("n_max rel_change: " + ", ".join(f"{n}:{e:.2e}" for n, _, e in rows) + "\n")
    else:
        rows = []
        for L in (1, 2, 3, 4):
            mesh = scm.icosphere(L, cfg.a)
            p = scm.sample_ylm(mesh, 2, 1)
            q1, q2 = scm.rayleigh_quotients(mesh, p)
            target = 6.0 / cfg.a**2
            rows.append((mesh.h, float(abs(q1 - target)), float(abs(q2 - target))))
        gio.write_rows(_out(cfg, "convergence.csv"), ["h", "laplace_quotient_error", "vector_laplacian_error"], rows)
        out.write("mesh quotient errors: " + ", ".join(f"{e:.2e}" for _, e, _ in rows) + "\n")
    return 0


HANDLERS = {
    "solve": cmd_solve,
    "rcs": cmd_rcs,
    "validate": cmd_validate,
    "decompose": cmd_decompose,
    "equivalence": cmd_equivalence,
    "convergence": cmd_convergence,
}


def run(cfg: RunConfig, out=None) -> int:
    return HANDLERS[cfg.command](cfg, out or sys.stdout)


def _pairs(extra):
    overrides = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ParseError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ParseError(f"flag --{key} needs a value")
            value = extra[i + 1]
            i += 2
        overrides[key] = value
    return overrides


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gibc", description="Impedance-sphere scattering toolkit.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="key = value configuration file")
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        text = ""
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ParseError(f"cannot read config {args.config}: {exc.strerror}") from None
        cfg = parse_config(text, _pairs(extra), command=args.command)
    except ParseError as exc:
        print(f"gibc: error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except OSError as exc:
        print(f"gibc: error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return 1
    except (GibcError, ValueError) as exc:
        print(f"gibc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
