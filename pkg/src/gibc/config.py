"""``key = value`` run configuration with ``#`` comments.

Complex literals: ``<float>``, ``<float>i`` or ``<float>[+|-]<float>i`` without spaces.
Vectors: comma-separated complex literals, e.g. ``1,0.5i,0``.
"""
from __future__ import annotations

import dataclasses
import re

from . import spectral_core as sc
from .errors import ParseError

COMMANDS = ("solve", "rcs", "validate", "decompose", "equivalence", "convergence")

_FLOAT = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_REAL_ONLY = re.compile(rf"^{_FLOAT}$")
_IMAG_ONLY = re.compile(rf"^(?P<im>{_FLOAT})i$")
_BOTH = re.compile(rf"^(?P<re>{_FLOAT})(?P<im>[+-](?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)i$")


def parse_complex(text, line=None, column=None):
    s = text.strip()
    if _REAL_ONLY.match(s):
        return complex(float(s), 0.0)
    m = _IMAG_ONLY.match(s)
    if m:
        return complex(0.0, float(m["im"]))
    m = _BOTH.match(s)
    if m:
        return complex(float(m["re"]), float(m["im"]))
    bad = _first_bad(s)
    col = None if column is None else column + bad
    raise ParseError(f"malformed complex literal {text!r} (expected <float>[+|-]<float>i)", line, col)


def _first_bad(s):
    # Position of the first character outside the literal alphabet.
    for k, ch in enumerate(s):
        if ch not in "0123456789.eE+-i":
            return k
    return 0


def parse_real(text, line=None, column=None):
    z = parse_complex(text, line, column)
    if z.imag != 0.0:
        raise ParseError(f"expected a real number, got {text!r}", line, column)
    return z.real


def parse_vector(text, line=None, column=None):
    parts = text.split(",")
    if len(parts) != 3:
        raise ParseError(f"expected three comma-separated components, got {text!r}", line, column)
    out, offset = [], 0
    for part in parts:
        out.append(parse_complex(part, line, None if column is None else column + offset))
        offset += len(part) + 1
    return out


def parse_bool(text, line=None, column=None):
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ParseError(f"expected a boolean, got {text!r}", line, column)


# ---------------------------------------------------------------------------
# Model and incident specs
# ---------------------------------------------------------------------------

_MODEL_PARAMS = {
    "pec": (),
    "scalar": ("lambda",),
    "full": ("lambda", "eta", "gamma"),
    "curl_only": ("lambda", "eta"),
    "div_only": ("lambda", "gamma"),
    "thin_coating": ("delta", "eps", "mu"),
}


@dataclasses.dataclass
class ModelSpec:
    family: str
    params: dict

    def build(self, omega=None):
        p = self.params
        get = lambda k, d=0.0: complex(p.get(k, d))  # noqa: E731
        if self.family == "pec":
            return sc.Scalar(0.0)
        if self.family == "scalar":
            return sc.Scalar(get("lambda"))
        if self.family == "full":
            return sc.FullSecondOrder(get("lambda"), get("eta"), get("gamma"))
        if self.family == "curl_only":
            return sc.CurlOnly(get("lambda"), get("eta"))
        if self.family == "div_only":
            return sc.DivOnly(get("lambda"), get("gamma"))
        if self.family == "thin_coating":
            return sc.ThinCoating(float(get("delta").real), get("eps", 1.0), get("mu", 1.0))
        raise ValueError(self.family)


@dataclasses.dataclass
class IncidentSpec:
    kind: str  # plane | dipole
    d: list = dataclasses.field(default_factory=lambda: [0.0, 0.0, 1.0])
    p: list = dataclasses.field(default_factory=lambda: [1.0, 0.0, 0.0])
    moment: list = dataclasses.field(default_factory=lambda: [0.0, 0.0, 1.0])
    position: list = dataclasses.field(default_factory=lambda: [0.0, 0.0, 0.0])
    electric: bool = True

    def build(self, omega):
        from .solver_surface import Dipole, PlaneWave

        if self.kind == "plane":
            return PlaneWave([c.real for c in self.d], self.p, omega)
        return Dipole(self.moment, [c.real for c in self.position], omega, self.electric)


def _split_params(text, line, column):
    tokens = text.split()
    if not tokens:
        raise ParseError("empty specification", line, column)
    head, params = tokens[0].lower(), {}
    offset = len(tokens[0])
    for tok in tokens[1:]:
        offset = text.index(tok, offset)
        if "=" not in tok:
            raise ParseError(f"expected name=value, got {tok!r}", line, None if column is None else column + offset)
        k, v = tok.split("=", 1)
        params[k.lower()] = (v, None if column is None else column + offset + len(k) + 1)
        offset += len(tok)
    return head, params


def parse_model(text, line=None, column=None):
    family, raw = _split_params(text, line, column)
    aliases = {"full_second_order": "full", "curlonly": "curl_only", "divonly": "div_only", "thin": "thin_coating"}
    family = aliases.get(family, family)
    if family not in _MODEL_PARAMS:
        raise ParseError(f"unknown model {family!r}; expected one of {', '.join(_MODEL_PARAMS)}", line, column)
    params = {}
    for k, (v, col) in raw.items():
        k = "lambda" if k in ("lam", "l") else k
        if k not in _MODEL_PARAMS[family]:
            raise ParseError(f"model {family!r} has no parameter {k!r}", line, col)
        params[k] = parse_complex(v, line, col)
    return ModelSpec(family, params)


def parse_incident(text, line=None, column=None):
    kind, raw = _split_params(text, line, column)
    kind = {"plane_wave": "plane", "planewave": "plane"}.get(kind, kind)
    if kind not in ("plane", "dipole"):
        raise ParseError(f"unknown incident kind {kind!r}; expected plane or dipole", line, column)
    spec = IncidentSpec(kind)
    allowed = ("d", "p") if kind == "plane" else ("moment", "position", "kind")
    for k, (v, col) in raw.items():
        if k not in allowed:
            raise ParseError(f"incident {kind!r} has no parameter {k!r}", line, col)
        if k == "kind":
            if v not in ("electric", "magnetic"):
                raise ParseError("dipole kind must be electric or magnetic", line, col)
            spec.electric = v == "electric"
        else:
            setattr(spec, k, parse_vector(v, line, col))
    return spec


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class RunConfig:
    command: str | None = None
    omega: float | None = None
    a: float = 1.0
    R: float | None = None
    model: ModelSpec | None = None
    incident: IncidentSpec = dataclasses.field(default_factory=lambda: IncidentSpec("plane"))
    nmax: int | None = None  # None means auto
    output_dir: str = "."
    mesh_path: str | None = None
    mesh_level: int = 3
    rcs_phi: float = 0.0
    rcs_points: int = 181
    plot: bool = True
    order: int = 2
    elements: int | None = None
    solver: str = "exact"
    convergence: str = "fem"
    decompose: str = "spectral"
    input: str = "random"
    seed: int = 0
    tol: float | None = None

    def build_model(self):
        return self.model.build(self.omega)

    def build_incident(self):
        return self.incident.build(self.omega)

    @property
    def outer_radius(self):
        return self.R if self.R is not None else 2.0 * self.a

    def resolved_nmax(self):
        return self.nmax if self.nmax is not None else sc.default_nmax(self.omega, self.a)


_KEYS = {
    "command": "command", "omega": "real", "a": "real", "r": "real", "model": "model",
    "lambda": "coef", "eta": "coef", "gamma": "coef", "incident": "incident",
    "n_max": "nmax", "nmax": "nmax", "output_dir": "str", "mesh_path": "str", "mesh_level": "int",
    "rcs_phi": "real", "rcs_points": "int", "plot": "bool", "order": "int", "elements": "int",
    "solver": "str", "convergence": "str", "decompose": "str", "input": "str", "seed": "int", "tol": "real",
}

_CHOICES = {
    "solver": ("exact", "fem"),
    "convergence": ("fem", "nmax", "mesh"),
    "decompose": ("spectral", "mesh"),
    "input": ("random", "gradient", "curl"),
}

_REQUIRED = {
    "solve": ("omega", "model"),
    "rcs": ("omega", "model"),
    "validate": (),
    "decompose": ("omega", "model"),
    "equivalence": ("omega", "model"),
    "convergence": ("omega", "model"),
}


def _set(cfg, key, value, line, column, coefs):
    kind = _KEYS.get(key)
    if kind is None:
        where = f"unknown key {key!r}"
        raise ParseError(where, line, column if line is not None else None)
    attr = {"r": "R", "n_max": "nmax"}.get(key, key)
    if kind == "command":
        if value not in COMMANDS:
            raise ParseError(f"unknown command {value!r}", line, column)
        cfg.command = value
    elif kind == "real":
        setattr(cfg, attr, parse_real(value, line, column))
    elif kind == "int":
        try:
            setattr(cfg, attr, int(value))
        except ValueError:
            raise ParseError(f"expected an integer for {key!r}, got {value!r}", line, column) from None
    elif kind == "bool":
        setattr(cfg, attr, parse_bool(value, line, column))
    elif kind == "nmax":
        if value.lower() == "auto":
            cfg.nmax = None
        else:
            try:
                cfg.nmax = int(value)
            except ValueError:
                raise ParseError(f"N_max must be an integer or 'auto', got {value!r}", line, column) from None
    elif kind == "model":
        cfg.model = parse_model(value, line, column)
    elif kind == "incident":
        cfg.incident = parse_incident(value, line, column)
    elif kind == "coef":
        coefs[key] = (parse_complex(value, line, column), line, column)
    else:
        if key in _CHOICES and value not in _CHOICES[key]:
            raise ParseError(f"{key} must be one of {', '.join(_CHOICES[key])}", line, column)
        setattr(cfg, attr, value)


def parse_config(text: str = "", overrides: dict | None = None, command: str | None = None) -> RunConfig:
    """Parse config text, then apply flag overrides (which win)."""
    cfg = RunConfig()
    coefs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        if "=" not in body:
            raise ParseError("expected key = value", lineno, 1)
        key, value = body.split("=", 1)
        col = len(body) - len(body.lstrip()) + 1
        vcol = len(key) + 2 + (len(value) - len(value.lstrip()))
        name = key.strip().lower()
        if name not in _KEYS:
            raise ParseError(f"unknown key {key.strip()!r}", lineno, col)
        _set(cfg, name, value.strip(), lineno, vcol, coefs)
    for key, value in (overrides or {}).items():
        k = key.lower().replace("-", "_")
        if k not in _KEYS:
            raise ParseError(f"unknown flag --{key}")
        _set(cfg, k, str(value), None, None, coefs)
    if command is not None:
        cfg.command = command
    _apply_coefficients(cfg, coefs)
    _check(cfg)
    return cfg


def _apply_coefficients(cfg, coefs):
    if not coefs:
        return
    if cfg.model is None:
        if set(coefs) == {"lambda"}:
            cfg.model = ModelSpec("scalar", {})
        else:
            fam = {frozenset({"lambda", "eta"}): "curl_only", frozenset({"lambda", "gamma"}): "div_only"}
            cfg.model = ModelSpec(fam.get(frozenset(coefs), "full"), {})
    allowed = _MODEL_PARAMS[cfg.model.family]
    for k, (v, line, col) in coefs.items():
        if k not in allowed:
            raise ParseError(f"model {cfg.model.family!r} has no parameter {k!r}", line, col)
        cfg.model.params[k] = v


def _check(cfg):
    if cfg.command is None:
        raise ParseError("missing command")
    for key in _REQUIRED[cfg.command]:
        if getattr(cfg, key) is None:
            raise ParseError(f"missing required key {key!r} for command {cfg.command!r}")
    for key in ("omega", "a", "R"):
        v = getattr(cfg, key)
        if v is not None and v <= 0:
            raise ParseError(f"{key} must be positive")
    if cfg.R is not None and cfg.R <= cfg.a:
        raise ParseError("R must exceed a")
    if cfg.nmax is not None and cfg.nmax < 1:
        raise ParseError("N_max must be at least 1")
    if cfg.order not in (1, 2):
        raise ParseError("order must be 1 or 2")
    if cfg.model is not None and cfg.model.family == "thin_coating" and "delta" not in cfg.model.params:
        raise ParseError("thin_coating needs delta")
