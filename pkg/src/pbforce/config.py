"""INI run configuration.  The grammar is documented in docs/formats.md."""

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, NeutralityError
from .geometry.grid import GridSpec
from .geometry.levelset import SPHERE_CLEARANCE_CELLS, levelset_sphere, levelset_union
from .singular_fields import CHARGE_CLEARANCE_CELLS
from .ion_model import IonicSpecies, IonModel
from .singular_fields import PointChargeSet
from .system import ConstantTrace, LinearTrace, SolvationSystem
from .units import DEFAULT_TEMPERATURE, molar_to_number_density, permittivity


@dataclass
class RunConfig:
    grid: GridSpec
    spheres: list                 # [(center (3,), radius)]
    charges: PointChargeSet
    eps_minus: float              # internal units
    eps_plus: float
    ions: IonModel
    boundary: object = None
    shift: bool = True
    tol: float = 1e-9
    max_newton: int = 50
    aux_tol: float = 1e-10
    face_rule: str = "fraction"
    trace_model: str = "linear"
    t_values: list = field(default_factory=lambda: [0.02, 0.01])
    bump_flat: float = 0.3
    bump_width: float = 0.4
    tangential: bool = True
    out_dir: str = "out"
    source: str = ""

    def system(self):
        return SolvationSystem(self.charges, self.eps_minus, self.eps_plus, self.ions,
                               boundary=self.boundary, shift=self.shift, face_rule=self.face_rule)

    def levelset(self):
        ls = None
        for center, radius in self.spheres:
            s = levelset_sphere(center, radius, self.grid)
            ls = s if ls is None else levelset_union(ls, s)
        return ls


class _Reader:
    def __init__(self, parser, text, source):
        self.p = parser
        self.lines = text.splitlines()
        self.source = source

    def _lineno(self, section, key):
        sec = None
        for i, line in enumerate(self.lines, 1):
            m = re.match(r"\s*\[([^\]]+)\]", line)
            if m:
                sec = m.group(1).strip()
            elif sec == section and re.match(rf"\s*{re.escape(key)}\s*[=:]", line, re.I):
                return i
        return None

    def error(self, section, key, msg):
        ln = self._lineno(section, key)
        where = f"{self.source}:{ln}" if ln else self.source
        return ConfigError(f"{where}: [{section}] {key}: {msg}")

    def get(self, section, key, conv=str, default=None, required=False):
        if not self.p.has_option(section, key):
            if required:
                raise ConfigError(f"{self.source}: missing required field [{section}] {key}")
            return default
        raw = self.p.get(section, key).strip()
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            raise self.error(section, key, f"cannot parse {raw!r} ({exc})") from None

    def floats(self, section, key, n=None, default=None, required=False):
        def conv(raw):
            vals = [float(v) for v in re.split(r"[,\s]+", raw) if v]
            if n is not None and len(vals) != n:
                raise ValueError(f"expected {n} numbers, got {len(vals)}")
            return vals
        return self.get(section, key, conv, default, required)

    def records(self, section, key, width, required=False):
        """Semicolon-separated records of ``width`` comma-separated numbers."""
        def conv(raw):
            out = []
            for rec in raw.split(";"):
                rec = rec.strip()
                if not rec:
                    continue
                vals = [float(v) for v in rec.split(",")]
                if len(vals) != width:
                    raise ValueError(f"record {rec!r} needs {width} numbers")
                out.append(vals)
            if not out:
                raise ValueError("no records")
            return out
        return self.get(section, key, conv, None, required)


def _bool(raw):
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc})") from None
    return parse_config(text, str(path))


def parse_config(text, source="<config>"):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: syntax error: {exc}") from None
    rd = _Reader(parser, text, source)
    for sec in ("grid", "geometry", "charges", "dielectric"):
        if not parser.has_section(sec):
            raise ConfigError(f"{source}: missing section [{sec}]")

    nodes = rd.get("grid", "nodes", int, required=True)
    if parser.has_option("grid", "lower"):
        lower = rd.floats("grid", "lower", 3, required=True)
        upper = rd.floats("grid", "upper", 3, required=True)
    else:
        hw = rd.get("grid", "half_width", float, required=True)
        c = rd.floats("grid", "center", 3, default=[0.0, 0.0, 0.0])
        lower = [ci - hw for ci in c]
        upper = [ci + hw for ci in c]
    try:
        grid = GridSpec(tuple(lower), tuple(upper), (nodes, nodes, nodes))
    except ValueError as exc:
        raise rd.error("grid", "nodes", str(exc)) from None

    spheres = [(np.array(r[:3]), r[3]) for r in rd.records("geometry", "spheres", 4, required=True)]
    ch = rd.records("charges", "charges", 4, required=True)
    charges = PointChargeSet([r[:3] for r in ch], [r[3] for r in ch])

    temperature = rd.get("dielectric", "temperature", float, DEFAULT_TEMPERATURE)
    units = rd.get("dielectric", "units", str, "relative")
    em = rd.get("dielectric", "eps_minus", float, required=True)
    ep = rd.get("dielectric", "eps_plus", float, required=True)
    if units == "relative":
        em, ep = permittivity(em, temperature), permittivity(ep, temperature)
    elif units != "internal":
        raise rd.error("dielectric", "units", "expected 'relative' or 'internal'")
    if not (em > 0 and ep > 0):
        raise rd.error("dielectric", "eps_minus", "permittivities must be positive")

    ions = IonModel.salt_free()
    if parser.has_section("ions") and parser.has_option("ions", "species"):
        conc_units = rd.get("ions", "units", str, "molar")
        recs = rd.get("ions", "species", lambda raw: [
            [float(v) for v in rec.split(":")] for rec in raw.split(",") if rec.strip()])
        species = []
        for rec in recs:
            if len(rec) != 2:
                raise rd.error("ions", "species", "each species is valence:concentration")
            z, conc = rec
            if conc_units == "molar":
                conc = molar_to_number_density(conc)
            elif conc_units != "internal":
                raise rd.error("ions", "units", "expected 'molar' or 'internal'")
            try:
                species.append(IonicSpecies(z, conc))
            except ValueError as exc:
                raise rd.error("ions", "species", str(exc)) from None
        if species:
            try:
                ions = IonModel(species)
            except NeutralityError as exc:
                raise rd.error("ions", "species",
                               f"rejected, the condition of charge neutrality fails: {exc}") from None

    boundary = None
    shift = True
    if parser.has_section("boundary"):
        spec = rd.get("boundary", "trace", str, "zero")
        kind, _, arg = spec.partition(":")
        kind = kind.strip().lower()
        try:
            if kind == "zero":
                boundary = None
            elif kind == "constant":
                boundary = ConstantTrace(float(arg))
            elif kind == "linear":
                vals = [float(v) for v in arg.split(",")]
                if len(vals) != 4:
                    raise ValueError("linear:ax,ay,az,b")
                boundary = LinearTrace(vals[:3], vals[3])
            else:
                raise ValueError(f"unknown trace kind {kind!r}")
        except ValueError as exc:
            raise rd.error("boundary", "trace", str(exc)) from None
        shift = rd.get("boundary", "shift", _bool, True)

    kw = dict(
        tol=rd.get("solver", "tol", float, 1e-9),
        max_newton=rd.get("solver", "max_newton", int, 50),
        aux_tol=rd.get("solver", "aux_tol", float, 1e-10),
        face_rule=rd.get("solver", "face_rule", str, "fraction"),
        trace_model=rd.get("solver", "trace_model", str, "linear"),
        t_values=rd.floats("validate", "t", default=[0.02, 0.01]),
        bump_flat=rd.get("validate", "bump_flat", float, 0.3),
        bump_width=rd.get("validate", "bump_width", float, 0.4),
        tangential=rd.get("validate", "tangential", _bool, True),
        out_dir=rd.get("output", "dir", str, "out"),
    )
    if kw["face_rule"] not in ("nodal", "fraction"):
        raise rd.error("solver", "face_rule", "expected 'nodal' or 'fraction'")
    if kw["trace_model"] not in ("linear", "quadratic"):
        raise rd.error("solver", "trace_model", "expected 'linear' or 'quadratic'")
    if len(kw["t_values"]) < 2:
        raise rd.error("validate", "t", "need at least two step sizes")
    cfg = RunConfig(grid, spheres, charges, em, ep, ions, boundary, shift, source=source, **kw)
    try:
        cfg.system()
    except ValueError as exc:
        raise rd.error("dielectric", "eps_plus", str(exc)) from None
    _check_geometry(rd, cfg)
    return cfg


def _check_geometry(rd, cfg):
    """Clearances from the box and of the charges, evaluated on the analytic spheres."""
    g = cfg.grid
    lo, hi = np.asarray(g.lower), np.asarray(g.upper)
    for center, radius in cfg.spheres:
        if radius <= 0:
            raise rd.error("geometry", "spheres", f"radius {radius} must be positive")
        gap = SPHERE_CLEARANCE_CELLS * g.h
        if np.any(center - radius < lo + gap) or np.any(center + radius > hi - gap):
            raise rd.error("geometry", "spheres",
                           f"sphere at {center.tolist()} radius {radius} needs {gap:.4g} clearance "
                           f"from the box at this resolution")
    centers = np.array([c for c, _ in cfg.spheres])
    radii = np.array([r for _, r in cfg.spheres])
    for x in cfg.charges.positions:
        phi = np.min(np.linalg.norm(centers - x, axis=1) - radii)
        if phi > -CHARGE_CLEARANCE_CELLS * g.h:
            raise rd.error("charges", "charges",
                           f"charge at {x.tolist()} must lie {CHARGE_CLEARANCE_CELLS:g} cells "
                           f"inside the solute")
