"""Plain-text run configuration.

A config file holds UTF-8 lines ``section.key = value``; ``#`` starts a
comment.  Later lines win, and ``--set key=value`` overrides win over the
file.  Every key is declared in :data:`SCHEMA` with a parser and a default.
"""

import re
from dataclasses import dataclass, field

from .errors import BadParam, BadValue, ParseError, UnknownKey


def _int(v):
    return int(v, 0) if isinstance(v, str) else int(v)


def _float(v):
    return float(v)


def _complex(v):
    return complex(str(v).replace(" ", "").replace("i", "j"))


def _bool(v):
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _str(v):
    return str(v).strip()


def _floats(v):
    return tuple(float(x) for x in str(v).replace(",", " ").split())


def _ints(v):
    return tuple(int(x) for x in str(v).replace(",", " ").split())


def _words(v):
    return tuple(x for x in str(v).replace(",", " ").split())


def _positive(x):
    return x > 0


def _non_negative(x):
    return x >= 0


def _one_of(*opts):
    return lambda x: x in opts


# key: (parser, default, validator or None, reason shown on failure)
SCHEMA = {
    "family.kind": (_str, "model", _one_of("model", "imposter", "abelian", "cfamily"),
                    "one of model, imposter, abelian, cfamily"),
    "model.m": (_int, 1, _non_negative, "m must be >= 0"),
    "imposter.w": (_complex, 0.5, lambda w: abs(w) <= 1, "|w| must be <= 1"),
    "abelian.r": (_float, 1.0, _positive, "must be positive"),
    "cfamily.c": (_float, 1.0, _positive, "must be positive"),

    "point.t": (_float, 1.0, _positive, "must be positive"),
    "point.x1": (_float, 1.0, None, ""),
    "point.x2": (_float, 0.0, None, ""),

    "table.t": (_float, 1.0, _positive, "must be positive"),
    "table.rho_max": (_float, 10.0, _positive, "must be positive"),
    "table.n": (_int, 41, lambda n: n >= 2, "need at least 2 rows"),

    "grid.t_min": (_float, 0.5, _positive, "must be positive"),
    "grid.t_max": (_float, 2.0, _positive, "must be positive"),
    "grid.x_half": (_float, 2.0, _positive, "must be positive"),
    "grid.x_shift": (_float, 0.0, None, ""),
    "grid.nt": (_int, 33, lambda n: n >= 8, "need at least 8 nodes"),
    "grid.nx": (_int, 33, lambda n: n >= 8, "need at least 8 nodes"),
    "grid.levels": (_int, 3, lambda n: n >= 3, "a refinement study needs 3 levels"),

    "identity.sets": (_words, ("projected", "curvature_projection", "pairing", "balance", "bochner"),
                      lambda ws: all(w in IDENTITY_SETS for w in ws),
                      "unknown identity set"),
    "identity.synthetic": (_int, 0, _non_negative, "must be >= 0"),

    "flux.radii": (_floats, (4.0, 8.0, 16.0), lambda r: len(r) >= 2 and all(x > 0 for x in r),
                   "need at least two positive radii"),
    "flux.t_min": (_float, 0.05, _positive, "must be positive"),
    "flux.t_max": (_float, 20.0, _positive, "must be positive"),
    "flux.outer_ratio": (_float, 4.0, lambda x: x > 1, "must exceed 1"),
    "flux.max_spread": (_float, 1.5, lambda x: x >= 1, "must be >= 1"),

    "relax.experiment": (_str, "uniqueness", _one_of("uniqueness", "comparison"),
                         "uniqueness or comparison"),
    "relax.m": (_int, 0, _non_negative, "m must be >= 0"),
    "relax.t_min": (_float, 0.2, _positive, "must be positive"),
    "relax.t_max": (_float, 5.0, _positive, "must be positive"),
    "relax.rho_max": (_float, 10.0, _positive, "must be positive"),
    "relax.nt": (_int, 129, lambda n: n >= 3, "need at least 3 nodes"),
    "relax.nrho": (_int, 129, lambda n: n >= 3, "need at least 3 nodes"),
    "relax.init_amplitude": (_float, 0.5, _non_negative, "must be >= 0"),
    "relax.source": (_float, 0.1, _non_negative, "must be >= 0"),

    "solver.tolerance": (_float, 1e-11, _positive, "must be positive"),
    "solver.max_sweeps": (_int, 200_000, _positive, "must be positive"),
    "solver.damping": (_float, 0.8, lambda x: 0 < x <= 1, "must lie in (0, 1]"),
    "solver.scheme": (_str, "gauss_seidel_newton", _one_of("gauss_seidel_newton", "jacobi_newton"),
                      "gauss_seidel_newton or jacobi_newton"),
    "solver.log_every": (_int, 100, _non_negative, "must be >= 0"),

    "ode.equation": (_str, "y", _one_of("y", "alpha"), "y or alpha"),
    "ode.k": (_int, 1, _non_negative, "k must be >= 0"),
    "ode.mu": (_float, 0.0, _non_negative, "must be >= 0"),
    "ode.forcing": (_str, "none", _one_of("none", "sin", "const"), "none, sin or const"),
    "ode.y0": (_float, 0.0, None, ""),
    "ode.tau_end": (_float, 5.0, _positive, "must be positive"),
    "ode.zconst": (_float, 0.0, None, ""),
    "ode.alpha0": (_float, -0.5, None, ""),
    "ode.t0": (_float, 1.0, _positive, "must be positive"),
    "ode.t_end": (_float, 10.0, _positive, "must be positive"),

    "asym.k": (_int, 2, _non_negative, "k must be >= 0"),
    "asym.m": (_int, 0, _non_negative, "m must be >= 0"),
    "asym.t_z": (_float, 0.1, _positive, "must be positive"),
    "asym.m_max": (_int, 4, _non_negative, "must be >= 0"),
    "asym.p_max": (_int, 3, lambda p: p >= 1, "must be >= 1"),

    "run.seed": (_int, 1, _non_negative, "must be >= 0"),
    "report.timestamp": (_bool, False, None, ""),
}

IDENTITY_SETS = ("projected", "curvature_projection", "pairing", "balance", "bochner",
                 "alpha", "w", "divergence")

_LINE = re.compile(r"^\s*([A-Za-z_][\w]*\.[A-Za-z_][\w]*)\s*=\s*(.*?)\s*$")


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)
    explicit: dict = field(default_factory=dict)

    def __getitem__(self, key):
        if key not in SCHEMA:
            raise UnknownKey(key)
        return self.values[key]

    def set(self, key, raw):
        if key not in SCHEMA:
            raise UnknownKey(key)
        parser, _, check, reason = SCHEMA[key]
        try:
            value = parser(raw)
        except (TypeError, ValueError) as exc:
            raise BadValue(key, raw, str(exc)) from None
        if check is not None and not check(value):
            raise BadValue(key, raw, reason)
        self.values[key] = value
        self.explicit[key] = raw

    def echo(self):
        """Every key with its effective value, as JSON-friendly scalars."""
        out = {}
        for k in sorted(self.values):
            v = self.values[k]
            if isinstance(v, complex):
                v = str(v)
            elif isinstance(v, tuple):
                v = list(v)
            out[k] = v
        return out

    # -- typed views -------------------------------------------------------

    @property
    def model(self):
        from .models import ModelParams
        return ModelParams(self["model.m"])

    @property
    def family(self):
        from .models import Family
        return Family(kind=self["family.kind"], m=self["model.m"], w=self["imposter.w"],
                      r=self["abelian.r"], c=self["cfamily.c"])

    @property
    def grid(self):
        from .lattice import GridSpec
        try:
            return GridSpec(self["grid.t_min"], self["grid.t_max"], self["grid.x_half"],
                            self["grid.nt"], self["grid.nx"], self["grid.x_shift"])
        except ValueError as exc:
            raise BadValue("grid", "", str(exc)) from None

    @property
    def axi_grid(self):
        from .relaxation import AxiGrid
        try:
            return AxiGrid(self["relax.t_min"], self["relax.t_max"], self["relax.rho_max"],
                           self["relax.nt"], self["relax.nrho"])
        except BadParam as exc:
            raise BadValue("relax", "", str(exc)) from None

    @property
    def solver(self):
        from .relaxation import SolverConfig
        return SolverConfig(self["solver.tolerance"], self["solver.max_sweeps"],
                            self["solver.damping"], self["solver.scheme"],
                            self["solver.log_every"])


def defaults():
    cfg = RunConfig()
    for key, (parser, default, _, _) in SCHEMA.items():
        cfg.values[key] = default
    return cfg


def parse_lines(lines, cfg=None, source="<config>"):
    cfg = cfg or defaults()
    for no, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0]
        if not text.strip():
            continue
        m = _LINE.match(text)
        if not m or not m.group(2):
            raise ParseError(no, raw.rstrip("\n"))
        cfg.set(m.group(1), m.group(2))
    return cfg


def parse_override(item):
    """Split ``key=value`` from a ``--set`` flag."""
    m = _LINE.match(item)
    if not m or not m.group(2):
        raise ParseError(0, item)
    return m.group(1), m.group(2)


def parse_config(path=None, overrides=()):
    """Defaults, then the file at ``path`` (if any), then ``overrides`` in order.

    Raises
    ------
    ParseError, UnknownKey, BadValue
    """
    cfg = defaults()
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            parse_lines(fh, cfg, str(path))
    for item in overrides:
        key, value = parse_override(item)
        cfg.set(key, value)
    return cfg
