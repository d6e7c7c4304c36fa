"""Flat sectioned key=value run configuration.

A run is described by six sections (model, grid, time, init, analysis,
output) with explicit keys; the format is plain INI so configs stay
diff-friendly and need no schema machinery.  Parsing is strict: unknown
sections or keys, missing required keys, and values that fail the module
preconditions all raise ConfigError naming the offending key path.

serialize_config writes sections and keys in a fixed order with repr
floats, so parse -> serialize -> parse is the identity and the sha256 of
the serialized text is a stable fingerprint of the run.
"""

import configparser
import hashlib
import io
import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .grid import Grid
from .model import PRESSURE_KINDS, Equilibrium, ModelParams, PressureLaw
from .solver import SCHEMES, GaussianSpec

INIT_FIELDS = ("rho", "u", "phi")

# required keys per section; centers, pressure.gamma and snapshot_every
# are optional with defaults
_REQUIRED = {
    "model": ("mu", "alpha", "D", "a", "b", "rho_bar",
              "pressure.kind", "pressure.K"),
    "grid": ("dim", "n", "length"),
    "time": ("dt", "t_end", "scheme", "sample_stride"),
    "init": tuple(f"{f}.{key}" for f in INIT_FIELDS
                  for key in ("amplitude", "width")) + ("seed",),
    "analysis": ("window_lo", "window_hi", "q"),
    "output": ("out_dir",),
}
_OPTIONAL = {
    "model": ("pressure.gamma",),
    "grid": (),
    "time": (),
    "init": tuple(f"{f}.center" for f in INIT_FIELDS),
    "analysis": (),
    "output": ("snapshot_every",),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated run description; build_* methods construct live objects."""

    mu: float
    alpha: float
    D: float
    a: float
    b: float
    rho_bar: float
    pressure_kind: str
    pressure_K: float
    pressure_gamma: float

    dim: int
    n: int
    length: float

    dt: float
    t_end: float
    scheme: str
    sample_stride: int

    init: dict = field(default_factory=dict)   # field name -> GaussianSpec
    seed: int = 0

    window: tuple = (10.0, 1000.0)
    q_list: tuple = (2.0,)

    out_dir: str = "out"
    snapshot_every: int = 0

    def __eq__(self, other):
        if not isinstance(other, ExperimentConfig):
            return NotImplemented
        return serialize_config(self) == serialize_config(other)

    def build_model(self):
        if self.pressure_kind == "quadratic":
            law = PressureLaw.quadratic(self.pressure_K)
        else:
            law = PressureLaw.power(self.pressure_K, self.pressure_gamma)
        params = ModelParams(mu=self.mu, alpha=self.alpha, D=self.D,
                             a=self.a, b=self.b, pressure=law)
        return params, Equilibrium.of(params, self.rho_bar)

    def build_grid(self):
        return Grid(dim=self.dim, n=self.n, length=self.length)

    def build_family(self):
        """Per-field GaussianSpec dict for init_data."""
        return dict(self.init)


def _get(section, sec_name, key, conv, label):
    raw = section.get(key)
    try:
        return conv(raw)
    except (TypeError, ValueError):
        raise ConfigError(
            f"{sec_name}.{key}: expected {label}, got {raw!r}") from None


def _parse_center(raw):
    parts = [p for p in raw.replace(",", " ").split() if p]
    return tuple(float(p) for p in parts)


def _parse_q_list(raw):
    out = []
    for p in (p for p in raw.replace(",", " ").split() if p):
        out.append(math.inf if p == "inf" else float(p))
    return tuple(out)


def parse_config(text):
    """Parse the sectioned key=value text into an ExperimentConfig."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None

    for sec in cp.sections():
        if sec not in _REQUIRED:
            raise ConfigError(f"unknown section [{sec}]")
        known = set(_REQUIRED[sec]) | set(_OPTIONAL[sec])
        for key in cp[sec]:
            if key not in known:
                raise ConfigError(f"unknown key {sec}.{key}")
    for sec, keys in _REQUIRED.items():
        if sec not in cp:
            raise ConfigError(f"missing section [{sec}]")
        for key in keys:
            if key not in cp[sec]:
                raise ConfigError(f"missing key {sec}.{key}")

    m, g, t = cp["model"], cp["grid"], cp["time"]
    init_sec, an, out = cp["init"], cp["analysis"], cp["output"]

    kind = m["pressure.kind"]
    if kind not in PRESSURE_KINDS:
        raise ConfigError(
            f"model.pressure.kind: unknown kind {kind!r}; "
            f"expected one of {PRESSURE_KINDS}")
    scheme = t["scheme"]
    if scheme not in SCHEMES:
        raise ConfigError(
            f"time.scheme: unknown scheme {scheme!r}; "
            f"expected one of {SCHEMES}")

    init = {}
    for name in INIT_FIELDS:
        center = None
        if f"{name}.center" in init_sec:
            center = _get(init_sec, "init", f"{name}.center",
                          _parse_center, "comma-separated floats")
        try:
            init[name] = GaussianSpec(
                amplitude=_get(init_sec, "init", f"{name}.amplitude",
                               float, "a float"),
                width=_get(init_sec, "init", f"{name}.width",
                           float, "a float"),
                center=center)
        except ValueError as exc:
            raise ConfigError(f"init.{name}.width: {exc}") from None

    cfg = ExperimentConfig(
        mu=_get(m, "model", "mu", float, "a float"),
        alpha=_get(m, "model", "alpha", float, "a float"),
        D=_get(m, "model", "D", float, "a float"),
        a=_get(m, "model", "a", float, "a float"),
        b=_get(m, "model", "b", float, "a float"),
        rho_bar=_get(m, "model", "rho_bar", float, "a float"),
        pressure_kind=kind,
        pressure_K=_get(m, "model", "pressure.K", float, "a float"),
        pressure_gamma=(_get(m, "model", "pressure.gamma", float, "a float")
                        if "pressure.gamma" in m else 2.0),
        dim=_get(g, "grid", "dim", int, "an integer"),
        n=_get(g, "grid", "n", int, "an integer"),
        length=_get(g, "grid", "length", float, "a float"),
        dt=_get(t, "time", "dt", float, "a float"),
        t_end=_get(t, "time", "t_end", float, "a float"),
        scheme=scheme,
        sample_stride=_get(t, "time", "sample_stride", int, "an integer"),
        init=init,
        seed=_get(init_sec, "init", "seed", int, "an integer"),
        window=(_get(an, "analysis", "window_lo", float, "a float"),
                _get(an, "analysis", "window_hi", float, "a float")),
        q_list=_get(an, "analysis", "q", _parse_q_list,
                    "comma-separated floats or inf"),
        out_dir=out["out_dir"],
        snapshot_every=(_get(out, "output", "snapshot_every", int,
                             "an integer")
                        if "snapshot_every" in out else 0),
    )
    _validate(cfg)
    return cfg


def _validate(cfg):
    try:
        cfg.build_model()
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from None
    try:
        cfg.build_grid()
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None
    if not cfg.dt > 0:
        raise ConfigError("time.dt: must be positive")
    if not cfg.t_end > 0:
        raise ConfigError("time.t_end: must be positive")
    if cfg.sample_stride < 1:
        raise ConfigError("time.sample_stride: must be at least 1")
    for name, spec in cfg.init.items():
        if spec.center is not None and len(spec.center) != cfg.dim:
            raise ConfigError(
                f"init.{name}.center: expected {cfg.dim} coordinates, "
                f"got {len(spec.center)}")
    if cfg.seed < 0:
        raise ConfigError("init.seed: must be nonnegative")
    lo, hi = cfg.window
    if not 0 <= lo < hi:
        raise ConfigError("analysis.window_lo/window_hi: need 0 <= lo < hi")
    for q in cfg.q_list:
        if q < 2:
            raise ConfigError(f"analysis.q: entries must be >= 2, got {q}")
    if cfg.snapshot_every < 0:
        raise ConfigError("output.snapshot_every: must be nonnegative")


def load_config(path):
    """Read and parse a config file; IO errors become ConfigError."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def _fmt_float(x):
    return repr(float(x))


def _fmt_q(q):
    if math.isinf(q):
        return "inf"
    if float(q).is_integer():
        return str(int(q))
    return repr(float(q))


def serialize_config(cfg):
    """Deterministic text form: fixed section and key order, repr floats."""
    buf = io.StringIO()
    w = buf.write
    w("[model]\n")
    for key in ("mu", "alpha", "D", "a", "b", "rho_bar"):
        w(f"{key} = {_fmt_float(getattr(cfg, key))}\n")
    w(f"pressure.kind = {cfg.pressure_kind}\n")
    w(f"pressure.K = {_fmt_float(cfg.pressure_K)}\n")
    w(f"pressure.gamma = {_fmt_float(cfg.pressure_gamma)}\n")
    w("\n[grid]\n")
    w(f"dim = {cfg.dim}\n")
    w(f"n = {cfg.n}\n")
    w(f"length = {_fmt_float(cfg.length)}\n")
    w("\n[time]\n")
    w(f"dt = {_fmt_float(cfg.dt)}\n")
    w(f"t_end = {_fmt_float(cfg.t_end)}\n")
    w(f"scheme = {cfg.scheme}\n")
    w(f"sample_stride = {cfg.sample_stride}\n")
    w("\n[init]\n")
    for name in INIT_FIELDS:
        spec = cfg.init.get(name, GaussianSpec())
        w(f"{name}.amplitude = {_fmt_float(spec.amplitude)}\n")
        w(f"{name}.width = {_fmt_float(spec.width)}\n")
        if spec.center is not None:
            w(f"{name}.center = "
              + ", ".join(_fmt_float(c) for c in spec.center) + "\n")
    w(f"seed = {cfg.seed}\n")
    w("\n[analysis]\n")
    w(f"window_lo = {_fmt_float(cfg.window[0])}\n")
    w(f"window_hi = {_fmt_float(cfg.window[1])}\n")
    w("q = " + ", ".join(_fmt_q(q) for q in cfg.q_list) + "\n")
    w("\n[output]\n")
    w(f"out_dir = {cfg.out_dir}\n")
    w(f"snapshot_every = {cfg.snapshot_every}\n")
    return buf.getvalue()


def config_hash(cfg):
    """sha256 hex digest of the serialized config."""
    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()


def default_config():
    """Canonical fast defaults: 1D box, all model constants 1, K=2."""
    return ExperimentConfig(
        mu=1.0, alpha=1.0, D=1.0, a=1.0, b=1.0, rho_bar=1.0,
        pressure_kind="quadratic", pressure_K=2.0, pressure_gamma=2.0,
        dim=1, n=256, length=200.0,
        dt=0.05, t_end=20.0, scheme="if_rk4", sample_stride=4,
        init={"rho": GaussianSpec(amplitude=0.01, width=3.0),
              "u": GaussianSpec(amplitude=0.005, width=3.0),
              "phi": GaussianSpec(amplitude=0.01, width=3.0)},
        seed=0,
        window=(10.0, 1000.0), q_list=(2.0, math.inf),
        out_dir="out", snapshot_every=0,
    )
