"""Run configuration: line-oriented ``key = value`` text with ``#`` comments.

Required keys are ``nx``, ``ny`` and ``t_end``; every other key has the
default listed in ``RunConfig``.  Unknown keys, duplicates, malformed values
and out-of-range values are rejected with the offending line number.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from typing import Optional

from ..eos import KERNELS, POTENTIALS, EosSpec, TransportSpec, get_kernel, get_potential
from ..errors import ConfigError, FormatError, NsfacError
from ..grid import GridSpec
from ..initial import INITIAL_CONDITIONS
from ..solver import Model, RegularizationParams, StepControl

REQUIRED = ("nx", "ny", "t_end")


def _positive(v):
    return v > 0


def _non_negative(v):
    return v >= 0


# key -> (predicate, message); keys absent here are only type-checked
_RANGES = {
    "nx": (lambda v: v >= 4, ">= 4"),
    "ny": (lambda v: v >= 4, ">= 4"),
    "Lx": (_positive, "> 0"),
    "Ly": (_positive, "> 0"),
    "t_end": (_positive, "> 0"),
    "cfl": (lambda v: 0 < v <= 1, "in (0, 1]"),
    "dt_max": (_positive, "> 0"),
    "a": (_positive, "> 0"),
    "mu_a": (_positive, "> 0"),
    "mu_b": (_non_negative, ">= 0"),
    "eta_a": (_non_negative, ">= 0"),
    "kappa_a": (_positive, "> 0"),
    "kappa_b": (_non_negative, ">= 0"),
    "epsilon": (_non_negative, ">= 0"),
    "delta": (_non_negative, ">= 0"),
    "Gamma": (lambda v: v >= 4, ">= 4"),
    "rho0": (_positive, "> 0"),
    "theta0": (_positive, "> 0"),
    "chi0": (lambda v: -1 <= v <= 1, "in [-1, 1]"),
    "r0": (_positive, "> 0"),
    "w": (_positive, "> 0"),
    "thickness": (_positive, "> 0"),
    "diag_every": (lambda v: v >= 1, ">= 1"),
    "snapshot_every": (_non_negative, ">= 0"),
    "workers": (lambda v: v >= 1, ">= 1"),
    "theta_bar": (_positive, "> 0"),
    "rho_floor": (_positive, "> 0"),
    "chi_tol": (_non_negative, ">= 0"),
    "max_steps": (_non_negative, ">= 0"),
    "kernel": (lambda v: v in KERNELS, f"one of {sorted(KERNELS)}"),
    "potential": (lambda v: v in POTENTIALS, f"one of {sorted(POTENTIALS)}"),
    "initial": (lambda v: v in INITIAL_CONDITIONS, f"one of {sorted(INITIAL_CONDITIONS)}"),
}


@dataclass(frozen=True)
class RunConfig:
    # grid
    nx: int
    ny: int
    t_end: float
    Lx: float = 1.0
    Ly: float = 1.0
    # step control
    cfl: float = 0.4
    dt_max: float = math.inf
    max_steps: Optional[int] = None
    # constitutive bundle
    a: float = 1.0
    S_const: float = 0.0
    kernel: str = "default"
    potential: str = "double_well"
    mu_a: float = 0.5
    mu_b: float = 0.1
    eta_a: float = 0.0
    kappa_a: float = 1.0
    kappa_b: float = 0.5
    # regularisation
    epsilon: float = 0.0
    delta: float = 0.0
    Gamma: float = 4.0
    # initial data
    initial: str = "bubble"
    rho0: float = 1.0
    theta0: float = 1.0
    chi0: float = 1.0
    x0: float = 0.5
    y0: float = 0.5
    r0: float = 0.25
    w: float = 0.05
    amplitude: float = 0.1
    thickness: float = 0.05
    # output and execution
    diag_every: int = 10
    snapshot_every: int = 0
    output_dir: Optional[str] = None
    workers: int = 1
    theta_bar: float = 1.0
    rho_floor: float = 1e-10
    chi_tol: float = 1e-6

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            check = _RANGES.get(f.name)
            if check is not None and not check[0](value):
                raise ConfigError(f"{f.name} = {value!r} out of range (must be {check[1]})")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    # --- builders -----------------------------------------------------------

    def grid(self):
        return GridSpec(self.nx, self.ny, self.Lx, self.Ly)

    def step_control(self):
        return StepControl(t_end=self.t_end, cfl=self.cfl, dt_max=self.dt_max)

    def model(self, workers=None):
        return Model(
            eos=EosSpec(a=self.a, kernel=get_kernel(self.kernel), S_const=self.S_const),
            potential=get_potential(self.potential),
            transport=TransportSpec(self.mu_a, self.mu_b, self.eta_a, self.kappa_a, self.kappa_b),
            reg=RegularizationParams(self.epsilon, self.delta, self.Gamma),
            rho_floor=self.rho_floor,
            chi_tol=self.chi_tol,
            workers=self.workers if workers is None else workers,
        )

    def initial_state(self, model: Optional[Model] = None):
        model = model or self.model()
        g = self.grid()
        if self.initial == "uniform":
            return INITIAL_CONDITIONS["uniform"](g, model, self.rho0, self.theta0, self.chi0)
        if self.initial == "bubble":
            return INITIAL_CONDITIONS["bubble"](g, model, self.x0, self.y0, self.r0, self.w,
                                                self.rho0, self.theta0)
        return INITIAL_CONDITIONS["shear"](g, model, self.amplitude, self.thickness,
                                           self.rho0, self.theta0)


_FIELDS = {f.name: f for f in fields(RunConfig)}
_INT_KEYS = {"nx", "ny", "max_steps", "diag_every", "snapshot_every", "workers"}
_STR_KEYS = {"kernel", "potential", "initial", "output_dir"}


def _convert(key, raw, line):
    if key in _STR_KEYS:
        if raw == "":
            raise ConfigError(f"empty value for {key}", line)
        return raw
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key} expects an integer, got {raw!r}", line) from None
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{key} expects a number, got {raw!r}", line) from None
    if math.isnan(value) or (math.isinf(value) and key != "dt_max"):
        raise ConfigError(f"{key} must be finite, got {raw!r}", line)
    return value


def parse_config(text: str) -> RunConfig:
    values, lines = {}, {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        content = raw_line.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigError(f"expected 'key = value', got {content!r}", number)
        key, raw = (part.strip() for part in content.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}", number)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", number)
        values[key] = _convert(key, raw, number)
        lines[key] = number
    missing = [k for k in REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    try:
        return RunConfig(**values)
    except ConfigError as exc:
        bad = next((k for k in values if str(exc).startswith(f"{k} =")), None)
        raise ConfigError(str(exc), lines.get(bad)) from None
    except NsfacError as exc:
        raise ConfigError(str(exc)) from None


def _format(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(config: RunConfig) -> str:
    """Every key in declaration order; ``parse_config`` reproduces ``config`` exactly."""
    out = []
    for f in fields(config):
        value = getattr(config, f.name)
        if value is None:
            continue
        out.append(f"{f.name} = {_format(value)}")
    return "\n".join(out) + "\n"


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
