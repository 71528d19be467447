"""Run configuration: flat ``section.key = value`` parsing, rendering, presets,
and initial-data sampling."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Union

import numpy as np

from .grid import Field, Grid, make_grid
from .integrator import RunMode, StepControl
from .kernel import BoxKernel, load_sampled_kernel
from .model import ModelParams

_REQUIRED = object()


class ConfigError(ValueError):
    """Configuration rejection with a human-readable location."""


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolyBump:
    """amp * (x - a)^p * x^q * (x - b)^r on [a, b], zero outside.

    The closed-form polynomial is evaluated at the nodes and zeroed outside
    the bump; the contact kink at the endpoints is left unmollified.
    """

    amp: float
    a: float
    b: float
    p: int
    q: int
    r: int

    def __post_init__(self) -> None:
        if not self.a < self.b:
            raise ValueError(f"poly_bump needs a < b, got a={self.a}, b={self.b}")
        for name in ("p", "q", "r"):
            v = getattr(self, name)
            if not (isinstance(v, (int, np.integer)) and v >= 0):
                raise ValueError(f"poly_bump exponent {name} must be a nonnegative integer")

    def sample(self, grid: Grid) -> Field:
        x = grid.x
        values = self.amp * (x - self.a) ** self.p * x**self.q * (x - self.b) ** self.r
        return Field(grid, np.where((x >= self.a) & (x <= self.b), values, 0.0))


@dataclass(frozen=True)
class Constant:
    c: float

    def sample(self, grid: Grid) -> Field:
        return Field(grid, np.full(grid.n_points, self.c))


@dataclass(frozen=True)
class Cosine:
    """mean + amp * cos(mode * pi * x / L) for an integer mode number."""

    mean: float
    amp: float
    mode: int

    def __post_init__(self) -> None:
        if not (isinstance(self.mode, (int, np.integer)) and self.mode >= 0):
            raise ValueError("cosine mode must be a nonnegative integer")

    def sample(self, grid: Grid) -> Field:
        return Field(
            grid,
            self.mean + self.amp * np.cos(self.mode * np.pi * grid.x / grid.half_length),
        )


@dataclass(frozen=True)
class CsvData:
    """Node samples from a two-column ``x,value`` file matched to the grid."""

    path: str

    def sample(self, grid: Grid) -> Field:
        xs, vs = [], []
        with open(self.path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                if row[0].strip().lower() == "x":
                    continue
                if len(row) != 2:
                    raise ValueError(f"{self.path}: expected two columns 'x,value', got {row!r}")
                xs.append(float(row[0]))
                vs.append(float(row[1]))
        xs_arr = np.asarray(xs)
        if xs_arr.size != grid.n_points or not np.allclose(
            xs_arr, grid.x, rtol=0.0, atol=1e-9 * grid.half_length
        ):
            raise ValueError(f"{self.path}: x column does not match the {grid.n_points}-node grid")
        return Field(grid, np.asarray(vs))


InitialDataSpec = Union[PolyBump, Constant, Cosine, CsvData]


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    grid_L: float
    grid_N: int
    params: ModelParams
    rho0: InitialDataSpec
    A0: InitialDataSpec
    mode: RunMode
    ctrl: StepControl
    t_end: float
    record_every: int
    snapshot_times: tuple[float, ...]
    output_dir: str

    def __post_init__(self) -> None:
        if not (np.isfinite(self.t_end) and self.t_end >= 0):
            raise ValueError(f"t_end must be a nonnegative finite time, got {self.t_end}")
        if not (isinstance(self.record_every, (int, np.integer)) and self.record_every >= 1):
            raise ValueError(f"record_every must be a positive integer, got {self.record_every}")
        for ts in self.snapshot_times:
            if not (0.0 <= ts <= self.t_end):
                raise ValueError(f"snapshot time {ts} outside [0, {self.t_end}]")
        object.__setattr__(self, "snapshot_times", tuple(sorted(self.snapshot_times)))


# ---------------------------------------------------------------------------
# flat key = value format
# ---------------------------------------------------------------------------

_INITIAL_KIND_KEYS = {
    "poly_bump": ("amp", "a", "b", "p", "q", "r"),
    "constant": ("c",),
    "cosine": ("mean", "amp", "mode"),
    "csv": ("path",),
}


def _split_entries(text: str) -> dict[str, tuple[str, int]]:
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = (value, lineno)
    return entries


class _EntryReader:
    """Pops typed values out of the raw entry table, tracking line numbers."""

    def __init__(self, entries: dict[str, tuple[str, int]]):
        self.entries = dict(entries)

    def _raw(self, key: str, default):
        if key in self.entries:
            return self.entries.pop(key)
        if default is _REQUIRED:
            raise ConfigError(f"missing required key {key!r}")
        return None

    def take_float(self, key: str, default=_REQUIRED) -> float:
        item = self._raw(key, default)
        if item is None:
            return default
        value, lineno = item
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: {key} must be a number, got {value!r}") from None

    def take_int(self, key: str, default=_REQUIRED) -> int:
        item = self._raw(key, default)
        if item is None:
            return default
        value, lineno = item
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: {key} must be an integer, got {value!r}") from None

    def take_str(self, key: str, default=_REQUIRED, choices=None) -> str:
        item = self._raw(key, default)
        if item is None:
            return default
        value, lineno = item
        if choices is not None and value not in choices:
            raise ConfigError(
                f"line {lineno}: {key} must be one of {', '.join(choices)}, got {value!r}"
            )
        return value

    def take_float_list(self, key: str, default=_REQUIRED) -> tuple[float, ...]:
        item = self._raw(key, default)
        if item is None:
            return default
        value, lineno = item
        if not value:
            return ()
        try:
            return tuple(float(part.strip()) for part in value.split(","))
        except ValueError:
            raise ConfigError(
                f"line {lineno}: {key} must be a comma-separated list of numbers"
            ) from None

    def line_of(self, key: str) -> int:
        return self.entries[key][1] if key in self.entries else 0

    def reject_leftovers(self) -> None:
        if self.entries:
            key = min(self.entries, key=lambda k: self.entries[k][1])
            raise ConfigError(f"line {self.entries[key][1]}: unknown key {key!r}")


def _read_initial(reader: _EntryReader, prefix: str) -> InitialDataSpec:
    kind = reader.take_str(f"{prefix}.kind", choices=tuple(_INITIAL_KIND_KEYS))
    try:
        if kind == "poly_bump":
            return PolyBump(
                amp=reader.take_float(f"{prefix}.amp"),
                a=reader.take_float(f"{prefix}.a"),
                b=reader.take_float(f"{prefix}.b"),
                p=reader.take_int(f"{prefix}.p"),
                q=reader.take_int(f"{prefix}.q"),
                r=reader.take_int(f"{prefix}.r"),
            )
        if kind == "constant":
            return Constant(c=reader.take_float(f"{prefix}.c"))
        if kind == "cosine":
            return Cosine(
                mean=reader.take_float(f"{prefix}.mean"),
                amp=reader.take_float(f"{prefix}.amp"),
                mode=reader.take_int(f"{prefix}.mode"),
            )
        return CsvData(path=reader.take_str(f"{prefix}.path"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid {prefix} specification: {exc}") from exc


def _build_config(entries: dict[str, tuple[str, int]], base_dir: str = ".") -> RunConfig:
    reader = _EntryReader(entries)

    grid_l = reader.take_float("grid.L")
    n_line = reader.line_of("grid.N")
    grid_n = reader.take_int("grid.N")
    if grid_n % 2 != 0:
        raise ConfigError(f"line {n_line}: grid.N must be even, got {grid_n}")

    mu_line = reader.line_of("params.mu")
    mu = reader.take_float("params.mu")
    if not (0.0 <= mu < 1.0):
        raise ConfigError(f"line {mu_line}: params.mu must satisfy 0 <= mu < 1, got {mu}")

    kernel_kind = reader.take_str("params.kernel.kind", choices=("box", "sampled"))
    try:
        if kernel_kind == "box":
            kernel = BoxKernel(half_width=reader.take_float("params.kernel.half_width"))
        else:
            path = reader.take_str("params.kernel.csv")
            path = path if os.path.isabs(path) else os.path.normpath(os.path.join(base_dir, path))
            kernel = load_sampled_kernel(path, make_grid(grid_l, grid_n))
    except (ValueError, OSError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid kernel: {exc}") from exc

    try:
        params = ModelParams(
            alpha=reader.take_float("params.alpha"),
            mu=mu,
            beta=reader.take_float("params.beta"),
            beta_tilde=reader.take_float("params.beta_tilde"),
            K=reader.take_float("params.K"),
            K_tilde=reader.take_float("params.K_tilde"),
            kernel=kernel,
        )
    except ValueError as exc:
        raise ConfigError(f"invalid params: {exc}") from exc

    def resolve(spec: InitialDataSpec) -> InitialDataSpec:
        if isinstance(spec, CsvData) and not os.path.isabs(spec.path):
            return CsvData(os.path.normpath(os.path.join(base_dir, spec.path)))
        return spec

    rho0 = resolve(_read_initial(reader, "rho0"))
    a0 = resolve(_read_initial(reader, "A0"))

    mode_kind = reader.take_str("mode.kind", "original", choices=("original", "regularized", "sqrt"))
    try:
        mode = RunMode(
            kind=mode_kind,
            eps=reader.take_float("mode.eps", 0.0),
            delta=reader.take_float("mode.delta", 0.0),
        )
        ctrl = StepControl(
            cfl_safety=reader.take_float("ctrl.cfl_safety", StepControl.cfl_safety),
            dt_min=reader.take_float("ctrl.dt_min", StepControl.dt_min),
            dt_max=reader.take_float("ctrl.dt_max", StepControl.dt_max),
            positivity_tol=reader.take_float("ctrl.positivity_tol", StepControl.positivity_tol),
            clip_policy=reader.take_str(
                "ctrl.clip_policy", StepControl.clip_policy, choices=("clip_to_zero", "reject")
            ),
            blowup_cap=reader.take_float("ctrl.blowup_cap", StepControl.blowup_cap),
            curvature_growth_factor=reader.take_float(
                "ctrl.curvature_growth_factor", StepControl.curvature_growth_factor
            ),
        )
        config = RunConfig(
            grid_L=grid_l,
            grid_N=grid_n,
            params=params,
            rho0=rho0,
            A0=a0,
            mode=mode,
            ctrl=ctrl,
            t_end=reader.take_float("run.t_end"),
            record_every=reader.take_int("run.record_every", 10),
            snapshot_times=reader.take_float_list("run.snapshot_times", ()),
            output_dir=reader.take_str("run.output_dir", "xdiff-out"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc

    reader.reject_leftovers()
    return config


def parse_config(text: str, base_dir: str = ".") -> RunConfig:
    """Parse the flat ``section.key = value`` format (comments with '#').

    Unknown keys are rejected with their line number; relative csv paths are
    resolved against ``base_dir``.
    """
    return _build_config(_split_entries(text), base_dir=base_dir)


def _initial_entries(prefix: str, spec: InitialDataSpec) -> list[tuple[str, str]]:
    if isinstance(spec, PolyBump):
        return [
            (f"{prefix}.kind", "poly_bump"),
            (f"{prefix}.amp", repr(spec.amp)),
            (f"{prefix}.a", repr(spec.a)),
            (f"{prefix}.b", repr(spec.b)),
            (f"{prefix}.p", str(spec.p)),
            (f"{prefix}.q", str(spec.q)),
            (f"{prefix}.r", str(spec.r)),
        ]
    if isinstance(spec, Constant):
        return [(f"{prefix}.kind", "constant"), (f"{prefix}.c", repr(spec.c))]
    if isinstance(spec, Cosine):
        return [
            (f"{prefix}.kind", "cosine"),
            (f"{prefix}.mean", repr(spec.mean)),
            (f"{prefix}.amp", repr(spec.amp)),
            (f"{prefix}.mode", str(spec.mode)),
        ]
    return [(f"{prefix}.kind", "csv"), (f"{prefix}.path", spec.path)]


def render_config(config: RunConfig) -> str:
    """Serialize a configuration to the flat format (parse round-trips exactly)."""
    kernel = config.params.kernel
    if isinstance(kernel, BoxKernel):
        kernel_entries = [
            ("params.kernel.kind", "box"),
            ("params.kernel.half_width", repr(kernel.half_width)),
        ]
    else:
        if not kernel.source_path:
            raise ValueError("sampled kernel without a source path cannot be rendered")
        kernel_entries = [
            ("params.kernel.kind", "sampled"),
            ("params.kernel.csv", kernel.source_path),
        ]

    pairs: list[tuple[str, str]] = [
        ("grid.L", repr(config.grid_L)),
        ("grid.N", str(config.grid_N)),
        ("params.alpha", repr(config.params.alpha)),
        ("params.mu", repr(config.params.mu)),
        ("params.beta", repr(config.params.beta)),
        ("params.beta_tilde", repr(config.params.beta_tilde)),
        ("params.K", repr(config.params.K)),
        ("params.K_tilde", repr(config.params.K_tilde)),
        *kernel_entries,
        *_initial_entries("rho0", config.rho0),
        *_initial_entries("A0", config.A0),
        ("mode.kind", config.mode.kind),
        ("mode.eps", repr(config.mode.eps)),
        ("mode.delta", repr(config.mode.delta)),
        ("ctrl.cfl_safety", repr(config.ctrl.cfl_safety)),
        ("ctrl.dt_min", repr(config.ctrl.dt_min)),
        ("ctrl.dt_max", repr(config.ctrl.dt_max)),
        ("ctrl.positivity_tol", repr(config.ctrl.positivity_tol)),
        ("ctrl.clip_policy", config.ctrl.clip_policy),
        ("ctrl.blowup_cap", repr(config.ctrl.blowup_cap)),
        ("ctrl.curvature_growth_factor", repr(config.ctrl.curvature_growth_factor)),
        ("run.t_end", repr(config.t_end)),
        ("run.record_every", str(config.record_every)),
        ("run.snapshot_times", ", ".join(repr(t) for t in config.snapshot_times)),
        ("run.output_dir", config.output_dir),
    ]
    return "".join(f"{key} = {value}\n" for key, value in pairs)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

PRESET_NAMES = ("fig1-blowup", "fig2-support")

_SHARED_PARAMS = dict(
    alpha=1.0, mu=0.5, beta=0.75, beta_tilde=0.5, K=1.0, K_tilde=0.5, kernel=BoxKernel(0.05)
)


def preset(name: str) -> RunConfig:
    """Built-in experiment configurations.

    ``fig1-blowup`` starts from an even density bump vanishing quadratically
    at the center with supercritical curvature there, and runs until the
    curvature detector halts.  ``fig2-support`` starts from a strictly
    positive-at-center density bump with the area supported strictly inside
    it, exercising support invariance and area-support expansion.
    """
    if name == "fig1-blowup":
        return RunConfig(
            grid_L=1.0,
            grid_N=1024,
            params=ModelParams(**_SHARED_PARAMS),
            rho0=PolyBump(amp=-2000.0, a=-0.5, b=0.5, p=3, q=2, r=3),
            A0=PolyBump(amp=-6000.0, a=-0.3, b=0.3, p=3, q=2, r=3),
            mode=RunMode(),
            ctrl=StepControl(),
            t_end=0.05,
            record_every=10,
            snapshot_times=(0.0, 0.0015, 0.003, 0.0045),
            output_dir="fig1-blowup-out",
        )
    if name == "fig2-support":
        return RunConfig(
            grid_L=1.0,
            grid_N=1024,
            params=ModelParams(**_SHARED_PARAMS),
            rho0=PolyBump(amp=-140.0, a=-0.5, b=0.5, p=3, q=0, r=3),
            A0=PolyBump(amp=-2000.0, a=-0.3, b=0.3, p=3, q=0, r=3),
            mode=RunMode(),
            ctrl=StepControl(),
            t_end=0.00035,
            record_every=10,
            snapshot_times=(0.0, 0.0001, 0.0002, 0.00035),
            output_dir="fig2-support-out",
        )
    raise ValueError(f"unknown preset {name!r} (available: {', '.join(PRESET_NAMES)})")


def preset_with_overrides(name: str, overrides: dict[str, str]) -> RunConfig:
    """Preset with ``key = value`` overrides applied through the config format."""
    entries = _split_entries(render_config(preset(name)))
    for key, value in overrides.items():
        if key not in entries:
            raise ConfigError(f"override targets unknown key {key!r}")
        entries[key] = (value, 0)
    return _build_config(entries)
