"""Explicit time advancement with degenerate-diffusion step control.

A classical four-stage Runge-Kutta step drives one of the three evolution
forms; the step size follows the diffusive stability restriction
dt ~ dx^2 / max(rho), since the density weights the flux of both equations.
Runs halt on reaching the end time, on the two-signal blow-up detector, on
step-size underflow, or on loss of finiteness.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .diagnostics import DiagnosticRecord, second_derivative_at_center, support, symmetry_defect
from .grid import Field, Grid, make_grid
from .kernel import mollify
from .model import (
    ModelParams,
    NumericalFault,
    State,
    energy,
    _rhs_core,
    _rhs_regularized_core,
    _rhs_sqrt_core,
)

DIFFUSIVITY_FLOOR = 1e-12
BLOWUP_WINDOW = 50  # trailing records that must rise monotonically
CLIP_BUDGET_FRACTION = 1e-8  # clipped mass allowed per run, relative to initial mass

CLIP_TO_ZERO = "clip_to_zero"
REJECT = "reject"


class HaltReason(str, enum.Enum):
    REACHED_T_END = "reached_t_end"
    BLOWUP_DETECTED = "blowup_detected"
    DT_UNDERFLOW = "dt_underflow"
    NUMERICAL_FAULT = "numerical_fault"


@dataclass(frozen=True)
class RunMode:
    """Which evolution form a run integrates.

    ``regularized`` smooths fields with width ``eps`` and starts from data
    shifted up by ``delta`` (the shift enters only through the initial data).
    """

    kind: str = "original"
    eps: float = 0.0
    delta: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("original", "regularized", "sqrt"):
            raise ValueError(f"unknown run mode {self.kind!r}")
        if self.eps < 0 or self.delta < 0:
            raise ValueError("mode eps and delta must be nonnegative")
        if self.kind != "regularized" and (self.eps != 0.0 or self.delta != 0.0):
            raise ValueError("eps/delta only apply to the regularized mode")


@dataclass(frozen=True)
class StepControl:
    """Step-size, positivity and halt policy."""

    cfl_safety: float = 0.25
    dt_min: float = 1e-14
    dt_max: float = 1e-2
    positivity_tol: float = 1e-12
    clip_policy: str = CLIP_TO_ZERO
    blowup_cap: float = 1e6
    curvature_growth_factor: float = 10.0

    def __post_init__(self) -> None:
        if not (0.0 < self.cfl_safety <= 1.0):
            raise ValueError(f"cfl_safety must be in (0, 1], got {self.cfl_safety}")
        if not (0.0 < self.dt_min < self.dt_max):
            raise ValueError("dt bounds must satisfy 0 < dt_min < dt_max")
        if self.positivity_tol < 0:
            raise ValueError("positivity_tol must be nonnegative")
        if self.clip_policy not in (CLIP_TO_ZERO, REJECT):
            raise ValueError(f"unknown clip policy {self.clip_policy!r}")
        if self.blowup_cap <= 0 or self.curvature_growth_factor <= 1.0:
            raise ValueError("blowup_cap must be positive and growth factor above 1")


@dataclass(frozen=True)
class Snapshot:
    t: float
    A: Field
    rho: Field


@dataclass
class RunOutcome:
    """Trajectory summary: halt reason, diagnostic series, snapshots, budgets."""

    halt_reason: HaltReason
    final_state: State
    series: list[DiagnosticRecord]
    snapshots: list[Snapshot]
    steps: int = 0
    initial_mass_rho: float = 0.0
    initial_mass_A: float = 0.0
    clipped_mass_rho: float = 0.0
    clipped_mass_A: float = 0.0
    fault_detail: str = ""


def cfl_dt(s: State, ctrl: StepControl) -> float:
    """Diffusive step bound cfl_safety * dx^2 / max(rho), clamped to the dt window.

    The density bounds the diffusivity of both equations, so its maximum
    (floored to keep the pure-reaction regime at dt_max) sets the step.
    """
    diffusivity = max(float(np.max(s.rho.values)), DIFFUSIVITY_FLOOR)
    dt = ctrl.cfl_safety * s.grid.dx**2 / diffusivity
    return min(max(dt, ctrl.dt_min), ctrl.dt_max)


def _apply_positivity(values: np.ndarray, ctrl: StepControl, what: str) -> tuple[np.ndarray, float]:
    """Zero negative entries, returning the summed magnitude that was removed.

    Under the reject policy, entries below -positivity_tol abort instead of
    being clipped; sub-tolerance negatives are discretization artifacts and
    are zeroed under either policy.
    """
    minimum = float(np.min(values))
    if minimum >= 0.0:
        return values, 0.0
    if ctrl.clip_policy == REJECT and minimum < -ctrl.positivity_tol:
        raise NumericalFault(
            f"{what} fell to {minimum:.3e}, below -positivity_tol under the reject policy"
        )
    negative = np.minimum(values, 0.0)
    return values - negative, float(-np.sum(negative))


_PairRhs = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


def _rk4_pair(
    a: np.ndarray, b: np.ndarray, dt: float, f: _PairRhs
) -> tuple[np.ndarray, np.ndarray]:
    k1a, k1b = f(a, b)
    k2a, k2b = f(a + 0.5 * dt * k1a, b + 0.5 * dt * k1b)
    k3a, k3b = f(a + 0.5 * dt * k2a, b + 0.5 * dt * k2b)
    k4a, k4b = f(a + dt * k3a, b + dt * k3b)
    sixth = dt / 6.0
    return (
        a + sixth * (k1a + 2.0 * (k2a + k3a) + k4a),
        b + sixth * (k1b + 2.0 * (k2b + k3b) + k4b),
    )


def _step_arrays(
    grid: Grid,
    a: np.ndarray,
    r: np.ndarray,
    p: ModelParams,
    dt: float,
    ctrl: StepControl,
    mode: RunMode,
    conv_sym: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, float, float]:
    """One RK4 step plus positivity policy; returns (A, rho, clipped_A, clipped_rho)."""
    if mode.kind == "sqrt":
        eta = np.sqrt(np.clip(r, 0.0, None))
        fn: _PairRhs = lambda av, ev: _rhs_sqrt_core(grid, av, ev, p, conv_sym)
        a_new, eta_new = _rk4_pair(a, eta, dt, fn)
        r_new = eta_new * eta_new
    elif mode.kind == "regularized":
        fn = lambda av, rv: _rhs_regularized_core(grid, av, rv, p, conv_sym, mode.eps)
        a_new, r_new = _rk4_pair(a, r, dt, fn)
    else:
        fn = lambda av, rv: _rhs_core(grid, av, rv, p, conv_sym)
        a_new, r_new = _rk4_pair(a, r, dt, fn)

    if not (np.all(np.isfinite(a_new)) and np.all(np.isfinite(r_new))):
        raise NumericalFault("non-finite state after step")
    a_new, clipped_a = _apply_positivity(a_new, ctrl, "area")
    r_new, clipped_r = _apply_positivity(r_new, ctrl, "density")
    return a_new, r_new, clipped_a * grid.dx, clipped_r * grid.dx


def step(
    s: State, p: ModelParams, dt: float, ctrl: StepControl, mode: RunMode = RunMode()
) -> State:
    """Advance one classical RK4 step of the selected evolution form."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    sym = p.kernel.symbol(s.grid)
    a_new, r_new, _, _ = _step_arrays(
        s.grid, s.A.values, s.rho.values, p, dt, ctrl, mode, sym
    )
    return State(t=s.t + dt, A=Field(s.grid, a_new), rho=Field(s.grid, r_new))


# ---------------------------------------------------------------------------
# full run driver
# ---------------------------------------------------------------------------


def _record(
    grid: Grid,
    t: float,
    a: np.ndarray,
    r: np.ndarray,
    zero_mask: Optional[np.ndarray],
) -> DiagnosticRecord:
    a_field = Field(grid, a)
    r_field = Field(grid, r)
    state = State(t=t, A=a_field, rho=r_field)
    report = energy(state)
    dx = grid.dx
    zero_max = None
    if zero_mask is not None and zero_mask.any():
        zero_max = float(np.max(r[zero_mask]))
    return DiagnosticRecord(
        t=t,
        max_rho=float(np.max(r)),
        min_rho=float(np.min(r)),
        min_A=float(np.min(a)),
        rho_xx_at_0=second_derivative_at_center(state),
        supp_rho=tuple(support(r_field)),
        supp_A=tuple(support(a_field)),
        mass_rho=float(np.sum(r) * dx),
        mass_A=float(np.sum(a) * dx),
        e_tilde=report.e_tilde,
        e_sqrt=report.e_sqrt,
        symmetry_defect_rho=symmetry_defect(r_field),
        max_A=float(np.max(a)),
        zero_set_max_rho=zero_max,
    )


def _blowup_detected(series: list[DiagnosticRecord], ctrl: StepControl) -> bool:
    """Two-signal detector: hard cap, or growth factor plus a monotone window.

    The growth-factor signal is armed only for data with positive initial
    central curvature (the blow-up mechanism presupposes it); the monotone
    window separates genuine divergence from transient oscillation.
    """
    latest = series[-1].rho_xx_at_0
    if latest > ctrl.blowup_cap:
        return True
    initial = series[0].rho_xx_at_0
    if initial <= 0.0 or latest <= ctrl.curvature_growth_factor * initial:
        return False
    if len(series) < BLOWUP_WINDOW:
        return False
    window = [rec.rho_xx_at_0 for rec in series[-BLOWUP_WINDOW:]]
    return all(b > a for a, b in zip(window, window[1:]))


def _interior_zero_mask(r0: np.ndarray) -> np.ndarray:
    """Nodes where the initial density vanishes, one support-adjacent cell excluded.

    Band-limited interpolation smears a compact-support kink over one cell,
    so nodes touching the initial support do not count as zero set.
    """
    positive = r0 > 0.0
    adjacent = np.roll(positive, 1) | np.roll(positive, -1)
    return (r0 == 0.0) & ~adjacent


def run(config) -> RunOutcome:
    """Integrate a full configuration and collect diagnostics.

    Advances with the diffusive CFL step, records every ``record_every``
    steps, snapshots on first crossing each requested time, and halts with
    the matching reason.  Identical configurations reproduce bit-identical
    series on one platform: the loop is sequential and every reduction is
    a fixed-order numpy reduction.
    """
    grid = make_grid(config.grid_L, config.grid_N)
    p: ModelParams = config.params
    ctrl: StepControl = config.ctrl
    mode: RunMode = config.mode

    rho0 = config.rho0.sample(grid)
    a0 = config.A0.sample(grid)
    if mode.kind == "regularized":
        rho0 = mollify(rho0 + mode.delta, mode.eps)
        a0 = mollify(a0 + mode.delta, mode.eps)

    for name, f in (("rho0", rho0), ("A0", a0)):
        if float(np.min(f.values)) < -ctrl.positivity_tol:
            raise ValueError(f"{name} must be nonnegative (min {float(np.min(f.values)):.3e})")
    r = np.clip(rho0.values, 0.0, None)
    a = np.clip(a0.values, 0.0, None)
    t = 0.0

    conv_sym = p.kernel.symbol(grid)
    zero_mask = _interior_zero_mask(r)
    initial_mass_rho = float(np.sum(r) * grid.dx)
    initial_mass_A = float(np.sum(a) * grid.dx)

    series = [_record(grid, t, a, r, zero_mask)]
    snapshots: list[Snapshot] = []
    pending_snaps = sorted(config.snapshot_times)
    while pending_snaps and t >= pending_snaps[0]:
        snapshots.append(Snapshot(t, Field(grid, a), Field(grid, r)))
        pending_snaps.pop(0)

    steps = 0
    clipped_rho = 0.0
    clipped_a = 0.0
    consecutive_dt_min = 0
    fault_detail = ""

    def out(reason: HaltReason) -> RunOutcome:
        if series[-1].t < t:
            series.append(_record(grid, t, a, r, zero_mask))
        return RunOutcome(
            halt_reason=reason,
            final_state=State(t=t, A=Field(grid, a), rho=Field(grid, r)),
            series=series,
            snapshots=snapshots,
            steps=steps,
            initial_mass_rho=initial_mass_rho,
            initial_mass_A=initial_mass_A,
            clipped_mass_rho=clipped_rho,
            clipped_mass_A=clipped_a,
            fault_detail=fault_detail,
        )

    while True:
        if t >= config.t_end:
            return out(HaltReason.REACHED_T_END)

        raw_dt = cfl_dt(State(t=t, A=Field(grid, a), rho=Field(grid, r)), ctrl)
        if raw_dt == ctrl.dt_min:
            consecutive_dt_min += 1
            if consecutive_dt_min >= 2:
                return out(HaltReason.DT_UNDERFLOW)
        else:
            consecutive_dt_min = 0

        remaining = config.t_end - t
        dt = min(raw_dt, remaining)
        try:
            a, r, ca, cr = _step_arrays(grid, a, r, p, dt, ctrl, mode, conv_sym)
        except NumericalFault as fault:
            fault_detail = str(fault)
            return out(HaltReason.NUMERICAL_FAULT)
        t = config.t_end if dt == remaining else t + dt
        steps += 1
        clipped_a += ca
        clipped_rho += cr

        initial_mass = initial_mass_rho + initial_mass_A
        if initial_mass > 0 and clipped_rho + clipped_a > CLIP_BUDGET_FRACTION * initial_mass:
            fault_detail = "clipped mass exceeded the per-run budget"
            return out(HaltReason.NUMERICAL_FAULT)

        while pending_snaps and t >= pending_snaps[0]:
            snapshots.append(Snapshot(t, Field(grid, a), Field(grid, r)))
            pending_snaps.pop(0)

        if steps % config.record_every == 0:
            series.append(_record(grid, t, a, r, zero_mask))
            if _blowup_detected(series, ctrl):
                return out(HaltReason.BLOWUP_DETECTED)
