"""Discrete-time force PID control at a fixed rate, with filtering and saturation.

The loop runs in simulation time (no wall-clock scheduling): measure pressure,
low-pass it with an exponential moving average, estimate the external force,
apply a per-actuator PID with flow saturation and conditional-integration
anti-windup, and command the plant. The derivative path carries its own
low-pass: a raw backward difference at 250 Hz against the stiff clamped
volume-to-force coupling has a per-tick loop gain above one and limit-cycles,
so the derivative is filtered down to a configurable cutoff (default 5 Hz).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import as_vector
from .kinematics import cartesian_to_actuator
from .plant import Plant, ContactModel, damping_pressure
from .sensing import SensingModel

__all__ = [
    "PidGains",
    "ControllerConfig",
    "LoopState",
    "LoopSegment",
    "TimeSeriesLog",
    "ema_alpha",
    "ema_step",
    "sfa_pid_step",
    "see_pid_step",
    "run_closed_loop",
    "read_time_series",
]

LOG_COLUMNS = [
    "t", "act_index", "V", "Vdot_cmd", "P_raw", "P_filt",
    "f_est_act", "f_true_act",
    "fx_est", "fy_est", "fz_est", "fx_true", "fy_true", "fz_true",
]


@dataclass(frozen=True)
class PidGains:
    """Per-axis PID gains; scalars broadcast over all actuators.

    g_p in ml/(s N), g_i in ml/(s N s), g_d in ml/N. All gains must be >= 0.
    """

    g_p: float = 0.0
    g_i: float = 0.0
    g_d: float = 0.0

    def __post_init__(self):
        for name in ("g_p", "g_i", "g_d"):
            if np.any(np.asarray(getattr(self, name)) < 0.0):
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class ControllerConfig:
    """Loop rate, filtering, saturation and anti-windup policy."""

    gains: PidGains
    rate: float = 250.0
    filter_cutoff: float = 100.0
    derivative_cutoff: float = 5.0
    flow_saturation: float = 5.0
    anti_windup: bool = True

    def __post_init__(self):
        if self.rate <= 0.0:
            raise ValueError("rate must be positive")
        if not 0.0 < self.filter_cutoff < self.rate / 2.0:
            raise ValueError("filter cutoff must lie in (0, rate/2)")
        if not 0.0 < self.derivative_cutoff < self.rate / 2.0:
            raise ValueError("derivative cutoff must lie in (0, rate/2)")
        if self.flow_saturation <= 0.0:
            raise ValueError("flow saturation must be positive")

    @property
    def dt(self) -> float:
        return 1.0 / self.rate

    @property
    def alpha(self) -> float:
        """Pressure-filter EMA coefficient for the configured cutoff."""
        return ema_alpha(self.filter_cutoff, self.rate)

    @property
    def alpha_derivative(self) -> float:
        return ema_alpha(self.derivative_cutoff, self.rate)


def ema_alpha(cutoff_hz: float, rate_hz: float) -> float:
    """First-order mapping from a cutoff frequency to the EMA coefficient."""
    return 1.0 - float(np.exp(-2.0 * np.pi * cutoff_hz / rate_hz))


def ema_step(prev_filtered, raw, alpha: float):
    """One exponential-moving-average update: alpha*raw + (1-alpha)*prev."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    return alpha * np.asarray(raw, dtype=float) + (1.0 - alpha) * np.asarray(prev_filtered, dtype=float)


@dataclass(frozen=True)
class LoopState:
    """Controller memory: integral (N s), previous and filtered error terms.

    The integral is frozen per actuator while the corresponding output is
    saturated in the error's direction (conditional integration).
    """

    integral: np.ndarray
    prev_error: np.ndarray
    filtered_pressure: np.ndarray
    filtered_derivative: np.ndarray
    primed: bool = False

    @classmethod
    def zero(cls, n: int) -> "LoopState":
        return cls(
            integral=np.zeros(n),
            prev_error=np.zeros(n),
            filtered_pressure=np.zeros(n),
            filtered_derivative=np.zeros(n),
        )


def _pid_core(error: np.ndarray, loop: LoopState, cfg: ControllerConfig) -> tuple[np.ndarray, LoopState]:
    if not np.all(np.isfinite(error)):
        raise ValueError("controller error contains non-finite values")
    g = cfg.gains
    dt = cfg.dt
    raw_rate = (error - loop.prev_error) / dt if loop.primed else np.zeros_like(error)
    derivative = ema_step(loop.filtered_derivative, raw_rate, cfg.alpha_derivative)
    integral_candidate = loop.integral + error * dt
    unsat = g.g_p * error + g.g_i * integral_candidate + g.g_d * derivative
    sat = cfg.flow_saturation
    if cfg.anti_windup:
        freeze = ((unsat > sat) & (error > 0.0)) | ((unsat < -sat) & (error < 0.0))
        integral = np.where(freeze, loop.integral, integral_candidate)
    else:
        integral = integral_candidate
    command = np.clip(g.g_p * error + g.g_i * integral + g.g_d * derivative, -sat, sat)
    new_loop = replace(
        loop,
        integral=integral,
        prev_error=error,
        filtered_derivative=derivative,
        primed=True,
    )
    return command, new_loop


def sfa_pid_step(f_demand: float, f_estimate: float, loop: LoopState,
                 cfg: ControllerConfig) -> tuple[float, LoopState]:
    """Single-actuator PID step: force error (N) -> saturated flow demand (ml/s)."""
    error = np.atleast_1d(np.asarray(f_demand, dtype=float) - np.asarray(f_estimate, dtype=float))
    command, new_loop = _pid_core(error, loop, cfg)
    return float(command[0]) if command.size == 1 else command, new_loop


def see_pid_step(f_demand_cart, p_ext, h, model: SensingModel, loop: LoopState,
                 cfg: ControllerConfig) -> tuple[np.ndarray, LoopState]:
    """Multi-actuator PID step for a Cartesian force demand.

    The error is formed in actuator space: the demand is mapped through the
    inverse wrench transform and compared against the external pressure
    converted to force via the calibrated transmission. Gains are diagonal,
    so actuators are regulated independently.
    """
    demand_act = cartesian_to_actuator(h, f_demand_cart)
    p_ext = as_vector(p_ext, n=demand_act.size, name="p_ext")
    error = demand_act - p_ext / model.transmission
    return _pid_core(error, loop, cfg)


@dataclass(frozen=True)
class LoopSegment:
    """One closed-loop run: a demand held for a duration against a contact.

    Exactly one of demand_act (N, actuator space, single actuator) or
    demand_cart (3-vector N) must be given; Cartesian demands need the wrench
    transform of the assembly.
    """

    duration: float
    contact: ContactModel
    demand_act: float | None = None
    demand_cart: np.ndarray | None = None
    wrench: np.ndarray | None = None

    def __post_init__(self):
        if (self.demand_act is None) == (self.demand_cart is None):
            raise ValueError("specify exactly one of demand_act or demand_cart")
        if self.demand_cart is not None:
            object.__setattr__(self, "demand_cart", as_vector(self.demand_cart, n=3, name="demand_cart"))
            if self.wrench is None:
                raise ValueError("Cartesian demands require the wrench transform")
        if self.duration <= 0.0:
            raise ValueError("duration must be positive")


class TimeSeriesLog:
    """Per-tick, per-actuator closed-loop record with fixed column schema.

    CSV layout: header `t,act_index,...` (see LOG_COLUMNS), one row per
    (tick x actuator), floats with 9 significant digits, LF line endings.
    """

    def __init__(self, ticks: int, count: int):
        self.count = count
        self.t = np.zeros(ticks)
        self.volume = np.zeros((ticks, count))
        self.flow_cmd = np.zeros((ticks, count))
        self.p_raw = np.zeros((ticks, count))
        self.p_filt = np.zeros((ticks, count))
        self.f_est_act = np.zeros((ticks, count))
        self.f_true_act = np.zeros((ticks, count))
        self.f_est_cart = np.zeros((ticks, 3))
        self.f_true_cart = np.zeros((ticks, 3))
        self._next = 0

    def append(self, t, volume, flow_cmd, p_raw, p_filt, f_est_act, f_true_act,
               f_est_cart, f_true_cart) -> None:
        i = self._next
        self.t[i] = t
        self.volume[i] = volume
        self.flow_cmd[i] = flow_cmd
        self.p_raw[i] = p_raw
        self.p_filt[i] = p_filt
        self.f_est_act[i] = f_est_act
        self.f_true_act[i] = f_true_act
        self.f_est_cart[i] = f_est_cart
        self.f_true_cart[i] = f_true_cart
        self._next = i + 1

    def __len__(self) -> int:
        return self._next

    def write_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(",".join(LOG_COLUMNS) + "\n")
            for i in range(self._next):
                for a in range(self.count):
                    row = [
                        self.t[i], float(a), self.volume[i, a], self.flow_cmd[i, a],
                        self.p_raw[i, a], self.p_filt[i, a],
                        self.f_est_act[i, a], self.f_true_act[i, a],
                        self.f_est_cart[i, 0], self.f_est_cart[i, 1], self.f_est_cart[i, 2],
                        self.f_true_cart[i, 0], self.f_true_cart[i, 1], self.f_true_cart[i, 2],
                    ]
                    handle.write(",".join(format(v, ".9g") for v in row) + "\n")


def read_time_series(path) -> dict[str, np.ndarray]:
    """Load a log CSV back into column arrays keyed by the schema names."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    if data.dtype.names is None or list(data.dtype.names) != LOG_COLUMNS:
        raise ValueError(f"log {path} does not match the expected column schema")
    return {name: np.atleast_1d(data[name]) for name in LOG_COLUMNS}


def run_closed_loop(plant: Plant, model: SensingModel, cfg: ControllerConfig,
                    segment: LoopSegment) -> TimeSeriesLog:
    """Run the fixed-step force loop for one segment and log every tick.

    Each tick: measure -> EMA-filter pressure -> estimate force in the
    configured sensing mode -> PID -> command the plant. The injected volume
    is read from the pump (exact), pressure from the noisy transducer. The
    dynamic sensing mode compensates damping using the previously commanded
    flow, which is what the pump is actually executing.
    """
    if model.count != plant.count:
        raise ValueError(f"sensing model has {model.count} actuators, plant has {plant.count}")
    n = plant.count
    dt = cfg.dt
    ticks = int(round(segment.duration * cfg.rate))
    if segment.demand_cart is not None:
        h = np.asarray(segment.wrench, dtype=float)
    else:
        h = segment.wrench if segment.wrench is not None else np.array([[0.0], [0.0], [1.0]])
    plant.with_contact(segment.contact)

    log = TimeSeriesLog(ticks, n)
    loop = LoopState.zero(n)
    last_flow = np.zeros(n)
    for _ in range(ticks):
        state = plant.state
        p_raw, _ = plant.measure()
        if loop.primed:
            p_filt = ema_step(loop.filtered_pressure, p_raw, cfg.alpha)
        else:
            p_filt = p_raw.copy()
        volume = state.volume
        if model.mode == "static":
            if model.baseline_pressure is None:
                raise ValueError("static sensing in the loop requires a captured baseline")
            p_ext = p_filt - model.baseline_pressure
        elif model.mode == "dynamic":
            p_ext = p_filt - model.stiffness @ volume - damping_pressure(last_flow, model.damping)
        else:
            p_ext = p_filt - model.stiffness @ volume
        f_est = p_ext / model.transmission

        if segment.demand_cart is not None:
            command, loop = see_pid_step(segment.demand_cart, p_ext, h, model, loop, cfg)
        else:
            cmd_scalar, loop = sfa_pid_step(segment.demand_act, float(f_est[0]), loop, cfg)
            command = np.atleast_1d(np.asarray(cmd_scalar, dtype=float))
        loop = replace(loop, filtered_pressure=p_filt)

        log.append(
            t=state.clock,
            volume=volume,
            flow_cmd=command,
            p_raw=p_raw,
            p_filt=p_filt,
            f_est_act=f_est,
            f_true_act=state.external_force,
            f_est_cart=h @ f_est,
            f_true_cart=h @ state.external_force,
        )
        plant.step(command, dt)
        last_flow = command
    return log
