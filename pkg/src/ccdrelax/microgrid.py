"""Microgrid battery sizing instances.

The battery is an RC branch discretized with forward Euler, so the plant
parameter ``theta = 1 - dt/(RC)`` multiplies the stored charge each step and
the load voltage enters as ``u = (dt/R) * V_load``.  A proportional
controller with gain ``phi`` drives the charge toward a reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial

import numpy as np

from .core import CCDProblem, ContractViolation

TWO_METRIC = "two-metric"
FOUR_METRIC = "four-metric"
VARIANTS = (TWO_METRIC, FOUR_METRIC)

DEFAULT_METRIC_BOUNDS = {
    TWO_METRIC: ((0.0, 8.0), (0.0, 20.0)),
    FOUR_METRIC: ((0.0, 8.0), (0.0, 20.0), (0.0, 0.1), (0.0, 5.0)),
}
METRIC_NAMES = ("tracking_error", "control_effort", "degradation", "pack_mass")


@dataclass(frozen=True)
class MicrogridParams:
    variant: str = FOUR_METRIC
    initial_charge: float = 10.0
    reference_state: float = 20.0
    horizon: int = 3
    input_bounds: tuple = (0.0, 7.0)
    theta_bounds: tuple = (0.1, 0.5)
    phi_bounds: tuple = (0.1, 0.5)
    metric_bounds: tuple | None = None  # None -> variant defaults

    def resolved_metric_bounds(self):
        if self.metric_bounds is not None:
            return tuple(tuple(b) for b in self.metric_bounds)
        return DEFAULT_METRIC_BOUNDS[self.variant]


@dataclass(frozen=True)
class PhysicalBattery:
    resistance: float
    capacitance: float
    time_step: float


def theta_from_physical(battery: PhysicalBattery) -> tuple[float, float]:
    """Return ``(theta, input_scale)`` for an RC battery branch.

    ``input_scale`` converts a load voltage into the discrete input ``u``.
    """
    R, C, dt = battery.resistance, battery.capacitance, battery.time_step
    if R <= 0 or C <= 0 or dt <= 0:
        raise ContractViolation("resistance, capacitance and time_step must be positive")
    return 1.0 - dt / (R * C), dt / R


def load_voltage_to_input(voltages, battery: PhysicalBattery) -> np.ndarray:
    return np.asarray(voltages, dtype=float) * theta_from_physical(battery)[1]


def battery_dynamics(x, u, theta):
    return theta[:, :1] * x + u


def proportional_control(x, x_prev, u_prev, phi, reference):
    return phi[:, :1] * (reference - x)


def tracking_error(states, inputs, theta, phi):
    # terminal state enters with a minus sign
    return states[:, :-1, 0].sum(axis=1) - states[:, -1, 0]


def control_effort(states, inputs, theta, phi):
    return 5.0 * inputs[:, :, 0].sum(axis=1)


def degradation(states, inputs, theta, phi):
    return theta[:, 0]


def pack_mass(states, inputs, theta, phi):
    return 1.0 / theta[:, 0]


def build_microgrid(params: MicrogridParams | None = None) -> CCDProblem:
    params = params or MicrogridParams()
    if params.variant not in VARIANTS:
        raise ContractViolation(f"unknown microgrid variant {params.variant!r}")
    metrics = [tracking_error, control_effort]
    if params.variant == FOUR_METRIC:
        if params.theta_bounds[0] <= 0:
            raise ContractViolation("four-metric variant needs theta lower bound > 0 (pack mass is 1/theta)")
        metrics += [degradation, pack_mass]
    bounds = params.resolved_metric_bounds()
    if len(bounds) != len(metrics):
        raise ContractViolation(
            f"{params.variant} needs {len(metrics)} metric bound pairs, got {len(bounds)}"
        )
    return CCDProblem(
        horizon=params.horizon,
        initial_state=[params.initial_charge],
        dynamics=battery_dynamics,
        control_law=partial(proportional_control, reference=params.reference_state),
        metrics=tuple(metrics),
        input_bounds=([params.input_bounds[0]], [params.input_bounds[1]]),
        theta_bounds=([params.theta_bounds[0]], [params.theta_bounds[1]]),
        phi_bounds=([params.phi_bounds[0]], [params.phi_bounds[1]]),
        metric_bounds=bounds,
        metric_names=METRIC_NAMES[: len(metrics)],
        name=f"microgrid-{params.variant}",
    )


def closed_form_metrics(theta, phi, x1=10.0, xr=20.0):
    """Tracking error and control effort for the default three-step horizon.

    Obtained by substituting the controller into the dynamics by hand; used
    as an independent check on the rollout.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    x2 = x1 * theta + phi * (xr - x1)
    mu1 = x1 + x2 * (1.0 - theta + phi) - xr * phi
    mu2 = 5.0 * phi * (xr - x1 + xr - x2)
    return mu1, mu2
