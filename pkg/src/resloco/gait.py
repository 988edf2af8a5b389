"""Gait scheduling: per-leg phase evolution and swing/stance classification.

A step cycle is parameterized by initial phases theta (one per leg), a swing
ratio and a stance duration. Phases live in (0, 1]; the swing sub-phase is
phi <= r_swing, stance is phi > r_swing. The normalized-phase transform maps
swing into (1, 2] and stance into (0, 1] so the two regimes are separable in
a network's input space.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

NUM_LEGS = 4

# Leg order used everywhere in this package: FL, FR, RL, RR.
LEG_NAMES = ("FL", "FR", "RL", "RR")

PHASE_RATE_HZ = 200.0  # phases advance at the control rate


class LegState(Enum):
    SWING = "swing"
    STANCE = "stance"


@dataclass(frozen=True)
class GaitParams:
    """Static gait definition: initial phases, swing ratio, stance duration."""

    theta: tuple[float, float, float, float]
    r_swing: float
    tau_stance: float

    def __post_init__(self) -> None:
        if len(self.theta) != NUM_LEGS:
            raise ValueError(f"theta must have {NUM_LEGS} entries")
        for th in self.theta:
            if not 0.0 < th <= 1.0:
                raise ValueError(f"initial phase {th} outside (0, 1]")
        if not 0.0 < self.r_swing < 1.0:
            raise ValueError(f"r_swing {self.r_swing} outside (0, 1)")
        if not self.tau_stance > 0.0:
            raise ValueError(f"tau_stance {self.tau_stance} must be > 0")


@dataclass
class GaitState:
    """Live phase per leg plus elapsed time since gait start."""

    phi: np.ndarray  # shape (4,), each in (0, 1]
    elapsed: float = 0.0

    @classmethod
    def initial(cls, params: GaitParams) -> "GaitState":
        return cls(phi=np.asarray(params.theta, dtype=float).copy(), elapsed=0.0)


# Presets for the three gaits used throughout; theta=1.0 is the wrap
# representation of a zero initial phase.
GAIT_PRESETS: dict[str, GaitParams] = {
    "walk": GaitParams(theta=(1.0, 0.5, 0.75, 0.25), r_swing=0.25, tau_stance=0.3),
    "trot": GaitParams(theta=(0.9, 0.4, 0.4, 0.9), r_swing=0.4, tau_stance=0.3),
    "bound": GaitParams(theta=(0.4, 0.4, 0.9, 0.9), r_swing=0.3, tau_stance=0.1),
}


def swing_duration(params: GaitParams) -> float:
    """tau_swing = tau_stance / (1 - r_swing) * r_swing."""
    return params.tau_stance / (1.0 - params.r_swing) * params.r_swing


def step_cycle_duration(params: GaitParams) -> float:
    """tau_step = tau_stance + tau_swing."""
    return params.tau_stance + swing_duration(params)


def current_phase(theta_i: float, elapsed: float, tau_step: float) -> float:
    """Phase at time `elapsed`: (theta_i + elapsed/tau_step) mod 1, in (0, 1].

    The wrap value 0 is represented as 1 so the stance interval (r_swing, 1]
    covers the end of the cycle.
    """
    if tau_step <= 0.0:
        raise ValueError("tau_step must be > 0")
    phi = (theta_i + elapsed / tau_step) % 1.0
    return 1.0 if phi == 0.0 else phi


def advance(state: GaitState, params: GaitParams, dt: float) -> GaitState:
    """Advance the gait clock by dt and recompute every leg phase."""
    tau_step = step_cycle_duration(params)
    elapsed = state.elapsed + dt
    phi = np.array(
        [current_phase(th, elapsed, tau_step) for th in params.theta], dtype=float
    )
    return GaitState(phi=phi, elapsed=elapsed)


def leg_state(phi: float, r_swing: float) -> LegState:
    """Swing while phi <= r_swing, stance otherwise."""
    return LegState.SWING if phi <= r_swing else LegState.STANCE


def normalized_phase(phi: float, r_swing: float) -> float:
    """Map phi into (1, 2] during swing and (0, 1] during stance.

    Swing:  1 + phi / r_swing
    Stance: (phi - r_swing) / (1 - r_swing)
    """
    if phi <= r_swing:
        return 1.0 + phi / r_swing
    return (phi - r_swing) / (1.0 - r_swing)


def normalized_phases(phi: np.ndarray, r_swing: float) -> np.ndarray:
    """Vectorized `normalized_phase` over an array of phases."""
    phi = np.asarray(phi, dtype=float)
    swing = phi <= r_swing
    out = np.empty_like(phi)
    out[swing] = 1.0 + phi[swing] / r_swing
    out[~swing] = (phi[~swing] - r_swing) / (1.0 - r_swing)
    return out


def contact_schedule(params: GaitParams, horizon: float, dt: float) -> np.ndarray:
    """Boolean stance timeline, shape (4, n_steps) with n_steps = round(horizon/dt).

    timeline[i, k] is True when leg i is in stance at time k*dt.
    """
    if horizon < 0.0:
        raise ValueError("horizon must be >= 0")
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    n = int(round(horizon / dt))
    tau_step = step_cycle_duration(params)
    timeline = np.zeros((NUM_LEGS, n), dtype=bool)
    for k in range(n):
        t = k * dt
        for i, th in enumerate(params.theta):
            phi = current_phase(th, t, tau_step)
            timeline[i, k] = leg_state(phi, params.r_swing) is LegState.STANCE
    return timeline


def write_contact_schedule_csv(
    path: str | Path, params: GaitParams, horizon: float, dt: float
) -> None:
    """Export a contact schedule as CSV (time, leg0..leg3 in {0,1})."""
    timeline = contact_schedule(params, horizon, dt)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "leg0", "leg1", "leg2", "leg3"])
        for k in range(timeline.shape[1]):
            writer.writerow([repr(k * dt)] + [int(v) for v in timeline[:, k]])
