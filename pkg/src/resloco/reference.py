"""Analytic expert controller: command pursuit, Raibert footholds, and the
kinematic swing/stance references used as supervision for the kernel.

All foot targets are exchanged in the base frame (yaw-aligned for world
conversions; roll/pitch are ignored by the reference generator, which plans
as if the trunk were level). Swing arcs are planned in the world frame and
converted back so that footholds stay glued to the terrain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .config import CommandConfig, ReferenceConfig
from .gait import GaitParams, GaitState, LegState, leg_state, normalized_phase
from .kinematics import LegSet

HeightFn = Callable[[float, float], float]


@dataclass
class VelocityCommand:
    vx: float = 0.0
    vy: float = 0.0
    wz: float = 0.0
    step_height: float = 0.1
    ride_height: float = 0.24

    def as_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.wz])


@dataclass
class RobotPose:
    position: np.ndarray  # (3,), world frame
    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0


@dataclass
class TargetSpec:
    position: np.ndarray  # (2,), world frame
    d_min: float = 0.5


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.atan2(math.sin(a), math.cos(a))
    return math.pi if w == -math.pi else w


def yaw_rotation(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def pose_rotation(pose: "RobotPose") -> np.ndarray:
    """Full base-to-world rotation Rz(yaw) Ry(pitch) Rx(roll)."""
    cy, sy = math.cos(pose.yaw), math.sin(pose.yaw)
    cp, sp = math.cos(pose.pitch), math.sin(pose.pitch)
    cr, sr = math.cos(pose.roll), math.sin(pose.roll)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def _clip(x: float, lo: float, hi: float) -> float:
    return min(hi, max(lo, x))


def next_command(
    prev: VelocityCommand,
    pose: RobotPose,
    target: TargetSpec,
    cfg: CommandConfig | None = None,
) -> VelocityCommand:
    """Rate-limited pursuit command toward the target location.

    The desired command is a proportional heading/approach law; each emitted
    component moves toward it by at most cfg.max_delta per call and always
    stays inside the command ranges. Step/ride heights pass through.
    """
    cfg = cfg or CommandConfig()
    dx = float(target.position[0]) - float(pose.position[0])
    dy = float(target.position[1]) - float(pose.position[1])
    distance = math.hypot(dx, dy)
    bearing = wrap_angle(math.atan2(dy, dx) - pose.yaw)

    speed = _clip(cfg.k_distance * distance, 0.0, cfg.vx_range[1])
    vx_des = speed * math.cos(bearing)
    vy_des = speed * math.sin(bearing)
    wz_des = _clip(cfg.k_heading * bearing, cfg.wz_range[0], cfg.wz_range[1])

    d = cfg.max_delta
    vx = _clip(prev.vx + _clip(vx_des - prev.vx, -d, d), *cfg.vx_range)
    vy = _clip(prev.vy + _clip(vy_des - prev.vy, -d, d), *cfg.vy_range)
    wz = _clip(prev.wz + _clip(wz_des - prev.wz, -d, d), *cfg.wz_range)
    return replace(prev, vx=vx, vy=vy, wz=wz)


def raibert_swing_target(
    hip_world: np.ndarray,
    v_base: np.ndarray,
    cmd: VelocityCommand,
    params: GaitParams,
    *,
    k_raibert: float = 0.03,
    yaw: float = 0.0,
    lever_xy: np.ndarray | None = None,
    height_fn: HeightFn | None = None,
) -> np.ndarray:
    """Raibert-heuristic foothold for a swing leg, world frame.

    foothold = ground projection of the hip
             + v_ref * tau_stance / 2
             + k_raibert * (v_base - v_ref)

    v_ref is the commanded velocity rotated into the world frame; when
    lever_xy (hip offset in base frame) is provided the yaw-rate command
    contributes wz x lever so turning legs aim along their local arc.
    """
    c, s = math.cos(yaw), math.sin(yaw)
    v_ref = np.array([c * cmd.vx - s * cmd.vy, s * cmd.vx + c * cmd.vy])
    if lever_xy is not None:
        lx = c * float(lever_xy[0]) - s * float(lever_xy[1])
        ly = s * float(lever_xy[0]) + c * float(lever_xy[1])
        v_ref = v_ref + cmd.wz * np.array([-ly, lx])
    xy = (
        np.asarray(hip_world[:2], dtype=float)
        + v_ref * (params.tau_stance / 2.0)
        + k_raibert * (np.asarray(v_base[:2], dtype=float) - v_ref)
    )
    z = height_fn(float(xy[0]), float(xy[1])) if height_fn is not None else 0.0
    return np.array([xy[0], xy[1], z])


def swing_trajectory(
    phi_norm: float,
    start: np.ndarray,
    foothold: np.ndarray,
    step_height: float,
    height_fn: HeightFn | None = None,
) -> np.ndarray:
    """Point on the swing arc at normalized phase phi_norm in (1, 2].

    Horizontal: cubic Hermite (zero end tangents) from start to foothold.
    Vertical: terrain height plus step_height * sin(pi * s).
    """
    s = _clip(phi_norm - 1.0, 0.0, 1.0)
    blend = s * s * (3.0 - 2.0 * s)
    xy = np.asarray(start[:2], dtype=float) + blend * (
        np.asarray(foothold[:2], dtype=float) - np.asarray(start[:2], dtype=float)
    )
    if height_fn is not None:
        ground = height_fn(float(xy[0]), float(xy[1]))
    else:
        # Blend the endpoint heights when no terrain query is available.
        ground = float(start[2]) + blend * (float(foothold[2]) - float(start[2]))
    z = ground + step_height * math.sin(math.pi * s)
    return np.array([xy[0], xy[1], z])


def stance_reference(
    p_prev: np.ndarray,
    cmd: VelocityCommand,
    dt: float,
    ride_height: float,
    z_rate: float = 0.5,
) -> np.ndarray:
    """Stance foot held fixed in the world while the base follows the command.

    In the base frame that is the exact rigid-twist update
    p' = Rz(-wz*dt) (p - v_cmd*dt); the z component tracks -ride_height at a
    bounded rate so command steps cannot teleport feet.
    """
    p = np.asarray(p_prev, dtype=float)
    c, s = math.cos(-cmd.wz * dt), math.sin(-cmd.wz * dt)
    x = p[0] - cmd.vx * dt
    y = p[1] - cmd.vy * dt
    z_err = -ride_height - p[2]
    z = p[2] + _clip(z_err, -z_rate * dt, z_rate * dt)
    return np.array([c * x - s * y, s * x + c * y, z])


@dataclass
class ExpertDiagnostics:
    ik_clamped: int = 0


class ExpertController:
    """Per-leg dispatch between the swing arc and the kinematic stance hold.

    Holds the swing bookkeeping (liftoff capture per leg) and produces the
    12-D foot-target vector that serves both as the kernel's training labels
    and as the expert baseline during evaluation. One instance per simulated
    world; instances share no state.
    """

    def __init__(
        self,
        params: GaitParams,
        legs: LegSet | None = None,
        ref_cfg: ReferenceConfig | None = None,
        control_dt: float = 0.005,
        height_fn: HeightFn | None = None,
    ):
        self.params = params
        self.legs = legs or LegSet()
        self.ref_cfg = ref_cfg or ReferenceConfig()
        self.control_dt = control_dt
        self.height_fn = height_fn or (lambda x, y: 0.0)
        self._was_swing = np.zeros(4, dtype=bool)
        self._swing_start_world = np.zeros((4, 3))
        self.diagnostics = ExpertDiagnostics()

    def reset(self) -> None:
        self._was_swing[:] = False
        self._swing_start_world[:] = 0.0
        self.diagnostics = ExpertDiagnostics()

    def initial_targets(self, cmd: VelocityCommand) -> np.ndarray:
        return self.legs.neutral_targets(cmd.ride_height)

    def expert_step(
        self,
        gait: GaitState,
        cmd: VelocityCommand,
        pose: RobotPose,
        prev_targets: np.ndarray,
        v_base: np.ndarray | None = None,
    ) -> np.ndarray:
        """Foot targets (4, 3) in the base frame for the current tick.

        Swing arcs are planned in the world frame and converted with the full
        tilt rotation so footholds land where intended even when the trunk
        rocks; the stance hold stays a pure base-frame twist integral.
        """
        v_base = np.zeros(3) if v_base is None else np.asarray(v_base, dtype=float)
        rot = pose_rotation(pose)
        targets = np.array(prev_targets, dtype=float, copy=True)
        for i in range(4):
            phi = float(gait.phi[i])
            state = leg_state(phi, self.params.r_swing)
            if state is LegState.SWING:
                if not self._was_swing[i]:
                    self._swing_start_world[i] = pose.position + rot @ targets[i]
                    self._was_swing[i] = True
                # Footholds are planned around a lead point ahead of the hip;
                # the lead cancels the forward creep caused by the leg's
                # compliance coupling between vertical load and foot x.
                anchor_base = np.asarray(self.legs.geoms[i].hip_offset) + np.array(
                    [self.ref_cfg.foothold_lead, 0.0, 0.0]
                )
                hip_world = pose.position + rot @ anchor_base
                foothold = raibert_swing_target(
                    hip_world,
                    v_base,
                    cmd,
                    self.params,
                    k_raibert=self.ref_cfg.raibert_gain,
                    yaw=pose.yaw,
                    lever_xy=anchor_base[:2],
                    height_fn=self.height_fn,
                )
                phi_norm = normalized_phase(phi, self.params.r_swing)
                point_world = swing_trajectory(
                    phi_norm,
                    self._swing_start_world[i],
                    foothold,
                    cmd.step_height,
                    height_fn=self.height_fn,
                )
                # Early-swing height reconciliation: the captured liftoff
                # point can sit below the arc (loaded legs sag), so blend its
                # height in over the first quarter of swing instead of
                # releasing the compression in one tick.
                s = phi_norm - 1.0
                if s < 0.25:
                    blend = s / 0.25
                    point_world[2] = (1.0 - blend) * self._swing_start_world[i][2] + blend * point_world[2]
                targets[i] = rot.T @ (point_world - pose.position)
            else:
                self._was_swing[i] = False
                targets[i] = stance_reference(
                    targets[i],
                    cmd,
                    self.control_dt,
                    cmd.ride_height,
                    z_rate=self.ref_cfg.stance_z_rate,
                )
        return targets
