"""Reduced-order quadruped world: floating base, servo legs, compliant feet.

The base is a single rigid body integrated with semi-implicit Euler. Legs are
treated as massless: each joint follows a first-order servo obtained by
solving the PD torque balance Kp*(q*-q) - Kd*qdot = J^T f_contact for qdot,
with the proportional torque clamped at the motor limit. Stance feet push on
the ground through a vertical spring-damper plus an anchored tangential
spring capped by Coulomb friction (stiction with sliding anchor updates);
the reaction drives the base and loads the joints, so at steady stance the
contact force equals J^{-T} of the applied joint torque.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import PdConfig, SimConfig
from .kinematics import LegSet
from .terrain import Terrain


class SimFaultError(RuntimeError):
    """Numeric blow-up: the world state left its sanity bounds."""


def _cross_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise cross product without np.cross dispatch overhead."""
    out = np.empty_like(b)
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


def _solve3(m: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve batched 3x3 systems by adjugate; shapes (..., 3, 3), (..., 3)."""
    a00, a01, a02 = m[..., 0, 0], m[..., 0, 1], m[..., 0, 2]
    a10, a11, a12 = m[..., 1, 0], m[..., 1, 1], m[..., 1, 2]
    a20, a21, a22 = m[..., 2, 0], m[..., 2, 1], m[..., 2, 2]
    c00 = a11 * a22 - a12 * a21
    c01 = a02 * a21 - a01 * a22
    c02 = a01 * a12 - a02 * a11
    c10 = a12 * a20 - a10 * a22
    c11 = a00 * a22 - a02 * a20
    c12 = a02 * a10 - a00 * a12
    c20 = a10 * a21 - a11 * a20
    c21 = a01 * a20 - a00 * a21
    c22 = a00 * a11 - a01 * a10
    det = a00 * c00 + a01 * c01 + a02 * c02
    out = np.empty_like(b)
    out[..., 0] = (c00 * b[..., 0] + c01 * b[..., 1] + c02 * b[..., 2]) / det
    out[..., 1] = (c10 * b[..., 0] + c11 * b[..., 1] + c12 * b[..., 2]) / det
    out[..., 2] = (c20 * b[..., 0] + c21 * b[..., 1] + c22 * b[..., 2]) / det
    return out


def pd_torques(
    q_target: np.ndarray,
    q: np.ndarray,
    q_dot: np.ndarray,
    gains: PdConfig,
) -> np.ndarray:
    """Joint PD law tau = Kp (q* - q) - Kd qdot, clamped at the torque limit.

    Accepts stacked (4, 3) or flat (12,) joint vectors; gains are per joint
    type (abductor, hip, knee).
    """
    q_target = np.asarray(q_target, dtype=float).reshape(4, 3)
    q = np.asarray(q, dtype=float).reshape(4, 3)
    q_dot = np.asarray(q_dot, dtype=float).reshape(4, 3)
    kp = np.asarray(gains.kp)
    kd = np.asarray(gains.kd)
    tau = kp * (q_target - q) - kd * q_dot
    return np.clip(tau, -gains.torque_limit, gains.torque_limit)


# --- quaternion helpers (w, x, y, z), world-frame angular velocity ---


def quat_to_rot(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_rotvec(v: np.ndarray) -> np.ndarray:
    angle = float(np.linalg.norm(v))
    if angle < 1e-12:
        return np.array([1.0, 0.0, 0.0, 0.0])
    axis = v / angle
    half = 0.5 * angle
    s = math.sin(half)
    return np.array([math.cos(half), s * axis[0], s * axis[1], s * axis[2]])


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_from_yaw(yaw: float) -> np.ndarray:
    return np.array([math.cos(yaw / 2), 0.0, 0.0, math.sin(yaw / 2)])


def quat_to_euler(q: np.ndarray) -> tuple[float, float, float]:
    """ZYX (yaw, pitch, roll) angles from a unit quaternion."""
    w, x, y, z = q
    yaw = math.atan2(2 * (w * z + x * y), 1 - 2 * (y * y + z * z))
    sp = 2 * (w * y - z * x)
    pitch = math.asin(min(1.0, max(-1.0, sp)))
    roll = math.atan2(2 * (w * x + y * z), 1 - 2 * (x * x + y * y))
    return yaw, pitch, roll


@dataclass
class Perturbation:
    """One active external force: world direction, body application point."""

    force_world: np.ndarray
    point_body: np.ndarray
    t_end: float


@dataclass
class PerturbationSampler:
    """Recurring random pushes: horizontal direction, random body point."""

    interval_range: tuple[float, float]
    magnitude_range: tuple[float, float]
    duration: float
    body_box: tuple[float, float, float]
    rng: np.random.Generator
    next_time: float = field(init=False)

    def __post_init__(self) -> None:
        self.next_time = float(self.rng.uniform(*self.interval_range))

    def maybe_sample(self, t: float) -> Perturbation | None:
        if t < self.next_time:
            return None
        self.next_time = t + float(self.rng.uniform(*self.interval_range))
        angle = float(self.rng.uniform(0.0, 2.0 * math.pi))
        mag = float(self.rng.uniform(*self.magnitude_range))
        point = np.array(
            [self.rng.uniform(-b, b) for b in self.body_box], dtype=float
        )
        force = mag * np.array([math.cos(angle), math.sin(angle), 0.0])
        return Perturbation(force_world=force, point_body=point, t_end=t + self.duration)


class SimWorld:
    """Floating-base world with four servo legs and compliant point feet."""

    def __init__(
        self,
        cfg: SimConfig,
        legs: LegSet,
        terrain: Terrain | None = None,
        rng: np.random.Generator | None = None,
    ):
        self.cfg = cfg
        self.legs = legs
        self.terrain = terrain or Terrain()
        self.rng = rng or np.random.default_rng(0)
        self.sampler: PerturbationSampler | None = None
        self._active_pert: Perturbation | None = None
        self._kp = np.asarray(cfg.pd.kp, dtype=float)
        self._kd_eye = np.diag(np.asarray(cfg.pd.kd, dtype=float))[None, :, :]
        self._inertia = np.asarray(cfg.inertia, dtype=float)
        self.reset()

    # -- state management --

    def reset(
        self,
        position: np.ndarray | None = None,
        yaw: float = 0.0,
        ride_height: float = 0.24,
    ) -> None:
        xy = np.zeros(2) if position is None else np.asarray(position, dtype=float)[:2]
        ground = float(self.terrain.height(float(xy[0]), float(xy[1])))
        self.pos = np.array([xy[0], xy[1], ground + ride_height])
        self.vel = np.zeros(3)
        self.quat = quat_from_yaw(yaw)
        self.omega = np.zeros(3)
        targets = self.legs.neutral_targets(ride_height)
        q, _ = self.legs.inverse_all(targets)
        self.q = q
        self.qdot = np.zeros((4, 3))
        self.anchors = np.zeros((4, 2))
        self.in_contact = np.zeros(4, dtype=bool)
        self.time = 0.0
        self.physics_ticks = 0
        self._active_pert = None
        if self.sampler is not None:
            self.sampler.__post_init__()

    def set_perturbation_sampler(self, sampler: PerturbationSampler | None) -> None:
        self.sampler = sampler

    def apply_push(
        self, force_world: np.ndarray, point_body: np.ndarray, duration: float
    ) -> None:
        self._active_pert = Perturbation(
            force_world=np.asarray(force_world, dtype=float),
            point_body=np.asarray(point_body, dtype=float),
            t_end=self.time + duration,
        )

    # -- queries --

    def rotation(self) -> np.ndarray:
        return quat_to_rot(self.quat)

    def euler(self) -> tuple[float, float, float]:
        return quat_to_euler(self.quat)

    def foot_positions_world(self) -> np.ndarray:
        rot = self.rotation()
        return self.pos + self.legs.forward_all(self.q) @ rot.T

    def base_height_above_terrain(self) -> float:
        ground = float(self.terrain.height(float(self.pos[0]), float(self.pos[1])))
        return float(self.pos[2]) - ground

    def fallen(self) -> bool:
        yaw, pitch, roll = self.euler()
        if abs(roll) > self.cfg.fall_attitude or abs(pitch) > self.cfg.fall_attitude:
            return True
        return self.base_height_above_terrain() < self.cfg.fall_height

    def mechanical_energy(self) -> float:
        m = self.cfg.base_mass
        inertia = np.asarray(self.cfg.inertia)
        rot = self.rotation()
        omega_body = rot.T @ self.omega
        return (
            0.5 * m * float(self.vel @ self.vel)
            + 0.5 * float(omega_body @ (inertia * omega_body))
            + m * self.cfg.gravity * float(self.pos[2])
        )

    # -- integration --

    def step_control(self, q_targets: np.ndarray) -> None:
        """One 200 Hz control tick: hold q* and run the 1000 Hz substeps."""
        n = int(round(self.cfg.control_dt / self.cfg.physics_dt))
        for _ in range(n):
            self._substep(q_targets)

    def _substep(self, q_star: np.ndarray) -> None:
        cfg = self.cfg
        dt = cfg.physics_dt
        contact = cfg.contact
        rot = self.rotation()

        feet_base, jac = self.legs.fk_jac_all(self.q)
        feet_rel = feet_base @ rot.T
        feet_world = self.pos + feet_rel
        v_rigid = self.vel + _cross_rows(self.omega, feet_rel)

        ground = np.asarray(
            self.terrain.height(feet_world[:, 0], feet_world[:, 1]), dtype=float
        )
        pen = ground - feet_world[:, 2]
        touching = pen > 0.0

        # Stiction anchors: set on touchdown, dragged along when sliding.
        new_contact = touching & ~self.in_contact
        if new_contact.any():
            self.anchors[new_contact] = feet_world[new_contact, :2]

        # Contact damping couples algebraically to the massless-leg servo, so
        # resolve qdot implicitly: (diag(kd) + B^T C B) qdot = tau_p + B^T f0
        # with B = R J (joint velocity -> world foot velocity), C the contact
        # damper matrix, and f0 the contact force at qdot = 0.
        c_diag = np.zeros((4, 3))
        c_diag[touching, 0] = contact.c_tangent
        c_diag[touching, 1] = contact.c_tangent
        c_diag[touching, 2] = contact.c_normal
        f_hold = np.empty((4, 3))
        f_hold[:, :2] = -contact.k_tangent * (feet_world[:, :2] - self.anchors)
        f_hold[:, 2] = contact.k_normal * pen
        f_hold -= c_diag * v_rigid
        f_hold[~touching] = 0.0

        q_star = np.asarray(q_star, dtype=float).reshape(4, 3)
        tau_p = np.clip(
            self._kp * (q_star - self.q), -cfg.pd.torque_limit, cfg.pd.torque_limit
        )
        b_mat = rot[None, :, :] @ jac
        cb = c_diag[:, :, None] * b_mat
        m_mat = np.swapaxes(b_mat, 1, 2) @ cb + self._kd_eye
        rhs = tau_p + np.einsum("lji,lj->li", b_mat, f_hold)
        qdot = _solve3(m_mat, rhs)

        feet_vel = v_rigid + np.einsum("lij,lj->li", b_mat, qdot)
        normal = np.where(
            touching,
            np.maximum(
                0.0, contact.k_normal * pen - contact.c_normal * feet_vel[:, 2]
            ),
            0.0,
        )
        tangent = -contact.k_tangent * (feet_world[:, :2] - self.anchors)
        tangent -= contact.c_tangent * feet_vel[:, :2]
        tangent[~touching] = 0.0
        t_norm = np.sqrt(tangent[:, 0] ** 2 + tangent[:, 1] ** 2)
        cap = contact.friction * normal
        sliding = touching & (t_norm > cap) & (t_norm > 1e-12)
        if sliding.any():
            scale = (cap[sliding] / t_norm[sliding])[:, None]
            tangent[sliding] *= scale
            # Move anchors so the spring part matches the capped force.
            spring = tangent[sliding] + contact.c_tangent * feet_vel[sliding, :2]
            self.anchors[sliding] = feet_world[sliding, :2] + spring / contact.k_tangent
        self.in_contact = touching

        f_contact = np.empty((4, 3))
        f_contact[:, :2] = tangent
        f_contact[:, 2] = normal

        force = f_contact.sum(axis=0)
        force[2] -= cfg.base_mass * cfg.gravity
        torque = _cross_rows(feet_rel, f_contact).sum(axis=0)

        if self.sampler is not None and self._active_pert is None:
            pert = self.sampler.maybe_sample(self.time)
            if pert is not None:
                self._active_pert = pert
        if self._active_pert is not None:
            if self.time < self._active_pert.t_end:
                arm = rot @ self._active_pert.point_body
                fp = self._active_pert.force_world
                force = force + fp
                torque = torque + _cross_rows(arm, fp)
            else:
                self._active_pert = None

        inertia_world = (rot * self._inertia) @ rot.T
        gyro = _cross_rows(self.omega, inertia_world @ self.omega)
        omega_dot = _solve3(inertia_world, torque - gyro)

        # Semi-implicit Euler: velocities first, then positions.
        self.vel = self.vel + (dt / cfg.base_mass) * force
        self.omega = self.omega + dt * omega_dot
        self.pos = self.pos + dt * self.vel
        self.quat = quat_mul(quat_from_rotvec(self.omega * dt), self.quat)
        self.quat = self.quat / math.sqrt(float(self.quat @ self.quat))

        # Massless-leg servo update with the implicitly resolved velocity.
        self.qdot = qdot
        self.q = self.q + dt * qdot

        self.time += dt
        self.physics_ticks += 1
        if not (
            abs(self.pos[0]) < cfg.sanity_position
            and abs(self.pos[1]) < cfg.sanity_position
            and abs(self.pos[2]) < cfg.sanity_position
            and abs(self.vel[0]) < cfg.sanity_velocity
            and abs(self.vel[1]) < cfg.sanity_velocity
            and abs(self.vel[2]) < cfg.sanity_velocity
            and math.isfinite(float(self.q[0, 0]) + float(self.q[3, 2]))
        ):
            raise SimFaultError(f"state outside sanity bounds at t={self.time:.3f}")
