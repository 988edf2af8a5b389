"""Closed-form kinematics for a 3-DOF quadruped leg.

Chain convention: an abduction joint rotating about the body x-axis carries a
short lateral link (sign flipped for right legs), followed by hip and knee
pitch joints about the y-axis. Zero angles put the foot straight below the
hip at depth l_thigh + l_shank. The knee branch is fixed to knee >= 0 (shank
folded backward), which is the quadruped-morphology branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LegGeometry:
    """Per-leg geometry: hip origin in base frame, link lengths, mirror sign."""

    hip_offset: tuple[float, float, float]
    l_abd: float = 0.08
    l_thigh: float = 0.2
    l_shank: float = 0.2
    mirror: float = 1.0  # +1 left legs, -1 right legs
    # Permissive default joint limits; real limits come from config.
    limits_lo: tuple[float, float, float] = (-1.2, -2.4, 0.0)
    limits_hi: tuple[float, float, float] = (1.2, 2.4, 2.9)

    def __post_init__(self) -> None:
        if self.l_thigh <= 0 or self.l_shank <= 0:
            raise ValueError("link lengths must be positive")
        if self.mirror not in (-1.0, 1.0):
            raise ValueError("mirror must be +1 or -1")


@dataclass
class IkResult:
    angles: np.ndarray  # (abduction, hip, knee)
    clamped: bool  # True when the target was projected onto the workspace


def default_geometries() -> list[LegGeometry]:
    """Nominal A1-like geometry, legs ordered FL, FR, RL, RR."""
    legs = []
    for sx, sy in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        legs.append(
            LegGeometry(
                hip_offset=(0.183 * sx, 0.047 * sy, 0.0),
                mirror=float(sy),
            )
        )
    return legs


def forward_kinematics(q: np.ndarray, geom: LegGeometry) -> np.ndarray:
    """Foot position in the base frame for joint angles (abduction, hip, knee)."""
    qa, qh, qk = float(q[0]), float(q[1]), float(q[2])
    lt, ls = geom.l_thigh, geom.l_shank
    # Pitch-plane sub-chain (x forward, z up; foot hangs below the hip).
    xp = -lt * math.sin(qh) - ls * math.sin(qh + qk)
    zp = -lt * math.cos(qh) - ls * math.cos(qh + qk)
    y0 = geom.mirror * geom.l_abd
    ca, sa = math.cos(qa), math.sin(qa)
    return np.array(
        [
            geom.hip_offset[0] + xp,
            geom.hip_offset[1] + y0 * ca - zp * sa,
            geom.hip_offset[2] + y0 * sa + zp * ca,
        ]
    )


def leg_jacobian(q: np.ndarray, geom: LegGeometry) -> np.ndarray:
    """3x3 Jacobian d(foot position)/d(joint angles), base frame."""
    qa, qh, qk = float(q[0]), float(q[1]), float(q[2])
    lt, ls = geom.l_thigh, geom.l_shank
    sh, ch = math.sin(qh), math.cos(qh)
    shk, chk = math.sin(qh + qk), math.cos(qh + qk)
    xp = -lt * sh - ls * shk
    zp = -lt * ch - ls * chk
    dxp_dh = -lt * ch - ls * chk
    dzp_dh = lt * sh + ls * shk
    dxp_dk = -ls * chk
    dzp_dk = ls * shk
    y0 = geom.mirror * geom.l_abd
    ca, sa = math.cos(qa), math.sin(qa)
    return np.array(
        [
            [0.0, dxp_dh, dxp_dk],
            [-y0 * sa - zp * ca, -sa * dzp_dh, -sa * dzp_dk],
            [y0 * ca - zp * sa, ca * dzp_dh, ca * dzp_dk],
        ]
    )


def _plane_reach_limits(geom: LegGeometry) -> tuple[float, float]:
    lo = abs(geom.l_thigh - geom.l_shank)
    hi = geom.l_thigh + geom.l_shank
    return lo, hi


def _project_to_workspace(d: np.ndarray, geom: LegGeometry) -> tuple[np.ndarray, bool]:
    """Project a hip-relative target onto the reachable shell along the hip ray.

    Reachability requires sqrt(dy^2+dz^2) >= l_abd and the in-plane reach
    rho = sqrt(|d|^2 - l_abd^2) within [|l_thigh-l_shank|, l_thigh+l_shank].
    Scaling d radially preserves direction, so infeasible targets map to the
    nearest shell crossing of the hip-to-target ray.
    """
    la = geom.l_abd
    rho_lo, rho_hi = _plane_reach_limits(geom)
    # Small interior margin keeps IK away from the exact-singular shells.
    r_min = math.hypot(la, rho_lo) + 1e-9
    r_max = math.hypot(la, rho_hi) - 1e-9
    norm = float(np.linalg.norm(d))
    r_yz = math.hypot(float(d[1]), float(d[2]))
    if norm < 1e-12 or r_yz < 1e-12:
        # Degenerate ray (target on the abduction axis): fall back to the
        # nominal pose straight below the hip.
        return np.array([0.0, geom.mirror * la, -math.sqrt(r_max**2 - la**2)]), True
    clamped = False
    scale = 1.0
    if norm > r_max:
        scale = r_max / norm
        clamped = True
    elif norm < r_min:
        scale = r_min / norm
        clamped = True
    # After radial scaling the yz distance must still clear the abduction
    # cylinder; when it cannot, grow the scale until it does.
    if scale * r_yz < la + 1e-9:
        scale = (la + 1e-9) / r_yz
        clamped = True
        if scale * norm > r_max:
            # Ray exits through the cylinder wall beyond full extension;
            # use the nominal downward pose as a safe projection.
            return np.array([0.0, geom.mirror * la, -math.sqrt(r_max**2 - la**2)]), True
    return d * scale, clamped


def inverse_kinematics(p: np.ndarray, geom: LegGeometry) -> IkResult:
    """Joint angles reaching base-frame foot position p.

    Unreachable targets are projected onto the workspace boundary along the
    hip-to-target ray and flagged; the control loop treats the flag as a
    diagnostic rather than an error.
    """
    d = np.asarray(p, dtype=float) - np.asarray(geom.hip_offset, dtype=float)
    d, clamped = _project_to_workspace(d, geom)

    la = geom.l_abd
    y0 = geom.mirror * la
    r_yz = math.hypot(float(d[1]), float(d[2]))
    # In-plane coordinates: y equals the abduction link offset, z is the
    # (negative) depth of the foot in the rotated leg plane.
    zp = -math.sqrt(max(r_yz**2 - la**2, 0.0))
    qa = math.atan2(float(d[2]), float(d[1])) - math.atan2(zp, y0)
    # Wrap to (-pi, pi] so small lateral targets give small abduction angles.
    qa = math.atan2(math.sin(qa), math.cos(qa))

    xp = float(d[0])
    rho_sq = xp * xp + zp * zp
    lt, ls = geom.l_thigh, geom.l_shank
    c_knee = (rho_sq - lt * lt - ls * ls) / (2.0 * lt * ls)
    c_knee = min(1.0, max(-1.0, c_knee))
    qk = math.acos(c_knee)  # knee-backward branch: qk in [0, pi]
    gamma = math.atan2(ls * math.sin(qk), lt + ls * math.cos(qk))
    qh = math.atan2(-xp, -zp) - gamma

    angles = np.array([qa, qh, qk])
    lo = np.asarray(geom.limits_lo)
    hi = np.asarray(geom.limits_hi)
    limited = np.clip(angles, lo, hi)
    if not np.array_equal(limited, angles):
        clamped = True
        angles = limited
    return IkResult(angles=angles, clamped=clamped)


@dataclass
class LegSet:
    """The four legs of the robot with vectorized FK/Jacobian helpers."""

    geoms: list[LegGeometry] = field(default_factory=default_geometries)

    def __post_init__(self) -> None:
        self._hips = np.array([g.hip_offset for g in self.geoms])
        self._y0 = np.array([g.mirror * g.l_abd for g in self.geoms])
        self._lt = np.array([g.l_thigh for g in self.geoms])
        self._ls = np.array([g.l_shank for g in self.geoms])

    def fk_jac_all(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Foot positions (4, 3) and Jacobians (4, 3, 3), one trig pass."""
        q = np.asarray(q, dtype=float).reshape(4, 3)
        qa, qh, qk = q[:, 0], q[:, 1], q[:, 2]
        sh, ch = np.sin(qh), np.cos(qh)
        shk, chk = np.sin(qh + qk), np.cos(qh + qk)
        ca, sa = np.cos(qa), np.sin(qa)
        lt, ls, y0 = self._lt, self._ls, self._y0
        xp = -lt * sh - ls * shk
        zp = -lt * ch - ls * chk
        pos = np.empty((4, 3))
        pos[:, 0] = self._hips[:, 0] + xp
        pos[:, 1] = self._hips[:, 1] + y0 * ca - zp * sa
        pos[:, 2] = self._hips[:, 2] + y0 * sa + zp * ca
        dxp_dh = -lt * ch - ls * chk
        dzp_dh = lt * sh + ls * shk
        dxp_dk = -ls * chk
        dzp_dk = ls * shk
        jac = np.zeros((4, 3, 3))
        jac[:, 0, 1] = dxp_dh
        jac[:, 0, 2] = dxp_dk
        jac[:, 1, 0] = -y0 * sa - zp * ca
        jac[:, 1, 1] = -sa * dzp_dh
        jac[:, 1, 2] = -sa * dzp_dk
        jac[:, 2, 0] = y0 * ca - zp * sa
        jac[:, 2, 1] = ca * dzp_dh
        jac[:, 2, 2] = ca * dzp_dk
        return pos, jac

    def forward_all(self, q: np.ndarray) -> np.ndarray:
        """Foot positions (4, 3) for stacked joint angles (4, 3)."""
        return self.fk_jac_all(q)[0]

    def jacobian_all(self, q: np.ndarray) -> np.ndarray:
        """Jacobians (4, 3, 3) for stacked joint angles (4, 3)."""
        return self.fk_jac_all(q)[1]

    def inverse_all(self, targets: np.ndarray) -> tuple[np.ndarray, int]:
        """IK for all legs; returns stacked angles (4, 3) and clamp count."""
        targets = np.asarray(targets, dtype=float).reshape(4, 3)
        out = np.zeros((4, 3))
        n_clamped = 0
        for i, g in enumerate(self.geoms):
            res = inverse_kinematics(targets[i], g)
            out[i] = res.angles
            n_clamped += int(res.clamped)
        return out, n_clamped

    def neutral_targets(self, ride_height: float) -> np.ndarray:
        """Feet directly below the hips at the given base height, shape (4, 3)."""
        t = np.zeros((4, 3))
        for i, g in enumerate(self.geoms):
            t[i, 0] = g.hip_offset[0]
            t[i, 1] = g.hip_offset[1] + g.mirror * g.l_abd
            t[i, 2] = -ride_height
        return t
