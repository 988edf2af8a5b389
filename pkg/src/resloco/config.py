"""Run configuration: schema-validated nested dataclasses with YAML overrides.

Every default that has a published source keeps that value here; everything
else is an engineering constant of this artifact. Unknown keys in a config
file are rejected so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any

import yaml

from .gait import GAIT_PRESETS, GaitParams


class ConfigError(ValueError):
    """Invalid configuration file or values."""


@dataclass
class CommandConfig:
    rate_hz: float = 20.0
    max_delta: float = 0.005  # per update, every component
    vx_range: tuple[float, float] = (-0.5, 0.5)
    vy_range: tuple[float, float] = (-0.2, 0.2)
    wz_range: tuple[float, float] = (-math.pi / 4, math.pi / 4)
    step_height_range: tuple[float, float] = (0.05, 0.18)
    ride_height_range: tuple[float, float] = (0.18, 0.28)
    default_step_height: float = 0.1
    default_ride_height: float = 0.24
    k_distance: float = 1.0  # pursuit gain: speed per meter of distance
    k_heading: float = 2.0  # pursuit gain: yaw rate per radian of bearing


@dataclass
class GeometryConfig:
    hip_x: float = 0.183
    hip_y: float = 0.047
    l_abd: float = 0.08
    l_thigh: float = 0.2
    l_shank: float = 0.2
    limits_lo: tuple[float, float, float] = (-1.2, -2.4, 0.0)
    limits_hi: tuple[float, float, float] = (1.2, 2.4, 2.9)


@dataclass
class ReferenceConfig:
    # Capture-point-scale velocity-error gain; values near sqrt(h/g) are
    # required for the diagonal-support roll mode to stay bounded.
    raibert_gain: float = 0.15
    # Constant forward foothold lead compensating the knee-compliance
    # load coupling that otherwise ratchets the trunk forward each cycle.
    foothold_lead: float = 0.05
    stance_z_rate: float = 0.5  # m/s cap on ride-height tracking of stance feet
    collection_gait: str = "trot"
    collection_tau_stance: float = 0.2  # stance duration used for data collection


@dataclass
class KernelConfig:
    lr: float = 0.0024
    linear_lr_decay: float = 0.7  # final LR fraction at the last epoch
    dropout: float = 5e-6
    batch_norm: bool = False
    batch_size: int = 200
    weight_decay: float = 0.0  # override hook; dropout above is read literally
    momentum: float = 0.9
    epochs: int = 50
    hidden_width: int = 256
    hidden_layers: int = 4
    val_fraction: float = 0.1  # episode-level split


@dataclass
class PpoConfig:
    lr: float = 1e-3
    lr_exp_decay: float = 1e-7  # LR = lr * exp(-decay * env_timesteps)
    entropy_coef: float = 5e-6
    epochs: int = 10
    rollout: int = 20000
    batch_size: int = 4000
    fe_width: int = 128
    fe_layers: int = 2
    actor_width: int = 128
    critic_width: int = 64
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    value_coef: float = 0.5
    log_std_init: float = math.log(0.25 * 0.05)
    n_envs: int = 5


@dataclass
class PdConfig:
    kp: tuple[float, float, float] = (100.0, 100.0, 100.0)  # abductor, hip, knee
    kd: tuple[float, float, float] = (1.0, 2.0, 2.0)
    torque_limit: float = 33.5


@dataclass
class ContactConfig:
    # Stiffnesses trade penetration against explicit-integration stability
    # through the leg servo; defaults keep steady-state penetration under
    # mg/(4*k_normal) ~ 4 mm at the default mass.
    k_normal: float = 8000.0
    c_normal: float = 250.0
    k_tangent: float = 4000.0
    c_tangent: float = 60.0
    friction: float = 0.6


@dataclass
class SimConfig:
    physics_dt: float = 1e-3
    control_dt: float = 5e-3
    command_dt: float = 0.05
    gravity: float = 9.81
    base_mass: float = 12.0
    inertia: tuple[float, float, float] = (0.15, 0.35, 0.4)
    pd: PdConfig = field(default_factory=PdConfig)
    contact: ContactConfig = field(default_factory=ContactConfig)
    fall_height: float = 0.12  # base height above local terrain
    fall_attitude: float = math.radians(60.0)
    sanity_position: float = 1000.0
    sanity_velocity: float = 100.0


@dataclass
class TerrainConfig:
    stairs_rise: float = 0.04
    stairs_tread: float = 0.3
    stairs_start: float = 1.0
    sinusoidal_wavelength: float = 2.0
    sinusoidal_max_incline_deg: float = 11.5
    perlin_octaves: int = 2
    perlin_wavelength: float = 1.5
    perlin_amplitude: float = 0.04
    heightfield_cell: float = 0.25
    heightfield_amp_range: tuple[float, float] = (0.03, 0.045)
    tabletop_max_deg: float = 5.0
    seesaw_max_deg: float = 6.0
    pivot_lag: float = 0.4  # s, first-order lag of the pivot angle
    pivot_reach: float = 0.5  # m, CoM offset that saturates the tilt


@dataclass
class PerturbConfig:
    interval_range: tuple[float, float] = (5.0, 8.0)
    magnitude_range: tuple[float, float] = (100.0, 350.0)
    duration: float = 0.3
    body_box: tuple[float, float, float] = (0.15, 0.05, 0.03)


@dataclass
class EpisodeConfig:
    n_targets: int = 5
    n_starts: int = 4
    timeout: float = 60.0
    d_min: float = 0.5
    target_min_dist: float = 2.5
    target_max_dist: float = 4.0


@dataclass
class RewardConfig:
    # (steepness, weight) per radial feature
    lin_vel_q: float = 18.42
    lin_vel_w: float = 0.0076
    ang_vel_q: float = 7.47
    ang_vel_w: float = 0.0264
    com_q: float = 2.35
    com_w: float = 0.0298
    com_target: tuple[float, float, float] = (0.0, 0.0, -1.0)
    dist_q: float = 0.74
    dist_w: float = 0.0169
    attitude_q: float = 7.47
    attitude_w: float = 0.0298
    fall_penalty: float = -19.8
    target_bonus: float = 8.75


@dataclass
class CurriculumConfig:
    heightfield_prob: float = 0.75  # vs perlin
    episodes_per_terrain: int = 5


@dataclass
class RunConfig:
    command: CommandConfig = field(default_factory=CommandConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    reference: ReferenceConfig = field(default_factory=ReferenceConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    ppo: PpoConfig = field(default_factory=PpoConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    terrain: TerrainConfig = field(default_factory=TerrainConfig)
    perturb: PerturbConfig = field(default_factory=PerturbConfig)
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    curriculum: CurriculumConfig = field(default_factory=CurriculumConfig)
    # Gait preset table: name -> (theta x4, r_swing, tau_stance)
    gaits: dict[str, dict[str, Any]] = field(
        default_factory=lambda: {
            name: {
                "theta": list(p.theta),
                "r_swing": p.r_swing,
                "tau_stance": p.tau_stance,
            }
            for name, p in GAIT_PRESETS.items()
        }
    )

    def gait_params(self, name: str, tau_stance: float | None = None) -> GaitParams:
        if name not in self.gaits:
            raise ConfigError(f"unknown gait preset {name!r}")
        g = self.gaits[name]
        return GaitParams(
            theta=tuple(g["theta"]),
            r_swing=float(g["r_swing"]),
            tau_stance=float(tau_stance if tau_stance is not None else g["tau_stance"]),
        )

    def collection_gait_params(self) -> GaitParams:
        return self.gait_params(
            self.reference.collection_gait, self.reference.collection_tau_stance
        )


def _merge(obj: Any, data: dict[str, Any], path: str) -> Any:
    if not is_dataclass(obj):
        raise ConfigError(f"cannot merge into non-dataclass at {path}")
    known = {f.name: f for f in fields(obj)}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown config key {path}{key}")
        current = getattr(obj, key)
        if is_dataclass(current) and isinstance(value, dict):
            _merge(current, value, f"{path}{key}.")
        elif isinstance(current, tuple) and isinstance(value, (list, tuple)):
            if len(value) != len(current):
                raise ConfigError(f"{path}{key} expects {len(current)} entries")
            setattr(obj, key, tuple(type(c)(v) for c, v in zip(current, value)))
        elif isinstance(current, dict) and isinstance(value, dict):
            setattr(obj, key, value)
        elif isinstance(value, (dict, list)) != isinstance(current, (dict, list)):
            raise ConfigError(f"{path}{key} has wrong type")
        else:
            setattr(obj, key, type(current)(value) if current is not None else value)
    return obj


def load_config(path: str | Path | None = None) -> RunConfig:
    """Defaults, optionally overridden by a YAML file (strict keys)."""
    cfg = RunConfig()
    if path is None:
        return cfg
    raw = yaml.safe_load(Path(path).read_text())
    if raw is None:
        return cfg
    if not isinstance(raw, dict):
        raise ConfigError("config file must contain a mapping")
    _merge(cfg, raw, "")
    return cfg


def config_to_dict(cfg: Any) -> Any:
    if is_dataclass(cfg):
        return {f.name: config_to_dict(getattr(cfg, f.name)) for f in fields(cfg)}
    if isinstance(cfg, tuple):
        return list(cfg)
    if isinstance(cfg, dict):
        return {k: config_to_dict(v) for k, v in cfg.items()}
    return cfg


def config_hash(cfg: RunConfig) -> str:
    blob = json.dumps(config_to_dict(cfg), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def resolve_config(cfg: RunConfig, overrides: dict[str, Any]) -> RunConfig:
    """Apply dotted-path overrides (e.g. {'sim.base_mass': 10}) in place."""
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        obj = cfg
        for part in parts[:-1]:
            if not hasattr(obj, part):
                raise ConfigError(f"unknown config key {dotted}")
            obj = getattr(obj, part)
        _merge(obj, {parts[-1]: value}, ".".join(parts[:-1]) + ".")
    return cfg


__all__ = [
    "ConfigError",
    "RunConfig",
    "CommandConfig",
    "GeometryConfig",
    "ReferenceConfig",
    "KernelConfig",
    "PpoConfig",
    "SimConfig",
    "PdConfig",
    "ContactConfig",
    "TerrainConfig",
    "PerturbConfig",
    "EpisodeConfig",
    "RewardConfig",
    "CurriculumConfig",
    "load_config",
    "config_to_dict",
    "config_hash",
    "resolve_config",
]
