"""Flat plain-text configuration.

One ``section.key = value`` per line, ``#`` comments, every key typed by
its built-in default. Unknown keys are errors so typos fail loudly.
Serialization is canonical (sorted keys, repr floats), which makes
parse -> serialize -> parse idempotent and lets a digest of the canonical
text identify a run's configuration.
"""

import hashlib
import json

import numpy as np

from .arm import ArmModel
from .ball import AeroParams, TableGeometry
from .hysr import HysrConfig
from .launcher import LauncherConfig
from .ppo import PpoHyper
from .rewards import RewardConfig, Task
from .validation import ConfigError


def _flatten(mat) -> list:
    return [float(v) for v in np.asarray(mat).reshape(-1)]


def _build_defaults() -> dict:
    aero = AeroParams()
    table = TableGeometry()
    arm = ArmModel()
    launch = LauncherConfig()
    hysr = HysrConfig()
    hyper = PpoHyper()
    return {
        # ball flight
        "physics.mass": aero.mass,
        "physics.radius": aero.radius,
        "physics.drag_coeff": aero.drag_coeff,
        "physics.air_density": aero.air_density,
        # table
        "physics.table_length_y": table.length_y,
        "physics.table_width_x": table.width_x,
        "physics.surface_z": table.surface_z,
        "physics.net_y": table.net_y,
        "physics.net_height": table.net_height,
        "physics.restitution_normal": table.restitution_normal,
        "physics.tangential_retention": table.tangential_retention,
        # arm
        "arm.link_lengths": _flatten(arm.link_lengths),
        "arm.joint_axes": _flatten(arm.joint_axes),
        "arm.link_dirs": _flatten(arm.link_dirs),
        "arm.base_pos": _flatten(arm.base_pos),
        "arm.base_rpy": _flatten(arm.base_rpy),
        "arm.racket_normal_local": _flatten(arm.racket_normal_local),
        "arm.racket_radius": arm.racket_radius,
        "arm.muscle_gain": arm.muscle_gain,
        "arm.inertia": _flatten(arm.inertia),
        "arm.viscous_damping": _flatten(arm.viscous_damping),
        "arm.soft_limit_stiffness": arm.soft_limit_stiffness,
        "arm.pressure_time_constant": arm.pressure_time_constant,
        "arm.pressure_min": _flatten(np.asarray(arm.pressure_ranges)[:, 0]),
        "arm.pressure_max": _flatten(np.asarray(arm.pressure_ranges)[:, 1]),
        "arm.joint_min": _flatten(np.asarray(arm.joint_limits)[:, 0]),
        "arm.joint_max": _flatten(np.asarray(arm.joint_limits)[:, 1]),
        "arm.initial_posture": _flatten(arm.initial_posture),
        "arm.dp_max": arm.dp_max,
        # launcher
        "launcher.position": _flatten(launch.position),
        "launcher.mean_speed": launch.mean_speed,
        "launcher.elevation_deg": launch.elevation_deg,
        "launcher.azimuth_deg": launch.azimuth_deg,
        "launcher.sigma_pos": launch.sigma_pos,
        "launcher.sigma_speed": launch.sigma_speed,
        "launcher.sigma_dir_deg": launch.sigma_dir_deg,
        "launcher.obs_noise": launch.obs_noise,
        "launcher.rate_hz": launch.rate_hz,
        "launcher.workspace_y": launch.workspace_y,
        "launcher.t_max": launch.t_max,
        # reward; r0 of (0,0,0) means "derive from the arm's initial pose"
        "reward.task": "return",
        "reward.b_des": [0.0, -0.685],
        "reward.r0": [0.0, 0.0, 0.0],
        "reward.exponent": 0.75,
        "reward.floor": -0.2,
        # ppo
        "ppo.nsteps": hyper.nsteps,
        "ppo.ent_coef": hyper.ent_coef,
        "ppo.lr_init": hyper.lr_init,
        "ppo.vf_coef": hyper.vf_coef,
        "ppo.max_grad_norm": hyper.max_grad_norm,
        "ppo.gamma": hyper.gamma,
        "ppo.lam": hyper.lam,
        "ppo.nminibatches": hyper.nminibatches,
        "ppo.noptepochs": hyper.noptepochs,
        "ppo.cliprange": hyper.cliprange,
        "ppo.total_timesteps": hyper.total_timesteps,
        "ppo.hidden": hyper.hidden,
        "ppo.log_std_init": hyper.log_std_init,
        # hysr episode mechanics
        "hysr.dt": hysr.dt,
        "hysr.max_steps": hysr.max_steps,
        "hysr.steps_after_landing": hysr.steps_after_landing,
        "hysr.eps_r": hysr.eps_r,
        "hysr.contact_margin": hysr.contact_margin,
        "hysr.contact_sweep": hysr.contact_sweep,
        "hysr.flight_substep": hysr.flight_substep,
        "hysr.lost_radius": hysr.lost_radius,
    }


DEFAULTS = _build_defaults()


class Config:
    """Typed flat key-value store over DEFAULTS."""

    def __init__(self, values: dict | None = None):
        self.values = dict(DEFAULTS)
        for key, val in (values or {}).items():
            self.set(key, val)

    def set(self, key: str, value):
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        default = DEFAULTS[key]
        if isinstance(default, bool):
            ok = isinstance(value, bool)
        elif isinstance(default, int):
            ok = isinstance(value, int) and not isinstance(value, bool)
        elif isinstance(default, float):
            ok = isinstance(value, (int, float)) and not isinstance(value, bool)
            value = float(value)
        elif isinstance(default, list):
            ok = isinstance(value, list)
            value = [float(v) for v in value] if ok else value
        else:
            ok = isinstance(value, str)
        if not ok:
            raise ConfigError(f"config key {key!r} expects {type(default).__name__}")
        self.values[key] = value

    def __getitem__(self, key: str):
        return self.values[key]

    def serialize(self) -> str:
        lines = []
        for key in sorted(self.values):
            lines.append(f"{key} = {_format_value(self.values[key])}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def _parse_value(key: str, token: str, lineno: int):
    default = DEFAULTS[key]
    token = token.strip()
    try:
        if isinstance(default, bool):
            if token not in ("true", "false"):
                raise ValueError("expected true/false")
            return token == "true"
        if isinstance(default, int):
            return int(token)
        if isinstance(default, float):
            return float(token)
        if isinstance(default, list):
            return [float(part) for part in token.split(",") if part.strip()]
        return token
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc


def parse_config(text: str) -> Config:
    cfg = Config()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, token = line.partition("=")
        key = key.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        cfg.values[key] = _parse_value(key, token, lineno)
    return cfg


def load_config(path) -> Config:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Typed views


def aero_params(cfg: Config) -> AeroParams:
    return AeroParams(
        mass=cfg["physics.mass"],
        radius=cfg["physics.radius"],
        drag_coeff=cfg["physics.drag_coeff"],
        air_density=cfg["physics.air_density"],
    )


def table_geometry(cfg: Config) -> TableGeometry:
    return TableGeometry(
        length_y=cfg["physics.table_length_y"],
        width_x=cfg["physics.table_width_x"],
        surface_z=cfg["physics.surface_z"],
        net_y=cfg["physics.net_y"],
        net_height=cfg["physics.net_height"],
        restitution_normal=cfg["physics.restitution_normal"],
        tangential_retention=cfg["physics.tangential_retention"],
    )


def arm_model(cfg: Config) -> ArmModel:
    lengths = np.asarray(cfg["arm.link_lengths"])
    n = len(lengths)
    return ArmModel(
        link_lengths=lengths,
        joint_axes=np.asarray(cfg["arm.joint_axes"]).reshape(n, 3),
        link_dirs=np.asarray(cfg["arm.link_dirs"]).reshape(n, 3),
        base_pos=np.asarray(cfg["arm.base_pos"]),
        base_rpy=np.asarray(cfg["arm.base_rpy"]),
        racket_normal_local=np.asarray(cfg["arm.racket_normal_local"]),
        racket_radius=cfg["arm.racket_radius"],
        muscle_gain=cfg["arm.muscle_gain"],
        inertia=np.asarray(cfg["arm.inertia"]),
        viscous_damping=np.asarray(cfg["arm.viscous_damping"]),
        soft_limit_stiffness=cfg["arm.soft_limit_stiffness"],
        pressure_time_constant=cfg["arm.pressure_time_constant"],
        pressure_ranges=np.column_stack(
            [np.asarray(cfg["arm.pressure_min"]), np.asarray(cfg["arm.pressure_max"])]
        ),
        joint_limits=np.column_stack(
            [np.asarray(cfg["arm.joint_min"]), np.asarray(cfg["arm.joint_max"])]
        ),
        initial_posture=np.asarray(cfg["arm.initial_posture"]),
        dp_max=cfg["arm.dp_max"],
    )


def launcher_config(cfg: Config) -> LauncherConfig:
    return LauncherConfig(
        position=tuple(cfg["launcher.position"]),
        mean_speed=cfg["launcher.mean_speed"],
        elevation_deg=cfg["launcher.elevation_deg"],
        azimuth_deg=cfg["launcher.azimuth_deg"],
        sigma_pos=cfg["launcher.sigma_pos"],
        sigma_speed=cfg["launcher.sigma_speed"],
        sigma_dir_deg=cfg["launcher.sigma_dir_deg"],
        obs_noise=cfg["launcher.obs_noise"],
        rate_hz=cfg["launcher.rate_hz"],
        workspace_y=cfg["launcher.workspace_y"],
        t_max=cfg["launcher.t_max"],
    )


def reward_config(cfg: Config, model: ArmModel, task: str | None = None) -> RewardConfig:
    task_name = task or cfg["reward.task"]
    try:
        task_enum = Task(task_name)
    except ValueError as exc:
        raise ConfigError(f"unknown task {task_name!r}") from exc
    r0 = cfg["reward.r0"]
    kwargs = dict(
        task=task_enum,
        b_des=tuple(cfg["reward.b_des"]),
        exponent=cfg["reward.exponent"],
        floor=cfg["reward.floor"],
        table_z=cfg["physics.surface_z"],
    )
    if any(v != 0.0 for v in r0):
        return RewardConfig(r0=tuple(r0), **kwargs)
    return RewardConfig.for_arm(model, **kwargs)


def ppo_hyper(cfg: Config, total_timesteps: int | None = None) -> PpoHyper:
    return PpoHyper(
        nsteps=cfg["ppo.nsteps"],
        ent_coef=cfg["ppo.ent_coef"],
        lr_init=cfg["ppo.lr_init"],
        vf_coef=cfg["ppo.vf_coef"],
        max_grad_norm=cfg["ppo.max_grad_norm"],
        gamma=cfg["ppo.gamma"],
        lam=cfg["ppo.lam"],
        nminibatches=cfg["ppo.nminibatches"],
        noptepochs=cfg["ppo.noptepochs"],
        cliprange=cfg["ppo.cliprange"],
        total_timesteps=total_timesteps or cfg["ppo.total_timesteps"],
        hidden=cfg["ppo.hidden"],
        log_std_init=cfg["ppo.log_std_init"],
    )


def hysr_config(cfg: Config) -> HysrConfig:
    return HysrConfig(
        dt=cfg["hysr.dt"],
        max_steps=cfg["hysr.max_steps"],
        steps_after_landing=cfg["hysr.steps_after_landing"],
        eps_r=cfg["hysr.eps_r"],
        contact_margin=cfg["hysr.contact_margin"],
        contact_sweep=cfg["hysr.contact_sweep"],
        flight_substep=cfg["hysr.flight_substep"],
        lost_radius=cfg["hysr.lost_radius"],
    )


def write_run_manifest(path, cfg: Config, seed: int, command: str, extra: dict | None = None) -> None:
    """Reproducibility record: config digest, seed, code version, command."""
    from . import __version__

    manifest = {
        "command": command,
        "config_digest": cfg.digest(),
        "seed": seed,
        "version": __version__,
    }
    manifest.update(extra or {})
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
