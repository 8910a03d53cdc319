"""Synthetic ball gun.

Generates recorded-style datasets: launch states are drawn from narrow
Gaussians around fixed gun settings, flights are integrated with the same
gravity/drag/bounce model as live play, positions are sampled at the
camera rate with i.i.d. observation noise, and each trajectory truncates
once the ball passes the robot workspace plane.

Generation is vectorized over balls but every ball owns an RNG substream
keyed by its index, so datasets are reproducible regardless of batch size
or scheduling.
"""

from dataclasses import dataclass

import numpy as np

from .ball import GRAVITY, AeroParams, TableGeometry
from .dataset import MIN_SAMPLES, Dataset, RecordedTrajectory
from .rng import NS_LAUNCHER, substream
from .validation import ConfigError

SUBSTEPS_PER_SAMPLE = 6


@dataclass(frozen=True)
class LauncherConfig:
    """Gun pose, aim, and noise magnitudes.

    The gun sits beyond the table edge on the opponent side and fires
    toward the robot (+y). ``elevation_deg`` is measured up from the
    horizontal, ``azimuth_deg`` rotates the aim about z away from +y.
    """

    position: tuple = (0.0, -2.7, 0.4)
    mean_speed: float = 7.0
    elevation_deg: float = 16.0
    azimuth_deg: float = 0.0
    sigma_pos: float = 0.01
    sigma_speed: float = 0.15
    sigma_dir_deg: float = 1.0
    obs_noise: float = 0.005
    rate_hz: float = 180.0
    workspace_y: float = 2.3
    t_max: float = 3.0

    def __post_init__(self):
        if not 2.0 <= self.mean_speed <= 15.0:
            raise ConfigError(f"mean_speed must be in [2, 15] m/s, got {self.mean_speed}")
        if self.rate_hz <= 0:
            raise ConfigError("rate_hz must be positive")
        for name in ("sigma_pos", "sigma_speed", "sigma_dir_deg", "obs_noise"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")

    def mean_direction(self) -> np.ndarray:
        el = np.deg2rad(self.elevation_deg)
        az = np.deg2rad(self.azimuth_deg)
        return np.array([np.sin(az) * np.cos(el), np.cos(az) * np.cos(el), np.sin(el)])


def _direction(elevation: float, azimuth: float) -> np.ndarray:
    return np.array(
        [
            np.sin(azimuth) * np.cos(elevation),
            np.cos(azimuth) * np.cos(elevation),
            np.sin(elevation),
        ]
    )


def generate_dataset(
    cfg: LauncherConfig,
    n: int,
    seed: int,
    table: TableGeometry | None = None,
    aero: AeroParams | None = None,
    meta: dict | None = None,
) -> Dataset:
    """Launch ``n`` balls and record their camera-rate position samples."""
    if n < 1:
        raise ConfigError("n must be at least 1")
    table = table or TableGeometry()
    aero = aero or AeroParams()

    rngs = [substream(seed, NS_LAUNCHER, i) for i in range(n)]
    pos = np.empty((n, 3))
    vel = np.empty((n, 3))
    el0 = np.deg2rad(cfg.elevation_deg)
    az0 = np.deg2rad(cfg.azimuth_deg)
    sig_dir = np.deg2rad(cfg.sigma_dir_deg)
    for i, rng in enumerate(rngs):
        pos[i] = np.asarray(cfg.position) + cfg.sigma_pos * rng.standard_normal(3)
        speed = cfg.mean_speed + cfg.sigma_speed * rng.standard_normal()
        el = el0 + sig_dir * rng.standard_normal()
        az = az0 + sig_dir * rng.standard_normal()
        vel[i] = speed * _direction(el, az)

    samples, counts = _fly(pos, vel, cfg, table, aero)

    trajectories = []
    dt_sample = 1.0 / cfg.rate_hz
    for i, rng in enumerate(rngs):
        m = counts[i]
        observed = samples[i, :m] + cfg.obs_noise * rng.standard_normal((m, 3))
        t = dt_sample * np.arange(m)
        trajectories.append(
            RecordedTrajectory(
                id=i,
                samples=np.column_stack([t, observed]),
                sample_rate_hz=cfg.rate_hz,
            )
        )
    return Dataset(trajectories=tuple(trajectories), meta=meta or {})


def _fly(pos, vel, cfg, table, aero):
    """Vectorized gravity/drag flight with table bounces.

    Returns the noiseless position samples on the camera grid and the
    per-ball sample count up to truncation.
    """
    n = pos.shape[0]
    h = 1.0 / (cfg.rate_hz * SUBSTEPS_PER_SAMPLE)
    max_samples = int(np.ceil(cfg.t_max * cfg.rate_hz)) + 1
    samples = np.zeros((n, max_samples, 3))
    counts = np.zeros(n, dtype=int)
    active = np.ones(n, dtype=bool)
    floor_z = table.surface_z - 0.5
    kdrag = aero.drag_factor

    samples[:, 0] = pos
    counts[:] = 1

    total_substeps = (max_samples - 1) * SUBSTEPS_PER_SAMPLE
    for step in range(1, total_substeps + 1):
        prev_pos = pos.copy()
        speed = np.linalg.norm(vel, axis=1, keepdims=True)
        accel = np.array([0.0, 0.0, -GRAVITY]) - kdrag * speed * vel
        vel = vel + h * accel
        pos = pos + h * vel

        # Bounce any ball whose segment crossed the tabletop inside bounds.
        crossed = (prev_pos[:, 2] >= table.surface_z) & (pos[:, 2] < table.surface_z) & active
        if np.any(crossed):
            frac = (prev_pos[crossed, 2] - table.surface_z) / (prev_pos[crossed, 2] - pos[crossed, 2])
            cross_pt = prev_pos[crossed] + frac[:, None] * (pos[crossed] - prev_pos[crossed])
            on_table = (np.abs(cross_pt[:, 0]) <= table.width_x / 2) & (
                np.abs(cross_pt[:, 1]) <= table.length_y / 2
            )
            idx = np.flatnonzero(crossed)[on_table]
            if idx.size:
                f = frac[on_table][:, None]
                v_before = vel[idx]  # post-update velocity approximates impact velocity
                v_after = v_before.copy()
                v_after[:, :2] *= table.tangential_retention
                v_after[:, 2] = -table.restitution_normal * v_before[:, 2]
                start = prev_pos[idx] + f * (pos[idx] - prev_pos[idx])
                remain = (1.0 - f) * h
                vel[idx] = v_after
                pos[idx] = start + remain * v_after

        done = (pos[:, 1] > cfg.workspace_y) | (pos[:, 2] < floor_z)
        active &= ~done

        if step % SUBSTEPS_PER_SAMPLE == 0:
            s = step // SUBSTEPS_PER_SAMPLE
            record = active & (counts == s)
            samples[record, s] = pos[record]
            counts[record] += 1
        if not np.any(active):
            break

    if np.any(counts < MIN_SAMPLES):
        bad = int(np.flatnonzero(counts < MIN_SAMPLES)[0])
        raise ConfigError(
            f"ball {bad} truncated after {int(counts[bad])} samples; "
            "launcher aim does not reach the workspace"
        )
    return samples, counts


def launcher_selftest(cfg: LauncherConfig, seed: int = 0, n: int = 1000):
    """Variability report over a fresh batch; the calibration harness."""
    from .dataset import variability_stats

    data = generate_dataset(cfg, n=n, seed=seed)
    return variability_stats(data)
