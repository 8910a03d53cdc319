"""Recorded ball-trajectory store.

Trajectories carry positions only, as a camera pipeline would produce;
velocities are always derived at resample time. Files are JSON Lines, one
trajectory object per line, with an optional leading meta object:

    {"meta": {...}}
    {"id": 0, "rate_hz": 180.0, "samples": [[t, x, y, z], ...]}
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .ball import BallState, TableGeometry
from .validation import PamTennisError


class ParseError(PamTennisError):
    """Malformed dataset file; message carries the line number."""


class SchemaError(PamTennisError):
    """Structurally valid JSON that violates the dataset schema."""


class EmptyDatasetError(PamTennisError):
    pass


class TooShortError(PamTennisError):
    pass


MAX_DURATION = 3.0
MIN_SAMPLES = 10


@dataclass(frozen=True)
class RecordedTrajectory:
    """Time-ordered ball positions from one launch."""

    id: int
    samples: np.ndarray  # shape (n, 4): t, x, y, z
    sample_rate_hz: float

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 4:
            raise SchemaError(f"trajectory {self.id}: samples must be (n, 4), got {arr.shape}")
        if arr.shape[0] < MIN_SAMPLES:
            raise SchemaError(f"trajectory {self.id}: needs at least {MIN_SAMPLES} samples")
        t = arr[:, 0]
        if np.any(np.diff(t) <= 0):
            raise SchemaError(f"trajectory {self.id}: sample times must be strictly increasing")
        if t[-1] - t[0] > MAX_DURATION:
            raise SchemaError(f"trajectory {self.id}: duration exceeds {MAX_DURATION} s")
        if not np.all(np.isfinite(arr)):
            raise SchemaError(f"trajectory {self.id}: non-finite sample values")
        object.__setattr__(self, "samples", arr)

    @property
    def duration(self) -> float:
        return float(self.samples[-1, 0] - self.samples[0, 0])


@dataclass(frozen=True)
class Dataset:
    trajectories: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        trajs = tuple(self.trajectories)
        if not trajs:
            raise SchemaError("dataset must contain at least one trajectory")
        ids = [t.id for t in trajs]
        if len(set(ids)) != len(ids):
            raise SchemaError("trajectory ids must be unique")
        object.__setattr__(self, "trajectories", trajs)

    def __len__(self) -> int:
        return len(self.trajectories)


def save_dataset(dataset: Dataset, path) -> None:
    """Write JSON Lines; floats serialize via repr so round-trips are lossless."""
    with open(path, "w", encoding="utf-8") as fh:
        if dataset.meta:
            fh.write(json.dumps({"meta": dataset.meta}, sort_keys=True) + "\n")
        for traj in dataset.trajectories:
            record = {
                "id": traj.id,
                "rate_hz": traj.sample_rate_hz,
                "samples": [[float(v) for v in row] for row in traj.samples],
            }
            fh.write(json.dumps(record) + "\n")


def load_dataset(path) -> Dataset:
    trajectories = []
    meta = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: line {lineno}: {exc.msg}") from exc
            if lineno == 1 and isinstance(obj, dict) and set(obj) == {"meta"}:
                meta = obj["meta"]
                continue
            trajectories.append(_record_to_trajectory(obj, path, lineno))
    if not trajectories:
        raise SchemaError(f"{path}: no trajectories found")
    return Dataset(trajectories=tuple(trajectories), meta=meta)


def _record_to_trajectory(obj, path, lineno) -> RecordedTrajectory:
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: line {lineno}: expected an object")
    for key in ("id", "rate_hz", "samples"):
        if key not in obj:
            raise SchemaError(f"{path}: line {lineno}: missing field {key!r}")
    try:
        return RecordedTrajectory(
            id=int(obj["id"]),
            samples=np.asarray(obj["samples"], dtype=np.float64),
            sample_rate_hz=float(obj["rate_hz"]),
        )
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: line {lineno}: {exc}") from exc
    except SchemaError as exc:
        raise SchemaError(f"{path}: line {lineno}: {exc}") from exc


def sample_trajectory(dataset: Dataset, rng: np.random.Generator) -> RecordedTrajectory:
    """Uniform draw over all trajectories."""
    if len(dataset) == 0:
        raise EmptyDatasetError("cannot sample from an empty dataset")
    index = int(rng.integers(0, len(dataset)))
    return dataset.trajectories[index]


def resample(traj: RecordedTrajectory, dt: float) -> list[BallState]:
    """Interpolate positions onto the control grid and derive velocities.

    Positions are linear in time between raw samples; velocities come from
    central differences on the resampled grid, one-sided at the ends.
    """
    if dt <= 0:
        raise PamTennisError("dt must be positive")
    raw = traj.samples
    if raw.shape[0] < 2:
        raise TooShortError("need at least 2 samples to resample")
    t0, t1 = raw[0, 0], raw[-1, 0]
    n = int(np.floor((t1 - t0) / dt)) + 1
    grid = t0 + dt * np.arange(n)
    pos = np.column_stack([np.interp(grid, raw[:, 0], raw[:, 1 + k]) for k in range(3)])
    vel = np.empty_like(pos)
    if n == 1:
        vel[0] = 0.0
    else:
        vel[1:-1] = (pos[2:] - pos[:-2]) / (2 * dt)
        vel[0] = (pos[1] - pos[0]) / dt
        vel[-1] = (pos[-1] - pos[-2]) / dt
    return [BallState(pos=pos[i], vel=vel[i]) for i in range(n)]


@dataclass(frozen=True)
class BinStats:
    """Per-bin first and second moments of a set of channels."""

    centers: np.ndarray
    counts: np.ndarray
    means: np.ndarray  # shape (n_bins, n_channels)
    stds: np.ndarray


@dataclass(frozen=True)
class VariabilityReport:
    """Spread of a dataset over time, over the table's long axis, and at
    the first bounce."""

    time_bins: BinStats  # channels: x, y, z
    y_bins: BinStats  # channels: t, x, z
    bounce_mean_y: float
    bounce_std_y: float
    n_bounces: int


def _binned_stats(traj_ids: np.ndarray, keys: np.ndarray, values: np.ndarray, bin_width: float) -> BinStats:
    """Cross-trajectory spread per bin.

    Each trajectory's samples inside a bin are first averaged, so the bin
    statistics measure variability between trajectories at matched keys
    rather than the ball's own motion across the bin. Counts stay raw
    sample counts so they sum to the dataset total.
    """
    if bin_width <= 0:
        raise PamTennisError("bin width must be positive")
    # Nudge keys sitting exactly on a bin edge into the upper bin so that
    # grid-aligned sample times bin deterministically.
    idx = (
        np.floor((keys - keys.min()) / bin_width + 1e-9).astype(int)
        if keys.size
        else np.array([], int)
    )
    n_bins = int(idx.max()) + 1 if idx.size else 0
    centers = keys.min() + (np.arange(n_bins) + 0.5) * bin_width if n_bins else np.array([])
    counts = np.zeros(n_bins, dtype=int)
    np.add.at(counts, idx, 1)

    _, traj_pos = np.unique(traj_ids, return_inverse=True)
    n_traj = traj_pos.max() + 1 if traj_pos.size else 0
    n_channels = values.shape[1]
    group_sums = np.zeros((n_bins, n_traj, n_channels))
    group_counts = np.zeros((n_bins, n_traj))
    np.add.at(group_sums, (idx, traj_pos), values)
    np.add.at(group_counts, (idx, traj_pos), 1.0)

    means = np.zeros((n_bins, n_channels))
    stds = np.zeros((n_bins, n_channels))
    for b in range(n_bins):
        present = group_counts[b] > 0
        if not np.any(present):
            continue
        per_traj = group_sums[b, present] / group_counts[b, present][:, None]
        means[b] = per_traj.mean(axis=0)
        stds[b] = per_traj.std(axis=0)
    return BinStats(centers=centers, counts=counts, means=means, stds=stds)


DIP_THRESHOLD = 0.05


def first_bounce(traj: RecordedTrajectory, table: TableGeometry | None = None):
    """(t, x, y) of the first arrival of the ball at the tabletop plane.

    A bounce shows up in sampled center positions either as a downward
    plane crossing or, because contact is tangent, as a local height
    minimum just above the plane; the earlier of the two counts.
    """
    surface = (table or TableGeometry()).surface_z
    z = traj.samples[:, 3]
    for i in range(1, len(z)):
        if z[i - 1] >= surface > z[i]:
            frac = (z[i - 1] - surface) / (z[i - 1] - z[i])
            row = traj.samples[i - 1] + frac * (traj.samples[i] - traj.samples[i - 1])
            return row[0], row[1], row[2]
        if (
            i + 1 < len(z)
            and z[i] < surface + DIP_THRESHOLD
            and z[i - 1] > z[i]
            and z[i + 1] >= z[i]
        ):
            row = traj.samples[i]
            return row[0], row[1], row[2]
    return None


def variability_stats(
    dataset: Dataset,
    time_bin: float = 0.05,
    y_bin: float = 0.1,
    table: TableGeometry | None = None,
) -> VariabilityReport:
    """Cross-trajectory mean/std per time bin and per y bin, plus
    first-bounce spread."""
    rows = np.vstack([traj.samples for traj in dataset.trajectories])
    ids = np.concatenate(
        [np.full(len(traj.samples), traj.id) for traj in dataset.trajectories]
    )
    time_stats = _binned_stats(ids, rows[:, 0], rows[:, 1:4], time_bin)
    y_stats = _binned_stats(ids, rows[:, 2], rows[:, [0, 1, 3]], y_bin)

    bounce_y = [b[2] for b in (first_bounce(t, table) for t in dataset.trajectories) if b is not None]
    bounce_y = np.asarray(bounce_y)
    return VariabilityReport(
        time_bins=time_stats,
        y_bins=y_stats,
        bounce_mean_y=float(bounce_y.mean()) if bounce_y.size else float("nan"),
        bounce_std_y=float(bounce_y.std()) if bounce_y.size else float("nan"),
        n_bounces=int(bounce_y.size),
    )


def write_variability_csv(report: VariabilityReport, path) -> None:
    """Time-binned table: (bin_center, mean_x, std_x, mean_y, std_y, mean_z, std_z)."""
    tb = report.time_bins
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("bin_center,mean_x,std_x,mean_y,std_y,mean_z,std_z\n")
        for i in range(len(tb.centers)):
            row = [tb.centers[i], *(v for pair in zip(tb.means[i], tb.stds[i]) for v in pair)]
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
