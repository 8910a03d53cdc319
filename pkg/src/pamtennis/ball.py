"""Ball flight, table bounce, and racket rebound.

Coordinate frame: origin at table center, z up, tabletop at ``surface_z``.
The long side of the table runs along y, the net plane is at ``net_y``.
All functions are pure over value types; ``BallFlight`` is the one stateful
integrator and is owned by a single caller at a time.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .validation import NonFiniteError, PamTennisError, finite_vector, require_unit

GRAVITY = 9.81

# Sanity bound on ball speed; rejects integrator blow-up early.
MAX_BALL_SPEED = 60.0

# Ball below the tabletop by this much is unrecoverable.
LOST_BELOW_SURFACE = 0.5


class BadBounceError(PamTennisError):
    """table_bounce called with a non-descending velocity."""


class BadNormalError(PamTennisError):
    """Racket normal deviates from unit length."""


@dataclass(frozen=True)
class BallState:
    """Ball position [m] and velocity [m/s] in the table frame."""

    pos: np.ndarray
    vel: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pos", finite_vector(self.pos, 3, "pos"))
        object.__setattr__(self, "vel", finite_vector(self.vel, 3, "vel"))
        speed = float(np.linalg.norm(self.vel))
        if speed > MAX_BALL_SPEED:
            raise NonFiniteError(f"ball speed {speed:.1f} m/s exceeds sanity bound")

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.vel))


@dataclass(frozen=True)
class AeroParams:
    """Flight model parameters: gravity plus quadratic drag, no spin."""

    mass: float = 2.7e-3
    radius: float = 0.02
    drag_coeff: float = 0.4
    air_density: float = 1.204

    def __post_init__(self):
        if self.mass <= 0:
            raise PamTennisError("mass must be positive")
        if self.drag_coeff < 0:
            raise PamTennisError("drag_coeff must be non-negative")

    @property
    def drag_factor(self) -> float:
        """0.5 * rho * C_d * A / m, so accel = -drag_factor * |v| * v."""
        area = np.pi * self.radius**2
        return 0.5 * self.air_density * self.drag_coeff * area / self.mass


@dataclass(frozen=True)
class TableGeometry:
    """Regulation-sized table by default; origin at the table center."""

    length_y: float = 2.74
    width_x: float = 1.525
    surface_z: float = 0.0
    net_y: float = 0.0
    net_height: float = 0.1525
    restitution_normal: float = 0.9
    tangential_retention: float = 0.8

    def __post_init__(self):
        if self.length_y <= 0 or self.width_x <= 0:
            raise PamTennisError("table dimensions must be positive")
        if not 0 < self.restitution_normal <= 1:
            raise PamTennisError("restitution_normal must be in (0, 1]")
        if not 0 < self.tangential_retention <= 1:
            raise PamTennisError("tangential_retention must be in (0, 1]")

    def on_table(self, x: float, y: float) -> bool:
        return abs(x) <= self.width_x / 2 and abs(y) <= self.length_y / 2


@dataclass(frozen=True)
class RacketPose:
    """Racket disc: center, unit face normal, translational velocity."""

    center: np.ndarray
    normal: np.ndarray
    velocity: np.ndarray
    radius: float = 0.08

    def __post_init__(self):
        object.__setattr__(self, "center", finite_vector(self.center, 3, "center"))
        object.__setattr__(self, "normal", finite_vector(self.normal, 3, "normal"))
        object.__setattr__(self, "velocity", finite_vector(self.velocity, 3, "velocity"))
        require_unit(self.normal, "normal", tol=1e-9)
        if self.radius <= 0:
            raise PamTennisError("racket radius must be positive")


class ContactKind(enum.Enum):
    RACKET_HIT = "racket_hit"
    TABLE_LAND = "table_land"
    NET_CROSS = "net_cross"


@dataclass(frozen=True)
class ContactEvent:
    kind: ContactKind
    time: float
    point: np.ndarray
    ball_vel_before: np.ndarray
    ball_vel_after: np.ndarray


def step_ball(state: BallState, dt: float, aero: AeroParams) -> BallState:
    """One semi-implicit Euler step under gravity and quadratic drag.

    Velocity updates first; position then advances with the new velocity,
    which keeps the scheme stable at the 1-10 ms steps used throughout.
    """
    if not 0 < dt <= 0.02:
        raise PamTennisError(f"dt must be in (0, 0.02], got {dt}")
    accel = np.array([0.0, 0.0, -GRAVITY])
    speed = np.linalg.norm(state.vel)
    if speed > 0 and aero.drag_coeff > 0:
        accel = accel - aero.drag_factor * speed * state.vel
    vel = state.vel + dt * accel
    pos = state.pos + dt * vel
    return BallState(pos=pos, vel=vel)


def detect_table_contact(prev: BallState, next: BallState, table: TableGeometry):
    """Landing event if the segment prev->next crosses the tabletop downward.

    Returns None for upward crossings, segments that stay on one side, or
    crossings outside the table bounds (the ball is then off the table).
    The event ``time`` is the interpolation fraction along the segment;
    callers rescale it to absolute time.
    """
    z0 = prev.pos[2] - table.surface_z
    z1 = next.pos[2] - table.surface_z
    if not (z0 >= 0 > z1):
        return None
    frac = z0 / (z0 - z1)
    point = prev.pos + frac * (next.pos - prev.pos)
    if not table.on_table(point[0], point[1]):
        return None
    vel_before = prev.vel + frac * (next.vel - prev.vel)
    return ContactEvent(
        kind=ContactKind.TABLE_LAND,
        time=frac,
        point=point,
        ball_vel_before=vel_before,
        ball_vel_after=table_bounce(vel_before, table),
    )


def table_bounce(vel_in: np.ndarray, table: TableGeometry) -> np.ndarray:
    """Componentwise bounce: normal restitution, tangential retention."""
    vel_in = finite_vector(vel_in, 3, "vel_in")
    if vel_in[2] >= 0:
        raise BadBounceError(f"bounce requires downward velocity, got vz={vel_in[2]}")
    out = vel_in.copy()
    out[0] *= table.tangential_retention
    out[1] *= table.tangential_retention
    out[2] = -table.restitution_normal * vel_in[2]
    return out


def racket_rebound(ball_vel_in: np.ndarray, racket: RacketPose, eps_r: float) -> np.ndarray:
    """Rebound off the racket face with restitution ``eps_r``.

    Along the unit normal n, with incoming ball component v_in and racket
    component r, the outgoing component satisfies

        v_out - r = eps_r * (-v_in + r)

    The tangential ball velocity passes through unchanged; the model
    carries no spin.
    """
    ball_vel_in = finite_vector(ball_vel_in, 3, "ball_vel_in")
    if not 0 < eps_r <= 1.5:
        raise PamTennisError(f"eps_r must be in (0, 1.5], got {eps_r}")
    n = racket.normal
    norm = float(np.linalg.norm(n))
    if abs(norm - 1.0) > 1e-6:
        raise BadNormalError(f"racket normal has norm {norm!r}")
    v_par = float(ball_vel_in @ n)
    r_par = float(racket.velocity @ n)
    v_out_par = r_par + eps_r * (-v_par + r_par)
    return ball_vel_in - v_par * n + v_out_par * n


def point_disc_distance(point: np.ndarray, center: np.ndarray, normal: np.ndarray, radius: float) -> float:
    """Euclidean distance from a point to a solid disc."""
    rel = point - center
    axial = float(rel @ normal)
    radial_vec = rel - axial * normal
    radial = float(np.linalg.norm(radial_vec))
    if radial <= radius:
        return abs(axial)
    return float(np.hypot(axial, radial - radius))


def detect_racket_contact(
    ball: BallState,
    racket: RacketPose,
    ball_radius: float,
    contact_margin: float = 0.005,
) -> bool:
    """True iff the ball center is within reach of the racket disc."""
    dist = point_disc_distance(ball.pos, racket.center, racket.normal, racket.radius)
    return dist <= ball_radius + contact_margin


class BallFlight:
    """Substepped free-flight integrator with event tracking.

    Advances the ball through gravity/drag substeps, bouncing it off the
    table and recording the first landing, any net-plane crossings, the
    running maximum speed, and whether the ball is lost. One instance per
    episode; not shared between workers.
    """

    def __init__(self, state: BallState, table: TableGeometry, aero: AeroParams, substep: float = 1e-3):
        self.state = state
        self.table = table
        self.aero = aero
        self.substep = substep
        self.time = 0.0
        self.landing: ContactEvent | None = None
        self.net_events: list[ContactEvent] = []
        self.max_speed = state.speed
        self.net_fault = False
        self.lost = False

    @property
    def terminal(self) -> bool:
        return self.net_fault or self.lost

    def advance(self, dt: float) -> BallState:
        """Advance by ``dt`` (split into substeps); returns the new state."""
        n = max(1, round(dt / self.substep))
        h = dt / n
        for _ in range(n):
            if self.terminal:
                break
            self._substep(h)
        return self.state

    def _substep(self, h: float):
        prev = self.state
        state = step_ball(prev, h, self.aero)
        self.time += h
        self.max_speed = max(self.max_speed, state.speed)

        net = _detect_net_cross(prev, state, self.table, self.time - h, h)
        if net is not None:
            self.net_events.append(net)
            if net.point[2] < self.table.surface_z + self.table.net_height:
                self.net_fault = True
                self.state = BallState(pos=net.point, vel=net.ball_vel_before)
                return

        land = detect_table_contact(prev, state, self.table)
        if land is not None:
            event = ContactEvent(
                kind=land.kind,
                time=self.time - h + land.time * h,
                point=land.point,
                ball_vel_before=land.ball_vel_before,
                ball_vel_after=land.ball_vel_after,
            )
            if self.landing is None:
                self.landing = event
            # Continue the flight from the bounce so callers may keep
            # observing the ball after the landing event.
            remain = (1.0 - land.time) * h
            state = BallState(pos=event.point, vel=event.ball_vel_after)
            if remain > 0:
                state = step_ball(state, remain, self.aero)
            self.state = state
            self.max_speed = max(self.max_speed, state.speed)
            return

        if state.pos[2] < self.table.surface_z - LOST_BELOW_SURFACE:
            self.lost = True
        self.state = state


@dataclass
class FlightResult:
    """Outcome of simulate_until_landing."""

    landing: ContactEvent | None
    net_events: list = field(default_factory=list)
    max_speed: float = 0.0
    net_fault: bool = False


def simulate_until_landing(
    state: BallState,
    table: TableGeometry,
    aero: AeroParams,
    dt: float = 1e-3,
    t_max: float = 3.0,
) -> FlightResult:
    """Integrate post-rebound flight until a terminal event.

    Stops at the first table landing, a net-plane crossing below the net
    top (a net fault), a drop 0.5 m below the tabletop, or ``t_max``.
    Tracks the running maximum ball speed for the smash reward.
    """
    if t_max > 3.0:
        raise PamTennisError("t_max must be at most 3 s")
    flight = BallFlight(state, table, aero, substep=dt)
    while flight.time < t_max and not flight.terminal and flight.landing is None:
        flight.advance(dt)
    return FlightResult(
        landing=flight.landing,
        net_events=flight.net_events,
        max_speed=flight.max_speed,
        net_fault=flight.net_fault,
    )


def _detect_net_cross(prev: BallState, next: BallState, table: TableGeometry, t0: float, dt: float):
    y0 = prev.pos[1] - table.net_y
    y1 = next.pos[1] - table.net_y
    if y0 == 0.0 or y0 * y1 >= 0:
        return None
    frac = y0 / (y0 - y1)
    point = prev.pos + frac * (next.pos - prev.pos)
    vel = prev.vel + frac * (next.vel - prev.vel)
    return ContactEvent(
        kind=ContactKind.NET_CROSS,
        time=t0 + frac * dt,
        point=point,
        ball_vel_before=vel,
        ball_vel_after=vel,
    )
