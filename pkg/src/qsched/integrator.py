"""Fixed-step RK4 integration of the SIR system under a quarantine schedule.

The transmission rate is constant between consecutive schedule boundaries,
so the time axis is cut at every interval start and end and each piece is
stepped separately. See :mod:`qsched._kernels` for the step rule.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .core import EpidemicParams, EpidemicState, FinalSize, Schedule, final_size, solve_final_s
from .errors import DomainError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class IntegratorConfig:
    step: float = 0.01
    extinction_threshold: float = 1e-10
    horizon_cap: float = 10_000.0

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise DomainError(f"step must be positive, got {self.step}")
        if not 0 < self.extinction_threshold < 1:
            raise DomainError(f"extinction_threshold must lie in (0, 1), got {self.extinction_threshold}")
        if not self.horizon_cap > 0:
            raise DomainError(f"horizon_cap must be positive, got {self.horizon_cap}")

    def with_step(self, step: float) -> "IntegratorConfig":
        return IntegratorConfig(step, self.extinction_threshold, self.horizon_cap)


DEFAULT_CONFIG = IntegratorConfig()


@dataclass(frozen=True)
class Segment:
    t_start: float
    t_end: float
    beta: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Stored RK4 steps. ``beta[k]`` is the rate used on the step ending at point k."""

    t: np.ndarray
    s: np.ndarray
    i: np.ndarray
    r: np.ndarray
    beta: np.ndarray
    segments: tuple[Segment, ...]
    gamma: float
    extinct_at: float | None = None

    def __post_init__(self) -> None:
        for arr in (self.t, self.s, self.i, self.r, self.beta):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return self.t.shape[0]

    def state(self, k: int) -> EpidemicState:
        return EpidemicState(float(self.t[k]), float(self.s[k]), float(self.i[k]), float(self.r[k]))

    @property
    def points(self) -> list[EpidemicState]:
        return [self.state(k) for k in range(len(self))]

    @property
    def final(self) -> EpidemicState:
        return self.state(len(self) - 1)

    @property
    def segment_betas(self) -> list[tuple[float, float, float]]:
        return [(seg.t_start, seg.t_end, seg.beta) for seg in self.segments]


def segment_plan(
    params: EpidemicParams, schedule: Schedule, t_start: float, t_end: float
) -> tuple[np.ndarray, np.ndarray]:
    """Breakpoints and per-segment rates covering ``[t_start, t_end]``."""
    cuts = {t_start, t_end}
    cuts.update(b for b in schedule.boundaries if t_start < b < t_end)
    breaks = np.array(sorted(cuts), dtype=float)
    if breaks.shape[0] == 1:
        return breaks, np.empty(0)
    mids = 0.5 * (breaks[:-1] + breaks[1:])
    betas = np.full(mids.shape[0], params.beta_n)
    for start, length in schedule.intervals:
        betas[(mids > start) & (mids < start + length)] = params.beta_q
    return breaks, betas


def beta_at(params: EpidemicParams, schedule: Schedule, t: float) -> float:
    """Rate in force just after ``t``."""
    for start, length in schedule.intervals:
        if start <= t < start + length:
            return params.beta_q
    return params.beta_n


def _check_initial(initial: EpidemicState) -> None:
    if not 0 < initial.i < 1:
        raise DomainError(f"initial infected fraction must lie in (0, 1), got {initial.i}")


def _trajectory(breaks, betas, initial, gamma, h, beta0, extinct_at=None) -> Trajectory:
    t, s, i, r, beta = _kernels.record_segments(breaks, betas, initial.s, initial.i, initial.r, gamma, h, beta0)
    segments = tuple(Segment(float(a), float(b), float(be)) for a, b, be in zip(breaks[:-1], breaks[1:], betas))
    return Trajectory(t, s, i, r, beta, segments, gamma, extinct_at)


def integrate(
    params: EpidemicParams,
    schedule: Schedule,
    initial: EpidemicState,
    horizon: float,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> Trajectory:
    """Integrate from ``initial.t`` to the absolute time ``horizon``."""
    _check_initial(initial)
    if horizon < initial.t:
        raise DomainError(f"horizon {horizon} precedes the initial time {initial.t}")
    breaks, betas = segment_plan(params, schedule, initial.t, horizon)
    return _trajectory(breaks, betas, initial, params.gamma, config.step, beta_at(params, schedule, initial.t))


def integrate_segments(
    breaks: Sequence[float],
    betas: Sequence[float],
    initial: EpidemicState,
    gamma: float,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> Trajectory:
    """Integrate over explicit breakpoints with arbitrary per-segment rates."""
    _check_initial(initial)
    breaks = np.asarray(breaks, dtype=float)
    betas = np.asarray(betas, dtype=float)
    if breaks.shape[0] != betas.shape[0] + 1 or np.any(np.diff(breaks) <= 0):
        raise DomainError("breaks must be strictly increasing with one more entry than betas")
    return _trajectory(breaks, betas, initial, gamma, config.step, float(betas[0]))


def integrate_to_extinction(
    params: EpidemicParams,
    schedule: Schedule,
    initial: EpidemicState,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> tuple[Trajectory, FinalSize]:
    """Integrate through the schedule, then under ``beta_n`` until ``i`` is negligible.

    The final size is solved from the last stored state. If ``horizon_cap``
    is hit with ``i`` still above threshold the trajectory carries
    ``extinct_at=None``; the final size is still exact because only normal
    transmission follows.
    """
    _check_initial(initial)
    h = config.step
    t_q = max(initial.t, schedule.end)
    breaks, betas = segment_plan(params, schedule, initial.t, t_q)
    s, i, r = _kernels.run_segments(breaks, betas, initial.s, initial.i, initial.r, params.gamma, h)
    max_steps = max(0, int(math.floor((config.horizon_cap - t_q) / h)))
    k = _kernels.steps_until_extinct(s, i, r, params.beta_n, params.gamma, h, config.extinction_threshold, max_steps)
    if k > 0:
        breaks = np.append(breaks, t_q + k * h)
        betas = np.append(betas, params.beta_n)
    traj = _trajectory(breaks, betas, initial, params.gamma, h, beta_at(params, schedule, initial.t))
    last = traj.final
    if last.i < config.extinction_threshold:
        traj = Trajectory(traj.t, traj.s, traj.i, traj.r, traj.beta, traj.segments, traj.gamma, float(last.t))
    elif last.s > params.rho_n:
        log.warning("horizon cap %.0f reached above the herd threshold (s=%.6g, i=%.3g)", config.horizon_cap, last.s, last.i)
    return traj, final_size(last, params)


def state_at(trajectory: Trajectory, t: float) -> EpidemicState:
    """State at ``t``; off-grid times take one fresh RK4 step from the previous point."""
    times = trajectory.t
    if not times[0] <= t <= times[-1]:
        raise DomainError(f"t={t} outside the stored range [{times[0]}, {times[-1]}]")
    k = int(np.searchsorted(times, t, side="right")) - 1
    if times[k] == t:
        return trajectory.state(k)
    s, i, r = _kernels.rk4_step(
        trajectory.s[k], trajectory.i[k], trajectory.r[k], trajectory.beta[k + 1], trajectory.gamma, t - times[k]
    )
    return EpidemicState(float(t), s, i, r)


def end_state(
    params: EpidemicParams,
    schedule: Schedule,
    initial: EpidemicState,
    t_end: float,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> EpidemicState:
    """State at ``t_end`` without storing the path."""
    breaks, betas = segment_plan(params, schedule, initial.t, t_end)
    s, i, r = _kernels.run_segments(breaks, betas, initial.s, initial.i, initial.r, params.gamma, config.step)
    return EpidemicState(t_end, s, i, r)


def unquarantined_state(
    params: EpidemicParams, initial: EpidemicState, t: float, config: IntegratorConfig = DEFAULT_CONFIG
) -> EpidemicState:
    s, i, r = _kernels.advance(initial.s, initial.i, initial.r, params.beta_n, params.gamma, t - initial.t, config.step)
    return EpidemicState(t, s, i, r)


def quarantine_final_size(
    params: EpidemicParams,
    schedule: Schedule,
    initial: EpidemicState,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> FinalSize:
    """Final size of ``schedule``, solved exactly from the state at its last boundary."""
    t_q = max(initial.t, schedule.end)
    breaks, betas = segment_plan(params, schedule, initial.t, t_q)
    s, i, r = _kernels.run_segments(breaks, betas, initial.s, initial.i, initial.r, params.gamma, config.step)
    return solve_final_s(s, i, params.rho_n)


def r_inf(
    params: EpidemicParams,
    schedule: Schedule,
    initial: EpidemicState,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> float:
    return quarantine_final_size(params, schedule, initial, config).r_inf


def batch_final_sizes(
    params: EpidemicParams,
    schedules: Sequence[Schedule],
    initial: EpidemicState,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> list[FinalSize]:
    """:func:`quarantine_final_size` for many schedules in one compiled pass."""
    if not schedules:
        return []
    plans = [segment_plan(params, sch, initial.t, max(initial.t, sch.end)) for sch in schedules]
    width = max(b.shape[0] for _, b in plans)
    breaks = np.zeros((len(plans), width + 1))
    betas = np.zeros((len(plans), max(width, 1)))
    nseg = np.zeros(len(plans), dtype=np.int64)
    for k, (br, be) in enumerate(plans):
        breaks[k, : br.shape[0]] = br
        betas[k, : be.shape[0]] = be
        nseg[k] = be.shape[0]
    ends = _kernels.batch_end_states(breaks, betas, nseg, initial.s, initial.i, initial.r, params.gamma, config.step)
    return [solve_final_s(row[0], row[1], params.rho_n) for row in ends]


def direct_final_s(
    params: EpidemicParams,
    state: EpidemicState,
    config: IntegratorConfig = DEFAULT_CONFIG,
    threshold: float = 1e-12,
) -> tuple[float, bool]:
    """Susceptible fraction after integrating under ``beta_n`` until ``i < threshold``.

    Independent of the final-size equation; used as its oracle. The flag is
    False if ``horizon_cap`` was reached first.
    """
    h = config.step
    max_steps = int(config.horizon_cap / h)
    k = _kernels.steps_until_extinct(state.s, state.i, state.r, params.beta_n, params.gamma, h, threshold, max_steps)
    s, i, _ = _kernels.advance(state.s, state.i, state.r, params.beta_n, params.gamma, k * h, h)
    return s, i < threshold
