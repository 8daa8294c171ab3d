"""Grid scans over window placement, exhaustive search over split schedules,
and parameter sweeps of the optimal single window."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .analysis import optimal_window, search_end
from .core import EpidemicParams, EpidemicState, Schedule, solve_final_s
from .errors import BudgetExceeded, PreconditionError
from .integrator import DEFAULT_CONFIG, IntegratorConfig, batch_final_sizes

DEFAULT_BUDGET = 200_000


@dataclass(frozen=True)
class ScanResult:
    """Final sizes over a list of parameter tuples.

    ``argmin_index`` is the first occurrence of the minimum. ``detail`` holds
    optional extra per-point columns and ``notes`` free-form diagnostics.
    """

    axis: tuple[tuple[float, ...], ...]
    r_inf: tuple[float, ...]
    argmin_index: int
    baseline: float | None = None
    detail: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.axis) != len(self.r_inf):
            raise ValueError("axis and r_inf differ in length")
        for name, column in self.detail.items():
            if len(column) != len(self.axis):
                raise ValueError(f"detail column {name!r} has the wrong length")

    def __len__(self) -> int:
        return len(self.axis)

    @property
    def min_r_inf(self) -> float:
        return self.r_inf[self.argmin_index]

    @property
    def argmin(self) -> tuple[float, ...]:
        return self.axis[self.argmin_index]


def _argmin(values: Sequence[float]) -> int:
    return int(np.argmin(np.asarray(values))) if len(values) else -1


def scan_contiguous(
    params: EpidemicParams,
    i0: float,
    T: float,
    t0_grid: Sequence[float],
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> ScanResult:
    """Final size of ``[t0, t0+T]`` for every ``t0`` in ``t0_grid``."""
    grid = [float(t) for t in t0_grid]
    if any(t < 0 for t in grid) or any(b < a for a, b in zip(grid, grid[1:])):
        raise PreconditionError("t0_grid must be sorted and nonnegative")
    initial = EpidemicState.initial(i0)
    finals = batch_final_sizes(params, [Schedule.contiguous(t, T) for t in grid], initial, config)
    r = tuple(fs.r_inf for fs in finals)
    baseline = solve_final_s(initial.s, initial.i, params.rho_n).r_inf
    return ScanResult(tuple((t,) for t in grid), r, _argmin(r), baseline)


# --------------------------------------------------------------------------
# Exhaustive split schedules


@dataclass(frozen=True)
class BruteForceResult:
    best_schedule: Schedule
    best_r_inf: float
    contiguous_r_inf: float
    margin: float
    contiguous_grid_r_inf: float
    contiguous_start: float
    evaluated: int
    m: int
    grid_step: float
    t_max: float

    @property
    def grid_error(self) -> float:
        """How much the grid alone costs a single window."""
        return self.contiguous_grid_r_inf - self.contiguous_r_inf

    @property
    def gaps(self) -> list[float]:
        iv = self.best_schedule.intervals
        return [b[0] - (a[0] + a[1]) for a, b in zip(iv, iv[1:])]

    def to_dict(self) -> dict:
        return {
            "best_intervals": [list(iv) for iv in self.best_schedule.intervals],
            "best_r_inf": self.best_r_inf,
            "contiguous_r_inf": self.contiguous_r_inf,
            "contiguous_start": self.contiguous_start,
            "contiguous_grid_r_inf": self.contiguous_grid_r_inf,
            "grid_error": self.grid_error,
            "margin": self.margin,
            "gaps": self.gaps,
            "evaluated": self.evaluated,
            "m": self.m,
            "grid_step": self.grid_step,
            "t_max": self.t_max,
        }


def count_split_schedules(m: int, units: int, max_start: int) -> int:
    """Number of ``m``-interval schedules on the integer grid.

    Lengths are at least one unit and sum to ``units``, consecutive intervals
    are separated by at least one unit, and starts do not exceed ``max_start``.
    """

    @functools.lru_cache(maxsize=None)
    def ways(j: int, lo: int, rem: int) -> int:
        if j == m - 1:
            return max(0, max_start - lo + 1) if rem >= 1 else 0
        total = 0
        for a in range(lo, max_start + 1):
            for b in range(1, rem - (m - 1 - j) + 1):
                total += ways(j + 1, a + b + 1, rem - b)
        return total

    return ways(0, 0, units)


def brute_force_multi_interval(
    params: EpidemicParams,
    i0: float,
    T: float,
    m: int,
    grid_step: float,
    config: IntegratorConfig = DEFAULT_CONFIG,
    *,
    t_max: float | None = None,
    budget: int = DEFAULT_BUDGET,
) -> BruteForceResult:
    """Best schedule of exactly ``m`` separated intervals with grid-aligned starts and lengths.

    Start times range over ``[0, t_max]``; by default ``t_max`` is the
    unquarantined herd crossing plus ``2T``. The winner is compared with the
    optimal single window and with the best single window on the same grid.
    Ties go to the lexicographically earliest schedule.
    """
    if m not in (2, 3):
        raise PreconditionError(f"m must be 2 or 3, got {m}")
    units = round(T / grid_step)
    if units < 4 or abs(units * grid_step - T) > 1e-9 * T:
        raise PreconditionError(f"grid_step={grid_step} must divide T={T} into at least 4 parts")
    if t_max is None:
        t_max = search_end(params, i0, T, config) + 2 * T
    max_start = int(math.floor(t_max / grid_step + 1e-9))
    count = count_split_schedules(m, units, max_start)
    if count > budget:
        raise BudgetExceeded(f"{count} schedules exceed the budget of {budget}; coarsen the grid")

    initial = EpidemicState.initial(i0)
    h, g = config.step, grid_step
    beta_n, beta_q, gamma, rho_n = params.beta_n, params.beta_q, params.gamma, params.rho_n
    best_r = math.inf
    best: tuple[tuple[float, float], ...] = ()
    evaluated = 0

    def visit(j, s, i, r, t_end, lo, rem, prefix):
        nonlocal best_r, best, evaluated
        idx = np.arange(lo, max_start + 1)
        if idx.shape[0] == 0:
            return
        starts = idx * g
        states = _kernels.states_at(s, i, r, beta_n, gamma, h, starts - t_end)
        if j == m - 1:
            length = rem * g
            ends = _kernels.advance_rows(states, beta_q, gamma, (starts + length) - starts, h)
            for k in range(ends.shape[0]):
                fs = solve_final_s(ends[k, 0], ends[k, 1], rho_n)
                evaluated += 1
                if fs.r_inf < best_r:
                    best_r = fs.r_inf
                    best = prefix + ((float(starts[k]), length),)
            return
        for k, a in enumerate(idx):
            t0 = float(starts[k])
            for b in range(1, rem - (m - 1 - j) + 1):
                length = b * g
                end = t0 + length
                s1, i1, r1 = _kernels.advance(states[k, 0], states[k, 1], states[k, 2], beta_q, gamma, end - t0, h)
                visit(j + 1, s1, i1, r1, end, int(a) + b + 1, rem - b, prefix + ((t0, length),))

    visit(0, initial.s, initial.i, initial.r, initial.t, 0, units, ())
    best_schedule = Schedule(best, math.fsum(l for _, l in best))

    window = optimal_window(params, i0, T, config)
    grid_scan = scan_contiguous(params, i0, T, [k * g for k in range(max_start + 1)], config)
    return BruteForceResult(
        best_schedule=best_schedule,
        best_r_inf=best_r,
        contiguous_r_inf=window.r_inf,
        margin=best_r - window.r_inf,
        contiguous_grid_r_inf=grid_scan.min_r_inf,
        contiguous_start=window.start,
        evaluated=evaluated,
        m=m,
        grid_step=g,
        t_max=float(t_max),
    )


# --------------------------------------------------------------------------
# Parameter sweep


def sweep_heatmap(
    gamma: float,
    T: float,
    i0: float,
    r0n_grid: Sequence[float],
    ratio_grid: Sequence[float],
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> ScanResult:
    """Optimal single-window final size over ``(R0_n, R0_q / R0_n)`` cells.

    Cells run with ``R0_n`` as the outer index. Along each ``R0_n`` the final
    size is expected to fall as the ratio falls; any violation is listed in
    ``notes["ratio_violations"]`` rather than raised.
    """
    if any(not 0 < q < 1 for q in ratio_grid):
        raise PreconditionError("every ratio must lie in (0, 1)")
    if any(not r > 0 for r in r0n_grid):
        raise PreconditionError("every R0_n must be positive")
    axis, r, starts, cases, baseline = [], [], [], [], []
    for r0n in r0n_grid:
        for ratio in ratio_grid:
            params = EpidemicParams.from_reproduction_numbers(gamma, float(r0n), float(r0n) * float(ratio))
            w = optimal_window(params, i0, T, config)
            axis.append((float(r0n), float(ratio)))
            r.append(w.r_inf)
            starts.append(w.start)
            cases.append(w.case.value)
            baseline.append(w.no_quarantine_r_inf)

    violations = []
    n_ratio = len(ratio_grid)
    for row in range(len(r0n_grid)):
        cells = sorted(range(row * n_ratio, (row + 1) * n_ratio), key=lambda k: axis[k][1])
        for lo, hi in zip(cells, cells[1:]):
            if r[lo] > r[hi] + 1e-9:
                violations.append([axis[lo][0], axis[lo][1], axis[hi][1]])
    return ScanResult(
        axis=tuple(axis),
        r_inf=tuple(r),
        argmin_index=_argmin(r),
        detail={"start": tuple(starts), "case": tuple(cases), "no_quarantine_r_inf": tuple(baseline)},
        notes={"ratio_violations": violations, "ratio_monotone": not violations},
    )
