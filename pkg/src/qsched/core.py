"""Domain types and closed-form pieces of the SIR model with a reducible
transmission rate.

Everything here is a pure function of its arguments. State fractions are
normalised so that ``s + i + r == 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ConvergenceError, DomainError, ScheduleError

SIMPLEX_TOL = 1e-9
SCHEDULE_TOL = 1e-12
FINAL_SIZE_MAX_ITER = 200


@dataclass(frozen=True)
class EpidemicParams:
    """Transmission and recovery rates (per day).

    ``beta_q`` is the transmission rate while a quarantine is in force and
    must be strictly smaller than the normal rate ``beta_n``. The reciprocal
    reproduction numbers ``rho_n``/``rho_q`` and the reproduction numbers
    themselves are derived on access.
    """

    beta_n: float
    beta_q: float
    gamma: float

    def __post_init__(self) -> None:
        for name in ("beta_n", "beta_q", "gamma"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
        if self.gamma <= 0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if not 0 < self.beta_q < self.beta_n:
            raise DomainError(
                f"need 0 < beta_q < beta_n, got beta_q={self.beta_q}, beta_n={self.beta_n}"
            )

    @classmethod
    def from_reproduction_numbers(cls, gamma: float, r0_n: float, r0_q: float) -> "EpidemicParams":
        return cls(beta_n=r0_n * gamma, beta_q=r0_q * gamma, gamma=gamma)

    @property
    def rho_n(self) -> float:
        return self.gamma / self.beta_n

    @property
    def rho_q(self) -> float:
        return self.gamma / self.beta_q

    @property
    def r0_n(self) -> float:
        return self.beta_n / self.gamma

    @property
    def r0_q(self) -> float:
        return self.beta_q / self.gamma

    def to_dict(self) -> dict:
        return {
            "beta_n": self.beta_n,
            "beta_q": self.beta_q,
            "gamma": self.gamma,
            "rho_n": self.rho_n,
            "rho_q": self.rho_q,
            "r0_n": self.r0_n,
            "r0_q": self.r0_q,
        }


@dataclass(frozen=True)
class EpidemicState:
    """A point ``(s, i, r)`` on the unit simplex at time ``t``."""

    t: float
    s: float
    i: float
    r: float

    def __post_init__(self) -> None:
        if min(self.s, self.i, self.r) < 0:
            raise DomainError(f"negative compartment in {self}")
        if abs(self.s + self.i + self.r - 1.0) > SIMPLEX_TOL:
            raise DomainError(f"state off the simplex: s+i+r-1 = {self.s + self.i + self.r - 1.0:.3e}")

    @classmethod
    def initial(cls, i0: float, r0: float = 0.0, t: float = 0.0) -> "EpidemicState":
        """Outbreak seed with infected fraction ``i0`` and removed fraction ``r0``."""
        if not 0 < i0 < 1:
            raise DomainError(f"i0 must lie in (0, 1), got {i0}")
        return cls(t=t, s=1.0 - i0 - r0, i=i0, r=r0)


@dataclass(frozen=True)
class Schedule:
    """Union of quarantine intervals, stored as ``(start, length)`` pairs.

    Intervals are sorted and may touch but not overlap. Touching intervals
    are kept separate so that every endpoint remains a step boundary for the
    integrator.
    """

    intervals: tuple[tuple[float, float], ...]
    total_length: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "intervals", tuple((float(a), float(l)) for a, l in self.intervals))
        prev_end = -math.inf
        for start, length in self.intervals:
            if start < 0:
                raise ScheduleError(f"interval starts before t=0: {start}")
            if not length > 0:
                raise ScheduleError(f"interval length must be positive, got {length}")
            if start < prev_end:
                raise ScheduleError(f"intervals unsorted or overlapping near t={start}")
            prev_end = start + length
        total = math.fsum(l for _, l in self.intervals)
        if abs(total - self.total_length) > SCHEDULE_TOL * max(1.0, abs(self.total_length)):
            raise ScheduleError(
                f"interval lengths sum to {total!r}, expected total_length={self.total_length!r}"
            )

    @classmethod
    def empty(cls) -> "Schedule":
        return cls((), 0.0)

    @classmethod
    def contiguous(cls, start: float, length: float) -> "Schedule":
        return cls(((start, length),), length)

    @classmethod
    def from_intervals(cls, intervals: Iterable[Sequence[float]]) -> "Schedule":
        """Build from ``(start, length)`` pairs, dropping zero-length pieces."""
        kept = tuple((float(a), float(l)) for a, l in intervals if l != 0)
        return cls(kept, math.fsum(l for _, l in kept))

    @property
    def end(self) -> float:
        """End of the last interval, or 0 for the empty schedule."""
        if not self.intervals:
            return 0.0
        start, length = self.intervals[-1]
        return start + length

    @property
    def boundaries(self) -> list[float]:
        out: list[float] = []
        for start, length in self.intervals:
            out.extend((start, start + length))
        return out

    def __len__(self) -> int:
        return len(self.intervals)


@dataclass(frozen=True)
class FinalSize:
    """Limiting susceptible fraction after all quarantines have ended.

    ``degenerate`` marks a disease-free input above the herd threshold, an
    unstable equilibrium that admissible trajectories never reach.
    ``log_s_inf`` stays accurate when ``s_inf`` itself underflows to zero.
    """

    s_inf: float
    residual: float
    iterations: int = 0
    degenerate: bool = False
    log_s_inf: float = math.nan

    def __post_init__(self) -> None:
        if math.isnan(self.log_s_inf) and self.s_inf > 0:
            object.__setattr__(self, "log_s_inf", math.log(self.s_inf))

    @property
    def r_inf(self) -> float:
        return 1.0 - self.s_inf


def sir_rhs(state: EpidemicState, beta: float, gamma: float) -> tuple[float, float, float]:
    infection = beta * state.s * state.i
    recovery = gamma * state.i
    return -infection, infection - recovery, recovery


def g(x: float, rho: float) -> float:
    """``-x + rho log x``; maximal at ``x = rho``."""
    if x <= 0:
        raise DomainError(f"g is defined for x > 0, got {x}")
    return -x + rho * math.log(x)


def conserved_quantity(state: EpidemicState, rho: float) -> float:
    """``i + s - rho log s``, constant in time while ``beta = gamma / rho``."""
    if state.s <= 0:
        raise DomainError(f"conserved quantity needs s > 0, got {state.s}")
    return state.i - g(state.s, rho)


def solve_final_s(s: float, i: float, rho: float) -> FinalSize:
    """Stable root of ``x - rho log x = s + i - rho log s`` with ``x <= min(s, rho)``.

    Works in ``y = log x`` so that the root stays resolvable when ``rho`` is
    small and the final susceptible fraction underflows ordinary precision.
    On ``y <= log(min(s, rho))`` the map is strictly decreasing, so a
    bisection bracket always exists; Newton steps are taken whenever they
    stay inside it.
    """
    if not s > 0:
        raise DomainError(f"final size needs s > 0, got {s}")
    if i < 0:
        raise DomainError(f"final size needs i >= 0, got {i}")
    if i == 0:
        return FinalSize(s_inf=s, residual=0.0, iterations=0, degenerate=s > rho)

    c = s + i - rho * math.log(s)
    hi = math.log(min(s, rho))
    lo = -c / rho - 1.0  # F(lo) = e^lo + rho > 0

    def residual(y: float) -> float:
        return math.exp(y) - rho * y - c

    f_tol = 4 * 2.2e-16 * max(1.0, c)
    y = hi
    for it in range(1, FINAL_SIZE_MAX_ITER + 1):
        f = residual(y)
        if f > 0:
            lo = y
        else:
            hi = y
        if abs(f) <= f_tol or hi - lo <= 4 * 2.2e-16 * max(1.0, abs(y)):
            return FinalSize(s_inf=math.exp(y), residual=residual(y), iterations=it, log_s_inf=y)
        slope = math.exp(y) - rho
        y_next = y - f / slope if slope != 0 else math.nan
        if not lo < y_next < hi:
            y_next = 0.5 * (lo + hi)
        y = y_next
    raise ConvergenceError(
        f"final size root not found in {FINAL_SIZE_MAX_ITER} iterations (s={s}, i={i}, rho={rho})"
    )


def final_size(state: EpidemicState, params: EpidemicParams) -> FinalSize:
    """Final size reached from ``state`` if normal transmission holds forever after."""
    return solve_final_s(state.s, state.i, params.rho_n)


def level_curve(c: float, rho: float, n_points: int = 200) -> tuple[list[float], list[float], str]:
    """Points of ``{s + i - rho log s = c, s + i <= 1, i >= 0}`` with ``s`` descending.

    Returns ``(s, i, note)``; the lists are empty and the note explains why
    when the level set is empty.
    """
    c_min = rho - rho * math.log(rho)
    if c < c_min:
        return [], [], f"c={c!r} is below the minimum {c_min!r} of s - rho log s"
    if c - c_min <= 1e-14 * max(1.0, c):
        return ([rho], [0.0], "") if rho <= 1 else ([], [], f"c={c!r} touches the minimum outside s <= 1")
    log_top = min(0.0, (1.0 - c) / rho)
    s_top = math.exp(log_top)
    if s_top == 0.0:
        return [], [], f"c={c!r} puts the curve below double precision"
    s_lo = solve_final_s(rho, c - c_min, rho).s_inf
    if s_lo > s_top:
        return [], [], f"c={c!r} has no point with s + i <= 1"

    def height(s: float) -> float:
        return c - s + rho * math.log(s)

    s_hi = s_top
    if rho < s_top and height(s_top) < 0:
        a, b = rho, s_top
        for _ in range(200):
            mid = 0.5 * (a + b)
            if height(mid) >= 0:
                a = mid
            else:
                b = mid
            if b - a <= 1e-16:
                break
        s_hi = a
    if n_points < 2 or s_hi == s_lo:
        s_values = [s_hi]
    else:
        s_values = [s_hi + (s_lo - s_hi) * k / (n_points - 1) for k in range(n_points)]
    return s_values, [max(0.0, height(s)) for s in s_values], ""
