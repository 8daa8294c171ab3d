"""Optimal placement of a single quarantine window and checks of the
structural properties behind it.

The central object is the window integral

    Q(s0, i0, T) = integral over [0, T] of (gamma - beta_n S_q) / I_q dt,

taken along the *quarantined* dynamics started from ``(s0, i0)``. A window
starting at ``t0`` can be improved by sliding it left when Q > 0 at the
unquarantined state reached at ``t0``, and by sliding it right when Q < 0,
so an interior optimum sits at a zero of

    phi(t0) = Q(S(t0), I(t0), T).
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .core import EpidemicParams, EpidemicState, Schedule, solve_final_s
from .errors import BracketError, ConvergenceError, DomainError, PreconditionError
from .integrator import (
    DEFAULT_CONFIG,
    IntegratorConfig,
    batch_final_sizes,
    end_state,
    integrate_to_extinction,
    quarantine_final_size,
)

log = logging.getLogger(__name__)

PHI_TOL = 1e-8
HERD_MARGIN = 1e-6


# --------------------------------------------------------------------------
# Window integral


@dataclass(frozen=True)
class QResult:
    value: float
    quadrature_error: float
    inverse_i_integral: float
    s_end: float
    i_end: float


def _quadrature_steps(T: float, h: float) -> int:
    return 4 * max(1, math.ceil(T / (4 * h) - _kernels.STEP_SLACK))


def q_integral(
    s0: float, i0: float, T: float, params: EpidemicParams, config: IntegratorConfig = DEFAULT_CONFIG
) -> QResult:
    """Window integral by composite Simpson on a uniform RK4 grid.

    The error estimate is the Richardson difference against the same rule
    on every other node.
    """
    if not 0 < i0 < 1:
        raise DomainError(f"Q needs i0 in (0, 1), got {i0}")
    if not 0 < s0 < 1 or s0 + i0 > 1 + 1e-12:
        raise DomainError(f"Q needs s0 in (0, 1) with s0 + i0 <= 1, got s0={s0}, i0={i0}")
    if not T > 0:
        raise DomainError(f"Q needs T > 0, got {T}")
    n = _quadrature_steps(T, config.step)
    fine, coarse, inv_fine, _, s_end, i_end = _kernels.quarantine_quadrature(
        s0, i0, params.beta_q, params.beta_n, params.gamma, T, n
    )
    return QResult(fine, abs(fine - coarse) / 15.0, inv_fine, s_end, i_end)


def herd_crossing_time(
    params: EpidemicParams, initial: EpidemicState, config: IntegratorConfig = DEFAULT_CONFIG
) -> float:
    """First grid time at which the unquarantined ``s`` drops below ``rho_n (1 - 1e-6)``.

    Returns ``horizon_cap`` if that never happens before it.
    """
    h = config.step
    max_steps = int(config.horizon_cap / h)
    k, *_ = _kernels.steps_until_s_below(
        initial.s, initial.i, initial.r, params.beta_n, params.gamma, h, params.rho_n * (1 - HERD_MARGIN), max_steps
    )
    return config.horizon_cap if k < 0 else initial.t + k * h


def window_phi(
    params: EpidemicParams, initial: EpidemicState, t0: float, T: float, config: IntegratorConfig = DEFAULT_CONFIG
) -> QResult:
    """Q at the unquarantined state reached at ``t0``."""
    s, i, _ = _kernels.advance(initial.s, initial.i, initial.r, params.beta_n, params.gamma, t0 - initial.t, config.step)
    return q_integral(s, i, T, params, config)


# --------------------------------------------------------------------------
# A-priori bounds


@dataclass(frozen=True)
class Bounds:
    epsilon0: float
    t_star: float


def epsilon0_estimate(params: EpidemicParams, T: float) -> float:
    """Seed size below which the optimal window is expected to be interior."""
    if params.beta_n <= params.gamma:
        raise DomainError("epsilon0 is only meaningful when beta_n > gamma")
    growth = max(1.0, math.exp((params.beta_q - params.gamma) * T))
    return (1.0 - params.rho_n) / (params.beta_q * T * growth)


def interior_seed_condition(params: EpidemicParams, i0: float, T: float) -> bool:
    """Sufficient condition for Q < 0 at the origin, hence an interior optimum.

    ``epsilon0_estimate`` linearizes this inequality in ``i0``, so the two
    disagree once the seed is no longer small.
    """
    if params.beta_n <= params.gamma or not 0 < i0 < 1:
        return False
    growth = max(1.0, math.exp((params.beta_q - params.gamma) * T))
    return (1.0 - i0) * math.exp(-params.beta_q * i0 * T * growth) > params.rho_n


def t_star(params: EpidemicParams, i0: float, T: float) -> float:
    """Time after which ``s < rho_n`` under every schedule of total length ``T``.

    While ``s >= rho_n`` the infected fraction stays above ``i0 exp(-gamma T)``
    and ``s`` decays at least at rate ``beta_q`` times that, which gives
    ``exp(gamma T) log(beta_n (1 - i0) / gamma) / (beta_q i0)``. Very
    conservative.
    """
    ratio = params.beta_n * (1.0 - i0) / params.gamma
    if ratio <= 1.0:
        return 0.0
    return math.exp(params.gamma * T) * math.log(ratio) / (params.beta_q * i0)


def bounds(params: EpidemicParams, i0: float, T: float) -> Bounds:
    eps = epsilon0_estimate(params, T) if params.beta_n > params.gamma else math.inf
    return Bounds(eps, t_star(params, i0, T))


# --------------------------------------------------------------------------
# Optimal single window


class WindowCase(str, enum.Enum):
    AT_ORIGIN = "AtOrigin"
    INTERIOR_ROOT = "InteriorRoot"


@dataclass(frozen=True)
class OptimalWindow:
    start: float
    case: WindowCase
    r_inf: float
    q_residual: float
    peak_time: float
    T: float
    i0: float
    roots: tuple[float, ...] = ()
    candidates: tuple[tuple[float, float], ...] = ()
    phi_at_origin: float = math.nan
    no_quarantine_r_inf: float = math.nan
    scan_min_r_inf: float = math.nan
    scan_consistent: bool = True

    @property
    def end(self) -> float:
        return self.start + self.T

    @property
    def schedule(self) -> Schedule:
        return Schedule.contiguous(self.start, self.T)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["case"] = self.case.value
        d["roots"] = list(self.roots)
        d["candidates"] = [list(c) for c in self.candidates]
        return d


def _bisect(
    f: Callable[[float], float], a: float, b: float, fa: float, ftol: float, max_iter: int = 200
) -> tuple[float, float]:
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        fm = f(m)
        if abs(fm) <= ftol or b - a <= 1e-13 * max(1.0, abs(m)):
            return m, fm
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    raise ConvergenceError(f"bisection did not reach |f| <= {ftol} in {max_iter} iterations")


def _phi_grid(
    params: EpidemicParams, initial: EpidemicState, times: np.ndarray, T: float, config: IntegratorConfig
) -> np.ndarray:
    states = _kernels.states_at(
        initial.s, initial.i, initial.r, params.beta_n, params.gamma, config.step, times - initial.t
    )
    n = _quadrature_steps(T, config.step)
    phi = np.empty(times.shape[0])
    for k in range(times.shape[0]):
        phi[k] = _kernels.quarantine_quadrature(
            states[k, 0], states[k, 1], params.beta_q, params.beta_n, params.gamma, T, n
        )[0]
    return phi


def search_end(params: EpidemicParams, i0: float, T: float, config: IntegratorConfig = DEFAULT_CONFIG) -> float:
    """Last start time worth considering for a single window.

    Past the unquarantined herd crossing every window has Q > 0 and slides
    left profitably, so the search stops there (capped by ``t_star + T``).
    """
    initial = EpidemicState.initial(i0)
    return min(t_star(params, i0, T) + T, herd_crossing_time(params, initial, config))


def optimal_window(
    params: EpidemicParams,
    i0: float,
    T: float,
    config: IntegratorConfig = DEFAULT_CONFIG,
    *,
    grid_divisions: int = 100,
    scan_divisions: int = 30,
    phi_tol: float = PHI_TOL,
) -> OptimalWindow:
    """Best start for one quarantine window of length ``T`` from seed ``i0``.

    Sign changes of ``phi`` are located on a grid of step ``T/grid_divisions``
    and refined by bisection to ``|phi| <= phi_tol``. Every root and the
    origin are then ranked by final size (ties go to the earlier start). A
    coarse direct scan of final size over start times with step
    ``T/scan_divisions`` cross-checks the result.
    """
    if not 0 < i0 < 1:
        raise DomainError(f"i0 must lie in (0, 1), got {i0}")
    if not T > 0:
        raise DomainError(f"T must be positive, got {T}")
    initial = EpidemicState.initial(i0)
    t_end = search_end(params, i0, T, config)

    dt = T / grid_divisions
    n_grid = int(math.ceil(t_end / dt)) + 2
    times = dt * np.arange(n_grid)
    phi = _phi_grid(params, initial, times, T, config)

    def phi_at(t0: float) -> float:
        return window_phi(params, initial, t0, T, config).value

    roots: list[float] = []
    residuals: dict[float, float] = {0.0: float(phi[0])}
    for k in range(n_grid - 1):
        a, b = float(times[k]), float(times[k + 1])
        if phi[k] == 0 and k > 0:
            roots.append(a)
            residuals[a] = 0.0
        elif phi[k] * phi[k + 1] < 0:
            root, res = _bisect(phi_at, a, b, float(phi[k]), phi_tol)
            roots.append(root)
            residuals[root] = res
    if phi[0] < 0 and not roots:
        raise BracketError("phi(0) < 0 but no sign change found before the herd crossing")

    starts = [0.0] + roots
    finals = batch_final_sizes(params, [Schedule.contiguous(t, T) for t in starts], initial, config)
    candidates = tuple((t, fs.r_inf) for t, fs in zip(starts, finals))
    best_start, best_r = min(candidates, key=lambda c: (c[1], c[0]))
    case = WindowCase.AT_ORIGIN if best_start == 0.0 else WindowCase.INTERIOR_ROOT

    scan_step = T / scan_divisions
    scan_times = scan_step * np.arange(int(math.ceil((t_end + T) / scan_step)) + 1)
    scan = batch_final_sizes(params, [Schedule.contiguous(float(t), T) for t in scan_times], initial, config)
    scan_min = min(fs.r_inf for fs in scan)
    consistent = best_r <= scan_min + 1e-4
    if not consistent:
        log.warning("grid scan found r_inf=%.6f below the root-based optimum %.6f", scan_min, best_r)

    traj, fs_best = integrate_to_extinction(params, Schedule.contiguous(best_start, T), initial, config)
    peak_time = float(traj.t[int(np.argmax(traj.i))])
    no_q = solve_final_s(initial.s, initial.i, params.rho_n).r_inf

    return OptimalWindow(
        start=best_start,
        case=case,
        r_inf=fs_best.r_inf,
        q_residual=residuals[best_start],
        peak_time=peak_time,
        T=T,
        i0=i0,
        roots=tuple(roots),
        candidates=candidates,
        phi_at_origin=float(phi[0]),
        no_quarantine_r_inf=no_q,
        scan_min_r_inf=scan_min,
        scan_consistent=consistent,
    )


# --------------------------------------------------------------------------
# Shift improvement


@dataclass(frozen=True)
class ShiftReport:
    t0: float
    T: float
    delta: float
    q: float
    q_error: float
    status: str  # "pass", "fail" or "inconclusive"
    direction: str | None = None
    r_tau: float = math.nan
    r_sigma: float = math.nan
    s_inf_tau: float = math.nan
    s_inf_sigma: float = math.nan
    decreased: bool | None = None
    rate_measured: float = math.nan
    rate_measured_half: float = math.nan
    rate_predicted: float = math.nan
    rate_extrapolated: float = math.nan
    rate_rel_error: float = math.nan
    rate_extrapolated_error: float = math.nan
    rate_ok: bool | None = None

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return asdict(self)


def _level(s: float, i: float, rho: float) -> float:
    return s + i - rho * math.log(s)


def _window_end(params: EpidemicParams, initial: EpidemicState, t0: float, T: float, h: float):
    s, i, r = _kernels.advance(initial.s, initial.i, initial.r, params.beta_n, params.gamma, t0 - initial.t, h)
    s1, i1, _ = _kernels.advance(s, i, r, params.beta_q, params.gamma, T, h)
    return (s, i), (s1, i1)


def verify_shift_lemma(
    params: EpidemicParams,
    i0: float,
    t0: float,
    T: float,
    delta: float,
    config: IntegratorConfig = DEFAULT_CONFIG,
    *,
    q_floor: float = 1e-6,
    rate_tol: float = 0.10,
) -> ShiftReport:
    """Slide ``[t0, t0+T]`` by ``delta`` in the direction the sign of Q favours.

    Checks that the final size strictly drops, and that the change of the
    post-window level ``c = S + I - rho_n log S`` matches its first-order
    prediction ``-/+ beta_q (rho_q - rho_n) I(t0) I(t0+T) Q`` at both
    ``delta`` and ``delta/2``.
    """
    if not delta > 0:
        raise PreconditionError(f"delta must be positive, got {delta}")
    initial = EpidemicState.initial(i0)
    h = config.step
    qr = window_phi(params, initial, t0, T, config)
    q = qr.value
    if abs(q) <= max(10 * qr.quadrature_error, q_floor):
        return ShiftReport(t0, T, delta, q, qr.quadrature_error, "inconclusive")
    if q > 0 and delta >= t0:
        raise PreconditionError(f"left shift by {delta} impossible from t0={t0}")
    sign = -1.0 if q > 0 else 1.0
    direction = "left" if q > 0 else "right"
    rho_n = params.rho_n

    (s0, i0_tau), (s1, i1) = _window_end(params, initial, t0, T, h)
    c_tau = _level(s1, i1, rho_n)
    predicted = sign * params.beta_q * (params.rho_q - rho_n) * i0_tau * i1 * q

    rates = []
    for d in (delta, 0.5 * delta):
        _, (s1s, i1s) = _window_end(params, initial, t0 + sign * d, T, h)
        rates.append((_level(s1s, i1s, rho_n) - c_tau) / d)
        if d == delta:
            fs_sigma = solve_final_s(s1s, i1s, rho_n)
    fs_tau = solve_final_s(s1, i1, rho_n)

    # The finite-delta rate carries an O(delta) curvature term that dominates
    # near a root of Q; Richardson extrapolation over (delta, delta/2) removes it.
    extrapolated = 2.0 * rates[1] - rates[0]
    errors = [abs(rate / predicted - 1.0) for rate in rates]
    extrapolated_error = abs(extrapolated / predicted - 1.0)
    rate_ok = max(errors) <= rate_tol or (extrapolated_error <= rate_tol and errors[1] < errors[0])
    decreased = fs_sigma.s_inf > fs_tau.s_inf
    return ShiftReport(
        t0=t0,
        T=T,
        delta=delta,
        q=q,
        q_error=qr.quadrature_error,
        status="pass" if decreased and rate_ok else "fail",
        direction=direction,
        r_tau=fs_tau.r_inf,
        r_sigma=fs_sigma.r_inf,
        s_inf_tau=fs_tau.s_inf,
        s_inf_sigma=fs_sigma.s_inf,
        decreased=decreased,
        rate_measured=rates[0],
        rate_measured_half=rates[1],
        rate_predicted=predicted,
        rate_extrapolated=extrapolated,
        rate_rel_error=max(errors),
        rate_extrapolated_error=extrapolated_error,
        rate_ok=rate_ok,
    )


# --------------------------------------------------------------------------
# Order preservation at a stationary window


def reverse_criterion(params: EpidemicParams, qr: QResult) -> float:
    """``beta_q (rho_q - rho_n) I(T) * integral of 1/I`` along the quarantined window."""
    return params.beta_q * (params.rho_q - params.rho_n) * qr.i_end * qr.inverse_i_integral


@dataclass(frozen=True)
class OrderReport:
    s0: float
    i0: float
    T: float
    delta: float
    q: float
    criterion: float
    identity_value: float
    identity_gap: float
    r_inf: float
    r_inf_delta: float
    s_inf: float
    s_inf_delta: float
    decreased: bool
    level_rate_measured: float
    level_rate_predicted: float

    @property
    def passed(self) -> bool:
        return self.decreased and self.criterion < 1

    def to_dict(self) -> dict:
        return asdict(self)


def _quarantined_final(params: EpidemicParams, s0: float, i0: float, T: float, h: float):
    s1, i1, _ = _kernels.advance(s0, i0, 1.0 - s0 - i0, params.beta_q, params.gamma, T, h)
    return s1, i1, solve_final_s(s1, i1, params.rho_n)


def verify_order_preserving(
    params: EpidemicParams,
    s0: float,
    i0: float,
    T: float,
    delta: float,
    config: IntegratorConfig = DEFAULT_CONFIG,
    *,
    q_tol: float = 1e-6,
) -> OrderReport:
    """Lower the seed of a stationary window ``[0, T]`` by ``delta``.

    Requires ``Q(s0, i0, T) = 0`` to within ``q_tol``. At such a window the
    final size must drop, and the reverse criterion equals ``1 - I(T)/i0``.
    """
    if not 0 < delta < i0:
        raise PreconditionError(f"need 0 < delta < i0, got delta={delta}, i0={i0}")
    qr = q_integral(s0, i0, T, params, config)
    if abs(qr.value) > q_tol:
        raise PreconditionError(f"window is not stationary: Q={qr.value:.3e} exceeds {q_tol:.1e}")
    return _order_report(params, s0, i0, T, delta, config, qr)


def _order_report(params, s0, i0, T, delta, config, qr) -> OrderReport:
    h = config.step
    rho_n = params.rho_n
    s1, i1, fs = _quarantined_final(params, s0, i0, T, h)
    s1d, i1d, fsd = _quarantined_final(params, s0, i0 - delta, T, h)
    criterion = reverse_criterion(params, qr)
    identity = 1.0 - qr.i_end / i0
    return OrderReport(
        s0=s0,
        i0=i0,
        T=T,
        delta=delta,
        q=qr.value,
        criterion=criterion,
        identity_value=identity,
        identity_gap=abs(criterion - identity),
        r_inf=fs.r_inf,
        r_inf_delta=fsd.r_inf,
        s_inf=fs.s_inf,
        s_inf_delta=fsd.s_inf,
        decreased=fsd.s_inf > fs.s_inf,
        level_rate_measured=(_level(s1d, i1d, rho_n) - _level(s1, i1, rho_n)) / delta,
        level_rate_predicted=criterion - 1.0,
    )


# --------------------------------------------------------------------------
# Counterexample without stationarity


@dataclass(frozen=True)
class CounterexampleReport:
    found: bool
    params: EpidemicParams | None = None
    s0: float = math.nan
    i0: float = math.nan
    T: float = math.nan
    delta: float = math.nan
    s_at_T: float = math.nan
    criterion: float = math.nan
    duration_bound: float = math.nan
    r_inf: float = math.nan
    r_inf_delta: float = math.nan
    s_inf: float = math.nan
    s_inf_delta: float = math.nan
    increased: bool = False
    scanned: tuple[tuple[float, float, float], ...] = field(default=(), repr=False)
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.found and self.increased and self.criterion > 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = self.params.to_dict() if self.params is not None else None
        d["scanned"] = [list(row) for row in self.scanned]
        return d


DEFAULT_COUNTEREXAMPLE_HINT = EpidemicParams.from_reproduction_numbers(1 / 14, 10.0, 2.0)


def time_to_reach(
    params: EpidemicParams, s0: float, i0: float, target: float, config: IntegratorConfig = DEFAULT_CONFIG
) -> float:
    """Length ``T`` of a quarantine from ``(s0, i0)`` after which ``S(T) = target``."""
    h = config.step
    r0 = 1.0 - s0 - i0
    k, s, i, r = _kernels.steps_until_s_below(
        s0, i0, r0, params.beta_q, params.gamma, h, target, int(config.horizon_cap / h)
    )
    if k <= 0:
        raise PreconditionError(f"quarantined s never crosses {target} from s0={s0}")
    lo, hi = 0.0, h
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _kernels.rk4_step(s, i, r, params.beta_q, params.gamma, mid)[0] >= target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * h:
            break
    base = (k - 1) * h
    # the final partial step must stay strictly positive for the step rule
    return base + max(hi, 2 * _kernels.STEP_SLACK * h)


def build_counterexample(
    params_hint: EpidemicParams | None = None,
    config: IntegratorConfig = DEFAULT_CONFIG,
    *,
    delta_factor: float = 1e-3,
    i0_grid: Sequence[float] | None = None,
    margin: float = 0.1,
) -> CounterexampleReport:
    """Find a window ``[0, T]`` where lowering the seed *raises* the final size.

    ``T`` is chosen so that the quarantined ``S(T) = rho_q``; on such a window
    ``I`` grows throughout and the reverse criterion exceeds 1 once ``T`` is
    long enough. The seed is scanned upward and the largest seed whose
    criterion exceeds ``1 + margin`` is confirmed by direct simulation.
    """
    params = params_hint or DEFAULT_COUNTEREXAMPLE_HINT
    rho_q, rho_n = params.rho_q, params.rho_n
    if not rho_q < 1:
        return CounterexampleReport(False, params, message=f"rho_q={rho_q:.3g} must be < 1")
    if i0_grid is None:
        i0_grid = np.geomspace(1e-6, 0.5 * (1.0 - rho_q), 40)
    duration_bound = 1.0 / (params.beta_q * (rho_q - rho_n))

    scanned = []
    for i0 in sorted(i0_grid):
        s0 = 1.0 - i0
        if s0 <= rho_q:
            break
        T = time_to_reach(params, s0, i0, rho_q, config)
        qr = q_integral(s0, i0, T, params, config)
        scanned.append((float(i0), T, reverse_criterion(params, qr)))

    viable = [row for row in scanned if row[2] > 1 + margin] or [row for row in scanned if row[2] > 1]
    for i0, T, criterion in reversed(viable):
        s0 = 1.0 - i0
        delta = i0 * delta_factor
        s_T, _, fs = _quarantined_final(params, s0, i0, T, config.step)
        _, _, fsd = _quarantined_final(params, s0, i0 - delta, T, config.step)
        increased = fsd.s_inf < fs.s_inf
        if increased:
            return CounterexampleReport(
                found=True,
                params=params,
                s0=s0,
                i0=i0,
                T=T,
                delta=delta,
                s_at_T=s_T,
                criterion=criterion,
                duration_bound=duration_bound,
                r_inf=fs.r_inf,
                r_inf_delta=fsd.r_inf,
                s_inf=fs.s_inf,
                s_inf_delta=fsd.s_inf,
                increased=True,
                scanned=tuple(scanned),
            )
    return CounterexampleReport(
        False, params, duration_bound=duration_bound, scanned=tuple(scanned),
        message="no seed produced a confirmed reversal; try smaller rho_n or larger rho_q",
    )


# --------------------------------------------------------------------------
# Late windows only get worse


@dataclass(frozen=True)
class TailReport:
    t_values: tuple[float, ...]
    r_inf: tuple[float, ...]
    s_inf: tuple[float, ...]
    nondecreasing: bool
    reordered: bool
    threshold_time: float

    @property
    def passed(self) -> bool:
        return self.nondecreasing

    def to_dict(self) -> dict:
        return asdict(self)


def verify_monotone_tail(
    params: EpidemicParams,
    base_schedule: Schedule,
    ell: float,
    t_values: Sequence[float],
    config: IntegratorConfig = DEFAULT_CONFIG,
    *,
    i0: float = 1e-4,
    require_t_star: bool = True,
) -> TailReport:
    """Append ``[t, t+ell]`` to ``base_schedule`` and check final size rises with ``t``.

    With ``require_t_star`` every ``t`` must exceed the a-priori bound
    ``t_star`` for the total length. Otherwise it is enough that the base
    schedule has already pushed ``s`` below ``rho_n`` at ``t``, which is the
    property the bound guarantees.
    """
    if not ell > 0:
        raise PreconditionError(f"ell must be positive, got {ell}")
    initial = EpidemicState.initial(i0)
    total = base_schedule.total_length + ell
    bound = t_star(params, i0, total)
    ordered = sorted(float(t) for t in t_values)
    for t in ordered:
        if t < base_schedule.end:
            raise PreconditionError(f"t={t} precedes the end of the base schedule {base_schedule.end}")
        if require_t_star:
            if t < bound:
                raise PreconditionError(f"t={t} precedes t_star={bound:.6g}")
        elif end_state(params, base_schedule, initial, t, config).s >= params.rho_n:
            raise PreconditionError(f"s is still above rho_n at t={t}")
    schedules = [Schedule(base_schedule.intervals + ((t, ell),), total) for t in ordered]
    finals = batch_final_sizes(params, schedules, initial, config)
    s_inf = tuple(fs.s_inf for fs in finals)
    nondecreasing = all(b <= a for a, b in zip(s_inf, s_inf[1:]))
    return TailReport(
        t_values=tuple(ordered),
        r_inf=tuple(fs.r_inf for fs in finals),
        s_inf=s_inf,
        nondecreasing=nondecreasing,
        reordered=ordered != [float(t) for t in t_values],
        threshold_time=bound,
    )
