"""Optimal timing of a fixed-length quarantine in the SIR model."""

__version__ = "0.1.0"

from .analysis import (
    Bounds,
    OptimalWindow,
    QResult,
    WindowCase,
    bounds,
    build_counterexample,
    epsilon0_estimate,
    interior_seed_condition,
    optimal_window,
    q_integral,
    t_star,
    verify_monotone_tail,
    verify_order_preserving,
    verify_shift_lemma,
)
from .core import (
    EpidemicParams,
    EpidemicState,
    FinalSize,
    Schedule,
    conserved_quantity,
    final_size,
    g,
    level_curve,
    sir_rhs,
)
from .errors import (
    BracketError,
    BudgetExceeded,
    ConvergenceError,
    DomainError,
    PreconditionError,
    QSchedError,
    ScheduleError,
)
from .integrator import (
    DEFAULT_CONFIG,
    IntegratorConfig,
    Trajectory,
    integrate,
    integrate_to_extinction,
    quarantine_final_size,
    r_inf,
    state_at,
)
from .optimizer import BruteForceResult, ScanResult, brute_force_multi_interval, scan_contiguous, sweep_heatmap
