"""The full verification battery run by ``qsched verify``.

Each check returns a dict with a ``status`` of ``"pass"``, ``"fail"``,
``"inconclusive"`` or ``"skipped"`` plus the measured values. Only
``"fail"`` counts against the run.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .analysis import (
    DEFAULT_COUNTEREXAMPLE_HINT,
    build_counterexample,
    herd_crossing_time,
    optimal_window,
    t_star,
    verify_monotone_tail,
    verify_order_preserving,
    verify_shift_lemma,
)
from .core import EpidemicParams, EpidemicState, Schedule, final_size
from .errors import BudgetExceeded, PreconditionError
from .integrator import DEFAULT_CONFIG, IntegratorConfig, direct_final_s, unquarantined_state
from .optimizer import brute_force_multi_interval

ORDER_IDENTITY_TOL = 1e-4
DOMINANCE_TOL = 1e-3
ORACLE_TOL = 1e-6
COUNTEREXAMPLE_S_TOL = 1e-6
TAIL_T_STAR_LIMIT = 1e6


def random_admissible_inputs(rng: np.random.Generator, n: int) -> list[tuple[EpidemicParams, EpidemicState]]:
    """Random supercritical parameters with a post-quarantine state to hand off from.

    ``s`` is kept at least 10% above ``rho_n`` so that the tail decays at a
    rate the direct integration can follow to ``i < 1e-12``.
    """
    out = []
    while len(out) < n:
        gamma = rng.uniform(0.05, 0.5)
        r0n = rng.uniform(1.3, 5.0)
        params = EpidemicParams.from_reproduction_numbers(gamma, r0n, r0n * rng.uniform(0.1, 0.9))
        s = rng.uniform(1.1 * params.rho_n, 1.0)
        i = (1.0 - s) * rng.uniform(0.001, 1.0)
        if not 0 < i < 1 - s:
            continue
        out.append((params, EpidemicState(0.0, s, i, 1.0 - s - i)))
    return out


def check_final_size_oracle(config: IntegratorConfig, samples: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    long_config = IntegratorConfig(config.step, config.extinction_threshold, max(config.horizon_cap, 1e5))
    worst, unconverged = 0.0, 0
    for params, state in random_admissible_inputs(rng, samples):
        s_direct, converged = direct_final_s(params, state, long_config, threshold=1e-12)
        unconverged += not converged
        worst = max(worst, abs(s_direct - final_size(state, params).s_inf))
    ok = worst <= ORACLE_TOL and unconverged == 0
    return {"status": "pass" if ok else "fail", "samples": samples, "max_abs_diff": worst, "unconverged": unconverged}


def _guard(fn: Callable[[], dict]) -> dict:
    try:
        return fn()
    except (PreconditionError, BudgetExceeded) as exc:
        return {"status": "skipped", "reason": str(exc)}


def run_battery(
    params: EpidemicParams,
    i0: float,
    T: float,
    config: IntegratorConfig = DEFAULT_CONFIG,
    *,
    delta: float = 0.1,
    bf_grid: float = 2.5,
    oracle_samples: int = 20,
    tail_ell: float = 10.0,
    seed: int = 0,
) -> dict[str, dict]:
    initial = EpidemicState.initial(i0)
    window = optimal_window(params, i0, T, config)
    checks: dict[str, dict] = {
        "optimal_window": {
            "status": "pass" if window.scan_consistent else "fail",
            **window.to_dict(),
        }
    }

    def shift(t0: float) -> dict:
        rep = verify_shift_lemma(params, i0, t0, T, delta, config)
        return rep.to_dict()

    checks["shift_after_optimum"] = _guard(lambda: shift(window.start + 20.0))
    checks["shift_at_origin"] = _guard(lambda: shift(0.0))

    def order() -> dict:
        if window.case.value != "InteriorRoot":
            return {"status": "skipped", "reason": "optimal window sits at the origin, Q is not zero there"}
        st = unquarantined_state(params, initial, window.start, config)
        rep = verify_order_preserving(params, st.s, st.i, T, st.i / 100, config)
        ok = rep.decreased and rep.identity_gap <= ORDER_IDENTITY_TOL
        return {"status": "pass" if ok else "fail", **rep.to_dict()}

    checks["order_preserving"] = _guard(order)

    def counterexample() -> dict:
        rep = build_counterexample(DEFAULT_COUNTEREXAMPLE_HINT, config)
        ok = rep.passed and abs(rep.s_at_T - rep.params.rho_q) <= COUNTEREXAMPLE_S_TOL
        d = rep.to_dict()
        d.pop("scanned")
        return {"status": "pass" if ok else "fail", **d}

    checks["counterexample"] = _guard(counterexample)

    def tail_herd() -> dict:
        t_cross = herd_crossing_time(params, initial, config)
        t_values = [t_cross + k * tail_ell for k in range(4)]
        rep = verify_monotone_tail(params, Schedule.empty(), tail_ell, t_values, config, i0=i0, require_t_star=False)
        return {"status": "pass" if rep.passed else "fail", **rep.to_dict()}

    def tail_bound() -> dict:
        bound = t_star(params, i0, tail_ell)
        if bound > TAIL_T_STAR_LIMIT:
            return {"status": "skipped", "reason": f"t_star={bound:.3g} is too far out to integrate"}
        t_values = [bound, bound + tail_ell]
        rep = verify_monotone_tail(params, Schedule.empty(), tail_ell, t_values, config, i0=i0)
        return {"status": "pass" if rep.passed else "fail", **rep.to_dict()}

    checks["monotone_tail_herd"] = _guard(tail_herd)
    checks["monotone_tail_t_star"] = _guard(tail_bound)

    def dominance() -> dict:
        res = brute_force_multi_interval(params, i0, T, 2, bf_grid, config)
        return {"status": "pass" if res.margin >= -DOMINANCE_TOL else "fail", **res.to_dict()}

    checks["split_dominance_m2"] = _guard(dominance)
    checks["final_size_oracle"] = check_final_size_oracle(config, oracle_samples, seed)
    return checks


def battery_passed(checks: dict[str, dict]) -> bool:
    return all(c["status"] != "fail" for c in checks.values())


def summarize(checks: dict[str, dict]) -> list[str]:
    return [f"{name}: {c['status']}" + (f" ({c['reason']})" if "reason" in c else "") for name, c in checks.items()]


__all__ = [
    "run_battery",
    "battery_passed",
    "summarize",
    "random_admissible_inputs",
    "check_final_size_oracle",
]
