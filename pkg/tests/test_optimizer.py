import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsched import (
    BudgetExceeded,
    EpidemicParams,
    EpidemicState,
    PreconditionError,
    ScanResult,
    brute_force_multi_interval,
    optimal_window,
    quarantine_final_size,
    scan_contiguous,
    sweep_heatmap,
)
from qsched.optimizer import count_split_schedules

from . import reference_values as ref


# -- contiguous scans -------------------------------------------------------


def test_scan_single_point(base_params, base_initial):
    res = scan_contiguous(base_params, 1e-4, 30.0, [113.0])
    assert len(res) == 1 and res.argmin == (113.0,)
    assert math.isclose(res.min_r_inf, ref.R_INF_START_113, abs_tol=1e-8)


def test_scan_matches_reference_points(base_params):
    res = scan_contiguous(base_params, 1e-4, 30.0, [0.0, 113.0, 300.0])
    assert np.allclose(res.r_inf, [ref.R_INF_START_0, ref.R_INF_START_113, ref.R_INF_START_300], rtol=0, atol=1e-8)
    assert math.isclose(res.baseline, ref.NO_QUARANTINE_R_INF, abs_tol=1e-12)


def test_scan_argmin_near_optimal_start(base_params):
    res = scan_contiguous(base_params, 1e-4, 30.0, np.arange(0.0, 301.0))
    assert abs(res.argmin[0] - ref.OPTIMAL_START) <= 1.0
    assert all(0 < r <= res.baseline + 1e-6 for r in res.r_inf)
    assert res.min_r_inf >= ref.OPTIMAL_R_INF - 1e-9


def test_scan_rejects_unsorted_grid(base_params):
    with pytest.raises(PreconditionError):
        scan_contiguous(base_params, 1e-4, 30.0, [5.0, 1.0])
    with pytest.raises(PreconditionError):
        scan_contiguous(base_params, 1e-4, 30.0, [-1.0])


def test_scan_result_validates_columns():
    with pytest.raises(ValueError):
        ScanResult(((0.0,),), (0.5, 0.6), 0)
    with pytest.raises(ValueError):
        ScanResult(((0.0,),), (0.5,), 0, detail={"start": (1.0, 2.0)})


# -- split schedules --------------------------------------------------------


def _enumerate(m, units, max_start):
    n = 0
    for lengths in itertools.product(range(1, units + 1), repeat=m):
        if sum(lengths) != units:
            continue
        for starts in itertools.product(range(max_start + 1), repeat=m):
            if all(starts[k + 1] >= starts[k] + lengths[k] + 1 for k in range(m - 1)):
                n += 1
    return n


@pytest.mark.parametrize("m, units, max_start", [(2, 4, 6), (2, 5, 3), (3, 4, 8), (3, 6, 10), (2, 2, 0)])
def test_count_matches_enumeration(m, units, max_start):
    assert count_split_schedules(m, units, max_start) == _enumerate(m, units, max_start)


@pytest.fixture(scope="module")
def small_search(base_params):
    return brute_force_multi_interval(base_params, 1e-4, 10.0, 2, 2.5)


def test_split_never_beats_single_window(small_search):
    assert small_search.margin >= -1e-3
    assert small_search.best_r_inf >= small_search.contiguous_r_inf - 1e-3
    assert small_search.grid_error >= -1e-9


def test_split_result_is_self_consistent(base_params, small_search):
    sch = small_search.best_schedule
    assert len(sch) == 2 and sch.total_length == 10.0
    assert all(gap >= 2.5 - 1e-9 for gap in small_search.gaps)
    fs = quarantine_final_size(base_params, sch, EpidemicState.initial(1e-4))
    assert math.isclose(fs.r_inf, small_search.best_r_inf, abs_tol=1e-10)
    max_start = math.floor(small_search.t_max / 2.5 + 1e-9)
    assert small_search.evaluated == count_split_schedules(2, 4, max_start)


def test_split_to_dict_round_trip(small_search):
    d = small_search.to_dict()
    assert d["m"] == 2 and d["grid_step"] == 2.5
    assert d["best_intervals"] == [list(iv) for iv in small_search.best_schedule.intervals]


@pytest.mark.parametrize("m, grid", [(1, 2.5), (4, 2.5), (2, 7.0), (2, 5.0)])
def test_split_preconditions(base_params, m, grid):
    with pytest.raises(PreconditionError):
        brute_force_multi_interval(base_params, 1e-4, 10.0, m, grid)


def test_split_budget(base_params):
    with pytest.raises(BudgetExceeded):
        brute_force_multi_interval(base_params, 1e-4, 30.0, 3, 1.0, budget=1000)


# -- parameter sweep --------------------------------------------------------


@pytest.fixture(scope="module")
def sweep():
    return sweep_heatmap(1 / 14, 30.0, 1e-4, [0.9, 1.5, 3.0], [0.2, 0.4, 0.8])


def test_sweep_layout(sweep):
    assert len(sweep) == 9
    assert sweep.axis[0] == (0.9, 0.2) and sweep.axis[3] == (1.5, 0.2)
    assert set(sweep.detail) == {"start", "case", "no_quarantine_r_inf"}
    assert sweep.notes["ratio_monotone"] and sweep.notes["ratio_violations"] == []


def test_sweep_subcritical_cells_stay_at_seed_scale(sweep):
    for k in range(3):
        # without any quarantine the removed share is at most i0 / (1 - R0_n)
        assert sweep.r_inf[k] <= 1e-4 / (1 - 0.9) + 1e-9
        assert sweep.detail["case"][k] == "AtOrigin"


def test_sweep_relief_is_larger_for_milder_epidemics(sweep):
    cell = {ax: (r, base) for ax, r, base in zip(sweep.axis, sweep.r_inf, sweep.detail["no_quarantine_r_inf"])}
    relief_mild = cell[(1.5, 0.4)][1] - cell[(1.5, 0.4)][0]
    relief_strong = cell[(3.0, 0.4)][1] - cell[(3.0, 0.4)][0]
    assert relief_mild > relief_strong > 0


def test_sweep_is_deterministic(sweep):
    again = sweep_heatmap(1 / 14, 30.0, 1e-4, [0.9, 1.5, 3.0], [0.2, 0.4, 0.8])
    assert again == sweep


@pytest.mark.parametrize("ratios", [[0.5, 1.0], [0.0], [-0.2]])
def test_sweep_rejects_ratio_outside_unit_interval(ratios):
    with pytest.raises(PreconditionError):
        sweep_heatmap(1 / 14, 30.0, 1e-4, [2.0], ratios)


@given(st.floats(1.3, 4.0), st.floats(0.1, 0.9), st.integers(5, 40))
@settings(max_examples=15, deadline=None)
def test_scan_min_bounds_optimal_window(r0n, ratio, T):
    p = EpidemicParams.from_reproduction_numbers(0.1, r0n, r0n * ratio)
    w = optimal_window(p, 1e-3, float(T))
    grid = np.arange(0.0, w.start + 3 * T, T / 10)
    res = scan_contiguous(p, 1e-3, float(T), grid)
    # the window optimum sits at or below every grid point
    assert w.r_inf <= res.min_r_inf + 1e-6
    assert res.min_r_inf <= res.baseline + 1e-9
