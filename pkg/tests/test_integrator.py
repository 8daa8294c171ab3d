import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsched import (
    DomainError,
    EpidemicParams,
    EpidemicState,
    IntegratorConfig,
    Schedule,
    conserved_quantity,
    final_size,
    integrate,
    integrate_to_extinction,
    quarantine_final_size,
    state_at,
)
from qsched.integrator import batch_final_sizes, direct_final_s, end_state, integrate_segments

from . import reference_values as ref

COARSE = IntegratorConfig(step=0.05)


def _times(lo, hi):
    # millisecond-of-day resolution keeps clear of subnormal segment lengths
    return st.integers(int(lo * 1000), int(hi * 1000)).map(lambda k: k / 1000)


@st.composite
def schedules(draw, max_intervals=3):
    n = draw(st.integers(0, max_intervals))
    t = draw(_times(0.0, 60.0))
    intervals = []
    for _ in range(n):
        length = draw(_times(0.3, 25.0))
        intervals.append((t, length))
        t += length + draw(_times(0.0, 40.0))
    return Schedule.from_intervals(intervals)


@st.composite
def params(draw):
    gamma = draw(st.floats(0.04, 0.3))
    r0n = draw(st.floats(1.2, 4.0))
    return EpidemicParams.from_reproduction_numbers(gamma, r0n, r0n * draw(st.floats(0.1, 0.9)))


def test_config_validation():
    with pytest.raises(DomainError):
        IntegratorConfig(step=0.0)
    with pytest.raises(DomainError):
        IntegratorConfig(extinction_threshold=1.0)
    assert IntegratorConfig().with_step(0.5).step == 0.5


def test_no_quarantine_reaches_reference(base_params, base_initial):
    traj = integrate(base_params, Schedule.empty(), base_initial, 600.0)
    assert abs(traj.r[-1] - 0.82) < 0.01
    assert traj.t[-1] == 600.0


def test_optimal_window_final_size(base_params, base_initial):
    _, fs = integrate_to_extinction(base_params, Schedule.contiguous(ref.OPTIMAL_START, 30.0), base_initial)
    assert abs(fs.r_inf - 0.70) < 0.01
    assert math.isclose(fs.r_inf, ref.OPTIMAL_R_INF, abs_tol=1e-8)


def test_boundaries_are_step_endpoints(base_params, base_initial):
    sch = Schedule(((10.005, 7.3333), (40.1234567, 22.6667)), 30.0)
    traj = integrate(base_params, sch, base_initial, 100.0)
    times = set(traj.t.tolist())
    for b in sch.boundaries:
        assert b in times


def test_segments_partition_horizon(base_params, base_initial):
    sch = Schedule(((10.0, 5.0), (20.0, 25.0)), 30.0)
    traj = integrate(base_params, sch, base_initial, 80.0)
    segs = traj.segment_betas
    assert segs[0][0] == 0.0 and segs[-1][1] == 80.0
    assert all(a[1] == b[0] for a, b in zip(segs, segs[1:]))
    quarantined = [(a, b) for a, b, beta in segs if beta == base_params.beta_q]
    assert quarantined == [(10.0, 15.0), (20.0, 45.0)]


def test_split_interval_matches_single(base_params, base_initial):
    single = integrate(base_params, Schedule.contiguous(100.0, 30.0), base_initial, 200.0)
    split = integrate(base_params, Schedule(((100.0, 15.0), (115.0, 15.0)), 30.0), base_initial, 200.0)
    assert len(single) == len(split)
    assert np.allclose(single.t, split.t, rtol=0, atol=1e-10)
    for name in "sir":
        assert np.allclose(getattr(single, name), getattr(split, name), rtol=0, atol=1e-10)


def test_schedule_irrelevant_when_rates_match(base_initial):
    beta, gamma = 0.2, 0.1
    plain = integrate_segments([0.0, 100.0], [beta], base_initial, gamma)
    cut = integrate_segments([0.0, 10.0, 40.0, 100.0], [beta, beta, beta], base_initial, gamma)
    assert np.allclose(plain.t, cut.t, rtol=0, atol=1e-12)
    assert np.allclose(plain.i, cut.i, rtol=0, atol=1e-12)
    assert np.allclose(plain.s, cut.s, rtol=0, atol=1e-12)


def test_horizon_zero_gives_initial_state(base_params, base_initial):
    traj = integrate(base_params, Schedule.contiguous(5.0, 30.0), base_initial, 0.0)
    assert len(traj) == 1
    assert traj.state(0) == base_initial
    assert traj.beta[0] == base_params.beta_n


def test_rejects_bad_input(base_params, base_initial):
    with pytest.raises(DomainError):
        integrate(base_params, Schedule.empty(), base_initial, -1.0)
    with pytest.raises(DomainError):
        integrate(base_params, Schedule.empty(), EpidemicState(0.0, 1.0, 0.0, 0.0), 10.0)


def test_trajectory_is_read_only(base_params, base_initial):
    traj = integrate(base_params, Schedule.empty(), base_initial, 5.0)
    with pytest.raises(ValueError):
        traj.s[0] = 0.0


def test_subcritical_decays_monotonically():
    p = EpidemicParams(beta_n=0.08, beta_q=0.04, gamma=0.1)
    init = EpidemicState.initial(0.01)
    traj, fs = integrate_to_extinction(p, Schedule.contiguous(3.0, 10.0), init)
    assert np.all(np.diff(traj.i) < 0)
    # the integral of i is at most i0 / (gamma - beta_n)
    assert fs.r_inf <= init.i * p.gamma / (p.gamma - p.beta_n) + 1e-12
    assert traj.extinct_at is not None


def test_horizon_cap_flags_nonconvergence(base_params, base_initial, caplog):
    cfg = IntegratorConfig(step=0.01, horizon_cap=50.0)
    with caplog.at_level(logging.WARNING, logger="qsched.integrator"):
        traj, fs = integrate_to_extinction(base_params, Schedule.empty(), base_initial, cfg)
    assert traj.extinct_at is None
    assert traj.t[-1] <= 50.0 + 1e-9
    assert "horizon cap" in caplog.text
    # the final size is still exact since only normal transmission follows
    assert math.isclose(fs.r_inf, ref.NO_QUARANTINE_R_INF, abs_tol=1e-9)


def test_batch_matches_single(base_params, base_initial):
    schedules_ = [Schedule.contiguous(t, 30.0) for t in (0.0, 50.5, 113.0)] + [Schedule.empty()]
    batch = batch_final_sizes(base_params, schedules_, base_initial)
    for sch, fs in zip(schedules_, batch):
        assert fs == quarantine_final_size(base_params, sch, base_initial)
    assert batch_final_sizes(base_params, [], base_initial) == []


def test_state_at_endpoints(base_params, base_initial):
    traj = integrate(base_params, Schedule.contiguous(2.0, 3.0), base_initial, 10.0)
    assert state_at(traj, 0.0) == base_initial
    assert state_at(traj, float(traj.t[37])) == traj.state(37)
    with pytest.raises(DomainError):
        state_at(traj, 10.5)


@pytest.mark.parametrize("t", [0.005, 2.005, 4.995, 37.12345])
def test_state_at_matches_half_step(base_params, base_initial, t):
    sch = Schedule.contiguous(2.0, 3.0)
    traj = integrate(base_params, sch, base_initial, 40.0)
    got = state_at(traj, t)
    fine = end_state(base_params, sch, base_initial, t, IntegratorConfig(step=0.005))
    assert abs(got.s - fine.s) <= 1e-10
    assert abs(got.i - fine.i) <= 1e-10


def test_end_state_matches_full_run(base_params, base_initial):
    sch = Schedule.contiguous(100.0, 30.0)
    traj = integrate(base_params, sch, base_initial, 150.0)
    assert end_state(base_params, sch, base_initial, 150.0) == traj.final


def test_canonical_final_size_matches_long_run(base_params, base_initial):
    sch = Schedule(((80.0, 12.5), (120.0, 17.5)), 30.0)
    _, fs_long = integrate_to_extinction(base_params, sch, base_initial)
    fs_short = quarantine_final_size(base_params, sch, base_initial)
    assert abs(fs_long.s_inf - fs_short.s_inf) <= 1e-6


def test_direct_final_s_reference():
    p = EpidemicParams(beta_n=2.0, beta_q=1.0, gamma=1.0)
    s, converged = direct_final_s(p, EpidemicState(0.0, 0.8, 0.1, 0.1))
    assert converged
    assert abs(s - ref.LONG_RUN_S_08_01_RHO05) <= 1e-6


@given(params(), schedules(), st.floats(1e-5, 0.05))
@settings(max_examples=40, deadline=None)
def test_trajectory_invariants(p, sch, i0):
    init = EpidemicState.initial(i0)
    traj, fs = integrate_to_extinction(p, sch, init, COARSE)
    total = traj.s + traj.i + traj.r
    assert np.max(np.abs(total - 1.0)) <= 1e-9
    assert np.all(np.diff(traj.t) > 0)
    assert np.all(np.diff(traj.s) < 0)
    # once quarantines are over and s < rho_n, i falls
    after = (traj.t[:-1] >= sch.end) & (traj.s[:-1] < p.rho_n)
    assert np.all(np.diff(traj.i)[after] < 0)
    assert 0 < fs.s_inf <= p.rho_n


@given(params(), schedules(), st.floats(1e-5, 0.05))
@settings(max_examples=30, deadline=None)
def test_conserved_quantity_per_segment(p, sch, i0):
    init = EpidemicState.initial(i0)
    traj = integrate(p, sch, init, sch.end + 50.0, IntegratorConfig(step=0.01))
    for seg in traj.segments:
        rho = p.gamma / seg.beta
        a = state_at(traj, seg.t_start)
        b = state_at(traj, seg.t_end)
        assert abs(conserved_quantity(a, rho) - conserved_quantity(b, rho)) <= 1e-8


@given(params(), schedules(max_intervals=2), st.floats(1e-5, 0.05))
@settings(max_examples=30, deadline=None)
def test_handoff_matches_long_integration(p, sch, i0):
    init = EpidemicState.initial(i0)
    _, fs = integrate_to_extinction(p, sch, init, COARSE)
    at_end = end_state(p, sch, init, max(sch.end, 0.0), COARSE) if sch.end > 0 else init
    assert abs(fs.r_inf - final_size(at_end, p).r_inf) <= 1e-6
