"""Compiled RK4 kernels for the piecewise-constant SIR system.

Step rule shared by every kernel: a segment of length ``L`` is covered by
``n = ceil(L/h - 1e-9)`` steps, the first ``n - 1`` of size ``h`` and a final
step that lands exactly on the segment end. The end state is therefore a
continuous function of ``L``, which the root searches rely on.
"""

import math

import numpy as np
from numba import config, njit, prange

# TBB is tried first by default and warns when the installed version is old
config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

STEP_SLACK = 1e-9
# subnormal i carries no usable precision and makes every step very slow
I_FLUSH = 2.2250738585072014e-308


@njit(cache=True)
def n_steps(length, h):
    if length <= 0.0:
        return 0
    n = int(math.ceil(length / h - STEP_SLACK))
    return max(n, 1)


@njit(cache=True)
def rk4_step(s, i, r, beta, gamma, h):
    a1 = beta * s * i
    k1s = -a1
    k1i = a1 - gamma * i
    k1r = gamma * i

    s2 = s + 0.5 * h * k1s
    i2 = i + 0.5 * h * k1i
    a2 = beta * s2 * i2
    k2s = -a2
    k2i = a2 - gamma * i2
    k2r = gamma * i2

    s3 = s + 0.5 * h * k2s
    i3 = i + 0.5 * h * k2i
    a3 = beta * s3 * i3
    k3s = -a3
    k3i = a3 - gamma * i3
    k3r = gamma * i3

    s4 = s + h * k3s
    i4 = i + h * k3i
    a4 = beta * s4 * i4
    k4s = -a4
    k4i = a4 - gamma * i4
    k4r = gamma * i4

    w = h / 6.0
    i_new = i + w * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
    if i_new < I_FLUSH:
        i_new = 0.0
    return (
        s + w * (k1s + 2.0 * k2s + 2.0 * k3s + k4s),
        i_new,
        r + w * (k1r + 2.0 * k2r + 2.0 * k3r + k4r),
    )


@njit(cache=True)
def advance(s, i, r, beta, gamma, length, h):
    n = n_steps(length, h)
    if n == 0:
        return s, i, r
    for _ in range(n - 1):
        if i == 0.0:
            return s, i, r
        s, i, r = rk4_step(s, i, r, beta, gamma, h)
    return rk4_step(s, i, r, beta, gamma, length - (n - 1) * h)


@njit(cache=True)
def run_segments(breaks, betas, s, i, r, gamma, h):
    for k in range(betas.shape[0]):
        s, i, r = advance(s, i, r, betas[k], gamma, breaks[k + 1] - breaks[k], h)
    return s, i, r


@njit(cache=True)
def count_points(breaks, h):
    total = 1
    for k in range(breaks.shape[0] - 1):
        total += n_steps(breaks[k + 1] - breaks[k], h)
    return total


@njit(cache=True)
def record_segments(breaks, betas, s, i, r, gamma, h, beta0):
    """Integrate and store every step; ``beta_out[k]`` is the rate used to reach point k."""
    npts = count_points(breaks, h)
    t_out = np.empty(npts)
    s_out = np.empty(npts)
    i_out = np.empty(npts)
    r_out = np.empty(npts)
    beta_out = np.empty(npts)
    t_out[0] = breaks[0]
    s_out[0] = s
    i_out[0] = i
    r_out[0] = r
    beta_out[0] = beta0
    p = 1
    for k in range(betas.shape[0]):
        a = breaks[k]
        b = breaks[k + 1]
        beta = betas[k]
        n = n_steps(b - a, h)
        for j in range(n):
            if j < n - 1:
                s, i, r = rk4_step(s, i, r, beta, gamma, h)
                t_out[p] = a + (j + 1) * h
            else:
                s, i, r = rk4_step(s, i, r, beta, gamma, (b - a) - (n - 1) * h)
                t_out[p] = b
            s_out[p] = s
            i_out[p] = i
            r_out[p] = r
            beta_out[p] = beta
            p += 1
    return t_out, s_out, i_out, r_out, beta_out


@njit(cache=True)
def steps_until_extinct(s, i, r, beta, gamma, h, threshold, max_steps):
    """Number of full steps until ``i < threshold`` (``max_steps`` if never)."""
    k = 0
    while i >= threshold and k < max_steps:
        s, i, r = rk4_step(s, i, r, beta, gamma, h)
        k += 1
    return k


@njit(cache=True)
def steps_until_s_below(s, i, r, beta, gamma, h, target, max_steps):
    """First node index k with ``s(k h) < target``, and the state at node k - 1."""
    if s < target:
        return 0, s, i, r
    k = 0
    while k < max_steps:
        s1, i1, r1 = rk4_step(s, i, r, beta, gamma, h)
        k += 1
        if s1 < target:
            return k, s, i, r
        s, i, r = s1, i1, r1
    return -1, s, i, r


@njit(cache=True)
def states_at(s, i, r, beta, gamma, h, times):
    """States at sorted ``times`` >= 0, bit-identical to a fresh ``advance`` from 0."""
    m = times.shape[0]
    out = np.empty((m, 3))
    node = 0
    for q in range(m):
        t = times[q]
        n = n_steps(t, h)
        if n == 0:
            out[q, 0] = s
            out[q, 1] = i
            out[q, 2] = r
            continue
        while node < n - 1:
            s, i, r = rk4_step(s, i, r, beta, gamma, h)
            node += 1
        ps, pi, pr = rk4_step(s, i, r, beta, gamma, t - (n - 1) * h)
        out[q, 0] = ps
        out[q, 1] = pi
        out[q, 2] = pr
    return out


@njit(cache=True)
def quarantine_quadrature(s, i, beta_q, beta_n, gamma, length, n):
    """Run ``n`` uniform RK4 steps under ``beta_q`` and Simpson-integrate along them.

    Returns fine and coarse (every other node) Simpson sums of
    ``(gamma - beta_n s)/i`` and of ``1/i``, plus the end state. ``n`` must be
    a multiple of 4.
    """
    h = length / n
    r = 0.0
    q_fine = 0.0
    q_coarse = 0.0
    v_fine = 0.0
    v_coarse = 0.0
    for k in range(n + 1):
        if k > 0:
            s, i, r = rk4_step(s, i, r, beta_q, gamma, h)
        f = (gamma - beta_n * s) / i
        v = 1.0 / i
        if k == 0 or k == n:
            wf = 1.0
            wc = 1.0
        elif k % 2 == 1:
            wf = 4.0
            wc = 0.0
        else:
            wf = 2.0
            wc = 4.0 if k % 4 == 2 else 2.0
        q_fine += wf * f
        q_coarse += wc * f
        v_fine += wf * v
        v_coarse += wc * v
    return (
        q_fine * h / 3.0,
        q_coarse * 2.0 * h / 3.0,
        v_fine * h / 3.0,
        v_coarse * 2.0 * h / 3.0,
        s,
        i,
    )


@njit(cache=True, parallel=True)
def batch_end_states(breaks, betas, nseg, s, i, r, gamma, h):
    """End states for many schedules; row k uses the first ``nseg[k]`` segments."""
    m = breaks.shape[0]
    out = np.empty((m, 3))
    for k in prange(m):
        ss, ii, rr = s, i, r
        for j in range(nseg[k]):
            ss, ii, rr = advance(ss, ii, rr, betas[k, j], gamma, breaks[k, j + 1] - breaks[k, j], h)
        out[k, 0] = ss
        out[k, 1] = ii
        out[k, 2] = rr
    return out


@njit(cache=True)
def advance_rows(states, beta, gamma, lengths, h):
    """``advance`` row ``k`` of an ``(m, 3)`` state array by ``lengths[k]``."""
    m = states.shape[0]
    out = np.empty((m, 3))
    for k in range(m):
        s, i, r = advance(states[k, 0], states[k, 1], states[k, 2], beta, gamma, lengths[k], h)
        out[k, 0] = s
        out[k, 1] = i
        out[k, 2] = r
    return out
