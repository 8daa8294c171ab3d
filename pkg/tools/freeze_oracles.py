"""Recompute the reference values frozen in tests/reference_values.py.

Uses only scipy (adaptive DOP853 at tight tolerance) and mpmath, never the
qsched package itself. Run from the repository root:

    python tools/freeze_oracles.py
"""

import math

import mpmath as mp
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

mp.mp.dps = 40
TOL = dict(method="DOP853", rtol=1e-13, atol=1e-16)


def rhs(beta, gamma):
    def f(t, y):
        s, i = y[0], y[1]
        return [-beta * s * i, beta * s * i - gamma * i]

    return f


def final_s(s, i, rho):
    c = mp.mpf(s) + i - rho * mp.log(s)
    lo, hi = mp.mpf("1e-300"), min(mp.mpf(s), mp.mpf(rho))
    # x - rho log x decreasing on (0, rho]
    return float(mp.findroot(lambda x: x - rho * mp.log(x) - c, (lo, hi), solver="anderson"))


def run(s, i, beta, gamma, t1):
    sol = solve_ivp(rhs(beta, gamma), (0, t1), [s, i], **TOL)
    return sol.y[0, -1], sol.y[1, -1]


def base_config():
    gamma = 1 / 14
    bn, bq = 2.1 * gamma, 0.8 * gamma
    rho_n = gamma / bn
    i0, T = 1e-4, 30.0
    s0 = 1 - i0

    def pre(t0):
        return run(s0, i0, bn, gamma, t0) if t0 > 0 else (s0, i0)

    def phi(t0):
        s, i = pre(t0)
        sol = solve_ivp(rhs(bq, gamma), (0, T), [s, i], dense_output=True, **TOL)
        val, _ = quad(lambda t: (gamma - bn * sol.sol(t)[0]) / sol.sol(t)[1], 0, T, epsabs=1e-12, limit=200)
        return val

    def r_window(t0):
        s, i = pre(t0)
        s1, i1 = run(s, i, bq, gamma, T)
        return 1 - final_s(s1, i1, rho_n)

    root = brentq(phi, 100, 117, xtol=1e-12)
    return {
        "no_quarantine_r_inf": 1 - final_s(s0, i0, rho_n),
        "optimal_start": root,
        "optimal_r_inf": r_window(root),
        "r_inf_t0_0": r_window(0.0),
        "r_inf_t0_300": r_window(300.0),
        "r_inf_t0_113": r_window(113.0),
    }


def misc():
    gamma = 1 / 14
    out = {}
    out["final_s_0.8_0.1_rho_0.5"] = final_s(0.8, 0.1, 0.5)
    s, _ = run(0.8, 0.1, 1.0 / 0.5 * 1.0, 1.0, 2000.0)  # beta/gamma = 2, gamma = 1
    out["long_s_0.8_0.1_rho_0.5"] = float(s)
    out["conserved_0.5_0.2_rho_0.5"] = float(mp.mpf("0.7") - mp.mpf("0.5") * mp.log(mp.mpf("0.5")))
    out["g_0.5_0.8"] = float(-mp.mpf("0.5") + mp.mpf("0.8") * mp.log(mp.mpf("0.5")))
    beta_q = mp.mpf("0.8") / 14
    out["t_star_base_config"] = float(
        mp.exp(mp.mpf(30) / 14) * mp.log(mp.mpf("2.1") * mp.mpf("0.9999")) / (beta_q * mp.mpf("1e-4"))
    )
    out["epsilon0_base_config"] = float((1 - 1 / mp.mpf("2.1")) / (mp.mpf("0.8") / 14 * 30))
    # Q for a short window from (0.9, 0.05) with beta_n=0.3, beta_q=0.1, gamma=0.1, T=5
    sol = solve_ivp(rhs(0.1, 0.1), (0, 5), [0.9, 0.05], dense_output=True, **TOL)
    out["q_0.9_0.05_T5"] = quad(lambda t: (0.1 - 0.3 * sol.sol(t)[0]) / sol.sol(t)[1], 0, 5, epsabs=1e-13)[0]
    return out


if __name__ == "__main__":
    for name, value in {**misc(), **base_config()}.items():
        print(f"{name} = {value!r}")
