"""Brute-force oracle for the scalar discounted LQ regulator.

Grid value iteration over a bounded state box, independent of any Riccati
recursion. Used once to freeze expected gain/value constants for the tests.
"""

from __future__ import annotations

import numpy as np


def value_iteration(a, b, q, r, gamma, s_lim=4.0, n_s=16001, n_u=2001,
                    sweeps=5000):
    s_grid = np.linspace(-s_lim, s_lim, n_s)
    u_grid = np.linspace(-s_lim, s_lim, n_u)
    v = np.zeros(n_s)
    chunk = 100
    for it in range(sweeps):
        v_new = np.full(n_s, np.inf)
        for j0 in range(0, n_u, chunk):
            u = u_grid[j0:j0 + chunk]
            s_next = np.clip(a * s_grid[:, None] + b * u[None, :],
                             -s_lim, s_lim)
            cand = (q * s_grid[:, None] ** 2 + r * u[None, :] ** 2
                    + gamma * np.interp(s_next.ravel(), s_grid, v)
                    .reshape(n_s, len(u)))
            v_new = np.minimum(v_new, cand.min(axis=1))
        delta = np.abs(v_new - v).max()
        v = v_new
        if delta < 1e-11:
            break
    return s_grid, v, it


def greedy_gain(a, b, q, r, gamma, s_grid, v, probe=1.0):
    # parabolic refinement of argmin_u r u^2 + gamma V(a*probe + b*u)
    def obj(u):
        return r * u * u + gamma * np.interp(a * probe + b * u, s_grid, v)

    u = np.linspace(-2.0, 0.0, 20001)
    vals = np.array([obj(x) for x in u])
    j = vals.argmin()
    lo, hi = u[max(j - 2, 0)], u[min(j + 2, len(u) - 1)]
    for _ in range(200):
        m1, m2 = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        if obj(m1) < obj(m2):
            hi = m2
        else:
            lo = m1
    return -(lo + hi) / 2 / probe


if __name__ == "__main__":
    a, b, q, r, gamma = 0.9, 0.5, 1.0, 1.0, 0.99
    s_grid, v, iters = value_iteration(a, b, q, r, gamma)
    gain = greedy_gain(a, b, q, r, gamma, s_grid, v)
    mid = np.abs(s_grid) <= 2.0
    p_fit = np.polyfit(s_grid[mid], v[mid], 2)[0]
    print(f"gain={gain:.6f} p={p_fit:.6f} sweeps={iters}")
