"""
Independent reference computations for the test suite.

Everything here is written from the defining formulas with plain loops or dense
linear algebra and does not import package internals, so agreement with the
package is a genuine cross-check rather than a tautology.
"""

from __future__ import annotations

import math

import numpy as np


def velocity_nodes(nv: int, vmax: float):
    dv = 2.0 * vmax / nv
    v = [(j - nv / 2 + 0.5) * dv for j in range(nv)]
    w = [math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi) * dv for x in v]
    return np.array(v), np.array(w), dv


def moment0_loop(f, w):
    Z = sum(w)
    return np.array([sum(w[j] * row[j] for j in range(len(w))) / Z for row in f])


def fp_apply_loop(p, nv: int, vmax: float):
    """(L2 p)_j = (F_{j+1/2} - F_{j-1/2}) / (mu(v_j) dv) with mu at half nodes, zero end fluxes."""
    v, w, dv = velocity_nodes(nv, vmax)
    mu = lambda x: math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)  # noqa: E731
    F = [0.0] * (nv + 1)
    for j in range(nv - 1):
        vh = 0.5 * (v[j] + v[j + 1])
        F[j + 1] = mu(vh) * (p[j + 1] - p[j]) / dv
    return np.array([(F[j + 1] - F[j]) / (mu(v[j]) * dv) for j in range(nv)])


def diffuse_loop(values_out, v_out, w_out):
    num = sum(wj * abs(vj) * fj for fj, vj, wj in zip(values_out, v_out, w_out))
    den = sum(wj * abs(vj) for vj, wj in zip(v_out, w_out))
    return num / den


def closed_trace_loop(out_vals, alpha, beta, nv, vmax):
    """Closed wall traces from outgoing values given per wall as {v_index: value}."""
    v, w, _ = velocity_nodes(nv, vmax)
    trace = np.zeros((2, nv))
    for wall, normal in enumerate((-1.0, 1.0)):
        outs = [j for j in range(nv) if normal * v[j] > 0]
        D = diffuse_loop([out_vals[wall][j] for j in outs], [v[j] for j in outs], [w[j] for j in outs])
        for j in range(nv):
            if normal * v[j] > 0:
                trace[wall, j] = out_vals[wall][j]
            else:
                mirror = nv - 1 - j
                trace[wall, j] = alpha[wall] * D + beta[wall] * out_vals[wall][mirror]
    return trace


def robin_dense_solve(S, dx, c_left, c_right):
    """u - u'' = S on cell centres, ghost closure for -u' + c u = 0 (left), u' + c u = 0 (right).

    c = inf imposes u = 0 at the wall.  Built as a dense matrix from the stencil
    (u_g - 2u_i + u_{i+1}) / dx^2 with the ghost eliminated.
    """
    n = len(S)
    A = np.zeros((n, n))
    for i in range(n):
        A[i, i] = 1 + 2 / dx**2
        if i > 0:
            A[i, i - 1] = -1 / dx**2
        if i < n - 1:
            A[i, i + 1] = -1 / dx**2

    def ghost_factor(c):
        if math.isinf(c):
            return -1.0
        return (1 - c * dx / 2) / (1 + c * dx / 2)

    A[0, 0] -= ghost_factor(c_left) / dx**2
    A[-1, -1] -= ghost_factor(c_right) / dx**2
    return np.linalg.solve(A, S)


def heat_neumann_exact(x, t):
    return 1.0 + math.exp(-math.pi**2 * t) * np.cos(math.pi * x)


def log_linear_fit(t, y):
    """Closed-form least squares for log y = a + b t."""
    t = np.asarray(t, dtype=float)
    ly = np.log(np.asarray(y, dtype=float))
    n = t.size
    st, sy, stt, sty = t.sum(), ly.sum(), (t * t).sum(), (t * ly).sum()
    b = (n * sty - st * sy) / (n * stt - st * st)
    a = (sy - b * st) / n
    return a, b
