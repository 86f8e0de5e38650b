"""Independent reference computations for the test suite.

Everything here is deliberately naive: closed forms, dense grid search with
exact auxiliary-variable completion, and a scipy-backed linear-programming
reference. None of it shares code with the package's solver path, so
agreement between the two is meaningful evidence.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.optimize

from eivsel.solver import SelectorProgram

__all__ = [
    "soft_threshold",
    "completion_objective",
    "grid_minimize",
    "feasible_box_bound",
    "lp_reference",
]


def soft_threshold(v, tau):
    """Componentwise soft-thresholding: sign(v) * max(|v| - tau, 0)."""
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - float(tau), 0.0)


def _plain_completion(prog, l1, t_min, u_min, need):
    """Cheapest objective add-on that buys ``need`` units of residual slack.

    Slack is linear in (t, u), so a single channel wins: the one with the
    lowest objective cost per unit of slack.
    """
    base = l1 + prog.lam * t_min + prog.nu * u_min
    costs = []
    if prog.mu_t > 0:
        costs.append(prog.lam / prog.mu_t)
    if prog.mu_u > 0:
        costs.append(prog.nu / prog.mu_u)
    if not costs:
        # Tolerance sits above the solver's eps_feas but far below any
        # objective scale compared against.
        return np.where(need > 1e-9, np.inf, base)
    rate = min(costs)
    return base + rate * np.maximum(need, 0.0)


def _safeguarded_completion(prog, l1, t_min, u_min, need):
    """Objective under the coupling t <= w, u <= w, w >= |theta|_1.

    For fixed theta this is a piecewise-linear program in (t, u) with
    objective max(l1, t, u) + lam*t + nu*u, nondecreasing in both variables,
    so the optimum sits at a corner of the feasible set or at an objective
    kink on the slack-binding line; all candidates are enumerated.
    """
    m = l1.shape[0]
    g = need + prog.mu_t * t_min + prog.mu_u * u_min
    cand_t = [t_min, np.maximum(t_min, l1)]
    cand_u = [u_min, np.maximum(u_min, l1)]
    pairs = [(t, u) for t in cand_t for u in cand_u]
    if prog.mu_t > 0:
        for u in cand_u:
            t = (g - prog.mu_u * u) / prog.mu_t
            pairs.append((np.maximum(t, t_min), u))
    if prog.mu_u > 0:
        for t in cand_t:
            u = (g - prog.mu_t * t) / prog.mu_u
            pairs.append((t, np.maximum(u, u_min)))
    if prog.mu_t + prog.mu_u > 0:
        tu = g / (prog.mu_t + prog.mu_u)
        pairs.append((np.maximum(tu, t_min), np.maximum(tu, u_min)))

    best = np.full(m, np.inf)
    for t, u in pairs:
        t = np.broadcast_to(np.asarray(t, dtype=float), (m,))
        u = np.broadcast_to(np.asarray(u, dtype=float), (m,))
        slack = prog.mu_t * t + prog.mu_u * u
        ok = slack + 1e-9 >= g
        w = np.maximum(l1, np.maximum(t, u))
        val = np.where(ok, w + prog.lam * t + prog.nu * u, np.inf)
        best = np.minimum(best, val)
    return best


def completion_objective(prog: SelectorProgram, thetas: np.ndarray) -> np.ndarray:
    """Exact minimal objective over (t, u) for each row of ``thetas``.

    Returns +inf where no completion is feasible; rows outside a box
    coefficient set are also marked infeasible.
    """
    if prog.safeguards and prog.mu_1 > 0:
        raise ValueError("completion oracle does not model safeguards with mu_1")
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    l1 = np.abs(thetas).sum(axis=1)
    resid = np.max(np.abs(prog.r[None, :] - thetas @ prog.A.T), axis=1)
    t_min = np.linalg.norm(thetas, axis=1) if prog.use_t_cone else np.zeros(len(thetas))
    u_min = np.max(np.abs(thetas), axis=1) if prog.use_u_cone else np.zeros(len(thetas))
    need = resid - prog.mu_1 * l1 - prog.tau - prog.mu_t * t_min - prog.mu_u * u_min

    if prog.safeguards:
        vals = _safeguarded_completion(prog, l1, t_min, u_min, need)
    else:
        vals = _plain_completion(prog, l1, t_min, u_min, need)

    if prog.theta_set.is_box:
        lo, hi = prog.theta_set.lower, prog.theta_set.upper
        inside = np.all(thetas >= lo[None, :] - 1e-12, axis=1)
        inside &= np.all(thetas <= hi[None, :] + 1e-12, axis=1)
        vals = np.where(inside, vals, np.inf)
    return vals


def _polish(prog, theta, f_best):
    """Nelder-Mead refinement of the completion objective from a grid point."""

    def f(x):
        v = completion_objective(prog, x[None, :])[0]
        return v if math.isfinite(v) else 1e9

    res = scipy.optimize.minimize(
        f, theta, method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000, "maxfev": 8000},
    )
    val = completion_objective(prog, res.x[None, :])[0]
    if val < f_best:
        return float(val), res.x
    return f_best, theta


def grid_minimize(prog: SelectorProgram, bound: float, rounds: int = 10,
                  points_per_axis: int = 15) -> tuple[float, np.ndarray]:
    """Refined grid search for the program minimum over [-bound, bound]^p.

    Each round re-centers a shrinking window on the incumbent; a final
    Nelder-Mead polish removes the residual grid quantization. The returned
    value is the objective at an actually evaluated point, hence always an
    upper bound on the true minimum.
    """
    p = prog.p
    center = np.zeros(p)
    half = float(bound)
    best_val, best_theta = np.inf, center.copy()
    for _ in range(rounds):
        axes = [np.linspace(center[j] - half, center[j] + half, points_per_axis)
                for j in range(p)]
        mesh = np.meshgrid(*axes, indexing="ij")
        thetas = np.stack([m.ravel() for m in mesh], axis=1)
        vals = completion_objective(prog, thetas)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, best_theta = float(vals[k]), thetas[k]
        if math.isfinite(vals[k]):
            center = thetas[k]
        half = max(half * 0.35, 1e-9)
    if math.isfinite(best_val):
        best_val, best_theta = _polish(prog, best_theta, best_val)
    return best_val, best_theta


def feasible_box_bound(prog: SelectorProgram) -> float:
    """A radius B with |theta_opt|_inf <= B, from any cheap feasible point.

    The objective dominates |theta|_1, so the objective at any feasible
    point bounds the optimum's l1 norm and hence its sup norm. Falls back
    to a fixed radius when neither candidate point is feasible.
    """
    try:
        theta0 = np.linalg.solve(prog.A, prog.r)
    except np.linalg.LinAlgError:
        theta0, *_ = np.linalg.lstsq(prog.A, prog.r, rcond=None)
    if prog.theta_set.is_box:
        theta0 = prog.theta_set.project(theta0)
    val = completion_objective(prog, theta0[None, :])[0]
    origin = completion_objective(prog, np.zeros((1, prog.p)))[0]
    val = min(val, origin)
    if not math.isfinite(val):
        return 10.0
    return float(val) + 0.5


def lp_reference(prog: SelectorProgram) -> tuple[float, np.ndarray]:
    """Exact reference for cone-free programs via scipy's HiGHS backend.

    Variables are the split (theta+, theta-); the residual constraint
    |r - A theta|_inf <= mu_1 * w + tau with w = sum(theta+ + theta-) uses
    the same linearization the package documents, but is solved by an
    unrelated simplex/interior-point code.
    """
    if prog.use_t_cone or prog.use_u_cone:
        raise ValueError("lp_reference handles cone-free programs only")
    p = prog.p
    c = np.ones(2 * p)
    S = np.hstack([np.eye(p), -np.eye(p)])
    ones = np.ones((1, 2 * p))
    G_rows = [prog.A @ S - prog.mu_1 * ones, -prog.A @ S - prog.mu_1 * ones]
    h_rows = [prog.tau + prog.r, prog.tau - prog.r]
    if prog.theta_set.is_box:
        G_rows += [S, -S]
        h_rows += [prog.theta_set.upper, -prog.theta_set.lower]
    G = np.vstack(G_rows)
    h = np.concatenate(h_rows)
    finite = np.isfinite(h)
    res = scipy.optimize.linprog(
        c, A_ub=G[finite], b_ub=h[finite], bounds=[(0, None)] * (2 * p),
        method="highs",
    )
    if not res.success:
        return math.inf, np.full(p, np.nan)
    return float(res.fun), S @ res.x
