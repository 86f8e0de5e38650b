"""Certified interior-point solver for the unified selector program.

Every estimator variant in this package is an instance of one convex
program, described by :class:`SelectorProgram`:

    minimize    |theta|_1 + lambda*t + nu*u
    subject to  |r - A theta|_inf <= mu_t*t + mu_u*u + mu_1*|theta|_1 + tau
                |theta|_2 <= t          (when use_t_cone)
                |theta|_inf <= u        (when use_u_cone)
                theta in Theta,  t >= 0,  u >= 0.

The l1 terms are linearized through the split theta = theta_plus -
theta_minus with w = sum(theta_plus + theta_minus); the optional safeguard
constraints t <= w and u <= w then bind against that split. The program is
solved as a cone linear program (linear rows plus one second-order cone
block) and the returned :class:`~eivsel.model.Solution` carries its own
recomputed feasibility residual and the solver's duality-gap certificate;
the reported status is downgraded whenever those checks fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from cvxopt import matrix as cvx_matrix
from cvxopt import solvers as cvx_solvers

from .model import (
    DimensionMismatchError,
    EivselError,
    InconsistentSpecError,
    NonFiniteError,
    Solution,
    ThetaSet,
)

__all__ = [
    "SelectorProgram",
    "SolverOptions",
    "SolverBackendError",
    "solve",
    "feasibility_residual",
    "linear_program",
    "dump_program",
]


class SolverBackendError(EivselError):
    """The backend raised or returned something uninterpretable."""


_REALS = ThetaSet.reals()


@dataclass(frozen=True, eq=False)
class SelectorProgram:
    """Data of one selector cone program; see the module docstring.

    ``lam`` and ``nu`` are the objective weights on t and u; ``mu_t``,
    ``mu_u``, ``mu_1`` and ``tau`` the right-hand-side coefficients of the
    residual constraint.
    """

    A: np.ndarray
    r: np.ndarray
    mu_t: float = 0.0
    mu_u: float = 0.0
    mu_1: float = 0.0
    tau: float = 0.0
    lam: float = 0.0
    nu: float = 0.0
    theta_set: ThetaSet = field(default=_REALS)
    use_t_cone: bool = False
    use_u_cone: bool = False
    safeguards: bool = False

    def __post_init__(self):
        A = np.array(self.A, dtype=float, copy=True)
        r = np.array(self.r, dtype=float, copy=True).reshape(-1)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatchError(f"A must be square, got shape {A.shape}")
        if r.shape[0] != A.shape[0]:
            raise DimensionMismatchError(
                f"r has length {r.shape[0]} but A is {A.shape[0]}x{A.shape[1]}"
            )
        if not np.isfinite(A).all():
            raise NonFiniteError("A contains non-finite entries")
        if not np.isfinite(r).all():
            raise NonFiniteError("r contains non-finite entries")
        A.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "r", r)
        for name in ("mu_t", "mu_u", "mu_1", "tau", "lam", "nu"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise InconsistentSpecError(
                    f"{name} must be finite and nonnegative, got {v}"
                )
            object.__setattr__(self, name, v)
        if self.lam > 0 and not self.use_t_cone:
            raise InconsistentSpecError("lam > 0 requires use_t_cone")
        if self.nu > 0 and not self.use_u_cone:
            raise InconsistentSpecError("nu > 0 requires use_u_cone")
        if self.mu_1 > 0 and (self.lam > 0 or self.nu > 0):
            raise InconsistentSpecError("mu_1 > 0 requires lam = nu = 0")
        # A positive slack coefficient on a free auxiliary variable would
        # reward inflating it at no objective cost.
        if self.mu_t > 0 and not (self.use_t_cone and self.lam > 0):
            raise InconsistentSpecError("mu_t > 0 requires use_t_cone and lam > 0")
        if self.mu_u > 0 and not (self.use_u_cone and self.nu > 0):
            raise InconsistentSpecError("mu_u > 0 requires use_u_cone and nu > 0")
        if self.safeguards and not (self.use_t_cone or self.use_u_cone):
            raise InconsistentSpecError(
                "safeguards require at least one auxiliary variable"
            )
        if self.theta_set.is_box and self.theta_set.lower.shape[0] != self.p:
            raise DimensionMismatchError(
                f"theta_set bounds have length {self.theta_set.lower.shape[0]}, "
                f"program has p={self.p}"
            )

    @property
    def p(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and budget for one solve.

    ``eps_feas`` bounds the accepted constraint violation, ``eps_opt`` the
    certified objective suboptimality; ``max_iterations`` caps the
    interior-point iteration count.
    """

    eps_feas: float = 1e-7
    eps_opt: float = 1e-7
    max_iterations: int = 50_000
    verbose: bool = False

    def __post_init__(self):
        if not (self.eps_feas > 0 and self.eps_opt > 0):
            raise InconsistentSpecError("tolerances must be strictly positive")
        if self.max_iterations < 1:
            raise InconsistentSpecError("max_iterations must be >= 1")


def feasibility_residual(prog: SelectorProgram, theta, t: float = 0.0,
                         u: float = 0.0) -> float:
    """Maximum constraint violation of (theta, t, u), floored at zero.

    The safeguard rows never contribute: the split weight w is an internal
    variable and any (theta, t, u) admits the valid completion
    w = max(|theta|_1, t, u).
    """
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != prog.p:
        raise DimensionMismatchError(
            f"theta has length {theta.shape[0]}, program has p={prog.p}"
        )
    l1 = float(np.sum(np.abs(theta)))
    resid = float(np.max(np.abs(prog.r - prog.A @ theta)))
    rhs = prog.mu_t * t + prog.mu_u * u + prog.mu_1 * l1 + prog.tau
    worst = resid - rhs
    if prog.use_t_cone:
        worst = max(worst, float(np.linalg.norm(theta)) - t, -t)
    if prog.use_u_cone:
        worst = max(worst, float(np.max(np.abs(theta))) - u, -u)
    if prog.theta_set.is_box:
        lo, hi = prog.theta_set.lower, prog.theta_set.upper
        finite_lo = np.isfinite(lo)
        finite_hi = np.isfinite(hi)
        if finite_lo.any():
            worst = max(worst, float(np.max(lo[finite_lo] - theta[finite_lo])))
        if finite_hi.any():
            worst = max(worst, float(np.max(theta[finite_hi] - hi[finite_hi])))
    return max(worst, 0.0)


def _build_cone_lp(prog: SelectorProgram):
    """Assemble (c, G, h, dims, index map) for the cone LP formulation."""
    p = prog.p
    has_t = prog.use_t_cone
    has_u = prog.use_u_cone
    d = 2 * p + int(has_t) + int(has_u)
    it = 2 * p if has_t else None
    iu = 2 * p + int(has_t) if has_u else None

    c = np.ones(d)
    if has_t:
        c[it] = prog.lam
    if has_u:
        c[iu] = prog.nu

    rows = []
    rhs = []

    def add(block, b):
        rows.append(block)
        rhs.append(b)

    A = prog.A
    ones_pp = np.full((p, p), prog.mu_1)
    # Residual constraint, upper and lower halves:
    #   +/-(r - A theta) <= mu_t*t + mu_u*u + mu_1*w + tau
    for sign in (+1.0, -1.0):
        block = np.zeros((p, d))
        block[:, :p] = -sign * A - ones_pp
        block[:, p:2 * p] = sign * A - ones_pp
        if has_t:
            block[:, it] = -prog.mu_t
        if has_u:
            block[:, iu] = -prog.mu_u
        add(block, prog.tau - sign * prog.r)

    # theta_plus >= 0, theta_minus >= 0, t >= 0, u >= 0
    block = np.zeros((2 * p, d))
    block[:, :2 * p] = -np.eye(2 * p)
    add(block, np.zeros(2 * p))
    if has_t:
        block = np.zeros((1, d))
        block[0, it] = -1.0
        add(block, np.zeros(1))
    if has_u:
        block = np.zeros((1, d))
        block[0, iu] = -1.0
        add(block, np.zeros(1))

    # sup-norm cone: +/-(theta_plus - theta_minus) <= u
    if has_u:
        for sign in (+1.0, -1.0):
            block = np.zeros((p, d))
            block[:, :p] = sign * np.eye(p)
            block[:, p:2 * p] = -sign * np.eye(p)
            block[:, iu] = -1.0
            add(block, np.zeros(p))

    # safeguards: t <= w and u <= w with w = sum(theta_plus + theta_minus)
    if prog.safeguards:
        for idx in (it, iu):
            if idx is None:
                continue
            block = np.zeros((1, d))
            block[0, :2 * p] = -1.0
            block[0, idx] = 1.0
            add(block, np.zeros(1))

    # box section of Theta (finite bounds only)
    if prog.theta_set.is_box:
        lo, hi = prog.theta_set.lower, prog.theta_set.upper
        fin = np.flatnonzero(np.isfinite(hi))
        if fin.size:
            block = np.zeros((fin.size, d))
            block[np.arange(fin.size), fin] = 1.0
            block[np.arange(fin.size), p + fin] = -1.0
            add(block, hi[fin])
        fin = np.flatnonzero(np.isfinite(lo))
        if fin.size:
            block = np.zeros((fin.size, d))
            block[np.arange(fin.size), fin] = -1.0
            block[np.arange(fin.size), p + fin] = 1.0
            add(block, -lo[fin])

    n_lin = sum(b.shape[0] for b in rows)
    soc_sizes = []
    if has_t:
        # second-order cone block: s0 = t, s_1..p = theta; s0 >= |s_1..p|_2
        block = np.zeros((p + 1, d))
        block[0, it] = -1.0
        block[1:, :p] = -np.eye(p)
        block[1:, p:2 * p] = np.eye(p)
        add(block, np.zeros(p + 1))
        soc_sizes = [p + 1]

    G = np.vstack(rows)
    h = np.concatenate(rhs)
    dims = {"l": n_lin, "q": soc_sizes, "s": []}
    return c, G, h, dims, it, iu


def _certified_infeasible(G: np.ndarray, h: np.ndarray, dims, z) -> bool:
    """Check a dual ray z: z in dual cone, G'z ~ 0, h'z < 0."""
    if z is None:
        return False
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape[0] != G.shape[0] or not np.isfinite(z).all():
        return False
    nl = dims["l"]
    tol = 1e-6 * max(1.0, float(np.max(np.abs(z))))
    if (z[:nl] < -tol).any():
        return False
    off = nl
    for q in dims["q"]:
        blk = z[off:off + q]
        if blk[0] < float(np.linalg.norm(blk[1:])) - tol:
            return False
        off += q
    if float(h @ z) >= -1e-8:
        return False
    return float(np.max(np.abs(G.T @ z))) <= tol


def _failure(prog: SelectorProgram, iterations: int, status: str) -> Solution:
    zeros = np.zeros(prog.p)
    return Solution(
        theta_hat=zeros,
        t_hat=0.0,
        u_hat=0.0,
        objective=math.inf,
        status=status,
        feasibility_residual=feasibility_residual(prog, zeros, 0.0, 0.0),
        optimality_gap=math.inf,
        iterations=iterations,
    )


def solve(prog: SelectorProgram, opts: SolverOptions = SolverOptions()) -> Solution:
    """Solve the program and return a self-checked :class:`Solution`.

    ``status='optimal'`` is reported only when the recomputed feasibility
    residual is at most ``opts.eps_feas`` and the duality gap is at most
    ``opts.eps_opt``; a backend "optimal" that fails either check is
    downgraded to ``numerical_failure``. A backend infeasibility claim is
    accepted only when its dual ray certificate verifies.
    """
    c, G, h, dims, it, iu = _build_cone_lp(prog)
    maxiters = int(min(opts.max_iterations, 300))
    options = {
        "show_progress": bool(opts.verbose),
        "maxiters": maxiters,
        "abstol": max(min(opts.eps_opt * 0.1, 1e-8), 1e-13),
        "reltol": max(min(opts.eps_opt * 0.1, 1e-8), 1e-13),
        "feastol": max(min(opts.eps_feas * 0.1, 1e-8), 1e-13),
        "refinement": 2,
    }
    # Same fallback strategy as linear_program: the LDL KKT factorization
    # only runs when the default path fails to certify, so it cannot change
    # results on well-conditioned programs.
    sol = None
    for extra in ({}, {"kktsolver": "ldl"}):
        try:
            sol = cvx_solvers.conelp(
                cvx_matrix(c), cvx_matrix(G), cvx_matrix(h), dims=dims,
                options=options, **extra
            )
        except (ValueError, ArithmeticError, ZeroDivisionError):
            sol = None
            continue
        if sol.get("status") in ("optimal", "primal infeasible"):
            break
    if sol is None:
        return _failure(prog, 0, "numerical_failure")

    status = sol.get("status")
    iterations = int(sol.get("iterations") or 0)

    if status == "primal infeasible":
        if _certified_infeasible(G, h, dims, sol.get("z")):
            zeros = np.zeros(prog.p)
            return Solution(
                theta_hat=zeros,
                t_hat=0.0,
                u_hat=0.0,
                objective=math.inf,
                status="infeasible",
                feasibility_residual=feasibility_residual(prog, zeros, 0.0, 0.0),
                optimality_gap=0.0,
                iterations=iterations,
            )
        return _failure(prog, iterations, "numerical_failure")

    x = sol.get("x")
    if x is None:
        if status == "unknown" and iterations >= maxiters:
            return _failure(prog, iterations, "max_iterations")
        return _failure(prog, iterations, "numerical_failure")

    x = np.asarray(x, dtype=float).reshape(-1)
    p = prog.p
    theta = x[:p] - x[p:2 * p]
    w = float(np.sum(x[:2 * p]))
    t_hat = max(float(x[it]), 0.0) if it is not None else 0.0
    u_hat = max(float(x[iu]), 0.0) if iu is not None else 0.0

    residual = feasibility_residual(prog, theta, t_hat, u_hat)
    gap = sol.get("gap")
    gap = float(gap) if gap is not None and math.isfinite(gap) else math.inf
    gap = max(gap, 0.0)

    if prog.safeguards:
        objective = w + prog.lam * t_hat + prog.nu * u_hat
    else:
        objective = (
            float(np.sum(np.abs(theta))) + prog.lam * t_hat + prog.nu * u_hat
        )

    if residual <= opts.eps_feas and gap <= opts.eps_opt:
        final = "optimal"
    elif status == "unknown" and iterations >= maxiters:
        final = "max_iterations"
    else:
        final = "numerical_failure"

    return Solution(
        theta_hat=theta,
        t_hat=t_hat,
        u_hat=u_hat,
        objective=objective,
        status=final,
        feasibility_residual=residual,
        optimality_gap=gap,
        iterations=iterations,
    )


def linear_program(c, G, h, A_eq=None, b_eq=None, maxiters: int = 200):
    """Dense LP helper with tight tolerances: min c'x s.t. Gx <= h, A_eq x = b_eq.

    Returns ``(x, value, status)`` where status is one of ``'optimal'``,
    ``'infeasible'``, ``'unknown'``. Used by the sensitivity oracle, which
    needs answers accurate to ~1e-9.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float).reshape(-1)
    options = {
        "show_progress": False,
        "maxiters": int(maxiters),
        "abstol": 1e-11,
        "reltol": 1e-11,
        "feastol": 1e-10,
        "refinement": 2,
    }
    args = [cvx_matrix(c), cvx_matrix(G), cvx_matrix(h)]
    kwargs = {"dims": {"l": h.shape[0], "q": [], "s": []}, "options": options}
    if A_eq is not None:
        A_eq = np.asarray(A_eq, dtype=float)
        b_eq = np.asarray(b_eq, dtype=float).reshape(-1)
        kwargs["A"] = cvx_matrix(A_eq)
        kwargs["b"] = cvx_matrix(b_eq)
    # Degenerate instances (parallel active rows, non-unique optima) can
    # stall the default KKT path just above tolerance; the LDL factorization
    # of the full KKT system certifies them, so it serves as the fallback.
    sol = None
    last_exc = None
    for extra in ({}, {"kktsolver": "ldl"}):
        try:
            sol = cvx_solvers.conelp(*args, **kwargs, **extra)
        except (ValueError, ArithmeticError, ZeroDivisionError) as exc:
            last_exc = exc
            sol = None
            continue
        if sol.get("status") in ("optimal", "primal infeasible"):
            break
    if sol is None:
        raise SolverBackendError(
            f"linear program backend failure: {last_exc}"
        ) from last_exc
    status = sol.get("status")
    if status == "primal infeasible":
        return None, math.inf, "infeasible"
    x = sol.get("x")
    if x is None:
        return None, math.nan, "unknown"
    x = np.asarray(x, dtype=float).reshape(-1)
    value = float(c @ x)
    return x, value, ("optimal" if status == "optimal" else "unknown")


def dump_program(prog: SelectorProgram, path, solution: Solution | None = None) -> None:
    """Write the program (and optionally a solution) to a structured text file.

    Matrices are written row-major, one row per line, full precision.
    """
    lines = ["[program]"]
    lines.append(f"p = {prog.p}")
    for name in ("mu_t", "mu_u", "mu_1", "tau", "lam", "nu"):
        lines.append(f"{name} = {getattr(prog, name):.17g}")
    lines.append(f"use_t_cone = {prog.use_t_cone}")
    lines.append(f"use_u_cone = {prog.use_u_cone}")
    lines.append(f"safeguards = {prog.safeguards}")
    lines.append("")
    lines.append("[A]")
    for row in prog.A:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    lines.append("")
    lines.append("[r]")
    lines.append(" ".join(f"{v:.17g}" for v in prog.r))
    lines.append("")
    lines.append("[theta_set]")
    lines.append(f"kind = {prog.theta_set.kind}")
    if prog.theta_set.is_box:
        lines.append("lower = " + " ".join(f"{v:.17g}" for v in prog.theta_set.lower))
        lines.append("upper = " + " ".join(f"{v:.17g}" for v in prog.theta_set.upper))
    if solution is not None:
        lines.append("")
        lines.append("[solution]")
        lines.append(f"status = {solution.status}")
        lines.append(f"objective = {solution.objective:.17g}")
        lines.append("theta_hat = " + " ".join(f"{v:.17g}" for v in solution.theta_hat))
        lines.append(f"t_hat = {solution.t_hat:.17g}")
        lines.append(f"u_hat = {solution.u_hat:.17g}")
        lines.append(f"feasibility_residual = {solution.feasibility_residual:.17g}")
        lines.append(f"optimality_gap = {solution.optimality_gap:.17g}")
        lines.append(f"iterations = {solution.iterations}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
