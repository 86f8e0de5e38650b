"""Exact desk-scale oracles for cone-restricted sensitivities of a Gram matrix.

For a symmetric Gram matrix Psi, support budget s, and cone opening u, the
l_q-sensitivity is

    kappa_q(s, u) = min over |J| <= s, over Delta in C_J(u) with |Delta|_q = 1
                    of |Psi Delta|_inf,

where C_J(u) = {Delta : |Delta_{J^c}|_1 <= u |Delta_J|_1}. This quantity
lower-bounds how strongly the Gram operator separates vectors the selectors
cannot distinguish, and so governs their error constants.

:func:`kappa_bruteforce` computes it exactly for q in {1, inf} by
enumerating supports and sign orthants and solving one small linear program
per cell. The cost grows like C(p, s) * 2^(p-1), so the dimension is capped
at p = 12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .model import DimensionMismatchError, EivselError, InconsistentSpecError
from .solver import SolverBackendError, linear_program

__all__ = [
    "DimensionCapError",
    "SensitivityQuery",
    "SensitivityResult",
    "cone_membership",
    "kappa_bruteforce",
    "check_kappa_condition",
    "MAX_P",
]

MAX_P = 12


class DimensionCapError(EivselError):
    """The query dimension exceeds the enumeration cap."""


def _normalize_q(q) -> str:
    if q in (1, "1", "one"):
        return "one"
    if q in ("inf", "infinity") or (isinstance(q, float) and math.isinf(q)):
        return "infinity"
    raise InconsistentSpecError(f"q must be 1 or 'inf', got {q!r}")


@dataclass(frozen=True, eq=False)
class SensitivityQuery:
    """Gram matrix, support budget s, cone opening u, and norm q."""

    psi: np.ndarray
    s: int
    u: float
    q: str = "one"

    def __post_init__(self):
        psi = np.array(self.psi, dtype=float, copy=True)
        if psi.ndim != 2 or psi.shape[0] != psi.shape[1]:
            raise DimensionMismatchError(f"psi must be square, got shape {psi.shape}")
        if not np.isfinite(psi).all():
            raise InconsistentSpecError("psi contains non-finite entries")
        if np.max(np.abs(psi - psi.T), initial=0.0) > 1e-10:
            raise InconsistentSpecError("psi must be symmetric within 1e-10")
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)
        p = psi.shape[0]
        if not (1 <= int(self.s) <= p):
            raise InconsistentSpecError(f"s must lie in [1, {p}], got {self.s}")
        object.__setattr__(self, "s", int(self.s))
        if not (math.isfinite(self.u) and self.u > 0):
            raise InconsistentSpecError(f"u must be finite and positive, got {self.u}")
        object.__setattr__(self, "q", _normalize_q(self.q))

    @property
    def p(self) -> int:
        return self.psi.shape[0]


@dataclass(frozen=True, eq=False)
class SensitivityResult:
    """Minimum value with a witness vector and its support set."""

    kappa: float
    witness_delta: np.ndarray
    witness_J: tuple[int, ...]

    def __post_init__(self):
        wd = np.array(self.witness_delta, dtype=float, copy=True).reshape(-1)
        wd.setflags(write=False)
        object.__setattr__(self, "witness_delta", wd)
        object.__setattr__(self, "witness_J", tuple(int(j) for j in self.witness_J))
        if self.kappa < 0:
            raise InconsistentSpecError("kappa must be nonnegative")


def cone_membership(delta, J, u: float) -> bool:
    """True iff |delta_{J^c}|_1 <= u * |delta_J|_1 (with a 1e-12 relative slack).

    ``J`` is an iterable of zero-based coordinate indices.
    """
    delta = np.asarray(delta, dtype=float).reshape(-1)
    p = delta.shape[0]
    J = sorted({int(j) for j in J})
    if J and (J[0] < 0 or J[-1] >= p):
        raise IndexError(f"J contains indices outside [0, {p - 1}]")
    if u <= 0:
        raise InconsistentSpecError(f"u must be positive, got {u}")
    mask = np.zeros(p, dtype=bool)
    mask[J] = True
    abs_d = np.abs(delta)
    on = float(abs_d[mask].sum())
    off = float(abs_d[~mask].sum())
    return off <= u * on + 1e-12 * float(abs_d.sum())


def _cell_lp(psi_scaled, J_mask, sigma, u, q, anchor):
    """LP for one (support, orthant) cell; returns (delta, value) or None.

    Variables x = [delta, z]; minimize z subject to the sup-norm epigraph,
    the orthant, the cone row, and the q-normalization (an equality row).
    """
    p = psi_scaled.shape[0]
    d = p + 1
    c = np.zeros(d)
    c[p] = 1.0

    rows = [
        np.hstack([psi_scaled, -np.ones((p, 1))]),
        np.hstack([-psi_scaled, -np.ones((p, 1))]),
        np.hstack([-np.diag(sigma), np.zeros((p, 1))]),
    ]
    cone_row = np.where(J_mask, -u * sigma, sigma)
    rows.append(np.hstack([cone_row[None, :], np.zeros((1, 1))]))
    h = [np.zeros(p), np.zeros(p), np.zeros(p), np.zeros(1)]

    if q == "one":
        A_eq = np.hstack([sigma[None, :], np.zeros((1, 1))])
    else:
        rows.append(np.hstack([np.diag(sigma), np.zeros((p, 1))]))
        h.append(np.ones(p))
        A_eq = np.zeros((1, d))
        A_eq[0, anchor] = sigma[anchor]
    b_eq = np.ones(1)

    x, value, status = linear_program(
        c, np.vstack(rows), np.concatenate(h), A_eq=A_eq, b_eq=b_eq
    )
    if status == "infeasible":
        return None
    if status != "optimal" or x is None:
        raise SolverBackendError("sensitivity cell LP did not certify optimality")
    return x[:p], value


def kappa_bruteforce(qry: SensitivityQuery) -> SensitivityResult:
    """Exact sensitivity by support and sign-orthant enumeration.

    Only supports of size exactly min(s, p) are visited: enlarging J always
    enlarges the cone, so smaller supports cannot attain the minimum. The
    global sign flip (Delta, sigma) -> (-Delta, -sigma) maps cells onto each
    other, so the first coordinate's sign is fixed to +1. For q = inf the
    normalization |Delta|_inf = 1 is enforced one anchored coordinate at a
    time. The matrix is rescaled by its largest absolute entry before
    solving, making the result exactly positively homogeneous in Psi.
    """
    p = qry.p
    if p > MAX_P:
        raise DimensionCapError(
            f"kappa_bruteforce enumerates 2^p sign patterns; p={p} exceeds {MAX_P}"
        )
    k = min(qry.s, p)
    subsets = list(combinations(range(p), k))

    eta = float(np.max(np.abs(qry.psi)))
    if eta == 0.0:
        witness = np.zeros(p)
        witness[subsets[0][0]] = 1.0
        return SensitivityResult(0.0, witness, subsets[0])
    psi_scaled = qry.psi / eta

    best = None  # (scaled value, delta, J)
    anchors = range(p) if qry.q == "infinity" else (None,)
    for J in subsets:
        J_mask = np.zeros(p, dtype=bool)
        J_mask[list(J)] = True
        for bits in range(2 ** (p - 1)):
            sigma = np.ones(p)
            for j in range(1, p):
                if (bits >> (j - 1)) & 1:
                    sigma[j] = -1.0
            for anchor in anchors:
                out = _cell_lp(psi_scaled, J_mask, sigma, qry.u, qry.q, anchor)
                if out is None:
                    continue
                delta, value = out
                if best is None or value < best[0]:
                    best = (value, delta, J)

    if best is None:
        raise SolverBackendError("no sensitivity cell admitted a feasible point")
    value, delta, J = best
    kappa = eta * float(np.max(np.abs(psi_scaled @ delta)))
    _check_witness(qry, kappa, delta, J)
    return SensitivityResult(kappa, delta, J)


def _check_witness(qry, kappa, delta, J):
    """Witness must lie in the cone, be q-normalized, and attain kappa."""
    ok = cone_membership(delta, J, qry.u * (1 + 1e-9) + 1e-9)
    norm = (
        float(np.sum(np.abs(delta)))
        if qry.q == "one"
        else float(np.max(np.abs(delta)))
    )
    ok = ok and abs(norm - 1.0) <= 1e-7
    attained = float(np.max(np.abs(qry.psi @ delta)))
    ok = ok and abs(attained - kappa) <= 1e-8 * max(1.0, kappa)
    if not ok:
        raise SolverBackendError("sensitivity witness failed its own certificate")


def check_kappa_condition(qry: SensitivityQuery, c: float) -> bool:
    """True iff kappa_q(s, u) >= c * s^(-1/q), with s^(1/inf) read as 1.

    A 1e-9 absolute slack keeps boundary cases (kappa == threshold) stable
    under solver rounding.
    """
    if not (math.isfinite(c) and c > 0):
        raise InconsistentSpecError(f"c must be finite and positive, got {c}")
    kappa = kappa_bruteforce(qry).kappa
    threshold = c if qry.q == "infinity" else c / qry.s
    return kappa >= threshold - 1e-9
