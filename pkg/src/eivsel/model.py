"""Shared domain types for estimation with a noisily observed design.

The core objects are :class:`EivDataset` (response ``y``, observed design
``Z``, and optionally the latent design ``X`` plus the generating
coefficients), :class:`ThetaSet` (the convex parameter set, all of R^p or an
axis-aligned box), :class:`Solution` (an estimate with its certificates), and
:class:`EstimatorKind` (which selector variant a spec refers to).

All types are immutable after construction; stored arrays are marked
read-only so instances can be shared freely across worker processes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EivselError",
    "DimensionMismatchError",
    "NonFiniteError",
    "InconsistentSpecError",
    "MissingDesignError",
    "EmptyInputError",
    "EivDataset",
    "ThetaSet",
    "Solution",
    "EstimatorKind",
    "ESTIMATOR_TAGS",
    "SOLUTION_STATUSES",
    "validate_dataset",
    "load_dataset_csv",
]


class EivselError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(EivselError):
    """Array shapes are inconsistent; the message names the offending field."""


class NonFiniteError(EivselError):
    """An input contains NaN or infinity; the message gives the location."""


class InconsistentSpecError(EivselError):
    """An estimator or program specification contradicts itself."""


class MissingDesignError(EivselError):
    """The true design X was requested but is not present in the dataset."""


class EmptyInputError(EivselError):
    """An operation received an empty matrix or an empty collection."""


def _frozen_array(x, dtype=float) -> np.ndarray:
    a = np.array(x, dtype=dtype, order="C", copy=True)
    a.setflags(write=False)
    return a


def _first_nonfinite(a: np.ndarray):
    """Index tuple of the first non-finite entry, or None."""
    bad = ~np.isfinite(a)
    if not bad.any():
        return None
    flat = int(np.flatnonzero(bad)[0])
    return np.unravel_index(flat, a.shape)


@dataclass(frozen=True, eq=False)
class EivDataset:
    """Observed response and design, with optional simulation ground truth.

    Parameters
    ----------
    y : array, shape (n,)
        Response vector.
    Z : array, shape (n, p)
        Observed (noise-contaminated) design matrix.
    X : array, shape (n, p), optional
        True design matrix; available in simulations and used only by
        benchmarks and diagnostics.
    theta_star : array, shape (p,), optional
        Generating coefficient vector; simulations only.
    """

    y: np.ndarray
    Z: np.ndarray
    X: np.ndarray | None = None
    theta_star: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "y", _frozen_array(self.y).reshape(-1))
        z = _frozen_array(self.Z)
        if z.ndim != 2:
            raise DimensionMismatchError(f"Z must be a 2-d matrix, got ndim={z.ndim}")
        object.__setattr__(self, "Z", z)
        if self.X is not None:
            object.__setattr__(self, "X", _frozen_array(self.X))
        if self.theta_star is not None:
            object.__setattr__(
                self, "theta_star", _frozen_array(self.theta_star).reshape(-1)
            )

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    @property
    def p(self) -> int:
        return self.Z.shape[1]


def validate_dataset(d: EivDataset) -> EivDataset:
    """Check all dataset invariants and return the dataset unchanged.

    Raises
    ------
    DimensionMismatchError
        If shapes disagree (the message names the offending field).
    NonFiniteError
        If any entry is NaN or infinite (the message gives its location).
    """
    n, p = d.Z.shape
    if n < 1 or p < 1:
        raise DimensionMismatchError(f"Z must be nonempty, got shape {d.Z.shape}")
    if d.y.shape != (n,):
        raise DimensionMismatchError(
            f"y has length {d.y.shape[0]} but Z has {n} rows"
        )
    if d.X is not None and d.X.shape != (n, p):
        raise DimensionMismatchError(
            f"X has shape {d.X.shape} but Z has shape {(n, p)}"
        )
    if d.theta_star is not None and d.theta_star.shape != (p,):
        raise DimensionMismatchError(
            f"theta_star has length {d.theta_star.shape[0]} but Z has {p} columns"
        )
    for name in ("y", "Z", "X", "theta_star"):
        a = getattr(d, name)
        if a is None:
            continue
        loc = _first_nonfinite(a)
        if loc is not None:
            pretty = loc[0] if len(loc) == 1 else tuple(int(i) for i in loc)
            raise NonFiniteError(f"non-finite value in {name} at {pretty}")
    return d


_THETA_KINDS = frozenset({"all_of_Rp", "box"})


@dataclass(frozen=True, eq=False)
class ThetaSet:
    """Convex parameter set: all of R^p or an axis-aligned box.

    Box bounds may contain ``-inf``/``+inf`` entries for one-sided
    constraints; ``lower <= upper`` must hold componentwise, which also
    guarantees the set is nonempty.
    """

    kind: str = "all_of_Rp"
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in _THETA_KINDS:
            raise InconsistentSpecError(f"unknown ThetaSet kind {self.kind!r}")
        if self.kind == "all_of_Rp":
            if self.lower is not None or self.upper is not None:
                raise InconsistentSpecError("all_of_Rp carries no bounds")
            return
        if self.lower is None or self.upper is None:
            raise InconsistentSpecError("box ThetaSet requires lower and upper")
        lo = _frozen_array(self.lower).reshape(-1)
        hi = _frozen_array(self.upper).reshape(-1)
        if lo.shape != hi.shape:
            raise DimensionMismatchError(
                f"box bounds disagree in length: {lo.shape[0]} vs {hi.shape[0]}"
            )
        if np.isnan(lo).any() or np.isnan(hi).any():
            raise NonFiniteError("box bounds must not contain NaN")
        if not (lo <= hi).all():
            raise InconsistentSpecError("box requires lower <= upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def reals(cls) -> "ThetaSet":
        return cls("all_of_Rp")

    @classmethod
    def box(cls, lower, upper) -> "ThetaSet":
        return cls("box", lower, upper)

    @property
    def is_box(self) -> bool:
        return self.kind == "box"

    def contains(self, theta, tol: float = 0.0) -> bool:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if not self.is_box:
            return True
        if theta.shape != self.lower.shape:
            raise DimensionMismatchError(
                f"theta has length {theta.shape[0]}, bounds have {self.lower.shape[0]}"
            )
        return bool(
            (theta >= self.lower - tol).all() and (theta <= self.upper + tol).all()
        )

    def project(self, theta) -> np.ndarray:
        """Closest point of the set (componentwise clip for a box)."""
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if not self.is_box:
            return theta.copy()
        return np.clip(theta, self.lower, self.upper)


ESTIMATOR_TAGS = frozenset(
    {"dantzig", "mu", "compensated_mu", "conic", "l1l2linf_mu", "l1l2linf_cmu"}
)

# Variants whose program carries auxiliary (t, u) variables; only these may
# enable the safeguard constraints.
_AUXILIARY_TAGS = frozenset({"conic", "l1l2linf_mu", "l1l2linf_cmu"})


@dataclass(frozen=True)
class EstimatorKind:
    """Selector variant tag plus the safeguard switch.

    Tags
    ----
    dantzig
        L1 minimization under a plain sup-norm residual constraint.
    mu
        Residual slack grows with ``mu * |theta|_1``.
    compensated_mu
        Same, with the diagonal correction ``d_hat`` removing the bias of
        using ``Z'Z`` in place of ``X'X``.
    conic
        Objective ``|theta|_1 + lambda*t`` with ``|theta|_2 <= t`` and
        residual slack ``mu*t``; diagonal correction applied.
    l1l2linf_mu
        Adds ``nu*u`` with ``|theta|_inf <= u`` and slack
        ``mu*t + delta_bar^2*u``; no diagonal correction.
    l1l2linf_cmu
        Same shape with the diagonal correction and slack
        ``mu*t + beta*u``.
    """

    tag: str
    safeguards: bool = False

    def __post_init__(self):
        if self.tag not in ESTIMATOR_TAGS:
            raise InconsistentSpecError(f"unknown estimator tag {self.tag!r}")
        if self.safeguards and self.tag not in _AUXILIARY_TAGS:
            raise InconsistentSpecError(
                f"safeguards require auxiliary (t, u) variables; {self.tag!r} has none"
            )

    @property
    def compensated(self) -> bool:
        return self.tag in ("compensated_mu", "conic", "l1l2linf_cmu")

    @property
    def has_t(self) -> bool:
        return self.tag in _AUXILIARY_TAGS

    @property
    def has_u(self) -> bool:
        return self.tag in ("l1l2linf_mu", "l1l2linf_cmu")


SOLUTION_STATUSES = frozenset(
    {"optimal", "infeasible", "max_iterations", "numerical_failure"}
)


@dataclass(frozen=True, eq=False)
class Solution:
    """Solver output: the estimate, auxiliary variables, and certificates.

    ``feasibility_residual`` is the recomputed maximum constraint violation
    of the returned point; ``optimality_gap`` is a certified bound on the
    objective's suboptimality. For ``status='infeasible'`` the point fields
    are placeholders (zeros) and ``objective`` is ``inf``.
    """

    theta_hat: np.ndarray
    t_hat: float
    u_hat: float
    objective: float
    status: str
    feasibility_residual: float
    optimality_gap: float
    iterations: int

    def __post_init__(self):
        if self.status not in SOLUTION_STATUSES:
            raise InconsistentSpecError(f"unknown solution status {self.status!r}")
        object.__setattr__(self, "theta_hat", _frozen_array(self.theta_hat).reshape(-1))
        object.__setattr__(self, "t_hat", float(self.t_hat))
        object.__setattr__(self, "u_hat", float(self.u_hat))
        if self.t_hat < 0 or self.u_hat < 0:
            raise InconsistentSpecError("t_hat and u_hat must be nonnegative")
        if self.feasibility_residual < 0:
            raise InconsistentSpecError("feasibility_residual must be nonnegative")
        if self.optimality_gap < 0:
            raise InconsistentSpecError("optimality_gap must be nonnegative")


def load_dataset_csv(path, true_design_path=None) -> EivDataset:
    """Read a dataset from CSV: first column y, remaining columns Z.

    A header row is required. ``true_design_path`` may point to a companion
    file holding X in the same p-column layout (also with a header row).
    Parse failures report the file name and 1-based line number.
    """

    def read_rows(fname):
        rows = []
        width = None
        with open(fname, newline="") as fh:
            reader = csv.reader(fh)
            for lineno, row in enumerate(reader, start=1):
                if lineno == 1:
                    width = len(row)
                    continue  # header row
                if not row:
                    continue
                if len(row) != width:
                    raise EivselError(
                        f"{fname}: line {lineno}: expected {width} fields, got {len(row)}"
                    )
                try:
                    rows.append([float(v) for v in row])
                except ValueError as exc:
                    raise EivselError(f"{fname}: line {lineno}: {exc}") from exc
        if not rows:
            raise EmptyInputError(f"{fname}: no data rows")
        return np.asarray(rows, dtype=float)

    table = read_rows(path)
    if table.shape[1] < 2:
        raise DimensionMismatchError(
            f"{path}: need at least two columns (y plus one design column)"
        )
    y, Z = table[:, 0], table[:, 1:]
    X = None
    if true_design_path is not None:
        X = read_rows(true_design_path)
        if X.shape != Z.shape:
            raise DimensionMismatchError(
                f"{true_design_path}: X has shape {X.shape} but Z has shape {Z.shape}"
            )
    return validate_dataset(EivDataset(y=y, Z=Z, X=X))
