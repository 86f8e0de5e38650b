"""Build selector programs for each estimator variant.

An :class:`EstimatorSpec` names a variant (see
:class:`~eivsel.model.EstimatorKind`) together with its tuning constants;
:func:`build_program` transcribes it, for a given dataset, into the unified
:class:`~eivsel.solver.SelectorProgram`, and :func:`estimate` composes that
with the solver. All variants share the moment vector r = Z'y/n and the
operator A = Z'Z/n (minus the diagonal correction ``d_hat`` for the
compensated ones); the benchmark Dantzig variant may use the true design X
instead of Z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    EivDataset,
    EstimatorKind,
    InconsistentSpecError,
    MissingDesignError,
    Solution,
    ThetaSet,
    validate_dataset,
)
from .solver import SelectorProgram, SolverOptions, solve

__all__ = [
    "EstimatorSpec",
    "build_program",
    "estimate",
    "default_label",
]

_REALS = ThetaSet.reals()
_DESIGN_SOURCES = ("use_Z", "use_X")


@dataclass(frozen=True, eq=False)
class EstimatorSpec:
    """One estimator variant with its tuning constants.

    Fields irrelevant to the chosen kind are ignored: the plain Dantzig
    variant uses only ``tau``; the mu variants use (``mu``, ``tau``); the
    conic variant uses (``mu``, ``tau``, ``lam``); the sup-norm-regularized
    variants additionally use ``nu`` plus ``delta_bar`` (uncompensated) or
    ``beta`` (compensated). ``d_hat`` holds the diagonal second-moment
    correction (scalar broadcast or length-p vector) and is required by the
    compensated kinds. ``design_source='use_X'`` is valid only for the
    Dantzig benchmark. ``label`` overrides the auto-generated name used in
    reports.
    """

    kind: EstimatorKind
    lam: float = 0.0
    nu: float = 0.0
    mu: float = 0.0
    tau: float = 0.0
    beta: float = 0.0
    delta_bar: float = 0.0
    d_hat: float | np.ndarray | None = None
    theta_set: ThetaSet = field(default=_REALS)
    design_source: str = "use_Z"
    label: str = ""

    def __post_init__(self):
        for name in ("lam", "nu", "mu", "tau", "beta", "delta_bar"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise InconsistentSpecError(
                    f"{name} must be finite and nonnegative, got {v}"
                )
            object.__setattr__(self, name, v)
        if self.design_source not in _DESIGN_SOURCES:
            raise InconsistentSpecError(
                f"design_source must be one of {_DESIGN_SOURCES}, "
                f"got {self.design_source!r}"
            )
        if self.design_source == "use_X" and self.kind.tag != "dantzig":
            raise InconsistentSpecError(
                "design_source='use_X' is only valid for the dantzig benchmark"
            )
        if self.d_hat is not None:
            if np.isscalar(self.d_hat):
                d = float(self.d_hat)
                if not math.isfinite(d) or d < 0:
                    raise InconsistentSpecError(
                        f"d_hat must be nonnegative, got {d}"
                    )
                object.__setattr__(self, "d_hat", d)
            else:
                d = np.array(self.d_hat, dtype=float, copy=True).reshape(-1)
                if not np.isfinite(d).all() or (d < 0).any():
                    raise InconsistentSpecError(
                        "d_hat entries must be finite and nonnegative"
                    )
                d.setflags(write=False)
                object.__setattr__(self, "d_hat", d)


def default_label(spec: EstimatorSpec) -> str:
    """Short report name derived from the kind and tuning constants."""
    tag = spec.kind.tag
    if tag == "dantzig":
        return "dantzig_x" if spec.design_source == "use_X" else "dantzig_z"
    if tag == "mu":
        return "mu"
    if tag == "compensated_mu":
        return "cmu"
    if tag == "conic":
        return f"conic({spec.lam:g})"
    star = "*" if spec.kind.safeguards else ""
    base = "l1l2linf" if tag == "l1l2linf_cmu" else "l1l2linf_mu"
    return f"{base}{star}({spec.lam:g},{spec.nu:g})"


def _resolve_d_hat(spec: EstimatorSpec, p: int) -> np.ndarray:
    if spec.d_hat is None:
        raise InconsistentSpecError(
            f"estimator kind {spec.kind.tag!r} requires d_hat "
            "(use zeros for no correction)"
        )
    if np.isscalar(spec.d_hat):
        return np.full(p, float(spec.d_hat))
    d = np.asarray(spec.d_hat, dtype=float).reshape(-1)
    if d.shape[0] != p:
        raise InconsistentSpecError(
            f"d_hat has length {d.shape[0]}, dataset has p={p}"
        )
    return d


def build_program(spec: EstimatorSpec, d: EivDataset) -> SelectorProgram:
    """Transcribe the estimator into its cone program for this dataset."""
    d = validate_dataset(d)
    tag = spec.kind.tag

    design = d.Z
    if tag == "dantzig" and spec.design_source == "use_X":
        if d.X is None:
            raise MissingDesignError(
                "design_source='use_X' requires the dataset to carry X"
            )
        design = d.X
    n = d.n
    psi = (design.T @ design) / n
    r = (design.T @ d.y) / n

    common = dict(r=r, tau=spec.tau, theta_set=spec.theta_set)

    if tag == "dantzig":
        return SelectorProgram(A=psi, **common)

    if tag == "mu":
        return SelectorProgram(A=psi, mu_1=spec.mu, **common)

    if tag == "compensated_mu":
        A = psi - np.diag(_resolve_d_hat(spec, d.p))
        return SelectorProgram(A=A, mu_1=spec.mu, **common)

    if tag == "conic":
        A = psi - np.diag(_resolve_d_hat(spec, d.p))
        if spec.lam == 0:
            # Degenerate request: without the t term the slack mu*t is
            # meaningless, so only the plain constraint shape survives.
            if spec.mu != 0:
                raise InconsistentSpecError("conic with lam = 0 requires mu = 0")
            if spec.kind.safeguards:
                raise InconsistentSpecError(
                    "conic with lam = 0 has no auxiliary variables to safeguard"
                )
            return SelectorProgram(A=A, **common)
        return SelectorProgram(
            A=A,
            mu_t=spec.mu,
            lam=spec.lam,
            use_t_cone=True,
            safeguards=spec.kind.safeguards,
            **common,
        )

    if tag in ("l1l2linf_mu", "l1l2linf_cmu"):
        if spec.lam <= 0 or spec.nu <= 0:
            raise InconsistentSpecError(
                f"{tag} requires strictly positive lam and nu"
            )
        if tag == "l1l2linf_mu":
            A = psi
            mu_u = spec.delta_bar**2
        else:
            A = psi - np.diag(_resolve_d_hat(spec, d.p))
            mu_u = spec.beta
        return SelectorProgram(
            A=A,
            mu_t=spec.mu,
            mu_u=mu_u,
            lam=spec.lam,
            nu=spec.nu,
            use_t_cone=True,
            use_u_cone=True,
            safeguards=spec.kind.safeguards,
            **common,
        )

    raise InconsistentSpecError(f"unhandled estimator tag {tag!r}")


def estimate(
    spec: EstimatorSpec, d: EivDataset, opts: SolverOptions = SolverOptions()
) -> Solution:
    """Build the program and solve it."""
    return solve(build_program(spec, d), opts)
