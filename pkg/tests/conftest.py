"""Shared fixtures and instance factories for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from eivsel.estimators import EstimatorSpec, build_program
from eivsel.model import EivDataset, EstimatorKind
from eivsel.solver import SolverOptions

SHAPE_TAGS = (
    "dantzig",
    "mu",
    "compensated_mu",
    "conic",
    "l1l2linf_mu",
    "l1l2linf_cmu",
)


@pytest.fixture
def opts():
    return SolverOptions()


def make_dataset(rng, n=40, p=3, theta_scale=0.3, sigma=0.08,
                 sigma_star=0.25, with_x=True):
    """Small synthetic errors-in-variables dataset for solver-level tests."""
    X = rng.normal(size=(n, p))
    theta = theta_scale * rng.uniform(-1.0, 1.0, size=p)
    y = X @ theta + sigma * rng.normal(size=n)
    Z = X + sigma_star * rng.normal(size=(n, p))
    return EivDataset(y=y, Z=Z, X=X if with_x else None, theta_star=theta)


def random_spec(rng, tag, safeguards=False):
    """Estimator tuning draw with constants in realistic simulation ranges."""
    lam = float(rng.uniform(0.3, 1.2))
    nu = float(rng.uniform(0.3, 1.2))
    mu = float(rng.uniform(0.01, 0.15))
    tau = float(rng.uniform(0.01, 0.25))
    beta = float(rng.uniform(0.0, 0.15))
    delta_bar = float(rng.uniform(0.0, 0.35))
    d_hat = float(rng.uniform(0.0, 0.1))
    kind = EstimatorKind(tag, safeguards=safeguards)
    if tag == "dantzig":
        return EstimatorSpec(kind=kind, tau=tau)
    if tag == "mu":
        return EstimatorSpec(kind=kind, mu=mu, tau=tau)
    if tag == "compensated_mu":
        return EstimatorSpec(kind=kind, mu=mu, tau=tau, d_hat=d_hat)
    if tag == "conic":
        return EstimatorSpec(kind=kind, lam=lam, mu=mu, tau=tau, d_hat=d_hat)
    if tag == "l1l2linf_mu":
        return EstimatorSpec(kind=kind, lam=lam, nu=nu, mu=mu, tau=tau,
                             delta_bar=delta_bar)
    return EstimatorSpec(kind=kind, lam=lam, nu=nu, mu=mu, tau=tau,
                         beta=beta, d_hat=d_hat)


def random_program(rng, tag=None, safeguards=False, p=None):
    """Random solver instance built exactly the way the estimators build one."""
    if tag is None:
        tag = SHAPE_TAGS[int(rng.integers(len(SHAPE_TAGS)))]
    if p is None:
        p = int(rng.integers(1, 4))
    d = make_dataset(rng, n=40, p=p)
    spec = random_spec(rng, tag, safeguards=safeguards)
    return build_program(spec, d)
