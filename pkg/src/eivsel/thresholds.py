"""Deviation thresholds for the noise terms and the derived tuning constants.

Two groups of high-probability bounds drive the selectors' tuning. The first
group (``lemma1_thresholds``) bounds the sup-norms of the raw cross terms
between the design, the design noise, and the regression noise; the second
group (``lemma2_thresholds``) bounds the same quantities applied to a fixed
coefficient vector, which yields smaller constants. ``tuning_from_lemmas``
combines them into the penalty levels (mu, tau, beta), and
``simulation_tuning`` returns the simpler sigma-scaled rates used by the
Monte Carlo benchmark configurations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import EivselError, EmptyInputError

__all__ = [
    "DomainError",
    "NoiseConstants",
    "ThresholdSet",
    "compute_m2",
    "lemma1_thresholds",
    "lemma2_thresholds",
    "tuning_from_lemmas",
    "simulation_tuning",
]

# Floor keeping the Bernstein constants strictly positive when sigma or
# sigma_star is zero.
_TINY = np.finfo(float).tiny


class DomainError(EivselError):
    """A numeric argument lies outside its admissible range."""


@dataclass(frozen=True)
class NoiseConstants:
    """Noise scales and the constants of the deviation bounds.

    ``sigma`` is the regression-noise sub-gaussian parameter, ``sigma_star``
    the per-row design-noise parameter. ``gamma0, t0`` control the
    sub-exponential tail bound used for products of design-noise terms and
    ``gamma2, t2`` the analogous bound for the coefficient-weighted products.
    ``delta_bar`` is the almost-sure bound on the design-noise entries and
    ``b_eps`` the accuracy level of the diagonal second-moment estimates.
    """

    sigma: float
    sigma_star: float
    gamma0: float
    t0: float
    gamma2: float
    t2: float
    delta_bar: float = 0.0
    b_eps: float = 0.0

    def __post_init__(self):
        for name in ("sigma", "sigma_star", "delta_bar", "b_eps"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"{name} must be finite and nonnegative, got {v}")
        for name in ("gamma0", "t0", "gamma2", "t2"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0:
                raise DomainError(f"{name} must be finite and strictly positive, got {v}")

    @classmethod
    def from_sigmas(
        cls,
        sigma: float,
        sigma_star: float,
        delta_bar: float = 0.0,
        b_eps: float = 0.0,
    ) -> "NoiseConstants":
        """Default constants: variance proxy sigma*sigma_star for the raw
        cross terms and sigma_star**2 for the coefficient-weighted ones, with
        the scale parameter the reciprocal of the proxy (floored away from
        zero so the constants stay strictly positive)."""
        g0 = max(sigma * sigma_star, _TINY)
        g2 = max(sigma_star**2, _TINY)
        return cls(
            sigma=sigma,
            sigma_star=sigma_star,
            gamma0=g0,
            t0=1.0 / g0,
            gamma2=g2,
            t2=1.0 / g2,
            delta_bar=delta_bar,
            b_eps=b_eps,
        )


def compute_m2(X) -> float:
    """Largest column mean of squared entries, max_j (1/n) sum_i X_ij^2."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        raise EmptyInputError("compute_m2 requires a nonempty matrix")
    if X.ndim != 2:
        raise DomainError(f"X must be 2-d, got ndim={X.ndim}")
    return float(np.max(np.mean(X * X, axis=0)))


def _check_domain(n: int, p: int, eps: float) -> None:
    if not (0.0 < eps < 1.0):
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    if n < 1 or p < 1:
        raise DomainError(f"n and p must be >= 1, got n={n}, p={p}")


def _tail_threshold(gamma: float, t: float, n: int, N: float, eps: float) -> float:
    """max of the gaussian branch gamma*sqrt(2*log(N/eps)/n) and the
    exponential branch 2*log(N/eps)/(t*n)."""
    L = math.log(N / eps)
    # t can be astronomically large when a noise scale is zero (its floor
    # makes the rate 1/gamma); the exponential branch is then exactly zero.
    denom = float(t) * float(n)
    heavy = 0.0 if math.isinf(denom) else 2.0 * L / denom
    return max(gamma * math.sqrt(2.0 * L / n), heavy)


def lemma1_thresholds(
    nc: NoiseConstants, m2: float, n: int, p: int, eps: float
) -> tuple[float, float, float, float, float]:
    """Thresholds (delta1..delta5), each holding with probability >= 1-eps.

    delta1 bounds |X'W/n|_inf, delta2 bounds |X'xi/n|_inf, delta3 bounds
    |W'xi/n|_inf, delta4 the off-diagonal part of |W'W/n|_inf, and delta5
    the diagonal part around its mean; delta3 = delta5 by construction.
    """
    _check_domain(n, p, eps)
    if m2 < 0:
        raise DomainError(f"m2 must be nonnegative, got {m2}")
    delta1 = nc.sigma_star * math.sqrt(2.0 * m2 * math.log(2.0 * p * p / eps) / n)
    delta2 = nc.sigma * math.sqrt(2.0 * m2 * math.log(2.0 * p / eps) / n)
    delta3 = _tail_threshold(nc.gamma0, nc.t0, n, 2.0 * p, eps)
    delta5 = delta3
    if p > 1:
        delta4 = _tail_threshold(nc.gamma0, nc.t0, n, float(p) * (p - 1), eps)
    else:
        delta4 = 0.0  # no off-diagonal terms exist when p = 1
    return (delta1, delta2, delta3, delta4, delta5)


def lemma2_thresholds(
    nc: NoiseConstants, m2: float, n: int, p: int, eps: float
) -> tuple[float, float]:
    """Coefficient-weighted thresholds (delta1_prime, delta4_prime)."""
    _check_domain(n, p, eps)
    if m2 < 0:
        raise DomainError(f"m2 must be nonnegative, got {m2}")
    delta1p = nc.sigma_star * math.sqrt(2.0 * m2 * math.log(2.0 * p / eps) / n)
    delta4p = _tail_threshold(nc.gamma2, nc.t2, n, 2.0 * p, eps)
    return (delta1p, delta4p)


def tuning_from_lemmas(
    lemma1, lemma2, b_eps: float
) -> tuple[float, float, float]:
    """Penalty levels (mu, tau, beta) from the two threshold groups.

    ``lemma1`` is the 5-tuple from :func:`lemma1_thresholds`, ``lemma2`` the
    pair from :func:`lemma2_thresholds`. mu = delta1' + delta4',
    tau = delta2 + delta3, beta = b_eps + delta5.
    """
    delta1, delta2, delta3, delta4, delta5 = (float(v) for v in lemma1)
    delta1p, delta4p = (float(v) for v in lemma2)
    del delta1, delta4
    if b_eps < 0:
        raise DomainError(f"b_eps must be nonnegative, got {b_eps}")
    return (delta1p + delta4p, delta2 + delta3, b_eps + delta5)


def simulation_tuning(
    sigma: float, sigma_star_sq: float, n: int, p: int, eps: float
) -> tuple[float, float]:
    """Benchmark-grade rates: tau = sigma*sqrt(log(p/eps)/n) and
    b_eps = sigma_star_sq*sqrt(log(p/eps)/n)."""
    _check_domain(n, p, eps)
    root = math.sqrt(math.log(p / eps) / n)
    return (sigma * root, sigma_star_sq * root)


@dataclass(frozen=True)
class ThresholdSet:
    """All thresholds for one (n, p, eps, noise) configuration.

    Built by :meth:`compute`; carries the inputs m2 and eps, the five
    first-group thresholds, the two coefficient-weighted ones, and the
    derived penalties mu, tau, beta.
    """

    m2: float
    eps: float
    delta1: float
    delta2: float
    delta3: float
    delta4: float
    delta5: float
    delta1_prime: float
    delta4_prime: float
    mu: float
    tau: float
    beta: float

    def __post_init__(self):
        if self.delta3 != self.delta5:
            raise DomainError("delta3 and delta5 must be equal")
        if not math.isclose(self.mu, self.delta1_prime + self.delta4_prime,
                            rel_tol=0.0, abs_tol=1e-12):
            raise DomainError("mu must equal delta1_prime + delta4_prime")
        if not math.isclose(self.tau, self.delta2 + self.delta3,
                            rel_tol=0.0, abs_tol=1e-12):
            raise DomainError("tau must equal delta2 + delta3")
        for name in ("m2", "delta1", "delta2", "delta3", "delta4", "delta5",
                     "delta1_prime", "delta4_prime", "mu", "tau", "beta"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"{name} must be finite and nonnegative, got {v}")
        if not (0.0 < self.eps < 1.0):
            raise DomainError(f"eps must lie in (0, 1), got {self.eps}")

    @classmethod
    def compute(
        cls, nc: NoiseConstants, m2: float, n: int, p: int, eps: float
    ) -> "ThresholdSet":
        l1 = lemma1_thresholds(nc, m2, n, p, eps)
        l2 = lemma2_thresholds(nc, m2, n, p, eps)
        mu, tau, beta = tuning_from_lemmas(l1, l2, nc.b_eps)
        return cls(
            m2=m2,
            eps=eps,
            delta1=l1[0],
            delta2=l1[1],
            delta3=l1[2],
            delta4=l1[3],
            delta5=l1[4],
            delta1_prime=l2[0],
            delta4_prime=l2[1],
            mu=mu,
            tau=tau,
            beta=beta,
        )

    def to_kv_text(self) -> str:
        """Flat key-value block for embedding in experiment reports."""
        lines = []
        for name in ("m2", "eps", "delta1", "delta2", "delta3", "delta4",
                     "delta5", "delta1_prime", "delta4_prime", "mu", "tau",
                     "beta"):
            lines.append(f"{name} = {getattr(self, name):.17g}")
        return "\n".join(lines) + "\n"
