"""Tour of the estimator family on one noisy-design dataset.

Generates a sparse regression problem whose design is only observed through
an additive-noise copy, then fits the whole estimator family on the same
data: the oracle constraint selector on the true design, its naive twin on
the noisy design, the l1-scaled and bias-compensated variants, and the
two-cone forms that track the l2 and sup norms of the candidate. Prints the
estimation error of each fit so the effect of compensation and of the extra
norm channels is visible side by side.

Run: python3 demos/fit_tour.py
"""

import math

import numpy as np

from eivsel import (
    EivDataset,
    EstimatorKind,
    EstimatorSpec,
    default_label,
    estimate,
    simulation_tuning,
)


def make_dataset(rng, n=300, p=10, sigma=0.128, sigma_star_sq=0.5):
    theta = np.zeros(p)
    theta[:5] = 1.25
    X = rng.standard_normal((n, p))
    W = math.sqrt(sigma_star_sq) * rng.standard_normal((n, p))
    y = X @ theta + sigma * rng.standard_normal(n)
    return EivDataset(y=y, Z=X + W, X=X, theta_star=theta)


def roster(n, p, sigma=0.128, sigma_star_sq=0.5, eps=0.05):
    tau, b_eps = simulation_tuning(sigma, sigma_star_sq, n, p, eps)
    sigma_star = math.sqrt(sigma_star_sq)
    rate = math.sqrt(math.log(p / eps) / n)
    mu_l1 = sigma_star * rate
    mu_t = sigma * sigma_star * rate
    mu_u = mu_l1 + sigma * sigma_star * math.sqrt(2 * math.log(2 * p / eps) / n)
    d_hat = sigma_star_sq

    specs = [
        EstimatorSpec(kind=EstimatorKind("dantzig"), tau=tau,
                      design_source="use_X"),
        EstimatorSpec(kind=EstimatorKind("dantzig"), tau=tau),
        EstimatorSpec(kind=EstimatorKind("mu"), mu=mu_l1, tau=tau),
        EstimatorSpec(kind=EstimatorKind("compensated_mu"), mu=mu_l1, tau=tau,
                      d_hat=d_hat),
        EstimatorSpec(kind=EstimatorKind("conic"), lam=1.0, mu=mu_l1 + b_eps,
                      tau=tau, d_hat=d_hat),
        EstimatorSpec(kind=EstimatorKind("l1l2linf_cmu"), lam=1.0, nu=1.0,
                      mu=mu_t, tau=tau, beta=mu_u, d_hat=d_hat),
        EstimatorSpec(kind=EstimatorKind("l1l2linf_cmu", safeguards=True),
                      lam=0.25, nu=0.25, mu=mu_t, tau=tau, beta=mu_u,
                      d_hat=d_hat),
    ]
    return specs


def main():
    rng = np.random.default_rng(7)
    d = make_dataset(rng)
    print(f"dataset: n={d.n}, p={d.p}, true support size 5, |theta*|_2 = "
          f"{np.linalg.norm(d.theta_star):.4f}")
    print()
    header = f"{'estimator':24s} {'status':9s} {'l2 error':>9s} " \
             f"{'l1 mass':>8s} {'t_hat':>7s} {'u_hat':>7s}"
    print(header)
    print("-" * len(header))
    for spec in roster(d.n, d.p):
        sol = estimate(spec, d)
        err = np.linalg.norm(sol.theta_hat - d.theta_star)
        mass = np.sum(np.abs(sol.theta_hat))
        print(f"{default_label(spec):24s} {sol.status:9s} {err:9.4f} "
              f"{mass:8.4f} {sol.t_hat:7.4f} {sol.u_hat:7.4f}")
    print()
    print("The naive constraint selector ignores the design noise and keeps")
    print("a visible bias; compensation shrinks it, and the two-cone form")
    print("with the channel-priced slacks recovers the support most tightly")
    print("at these penalties.")


if __name__ == "__main__":
    main()
