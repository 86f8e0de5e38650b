"""Command line front end.

Three subcommands: ``fit`` runs one estimator on a CSV dataset, ``simulate``
runs a replicated experiment described by a config file, and ``sensitivity``
computes cone-restricted sensitivities of a Gram matrix. Numeric output is
fixed at 7 significant digits. Exit codes: 0 on success (for ``fit``, an
optimal solve), 2 when ``fit`` proves infeasibility, 1 on any error
including usage errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import re
import sys
import time
from configparser import ConfigParser
from dataclasses import asdict, dataclass, replace
from importlib import resources

import numpy as np

from . import __version__
from .estimators import EstimatorSpec, default_label, estimate
from .model import (
    ESTIMATOR_TAGS,
    EivselError,
    EstimatorKind,
    ThetaSet,
    load_dataset_csv,
)
from .sensitivity import SensitivityQuery, check_kappa_condition, kappa_bruteforce
from .simlab import (
    SimConfig,
    benchmark_tuning,
    metrics_csv_text,
    run_experiment,
)
from .solver import SolverOptions

__all__ = ["RunManifest", "main", "cmd_fit", "cmd_simulate", "cmd_sensitivity"]

_BUNDLED_CONFIGS = (
    "table1_p10",
    "table1_p50",
    "table2_p100",
    "table2_p300",
    "table3",
    "table3_p50",
    "table4",
    "table4_p300",
)

_SIGNAL_VALUE = 1.25
_SIGNAL_SUPPORT = 5


class ConfigError(EivselError):
    """A config file is invalid; the message lists every violated field."""


@dataclass(frozen=True)
class RunManifest:
    """Provenance record written next to every simulation output."""

    config_hash: str
    tool_version: str
    master_seed: int
    timestamp: str
    output_paths: list


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fmt(v: float) -> str:
    return f"{float(v):.7g}"


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="eivsel",
        description="Sparse regression with noisy designs: fit selectors, "
        "run replicated experiments, query Gram-matrix sensitivities.",
    )
    parser.add_argument("--version", action="version", version=f"eivsel {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    fit = sub.add_parser(
        "fit",
        help="fit one estimator on a CSV dataset (first column y, rest Z)",
        description="Fit one estimator on a CSV dataset whose first column "
        "is the response and remaining columns the observed design. With "
        "--out, writes a key-value report to OUT and the coefficients to "
        "OUT.coefficients.csv.",
    )
    fit.add_argument("--data", required=True, help="dataset CSV (header row required)")
    fit.add_argument(
        "--true-design",
        help="optional CSV with the noise-free design (same layout, no y column)",
    )
    fit.add_argument(
        "--estimator",
        required=True,
        choices=sorted(ESTIMATOR_TAGS) + ["dantzig_x"],
        help="estimator kind; dantzig_x is dantzig run on the true design",
    )
    fit.add_argument("--lambda", dest="lam", type=float, default=0.0,
                     help="weight of the l2 bound variable t")
    fit.add_argument("--nu", type=float, default=0.0,
                     help="weight of the sup-norm bound variable u")
    fit.add_argument("--mu", type=float, default=0.0,
                     help="residual slack per unit of t (or of |theta|_1)")
    fit.add_argument("--tau", type=float, default=0.0,
                     help="constant residual slack")
    fit.add_argument("--beta", type=float, default=0.0,
                     help="residual slack per unit of u (compensated kinds)")
    fit.add_argument("--delta-bar", dest="delta_bar", type=float, default=0.0,
                     help="design-noise magnitude bound; its square scales u")
    fit.add_argument("--dhat", default=None,
                     help="diagonal correction: scalar or CSV of p values")
    fit.add_argument("--safeguards", action="store_true",
                     help="add t <= w and u <= w with w the l1 surrogate")
    fit.add_argument("--theta-lower", default=None,
                     help="box lower bound: scalar or comma list of p values")
    fit.add_argument("--theta-upper", default=None,
                     help="box upper bound: scalar or comma list of p values")
    fit.add_argument("--out", default=None, help="report path")
    fit.set_defaults(func=cmd_fit)

    sim = sub.add_parser(
        "simulate",
        help="run a replicated experiment from a config file",
        description="Run a replicated experiment. CONFIG is a bundled name "
        f"({', '.join(_BUNDLED_CONFIGS)}) or a path to an INI file with "
        "sections [sim], [estimators.N], [solver]. The environment variable "
        "EIV_SEED overrides master_seed.",
    )
    sim.add_argument("--config", required=True,
                     help="bundled config name or path to an INI file")
    sim.add_argument("--out", required=True, help="metrics CSV path")
    sim.add_argument("--jobs", type=int, default=1,
                     help="parallel replications (default 1); results do not "
                     "depend on this value")
    sim.set_defaults(func=cmd_simulate)

    sens = sub.add_parser(
        "sensitivity",
        help="compute the cone-restricted sensitivity of a Gram matrix",
        description="Compute kappa_q(s, u), the minimum of |Psi d|_inf over "
        "q-normalized vectors d whose off-support l1 mass is at most u "
        "times the on-support mass, minimized over supports of size s.",
    )
    sens.add_argument("--gram", required=True,
                      help="CSV holding the square symmetric matrix")
    sens.add_argument("--s", type=int, required=True, help="support size")
    sens.add_argument("--u", type=float, required=True, help="cone opening")
    sens.add_argument("--q", choices=["1", "inf"], default="1",
                      help="normalization norm (default 1)")
    sens.add_argument("--check-c", dest="check_c", type=float, default=None,
                      help="also test kappa >= C * s^(-1/q) for this C")
    sens.set_defaults(func=cmd_sensitivity)

    return parser


def _parse_bound(text: str, p: int, name: str) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise EivselError(f"{name}: cannot parse {text!r}") from exc
    if len(vals) == 1:
        return np.full(p, vals[0])
    if len(vals) != p:
        raise EivselError(f"{name} lists {len(vals)} values, dataset has p={p}")
    return np.asarray(vals, dtype=float)


def _parse_dhat(text: str):
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return np.loadtxt(text, delimiter=",", ndmin=1)
    except OSError as exc:
        raise EivselError(f"--dhat: {text!r} is neither a number nor a readable "
                          "CSV file") from exc


def cmd_fit(args) -> int:
    d = load_dataset_csv(args.data, true_design_path=args.true_design)

    tag = args.estimator
    design_source = "use_Z"
    if tag == "dantzig_x":
        tag, design_source = "dantzig", "use_X"
    kind = EstimatorKind(tag, safeguards=args.safeguards)

    theta_set = ThetaSet.reals()
    if args.theta_lower is not None or args.theta_upper is not None:
        lower = (
            _parse_bound(args.theta_lower, d.p, "--theta-lower")
            if args.theta_lower is not None
            else np.full(d.p, -np.inf)
        )
        upper = (
            _parse_bound(args.theta_upper, d.p, "--theta-upper")
            if args.theta_upper is not None
            else np.full(d.p, np.inf)
        )
        theta_set = ThetaSet.box(lower, upper)

    spec = EstimatorSpec(
        kind=kind,
        lam=args.lam,
        nu=args.nu,
        mu=args.mu,
        tau=args.tau,
        beta=args.beta,
        delta_bar=args.delta_bar,
        d_hat=_parse_dhat(args.dhat) if args.dhat is not None else None,
        theta_set=theta_set,
        design_source=design_source,
    )
    sol = estimate(spec, d)

    lines = [
        f"estimator = {default_label(spec)}",
        f"n = {d.n}",
        f"p = {d.p}",
        f"status = {sol.status}",
        f"objective = {_fmt(sol.objective)}",
        f"t_hat = {_fmt(sol.t_hat)}",
        f"u_hat = {_fmt(sol.u_hat)}",
        f"feasibility_residual = {_fmt(sol.feasibility_residual)}",
        f"optimality_gap = {_fmt(sol.optimality_gap)}",
        f"iterations = {sol.iterations}",
    ]
    report = "\n".join(lines) + "\n"
    sys.stdout.write(report)

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report)
        coef_path = args.out + ".coefficients.csv"
        with open(coef_path, "w", encoding="utf-8") as fh:
            fh.write("index,coefficient\n")
            for j, v in enumerate(sol.theta_hat):
                fh.write(f"{j},{_fmt(v)}\n")

    if sol.status == "optimal":
        return 0
    if sol.status == "infeasible":
        return 2
    return 1


def _config_text(name_or_path: str) -> str:
    if name_or_path in _BUNDLED_CONFIGS:
        ref = resources.files("eivsel").joinpath("configs", name_or_path + ".cfg")
        return ref.read_text(encoding="utf-8")
    if os.path.exists(name_or_path):
        with open(name_or_path, "r", encoding="utf-8") as fh:
            return fh.read()
    raise ConfigError(
        f"config {name_or_path!r} is neither a file nor a bundled name "
        f"(bundled: {', '.join(_BUNDLED_CONFIGS)})"
    )


def _config_hash(cp: ConfigParser) -> str:
    canon = {
        section: {k: v.strip() for k, v in sorted(cp.items(section))}
        for section in sorted(cp.sections())
    }
    blob = json.dumps(canon, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


_AUTO_KEYS = ("mu", "tau", "beta", "dhat")


def _build_simulation(cp: ConfigParser):
    """Parse a config into (SimConfig, estimator specs, solver options).

    All field-level violations are collected and reported together.
    """
    errors: list[str] = []

    def take(section, key, conv, required=False, default=None):
        if not cp.has_option(section, key):
            if required:
                errors.append(f"[{section}] missing required key {key!r}")
            return default
        raw = cp.get(section, key)
        try:
            return conv(raw)
        except (ValueError, ConfigError) as exc:
            errors.append(f"[{section}] {key} = {raw!r}: {exc}")
            return default

    def as_bool(raw):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")

    def as_float_or_auto(raw):
        if raw.strip().lower() == "auto":
            return "auto"
        return float(raw)

    if not cp.has_section("sim"):
        raise ConfigError("missing [sim] section")

    n = take("sim", "n", int, required=True)
    p = take("sim", "p", int, required=True)
    R = take("sim", "R", int, required=True)
    rho = take("sim", "rho", float, required=True)
    sigma = take("sim", "sigma", float, required=True)
    sigma_star_sq = take("sim", "sigma_star_sq", float, required=True)
    eps = take("sim", "eps", float, required=True)
    master_seed = take("sim", "master_seed", int, required=True)
    theta_star = take(
        "sim",
        "theta_star",
        lambda raw: np.asarray([float(v) for v in raw.split(",")]),
    )

    est_sections = []
    for section in cp.sections():
        m = re.fullmatch(r"estimators\.(\d+)", section)
        if m:
            est_sections.append((int(m.group(1)), section))
    est_sections.sort()
    if not est_sections:
        errors.append("no [estimators.N] sections found")

    raw_specs = []
    for _, section in est_sections:
        entry = {
            "section": section,
            "kind": take(section, "kind", str, required=True),
            "design": take(section, "design", str, default="use_Z"),
            "lam": take(section, "lambda", float, default=0.0),
            "nu": take(section, "nu", float, default=0.0),
            "safeguards": take(section, "safeguards", as_bool, default=False),
            "label": take(section, "label", str, default=""),
            "delta_bar": take(section, "delta_bar", float, default=0.0),
        }
        for key in _AUTO_KEYS:
            entry[key] = take(section, key, as_float_or_auto, default=None)
        if entry["kind"] is not None:
            known = set(ESTIMATOR_TAGS) | {"dantzig_x"}
            if entry["kind"] not in known:
                errors.append(
                    f"[{section}] kind = {entry['kind']!r}: expected one of "
                    f"{', '.join(sorted(known))}"
                )
        raw_specs.append(entry)

    defaults = SolverOptions()
    if cp.has_section("solver"):
        opts = SolverOptions(
            eps_feas=take("solver", "eps_feas", float, default=defaults.eps_feas),
            eps_opt=take("solver", "eps_opt", float, default=defaults.eps_opt),
            max_iterations=take(
                "solver", "max_iterations", int, default=defaults.max_iterations
            ),
        )
    else:
        opts = defaults

    if errors:
        raise ConfigError("invalid config:\n  " + "\n  ".join(errors))

    if theta_star is None:
        theta_star = np.zeros(p)
        theta_star[: min(_SIGNAL_SUPPORT, p)] = _SIGNAL_VALUE
    try:
        cfg = SimConfig(
            n=n,
            p=p,
            R=R,
            rho=rho,
            sigma=sigma,
            sigma_star_sq=sigma_star_sq,
            theta_star=theta_star,
            eps=eps,
            master_seed=master_seed,
        )
    except EivselError as exc:
        raise ConfigError(f"invalid config:\n  [sim] {exc}") from exc

    tuning = benchmark_tuning(cfg)
    # Variants with a sup-norm term split the slack across two priced
    # channels (t and u); the others fold everything into one coefficient.
    split_mu_tags = ("l1l2linf_mu", "l1l2linf_cmu")
    auto_mu = {
        "dantzig": 0.0,
        "mu": tuning.mu_cmu,
        "compensated_mu": tuning.mu_cmu,
        "conic": tuning.mu_conic,
        "l1l2linf_mu": tuning.mu_pair_t,
        "l1l2linf_cmu": tuning.mu_pair_t,
    }

    specs = []
    for entry in raw_specs:
        section = entry["section"]
        tag = entry["kind"]
        design = entry["design"]
        if tag == "dantzig_x":
            tag, design = "dantzig", "use_X"
        auto_values = {
            "tau": tuning.tau,
            "beta": tuning.mu_pair_u if tag in split_mu_tags else tuning.b_eps,
            "dhat": tuning.d_hat,
            "mu": auto_mu[tag],
        }
        resolved = {}
        for key in _AUTO_KEYS:
            v = entry[key]
            resolved[key] = auto_values[key] if v == "auto" else v
        try:
            specs.append(
                EstimatorSpec(
                    kind=EstimatorKind(tag, safeguards=entry["safeguards"]),
                    lam=entry["lam"],
                    nu=entry["nu"],
                    mu=resolved["mu"] if resolved["mu"] is not None else 0.0,
                    tau=resolved["tau"] if resolved["tau"] is not None else 0.0,
                    beta=resolved["beta"] if resolved["beta"] is not None else 0.0,
                    delta_bar=entry["delta_bar"],
                    d_hat=resolved["dhat"],
                    design_source=design,
                    label=entry["label"],
                )
            )
        except EivselError as exc:
            errors.append(f"[{section}] {exc}")
    if errors:
        raise ConfigError("invalid config:\n  " + "\n  ".join(errors))

    return cfg, specs, opts, tuning


def cmd_simulate(args) -> int:
    text = _config_text(args.config)
    cp = ConfigParser()
    cp.read_string(text)
    config_hash = _config_hash(cp)
    cfg, specs, opts, tuning = _build_simulation(cp)

    env_seed = os.environ.get("EIV_SEED")
    if env_seed is not None:
        try:
            cfg = replace(cfg, master_seed=int(env_seed))
        except (ValueError, EivselError) as exc:
            raise EivselError(f"EIV_SEED = {env_seed!r}: {exc}") from exc

    rows = run_experiment(cfg, specs, opts, jobs=args.jobs)
    csv_text = metrics_csv_text(rows, cfg.master_seed, config_hash)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text)

    manifest = RunManifest(
        config_hash=config_hash,
        tool_version=__version__,
        master_seed=cfg.master_seed,
        timestamp=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        output_paths=[args.out],
    )
    manifest_path = args.out + ".manifest.json"
    payload = asdict(manifest)
    payload["tuning"] = asdict(tuning)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")

    sys.stdout.write(
        f"wrote {len(rows)} rows to {args.out} (manifest: {manifest_path})\n"
    )
    return 0


def cmd_sensitivity(args) -> int:
    psi = np.loadtxt(args.gram, delimiter=",", ndmin=2)
    qry = SensitivityQuery(psi=psi, s=args.s, u=args.u, q=args.q)
    res = kappa_bruteforce(qry)

    sys.stdout.write(f"kappa = {_fmt(res.kappa)}\n")
    sys.stdout.write("witness_support = " + " ".join(str(j) for j in res.witness_J) + "\n")
    sys.stdout.write(
        "witness = " + " ".join(_fmt(v) for v in res.witness_delta) + "\n"
    )
    if args.check_c is not None:
        holds = check_kappa_condition(qry, args.check_c)
        exponent = "1" if qry.q == "one" else "0"
        sys.stdout.write(
            f"condition kappa >= {_fmt(args.check_c)} * s^(-{exponent}): "
            f"{'holds' if holds else 'fails'}\n"
        )
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except EivselError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
