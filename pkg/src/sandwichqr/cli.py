"""Command-line front end.

Subcommands:

    fit         estimate a CSV dataset and print intervals per method
    simulate    draw a dataset from one of the built-in models
    experiment  run a replicated coverage study from a config file
    validate    run the oracle cross-check battery

All randomness flows from ``--seed``; when it is omitted a seed is
generated, printed, and embedded in any output files so the run can be
replayed.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .classical import bootstrap_intervals, fit_classical_qr
from .dataset import load_csv, save_csv
from .datagen import ModelSpec, generate_responses, sample_covariates
from .gibbs import (FixedScale, GibbsConfig, PriorSpec, RandomScale,
                    flat_prior, informative_prior, run_gibbs, save_chain_csv,
                    summarize_chain)
from .harness import (config_from_mapping, format_report, parse_config_text,
                      run_experiment)
from .sandwich import (SandwichInputs, compute_s_n, credible_interval,
                       sandwich_posterior)

__all__ = ["main"]


class CliError(Exception):
    """User-facing failure; carries the stage name for the error line."""

    def __init__(self, stage, message):
        super().__init__(message)
        self.stage = stage


def _generate_seed() -> int:
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0])


def _sub_rng_seed(seed: int, purpose: int) -> int:
    ss = np.random.SeedSequence((int(seed), int(purpose)))
    return int(ss.generate_state(1, np.uint64)[0])


def _parse_methods(text) -> tuple:
    methods = tuple(m.strip().lower() for m in text.split(",") if m.strip())
    valid = ("qr", "ald", "slqr", "slba")
    bad = [m for m in methods if m not in valid]
    if bad or not methods:
        raise CliError("args", f"--methods must name some of {valid}, got {text!r}")
    return methods


def _parse_scale(text):
    """Parse ``fixed:<v>``, ``gamma:<shape>,<rate>``, ``invgamma:<shape>,<rate>``."""
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "fixed":
            return FixedScale(float(rest or "1"))
        if kind in ("gamma", "invgamma"):
            shape_s, rate_s = rest.split(",")
            return RandomScale(shape=float(shape_s), rate=float(rate_s),
                               family=kind)
    except (ValueError, TypeError) as exc:
        raise CliError("args", f"bad --scale value {text!r}: {exc}") from exc
    raise CliError("args", f"--scale must start with fixed:, gamma:, or invgamma:,"
                           f" got {text!r}")


def _parse_prior(text, p, scale_rule):
    text = text.strip()
    if text == "flat":
        return flat_prior(p, scale_rule)
    if text == "informative":
        if p != 3:
            raise CliError("prior", "the informative preset needs exactly "
                                    "3 coefficients (intercept + 2 covariates)")
        return informative_prior(scale_rule)
    if text.startswith("file:"):
        path = text[5:]
        try:
            with open(path) as fh:
                mapping = parse_config_text(fh.read())
            mean = np.array([float(v) for v in mapping["mean"].split(",")])
            var = np.array([float(v) for v in mapping["variance"].split(",")])
        except FileNotFoundError as exc:
            raise CliError("prior", f"prior file not found: {path}") from exc
        except (KeyError, ValueError) as exc:
            raise CliError("prior", f"prior file {path} needs 'mean' and "
                                    f"'variance' comma lists ({exc})") from exc
        if len(mean) != p:
            raise CliError("prior", f"prior file has {len(mean)} coefficients, "
                                    f"dataset needs {p}")
        return PriorSpec(mean, var, scale_rule)
    raise CliError("args", f"--prior must be flat, informative, or file:PATH, "
                           f"got {text!r}")


def _fmt_vec(v):
    return ", ".join(f"{x:.6g}" for x in v)


def _print_intervals(tag, names, ivs):
    print(f"[{tag}] {int(round(ivs.level * 100))}% intervals:")
    width = max(len(n) for n in names)
    for name, lo, hi in zip(names, ivs.lower, ivs.upper):
        print(f"    {name:<{width}}  {lo:12.6g} .. {hi:12.6g}")


def _cmd_fit(args) -> int:
    try:
        data, cov_names = load_csv(args.csv)
    except (OSError, ValueError) as exc:
        raise CliError("load-data", str(exc)) from exc
    if not 0.0 < args.tau < 1.0:
        raise CliError("args", f"--tau must lie in (0, 1), got {args.tau}")
    methods = _parse_methods(args.methods)
    names = ["intercept"] + cov_names
    seed = args.seed if args.seed is not None else _generate_seed()
    if args.seed is None:
        print(f"seed: {seed} (generated; pass --seed {seed} to reproduce)")
    print(f"n={data.n} p={data.p} tau={args.tau:g}")

    scale_rule = _parse_scale(args.scale)
    needs_chain = any(m in methods for m in ("ald", "slba", "slqr"))
    prior = _parse_prior(args.prior, data.p, scale_rule) if needs_chain else None

    qrfit = None
    if "qr" in methods or "slqr" in methods:
        qrfit = fit_classical_qr(data, args.tau)
        print(f"[qr] point estimate: {_fmt_vec(qrfit.beta_m)}   "
              f"(check loss {qrfit.objective:.6g})")
    if "qr" in methods:
        ivs = bootstrap_intervals(data, args.tau, B=args.bootstrap_b,
                                  level=args.level,
                                  seed=_sub_rng_seed(seed, 1))
        _print_intervals("qr", names, ivs)

    if needs_chain:
        config = GibbsConfig(burn_in=args.burn_in, n_draws=args.draws,
                             seed=_sub_rng_seed(seed, 2))
        try:
            chain = run_gibbs(data, args.tau, prior, config)
            summary = summarize_chain(chain, data, prior)
        except Exception as exc:
            raise CliError("gibbs", str(exc)) from exc
        if args.chain_out:
            save_chain_csv(chain, args.chain_out)
            print(f"chain written to {args.chain_out}")
        print(f"[ald] posterior mean: {_fmt_vec(summary.beta_tilde)}")
        print(f"[ald] sigma0_hat: {summary.sigma0_hat:.6g}")
        if "ald" in methods:
            _print_intervals("ald", names, credible_interval(chain, args.level))
        if "slba" in methods or "slqr" in methods:
            s_n = compute_s_n(data)
            common = dict(v_n_inv=summary.v_n_inv, s_n=s_n, n=data.n,
                          tau=args.tau, prior=prior)
            shown_sigma = False
            for tag, centre in (("slqr", None if qrfit is None else qrfit.beta_m),
                                ("slba", summary.beta_tilde)):
                if tag not in methods:
                    continue
                post = sandwich_posterior(
                    SandwichInputs(center=centre, **common), method_tag=tag)
                if not shown_sigma:
                    print("sandwich covariance Sigma_n:")
                    for row in post.sigma_n:
                        print(f"    [{_fmt_vec(row)}]")
                    shown_sigma = True
                _print_intervals(tag, names,
                                 credible_interval(post, args.level))
    return 0


def _cmd_simulate(args) -> int:
    if not 0.0 < args.tau < 1.0:
        raise CliError("args", f"--tau must lie in (0, 1), got {args.tau}")
    if args.n < 1:
        raise CliError("args", "--n must be positive")
    seed = args.seed if args.seed is not None else _generate_seed()
    if args.seed is None:
        print(f"seed: {seed} (generated; pass --seed {seed} to reproduce)")
    try:
        spec = ModelSpec(args.model, args.tau)
    except ValueError as exc:
        raise CliError("args", str(exc)) from exc
    rng = np.random.default_rng(seed)
    X = sample_covariates(args.n, rng)
    y = generate_responses(spec, X, rng)
    comments = [f"seed={seed}", f"model={args.model}", f"tau={args.tau:g}",
                f"n={args.n}"]
    if args.out:
        save_csv(args.out, y, X[:, 1:], names=["x1", "x2"], comments=comments)
        print(f"wrote {args.n} rows to {args.out}")
    else:
        for line in comments:
            print(f"# {line}")
        print("y,x1,x2")
        for i in range(args.n):
            print(f"{y[i]!r},{X[i, 1]!r},{X[i, 2]!r}")
    return 0


def _cmd_experiment(args) -> int:
    mapping = {}
    if args.config:
        try:
            with open(args.config) as fh:
                mapping.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise CliError("load-config", str(exc)) from exc
        except ValueError as exc:
            raise CliError("parse-config", str(exc)) from exc
    overrides = {
        "models": args.models, "taus": args.taus, "n": args.n,
        "reps": args.reps, "level": args.level, "methods": args.methods,
        "prior_scenario": args.prior, "burn_in": args.burn_in,
        "n_draws": args.draws, "bootstrap_b": args.bootstrap_b,
        "master_seed": args.seed, "workers": args.workers,
    }
    for key, value in overrides.items():
        if value is not None:
            mapping[key] = value
    if args.scale is not None:
        rule = _parse_scale(args.scale)
        if isinstance(rule, FixedScale):
            mapping["scale_scenario"] = "fixed"
            mapping["sigma0"] = rule.sigma0
        else:
            mapping["scale_scenario"] = "random"
            mapping["scale_family"] = rule.family
            mapping["scale_shape"] = rule.shape
            mapping["scale_rate"] = rule.rate
    if "master_seed" not in mapping:
        seed = _generate_seed()
        print(f"seed: {seed} (generated; pass --seed {seed} to reproduce)")
        mapping["master_seed"] = seed
    try:
        config = config_from_mapping(mapping)
    except ValueError as exc:
        raise CliError("config", str(exc)) from exc
    report = run_experiment(config)
    csv_text = format_report(report, layout="csv")
    md_text = format_report(report, layout="markdown")
    header = (f"# master_seed={config.master_seed} reps={config.reps} "
              f"n={config.n} level={config.level:g}\n")
    with open(args.out_csv, "w") as fh:
        fh.write(header)
        fh.write(csv_text)
    with open(args.out_md, "w") as fh:
        fh.write(md_text)
    redrawn = sum(report.redraws.values())
    if redrawn:
        print(f"redrawn replications: {redrawn}")
    print(f"wrote {args.out_csv} and {args.out_md}")
    print(md_text, end="")
    return 0


def _cmd_validate(args) -> int:
    from .validate import run_validation
    failures = run_validation(verbose=True)
    return 1 if failures else 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sandwichqr",
        description="Quantile regression with sandwich-corrected credible "
                    "intervals.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="estimate a CSV dataset")
    p_fit.add_argument("csv", help="dataset: header row, y first, covariates after")
    p_fit.add_argument("--tau", type=float, default=0.5)
    p_fit.add_argument("--methods", default="qr,ald,slqr,slba")
    p_fit.add_argument("--prior", default="flat",
                       help="flat, informative, or file:PATH")
    p_fit.add_argument("--scale", default="fixed:1",
                       help="fixed:<v>, gamma:<shape>,<rate>, or "
                            "invgamma:<shape>,<rate>")
    p_fit.add_argument("--burn-in", type=int, default=2000, dest="burn_in")
    p_fit.add_argument("--draws", type=int, default=1000)
    p_fit.add_argument("--bootstrap-b", type=int, default=600,
                       dest="bootstrap_b")
    p_fit.add_argument("--level", type=float, default=0.95)
    p_fit.add_argument("--seed", type=int, default=None)
    p_fit.add_argument("--chain-out", default=None,
                       help="dump the posterior chain to this CSV")
    p_fit.set_defaults(func=_cmd_fit)

    p_sim = sub.add_parser("simulate", help="draw a synthetic dataset")
    p_sim.add_argument("--model", type=int, required=True, choices=(1, 2, 3, 4))
    p_sim.add_argument("--tau", type=float, required=True)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--out", default=None, help="output CSV (default stdout)")
    p_sim.set_defaults(func=_cmd_simulate)

    p_exp = sub.add_parser("experiment", help="run a replicated coverage study")
    p_exp.add_argument("--config", default=None,
                       help="flat key=value file with ExperimentConfig fields")
    p_exp.add_argument("--models", default=None, help="e.g. 1,3,4")
    p_exp.add_argument("--taus", default=None, help="e.g. 0.25,0.75")
    p_exp.add_argument("--n", type=int, default=None)
    p_exp.add_argument("--reps", type=int, default=None)
    p_exp.add_argument("--level", type=float, default=None)
    p_exp.add_argument("--methods", default=None)
    p_exp.add_argument("--prior", default=None, choices=("flat", "informative"))
    p_exp.add_argument("--scale", default=None,
                       help="fixed:<v>, gamma:<shape>,<rate>, or "
                            "invgamma:<shape>,<rate>")
    p_exp.add_argument("--burn-in", type=int, default=None, dest="burn_in")
    p_exp.add_argument("--draws", type=int, default=None)
    p_exp.add_argument("--bootstrap-b", type=int, default=None,
                       dest="bootstrap_b")
    p_exp.add_argument("--seed", type=int, default=None,
                       help="master seed for the whole study")
    p_exp.add_argument("--workers", type=int, default=None)
    p_exp.add_argument("--out-csv", default="report.csv", dest="out_csv")
    p_exp.add_argument("--out-md", default="report.md", dest="out_md")
    p_exp.set_defaults(func=_cmd_experiment)

    p_val = sub.add_parser("validate", help="run the oracle cross-checks")
    p_val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error[{exc.stage}]: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # keep tracebacks out of normal CLI failures
        print(f"error[{args.command}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
