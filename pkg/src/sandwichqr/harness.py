"""Replicated coverage experiments over the four simulation models.

Each replication draws a design and responses, builds 95% intervals for
the requested methods, and records whether each interval covers the
true coefficients (1, 2, 3) and how long it is.  Aggregation over
replications yields the COV/LEN cells that the report formatter lays
out per (model, tau, method, coefficient).

Methods, in canonical column order:

    qr    classical fit with pair-bootstrap percentile intervals
    ald   working-likelihood posterior quantile intervals (no fix)
    slqr  sandwich-corrected posterior centred at the classical fit
    slba  sandwich-corrected posterior centred at the posterior mean

Determinism: every random stream is derived from
``(master_seed, purpose, model, tau, n, replication, attempt)`` through
``numpy.random.SeedSequence``, so a report is bit-identical for any
worker count, and any single replication can be reproduced in
isolation.  The covariate stream omits the model id: within a
replication index, all models see the same design.
"""

from __future__ import annotations

import io
import csv as _csv
from dataclasses import dataclass, fields

import numpy as np
from joblib import Parallel, delayed

from .classical import bootstrap_intervals, fit_classical_qr
from .dataset import Dataset, DegenerateDesignError
from .datagen import BETA0, ModelSpec, generate_responses, sample_covariates
from .gibbs import (FixedScale, GibbsConfig, GibbsOverflowError, PriorSpec,
                    RandomScale, SingularCovarianceError, flat_prior,
                    informative_prior, run_gibbs, summarize_chain)
from .sandwich import (SandwichInputs, compute_s_n, credible_interval,
                       sandwich_posterior)
from .validation import check_level, check_tau

__all__ = [
    "ExperimentConfig",
    "Scenario",
    "RepResult",
    "CellStats",
    "CoverageReport",
    "ReplicationError",
    "run_replication",
    "run_experiment",
    "format_report",
    "parse_report_csv",
    "parse_config_text",
    "config_from_mapping",
    "load_config",
    "build_prior",
]

METHOD_ORDER = ("qr", "ald", "slqr", "slba")
COEF_NAMES = ("alpha", "beta1", "beta2")

_MAX_ATTEMPTS = 5
# stream purposes
_COV, _RESP, _GIBBS, _BOOT = 1, 2, 3, 4


class ReplicationError(RuntimeError):
    """A replication kept failing across redraw attempts."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Scenario grid plus every knob a run needs.

    The config-file keys are exactly these field names; list-valued
    fields take comma-separated values.
    """

    models: tuple = (1, 2, 3, 4)
    taus: tuple = (0.25, 0.75)
    n: int = 2000
    reps: int = 200
    level: float = 0.95
    prior_scenario: str = "flat"
    scale_scenario: str = "fixed"
    sigma0: float = 1.0
    scale_family: str = "invgamma"
    scale_shape: float = 12.0
    scale_rate: float = 1100.0
    scale_support: tuple | None = None
    methods: tuple = METHOD_ORDER
    burn_in: int = 2000
    n_draws: int = 1000
    bootstrap_b: int = 600
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        models = tuple(int(m) for m in self.models)
        if not models or any(m not in (1, 2, 3, 4) for m in models):
            raise ValueError("models must be a nonempty subset of 1..4")
        taus = tuple(check_tau(t) for t in self.taus)
        if not taus:
            raise ValueError("need at least one tau")
        methods = tuple(str(m).lower() for m in self.methods)
        unknown = [m for m in methods if m not in METHOD_ORDER]
        if unknown or not methods:
            raise ValueError(f"methods must be a nonempty subset of {METHOD_ORDER}")
        # keep canonical order regardless of how the user listed them
        methods = tuple(m for m in METHOD_ORDER if m in methods)
        object.__setattr__(self, "models", models)
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "level", check_level(self.level))
        for name in ("n", "reps", "burn_in", "n_draws", "bootstrap_b",
                     "master_seed", "workers"):
            object.__setattr__(self, name, int(getattr(self, name)))
        if self.n < 4:
            raise ValueError("n must be at least 4 (p = 3 plus one)")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.prior_scenario not in ("flat", "informative"):
            raise ValueError("prior_scenario must be 'flat' or 'informative'")
        if self.scale_scenario not in ("fixed", "random"):
            raise ValueError("scale_scenario must be 'fixed' or 'random'")
        if self.scale_support is not None:
            s1, s2 = (float(self.scale_support[0]), float(self.scale_support[1]))
            object.__setattr__(self, "scale_support", (s1, s2))
        object.__setattr__(self, "sigma0", float(self.sigma0))

    @property
    def gibbs(self) -> GibbsConfig:
        """Gibbs budget with a placeholder seed (real seeds are per-replication)."""
        return GibbsConfig(burn_in=self.burn_in, n_draws=self.n_draws, seed=0)


def build_prior(config: ExperimentConfig) -> PriorSpec:
    """Instantiate the prior named by the config scenarios."""
    if config.scale_scenario == "fixed":
        rule = FixedScale(config.sigma0)
    else:
        rule = RandomScale(shape=config.scale_shape, rate=config.scale_rate,
                           family=config.scale_family,
                           support=config.scale_support)
    if config.prior_scenario == "flat":
        return flat_prior(3, rule)
    return informative_prior(rule)


@dataclass(frozen=True)
class Scenario:
    """One (model, tau) cell of the experiment grid."""

    model: int
    tau: float
    config: ExperimentConfig


@dataclass(frozen=True)
class RepResult:
    """Intervals, hit flags, and lengths from a single replication."""

    intervals: dict
    hits: dict
    lengths: dict
    attempts: int


@dataclass(frozen=True)
class CellStats:
    cov_pct: float
    length: float
    mc_se_cov: float


@dataclass(frozen=True)
class CoverageReport:
    """COV/LEN cells keyed by (model, tau, method, coefficient index)."""

    cells: dict
    redraws: dict
    reps: int
    level: float
    master_seed: int
    methods: tuple
    coef_names: tuple = COEF_NAMES


def _tau_key(tau) -> int:
    return int(round(float(tau) * 1_000_000))


def _stream(master_seed, *key):
    ss = np.random.SeedSequence((int(master_seed),) + tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def _seed_int(master_seed, *key) -> int:
    ss = np.random.SeedSequence((int(master_seed),) + tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _one_attempt(scenario: Scenario, rep_index: int, master_seed: int,
                 attempt: int) -> RepResult:
    cfg = scenario.config
    model, tau, n = scenario.model, scenario.tau, cfg.n
    tk = _tau_key(tau)

    cov_rng = _stream(master_seed, _COV, tk, n, rep_index, attempt)
    X = sample_covariates(n, cov_rng)
    resp_rng = _stream(master_seed, _RESP, model, tk, n, rep_index, attempt)
    y = generate_responses(ModelSpec(model, tau), X, resp_rng)
    data = Dataset(y, X)

    prior = build_prior(cfg)
    methods = cfg.methods
    intervals = {}

    qrfit = None
    if "qr" in methods or "slqr" in methods:
        qrfit = fit_classical_qr(data, tau)
    if "qr" in methods:
        seed = _seed_int(master_seed, _BOOT, model, tk, n, rep_index, attempt)
        intervals["qr"] = bootstrap_intervals(data, tau, B=cfg.bootstrap_b,
                                              level=cfg.level, seed=seed)
    if "ald" in methods or "slba" in methods or "slqr" in methods:
        seed = _seed_int(master_seed, _GIBBS, model, tk, n, rep_index, attempt)
        chain = run_gibbs(data, tau, prior,
                          GibbsConfig(cfg.burn_in, cfg.n_draws, seed))
        summary = summarize_chain(chain, data, prior)
        if "ald" in methods:
            intervals["ald"] = credible_interval(chain, cfg.level)
        if "slba" in methods or "slqr" in methods:
            s_n = compute_s_n(data)
            common = dict(v_n_inv=summary.v_n_inv, s_n=s_n, n=data.n,
                          tau=tau, prior=prior)
            if "slqr" in methods:
                post = sandwich_posterior(
                    SandwichInputs(center=qrfit.beta_m, **common),
                    method_tag="slqr")
                intervals["slqr"] = credible_interval(post, cfg.level)
            if "slba" in methods:
                post = sandwich_posterior(
                    SandwichInputs(center=summary.beta_tilde, **common),
                    method_tag="slba")
                intervals["slba"] = credible_interval(post, cfg.level)

    hits = {m: tuple(bool(h) for h in iv.contains(BETA0))
            for m, iv in intervals.items()}
    lengths = {m: tuple(float(v) for v in iv.lengths)
               for m, iv in intervals.items()}
    return RepResult(intervals=intervals, hits=hits, lengths=lengths,
                     attempts=attempt)


def run_replication(scenario: Scenario, rep_index: int,
                    master_seed: int) -> RepResult:
    """Simulate one dataset and interval-estimate it with every method.

    Failures from degenerate designs or numerical breakdowns redraw the
    replication from an attempt-indexed stream (bounded), so the
    replication count is preserved; the attempt count is recorded.
    """
    last = None
    for attempt in range(_MAX_ATTEMPTS):
        try:
            return _one_attempt(scenario, rep_index, master_seed, attempt)
        except (DegenerateDesignError, GibbsOverflowError,
                SingularCovarianceError, np.linalg.LinAlgError) as err:
            last = err
    raise ReplicationError(
        f"model {scenario.model} tau {scenario.tau} replication {rep_index}: "
        f"still failing after {_MAX_ATTEMPTS} attempts ({last})")


def run_experiment(config: ExperimentConfig, workers=None) -> CoverageReport:
    """Aggregate ``run_replication`` over the scenario grid.

    Replications are the unit of parallelism; results are reduced in
    submission order, so the report does not depend on the worker
    count.
    """
    workers = config.workers if workers is None else int(workers)
    scenarios = [Scenario(model=m, tau=t, config=config)
                 for m in config.models for t in config.taus]
    tasks = [(s, r) for s in scenarios for r in range(config.reps)]
    if workers == 1:
        results = [run_replication(s, r, config.master_seed) for s, r in tasks]
    else:
        results = Parallel(n_jobs=workers)(
            delayed(run_replication)(s, r, config.master_seed)
            for s, r in tasks)

    cells = {}
    redraws = {}
    pos = 0
    for scen in scenarios:
        batch = results[pos:pos + config.reps]
        pos += config.reps
        redraws[(scen.model, scen.tau)] = int(sum(r.attempts for r in batch))
        for method in config.methods:
            for j in range(len(COEF_NAMES)):
                hit = np.array([r.hits[method][j] for r in batch], dtype=float)
                lens = np.array([r.lengths[method][j] for r in batch])
                phat = float(hit.mean())
                cells[(scen.model, scen.tau, method, j)] = CellStats(
                    cov_pct=100.0 * phat,
                    length=float(lens.mean()),
                    mc_se_cov=100.0 * float(
                        np.sqrt(phat * (1.0 - phat) / config.reps)),
                )
    return CoverageReport(cells=cells, redraws=redraws, reps=config.reps,
                          level=config.level, master_seed=config.master_seed,
                          methods=config.methods)


def _cell_text(stats: CellStats) -> str:
    return f"({stats.cov_pct:.0f},{stats.length:.2f})"


def format_report(report: CoverageReport, layout="markdown") -> str:
    """Render a report as a markdown table or a tidy CSV.

    Markdown mirrors the familiar layout: one row per (model, tau),
    one ``(COV,LEN)`` column per coefficient and method.  The CSV is
    one row per cell with full-precision numbers plus the binomial
    standard error of the coverage estimate.
    """
    if not report.cells:
        raise ValueError("report has no cells")
    keys = sorted({(m, t) for (m, t, _, _) in report.cells})
    methods = [m for m in METHOD_ORDER if m in report.methods]
    if layout == "csv":
        buf = io.StringIO()
        writer = _csv.writer(buf)
        writer.writerow(["model", "tau", "method", "coefficient",
                         "cov_pct", "len", "mc_se_cov"])
        for model, tau in keys:
            for method in methods:
                for j, cname in enumerate(report.coef_names):
                    st = report.cells[(model, tau, method, j)]
                    writer.writerow([model, repr(float(tau)), method, cname,
                                     repr(st.cov_pct), repr(st.length),
                                     repr(st.mc_se_cov)])
        return buf.getvalue()
    if layout != "markdown":
        raise ValueError(f"unknown layout {layout!r}")
    header = ["model", "tau"]
    for cname in report.coef_names:
        for method in methods:
            header.append(f"{cname} {method}")
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join(["---"] * len(header)) + "|"]
    for model, tau in keys:
        row = [str(model), f"{tau:g}"]
        for j in range(len(report.coef_names)):
            for method in methods:
                row.append(_cell_text(report.cells[(model, tau, method, j)]))
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def parse_report_csv(text) -> dict:
    """Inverse of ``format_report(..., layout="csv")``.

    Returns ``{(model, tau, method, coefficient_name): CellStats}``
    with numbers parsed back at full precision.
    """
    rows = list(_csv.reader(io.StringIO(text)))
    if not rows or rows[0][:4] != ["model", "tau", "method", "coefficient"]:
        raise ValueError("not a report CSV")
    out = {}
    for row in rows[1:]:
        if not row:
            continue
        model, tau, method, cname, cov, length, se = row
        out[(int(model), float(tau), method, cname)] = CellStats(
            cov_pct=float(cov), length=float(length), mc_se_cov=float(se))
    return out


_LIST_FIELDS = {"models", "taus", "methods", "scale_support"}


def parse_config_text(text) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    mapping = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        mapping[key.strip()] = value.strip()
    return mapping


def config_from_mapping(mapping) -> ExperimentConfig:
    """Coerce string values onto ``ExperimentConfig`` fields."""
    valid = {f.name: f for f in fields(ExperimentConfig)}
    kwargs = {}
    for key, value in mapping.items():
        if key not in valid:
            raise ValueError(
                f"unknown config key {key!r}; valid keys: {sorted(valid)}")
        if isinstance(value, str):
            if key in _LIST_FIELDS:
                parts = [v.strip() for v in value.split(",") if v.strip()]
                kwargs[key] = tuple(parts) if parts else ()
            else:
                kwargs[key] = value
        else:
            kwargs[key] = value
    # numeric coercion happens field by field so errors name the key
    coerced = {}
    for key, value in kwargs.items():
        try:
            coerced[key] = _coerce_field(key, value)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"config key {key!r}: {exc}") from exc
    return ExperimentConfig(**coerced)


def _coerce_field(key, value):
    if key == "models":
        return tuple(int(v) for v in value)
    if key == "taus":
        return tuple(float(v) for v in value)
    if key == "methods":
        return tuple(str(v) for v in value)
    if key == "scale_support":
        # config files spell the absent support as "none"
        if value in ((), "", "none", None) or \
                tuple(str(v).lower() for v in value) == ("none",):
            return None
        return tuple(float(v) for v in value)
    if key in ("n", "reps", "burn_in", "n_draws", "bootstrap_b",
               "master_seed", "workers"):
        return int(value)
    if key in ("level", "sigma0", "scale_shape", "scale_rate"):
        return float(value)
    return str(value)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_mapping(parse_config_text(fh.read()))
