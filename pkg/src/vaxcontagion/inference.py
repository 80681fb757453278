"""Bootstrap inference and the Monte Carlo experiment harness.

Random streams are derived from ``(seed, stage, replicate)`` through
:class:`numpy.random.SeedSequence` spawn keys, so a replicate produces the
same numbers whether experiments run serially or in worker processes.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np

from .effects import (
    EffectEstimate,
    EmptyStratum,
    ModelSpec,
    Scale,
    contagion_effect,
    covariate_matrix,
    design_matrix,
    estimate_effects,
    fit_mediator_model,
    fit_outcome_model,
    covariate_evaluation_point,
    indirect_effect,
    infectiousness_effect,
    ResidualDiagnostic,
    residual_products,
    summarize_products,
)
from .epidemic import (
    DiseaseParams,
    assign_vaccination,
    draw_contact_counts,
    simulate_epidemic,
    simulate_group_epidemics,
)
from .extract import RecordTable, build_records, group_pairs
from .glm import GlmError, fit_glm_batch
from .netgraph import (
    AlterEgoPair,
    Network,
    extract_independent_pairs,
    generate_family_network,
    nearby_pairs,
    scaled_out_tie_prob,
)

EFFECTS = ("contagion", "infectiousness", "indirect")

# Spawn-key stage tags.
STAGE_NETWORK = 0
STAGE_PAIRS = 1
STAGE_GROUPS = 2
STAGE_EPIDEMIC = 3
STAGE_BOOTSTRAP = 4
STAGE_DIAGNOSTIC = 5


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


class AllReplicatesFailed(RuntimeError):
    pass


class ScenarioDegenerate(RuntimeError):
    """The models cannot be fitted on the full simulated dataset."""


@dataclass
class BootstrapResult:
    point: EffectEstimate
    se: dict
    ci_low: dict
    ci_high: dict
    n_replicates_requested: int
    n_replicates_converged: int
    replicates: dict = field(repr=False, default_factory=dict)

    @property
    def flagged(self) -> bool:
        """More than 10% of bootstrap replicates failed."""
        return self.n_replicates_converged < 0.9 * self.n_replicates_requested


def bootstrap_quantiles(values: np.ndarray, probs=(0.025, 0.975)) -> tuple[float, ...]:
    """Order statistics interpolated linearly at rank ``p (B + 1)``, clamped to the sample range."""
    values = np.asarray(values, dtype=float)
    return tuple(float(q) for q in np.quantile(values, probs, method="weibull"))


def _bootstrap_weights(K: int, B: int, rng: np.random.Generator) -> np.ndarray:
    idx = rng.integers(0, K, size=(B, K))
    flat = (idx + (np.arange(B) * K)[:, None]).ravel()
    return np.bincount(flat, minlength=B * K).reshape(B, K).astype(float)


def bootstrap_effects(
    records: RecordTable,
    spec: ModelSpec,
    B: int,
    rng: np.random.Generator,
    scale: Scale = "ratio",
    point: EffectEstimate | None = None,
    chunk: int = 250,
) -> BootstrapResult:
    """Nonparametric bootstrap over groups.

    Each replicate resamples the ``K`` groups with replacement, refits both
    models and recomputes the effects at the replicate's own covariate means.
    Failed replicates are skipped and counted.
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    K = len(records)
    if K == 0:
        raise ValueError("no records")
    if point is None:
        try:
            med = fit_mediator_model(records, spec)
            out = fit_outcome_model(records, spec)
        except (GlmError, EmptyStratum) as exc:
            raise ScenarioDegenerate(str(exc)) from exc
        point = estimate_effects(med, out, covariate_evaluation_point(records, spec), scale)

    X = design_matrix(records, spec)
    C = covariate_matrix(records, spec)
    pos = records.Y_aT == 1
    y_m = records.Y_aT.astype(float)
    y_o = records.Y_eTs[pos].astype(float)
    X_o = X[pos]

    draws = {name: [] for name in EFFECTS}
    for start in range(0, B, chunk):
        b = min(chunk, B - start)
        W = _bootstrap_weights(K, b, rng)
        med = fit_glm_batch(X, y_m, W, "logit")
        W_o = W[:, pos]
        usable = W_o.sum(axis=1) > 0
        if X_o.shape[0]:
            out = fit_glm_batch(X_o, y_o, W_o, "log", family=spec.outcome_family)
            ok = med.converged & out.converged & usable
        else:
            ok = np.zeros(b, dtype=bool)
        if not ok.any():
            continue
        if spec.eval_on == "mediator-positive":
            Wc, Cc = W_o[ok], C[pos]
        else:
            Wc, Cc = W[ok], C
        c = (Wc @ Cc) / Wc.sum(axis=1, keepdims=True)
        mc, oc = med.coefficients[ok], out.coefficients[ok]
        draws["contagion"].append(contagion_effect(mc, oc, c, scale))
        draws["infectiousness"].append(infectiousness_effect(mc, oc, c, scale))
        draws["indirect"].append(indirect_effect(mc, oc, c, scale))

    reps = {k: (np.concatenate(v) if v else np.empty(0)) for k, v in draws.items()}
    n_ok = len(reps["contagion"])
    if n_ok == 0:
        raise AllReplicatesFailed(f"none of {B} bootstrap replicates converged")
    se, lo, hi = {}, {}, {}
    for name, vals in reps.items():
        se[name] = float(np.std(vals, ddof=1)) if n_ok > 1 else 0.0
        lo[name], hi[name] = bootstrap_quantiles(vals)
    return BootstrapResult(point, se, lo, hi, B, n_ok, reps)


def test_null(result: BootstrapResult, effect: str, null_value: float | None = None) -> bool:
    """Reject when the null value lies outside the closed interval."""
    if effect not in EFFECTS:
        raise ValueError(f"unknown effect {effect!r}")
    if null_value is None:
        null_value = 0.0 if result.point.scale == "difference" else 1.0
    return not (result.ci_low[effect] <= null_value <= result.ci_high[effect])


test_null.__test__ = False  # not a pytest test


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation setting.

    Group mode draws ``num_groups`` groups with Poisson(``contact_mean``)
    mutual contacts each. Network mode builds a family network of
    ``num_groups`` groups of ``group_size`` once per seed and extracts its
    alter-ego pairs once; every replicate reuses them.
    """

    label: str
    mode: Literal["group", "network"]
    num_groups: int
    params: DiseaseParams
    vacc_prob: float
    hypothesis: Literal["null", "alternative"] = "null"
    contact_mean: float = 3.0
    group_size: int = 5
    out_tie_prob: float = 0.0
    n_sims: int = 500
    n_bootstrap: int = 500
    seed: int = 0
    covariates: tuple[str, ...] | None = None
    include_mutual: bool = False
    exclude_partner: bool = True
    outcome_family: Literal["binomial", "poisson"] = "poisson"

    def __post_init__(self):
        if self.mode not in ("group", "network"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.hypothesis not in ("null", "alternative"):
            raise ValueError(f"unknown hypothesis {self.hypothesis!r}")
        if self.num_groups < 1:
            raise ValueError("num_groups must be positive")
        if not 0.0 <= self.vacc_prob <= 1.0:
            raise ValueError("vacc_prob must lie in [0, 1]")
        if not 0.0 <= self.out_tie_prob <= 1.0:
            raise ValueError("out_tie_prob must lie in [0, 1]")
        if self.n_sims < 1 or self.n_bootstrap < 1:
            raise ValueError("n_sims and n_bootstrap must be at least 1")
        if self.contact_mean < 0 or self.group_size < 2:
            raise ValueError("contact_mean must be >= 0 and group_size >= 2")

    @property
    def model_spec(self) -> ModelSpec:
        if self.covariates is not None:
            return ModelSpec(tuple(self.covariates), self.mode,
                             outcome_family=self.outcome_family)
        return ModelSpec.for_mode(self.mode, self.include_mutual, self.outcome_family)

    @property
    def size(self) -> int:
        return self.num_groups * self.group_size if self.mode == "network" else self.num_groups


@dataclass
class NetworkSetup:
    network: Network
    pairs: list[AlterEgoPair]


def prepare_network(config: ScenarioConfig) -> NetworkSetup:
    net = generate_family_network(config.num_groups, config.group_size, config.out_tie_prob,
                                  substream(config.seed, STAGE_NETWORK))
    pairs = [p for p, _ in extract_independent_pairs(net, substream(config.seed, STAGE_PAIRS))]
    return NetworkSetup(net, pairs)


@dataclass
class SimulatedData:
    network: Network
    vaccinated: np.ndarray
    pairs: list[AlterEgoPair]
    records: RecordTable
    attack_rate: float


def simulate_dataset(config: ScenarioConfig, replicate_index: int,
                     setup: NetworkSetup | None = None) -> SimulatedData:
    """Generate, vaccinate, simulate and build the analysis records of one replicate."""
    rng = substream(config.seed, STAGE_EPIDEMIC, replicate_index)
    if config.mode == "group":
        counts = draw_contact_counts(config.num_groups, config.contact_mean,
                                     substream(config.seed, STAGE_GROUPS, replicate_index))
        sim = simulate_group_epidemics(counts, config.vacc_prob, config.params, rng)
        pairs = group_pairs(sim.starts)
        net, vacc, traj = sim.network, sim.vaccinated, sim.trajectory
    else:
        setup = setup or prepare_network(config)
        net, pairs = setup.network, setup.pairs
        vacc = assign_vaccination(net.node_count, config.vacc_prob, rng)
        traj = simulate_epidemic(net, vacc, config.params, rng)
    records = build_records(net, traj, vacc, pairs, config.params,
                            exclude_partner=config.exclude_partner)
    return SimulatedData(net, vacc, pairs, records, traj.attack_rate())


@dataclass
class ReplicateResult:
    replicate_index: int
    bootstrap: BootstrapResult | None
    n_records: int
    n_mediator_positive: int
    attack_rate: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.bootstrap is not None


def run_scenario_once(config: ScenarioConfig, replicate_index: int,
                      setup: NetworkSetup | None = None) -> ReplicateResult:
    """Simulate one dataset and bootstrap its effects.

    Raises
    ------
    ScenarioDegenerate
        The models cannot be fitted on the full dataset, or no bootstrap
        replicate converges.
    """
    data = simulate_dataset(config, replicate_index, setup)
    rng = substream(config.seed, STAGE_BOOTSTRAP, replicate_index)
    try:
        boot = bootstrap_effects(data.records, config.model_spec, config.n_bootstrap, rng)
    except AllReplicatesFailed as exc:
        raise ScenarioDegenerate(str(exc)) from exc
    return ReplicateResult(replicate_index, boot, len(data.records),
                           int(data.records.Y_aT.sum()), data.attack_rate)


def _safe_replicate(args) -> ReplicateResult:
    config, index, setup = args
    try:
        return run_scenario_once(config, index, setup)
    except ScenarioDegenerate as exc:
        return ReplicateResult(index, None, 0, 0, float("nan"), error=str(exc))


def run_replicates(config: ScenarioConfig, threads: int = 1,
                   indices: Sequence[int] | None = None) -> list[ReplicateResult]:
    setup = prepare_network(config) if config.mode == "network" else None
    indices = range(config.n_sims) if indices is None else indices
    jobs = [(config, i, setup) for i in indices]
    if threads <= 1:
        return [_safe_replicate(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_safe_replicate, jobs, chunksize=max(1, len(jobs) // (4 * threads))))


@dataclass(frozen=True)
class SummaryRow:
    scenario: str
    size: int
    hypothesis: str
    mean_infectiousness: float
    mean_inf_se: float
    inf_coverage_or_power: float
    mean_contagion: float
    mean_con_se: float
    con_coverage_or_power: float
    n_sims_used: int
    n_sims_excluded: int


def summarize(config: ScenarioConfig, results: Sequence[ReplicateResult]) -> SummaryRow:
    """Coverage of 1 under the null; power (100 minus coverage) otherwise."""
    used = [r.bootstrap for r in results if r.ok]
    n_excluded = len(results) - len(used)

    def column(effect):
        if not used:
            return float("nan"), float("nan"), float("nan")
        est = np.mean([getattr(b.point, effect) for b in used])
        se = np.mean([b.se[effect] for b in used])
        covered = np.mean([b.ci_low[effect] <= 1.0 <= b.ci_high[effect] for b in used]) * 100
        value = covered if config.hypothesis == "null" else 100.0 - covered
        return float(est), float(se), float(value)

    inf = column("infectiousness")
    con = column("contagion")
    return SummaryRow(config.label, config.size, config.hypothesis, *inf, *con,
                      len(used), n_excluded)


def monte_carlo_experiment(config: ScenarioConfig, threads: int = 1) -> SummaryRow:
    return summarize(config, run_replicates(config, threads))


def residual_diagnostic(config: ScenarioConfig, n_sims: int | None = None,
                        spec: ModelSpec | None = None, max_gap: int | None = 2,
                        setup: NetworkSetup | None = None) -> ResidualDiagnostic:
    """Cross-group residual correlation pooled over simulated datasets.

    Both models are fitted once to the records of all ``n_sims`` datasets
    stacked together, so dataset-level shocks stay in the residuals instead
    of being absorbed by per-dataset intercepts. Within each dataset the
    groups are matched at random into disjoint pairs: in network mode only
    among pairs whose zones lie within ``max_gap`` hops of each other
    (``max_gap=None`` matches all groups). The returned means are the
    average residual products and their Monte Carlo standard errors.
    """
    n_sims = config.n_sims if n_sims is None else n_sims
    spec = spec or config.model_spec
    if config.mode == "network":
        setup = setup or prepare_network(config)
    candidates = None
    if config.mode == "network" and max_gap is not None:
        candidates = nearby_pairs(setup.network, setup.pairs, max_gap)
    datasets = [simulate_dataset(config, rep, setup).records for rep in range(n_sims)]
    pooled = RecordTable.concatenate(datasets)
    try:
        med = fit_mediator_model(pooled, spec)
        out = fit_outcome_model(pooled, spec)
    except (GlmError, EmptyStratum) as exc:
        raise ScenarioDegenerate(str(exc)) from exc
    rng = substream(config.seed, STAGE_DIAGNOSTIC)
    prod_m, prod_o = [], []
    for records in datasets:
        pm, po = residual_products(records, med, out, spec, rng, candidates)
        prod_m.append(pm)
        prod_o.append(po)
    return summarize_products(np.concatenate(prod_m), np.concatenate(prod_o))


SUMMARY_COLUMNS = ("scenario", "n_or_network_size", "effect", "mean_estimate", "mean_se",
                   "coverage_or_power", "n_used", "n_excluded")


def write_summary_csv(path: str | os.PathLike, rows: Sequence[SummaryRow]) -> None:
    """Two lines per row (infectiousness, contagion) in the summary format."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for r in rows:
            for effect, est, se, cov in (
                ("infectiousness", r.mean_infectiousness, r.mean_inf_se, r.inf_coverage_or_power),
                ("contagion", r.mean_contagion, r.mean_con_se, r.con_coverage_or_power),
            ):
                w.writerow([f"{r.scenario}:{r.hypothesis}", r.size, effect, f"{est:.6f}",
                            f"{se:.6f}", f"{cov:.2f}", r.n_sims_used, r.n_sims_excluded])


# Settings of the two simulation studies. In the independent-groups
# alternative the per-contact probabilities are p_u = 0.5, p_v = 0.05, the
# assignment under which vaccinated cases are the less infectious ones.
GROUP_NULL = DiseaseParams(p_o=0.01, p_u=0.4, p_v=0.4, delta=1.0, b=1, f=3, t_f=100)
GROUP_ALT = DiseaseParams(p_o=0.01, p_u=0.5, p_v=0.05, delta=0.1, b=1, f=3, t_f=100)
GROUP_ALT_AS_PRINTED = replace(GROUP_ALT, p_u=0.05, p_v=0.5)
NETWORK_NULL = DiseaseParams(p_o=0.01, p_u=0.5, p_v=0.5, delta=1.0, b=1, f=3, t_f=100,
                             outside_mode="day-1-only")
NETWORK_ALT = DiseaseParams(p_o=0.01, p_u=0.5, p_v=0.01, delta=0.2, b=1, f=3, t_f=100,
                            outside_mode="day-1-only")


def table1_configs(n_sims: int = 500, n_bootstrap: int = 500, seed: int = 2024,
                   sizes: Sequence[int] = (200, 500, 1000)) -> list[ScenarioConfig]:
    out = []
    for K in sizes:
        for hyp, params in (("null", GROUP_NULL), ("alternative", GROUP_ALT)):
            out.append(ScenarioConfig(label=f"groups_K{K}", mode="group", num_groups=K,
                                      params=params, vacc_prob=0.4, hypothesis=hyp,
                                      contact_mean=3.0, n_sims=n_sims,
                                      n_bootstrap=n_bootstrap, seed=seed))
    return out


def table2_configs(n_sims: int = 200, n_bootstrap: int = 1000, seed: int = 2024,
                   sizes: Sequence[int] = (8000, 10000, 12000)) -> list[ScenarioConfig]:
    out = []
    for nodes in sizes:
        for hyp, params in (("null", NETWORK_NULL), ("alternative", NETWORK_ALT)):
            out.append(ScenarioConfig(label=f"network_{nodes}", mode="network",
                                      num_groups=nodes // 5, group_size=5,
                                      out_tie_prob=scaled_out_tie_prob(nodes),
                                      params=params, vacc_prob=0.5, hypothesis=hyp,
                                      n_sims=n_sims, n_bootstrap=n_bootstrap, seed=seed))
    return out
