"""Command-line entry point.

Subcommands::

    generate-network   family network -> edge list
    simulate           one epidemic -> trajectory CSV (and the group network)
    records            network + trajectory -> records CSV
    estimate           records CSV -> effect report CSV with bootstrap SE/CI
    reproduce          Monte Carlo tables -> summary CSV

Settings come from a ``key=value`` file (``--config``) and may be overridden
by ``--set key=value``; ``--seed``, ``--threads``, ``--out`` and ``--scale``
override the matching keys. Every command is deterministic given the seed.
The random substreams are the ones used by :mod:`vaxcontagion.inference`, so
``generate-network``, ``simulate``, ``records`` and ``estimate`` run with the
same seed and replicate reproduce :func:`run_scenario_once`.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 degenerate
scenario (models cannot be fitted), 4 input/output error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass, fields, replace
from typing import Any, Callable

import numpy as np
from scipy.sparse.csgraph import connected_components

from .effects import SCALES, EmptyStratum, ModelSpec, covariate_evaluation_point
from .epidemic import (
    DiseaseParams,
    assign_vaccination,
    draw_contact_counts,
    load_trajectory_csv,
    save_trajectory_csv,
    simulate_epidemic,
    simulate_group_epidemics,
)
from .extract import build_records, group_pairs, load_records_csv, save_records_csv
from .glm import GlmError
from .inference import (
    STAGE_BOOTSTRAP,
    STAGE_EPIDEMIC,
    STAGE_GROUPS,
    STAGE_NETWORK,
    STAGE_PAIRS,
    AllReplicatesFailed,
    ScenarioConfig,
    ScenarioDegenerate,
    bootstrap_effects,
    monte_carlo_experiment,
    substream,
    table1_configs,
    table2_configs,
    write_summary_csv,
)
from .netgraph import (
    EdgeListError,
    extract_independent_pairs,
    generate_family_network,
    load_edge_list,
    save_edge_list,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DEGENERATE = 3
EXIT_IO = 4


class ConfigError(ValueError):
    """Invalid key, value or combination of settings."""


class InputFileError(Exception):
    """An input file is missing, unreadable or malformed."""


def _boolean(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _name_list(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        text = text.strip()
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


def _optional_path(text: str) -> str | None:
    return text.strip() or None


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise ValueError("must be a positive integer")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise ValueError("must be a non-negative integer")
    return value


def _probability(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise ValueError("must lie in [0, 1]")
    return value


def _scale_factor(text: str) -> float:
    value = float(text)
    if not 0.0 < value <= 1.0:
        raise ValueError("must lie in (0, 1]")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise ValueError("must be an unsigned 64-bit integer")
    return value


@dataclass(frozen=True)
class RunConfig:
    """Every setting a command can read, with defaults for the family-network study."""

    mode: str = "network"
    num_groups: int = 2000
    group_size: int = 5
    out_tie_prob: float = 1e-4
    contact_mean: float = 3.0
    vacc_prob: float = 0.5
    p_o: float = 0.01
    p_u: float = 0.5
    p_v: float = 0.5
    delta: float = 1.0
    b: int = 1
    f: int = 3
    t_f: int = 100
    outside_mode: str = "day-1-only"
    hypothesis: str = "null"
    n_sims: int = 200
    n_bootstrap: int = 1000
    seed: int = 0
    replicate: int = 0
    threads: int = 1
    covariates: tuple[str, ...] | None = None
    include_mutual: bool = False
    exclude_partner: bool = True
    outcome_family: str = "poisson"
    eval_on: str = "all"
    scales: tuple[str, ...] = ("ratio",)
    table: str = "table1"
    scale: float = 1.0
    network: str | None = None
    trajectory: str | None = None
    records: str | None = None
    out: str | None = None
    network_out: str | None = None

    def disease_params(self) -> DiseaseParams:
        return DiseaseParams(p_o=self.p_o, p_u=self.p_u, p_v=self.p_v, delta=self.delta,
                             b=self.b, f=self.f, t_f=self.t_f, outside_mode=self.outside_mode)

    def model_spec(self) -> ModelSpec:
        if self.covariates is not None:
            return ModelSpec(self.covariates, self.mode, self.eval_on, self.outcome_family)
        base = ModelSpec.for_mode(self.mode, self.include_mutual, self.outcome_family)
        return replace(base, eval_on=self.eval_on)

    def scenario(self) -> ScenarioConfig:
        return ScenarioConfig(
            label="cli", mode=self.mode, num_groups=self.num_groups,
            params=self.disease_params(), vacc_prob=self.vacc_prob,
            hypothesis=self.hypothesis, contact_mean=self.contact_mean,
            group_size=self.group_size, out_tie_prob=self.out_tie_prob,
            n_sims=self.n_sims, n_bootstrap=self.n_bootstrap, seed=self.seed,
            covariates=self.covariates, include_mutual=self.include_mutual,
            exclude_partner=self.exclude_partner, outcome_family=self.outcome_family,
        )


#: Published schema: key -> parser of the textual value.
CONFIG_SCHEMA: dict[str, Callable[[str], Any]] = {
    "mode": _choice("group", "network"),
    "num_groups": _positive_int,
    "group_size": _positive_int,
    "out_tie_prob": _probability,
    "contact_mean": float,
    "vacc_prob": _probability,
    "p_o": _probability,
    "p_u": _probability,
    "p_v": _probability,
    "delta": float,
    "b": _nonneg_int,
    "f": _nonneg_int,
    "t_f": _positive_int,
    "outside_mode": _choice("every-day", "day-1-only"),
    "hypothesis": _choice("null", "alternative"),
    "n_sims": _positive_int,
    "n_bootstrap": _positive_int,
    "seed": _seed,
    "replicate": _nonneg_int,
    "threads": _positive_int,
    "covariates": _name_list,
    "include_mutual": _boolean,
    "exclude_partner": _boolean,
    "outcome_family": _choice("binomial", "poisson"),
    "eval_on": _choice("all", "mediator-positive"),
    "scales": _name_list,
    "table": _choice("table1", "table2"),
    "scale": _scale_factor,
    "network": _optional_path,
    "trajectory": _optional_path,
    "records": _optional_path,
    "out": _optional_path,
    "network_out": _optional_path,
}
assert set(CONFIG_SCHEMA) == {f.name for f in fields(RunConfig)}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, Any]:
    """Parse ``key=value`` lines; ``#`` starts a comment. Unknown keys are errors."""
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = _convert(key, value, f"{source}:{lineno}")
    return values


def _convert(key: str, value: str, where: str) -> Any:
    parser = CONFIG_SCHEMA.get(key)
    if parser is None:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        return parser(value)
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key}: {exc}") from None


def build_run_config(values: dict[str, Any]) -> RunConfig:
    cfg = RunConfig(**values)
    if cfg.mode == "group" and "vacc_prob" not in values:
        cfg = replace(cfg, vacc_prob=0.4)
    for name in cfg.scales:
        if name not in SCALES:
            raise ConfigError(f"unknown scale {name!r}; expected one of {', '.join(SCALES)}")
    try:
        cfg.disease_params()
        cfg.model_spec()
        cfg.scenario()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if value is None:
            text = ""
        elif isinstance(value, tuple):
            text = ",".join(value)
        elif isinstance(value, bool):
            text = str(value).lower()
        else:
            text = str(value)
        lines.append(f"{f.name}={text}")
    return "\n".join(lines) + "\n"


# --- commands ---------------------------------------------------------------


def _require(value: str | None, what: str) -> str:
    if not value:
        raise ConfigError(f"missing {what}")
    return value


def _read(loader, path: str):
    if not os.path.exists(path):
        raise InputFileError(f"{path}: no such file")
    try:
        return loader(path)
    except (EdgeListError, ValueError, UnicodeDecodeError) as exc:
        raise InputFileError(f"{path}: {exc}") from None


def cmd_generate_network(cfg: RunConfig) -> None:
    out = _require(cfg.out, "--out path for the edge list")
    net = generate_family_network(cfg.num_groups, cfg.group_size, cfg.out_tie_prob,
                                  substream(cfg.seed, STAGE_NETWORK))
    save_edge_list(net, out)


def cmd_simulate(cfg: RunConfig) -> None:
    out = _require(cfg.out, "--out path for the trajectory CSV")
    params = cfg.disease_params()
    rng = substream(cfg.seed, STAGE_EPIDEMIC, cfg.replicate)
    if cfg.mode == "network":
        net = _read(load_edge_list, _require(cfg.network, "network edge list (--network)"))
        vacc = assign_vaccination(net.node_count, cfg.vacc_prob, rng)
        traj = simulate_epidemic(net, vacc, params, rng)
    else:
        counts = draw_contact_counts(cfg.num_groups, cfg.contact_mean,
                                     substream(cfg.seed, STAGE_GROUPS, cfg.replicate))
        sim = simulate_group_epidemics(counts, cfg.vacc_prob, params, rng)
        net, vacc, traj = sim.network, sim.vaccinated, sim.trajectory
        if cfg.network_out:
            save_edge_list(net, cfg.network_out)
    save_trajectory_csv(out, vacc, traj)


def _component_starts(net) -> np.ndarray:
    """First node of each connected component, for contiguous disjoint groups."""
    _, labels = connected_components(net.adjacency, directed=False)
    starts = np.flatnonzero(np.r_[True, labels[1:] != labels[:-1]])
    if len(np.unique(labels)) != len(starts):
        raise ConfigError("group-mode network is not a sequence of contiguous groups")
    if np.any(np.diff(np.r_[starts, net.node_count]) < 2):
        raise ConfigError("every group needs an alter and an ego")
    return starts


def cmd_records(cfg: RunConfig) -> None:
    out = _require(cfg.out, "--out path for the records CSV")
    net = _read(load_edge_list, _require(cfg.network, "network edge list (--network)"))
    vacc, traj = _read(load_trajectory_csv, _require(cfg.trajectory, "trajectory CSV (--trajectory)"))
    if len(traj) != net.node_count:
        raise InputFileError("trajectory and network disagree on the number of nodes")
    if cfg.mode == "network":
        pairs = [p for p, _ in extract_independent_pairs(net, substream(cfg.seed, STAGE_PAIRS))]
    else:
        pairs = group_pairs(_component_starts(net))
    records = build_records(net, traj, vacc, pairs, cfg.disease_params(),
                            exclude_partner=cfg.exclude_partner)
    save_records_csv(out, records)


REPORT_EFFECTS = ("contagion", "infectiousness", "indirect")


def cmd_estimate(cfg: RunConfig) -> None:
    out = _require(cfg.out, "--out path for the effect report")
    records = _read(load_records_csv, _require(cfg.records, "records CSV (--records)"))
    if len(records) == 0:
        raise ScenarioDegenerate("records file has no rows")
    spec = cfg.model_spec()
    c = covariate_evaluation_point(records, spec)
    header = ["scale"]
    for name in REPORT_EFFECTS:
        header += [name, f"{name}_se", f"{name}_ci_low", f"{name}_ci_high"]
    header += ["n_bootstrap", "n_converged"] + [f"eval_{name}" for name in spec.covariates]
    rows = []
    for scale in cfg.scales:
        # every scale resamples the same groups
        rng = substream(cfg.seed, STAGE_BOOTSTRAP, cfg.replicate)
        res = bootstrap_effects(records, spec, cfg.n_bootstrap, rng, scale=scale)
        row = [scale]
        for name in REPORT_EFFECTS:
            row += [_fmt(getattr(res.point, name)), _fmt(res.se[name]),
                    _fmt(res.ci_low[name]), _fmt(res.ci_high[name])]
        row += [res.n_replicates_requested, res.n_replicates_converged] + [_fmt(v) for v in c]
        rows.append(row)
    with open(out, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def scaled_count(base: int, scale: float) -> int:
    return max(1, int(round(base * scale)))


def reproduce_configs(table: str, scale: float, seed: int) -> list[ScenarioConfig]:
    if not 0.0 < scale <= 1.0:
        raise ConfigError("scale must lie in (0, 1]")
    if table == "table1":
        return table1_configs(scaled_count(500, scale), scaled_count(500, scale), seed)
    if table == "table2":
        return table2_configs(scaled_count(200, scale), scaled_count(1000, scale), seed)
    raise ConfigError(f"unknown table {table!r}")


def cmd_reproduce(cfg: RunConfig) -> None:
    out = _require(cfg.out, "--out path for the summary CSV")
    rows = [monte_carlo_experiment(c, threads=cfg.threads)
            for c in reproduce_configs(cfg.table, cfg.scale, cfg.seed)]
    write_summary_csv(out, rows)


COMMANDS = {
    "generate-network": cmd_generate_network,
    "simulate": cmd_simulate,
    "records": cmd_records,
    "estimate": cmd_estimate,
    "reproduce": cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vaxcontagion",
        description="Simulate epidemics with vaccination and estimate contagion "
                    "and infectiousness effects.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH", help="key=value settings file")
        p.add_argument("--seed", type=str, help="unsigned 64-bit seed")
        p.add_argument("--threads", type=str, help="worker processes")
        p.add_argument("--out", metavar="PATH", help="output file")
        p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                       help="override one setting (repeatable)")
        if name in ("simulate", "records"):
            p.add_argument("--network", metavar="PATH", help="edge list")
        if name == "simulate":
            p.add_argument("--network-out", metavar="PATH",
                           help="group mode: also write the group network")
        if name == "records":
            p.add_argument("--trajectory", metavar="PATH", help="trajectory CSV")
        if name == "estimate":
            p.add_argument("--records", metavar="PATH", help="records CSV")
        if name == "reproduce":
            p.add_argument("--table", choices=("table1", "table2"))
            p.add_argument("--scale", type=str, help="fraction in (0, 1] of the full run size")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values: dict[str, Any] = {}
    if args.config:
        if not os.path.exists(args.config):
            raise InputFileError(f"{args.config}: no such file")
        with open(args.config, encoding="utf-8") as fh:
            values.update(parse_config_text(fh.read(), args.config))
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        values[key.strip()] = _convert(key.strip(), value, "--set")
    for key in ("seed", "threads", "scale"):
        text = getattr(args, key, None)
        if text is not None:
            values[key] = _convert(key, text, f"--{key}")
    for key in ("out", "network", "network_out", "trajectory", "records", "table"):
        text = getattr(args, key, None)
        if text is not None:
            values[key] = text
    return build_run_config(values)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ScenarioDegenerate, AllReplicatesFailed, GlmError, EmptyStratum) as exc:
        print(f"degenerate scenario: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (InputFileError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
