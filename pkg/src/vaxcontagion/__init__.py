"""Vaccination, contagion and infectiousness on contact networks.

Simulate discrete-time epidemics on networks or independent groups, extract
alter-ego analysis records, fit the mediator and outcome models and estimate
contagion and infectiousness effects with bootstrap confidence intervals.
"""

from .effects import (
    EffectEstimate,
    EmptyStratum,
    ModelSpec,
    contagion_effect,
    covariate_evaluation_point,
    estimate_effects,
    fit_and_estimate,
    fit_mediator_model,
    fit_outcome_model,
    indirect_effect,
    infectiousness_effect,
    residual_cross_correlation,
)
from .epidemic import (
    NEVER,
    DiseaseParams,
    Trajectory,
    assign_vaccination,
    simulate_epidemic,
    simulate_group_epidemics,
    simulate_independent_groups,
)
from .extract import GroupRecord, RecordTable, build_records
from .glm import GlmFit, NonConvergence, SingularInformation, fit_glm, predict_mean, residuals
from .inference import (
    GROUP_ALT,
    GROUP_NULL,
    NETWORK_ALT,
    NETWORK_NULL,
    BootstrapResult,
    ScenarioConfig,
    ScenarioDegenerate,
    SummaryRow,
    bootstrap_effects,
    monte_carlo_experiment,
    prepare_network,
    residual_diagnostic,
    run_scenario_once,
    simulate_dataset,
    table1_configs,
    table2_configs,
    test_null,
    write_summary_csv,
)
from .netgraph import (
    AlterEgoPair,
    Network,
    Zone,
    contacts,
    extract_independent_pairs,
    generate_family_network,
    load_edge_list,
    pairs_are_distance_separated,
    pairs_are_independent,
    save_edge_list,
    scaled_out_tie_prob,
)

__version__ = "0.1.0"
