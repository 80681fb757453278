"""Estimate contagion, infectiousness and indirect effects from one dataset.

1000 independent groups; vaccinated cases are far less infectious. The
mediator model (logistic) describes whether the alter falls sick first, the
outcome model (log link) whether the ego then falls sick. The indirect
effect of the alter's vaccination splits into a contagion part (the alter
is less likely to be sick) and an infectiousness part (a sick vaccinated
alter transmits less).
"""

from vaxcontagion import GROUP_ALT, ScenarioConfig, bootstrap_effects, fit_and_estimate, simulate_dataset
from vaxcontagion.glm import fit_report
from vaxcontagion.inference import substream

cfg = ScenarioConfig(label="demo", mode="group", num_groups=1000, params=GROUP_ALT,
                     vacc_prob=0.4, hypothesis="alternative", n_bootstrap=500, seed=3)
data = simulate_dataset(cfg, 0)
spec = cfg.model_spec
res = fit_and_estimate(data.records, spec, scales=("ratio", "difference", "odds-ratio"))

print("mediator model\n" + fit_report(res["mediator"], list(spec.regressors)))
print("outcome model\n" + fit_report(res["outcome"], list(spec.regressors)))
print("evaluation point:", {k: round(float(v), 3) for k, v in zip(spec.covariates, res["eval_point"])})
for scale, est in res["estimates"].items():
    print(f"{scale:>11}: contagion {est.contagion:.4f}, infectiousness {est.infectiousness:.4f}, "
          f"indirect {est.indirect:.4f}")

boot = bootstrap_effects(data.records, spec, cfg.n_bootstrap, substream(cfg.seed, 4, 0))
print(f"\nbootstrap, {boot.n_replicates_converged} of {boot.n_replicates_requested} replicates:")
for name in ("contagion", "infectiousness", "indirect"):
    print(f"  {name:>14} {getattr(boot.point, name):.3f}  se {boot.se[name]:.3f}  "
          f"95% CI [{boot.ci_low[name]:.3f}, {boot.ci_high[name]:.3f}]")
