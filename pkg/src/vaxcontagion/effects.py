"""Contagion, infectiousness and indirect effects from the two fitted models.

The mediator model is a logistic regression of ``Y_aT`` on ``V_a`` and the
covariates over all groups; the outcome model a log-linear regression of
``Y_eTs`` on the same regressors among groups with ``Y_aT = 1``, fitted by
default with a Poisson working likelihood (see :class:`ModelSpec`). At an
evaluation point ``c`` write

* ``p1``, ``p0``: mediator means with ``V_a`` = 1, 0;
* ``m1``, ``m0``: outcome means with ``V_a`` = 1, 0.

The model-implied ego risks are ``E11 = m1 p1`` (alter vaccinated),
``E00 = m0 p0`` (unvaccinated) and the cross-world ``E01 = m0 p1``. The
contagion effect contrasts ``E01`` with ``E00``, the infectiousness effect
``E11`` with ``E01`` and the indirect effect ``E11`` with ``E00``.
Network-data estimands use the same code with the ego- and alter-contact
summaries added to the covariates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.special import expit

from .extract import RECORD_COLUMNS, RecordTable
from .glm import GlmFit, fit_glm

Scale = Literal["difference", "ratio", "odds-ratio"]
SCALES: tuple[Scale, ...] = ("difference", "ratio", "odds-ratio")

GROUP_COVARIATES = ("V_e", "U_a", "L_a")
NETWORK_COVARIATES = ("V_e", "U_a", "L_a", "U_e", "L_e")
MUTUAL_COVARIATES = ("M_u", "M_v")


class EmptyStratum(Exception):
    """The mediator-positive subset cannot support the outcome model."""


@dataclass(frozen=True)
class ModelSpec:
    """Covariates shared by the mediator and outcome models.

    ``V_a`` and the intercept are always included and must not be listed.
    ``eval_on`` chooses the rows averaged for the evaluation point.
    ``outcome_family`` is the likelihood of the log-link outcome model.
    With ``"binomial"`` the maximum lies on the mean-1 boundary whenever
    the outcome is near-universal among mediator-positive groups, and the
    fit is rejected; ``"poisson"`` estimates the same coefficients without
    that constraint.
    """

    covariates: tuple[str, ...] = GROUP_COVARIATES
    mode: Literal["group", "network"] = "group"
    eval_on: Literal["all", "mediator-positive"] = "all"
    outcome_family: Literal["binomial", "poisson"] = "poisson"

    def __post_init__(self):
        if self.outcome_family not in ("binomial", "poisson"):
            raise ValueError(f"unknown outcome_family {self.outcome_family!r}")
        bad = [c for c in self.covariates if c not in RECORD_COLUMNS or c in
               ("pair_id", "V_a", "T", "Y_aT", "Y_eTs")]
        if bad:
            raise ValueError(f"invalid covariates {bad}")
        if len(set(self.covariates)) != len(self.covariates):
            raise ValueError("duplicate covariates")

    @classmethod
    def for_mode(cls, mode: str, include_mutual: bool = False,
                 outcome_family: str = "poisson") -> "ModelSpec":
        if mode == "group":
            return cls(GROUP_COVARIATES, "group", outcome_family=outcome_family)
        if mode == "network":
            covs = NETWORK_COVARIATES + (MUTUAL_COVARIATES if include_mutual else ())
            return cls(covs, "network", outcome_family=outcome_family)
        raise ValueError(f"unknown mode {mode!r}")

    @property
    def regressors(self) -> tuple[str, ...]:
        return ("intercept", "V_a") + self.covariates


@dataclass(frozen=True)
class EffectEstimate:
    scale: Scale
    contagion: float
    infectiousness: float
    indirect: float
    eval_point: np.ndarray


def covariate_matrix(records: RecordTable, spec: ModelSpec) -> np.ndarray:
    if not spec.covariates:
        return np.empty((len(records), 0))
    return np.column_stack([records.column(c) for c in spec.covariates]).astype(float)


def design_matrix(records: RecordTable, spec: ModelSpec) -> np.ndarray:
    n = len(records)
    return np.column_stack([np.ones(n), records.V_a.astype(float), covariate_matrix(records, spec)])


def fit_mediator_model(records: RecordTable, spec: ModelSpec, **glm_options) -> GlmFit:
    if len(np.unique(records.V_a)) < 2:
        raise EmptyStratum("alter vaccination does not vary")
    return fit_glm(design_matrix(records, spec), records.Y_aT, "logit", **glm_options)


def fit_outcome_model(records: RecordTable, spec: ModelSpec, **glm_options) -> GlmFit:
    sub = records.take(records.Y_aT == 1)
    if len(sub) == 0:
        raise EmptyStratum("no group with the alter sick first")
    if len(np.unique(sub.V_a)) < 2:
        raise EmptyStratum("alter vaccination does not vary among mediator-positive groups")
    glm_options.setdefault("family", spec.outcome_family)
    return fit_glm(design_matrix(sub, spec), sub.Y_eTs, "log", **glm_options)


def covariate_evaluation_point(records: RecordTable, spec: ModelSpec) -> np.ndarray:
    """Sample means of the covariates (over all groups by default)."""
    if len(records) == 0:
        raise ValueError("no records")
    if spec.eval_on == "mediator-positive":
        records = records.take(records.Y_aT == 1)
    return covariate_matrix(records, spec).mean(axis=0)


def _linear_parts(fit_coef: np.ndarray, c: np.ndarray):
    """Return ``(intercept + covariate term, V_a coefficient)``."""
    coef = np.asarray(fit_coef, dtype=float)
    base = coef[..., 0] + np.sum(coef[..., 2:] * np.asarray(c, dtype=float), axis=-1)
    return base, coef[..., 1]


def model_means(mediator_coef, outcome_coef, c):
    """``(p0, p1, m0, m1)`` at evaluation point ``c``; arrays broadcast over leading axes."""
    eta_base, eta_v = _linear_parts(mediator_coef, c)
    gam_base, gam_v = _linear_parts(outcome_coef, c)
    p0, p1 = expit(eta_base), expit(eta_base + eta_v)
    m0, m1 = np.exp(gam_base), np.exp(gam_base + gam_v)
    return p0, p1, m0, m1


def _coefs(fit):
    return fit.coefficients if isinstance(fit, GlmFit) else np.asarray(fit, dtype=float)


def contagion_effect(mediator_fit, outcome_fit, c, scale: Scale = "ratio"):
    p0, p1, m0, m1 = model_means(_coefs(mediator_fit), _coefs(outcome_fit), c)
    if scale == "difference":
        return m0 * (p1 - p0)
    if scale == "ratio":
        # The ratio does not involve the outcome model, except that it is
        # undefined (and set to 1) when the baseline outcome mean is 0.
        return np.where(m0 > 0, p1 / p0, 1.0)
    if scale == "odds-ratio":
        e01, e00 = m0 * p1, m0 * p0
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(m0 > 0, e01 * (1 - e00) / (e00 * (1 - e01)), 1.0)
    raise ValueError(f"unknown scale {scale!r}")


def contagion_ratio_closed_form(mediator_coef, c) -> float:
    """``(e^{eta1} + e^{eta0+eta1+eta2'c}) / (1 + e^{eta0+eta1+eta2'c})``."""
    base, eta1 = _linear_parts(np.asarray(mediator_coef, dtype=float), c)
    return (np.exp(eta1) + np.exp(base + eta1)) / (1.0 + np.exp(base + eta1))


def infectiousness_effect(mediator_fit, outcome_fit, c, scale: Scale = "ratio"):
    if scale == "ratio":
        return np.exp(_coefs(outcome_fit)[..., 1])
    p0, p1, m0, m1 = model_means(_coefs(mediator_fit), _coefs(outcome_fit), c)
    if scale == "difference":
        return p1 * (m1 - m0)
    if scale == "odds-ratio":
        e11, e01 = m1 * p1, m0 * p1
        return e11 * (1 - e01) / (e01 * (1 - e11))
    raise ValueError(f"unknown scale {scale!r}")


def indirect_effect(mediator_fit, outcome_fit, c, scale: Scale = "ratio", check: bool = True):
    """Indirect effect from ``E11`` and ``E00`` directly.

    With ``check`` the value is compared with the composition of the
    contagion and infectiousness effects (product on ratio scales, sum on
    the difference scale).
    """
    p0, p1, m0, m1 = model_means(_coefs(mediator_fit), _coefs(outcome_fit), c)
    e11, e00 = m1 * p1, m0 * p0
    if scale == "difference":
        value = e11 - e00
    elif scale == "ratio":
        value = e11 / e00
    elif scale == "odds-ratio":
        value = e11 * (1 - e00) / (e00 * (1 - e11))
    else:
        raise ValueError(f"unknown scale {scale!r}")
    if check:
        con = contagion_effect(mediator_fit, outcome_fit, c, scale)
        inf = infectiousness_effect(mediator_fit, outcome_fit, c, scale)
        composed = con + inf if scale == "difference" else con * inf
        if scale == "difference":
            ok = np.allclose(value, composed, rtol=0, atol=1e-10)
        else:
            ok = np.allclose(value, composed, rtol=1e-10, atol=0)
        if not ok:
            raise ArithmeticError("indirect effect does not decompose")
    return value


def estimate_effects(mediator_fit, outcome_fit, c, scale: Scale = "ratio") -> EffectEstimate:
    return EffectEstimate(
        scale=scale,
        contagion=float(contagion_effect(mediator_fit, outcome_fit, c, scale)),
        infectiousness=float(infectiousness_effect(mediator_fit, outcome_fit, c, scale)),
        indirect=float(indirect_effect(mediator_fit, outcome_fit, c, scale)),
        eval_point=np.asarray(c, dtype=float),
    )


def fit_and_estimate(records: RecordTable, spec: ModelSpec,
                     scales: Sequence[Scale] = ("ratio",)) -> dict:
    """Fit both models and return ``{scale: EffectEstimate}`` plus the fits."""
    med = fit_mediator_model(records, spec)
    out = fit_outcome_model(records, spec)
    c = covariate_evaluation_point(records, spec)
    estimates = {s: estimate_effects(med, out, c, s) for s in scales}
    return {"mediator": med, "outcome": out, "eval_point": c, "estimates": estimates}


@dataclass(frozen=True)
class ResidualDiagnostic:
    """Mean product of residuals over matched pairs of groups and its MC SE."""

    mediator_mean: float
    mediator_se: float
    mediator_pairs: int
    outcome_mean: float
    outcome_se: float
    outcome_pairs: int

    def mediator_z(self) -> float:
        return self.mediator_mean / self.mediator_se if self.mediator_se > 0 else 0.0

    def outcome_z(self) -> float:
        return self.outcome_mean / self.outcome_se if self.outcome_se > 0 else 0.0


def random_matching(n: int, rng: np.random.Generator, candidates=None) -> np.ndarray:
    """Random disjoint index pairs, shape ``(m, 2)``.

    Without ``candidates`` all ``n`` items are paired at random. Otherwise
    the candidate pairs are visited in random order and a pair is kept when
    neither index is used yet.
    """
    if candidates is None:
        perm = rng.permutation(n)
        half = n // 2
        return np.column_stack([perm[:half], perm[half:2 * half]])
    candidates = np.asarray(candidates, dtype=np.int64).reshape(-1, 2)
    used = np.zeros(n, dtype=bool)
    keep = []
    for i in rng.permutation(len(candidates)):
        a, b = candidates[i]
        if not (used[a] or used[b]):
            used[a] = used[b] = True
            keep.append(i)
    return candidates[np.array(keep, dtype=np.int64)]


def _matched_products(res: np.ndarray, rng: np.random.Generator, candidates=None) -> np.ndarray:
    """Products over a random matching; pairs touching a NaN residual are dropped."""
    m = random_matching(len(res), rng, candidates)
    prod = res[m[:, 0]] * res[m[:, 1]]
    return prod[~np.isnan(prod)]


def _mean_se(products: np.ndarray) -> tuple[float, float]:
    if len(products) == 0:
        return 0.0, 0.0
    if len(products) == 1:
        return float(products[0]), 0.0
    return float(products.mean()), float(products.std(ddof=1) / np.sqrt(len(products)))


def residual_products(records: RecordTable, mediator_fit, outcome_fit, spec: ModelSpec,
                      rng: np.random.Generator, candidates=None) -> tuple[np.ndarray, np.ndarray]:
    """Products of residuals for randomly matched disjoint pairs of groups.

    Mediator residuals use every group; outcome residuals the
    mediator-positive groups. Each group is used in at most one pair.
    ``candidates`` restricts the matching to the listed ``(k, h)`` row
    pairs, e.g. groups that are close in the network; outcome products are
    then kept only where both rows are mediator-positive.
    """
    X = design_matrix(records, spec)
    res_m = records.Y_aT - expit(X @ _coefs(mediator_fit))
    pos = records.Y_aT == 1
    if candidates is None:
        res_o = records.Y_eTs[pos] - np.exp(X[pos] @ _coefs(outcome_fit))
        return _matched_products(res_m, rng), _matched_products(res_o, rng)
    candidates = np.asarray(candidates, dtype=np.int64).reshape(-1, 2)
    res_o = np.where(pos, records.Y_eTs - np.exp(X @ _coefs(outcome_fit)), np.nan)
    both = pos[candidates[:, 0]] & pos[candidates[:, 1]]
    return (_matched_products(res_m, rng, candidates),
            _matched_products(res_o, rng, candidates[both]))


def residual_cross_correlation(records: RecordTable, mediator_fit, outcome_fit, spec: ModelSpec,
                               rng: np.random.Generator, candidates=None) -> ResidualDiagnostic:
    prod_m, prod_o = residual_products(records, mediator_fit, outcome_fit, spec, rng, candidates)
    return summarize_products(prod_m, prod_o)


def summarize_products(prod_m: np.ndarray, prod_o: np.ndarray) -> ResidualDiagnostic:
    mm, sm = _mean_se(np.asarray(prod_m, dtype=float))
    mo, so = _mean_se(np.asarray(prod_o, dtype=float))
    return ResidualDiagnostic(mm, sm, len(prod_m), mo, so, len(prod_o))
