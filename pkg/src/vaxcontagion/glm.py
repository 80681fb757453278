"""Binary-outcome GLMs (logit and log links) fitted by Fisher scoring.

The default family is Bernoulli. For the log link a Poisson working
likelihood is also available: it estimates the same log-linear mean model
but places no upper bound on the fitted means, so it stays usable when
events are very common.

Each iteration solves the weighted least-squares system through a Cholesky
factorization of the Fisher information and halves the step until the
log-likelihood does not decrease and, for the log link, every fitted mean
stays below 1. :func:`fit_glm_batch` fits many frequency-weighted copies of
one dataset at once, which is how bootstrap replicates are refitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.special import expit

Link = Literal["logit", "log"]
Family = Literal["binomial", "poisson"]

# Status codes of a batched fit.
OK = 0
MAX_ITER = 1
HALVING_EXHAUSTED = 2
SINGULAR = 3
BOUNDARY = 4

_STATUS_TEXT = {
    OK: "converged",
    MAX_ITER: "iteration limit reached",
    HALVING_EXHAUSTED: "step-halving exhausted",
    SINGULAR: "singular information matrix",
    BOUNDARY: "fitted means on the parameter-space boundary",
}

#: Fitted means closer than this to 0 or 1 (logit) or to 1 (log) mark a
#: boundary solution, i.e. separation or an empty stratum.
BOUNDARY_EPS = 1e-7
#: Cholesky pivots below this fraction of the largest diagonal entry of the
#: information count as rank deficiency.
SINGULAR_RTOL = 1e-11


class GlmError(Exception):
    """Base class for fitting failures."""


class NonConvergence(GlmError):
    """The iterations stopped without reaching an interior maximum.

    Attributes
    ----------
    reason : str
    iterations : int
    deviance_trace : list of float
    """

    def __init__(self, reason: str, iterations: int = 0, deviance_trace=()):
        self.reason = reason
        self.iterations = iterations
        self.deviance_trace = list(deviance_trace)
        super().__init__(f"{reason} after {iterations} iterations")


class SingularInformation(GlmError):
    """The weighted design is rank deficient."""


@dataclass
class GlmFit:
    link: Link
    coefficients: np.ndarray
    converged: bool
    iterations: int
    deviance: float
    coefficient_covariance: np.ndarray
    loglik_trace: list = field(default_factory=list, repr=False)
    family: Family = "binomial"

    @property
    def n_params(self) -> int:
        return len(self.coefficients)


@dataclass
class BatchFit:
    link: Link
    coefficients: np.ndarray  # (B, p)
    status: np.ndarray  # (B,)
    iterations: np.ndarray  # (B,)
    deviance: np.ndarray  # (B,)
    family: Family = "binomial"

    @property
    def converged(self) -> np.ndarray:
        return self.status == OK


def inverse_link(eta, link: Link):
    if link == "logit":
        return expit(eta)
    if link == "log":
        return np.exp(eta)
    raise ValueError(f"unknown link {link!r}")


def _check_family(link, family):
    if family not in ("binomial", "poisson"):
        raise ValueError(f"unknown family {family!r}")
    if family == "poisson" and link != "log":
        raise ValueError("the poisson family is only available with the log link")


def _loglik_terms(eta, y, link, family="binomial"):
    if family == "poisson":
        # log(y!) is zero for 0/1 outcomes
        return y * eta - np.exp(eta)
    if link == "logit":
        return y * eta - np.logaddexp(0.0, eta)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(y > 0, eta, np.log(-np.expm1(np.minimum(eta, 0.0))))


def log_likelihood(beta, X, y, link: Link, weights=None, family: Family = "binomial") -> float:
    """Log-likelihood of ``beta``.

    Bernoulli by default, ``-inf`` for log-link points with a mean >= 1.
    The Poisson working likelihood has no such restriction.
    """
    _check_family(link, family)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float)
    eta = X @ np.asarray(beta, dtype=float)
    pos = w > 0
    if family == "binomial" and link == "log" and np.any(eta[pos] >= 0.0):
        return -np.inf
    return float(np.sum(w[pos] * _loglik_terms(eta[pos], y[pos], link, family)))


def score(beta, X, y, link: Link, weights=None, family: Family = "binomial") -> np.ndarray:
    """Gradient of :func:`log_likelihood` with respect to the coefficients."""
    _check_family(link, family)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float)
    mu = inverse_link(X @ np.asarray(beta, dtype=float), link)
    if link == "logit" or family == "poisson":
        return X.T @ (w * (y - mu))
    return X.T @ (w * (y - mu) / (1.0 - mu))


def _batch_state(beta, X, y, W, link, family="binomial"):
    """Log-likelihood, score and Fisher information for every replicate."""
    eta = beta @ X.T  # (B, n)
    pos = W > 0
    if link == "log" and family == "binomial":
        feasible = ~np.any((eta >= 0.0) & pos, axis=1)
        eta_c = np.minimum(eta, -1e-300)
    else:
        feasible = np.ones(len(beta), dtype=bool)
        eta_c = eta if link == "logit" else np.minimum(eta, 700.0)
    terms = _loglik_terms(eta_c, y[None, :], link, family)
    ll = np.sum(np.where(pos, W * terms, 0.0), axis=1)
    ll[~feasible] = -np.inf
    mu = inverse_link(eta_c, link)
    if link == "logit":
        resid_w = W * (y[None, :] - mu)
        info_w = W * mu * (1.0 - mu)
    elif family == "poisson":
        resid_w = W * (y[None, :] - mu)
        info_w = W * mu
    else:
        one_minus = -np.expm1(eta_c)
        resid_w = W * (y[None, :] - mu) / one_minus
        info_w = W * mu / one_minus
    grad = resid_w @ X
    info = np.matmul((info_w[:, :, None] * X[None, :, :]).transpose(0, 2, 1), X)
    return ll, grad, info, mu, feasible


def _solve_spd(info, grad):
    """Cholesky solves per replicate; ``None`` rows where rank deficient."""
    B, p, _ = info.shape
    step = np.zeros((B, p))
    ok = np.zeros(B, dtype=bool)
    scale = np.max(np.abs(np.diagonal(info, axis1=1, axis2=2)), axis=1)
    try:
        L = np.linalg.cholesky(info)
        chol_ok = np.ones(B, dtype=bool)
    except np.linalg.LinAlgError:
        L = np.zeros_like(info)
        chol_ok = np.zeros(B, dtype=bool)
        for k in range(B):
            try:
                L[k] = np.linalg.cholesky(info[k])
                chol_ok[k] = True
            except np.linalg.LinAlgError:
                pass
    piv = np.diagonal(L, axis1=1, axis2=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        well = chol_ok & (scale > 0) & (np.min(piv, axis=1) ** 2 > SINGULAR_RTOL * scale)
    if well.any():
        Lw = L[well]
        z = np.linalg.solve(Lw, grad[well][:, :, None])
        step[well] = np.linalg.solve(Lw.transpose(0, 2, 1), z)[:, :, 0]
        ok[well] = True
    return step, ok


def _initial_coefficients(X, y, W, link):
    B, p = W.shape[0], X.shape[1]
    beta = np.zeros((B, p))
    tot = W.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        ybar = np.where(tot > 0, (W @ y) / tot, 0.5)
    if link == "logit":
        ybar = np.clip(ybar, 1e-3, 1 - 1e-3)
        beta[:, 0] = np.log(ybar / (1 - ybar))
    else:
        ybar = np.clip(ybar, 1e-3, 0.95)
        beta[:, 0] = np.log(ybar)
    return beta


def fit_glm_batch(
    X,
    y,
    weights,
    link: Link,
    tol: float = 1e-8,
    max_iter: int = 100,
    max_halvings: int = 10,
    trace: list | None = None,
    family: Family = "binomial",
) -> BatchFit:
    """Fit one design under ``B`` rows of frequency weights.

    The first column of ``X`` must be the intercept. A replicate converges
    when the relative deviance change ``|D_new - D_old| / (|D_new| + 0.1)``
    drops below ``tol``; its final fitted means are then checked against
    :data:`BOUNDARY_EPS`.
    """
    _check_family(link, family)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    W = np.atleast_2d(np.asarray(weights, dtype=float))
    B, n = W.shape
    if X.shape[0] != n or len(y) != n:
        raise ValueError("X, y and weights disagree in length")
    if not np.all(np.isfinite(X)):
        raise ValueError("design matrix has non-finite values")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("y must be 0/1")

    beta = _initial_coefficients(X, y, W, link)
    status = np.full(B, -1)
    iterations = np.zeros(B, dtype=np.int64)
    ll, grad, info, mu, _ = _batch_state(beta, X, y, W, link, family)
    if trace is not None:
        trace.append(ll.copy())
    active = np.ones(B, dtype=bool)

    for it in range(1, max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        step, solvable = _solve_spd(info[idx], grad[idx])
        status[idx[~solvable]] = SINGULAR
        active[idx[~solvable]] = False
        idx, step = idx[solvable], step[solvable]
        if idx.size == 0:
            break
        iterations[idx] = it
        Xb, Wb = X, W[idx]
        factor = np.ones(idx.size)
        accepted = np.zeros(idx.size, dtype=bool)
        ll_old = ll[idx]
        new_beta = beta[idx].copy()
        new_state = None
        for _ in range(max_halvings + 1):
            pending = ~accepted
            cand = beta[idx] + factor[:, None] * step
            c_ll, c_grad, c_info, c_mu, c_feas = _batch_state(cand[pending], Xb, y, Wb[pending], link, family)
            slack = 1e-12 * (np.abs(ll_old[pending]) + 1.0)
            good = c_feas & (c_ll >= ll_old[pending] - slack)
            sub = np.flatnonzero(pending)[good]
            new_beta[sub] = cand[sub]
            if new_state is None:
                new_state = (np.full(idx.size, -np.inf), np.zeros_like(grad[idx]),
                             np.zeros_like(info[idx]))
            new_state[0][sub] = c_ll[good]
            new_state[1][sub] = c_grad[good]
            new_state[2][sub] = c_info[good]
            accepted[sub] = True
            if accepted.all():
                break
            factor[~accepted] *= 0.5
        dev_old = -2.0 * ll_old
        dev_new = np.where(accepted, -2.0 * new_state[0], dev_old)
        rel = np.abs(dev_new - dev_old) / (np.abs(dev_new) + 0.1)

        fail = ~accepted
        status[idx[fail]] = HALVING_EXHAUSTED
        active[idx[fail]] = False

        ok = accepted
        beta[idx[ok]] = new_beta[ok]
        ll[idx[ok]] = new_state[0][ok]
        grad[idx[ok]] = new_state[1][ok]
        info[idx[ok]] = new_state[2][ok]
        done = ok & (rel < tol)
        status[idx[done]] = OK
        active[idx[done]] = False
        if trace is not None:
            trace.append(ll.copy())

    status[active] = MAX_ITER

    # The deviance criterion stops while the coefficients still carry an
    # error of order sqrt(tol); one more Newton step removes it.
    conv = status == OK
    idx = np.flatnonzero(conv)
    if idx.size:
        step, solvable = _solve_spd(info[idx], grad[idx])
        cand = beta[idx] + step
        c_ll, c_grad, c_info, _, c_feas = _batch_state(cand, X, y, W[idx], link, family)
        slack = 1e-12 * (np.abs(ll[idx]) + 1.0)
        good = solvable & c_feas & (c_ll >= ll[idx] - slack)
        sub = idx[good]
        beta[sub], ll[sub] = cand[good], c_ll[good]
        grad[sub], info[sub] = c_grad[good], c_info[good]

    conv = status == OK
    if conv.any():
        eta = beta[conv] @ X.T
        mu = inverse_link(eta, link)
        pos = W[conv] > 0
        if link == "logit":
            edge = (mu < BOUNDARY_EPS) | (mu > 1 - BOUNDARY_EPS)
        elif family == "poisson":
            # an all-zero stratum drives its mean to 0
            edge = mu < BOUNDARY_EPS
        else:
            edge = mu > 1 - BOUNDARY_EPS
        on_edge = np.any(edge & pos, axis=1)
        status[np.flatnonzero(conv)[on_edge]] = BOUNDARY

    deviance = -2.0 * ll
    return BatchFit(link, beta, status, iterations, deviance, family)


def fit_glm(
    X,
    y,
    link: Link,
    tol: float = 1e-8,
    max_iter: int = 100,
    weights=None,
    max_halvings: int = 10,
    family: Family = "binomial",
) -> GlmFit:
    """Maximum-likelihood fit of ``g(E[y | X]) = X @ beta``.

    Raises
    ------
    SingularInformation
        The weighted design is rank deficient.
    NonConvergence
        Iteration limit, exhausted step-halving, or a boundary solution
        (separation, an all-event stratum under the Bernoulli log link, or
        an event-free stratum under the Poisson working likelihood).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be two-dimensional")
    n, p = X.shape
    if n < p:
        raise SingularInformation(f"{n} rows for {p} parameters")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    trace: list = []
    batch = fit_glm_batch(X, y, w[None, :], link, tol=tol, max_iter=max_iter,
                          max_halvings=max_halvings, trace=trace, family=family)
    code = int(batch.status[0])
    iters = int(batch.iterations[0])
    lls = [float(t[0]) for t in trace]
    if code == SINGULAR:
        raise SingularInformation("weighted design is rank deficient")
    if code != OK:
        raise NonConvergence(_STATUS_TEXT[code], iters, [-2 * v for v in lls])
    beta = batch.coefficients[0]
    _, _, info, _, _ = _batch_state(beta[None, :], X, y, w[None, :], link, family)
    L = np.linalg.cholesky(info[0])
    eye = np.eye(p)
    cov = np.linalg.solve(L.T, np.linalg.solve(L, eye))
    return GlmFit(link, beta.copy(), True, iters, float(batch.deviance[0]), cov, lls, family)


def predict_mean(fit: GlmFit, x) -> float | np.ndarray:
    """Fitted mean ``g^{-1}(x @ beta)``; ``x`` includes the intercept entry."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != fit.n_params:
        raise ValueError(f"expected {fit.n_params} covariate values, got {x.shape[-1]}")
    return inverse_link(x @ fit.coefficients, fit.link)


def residuals(fit: GlmFit, X, y) -> np.ndarray:
    """Response residuals ``y - mu_hat``."""
    return np.asarray(y, dtype=float) - predict_mean(fit, np.asarray(X, dtype=float))


def fit_report(fit: GlmFit, names=None) -> str:
    names = names or [f"beta{k}" for k in range(fit.n_params)]
    lines = [f"link={fit.link}", f"family={fit.family}", f"converged={str(fit.converged).lower()}",
             f"iterations={fit.iterations}", f"deviance={fit.deviance:.10g}"]
    lines += [f"{name}={value:.10g}" for name, value in zip(names, fit.coefficients)]
    return "\n".join(lines) + "\n"
