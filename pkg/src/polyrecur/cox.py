"""Cox proportional-hazards fitting by Newton-Raphson on the partial
likelihood.

The log partial likelihood, its gradient, and the observed information are
accumulated in one backward pass over event-time tie groups.  The Efron tie
correction subtracts an increasing fraction of the tied-event risk mass
from each denominator; Breslow leaves the denominators whole.  Both run
through the same accumulation (Breslow simply uses zero fractions), so they
agree bitwise on tie-free data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .cohort import SurvivalDataset, VariableSpec
from .errors import MissingCovariateError, NoEventsError, SingularHessianError
from .survival import chi_square_sf

Z_95 = 1.96


class TieMethod(Enum):
    EFRON = "efron"
    BRESLOW = "breslow"


@dataclass(frozen=True)
class CoxConfig:
    ties: TieMethod = TieMethod.EFRON
    tol: float = 1e-9          # minimum log-likelihood improvement
    gradient_tol: float = 1e-7  # sup-norm of the score at convergence
    max_iter: int = 25
    separation_bound: float = 20.0


@dataclass
class CoxFit:
    """Fitted model: coefficients, covariance, risk ratios, global test."""

    covariates: list[str]                    # coded column names
    coefficients: dict[str, float]
    covariance: np.ndarray
    standard_errors: dict[str, float]
    risk_ratios: dict[str, tuple[float, float, float]]
    wald_p: dict[str, float]
    global_chi_square: float
    global_df: int
    global_p: float
    log_likelihood: float
    null_log_likelihood: float
    iterations_used: int
    converged: bool
    monotone_likelihood: bool
    ll_path: list[float] = field(default_factory=list)
    variables: list[str] = field(default_factory=list)
    variable_specs: list[VariableSpec] = field(default_factory=list)

    @property
    def beta(self) -> np.ndarray:
        return np.array([self.coefficients[c] for c in self.covariates])


def _sorted_tie_groups(times: np.ndarray):
    """Ascending sort order plus [start, end) bounds of tied-time runs."""
    order = np.argsort(times, kind="stable")
    sorted_times = times[order]
    boundaries = np.nonzero(np.diff(sorted_times))[0] + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [times.size]))
    return order, starts, ends


def _loglik_quantities(X, times, events, beta, ties: TieMethod,
                       want_derivatives: bool = True):
    """Log partial likelihood and optionally (score, information).

    One backward pass over tie groups maintains the risk-set sums of
    exp(eta), exp(eta)*x, and exp(eta)*x*x'.
    """
    n, p = X.shape
    order, starts, ends = _sorted_tie_groups(times)
    Xs = X[order]
    es = events[order]
    eta = Xs @ beta
    shift = eta.max() if n else 0.0  # guards exp overflow; cancels in ratios
    phi = np.exp(eta - shift)
    phi_x = phi[:, None] * Xs

    s0 = 0.0
    s1 = np.zeros(p)
    s2 = np.zeros((p, p))
    ll = 0.0
    grad = np.zeros(p)
    info = np.zeros((p, p))

    for g in range(starts.size - 1, -1, -1):
        lo, hi = starts[g], ends[g]
        block = slice(lo, hi)
        s0 += phi[block].sum()
        s1 += phi_x[block].sum(axis=0)
        if want_derivatives:
            s2 += Xs[block].T @ phi_x[block]
        dead = es[block]
        d = int(dead.sum())
        if d == 0:
            continue
        t0 = phi[block][dead].sum()
        t1 = phi_x[block][dead].sum(axis=0)
        if ties is TieMethod.EFRON:
            prop = np.arange(d) / d
        else:
            prop = np.zeros(d)
        denom = s0 - prop * t0
        ll += eta[block][dead].sum() - np.log(denom).sum() - d * shift
        if not want_derivatives:
            continue
        t2 = Xs[block][dead].T @ phi_x[block][dead]
        inv_denom = 1.0 / denom
        num = s1[None, :] - np.outer(prop, t1)          # d x p
        summand = num * inv_denom[:, None]
        grad += Xs[block][dead].sum(axis=0) - summand.sum(axis=0)
        a1 = s2 * inv_denom.sum() - t2 * (prop * inv_denom).sum()
        info += a1 - summand.T @ summand

    return ll, grad, info


def partial_log_likelihood(beta, dataset: SurvivalDataset, covariates,
                           ties: TieMethod = TieMethod.EFRON) -> float:
    """Log partial likelihood at ``beta`` for the named covariates."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if not np.all(np.isfinite(beta)):
        raise ValueError("beta must be finite")
    X, names = dataset.design_matrix(covariates)
    if beta.shape != (len(names),):
        raise ValueError(f"beta has {beta.size} entries for "
                         f"{len(names)} coded columns")
    ll, _, _ = _loglik_quantities(X, dataset.time_days, dataset.event, beta,
                                  ties, want_derivatives=False)
    return float(ll)


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def fit_cox(dataset: SurvivalDataset, covariates,
            config: CoxConfig = CoxConfig()) -> CoxFit:
    """Newton-Raphson fit from beta = 0 with step halving.

    Convergence requires a likelihood improvement below ``tol`` together
    with either a score below ``gradient_tol`` or a negligible Newton
    decrement (the latter matters at large n, where the float resolution
    of the log likelihood floors the reachable score).  Raises
    SingularHessianError on collinear designs and flags (without raising)
    monotone-likelihood separation when a coefficient runs past
    ``separation_bound``.
    """
    X_raw, names = dataset.design_matrix(covariates)
    times = dataset.time_days
    events = dataset.event
    if not events.any():
        raise NoEventsError("Cox model requires at least one event")
    if X_raw.shape[1] == 0:
        raise ValueError("no coded columns for the requested covariates")

    # optimize on standardized columns so the gradient tolerance is scale
    # free; the partial likelihood is invariant to centering and the
    # coefficients map back exactly through the column scales
    center = X_raw.mean(axis=0)
    scale = X_raw.std(axis=0)
    scale[scale == 0.0] = 1.0
    X = (X_raw - center) / scale

    beta = np.zeros(X.shape[1])
    ll, grad, info = _loglik_quantities(X, times, events, beta, config.ties)
    null_ll = ll
    ll_path = [ll]
    converged = False
    monotone = False
    iterations = 0
    improvement = math.inf

    for _ in range(config.max_iter + 1):
        try:
            delta = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError as err:
            raise SingularHessianError(
                "information matrix is singular; check for collinear or "
                "constant covariates") from err
        # converged when the last step barely improved and either the score
        # vanished or the Newton decrement (the improvement another step
        # could buy) is negligible; the decrement escape matters at large n
        # where the float resolution of the log likelihood floors the score
        decrement = 0.5 * float(grad @ delta)
        if improvement < config.tol and (
                np.abs(grad).max() < config.gradient_tol
                or abs(decrement) < 0.01 * config.tol):
            converged = True
            break
        if iterations == config.max_iter:
            break
        iterations += 1
        step = 1.0
        while True:
            candidate = beta + step * delta
            new_ll, new_grad, new_info = _loglik_quantities(
                X, times, events, candidate, config.ties)
            if new_ll >= ll or step < 2.0 ** -20:
                break
            step /= 2.0
        improvement = new_ll - ll
        beta, ll, grad, info = candidate, new_ll, new_grad, new_info
        ll_path.append(ll)
        if np.abs(beta / scale).max() > config.separation_bound:
            monotone = True
            break

    try:
        covariance_std = np.linalg.inv(info)
    except np.linalg.LinAlgError as err:
        raise SingularHessianError(
            "information matrix is singular at the optimum") from err

    beta = beta / scale
    covariance = covariance_std / np.outer(scale, scale)
    se = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    coefficients = dict(zip(names, beta.tolist()))
    standard_errors = dict(zip(names, se.tolist()))
    risk_ratios = {}
    wald_p = {}
    with np.errstate(over="ignore"):
        for i, name in enumerate(names):
            rr = float(np.exp(beta[i]))
            lo = float(np.exp(beta[i] - Z_95 * se[i]))
            hi = float(np.exp(beta[i] + Z_95 * se[i]))
            risk_ratios[name] = (rr, lo, hi)
            z = beta[i] / se[i] if se[i] > 0 else math.inf
            wald_p[name] = 2.0 * _normal_sf(abs(z))

    global_chi2 = max(2.0 * (ll - null_ll), 0.0)
    df = len(names)
    return CoxFit(
        covariates=names,
        coefficients=coefficients,
        covariance=covariance,
        standard_errors=standard_errors,
        risk_ratios=risk_ratios,
        wald_p=wald_p,
        global_chi_square=global_chi2,
        global_df=df,
        global_p=chi_square_sf(global_chi2, df),
        log_likelihood=float(ll),
        null_log_likelihood=float(null_ll),
        iterations_used=iterations,
        converged=converged,
        monotone_likelihood=monotone,
        ll_path=ll_path,
        variables=list(covariates),
        variable_specs=[dataset.variable(v) for v in covariates],
    )


def _code_row(fit: CoxFit, row: dict) -> np.ndarray:
    x = np.zeros(len(fit.covariates))
    pos = 0
    for spec in fit.variable_specs:
        if spec.name not in row:
            raise MissingCovariateError(spec.name)
        value = row[spec.name]
        if not spec.levels:  # continuous
            x[pos] = float(value)
            pos += 1
        else:
            if str(value) not in spec.levels:
                raise ValueError(f"unknown level {value!r} for {spec.name}")
            for level in spec.levels[1:]:
                x[pos] = 1.0 if str(value) == level else 0.0
                pos += 1
    return x


def predict_relative_risk(fit: CoxFit, covariate_row: dict) -> float:
    """exp(beta . x) for a new subject, coded exactly as in training.

    A row at every reference level with zero continuous values scores 1.
    """
    x = _code_row(fit, covariate_row)
    return float(math.exp(float(fit.beta @ x)))
