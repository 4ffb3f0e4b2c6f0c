"""Shared test utilities: dataset construction and slow reference oracles."""

from __future__ import annotations

import numpy as np

from polyrecur.cohort import SurvivalDataset, VariableKind, VariableSpec


def toy_dataset(times, events, factors=None, continuous=None):
    """Assemble a SurvivalDataset directly from columns.

    ``factors`` maps name -> (levels, labels); ``continuous`` maps
    name -> values.
    """
    schema = []
    columns = {}
    for name, (levels, labels) in (factors or {}).items():
        schema.append(VariableSpec(name, VariableKind.FACTOR, tuple(levels)))
        columns[name] = np.asarray([list(levels).index(l) for l in labels],
                                   dtype=np.int64)
    for name, values in (continuous or {}).items():
        schema.append(VariableSpec(name, VariableKind.CONTINUOUS))
        columns[name] = np.asarray(values, dtype=float)
    n = len(times)
    return SurvivalDataset(
        patient_ids=[f"p{i}" for i in range(n)],
        time_days=np.asarray(times, dtype=float),
        event=np.asarray(events, dtype=bool),
        schema=schema,
        columns=columns,
    )


def hand_km(times, events):
    """Independent product-limit oracle: naive loop over event times.

    Censored subjects remain at risk at their own time (events before
    censorings at a tied instant) and leave afterwards.
    """
    pairs = sorted(zip(times, events))
    uniq_event_times = sorted({t for t, e in pairs if e})
    surv = []
    s = 1.0
    for ut in uniq_event_times:
        n = sum(1 for t, _ in pairs if t >= ut)
        d = sum(1 for t, e in pairs if t == ut and e)
        s *= 1.0 - d / n
        surv.append((ut, s))
    return surv


def hand_logrank_two_groups(times_a, events_a, times_b, events_b):
    """Brute-force 2x2-table tabulation of the two-group log-rank test."""
    pooled = sorted({t for t, e in zip(list(times_a) + list(times_b),
                                       list(events_a) + list(events_b)) if e})
    observed = expected = variance = 0.0
    for ut in pooled:
        n1 = sum(1 for t in times_a if t >= ut)
        n2 = sum(1 for t in times_b if t >= ut)
        n = n1 + n2
        d1 = sum(1 for t, e in zip(times_a, events_a) if t == ut and e)
        d2 = sum(1 for t, e in zip(times_b, events_b) if t == ut and e)
        d = d1 + d2
        observed += d1
        expected += d * n1 / n
        if n > 1:
            variance += d * (n1 / n) * (1 - n1 / n) * (n - d) / (n - 1)
    chi2 = 0.0 if variance == 0 else (observed - expected) ** 2 / variance
    return chi2


def grid_partial_loglik_untied(x, times, grid):
    """Vectorized log partial likelihood over a beta grid.

    Valid for a single covariate with all-event, tie-free data, where the
    Efron and Breslow likelihoods coincide with the plain product form.
    """
    x = np.asarray(x, dtype=float)
    times = np.asarray(times, dtype=float)
    order = np.argsort(times)
    x = x[order]
    ll = np.zeros_like(np.asarray(grid, dtype=float))
    n = x.size
    for i in range(n):
        risk = x[i:]
        eta = np.outer(risk, grid)
        m = eta.max(axis=0)
        ll += x[i] * grid - (m + np.log(np.exp(eta - m).sum(axis=0)))
    return ll


def grid_partial_loglik_efron(x, times, events, grid):
    """Vectorized Efron log partial likelihood over a beta grid.

    Independent expansion for a single covariate, handling tied event
    times; used as the grid-search oracle on tied fixtures.
    """
    x = np.asarray(x, dtype=float)
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    grid = np.asarray(grid, dtype=float)
    ll = np.zeros_like(grid)
    for ut in np.unique(times[events]):
        risk = x[times >= ut]
        dead = x[(times == ut) & events]
        d = dead.size
        s0 = np.exp(np.outer(risk, grid)).sum(axis=0)
        t0 = np.exp(np.outer(dead, grid)).sum(axis=0)
        ll += dead.sum() * grid
        for l in range(d):
            ll -= np.log(s0 - (l / d) * t0)
    return ll
