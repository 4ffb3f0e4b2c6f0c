"""Random survival forest: bootstrap survival trees with log-rank splits.

Each tree grows on a bootstrap sample; nodes split on the candidate
(variable, threshold-or-level-set) pair with the best two-group log-rank
statistic among ``mtry`` randomly chosen variables and up to
``n_split_candidates`` random cutpoints per variable.  Leaves hold the
Nelson-Aalen cumulative hazard of their in-bag cases.  A prediction is the
tree-average CHF evaluated on the pooled event-time grid of the training
data; its sum over the grid ("mortality") is the scalar risk score used for
concordance, permutation importance, and ROC analysis.

Determinism: every tree draws from an RNG stream keyed by (seed, tree
index), so results do not depend on how tree growth is scheduled.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from joblib import Parallel, delayed

from .cohort import SurvivalDataset, VariableKind, VariableSpec
from .errors import (
    DegenerateLabelsError,
    MissingCovariateError,
    NoEventsError,
    NoOobTreesError,
    NoUsablePairsError,
)
from .survival import two_group_logrank_chi2

FOREST_FORMAT = "polyrecur-forest"
FOREST_VERSION = 1


@dataclass(frozen=True)
class ForestConfig:
    """Forest hyperparameters.

    A node is splittable when it holds at least ``min_node_size`` in-bag
    cases and ``2 * min_node_events`` in-bag events; a candidate split is
    valid when both children keep at least ``min_node_events`` events.
    ``mtry`` defaults to ceil(sqrt(p)) when left at None.
    """

    n_trees: int = 1000
    mtry: int | None = None
    min_node_events: int = 3
    min_node_size: int = 15
    n_split_candidates: int = 10
    seed: int = 0

    def resolve_mtry(self, n_variables: int) -> int:
        if self.mtry is not None:
            if not 1 <= self.mtry <= n_variables:
                raise ValueError("mtry must lie in [1, p]")
            return self.mtry
        return max(1, math.ceil(math.sqrt(n_variables)))


@dataclass
class StepFunction:
    """Right-continuous step function: value at t is the last step <= t."""

    times: np.ndarray
    values: np.ndarray

    def __call__(self, t) -> np.ndarray:
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float),
                              side="right") - 1
        padded = np.concatenate(([0.0], self.values))
        return padded[idx + 1]


def nelson_aalen(times, events) -> StepFunction:
    """Nelson-Aalen cumulative hazard: H(t) = sum of d/n at event times <= t.

    With no events the hazard is identically zero.
    """
    t = np.asarray(times, dtype=float)
    e = np.asarray(events, dtype=bool)
    if t.size == 0:
        raise ValueError("nelson_aalen requires at least one subject")
    uniq, inv = np.unique(t, return_inverse=True)
    m = uniq.size
    d = np.bincount(inv, weights=e.astype(float), minlength=m)
    removed = np.bincount(inv, minlength=m)
    n = t.size - np.concatenate(([0], np.cumsum(removed)[:-1]))
    keep = d > 0
    if not keep.any():
        return StepFunction(times=np.empty(0), values=np.empty(0))
    return StepFunction(times=uniq[keep],
                        values=np.cumsum(d[keep] / n[keep]))


@dataclass
class Split:
    variable: str
    threshold: float | None = None          # continuous: value <= threshold
    left_levels: frozenset | None = None    # factor: code in set goes left
    statistic: float = 0.0
    left_mask: np.ndarray | None = None


@dataclass
class TreeNode:
    split: Split | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    leaf_times: np.ndarray | None = None    # sparse leaf Nelson-Aalen curve
    leaf_chf: np.ndarray | None = None
    mortality: float = 0.0                  # sum of leaf CHF over the grid
    n_cases: int = 0
    n_events: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.split is None


@dataclass
class SurvivalTree:
    root: TreeNode
    in_bag: np.ndarray                       # bootstrap multiplicity per case
    variables_used: frozenset


@dataclass
class Forest:
    trees: list[SurvivalTree]
    config: ForestConfig
    grid: np.ndarray                         # pooled distinct event times
    variables: list[str]
    variable_specs: list[VariableSpec]
    n_cases: int


class _NodeData:
    """Case-level view of one node: times ascending, aligned columns."""

    __slots__ = ("times", "events", "columns", "starts", "d_tot", "n_tot")

    def __init__(self, times, events, columns):
        self.times = times
        self.events = events
        self.columns = columns
        # tie-group tabulation shared by every candidate at this node
        n = times.size
        boundaries = np.nonzero(np.diff(times))[0] + 1
        self.starts = np.concatenate(([0], boundaries))
        self.d_tot = np.add.reduceat(events, self.starts)
        removed = np.diff(np.concatenate((self.starts, [n])))
        self.n_tot = n - np.concatenate(([0], np.cumsum(removed)[:-1]))


def _batched_logrank(node: _NodeData, masks: np.ndarray) -> np.ndarray:
    """Two-group log-rank chi-square for every candidate mask (column).

    Same tabulation as survival.two_group_logrank_chi2; counts are integer
    valued so the arithmetic agrees exactly with the scalar kernel.
    """
    masks_f = masks.astype(float)
    d1 = np.add.reduceat(node.events[:, None] * masks_f, node.starts, axis=0)
    rem1 = np.add.reduceat(masks_f, node.starts, axis=0)
    n1 = masks_f.sum(axis=0)[None, :] - np.concatenate(
        (np.zeros((1, masks.shape[1])), np.cumsum(rem1, axis=0)[:-1]), axis=0)
    keep = node.d_tot > 0
    d_tot = node.d_tot[keep][:, None]
    n_tot = node.n_tot[keep][:, None].astype(float)
    d1 = d1[keep]
    n1 = n1[keep]
    frac = n1 / n_tot
    observed = d1.sum(axis=0)
    expected = (d_tot * frac).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        var_terms = d_tot * frac * (1.0 - frac) * (n_tot - d_tot) / (n_tot - 1.0)
    var_terms = np.where(n_tot > 1.0, var_terms, 0.0)
    var = var_terms.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        chi2 = (observed - expected) ** 2 / var
    return np.where(var > 0.0, chi2, 0.0)


def best_logrank_split(node: _NodeData, candidate_variables,
                       variable_specs: dict, n_split_candidates: int,
                       rng: np.random.Generator,
                       min_node_events: int) -> Split | None:
    """Best random-cutpoint log-rank split over the candidate variables.

    Continuous variables draw thresholds from the observed node values;
    factors draw random binary partitions of the observed levels.  A split
    is valid only when both children retain ``min_node_events`` events.
    Returns None when no candidate yields two valid children.  The returned
    statistic is recomputed through the scalar log-rank kernel, so it
    matches a direct recomputation on the induced children exactly.
    """
    mask_blocks = []
    descriptors = []
    for name in candidate_variables:
        values = node.columns[name]
        spec = variable_specs[name]
        if spec.kind is VariableKind.CONTINUOUS:
            thresholds = np.unique(rng.choice(values, size=n_split_candidates))
            mask_blocks.append(values[:, None] <= thresholds[None, :])
            descriptors.extend((name, float(thr), None) for thr in thresholds)
        else:
            uniq = np.unique(values)
            if uniq.size < 2:
                continue
            block = []
            for _ in range(n_split_candidates):
                bits = rng.random(uniq.size) < 0.5
                left_levels = frozenset(int(u) for u, b in zip(uniq, bits) if b)
                block.append(np.isin(values, list(left_levels)))
                descriptors.append((name, None, left_levels))
            mask_blocks.append(np.column_stack(block))
    if not mask_blocks:
        return None

    mask_matrix = np.concatenate(mask_blocks, axis=1)
    left_events = node.events @ mask_matrix
    right_events = node.events.sum() - left_events
    left_sizes = mask_matrix.sum(axis=0)
    valid = ((left_sizes > 0) & (left_sizes < node.times.size)
             & (left_events >= min_node_events)
             & (right_events >= min_node_events))
    if not valid.any():
        return None

    scores = _batched_logrank(node, mask_matrix)
    scores[~valid] = -np.inf
    best = int(np.argmax(scores))
    name, threshold, left_levels = descriptors[best]
    left_mask = mask_matrix[:, best]
    statistic = two_group_logrank_chi2(node.times, node.events, left_mask)
    return Split(variable=name, threshold=threshold, left_levels=left_levels,
                 statistic=statistic, left_mask=left_mask)


def _leaf_from(node: _NodeData, grid: np.ndarray) -> TreeNode:
    curve = nelson_aalen(node.times, node.events > 0)
    positions = np.searchsorted(grid, curve.times, side="left")
    increments = np.diff(np.concatenate(([0.0], curve.values)))
    mortality = float((increments * (grid.size - positions)).sum())
    return TreeNode(leaf_times=curve.times, leaf_chf=curve.values,
                    mortality=mortality, n_cases=node.times.size,
                    n_events=int(node.events.sum()))


def _grow_node(node: _NodeData, specs: dict, variable_names, config,
               mtry: int, rng: np.random.Generator,
               grid: np.ndarray) -> TreeNode:
    n = node.times.size
    n_events = int(node.events.sum())
    if n < config.min_node_size or n_events < 2 * config.min_node_events:
        return _leaf_from(node, grid)
    if mtry >= len(variable_names):
        chosen = list(variable_names)
    else:
        chosen = [variable_names[i] for i in
                  rng.choice(len(variable_names), size=mtry, replace=False)]
    split = best_logrank_split(node, chosen, specs,
                               config.n_split_candidates, rng,
                               config.min_node_events)
    if split is None:
        return _leaf_from(node, grid)
    mask = split.left_mask
    left = _NodeData(node.times[mask], node.events[mask],
                     {k: v[mask] for k, v in node.columns.items()})
    right = _NodeData(node.times[~mask], node.events[~mask],
                      {k: v[~mask] for k, v in node.columns.items()})
    out = TreeNode(split=Split(split.variable, split.threshold,
                               split.left_levels, split.statistic),
                   n_cases=n, n_events=n_events)
    out.left = _grow_node(left, specs, variable_names, config, mtry, rng, grid)
    out.right = _grow_node(right, specs, variable_names, config, mtry, rng, grid)
    return out


def _collect_variables(root: TreeNode) -> frozenset:
    used = set()
    stack = [root]
    while stack:
        node = stack.pop()
        if not node.is_leaf:
            used.add(node.split.variable)
            stack.extend((node.left, node.right))
    return frozenset(used)


def _grow_tree(tree_index: int, seed: int, times, events, columns, specs,
               variable_names, config, mtry, grid) -> SurvivalTree:
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(1, tree_index)))
    n = times.size
    multiplicity = np.bincount(rng.integers(0, n, size=n), minlength=n)
    idx = np.repeat(np.arange(n), multiplicity)  # time-sorted stays sorted
    node = _NodeData(times[idx], events[idx].astype(float),
                     {k: v[idx] for k, v in columns.items()})
    root = _grow_node(node, specs, variable_names, config, mtry, rng, grid)
    return SurvivalTree(root=root, in_bag=multiplicity,
                        variables_used=_collect_variables(root))


def grow_forest(dataset: SurvivalDataset, config: ForestConfig = ForestConfig(),
                n_jobs: int = 1) -> Forest:
    """Grow the forest on a complete-case dataset.

    The prediction grid is the set of distinct observed event times.
    Identical seeds give identical forests for any ``n_jobs``.
    """
    if config.n_trees < 1:
        raise ValueError("n_trees must be positive")
    if not dataset.event.any():
        raise NoEventsError("survival forest requires at least one event")
    order = np.argsort(dataset.time_days, kind="stable")
    times = dataset.time_days[order]
    events = dataset.event[order]
    columns = {s.name: dataset.columns[s.name][order].astype(float)
               for s in dataset.schema}
    specs = {s.name: s for s in dataset.schema}
    variable_names = [s.name for s in dataset.schema]
    mtry = config.resolve_mtry(len(variable_names))
    grid = np.unique(times[events])

    def grow(i):
        tree = _grow_tree(i, config.seed, times, events, columns, specs,
                          variable_names, config, mtry, grid)
        # map in-bag multiplicities back to original case order
        in_bag = np.zeros(times.size, dtype=np.int64)
        in_bag[order] = tree.in_bag
        return SurvivalTree(tree.root, in_bag, tree.variables_used)

    if n_jobs == 1:
        trees = [grow(i) for i in range(config.n_trees)]
    else:
        trees = Parallel(n_jobs=n_jobs)(
            delayed(grow)(i) for i in range(config.n_trees))
    return Forest(trees=trees, config=config, grid=grid,
                  variables=variable_names,
                  variable_specs=[specs[v] for v in variable_names],
                  n_cases=times.size)


def _route_matrix(root: TreeNode, columns: dict, n: int) -> list:
    """Leaf node reached by each of n cases; columns are aligned arrays."""
    leaves: list = [None] * n
    stack = [(root, np.arange(n))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if node.is_leaf:
            for i in idx:
                leaves[i] = node
            continue
        split = node.split
        values = columns[split.variable][idx]
        if split.threshold is not None:
            go_left = values <= split.threshold
        else:
            go_left = np.isin(values, list(split.left_levels))
        stack.append((node.left, idx[go_left]))
        stack.append((node.right, idx[~go_left]))
    return leaves


def _route_row(root: TreeNode, row_values: dict) -> TreeNode:
    node = root
    while not node.is_leaf:
        split = node.split
        value = row_values[split.variable]
        if split.threshold is not None:
            node = node.left if value <= split.threshold else node.right
        else:
            node = node.left if int(value) in split.left_levels else node.right
    return node


class PredictMode(Enum):
    ALL_TREES = "all_trees"
    OOB_ONLY = "oob_only"


@dataclass
class ForestPrediction:
    chf: StepFunction
    mortality: float


def _code_row(forest: Forest, covariate_row: dict) -> dict:
    coded = {}
    for spec in forest.variable_specs:
        if spec.name not in covariate_row:
            raise MissingCovariateError(spec.name)
        value = covariate_row[spec.name]
        if spec.kind is VariableKind.CONTINUOUS:
            coded[spec.name] = float(value)
        else:
            if str(value) not in spec.levels:
                raise ValueError(f"unknown level {value!r} for {spec.name}")
            coded[spec.name] = float(spec.levels.index(str(value)))
    return coded


def predict(forest: Forest, covariate_row: dict,
            mode: PredictMode = PredictMode.ALL_TREES,
            case_index: int | None = None) -> ForestPrediction:
    """Ensemble CHF for one subject: the mean of the selected trees' leaf
    curves on the pooled event-time grid, with mortality its sum.

    OOB_ONLY restricts the ensemble to trees where ``case_index`` was out
    of bag and raises NoOobTreesError when no such tree exists.
    """
    row = _code_row(forest, covariate_row)
    if mode is PredictMode.OOB_ONLY:
        if case_index is None:
            raise ValueError("OOB prediction requires case_index")
        trees = [t for t in forest.trees if t.in_bag[case_index] == 0]
        if not trees:
            raise NoOobTreesError(f"case {case_index} was never out of bag")
    else:
        trees = forest.trees
    total = np.zeros(forest.grid.size)
    for tree in trees:
        leaf = _route_row(tree.root, row)
        total += StepFunction(leaf.leaf_times, leaf.leaf_chf)(forest.grid)
    mean = total / len(trees)
    return ForestPrediction(chf=StepFunction(forest.grid.copy(), mean),
                            mortality=float(mean.sum()))


def _dataset_columns(forest: Forest, dataset: SurvivalDataset) -> dict:
    return {name: dataset.columns[name].astype(float)
            for name in forest.variables}


def oob_mortalities(forest: Forest, dataset: SurvivalDataset,
                    override_column: tuple[str, np.ndarray] | None = None
                    ) -> np.ndarray:
    """Per-case OOB mortality; optionally with one column's values replaced
    (used by permutation importance).  Cases with no OOB trees get NaN.
    """
    columns = _dataset_columns(forest, dataset)
    if override_column is not None:
        name, values = override_column
        columns = dict(columns)
        columns[name] = np.asarray(values, dtype=float)
    n = dataset.n_cases
    total = np.zeros(n)
    counts = np.zeros(n)
    for tree in forest.trees:
        oob = np.nonzero(tree.in_bag == 0)[0]
        if oob.size == 0:
            continue
        sub = {k: v[oob] for k, v in columns.items()}
        leaves = _route_matrix(tree.root, sub, oob.size)
        total[oob] += [leaf.mortality for leaf in leaves]
        counts[oob] += 1.0
    with np.errstate(invalid="ignore"):
        out = total / counts
    out[counts == 0] = np.nan
    return out


def concordance_error(times, events, scores) -> float:
    """1 - Harrell's C over usable pairs.

    A pair is usable when its earlier time is an event; at tied times a
    pair is usable when at least one member is an event.  Concordance
    credits 1 when the earlier failure has the higher score, 0.5 for score
    ties (and for un-ordered tied-time configurations).
    """
    T = np.asarray(times, dtype=float)
    E = np.asarray(events, dtype=bool)
    S = np.asarray(scores, dtype=float)
    i, j = np.triu_indices(T.size, k=1)
    ti, tj, ei, ej, si, sj = T[i], T[j], E[i], E[j], S[i], S[j]

    credit = 0.0
    usable = 0

    early_i = (ti < tj) & ei
    early_j = (tj < ti) & ej
    for early, s_first, s_second in ((early_i, si, sj), (early_j, sj, si)):
        usable += int(early.sum())
        credit += np.where(s_first > s_second, 1.0,
                           np.where(s_first == s_second, 0.5, 0.0))[early].sum()

    tied = ti == tj
    both = tied & ei & ej
    usable += int(both.sum())
    credit += np.where(si == sj, 1.0, 0.5)[both].sum()
    for one, s_event, s_other in ((tied & ei & ~ej, si, sj),
                                  (tied & ej & ~ei, sj, si)):
        usable += int(one.sum())
        credit += np.where(s_event > s_other, 1.0, 0.5)[one].sum()

    if usable == 0:
        raise NoUsablePairsError("no orderable pairs for concordance")
    return 1.0 - credit / usable


def oob_concordance_error(forest: Forest, dataset: SurvivalDataset) -> float:
    """OOB prediction error: 1 - C of OOB mortalities against outcomes."""
    scores = oob_mortalities(forest, dataset)
    if np.isnan(scores).any():
        missing = int(np.isnan(scores).sum())
        raise NoOobTreesError(f"{missing} case(s) were never out of bag")
    return concordance_error(dataset.time_days, dataset.event, scores)


def variable_importance(forest: Forest, dataset: SurvivalDataset,
                        rng: np.random.Generator | int = 0) -> dict[str, float]:
    """Permutation importance: OOB error increase after shuffling a column.

    Variables never used in any split cannot change a prediction and score
    exactly zero.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    baseline_scores = oob_mortalities(forest, dataset)
    if np.isnan(baseline_scores).any():
        raise NoOobTreesError("VIMP requires every case to have OOB trees")
    baseline = concordance_error(dataset.time_days, dataset.event,
                                 baseline_scores)
    used_anywhere = frozenset().union(*(t.variables_used
                                        for t in forest.trees))
    importance: dict[str, float] = {}
    for name in forest.variables:
        if name not in used_anywhere:
            importance[name] = 0.0
            continue
        permuted = rng.permutation(dataset.columns[name].astype(float))
        scores = oob_mortalities(forest, dataset,
                                 override_column=(name, permuted))
        importance[name] = concordance_error(
            dataset.time_days, dataset.event, scores) - baseline
    return importance


def time_dependent_auc(mortalities, dataset: SurvivalDataset,
                       horizon_days: float):
    """ROC points and AUC for predicting an event by ``horizon_days``.

    Positives are events at or before the horizon; cases censored before
    the horizon are excluded; everyone followed past the horizon without a
    prior event is a negative.  The ROC sweeps thresholds over the distinct
    mortality scores; AUC is the trapezoidal area.
    """
    times = dataset.time_days
    events = dataset.event
    if not (times.min() <= horizon_days <= times.max()):
        raise ValueError("horizon must lie within the observed time range")
    scores = np.asarray(mortalities, dtype=float)
    positive = events & (times <= horizon_days)
    excluded = ~events & (times < horizon_days)
    keep = ~excluded
    y = positive[keep]
    s = scores[keep]
    n_pos = int(y.sum())
    n_neg = int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError(
            f"one-class labels at horizon {horizon_days}")
    thresholds = np.concatenate(([np.inf], np.unique(s)[::-1]))
    tpr = [(s[y] >= thr).sum() / n_pos for thr in thresholds]
    fpr = [(s[~y] >= thr).sum() / n_neg for thr in thresholds]
    auc = float(np.trapezoid(tpr, fpr))
    points = [(float(f), float(t), float(thr))
              for f, t, thr in zip(fpr, tpr, thresholds)]
    return points, auc


def _node_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {
            "leaf": {
                "times": node.leaf_times.tolist(),
                "chf": node.leaf_chf.tolist(),
                "mortality": node.mortality,
                "n_cases": node.n_cases,
                "n_events": node.n_events,
            }
        }
    split = node.split
    return {
        "split": {
            "variable": split.variable,
            "threshold": split.threshold,
            "left_levels": (sorted(split.left_levels)
                            if split.left_levels is not None else None),
            "statistic": split.statistic,
        },
        "n_cases": node.n_cases,
        "n_events": node.n_events,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(payload: dict) -> TreeNode:
    if "leaf" in payload:
        leaf = payload["leaf"]
        return TreeNode(leaf_times=np.asarray(leaf["times"], dtype=float),
                        leaf_chf=np.asarray(leaf["chf"], dtype=float),
                        mortality=float(leaf["mortality"]),
                        n_cases=int(leaf["n_cases"]),
                        n_events=int(leaf["n_events"]))
    sp = payload["split"]
    split = Split(variable=sp["variable"],
                  threshold=sp["threshold"],
                  left_levels=(frozenset(sp["left_levels"])
                               if sp["left_levels"] is not None else None),
                  statistic=float(sp["statistic"]))
    return TreeNode(split=split,
                    n_cases=int(payload["n_cases"]),
                    n_events=int(payload["n_events"]),
                    left=_node_from_dict(payload["left"]),
                    right=_node_from_dict(payload["right"]))


def save_forest(forest: Forest, path) -> None:
    """Persist the forest as versioned JSON (schema in the README)."""
    payload = {
        "format": FOREST_FORMAT,
        "version": FOREST_VERSION,
        "config": {
            "n_trees": forest.config.n_trees,
            "mtry": forest.config.mtry,
            "min_node_events": forest.config.min_node_events,
            "min_node_size": forest.config.min_node_size,
            "n_split_candidates": forest.config.n_split_candidates,
            "seed": forest.config.seed,
        },
        "grid": forest.grid.tolist(),
        "n_cases": forest.n_cases,
        "variables": [
            {"name": s.name, "kind": s.kind.value, "levels": list(s.levels)}
            for s in forest.variable_specs
        ],
        "trees": [
            {"in_bag": tree.in_bag.tolist(),
             "root": _node_to_dict(tree.root)}
            for tree in forest.trees
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_forest(path) -> Forest:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != FOREST_FORMAT:
        raise ValueError("not a forest dump")
    if payload.get("version") != FOREST_VERSION:
        raise ValueError(f"unsupported forest version {payload.get('version')}")
    config = ForestConfig(**payload["config"])
    specs = [VariableSpec(v["name"], VariableKind(v["kind"]),
                          tuple(v["levels"])) for v in payload["variables"]]
    trees = []
    for entry in payload["trees"]:
        root = _node_from_dict(entry["root"])
        trees.append(SurvivalTree(
            root=root,
            in_bag=np.asarray(entry["in_bag"], dtype=np.int64),
            variables_used=_collect_variables(root)))
    return Forest(trees=trees, config=config,
                  grid=np.asarray(payload["grid"], dtype=float),
                  variables=[s.name for s in specs],
                  variable_specs=specs,
                  n_cases=int(payload["n_cases"]))
