"""Sensitivity pipeline: goal flags, per-group rankings, interactions,
bad-level detection, and interval reduction.

The pipeline runs on a finished random search.  It flags the goal subset of
trials (for example the best 10 percent), normalizes every parameter onto
the unit interval, scores each parameter's dependence on the goal flags
within its conditional group, and compares everything against the score of
an injected synthetic dummy parameter, which plays the role of a concrete
noise floor: anything statistically indistinguishable from the dummy is
treated as non-impactful.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .hsic import EstimationError, HsicScore, hsic_goal, hsic_pair
from .space import (
    MAIN_GROUP,
    GroupSpec,
    NormalizedMatrix,
    ParameterSpec,
    SearchSpace,
    _substream,
    build_groups,
    cdf_transform,
    normalize_trials,
    restrict,
)

__all__ = [
    "GoalSet",
    "best_percentile",
    "worst_percentile",
    "threshold",
    "make_goal_flags",
    "rank_group",
    "InteractionMatrix",
    "interaction_matrix",
    "LevelReport",
    "worst_level_report",
    "ReductionCurve",
    "interval_reduction",
    "GroupRanking",
    "SensitivityReport",
    "run_algorithm1",
    "dummy_floor",
]

_MIN_TRIALS = 10
IMPACT_K_SE = 2.0   # "impactful" means value > floor + k * (se + floor_se)


# -- goal construction -------------------------------------------------------


@dataclass(frozen=True)
class GoalSet:
    """Which trials count as hitting the goal.

    kind "best_percentile" flags the fraction p of ok trials with the lowest
    errors; "worst_percentile" flags the fraction p of all trials with the
    highest errors, counting diverged/failed trials as worst; "threshold"
    compares ok scores against a fixed bound.
    """

    kind: str
    p: float | None = None
    bound: float | None = None
    direction: str = "le"

    def __post_init__(self):
        if self.kind in ("best_percentile", "worst_percentile"):
            if self.p is None or not (0.0 < self.p < 1.0):
                raise EstimationError("percentile p must lie in (0, 1)")
        elif self.kind == "threshold":
            if self.bound is None or self.direction not in ("le", "ge"):
                raise EstimationError("threshold goal needs bound and direction le/ge")
        else:
            raise EstimationError(f"unknown goal kind {self.kind!r}")


def best_percentile(p: float) -> GoalSet:
    return GoalSet("best_percentile", p=p)


def worst_percentile(p: float) -> GoalSet:
    return GoalSet("worst_percentile", p=p)


def threshold(bound: float, direction: str = "le") -> GoalSet:
    return GoalSet("threshold", bound=bound, direction=direction)


def make_goal_flags(trials, goal: GoalSet, *, reject_constant: bool = True) -> np.ndarray:
    """Boolean goal flags aligned with the trial list.

    Ties in the score break by trial order (stable sort), so monotone
    rescalings of the metric leave the flags unchanged.  A constant metric
    makes percentile goals meaningless and is rejected unless the caller
    opts out (the level report relies on the tie-broken sets coinciding).
    """
    n = len(trials)
    ok = np.array([t.ok for t in trials])
    scores = np.array([t.score if t.ok else np.nan for t in trials], dtype=float)
    n_ok = int(ok.sum())
    if n_ok < _MIN_TRIALS:
        raise EstimationError(f"need at least {_MIN_TRIALS} ok trials, got {n_ok}")
    if (reject_constant and goal.kind != "threshold" and ok.all()
            and np.all(scores[ok] == scores[ok][0])):
        # percentiles of a constant metric select an arbitrary subset
        raise EstimationError("goal set too small: zero-variance scores")
    flags = np.zeros(n, dtype=bool)
    if goal.kind == "best_percentile":
        k = int(np.ceil(goal.p * n_ok))
        order = np.argsort(np.where(ok, scores, np.inf), kind="stable")
        flags[order[:k]] = True
    elif goal.kind == "worst_percentile":
        k = int(np.ceil(goal.p * n))
        bad = np.flatnonzero(~ok)
        take = bad[:k]
        flags[take] = True
        remaining = k - len(take)
        if remaining > 0:
            order = np.argsort(np.where(ok, -scores, np.inf), kind="stable")
            flags[order[:remaining]] = True
    else:
        if goal.direction == "le":
            flags = ok & (scores <= goal.bound)
        else:
            flags = ok & (scores >= goal.bound)
    if not flags.any():
        raise EstimationError("goal set is empty")
    return flags


# -- per-group ranking ---------------------------------------------------------


def _dummy_column(seed: int, label: str, n: int) -> np.ndarray:
    key = (int(seed) & 0xFFFFFFFF, zlib.crc32(b"~dummy~"), zlib.crc32(label.encode()))
    rng = np.random.default_rng(np.random.SeedSequence(key))
    return rng.random(n)


def dummy_floor(rows: np.ndarray, z: np.ndarray, seed: int, label: str = MAIN_GROUP,
                n_boot: int = 100) -> HsicScore:
    """Score of a synthetic independent uniform column on the same rows.

    Computed with the same sample and goal counts as the real scores, so the
    estimator's finite-sample floor cancels out of comparisons against it.
    """
    u = _dummy_column(seed, label, int(rows.sum()))
    return hsic_goal(u, z[rows], n_boot=n_boot, seed=seed)


def rank_group(group: GroupSpec, matrix: NormalizedMatrix, z, *, seed: int = 0,
               n_boot: int = 100):
    """Scores for every group member on the group's subpopulation, sorted
    descending by value."""
    z = np.asarray(z, dtype=bool)
    rows = matrix.rows_where_active(group.members)
    entries = []
    for name in group.members:
        active = matrix.mask(name)[rows]
        if not active.all():
            raise EstimationError(f"{name}: inactive rows inside group {group.id}")
        u = matrix.column(name)[rows]
        score = hsic_goal(u, z[rows], n_boot=n_boot, seed=seed)
        entries.append((name, score))
    entries.sort(key=lambda e: -e[1].value)
    return entries


# -- interactions --------------------------------------------------------------


@dataclass
class InteractionMatrix:
    params: tuple
    values: np.ndarray           # (k, k), nan where not computed
    std_errors: np.ndarray
    scores: dict                 # (i, j) with i <= j -> HsicScore

    def score(self, a: str, b: str) -> HsicScore:
        i, j = self.params.index(a), self.params.index(b)
        return self.scores[(min(i, j), max(i, j))]

    def computed(self, a: str, b: str) -> bool:
        i, j = self.params.index(a), self.params.index(b)
        return (min(i, j), max(i, j)) in self.scores


def interaction_matrix(params, matrix: NormalizedMatrix, z, *, seed: int = 0,
                       n_boot: int = 100, pairs=None) -> InteractionMatrix:
    """Pairwise joint scores; diagonal holds the single-column scores.

    Every entry is computed on rows where both parameters are active.  When
    pairs is given, only those off-diagonal entries are filled; the matrix
    is symmetric by construction either way.
    """
    params = tuple(params)
    if len(params) < 2:
        raise EstimationError("interaction matrix needs at least 2 parameters")
    z = np.asarray(z, dtype=bool)
    k = len(params)
    values = np.full((k, k), np.nan)
    ses = np.full((k, k), np.nan)
    scores = {}
    wanted = None
    if pairs is not None:
        wanted = {(min(params.index(a), params.index(b)),
                   max(params.index(a), params.index(b))) for a, b in pairs}
    for i in range(k):
        rows = matrix.rows_where_active([params[i]])
        s = hsic_goal(matrix.column(params[i])[rows], z[rows], n_boot=n_boot, seed=seed)
        scores[(i, i)] = s
        values[i, i] = s.value
        ses[i, i] = s.std_error
    for i in range(k):
        for j in range(i + 1, k):
            if wanted is not None and (i, j) not in wanted:
                continue
            rows = matrix.rows_where_active([params[i], params[j]])
            s = hsic_pair(
                matrix.column(params[i])[rows],
                matrix.column(params[j])[rows],
                z[rows],
                n_boot=n_boot,
                seed=seed,
            )
            scores[(i, j)] = s
            values[i, j] = values[j, i] = s.value
            ses[i, j] = ses[j, i] = s.std_error
    return InteractionMatrix(params, values, ses, scores)


# -- bad-level detection -------------------------------------------------------


@dataclass
class LevelReport:
    param: str
    levels: tuple
    prior: tuple
    worst_counts: tuple
    best_counts: tuple
    flagged: tuple

    def shares(self):
        w = np.asarray(self.worst_counts, dtype=float)
        b = np.asarray(self.best_counts, dtype=float)
        return w / max(w.sum(), 1.0), b / max(b.sum(), 1.0)


def worst_level_report(param: ParameterSpec, trials, matrix: NormalizedMatrix,
                       *, p: float = 0.1, factor: float = 2.0) -> LevelReport:
    """Per-level counts among the worst and best percentile trials.

    A level is flagged when its share of the worst set exceeds factor times
    its prior weight while its share of the best set stays below the prior:
    the signature of a value that actively hurts.
    """
    if not param.is_discrete:
        raise EstimationError(f"{param.name}: level report needs a discrete parameter")
    levels, weights = param.level_weights()
    worst = make_goal_flags(trials, worst_percentile(p), reject_constant=False)
    best = make_goal_flags(trials, best_percentile(p), reject_constant=False)
    active = matrix.mask(param.name)
    values = [t.config.get(param.name) for t in trials]

    def counts(flags):
        out = np.zeros(len(levels), dtype=int)
        for i in np.flatnonzero(flags & active):
            v = values[i]
            if param.kind == "boolean":
                v = bool(v)
            out[levels.index(v)] += 1
        return out

    wc = counts(worst)
    bc = counts(best)
    w_share = wc / max(wc.sum(), 1)
    b_share = bc / max(bc.sum(), 1)
    flagged = tuple(
        levels[i]
        for i in range(len(levels))
        if w_share[i] > factor * weights[i] and b_share[i] < weights[i]
    )
    return LevelReport(param.name, tuple(levels), tuple(weights), tuple(wc),
                       tuple(bc), flagged)


# -- interval reduction --------------------------------------------------------


@dataclass
class ReductionCurve:
    param: str
    offsets: tuple               # c values actually evaluated
    scores: tuple                # HsicScore per offset
    retained: tuple              # subpopulation sizes
    cutoff: int | None           # smallest c at the noise floor, None if never

    def values(self):
        return np.array([s.value for s in self.scores])


def interval_reduction(
    param: ParameterSpec,
    trials,
    matrix: NormalizedMatrix,
    goal: GoalSet,
    noise_floor: HsicScore,
    *,
    seed: int = 0,
    n_boot: int = 100,
    k_se: float = IMPACT_K_SE,
    min_goal: int = 10,
    n_steps_continuous: int = 20,
):
    """Dependence score of an ordered parameter as its lower bound rises.

    For each offset c the trial set restricts to values >= lo + c, the goal
    percentile is re-taken inside that subpopulation, ranks are recomputed
    on the restricted domain, and the score is compared to the noise floor.
    The suggested cutoff is the smallest c whose score is within k_se
    combined standard errors of the floor.  Offsets whose retained goal
    count drops below min_goal truncate the curve.
    """
    if not param.is_ordered:
        raise EstimationError(f"{param.name}: interval reduction needs an ordered domain")
    space_one = SearchSpace((param,))
    active = matrix.mask(param.name)
    raw = np.array(
        [t.config.get(param.name, np.nan) for t in trials], dtype=float
    )
    if param.kind == "integer":
        offsets = list(range(0, int(param.hi) - int(param.lo)))
        step = 1.0
    else:
        step = (param.hi - param.lo) / n_steps_continuous
        offsets = list(range(0, n_steps_continuous))
    kept_offsets, scores, retained = [], [], []
    for c in offsets:
        lo_c = param.lo + c * step
        rows = np.flatnonzero(active & (raw >= lo_c))
        if len(rows) < _MIN_TRIALS:
            break
        sub_trials = [trials[i] for i in rows]
        try:
            z_sub = make_goal_flags(sub_trials, goal)
        except EstimationError:
            break
        if int(z_sub.sum()) < min_goal:
            break
        restricted = restrict(space_one, param.name, (lo_c, param.hi))
        spec_c = restricted.param(param.name)
        u = np.empty(len(rows))
        for k, i in enumerate(rows):
            u[k] = cdf_transform(spec_c, trials[i].config[param.name],
                                 _substream(matrix.seed, param.name, int(i)))
        score = hsic_goal(u, z_sub, n_boot=n_boot, seed=seed)
        kept_offsets.append(c)
        scores.append(score)
        retained.append(len(rows))
    if not kept_offsets:
        raise EstimationError(f"{param.name}: no offsets with enough samples")
    cutoff = None
    for c, s in zip(kept_offsets, scores):
        bar = noise_floor.value + k_se * (s.std_error + noise_floor.std_error)
        if s.value <= bar:
            cutoff = c
            break
    return ReductionCurve(param.name, tuple(kept_offsets), tuple(scores),
                          tuple(retained), cutoff)


# -- the full pipeline ---------------------------------------------------------


@dataclass
class GroupRanking:
    group: GroupSpec
    entries: tuple               # ((name, HsicScore), ...) sorted descending
    floor: HsicScore
    n_rows: int
    n_goal: int

    def impactful(self, k_se: float = IMPACT_K_SE):
        bar = lambda s: self.floor.value + k_se * (s.std_error + self.floor.std_error)
        return tuple(name for name, s in self.entries if s.value > bar(s))


@dataclass
class SensitivityReport:
    goal: GoalSet
    seed: int
    groups: tuple                # GroupRanking per group, main first
    interactions: InteractionMatrix | None
    noise_floor: HsicScore       # main-group dummy score

    def group(self, gid: str) -> GroupRanking:
        for g in self.groups:
            if g.group.id == gid:
                return g
        raise KeyError(gid)

    def impactful(self, k_se: float = IMPACT_K_SE):
        """Impactful parameters, preserving first-seen order.

        Main parameters are judged in the main group; a conditional group
        only contributes verdicts about its own conditional members.
        """
        main_members = set(self.groups[0].group.members)
        seen = []
        for g in self.groups:
            for name in g.impactful(k_se):
                judged_here = g.group.id == MAIN_GROUP or name not in main_members
                if judged_here and name not in seen:
                    seen.append(name)
        return tuple(seen)

    def interacting_pairs(self, k_se: float = IMPACT_K_SE):
        """Off-diagonal pairs whose joint score clears the noise floor."""
        if self.interactions is None:
            return ()
        out = []
        im = self.interactions
        for (i, j), s in sorted(im.scores.items()):
            if i == j:
                continue
            bar = self.noise_floor.value + k_se * (s.std_error + self.noise_floor.std_error)
            if s.value > bar:
                out.append((im.params[i], im.params[j]))
        return tuple(out)


def run_algorithm1(
    space: SearchSpace,
    trials,
    goal: GoalSet,
    seed: int = 0,
    *,
    n_boot: int = 100,
    full_interactions: bool = False,
    k_se: float = IMPACT_K_SE,
) -> SensitivityReport:
    """Goal flags, conditional groups, per-group rankings, interactions.

    Interactions are scanned among main parameters; by default only pairs
    where both single scores sit below the impact bar are computed, since a
    pair containing an impactful parameter is always large.  Pass
    full_interactions=True for the complete matrix.
    """
    if not trials:
        raise EstimationError("no trials")
    z = make_goal_flags(trials, goal)
    matrix = normalize_trials(space, trials, seed)
    groups = build_groups(space)
    rankings = []
    for g in groups:
        rows = matrix.rows_where_active(g.members)
        entries = rank_group(g, matrix, z, seed=seed, n_boot=n_boot)
        floor = dummy_floor(rows, z, seed, label=g.id, n_boot=n_boot)
        rankings.append(GroupRanking(g, tuple(entries), floor,
                                     int(rows.sum()), int(z[rows].sum())))
    main_ranking = rankings[0]
    main_params = main_ranking.group.members
    interactions = None
    if len(main_params) >= 2:
        if full_interactions:
            pairs = None
        else:
            quiet = [n for n in main_params if n not in main_ranking.impactful(k_se)]
            pairs = [(a, b) for ai, a in enumerate(quiet) for b in quiet[ai + 1:]]
        if pairs is None or pairs:
            interactions = interaction_matrix(
                main_params, matrix, z, seed=seed, n_boot=n_boot, pairs=pairs
            )
    return SensitivityReport(goal, int(seed), tuple(rankings), interactions,
                             main_ranking.floor)
