"""Exact solver for the budgeted detector-selection program.

Selection maximizes (utility of the k best selected detectors) + lambda x
(utility of all selected detectors), subject to a total estimated-cost
budget, a per-algorithm minimum share of the budget, and a minimum share
per prioritized subspace. Since the top-k indicator of any fixed selection
is optimally assigned to its highest-utility members, the search branches
over selection variables only, depth-first in utility/cost order, with a
fractional-knapsack upper bound.
"""

from __future__ import annotations

import bisect
import heapq
import time
from bisect import insort
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleInstanceError, ParameterError

_NEGATE = lambda x: -x  # noqa: E731 - insort key for descending order

DEFAULT_K = 10
DEFAULT_LAMBDA = 1.0
COST_TOLERANCE = 1e-9
OBJECTIVE_TOLERANCE = 1e-12
DEFAULT_NODE_LIMIT = 2_000_000


def default_parameters() -> tuple[int, float]:
    """The stock (k, lambda) balancing top-k against total utility."""
    return DEFAULT_K, DEFAULT_LAMBDA


def objective_value(utilities, k: int, lam: float) -> float:
    """Sum of the k largest selected utilities plus lambda times their total."""
    utilities = sorted((float(u) for u in utilities), reverse=True)
    return sum(utilities[:k]) + lam * sum(utilities)


@dataclass(frozen=True)
class MipInstance:
    """One selection problem over annotated candidates.

    ``algorithm_ids`` and ``group_ids`` flatten the candidates' algorithm
    and prioritized-subspace membership (-1 = not prioritized). The
    per-algorithm lower bound is t_total / (2 |algorithms|); the per-group
    lower bound is t_total / (2 |groups|).
    """

    costs: np.ndarray
    utilities: np.ndarray
    algorithm_ids: np.ndarray
    group_ids: np.ndarray
    t_total: float
    k: int = DEFAULT_K
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        for name in ("costs", "utilities"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        for name in ("algorithm_ids", "group_ids"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=int))
        n = self.costs.shape[0]
        if not (self.utilities.shape[0] == self.algorithm_ids.shape[0]
                == self.group_ids.shape[0] == n):
            raise ParameterError("instance arrays must have equal length")
        if n == 0:
            raise ParameterError("instance needs at least one candidate")
        if not np.all(self.costs > 0):
            raise ParameterError("all costs must be positive")
        if not np.all(self.utilities >= 0):
            raise ParameterError("all utilities must be non-negative")
        if not self.t_total > 0:
            raise ParameterError("t_total must be positive")
        if self.k < 1:
            raise ParameterError("k must be >= 1")
        if self.lam < 0:
            raise ParameterError("lambda must be non-negative")

    @classmethod
    def from_candidates(cls, candidates, t_total: float,
                        k: int = DEFAULT_K, lam: float = DEFAULT_LAMBDA,
                        algorithms=None) -> "MipInstance":
        """Build an instance from estimated CandidateDetector objects."""
        if algorithms is None:
            algorithms = tuple(dict.fromkeys(c.algorithm for c in candidates))
        alg_index = {a: i for i, a in enumerate(algorithms)}
        groups = {}
        group_ids = []
        for cand in candidates:
            if cand.cost is None or cand.utility is None:
                raise ParameterError(f"candidate {cand.label()} lacks estimates")
            if cand.origin == "prioritized":
                group_ids.append(groups.setdefault(cand.subspace.indices, len(groups)))
            else:
                group_ids.append(-1)
        return cls(
            costs=np.array([c.cost for c in candidates]),
            utilities=np.array([c.utility for c in candidates]),
            algorithm_ids=np.array([alg_index[c.algorithm] for c in candidates]),
            group_ids=np.array(group_ids),
            t_total=t_total, k=k, lam=lam)

    @property
    def n_algorithms(self) -> int:
        return int(self.algorithm_ids.max()) + 1

    @property
    def n_groups(self) -> int:
        return int(self.group_ids.max()) + 1

    @property
    def algorithm_lower_bound(self) -> float:
        return self.t_total / (2.0 * self.n_algorithms)

    @property
    def group_lower_bound(self) -> float:
        return self.t_total / (2.0 * self.n_groups) if self.n_groups > 0 else 0.0

    def to_dict(self) -> dict:
        return {
            "costs": self.costs.tolist(),
            "utilities": self.utilities.tolist(),
            "algorithm_ids": self.algorithm_ids.tolist(),
            "group_ids": self.group_ids.tolist(),
            "t_total": self.t_total,
            "k": self.k,
            "lambda": self.lam,
        }


@dataclass(frozen=True)
class ExplorationPlan:
    """A feasible selection: candidate indices, their top-k, and diagnostics."""

    selected: tuple[int, ...]
    top_k: tuple[int, ...]
    objective: float
    proven_optimal: bool
    solver_stats: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "selected": list(self.selected),
            "top_k": list(self.top_k),
            "objective": self.objective,
            "proven_optimal": self.proven_optimal,
            "solver_stats": dict(self.solver_stats),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ExplorationPlan":
        return cls(tuple(payload["selected"]), tuple(payload["top_k"]),
                   payload["objective"], payload["proven_optimal"],
                   dict(payload.get("solver_stats", {})))


def check_feasibility(plan: ExplorationPlan, instance: MipInstance) -> list[str]:
    """All constraint violations of a plan, empty when feasible (1e-9 slack)."""
    violations = []
    sel = np.zeros(instance.costs.shape[0], dtype=bool)
    sel[list(plan.selected)] = True
    total = instance.costs[sel].sum()
    if total > instance.t_total + COST_TOLERANCE:
        violations.append(
            f"total cost {total:.9g} exceeds budget {instance.t_total:.9g}")
    for a in range(instance.n_algorithms):
        share = instance.costs[sel & (instance.algorithm_ids == a)].sum()
        if share < instance.algorithm_lower_bound - COST_TOLERANCE:
            violations.append(
                f"algorithm {a} explored for {share:.9g} < "
                f"required {instance.algorithm_lower_bound:.9g}")
    for g in range(instance.n_groups):
        share = instance.costs[sel & (instance.group_ids == g)].sum()
        if share < instance.group_lower_bound - COST_TOLERANCE:
            violations.append(
                f"prioritized subspace {g} explored for {share:.9g} < "
                f"required {instance.group_lower_bound:.9g}")
    if not set(plan.top_k) <= set(plan.selected):
        violations.append("top-k flags set outside the selection")
    if len(plan.top_k) > instance.k:
        violations.append(f"{len(plan.top_k)} top-k flags exceed k={instance.k}")
    return violations


def _diagnose(instance: MipInstance) -> list[str]:
    """Explain why no selection can satisfy the lower bounds and budget."""
    problems = []
    alg_deficit = 0.0
    for a in range(instance.n_algorithms):
        reachable = instance.costs[instance.algorithm_ids == a].sum()
        if reachable < instance.algorithm_lower_bound - COST_TOLERANCE:
            problems.append(
                f"algorithm {a} can accumulate at most {reachable:.9g} < "
                f"required {instance.algorithm_lower_bound:.9g}")
        alg_deficit += instance.algorithm_lower_bound
    group_deficit = instance.n_groups * instance.group_lower_bound
    for g in range(instance.n_groups):
        reachable = instance.costs[instance.group_ids == g].sum()
        if reachable < instance.group_lower_bound - COST_TOLERANCE:
            problems.append(
                f"prioritized subspace {g} can accumulate at most {reachable:.9g} "
                f"< required {instance.group_lower_bound:.9g}")
    if not problems:
        problems.append(
            f"diversity lower bounds reserve at least "
            f"{max(alg_deficit, group_deficit):.9g} but no selection meeting "
            f"them fits the budget {instance.t_total:.9g}")
    return problems


class _Search:
    """Depth-first branch and bound over selection variables.

    The hot path runs on plain Python floats: per-node work is a bisect
    into prefix-sum arrays for the fractional-knapsack bound, an O(k)
    merge of selected and suffix top-k utilities, and incremental deficit
    bookkeeping for the diversity lower bounds.
    """

    def __init__(self, instance: MipInstance, node_limit: int):
        self.inst = instance
        self.node_limit = node_limit
        self.nodes = 0
        ratio = instance.utilities / instance.costs
        self.order = sorted(range(len(ratio)), key=lambda i: (-ratio[i], i))
        self.costs = [float(instance.costs[i]) for i in self.order]
        self.utils = [float(instance.utilities[i]) for i in self.order]
        self.algs = [int(instance.algorithm_ids[i]) for i in self.order]
        self.groups = [int(instance.group_ids[i]) for i in self.order]
        n = len(self.order)
        # prefix sums in ratio order for the fractional-knapsack bound
        self.prefix_cost = [0.0] * (n + 1)
        self.prefix_util = [0.0] * (n + 1)
        for i in range(n):
            self.prefix_cost[i + 1] = self.prefix_cost[i] + self.costs[i]
            self.prefix_util[i + 1] = self.prefix_util[i] + self.utils[i]
        # k largest utilities in each suffix, sorted descending
        self.suffix_topk = [[] for _ in range(n + 1)]
        for pos in range(n - 1, -1, -1):
            merged = self.suffix_topk[pos + 1] + [self.utils[pos]]
            self.suffix_topk[pos] = heapq.nlargest(instance.k, merged)
        # remaining per-algorithm / per-group cost in each suffix
        n_algs, n_groups = instance.n_algorithms, instance.n_groups
        self.suffix_alg_cost = [[0.0] * n_algs for _ in range(n + 1)]
        self.suffix_group_cost = [[0.0] * max(n_groups, 1) for _ in range(n + 1)]
        for pos in range(n - 1, -1, -1):
            row = self.suffix_alg_cost[pos + 1][:]
            row[self.algs[pos]] += self.costs[pos]
            self.suffix_alg_cost[pos] = row
            row = self.suffix_group_cost[pos + 1][:]
            if self.groups[pos] >= 0:
                row[self.groups[pos]] += self.costs[pos]
            self.suffix_group_cost[pos] = row
        self.best_objective = -np.inf
        self.best_selection = None  # sorted original indices
        self.limit_hit = False

    def seed_incumbent(self, selection_original_indices):
        if selection_original_indices is None:
            return
        obj = objective_value(self.inst.utilities[list(selection_original_indices)],
                              self.inst.k, self.inst.lam)
        self.best_objective = obj
        self.best_selection = tuple(sorted(selection_original_indices))

    def run(self):
        inst = self.inst
        n = len(self.order)
        k, lam = inst.k, inst.lam
        t_cap = inst.t_total + COST_TOLERANCE
        alg_lower = inst.algorithm_lower_bound
        group_lower = inst.group_lower_bound
        n_algs, n_groups = inst.n_algorithms, inst.n_groups
        costs, utils, algs, groups = self.costs, self.utils, self.algs, self.groups
        prefix_cost, prefix_util = self.prefix_cost, self.prefix_util
        suffix_topk = self.suffix_topk
        suffix_alg = self.suffix_alg_cost
        suffix_group = self.suffix_group_cost
        obj_tol = OBJECTIVE_TOLERANCE

        alg_cost = [0.0] * n_algs
        group_cost = [0.0] * max(n_groups, 1)
        selected = []
        sel_desc = []  # selected utilities, sorted descending

        def upper_bound(pos, used, util_sum):
            # fractional knapsack over the ratio-ordered suffix
            capacity = t_cap - used
            base = prefix_cost[pos]
            cut = bisect.bisect_right(prefix_cost, base + capacity, lo=pos) - 1
            fractional = prefix_util[cut] - prefix_util[pos]
            if cut < n:
                room = capacity - (prefix_cost[cut] - base)
                if room > 0.0:
                    fractional += utils[cut] * (room / costs[cut])
            # optimistic top-k: merge selected and suffix top utilities
            top_sum = 0.0
            taken = 0
            i = j = 0
            suffix = suffix_topk[pos]
            while taken < k:
                si = sel_desc[i] if i < len(sel_desc) else -1.0
                sj = suffix[j] if j < len(suffix) else -1.0
                if si < 0.0 and sj < 0.0:
                    break
                if si >= sj:
                    top_sum += si
                    i += 1
                else:
                    top_sum += sj
                    j += 1
                taken += 1
            return lam * (util_sum + fractional) + top_sum

        def bounds_reachable(pos, used):
            deficit_a = 0.0
            suffix_a = suffix_alg[pos]
            for a in range(n_algs):
                deficit = alg_lower - alg_cost[a]
                if deficit > COST_TOLERANCE:
                    if alg_cost[a] + suffix_a[a] < alg_lower - COST_TOLERANCE:
                        return False
                    deficit_a += deficit
            deficit_g = 0.0
            suffix_g = suffix_group[pos]
            for g in range(n_groups):
                deficit = group_lower - group_cost[g]
                if deficit > COST_TOLERANCE:
                    if group_cost[g] + suffix_g[g] < group_lower - COST_TOLERANCE:
                        return False
                    deficit_g += deficit
            # closing the deficits costs at least their max and must fit
            extra = deficit_a if deficit_a >= deficit_g else deficit_g
            return used + extra <= t_cap

        def leaf_check():
            for a in range(n_algs):
                if alg_cost[a] < alg_lower - COST_TOLERANCE:
                    return
            for g in range(n_groups):
                if group_cost[g] < group_lower - COST_TOLERANCE:
                    return
            obj = sum(sel_desc[:k]) + lam * sum(sel_desc)
            candidate = tuple(sorted(self.order[i] for i in selected))
            if obj > self.best_objective + obj_tol:
                self.best_objective, self.best_selection = obj, candidate
            elif (obj > self.best_objective - obj_tol
                  and self.best_selection is not None
                  and candidate < self.best_selection):
                self.best_selection = candidate

        # explicit stack, include-branch explored first; "u" frames undo an
        # inclusion once its subtree is exhausted
        stack = [("v", 0, 0.0, 0.0)]
        while stack:
            frame = stack.pop()
            if frame[0] == "u":
                pos = frame[1]
                selected.pop()
                sel_desc.remove(utils[pos])
                alg_cost[algs[pos]] -= costs[pos]
                if groups[pos] >= 0:
                    group_cost[groups[pos]] -= costs[pos]
                continue
            _, pos, used, util_sum = frame
            self.nodes += 1
            if self.nodes > self.node_limit:
                self.limit_hit = True
                break
            if not bounds_reachable(pos, used):
                continue
            if upper_bound(pos, used, util_sum) < self.best_objective - obj_tol:
                continue
            if pos == n:
                leaf_check()
                continue
            cost = costs[pos]
            stack.append(("v", pos + 1, used, util_sum))  # exclude branch
            if used + cost <= t_cap:
                util = utils[pos]
                selected.append(pos)
                insort(sel_desc, util, key=_NEGATE)
                alg_cost[algs[pos]] += cost
                if groups[pos] >= 0:
                    group_cost[groups[pos]] += cost
                stack.append(("u", pos))
                stack.append(("v", pos + 1, used + cost, util_sum + util))


def _min_cover_subset(members, costs, bound):
    """Cheapest subset of (few) members whose cost sum reaches the bound."""
    best_cost, best_subset = None, None
    for mask in range(1, 1 << len(members)):
        total = 0.0
        subset = []
        for bit, i in enumerate(members):
            if mask >> bit & 1:
                total += costs[i]
                subset.append(i)
        if total >= bound - COST_TOLERANCE and (best_cost is None or total < best_cost):
            best_cost, best_subset = total, subset
    return best_subset


def _greedy_incumbent(instance: MipInstance):
    """Feasibility heuristic seeding the search.

    Fills each algorithm's share cheapest-first but steers those picks onto
    prioritized subspaces whose own bound is still unmet (a candidate's cost
    counts toward both families at once), then closes any remaining group
    gaps with minimum-cost subset covers, and finally spends leftover budget
    by utility/cost ratio.
    """
    n = instance.costs.shape[0]
    selected = set()
    used = 0.0
    alg_cost = np.zeros(instance.n_algorithms)
    group_cost = np.zeros(max(instance.n_groups, 1))

    def add(i):
        nonlocal used
        selected.add(i)
        used += instance.costs[i]
        alg_cost[instance.algorithm_ids[i]] += instance.costs[i]
        if instance.group_ids[i] >= 0:
            group_cost[instance.group_ids[i]] += instance.costs[i]

    def group_unmet(i):
        g = instance.group_ids[i]
        return bool(g >= 0 and
                    group_cost[g] < instance.group_lower_bound - COST_TOLERANCE)

    by_algorithm = [sorted((int(i) for i in np.flatnonzero(instance.algorithm_ids == a)),
                           key=lambda i: (instance.costs[i], i))
                    for a in range(instance.n_algorithms)]
    if any(not members for members in by_algorithm):
        return None  # an algorithm with no candidates cannot meet its share
    # chunky algorithms first, so their unavoidable picks land on open groups
    alg_order = sorted(range(instance.n_algorithms),
                       key=lambda a: -instance.costs[by_algorithm[a][0]])
    for a in alg_order:
        bound = instance.algorithm_lower_bound - COST_TOLERANCE
        members = by_algorithm[a]
        for i in members:  # first pass: picks that also serve an open group
            if alg_cost[a] >= bound:
                break
            if i not in selected and group_unmet(i):
                add(i)
        for i in members:  # second pass: cheapest regardless
            if alg_cost[a] >= bound:
                break
            if i not in selected:
                add(i)
        if alg_cost[a] < bound:
            return None
    for g in range(instance.n_groups):
        gap = instance.group_lower_bound - group_cost[g]
        if gap <= COST_TOLERANCE:
            continue
        members = [int(i) for i in np.flatnonzero(instance.group_ids == g)
                   if int(i) not in selected]
        if len(members) > 12:  # fall back to cheapest-first for odd instances
            members.sort(key=lambda i: instance.costs[i])
            for i in members:
                if group_cost[g] >= instance.group_lower_bound - COST_TOLERANCE:
                    break
                add(i)
            if group_cost[g] < instance.group_lower_bound - COST_TOLERANCE:
                return None
        else:
            cover = _min_cover_subset(members, instance.costs, gap)
            if cover is None:
                return None
            for i in cover:
                add(i)
    if used > instance.t_total + COST_TOLERANCE:
        return None
    if np.any(alg_cost < instance.algorithm_lower_bound - COST_TOLERANCE):
        return None
    if instance.n_groups and np.any(
            group_cost[:instance.n_groups] < instance.group_lower_bound - COST_TOLERANCE):
        return None
    ratio_order = sorted(range(n), key=lambda i: (-instance.utilities[i] / instance.costs[i], i))
    for i in ratio_order:
        if i not in selected and used + instance.costs[i] <= instance.t_total + COST_TOLERANCE:
            add(i)
    return tuple(sorted(selected))


def _top_k_of(instance: MipInstance, selected) -> tuple[int, ...]:
    """Optimal top-k flags: the k highest-utility selected candidates."""
    ranked = sorted(selected, key=lambda i: (-instance.utilities[i], i))
    return tuple(sorted(ranked[:instance.k]))


def solve(instance: MipInstance, node_limit: int = DEFAULT_NODE_LIMIT) -> ExplorationPlan:
    """Exact branch-and-bound; raises InfeasibleInstanceError when no
    selection can satisfy the budget and diversity constraints."""
    start = time.perf_counter()
    search = _Search(instance, node_limit)
    search.seed_incumbent(_greedy_incumbent(instance))
    search.run()
    wall = time.perf_counter() - start
    if search.best_selection is None:
        raise InfeasibleInstanceError(_diagnose(instance), proven=not search.limit_hit)
    stats = {"nodes": search.nodes, "wall_time": wall,
             "node_limit_hit": search.limit_hit}
    return ExplorationPlan(
        selected=search.best_selection,
        top_k=_top_k_of(instance, search.best_selection),
        objective=search.best_objective,
        proven_optimal=not search.limit_hit,
        solver_stats=stats)
