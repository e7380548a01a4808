"""Exact fixed-horizon integer multi-commodity flow and the quickest driver.

Each remote operation is one unit of demand routed from its target
processor to its control processor within a single time step. The solver
enumerates completion-step assignments under the precedence constraints,
routes every step's operations over simple paths under the per-step edge
capacities, and minimizes total flow by branch and bound. A brute-force
oracle and an independent constraint checker back the tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .circuit import Commodity
from .network import QuotientGraph, edge_key
from .relations import RelationTable


class InstanceTooLarge(ValueError):
    pass


class NoSolutionError(RuntimeError):
    """Even the serial horizon is infeasible; with a connected architecture
    this signals an internal inconsistency, not a user error."""


@dataclass(frozen=True)
class Solution:
    """Completion step and routed path per commodity. Paths are node
    sequences in flow direction: from the target processor (source of the
    unit demand) to the control processor (sink)."""

    d: int
    steps: dict[int, int]
    paths: dict[int, tuple[str, ...]]
    total_flow: int


@dataclass
class SolverStats:
    nodes: int = 0
    invocations: int = 0


def e_depth(solution: Solution) -> int:
    """Number of entanglement rounds the schedule uses."""
    return max(solution.steps.values(), default=0)


def path_edges(path: tuple[str, ...]) -> list[tuple[str, str]]:
    return [(path[i], path[i + 1]) for i in range(len(path) - 1)]


def dump_solution(solution: Solution) -> str:
    lines = []
    for i in sorted(solution.steps):
        hops = ",".join(f"{a}-{b}" for a, b in path_edges(solution.paths[i]))
        lines.append(f"{i} tau={solution.steps[i]} path={hops}")
    lines.append(f"e_depth={e_depth(solution)} total_flow={solution.total_flow}")
    return "\n".join(lines) + "\n"


def _assignment_ok(
    tau: dict[int, int], relations: RelationTable, upto: int
) -> bool:
    """Precedence feasibility of a (partial) assignment covering commodity
    indices 1..upto: a later-layer operation completes strictly after any
    earlier one it cannot share a step with, and no earlier than one it can."""
    for j in range(1, upto):
        if not relations.prec(j, upto):
            continue
        if relations.qp(j, upto):
            if tau[upto] < tau[j]:
                return False
        elif tau[upto] <= tau[j]:
            return False
    return True


class _Router:
    """Minimum-total-flow routing of one step's commodities under the
    per-step capacities, memoized on the commodity subset."""

    def __init__(self, q: QuotientGraph, commodities: list[Commodity], stats: SolverStats):
        self.q = q
        self.stats = stats
        self.by_index = {c.index: c for c in commodities}
        self.paths: dict[int, list[tuple[str, ...]]] = {}
        self.dist: dict[int, int] = {}
        for c in commodities:
            options = q.simple_paths(c.target_proc, c.control_proc)
            self.paths[c.index] = options
            self.dist[c.index] = len(options[0]) - 1 if options else 10**9
        self.cache: dict[tuple[int, ...], tuple[int, dict[int, tuple[str, ...]]] | None] = {}

    def route(self, members: tuple[int, ...]) -> tuple[int, dict[int, tuple[str, ...]]] | None:
        if members in self.cache:
            return self.cache[members]
        best: list = [None]
        used: dict[tuple[str, str], int] = {}
        chosen: dict[int, tuple[str, ...]] = {}
        remaining_bound = [sum(self.dist[i] for i in members)]

        def place(pos: int, flow: int) -> None:
            self.stats.nodes += 1
            if best[0] is not None and flow + remaining_bound[0] >= best[0][0]:
                return
            if pos == len(members):
                if best[0] is None or flow < best[0][0]:
                    best[0] = (flow, dict(chosen))
                return
            i = members[pos]
            remaining_bound[0] -= self.dist[i]
            for path in self.paths[i]:
                edges = [edge_key(a, b) for a, b in zip(path, path[1:])]
                if any(used.get(e, 0) + 1 > self.q.capacity[e] for e in edges):
                    continue
                for e in edges:
                    used[e] = used.get(e, 0) + 1
                chosen[i] = path
                place(pos + 1, flow + len(edges))
                del chosen[i]
                for e in edges:
                    used[e] -= 1
            remaining_bound[0] += self.dist[i]

        place(0, 0)
        self.cache[members] = best[0]
        return best[0]


def solve_fixed_horizon(
    q: QuotientGraph,
    commodities: list[Commodity],
    relations: RelationTable,
    d: int,
    stats: SolverStats | None = None,
    router: _Router | None = None,
) -> Solution | None:
    """Minimum-total-flow schedule within horizon d, or None if infeasible.

    Completion steps are searched in lexicographic order with the domain of
    commodity i pruned to [1, min(i, d)] (it never pays to run the i-th
    operation later than step i). Per assignment, each step's operations
    are routed exactly; branch and bound uses the shortest-path lower
    bound. Among minimum-flow schedules the lexicographically smallest
    step vector wins, then the path enumeration order.
    """
    if d < 1:
        raise ValueError("horizon must be positive")
    stats = stats if stats is not None else SolverStats()
    router = router if router is not None else _Router(q, commodities, stats)
    k = len(commodities)
    if k == 0:
        return Solution(0, {}, {}, 0)
    for c in commodities:
        if not router.paths[c.index]:
            return None
    floor = sum(router.dist[c.index] for c in commodities)

    best: list = [None]
    tau: dict[int, int] = {}

    def assign(i: int) -> None:
        stats.nodes += 1
        if i > k:
            by_step: dict[int, list[int]] = {}
            for idx, step in tau.items():
                by_step.setdefault(step, []).append(idx)
            flow = 0
            routed: dict[int, tuple[str, ...]] = {}
            for step in sorted(by_step):
                res = router.route(tuple(sorted(by_step[step])))
                if res is None:
                    return
                flow += res[0]
                routed.update(res[1])
            if best[0] is None or flow < best[0].total_flow:
                best[0] = Solution(d, dict(tau), routed, flow)
            return
        for step in range(1, min(i, d) + 1):
            tau[i] = step
            if _assignment_ok(tau, relations, i):
                assign(i + 1)
                if best[0] is not None and best[0].total_flow == floor:
                    del tau[i]
                    return
            del tau[i]

    assign(1)
    sol = best[0]
    if sol is not None and sol.total_flow < floor:
        raise RuntimeError("flow fell below the shortest-path bound")
    return sol


def quickest(
    q: QuotientGraph,
    commodities: list[Commodity],
    relations: RelationTable,
    stats: SolverStats | None = None,
) -> Solution:
    """Binary search on the horizon for the smallest feasible one.

    The serial schedule is always feasible on a connected architecture, so
    the search runs over [1, k] and needs at most ceil(log2 k) + 1 solver
    invocations.
    """
    stats = stats if stats is not None else SolverStats()
    k = len(commodities)
    if k == 0:
        return Solution(0, {}, {}, 0)
    router = _Router(q, commodities, stats)
    lo, hi = 1, k
    found: Solution | None = None
    while lo <= hi:
        mid = (lo + hi) // 2
        stats.invocations += 1
        sol = solve_fixed_horizon(q, commodities, relations, mid, stats, router)
        if sol is not None:
            found = sol
            hi = mid - 1
        else:
            lo = mid + 1
    if found is None:
        raise NoSolutionError("no feasible schedule even at the serial horizon")
    return found


def brute_force_oracle(
    q: QuotientGraph,
    commodities: list[Commodity],
    relations: RelationTable,
    max_k: int = 4,
    max_d: int = 4,
) -> Solution:
    """Definitional optimum by exhaustive enumeration.

    Every completion-step assignment in [1, d]^k is tried; operations
    sharing a step are routed by checking every combination of their
    simple paths against the capacities (steps are independent, so each
    subset is enumerated exhaustively once). Returns the lexicographically
    minimal (d, total_flow) optimum. Deliberately shares no search logic
    with the solver.
    """
    k = len(commodities)
    if k > max_k:
        raise InstanceTooLarge(f"oracle limited to {max_k} commodities, got {k}")
    if k == 0:
        return Solution(0, {}, {}, 0)

    def all_paths(src: str, dst: str) -> list[tuple[str, ...]]:
        found: list[tuple[str, ...]] = []
        stack: list[tuple[str, tuple[str, ...]]] = [(src, (src,))]
        while stack:
            node, trail = stack.pop()
            if node == dst:
                found.append(trail)
                continue
            for a, b in q.edges():
                for u, v in ((a, b), (b, a)):
                    if u == node and v not in trail:
                        stack.append((v, trail + (v,)))
        return sorted(found, key=lambda p: (len(p), p))

    options = {c.index: all_paths(c.target_proc, c.control_proc) for c in commodities}
    indices = [c.index for c in commodities]
    prec_pairs = [
        (i, j)
        for i in indices
        for j in indices
        if relations.prec(i, j)
    ]
    group_cache: dict[tuple[int, ...], tuple[int, dict[int, tuple[str, ...]]] | None] = {}

    def route_group(members: tuple[int, ...]):
        """Cheapest capacity-respecting path combination for one step."""
        if members not in group_cache:
            best = None
            for chosen in itertools.product(*(options[i] for i in members)):
                load: dict[tuple[str, str], int] = {}
                fits = True
                for path in chosen:
                    for a, b in zip(path, path[1:]):
                        key = edge_key(a, b)
                        load[key] = load.get(key, 0) + 1
                        if load[key] > q.capacity[key]:
                            fits = False
                if not fits:
                    continue
                flow = sum(len(p) - 1 for p in chosen)
                if best is None or flow < best[0]:
                    best = (flow, dict(zip(members, chosen)))
            group_cache[members] = best
        return group_cache[members]

    for d in range(1, min(k, max_d) + 1):
        best: Solution | None = None
        for combo in itertools.product(range(1, d + 1), repeat=k):
            tau = dict(zip(indices, combo))
            if any(
                (tau[j] < tau[i]) if relations.qp(i, j) else (tau[j] <= tau[i])
                for i, j in prec_pairs
            ):
                continue
            groups: dict[int, list[int]] = {}
            for i in indices:
                groups.setdefault(tau[i], []).append(i)
            flow = 0
            routed: dict[int, tuple[str, ...]] = {}
            feasible = True
            for step in sorted(groups):
                res = route_group(tuple(sorted(groups[step])))
                if res is None:
                    feasible = False
                    break
                flow += res[0]
                routed.update(res[1])
            if feasible and (best is None or flow < best.total_flow):
                best = Solution(d, dict(tau), routed, flow)
        if best is not None:
            return best
    raise InstanceTooLarge(f"no feasible horizon within max_d={max_d}")


def check_solution(
    q: QuotientGraph,
    commodities: list[Commodity],
    relations: RelationTable,
    solution: Solution,
) -> list[str]:
    """Re-validate a schedule against the flow constraints, independently
    of how it was produced. Returns human-readable violations (empty when
    the schedule is valid).

    Checks: per-step per-commodity flow conservation, unit demand at the
    endpoint processors, per-step undirected capacity, completion-step
    precedence, and cycle-freeness (simple paths).
    """
    problems: list[str] = []
    d = solution.d
    # Reconstruct directed arc flows f[(u, v), i, tau].
    f: dict[tuple[tuple[str, str], int, int], int] = {}
    for c in commodities:
        i = c.index
        if i not in solution.steps or i not in solution.paths:
            problems.append(f"commodity {i} missing from solution")
            continue
        tau = solution.steps[i]
        path = solution.paths[i]
        if not (1 <= tau <= d):
            problems.append(f"commodity {i} completes outside the horizon: {tau}")
        if path[0] != c.target_proc or path[-1] != c.control_proc:
            problems.append(f"commodity {i} path endpoints {path[0]}..{path[-1]} wrong")
        if len(set(path)) != len(path):
            problems.append(f"commodity {i} path revisits a processor")
        for a, b in zip(path, path[1:]):
            if edge_key(a, b) not in q.capacity:
                problems.append(f"commodity {i} uses missing edge {a}-{b}")
            f[((a, b), i, tau)] = f.get(((a, b), i, tau), 0) + 1

    def inflow(node: str, i: int, tau: int) -> int:
        return sum(v for ((a, b), ii, tt), v in f.items() if b == node and ii == i and tt == tau)

    def outflow(node: str, i: int, tau: int) -> int:
        return sum(v for ((a, b), ii, tt), v in f.items() if a == node and ii == i and tt == tau)

    for c in commodities:
        i = c.index
        for tau in range(1, d + 1):
            for node in q.nodes:
                if node in (c.control_proc, c.target_proc):
                    continue
                if inflow(node, i, tau) != outflow(node, i, tau):
                    problems.append(f"conservation violated at {node} for {i} at step {tau}")
        net_c = sum(inflow(c.control_proc, i, t) - outflow(c.control_proc, i, t) for t in range(1, d + 1))
        net_t = sum(inflow(c.target_proc, i, t) - outflow(c.target_proc, i, t) for t in range(1, d + 1))
        if net_c != 1:
            problems.append(f"demand at control processor of {i} is {net_c}, want +1")
        if net_t != -1:
            problems.append(f"demand at target processor of {i} is {net_t}, want -1")

    for edge, cap in q.capacity.items():
        for tau in range(1, d + 1):
            used = sum(
                v
                for ((a, b), _, tt), v in f.items()
                if tt == tau and edge_key(a, b) == edge
            )
            if used > cap:
                problems.append(f"capacity exceeded on {edge} at step {tau}: {used} > {cap}")

    for c in commodities:
        for other in commodities:
            i, j = other.index, c.index
            if not relations.prec(i, j):
                continue
            ti, tj = solution.steps.get(i), solution.steps.get(j)
            if ti is None or tj is None:
                continue
            if relations.qp(i, j):
                if tj < ti:
                    problems.append(f"{j} completes before its sharable predecessor {i}")
            elif tj <= ti:
                problems.append(f"{j} does not strictly follow its predecessor {i}")
    return problems
