"""Configurations on a graph and the one-step firing relation.

A configuration is a tuple of non-negative grain counts indexed by vertex.
Firing a vertex v holding at least weight(v) grains removes weight(v) grains
from v and adds one grain at the target of each outgoing edge (loops return
grains to v in the same step).  Sinks may additionally fire away single
grains when sink relations are switched on; that is the congruence used by
graph monoids, while the potential certificate and plain stabilisation work
with sink grains retained.

Deciding whether two configurations are congruent is done in three layers:
stable-form comparison on sandpile graphs, an exact check through a
confluent completion of the firing rules, and a budgeted breadth-first
search for a common reduct as a fallback.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from . import errors
from .graph import SandpileGraph, WeightedDigraph, shortest_sink_distances

DEFAULT_STEP_BUDGET = 100_000

Configuration = tuple

# ------------------------------------------------------------- configurations


def zero_config(g: WeightedDigraph) -> tuple:
    return (0,) * g.n_vertices


def config_from_counts(g: WeightedDigraph, counts) -> tuple:
    """Build a configuration from a mapping of vertex (name or index) to count."""
    out = [0] * g.n_vertices
    for v, k in dict(counts).items():
        k = int(k)
        if k < 0:
            raise errors.BadParameters(f"negative count for {v!r}")
        out[g._resolve(v)] = k
    return tuple(out)


def parse_config(g: WeightedDigraph, text: str) -> tuple:
    """Parse ``v1=3,s=1``; omitted vertices hold zero grains."""
    counts = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise errors.BadParameters(f"bad configuration entry {chunk!r}")
        name, _, value = chunk.partition("=")
        try:
            counts[name.strip()] = int(value)
        except ValueError:
            raise errors.BadParameters(f"bad count in {chunk!r}") from None
    return config_from_counts(g, counts)


def config_to_str(g: WeightedDigraph, c) -> str:
    return ",".join(f"{g.names[v]}={k}" for v, k in enumerate(c) if k)


def format_element(names, vec) -> str:
    """Formal-sum rendering of a count vector, e.g. ``2x+s`` or ``0``."""
    parts = []
    for v, k in enumerate(vec):
        if k == 1:
            parts.append(names[v])
        elif k > 1:
            parts.append(f"{k}{names[v]}")
    return "+".join(parts) if parts else "0"


def _check_config(g: WeightedDigraph, c) -> tuple:
    c = tuple(int(k) for k in c)
    if len(c) != g.n_vertices:
        raise errors.BadParameters(
            f"configuration has {len(c)} entries for {g.n_vertices} vertices"
        )
    if any(k < 0 for k in c):
        raise errors.BadParameters("configuration counts must be non-negative")
    return c


# ------------------------------------------------------------------- transforms


def r_transform(g: WeightedDigraph, v) -> tuple:
    """The grains received when v fires: one per outgoing edge, at its target."""
    v = g._resolve(v)
    if not g.out_edge_ids[v]:
        raise errors.SinkHasNoTransform(f"{g.names[v]!r} emits no edges")
    out = [0] * g.n_vertices
    for t in g.out_targets[v]:
        out[t] += 1
    return tuple(out)


def topple_once(g: WeightedDigraph, c, v) -> tuple:
    """Fire the regular vertex v once: remove weight(v) grains, deliver one
    along each outgoing edge.  Sink grains are retained."""
    c = _check_config(g, c)
    v = g._resolve(v)
    if not g.out_edge_ids[v]:
        raise errors.SinkCannotTopple(f"{g.names[v]!r} is a sink")
    w = g.weight(v)
    if c[v] < w:
        raise errors.VertexStable(
            f"{g.names[v]!r} holds {c[v]} grains, needs {w} to fire"
        )
    out = list(c)
    out[v] -= w
    for t in g.out_targets[v]:
        out[t] += 1
    return tuple(out)


@dataclass(frozen=True)
class StabilizationTrace:
    result: tuple
    odometer: tuple
    steps: int
    fired: tuple | None = None

    def to_json(self, g: WeightedDigraph) -> dict:
        return {
            "result": config_to_str(g, self.result),
            "odometer": {
                g.names[v]: k for v, k in enumerate(self.odometer) if k
            },
            "steps": self.steps,
        }


def _firing_data(g: WeightedDigraph):
    """Per-vertex (weight, targets) for regular vertices, None for sinks."""
    data = []
    for v in range(g.n_vertices):
        if g.out_edge_ids[v]:
            data.append((g.weight(v), g.out_targets[v]))
        else:
            data.append(None)
    return data


def stabilize(g: SandpileGraph, c, sink_absorbing: bool = True,
              record: bool = False) -> StabilizationTrace:
    """Topple to the unique stable configuration, lowest-index vertex first.

    With ``sink_absorbing`` the sink is emptied after every step (sandpile
    monoid semantics); otherwise sink grains accumulate.  Termination is
    guaranteed on sandpile graphs, so no budget applies.
    """
    if not isinstance(g, SandpileGraph):
        raise errors.BadParameters("stabilize needs a validated sandpile graph")
    counts = list(_check_config(g, c))
    sink = g.sink
    if sink_absorbing:
        counts[sink] = 0
    order = [v for v in range(g.n_vertices) if v != sink]
    data = _firing_data(g)
    odometer = [0] * g.n_vertices
    steps = 0
    fired = [] if record else None
    while True:
        for v in order:
            w, targets = data[v]
            if counts[v] >= w:
                counts[v] -= w
                for t in targets:
                    counts[t] += 1
                if sink_absorbing:
                    counts[sink] = 0
                odometer[v] += 1
                steps += 1
                if record:
                    fired.append(v)
                break
        else:
            break
    return StabilizationTrace(
        tuple(counts), tuple(odometer), steps,
        tuple(fired) if record else None,
    )


def _stable_form(g: SandpileGraph, counts, sink_absorbing=True) -> tuple:
    """Fast stabilisation without trace bookkeeping."""
    counts = list(counts)
    sink = g.sink
    if sink_absorbing:
        counts[sink] = 0
    data = g.__dict__.get("_firing_data")
    if data is None:
        data = _firing_data(g)
        g._firing_data = data
    unstable = True
    while unstable:
        unstable = False
        for v in range(len(counts)):
            if v == sink:
                continue
            w, targets = data[v]
            while counts[v] >= w:
                counts[v] -= w
                for t in targets:
                    counts[t] += 1
                unstable = True
        if sink_absorbing:
            counts[sink] = 0
    return tuple(counts)


def stabilize_weighted(g: WeightedDigraph, c,
                       step_budget: int = DEFAULT_STEP_BUDGET) -> StabilizationTrace:
    """Stabilise on a vertex weighted graph, which may not terminate.

    Raises BudgetExhausted (carrying the partial trace) once the step budget
    runs out; that says nothing about divergence, only that the budget ended.
    """
    if not g.is_vertex_weighted():
        raise errors.BadParameters("graph is not vertex weighted")
    counts = list(_check_config(g, c))
    data = _firing_data(g)
    order = [v for v in range(g.n_vertices) if data[v] is not None]
    odometer = [0] * g.n_vertices
    steps = 0
    while True:
        for v in order:
            w, targets = data[v]
            if counts[v] >= w:
                if steps >= step_budget:
                    raise errors.BudgetExhausted(
                        f"no stable form within {step_budget} steps",
                        partial=StabilizationTrace(tuple(counts), tuple(odometer), steps),
                    )
                counts[v] -= w
                for t in targets:
                    counts[t] += 1
                odometer[v] += 1
                steps += 1
                break
        else:
            break
    return StabilizationTrace(tuple(counts), tuple(odometer), steps)


def potential(g: SandpileGraph, c) -> int:
    """Exact certificate value that strictly increases under every topple
    with sink grains retained: sum of count(v) * D**(n - dist(v)) where D is
    the largest vertex weight (at least 2) and dist is the shortest path
    length to the sink."""
    c = _check_config(g, c)
    non_sink = [v for v in range(g.n_vertices) if v != g.sink]
    D = max([2] + [g.weight(v) for v in non_sink])
    n = g.n_vertices
    dist = shortest_sink_distances(g)
    return sum(k * D ** (n - dist[v]) for v, k in enumerate(c) if k)


# ------------------------------------------------------------ congruence search


def _successor_moves(g: WeightedDigraph, data, sink_rule_vertices, c):
    """All one-step firings from c: (vertex, successor) pairs."""
    moves = []
    for v in range(len(c)):
        d = data[v]
        if d is not None:
            w, targets = d
            if c[v] >= w:
                nxt = list(c)
                nxt[v] -= w
                for t in targets:
                    nxt[t] += 1
                moves.append((v, tuple(nxt)))
        elif v in sink_rule_vertices and c[v] >= 1:
            nxt = list(c)
            nxt[v] -= 1
            moves.append((v, tuple(nxt)))
    return moves


@dataclass(frozen=True)
class CommonReduct:
    config: tuple
    steps_from_a: tuple
    steps_from_b: tuple


def apply_steps(g: WeightedDigraph, c, steps, include_sink_relations=True) -> tuple:
    """Replay a firing sequence; used to verify common reducts."""
    data = _firing_data(g)
    c = _check_config(g, c)
    for v in steps:
        if data[v] is not None:
            w, targets = data[v]
            if c[v] < w:
                raise errors.VertexStable(f"cannot replay firing of {g.names[v]!r}")
            nxt = list(c)
            nxt[v] -= w
            for t in targets:
                nxt[t] += 1
            c = tuple(nxt)
        else:
            if not include_sink_relations or c[v] < 1:
                raise errors.VertexStable(f"cannot replay sink firing of {g.names[v]!r}")
            nxt = list(c)
            nxt[v] -= 1
            c = tuple(nxt)
    return c


def _closure_search(g, a, b, budget, include_sink_relations):
    """Level-by-level forward closures from a and b, intersected.

    Returns (CommonReduct or None, status) with status one of ``found``,
    ``disjoint`` (both closures fully enumerated, no intersection) and
    ``budget``.
    """
    data = _firing_data(g)
    sink_rule_vertices = (
        frozenset(g.sinks()) if include_sink_relations else frozenset()
    )
    parents = ({a: None}, {b: None})
    frontiers = ([a], [b])

    def intersection():
        small, large = sorted(parents, key=len)
        hits = [c for c in small if c in large]
        return min(hits, key=lambda c: (sum(c), c)) if hits else None

    def path(side, c):
        steps = []
        while parents[side][c] is not None:
            prev, v = parents[side][c]
            steps.append(v)
            c = prev
        return tuple(reversed(steps))

    hit = intersection()
    remaining = budget
    exhausted = False
    while hit is None and not exhausted and (frontiers[0] or frontiers[1]):
        for side in (0, 1):
            frontier = frontiers[side]
            seen = parents[side]
            nxt = []
            for c in frontier:
                if exhausted:
                    break
                for v, succ in _successor_moves(g, data, sink_rule_vertices, c):
                    if remaining <= 0:
                        exhausted = True
                        break
                    remaining -= 1
                    if succ not in seen:
                        seen[succ] = (c, v)
                        nxt.append(succ)
            frontiers[side][:] = nxt
            hit = intersection()
            if hit is not None:
                break
    if hit is not None:
        return CommonReduct(hit, path(0, hit), path(1, hit)), "found"
    if not exhausted and not frontiers[0] and not frontiers[1]:
        return None, "disjoint"
    return None, "budget"


def common_reduct(g: WeightedDigraph, a, b, budget: int = DEFAULT_STEP_BUDGET,
                  include_sink_relations: bool = True):
    """Search for a configuration both a and b fire down to.

    On sandpile graphs the answer is exact: the common reduct is the shared
    stable form (with the sink fired down to zero when sink relations are
    on), or None when the stable forms differ.  Elsewhere a level-by-level
    search runs under the step budget; None is then not a proof that a and b
    are incongruent.

    Returns a CommonReduct whose step lists replay from a and b.
    """
    a = _check_config(g, a)
    b = _check_config(g, b)
    if isinstance(g, SandpileGraph):
        traces = [stabilize(g, c, sink_absorbing=False, record=True) for c in (a, b)]
        steps = []
        results = []
        for trace in traces:
            fired = list(trace.fired)
            result = trace.result
            if include_sink_relations:
                fired.extend([g.sink] * result[g.sink])
                result = tuple(
                    0 if v == g.sink else k for v, k in enumerate(result)
                )
            steps.append(tuple(fired))
            results.append(result)
        if results[0] != results[1]:
            return None
        return CommonReduct(results[0], steps[0], steps[1])
    result, _ = _closure_search(g, a, b, budget, include_sink_relations)
    return result


def equivalent(g: WeightedDigraph, a, b, budget: int = DEFAULT_STEP_BUDGET,
               include_sink_relations: bool = True):
    """Decide congruence of two configurations.

    Sandpile graphs are decided exactly by comparing stable forms.  Other
    vertex weighted graphs are decided exactly through the completed firing
    rules whenever completion fits its budget; otherwise a breadth-first
    common-reduct search answers True, False (both closures finite, fully
    enumerated and disjoint) or None for undecided.
    """
    a = _check_config(g, a)
    b = _check_config(g, b)
    if isinstance(g, SandpileGraph):
        return (
            _stable_form(g, a, sink_absorbing=include_sink_relations)
            == _stable_form(g, b, sink_absorbing=include_sink_relations)
        )
    try:
        rs = reduction_system(g, include_sink_relations)
    except CompletionOverflow:
        rs = None
    if rs is not None:
        return rs.normal_form(a) == rs.normal_form(b)
    result, status = _closure_search(g, a, b, budget, include_sink_relations)
    if status == "found":
        return True
    if status == "disjoint":
        return False
    return None


# ------------------------------------------------------- completed presentations


class CompletionOverflow(Exception):
    """Internal: critical-pair completion exceeded its rule budget."""


def _deglex_key(vec):
    return (sum(vec), vec)


class ReductionSystem:
    """A confluent, terminating rewriting system on count vectors.

    Built from congruence pairs by orienting them along the graded
    lexicographic order and resolving all critical pairs.  Normal forms are
    then canonical: two vectors are congruent exactly when their normal
    forms coincide, and the normal form is the graded-lex least element of
    its congruence class.
    """

    def __init__(self, n_gens: int, relations, max_rules: int = 4000):
        self.n_gens = n_gens
        self.rules = []
        pending = deque()

        def reduce(vec):
            vec = tuple(vec)
            changed = True
            while changed:
                changed = False
                for lhs, rhs in self.rules:
                    ok = True
                    for i in range(n_gens):
                        if vec[i] < lhs[i]:
                            ok = False
                            break
                    if ok:
                        vec = tuple(vec[i] - lhs[i] + rhs[i] for i in range(n_gens))
                        changed = True
                        break
            return vec

        def add_rule(x, y):
            x, y = reduce(x), reduce(y)
            if x == y:
                return
            if _deglex_key(x) < _deglex_key(y):
                x, y = y, x
            if len(self.rules) >= max_rules:
                raise CompletionOverflow(f"more than {max_rules} rules")
            new_index = len(self.rules)
            self.rules.append((x, y))
            for j in range(new_index):
                pending.append((new_index, j))

        for x, y in relations:
            add_rule(tuple(x), tuple(y))

        while pending:
            i, j = pending.popleft()
            li, ri = self.rules[i]
            lj, rj = self.rules[j]
            if all(a == 0 or b == 0 for a, b in zip(li, lj)):
                # disjoint left-hand sides never create an unresolved overlap
                continue
            overlap = tuple(max(a, b) for a, b in zip(li, lj))
            via_i = tuple(o - a + b for o, a, b in zip(overlap, li, ri))
            via_j = tuple(o - a + b for o, a, b in zip(overlap, lj, rj))
            add_rule(via_i, via_j)

        self._reduce = reduce

    def normal_form(self, vec) -> tuple:
        return self._reduce(vec)


def graph_relations(g: WeightedDigraph, include_sink_relations: bool = True):
    """Firing rules of the graph monoid presentation: weight(v) grains at a
    regular v rewrite to its received grains; with sink relations, one grain
    at a sink rewrites to nothing."""
    n = g.n_vertices
    rels = []
    for v in range(n):
        if g.out_edge_ids[v]:
            lhs = [0] * n
            lhs[v] = g.weight(v)
            rels.append((tuple(lhs), r_transform(g, v)))
        elif include_sink_relations:
            lhs = [0] * n
            lhs[v] = 1
            rels.append((tuple(lhs), (0,) * n))
    return rels


def reduction_system(g: WeightedDigraph, include_sink_relations: bool = True,
                     max_rules: int = 4000) -> ReductionSystem:
    """Completed rewriting system for the graph, cached per graph instance.
    A completion that overflowed its rule budget is cached as a failure and
    re-raised, so callers retrying do not pay for it twice."""
    cache = g.__dict__.setdefault("_reduction_cache", {})
    key = (include_sink_relations, max_rules)
    if key not in cache:
        try:
            cache[key] = ReductionSystem(
                g.n_vertices, graph_relations(g, include_sink_relations), max_rules
            )
        except CompletionOverflow as exc:
            cache[key] = exc
    cached = cache[key]
    if isinstance(cached, CompletionOverflow):
        raise cached
    return cached
