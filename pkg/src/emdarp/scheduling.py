"""Optimal timing and charging for fixed visit sequences.

Given one visit chain per agent (pickups, deliveries, station duplicates,
terminal depot), this module first checks the discrete feasibility conditions
(arc admissibility, pairing, precedence, capacities, station duplicate order)
and then solves a small LP for arrival times, window slacks, and per-segment
charging durations.  Charging durations are canonicalized afterwards: the
charge acquired is poured into the fastest segments first, which is never
slower and pins down the segment indicator values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .graph import ExpandedGraph
from .instance import Instance, TW_PICKUP
from .lp import solve_lp
from .model import compute_big_m
from .solution import RoutePlan, Solution, VisitRecord

_EPS = 1e-9


@dataclass
class ScheduleResult:
    feasible: bool
    reason: str = ""
    objective: float = math.inf
    solution: Solution | None = None
    # timing-only lower bound value when scheduling partial chains
    bound: float = math.inf


def check_routes(inst: Instance, graph: ExpandedGraph, chains, accepted,
                 partial: bool = False):
    """Discrete feasibility screen. Returns (reason, loads) where loads maps
    node -> (passengers, equipment) on departure; reason is None when clean."""
    seen: dict[int, int] = {}
    for k, chain in enumerate(chains):
        prev = graph.start_node(k)
        for pos, node in enumerate(chain):
            if graph.is_hub(node):
                if pos != len(chain) - 1:
                    return f"agent {k} visits a depot mid-route", None
            elif node in seen:
                return f"{graph.label(node)} visited twice", None
            else:
                seen[node] = k
            if not graph.admissible(prev, node, k if prev == graph.start_node(k) else None):
                return f"arc {graph.label(prev)}->{graph.label(node)} not admissible", None
            prev = node
        if chain and not partial and not graph.is_hub(chain[-1]):
            return f"agent {k} does not end at a depot", None
        agent = inst.agents[k]
        if agent.terminal_hub is not None and not partial:
            want = graph.hub_node(agent.terminal_hub)
            if not chain or chain[-1] != want:
                return f"agent {k} must end at depot {agent.terminal_hub}", None

    for r, req in enumerate(inst.requests):
        p, d = graph.pickup_node(r), graph.delivery_node(r)
        if accepted[r]:
            if p not in seen or d not in seen:
                if partial:
                    continue
                return f"request {r} accepted but not fully routed", None
            if seen[p] != seen[d]:
                return f"request {r} split across agents", None
            chain = chains[seen[p]]
            if chain.index(p) > chain.index(d):
                return f"request {r} delivered before pickup", None
        else:
            if not inst.selective:
                return f"request {r} cannot be rejected in non-selective mode", None
            if req.force_accept:
                return f"request {r} is must-serve but rejected", None
            if p in seen or d in seen:
                return f"request {r} rejected but routed", None

    loads: dict[int, tuple[float, float]] = {}
    for k, chain in enumerate(chains):
        agent = inst.agents[k]
        u1 = u2 = 0.0
        for pos, node in enumerate(chain):
            if graph.is_hub(node) or graph.is_station(node):
                if u1 > _EPS or u2 > _EPS:
                    return f"agent {k} reaches {graph.label(node)} loaded", None
                continue
            req = inst.requests[graph.gamma(node)]
            sign = graph.mu(node)
            u1 += sign * req.passengers
            u2 += sign * req.equipment
            if u1 > agent.cap_passengers + _EPS:
                return f"agent {k} passenger load {u1} exceeds cap", None
            if u2 > agent.cap_equipment + _EPS:
                return f"agent {k} equipment load {u2} exceeds cap", None
            if graph.is_pickup(node) and u1 + agent.conversion * u2 > agent.cap_passengers + _EPS:
                return f"agent {k} mixed load exceeds converted capacity", None
            loads[node] = (u1, u2)
        if partial and (u1 > _EPS or u2 > _EPS):
            return f"agent {k} partial chain ends loaded", None

    by_station: dict[int, list[int]] = {}
    for node in seen:
        if graph.is_station(node):
            st, visit = graph.station_of(node)
            by_station.setdefault(st, []).append(visit)
    for st, visits in by_station.items():
        visits.sort()
        if visits != list(range(len(visits))):
            return f"station {st} duplicates used out of order", None
    return None, loads


def schedule_routes(inst: Instance, graph: ExpandedGraph, chains, accepted,
                    partial: bool = False, big_m=None) -> ScheduleResult:
    """Time a fixed routing; with partial=True, chains may omit depots and the
    result is only a valid objective lower bound (charging needs ignored)."""
    reason, loads = check_routes(inst, graph, chains, accepted, partial)
    if reason is not None:
        return ScheduleResult(feasible=False, reason=reason)

    if big_m is None:
        big_m = compute_big_m(inst, graph)
    horizon = big_m.horizon
    b = inst.battery
    visited_by = {}
    for k, chain in enumerate(chains):
        for node in chain:
            if not graph.is_hub(node):
                visited_by[node] = k

    cols: list[tuple] = []
    index: dict[tuple, int] = {}

    def var(kind, key, lb, ub):
        if (kind, key) in index:
            return index[(kind, key)]
        index[(kind, key)] = len(cols)
        cols.append((kind, key, lb, ub))
        return index[(kind, key)]

    served = [r for r in range(inst.n_requests) if accepted[r]
              and graph.pickup_node(r) in visited_by]
    for node in visited_by:
        var("t", node, 0.0, horizon)
    for r in served:
        req = inst.requests[r]
        node = graph.pickup_node(r) if req.tw_kind == TW_PICKUP else graph.delivery_node(r)
        var("tau", node, 0.0, math.inf)
        var("Tr", r, 0.0, math.inf)
        var("Dr", r, 0.0, math.inf)
    use_soc = not partial
    for node, k in visited_by.items():
        if graph.is_station(node):
            var("xi", (node, 1), 0.0, 0.85 / b.beta1)
            var("xi", (node, 2), 0.0, 0.1 / b.beta2)
            var("xi", (node, 3), 0.0, 0.05 / b.beta3)
    if use_soc:
        for k, chain in enumerate(chains):
            for node in chain:
                var("phi", node if not graph.is_hub(node) else ("hub", k),
                    inst.agents[k].soc_min, 1.0)
    for k, chain in enumerate(chains):
        if chain:
            var("Tk", k, 0.0, min(inst.agents[k].max_duration, horizon))
    i_t_total = var("T", None, 0.0, horizon)

    a_ub, b_ub, a_eq, b_eq = [], [], [], []

    def row_ub(coeffs, rhs):
        a_ub.append(coeffs)
        b_ub.append(rhs)

    def row_eq(coeffs, rhs):
        a_eq.append(coeffs)
        b_eq.append(rhs)

    def xi_triplet(node):
        return [index[("xi", (node, s))] for s in (1, 2, 3)]

    def service(node):
        if graph.is_station(node):
            return None  # handled via xi
        return inst.requests[graph.gamma(node)].service_time

    for k, chain in enumerate(chains):
        agent = inst.agents[k]
        prev = graph.start_node(k)
        prev_t = None
        for node in chain:
            hub = graph.is_hub(node)
            cost = graph.cost(prev, node)
            if hub and inst.open_vrp:
                cost = 0.0
            target = index[("Tk", k)] if hub else index[("t", node)]
            if prev_t is None:
                # leave the start position after the initial delay
                row_ub({target: -1.0}, -(agent.initial_delay + cost))
            else:
                coeffs = {index[("t", prev)]: 1.0, target: -1.0}
                if graph.is_station(prev):
                    rhs = -(agent.station_service_time + cost)
                    for idx in xi_triplet(prev):
                        coeffs[idx] = 1.0
                else:
                    rhs = -(service(prev) + cost)
                row_ub(coeffs, rhs)
            if hub:
                break
            prev, prev_t = node, True
        else:
            if chain and partial:
                # duration keeps counting after the last handled stop
                last = chain[-1]
                coeffs = {index[("t", last)]: 1.0, index[("Tk", k)]: -1.0}
                rhs = -service(last) if not graph.is_station(last) else -agent.station_service_time
                if graph.is_station(last):
                    for idx in xi_triplet(last):
                        coeffs[idx] = 1.0
                if not inst.open_vrp and inst.final_depots:
                    rhs -= min(graph.cost(last, h) for h in graph.hf)
                row_ub(coeffs, rhs)
        if chain:
            row_ub({index[("Tk", k)]: 1.0, i_t_total: -1.0}, 0.0)

    for r in served:
        req = inst.requests[r]
        p, d = graph.pickup_node(r), graph.delivery_node(r)
        node = p if req.tw_kind == TW_PICKUP else d
        it, itau = index[("t", node)], index[("tau", node)]
        row_ub({it: -1.0, itau: -1.0}, -req.tw_lo)
        row_ub({it: 1.0, itau: -1.0}, req.tw_hi)
        row_eq({index[("Tr", r)]: 1.0, index[("t", p)]: -1.0, index[("t", d)]: -1.0}, 0.0)
        row_eq({index[("Dr", r)]: 1.0, itau: -1.0}, 0.0)

    # duplicate visits to a station happen in index order, spaced by the
    # earlier visitor's plug-in time
    by_station: dict[int, list[int]] = {}
    for node in visited_by:
        if graph.is_station(node):
            st, visit = graph.station_of(node)
            by_station.setdefault(st, []).append(node)
    for st, nodes in by_station.items():
        nodes.sort(key=lambda n: graph.station_of(n)[1])
        w = inst.stations[st].earliest_available
        if w > 0:
            row_ub({index[("t", nodes[0])]: -1.0}, -w)
        for prev_f, cur_f in zip(nodes, nodes[1:]):
            k_prev = visited_by[prev_f]
            coeffs = {index[("t", prev_f)]: 1.0, index[("t", cur_f)]: -1.0}
            for idx in xi_triplet(prev_f):
                coeffs[idx] = 1.0
            row_ub(coeffs, -inst.agents[k_prev].station_service_time)

    if use_soc:
        for k, chain in enumerate(chains):
            agent = inst.agents[k]
            prev = graph.start_node(k)
            prev_phi = None
            for node in chain:
                hub = graph.is_hub(node)
                cost = graph.cost(prev, node)
                if hub and inst.open_vrp and not inst.open_vrp_soc_to_hub:
                    cost = 0.0
                cur = index[("phi", ("hub", k) if hub else node)]
                if prev_phi is None:
                    row_ub({cur: 1.0}, agent.soc_init - b.alpha0 * cost)
                else:
                    drop = b.alpha0 * cost
                    if not graph.is_station(prev) and not graph.is_hub(prev):
                        u1, u2 = loads[prev]
                        drop += (b.alpha1 * u1 + b.alpha2 * u2) * cost
                    coeffs = {cur: 1.0, prev_phi: -1.0}
                    if graph.is_station(prev):
                        for idx, beta in zip(xi_triplet(prev), (b.beta1, b.beta2, b.beta3)):
                            coeffs[idx] = -beta
                    row_ub(coeffs, -drop)
                if hub:
                    break
                if graph.is_station(node):
                    ix1, ix2, ix3 = xi_triplet(node)
                    row_ub({cur: 1.0, ix1: b.beta1}, 0.85)
                    floor = {cur: -1.0, ix1: -b.beta1, ix2: -b.beta2, ix3: -b.beta3}
                    row_ub(floor, -agent.soc_target)
                    row_ub({cur: 1.0, ix1: b.beta1, ix2: b.beta2, ix3: b.beta3}, 1.0)
                prev, prev_phi = node, cur
    else:
        # charging cannot help a lower bound, so pin the durations to zero
        for node in visited_by:
            if graph.is_station(node):
                for idx in xi_triplet(node):
                    row_eq({idx: 1.0}, 0.0)

    c = [0.0] * len(cols)
    c[i_t_total] = 1.0
    for r in served:
        lam = inst.requests[r].priority
        c[index[("Tr", r)]] = lam * inst.weights.epsilon
        c[index[("Dr", r)]] = lam * inst.weights.zeta

    n = len(cols)

    def dense(rows):
        out = []
        for coeffs in rows:
            line = [0.0] * n
            for idx, coef in coeffs.items():
                line[idx] = coef
            out.append(line)
        return out

    bounds = [(lb, ub) for (_, _, lb, ub) in cols]
    res = solve_lp(c, dense(a_ub), b_ub, dense(a_eq), b_eq, bounds)
    if res.status != "optimal":
        return ScheduleResult(feasible=False, reason=f"timing LP {res.status}")

    rejected_penalty = sum(req.priority * inst.weights.eta
                           for r, req in enumerate(inst.requests) if not accepted[r])
    objective = res.objective + rejected_penalty
    if partial:
        return ScheduleResult(feasible=True, objective=objective, bound=objective)

    sol = _assemble(inst, graph, chains, accepted, loads, index, res.x, objective)
    return ScheduleResult(feasible=True, objective=objective, solution=sol,
                          bound=objective)


def canonical_charge(soc_arrival: float, gained: float, battery):
    """Split a charge amount over the three segments, fastest first.

    Returns (xi1, xi2, xi3, z1, z2) with durations in time units."""
    a1 = min(gained, max(0.0, 0.85 - soc_arrival))
    a2 = min(gained - a1, 0.1)
    a3 = gained - a1 - a2
    z1 = 1 if gained > max(0.0, 0.85 - soc_arrival) + 1e-12 else 0
    z2 = 1 if a3 > 1e-12 else 0
    return (a1 / battery.beta1, a2 / battery.beta2, a3 / battery.beta3, z1, z2)


def _assemble(inst, graph, chains, accepted, loads, index, x, objective) -> Solution:
    b = inst.battery
    plans = []
    for k, chain in enumerate(chains):
        agent = inst.agents[k]
        visits = []
        for node in chain:
            if graph.is_hub(node):
                # the LP leaves Tk anywhere between its floor and the
                # makespan when the agent is not makespan-binding; report
                # the floor (actual arrival) instead
                if visits:
                    leg = 0.0 if inst.open_vrp else graph.cost(visits[-1].node, node)
                    tk = visits[-1].departure + leg
                else:
                    tk = x[index[("Tk", k)]]
                phi = x[index[("phi", ("hub", k))]]
                visits.append(VisitRecord(node=node, label=graph.label(node),
                                          arrival=tk, departure=tk,
                                          soc_arrival=phi, soc_departure=phi))
                continue
            arrive = x[index[("t", node)]]
            phi = x[index[("phi", node)]]
            if graph.is_station(node):
                gained = sum(beta * x[idx] for idx, beta in
                             zip((index[("xi", (node, s))] for s in (1, 2, 3)),
                                 (b.beta1, b.beta2, b.beta3)))
                xi1, xi2, xi3, _, _ = canonical_charge(phi, gained, b)
                visits.append(VisitRecord(
                    node=node, label=graph.label(node), arrival=arrive,
                    departure=arrive + agent.station_service_time + xi1 + xi2 + xi3,
                    soc_arrival=phi, soc_departure=phi + gained,
                    charge_times=(xi1, xi2, xi3)))
            else:
                req = inst.requests[graph.gamma(node)]
                tau = 0.0
                if ("tau", node) in index:
                    tau = x[index[("tau", node)]]
                u1, u2 = loads[node]
                visits.append(VisitRecord(
                    node=node, label=graph.label(node), arrival=arrive,
                    departure=arrive + req.service_time, slack=tau,
                    load_passengers=u1, load_equipment=u2,
                    soc_arrival=phi, soc_departure=phi))
        if chain:
            duration = visits[-1].arrival if graph.is_hub(chain[-1]) \
                else x[index[("Tk", k)]]
        else:
            duration = 0.0
        plans.append(RoutePlan(agent=k, visits=visits, duration=duration))

    request_times, request_slacks = [], []
    for r in range(inst.n_requests):
        if accepted[r] and ("Tr", r) in index:
            request_times.append(x[index[("Tr", r)]])
            request_slacks.append(x[index[("Dr", r)]])
        else:
            request_times.append(0.0)
            request_slacks.append(0.0)
    return Solution(
        status="feasible", objective=objective, plans=plans, accepted=list(accepted),
        request_times=request_times, request_slacks=request_slacks,
        makespan=x[index[("T", None)]], engine="builtin")
