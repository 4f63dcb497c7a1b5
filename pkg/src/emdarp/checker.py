"""Independent feasibility audit of a routed solution.

The checks here are written against the route view (visit sequences with
times, loads, state of charge) and deliberately do not reuse the MILP
builder, so the two code paths can cross-validate each other.  Each check is
labelled with the family tag of the corresponding model row; a report lists
every violated family together with the recomputed objective.

State-of-charge values are validated as one-sided requirements: a solution
may understate its battery level, it just may never overstate it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .graph import ExpandedGraph
from .instance import Instance, TW_PICKUP
from .solution import Solution


@dataclass
class Violation:
    tag: str
    index: tuple
    lhs: float
    rhs: float
    magnitude: float
    note: str = ""


@dataclass
class ValidationReport:
    ok: bool
    violations: list
    objective_recomputed: float
    objective_delta: float
    counters: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"tag": v.tag, "index": list(v.index), "lhs": v.lhs, "rhs": v.rhs,
                 "magnitude": v.magnitude, "note": v.note}
                for v in self.violations
            ],
            "objective_recomputed": self.objective_recomputed,
            "objective_delta": self.objective_delta,
            "counters": dict(self.counters),
        }


def charge_curve(soc_arrival: float, total_time: float, battery):
    """State of charge after plugging in for total_time, plus per-segment times.

    Charging fills the fast segment up to 0.85, then the middle segment up to
    0.95, then trickles to 1.0; any time left over past a full battery is idle.
    """
    soc = soc_arrival
    times = []
    remaining = total_time
    for rate, ceiling in ((battery.beta1, 0.85), (battery.beta2, 0.95),
                          (battery.beta3, 1.0)):
        span = max(0.0, ceiling - soc)
        t = min(remaining, span / rate) if rate > 0 else 0.0
        times.append(t)
        soc += rate * t
        remaining -= t
    return soc, tuple(times)


class _Audit:
    def __init__(self, inst: Instance, graph: ExpandedGraph, sol: Solution,
                 tol: float):
        self.inst = inst
        self.graph = graph
        self.sol = sol
        self.tol = tol
        self.violations: list[Violation] = []
        self.counters: dict[str, int] = {}

    def need(self, tag, index, lhs_le_rhs, lhs, rhs, note=""):
        self.counters[tag] = self.counters.get(tag, 0) + 1
        gap = lhs - rhs if lhs_le_rhs else rhs - lhs
        if gap > self.tol:
            self.violations.append(Violation(tag, tuple(index), lhs, rhs, gap, note))

    def le(self, tag, index, lhs, rhs, note=""):
        self.need(tag, index, True, lhs, rhs, note)

    def ge(self, tag, index, lhs, rhs, note=""):
        self.need(tag, index, False, lhs, rhs, note)

    def eq(self, tag, index, lhs, rhs, note=""):
        self.counters[tag] = self.counters.get(tag, 0) + 1
        if abs(lhs - rhs) > self.tol:
            self.violations.append(
                Violation(tag, tuple(index), lhs, rhs, abs(lhs - rhs), note))


def validate(inst: Instance, graph: ExpandedGraph, sol: Solution,
             tol: float = 1e-6) -> ValidationReport:
    a = _Audit(inst, graph, sol, tol)
    g = graph

    # -- assignment structure -------------------------------------------------
    position: dict[int, tuple[int, int]] = {}
    for plan in sol.plans:
        for pos, rec in enumerate(plan.visits):
            if not g.is_hub(rec.node):
                if rec.node in position:
                    a.eq("7", (rec.node,), 2.0, 1.0, f"{g.label(rec.node)} visited twice")
                position[rec.node] = (plan.agent, pos)

    for r, req in enumerate(inst.requests):
        p, d = g.pickup_node(r), g.delivery_node(r)
        if sol.accepted[r]:
            a.eq("7", (r,), 1.0 if p in position else 0.0, 1.0, "pickup served")
            a.eq("8", (r,), 1.0 if d in position else 0.0, 1.0, "delivery served")
            if p in position and d in position:
                a.eq("9", (r,), position[p][0], position[d][0], "same agent")
                if position[p][0] == position[d][0]:
                    a.le("16", (r,), position[p][1] + 1, position[d][1] + 1,
                         "pickup precedes delivery")
        else:
            a.eq("7", (r,), 1.0 if p in position else 0.0, 0.0, "rejected yet routed")
            if not inst.selective:
                a.eq("6", (r,), 0.0, 1.0, "rejection in non-selective mode")
            if req.force_accept:
                a.eq("fix-y", (r,), 0.0, 1.0, "must-serve request rejected")

    by_station: dict[int, list[int]] = {}
    for node in position:
        if g.is_station(node):
            st, visit = g.station_of(node)
            by_station.setdefault(st, []).append(visit)
    for st, visits in by_station.items():
        got = sorted(visits)
        a.eq("10", (st,), float(len(got)), float(len(set(got))), "duplicate reused")
        if got and got != list(range(len(got))):
            a.eq("10", (st,), float(got[-1]), float(len(got) - 1),
                 "duplicates not used in index order")

    for k, agent in enumerate(inst.agents):
        plan = sol.plans[k]
        nodes = plan.nodes
        if agent.terminal_hub is not None:
            want = g.hub_node(agent.terminal_hub)
            ok = bool(nodes) and nodes[-1] == want
            a.eq("hub", (k,), 1.0 if ok else 0.0, 1.0, "assigned terminal depot")
        elif nodes:
            a.eq("12", (k, "terminal"), 1.0 if g.is_hub(nodes[-1]) else 0.0, 1.0,
                 "route ends at a depot")
        prev = g.start_node(k)
        for rec in plan.visits:
            ok = g.admissible(prev, rec.node, k if prev == g.start_node(k) else None)
            a.eq("12", (k, g.label(prev), g.label(rec.node)),
                 1.0 if ok else 0.0, 1.0, "admissible arc")
            if g.is_hub(rec.node):
                break
            prev = rec.node

    # -- timing ----------------------------------------------------------------
    for plan in sol.plans:
        k = plan.agent
        agent = inst.agents[k]
        prev = g.start_node(k)
        prev_dep = agent.initial_delay
        first = True
        for rec in plan.visits:
            cost = g.cost(prev, rec.node)
            if g.is_hub(rec.node):
                cost = 0.0 if inst.open_vrp else cost
                tag = "23" if g.is_station(prev) else "22"
                a.ge(tag, (k,), plan.duration, prev_dep + cost, "return leg")
                break
            tag = "14" if first else ("19" if g.is_station(prev) or g.is_station(rec.node)
                                      else "15")
            a.ge(tag, (g.label(rec.node),), rec.arrival, prev_dep + cost, "travel time")
            if g.is_station(rec.node):
                a.ge("19", (g.label(rec.node), "dwell"), rec.departure,
                     rec.arrival + agent.station_service_time + sum(rec.charge_times))
            else:
                service = inst.requests[g.gamma(rec.node)].service_time
                a.ge("15", (g.label(rec.node), "dwell"), rec.departure,
                     rec.arrival + service)
            prev, prev_dep, first = rec.node, rec.departure, False
        if math.isfinite(agent.max_duration):
            a.le("21", (k,), plan.duration, agent.max_duration, "shift length")
        a.le("24", (k,), plan.duration, sol.makespan, "fleet makespan")

    for r, req in enumerate(inst.requests):
        p, d = g.pickup_node(r), g.delivery_node(r)
        if not sol.accepted[r]:
            a.eq("3", (r,), sol.request_times[r], 0.0, "rejected ride time")
            a.eq("5", (r,), sol.request_slacks[r], 0.0, "rejected slack")
            continue
        if p not in position or d not in position:
            continue
        kp, ip = position[p]
        kd, id_ = position[d]
        rp = sol.plans[kp].visits[ip]
        rd = sol.plans[kd].visits[id_]
        a.ge("16", (r, "time"), rd.arrival, rp.arrival + req.service_time)
        a.eq("2", (r,), sol.request_times[r], rp.arrival + rd.arrival, "arrival sum")
        windowed = rp if req.tw_kind == TW_PICKUP else rd
        tag = "17" if req.tw_kind == TW_PICKUP else "18"
        a.ge(tag, (r, "lo"), windowed.arrival + windowed.slack, req.tw_lo)
        a.le(tag, (r, "hi"), windowed.arrival - windowed.slack, req.tw_hi)
        a.eq("4", (r,), sol.request_slacks[r], windowed.slack, "slack total")

    # station availability and shared-plug sequencing
    recs = {node: sol.plans[k].visits[pos] for node, (k, pos) in position.items()}
    for st in range(inst.n_stations):
        w = inst.stations[st].earliest_available
        first = g.f_node(st, 0)
        if w > 0 and first in recs:
            a.ge("omega", (st,), recs[first].arrival, w, "station opening")
        for visit in range(1, inst.duplicate_visits + 1):
            cur, prev = g.f_node(st, visit), g.f_node(st, visit - 1)
            if cur in recs and prev in recs:
                a.ge("20", (st, visit), recs[cur].arrival, recs[prev].departure,
                     "one vehicle per plug")

    # -- loads -------------------------------------------------------------------
    for plan in sol.plans:
        agent = inst.agents[plan.agent]
        u1 = u2 = 0.0
        prev_rec = None
        for rec in plan.visits:
            if g.is_hub(rec.node) or g.is_station(rec.node):
                a.eq("27", (plan.agent, g.label(rec.node)), u1, 0.0, "empty at stop")
                a.eq("31", (plan.agent, g.label(rec.node)), u2, 0.0, "empty at stop")
                if prev_rec is not None and g.is_delivery(prev_rec.node):
                    a.eq("27", (plan.agent, g.label(prev_rec.node)),
                         prev_rec.load_passengers, 0.0, "load tracker cleared")
                    a.eq("31", (plan.agent, g.label(prev_rec.node)),
                         prev_rec.load_equipment, 0.0, "load tracker cleared")
                prev_rec = rec
                continue
            req = inst.requests[g.gamma(rec.node)]
            sign = g.mu(rec.node)
            u1 += sign * req.passengers
            u2 += sign * req.equipment
            # load trackers may overstate the true load, never understate it
            a.ge("26", (g.label(rec.node), 1), rec.load_passengers, u1, "running load")
            a.ge("30", (g.label(rec.node), 2), rec.load_equipment, u2, "running load")
            a.le("28", (g.label(rec.node),), rec.load_passengers, agent.cap_passengers)
            a.le("32", (g.label(rec.node),), rec.load_equipment, agent.cap_equipment)
            a.ge("25", (g.label(rec.node),), u1, 0.0)
            a.ge("29", (g.label(rec.node),), u2, 0.0)
            if g.is_pickup(rec.node):
                a.le("33", (g.label(rec.node),),
                     rec.load_passengers + agent.conversion * rec.load_equipment,
                     agent.cap_passengers, "converted seating")
            prev_rec = rec

    # -- energy -------------------------------------------------------------------
    b = inst.battery
    for plan in sol.plans:
        k = plan.agent
        agent = inst.agents[k]
        prev = g.start_node(k)
        prev_soc = agent.soc_init
        prev_u1 = prev_u2 = 0.0
        for rec in plan.visits:
            cost = g.cost(prev, rec.node)
            if g.is_hub(rec.node) and inst.open_vrp and not inst.open_vrp_soc_to_hub:
                cost = 0.0
            rate = b.alpha0
            if prev != g.start_node(k) and not g.is_station(prev) and not g.is_hub(prev):
                rate += b.alpha1 * prev_u1 + b.alpha2 * prev_u2
            tag = "34" if prev == g.start_node(k) else (
                "39" if g.is_station(prev) else
                "36" if g.is_hub(rec.node) or g.is_station(rec.node) else "35")
            a.le(tag, (k, g.label(rec.node)), rec.soc_arrival, prev_soc - rate * cost,
                 "discharge along arc")
            a.ge("40", (k, g.label(rec.node), "lo"), rec.soc_arrival, agent.soc_min)
            a.le("40", (k, g.label(rec.node), "up"), rec.soc_arrival, 1.0)
            if g.is_station(rec.node):
                xi1, xi2, xi3 = rec.charge_times
                gained = b.beta1 * xi1 + b.beta2 * xi2 + b.beta3 * xi3
                a.eq("38", (k, g.label(rec.node), "gain"),
                     rec.soc_departure, rec.soc_arrival + gained, "charge accounting")
                a.ge("37", (k, g.label(rec.node)), rec.soc_departure,
                     agent.soc_target, "departure floor")
                a.le("38", (k, g.label(rec.node)), rec.soc_departure, 1.0)
                a.le("41", (k, g.label(rec.node), "b"),
                     rec.soc_arrival + b.beta1 * xi1, 0.85, "fast segment ceiling")
                a.le("41", (k, g.label(rec.node), "d"),
                     rec.soc_arrival + b.beta1 * xi1 + b.beta2 * xi2, 0.95,
                     "middle segment ceiling")
                a.le("41", (k, g.label(rec.node), "e"), b.beta2 * xi2, 0.1)
                a.le("41", (k, g.label(rec.node), "f"), b.beta3 * xi3, 0.05)
                a.ge("41", (k, g.label(rec.node), "nonneg"), min(xi1, xi2, xi3), 0.0)
                prev_soc = rec.soc_departure
            elif g.is_hub(rec.node):
                break
            else:
                a.eq("35", (k, g.label(rec.node), "hold"), rec.soc_departure,
                     rec.soc_arrival, "no charging away from stations")
                prev_soc = rec.soc_arrival
                prev_u1, prev_u2 = rec.load_passengers, rec.load_equipment
            prev = rec.node

    # -- objective ------------------------------------------------------------------
    w = inst.weights
    objective = sol.makespan
    for r, req in enumerate(inst.requests):
        if sol.accepted[r]:
            objective += req.priority * (w.epsilon * sol.request_times[r]
                                         + w.zeta * sol.request_slacks[r])
        else:
            objective += req.priority * w.eta
    delta = abs(objective - sol.objective)
    a.counters["objective"] = a.counters.get("objective", 0) + 1
    if delta > max(tol, 1e-6 * max(1.0, abs(objective))):
        a.violations.append(Violation("objective", (), sol.objective, objective,
                                      delta, "stated objective mismatch"))
    return ValidationReport(
        ok=not a.violations,
        violations=a.violations,
        objective_recomputed=objective,
        objective_delta=delta,
        counters=a.counters,
    )
