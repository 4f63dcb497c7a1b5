"""Expansion of a raw instance into the indexed routing graph.

Global node layout (contiguous per class):

    H0  agent start nodes              [0, K)
    Lp  pickup nodes                   [K, K+R)
    Ld  delivery nodes                 [K+R, K+2R)
    F   station visit nodes            [K+2R, K+2R+m*(n+1)), ordered by
        visit number then station: index = K+2R + j*m + i for visit j of
        station i
    Hf  final depots                   tail

Admissible arcs follow the class topology: H0->Lp (only out of the owning
agent's start node), Lp->Lp, Lp->Ld, Ld->Lp, Ld->Ld, Ld->F, Ld->Hf, F->Lp,
F->Hf.  The arc from a request's delivery back to its own pickup is pruned:
pickup always precedes delivery, so it can never be traversed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .instance import Instance, base_positions, derive_costs


@dataclass(frozen=True)
class ExpandedGraph:
    instance: Instance
    n_nodes: int
    h0: range
    lp: range
    ld: range
    f: range
    hf: range
    cost_matrix: tuple[tuple[float, ...], ...]
    arcs: tuple[tuple[int, int], ...]          # agent-independent arcs
    start_arcs: tuple[tuple[tuple[int, int], ...], ...]  # per agent: (v^k, j) arcs
    base_of: tuple[int, ...]                   # expanded node -> base node
    metric: bool                                # symmetric + triangle inequality

    # -- node classification ------------------------------------------------

    def is_pickup(self, i: int) -> bool:
        return i in self.lp

    def is_delivery(self, i: int) -> bool:
        return i in self.ld

    def is_station(self, i: int) -> bool:
        return i in self.f

    def is_hub(self, i: int) -> bool:
        return i in self.hf

    def start_node(self, k: int) -> int:
        return self.h0[k]

    def pickup_node(self, r: int) -> int:
        return self.lp[r]

    def delivery_node(self, r: int) -> int:
        return self.ld[r]

    def gamma(self, i: int) -> int:
        """Request served at location node *i* (pickup or delivery)."""
        if i in self.lp:
            return i - self.lp.start
        if i in self.ld:
            return i - self.ld.start
        raise KeyError(f"node {i} is not a pickup/delivery location")

    def mu(self, i: int) -> int:
        """Load direction: +1 at pickups, -1 at deliveries."""
        if i in self.lp:
            return 1
        if i in self.ld:
            return -1
        raise KeyError(f"node {i} is not a pickup/delivery location")

    def station_of(self, i: int) -> tuple[int, int]:
        """F-node -> (station index, visit number)."""
        if i not in self.f:
            raise KeyError(f"node {i} is not a station visit node")
        off = i - self.f.start
        m = self.instance.n_stations
        return (off % m, off // m)

    def f_node(self, station: int, visit: int) -> int:
        m = self.instance.n_stations
        return self.f.start + visit * m + station

    def omega(self, i: int) -> float:
        """Earliest availability of the station behind F-node *i*."""
        st, _ = self.station_of(i)
        return self.instance.stations[st].earliest_available

    def hub_node(self, depot: int) -> int:
        return self.hf[depot]

    def label(self, i: int) -> str:
        if i in self.h0:
            return f"v{i - self.h0.start}"
        if i in self.lp:
            return f"p{i - self.lp.start}"
        if i in self.ld:
            return f"d{i - self.ld.start}"
        if i in self.f:
            st, visit = self.station_of(i)
            return f"f{st}^{visit}"
        return f"h{i - self.hf.start}"

    def node_by_label(self, label: str) -> int:
        for i in range(self.n_nodes):
            if self.label(i) == label:
                return i
        raise KeyError(label)

    def position(self, i: int) -> tuple[float, float] | None:
        return base_positions(self.instance)[self.base_of[i]]

    # -- arcs and costs -------------------------------------------------------

    def cost(self, i: int, j: int) -> float:
        return self.cost_matrix[i][j]

    def admissible(self, i: int, j: int, k: int | None = None) -> bool:
        if i in self.h0:
            if k is not None and i != self.start_node(k):
                return False
            return j in self.lp
        return (i, j) in self._arc_set

    @property
    def _arc_set(self) -> frozenset:
        # cached lazily; frozen dataclass, so stash on __dict__ via object.__setattr__
        cached = self.__dict__.get("_arc_set_cache")
        if cached is None:
            cached = frozenset(self.arcs)
            object.__setattr__(self, "_arc_set_cache", cached)
        return cached

    def arcs_for_agent(self, k: int):
        """All (i, j) arcs agent k may traverse, start arcs first."""
        return self.start_arcs[k] + self.arcs


def expand_graph(inst: Instance) -> ExpandedGraph:
    """Build the indexed node universe and the admissible arc catalog."""
    K, R, m = inst.n_agents, inst.n_requests, inst.n_stations
    n_f = m * (inst.duplicate_visits + 1)
    n_hf = len(inst.final_depots)

    h0 = range(0, K)
    lp = range(K, K + R)
    ld = range(K + R, K + 2 * R)
    f = range(K + 2 * R, K + 2 * R + n_f)
    hf = range(f.stop, f.stop + n_hf)
    n_nodes = hf.stop

    # expanded -> base node mapping (station duplicates share their base node)
    base_of = list(range(K + 2 * R))
    for visit in range(inst.duplicate_visits + 1):
        for st in range(m):
            base_of.append(K + 2 * R + st)
    for q in range(n_hf):
        base_of.append(K + 2 * R + m + q)

    base_cost = derive_costs(inst)
    cost_rows = tuple(
        tuple(0.0 if i == j else base_cost(base_of[i], base_of[j]) for j in range(n_nodes))
        for i in range(n_nodes)
    )

    arcs: list[tuple[int, int]] = []
    for i in lp:
        for j in lp:
            if i != j:
                arcs.append((i, j))
    for i in lp:
        for j in ld:
            arcs.append((i, j))
    for i in ld:
        for j in lp:
            if i - ld.start != j - lp.start:  # d^r -> p^r can never be feasible
                arcs.append((i, j))
    for i in ld:
        for j in ld:
            if i != j:
                arcs.append((i, j))
    for i in ld:
        for j in f:
            arcs.append((i, j))
    for i in ld:
        for j in hf:
            arcs.append((i, j))
    for i in f:
        for j in lp:
            arcs.append((i, j))
    for i in f:
        for j in hf:
            arcs.append((i, j))

    start_arcs = tuple(tuple((h0[k], j) for j in lp) for k in range(K))

    metric = _is_metric(cost_rows, n_nodes)

    return ExpandedGraph(
        instance=inst,
        n_nodes=n_nodes,
        h0=h0, lp=lp, ld=ld, f=f, hf=hf,
        cost_matrix=cost_rows,
        arcs=tuple(arcs),
        start_arcs=start_arcs,
        base_of=tuple(base_of),
        metric=metric,
    )


def _is_metric(c, n: int, tol: float = 1e-9) -> bool:
    """Symmetry plus triangle inequality over all node triples."""
    for i in range(n):
        for j in range(n):
            if abs(c[i][j] - c[j][i]) > tol:
                return False
    for i in range(n):
        for j in range(n):
            for h in range(n):
                if c[i][j] > c[i][h] + c[h][j] + tol:
                    return False
    return True


def arc_count_closed_form(graph: ExpandedGraph) -> int:
    """Admissible (agent, arc) pair count by the per-class closed form."""
    R = graph.instance.n_requests
    K = graph.instance.n_agents
    nf = len(graph.f)
    nh = len(graph.hf)
    shared = (
        R * (R - 1)      # Lp->Lp
        + R * R          # Lp->Ld
        + R * (R - 1)    # Ld->Lp (same-request arc pruned)
        + R * (R - 1)    # Ld->Ld
        + R * nf         # Ld->F
        + R * nh         # Ld->Hf
        + nf * R         # F->Lp
        + nf * nh        # F->Hf
    )
    return shared + K * R  # plus agent-specific H0->Lp arcs
