"""Directed communication graphs for oscillator networks.

A node's degree is the minimum of its in- and outdegree; the network degree
is the minimum over all nodes. The synchronization guarantees of the quorum
mechanisms are stated in terms of the network degree, the node count and
the attacker count, and ``check_sync_conditions`` evaluates them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

KIND_QUORUM_N = "quorum_n"
KIND_QUORUM_DEGREE = "quorum_degree"


@dataclass(frozen=True)
class Topology:
    """Immutable digraph with per-node degree bookkeeping.

    ``adjacency[i]`` is the tuple of out-neighbors of node i in ascending
    order (cascade determinism relies on that order). Build instances via
    :func:`from_adjacency`, :func:`build_circle_deployment` or
    :func:`load_topology`, which validate and derive the degree fields.
    """

    n: int
    adjacency: tuple[tuple[int, ...], ...]
    indegree: tuple[int, ...]
    outdegree: tuple[int, ...]
    degree: tuple[int, ...]  # per node: min(indegree, outdegree)
    network_degree: int


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of the guarantee-condition check for one mechanism kind."""

    mechanism: str
    n: int
    d: int
    m: int
    degree_bound: int  # the floor bound d is compared against
    degree_ok: bool
    attacker_bound_ok: bool
    max_allowed_attackers: int

    def to_dict(self) -> dict:
        return {
            "mechanism": self.mechanism,
            "n": self.n,
            "d": self.d,
            "m": self.m,
            "degree_bound": self.degree_bound,
            "degree_ok": self.degree_ok,
            "attacker_bound_ok": self.attacker_bound_ok,
            "max_allowed_attackers": self.max_allowed_attackers,
        }


def from_adjacency(adjacency) -> Topology:
    """Validate raw adjacency lists and derive all degree fields.

    Rejects self-edges, duplicate edges and out-of-range node indices.
    """
    n = len(adjacency)
    if n < 1:
        raise ValueError("topology needs at least one node")
    rows: list[tuple[int, ...]] = []
    indeg = [0] * n
    for i, neigh in enumerate(adjacency):
        seen = set()
        for j in neigh:
            if not isinstance(j, int) or not 0 <= j < n:
                raise ValueError(f"edge ({i},{j}) references a node outside [0,{n})")
            if j == i:
                raise ValueError(f"self-edge ({i},{i}) not allowed")
            if j in seen:
                raise ValueError(f"duplicate edge ({i},{j})")
            seen.add(j)
            indeg[j] += 1
        rows.append(tuple(sorted(seen)))
    outdeg = [len(r) for r in rows]
    deg = [min(a, b) for a, b in zip(indeg, outdeg)]
    return Topology(
        n=n,
        adjacency=tuple(rows),
        indegree=tuple(indeg),
        outdegree=tuple(outdeg),
        degree=tuple(deg),
        network_degree=min(deg),
    )


def build_circle_deployment(n: int, diameter: float, comm_range: float) -> Topology:
    """Place n nodes at equal spacing on a circle; connect pairs closer than comm_range.

    The chord between nodes at circular index distance k is
    diameter*sin(pi*k/n); an edge pair exists iff that distance is strictly
    below comm_range. Node 0 sits at angle 0 with counterclockwise numbering,
    but only index distance matters for connectivity.
    """
    if n < 2:
        raise ValueError("circle deployment needs n >= 2")
    if diameter <= 0 or comm_range <= 0:
        raise ValueError("diameter and comm_range must be positive")
    # reach = largest index distance within range, identical for every node
    reach = [k for k in range(1, n // 2 + 1) if diameter * math.sin(math.pi * k / n) < comm_range]
    max_k = max(reach) if reach else 0
    adjacency = []
    for i in range(n):
        neigh = set()  # set() dedupes the antipodal case k == n/2
        for k in range(1, max_k + 1):
            neigh.add((i + k) % n)
            neigh.add((i - k) % n)
        adjacency.append(sorted(neigh))
    return from_adjacency(adjacency)


def out_neighbors(topology: Topology, i: int) -> tuple[int, ...]:
    """Out-neighbor ids of node i in ascending order."""
    if not 0 <= i < topology.n:
        raise ValueError(f"node id {i} outside [0,{topology.n})")
    return topology.adjacency[i]


def check_sync_conditions(topology: Topology, mechanism: str, m: int) -> ConditionReport:
    """Evaluate the degree and attacker-count bounds that guarantee synchronization.

    quorum_n requires d > floor(2N/3) with m < d - floor(2N/3);
    quorum_degree requires d > floor(3N/4) with m < floor(d/6).
    m = 0 covers the attack-free guarantees.
    """
    if not 0 <= m < topology.n:
        raise ValueError("attacker count m must satisfy 0 <= m < n")
    n, d = topology.n, topology.network_degree
    if mechanism == KIND_QUORUM_N:
        bound = (2 * n) // 3
        max_allowed = d - bound - 1
    elif mechanism == KIND_QUORUM_DEGREE:
        bound = (3 * n) // 4
        max_allowed = d // 6 - 1
    else:
        raise ValueError(f"no guarantee conditions defined for mechanism {mechanism!r}")
    return ConditionReport(
        mechanism=mechanism,
        n=n,
        d=d,
        m=m,
        degree_bound=bound,
        degree_ok=d > bound,
        attacker_bound_ok=m <= max_allowed,
        max_allowed_attackers=max_allowed,
    )


def load_topology(description: dict) -> Topology:
    """Build a topology from its config-file description.

    Accepts {"kind": "circle", "n": int, "diameter": num, "range": num} or
    {"kind": "explicit", "adjacency": [[...], ...]}.
    """
    if not isinstance(description, dict):
        raise ValueError("topology description must be a mapping")
    kind = description.get("kind")
    if kind == "circle":
        try:
            n = description["n"]
            diameter = description["diameter"]
            comm_range = description["range"]
        except KeyError as exc:
            raise ValueError(f"circle topology missing field {exc}") from None
        return build_circle_deployment(int(n), float(diameter), float(comm_range))
    if kind == "explicit":
        if "adjacency" not in description:
            raise ValueError("explicit topology missing 'adjacency'")
        return from_adjacency(description["adjacency"])
    raise ValueError(f"unknown topology kind {kind!r}")


def is_strongly_connected(topology: Topology) -> bool:
    """Reachability check used to probe the dense-graph connectivity property."""
    if topology.n == 1:
        return True
    reverse: list[list[int]] = [[] for _ in range(topology.n)]
    for i, row in enumerate(topology.adjacency):
        for j in row:
            reverse[j].append(i)

    def full_reach(adj) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            for j in adj[stack.pop()]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == topology.n

    return full_reach(topology.adjacency) and full_reach(reverse)
