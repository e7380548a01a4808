"""Distributed architecture model: network graph, quotient graph, time expansion."""

from __future__ import annotations

from dataclasses import dataclass


class NetworkError(ValueError):
    """Raised for malformed network sources or invariant violations."""


Edge = tuple[str, str]


def edge_key(a: str, b: str) -> Edge:
    """Canonical unordered pair for a quotient edge."""
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class NetworkGraph:
    """Architecture with processors partitioning the qubit set.

    ``processors`` maps processor name to (computation qubits, communication
    qubits), both in declaration order. ``locals_`` are intra-processor
    couplings; ``links`` are entanglement links between communication qubits
    of distinct processors.
    """

    processors: dict[str, tuple[tuple[str, ...], tuple[str, ...]]]
    locals_: tuple[Edge, ...]
    links: tuple[Edge, ...]

    def processor_of(self, node: str) -> str:
        for name, (comp, comm) in self.processors.items():
            if node in comp or node in comm:
                return name
        raise NetworkError(f"unknown node {node!r}")

    @property
    def computation_qubits(self) -> tuple[str, ...]:
        return tuple(q for comp, _ in self.processors.values() for q in comp)

    @property
    def communication_qubits(self) -> tuple[str, ...]:
        return tuple(c for _, comm in self.processors.values() for c in comm)

    def placement(self) -> dict[str, str]:
        """Computation qubit -> processor name."""
        return {q: p for p, (comp, _) in self.processors.items() for q in comp}

    def local_neighbors(self, node: str) -> list[str]:
        out = []
        for a, b in self.locals_:
            if a == node:
                out.append(b)
            elif b == node:
                out.append(a)
        return out


@dataclass(frozen=True)
class QuotientGraph:
    """Processors as nodes; all links between a processor pair compressed to
    one undirected edge whose capacity is the link count."""

    nodes: tuple[str, ...]
    capacity: dict[Edge, int]

    def edges(self) -> list[Edge]:
        return sorted(self.capacity)

    def neighbors(self, proc: str) -> list[str]:
        out = []
        for a, b in self.edges():
            if a == proc:
                out.append(b)
            elif b == proc:
                out.append(a)
        return sorted(out)

    def distances(self, source: str) -> dict[str, int]:
        """BFS hop counts from ``source`` over quotient edges."""
        dist = {source: 0}
        frontier = [source]
        while frontier:
            nxt: list[str] = []
            for u in frontier:
                for v in self.neighbors(u):
                    if v not in dist:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            frontier = nxt
        return dist

    def simple_paths(self, source: str, sink: str) -> list[tuple[str, ...]]:
        """All simple paths as node sequences, ordered by (length, nodes)."""
        out: list[tuple[str, ...]] = []

        def walk(node: str, seen: tuple[str, ...]) -> None:
            if node == sink:
                out.append(seen)
                return
            for nb in self.neighbors(node):
                if nb not in seen:
                    walk(nb, seen + (nb,))

        walk(source, (source,))
        out.sort(key=lambda p: (len(p), p))
        return out


@dataclass(frozen=True)
class TimeExpandedGraph:
    """d copies of the quotient graph plus per-commodity endpoint nodes.

    A source connector runs from commodity i's external node into its
    control processor's copy-tau node, a sink connector out of its target
    processor's copy-tau node; both carry unit capacity and exist only for
    tau <= min(i, d), since the i-th operation never needs to run later
    than step i.
    """

    d: int
    copies: tuple[int, ...]
    intra_edges: tuple[tuple[int, Edge, int], ...]  # (tau, edge, capacity)
    source_connectors: dict[int, tuple[tuple[str, int], ...]]  # i -> ((P^C@tau), ...)
    sink_connectors: dict[int, tuple[tuple[str, int], ...]]  # i -> ((P^T@tau), ...)

    def connector_count(self, index: int) -> int:
        return len(self.source_connectors[index]) + len(self.sink_connectors[index])


def parse_network(text: str) -> NetworkGraph:
    """Parse the line-oriented network format and validate all invariants.

    Format: ``processor P { comp q1 q2 comm c1 }`` blocks (single line),
    then ``local <a> <b>`` and ``elink <ca> <cb>`` lines. ``#`` comments.
    """
    processors: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {}
    locals_: list[Edge] = []
    links: list[Edge] = []
    comp_of: dict[str, str] = {}
    comm_of: dict[str, str] = {}

    def owner(node: str) -> str:
        if node in comp_of:
            return comp_of[node]
        if node in comm_of:
            return comm_of[node]
        raise NetworkError(f"undeclared node {node!r}")

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0].lower()
        if head == "processor":
            if len(parts) < 3 or parts[2] != "{" or parts[-1] != "}":
                raise NetworkError(f"line {lineno}: malformed processor block")
            name = parts[1]
            if name in processors:
                raise NetworkError(f"line {lineno}: duplicate processor {name!r}")
            comp: list[str] = []
            comm: list[str] = []
            bucket: list[str] | None = None
            for tok in parts[3:-1]:
                if tok == "comp":
                    bucket = comp
                elif tok == "comm":
                    bucket = comm
                elif bucket is None:
                    raise NetworkError(f"line {lineno}: token {tok!r} outside comp/comm")
                else:
                    if tok in comp_of or tok in comm_of:
                        raise NetworkError(f"line {lineno}: duplicate node name {tok!r}")
                    bucket.append(tok)
                    if bucket is comp:
                        comp_of[tok] = name
                    else:
                        comm_of[tok] = name
            processors[name] = (tuple(comp), tuple(comm))
        elif head == "local":
            if len(parts) != 3:
                raise NetworkError(f"line {lineno}: local takes two nodes")
            a, b = parts[1], parts[2]
            if owner(a) != owner(b):
                raise NetworkError(f"line {lineno}: local coupling {a!r}-{b!r} crosses processors")
            if a == b:
                raise NetworkError(f"line {lineno}: self-coupling {a!r}")
            locals_.append((a, b))
        elif head == "elink":
            if len(parts) != 3:
                raise NetworkError(f"line {lineno}: elink takes two nodes")
            a, b = parts[1], parts[2]
            for n in (a, b):
                if n in comp_of:
                    raise NetworkError(
                        f"line {lineno}: entanglement link touches computation qubit {n!r}"
                    )
            if owner(a) == owner(b):
                raise NetworkError(f"line {lineno}: entanglement link inside one processor")
            links.append((a, b))
        else:
            raise NetworkError(f"line {lineno}: unknown directive {head!r}")

    if not processors:
        raise NetworkError("no processors declared")

    # Connectivity over local couplings plus entanglement links.
    nodes = list(comp_of) + list(comm_of)
    if nodes:
        adj: dict[str, set[str]] = {n: set() for n in nodes}
        for a, b in locals_ + links:
            adj[a].add(b)
            adj[b].add(a)
        # Qubits of one processor are mutually reachable through the
        # processor itself even without explicit couplings.
        for comp, comm in processors.values():
            block = list(comp) + list(comm)
            for n in block[1:]:
                adj[block[0]].add(n)
                adj[n].add(block[0])
        seen = {nodes[0]}
        frontier = [nodes[0]]
        while frontier:
            n = frontier.pop()
            for m in adj[n]:
                if m not in seen:
                    seen.add(m)
                    frontier.append(m)
        if len(seen) != len(nodes):
            raise NetworkError("disconnected architecture")

    return NetworkGraph(processors, tuple(locals_), tuple(links))


def quotient(net: NetworkGraph) -> QuotientGraph:
    """Compress entanglement links to one edge per processor pair; the
    capacity of an edge is the number of links it stands for."""
    capacity: dict[Edge, int] = {}
    for ca, cb in net.links:
        key = edge_key(net.processor_of(ca), net.processor_of(cb))
        capacity[key] = capacity.get(key, 0) + 1
    return QuotientGraph(tuple(sorted(net.processors)), capacity)


def links_by_edge(net: NetworkGraph) -> dict[Edge, list[Edge]]:
    """Concrete links grouped per quotient edge, in declaration order.

    The quotient graph discards which communication qubit carries which
    link; the expander re-binds them from this table.
    """
    table: dict[Edge, list[Edge]] = {}
    for ca, cb in net.links:
        pa, pb = net.processor_of(ca), net.processor_of(cb)
        key = edge_key(pa, pb)
        # Store link endpoints ordered to match the edge key's processors.
        pair = (ca, cb) if (pa, pb) == key else (cb, ca)
        table.setdefault(key, []).append(pair)
    return table


def time_expand(q: QuotientGraph, endpoints: list[tuple[str, str]], d: int) -> TimeExpandedGraph:
    """Static expansion of the quotient graph over d time steps.

    ``endpoints`` lists (control processor, target processor) per
    commodity in enumeration order. Each step contributes a full copy;
    commodity i gains unit-capacity connectors only to copies
    1..min(i, d).
    """
    if d < 1:
        raise NetworkError(f"time horizon must be positive, got {d}")
    intra = tuple(
        (tau, e, q.capacity[e]) for tau in range(1, d + 1) for e in q.edges()
    )
    src: dict[int, tuple[tuple[str, int], ...]] = {}
    snk: dict[int, tuple[tuple[str, int], ...]] = {}
    for i, (ctrl, tgt) in enumerate(endpoints, start=1):
        for proc in (ctrl, tgt):
            if proc not in q.nodes:
                raise NetworkError(f"unknown processor {proc!r} for commodity {i}")
        reach = range(1, min(i, d) + 1)
        src[i] = tuple((ctrl, tau) for tau in reach)
        snk[i] = tuple((tgt, tau) for tau in reach)
    return TimeExpandedGraph(d, tuple(range(1, d + 1)), intra, src, snk)
