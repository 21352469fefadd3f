"""Coupling-graph constructors and graph statistics.

Every topology studied by the toolkit is built here as an immutable
``CouplingGraph``: square/hex/heavy-hex/alternating-diagonal lattices,
modular 4-ary trees (plain and round-robin), SNAIL corrals, and (trimmed)
hypercubes. Statistics are diameter, average pairwise distance, and average
connectivity (mean degree).

``avg_distance`` averages shortest-path length over all *ordered* vertex
pairs including self-pairs (sum of the distance matrix divided by n²); this
is the normalization under which the lattice/tree/corral reference values
reproduce exactly.

All constructors are deterministic: identical parameters yield identical
edge sets. Oversized tilings are trimmed to a target qubit count by
repeatedly removing the highest-index vertex whose removal keeps the graph
connected.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (Disconnected, InvalidDimensions, InvalidStride,
                     UnsupportedDepth)


# ---------------------------------------------------------------------------
# Core types


def _normalize_edges(edges) -> frozenset:
    out = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            raise ValueError(f"self-loop on vertex {u}")
        out.add((min(u, v), max(u, v)))
    return frozenset(out)


@dataclass(frozen=True)
class CouplingGraph:
    """An undirected, connected, simple graph of 2Q-gate capability."""

    n: int
    edges: frozenset
    name: str = ""
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "edges", _normalize_edges(self.edges))
        if self.n < 1:
            raise ValueError("graph needs at least one vertex")
        for u, v in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u},{v}) out of range for n={self.n}")
        adj = self.adjacency
        if self.n > 1:
            seen = {0}
            q = deque([0])
            while q:
                u = q.popleft()
                for w in adj[u]:
                    if w not in seen:
                        seen.add(w)
                        q.append(w)
            if len(seen) != self.n:
                raise Disconnected(
                    f"{self.name or 'graph'}: only {len(seen)}/{self.n} "
                    "vertices reachable")

    @property
    def adjacency(self):
        """Sorted neighbor lists, built once per instance."""
        try:
            return object.__getattribute__(self, "_adj")
        except AttributeError:
            adj = [[] for _ in range(self.n)]
            for u, v in self.edges:
                adj[u].append(v)
                adj[v].append(u)
            for row in adj:
                row.sort()
            object.__setattr__(self, "_adj", adj)
            return adj

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges


class TopologyStats(NamedTuple):
    diameter: int
    avg_distance: float
    avg_connectivity: float


def all_pairs_distances(g: CouplingGraph) -> np.ndarray:
    """Exact hop-count distance matrix by BFS from every vertex; cached on
    the graph and treated as read-only."""
    try:
        return object.__getattribute__(g, "_dist")
    except AttributeError:
        pass
    adj = g.adjacency
    d = np.full((g.n, g.n), -1, dtype=np.int32)
    for s in range(g.n):
        d[s, s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            du = d[s, u]
            for w in adj[u]:
                if d[s, w] < 0:
                    d[s, w] = du + 1
                    q.append(w)
    if (d < 0).any():
        raise Disconnected(f"{g.name or 'graph'} is not connected")
    d.setflags(write=False)
    object.__setattr__(g, "_dist", d)
    return d


def stats(g: CouplingGraph) -> TopologyStats:
    d = all_pairs_distances(g)
    return TopologyStats(
        diameter=int(d.max()),
        avg_distance=float(d.sum()) / (g.n * g.n),
        avg_connectivity=2.0 * len(g.edges) / g.n,
    )


# ---------------------------------------------------------------------------
# Trimming


def _trim_to(n: int, edges: set, target: int):
    """Remove highest-index vertices whose removal keeps the graph
    connected until ``target`` vertices remain, then relabel densely."""
    keep = set(range(n))
    for v in sorted(range(n), reverse=True):
        if len(keep) <= target:
            break
        trial = keep - {v}
        adj = {u: [] for u in trial}
        for a, b in edges:
            if a in trial and b in trial:
                adj[a].append(b)
                adj[b].append(a)
        start = next(iter(trial))
        seen = {start}
        q = deque([start])
        while q:
            u = q.popleft()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    q.append(w)
        if len(seen) == len(trial):
            keep = trial
    if len(keep) != target:
        raise Disconnected(
            f"cannot trim to {target} vertices without disconnecting")
    remap = {v: i for i, v in enumerate(sorted(keep))}
    new_edges = {(remap[a], remap[b]) for a, b in edges
                 if a in keep and b in keep}
    return len(keep), new_edges


# ---------------------------------------------------------------------------
# Lattices


def build_square_lattice(rows: int, cols: int) -> CouplingGraph:
    """Grid graph: each qubit couples to its four nearest neighbors."""
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise InvalidDimensions("square lattice needs at least two qubits")
    idx = lambda r, c: r * cols + c
    edges = set()
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.add((idx(r, c), idx(r, c + 1)))
            if r + 1 < rows:
                edges.add((idx(r, c), idx(r + 1, c)))
    return CouplingGraph(rows * cols, edges,
                         name=f"square_lattice({rows},{cols})",
                         metadata={"rows": rows, "cols": cols})


def build_lattice_alt_diag(rows: int, cols: int) -> CouplingGraph:
    """Square grid plus one diagonal per tile with alternating direction."""
    if rows < 2 or cols < 2:
        raise InvalidDimensions("alternating-diagonal lattice needs a tile")
    g = build_square_lattice(rows, cols)
    idx = lambda r, c: r * cols + c
    edges = set(g.edges)
    for r in range(rows - 1):
        for c in range(cols - 1):
            if (r + c) % 2 == 0:
                edges.add((idx(r, c), idx(r + 1, c + 1)))
            else:
                edges.add((idx(r, c + 1), idx(r + 1, c)))
    return CouplingGraph(rows * cols, edges,
                         name=f"lattice_alt_diag({rows},{cols})",
                         metadata={"rows": rows, "cols": cols})


def _brick_wall(rows: int, cols: int):
    """Hexagonal tiling in brick-wall form: full horizontal rails, vertical
    edges on alternating columns."""
    idx = lambda r, c: r * cols + c
    edges = set()
    for r in range(rows):
        for c in range(cols - 1):
            edges.add((idx(r, c), idx(r, c + 1)))
    for r in range(rows - 1):
        for c in range(cols):
            if (r + c) % 2 == 0:
                edges.add((idx(r, c), idx(r + 1, c)))
    return rows * cols, edges


def build_hex_lattice(target_n: int) -> CouplingGraph:
    """Hexagonal (brick-wall) tiling with ``target_n`` qubits.

    Prefers an exact rows x cols factorization with aspect ratio near the
    conventional brick-wall proportions (rows ~ sqrt(n/1.7)); otherwise
    tiles one row larger and trims.
    """
    if target_n < 2:
        raise InvalidDimensions("hex lattice needs at least two qubits")
    ideal = math.sqrt(target_n / 1.7)
    divisors = [r for r in range(2, target_n // 2 + 1)
                if target_n % r == 0]
    if divisors:
        rows = min(divisors, key=lambda r: (abs(r - ideal), r))
        n, edges = _brick_wall(rows, target_n // rows)
    else:
        rows = max(2, round(ideal))
        cols = -(-target_n // rows)
        n, edges = _brick_wall(rows, cols)
        n, edges = _trim_to(n, edges, target_n)
    return CouplingGraph(n, edges, name=f"hex_lattice({target_n})",
                         metadata={"target_n": target_n})


# ---------------------------------------------------------------------------
# Heavy-hex


def _rails(R: int, L: int, offsets):
    """Heavy-hex as R horizontal rails of L qubits joined by degree-2
    bridge qubits; junction j gets bridges at columns ≡ offsets[j mod 2]
    (mod 4). Indexing: rail 0, junction-0 bridges, rail 1, ..."""
    idx = {}
    k = 0
    for r in range(R):
        for c in range(L):
            idx[("q", r, c)] = k
            k += 1
        if r < R - 1:
            for c in range(L):
                if c % 4 == offsets[r % len(offsets)] % 4:
                    idx[("b", r, c)] = k
                    k += 1
    edges = set()
    for r in range(R):
        for c in range(L - 1):
            edges.add((idx[("q", r, c)], idx[("q", r, c + 1)]))
    for r in range(R - 1):
        for c in range(L):
            if ("b", r, c) in idx:
                b = idx[("b", r, c)]
                edges.add((idx[("q", r, c)], b))
                edges.add((b, idx[("q", r + 1, c)]))
    return k, edges


def _folded_two_cell():
    """The 20-qubit heavy-hex variant: two hexagonal cells sharing one side
    (a theta graph with arcs of 4, 8, and 8 edges between two junction
    vertices) plus one pendant bridge qubit on the shared side.

    No flat fragment of the tiling reaches diameter 8 at 20 qubits; folding
    two cells onto a shared side does, while keeping 21 edges (mean degree
    2.1) and every vertex at degree <= 3.
    """
    nxt = 2
    paths = {}
    edges = set()
    for tag, ln in (("s", 4), ("a", 8), ("b", 8)):
        prev = 0
        inner = []
        for _ in range(ln - 1):
            inner.append(nxt)
            nxt += 1
        for w in inner:
            edges.add((min(prev, w), max(prev, w)))
            prev = w
        edges.add((min(prev, 1), max(prev, 1)))
        paths[tag] = inner
    pendant = nxt
    nxt += 1
    host = paths["s"][0]
    edges.add((min(host, pendant), max(host, pendant)))
    return nxt, edges


def build_heavy_hex(target_n: int) -> CouplingGraph:
    """Heavy-hex topology: hexagon tiling with degree-2 bridge qubits,
    trimmed deterministically to ``target_n`` qubits."""
    if target_n < 5:
        raise InvalidDimensions("heavy-hex needs at least five qubits")
    if target_n == 20:
        n, edges = _folded_two_cell()
    else:
        rails = max(2, round(math.sqrt(target_n / 3.5)))
        for length in itertools.count(2):
            n, edges = _rails(rails, length, (0, 2))
            if n >= target_n:
                break
        if n > target_n:
            n, edges = _trim_to(n, edges, target_n)
    return CouplingGraph(n, edges, name=f"heavy_hex({target_n})",
                         metadata={"target_n": target_n})


# ---------------------------------------------------------------------------
# Modular trees


def _tree(levels: int, round_robin: bool):
    edges = set()
    routers = list(range(4))
    for a, b in itertools.combinations(routers, 2):
        edges.add((a, b))
    nxt = 4
    mid_modules = {}
    for k in range(4):
        module = list(range(nxt, nxt + 4))
        nxt += 4
        mid_modules[k] = module
        for a, b in itertools.combinations(module, 2):
            edges.add((a, b))
        for i, q in enumerate(module):
            r = routers[i] if round_robin else routers[k]
            edges.add((min(q, r), max(q, r)))
    if levels == 3:
        for k in range(4):
            for i, mid in enumerate(mid_modules[k]):
                module = list(range(nxt, nxt + 4))
                nxt += 4
                for a, b in itertools.combinations(module, 2):
                    edges.add((a, b))
                for j, q in enumerate(module):
                    r = mid_modules[k][j] if round_robin else mid
                    edges.add((min(q, r), max(q, r)))
    return nxt, edges


def build_tree(levels: int) -> CouplingGraph:
    """Modular 4-ary tree: a K4 of router qubits, each router in a K5 with
    its module; three levels append a K5 module to every mid qubit."""
    if levels not in (2, 3):
        raise UnsupportedDepth("tree supports levels 2 or 3")
    n, edges = _tree(levels, round_robin=False)
    return CouplingGraph(n, edges, name=f"tree({levels})",
                         metadata={"levels": levels})


def build_tree_rr(levels: int) -> CouplingGraph:
    """Round-robin tree: module qubit i attaches to router i instead of the
    module's own router, spreading each module across all routers."""
    if levels not in (2, 3):
        raise UnsupportedDepth("tree supports levels 2 or 3")
    n, edges = _tree(levels, round_robin=True)
    return CouplingGraph(n, edges, name=f"tree_rr({levels})",
                         metadata={"levels": levels})


# ---------------------------------------------------------------------------
# Corrals


def build_corral(n_snails: int, stride_a: int, stride_b: int
                 ) -> CouplingGraph:
    """Ring of SNAILs with two interleaved fence levels of spanning qubits.

    Fence level with stride s couples each post to its s-th nearest post of
    the opposite parity around the ring (ring offset 2s - 1); a level thus
    contributes one qubit per SNAIL. Qubits are adjacent iff they share a
    SNAIL, so each SNAIL's attached qubits form a clique.
    """
    if n_snails < 4:
        raise InvalidStride("corral needs at least four SNAILs")
    for s in (stride_a, stride_b):
        if not (1 <= s < n_snails / 2):
            raise InvalidStride(
                f"stride {s} must satisfy 1 <= stride < n_snails/2")
    spans = []
    for s in (stride_a, stride_b):
        off = 2 * s - 1
        for j in range(n_snails):
            spans.append(frozenset((j, (j + off) % n_snails)))
    n = len(spans)
    edges = set()
    for i in range(n):
        for j in range(i + 1, n):
            if spans[i] & spans[j]:
                edges.add((i, j))
    return CouplingGraph(
        n, edges, name=f"corral({n_snails},{stride_a},{stride_b})",
        metadata={"n_snails": n_snails, "stride_a": stride_a,
                  "stride_b": stride_b})


# ---------------------------------------------------------------------------
# Hypercubes


def build_hypercube(dim: int) -> CouplingGraph:
    """Binary hypercube of 2^dim qubits; distances are Hamming distances."""
    if dim < 1:
        raise InvalidDimensions("hypercube dimension must be >= 1")
    n = 2 ** dim
    edges = set()
    for v in range(n):
        for b in range(dim):
            w = v ^ (1 << b)
            if v < w:
                edges.add((v, w))
    return CouplingGraph(n, edges, name=f"hypercube({dim})",
                         metadata={"dim": dim})


def trim_hypercube(dim: int, target_n: int) -> CouplingGraph:
    """Hypercube reduced to ``target_n`` vertices by deleting the largest
    Hamming weights first (ties broken toward larger index), preserving the
    regular low-weight core."""
    n = 2 ** dim
    if not 1 <= target_n <= n:
        raise InvalidDimensions(f"target_n must be in 1..{n}")
    order = sorted(range(n), key=lambda v: (bin(v).count("1"), v),
                   reverse=True)
    keep = set(range(n))
    for v in order:
        if len(keep) <= target_n:
            break
        keep.discard(v)
    kept = sorted(keep)
    remap = {v: i for i, v in enumerate(kept)}
    edges = set()
    for v in kept:
        for b in range(dim):
            w = v ^ (1 << b)
            if w in keep and v < w:
                edges.add((remap[v], remap[w]))
    g = CouplingGraph(len(kept), edges,
                      name=f"hypercube_trim({dim},{target_n})",
                      metadata={"dim": dim, "target_n": target_n})
    return g


# ---------------------------------------------------------------------------
# Edge-list import/export


def export_topology(g: CouplingGraph) -> str:
    """Plain-text edge list: first line ``n <count>``, then ``u v`` lines."""
    lines = [f"n {g.n}"]
    for u, v in sorted(g.edges):
        lines.append(f"{u} {v}")
    return "\n".join(lines) + "\n"


def parse_topology(text: str, name: str = "custom") -> CouplingGraph:
    """Parse the edge-list format produced by :func:`export_topology`."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("n "):
        raise ValueError("topology file must start with 'n <count>'")
    try:
        n = int(lines[0].split()[1])
    except (IndexError, ValueError) as exc:
        raise ValueError("malformed count line") from exc
    edges = set()
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"malformed edge line: {ln!r}")
        edges.add((int(parts[0]), int(parts[1])))
    return CouplingGraph(n, edges, name=name, metadata={"source": "file"})
