"""Compilation pipeline: placement, stochastic SWAP routing, and basis
translation.

``dense_layout`` picks a dense connected physical region and maps busy
logical qubits onto well-connected vertices. ``stochastic_route`` legalizes
two-qubit gates by inserting SWAPs chosen from seeded randomized passes
scored with a decaying lookahead. ``basis_translate`` consolidates adjacent
two-qubit gates into blocks and rewrites every block in the requested
hardware basis. ``run_pipeline`` chains the stages for one benchmark run.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import gates as G
from .benchmarks import BenchmarkSpec, generate
from .circuit import (
    Circuit,
    CircuitMetrics,
    DurationTable,
    Instruction,
    Origin,
    build_dag,
    consolidate_2q_blocks,
    metrics,
)
from .decompose import (
    OptimizerConfig,
    cnot_count,
    decompose_exact,
    decompose_syc,
    gate_fidelity,
    sqiswap_count,
    swap_decomposition,
)
from .errors import TooManyQubits
from .topology import CouplingGraph, all_pairs_distances

_LOOKAHEAD_LAYERS = 20
_LOOKAHEAD_DECAY = 0.5
# Candidate SWAPs are drawn from edges touching the oldest pending gates;
# widening this bound slows routing roughly linearly with little gain.
_CANDIDATE_FRONT = 8


# ---------------------------------------------------------------------------
# Layout


def validate_layout(layout: dict, g: CouplingGraph, width: int) -> None:
    """Check a logical→physical map is injective and lands in the graph."""
    if sorted(layout) != list(range(width)):
        raise ValueError("layout must map each logical qubit exactly once")
    phys = list(layout.values())
    if len(set(phys)) != len(phys):
        raise ValueError("layout must be injective")
    if any(p < 0 or p >= g.n for p in phys):
        raise ValueError("layout image must lie inside the coupling graph")


def _interaction_counts(c: Circuit) -> Counter:
    counts = Counter()
    for ins in c.instructions:
        if ins.is_2q:
            counts[ins.qubits[0]] += 1
            counts[ins.qubits[1]] += 1
    return counts


def dense_layout(c: Circuit, g: CouplingGraph) -> dict:
    """Initial placement: greedily grow the densest connected physical
    subset, then pair busy logical qubits with well-connected vertices."""
    if c.width > g.n:
        raise TooManyQubits(
            f"circuit needs {c.width} qubits, graph has {g.n}")
    adj = g.adjacency
    start = max(range(g.n), key=lambda v: (len(adj[v]), -v))
    chosen = {start}
    frontier = set(adj[start])
    while len(chosen) < c.width:
        best = min(frontier,
                   key=lambda v: (-sum(u in chosen for u in adj[v]), v))
        chosen.add(best)
        frontier.update(adj[best])
        frontier -= chosen
    induced = {v: sum(u in chosen for u in adj[v]) for v in chosen}
    phys_order = sorted(chosen, key=lambda v: (-induced[v], v))
    busy = _interaction_counts(c)
    logical_order = sorted(range(c.width), key=lambda q: (-busy[q], q))
    return dict(zip(logical_order, phys_order))


# ---------------------------------------------------------------------------
# Routing


@dataclass(frozen=True)
class RoutedCircuit:
    """A circuit over physical indices plus the layout bookkeeping."""

    circuit: Circuit
    initial_layout: dict = field(compare=False)
    final_layout: dict = field(compare=False)
    swap_log: tuple = ()


class _RouteState:
    def __init__(self, width: int, g: CouplingGraph, layout: dict):
        self.l2p = [layout[q] for q in range(width)]
        self.p2l = {p: q for q, p in layout.items()}

    def apply_swap(self, pa: int, pb: int) -> None:
        la = self.p2l.get(pa)
        lb = self.p2l.get(pb)
        if la is not None:
            self.l2p[la] = pb
        if lb is not None:
            self.l2p[lb] = pa
        self.p2l.pop(pa, None)
        self.p2l.pop(pb, None)
        if la is not None:
            self.p2l[pb] = la
        if lb is not None:
            self.p2l[pa] = lb


def _dag_levels(c: Circuit, dag) -> list:
    levels = [0] * len(c.instructions)
    for i in range(len(c.instructions)):
        preds = dag.pred[i]
        levels[i] = 1 + max((levels[p] for p in preds), default=-1)
    return levels


def _swap_candidates(gate_positions, adj, limit=None) -> list:
    """Sorted candidate edges incident to the first ``limit`` pending gates."""
    seen = set()
    out = []
    if limit is None:
        limit = len(gate_positions)
    for pa, pb in gate_positions[:limit]:
        for p in (pa, pb):
            for q in adj[p]:
                e = (p, q) if p < q else (q, p)
                if e not in seen:
                    seen.add(e)
                    out.append(e)
    out.sort()
    return out


def stochastic_route(c: Circuit, g: CouplingGraph, layout: dict,
                     seed: int = 0, trials: int = 20,
                     cancel_adjacent_swaps: bool = False) -> RoutedCircuit:
    """Legalize ``c`` on ``g`` starting from ``layout``.

    Whenever the dependency front holds two-qubit gates whose endpoints are
    not adjacent, ``trials`` seeded randomized passes each build a SWAP
    sequence: every step greedily picks a candidate edge (usually the one
    that most reduces the summed front-gate distance, sometimes a
    runner-up) until some pending gate becomes executable. Completed passes
    are compared on swap count and on the summed mapped distance of pending
    gates with a decaying lookahead over upcoming DAG layers; the cheapest
    pass wins. If no pass reaches an executable gate, one SWAP is taken
    along a shortest path of the oldest pending gate, which guarantees
    progress on any connected graph.
    """
    validate_layout(layout, g, c.width)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    dist = all_pairs_distances(g)
    dl = dist.tolist()
    adj = g.adjacency
    dag = build_dag(c)
    levels = _dag_levels(c, dag)
    n_ins = len(c.instructions)
    indeg = [len(dag.pred[i]) for i in range(n_ins)]
    ready = sorted(i for i in range(n_ins) if indeg[i] == 0)
    remaining_2q = sorted(
        (i for i in range(n_ins) if c.instructions[i].is_2q),
        key=lambda i: (levels[i], i))
    committed = bytearray(n_ins)
    la_start = 0

    state = _RouteState(c.width, g, layout)
    master = np.random.default_rng(seed)
    out: list = []
    swap_log: list = []
    step_cap = max(4, 2 * int(dist.max()) + 2)

    def emit_swap(pa: int, pb: int) -> None:
        pa, pb = int(pa), int(pb)
        qa, qb = (pa, pb) if pa < pb else (pb, pa)
        swap_log.append((len(out), (qa, qb)))
        out.append(Instruction(G.SWAP, (qa, qb), Origin.ROUTING_SWAP))
        state.apply_swap(pa, pb)

    def commit(i: int) -> None:
        ins = c.instructions[i]
        phys = tuple(int(state.l2p[q]) for q in ins.qubits)
        out.append(Instruction(ins.gate, phys, ins.origin))
        committed[i] = 1

    def lookahead_list(front_ids):
        nonlocal la_start
        while la_start < len(remaining_2q) and committed[remaining_2q[la_start]]:
            la_start += 1
        pairs = []
        base = min(levels[i] for i in front_ids)
        front_set = set(front_ids)
        for idx in range(la_start, len(remaining_2q)):
            i = remaining_2q[idx]
            if committed[i]:
                continue
            d = levels[i] - base
            if d > _LOOKAHEAD_LAYERS:
                break
            a, b = c.instructions[i].qubits
            w = 1.0 if i in front_set else _LOOKAHEAD_DECAY ** max(d, 1)
            pairs.append((a, b, w))
        return pairs

    while ready:
        # Commit everything currently executable.
        progress = True
        while progress:
            progress = False
            next_ready = []
            for i in ready:
                ins = c.instructions[i]
                if (not ins.is_2q
                        or dl[state.l2p[ins.qubits[0]]]
                             [state.l2p[ins.qubits[1]]] == 1):
                    commit(i)
                    for s in dag.succ[i]:
                        indeg[s] -= 1
                        if indeg[s] == 0:
                            next_ready.append(s)
                    progress = True
                else:
                    next_ready.append(i)
            ready = sorted(next_ready)
        if not ready:
            break

        front_ids = [i for i in ready if c.instructions[i].is_2q]
        front_pairs = [c.instructions[i].qubits for i in front_ids]
        scored = lookahead_list(front_ids)
        sa = np.array([a for a, _, _ in scored], dtype=np.intp)
        sb = np.array([b for _, b, _ in scored], dtype=np.intp)
        sw = np.array([w for _, _, w in scored])

        def total_cost(pos):
            p = np.asarray(pos, dtype=np.intp)
            return float((sw * dist[p[sa], p[sb]]).sum())

        best_key = None
        best_swaps = None
        trial_seeds = master.integers(0, 2 ** 63 - 1, size=trials)
        for t in range(trials):
            rng = np.random.default_rng(trial_seeds[t])
            pos = list(state.l2p)
            pinv = [-1] * g.n
            for q, p in enumerate(pos):
                pinv[p] = q
            # Per-gate mapped endpoints; v2g maps an occupied vertex to the
            # pending front gates with an endpoint there, so a candidate
            # SWAP is scored by rescanning only the gates it touches.
            gp = [[pos[a], pos[b]] for a, b in front_pairs]
            v2g: dict = {}
            for gi, (x, y) in enumerate(gp):
                v2g.setdefault(x, []).append(gi)
                v2g.setdefault(y, []).append(gi)
            swaps = []
            reached = False
            for _ in range(step_cap):
                cands = _swap_candidates(gp, adj, _CANDIDATE_FRONT)
                deltas = []
                for pa, pb in cands:
                    dsum = 0.0
                    for gi in set(v2g.get(pa, ()) ) | set(v2g.get(pb, ())):
                        x, y = gp[gi]
                        nx = pb if x == pa else (pa if x == pb else x)
                        ny = pb if y == pa else (pa if y == pb else y)
                        dsum += dl[nx][ny] - dl[x][y]
                    deltas.append(dsum)
                order = sorted(range(len(cands)),
                               key=lambda i: (deltas[i], i))
                # Biased choice: usually the cheapest, sometimes a runner-up.
                pick = order[0]
                if len(order) > 1 and rng.random() < 0.25:
                    pick = order[1 + rng.integers(min(3, len(order) - 1))]
                pa, pb = cands[pick]
                la, lb = pinv[pa], pinv[pb]
                if la >= 0:
                    pos[la] = pb
                if lb >= 0:
                    pos[lb] = pa
                pinv[pa], pinv[pb] = lb, la
                ga = v2g.pop(pa, None)
                gb = v2g.pop(pb, None)
                if gb is not None:
                    v2g[pa] = gb
                if ga is not None:
                    v2g[pb] = ga
                for gi in set(ga or ()) | set(gb or ()):
                    x, y = gp[gi]
                    nx = pb if x == pa else (pa if x == pb else x)
                    ny = pb if y == pa else (pa if y == pb else y)
                    gp[gi] = [nx, ny]
                    if dl[nx][ny] == 1:
                        reached = True
                swaps.append((pa, pb))
                if reached:
                    break
            key = (0 if reached else 1, len(swaps), total_cost(pos), t)
            if best_key is None or key < best_key:
                best_key = key
                best_swaps = swaps

        if best_key is not None and best_key[0] == 0 and best_swaps:
            for pa, pb in best_swaps:
                emit_swap(pa, pb)
        else:
            # Forced progress: one step along a shortest path of the oldest
            # pending gate.
            oldest = front_ids[0]
            a, b = c.instructions[oldest].qubits
            pa, pb = state.l2p[a], state.l2p[b]
            step = min(q for q in adj[pa] if dl[q][pb] < dl[pa][pb])
            emit_swap(pa, step)

    routed = Circuit(g.n, out)
    if cancel_adjacent_swaps:
        routed = _cancel_adjacent_swaps(routed)
        swap_log = [(i, ins.qubits)
                    for i, ins in enumerate(routed.instructions)
                    if ins.is_routing_swap]
    final_layout = {q: int(state.l2p[q]) for q in range(c.width)}
    return RoutedCircuit(routed, dict(layout), final_layout, tuple(swap_log))


def _cancel_adjacent_swaps(c: Circuit) -> Circuit:
    """Peephole pass: drop pairs of identical SWAPs with nothing on either
    qubit in between. Off by default in the pipeline."""
    ins = list(c.instructions)
    changed = True
    while changed:
        changed = False
        open_swap: dict = {}
        kill: set = set()
        for i, item in enumerate(ins):
            if item.is_routing_swap:
                pair = item.qubits
                if pair in open_swap:
                    kill.update((open_swap.pop(pair), i))
                    changed = True
                else:
                    open_swap[pair] = i
            else:
                for pair in [p for p in open_swap
                             if set(p) & set(item.qubits)]:
                    open_swap.pop(pair)
        if kill:
            ins = [item for i, item in enumerate(ins) if i not in kill]
    return Circuit(c.width, ins)


# ---------------------------------------------------------------------------
# Basis translation


@dataclass(frozen=True)
class FidelityModel:
    """Interpolated per-gate fidelity for iSWAP-root bases.

    The model covers only the iSWAP family: ``per_gate`` returns ``None``
    for other bases, and ``scope`` labels which regime a basis falls in so
    reports can carry the caveat along.
    """

    f_iswap: float = 0.99

    def per_gate(self, basis: G.GateKind):
        if basis.tag == "NTH_ROOT_ISWAP":
            return gate_fidelity(self.f_iswap, int(basis.params[0]))
        if basis.tag == "ISWAP":
            return gate_fidelity(self.f_iswap, 1)
        return None

    def scope(self, basis: G.GateKind) -> str:
        if basis.tag in ("NTH_ROOT_ISWAP", "ISWAP"):
            return "iswap_roots"
        return "not_applicable"


_SWAP_MAT = G.gate_matrix(G.SWAP)


# Canonical synthesis per (block, basis, optimizer settings). LAPACK and
# the polishing optimizer carry last-ulp jitter that depends on allocator
# state, so re-synthesizing an identical block later in a process can move
# the low bits of its fidelity; the first stored result is reused instead
# so that repeated and parallel sweeps stay byte-identical.
_BLOCK_MEMO: dict = {}


def _optimizer_key(cfg: OptimizerConfig | None):
    if cfg is None:
        return None
    return (cfg.restarts, cfg.max_iterations, cfg.gradient_step,
            cfg.convergence_tol, cfg.seed)


def _decompose_block(mat: np.ndarray, basis: G.GateKind,
                     cfg: OptimizerConfig | None):
    key = (np.ascontiguousarray(mat).tobytes(), basis, _optimizer_key(cfg))
    hit = _BLOCK_MEMO.get(key)
    if hit is not None:
        return hit
    if basis.tag == "SYC":
        res = decompose_syc(mat, cfg=cfg)
    else:
        res = decompose_exact(mat, basis, cfg=cfg)
    # setdefault keeps the first writer's result under concurrency
    return _BLOCK_MEMO.setdefault(key, res)


def _emit_block(result, qubits, origin) -> list:
    """Expand a DecompResult into instructions on a physical pair."""
    a, b = qubits
    out = []
    pairs = result.locals
    for idx in range(result.count + 1):
        l1, l2 = pairs[idx]
        if not np.allclose(l1, np.eye(2), atol=1e-12):
            out.append(Instruction(G.u2(l1), (a,), origin))
        if not np.allclose(l2, np.eye(2), atol=1e-12):
            out.append(Instruction(G.u2(l2), (b,), origin))
        if idx < result.count:
            out.append(Instruction(result.basis, (a, b), origin))
    return out


def _block_count_fast(mat: np.ndarray, basis: G.GateKind):
    """Basis-gate count of an exact decomposition, without synthesizing it.

    The count is a function of the block's canonical coordinates alone, so
    for bases with a closed-form count rule the local gates never need to
    be constructed. Returns None when no fast rule applies and the caller
    must fall back to a full decomposition.
    """
    if basis.tag == "CNOT":
        return cnot_count(G.weyl_coordinates(mat))
    if basis.tag == "NTH_ROOT_ISWAP" and basis.params[0] == 2:
        return sqiswap_count(G.weyl_coordinates(mat))
    return None


class TranslationSummary(NamedTuple):
    circuit: Circuit | None
    metrics: CircuitMetrics
    modeled_fidelity: float | None
    decomp_fidelity: float


def _translate_counts(blocks: Circuit, basis: G.GateKind,
                      duration: DurationTable | None,
                      fidelity: FidelityModel | None,
                      cfg: OptimizerConfig | None) -> TranslationSummary:
    """Metrics of the translated circuit without synthesizing local gates.

    Produces the same CircuitMetrics as a full translation: each block
    expands into a chain of basis gates on its own pair, so the critical
    path is the block-DAG longest path with per-block counts as weights.
    Synthesis is exact, so decomp_fidelity is reported as 1.0 (a full
    translation reports the measured product, equal within tolerance).
    """
    table = duration or DurationTable.default()
    gate_dur = table.duration(basis)
    n = len(blocks.instructions)
    counts = [0] * n
    basis_gates = 0
    for i, ins in enumerate(blocks.instructions):
        if not ins.is_2q:
            continue
        mat = G.gate_matrix(ins.gate)
        if ins.origin is Origin.ROUTING_SWAP:
            if np.allclose(mat, np.eye(4), atol=1e-12):
                continue
            if np.allclose(mat, _SWAP_MAT, atol=1e-12):
                counts[i] = swap_decomposition(basis).count
                basis_gates += counts[i]
                continue
        k = _block_count_fast(mat, basis)
        if k is None:
            k = _decompose_block(mat, basis, cfg).count
        counts[i] = k
        basis_gates += k
    dag = build_dag(blocks)
    ends = [0] * n
    for i in range(n):
        start = max((ends[p] for p in dag.pred[i]), default=0)
        ends[i] = start + counts[i]
    critical_2q = max(ends, default=0)
    m = CircuitMetrics(basis_gates, int(critical_2q), 0, 0,
                       float(basis_gates * gate_dur))
    modeled = None
    if fidelity is not None:
        per = fidelity.per_gate(basis)
        if per is not None:
            modeled = round(per ** basis_gates, 12)
    return TranslationSummary(None, m, modeled, 1.0)


def _translate(rc: RoutedCircuit, basis: G.GateKind,
               duration: DurationTable | None = None,
               fidelity: FidelityModel | None = None,
               cfg: OptimizerConfig | None = None,
               counts_only: bool = False) -> TranslationSummary:
    blocks = consolidate_2q_blocks(rc.circuit)
    if counts_only:
        return _translate_counts(blocks, basis, duration, fidelity, cfg)
    out = []
    decomp_fid = 1.0
    basis_gates = 0
    for ins in blocks.instructions:
        if not ins.is_2q:
            out.append(Instruction(ins.gate, ins.qubits,
                                   Origin.BASIS_TRANSLATION))
            continue
        mat = G.gate_matrix(ins.gate)
        if ins.origin is Origin.ROUTING_SWAP:
            if np.allclose(mat, np.eye(4), atol=1e-12):
                continue  # swaps cancelled out inside the block
            if np.allclose(mat, _SWAP_MAT, atol=1e-12):
                result = swap_decomposition(basis)
                out.extend(_emit_block(result, ins.qubits,
                                       Origin.ROUTING_SWAP))
                decomp_fid *= result.decomp_fidelity
                basis_gates += result.count
                continue
        result = _decompose_block(mat, basis, cfg)
        out.extend(_emit_block(result, ins.qubits, Origin.BASIS_TRANSLATION))
        decomp_fid *= result.decomp_fidelity
        basis_gates += result.count
    circ = Circuit(rc.circuit.width, out)
    m = metrics(circ, duration)
    modeled = None
    if fidelity is not None:
        per = fidelity.per_gate(basis)
        if per is not None:
            # digits below 1e-12 are synthesis-optimizer noise, and keeping
            # them would let that noise into the persisted records
            modeled = round(decomp_fid * per ** basis_gates, 12)
    return TranslationSummary(circ, m, modeled, decomp_fid)


def basis_translate(rc: RoutedCircuit, basis: G.GateKind,
                    duration: DurationTable | None = None,
                    fidelity: FidelityModel | None = None,
                    cfg: OptimizerConfig | None = None):
    """Rewrite a routed circuit in ``basis``; returns (circuit, metrics)."""
    summary = _translate(rc, basis, duration, fidelity, cfg)
    return summary.circuit, summary.metrics


# ---------------------------------------------------------------------------
# End-to-end pipeline


class PipelineResult(NamedTuple):
    spec: BenchmarkSpec
    graph: CouplingGraph
    basis: G.GateKind
    routed: RoutedCircuit
    routed_metrics: CircuitMetrics
    translated: Circuit | None
    translated_metrics: CircuitMetrics
    modeled_fidelity: float | None
    elapsed_s: float


def run_pipeline(spec: BenchmarkSpec, g: CouplingGraph, basis: G.GateKind,
                 duration: DurationTable | None = None, seed: int = 0,
                 fidelity: FidelityModel | None = None, trials: int = 20,
                 cfg: OptimizerConfig | None = None,
                 synthesis: str = "full") -> PipelineResult:
    """generate → dense_layout → stochastic_route → basis_translate.

    Deterministic for fixed (spec.seed, routing seed). SWAP metrics are read
    off the routed stage (translation dissolves SWAPs into basis gates);
    gate-count and duration metrics come from the translated stage. With
    ``synthesis="counts"`` the translated metrics are computed from
    per-block basis-gate counts and no translated circuit is materialized
    (``translated`` is None) — much faster for metric sweeps.
    """
    if synthesis not in ("full", "counts"):
        raise ValueError(f"unknown synthesis mode: {synthesis!r}")
    t0 = time.perf_counter()
    circ = generate(spec)
    layout = dense_layout(circ, g)
    rc = stochastic_route(circ, g, layout, seed=seed, trials=trials)
    routed_metrics = metrics(rc.circuit, duration)
    summary = _translate(rc, basis, duration, fidelity, cfg,
                         counts_only=(synthesis == "counts"))
    elapsed = time.perf_counter() - t0
    return PipelineResult(spec, g, basis, rc, routed_metrics,
                          summary.circuit, summary.metrics,
                          summary.modeled_fidelity, elapsed)
