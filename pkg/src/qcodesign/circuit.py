"""Circuit intermediate representation: instructions, DAG, metrics, blocks.

A ``Circuit`` is an immutable ordered list of ``Instruction`` objects over a
fixed qubit width. Each instruction records its *origin* — written by the
algorithm generator, inserted by the router as a SWAP, or emitted by basis
translation — so gate and SWAP accounting stay separable through the whole
pipeline.

Metrics conventions:

* ``total_2q`` counts every two-qubit instruction; ``total_swaps`` counts
  literal SWAP gates inserted by routing (so it matches the router's own
  tally on routed circuits and is zero after basis translation).
* ``critical_2q`` / ``critical_swaps`` are longest dependency-chain weights
  with per-gate weight 1 for the counted class and 0 otherwise. An optional
  mode instead counts the SWAPs lying on one maximal 2Q chain.
* ``weighted_duration`` is the sum of per-gate durations (single-qubit
  gates take zero time): the aggregate gate-time cost of the circuit.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import gates as G
from .errors import TooManyQubits


class Origin(enum.Enum):
    ALGORITHM = "ALGORITHM"
    ROUTING_SWAP = "ROUTING_SWAP"
    BASIS_TRANSLATION = "BASIS_TRANSLATION"


@dataclass(frozen=True)
class Instruction:
    gate: G.GateKind
    qubits: tuple
    origin: Origin = Origin.ALGORITHM

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"duplicate qubits in {self.qubits}")
        if len(self.qubits) != self.gate.arity:
            raise ValueError(
                f"{self.gate} expects {self.gate.arity} qubits, "
                f"got {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ValueError("negative qubit index")

    @property
    def is_2q(self) -> bool:
        return self.gate.arity == 2

    @property
    def is_routing_swap(self) -> bool:
        return self.origin is Origin.ROUTING_SWAP and self.gate.tag == "SWAP"


@dataclass(frozen=True)
class Circuit:
    width: int
    instructions: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        if self.width < 1:
            raise ValueError("width must be positive")
        for ins in self.instructions:
            if any(q >= self.width for q in ins.qubits):
                raise ValueError(
                    f"instruction {ins} exceeds width {self.width}")

    def __len__(self):
        return len(self.instructions)


# ---------------------------------------------------------------------------
# Durations


@dataclass(frozen=True)
class DurationTable:
    """Per-gate-kind durations in abstract time units.

    Single-qubit gates always take zero time. iSWAP roots scale as
    iswap_duration / n and ZX(θ) as θ/(π/2) clamped at zero; other
    two-qubit kinds fall back to an exact entry and then ``default_2q``.
    """

    entries: dict = field(default_factory=dict, compare=False)
    default_2q: float = 1.0

    def __post_init__(self):
        for kind, dur in self.entries.items():
            if dur < 0:
                raise ValueError(f"negative duration for {kind}")
        if self.default_2q < 0:
            raise ValueError("negative default duration")

    @classmethod
    def default(cls) -> "DurationTable":
        # SWAP is priced at its three-CNOT translation cost so routed and
        # translated circuits weigh comparably under the default table.
        return cls(entries={G.CNOT: 1.0, G.SYC: 1.0, G.ISWAP: 1.0,
                            G.SWAP: 3.0})

    def duration(self, kind: G.GateKind) -> float:
        if kind.arity == 1:
            return 0.0
        if kind in self.entries:
            return float(self.entries[kind])
        if kind.tag == "NTH_ROOT_ISWAP":
            base = float(self.entries.get(G.ISWAP, 1.0))
            return base / kind.params[0]
        if kind.tag == "ZX":
            return max(0.0, kind.params[0] / (math.pi / 2))
        return float(self.default_2q)


class CircuitMetrics(NamedTuple):
    total_2q: int
    critical_2q: int
    total_swaps: int
    critical_swaps: int
    weighted_duration: float


# ---------------------------------------------------------------------------
# Dependency DAG and metrics


class Dag(NamedTuple):
    succ: tuple  # successor index tuples, one per instruction
    pred: tuple  # predecessor index tuples


def build_dag(c: Circuit) -> Dag:
    """Edges i -> j iff j is the next instruction sharing a qubit with i."""
    n = len(c.instructions)
    succ = [set() for _ in range(n)]
    pred = [set() for _ in range(n)]
    last = {}
    for i, ins in enumerate(c.instructions):
        for q in ins.qubits:
            j = last.get(q)
            if j is not None:
                succ[j].add(i)
                pred[i].add(j)
            last[q] = i
    return Dag(tuple(tuple(sorted(s)) for s in succ),
               tuple(tuple(sorted(p)) for p in pred))


def _longest_path(c: Circuit, dag: Dag, weight) -> float:
    best = 0.0
    ends = [0.0] * len(c.instructions)
    for i, ins in enumerate(c.instructions):
        start = max((ends[p] for p in dag.pred[i]), default=0.0)
        ends[i] = start + weight(ins)
        if ends[i] > best:
            best = ends[i]
    return best


def _swaps_on_2q_chain(c: Circuit, dag: Dag) -> int:
    """SWAP count along one maximal 2Q dependency chain (ties resolved
    toward the earliest predecessor)."""
    n = len(c.instructions)
    if n == 0:
        return 0
    ends = [0] * n
    for i, ins in enumerate(c.instructions):
        start = max((ends[p] for p in dag.pred[i]), default=0)
        ends[i] = start + (1 if ins.is_2q else 0)
    i = max(range(n), key=lambda j: (ends[j], -j))
    swaps = 0
    while True:
        if c.instructions[i].is_routing_swap:
            swaps += 1
        preds = dag.pred[i]
        if not preds:
            return swaps
        i = min(preds, key=lambda p: (-ends[p], p))


def metrics(c: Circuit, table: DurationTable | None = None,
            critical_swaps_on_2q_path: bool = False) -> CircuitMetrics:
    table = table or DurationTable.default()
    dag = build_dag(c)
    total_2q = sum(1 for ins in c.instructions if ins.is_2q)
    total_swaps = sum(1 for ins in c.instructions if ins.is_routing_swap)
    weighted = sum(table.duration(ins.gate) for ins in c.instructions)
    critical_2q = int(_longest_path(c, dag, lambda i: 1 if i.is_2q else 0))
    if critical_swaps_on_2q_path:
        critical_swaps = _swaps_on_2q_chain(c, dag)
    else:
        critical_swaps = int(_longest_path(
            c, dag, lambda i: 1 if i.is_routing_swap else 0))
    return CircuitMetrics(total_2q, critical_2q, total_swaps,
                          critical_swaps, float(weighted))


# ---------------------------------------------------------------------------
# 2Q-block consolidation


def _oriented_2q_matrix(ins: Instruction) -> np.ndarray:
    """Instruction matrix re-expressed on its sorted qubit pair."""
    m = G.gate_matrix(ins.gate)
    if ins.qubits[0] < ins.qubits[1]:
        return m
    swap = G.gate_matrix(G.SWAP)
    return swap @ m @ swap


class _OpenBlock:
    __slots__ = ("pair", "matrix", "origins")

    def __init__(self, pair, matrix, origins):
        self.pair = pair
        self.matrix = matrix
        self.origins = origins


def consolidate_2q_blocks(c: Circuit) -> Circuit:
    """Collapse maximal same-pair gate runs into single 4x4 blocks.

    Returns an equivalent circuit consisting of U4 block instructions plus
    unabsorbed single-qubit remnants (as U2). Single-qubit gates attach to
    the enclosing or next block on their qubit; a block built purely from
    routing SWAPs keeps the ROUTING_SWAP origin so translation can treat it
    specially.
    """
    pending = {}        # qubit -> accumulated 2x2 matrix
    open_by_qubit = {}  # qubit -> _OpenBlock
    out = []

    def close(block):
        for q in block.pair:
            del open_by_qubit[q]
        origin = (Origin.ROUTING_SWAP
                  if block.origins == {Origin.ROUTING_SWAP}
                  else Origin.ALGORITHM)
        out.append(Instruction(G.u4(block.matrix), block.pair, origin))

    for ins in c.instructions:
        if ins.gate.arity == 1:
            q = ins.qubits[0]
            m = G.gate_matrix(ins.gate)
            blk = open_by_qubit.get(q)
            if blk is not None:
                lift = (np.kron(m, G.ID2) if q == blk.pair[0]
                        else np.kron(G.ID2, m))
                blk.matrix = lift @ blk.matrix
                blk.origins.add(ins.origin)
            else:
                pending[q] = m @ pending.get(q, G.ID2)
            continue
        a, b = ins.qubits
        pair = (min(a, b), max(a, b))
        blk = open_by_qubit.get(pair[0])
        if blk is not None and blk.pair == pair \
                and open_by_qubit.get(pair[1]) is blk:
            blk.matrix = _oriented_2q_matrix(ins) @ blk.matrix
            blk.origins.add(ins.origin)
            continue
        for q in pair:
            other = open_by_qubit.get(q)
            if other is not None:
                close(other)
        start = np.kron(pending.pop(pair[0], G.ID2),
                        pending.pop(pair[1], G.ID2))
        blk = _OpenBlock(pair, _oriented_2q_matrix(ins) @ start,
                         {ins.origin})
        open_by_qubit[pair[0]] = blk
        open_by_qubit[pair[1]] = blk
    for blk in list(dict.fromkeys(open_by_qubit.values())):
        close(blk)
    for q in sorted(pending):
        out.append(Instruction(G.u2(pending[q]), (q,)))
    return Circuit(c.width, out)


# ---------------------------------------------------------------------------
# Small-width brute-force simulator (testing oracle)

_SIM_CAP = 10


def _embed(gmat: np.ndarray, qubits, width: int) -> np.ndarray:
    """Expand a 1Q/2Q gate matrix to the full 2^width operator (qubit 0 is
    the most significant factor)."""
    others = [q for q in range(width) if q not in qubits]
    perm = list(qubits) + others
    big = np.kron(gmat, np.eye(2 ** len(others), dtype=complex))
    idx = np.zeros(2 ** width, dtype=np.int64)
    for i in range(2 ** width):
        j = 0
        for t, q in enumerate(perm):
            bit = (i >> (width - 1 - q)) & 1
            j |= bit << (width - 1 - t)
        idx[i] = j
    return big[np.ix_(idx, idx)]


def simulate(c: Circuit) -> np.ndarray:
    """Exact full unitary of the circuit; widths above 10 are refused."""
    if c.width > _SIM_CAP:
        raise TooManyQubits(
            f"brute-force simulation capped at {_SIM_CAP} qubits")
    u = np.eye(2 ** c.width, dtype=complex)
    for ins in c.instructions:
        u = _embed(G.gate_matrix(ins.gate), ins.qubits, c.width) @ u
    return u


# ---------------------------------------------------------------------------
# Text serialization

_LINE_RE = re.compile(
    r"^(?P<tag>[A-Z][A-Z0-9_]*)(\((?P<params>[^)]*)\))?"
    r"(?P<qubits>(\s+\d+)+?)(\s+(?P<origin>[A-Z_]+))?$")


def instruction_to_line(ins: Instruction) -> str:
    parts = [str(ins.gate)] + [str(q) for q in ins.qubits]
    if ins.origin is not Origin.ALGORITHM:
        parts.append(ins.origin.value)
    return " ".join(parts)


def circuit_to_text(c: Circuit) -> str:
    lines = [f"width {c.width}"]
    lines.extend(instruction_to_line(ins) for ins in c.instructions)
    return "\n".join(lines) + "\n"


def _parse_param(tok: str):
    tok = tok.strip()
    try:
        return int(tok)
    except ValueError:
        return float(tok)


def parse_circuit(text: str) -> Circuit:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("width "):
        raise ValueError("circuit text must start with 'width <n>'")
    width = int(lines[0].split()[1])
    origin_names = {o.value for o in Origin}
    instructions = []
    for ln in lines[1:]:
        m = _LINE_RE.match(ln)
        if not m:
            raise ValueError(f"malformed instruction line: {ln!r}")
        params = ()
        if m.group("params") is not None and m.group("params") != "":
            params = tuple(_parse_param(t)
                           for t in m.group("params").split(","))
        origin = Origin.ALGORITHM
        if m.group("origin"):
            name = m.group("origin")
            if name not in origin_names:
                raise ValueError(f"unknown origin {name!r} in {ln!r}")
            origin = Origin(name)
        qubits = tuple(int(t) for t in m.group("qubits").split())
        instructions.append(
            Instruction(G.GateKind(m.group("tag"), params), qubits, origin))
    return Circuit(width, instructions)
