"""Deterministic benchmark circuit generators.

Six families, each produced as plain circuit IR from a ``BenchmarkSpec``:
quantum-volume model circuits, the quantum Fourier transform, the CDKM
ripple-carry adder, a QAOA compilation proxy on a random complete graph,
first-order Trotterized 1-D transverse-field Ising evolution, and GHZ state
preparation. Identical specs always produce identical circuits.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import gates as G
from .circuit import Circuit, Instruction
from .errors import InvalidWidth


class Family(enum.Enum):
    QV = "QV"
    QFT = "QFT"
    CDKM_ADDER = "CDKM_ADDER"
    QAOA_PROXY = "QAOA_PROXY"
    HAMSIM = "HAMSIM"
    GHZ = "GHZ"


@dataclass(frozen=True)
class BenchmarkSpec:
    family: Family
    width: int
    seed: int = 0
    trotter_steps: int = 1   # HAMSIM only
    qaoa_layers: int = 1     # QAOA_PROXY only

    def __post_init__(self):
        if isinstance(self.family, str):
            object.__setattr__(self, "family", Family(self.family))
        if self.width < 2:
            raise InvalidWidth("benchmarks need width >= 2")
        if self.family is Family.CDKM_ADDER:
            if self.width < 4 or self.width % 2:
                raise InvalidWidth(
                    "CDKM adder needs width = 2m + 2 with m >= 1")
        if self.trotter_steps < 1 or self.qaoa_layers < 1:
            raise InvalidWidth("repetition counts must be >= 1")


def _qv(width: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(width):
        perm = rng.permutation(width)
        for i in range(0, width - 1, 2):
            block = G.haar_random_unitary(4, rng)
            out.append(Instruction(G.u4(block),
                                   (int(perm[i]), int(perm[i + 1]))))
    return out


def _qft(width: int) -> list:
    out = []
    for j in range(width):
        out.append(Instruction(G.H, (j,)))
        for k in range(j + 1, width):
            out.append(Instruction(G.cp(math.pi / 2 ** (k - j)), (k, j)))
    return out


_T = G.rz(math.pi / 4)
_TDG = G.rz(-math.pi / 4)


def _toffoli(c1: int, c2: int, t: int) -> list:
    """Standard six-CNOT Toffoli expansion (phase gates as RZ, so the whole
    block matches the true Toffoli up to a global phase)."""
    return [
        Instruction(G.H, (t,)),
        Instruction(G.CNOT, (c2, t)),
        Instruction(_TDG, (t,)),
        Instruction(G.CNOT, (c1, t)),
        Instruction(_T, (t,)),
        Instruction(G.CNOT, (c2, t)),
        Instruction(_TDG, (t,)),
        Instruction(G.CNOT, (c1, t)),
        Instruction(_T, (t,)),
        Instruction(_T, (c2,)),
        Instruction(G.H, (t,)),
        Instruction(G.CNOT, (c1, c2)),
        Instruction(_T, (c1,)),
        Instruction(_TDG, (c2,)),
        Instruction(G.CNOT, (c1, c2)),
    ]


def _maj(c: int, b: int, a: int) -> list:
    return [Instruction(G.CNOT, (a, b)),
            Instruction(G.CNOT, (a, c)),
            *_toffoli(c, b, a)]


def _uma(c: int, b: int, a: int) -> list:
    return [*_toffoli(c, b, a),
            Instruction(G.CNOT, (a, c)),
            Instruction(G.CNOT, (c, b))]


def _cdkm(width: int) -> list:
    """Ripple-carry adder on layout [carry-in, a_0..a_{m-1}, b_0..b_{m-1},
    carry-out]: computes b <- a + b, carry-out <- high bit."""
    m = (width - 2) // 2
    cin = 0
    a = [1 + i for i in range(m)]
    b = [1 + m + i for i in range(m)]
    cout = 2 * m + 1
    out = []
    chain = [cin] + a[:-1]
    for i in range(m):
        out.extend(_maj(chain[i], b[i], a[i]))
    out.append(Instruction(G.CNOT, (a[-1], cout)))
    for i in reversed(range(m)):
        out.extend(_uma(chain[i], b[i], a[i]))
    return out


def _qaoa(width: int, seed: int, layers: int) -> list:
    rng = np.random.default_rng(seed)
    gamma = 1.0
    beta = 1.0
    weights = {}
    for i in range(width):
        for j in range(i + 1, width):
            weights[(i, j)] = 1.0 if rng.integers(0, 2) else -1.0
    out = []
    for _ in range(layers):
        for (i, j), w in weights.items():
            out.append(Instruction(G.rzz(gamma * w), (i, j)))
        for q in range(width):
            out.append(Instruction(G.rx(beta), (q,)))
    return out


def _hamsim(width: int, steps: int) -> list:
    j_dt = 0.3
    h_dt = 0.2
    out = []
    for _ in range(steps):
        for q in range(width - 1):
            out.append(Instruction(G.rzz(2 * j_dt), (q, q + 1)))
        for q in range(width):
            out.append(Instruction(G.rx(2 * h_dt), (q,)))
    return out


def _ghz(width: int) -> list:
    out = [Instruction(G.H, (0,))]
    for q in range(width - 1):
        out.append(Instruction(G.CNOT, (q, q + 1)))
    return out


def generate(spec: BenchmarkSpec) -> Circuit:
    """Build the benchmark circuit for ``spec`` (deterministic per seed)."""
    f = spec.family
    if f is Family.QV:
        ins = _qv(spec.width, spec.seed)
    elif f is Family.QFT:
        ins = _qft(spec.width)
    elif f is Family.CDKM_ADDER:
        ins = _cdkm(spec.width)
    elif f is Family.QAOA_PROXY:
        ins = _qaoa(spec.width, spec.seed, spec.qaoa_layers)
    elif f is Family.HAMSIM:
        ins = _hamsim(spec.width, spec.trotter_steps)
    elif f is Family.GHZ:
        ins = _ghz(spec.width)
    else:  # pragma: no cover - enum is exhaustive
        raise InvalidWidth(f"unknown family {f}")
    return Circuit(spec.width, ins)
