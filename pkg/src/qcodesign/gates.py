"""Gate matrices, Haar sampling, fidelity measures, and canonical coordinates.

This module owns the 2x2/4x4 complex linear algebra the rest of the toolkit
builds on: the named gate set, tensor/matrix composition, the
Hilbert-Schmidt fidelity measure, Haar-random sampling, and the magic-basis
machinery that maps any two-qubit unitary to canonical (Weyl-chamber)
interaction coordinates with explicit single-qubit dressing factors.

Conventions
-----------
* Qubit 0 is the most-significant tensor factor: ``kron(a, b)`` applies ``a``
  to qubit 0 and ``b`` to qubit 1.
* The canonical interaction is ``exp(i(x XX + y YY + z ZZ))`` and the chamber
  normal form is ``pi/4 >= x >= y >= |z|`` with ``z >= 0`` enforced whenever
  ``x = pi/4``.
* All equality is modulo global phase unless stated otherwise.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import NumericalInstability

# ---------------------------------------------------------------------------
# Primitive matrices

ID2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

UNITARY_ATOL = 1e-10


def is_unitary(m: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    """True if ``m`` is unitary within entry-wise tolerance ``atol``."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0]))) <= atol)


# ---------------------------------------------------------------------------
# Gate kinds

_ONE_QUBIT_TAGS = {"H", "X", "SX", "S", "SDG", "RZ", "U3", "RX", "U2"}
_TWO_QUBIT_TAGS = {
    "CNOT", "SWAP", "ISWAP", "NTH_ROOT_ISWAP", "FSIM", "SYC", "ZX",
    "CP", "RZZ", "U4",
}


@dataclass(frozen=True)
class GateKind:
    """A named gate with parameters; hashable so it can key duration tables.

    ``U4`` carries its full 4x4 unitary as 32 floats (row-major, re/im
    interleaved); every other tag stores angles or integer roots.
    """

    tag: str
    params: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.tag not in _ONE_QUBIT_TAGS and self.tag not in _TWO_QUBIT_TAGS:
            raise ValueError(f"unknown gate tag {self.tag!r}")
        if self.tag == "NTH_ROOT_ISWAP":
            n = self.params[0]
            if not (isinstance(n, int) and n >= 1):
                raise ValueError("NTH_ROOT_ISWAP requires integer n >= 1")
        object.__setattr__(self, "params", tuple(self.params))

    @property
    def arity(self) -> int:
        return 1 if self.tag in _ONE_QUBIT_TAGS else 2

    def __str__(self) -> str:
        if not self.params:
            return self.tag
        inner = ",".join(repr(p) for p in self.params)
        return f"{self.tag}({inner})"


# Parameterless singletons.
CNOT = GateKind("CNOT")
SWAP = GateKind("SWAP")
ISWAP = GateKind("ISWAP")
SYC = GateKind("SYC")
H = GateKind("H")
X = GateKind("X")
SX = GateKind("SX")
S = GateKind("S")
SDG = GateKind("SDG")


def nth_root_iswap(n: int) -> GateKind:
    return GateKind("NTH_ROOT_ISWAP", (int(n),))


def fsim(theta: float, phi: float) -> GateKind:
    return GateKind("FSIM", (float(theta), float(phi)))


def zx(theta: float) -> GateKind:
    return GateKind("ZX", (float(theta),))


def u3(theta: float, phi: float, lam: float) -> GateKind:
    return GateKind("U3", (float(theta), float(phi), float(lam)))


def rz(lam: float) -> GateKind:
    return GateKind("RZ", (float(lam),))


def rx(theta: float) -> GateKind:
    return GateKind("RX", (float(theta),))


def cp(lam: float) -> GateKind:
    """Controlled phase: diag(1, 1, 1, e^{i lam})."""
    return GateKind("CP", (float(lam),))


def rzz(theta: float) -> GateKind:
    """Ising coupling exp(-i theta/2 Z x Z)."""
    return GateKind("RZZ", (float(theta),))


def _flatten_matrix(matrix: np.ndarray, dim: int) -> tuple:
    m = np.asarray(matrix, dtype=complex).reshape(dim, dim)
    flat = []
    for v in m.ravel():
        flat.append(float(v.real))
        flat.append(float(v.imag))
    return tuple(flat)


def u4(matrix: np.ndarray) -> GateKind:
    """An explicit two-qubit unitary payload (used for consolidated blocks)."""
    return GateKind("U4", _flatten_matrix(matrix, 4))


def u2(matrix: np.ndarray) -> GateKind:
    """An explicit single-qubit unitary payload."""
    return GateKind("U2", _flatten_matrix(matrix, 2))


def _unflatten_matrix(kind: GateKind, dim: int) -> np.ndarray:
    flat = np.asarray(kind.params, dtype=float)
    return (flat[0::2] + 1j * flat[1::2]).reshape(dim, dim)


def u4_matrix(kind: GateKind) -> np.ndarray:
    if kind.tag != "U4":
        raise ValueError("not a U4 gate")
    return _unflatten_matrix(kind, 4)


SQISWAP = nth_root_iswap(2)


def gate_matrix(kind: GateKind) -> np.ndarray:
    """The exact matrix of ``kind`` (2x2 for 1Q tags, 4x4 for 2Q tags)."""
    t = kind.tag
    p = kind.params
    if t == "CNOT":
        return np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
            dtype=complex)
    if t == "SWAP":
        return np.array(
            [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
            dtype=complex)
    if t == "ISWAP":
        return gate_matrix(nth_root_iswap(1))
    if t == "NTH_ROOT_ISWAP":
        a = math.pi / (2 * p[0])
        c, s = math.cos(a), math.sin(a)
        return np.array(
            [[1, 0, 0, 0],
             [0, c, 1j * s, 0],
             [0, 1j * s, c, 0],
             [0, 0, 0, 1]], dtype=complex)
    if t == "FSIM":
        th, ph = p
        c, s = math.cos(th), math.sin(th)
        return np.array(
            [[1, 0, 0, 0],
             [0, c, -1j * s, 0],
             [0, -1j * s, c, 0],
             [0, 0, 0, cmath.exp(-1j * ph)]], dtype=complex)
    if t == "SYC":
        return gate_matrix(fsim(math.pi / 2, math.pi / 6))
    if t == "ZX":
        c, s = math.cos(p[0] / 2), math.sin(p[0] / 2)
        return np.array(
            [[c, 0, -1j * s, 0],
             [0, c, 0, 1j * s],
             [-1j * s, 0, c, 0],
             [0, 1j * s, 0, c]], dtype=complex)
    if t == "CP":
        return np.diag([1, 1, 1, cmath.exp(1j * p[0])]).astype(complex)
    if t == "RZZ":
        e = cmath.exp(-1j * p[0] / 2)
        return np.diag([e, e.conjugate(), e.conjugate(), e]).astype(complex)
    if t == "U4":
        return _unflatten_matrix(kind, 4)
    if t == "U2":
        return _unflatten_matrix(kind, 2)
    if t == "H":
        return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    if t == "X":
        return PAULI_X.copy()
    if t == "SX":
        return np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]],
                        dtype=complex) / 2
    if t == "S":
        return np.diag([1, 1j]).astype(complex)
    if t == "SDG":
        return np.diag([1, -1j]).astype(complex)
    if t == "RZ":
        e = cmath.exp(-1j * p[0] / 2)
        return np.diag([e, e.conjugate()]).astype(complex)
    if t == "RX":
        c, s = math.cos(p[0] / 2), math.sin(p[0] / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if t == "U3":
        th, ph, lam = p
        c, s = math.cos(th / 2), math.sin(th / 2)
        return np.array(
            [[c, -cmath.exp(1j * lam) * s],
             [cmath.exp(1j * ph) * s, cmath.exp(1j * (ph + lam)) * c]],
            dtype=complex)
    raise ValueError(f"unknown gate tag {t!r}")


# ---------------------------------------------------------------------------
# Composition and fidelity

def compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product ``a @ b`` (apply ``b`` first)."""
    return np.asarray(a) @ np.asarray(b)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product; ``a`` acts on qubit 0, ``b`` on qubit 1."""
    return np.kron(np.asarray(a), np.asarray(b))


def hilbert_schmidt_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """|Tr(U† V)|² / d² — global-phase-invariant process fidelity."""
    u = np.asarray(u)
    v = np.asarray(v)
    d = u.shape[0]
    t = np.trace(u.conj().T @ v)
    return float(abs(t) ** 2 / d ** 2)


def phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Max-abs entry difference between ``u`` and ``v`` after aligning the
    global phase of ``v`` to ``u`` (0 iff equal up to global phase)."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    t = np.trace(u.conj().T @ v)
    if abs(t) < 1e-12:
        return float(np.max(np.abs(u - v)))
    return float(np.max(np.abs(u - v * (t.conjugate() / abs(t)))))


# ---------------------------------------------------------------------------
# Haar sampling

def haar_random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a Ginibre matrix (with the phase
    correction that makes the distribution exactly invariant)."""
    z = (rng.standard_normal((dim, dim))
         + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def haar_random_2q(seed: int) -> np.ndarray:
    """Deterministic Haar-random 4x4 unitary for the given seed."""
    return haar_random_unitary(4, np.random.default_rng(seed))


# ---------------------------------------------------------------------------
# Magic-basis machinery

# The magic basis maps SU(2)xSU(2) to SO(4); B columns are the Bell-like
# states. GAMMA maps the magic-spectrum angles to (global, x, y, z).
MAGIC_B = np.array(
    [[1, 0, 0, 1j],
     [0, 1j, 1, 0],
     [0, 1j, -1, 0],
     [1, 0, 0, -1j]], dtype=complex) * math.sqrt(0.5)
_MAGIC_BD = MAGIC_B.conj().T

_GAMMA = np.array(
    [[1, 1, 1, 1],
     [1, 1, -1, -1],
     [-1, 1, -1, 1],
     [1, -1, -1, 1]], dtype=float) / 4


class CanonicalCoords(NamedTuple):
    """Weyl-chamber interaction coefficients of a two-qubit unitary."""

    x: float
    y: float
    z: float


def canonical_matrix(x: float, y: float, z: float) -> np.ndarray:
    """``exp(i (x XX + y YY + z ZZ))`` via its magic-basis diagonal form."""
    theta = np.array([x - y + z, x + y - z, -x - y - z, -x + y + z])
    return (MAGIC_B * np.exp(1j * theta)) @ _MAGIC_BD


def _simultaneous_diagonalize(p: np.ndarray, tol: float = 1e-8):
    """Orthogonally diagonalize the commuting pair (Re p, Im p) for a complex
    symmetric unitary ``p``; returns (q, eigenvalues of p)."""
    re, im = p.real, p.imag
    w, vecs = np.linalg.eigh(re)
    q = vecs.copy()
    i = 0
    n = len(w)
    while i < n:
        j = i + 1
        while j < n and abs(w[j] - w[i]) <= tol:
            j += 1
        if j - i > 1:
            # Repeated eigenvalue of Re p: rotate within the eigenspace to
            # diagonalize Im p there as well.
            blk = q[:, i:j]
            sub = blk.T @ im @ blk
            _, rot = np.linalg.eigh(0.5 * (sub + sub.T))
            q[:, i:j] = blk @ rot
        i = j
    lam = np.diagonal(q.T @ p @ q).copy()
    return q, lam


def kron_factor(m: np.ndarray):
    """Factor ``m = g * kron(a, b)`` with det(a) = det(b) = 1.

    Returns (g, a, b, residual); residual is the max-abs reconstruction
    error and is only small when ``m`` really is a tensor product.
    """
    m = np.asarray(m, dtype=complex)
    a = np.zeros((2, 2), dtype=complex)
    b = np.zeros((2, 2), dtype=complex)
    r, c = divmod(int(np.argmax(np.abs(m))), 4)
    ar, ac, br, bc = r >> 1, c >> 1, r & 1, c & 1
    for i in range(2):
        for j in range(2):
            a[i, j] = m[(i << 1) | br, (j << 1) | bc]
            b[i, j] = m[(ar << 1) | i, (ac << 1) | j]
    da = np.linalg.det(a)
    db = np.linalg.det(b)
    if abs(da) < 1e-300 or abs(db) < 1e-300:
        raise NumericalInstability("kron factor is singular")
    a /= np.sqrt(da)
    b /= np.sqrt(db)
    g = m[r, c] / (a[ar, ac] * b[br, bc])
    residual = float(np.max(np.abs(m - g * np.kron(a, b))))
    return g, a, b, residual


def _kak_raw(u: np.ndarray):
    """Raw (un-canonicalized) KAK factorization.

    Returns (g, a1, b1, coords, a2, b2) with
    ``u = g * kron(a1, b1) @ canonical_matrix(*coords) @ kron(a2, b2)``.
    """
    u = np.asarray(u, dtype=complex)
    det = np.linalg.det(u)
    if abs(det) < 1e-300:
        raise NumericalInstability("input is singular")
    usu = u / det ** 0.25
    m = _MAGIC_BD @ usu @ MAGIC_B
    p = m.T @ m
    try:
        q, lam = _simultaneous_diagonalize(p)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise NumericalInstability("eigen-decomposition failed") from exc
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    theta = np.angle(lam) / 2.0
    k1 = m @ q @ np.diag(np.exp(-1j * theta))
    if np.linalg.det(k1).real < 0:
        theta[0] += math.pi
        k1 = m @ q @ np.diag(np.exp(-1j * theta))
    w, x, y, z = _GAMMA @ theta
    gl, a1, b1, r1 = kron_factor(MAGIC_B @ k1.real @ _MAGIC_BD)
    gr, a2, b2, r2 = kron_factor(MAGIC_B @ q.T @ _MAGIC_BD)
    if max(r1, r2) > 1e-6:
        raise NumericalInstability(
            f"local factors are not tensor products (residual {max(r1, r2):.2e})")
    g = det ** 0.25 * cmath.exp(1j * w) * gl * gr
    return g, a1, b1, np.array([x, y, z]), a2, b2


# Special unitaries that flip one interaction axis (i * Pauli)...
_FLIPPERS = [1j * PAULI_X, 1j * PAULI_Y, 1j * PAULI_Z]
# ...and that swap the roles of the *other two* axes.
_SWAPPERS = [
    np.array([[1, -1j], [1j, -1]]) * 1j * math.sqrt(0.5),   # swaps Y,Z
    np.array([[1, 1], [1, -1]]) * 1j * math.sqrt(0.5),      # swaps X,Z
    np.array([[0, 1 - 1j], [1 + 1j, 0]]) * 1j * math.sqrt(0.5),  # swaps X,Y
]


def canonicalize_coords(x: float, y: float, z: float, atol: float = 1e-9):
    """Map raw interaction coefficients into the Weyl chamber.

    Returns (phase, (l1, l2), CanonicalCoords, (r1, r2)) such that

        canonical_matrix(x, y, z)
            = phase * kron(l1, l2) @ canonical_matrix(*coords) @ kron(r1, r2)

    and the output coords satisfy pi/4 >= x >= y >= |z| with z >= 0 whenever
    x is within ``atol`` of pi/4.

    Axis shifts move strength by pi/2 (absorbed by local flips and global
    phase), pair negations conjugate by the third axis' flipper, and sorting
    conjugates by axis swappers.
    """
    phase = [complex(1)]
    left = [ID2.copy(), ID2.copy()]
    right = [ID2.copy(), ID2.copy()]
    v = [float(x), float(y), float(z)]

    def shift(k, step):
        v[k] += step * math.pi / 2
        phase[0] *= 1j ** step
        f = np.linalg.matrix_power(_FLIPPERS[k], step % 4)
        right[0] = f @ right[0]
        right[1] = f @ right[1]

    def negate(k1, k2):
        v[k1] *= -1
        v[k2] *= -1
        phase[0] *= -1
        s = _FLIPPERS[3 - k1 - k2]
        left[1] = left[1] @ s
        right[1] = s @ right[1]

    def swap_axes(k1, k2):
        v[k1], v[k2] = v[k2], v[k1]
        s = _SWAPPERS[3 - k1 - k2]
        left[0] = left[0] @ s
        left[1] = left[1] @ s
        right[0] = s @ right[0]
        right[1] = s @ right[1]

    def canonical_shift(k):
        while v[k] <= -math.pi / 4:
            shift(k, +1)
        while v[k] > math.pi / 4:
            shift(k, -1)

    for k in range(3):
        canonical_shift(k)
    if abs(v[0]) < abs(v[1]):
        swap_axes(0, 1)
    if abs(v[1]) < abs(v[2]):
        swap_axes(1, 2)
    if abs(v[0]) < abs(v[1]):
        swap_axes(0, 1)
    if v[0] < 0:
        negate(0, 2)
    if v[1] < 0:
        negate(1, 2)
    canonical_shift(2)
    if v[0] > math.pi / 4 - atol and v[2] < 0:
        shift(0, -1)
        negate(0, 2)

    coords = CanonicalCoords(v[0], v[1], v[2])
    return phase[0], (left[0], left[1]), coords, (right[0], right[1])


def kak_terms(u: np.ndarray, atol: float = 1e-9):
    """Full canonical KAK factorization.

    Returns (g, k1, k2, k3, k4, coords) such that

        u = g * kron(k1, k2) @ canonical_matrix(*coords) @ kron(k3, k4)

    with ``coords`` in the Weyl chamber. Raises NumericalInstability if the
    reconstruction drifts beyond 1e-6 (which signals an internal bug, not a
    property of the input).
    """
    g, a1, b1, raw, a2, b2 = _kak_raw(u)
    phase, (l1, l2), coords, (r1, r2) = canonicalize_coords(*raw, atol=atol)
    k1 = a1 @ l1
    k2 = b1 @ l2
    k3 = r1 @ a2
    k4 = r2 @ b2
    gg = g * phase
    recon = gg * np.kron(k1, k2) @ canonical_matrix(*coords) @ np.kron(k3, k4)
    if np.max(np.abs(recon - u)) > 1e-6:
        raise NumericalInstability(
            f"KAK reconstruction drift {np.max(np.abs(recon - u)):.2e}")
    return gg, k1, k2, k3, k4, coords


def weyl_coordinates(u: np.ndarray) -> CanonicalCoords:
    """Canonical (Weyl-chamber) coordinates of a two-qubit unitary."""
    return kak_terms(u)[5]


def in_weyl_chamber(coords: CanonicalCoords, atol: float = 1e-9) -> bool:
    """Chamber membership test for the convention used across this package."""
    x, y, z = coords
    ok = (x <= math.pi / 4 + atol and x >= y - atol and y >= abs(z) - atol
          and y >= -atol)
    if x >= math.pi / 4 - atol:
        ok = ok and z >= -atol
    return bool(ok)
