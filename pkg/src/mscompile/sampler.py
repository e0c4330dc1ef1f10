"""Benchmark target generation: Haar-random unitaries and random Cliffords.

Randomness flows through RandomStream, a thin seeded wrapper whose child
streams are derived from the parent key, so any sampling layout is
reproducible from one integer.  The Clifford sampler is a random walk over
matrix generators; membership is verified by conjugating the single-qubit
Pauli generators and testing that the images stay in the Pauli group.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

_ALGORITHM = "pcg64"


class RandomStream:
    """Deterministic, forkable source of randomness.

    A stream is single-owner: drawing advances its state.  child(k) derives
    an independent stream from (key..., k) without touching the parent, so
    concurrent consumers can each own a fork.
    """

    def __init__(self, seed) -> None:
        if isinstance(seed, (int, np.integer)):
            key = (int(seed),)
        else:
            key = tuple(int(k) for k in seed)
        if not key or any(k < 0 for k in key):
            raise ValueError("seed must be a nonnegative integer or a tuple of them")
        self.key = key
        self.algorithm = _ALGORITHM
        self.rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(key))))

    @property
    def seed(self) -> int:
        return self.key[0]

    def child(self, index: int) -> "RandomStream":
        return RandomStream(self.key + (int(index),))

    def __repr__(self) -> str:
        return f"RandomStream(key={self.key}, algorithm={self.algorithm!r})"


def haar_unitary(dim: int, stream: RandomStream) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix.

    The R-diagonal phases are folded back into Q; without that correction
    the QR factorization is biased.
    """
    if dim < 1:
        raise ValueError("dim must be at least 1")
    g = stream.rng.normal(size=(dim, dim)) + 1j * stream.rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g / math.sqrt(2.0))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


# ---------------------------------------------------------------------------
# Clifford walk
# ---------------------------------------------------------------------------

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2.0)
_PHASE_S = np.diag([1.0, 1.0j])


def _embed_single(op: np.ndarray, qubit: int, n: int) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for q in range(1, n + 1):
        out = np.kron(op if q == qubit else np.eye(2, dtype=complex), out)
    return out


def _cz_matrix(i: int, j: int, n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    both = ((idx >> (i - 1)) & 1) & ((idx >> (j - 1)) & 1)
    return np.diag(1.0 - 2.0 * both).astype(complex)


@lru_cache(maxsize=None)
def clifford_generators(n_qubits: int) -> tuple[tuple[str, np.ndarray], ...]:
    """Walk generator set: a Hadamard and phase gate per qubit, CZ per pair."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be positive")
    gens: list[tuple[str, np.ndarray]] = []
    for q in range(1, n_qubits + 1):
        gens.append((f"H{q}", _embed_single(_HADAMARD, q, n_qubits)))
        gens.append((f"S{q}", _embed_single(_PHASE_S, q, n_qubits)))
    for i in range(1, n_qubits + 1):
        for j in range(i + 1, n_qubits + 1):
            gens.append((f"CZ{i}{j}", _cz_matrix(i, j, n_qubits)))
    for _, m in gens:
        m.setflags(write=False)
    return tuple(gens)


def default_walk_steps(n_qubits: int) -> int:
    return 10 * n_qubits**8


def random_clifford(n_qubits: int, steps: int | None = None, stream: RandomStream | None = None) -> np.ndarray:
    """Product of uniformly drawn generators; long walks approach uniformity."""
    if stream is None:
        raise ValueError("a RandomStream is required")
    if steps is None:
        steps = default_walk_steps(n_qubits)
    if steps < 1:
        raise ValueError("steps must be at least 1")
    gens = clifford_generators(n_qubits)
    picks = stream.rng.integers(len(gens), size=steps)
    u = np.eye(1 << n_qubits, dtype=complex)
    for k in picks:
        u = gens[k][1] @ u
    return u


# ---------------------------------------------------------------------------
# membership check
# ---------------------------------------------------------------------------

_PAULIS_1Q = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.diag([1.0, -1.0]).astype(complex),
)


@lru_cache(maxsize=None)
def _pauli_strings(n: int) -> np.ndarray:
    """All 4^n Pauli tensor products, stacked."""
    strings = np.eye(1, dtype=complex)[None, :, :]
    for _ in range(n):
        strings = np.stack(
            [np.kron(p, s) for s in strings for p in _PAULIS_1Q]
        )
    strings.setflags(write=False)
    return strings


_PHASES = np.array([1.0, 1.0j, -1.0, -1.0j])


def _in_pauli_group(q: np.ndarray, n: int, tol: float) -> bool:
    d = 1 << n
    coeffs = np.einsum("sij,ij->s", _pauli_strings(n).conj(), q) / d
    best = int(np.argmax(np.abs(coeffs)))
    return bool(np.min(np.abs(coeffs[best] - _PHASES)) < tol)


def is_clifford(u: np.ndarray, tol: float = 1e-8) -> bool:
    """True when conjugation maps every Pauli generator into the Pauli group."""
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    n = d.bit_length() - 1
    if u.shape != (d, d) or d != 1 << n:
        return False
    if np.max(np.abs(u.conj().T @ u - np.eye(d))) > tol:
        return False
    uh = u.conj().T
    for q in range(1, n + 1):
        for p in (_PAULIS_1Q[1], _PAULIS_1Q[3]):  # X and Z generate the rest
            image = u @ _embed_single(p, q, n) @ uh
            if not _in_pauli_group(image, n, tol):
                return False
    return True
