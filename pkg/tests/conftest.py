"""Shared oracle helpers for the test suite.

These deliberately avoid the library's own composition helpers where a
cheap independent construction exists, so tests compare against a second
route rather than the code under test.
"""

import numpy as np


def kron_chain(factors):
    """Tensor product with qubit 1 on the least significant bit."""
    out = np.eye(1, dtype=complex)
    for f in factors:
        out = np.kron(np.asarray(f, dtype=complex), out)
    return out


def haar_unitary(rng, dim=2):
    """Haar-distributed U(dim) via Ginibre + QR with phase fix."""
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_su2(rng):
    u = haar_unitary(rng, 2)
    det = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
    return u * np.exp(-0.5j * np.angle(det))


def max_abs_diff(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def phase_aligned_diff(a, b):
    """Max elementwise deviation after removing one global phase."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    tr = np.trace(b.conj().T @ a)
    if abs(tr) < 1e-14:
        return max_abs_diff(a, b)
    return max_abs_diff(a * (tr.conjugate() / abs(tr)), b)
