"""Native gate set of the register: collective equatorial rotations, addressed
Z rotations, and the global Molmer-Sorensen entangling gate.

Conventions used across the package:

* Qubits are numbered 1..N.  Bit b of a basis-state integer encodes qubit
  b + 1, so qubit 1 is the least significant bit.
* |0> is the +1 eigenstate of sigma_z.
* A rotation by angle t about generator G means exp(-i*t*G/2) (the MS gate
  uses exp(-i*t*G/4) with G the squared collective spin).
* Pulse lists are chronological: the first pulse acts first, so the matrix
  of a sequence is pulses[-1] @ ... @ pulses[0].
* Angles are kept un-normalized internally.  Serialization maps rotation
  angles into (-2*pi, 2*pi] and phases into (-pi, pi].
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

COLLECTIVE = "C"
ADDRESSED_Z = "Z"
MS_GATE = "MS"

_KINDS = (COLLECTIVE, ADDRESSED_Z, MS_GATE)

_TWO_PI = 2.0 * math.pi
_FOUR_PI = 4.0 * math.pi


def normalize_rotation_angle(theta: float) -> float:
    """Map a rotation angle into (-2*pi, 2*pi], the full SU(2) period."""
    t = math.fmod(theta, _FOUR_PI)
    if t > _TWO_PI:
        t -= _FOUR_PI
    elif t <= -_TWO_PI:
        t += _FOUR_PI
    return t


def normalize_phase(phi: float) -> float:
    """Map an equatorial phase into (-pi, pi]."""
    p = math.fmod(phi, _TWO_PI)
    if p > math.pi:
        p -= _TWO_PI
    elif p <= -math.pi:
        p += _TWO_PI
    return p


def _format_float(x: float) -> str:
    # 17 significant digits round-trips IEEE doubles exactly.
    return format(x, ".17g")


@dataclass(frozen=True)
class Pulse:
    """One hardware pulse: kind is "C", "Z", or "MS".

    theta is the rotation angle.  phi is the equatorial phase (C and MS
    only).  qubit is the 1-based target of an addressed Z pulse and 0
    otherwise.
    """

    kind: str
    theta: float
    phi: float = 0.0
    qubit: int = 0

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError("pulse angles must be finite")
        if self.kind == ADDRESSED_Z:
            if self.qubit < 1:
                raise ValueError("addressed Z pulse needs a 1-based qubit index")
        elif self.qubit != 0:
            raise ValueError(f"{self.kind} pulses carry no qubit index")

    @classmethod
    def collective(cls, theta: float, phi: float = 0.0) -> "Pulse":
        return cls(COLLECTIVE, float(theta), float(phi))

    @classmethod
    def addressed_z(cls, qubit: int, theta: float) -> "Pulse":
        return cls(ADDRESSED_Z, float(theta), 0.0, int(qubit))

    @classmethod
    def ms(cls, theta: float, phi: float = 0.0) -> "Pulse":
        return cls(MS_GATE, float(theta), float(phi))

    def inverse(self) -> "Pulse":
        return Pulse(self.kind, -self.theta, self.phi, self.qubit)

    def normalized(self) -> "Pulse":
        theta = normalize_rotation_angle(self.theta)
        phi = normalize_phase(self.phi) if self.kind != ADDRESSED_Z else 0.0
        return Pulse(self.kind, theta, phi, self.qubit)

    def format_line(self) -> str:
        p = self.normalized()
        if p.kind == ADDRESSED_Z:
            return f"Z {p.qubit} {_format_float(p.theta)}"
        return f"{p.kind} {_format_float(p.theta)} {_format_float(p.phi)}"


@dataclass(frozen=True)
class PulseSequence:
    """Chronological pulse list acting on an n_qubits register."""

    n_qubits: int
    pulses: tuple[Pulse, ...] = ()

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        object.__setattr__(self, "pulses", tuple(self.pulses))
        for p in self.pulses:
            if p.kind == ADDRESSED_Z and p.qubit > self.n_qubits:
                raise ValueError(
                    f"pulse addresses qubit {p.qubit} on a {self.n_qubits}-qubit register"
                )

    def __len__(self) -> int:
        return len(self.pulses)

    def __iter__(self) -> Iterator[Pulse]:
        return iter(self.pulses)

    def inverse(self) -> "PulseSequence":
        return PulseSequence(self.n_qubits, tuple(p.inverse() for p in reversed(self.pulses)))

    def normalized(self) -> "PulseSequence":
        return PulseSequence(self.n_qubits, tuple(p.normalized() for p in self.pulses))

    def to_text(self) -> str:
        lines = [f"# qubits: {self.n_qubits}"]
        lines.extend(p.format_line() for p in self.pulses)
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str, n_qubits: int | None = None) -> "PulseSequence":
        return parse_sequence_text(text, n_qubits)


# ---------------------------------------------------------------------------
# cached register-level structure
# ---------------------------------------------------------------------------


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def z_sign_columns(n_qubits: int) -> np.ndarray:
    """(2**n, n) array; column q holds the sigma_z eigenvalue of qubit q+1."""
    d = 1 << n_qubits
    s = np.arange(d)
    cols = np.empty((d, n_qubits))
    for q in range(n_qubits):
        cols[:, q] = 1.0 - 2.0 * ((s >> q) & 1)
    return _readonly(cols)


@lru_cache(maxsize=None)
def spin_z_diagonal(n_qubits: int) -> np.ndarray:
    """Diagonal of the collective spin S_z = sum_q sigma_z^(q)."""
    return _readonly(z_sign_columns(n_qubits).sum(axis=1))


@lru_cache(maxsize=None)
def hadamard_all(n_qubits: int) -> np.ndarray:
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    out = np.array([[1.0]])
    for _ in range(n_qubits):
        out = np.kron(h, out)
    return _readonly(out)


@lru_cache(maxsize=None)
def pauli_x_embedded(qubit: int, n_qubits: int) -> np.ndarray:
    """sigma_x acting on one qubit of the register (1-based index)."""
    x = np.array([[0.0, 1.0], [1.0, 0.0]])
    out = np.array([[1.0]])
    for q in range(1, n_qubits + 1):
        out = np.kron(x if q == qubit else np.eye(2), out)
    return _readonly(out)


@lru_cache(maxsize=None)
def spin_x_matrix(n_qubits: int) -> np.ndarray:
    out = sum(pauli_x_embedded(q, n_qubits) for q in range(1, n_qubits + 1))
    return _readonly(np.asarray(out, dtype=float))


@lru_cache(maxsize=None)
def spin_x_squared(n_qubits: int) -> np.ndarray:
    h = hadamard_all(n_qubits)
    m = spin_z_diagonal(n_qubits)
    return _readonly(h @ (np.square(m)[:, None] * h))


# ---------------------------------------------------------------------------
# matrix builders
# ---------------------------------------------------------------------------


def rotation_2x2(theta: float, phi: float) -> np.ndarray:
    """exp(-i*theta*(cos(phi) sigma_x + sin(phi) sigma_y)/2)."""
    c = math.cos(0.5 * theta)
    s = math.sin(0.5 * theta)
    e = np.exp(1j * phi)
    return np.array([[c, -1j * s / e], [-1j * s * e, c]])


def zrot_2x2(theta: float) -> np.ndarray:
    """exp(-i*theta*sigma_z/2)."""
    return np.array([[np.exp(-0.5j * theta), 0.0], [0.0, np.exp(0.5j * theta)]])


def collective_rotation_matrix(theta: float, phi: float, n_qubits: int) -> np.ndarray:
    r = rotation_2x2(theta, phi)
    out = np.array([[1.0 + 0j]])
    for _ in range(n_qubits):
        out = np.kron(r, out)
    return out


def addressed_z_matrix(qubit: int, theta: float, n_qubits: int) -> np.ndarray:
    z = z_sign_columns(n_qubits)[:, qubit - 1]
    return np.diag(np.exp(-0.5j * theta * z))


def collective_z_diagonal(phi: float, n_qubits: int) -> np.ndarray:
    """Diagonal of the uniform Z rotation exp(-i*phi*S_z/2)."""
    return np.exp(-0.5j * phi * spin_z_diagonal(n_qubits))


def ms_gate_matrix(theta: float, phi: float, n_qubits: int) -> np.ndarray:
    """Global MS gate exp(-i*theta*S_phi^2/4), S_phi the rotated collective spin.

    Evaluated in closed form: conjugate the diagonal exp(-i*theta*m^2/4) by
    the all-qubit Hadamard, then shift the equatorial phase with uniform Z
    rotations.  Exact for every angle; no series truncation anywhere.
    """
    h = hadamard_all(n_qubits)
    m = spin_z_diagonal(n_qubits)
    core = h @ (np.exp(-0.25j * theta * np.square(m))[:, None] * h)
    if phi == 0.0:
        return core
    zc = collective_z_diagonal(phi, n_qubits)
    return zc[:, None] * core * zc.conj()[None, :]


def pulse_unitary(pulse: Pulse, n_qubits: int) -> np.ndarray:
    if pulse.kind == ADDRESSED_Z and pulse.qubit > n_qubits:
        raise ValueError(f"pulse addresses qubit {pulse.qubit} of {n_qubits}")
    if pulse.kind == COLLECTIVE:
        return collective_rotation_matrix(pulse.theta, pulse.phi, n_qubits)
    if pulse.kind == ADDRESSED_Z:
        return addressed_z_matrix(pulse.qubit, pulse.theta, n_qubits)
    return ms_gate_matrix(pulse.theta, pulse.phi, n_qubits)


def sequence_unitary(seq: PulseSequence) -> np.ndarray:
    u = np.eye(1 << seq.n_qubits, dtype=complex)
    for pulse in seq.pulses:
        u = pulse_unitary(pulse, seq.n_qubits) @ u
    return u


def embed_on_subset(seq: PulseSequence, subset: Sequence[int], n_total: int) -> np.ndarray:
    """Unitary of a sequence acting on `subset` (sorted, 1-based) of a larger register."""
    subset = list(subset)
    if len(subset) != seq.n_qubits:
        raise ValueError("subset size must match the sequence register")
    if sorted(set(subset)) != subset:
        raise ValueError("subset must be sorted and free of duplicates")
    if subset[0] < 1 or subset[-1] > n_total:
        raise ValueError("subset outside the target register")
    u = sequence_unitary(seq)
    d_total = 1 << n_total
    s = np.arange(d_total)
    sub_index = np.zeros(d_total, dtype=np.int64)
    for i, q in enumerate(subset):
        sub_index |= ((s >> (q - 1)) & 1) << i
    spectator = np.array(s)
    for q in subset:
        spectator &= ~(1 << (q - 1))
    full = u[np.ix_(sub_index, sub_index)].copy()
    full[spectator[:, None] != spectator[None, :]] = 0.0
    return full


# ---------------------------------------------------------------------------
# checks and serialization
# ---------------------------------------------------------------------------


def is_unitary(u: np.ndarray, tol: float = 1e-12) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    d = u.shape[0]
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(d))) < tol)


def require_unitary(u: np.ndarray, tol: float = 1e-12, what: str = "matrix") -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u, tol):
        raise ValueError(f"{what} is not unitary within {tol}")
    return u


_HEADER_RE = re.compile(r"#\s*qubits\s*:\s*(\d+)")


def parse_sequence_text(text: str, n_qubits: int | None = None) -> PulseSequence:
    """Parse the one-pulse-per-line format.  '#' starts a comment.

    The register size comes from an explicit argument or from a
    '# qubits: N' comment, whichever is present (the argument wins).
    """
    pulses: list[Pulse] = []
    header_qubits: int | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        comment = None
        if "#" in raw:
            raw, _, comment = raw.partition("#")
            comment = "#" + comment
        if comment and header_qubits is None:
            m = _HEADER_RE.search(comment)
            if m:
                header_qubits = int(m.group(1))
        tokens = raw.split()
        if not tokens:
            continue
        try:
            kind = tokens[0]
            if kind == COLLECTIVE and len(tokens) == 3:
                pulses.append(Pulse.collective(float(tokens[1]), float(tokens[2])))
            elif kind == ADDRESSED_Z and len(tokens) == 3:
                pulses.append(Pulse.addressed_z(int(tokens[1]), float(tokens[2])))
            elif kind == MS_GATE and len(tokens) == 3:
                pulses.append(Pulse.ms(float(tokens[1]), float(tokens[2])))
            else:
                raise ValueError(f"unrecognized pulse line: {raw.strip()!r}")
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    size = n_qubits if n_qubits is not None else header_qubits
    if size is None:
        raise ValueError("register size missing: pass n_qubits or add a '# qubits: N' line")
    return PulseSequence(size, tuple(pulses))


def matrix_to_json_obj(u: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(u, dtype=complex)]


def matrix_from_json_obj(obj: list) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError("matrix entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def unitary_to_json(u: np.ndarray, n_qubits: int) -> str:
    return json.dumps({"n_qubits": n_qubits, "matrix": matrix_to_json_obj(u)})


def unitary_from_json(text: str, tol: float = 1e-12) -> tuple[np.ndarray, int]:
    obj = json.loads(text)
    if not isinstance(obj, dict) or "n_qubits" not in obj or "matrix" not in obj:
        raise ValueError("expected an object with 'n_qubits' and 'matrix'")
    n = int(obj["n_qubits"])
    u = matrix_from_json_obj(obj["matrix"])
    if u.shape != (1 << n, 1 << n):
        raise ValueError("matrix shape does not match n_qubits")
    require_unitary(u, tol, "loaded matrix")
    return u, n


def save_unitary(path: str, u: np.ndarray, n_qubits: int) -> None:
    with open(path, "w") as fh:
        fh.write(unitary_to_json(u, n_qubits))


def load_unitary(path: str) -> tuple[np.ndarray, int]:
    with open(path) as fh:
        return unitary_from_json(fh.read())
