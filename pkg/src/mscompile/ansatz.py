"""Layered ansatz: alternating local layers and global entangling gates.

A depth-M ansatz is local layer 0, entangling gate 1, local layer 1, ...,
entangling gate M, local layer M.  Local layers are either FullLocal
(per-qubit X(a3)Z(a2)X(a1), three angles per qubit) or ZOnly (one Z angle
per qubit); each entangling gate carries a free (theta, phi).  The default
"paper" template makes layers 0 and M FullLocal and alternates interior
layers ZOnly/FullLocal starting with ZOnly; "full" makes every layer
FullLocal.

Parameters live in one flat real vector: layer 0 qubit-major, then gate 1
(theta, phi), then layer 1, and so on.  FullLocal blocks order each qubit's
angles (a1, a2, a3) with a1 applied first.

For optimization the ansatz is decomposed into chain gates, each consuming
a disjoint slice of the vector: an X sublayer, a Z sublayer (which also
covers ZOnly layers), or an entangling gate.  The product of chain-gate
matrices in chronological order is the ansatz unitary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .gateset import (
    Pulse,
    PulseSequence,
    ms_gate_matrix,
    normalize_rotation_angle,
    rotation_2x2,
    z_sign_columns,
    zrot_2x2,
)
from .localcomp import (
    ANGLE_PRUNE_TOL,
    compile_local_mod_collective_z,
    two_equatorial_split,
)

TEMPLATE_PAPER = "paper"
TEMPLATE_FULL = "full"
TEMPLATES = (TEMPLATE_PAPER, TEMPLATE_FULL)

LAYER_FULL = "full-local"
LAYER_Z = "z-only"

GATE_X = "x"
GATE_Z = "z"
GATE_MS = "ms"

_LAYER_PARAMS = {LAYER_FULL: 3, LAYER_Z: 1}  # per qubit


@dataclass(frozen=True)
class LayeredAnsatz:
    """Immutable structure: local layer kinds plus the entangling count."""

    n_qubits: int
    n_entangling: int
    local_kinds: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        if self.n_entangling < 0:
            raise ValueError("n_entangling must be nonnegative")
        if len(self.local_kinds) != self.n_entangling + 1:
            raise ValueError("need one local layer more than entangling gates")
        for kind in self.local_kinds:
            if kind not in _LAYER_PARAMS:
                raise ValueError(f"unknown layer kind {kind!r}")

    @property
    def n_params(self) -> int:
        local = sum(_LAYER_PARAMS[k] * self.n_qubits for k in self.local_kinds)
        return local + 2 * self.n_entangling


def build_ansatz(n_qubits: int, n_entangling: int, template: str = TEMPLATE_PAPER) -> LayeredAnsatz:
    """Lay out local layer kinds for the requested template."""
    if template not in TEMPLATES:
        raise ValueError(f"unknown template {template!r}")
    kinds = []
    for i in range(n_entangling + 1):
        interior = 0 < i < n_entangling
        if template == TEMPLATE_PAPER and interior and i % 2 == 1:
            kinds.append(LAYER_Z)
        else:
            kinds.append(LAYER_FULL)
    return LayeredAnsatz(n_qubits, n_entangling, tuple(kinds))


# ---------------------------------------------------------------------------
# flat parameter vector layout
# ---------------------------------------------------------------------------


def unpack_params(ansatz: LayeredAnsatz, params) -> tuple[list[np.ndarray], np.ndarray]:
    """Split the flat vector into per-layer blocks and an (M, 2) gate table.

    FullLocal blocks come back with shape (N, 3) in qubit-major order; ZOnly
    blocks with shape (N,).  Values are copies; packing them back is
    bit-exact.
    """
    x = np.asarray(params, dtype=float)
    if x.shape != (ansatz.n_params,):
        raise ValueError(f"expected {ansatz.n_params} parameters, got {x.shape}")
    locals_: list[np.ndarray] = []
    ms = np.zeros((ansatz.n_entangling, 2))
    off = 0
    for i, kind in enumerate(ansatz.local_kinds):
        width = _LAYER_PARAMS[kind] * ansatz.n_qubits
        block = x[off : off + width].copy()
        locals_.append(block.reshape(ansatz.n_qubits, 3) if kind == LAYER_FULL else block)
        off += width
        if i < ansatz.n_entangling:
            ms[i] = x[off : off + 2]
            off += 2
    return locals_, ms


def pack_params(ansatz: LayeredAnsatz, local_blocks, ms_table) -> np.ndarray:
    """Inverse of unpack_params."""
    ms = np.asarray(ms_table, dtype=float).reshape(ansatz.n_entangling, 2)
    if len(local_blocks) != len(ansatz.local_kinds):
        raise ValueError("wrong number of local layer blocks")
    pieces = []
    for i, (kind, block) in enumerate(zip(ansatz.local_kinds, local_blocks)):
        width = _LAYER_PARAMS[kind] * ansatz.n_qubits
        flat = np.asarray(block, dtype=float).reshape(width)
        pieces.append(flat)
        if i < ansatz.n_entangling:
            pieces.append(ms[i])
    return np.concatenate(pieces) if pieces else np.zeros(0)


# ---------------------------------------------------------------------------
# chain-gate decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ChainGate:
    """One factor of the ansatz product owning a slice of the parameters."""

    kind: str
    indices: np.ndarray  # positions in the flat vector, ascending

    def __post_init__(self) -> None:
        self.indices.setflags(write=False)


@lru_cache(maxsize=None)
def ansatz_gates(ansatz: LayeredAnsatz) -> tuple[ChainGate, ...]:
    """Chronological chain gates with their parameter index arrays."""
    n = ansatz.n_qubits
    gates: list[ChainGate] = []
    off = 0
    for i, kind in enumerate(ansatz.local_kinds):
        if kind == LAYER_FULL:
            base = off + 3 * np.arange(n)
            gates.append(ChainGate(GATE_X, base))
            gates.append(ChainGate(GATE_Z, base + 1))
            gates.append(ChainGate(GATE_X, base + 2))
            off += 3 * n
        else:
            gates.append(ChainGate(GATE_Z, off + np.arange(n)))
            off += n
        if i < ansatz.n_entangling:
            gates.append(ChainGate(GATE_MS, np.arange(off, off + 2)))
            off += 2
    return tuple(gates)


def _x_layer_matrix(angles: np.ndarray, n: int) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for a in angles:  # qubit 1 occupies the least significant bit
        out = np.kron(rotation_2x2(a, 0.0), out)
    return out


def _z_layer_diagonal(angles: np.ndarray, n: int) -> np.ndarray:
    return np.exp(-0.5j * (z_sign_columns(n) @ angles))


def gate_matrix(gate: ChainGate, params: np.ndarray, n: int) -> np.ndarray:
    x = params[gate.indices]
    if gate.kind == GATE_X:
        return _x_layer_matrix(x, n)
    if gate.kind == GATE_Z:
        return np.diag(_z_layer_diagonal(x, n))
    if gate.kind == GATE_MS:
        return ms_gate_matrix(x[0], x[1], n)
    raise ValueError(f"unknown chain gate kind {gate.kind!r}")


def ansatz_unitary(ansatz: LayeredAnsatz, params) -> np.ndarray:
    x = np.asarray(params, dtype=float)
    if x.shape != (ansatz.n_params,):
        raise ValueError(f"expected {ansatz.n_params} parameters, got {x.shape}")
    u = np.eye(1 << ansatz.n_qubits, dtype=complex)
    for gate in ansatz_gates(ansatz):
        u = gate_matrix(gate, x, ansatz.n_qubits) @ u
    return u


# ---------------------------------------------------------------------------
# lowering to hardware pulses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmittedSequence:
    """Physical pulses plus any collective-Z frame left unemitted.

    With trailing_collective_z = rho, the realized unitary times the uniform
    Z rotation by rho per qubit equals the ansatz unitary.  The default
    emit_physical settings realize that trailing rotation explicitly, so
    rho = 0.
    """

    sequence: PulseSequence
    trailing_collective_z: float = 0.0


def _local_factor(a1: float, a2: float, a3: float) -> np.ndarray:
    return rotation_2x2(a3, 0.0) @ zrot_2x2(a2) @ rotation_2x2(a1, 0.0)


def emit_physical(
    ansatz: LayeredAnsatz, params, up_to_collective_z: bool = False
) -> EmittedSequence:
    """Lower solved parameters to a pulse sequence over the hardware gates.

    FullLocal layers compile analytically modulo a collective Z rotation;
    that residual is pushed forward as a Z-frame and absorbed into the
    phase of every later collective and entangling pulse.  ZOnly layers are
    already hardware pulses.  The frame accumulated by the end is either
    emitted as two collective pulses or, when up_to_collective_z is set,
    reported in the result for the caller to discard.
    """
    locals_, ms = unpack_params(ansatz, params)
    n = ansatz.n_qubits
    pulses: list[Pulse] = []
    frame = 0.0
    for i, kind in enumerate(ansatz.local_kinds):
        block = locals_[i]
        if kind == LAYER_FULL:
            factors = [_local_factor(*block[q]) for q in range(n)]
            result = compile_local_mod_collective_z(factors)
            for p in result.sequence:
                if p.kind == "C":
                    pulses.append(Pulse.collective(p.theta, p.phi - frame))
                else:
                    pulses.append(p)
            frame += result.residual.angles[0]
        else:
            for q in range(n):
                if abs(block[q]) >= ANGLE_PRUNE_TOL:
                    pulses.append(Pulse.addressed_z(q + 1, float(block[q])))
        if i < ansatz.n_entangling:
            pulses.append(Pulse.ms(float(ms[i, 0]), float(ms[i, 1]) - frame))
    if up_to_collective_z:
        return EmittedSequence(PulseSequence(n, tuple(pulses)), frame)
    if abs(math.sin(0.5 * frame)) >= ANGLE_PRUNE_TOL:
        # realize the frame as a uniform Z rotation: two collective pulses
        first, second = two_equatorial_split(zrot_2x2(frame))
        for p in (first, second):
            if abs(p.theta) >= ANGLE_PRUNE_TOL:
                pulses.append(p)
    return EmittedSequence(PulseSequence(n, tuple(pulses)), 0.0)


# ---------------------------------------------------------------------------
# entangling-angle grid report
# ---------------------------------------------------------------------------

_GRID_STEP = math.pi / 8


@dataclass(frozen=True)
class MsGridEntry:
    """How close one entangling angle sits to the discrete pi/8 grid."""

    gate_index: int
    theta: float
    nearest_multiple: int
    deviation: float
    on_grid: bool


def ms_grid_report(ansatz: LayeredAnsatz, params, tol: float = 1e-6) -> tuple[MsGridEntry, ...]:
    """Flag entangling angles within tol of a multiple of pi/8."""
    _, ms = unpack_params(ansatz, params)
    entries = []
    for i in range(ansatz.n_entangling):
        theta = normalize_rotation_angle(float(ms[i, 0]))
        k = round(theta / _GRID_STEP)
        dev = abs(theta - k * _GRID_STEP)
        entries.append(MsGridEntry(i, theta, int(k), dev, dev < tol))
    return tuple(entries)
