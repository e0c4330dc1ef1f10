"""Fidelity objectives and exact analytic gradients.

Three objective kinds share one internal form: a list of (input indices,
target block) pairs.  A full target is a single block covering every
column; a subspace target constrains a subset of columns with one common
phase; a phased target constrains several disjoint column groups, each
free to pick up its own phase.  The score is

    f(U) = sum_j |tr(B_j^dag U[:, S_j])|^2 / sum_j d_j^2

which is 1 exactly when U matches every block up to per-block phases.

Gradients are exact.  One forward sweep stores prefix products, one
backward sweep contracts each chain gate's generator against the partial
products, so the whole gradient costs a constant factor more than a single
evaluation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .ansatz import (
    GATE_MS,
    GATE_X,
    GATE_Z,
    LayeredAnsatz,
    ansatz_gates,
    gate_matrix,
)
from .gateset import (
    collective_z_diagonal,
    matrix_from_json_obj,
    matrix_to_json_obj,
    spin_x_squared,
    spin_z_diagonal,
    z_sign_columns,
)

KIND_FULL = "full"
KIND_SUBSPACE = "subspace"
KIND_PHASED = "phased"

ORTHONORMAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class TargetSpec:
    """Target description: which input columns are pinned, and to what.

    blocks holds (indices, block) pairs; block column c is the required
    image of basis state indices[c].  Blocks must have orthonormal columns
    and pairwise disjoint index sets.  Construct through full / subspace /
    phased rather than directly.
    """

    kind: str
    blocks: tuple[tuple[tuple[int, ...], np.ndarray], ...]

    def __post_init__(self) -> None:
        if self.kind not in (KIND_FULL, KIND_SUBSPACE, KIND_PHASED):
            raise ValueError(f"unknown target kind {self.kind!r}")
        if not self.blocks:
            raise ValueError("target needs at least one block")
        d = self.blocks[0][1].shape[0]
        if d < 2 or d & (d - 1):
            raise ValueError("target dimension must be a power of two")
        seen: set[int] = set()
        for indices, block in self.blocks:
            block.setflags(write=False)
            if block.shape != (d, len(indices)):
                raise ValueError("block shape does not match its index list")
            if any(i < 0 or i >= d for i in indices):
                raise ValueError("column index out of range")
            if seen.intersection(indices) or len(set(indices)) != len(indices):
                raise ValueError("blocks must use pairwise disjoint column indices")
            seen.update(indices)
            gram = block.conj().T @ block
            if np.max(np.abs(gram - np.eye(len(indices)))) > ORTHONORMAL_TOL:
                raise ValueError("block columns must be orthonormal")

    @property
    def dim(self) -> int:
        return self.blocks[0][1].shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    @property
    def norm(self) -> float:
        return float(sum(len(idx) ** 2 for idx, _ in self.blocks))

    @classmethod
    def full(cls, matrix) -> "TargetSpec":
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("full target must be square")
        return cls(KIND_FULL, ((tuple(range(m.shape[0])), m.copy()),))

    @classmethod
    def subspace(cls, matrix, columns) -> "TargetSpec":
        """Pin the listed input columns to the given images.

        matrix may be the d x k block itself or a full d x d matrix from
        which the listed columns are taken.
        """
        cols = tuple(int(c) for c in columns)
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2:
            raise ValueError("target block must be a matrix")
        if m.shape[1] == len(cols):
            block = m.copy()
        elif m.shape[0] == m.shape[1]:
            block = m[:, list(cols)].copy()
        else:
            raise ValueError("matrix width matches neither the column list nor the dimension")
        return cls(KIND_SUBSPACE, ((cols, block),))

    @classmethod
    def phased(cls, blocks) -> "TargetSpec":
        """Independent-phase blocks given as (indices, d x k block) pairs."""
        pairs = tuple(
            (tuple(int(i) for i in idx), np.asarray(blk, dtype=complex).copy())
            for idx, blk in blocks
        )
        return cls(KIND_PHASED, pairs)

    def to_json_obj(self) -> dict:
        if self.kind == KIND_FULL:
            return {"kind": KIND_FULL, "matrix": matrix_to_json_obj(self.blocks[0][1])}
        if self.kind == KIND_SUBSPACE:
            idx, block = self.blocks[0]
            return {
                "kind": KIND_SUBSPACE,
                "matrix": matrix_to_json_obj(block),
                "columns": list(idx),
            }
        return {
            "kind": KIND_PHASED,
            "blocks": [
                {"indices": list(idx), "block": matrix_to_json_obj(blk)}
                for idx, blk in self.blocks
            ],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "TargetSpec":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ValueError("expected an object with a 'kind' field")
        kind = obj["kind"]
        if kind == KIND_FULL:
            return cls.full(matrix_from_json_obj(obj["matrix"]))
        if kind == KIND_SUBSPACE:
            return cls.subspace(matrix_from_json_obj(obj["matrix"]), obj["columns"])
        if kind == KIND_PHASED:
            return cls.phased(
                [(b["indices"], matrix_from_json_obj(b["block"])) for b in obj["blocks"]]
            )
        raise ValueError(f"unknown target kind {kind!r}")

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json(cls, text: str) -> "TargetSpec":
        return cls.from_json_obj(json.loads(text))


class ObjectiveValue(NamedTuple):
    fidelity: float
    gradient: np.ndarray


def _block_overlaps(u: np.ndarray, spec: TargetSpec) -> list[complex]:
    return [complex(np.vdot(blk, u[:, list(idx)])) for idx, blk in spec.blocks]


def fidelity(u: np.ndarray, spec: TargetSpec) -> float:
    """Normalized score of a unitary against any target kind."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (spec.dim, spec.dim):
        raise ValueError("unitary dimension does not match the target")
    return sum(abs(z) ** 2 for z in _block_overlaps(u, spec)) / spec.norm


def block_fidelities(u: np.ndarray, spec: TargetSpec) -> tuple[float, ...]:
    """Each block scored on its own, ignoring the others."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (spec.dim, spec.dim):
        raise ValueError("unitary dimension does not match the target")
    return tuple(
        abs(z) ** 2 / len(idx) ** 2
        for z, (idx, _) in zip(_block_overlaps(u, spec), spec.blocks)
    )


def full_fidelity(u: np.ndarray, target: np.ndarray) -> float:
    u = np.asarray(u, dtype=complex)
    t = np.asarray(target, dtype=complex)
    if u.shape != t.shape or u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError("operands must be square matrices of equal dimension")
    d = u.shape[0]
    return abs(np.vdot(t, u)) ** 2 / d**2


def subspace_fidelity(u: np.ndarray, spec: TargetSpec) -> float:
    if spec.kind != KIND_SUBSPACE:
        raise ValueError("expected a subspace target")
    return fidelity(u, spec)


def phased_subspace_fidelity(u: np.ndarray, spec: TargetSpec) -> float:
    if spec.kind != KIND_PHASED:
        raise ValueError("expected a phased target")
    return fidelity(u, spec)


def union_subspace(spec: TargetSpec) -> TargetSpec:
    """Collapse a phased target into one common-phase block."""
    indices = tuple(i for idx, _ in spec.blocks for i in idx)
    block = np.hstack([blk for _, blk in spec.blocks])
    return TargetSpec(KIND_SUBSPACE, ((indices, block),))


def objective_with_gradient(ansatz: LayeredAnsatz, params, spec: TargetSpec) -> ObjectiveValue:
    """Score the ansatz at params against spec, with the exact gradient.

    One forward pass accumulates prefix products P_i; the backward pass
    keeps the running suffix and reduces each gate's parameter derivatives
    against K = G_i P_i W S_i, where W is the fixed target contraction.
    Per-kind reductions avoid forming any generator matrix except the
    entangling one.
    """
    x = np.asarray(params, dtype=float)
    if x.shape != (ansatz.n_params,):
        raise ValueError(f"expected {ansatz.n_params} parameters, got {x.shape}")
    n = ansatz.n_qubits
    d = 1 << n
    if spec.dim != d:
        raise ValueError("target dimension does not match the ansatz register")

    gates = ansatz_gates(ansatz)
    mats = [gate_matrix(g, x, n) for g in gates]
    prefixes = [np.eye(d, dtype=complex)]
    for m in mats:
        prefixes.append(m @ prefixes[-1])
    u = prefixes[-1]

    zs = _block_overlaps(u, spec)
    norm = spec.norm
    value = sum(abs(z) ** 2 for z in zs) / norm

    # W^dag assembled row-wise: row s of block j carries conj(z_j) B_j^dag
    wh = np.zeros((d, d), dtype=complex)
    for z, (idx, blk) in zip(zs, spec.blocks):
        wh[list(idx), :] += np.conj(z) * blk.conj().T

    grad = np.zeros(ansatz.n_params)
    zcols = z_sign_columns(n)
    rows = np.arange(d)
    suffix = np.eye(d, dtype=complex)
    for i in range(len(gates) - 1, -1, -1):
        gate = gates[i]
        mid = prefixes[i] @ wh @ suffix
        k = mats[i] @ mid
        if gate.kind == GATE_X:
            for q in range(n):
                t = k[rows, rows ^ (1 << q)].sum()
                grad[gate.indices[q]] = t.imag / norm
        elif gate.kind == GATE_Z:
            grad[gate.indices] = np.imag(zcols.T @ np.diagonal(k)) / norm
        elif gate.kind == GATE_MS:
            phi = x[gate.indices[1]]
            zc = collective_z_diagonal(phi, n)
            sphi2 = (zc[:, None] * spin_x_squared(n)) * np.conj(zc)[None, :]
            grad[gate.indices[0]] = 0.5 * np.imag(np.sum(k.T * sphi2)) / norm
            m_diag = spin_z_diagonal(n)
            diag_mg = np.sum(mid * mats[i].T, axis=1)
            grad[gate.indices[1]] = np.imag(m_diag @ (np.diagonal(k) - diag_mg)) / norm
        else:
            raise ValueError(f"unknown chain gate kind {gate.kind!r}")
        suffix = suffix @ mats[i]
    return ObjectiveValue(float(value), grad)


# ---------------------------------------------------------------------------
# stock targets
# ---------------------------------------------------------------------------


def _permutation_unitary(dim: int, swaps) -> np.ndarray:
    u = np.eye(dim, dtype=complex)
    for a, b in swaps:
        u[[a, b]] = u[[b, a]]
    return u


def toffoli_unitary() -> np.ndarray:
    """Doubly controlled flip: qubits 1, 2 control, qubit 3 flips."""
    return _permutation_unitary(8, [(3, 7)])


def fredkin_unitary() -> np.ndarray:
    """Controlled swap: qubit 1 controls, qubits 2 and 3 exchange."""
    return _permutation_unitary(8, [(3, 5)])


def cnot_unitary() -> np.ndarray:
    """Qubit 1 controls, qubit 2 flips."""
    return _permutation_unitary(4, [(1, 3)])


def toffoli_measurement_spec() -> TargetSpec:
    """Toffoli with qubit 3 prepared in |0> and measured afterwards.

    Inputs 0..2 land in the measurement-0 group and input 3 in the
    measurement-1 group; a relative phase between the groups is
    unobservable, so the two blocks are phased independently.
    """
    t = toffoli_unitary()
    return TargetSpec.phased([((0, 1, 2), t[:, [0, 1, 2]]), ((3,), t[:, [3]])])
