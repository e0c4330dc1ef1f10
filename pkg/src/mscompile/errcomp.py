"""Systematic-error modeling and compensation.

An ErrorModel substitutes, for each ideal pulse, the unitary the hardware
actually applies.  The built-in imperfection is addressing crosstalk: an
addressed Z on qubit n leaks a fraction eps[n][m] of its angle onto every
other qubit m.  Arbitrary per-pulse overrides (fixed measured matrices,
keyed by the pulse's normalized text line) extend the model.

compensate wraps a compiled sequence in parameterized correction caps and
re-optimizes them against the ideal target, scoring every candidate
through the model.  Approximate mode trains only the caps; exact mode also
frees every continuous angle of the original pulses (the pulse list and
entangling count never change).  Restart 0 always starts from the
unmodified sequence with zero caps, so the reported fidelity can only go
up.  Overridden pulses have no free angles and stay frozen in both modes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .gateset import (
    ADDRESSED_Z,
    COLLECTIVE,
    MS_GATE,
    Pulse,
    PulseSequence,
    collective_rotation_matrix,
    collective_z_diagonal,
    matrix_from_json_obj,
    matrix_to_json_obj,
    ms_gate_matrix,
    spin_x_matrix,
    spin_x_squared,
    spin_z_diagonal,
    z_sign_columns,
)
from .localcomp import ANGLE_PRUNE_TOL
from .objective import TargetSpec, fidelity
from .optimizer import NonFiniteObjective, SearchConfig, bfgs_maximize

MODE_APPROXIMATE = "approximate"
MODE_EXACT = "exact"
MODES = (MODE_APPROXIMATE, MODE_EXACT)

_UNITARY_TOL = 1e-10
_RESTART_SALT = 7177


class UncoveredPulseError(ValueError):
    """The model has no substitution rule for a pulse."""


def uniform_crosstalk(n_qubits: int, eps: float) -> np.ndarray:
    """Every addressed Z leaks the same fraction onto every other qubit."""
    m = np.full((n_qubits, n_qubits), float(eps))
    np.fill_diagonal(m, 1.0)
    return m


@dataclass(frozen=True, eq=False)
class ErrorModel:
    """Substitution rules mapping ideal pulses to realized unitaries.

    crosstalk is an (n, n) leak matrix for addressed Z pulses (diagonal
    ignored; a pulse always applies its own full angle).  overrides is a
    tuple of (pulse text line, matrix) pairs replacing specific pulses
    outright; keys are matched after angle normalization.
    """

    crosstalk: Optional[np.ndarray] = None
    overrides: tuple[tuple[str, np.ndarray], ...] = ()

    def __post_init__(self) -> None:
        if self.crosstalk is not None:
            c = np.asarray(self.crosstalk, dtype=float)
            if c.ndim != 2 or c.shape[0] != c.shape[1]:
                raise ValueError("crosstalk must be a square matrix")
            c.setflags(write=False)
            object.__setattr__(self, "crosstalk", c)
        for key, matrix in self.overrides:
            if not isinstance(key, str):
                raise ValueError("override keys are pulse text lines")
            m = np.asarray(matrix, dtype=complex)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError("override matrices must be square")
            if np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) > _UNITARY_TOL:
                raise ValueError("override matrices must be unitary")

    def is_identity(self) -> bool:
        if self.overrides:
            return False
        if self.crosstalk is None:
            return True
        off = self.crosstalk - np.diag(np.diagonal(self.crosstalk))
        return bool(np.all(off == 0.0))

    def _override_map(self) -> dict[str, np.ndarray]:
        return {key: np.asarray(m, dtype=complex) for key, m in self.overrides}

    def effective_z_generator(self, qubit: int, n_qubits: int) -> np.ndarray:
        """Diagonal generator of an addressed Z including its leaks."""
        zcols = z_sign_columns(n_qubits)
        g = zcols[:, qubit - 1].astype(float).copy()
        if self.crosstalk is not None:
            if self.crosstalk.shape[0] != n_qubits:
                raise ValueError("crosstalk matrix size does not match the register")
            for m in range(1, n_qubits + 1):
                if m != qubit:
                    g += self.crosstalk[qubit - 1, m - 1] * zcols[:, m - 1]
        return g

    def pulse_matrix(self, pulse: Pulse, n_qubits: int) -> np.ndarray:
        override = self._override_map().get(pulse.normalized().format_line())
        if override is not None:
            if override.shape != (1 << n_qubits, 1 << n_qubits):
                raise ValueError("override matrix size does not match the register")
            return override
        if pulse.kind == COLLECTIVE:
            return collective_rotation_matrix(pulse.theta, pulse.phi, n_qubits)
        if pulse.kind == MS_GATE:
            return ms_gate_matrix(pulse.theta, pulse.phi, n_qubits)
        if pulse.kind == ADDRESSED_Z:
            g = self.effective_z_generator(pulse.qubit, n_qubits)
            return np.diag(np.exp(-0.5j * pulse.theta * g))
        raise UncoveredPulseError(f"no substitution rule for pulse kind {pulse.kind!r}")

    @classmethod
    def ideal(cls) -> "ErrorModel":
        return cls()

    @classmethod
    def crosstalk_z(cls, eps) -> "ErrorModel":
        return cls(crosstalk=np.asarray(eps, dtype=float))

    def to_json_obj(self) -> dict:
        return {
            "crosstalk": None if self.crosstalk is None else [list(map(float, row)) for row in self.crosstalk],
            "overrides": [
                {"pulse": key, "matrix": matrix_to_json_obj(m)} for key, m in self.overrides
            ],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ErrorModel":
        if not isinstance(obj, dict):
            raise ValueError("expected a JSON object")
        crosstalk = obj.get("crosstalk")
        overrides = tuple(
            (str(entry["pulse"]), matrix_from_json_obj(entry["matrix"]))
            for entry in obj.get("overrides", ())
        )
        return cls(
            crosstalk=None if crosstalk is None else np.asarray(crosstalk, dtype=float),
            overrides=overrides,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json(cls, text: str) -> "ErrorModel":
        return cls.from_json_obj(json.loads(text))


def apply_model(seq: PulseSequence, model: ErrorModel) -> np.ndarray:
    """Unitary the hardware realizes for this sequence under the model."""
    u = np.eye(1 << seq.n_qubits, dtype=complex)
    for pulse in seq:
        u = model.pulse_matrix(pulse, seq.n_qubits) @ u
    return u


def basis_state_fidelities(u: np.ndarray, spec: TargetSpec) -> tuple[tuple[int, ...], tuple[float, ...]]:
    """Per pinned input state: overlap of the realized and target images."""
    pairs = []
    for idx, blk in spec.blocks:
        for pos, i in enumerate(idx):
            pairs.append((i, float(abs(np.vdot(blk[:, pos], u[:, i])) ** 2)))
    pairs.sort()
    return tuple(p[0] for p in pairs), tuple(p[1] for p in pairs)


# ---------------------------------------------------------------------------
# parameterized pulse chains
# ---------------------------------------------------------------------------

_FIXED = "fixed"
_CPULSE = "c"
_ZPULSE = "z"
_MSPULSE = "ms"


@dataclass
class _Segment:
    kind: str
    indices: tuple[int, ...] = ()
    qubit: int = 0
    matrix: Optional[np.ndarray] = None
    origin: str = "cap"  # cap / original


def _cap_segments(n: int, budget: int, start: int) -> tuple[list[_Segment], int]:
    """Alternating collective / addressed-Z-layer correction units."""
    segs: list[_Segment] = []
    pos = start
    for unit in range(budget):
        if unit % 2 == 0:
            segs.append(_Segment(_CPULSE, (pos, pos + 1)))
            pos += 2
        else:
            for q in range(1, n + 1):
                segs.append(_Segment(_ZPULSE, (pos,), qubit=q))
                pos += 1
    return segs, pos


def _segment_matrix(seg: _Segment, x: np.ndarray, n: int, model: ErrorModel) -> np.ndarray:
    if seg.kind == _FIXED:
        return seg.matrix
    if seg.kind == _CPULSE:
        return collective_rotation_matrix(x[seg.indices[0]], x[seg.indices[1]], n)
    if seg.kind == _MSPULSE:
        return ms_gate_matrix(x[seg.indices[0]], x[seg.indices[1]], n)
    g = model.effective_z_generator(seg.qubit, n)
    return np.diag(np.exp(-0.5j * x[seg.indices[0]] * g))


def _chain_value_grad(
    segments: list[_Segment], x: np.ndarray, spec: TargetSpec, n: int, model: ErrorModel, n_params: int
) -> tuple[float, np.ndarray]:
    """Model-evaluated fidelity of the chain and its exact gradient."""
    d = 1 << n
    mats = [_segment_matrix(s, x, n, model) for s in segments]
    prefixes = [np.eye(d, dtype=complex)]
    for m in mats:
        prefixes.append(m @ prefixes[-1])
    u = prefixes[-1]

    zs = [complex(np.vdot(blk, u[:, list(idx)])) for idx, blk in spec.blocks]
    norm = spec.norm
    value = sum(abs(z) ** 2 for z in zs) / norm
    wh = np.zeros((d, d), dtype=complex)
    for z, (idx, blk) in zip(zs, spec.blocks):
        wh[list(idx), :] += np.conj(z) * blk.conj().T

    grad = np.zeros(n_params)
    m_diag = spin_z_diagonal(n)
    suffix = np.eye(d, dtype=complex)
    for i in range(len(segments) - 1, -1, -1):
        seg = segments[i]
        if seg.kind != _FIXED:
            mid = prefixes[i] @ wh @ suffix
            k = mats[i] @ mid
            if seg.kind == _ZPULSE:
                g = model.effective_z_generator(seg.qubit, n)
                grad[seg.indices[0]] = np.imag(g @ np.diagonal(k)) / norm
            else:
                phi = x[seg.indices[1]]
                zc = collective_z_diagonal(phi, n)
                base = spin_x_matrix(n) if seg.kind == _CPULSE else spin_x_squared(n)
                rotated = (zc[:, None] * base) * np.conj(zc)[None, :]
                scale = 1.0 if seg.kind == _CPULSE else 0.5
                grad[seg.indices[0]] = scale * np.imag(np.sum(k.T * rotated)) / norm
                diag_mg = np.sum(mid * mats[i].T, axis=1)
                grad[seg.indices[1]] = np.imag(m_diag @ (np.diagonal(k) - diag_mg)) / norm
        suffix = suffix @ mats[i]
    return float(value), grad


# ---------------------------------------------------------------------------
# compensation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompensationReport:
    original: PulseSequence
    compensated: PulseSequence
    pulses_added: int
    mode: str
    fidelity_before: float
    fidelity_after: float
    basis_states: tuple[int, ...]
    basis_before: tuple[float, ...]
    basis_after: tuple[float, ...]

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "pulses_added": self.pulses_added,
            "fidelity_before": self.fidelity_before,
            "fidelity_after": self.fidelity_after,
            "basis_states": list(self.basis_states),
            "basis_before": list(self.basis_before),
            "basis_after": list(self.basis_after),
            "original": self.original.to_text(),
            "compensated": self.compensated.to_text(),
        }


def _emit_cap(segments: list[_Segment], x: np.ndarray) -> list[Pulse]:
    pulses = []
    for seg in segments:
        theta = float(x[seg.indices[0]])
        if abs(theta) < ANGLE_PRUNE_TOL:
            continue
        if seg.kind == _CPULSE:
            pulses.append(Pulse.collective(theta, float(x[seg.indices[1]])))
        else:
            pulses.append(Pulse.addressed_z(seg.qubit, theta))
    return pulses


def _emit_original(seq: PulseSequence, segments: list[_Segment], x: np.ndarray) -> list[Pulse]:
    pulses = []
    for pulse, seg in zip(seq, segments):
        if seg.kind == _FIXED:
            pulses.append(pulse)
        elif seg.kind == _ZPULSE:
            pulses.append(Pulse.addressed_z(pulse.qubit, float(x[seg.indices[0]])))
        elif seg.kind == _CPULSE:
            pulses.append(Pulse.collective(float(x[seg.indices[0]]), float(x[seg.indices[1]])))
        else:
            pulses.append(Pulse.ms(float(x[seg.indices[0]]), float(x[seg.indices[1]])))
    return pulses


def compensate(
    seq: PulseSequence,
    model: ErrorModel,
    spec: TargetSpec,
    config: SearchConfig,
    mode: str = MODE_APPROXIMATE,
    budget: int = 2,
) -> CompensationReport:
    """Wrap the sequence in trained correction caps; never make it worse.

    budget counts correction units per end: unit 1 is a collective pulse,
    unit 2 a per-qubit addressed-Z layer, further units repeat the pattern.
    Every candidate (including the final pruned emission) is scored through
    the model, and the original sequence wins any tie, so the report's
    after-fidelity is at least its before-fidelity.
    """
    if mode not in MODES:
        raise ValueError(f"unknown compensation mode {mode!r}")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    n = seq.n_qubits
    if spec.dim != 1 << n:
        raise ValueError("target dimension does not match the sequence register")

    u_before = apply_model(seq, model)
    fid_before = fidelity(u_before, spec)
    states, basis_before = basis_state_fidelities(u_before, spec)

    if model.is_identity():
        return CompensationReport(
            seq, seq, 0, mode, fid_before, fid_before, states, basis_before, basis_before
        )

    override_keys = {key for key, _ in model.overrides}

    pre, pos = _cap_segments(n, budget, 0)
    x0_parts = [np.zeros(pos)]
    middle: list[_Segment] = []
    if mode == MODE_EXACT:
        for pulse in seq:
            if pulse.normalized().format_line() in override_keys:
                middle.append(
                    _Segment(_FIXED, matrix=model.pulse_matrix(pulse, n), origin="original")
                )
                continue
            if pulse.kind == ADDRESSED_Z:
                middle.append(_Segment(_ZPULSE, (pos,), qubit=pulse.qubit, origin="original"))
                x0_parts.append(np.array([pulse.theta]))
                pos += 1
            else:
                kind = _CPULSE if pulse.kind == COLLECTIVE else _MSPULSE
                middle.append(_Segment(kind, (pos, pos + 1), origin="original"))
                x0_parts.append(np.array([pulse.theta, pulse.phi]))
                pos += 2
    else:
        middle.append(_Segment(_FIXED, matrix=apply_model(seq, model), origin="original"))
    post, pos = _cap_segments(n, budget, pos)
    x0_parts.append(np.zeros(sum(len(s.indices) for s in post)))

    segments = pre + middle + post
    n_params = pos
    x0 = np.concatenate(x0_parts)

    def fun(x: np.ndarray) -> tuple[float, np.ndarray]:
        return _chain_value_grad(segments, x, spec, n, model, n_params)

    def emit(x: np.ndarray) -> PulseSequence:
        if mode == MODE_EXACT:
            mid_pulses = _emit_original(seq, middle, x)
        else:
            mid_pulses = list(seq)
        return PulseSequence(n, tuple(_emit_cap(pre, x) + mid_pulses + _emit_cap(post, x)))

    best_seq, best_fid = seq, fid_before
    for r in range(config.max_restarts):
        if r == 0:
            start = x0
        else:
            rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence([config.master_seed, _RESTART_SALT, r]))
            )
            start = rng.uniform(-np.pi, np.pi, n_params) * config.init_scale
        try:
            x, _, _ = bfgs_maximize(fun, start, config.bfgs_max_iters, config.bfgs_grad_tol)
        except NonFiniteObjective:
            continue
        candidate = emit(x)
        fid = fidelity(apply_model(candidate, model), spec)
        if fid > best_fid:
            best_seq, best_fid = candidate, fid
        if 1.0 - best_fid <= config.polish_deficit:
            break

    u_after = apply_model(best_seq, model)
    _, basis_after = basis_state_fidelities(u_after, spec)
    return CompensationReport(
        original=seq,
        compensated=best_seq,
        pulses_added=len(best_seq) - len(seq),
        mode=mode,
        fidelity_before=fid_before,
        fidelity_after=fidelity(u_after, spec),
        basis_states=states,
        basis_before=basis_before,
        basis_after=basis_after,
    )
