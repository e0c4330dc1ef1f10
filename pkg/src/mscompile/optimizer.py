"""Quasi-Newton search over ansatz parameters with depth escalation.

A compile run tries entangling depths in increasing order.  At each depth
it performs repeated local searches: restart r draws its starting point
from a child seed derived from (master_seed, depth, r), so any restart can
run anywhere, in any order, and the outcome is still a pure function of
the inputs.  The winner is the lowest-index restart that reaches the
success threshold; later restarts that happen to finish first never
change the answer.  The first depth with a winner is polished, lowered to
pulses, verified, and reported.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize

from .ansatz import (
    LayeredAnsatz,
    MsGridEntry,
    TEMPLATE_PAPER,
    TEMPLATES,
    build_ansatz,
    emit_physical,
    ms_grid_report,
)
from .gateset import PulseSequence, sequence_unitary
from .objective import TargetSpec, fidelity, objective_with_gradient


class NonFiniteObjective(RuntimeError):
    """Objective or gradient stopped being finite during a line search."""


class CompileVerificationError(RuntimeError):
    """Lowered pulse sequence does not reproduce the optimized ansatz."""


@dataclass(frozen=True)
class SearchConfig:
    master_seed: int
    max_restarts: int = 200
    success_deficit: float = 1e-4
    polish_deficit: float = 1e-9
    max_entangling: int = 30
    bfgs_max_iters: int = 2000
    bfgs_grad_tol: float = 1e-10
    init_scale: float = 1.0
    min_entangling: int = 0
    template: str = TEMPLATE_PAPER
    n_workers: int = 1

    def __post_init__(self) -> None:
        if self.master_seed < 0 or self.master_seed >= 1 << 64:
            raise ValueError("master_seed must fit in 64 unsigned bits")
        for name in ("max_restarts", "success_deficit", "polish_deficit",
                     "max_entangling", "bfgs_max_iters", "bfgs_grad_tol",
                     "init_scale", "n_workers"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.min_entangling < 0 or self.min_entangling > self.max_entangling:
            raise ValueError("min_entangling must lie in [0, max_entangling]")
        if self.success_deficit < self.polish_deficit:
            raise ValueError("success_deficit must be at least polish_deficit")
        if self.template not in TEMPLATES:
            raise ValueError(f"unknown template {self.template!r}")


def bfgs_maximize(
    fun_with_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0,
    max_iters: int = 2000,
    grad_tol: float = 1e-10,
) -> tuple[np.ndarray, float, int]:
    """Maximize a smooth function given exact gradients.

    Runs BFGS with a Wolfe line search on the negated function and returns
    (argmax, value, iterations).  Raises NonFiniteObjective the moment an
    evaluation produces a non-finite value or gradient.
    """
    x0 = np.asarray(x0, dtype=float)
    if not np.all(np.isfinite(x0)):
        raise ValueError("starting point must be finite")

    def negated(x: np.ndarray) -> tuple[float, np.ndarray]:
        value, grad = fun_with_grad(x)
        if not (np.isfinite(value) and np.all(np.isfinite(grad))):
            raise NonFiniteObjective(
                f"objective returned a non-finite result at |x| = {np.linalg.norm(x):.3g}"
            )
        return -value, -np.asarray(grad, dtype=float)

    res = minimize(
        negated,
        x0,
        jac=True,
        method="BFGS",
        options={"gtol": grad_tol, "maxiter": max_iters},
    )
    return res.x, -float(res.fun), int(res.nit)


# ---------------------------------------------------------------------------
# seeded restarts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RestartOutcome:
    index: int
    deficit: float
    params: Optional[np.ndarray]
    iterations: int
    note: str = ""


@dataclass(frozen=True)
class SearchResult:
    """Outcome of one depth's restart sweep."""

    success: bool
    params: Optional[np.ndarray]
    deficit: float
    restarts_used: int
    iterations: int
    notes: tuple[str, ...] = ()


def restart_start_point(config: SearchConfig, n_entangling: int, restart: int, n_params: int) -> np.ndarray:
    """Deterministic starting point for one restart, safe to draw anywhere."""
    seq = np.random.SeedSequence([config.master_seed, n_entangling, restart])
    rng = np.random.Generator(np.random.PCG64(seq))
    bound = np.pi * config.init_scale
    return rng.uniform(-bound, bound, n_params)


def _run_restart(args: tuple[LayeredAnsatz, TargetSpec, SearchConfig, int]) -> RestartOutcome:
    ansatz, spec, config, index = args
    x0 = restart_start_point(config, ansatz.n_entangling, index, ansatz.n_params)

    def fun(x: np.ndarray) -> tuple[float, np.ndarray]:
        value, grad = objective_with_gradient(ansatz, x, spec)
        return value, grad

    try:
        x, value, iters = bfgs_maximize(fun, x0, config.bfgs_max_iters, config.bfgs_grad_tol)
    except NonFiniteObjective as exc:
        return RestartOutcome(index, float("inf"), None, 0, f"restart {index}: {exc}")
    return RestartOutcome(index, 1.0 - value, x, iters)


def repeated_local_search(
    ansatz: LayeredAnsatz, spec: TargetSpec, config: SearchConfig
) -> SearchResult:
    """Sweep seeded restarts; the lowest-index success wins.

    Restarts are scanned in index order, a worker-pool chunk at a time, so
    the returned result does not depend on how many workers ran or which
    restart finished first.  On failure every restart contributes to the
    best-effort result.
    """
    best: Optional[RestartOutcome] = None
    notes: list[str] = []

    def consider(out: RestartOutcome) -> bool:
        nonlocal best
        if out.note:
            notes.append(out.note)
        if out.params is not None and (best is None or out.deficit < best.deficit):
            best = out
        return out.params is not None and out.deficit <= config.success_deficit

    winner: Optional[RestartOutcome] = None
    if config.n_workers == 1:
        for r in range(config.max_restarts):
            out = _run_restart((ansatz, spec, config, r))
            if consider(out):
                winner = out
                break
    else:
        with ProcessPoolExecutor(max_workers=config.n_workers) as pool:
            pos = 0
            while pos < config.max_restarts and winner is None:
                chunk = range(pos, min(pos + config.n_workers, config.max_restarts))
                args = [(ansatz, spec, config, r) for r in chunk]
                for out in pool.map(_run_restart, args):
                    if consider(out):
                        winner = out
                        break
                pos = chunk.stop

    if winner is not None:
        return SearchResult(
            True, winner.params, winner.deficit, winner.index + 1, winner.iterations, tuple(notes)
        )
    if best is None:
        return SearchResult(False, None, float("inf"), config.max_restarts, 0, tuple(notes))
    return SearchResult(
        False, best.params, best.deficit, config.max_restarts, best.iterations, tuple(notes)
    )


# ---------------------------------------------------------------------------
# depth escalation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EscalationEntry:
    """One depth's outcome within a compile run."""

    n_entangling: int
    restarts: int
    best_deficit: float

    def to_json_dict(self) -> dict:
        return {
            "n_entangling": self.n_entangling,
            "restarts": self.restarts,
            "best_deficit": self.best_deficit,
        }


@dataclass(frozen=True)
class CompileReport:
    success: bool
    sequence: Optional[PulseSequence]
    ansatz_params: Optional[np.ndarray]
    n_entangling: Optional[int]
    deficit: float
    restarts_used: int
    escalation: tuple[EscalationEntry, ...]
    wall_time: float
    discarded_global_phase: float
    ms_grid: tuple[MsGridEntry, ...]
    notes: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "success": self.success,
            "sequence": None if self.sequence is None else self.sequence.to_text(),
            "ansatz_params": None
            if self.ansatz_params is None
            else [float(v) for v in self.ansatz_params],
            "n_entangling": self.n_entangling,
            "deficit": self.deficit,
            "restarts_used": self.restarts_used,
            "escalation": [e.to_json_dict() for e in self.escalation],
            "wall_time": self.wall_time,
            "discarded_global_phase": self.discarded_global_phase,
            "ms_grid": [
                {
                    "gate_index": e.gate_index,
                    "theta": e.theta,
                    "nearest_multiple": e.nearest_multiple,
                    "deviation": e.deviation,
                    "on_grid": e.on_grid,
                }
                for e in self.ms_grid
            ],
            "notes": list(self.notes),
        }

    def determinism_key(self) -> dict:
        """Everything reproducible; timing excluded."""
        key = self.to_json_dict()
        key.pop("wall_time")
        return key


def _leading_block_phase(u: np.ndarray, spec: TargetSpec) -> float:
    idx, blk = spec.blocks[0]
    return float(np.angle(np.vdot(blk, u[:, list(idx)])))


def compile_target(spec: TargetSpec, n_qubits: int, config: SearchConfig) -> CompileReport:
    """Find the smallest entangling depth that realizes the target.

    Depths are tried in increasing order from min_entangling; each runs a
    full restart sweep.  The first success is polished with a second, more
    stringent quasi-Newton pass, lowered to pulses, and verified against
    the target before being returned.  When every depth up to
    max_entangling fails, the report carries success=False and the per-depth
    deficits.
    """
    if spec.dim != 1 << n_qubits:
        raise ValueError("target dimension does not match the register size")
    t0 = time.perf_counter()
    entries: list[EscalationEntry] = []
    notes: list[str] = []
    for m in range(config.min_entangling, config.max_entangling + 1):
        ansatz = build_ansatz(n_qubits, m, config.template)
        result = repeated_local_search(ansatz, spec, config)
        entries.append(EscalationEntry(m, result.restarts_used, result.deficit))
        notes.extend(result.notes)
        if not result.success:
            continue

        params, deficit = result.params, result.deficit
        if deficit > config.polish_deficit:

            def fun(x: np.ndarray) -> tuple[float, np.ndarray]:
                return objective_with_gradient(ansatz, x, spec)

            try:
                x, value, _ = bfgs_maximize(fun, params, config.bfgs_max_iters, grad_tol=1e-12)
                if 1.0 - value < deficit:
                    params, deficit = x, 1.0 - value
            except NonFiniteObjective as exc:
                notes.append(f"polish skipped: {exc}")
        entries[-1] = EscalationEntry(m, result.restarts_used, deficit)

        emitted = emit_physical(ansatz, params)
        u = sequence_unitary(emitted.sequence)
        emitted_deficit = 1.0 - fidelity(u, spec)
        if emitted_deficit > max(1e-8, deficit + 1e-9):
            raise CompileVerificationError(
                f"lowered sequence deficit {emitted_deficit:.3e} exceeds ansatz deficit {deficit:.3e}"
            )
        return CompileReport(
            success=True,
            sequence=emitted.sequence,
            ansatz_params=np.asarray(params, dtype=float),
            n_entangling=m,
            deficit=deficit,
            restarts_used=result.restarts_used,
            escalation=tuple(entries),
            wall_time=time.perf_counter() - t0,
            discarded_global_phase=_leading_block_phase(u, spec),
            ms_grid=ms_grid_report(ansatz, params),
            notes=tuple(notes),
        )

    best = min(entries, key=lambda e: e.best_deficit) if entries else None
    return CompileReport(
        success=False,
        sequence=None,
        ansatz_params=None,
        n_entangling=None,
        deficit=best.best_deficit if best else float("inf"),
        restarts_used=sum(e.restarts for e in entries),
        escalation=tuple(entries),
        wall_time=time.perf_counter() - t0,
        discarded_global_phase=0.0,
        ms_grid=(),
        notes=tuple(notes),
    )
