"""Command-line surface: compile, verify, simulate, sample, compensate, bench.

Every command exits 0 on success, 1 when a compilation fails, and 2 on
I/O or validation problems.  --json swaps the human summary for one JSON
object on stdout.  Benchmark commands fan their tasks out over a process
pool (size from --workers, falling back to the MSCOMPILE_WORKERS
environment variable) and always emit results in task order.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .errcomp import MODES as COMP_MODES
from .errcomp import ErrorModel, compensate
from .gateset import (
    PulseSequence,
    matrix_from_json_obj,
    matrix_to_json_obj,
    sequence_unitary,
    unitary_from_json,
    unitary_to_json,
)
from .localcomp import MODE_EXACT, MODES as LOCAL_MODES, group_and_compile, measurement_basis_factors
from .objective import TargetSpec, fidelity
from .optimizer import CompileVerificationError, SearchConfig, compile_target
from .sampler import RandomStream, haar_unitary, random_clifford

# depth at which Haar-random targets of each width are known to compile
_SATURATING_M = {1: 0, 2: 3, 3: 8, 4: 25}
_CLIFFORD_CAP = {2: 3, 3: 8, 4: 25}


class _CliError(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


def _read_text(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def _load_target(path: str) -> TargetSpec:
    text = _read_text(path)
    obj = json.loads(text)
    if isinstance(obj, dict) and "kind" in obj:
        return TargetSpec.from_json_obj(obj)
    if isinstance(obj, dict) and "matrix" in obj:
        u, _ = unitary_from_json(text)
        return TargetSpec.full(u)
    raise _CliError(2, f"{path}: expected a target spec or a unitary JSON object")


def _load_sequence(path: str, n_qubits: int | None) -> PulseSequence:
    return PulseSequence.from_text(_read_text(path), n_qubits)


def _workers(args: argparse.Namespace) -> int:
    if args.workers is not None:
        return args.workers
    raw = os.environ.get("MSCOMPILE_WORKERS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise _CliError(2, f"MSCOMPILE_WORKERS={raw!r} is not an integer")
    return max(1, value)


def _emit(args: argparse.Namespace, obj: dict, human: list[str]) -> None:
    if args.json:
        print(json.dumps(obj, indent=2))
    else:
        for line in human:
            print(line)


def _write(path: str, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# compile
# ---------------------------------------------------------------------------


def _cmd_compile(args: argparse.Namespace) -> int:
    spec = _load_target(args.target)
    n = spec.n_qubits
    if args.qubits is not None and args.qubits != n:
        raise _CliError(2, f"--qubits {args.qubits} does not match the {n}-qubit target")
    if n >= 4 and not args.extended:
        raise _CliError(2, f"{n}-qubit compiles take too long by default; pass --extended")
    config = SearchConfig(
        master_seed=args.seed,
        max_restarts=args.restarts,
        success_deficit=args.deficit,
        max_entangling=args.max_ms,
        min_entangling=args.min_ms,
        template=args.template,
        n_workers=_workers(args),
    )
    try:
        report = compile_target(spec, n, config)
    except CompileVerificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.out and report.sequence is not None:
        _write(args.out, report.sequence.to_text())
    if args.report:
        _write(args.report, json.dumps(report.to_json_dict(), indent=2))

    human = [f"target: {args.target} ({n} qubits)"]
    if report.success:
        human.append(
            f"success: {report.n_entangling} entangling gates, deficit {report.deficit:.3e}, "
            f"{report.restarts_used} restarts, {report.wall_time:.2f} s"
        )
        human.append(f"pulses: {len(report.sequence)}")
    else:
        human.append(
            f"failure: no depth up to {config.max_entangling} reached "
            f"deficit {config.success_deficit:g} ({report.wall_time:.2f} s)"
        )
    for e in report.escalation:
        human.append(f"  M={e.n_entangling}: best deficit {e.best_deficit:.3e} after {e.restarts} restarts")
    if args.snap_grid and report.ms_grid:
        for g in report.ms_grid:
            mark = "on" if g.on_grid else "off"
            human.append(
                f"  MS {g.gate_index}: theta {g.theta:+.9f} ~ {g.nearest_multiple:+d} x pi/8 "
                f"({mark} grid, deviation {g.deviation:.2e})"
            )
    if report.success and not args.out and not args.json:
        human.append(report.sequence.to_text().rstrip("\n"))
    _emit(args, report.to_json_dict(), human)
    return 0 if report.success else 1


# ---------------------------------------------------------------------------
# compile-local
# ---------------------------------------------------------------------------


def _cmd_compile_local(args: argparse.Namespace) -> int:
    if (args.basis is None) == (args.factors is None):
        raise _CliError(2, "pass exactly one of --basis or --factors")
    if args.basis is not None:
        factors = measurement_basis_factors(args.basis)
    else:
        obj = json.loads(_read_text(args.factors))
        if not isinstance(obj, list):
            raise _CliError(2, f"{args.factors}: expected a JSON list of 2x2 matrices")
        factors = [_matrix_2x2(m) for m in obj]
    result = group_and_compile(
        factors, args.mode, try_permutations=not args.no_permute, force=args.force
    )
    if args.out:
        _write(args.out, result.sequence.to_text())
    obj = {
        "n_qubits": result.sequence.n_qubits,
        "pulses": len(result.sequence),
        "sequence": result.sequence.to_text(),
        "residual_kind": result.residual.kind,
        "residual_angles": [float(a) for a in result.residual.angles],
        "discarded_global_phase": result.discarded_global_phase,
    }
    human = [result.sequence.to_text().rstrip("\n")]
    if len(result.residual.angles):
        angles = ", ".join(f"{a:+.9f}" for a in result.residual.angles)
        human.append(f"# residual z angles ({result.residual.kind}): {angles}")
    _emit(args, obj, human)
    return 0


def _matrix_2x2(entries) -> np.ndarray:
    m = matrix_from_json_obj(entries)
    if m.shape != (2, 2):
        raise _CliError(2, "factors must be 2x2 matrices")
    return m


# ---------------------------------------------------------------------------
# verify / simulate / sample
# ---------------------------------------------------------------------------


def _cmd_verify(args: argparse.Namespace) -> int:
    seq = _load_sequence(args.sequence, args.qubits)
    spec = _load_target(args.target)
    u = sequence_unitary(seq)
    deficit = 1.0 - fidelity(u, spec)
    ok = deficit <= args.deficit
    obj = {
        "deficit": deficit,
        "threshold": args.deficit,
        "pass": ok,
        "pulses": len(seq),
        "n_qubits": seq.n_qubits,
    }
    verdict = "PASS" if ok else "FAIL"
    _emit(args, obj, [f"deficit {deficit:.3e} (threshold {args.deficit:g}): {verdict}"])
    return 0 if ok else 1


def _cmd_simulate(args: argparse.Namespace) -> int:
    seq = _load_sequence(args.sequence, args.qubits)
    u = sequence_unitary(seq)
    if args.out:
        _write(args.out, unitary_to_json(u, seq.n_qubits))
    obj = {"n_qubits": seq.n_qubits, "matrix": matrix_to_json_obj(u)}
    human = [np.array2string(np.round(u, 9), precision=6, suppress_small=True)]
    _emit(args, obj, human)
    return 0


def _cmd_sample(args: argparse.Namespace) -> int:
    stream = RandomStream(args.seed)
    if args.kind == "haar":
        u = haar_unitary(1 << args.qubits, stream)
    else:
        u = random_clifford(args.qubits, args.steps, stream)
    text = unitary_to_json(u, args.qubits)
    if args.out:
        _write(args.out, text)
    obj = {"kind": args.kind, "n_qubits": args.qubits, "seed": args.seed, "matrix": matrix_to_json_obj(u)}
    human = [
        f"{args.kind} sample on {args.qubits} qubits (seed {args.seed})",
        np.array2string(np.round(u, 9), precision=4, suppress_small=True),
    ]
    _emit(args, obj, human)
    return 0


# ---------------------------------------------------------------------------
# compensate
# ---------------------------------------------------------------------------


def _cmd_compensate(args: argparse.Namespace) -> int:
    seq = _load_sequence(args.sequence, args.qubits)
    model = ErrorModel.from_json(_read_text(args.model))
    spec = _load_target(args.target)
    config = SearchConfig(master_seed=args.seed, max_restarts=args.restarts)
    report = compensate(seq, model, spec, config, mode=args.mode, budget=args.budget)
    if args.out:
        _write(args.out, report.compensated.to_text())
    human = [
        f"mode {report.mode}, budget {args.budget}: "
        f"fidelity {report.fidelity_before:.6f} -> {report.fidelity_after:.6f} "
        f"({report.pulses_added} pulses added)"
    ]
    for state, before, after in zip(report.basis_states, report.basis_before, report.basis_after):
        human.append(f"  |{state:0{seq.n_qubits}b}>: {before:.6f} -> {after:.6f}")
    _emit(args, report.to_json_dict(), human)
    return 0


# ---------------------------------------------------------------------------
# benchmarks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchRecord:
    """One benchmark compile, reproducible from (seed, config)."""

    task: int
    qubits: int
    target_class: str
    m: int | None
    deficit: float
    restarts: int
    wall_time: float
    seed: int


def _task_seed(seed: int, *branch: int) -> int:
    words = np.random.SeedSequence([seed, *branch]).generate_state(2)
    return (int(words[0]) << 32) | int(words[1])


def _bench_task(task) -> BenchRecord:
    index, kind, n, sample, seed, restarts, steps, m_lo, m_hi = task
    stream = RandomStream((seed, n, sample))
    if kind == "haar":
        target = haar_unitary(1 << n, stream)
    else:
        target = random_clifford(n, steps, stream)
    config = SearchConfig(
        master_seed=_task_seed(seed, n, sample),
        max_restarts=restarts,
        min_entangling=m_lo,
        max_entangling=max(m_hi, 1),  # the config bound must stay positive
    )
    report = compile_target(TargetSpec.full(target), n, config)
    return BenchRecord(
        task=index,
        qubits=n,
        target_class=kind,
        m=report.n_entangling,
        deficit=report.deficit,
        restarts=report.restarts_used,
        wall_time=report.wall_time,
        seed=config.master_seed,
    )


def _run_tasks(tasks: list[tuple], workers: int) -> list[BenchRecord]:
    if workers == 1:
        return [_bench_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_bench_task, tasks))


def _write_csv(path: str, records: list[BenchRecord]) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task", "qubits", "target_class", "m", "deficit", "restarts", "wall_time", "seed"])
        for r in records:
            writer.writerow([r.task, r.qubits, r.target_class, r.m, r.deficit, r.restarts, r.wall_time, r.seed])


def _plot_backend():
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise _CliError(2, "--plot needs matplotlib (install the 'plot' extra)")
    return plt


def _cmd_bench_scaling(args: argparse.Namespace) -> int:
    sizes = list(args.qubits)
    if any(n < 1 or n > 4 for n in sizes):
        raise _CliError(2, "bench-scaling covers 1 to 4 qubits")
    if 4 in sizes and not args.extended:
        raise _CliError(2, "4-qubit scaling runs take hours; pass --extended")
    tasks = []
    for n in sizes:
        m = _SATURATING_M[n]
        for i in range(args.samples):
            tasks.append((len(tasks), "haar", n, i, args.seed, args.restarts, None, m, m))
    records = _run_tasks(tasks, _workers(args))

    summary = {}
    for n in sizes:
        rows = [r for r in records if r.qubits == n]
        times = [r.wall_time for r in rows]
        restarts = [r.restarts for r in rows]
        summary[n] = {
            "m": _SATURATING_M[n],
            "samples": len(rows),
            "mean_wall_time": float(np.mean(times)),
            "median_wall_time": float(np.median(times)),
            "mean_restarts": float(np.mean(restarts)),
            "median_restarts": float(np.median(restarts)),
        }

    if args.csv:
        _write_csv(args.csv, records)
    if args.plot:
        plt = _plot_backend()
        fig, ax = plt.subplots()
        ax.semilogy(list(summary), [summary[n]["mean_wall_time"] for n in summary], "o-")
        ax.set_xlabel("qubits")
        ax.set_ylabel("mean compile time [s]")
        fig.savefig(args.plot)

    human = []
    for r in records:
        human.append(
            f"task {r.task}: N={r.qubits} M={r.m} deficit {r.deficit:.2e} "
            f"restarts {r.restarts} wall {r.wall_time:.2f} s"
        )
    for n, s in summary.items():
        human.append(
            f"N={n} (M={s['m']}): wall time mean {s['mean_wall_time']:.2f} s / "
            f"median {s['median_wall_time']:.2f} s, restarts median {s['median_restarts']:g}"
        )
    _emit(args, {"records": [asdict(r) for r in records], "summary": summary}, human)
    return 0


def _cmd_bench_clifford(args: argparse.Namespace) -> int:
    n = args.qubits
    if n not in (2, 3, 4):
        raise _CliError(2, "bench-clifford covers 2 to 4 qubits")
    if n == 4 and not args.extended:
        raise _CliError(2, "4-qubit Clifford runs take hours; pass --extended")
    cap = _CLIFFORD_CAP[n]
    tasks = [
        (i, "clifford", n, i, args.seed, args.restarts, args.steps, 0, cap)
        for i in range(args.samples)
    ]
    records = _run_tasks(tasks, _workers(args))

    counts = {m: 0 for m in range(cap + 1)}
    failures = 0
    for r in records:
        if r.m is None:
            failures += 1
        else:
            counts[r.m] += 1
    total = len(records)
    histogram = []
    for m in range(cap + 1):
        p = counts[m] / total
        sigma = float(np.sqrt(total * p * (1.0 - p)))
        histogram.append({"m": m, "count": counts[m], "fraction": p, "sigma": sigma})

    if args.csv:
        _write_csv(args.csv, records)
    if args.plot:
        plt = _plot_backend()
        fig, ax = plt.subplots()
        ax.bar(
            [h["m"] for h in histogram],
            [h["count"] for h in histogram],
            yerr=[h["sigma"] for h in histogram],
            capsize=4,
        )
        ax.set_xlabel("entangling gates")
        ax.set_ylabel(f"count / {total}")
        fig.savefig(args.plot)

    human = [f"{total} random {n}-qubit Cliffords (seed {args.seed}):"]
    for h in histogram:
        bar = "#" * h["count"]
        human.append(f"  M={h['m']}: {h['count']:4d}  ({h['fraction']:.2f} +- {h['sigma']:.1f}) {bar}")
    if failures:
        human.append(f"  unresolved within M<={cap}: {failures}")
    obj = {
        "n_qubits": n,
        "samples": total,
        "histogram": histogram,
        "failures": failures,
        "records": [asdict(r) for r in records],
    }
    _emit(args, obj, human)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mscompile",
        description="Pulse-sequence compiler for collective-rotation hardware.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("compile", help="search for a pulse sequence realizing a target")
    p.add_argument("--target", required=True, help="target spec or unitary JSON file")
    p.add_argument("--qubits", type=int, help="expected register size (validated)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--restarts", type=int, default=200)
    p.add_argument("--max-ms", type=int, default=30, help="entangling-gate budget")
    p.add_argument("--min-ms", type=int, default=0)
    p.add_argument("--deficit", type=float, default=1e-4, help="success threshold")
    p.add_argument("--template", choices=["paper", "full"], default="paper")
    p.add_argument("--snap-grid", action="store_true", help="annotate MS angles on the pi/8 grid")
    p.add_argument("--extended", action="store_true", help="allow 4-qubit and larger searches")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="write the pulse sequence here")
    p.add_argument("--report", help="write the full JSON report here")
    common(p)
    p.set_defaults(fn=_cmd_compile)

    p = sub.add_parser("compile-local", help="analytic compiler for single-qubit gate products")
    p.add_argument("--basis", help="measurement-basis letters, e.g. XYZ")
    p.add_argument("--factors", help="JSON file with a list of 2x2 matrices")
    p.add_argument("--mode", choices=list(LOCAL_MODES), default=MODE_EXACT)
    p.add_argument("--no-permute", action="store_true", help="skip the grouping permutation search")
    p.add_argument("--force", action="store_true", help="compile even past the grouping limit")
    p.add_argument("--out")
    common(p)
    p.set_defaults(fn=_cmd_compile_local)

    p = sub.add_parser("verify", help="check a sequence file against a target")
    p.add_argument("--sequence", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--qubits", type=int)
    p.add_argument("--deficit", type=float, default=1e-8)
    common(p)
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("simulate", help="print the unitary a sequence applies")
    p.add_argument("--sequence", required=True)
    p.add_argument("--qubits", type=int)
    p.add_argument("--out", help="write the unitary JSON here")
    common(p)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("sample", help="draw a random benchmark unitary")
    p.add_argument("--kind", choices=["haar", "clifford"], required=True)
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--steps", type=int, help="Clifford walk length override")
    p.add_argument("--out")
    common(p)
    p.set_defaults(fn=_cmd_sample)

    p = sub.add_parser("compensate", help="re-optimize a sequence against an error model")
    p.add_argument("--sequence", required=True)
    p.add_argument("--model", required=True, help="error model JSON file")
    p.add_argument("--target", required=True)
    p.add_argument("--qubits", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--mode", choices=list(COMP_MODES), default="approximate")
    p.add_argument("--budget", type=int, default=2, help="correction units per end")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--out", help="write the compensated sequence here")
    common(p)
    p.set_defaults(fn=_cmd_compensate)

    p = sub.add_parser("bench-scaling", help="Haar compile times at the saturating depth")
    p.add_argument("--qubits", type=int, nargs="+", required=True)
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--restarts", type=int, default=200)
    p.add_argument("--extended", action="store_true")
    p.add_argument("--workers", type=int)
    p.add_argument("--csv")
    p.add_argument("--plot")
    common(p)
    p.set_defaults(fn=_cmd_bench_scaling)

    p = sub.add_parser("bench-clifford", help="minimal-depth histogram over random Cliffords")
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--steps", type=int)
    p.add_argument("--restarts", type=int, default=200)
    p.add_argument("--extended", action="store_true")
    p.add_argument("--workers", type=int)
    p.add_argument("--csv")
    p.add_argument("--plot")
    common(p)
    p.set_defaults(fn=_cmd_bench_clifford)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except CompileVerificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
