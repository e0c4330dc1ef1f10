import json

import numpy as np
import pytest

from mscompile.cli import main
from mscompile.gateset import (
    Pulse,
    PulseSequence,
    load_unitary,
    matrix_to_json_obj,
    save_unitary,
    sequence_unitary,
)
from mscompile.errcomp import ErrorModel, uniform_crosstalk
from mscompile.objective import TargetSpec, cnot_unitary
from mscompile.sampler import is_clifford

from conftest import kron_chain, phase_aligned_diff, random_su2


@pytest.fixture()
def cnot_target(tmp_path):
    path = tmp_path / "cnot.json"
    save_unitary(str(path), cnot_unitary(), 2)
    return str(path)


def run_json(capsys, argv):
    code = main(argv + ["--json"])
    return code, json.loads(capsys.readouterr().out)


class TestSimulate:
    def test_empty_sequence_is_identity(self, tmp_path, capsys):
        seq = tmp_path / "empty.seq"
        seq.write_text("")
        code, obj = run_json(capsys, ["simulate", "--sequence", str(seq), "--qubits", "2"])
        assert code == 0
        u = np.asarray(obj["matrix"])[..., 0] + 1j * np.asarray(obj["matrix"])[..., 1]
        assert np.array_equal(u, np.eye(4))

    def test_headerless_without_qubits_fails(self, tmp_path, capsys):
        seq = tmp_path / "empty.seq"
        seq.write_text("")
        assert main(["simulate", "--sequence", str(seq)]) == 2

    def test_out_file_round_trips(self, tmp_path):
        seq = PulseSequence(2, (Pulse.collective(0.4, 0.1), Pulse.ms(0.9, -0.2)))
        src = tmp_path / "s.seq"
        src.write_text(seq.to_text())
        out = tmp_path / "u.json"
        assert main(["simulate", "--sequence", str(src), "--out", str(out)]) == 0
        u, n = load_unitary(str(out))
        assert n == 2
        assert np.max(np.abs(u - sequence_unitary(seq))) < 1e-15

    def test_missing_file(self):
        assert main(["simulate", "--sequence", "/nonexistent.seq", "--qubits", "1"]) == 2


class TestCompileLocal:
    def test_tomography_setting(self, capsys):
        code, obj = run_json(
            capsys, ["compile-local", "--basis", "XYZ", "--mode", "mod-independent-z"]
        )
        assert code == 0
        assert obj["n_qubits"] == 3
        assert obj["residual_kind"] == "independent-z"
        assert len(obj["residual_angles"]) == 3
        assert obj["pulses"] >= 1

    def test_factors_file_exact_mode(self, tmp_path, capsys):
        rng = np.random.default_rng(5)
        factors = [random_su2(rng) for _ in range(2)]
        path = tmp_path / "factors.json"
        path.write_text(json.dumps([matrix_to_json_obj(f) for f in factors]))
        code, obj = run_json(capsys, ["compile-local", "--factors", str(path)])
        assert code == 0
        seq = PulseSequence.from_text(obj["sequence"])
        assert phase_aligned_diff(sequence_unitary(seq), kron_chain(factors)) < 1e-9

    def test_requires_exactly_one_input(self, tmp_path):
        assert main(["compile-local"]) == 2
        path = tmp_path / "factors.json"
        path.write_text("[]")
        assert main(["compile-local", "--basis", "XZ", "--factors", str(path)]) == 2

    def test_bad_basis_letter(self):
        assert main(["compile-local", "--basis", "XQ"]) == 2


class TestVerify:
    def test_pass_and_fail(self, tmp_path, capsys):
        seq = PulseSequence(1, (Pulse.collective(0.7, 0.0),))
        sf = tmp_path / "a.seq"
        sf.write_text(seq.to_text())
        good = tmp_path / "good.json"
        save_unitary(str(good), sequence_unitary(seq), 1)
        bad = tmp_path / "bad.json"
        save_unitary(str(bad), np.eye(2, dtype=complex), 1)

        code, obj = run_json(capsys, ["verify", "--sequence", str(sf), "--target", str(good)])
        assert code == 0
        assert obj["pass"] is True
        assert obj["deficit"] < 1e-12

        assert main(["verify", "--sequence", str(sf), "--target", str(bad)]) == 1

    def test_threshold_flag(self, tmp_path):
        seq = PulseSequence(1, (Pulse.collective(0.7, 0.0),))
        sf = tmp_path / "a.seq"
        sf.write_text(seq.to_text())
        tf = tmp_path / "t.json"
        from mscompile.gateset import rotation_2x2

        save_unitary(str(tf), rotation_2x2(0.7 + 1e-7, 0.0), 1)
        argv = ["verify", "--sequence", str(sf), "--target", str(tf)]
        assert main(argv) == 0
        assert main(argv + ["--deficit", "1e-20"]) == 1

    def test_spec_kind_target_file(self, tmp_path, capsys):
        spec = TargetSpec.phased(
            [((0,), np.eye(2, dtype=complex)[:, [0]]), ((1,), np.eye(2, dtype=complex)[:, [1]])]
        )
        tf = tmp_path / "spec.json"
        tf.write_text(spec.to_json())
        sf = tmp_path / "empty.seq"
        sf.write_text("# qubits: 1\n")
        code, obj = run_json(capsys, ["verify", "--sequence", str(sf), "--target", str(tf)])
        assert code == 0 and obj["pass"] is True

    def test_garbage_target(self, tmp_path):
        tf = tmp_path / "t.json"
        tf.write_text("[1, 2, 3]")
        sf = tmp_path / "a.seq"
        sf.write_text("# qubits: 1\n")
        assert main(["verify", "--sequence", str(sf), "--target", str(tf)]) == 2


class TestCompile:
    def test_cnot_end_to_end(self, tmp_path, cnot_target, capsys):
        out = tmp_path / "cnot.seq"
        report = tmp_path / "report.json"
        code, obj = run_json(
            capsys,
            [
                "compile", "--target", cnot_target, "--seed", "7", "--restarts", "30",
                "--max-ms", "2", "--out", str(out), "--report", str(report),
            ],
        )
        assert code == 0
        assert obj["success"] is True
        assert obj["n_entangling"] == 1
        assert main(["verify", "--sequence", str(out), "--target", cnot_target]) == 0
        saved = json.loads(report.read_text())
        assert saved["n_entangling"] == 1

    def test_deterministic_reports(self, tmp_path, cnot_target, capsys):
        argv = ["compile", "--target", cnot_target, "--seed", "3", "--restarts", "20", "--max-ms", "1"]
        _, first = run_json(capsys, argv)
        _, second = run_json(capsys, argv)
        first.pop("wall_time")
        second.pop("wall_time")
        assert first == second

    def test_failure_exit_code(self, tmp_path, capsys):
        swap = np.eye(4, dtype=complex)[:, [0, 2, 1, 3]]
        tf = tmp_path / "swap.json"
        save_unitary(str(tf), swap, 2)
        code, obj = run_json(
            capsys,
            ["compile", "--target", str(tf), "--seed", "1", "--restarts", "5", "--max-ms", "1"],
        )
        assert code == 1
        assert obj["success"] is False
        assert obj["sequence"] is None

    def test_qubit_mismatch(self, cnot_target):
        assert main(["compile", "--target", cnot_target, "--seed", "1", "--qubits", "3"]) == 2

    def test_wide_targets_gated(self, tmp_path, capsys):
        tf = tmp_path / "id4.json"
        save_unitary(str(tf), np.eye(16, dtype=complex), 4)
        assert main(["compile", "--target", str(tf), "--seed", "1"]) == 2
        code, obj = run_json(
            capsys,
            ["compile", "--target", str(tf), "--seed", "1", "--restarts", "5", "--extended"],
        )
        assert code == 0
        assert obj["n_entangling"] == 0


class TestSample:
    def test_haar_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            assert main(
                ["sample", "--kind", "haar", "--qubits", "2", "--seed", "11", "--out", str(path)]
            ) == 0
        assert a.read_text() == b.read_text()
        u, n = load_unitary(str(a))
        assert n == 2
        assert np.max(np.abs(u.conj().T @ u - np.eye(4))) < 1e-12

    def test_clifford_sample(self, tmp_path):
        path = tmp_path / "c.json"
        assert main(
            [
                "sample", "--kind", "clifford", "--qubits", "2", "--seed", "4",
                "--steps", "600", "--out", str(path),
            ]
        ) == 0
        u, _ = load_unitary(str(path))
        assert is_clifford(u)


class TestCompensate:
    def test_improves_under_crosstalk(self, tmp_path, capsys):
        seq = PulseSequence(
            2,
            (
                Pulse.collective(0.9, 0.3),
                Pulse.addressed_z(1, 0.6),
                Pulse.ms(np.pi / 2, 0.1),
                Pulse.addressed_z(2, -1.1),
            ),
        )
        sf = tmp_path / "s.seq"
        sf.write_text(seq.to_text())
        tf = tmp_path / "t.json"
        save_unitary(str(tf), sequence_unitary(seq), 2)
        mf = tmp_path / "m.json"
        mf.write_text(ErrorModel.crosstalk_z(uniform_crosstalk(2, 0.08)).to_json())
        out = tmp_path / "comp.seq"
        code, obj = run_json(
            capsys,
            [
                "compensate", "--sequence", str(sf), "--model", str(mf), "--target", str(tf),
                "--seed", "2", "--restarts", "2", "--out", str(out),
            ],
        )
        assert code == 0
        assert obj["fidelity_after"] > obj["fidelity_before"]
        comp = PulseSequence.from_text(out.read_text())
        assert len(comp) == len(seq) + obj["pulses_added"]

    def test_bad_mode_rejected(self, tmp_path):
        sf = tmp_path / "s.seq"
        sf.write_text("# qubits: 1\nC 0.5 0\n")
        with pytest.raises(SystemExit) as exc:
            main(
                ["compensate", "--sequence", str(sf), "--model", "x", "--target", "y",
                 "--seed", "1", "--mode", "magic"]
            )
        assert exc.value.code == 2


class TestBench:
    def test_scaling_records_and_csv(self, tmp_path, capsys):
        csv_path = tmp_path / "scaling.csv"
        code, obj = run_json(
            capsys,
            [
                "bench-scaling", "--qubits", "1", "--samples", "2", "--seed", "5",
                "--restarts", "10", "--csv", str(csv_path),
            ],
        )
        assert code == 0
        assert [r["task"] for r in obj["records"]] == [0, 1]
        assert all(r["m"] == 0 for r in obj["records"])
        assert obj["summary"]["1"]["samples"] == 2
        lines = csv_path.read_text().strip().splitlines()
        assert len(lines) == 3
        assert lines[0].startswith("task,qubits")

    def test_scaling_range_checks(self):
        assert main(["bench-scaling", "--qubits", "5", "--seed", "1"]) == 2
        assert main(["bench-scaling", "--qubits", "4", "--seed", "1"]) == 2

    def test_clifford_histogram_deterministic(self, capsys):
        argv = [
            "bench-clifford", "--qubits", "2", "--samples", "2", "--seed", "3",
            "--steps", "400", "--restarts", "30",
        ]
        _, first = run_json(capsys, argv)
        _, second = run_json(capsys, argv)
        assert first["histogram"] == second["histogram"]
        assert sum(h["count"] for h in first["histogram"]) == 2
        assert [h["m"] for h in first["histogram"]] == [0, 1, 2, 3]

    def test_clifford_range_checks(self):
        assert main(["bench-clifford", "--qubits", "1", "--seed", "1"]) == 2
        assert main(["bench-clifford", "--qubits", "4", "--seed", "1"]) == 2

    def test_bad_workers_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MSCOMPILE_WORKERS", "many")
        assert main(["bench-scaling", "--qubits", "1", "--samples", "1", "--seed", "1"]) == 2


class TestParser:
    def test_unknown_command_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_seed_required_for_bench(self):
        with pytest.raises(SystemExit) as exc:
            main(["bench-scaling", "--qubits", "1"])
        assert exc.value.code == 2
