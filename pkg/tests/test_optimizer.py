import json

import numpy as np
import pytest

from mscompile.ansatz import build_ansatz
from mscompile.gateset import MS_GATE, rotation_2x2, sequence_unitary
from mscompile.objective import TargetSpec, cnot_unitary, fidelity, objective_with_gradient
from mscompile.optimizer import (
    CompileReport,
    NonFiniteObjective,
    SearchConfig,
    bfgs_maximize,
    compile_target,
    repeated_local_search,
    restart_start_point,
)

from conftest import kron_chain, random_su2


def small_config(**kw):
    base = dict(master_seed=11, max_restarts=40, max_entangling=4)
    base.update(kw)
    return SearchConfig(**base)


class TestSearchConfig:
    def test_defaults(self):
        c = SearchConfig(master_seed=0)
        assert c.max_restarts == 200
        assert c.success_deficit == 1e-4
        assert c.polish_deficit == 1e-9
        assert c.max_entangling == 30
        assert c.bfgs_max_iters == 2000
        assert c.bfgs_grad_tol == 1e-10
        assert c.init_scale == 1.0

    @pytest.mark.parametrize(
        "kw",
        [
            dict(master_seed=-1),
            dict(master_seed=1 << 64),
            dict(master_seed=0, max_restarts=0),
            dict(master_seed=0, success_deficit=0.0),
            dict(master_seed=0, success_deficit=1e-12, polish_deficit=1e-9),
            dict(master_seed=0, min_entangling=5, max_entangling=3),
            dict(master_seed=0, template="spiral"),
            dict(master_seed=0, n_workers=0),
        ],
    )
    def test_rejects_bad_fields(self, kw):
        with pytest.raises(ValueError):
            SearchConfig(**kw)


class TestBfgsMaximize:
    def test_quadratic_bowl(self):
        rng = np.random.default_rng(3)
        c = rng.normal(size=6)

        def fun(x):
            d = x - c
            return -float(d @ d), -2.0 * d

        x, value, iters = bfgs_maximize(fun, rng.normal(size=6))
        assert np.linalg.norm(x - c) < 1e-8
        assert value > -1e-15
        assert iters >= 1

    def test_rosenbrock(self):
        def fun(x):
            a, b = x
            r = (1 - a) ** 2 + 100.0 * (b - a * a) ** 2
            g = np.array([-2 * (1 - a) - 400 * a * (b - a * a), 200 * (b - a * a)])
            return -r, -g

        x, value, _ = bfgs_maximize(fun, np.array([-1.2, 1.0]))
        assert np.allclose(x, [1.0, 1.0], atol=1e-6)
        assert abs(value) < 1e-12

    def test_nonfinite_objective_raises(self):
        def fun(x):
            return float("nan"), np.zeros_like(x)

        with pytest.raises(NonFiniteObjective):
            bfgs_maximize(fun, np.zeros(2))

    def test_nonfinite_start_raises(self):
        with pytest.raises(ValueError):
            bfgs_maximize(lambda x: (0.0, np.zeros_like(x)), np.array([np.inf]))

    def test_single_qubit_target_from_ten_seeds(self):
        ansatz = build_ansatz(1, 0)
        spec = TargetSpec.full(rotation_2x2(0.7, 0.0))
        config = SearchConfig(master_seed=5)

        def fun(x):
            return objective_with_gradient(ansatz, x, spec)

        for r in range(10):
            x0 = restart_start_point(config, 0, r, ansatz.n_params)
            _, value, _ = bfgs_maximize(fun, x0)
            assert 1.0 - value < 1e-10


class TestRestartSeeding:
    def test_reproducible(self):
        c = SearchConfig(master_seed=42)
        a = restart_start_point(c, 3, 17, 25)
        b = restart_start_point(c, 3, 17, 25)
        assert np.array_equal(a, b)

    def test_distinct_restarts_and_depths(self):
        c = SearchConfig(master_seed=42)
        a = restart_start_point(c, 3, 0, 25)
        b = restart_start_point(c, 3, 1, 25)
        d = restart_start_point(c, 4, 0, 25)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, d)

    def test_scale_bounds(self):
        c = SearchConfig(master_seed=1, init_scale=0.25)
        x = restart_start_point(c, 0, 0, 1000)
        assert np.max(np.abs(x)) <= 0.25 * np.pi


class TestRepeatedLocalSearch:
    def test_identity_succeeds_on_first_restart(self):
        ansatz = build_ansatz(2, 0)
        spec = TargetSpec.full(np.eye(4))
        result = repeated_local_search(ansatz, spec, small_config())
        assert result.success
        assert result.restarts_used == 1
        assert result.deficit <= 1e-4

    def test_same_config_bit_identical(self):
        ansatz = build_ansatz(1, 0)
        spec = TargetSpec.full(rotation_2x2(1.1, 0.4))
        cfg = small_config()
        r1 = repeated_local_search(ansatz, spec, cfg)
        r2 = repeated_local_search(ansatz, spec, cfg)
        assert r1.success and r2.success
        assert np.array_equal(r1.params, r2.params)
        assert r1.deficit == r2.deficit
        assert r1.restarts_used == r2.restarts_used

    def test_worker_count_does_not_change_result(self):
        ansatz = build_ansatz(1, 0)
        spec = TargetSpec.full(rotation_2x2(1.1, 0.4))
        serial = repeated_local_search(ansatz, spec, small_config(n_workers=1))
        pooled = repeated_local_search(ansatz, spec, small_config(n_workers=2))
        assert serial.success and pooled.success
        assert np.array_equal(serial.params, pooled.params)
        assert serial.restarts_used == pooled.restarts_used

    def test_failure_reports_best_effort(self):
        ansatz = build_ansatz(2, 0)
        spec = TargetSpec.full(cnot_unitary())
        result = repeated_local_search(ansatz, spec, small_config(max_restarts=5))
        assert not result.success
        assert result.restarts_used == 5
        assert result.params is not None
        assert 0.01 < result.deficit < 1.0


@pytest.fixture(scope="module")
def cnot_report():
    spec = TargetSpec.full(cnot_unitary())
    return compile_target(spec, 2, small_config())


class TestCompileTarget:
    def test_cnot_needs_one_entangler(self, cnot_report):
        r = cnot_report
        assert r.success
        assert r.n_entangling == 1
        assert r.deficit <= 1e-9

    def test_cnot_sequence_verifies(self, cnot_report):
        u = sequence_unitary(cnot_report.sequence)
        spec = TargetSpec.full(cnot_unitary())
        assert 1.0 - fidelity(u, spec) <= 1e-8
        kinds = [p.kind for p in cnot_report.sequence]
        assert kinds.count(MS_GATE) == 1

    def test_escalation_record(self, cnot_report):
        depths = [e.n_entangling for e in cnot_report.escalation]
        assert depths == [0, 1]
        assert cnot_report.escalation[0].restarts == 40
        assert cnot_report.escalation[0].best_deficit > 1e-2
        assert cnot_report.escalation[1].best_deficit == cnot_report.deficit

    def test_report_json_round_trip(self, cnot_report):
        blob = json.dumps(cnot_report.to_json_dict())
        back = json.loads(blob)
        assert back["success"] is True
        assert back["n_entangling"] == 1
        assert len(back["ms_grid"]) == 1

    def test_determinism_key_excludes_timing(self, cnot_report):
        key = cnot_report.determinism_key()
        assert "wall_time" not in key
        spec = TargetSpec.full(cnot_unitary())
        again = compile_target(spec, 2, small_config())
        assert again.determinism_key() == cnot_report.determinism_key()

    def test_local_target_needs_no_entangler(self):
        rng = np.random.default_rng(8)
        target = kron_chain([random_su2(rng), random_su2(rng)])
        report = compile_target(TargetSpec.full(target), 2, small_config())
        assert report.success
        assert report.n_entangling == 0
        assert all(p.kind != MS_GATE for p in report.sequence)
        assert report.ms_grid == ()

    def test_exhausted_budget_reports_failure(self):
        swap = np.eye(4)[:, [0, 2, 1, 3]]
        report = compile_target(
            TargetSpec.full(swap), 2, small_config(max_restarts=6, max_entangling=1)
        )
        assert not report.success
        assert report.sequence is None
        assert report.n_entangling is None
        assert 0.01 < report.deficit < 1.0
        assert [e.n_entangling for e in report.escalation] == [0, 1]
        assert report.restarts_used == 12
        json.dumps(report.to_json_dict())

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            compile_target(TargetSpec.full(np.eye(4)), 3, small_config())

    def test_min_entangling_skips_shallow_depths(self):
        spec = TargetSpec.full(cnot_unitary())
        report = compile_target(spec, 2, small_config(min_entangling=1))
        assert report.success
        assert report.n_entangling == 1
        assert [e.n_entangling for e in report.escalation] == [1]


class TestReportShape:
    def test_fields_present(self, cnot_report):
        assert isinstance(cnot_report, CompileReport)
        assert cnot_report.wall_time > 0
        assert isinstance(cnot_report.discarded_global_phase, float)
        assert cnot_report.restarts_used >= 1
