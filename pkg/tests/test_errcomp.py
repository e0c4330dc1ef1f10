import json

import numpy as np
import pytest

from mscompile.errcomp import (
    MODE_APPROXIMATE,
    MODE_EXACT,
    ErrorModel,
    _cap_segments,
    _chain_value_grad,
    _Segment,
    apply_model,
    basis_state_fidelities,
    compensate,
    uniform_crosstalk,
)
from mscompile.gateset import (
    COLLECTIVE,
    MS_GATE,
    Pulse,
    PulseSequence,
    addressed_z_matrix,
    sequence_unitary,
)
from mscompile.objective import TargetSpec, toffoli_measurement_spec, toffoli_unitary
from mscompile.optimizer import SearchConfig

from conftest import haar_unitary, max_abs_diff


def z_heavy_sequence() -> PulseSequence:
    pulses = (
        Pulse.collective(0.9, 0.3),
        Pulse.addressed_z(1, 0.6),
        Pulse.ms(np.pi / 2, 0.1),
        Pulse.addressed_z(2, -1.1),
        Pulse.collective(0.4, -0.8),
    )
    return PulseSequence(2, pulses)


def comp_config(**kw):
    base = dict(master_seed=13, max_restarts=3)
    base.update(kw)
    return SearchConfig(**base)


class TestErrorModel:
    def test_ideal_matches_sequence_unitary(self):
        seq = z_heavy_sequence()
        assert max_abs_diff(apply_model(seq, ErrorModel.ideal()), sequence_unitary(seq)) == 0.0

    def test_identity_detection(self):
        assert ErrorModel.ideal().is_identity()
        assert ErrorModel.crosstalk_z(np.eye(3)).is_identity()
        assert not ErrorModel.crosstalk_z(uniform_crosstalk(2, 0.01)).is_identity()
        override = ("Z 1 0.5", np.eye(4))
        assert not ErrorModel(overrides=(override,)).is_identity()

    def test_uniform_crosstalk_matrix(self):
        m = uniform_crosstalk(3, 0.05)
        assert np.array_equal(np.diagonal(m), np.ones(3))
        off = m - np.diag(np.diagonal(m))
        assert np.all(off[~np.eye(3, dtype=bool)] == 0.05)

    def test_addressed_z_leak(self):
        # Z on qubit 1 drags qubit 2 through a fraction eps of the angle.
        eps = 0.05
        model = ErrorModel.crosstalk_z(uniform_crosstalk(2, eps))
        seq = PulseSequence(2, (Pulse.addressed_z(1, 0.8),))
        expected = addressed_z_matrix(1, 0.8, 2) @ addressed_z_matrix(2, eps * 0.8, 2)
        assert max_abs_diff(apply_model(seq, model), expected) < 1e-14

    def test_collective_and_ms_pulses_unaffected(self):
        model = ErrorModel.crosstalk_z(uniform_crosstalk(2, 0.3))
        seq = PulseSequence(2, (Pulse.collective(0.7, 0.2), Pulse.ms(1.1, -0.4)))
        assert max_abs_diff(apply_model(seq, model), sequence_unitary(seq)) == 0.0

    def test_override_replaces_pulse(self):
        rng = np.random.default_rng(0)
        sub = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
        model = ErrorModel(overrides=(("Z 1 0.5", sub),))
        seq = PulseSequence(2, (Pulse.addressed_z(1, 0.5),))
        assert max_abs_diff(apply_model(seq, model), sub) == 0.0

    def test_override_key_normalized(self):
        sub = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
        model = ErrorModel(overrides=(("Z 1 0.5", sub),))
        wrapped = PulseSequence(2, (Pulse.addressed_z(1, 0.5 + 4 * np.pi),))
        assert max_abs_diff(apply_model(wrapped, model), sub) == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            ErrorModel(crosstalk=np.zeros((2, 3)))
        with pytest.raises(ValueError):
            ErrorModel(overrides=(("Z 1 0.5", np.ones((2, 2))),))
        model = ErrorModel.crosstalk_z(uniform_crosstalk(3, 0.1))
        with pytest.raises(ValueError):
            apply_model(PulseSequence(2, (Pulse.addressed_z(1, 0.3),)), model)

    def test_json_round_trip(self):
        sub = np.diag([1.0, -1.0]).astype(complex)
        model = ErrorModel(
            crosstalk=uniform_crosstalk(2, 0.05), overrides=(("Z 2 0.25", sub),)
        )
        back = ErrorModel.from_json(model.to_json())
        assert np.array_equal(back.crosstalk, model.crosstalk)
        assert back.overrides[0][0] == "Z 2 0.25"
        assert max_abs_diff(back.overrides[0][1], sub) == 0.0
        assert ErrorModel.from_json(ErrorModel.ideal().to_json()).is_identity()


class TestBasisStateFidelities:
    def test_exact_target_scores_one_everywhere(self):
        spec = TargetSpec.full(toffoli_unitary())
        states, vals = basis_state_fidelities(toffoli_unitary(), spec)
        assert states == tuple(range(8))
        assert np.allclose(vals, 1.0, atol=1e-14)

    def test_pinned_subset_only(self):
        spec = toffoli_measurement_spec()
        states, vals = basis_state_fidelities(toffoli_unitary(), spec)
        assert states == (0, 1, 2, 3)
        assert np.allclose(vals, 1.0, atol=1e-14)

    def test_detects_a_wrong_column(self):
        u = toffoli_unitary().copy()
        u[:, [0, 4]] = u[:, [4, 0]]
        spec = TargetSpec.full(toffoli_unitary())
        states, vals = basis_state_fidelities(u, spec)
        assert vals[0] < 1e-12
        assert vals[1] > 1 - 1e-12


class TestChainGradient:
    def test_matches_finite_differences(self):
        n = 2
        model = ErrorModel.crosstalk_z(uniform_crosstalk(n, 0.07))
        rng = np.random.default_rng(42)
        fixed = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
        pre, pos = _cap_segments(n, 2, 0)
        middle = [
            _Segment("fixed", matrix=fixed, origin="original"),
            _Segment("ms", (pos, pos + 1), origin="original"),
        ]
        pos += 2
        post, pos = _cap_segments(n, 2, pos)
        segments = pre + middle + post
        spec = TargetSpec.full(haar_unitary(rng, 4))

        x = rng.uniform(-np.pi, np.pi, pos)
        value, grad = _chain_value_grad(segments, x, spec, n, model, pos)
        assert 0.0 <= value <= 1.0 + 1e-12
        h = 1e-6
        for i in range(pos):
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            fd = (
                _chain_value_grad(segments, xp, spec, n, model, pos)[0]
                - _chain_value_grad(segments, xm, spec, n, model, pos)[0]
            ) / (2 * h)
            assert abs(grad[i] - fd) / max(1.0, abs(fd)) < 1e-6


class TestCompensate:
    def setup_method(self):
        self.seq = z_heavy_sequence()
        self.spec = TargetSpec.full(sequence_unitary(self.seq))
        self.model = ErrorModel.crosstalk_z(uniform_crosstalk(2, 0.08))

    def test_noop_model_returns_same_object(self):
        report = compensate(self.seq, ErrorModel.ideal(), self.spec, comp_config())
        assert report.compensated is self.seq
        assert report.pulses_added == 0
        assert report.fidelity_after == report.fidelity_before

    def test_crosstalk_degrades_then_approximate_recovers_some(self):
        report = compensate(self.seq, self.model, self.spec, comp_config())
        assert report.fidelity_before < 1 - 1e-4
        assert report.fidelity_after > report.fidelity_before
        assert report.pulses_added == len(report.compensated) - len(self.seq)
        assert report.pulses_added >= 0

    def test_approximate_keeps_middle_bit_identical(self):
        report = compensate(self.seq, self.model, self.spec, comp_config())
        inner = report.compensated.pulses
        # the original pulses survive as one contiguous run
        starts = [
            i
            for i in range(len(inner) - len(self.seq) + 1)
            if inner[i : i + len(self.seq)] == self.seq.pulses
        ]
        assert starts

    def test_exact_mode_cancels_crosstalk(self):
        report = compensate(self.seq, self.model, self.spec, comp_config(), mode=MODE_EXACT)
        assert report.fidelity_after >= 1 - 1e-6
        before = [p.kind for p in self.seq]
        after = [p.kind for p in report.compensated]
        assert after.count(MS_GATE) == before.count(MS_GATE)

    def test_never_worse_under_hostile_model(self):
        rng = np.random.default_rng(1)
        wild = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
        key = Pulse.ms(np.pi / 2, 0.1).format_line()
        model = ErrorModel(
            crosstalk=uniform_crosstalk(2, 0.08), overrides=((key, wild),)
        )
        report = compensate(self.seq, model, self.spec, comp_config(max_restarts=2))
        assert report.fidelity_after >= report.fidelity_before

    def test_exact_mode_freezes_overridden_pulse(self):
        z_pulse = self.seq.pulses[1]
        key = z_pulse.format_line()
        ideal = addressed_z_matrix(z_pulse.qubit, z_pulse.theta, 2)
        model = ErrorModel(
            crosstalk=uniform_crosstalk(2, 0.08), overrides=((key, ideal),)
        )
        report = compensate(self.seq, model, self.spec, comp_config(), mode=MODE_EXACT)
        assert any(p == z_pulse for p in report.compensated)
        assert report.fidelity_after >= 1 - 1e-6

    def test_budget_one_adds_collective_caps_only(self):
        report = compensate(self.seq, self.model, self.spec, comp_config(), budget=1)
        inner = report.compensated.pulses
        start = next(
            i
            for i in range(len(inner) - len(self.seq) + 1)
            if inner[i : i + len(self.seq)] == self.seq.pulses
        )
        added = inner[:start] + inner[start + len(self.seq) :]
        assert all(p.kind == COLLECTIVE for p in added)
        assert len(added) <= 2

    def test_deterministic(self):
        a = compensate(self.seq, self.model, self.spec, comp_config())
        b = compensate(self.seq, self.model, self.spec, comp_config())
        assert a.compensated.to_text() == b.compensated.to_text()
        assert a.fidelity_after == b.fidelity_after

    def test_basis_tables_align(self):
        report = compensate(self.seq, self.model, self.spec, comp_config(max_restarts=1))
        assert report.basis_states == (0, 1, 2, 3)
        assert len(report.basis_before) == len(report.basis_after) == 4

    def test_report_json(self):
        report = compensate(self.seq, self.model, self.spec, comp_config(max_restarts=1))
        blob = json.loads(json.dumps(report.to_json_dict()))
        assert blob["mode"] == MODE_APPROXIMATE
        assert "# qubits: 2" in blob["compensated"]

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            compensate(self.seq, self.model, self.spec, comp_config(), mode="magic")
        with pytest.raises(ValueError):
            compensate(self.seq, self.model, self.spec, comp_config(), budget=0)
        with pytest.raises(ValueError):
            compensate(self.seq, self.model, TargetSpec.full(np.eye(8)), comp_config())
