import io
from collections import Counter
from datetime import timedelta
from fractions import Fraction

import pytest

from sopa import (
    CostVariant,
    CostVariantConfig,
    EventLog,
    ExactDecimal,
    ModelError,
    SimulationError,
    SimulationSettings,
    derive_instance_rng,
    parse_model,
    simulate,
    simulate_stream,
    write_xes,
    write_xes_stream,
)
from tests.conftest import T0

LINEAR = """
<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL"
             xmlns:sopa="urn:sopa:annotations">
  <process id="p">
    <startEvent id="s" name="Begin"/>
    <task id="t" name="Work">
      <extensionElements><sopa:costDriver id="Mail"/></extensionElements>
    </task>
    <endEvent id="e" name="Done"/>
    <sequenceFlow id="f1" sourceRef="s" targetRef="t"/>
    <sequenceFlow id="f2" sourceRef="t" targetRef="e"/>
  </process>
</definitions>
"""

SPLIT = """
<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL"
             xmlns:sopa="urn:sopa:annotations">
  <process id="p">
    <startEvent id="s" name="Begin"/>
    <exclusiveGateway id="g"/>
    <task id="a" name="Left"/>
    <task id="b" name="Right"/>
    <exclusiveGateway id="j"/>
    <endEvent id="e" name="Done"/>
    <sequenceFlow id="f1" sourceRef="s" targetRef="g"/>
    <sequenceFlow id="f2" sourceRef="g" targetRef="a">
      <extensionElements><sopa:probability value="0.25"/></extensionElements>
    </sequenceFlow>
    <sequenceFlow id="f3" sourceRef="g" targetRef="b">
      <extensionElements><sopa:probability value="0.75"/></extensionElements>
    </sequenceFlow>
    <sequenceFlow id="f4" sourceRef="a" targetRef="j"/>
    <sequenceFlow id="f5" sourceRef="b" targetRef="j"/>
    <sequenceFlow id="f6" sourceRef="j" targetRef="e"/>
  </process>
</definitions>
"""

LOOP = """
<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL"
             xmlns:sopa="urn:sopa:annotations">
  <process id="p">
    <startEvent id="s" name="Begin"/>
    <exclusiveGateway id="j"/>
    <task id="t" name="Retry"/>
    <exclusiveGateway id="g"/>
    <endEvent id="e" name="Done"/>
    <sequenceFlow id="f1" sourceRef="s" targetRef="j"/>
    <sequenceFlow id="f2" sourceRef="j" targetRef="t"/>
    <sequenceFlow id="f3" sourceRef="t" targetRef="g"/>
    <sequenceFlow id="f4" sourceRef="g" targetRef="j">
      <extensionElements><sopa:probability value="0.5"/></extensionElements>
    </sequenceFlow>
    <sequenceFlow id="f5" sourceRef="g" targetRef="e">
      <extensionElements><sopa:probability value="0.5"/></extensionElements>
    </sequenceFlow>
  </process>
</definitions>
"""

ONE = ExactDecimal(Fraction(1))


def tiny_config(*driver_ids: str) -> CostVariantConfig:
    costs = {d: ExactDecimal(Fraction(1, 100)) for d in driver_ids}
    return CostVariantConfig(count=1, variants=(CostVariant("only", ONE, costs),))


class TestDeterminism:
    def test_same_seed_same_log(self, hiring_model, scenario_a):
        settings = SimulationSettings(instances=40, seed=7)
        a = simulate(hiring_model, scenario_a, settings)
        b = simulate(hiring_model, scenario_a, settings)
        assert a == b
        assert write_xes(a) == write_xes(b)

    def test_different_seeds_differ(self, hiring_model, scenario_a):
        a = simulate(hiring_model, scenario_a, SimulationSettings(instances=40, seed=1))
        b = simulate(hiring_model, scenario_a, SimulationSettings(instances=40, seed=2))
        assert a != b

    def test_stream_matches_batch(self, hiring_model, scenario_a):
        settings = SimulationSettings(instances=25, seed=11)
        batch = simulate(hiring_model, scenario_a, settings)
        buffer = io.BytesIO()
        count = write_xes_stream(simulate_stream(hiring_model, scenario_a, settings), buffer)
        assert count == 25
        assert buffer.getvalue() == write_xes(batch)

    def test_thread_count_does_not_change_bytes(self, hiring_model, scenario_a):
        for seed in (3, 4, 5):
            one = simulate(
                hiring_model, scenario_a, SimulationSettings(instances=64, seed=seed, threads=1)
            )
            four = simulate(
                hiring_model, scenario_a, SimulationSettings(instances=64, seed=seed, threads=4)
            )
            assert write_xes(one) == write_xes(four)

    def test_instance_rng_streams_are_stable(self):
        a = derive_instance_rng(42, 3).integers(0, 2**32, size=4)
        b = derive_instance_rng(42, 3).integers(0, 2**32, size=4)
        c = derive_instance_rng(42, 4).integers(0, 2**32, size=4)
        assert list(a) == list(b)
        assert list(a) != list(c)


class TestTraceShape:
    def test_linear_trace(self):
        model = parse_model(LINEAR)
        log = simulate(model, tiny_config("Mail"), SimulationSettings(instances=3, seed=1))
        assert isinstance(log, EventLog)
        assert [t.trace_id for t in log.traces] == ["1", "2", "3"]
        for trace in log.traces:
            assert trace.variant == "only"
            assert [i.activity for i in trace.instances] == ["Begin", "Work", "Done"]
            assert trace.instances[1].drivers == ("Mail",)
            # start and end events carry no drivers
            assert trace.instances[0].drivers == ()
            assert trace.instances[2].drivers == ()

    def test_hiring_trace_endpoints(self, hiring_model, scenario_a):
        log = simulate(hiring_model, scenario_a, SimulationSettings(instances=30, seed=2))
        end_names = {"Position filled", "Hiring failed", "Hiring cancelled"}
        for trace in log.traces:
            assert trace.instances[0].activity == "Hiring required"
            assert trace.instances[-1].activity in end_names

    def test_timestamps_share_global_clock(self):
        model = parse_model(LINEAR)
        log = simulate(model, tiny_config("Mail"), SimulationSettings(instances=2, seed=1))
        stamps = []
        for trace in log.traces:
            for inst in trace.instances:
                assert inst.complete - inst.start == timedelta(seconds=1)
                stamps.extend((inst.start, inst.complete))
        assert stamps[0] == T0
        deltas = {(b - a).total_seconds() for a, b in zip(stamps, stamps[1:])}
        assert deltas == {1.0}

    def test_base_timestamp_override(self):
        model = parse_model(LINEAR)
        base = T0 + timedelta(days=30)
        log = simulate(
            model, tiny_config("Mail"), SimulationSettings(instances=1, seed=1, base_timestamp=base)
        )
        assert log.traces[0].instances[0].start == base

    def test_stream_without_timestamps_reuses_base(self):
        model = parse_model(LINEAR)
        settings = SimulationSettings(instances=2, seed=1)
        for trace in simulate_stream(model, tiny_config("Mail"), settings, timestamps=False):
            for inst in trace.instances:
                assert inst.start == inst.complete == T0

    def test_stream_content_ignores_timestamp_mode(self, hiring_model, scenario_a):
        settings = SimulationSettings(instances=15, seed=3)
        with_ts = list(simulate_stream(hiring_model, scenario_a, settings))
        without = list(simulate_stream(hiring_model, scenario_a, settings, timestamps=False))
        for a, b in zip(with_ts, without):
            assert a.trace_id == b.trace_id
            assert a.variant == b.variant
            assert [(i.activity, i.drivers) for i in a.instances] == [
                (i.activity, i.drivers) for i in b.instances
            ]


class TestVariantAssignment:
    def test_sampled_frequencies_are_plausible(self, mixed_config, hiring_model):
        log = simulate(
            hiring_model,
            mixed_config,
            SimulationSettings(instances=400, seed=42, variant_mode="sampled"),
        )
        counts = Counter(t.variant for t in log.traces)
        assert counts.keys() == {v.id for v in mixed_config.variants}
        for variant in mixed_config.variants:
            expected = float(variant.frequency.value) * 400
            # ~4 sigma of a binomial at n=400
            assert abs(counts[variant.id] - expected) < 4 * (400 * 0.25) ** 0.5 + 1

    def test_single_variant_config_labels_every_trace(self, scenario_a, hiring_model):
        log = simulate(hiring_model, scenario_a, SimulationSettings(instances=20, seed=1))
        assert {t.variant for t in log.traces} == {scenario_a.variants[0].id}

    def test_quota_mode_is_exact(self, mixed_config, hiring_model):
        log = simulate(
            hiring_model,
            mixed_config,
            SimulationSettings(instances=10, seed=42, variant_mode="exact-quota"),
        )
        counts = Counter(t.variant for t in log.traces)
        assert counts == {v.id: int(v.frequency.value * 10) for v in mixed_config.variants}

    def test_quota_largest_remainder(self, mixed_config, hiring_model):
        # 7 * (1/2, 1/5, 3/10) = 3.5, 1.4, 2.1 -> floors 3,1,2 leave one seat
        # for the largest remainder (.5)
        log = simulate(
            hiring_model,
            mixed_config,
            SimulationSettings(instances=7, seed=42, variant_mode="exact-quota"),
        )
        counts = Counter(t.variant for t in log.traces)
        largest = max(mixed_config.variants, key=lambda v: v.frequency.value)
        assert counts[largest.id] == 4
        assert sum(counts.values()) == 7

    def test_quota_assignment_is_contiguous(self, mixed_config, hiring_model):
        log = simulate(
            hiring_model,
            mixed_config,
            SimulationSettings(instances=10, seed=42, variant_mode="exact-quota"),
        )
        variants = [t.variant for t in log.traces]
        # document order, block by block
        assert variants == sorted(variants, key=[v.id for v in mixed_config.variants].index)

    def test_unknown_variant_mode(self):
        with pytest.raises(SimulationError, match="variant mode"):
            SimulationSettings(instances=2, seed=1, variant_mode="mystery")


class TestBranching:
    def test_split_frequencies(self):
        model = parse_model(SPLIT)
        log = simulate(model, tiny_config(), SimulationSettings(instances=600, seed=9))
        counts = Counter(t.instances[1].activity for t in log.traces)
        assert counts["Left"] + counts["Right"] == 600
        assert 100 < counts["Left"] < 200  # expectation 150

    def test_loop_terminates_and_repeats(self):
        model = parse_model(LOOP)
        log = simulate(model, tiny_config(), SimulationSettings(instances=300, seed=5))
        lengths = Counter(
            sum(1 for i in t.instances if i.activity == "Retry") for t in log.traces
        )
        assert min(lengths) >= 1
        assert max(lengths) > 1  # with p=0.5 some trace loops

    def test_iteration_cap(self):
        model = parse_model(LOOP)
        with pytest.raises(SimulationError, match="iteration limit"):
            simulate(model, tiny_config(), SimulationSettings(instances=50, seed=1, max_iterations=3))


class TestSettingsValidation:
    def test_rejects_nonpositive_instances(self):
        with pytest.raises(SimulationError, match="positive"):
            SimulationSettings(instances=0, seed=1)

    def test_rejects_nonpositive_iteration_cap(self):
        with pytest.raises(SimulationError, match="max_iterations"):
            SimulationSettings(instances=1, max_iterations=0)

    def test_structurally_broken_model_rejected_at_parse(self):
        broken = LINEAR.replace('<sequenceFlow id="f2" sourceRef="t" targetRef="e"/>', "")
        with pytest.raises(ModelError):
            parse_model(broken)

    def test_config_with_foreign_drivers_rejected(self, scenario_a):
        model = parse_model(LINEAR)
        with pytest.raises(SimulationError, match="validation"):
            simulate(model, scenario_a, SimulationSettings(instances=1, seed=1))


class TestThreadResolution:
    def test_explicit_flag_wins(self, monkeypatch):
        monkeypatch.setenv("SOPA_THREADS", "6")
        assert SimulationSettings(instances=1, threads=3).resolved_threads() == 3

    def test_env_honored_when_flag_auto(self, monkeypatch):
        monkeypatch.setenv("SOPA_THREADS", "5")
        assert SimulationSettings(instances=1, threads=0).resolved_threads() == 5

    def test_env_zero_means_auto(self, monkeypatch):
        import os

        monkeypatch.setenv("SOPA_THREADS", "0")
        resolved = SimulationSettings(instances=1, threads=0).resolved_threads()
        assert resolved == min(8, os.cpu_count() or 1)

    def test_unset_defaults_to_one(self, monkeypatch):
        monkeypatch.delenv("SOPA_THREADS", raising=False)
        assert SimulationSettings(instances=1, threads=0).resolved_threads() == 1

    def test_junk_env_rejected(self, monkeypatch):
        monkeypatch.setenv("SOPA_THREADS", "many")
        with pytest.raises(SimulationError, match="SOPA_THREADS"):
            SimulationSettings(instances=1, threads=0).resolved_threads()

    def test_negative_env_means_auto(self, monkeypatch):
        import os

        monkeypatch.setenv("SOPA_THREADS", "-2")
        resolved = SimulationSettings(instances=1, threads=0).resolved_threads()
        assert resolved == min(8, os.cpu_count() or 1)
