import json

import pytest

from conftest import NET_SEED, SEED, make_scenario
from akaprime import provisioning
from akaprime.entities import AuthMethod, AusfState
from akaprime.harness import (
    CANONICAL_SEQUENCE,
    CompareError,
    LinkConfig,
    Outcome,
    ScenarioConfigError,
    compare_methods,
    load_scenario,
    run_scenario,
    scenario_from_dict,
    trace_to_jsonl,
)
from akaprime.identity import MethodHint
from akaprime.wire import Interface


def scenario_doc(**overrides):
    doc = {
        "serving_network": {"mcc": "001", "mnc": "01",
                            "network_type": "PUBLIC"},
        "rng_seed": NET_SEED.hex(),
        "expected_outcome": "SUCCESS",
    }
    doc.update(overrides)
    return doc


class TestFaultlessRun:
    def test_success_outcome(self):
        result = run_scenario(make_scenario())
        assert result.outcome is Outcome.SUCCESS

    def test_trace_matches_reference_sequence(self):
        # The trace also records the internal forwarding legs
        # (AV delivery, challenge forward, RES verify, success forward);
        # projected onto the canonical step names it must be exact.
        result = run_scenario(make_scenario())
        canonical = [ev.event for ev in result.trace
                     if ev.event in CANONICAL_SEQUENCE]
        assert canonical == CANONICAL_SEQUENCE

    def test_ticks_monotonic(self):
        result = run_scenario(make_scenario())
        ticks = [ev.tick for ev in result.trace]
        assert ticks == sorted(ticks)

    def test_scenario_store_untouched(self, store):
        imsi = store.records()[0].supi.imsi
        before = store.get(imsi).cred.sqn
        run_scenario(make_scenario(store=store))
        assert store.get(imsi).cred.sqn == before

    def test_conservation(self):
        result = run_scenario(make_scenario())
        s = result.stats
        assert s["sent"] == s["delivered"] + s["dropped"] + s["pending"]

    def test_latency_stretches_ticks_not_sequence(self):
        slow = run_scenario(make_scenario(
            faults={Interface.N1_UE_AMF: LinkConfig(latency_ticks=5)}))
        fast = run_scenario(make_scenario())
        assert ([ev.event for ev in slow.trace]
                == [ev.event for ev in fast.trace])
        assert slow.stats["ticks"] > fast.stats["ticks"]


class TestDeterminism:
    def test_same_seed_byte_identical_traces(self):
        a = run_scenario(make_scenario())
        b = run_scenario(make_scenario())
        assert trace_to_jsonl(a.trace) == trace_to_jsonl(b.trace)

    def test_different_seed_different_challenge(self):
        a = run_scenario(make_scenario())
        b = run_scenario(make_scenario(rng_seed=bytes(32)))
        assert a.amf.rand != b.amf.rand

    def test_noop_adversary_leaves_trace_unchanged(self):
        plain = run_scenario(make_scenario())
        noop = run_scenario(make_scenario(adversary=[_rule(
            {"interface": "N6_DNAAA"}, {"type": "drop"})]))
        assert trace_to_jsonl(plain.trace) == trace_to_jsonl(noop.trace)

    def test_trace_lines_are_json(self):
        result = run_scenario(make_scenario())
        for line in trace_to_jsonl(result.trace).splitlines():
            assert json.loads(line)["session"].startswith("sess-")


def _rule(match, action):
    from akaprime.harness import AdversaryRule
    return AdversaryRule(match=match, action=action)


class TestAdversary:
    def test_flip_autn_bit_mac_failure(self):
        result = run_scenario(make_scenario(adversary=[_rule(
            {"interface": "N1_UE_AMF", "event": "challenge_rand_autn"},
            {"type": "flip_bit", "field": "autn", "bit": 100})]))
        assert result.outcome is Outcome.MAC_FAILURE

    def test_flip_res_bit_hres_mismatch(self):
        result = run_scenario(make_scenario(adversary=[_rule(
            {"interface": "N1_UE_AMF", "event": "auth_response_res"},
            {"type": "flip_bit", "field": "res", "bit": 3})]))
        assert result.outcome is Outcome.HRES_MISMATCH

    def test_tamper_leaves_no_post_tamper_ausf_events(self):
        result = run_scenario(make_scenario(adversary=[_rule(
            {"interface": "N1_UE_AMF", "event": "auth_response_res"},
            {"type": "flip_bit", "field": "res", "bit": 3})]))
        assert result.ausf.state is AusfState.AWAIT_RES
        tamper_idx = [ev.event for ev in result.trace].index("auth_response_res")
        after = result.trace[tamper_idx + 1:]
        assert not any(ev.src == "AUSF" for ev in after)

    def test_set_field_overwrites_res(self):
        result = run_scenario(make_scenario(adversary=[_rule(
            {"interface": "N1_UE_AMF", "event": "auth_response_res"},
            {"type": "set_field", "field": "res", "value_hex": "00" * 8})]))
        assert result.outcome is Outcome.HRES_MISMATCH

    def test_replayed_challenge_sqn_failure(self):
        result = run_scenario(make_scenario(adversary=[_rule(
            {"interface": "N1_UE_AMF", "event": "challenge_rand_autn"},
            {"type": "replay", "delay_ticks": 10})]))
        # The original run completes; the replayed copy then trips the
        # UE's SQN freshness check.
        assert result.outcome is Outcome.SQN_FAILURE
        events = [ev.event for ev in result.trace]
        assert events.count("challenge_rand_autn") == 2
        assert "eap_success_k_seaf" in events

    def test_drop_action_counts_as_dropped(self):
        result = run_scenario(make_scenario(adversary=[_rule(
            {"interface": "N12_AMF_AUSF", "event": "challenge_forward"},
            {"type": "drop"})]))
        assert result.outcome is Outcome.TIMEOUT
        assert result.stats["dropped"] == 1

    def test_rule_fires_once_by_default(self):
        result = run_scenario(make_scenario(adversary=[_rule(
            {"interface": "N1_UE_AMF", "event": "identity_request"},
            {"type": "drop"})]))
        # Only one identity request is ever sent, so dropping it stalls
        # the run entirely.
        assert result.outcome is Outcome.TIMEOUT
        assert result.stats["delivered"] == 0


class TestLinkFaults:
    def test_full_drop_times_out_with_conservation(self):
        result = run_scenario(make_scenario(
            faults={Interface.N12_AMF_AUSF: LinkConfig(drop_prob=1.0)}))
        s = result.stats
        assert result.outcome is Outcome.TIMEOUT
        assert s["sent"] == s["delivered"] + s["dropped"] + s["pending"]
        assert s["dropped"] >= 1

    def test_tick_budget_halts_run(self):
        result = run_scenario(make_scenario(
            faults={Interface.N1_UE_AMF: LinkConfig(latency_ticks=50)},
            tick_budget=10))
        s = result.stats
        assert result.outcome is Outcome.TIMEOUT
        assert s["sent"] == s["delivered"] + s["dropped"] + s["pending"]


class TestScenarioConfig:
    def test_from_dict_roundtrip(self, store):
        sc = scenario_from_dict(scenario_doc(), store)
        assert sc.expected_outcome is Outcome.SUCCESS
        assert run_scenario(sc).outcome is Outcome.SUCCESS

    def test_missing_serving_network(self, store):
        with pytest.raises(ScenarioConfigError):
            scenario_from_dict({"rng_seed": "00", "expected_outcome":
                                "SUCCESS"}, store)

    def test_bad_outcome_value(self, store):
        with pytest.raises(ScenarioConfigError):
            scenario_from_dict(scenario_doc(expected_outcome="WIN"), store)

    def test_unknown_fault_interface(self, store):
        with pytest.raises(ScenarioConfigError):
            scenario_from_dict(scenario_doc(faults={"N7": {}}), store)

    def test_unknown_adversary_interface(self, store):
        with pytest.raises(ScenarioConfigError):
            scenario_from_dict(scenario_doc(adversary=[
                {"match": {"interface": "N7"}, "action": {"type": "drop"}}]),
                store)

    def test_unknown_imsi_rejected(self, store):
        sc = make_scenario(store=store, imsi="999990000000000")
        with pytest.raises(ScenarioConfigError):
            run_scenario(sc)

    def test_load_scenario_with_relative_subscribers(self, tmp_path, store):
        provisioning.save_subscribers(store, tmp_path / "subs.json")
        doc = scenario_doc(subscribers_file="subs.json")
        (tmp_path / "sc.json").write_text(json.dumps(doc))
        sc = load_scenario(tmp_path / "sc.json")
        assert run_scenario(sc).outcome is Outcome.SUCCESS

    def test_load_scenario_missing_file(self, tmp_path):
        with pytest.raises(ScenarioConfigError):
            load_scenario(tmp_path / "nope.json")


class TestOutcomeMatrix:
    def test_method_rejected(self):
        store = provisioning.generate_subscribers(
            1, SEED, methods=(AuthMethod.EAP_TLS,))
        sc = make_scenario(store=store, requested_method=None)
        assert run_scenario(sc).outcome is Outcome.METHOD_REJECTED

    def test_subscriber_hint_mismatch_is_still_success(self):
        # A UE hinting plain EAP-AKA still resolves: the hint only shapes
        # the NAI prefix, not the UDM's choice.
        sc = make_scenario(ue_method_hint=MethodHint.EAP_AKA)
        assert run_scenario(sc).outcome is Outcome.SUCCESS


class TestCompare:
    def test_identical_av_and_different_byte_counts(self, store):
        report = compare_methods(make_scenario(store=store))
        eap = report["methods"]["EAP-AKA'"]
        aka = report["methods"]["5G-AKA"]
        assert eap["outcome"] == aka["outcome"] == "SUCCESS"
        assert eap["av_fingerprint"] == aka["av_fingerprint"]
        assert eap["k_seaf_fingerprint"] == aka["k_seaf_fingerprint"]
        assert eap["payload_bytes"] > aka["payload_bytes"]
        assert eap["message_count"] == aka["message_count"]

    def test_compare_requires_both_methods(self):
        store = provisioning.generate_subscribers(
            1, SEED, methods=(AuthMethod.EAP_AKA_PRIME,))
        with pytest.raises(CompareError):
            compare_methods(make_scenario(store=store))

    def test_compare_unknown_imsi(self, store):
        with pytest.raises(CompareError):
            compare_methods(make_scenario(store=store,
                                          imsi="999990000000000"))
