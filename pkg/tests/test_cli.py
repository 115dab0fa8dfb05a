import json

import pytest
from click.testing import CliRunner

from conftest import NET_SEED, SEED
from akaprime import provisioning
from akaprime.cli import main

SEED_HEX = SEED.hex()


@pytest.fixture
def runner():
    return CliRunner()


def write_inputs(tmp_path, expected="SUCCESS", **scenario_overrides):
    """Provision a small store and write scenario + subscriber files."""
    store = provisioning.generate_subscribers(2, SEED)
    provisioning.save_subscribers(store, tmp_path / "subs.json")
    doc = {
        "serving_network": {"mcc": "001", "mnc": "01",
                            "network_type": "PUBLIC"},
        "rng_seed": NET_SEED.hex(),
        "expected_outcome": expected,
        "subscribers_file": "subs.json",
    }
    doc.update(scenario_overrides)
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc))
    return path


class TestProvision:
    def test_writes_loadable_store(self, runner, tmp_path):
        out = tmp_path / "subs.json"
        result = runner.invoke(main, ["provision", "4", "--seed", SEED_HEX,
                                      "--out", str(out)])
        assert result.exit_code == 0, result.output
        store = provisioning.load_subscribers(out)
        assert len(store) == 4

    def test_deterministic_output(self, runner, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            result = runner.invoke(main, ["provision", "3", "--seed", SEED_HEX,
                                          "--out", str(out)])
            assert result.exit_code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_seed_from_environment(self, runner, tmp_path):
        out = tmp_path / "subs.json"
        result = runner.invoke(main, ["provision", "1", "--out", str(out)],
                               env={"AKAPRIME_SEED": SEED_HEX})
        assert result.exit_code == 0

    def test_bad_seed_exits_2(self, runner, tmp_path):
        result = runner.invoke(main, ["provision", "1", "--seed", "zz",
                                      "--out", str(tmp_path / "x.json")])
        assert result.exit_code == 2


class TestRun:
    def test_matching_outcome_exits_0(self, runner, tmp_path):
        scenario = write_inputs(tmp_path)
        result = runner.invoke(main, ["run", str(scenario)])
        assert result.exit_code == 0, result.output
        assert "outcome=SUCCESS expected=SUCCESS" in result.output

    def test_mismatched_outcome_exits_1(self, runner, tmp_path):
        scenario = write_inputs(tmp_path, expected="MAC_FAILURE")
        result = runner.invoke(main, ["run", str(scenario)])
        assert result.exit_code == 1
        assert "outcome=SUCCESS expected=MAC_FAILURE" in result.output

    def test_missing_scenario_exits_2(self, runner, tmp_path):
        result = runner.invoke(main, ["run", str(tmp_path / "nope.json")])
        assert result.exit_code == 2

    def test_bad_scenario_document_exits_2(self, runner, tmp_path):
        store = provisioning.generate_subscribers(1, SEED)
        provisioning.save_subscribers(store, tmp_path / "subs.json")
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"subscribers_file": "subs.json"}))
        result = runner.invoke(main, ["run", str(path)])
        assert result.exit_code == 2

    def test_trace_out_written(self, runner, tmp_path):
        scenario = write_inputs(tmp_path)
        trace = tmp_path / "trace.jsonl"
        result = runner.invoke(main, ["run", str(scenario),
                                      "--trace-out", str(trace)])
        assert result.exit_code == 0
        lines = trace.read_text().splitlines()
        assert lines and all(json.loads(l)["session"] for l in lines)

    def test_verbose_prints_trace(self, runner, tmp_path):
        scenario = write_inputs(tmp_path)
        result = runner.invoke(main, ["run", str(scenario), "--verbose"])
        assert '"event": "identity_request"' in result.output

    def test_subscribers_override(self, runner, tmp_path):
        scenario = write_inputs(tmp_path)
        alt = tmp_path / "alt.json"
        provisioning.save_subscribers(
            provisioning.generate_subscribers(2, SEED), alt)
        result = runner.invoke(main, ["run", str(scenario),
                                      "--subscribers", str(alt)])
        assert result.exit_code == 0

    def test_same_seed_trace_files_identical(self, runner, tmp_path):
        scenario = write_inputs(tmp_path)
        t1, t2 = tmp_path / "t1.jsonl", tmp_path / "t2.jsonl"
        for t in (t1, t2):
            result = runner.invoke(main, ["run", str(scenario),
                                          "--trace-out", str(t)])
            assert result.exit_code == 0
        assert t1.read_bytes() == t2.read_bytes()


class TestCompare:
    def test_reports_both_methods(self, runner, tmp_path):
        scenario = write_inputs(tmp_path)
        result = runner.invoke(main, ["compare", str(scenario)])
        assert result.exit_code == 0, result.output
        assert "EAP-AKA': outcome=SUCCESS" in result.output
        assert "5G-AKA: outcome=SUCCESS" in result.output

    def test_compare_without_both_methods_exits_2(self, runner, tmp_path):
        store = provisioning.generate_subscribers(
            1, SEED, methods=(provisioning.AuthMethod.EAP_AKA_PRIME,))
        provisioning.save_subscribers(store, tmp_path / "subs.json")
        doc = {
            "serving_network": {"mcc": "001", "mnc": "01"},
            "rng_seed": NET_SEED.hex(),
            "expected_outcome": "SUCCESS",
            "subscribers_file": "subs.json",
        }
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(doc))
        result = runner.invoke(main, ["compare", str(path)])
        assert result.exit_code == 2


class TestReplay:
    def test_replay_reproduces_trace(self, runner, tmp_path):
        scenario = write_inputs(tmp_path)
        trace = tmp_path / "trace.jsonl"
        runner.invoke(main, ["run", str(scenario), "--trace-out", str(trace)])
        result = runner.invoke(main, ["replay", str(scenario),
                                      "--trace", str(trace)])
        assert result.exit_code == 0, result.output
        assert "trace_matches=True" in result.output

    def test_stale_trace_exits_1(self, runner, tmp_path):
        scenario = write_inputs(tmp_path)
        trace = tmp_path / "trace.jsonl"
        runner.invoke(main, ["run", str(scenario), "--trace-out", str(trace)])
        lines = trace.read_text().splitlines()
        doctored = json.loads(lines[0])
        doctored["tick"] += 1
        lines[0] = json.dumps(doctored, sort_keys=True)
        trace.write_text("".join(l + "\n" for l in lines))
        result = runner.invoke(main, ["replay", str(scenario),
                                      "--trace", str(trace)])
        assert result.exit_code == 1
        assert "trace_matches=False" in result.output

    def test_missing_trace_exits_2(self, runner, tmp_path):
        scenario = write_inputs(tmp_path)
        result = runner.invoke(main, ["replay", str(scenario),
                                      "--trace", str(tmp_path / "no.jsonl")])
        assert result.exit_code == 2
