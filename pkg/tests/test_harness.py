"""Experiment driver and CLI tests: config validation, record evaluation,
report emission round-trips, reproducibility, and exit codes."""
import json
import math

import pytest

from twoshare import cli, harness
from twoshare.harness import (CSV_COLUMNS, ConfigError, ExperimentConfig,
                              ExperimentReport, HOLDS, NOT_APPLICABLE,
                              RunRecord, VERDICT_KEYS, VIOLATED, emit_csv,
                              emit_jsonl, emit_report, read_report_csv,
                              read_report_jsonl, run_experiment)
from twoshare.symbol import FAIL_SECRECY_X


def base_dict(**over):
    d = {"source": [0.7, 0.3],
         "scheme": {"kind": "blockwise", "ell": 1.0},
         "schedule": {"kind": "power_law", "a": 1.0 / 3.0},
         "n_values": [4, 6], "mode": "exact", "seed": 7}
    d.update(over)
    return d


class TestConfig:
    def test_from_dict_minimal(self):
        cfg = ExperimentConfig.from_dict(
            {"source": [0.5, 0.5],
             "scheme": {"kind": "blockwise", "ell": 0.5},
             "n_values": [4]})
        assert cfg.schedule_kind == "power_law"
        assert cfg.mode == "exact"
        assert cfg.seed == 0
        assert cfg.n_values == (4,)

    def test_string_source(self):
        cfg = ExperimentConfig.from_dict(base_dict(source="uniform:3"))
        assert cfg.source == pytest.approx((1 / 3, 1 / 3, 1 / 3))

    def test_round_trip_blockwise(self):
        cfg = ExperimentConfig.from_dict(base_dict())
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    def test_round_trip_symbolwise_constant(self):
        cfg = ExperimentConfig.from_dict(base_dict(
            scheme={"kind": "symbolwise", "m": 4},
            schedule={"kind": "constant", "gamma": 0.25},
            mode="mc", trials=5000))
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    @pytest.mark.parametrize("broken", [
        base_dict(n_values=[]),
        base_dict(n_values=[0, 4]),
        base_dict(n_values=[8, 4]),
        base_dict(n_values=[4, 4]),
        base_dict(scheme={"kind": "triple", "ell": 1.0}),
        base_dict(scheme={"kind": "blockwise"}),
        base_dict(scheme={"kind": "blockwise", "ell": -1.0}),
        base_dict(scheme={"kind": "symbolwise"}),
        base_dict(source=[0.7, 0.3, 0.2], scheme={"kind": "symbolwise", "m": 2}),
        base_dict(schedule={"kind": "geometric"}),
        base_dict(schedule={"kind": "constant"}),
        base_dict(schedule={"kind": "power_law", "a": 0.9}),
        base_dict(mode="approximate"),
        base_dict(mode="mc", trials=0),
        base_dict(source=[0.5, 0.6]),
        {"scheme": {"kind": "blockwise", "ell": 1.0}, "n_values": [4]},
    ])
    def test_rejects_malformed(self, broken):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(broken)

    def test_run_revalidates(self):
        cfg = ExperimentConfig(source=(0.7, 0.3), scheme_kind="blockwise",
                               n_values=(), seed=0, ell=1.0)
        with pytest.raises(ConfigError):
            run_experiment(cfg)


class TestRunExperiment:
    def test_blockwise_exact_all_bounds_hold(self):
        report = run_experiment(ExperimentConfig.from_dict(base_dict(
            scheme={"kind": "blockwise", "ell": 0.5})))
        assert [r.n for r in report.records] == [4, 6]
        assert not report.any_violated
        for rec in report.records:
            assert rec.skipped is None
            assert set(rec.verdicts) == set(VERDICT_KEYS)
            assert all(v == HOLDS for v in rec.verdicts.values())
            assert rec.p_e_ci is None and rec.p_x_ci is None
            assert math.isfinite(rec.exp_x) and math.isfinite(rec.exp_y)

    def test_symbolwise_exact_all_bounds_hold(self):
        report = run_experiment(ExperimentConfig.from_dict(base_dict(
            scheme={"kind": "symbolwise", "m": 3})))
        assert not report.any_violated
        for rec in report.records:
            assert rec.rate_x == pytest.approx(math.log2(3), abs=1e-12)
            assert all(v == HOLDS for v in rec.verdicts.values())

    def test_mc_mode_reports_intervals(self):
        cfg = ExperimentConfig.from_dict(base_dict(
            scheme={"kind": "symbolwise", "m": 3}, mode="mc", trials=2000))
        report = run_experiment(cfg)
        for rec in report.records:
            assert rec.p_e_ci is not None and rec.p_e_ci > 0.0
            assert rec.p_x_ci is not None and rec.p_y_ci is not None
        assert not report.any_violated

    def test_mc_reruns_identical(self):
        cfg = ExperimentConfig.from_dict(base_dict(
            scheme={"kind": "blockwise", "ell": 0.5}, mode="mc", trials=2000))
        a = run_experiment(cfg)
        b = run_experiment(cfg)
        assert emit_csv(a) == emit_csv(b)
        # jsonl differs only in the wall-time metadata line
        assert emit_jsonl(a).splitlines()[1:] == emit_jsonl(b).splitlines()[1:]

    def test_empty_typical_set_skips_record(self):
        cfg = ExperimentConfig.from_dict(base_dict(
            schedule={"kind": "constant", "gamma": 0.05}, n_values=[4]))
        report = run_experiment(cfg)
        rec = report.records[0]
        assert rec.skipped is not None
        assert all(v == NOT_APPLICABLE for v in rec.verdicts.values())
        assert math.isnan(rec.p_e)
        assert not report.any_violated

    def test_oversized_block_skips_record(self):
        # 2**26 source sequences blow the dense cap; the run keeps going
        cfg = ExperimentConfig.from_dict(base_dict(
            source="uniform:2", scheme={"kind": "blockwise", "ell": 0.5},
            n_values=[4, 26]))
        report = run_experiment(cfg)
        assert report.records[0].skipped is None
        assert report.records[1].skipped is not None
        assert all(v == NOT_APPLICABLE
                   for v in report.records[1].verdicts.values())

    def test_wall_time_recorded(self):
        report = run_experiment(ExperimentConfig.from_dict(
            base_dict(n_values=[4])))
        assert report.wall_time_s >= 0.0


class TestEmission:
    def make_report(self, **over):
        return run_experiment(ExperimentConfig.from_dict(base_dict(**over)))

    def test_csv_round_trip(self):
        report = self.make_report(scheme={"kind": "blockwise", "ell": 0.5})
        rows = read_report_csv(emit_csv(report))
        assert len(rows) == len(report.records)
        for row, rec in zip(rows, report.records):
            assert row["n"] == rec.n
            assert row["p_e"] == pytest.approx(rec.p_e, rel=1e-11, abs=1e-15)
            assert row["rate_x"] == pytest.approx(rec.rate_x, rel=1e-11)
            assert row["exp_x"] == pytest.approx(rec.exp_x, rel=1e-11)
            for key in VERDICT_KEYS:
                assert row[f"v_{key}"] == rec.verdicts[key]

    def test_csv_header_only_when_no_records(self):
        cfg = ExperimentConfig.from_dict(base_dict())
        text = emit_csv(ExperimentReport(config=cfg, records=[]))
        assert text == ",".join(CSV_COLUMNS) + "\n"
        assert read_report_csv(text) == []

    def test_csv_rejects_foreign_header(self):
        with pytest.raises(ConfigError):
            read_report_csv("a,b,c\n1,2,3\n")

    def test_csv_skipped_record_emits_nan(self):
        report = self.make_report(
            schedule={"kind": "constant", "gamma": 0.05}, n_values=[4])
        row = read_report_csv(emit_csv(report))[0]
        assert math.isnan(row["p_e"]) and math.isnan(row["rate_x"])
        assert row["v_rate"] == NOT_APPLICABLE

    def test_jsonl_round_trip(self):
        report = self.make_report(scheme={"kind": "symbolwise", "m": 3})
        back = read_report_jsonl(emit_jsonl(report))
        assert back.config == report.config
        assert back.records == report.records
        assert back.version == report.version
        assert back.wall_time_s == report.wall_time_s

    def test_jsonl_round_trip_skipped_record(self):
        report = self.make_report(
            schedule={"kind": "constant", "gamma": 0.05}, n_values=[4])
        rec = read_report_jsonl(emit_jsonl(report)).records[0]
        assert rec.skipped == report.records[0].skipped
        assert math.isnan(rec.p_e)

    def test_jsonl_requires_metadata(self):
        with pytest.raises(ConfigError):
            read_report_jsonl('{"type": "record", "n": 4, "gamma_n": 0.5}\n')

    def test_unknown_format_rejected(self):
        report = self.make_report(n_values=[4])
        with pytest.raises(ConfigError):
            emit_report(report, "xml")


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(base_dict(
        scheme={"kind": "blockwise", "ell": 0.5}, n_values=[4])))
    return str(path)


class TestCli:
    def run(self, argv, capsys):
        code = cli.main(argv)
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    def test_encode_blockwise(self, capsys):
        code, out, _ = self.run(
            ["encode", "--scheme", "blockwise", "--source", "0.5,0.5",
             "--n", "2", "--gamma", "const:0.75", "--ell", "0.0",
             "--secret", "0,1", "--seed", "3"], capsys)
        assert code == 0
        payload = json.loads(out)
        assert payload["x"]["l"] == 0  # level 0 leaves a single mask value
        assert 0 <= payload["x"]["m"] <= payload["m_count"]

    def test_encode_decode_round_trip_symbolwise(self, capsys):
        code, out, _ = self.run(
            ["encode", "--scheme", "symbolwise", "--m", "3",
             "--source", "0.7,0.3", "--n", "4", "--gamma", "const:0.5",
             "--secret", "1,0,0,1", "--seed", "5"], capsys)
        assert code == 0
        shares = json.loads(out)
        code, out, _ = self.run(
            ["decode", "--scheme", "symbolwise", "--m", "3",
             "--source", "0.7,0.3", "--n", "4", "--gamma", "const:0.5",
             "--x", ",".join(map(str, shares["x"])),
             "--y", ",".join(map(str, shares["y"]))], capsys)
        assert code == 0
        assert json.loads(out) == {"secret": [1, 0, 0, 1]}

    def test_decode_reports_rejection(self, capsys):
        code, out, _ = self.run(
            ["decode", "--scheme", "blockwise", "--source", "uniform:2",
             "--n", "2", "--gamma", "const:0.75", "--ell", "0.0",
             "--x", "0,3", "--y", "0,1"], capsys)
        assert code == 0
        assert json.loads(out) == {"rejected": True}

    def test_attack_exact_and_sampled(self, capsys):
        argv = ["attack", "--scheme", "blockwise", "--source", "0.7,0.3",
                "--n", "4", "--ell", "1.0", "--side", "x"]
        code, out, _ = self.run(argv, capsys)
        assert code == 0
        exact = json.loads(out)
        assert exact["mode"] == "exact"
        code, out, _ = self.run(argv + ["--mode", "mc", "--trials", "20000",
                                        "--seed", "9"], capsys)
        assert code == 0
        sampled = json.loads(out)
        assert sampled["trials"] == 20000
        assert abs(sampled["success_prob"] - exact["success_prob"]) \
            <= sampled["ci_halfwidth"] + 1e-12

    def test_validate_scheme_passes_and_fails(self, capsys):
        code, out, _ = self.run(
            ["validate-scheme", "--source", "uniform:2", "--m", "4"], capsys)
        assert code == 0
        assert json.loads(out)["passed"] is True
        code, out, _ = self.run(
            ["validate-scheme", "--source", "uniform:2", "--m", "4",
             "--variant", "identity-leak"], capsys)
        assert code == 0
        payload = json.loads(out)
        assert payload["passed"] is False
        assert payload["failures"] == [FAIL_SECRECY_X]

    def test_experiment_csv_stdout(self, config_path, capsys):
        code, out, _ = self.run(["experiment", "--config", config_path],
                                capsys)
        assert code == 0
        assert out.splitlines()[0] == ",".join(CSV_COLUMNS)

    def test_experiment_jsonl_to_file(self, config_path, tmp_path, capsys):
        out_path = tmp_path / "report.jsonl"
        code, _, _ = self.run(
            ["experiment", "--config", config_path, "--format", "jsonl",
             "--out", str(out_path)], capsys)
        assert code == 0
        report = read_report_jsonl(out_path.read_text())
        assert report.records[0].n == 4

    def test_experiment_exit_two_on_violation(self, config_path, capsys,
                                              monkeypatch):
        def fake(cfg):
            rec = RunRecord(n=4, gamma_n=0.5,
                            verdicts={"rate": VIOLATED})
            return ExperimentReport(config=cfg, records=[rec])

        monkeypatch.setattr(harness, "run_experiment", fake)
        code, _, _ = self.run(["experiment", "--config", config_path], capsys)
        assert code == 2

    def test_experiment_seed_override_changes_mc_output(self, tmp_path,
                                                        capsys):
        path = tmp_path / "mc.json"
        path.write_text(json.dumps(base_dict(
            scheme={"kind": "symbolwise", "m": 3}, n_values=[6],
            mode="mc", trials=2000)))
        code, out_a, _ = self.run(
            ["experiment", "--config", str(path), "--seed", "1"], capsys)
        code_b, out_b, _ = self.run(
            ["experiment", "--config", str(path), "--seed", "1"], capsys)
        assert code == 0 and code_b == 0
        assert out_a == out_b

    @pytest.mark.parametrize("argv", [
        ["experiment", "--config", "/nonexistent/conf.json"],
        ["nonsense"],
        ["encode", "--scheme", "blockwise", "--source", "0.7,0.3"],
        ["encode", "--scheme", "symbolwise", "--source", "0.7,0.3",
         "--n", "4", "--secret", "0,1,0,1"],  # missing --m
        ["encode", "--scheme", "blockwise", "--source", "not-a-pmf",
         "--n", "4", "--secret", "0"],
        ["encode", "--scheme", "blockwise", "--source", "0.7,0.3", "--n", "4",
         "--gamma", "const:0.05", "--secret", "0,0,0,0"],
        ["validate-scheme", "--source", "uniform:2", "--variant",
         "undersized"],
    ])
    def test_failures_exit_one(self, argv, capsys):
        code, _, err = self.run(argv, capsys)
        assert code == 1

    def test_help_exits_zero(self, capsys):
        assert cli.main(["--help"]) == 0
        capsys.readouterr()

    def test_bad_config_json_exits_one(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text(json.dumps(base_dict(n_values=[])))
        code, _, err = self.run(["experiment", "--config", str(path)], capsys)
        assert code == 1
        assert "error:" in err
