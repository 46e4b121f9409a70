import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zenocz.cli import EXIT_CONFIG, EXIT_INVARIANT, EXIT_OK, main
from zenocz.cli.config import ConfigError, RunConfig, emit_config, parse_amplitudes, parse_config, with_values
from zenocz.cli.records import build_record, format_float, read_csv, rerun, to_csv, to_json_line, write_records
from zenocz.cli.sweep import MAX_RUNS, SweepSpec, parse_axis, run_sweep
from zenocz.interrogation import InvariantError

SURVIVAL_DETECTION = {10: 0.78054606978114017, 100: 0.97562691414390028, 1000: 0.99753563941957021}


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def json_records(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def scalar_fields(record):
    return {k: v for k, v in record.items() if k != "meta.timestamp"}


class TestParseConfig:
    def test_sign_mode_expands_theta(self):
        cfg = parse_config(overrides={"command": "sign", "mode": "sign", "n": "100"})
        assert abs(cfg.interrogation().resolved_theta - math.pi / 100) <= 1e-15

    def test_detection_mode(self):
        cfg = parse_config(overrides={"command": "ev", "mode": "detection", "n": 50})
        assert cfg.interrogation().resolved_theta == math.pi / 100

    def test_theta_mode_conflict(self):
        with pytest.raises(ConfigError, match="theta and mode"):
            parse_config(overrides={"command": "ev", "n": 10, "theta": "0.1", "mode": "detection"})

    def test_empty_lists_required(self):
        with pytest.raises(ConfigError, match="missing required fields: command, n"):
            parse_config({})

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown config key 'colour'"):
            parse_config({"command": "ev", "n": 3, "colour": "red"})

    @pytest.mark.parametrize("key,value", [("p_abs", "1.5"), ("loss", "-0.1"), ("n", "0"), ("n", "2.5"),
                                           ("feed_forward", "maybe"), ("theta", "nan")])
    def test_out_of_range(self, key, value):
        with pytest.raises(ConfigError):
            parse_config({"command": "photon-cz", "n": 10, key: value})

    def test_flags_override_file(self):
        cfg = parse_config({"command": "ev", "n": 10, "loss": 0.1}, {"n": "20", "p-abs": "0.5"})
        assert (cfg.n, cfg.loss, cfg.p_abs) == (20, 0.1, 0.5)

    def test_defaults_per_command(self):
        assert parse_config({"command": "ev", "n": 5}).mode == "detection"
        assert parse_config({"command": "sign", "n": 5}).bomb == "present"
        assert parse_config({"command": "lm-cz", "n": 5}).bomb == "1"
        assert parse_config({"command": "photon-cz", "n": 5}).mode == "sign"

    def test_sign_command_needs_pi_over_n(self):
        with pytest.raises(ConfigError, match="pi/N"):
            parse_config({"command": "photon-cz", "n": 10, "mode": "detection"})

    def test_schedule(self):
        cfg = parse_config({"command": "lm-cz", "n": 2, "theta_schedule": "0.5,1.0"})
        assert cfg.theta_schedule == (0.5, 1.0)
        with pytest.raises(ConfigError, match="entries"):
            parse_config({"command": "lm-cz", "n": 3, "theta_schedule": [0.5, 1.0]})

    def test_bad_bomb(self):
        with pytest.raises(ConfigError):
            parse_config({"command": "ev", "n": 3, "bomb": "maybe"})

    def test_with_values_replaces_angle(self):
        cfg = parse_config({"command": "ev", "n": 3})
        assert with_values(cfg, theta=0.2).mode is None


class TestAmplitudes:
    def test_plus(self):
        np.testing.assert_allclose(parse_amplitudes("+,+", "c").amplitudes, [2**-0.5, 2**-0.5])

    def test_named(self):
        np.testing.assert_allclose(parse_amplitudes("-", "c").amplitudes, [2**-0.5, -(2**-0.5)])
        np.testing.assert_allclose(parse_amplitudes("1", "c").amplitudes, [0, 1])

    def test_complex_and_normalized(self):
        s = parse_amplitudes("3, 4j", "c")
        np.testing.assert_allclose(s.amplitudes, [0.6, 0.8j])

    @pytest.mark.parametrize("text", ["1,2,3", "0,0", "a,b", "2"])
    def test_rejected(self, text):
        with pytest.raises(ConfigError):
            parse_amplitudes(text, "c")


configs = st.builds(
    dict,
    command=st.sampled_from(["ev", "sign", "lm-cz", "photon-cz"]),
    n=st.integers(1, 10_000),
    p_abs=st.floats(0.5, 1),
    p_leak=st.floats(0, 0.5),
    absorber_phase=st.floats(-3, 3),
    loss=st.floats(0, 1),
    detour_phase=st.floats(-3, 3),
    control=st.sampled_from(["0", "1", "+", "-", "0.6,0.8", "1,2j"]),
    target=st.sampled_from(["0", "1", "+", "-", "0.6,0.8"]),
    feed_forward=st.booleans(),
    oracle=st.booleans(),
    seed=st.one_of(st.none(), st.integers(0, 2**63 - 1)),
)


class TestRoundTrip:
    @settings(max_examples=200, deadline=None)
    @given(values=configs, angle=st.sampled_from(["mode", "theta", "none"]))
    def test_parse_emit(self, values, angle):
        if values["command"] == "ev" and angle == "theta":
            values["theta"] = math.pi / (3 * values["n"])
        elif angle == "mode":
            values["mode"] = "detection" if values["command"] == "ev" else "sign"
        cfg = parse_config(values)
        assert parse_config(emit_config(cfg)) == cfg
        assert parse_config(json.loads(json.dumps(emit_config(cfg)))) == cfg

    def test_schedule_round_trip(self):
        cfg = parse_config({"command": "photon-cz", "n": 3, "theta_schedule": [0.1, 1 / 3, 2.0]})
        assert parse_config(emit_config(cfg)) == cfg


class TestRecords:
    def test_ev_record(self):
        r = build_record(parse_config({"command": "ev", "n": 100, "mode": "detection", "bomb": "present"}))
        assert r["result.success_probability"] == pytest.approx(SURVIVAL_DETECTION[100], abs=1e-12)
        assert r["reference.one_minus_pi2_over_4n"] == pytest.approx(1 - math.pi**2 / 400, abs=1e-15)
        assert r["reference.cos_2n_theta"] == pytest.approx(SURVIVAL_DETECTION[100], abs=1e-12)
        assert r["config.resolved_theta"] == math.pi / 200
        assert r["meta.version"] and r["meta.timestamp"]
        assert r["error"] is None

    def test_sign_record(self):
        r = build_record(parse_config({"command": "sign", "n": 1, "bomb": "absent"}))
        assert r["result.amplitude_D_re"] == pytest.approx(-1, abs=1e-15)

    def test_photon_cz_record(self):
        r = build_record(parse_config({"command": "photon-cz", "n": 1000, "control": "+,+", "target": "+,+"}))
        assert r["result.fidelity_vs_ideal_cz"] >= 0.99
        assert r["result.concurrence_out"] >= 0.98

    def test_lm_cz_record(self):
        r = build_record(parse_config({"command": "lm-cz", "n": 500, "control": "+", "bomb": "1"}))
        assert r["result.fidelity"] >= 1 - 1e-9

    def test_oracle_columns(self):
        r = build_record(parse_config({"command": "ev", "n": 20, "oracle": True, "p_abs": 0.4, "loss": 0.1}))
        assert r["oracle.trace_distance"] <= 1e-9
        assert r["oracle.failure_delta"] <= 1e-9
        big = build_record(parse_config({"command": "ev", "n": 51, "oracle": True}))
        assert big["oracle.trace_distance"] is None

    @pytest.mark.parametrize("values", [
        {"command": "ev", "n": 77, "theta": 0.01, "p_abs": 0.3, "loss": 0.002},
        {"command": "sign", "n": 12, "bomb": "absent", "detour_phase": 0.1},
        {"command": "lm-cz", "n": 40, "bomb": "0.6,0.8j", "control": "1,1j", "absorber_phase": 0.2},
        {"command": "photon-cz", "n": 60, "control": "0.6,0.8", "target": "-", "seed": 3, "feed_forward": False},
        {"command": "photon-cz", "n": 4, "theta_schedule": [0.3, 0.7, 1.1, 0.9], "oracle": True},
    ])
    def test_rerun_bit_identical(self, values):
        r = build_record(parse_config(values))
        for text in (to_json_line(r), ):
            again = rerun(json.loads(text))
            assert scalar_fields(again) == scalar_fields(r)
        from_csv = rerun(read_csv(to_csv([r]))[0])
        assert scalar_fields(from_csv) == scalar_fields(r)

    def test_float_format_round_trips(self):
        rng = np.random.default_rng(0)
        for x in list(rng.normal(size=200)) + [1.0, 0.0, -0.0, 1e-300, 5e20, 0.1]:
            text = format_float(float(x))
            assert float(text) == x
            assert isinstance(json.loads(text), float)


class TestSweep:
    def test_detection_sweep(self):
        spec = SweepSpec("ev", axes=(parse_axis("n=10,100,1000"),), fixed={"mode": "detection", "bomb": "present"})
        rows = run_sweep(spec, 1)
        assert [r["config.n"] for r in rows] == [10, 100, 1000]
        for r in rows:
            assert r["result.success_probability"] == pytest.approx(SURVIVAL_DETECTION[r["config.n"]], abs=1e-6)

    def test_loss_sweep_decreases(self):
        spec = SweepSpec("ev", axes=(parse_axis("loss=0,0.001,0.01"),), fixed={"n": 100})
        s = [r["result.success_probability"] for r in run_sweep(spec, 1)]
        assert s[0] > s[1] > s[2]

    def test_empty_axes_is_single_run(self):
        values = {"command": "photon-cz", "n": 100, "seed": 5}
        rows = run_sweep(SweepSpec("photon-cz", fixed={"n": 100}, seed=5), 1)
        assert len(rows) == 1
        assert scalar_fields(rows[0]) == scalar_fields(build_record(parse_config(values)))

    def test_lexicographic_order(self):
        spec = SweepSpec("ev", axes=(parse_axis("n=3,1"), parse_axis("p_abs=lin:0.5:1:2")))
        got = [(r["config.n"], r["config.p_abs"]) for r in run_sweep(spec, 1)]
        assert got == [(3, 0.5), (3, 1.0), (1, 0.5), (1, 1.0)]

    def test_log_axis(self):
        name, vals = parse_axis("n=log:10:1000:3")
        assert (name, vals) == ("n", (10, 100, 1000))

    def test_parallel_matches_serial(self):
        spec = SweepSpec("photon-cz", axes=(parse_axis("n=5,17,40,81"), parse_axis("target=0,+")), seed=9)
        serial = [scalar_fields(r) for r in run_sweep(spec, 1)]
        parallel = [scalar_fields(r) for r in run_sweep(spec, 3)]
        assert serial == parallel

    def test_bad_point_recorded_in_row(self):
        spec = SweepSpec("ev", axes=(parse_axis("p_abs=0.5,2,1"),), fixed={"n": 10})
        rows = run_sweep(spec, 1)
        assert rows[0]["error"] is None and rows[2]["error"] is None
        assert "p_abs" in rows[1]["error"]
        csv_text = to_csv(rows)
        assert len(read_csv(csv_text)) == 3

    def test_oversize(self):
        axes = (parse_axis("n=lin:1:1000:1000"), parse_axis("p_abs=lin:0:1:1001"))
        with pytest.raises(ConfigError, match="limit"):
            SweepSpec("ev", axes=axes)
        assert SweepSpec("ev", axes=axes, allow_oversize=True).size == 1000 * 1001 > MAX_RUNS

    @pytest.mark.parametrize("axis", ["command=ev", "bogus=1", "n", "n=lin:1:2", "n=log:0:1:3", "n=lin:1:2:0"])
    def test_bad_axis(self, axis):
        with pytest.raises(ConfigError):
            SweepSpec("ev", axes=(parse_axis(axis),))

    def test_csv_json_agree(self):
        spec = SweepSpec("ev", axes=(parse_axis("n=7,70"), parse_axis("loss=0,0.01")), fixed={"p_abs": 0.6})
        rows = run_sweep(spec, 1)
        from_json = json_records(write_records(rows, "json"))
        from_csv = read_csv(write_records(rows, "csv"))
        assert list(from_csv[0]) == list(from_json[0])
        for j, c in zip(from_json, from_csv):
            for k, v in j.items():
                if v is None:
                    assert c[k] == ""
                elif isinstance(v, bool):
                    assert c[k] == str(v).lower()
                elif isinstance(v, float):
                    assert float(c[k]) == v
                else:
                    assert c[k] == str(v)


class TestMain:
    def test_ev(self, capsys):
        code, out, _ = run_cli(capsys, "ev", "--n", "100", "--mode", "detection", "--bomb", "present")
        assert code == EXIT_OK
        (r,) = json_records(out)
        assert r["result.success_probability"] == pytest.approx(SURVIVAL_DETECTION[100], abs=1e-12)
        assert r["reference.one_minus_pi2_over_4n"] == pytest.approx(0.975326, abs=1e-6)

    def test_sign_csv(self, capsys):
        code, out, _ = run_cli(capsys, "sign", "--n", "1", "--bomb", "absent", "--format", "csv")
        assert code == EXIT_OK
        (r,) = read_csv(out)
        assert float(r["result.amplitude_D_re"]) == pytest.approx(-1, abs=1e-15)

    def test_photon_cz(self, capsys):
        code, out, _ = run_cli(capsys, "photon-cz", "--n", "1000", "--control", "+,+", "--target", "+,+")
        (r,) = json_records(out)
        assert code == EXIT_OK
        assert r["result.fidelity_vs_ideal_cz"] is not None
        assert r["result.concurrence_out"] is not None

    def test_conflict_exit_code(self, capsys):
        code, _, err = run_cli(capsys, "ev", "--n", "10", "--theta", "0.1", "--mode", "detection")
        assert code == EXIT_CONFIG
        assert "theta and mode" in err

    def test_empty_config_file(self, capsys, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{}")
        code, _, err = run_cli(capsys, "ev", "--config", str(path))
        assert code == EXIT_CONFIG
        assert "missing required fields: n" in err

    def test_config_file_and_out(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"n": 50, "loss": 0.01, "p_abs": 0.9}))
        out = tmp_path / "r.json"
        code, stdout, _ = run_cli(capsys, "ev", "--config", str(cfg), "--n", "60", "--out", str(out))
        assert code == EXIT_OK and stdout == ""
        (r,) = json_records(out.read_text())
        assert (r["config.n"], r["config.loss"], r["config.p_abs"]) == (60, 0.01, 0.9)

    def test_bad_json_file(self, capsys, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{nope")
        code, _, err = run_cli(capsys, "ev", "--config", str(path))
        assert code == EXIT_CONFIG and "JSON" in err

    def test_argparse_errors_use_config_status(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["ev", "--mode", "fast"])
        assert exc.value.code == EXIT_CONFIG

    def test_sweep(self, capsys):
        code, out, _ = run_cli(capsys, "sweep", "--command", "ev", "--axis", "n=10,100", "--format", "csv")
        assert code == EXIT_OK
        assert [r["config.n"] for r in read_csv(out)] == ["10", "100"]

    def test_sweep_oversize(self, capsys):
        code, _, err = run_cli(capsys, "sweep", "--command", "ev", "--axis", "n=lin:1:2000:2000",
                               "--axis", "loss=lin:0:1:1000")
        assert code == EXIT_CONFIG and "allow-oversize" in err

    def test_invariant_failure_exit_code(self, capsys, monkeypatch):
        import zenocz.cli as cli

        def broken(cfg):
            raise InvariantError("probability conservation breached")
        monkeypatch.setattr(cli, "build_record", broken)
        code, _, err = run_cli(capsys, "ev", "--n", "3")
        assert code == EXIT_INVARIANT
        assert "Traceback" in err

    def test_selftest_small(self, capsys):
        code, out, _ = run_cli(capsys, "selftest", "--configs", "24")
        assert code == EXIT_OK
        assert "selftest passed" in out

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "zenocz", "sign", "--n", "2", "--bomb", "absent"],
                              capture_output=True, text=True, check=True)
        (r,) = json_records(proc.stdout)
        assert r["result.amplitude_D_re"] == pytest.approx(-1, abs=1e-15)


def test_run_config_is_frozen():
    cfg = parse_config({"command": "ev", "n": 3})
    assert isinstance(cfg, RunConfig)
    with pytest.raises(Exception):
        cfg.n = 4
