"""End-to-end tests of the command-line interface, run in-process."""

import csv
import math
import re

import pytest

from okdrate.cli import main
from okdrate.sweep import CSV_HEADER

K_LINE = re.compile(r"K = ([0-9.eE+-]+) bits/slot")


def run(capsys, *argv):
    rc = main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def extract_rate(out: str) -> float:
    match = K_LINE.search(out)
    assert match, f"no key-rate line in output:\n{out}"
    return float(match.group(1))


class TestKeyrate:
    def test_fixed_bias_positive_rate(self, capsys):
        rc, out, err = run(
            capsys, "keyrate", "--nbar-e", "10", "--distortion", "1e-6",
            "--tau-ratio", "1", "--n-b", "0", "--decoding", "soft",
        )
        assert rc == 0 and err == ""
        assert extract_rate(out) == pytest.approx(0.2361630917, abs=1e-8)
        assert "(optimized)" in out

    def test_zero_bias_zero_rate(self, capsys):
        rc, out, _ = run(
            capsys, "keyrate", "--nbar-e", "10", "--delta-e", "0",
            "--decoding", "both",
        )
        assert rc == 0
        assert out.count("[soft decoding]") == 1
        assert out.count("[hard decoding]") == 1
        for piece in out.split("["):
            rate_match = K_LINE.search(piece)
            if rate_match:
                assert float(rate_match.group(1)) <= 5e-12

    def test_given_bias_reported_as_given(self, capsys):
        rc, out, _ = run(
            capsys, "keyrate", "--nbar-e", "10", "--delta-e", "0.5",
            "--distortion", "1e-6", "--decoding", "soft",
        )
        assert rc == 0
        assert "delta_E = 0.5 (given)" in out

    def test_hard_reports_thresholds(self, capsys):
        rc, out, _ = run(
            capsys, "keyrate", "--nbar-e", "10", "--delta-e", "1",
            "--distortion", "1e-2", "--decoding", "hard",
        )
        assert rc == 0
        assert "thresholds (k0, k1) = (9, 12)" in out
        assert extract_rate(out) == pytest.approx(0.1981377181, abs=1e-8)

    def test_distortion_out_of_range(self, capsys):
        rc, out, err = run(capsys, "keyrate", "--distortion", "1.5")
        assert rc == 2
        assert "distortion out of [0,1]" in err

    def test_distortion_db_equivalent(self, capsys):
        rc1, out1, _ = run(
            capsys, "keyrate", "--nbar-e", "10", "--distortion", "1e-2",
            "--decoding", "soft",
        )
        rc2, out2, _ = run(
            capsys, "keyrate", "--nbar-e", "10", "--distortion-db", "-20",
            "--decoding", "soft",
        )
        assert rc1 == rc2 == 0
        assert extract_rate(out1) == pytest.approx(extract_rate(out2), rel=1e-12)

    def test_db_and_linear_conflict(self, capsys):
        rc, _, err = run(
            capsys, "keyrate", "--distortion", "1e-2", "--distortion-db", "-20",
        )
        assert rc == 2 and "error:" in err

    def test_positive_db_rejected(self, capsys):
        rc, _, err = run(capsys, "keyrate", "--distortion-db", "3")
        assert rc == 2
        assert "--distortion-db" in err

    def test_bad_delta_rejected(self, capsys):
        rc, _, err = run(capsys, "keyrate", "--nbar-e", "4", "--delta-e", "2.5")
        assert rc == 2
        assert "--delta-e" in err


class TestConfigFile:
    def test_precedence_flags_over_config_over_defaults(self, capsys, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text(
            'nbar-e = 10.0\ndistortion = 1e-6\ndecoding = "soft"\ndelta-e = 0.5\n'
        )
        # config alone
        rc, out, _ = run(capsys, "keyrate", "--config", str(cfg))
        assert rc == 0
        assert "delta_E = 0.5 (given)" in out
        base = extract_rate(out)
        # flag overrides the config's delta-e; defaults fill the rest
        rc, out, _ = run(capsys, "keyrate", "--config", str(cfg), "--delta-e", "1.0")
        assert rc == 0
        assert "delta_E = 1 (given)" in out
        assert extract_rate(out) != base

    def test_unknown_key_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text("volume = 11\n")
        rc, _, err = run(capsys, "keyrate", "--config", str(cfg))
        assert rc == 2
        assert "unknown key 'volume'" in err

    def test_missing_file(self, capsys, tmp_path):
        rc, _, err = run(capsys, "keyrate", "--config", str(tmp_path / "nope.toml"))
        assert rc == 2
        assert "no such file" in err


class TestSweep:
    def test_small_panel(self, capsys, tmp_path):
        rc, out, _ = run(
            capsys, "sweep", "--distortion-db-min", "-40", "--distortion-db-max", "0", "--steps", "3",
            "--nbar-e", "10", "--tau-ratio", "1", "--n-b", "0",
            "--decoding", "both", "--out", str(tmp_path),
            "--coarse-grid-points", "16",
        )
        assert rc == 0
        path = tmp_path / "sweep_tau1_nb0.csv"
        assert path.exists()
        assert f"wrote {path}" in out
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == CSV_HEADER
        assert rows[0] == [
            "distortion_db", "decoding", "nbar_e", "delta_e_opt", "k0", "k1",
            "i_ab", "i_be", "key_rate", "knee",
        ]
        body = rows[1:]
        assert len(body) == 2 * 3  # two decodings x three grid points
        # sorted by decoding then distortion; knee landed on exactly -10 dB
        decodings = [r[1] for r in body]
        assert decodings == sorted(decodings)
        knee_rows = [r for r in body if r[9] == "1"]
        assert len(knee_rows) == 2
        for r in knee_rows:
            assert float(r[0]) == pytest.approx(-10.0, abs=1e-9)
        # soft rows leave the threshold columns empty, hard rows fill them
        for r in body:
            if r[1] == "soft":
                assert r[4] == "" and r[5] == ""
            else:
                assert int(r[4]) <= int(r[5])

    def test_rate_monotone_in_distortion(self, capsys, tmp_path):
        rc, _, _ = run(
            capsys, "sweep", "--distortion-db-min", "-30", "--distortion-db-max", "-5", "--steps", "4",
            "--nbar-e", "10", "--tau-ratio", "1", "--n-b", "0",
            "--decoding", "soft", "--out", str(tmp_path),
            "--coarse-grid-points", "16",
        )
        assert rc == 0
        with open(tmp_path / "sweep_tau1_nb0.csv", newline="") as fh:
            body = list(csv.reader(fh))[1:]
        rates = [float(r[8]) for r in body]
        dbs = [float(r[0]) for r in body]
        assert dbs == sorted(dbs)
        for lo, hi in zip(rates[1:], rates[:-1]):
            assert lo <= hi + 1e-9

    def test_bad_steps(self, capsys, tmp_path):
        rc, _, err = run(
            capsys, "sweep", "--steps", "1", "--out", str(tmp_path),
        )
        assert rc == 2
        assert "--steps" in err


class TestFigure3:
    def test_narrowed_panel(self, capsys, tmp_path):
        rc, out, _ = run(
            capsys, "figure3", "--nbar-e", "10", "--tau-ratio", "1",
            "--n-b", "0", "--decoding", "soft", "--steps", "2",
            "--out", str(tmp_path), "--coarse-grid-points", "8",
        )
        assert rc == 0
        path = tmp_path / "figure3_tau1_nb0.csv"
        assert path.exists()
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == CSV_HEADER
        body = rows[1:]
        assert len(body) == 2
        assert [r[1] for r in body] == ["soft", "soft"]
        assert all(r[2] == "10" for r in body)


class TestMcValidate:
    def test_pass_path(self, capsys, tmp_path):
        records = tmp_path / "records.csv"
        rc, out, _ = run(
            capsys, "mc-validate", "--nbar-e", "10", "--distortion", "1e-2",
            "--tau-ratio", "1", "--n-b", "0", "--decoding", "soft",
            "--slots", "200000", "--seed", "7",
            "--dump-records", str(records),
        )
        assert rc == 0
        assert "RESULT: PASS" in out
        assert out.count("PASS (|diff| <= 3 SE)") == 3
        assert records.exists()
        with open(records, newline="") as fh:
            lines = fh.read().splitlines()
        assert lines[0] == "q_A,k_B,k_Eu,k_Ev"
        assert len(lines) == 200_001

    def test_mismatch_self_test_fails(self, capsys):
        rc, out, _ = run(
            capsys, "mc-validate", "--nbar-e", "10", "--distortion", "1e-2",
            "--decoding", "hard", "--slots", "100000", "--seed", "7",
            "--self-test-mismatch",
        )
        assert rc == 1
        assert "RESULT: FAIL" in out
        assert "[self-test] estimator uses mismatched thresholds" in out

    def test_mismatch_requires_hard(self, capsys):
        rc, _, err = run(
            capsys, "mc-validate", "--decoding", "soft", "--self-test-mismatch",
        )
        assert rc == 2
        assert "--self-test-mismatch" in err

    def test_bad_slots(self, capsys):
        rc, _, err = run(capsys, "mc-validate", "--slots", "-5")
        assert rc == 2
        assert "--slots" in err


class TestModes:
    def test_generate_and_analyze(self, capsys, tmp_path):
        rc, out, _ = run(
            capsys, "modes", "--generate", "--offset", "1", "--sigma", "0.5",
            "--out", str(tmp_path),
        )
        assert rc == 0
        match = re.search(r"distortion = ([0-9.eE+-]+)", out)
        want = 1.0 - math.exp(-1.0 / (4 * 0.25))
        assert float(match.group(1)) == pytest.approx(want, abs=1e-6)
        assert (tmp_path / "gaussian_pair.csv").exists()
        v_path = tmp_path / "complement_mode.csv"
        assert v_path.exists()
        assert v_path.read_text().splitlines()[0] == "t,re_v,im_v"

    def test_coincident_modes_refused(self, capsys, tmp_path):
        wf = tmp_path / "same.csv"
        rows = ["t,re_u0,im_u0,re_u1,im_u1"]
        for i in range(16):
            t = i * 0.1
            a = math.exp(-((t - 0.8) ** 2))
            rows.append(f"{t},{a},0.0,{a},0.0")
        wf.write_text("\n".join(rows) + "\n")
        rc, _, err = run(capsys, "modes", "--waveform", str(wf), "--out", str(tmp_path))
        assert rc == 2
        assert "below" in err

    def test_malformed_waveform_line_numbered(self, capsys, tmp_path):
        wf = tmp_path / "bad.csv"
        wf.write_text(
            "t,re_u0,im_u0,re_u1,im_u1\n0.0,1.0,0.0,0.5,0.0\n0.1,zap,0.0,0.5,0.0\n"
        )
        rc, _, err = run(capsys, "modes", "--waveform", str(wf), "--out", str(tmp_path))
        assert rc == 2
        assert "line 3" in err

    def test_waveform_round_trip_analysis(self, capsys, tmp_path):
        rc, out1, _ = run(
            capsys, "modes", "--generate", "--offset", "1.3", "--sigma", "0.9",
            "--waveform", str(tmp_path / "wf.csv"), "--out", str(tmp_path),
        )
        assert rc == 0
        rc, out2, _ = run(
            capsys, "modes", "--waveform", str(tmp_path / "wf.csv"),
            "--out", str(tmp_path),
        )
        assert rc == 0
        d1 = re.search(r"distortion = ([0-9.eE+-]+)", out1).group(1)
        d2 = re.search(r"distortion = ([0-9.eE+-]+)", out2).group(1)
        assert float(d1) == pytest.approx(float(d2), rel=1e-9)


class TestParser:
    def test_no_subcommand_exits_nonzero(self, capsys):
        with pytest.raises(SystemExit):
            main([])

    def test_unknown_flag_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["keyrate", "--frobnicate"])
        assert exc.value.code == 2
