import csv
import json

import pytest

from mimodet.cli import main, parse_detectors, parse_snr_grid


class TestParsers:
    def test_snr_colon_grid(self):
        assert parse_snr_grid("0:5:40") == [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]

    def test_snr_comma_and_single(self):
        assert parse_snr_grid("0,10,20") == [0.0, 10.0, 20.0]
        assert parse_snr_grid("12.5") == [12.5]

    def test_snr_bad(self):
        with pytest.raises(ValueError):
            parse_snr_grid("0:0:40")
        with pytest.raises(ValueError):
            parse_snr_grid("0:5")

    def test_detectors(self):
        tags = [d.label for d in parse_detectors("mmse,wld:1,awld:2,awld:2:x4,capacity")]
        assert tags == ["mmse", "wld:1", "awld:2", "awld:2:x4", "capacity"]


class TestMain:
    def test_air_roundtrip(self, tmp_path):
        out = tmp_path / "air.csv"
        rc = main(
            [
                "air", "--nt", "2", "--nr", "2", "--input", "gaussian",
                "--detectors", "mmse,awld:1,capacity", "--snr", "0:10:20",
                "--trials", "5", "--seed", "1", "--out", str(out),
            ]
        )
        assert rc == 0
        rows = list(csv.DictReader(open(out)))
        assert len(rows) == 9
        assert {r["detector"] for r in rows} == {"mmse", "awld:1", "capacity"}

    def test_ber_and_llr(self, tmp_path):
        ber = tmp_path / "ber.csv"
        rc = main(
            ["ber", "--nt", "2", "--nr", "2", "--mod", "qpsk", "--snr", "10",
             "--detectors", "zf,awld:1", "--trials", "20", "--seed", "2", "--out", str(ber)]
        )
        assert rc == 0 and len(list(csv.DictReader(open(ber)))) == 2
        llr = tmp_path / "llr.csv"
        rc = main(
            ["llr", "--nt", "2", "--nr", "2", "--mod", "qpsk", "--snr-db", "20",
             "--detectors", "mlm,awld:1", "--trials", "30", "--bins", "10",
             "--seed", "3", "--out", str(llr)]
        )
        assert rc == 0
        rows = list(csv.DictReader(open(llr)))
        assert len(rows) == 10 * 4 * 2  # bins x bits x detectors

    def test_invalid_config_exit_code(self, capsys):
        assert main(["air", "--snr", "10:0:20", "--trials", "2"]) == 1
        assert main(["air", "--detectors", "sphere", "--trials", "2"]) == 1
        assert main(["ber", "--mod", "qam9000", "--trials", "2"]) == 1
        capsys.readouterr()

    def test_check_exit_codes(self, tmp_path, capsys):
        out = tmp_path / "check.json"
        assert main(["check", "--trials", "10", "--seed", "4", "--out", str(out)]) == 0
        assert json.load(open(out))["all_pass"] is True
        bad = tmp_path / "bad.json"
        assert (
            main(["check", "--trials", "10", "--seed", "4", "--inject-fault", "--out", str(bad)])
            == 2
        )
        assert json.load(open(bad))["all_pass"] is False
        capsys.readouterr()

    def test_config_file_with_cli_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "nt=2\nnr=2\ninput=gaussian\nsnr=0:10:10\n"
            "detectors=capacity\ntrials=7\nseed=5\n# comment\n"
        )
        out1 = tmp_path / "a.csv"
        assert main(["air", "--config", str(cfg), "--out", str(out1)]) == 0
        rows = list(csv.DictReader(open(out1)))
        assert rows[0]["trials"] == "7"
        out2 = tmp_path / "b.csv"
        assert main(["air", "--config", str(cfg), "--trials", "3", "--out", str(out2)]) == 0
        rows = list(csv.DictReader(open(out2)))
        assert rows[0]["trials"] == "3"

    def test_missing_config_file(self, capsys):
        assert main(["air", "--config", "/nonexistent/run.cfg"]) == 1
        capsys.readouterr()
