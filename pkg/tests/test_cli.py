"""CLI exit codes, report output, and data files."""

import csv
import json

import numpy as np
import pytest

from snoopy import cli, datamodel
from snoopy.datamodel import LabelVector, read_label_file, write_label_file


class TestRun:
    def test_clean_exit_zero(self, clean_blob_study, capsys):
        code = cli.main(["run", str(clean_blob_study)])
        assert code == 0
        assert "REALISTIC" in capsys.readouterr().out

    def test_noisy_exit_three(self, noisy_blob_study, capsys):
        code = cli.main(["run", str(noisy_blob_study)])
        assert code == 3
        assert "UNREALISTIC" in capsys.readouterr().out

    def test_bad_manifest_exit_two(self, tmp_path, capsys):
        bad = tmp_path / "manifest.json"
        bad.write_text(json.dumps({
            "transformations": [{"transformation_id": "x",
                                 "train_path": "gone.snpe",
                                 "test_path": "gone.snpe"}],
            "train_labels": "gone.snpl", "test_labels": "gone.snpl",
            "target_accuracy": 0.9}))
        code = cli.main(["run", str(bad)])
        assert code == 2
        assert "gone" in capsys.readouterr().err

    def test_json_and_curves_outputs(self, clean_blob_study, tmp_path, capsys):
        out_json = tmp_path / "result.json"
        out_csv = tmp_path / "curves.csv"
        code = cli.main(["run", str(clean_blob_study),
                         "--json", str(out_json), "--curves-out", str(out_csv)])
        assert code == 0
        doc = json.loads(out_json.read_text())
        assert doc["verdict"] == "REALISTIC"
        assert {"per_arm", "aggregate", "winner", "gap", "scheduler"} <= set(doc)
        with open(out_csv, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == ["arm", "n_consumed", "err_1nn", "ber_estimate"]
        assert rows[-1]["arm"] == "blob2d"
        # csv floats written with repr round-trip exactly
        assert float(rows[-1]["err_1nn"]) == float(repr(float(rows[-1]["err_1nn"])))


class TestNoise:
    @pytest.fixture()
    def labels_path(self, tmp_path):
        path = tmp_path / "labels.snpl"
        rng = np.random.default_rng(2)
        write_label_file(path, LabelVector(rng.integers(0, 10, 100000), 10))
        return path

    def test_rho_zero_byte_identical(self, labels_path, tmp_path, capsys):
        out = tmp_path / "out.snpl"
        assert cli.main(["noise", str(labels_path), "--rho", "0",
                         "--seed", "1", "--out", str(out)]) == 0
        assert out.read_bytes() == labels_path.read_bytes()

    def test_rho_one_realized_fraction(self, labels_path, tmp_path, capsys):
        out = tmp_path / "out.snpl"
        assert cli.main(["noise", str(labels_path), "--rho", "1.0",
                         "--seed", "1", "--out", str(out)]) == 0
        printed = capsys.readouterr().out
        realized = float(printed.rsplit("flip fraction", 1)[1].strip(" )\n"))
        assert realized == pytest.approx(0.9, abs=0.01)

    def test_both_flags_usage_error(self, labels_path, tmp_path, capsys):
        code = cli.main(["noise", str(labels_path), "--rho", "0.1",
                         "--transition", "t.json", "--out", str(tmp_path / "o")])
        assert code == 1

    def test_transition_matrix_file(self, labels_path, tmp_path):
        tm_path = tmp_path / "tm.json"
        tm_path.write_text(json.dumps({"C": 10, "t": np.eye(10).tolist()}))
        out = tmp_path / "out.snpl"
        assert cli.main(["noise", str(labels_path), "--transition", str(tm_path),
                         "--seed", "3", "--out", str(out)]) == 0
        np.testing.assert_array_equal(read_label_file(out).labels,
                                      read_label_file(labels_path).labels)

    def test_format_error_exit_two(self, tmp_path):
        bad = tmp_path / "bad.snpl"
        bad.write_bytes(b"NOPE")
        assert cli.main(["noise", str(bad), "--rho", "0.1",
                         "--out", str(tmp_path / "o.snpl")]) == 2


def write_power_curve_csv(path, ns, alpha=0.5, scale=1.0, arm="a"):
    with open(path, "w") as fh:
        fh.write("arm,n_consumed,err_1nn,ber_estimate\n")
        for n in ns:
            err = scale * n ** -alpha
            fh.write(f"{arm},{n},{err!r},0.0\n")


class TestExtrapolate:
    def test_worked_chain(self, tmp_path, capsys):
        path = tmp_path / "curves.csv"
        write_power_curve_csv(path, range(10, 60, 10))
        code = cli.main(["extrapolate", str(path), "--target", "0.95",
                         "--classes", "2", "--n-current", "50"])
        assert code == 0
        out = capsys.readouterr().out
        assert "needed=61" in out

    def test_target_already_met(self, tmp_path, capsys):
        path = tmp_path / "curves.csv"
        write_power_curve_csv(path, range(10, 60, 10))
        code = cli.main(["extrapolate", str(path), "--target", "0.9",
                         "--classes", "2", "--n-current", "50"])
        assert code == 0
        assert "needed=0" in capsys.readouterr().out

    def test_untrustworthy_printed(self, tmp_path, capsys):
        path = tmp_path / "curves.csv"
        write_power_curve_csv(path, range(10, 60, 10))
        code = cli.main(["extrapolate", str(path), "--target", "0.95",
                         "--classes", "2", "--n-current", "10"])
        assert code == 0
        assert "UNTRUSTWORTHY" in capsys.readouterr().out

    def test_degenerate_curve_exit_two(self, tmp_path, capsys):
        path = tmp_path / "curves.csv"
        with open(path, "w") as fh:
            fh.write("arm,n_consumed,err_1nn,ber_estimate\na,10,0.5,0\n")
        code = cli.main(["extrapolate", str(path), "--target", "0.9",
                         "--classes", "2", "--n-current", "10"])
        assert code == 2


class TestValidateAndUsage:
    def test_validate_ok(self, clean_blob_study, capsys):
        assert cli.main(["validate", str(clean_blob_study)]) == 0
        assert "manifest OK" in capsys.readouterr().out

    def test_validate_bad(self, tmp_path):
        bad = tmp_path / "m.json"
        bad.write_text("{not json")
        assert cli.main(["validate", str(bad)]) == 2

    def test_unknown_subcommand_exit_one(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["frobnicate"])
        assert exc.value.code == 1
