"""Command-line behavior: exit codes, JSON output, report files."""

import json

import numpy as np
import pytest

from causalcert import serialize as sz
from causalcert.cli import main
from causalcert.processes import quantum_switch


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestValidate:
    def test_scenario_ok(self, capsys):
        code, out, _ = run(capsys, "validate", "--scenario", "qs-sdiqi")
        assert code == 0
        assert "valid" in out

    def test_corrupt_process_file_names_constraint(self, tmp_path, capsys):
        process = quantum_switch()
        data = sz.process_to_dict(process)
        # break the A_O-side validity constraint with a Z term on A_O
        w = np.asarray(data["re"], dtype=float)
        z = np.diag([1.0, -1.0])
        term = np.kron(np.eye(2), np.kron(z, np.eye(8)))
        data["re"] = (w + 0.1 * term).tolist()
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        code, out, _ = run(capsys, "validate", "--process", str(path))
        assert code == 1
        assert "[1-A_O]BF" in out

    def test_feix_epsilon_out_of_bound(self, capsys):
        code, _, err = run(capsys, "validate", "--scenario", "feix-dd", "--epsilon", "2.0")
        assert code == 1
        assert "PSD bound" in err

    def test_unparseable_file(self, tmp_path, capsys):
        path = tmp_path / "junk.json"
        path.write_text("{not json")
        code, _, err = run(capsys, "validate", "--process", str(path))
        assert code == 2


class TestCertify:
    def test_qs_sdiqi_noncausal(self, capsys):
        code, out, _ = run(capsys, "certify", "--scenario", "qs-sdiqi", "--r", "0", "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["robustness"] == pytest.approx(0.3670, abs=1e-3)
        assert payload["verdict"] == "noncausal"

    def test_qs_sdiqi_depolarized_separable(self, capsys):
        code, out, _ = run(capsys, "certify", "--scenario", "qs-sdiqi", "--r", "1.0", "--json")
        assert code == 0
        assert json.loads(out)["verdict"] == "separable"

    def test_feix_xi_zero_not_noncausal(self, capsys):
        code, out, _ = run(capsys, "certify", "--scenario", "feix-sdiqi", "--xi", "0", "--json")
        assert code == 0
        # sits exactly on the cone boundary, so never reported noncausal
        assert json.loads(out)["verdict"] in ("separable", "boundary")

    def test_witness_file_written(self, tmp_path, capsys):
        code, out, _ = run(capsys, "certify", "--scenario", "feix-dd", "--json",
                           "--out", str(tmp_path))
        assert code == 0
        payload = json.loads(out)
        assert payload["witness_file"] is not None
        witness = sz.witness_from_dict(sz.load(payload["witness_file"]))
        assert witness.cone.variant == "process-bipartite"

    def test_custom_process_certification(self, tmp_path, capsys):
        from causalcert.processes import feix_process

        path = tmp_path / "w.json"
        path.write_text(json.dumps(sz.process_to_dict(feix_process(np.sqrt(3) - 1, 4 / np.sqrt(3) - 2))))
        code, out, _ = run(capsys, "certify", "--process", str(path), "--json")
        assert code == 0
        assert json.loads(out)["robustness"] == pytest.approx(0.3094, abs=1e-3)


class TestScan:
    def test_scan_writes_reports(self, tmp_path, capsys):
        code, out, _ = run(capsys, "scan", "--scenario", "qs-tuu", "--json",
                           "--out", str(tmp_path))
        assert code == 0
        payload = json.loads(out)
        assert payload["threshold"] == pytest.approx(0.194, abs=0.01)
        files = payload["files"]
        assert any(f.endswith(".csv") for f in files)
        assert any(f.endswith(".png") for f in files)
        for f in files:
            assert (tmp_path / f.split("/")[-1]).exists()

    def test_bad_bracket_exit_code(self, capsys):
        code, _, err = run(capsys, "scan", "--scenario", "qs-dd",
                           "--r-lo", "1.7", "--r-hi", "1.9")
        assert code == 4
        assert "bracket" in err


class TestReproduce:
    def test_table_logic_with_stubbed_rows(self, capsys, monkeypatch, tmp_path):
        from causalcert import cli as cli_mod
        from causalcert.scenarios import ReproduceRow

        rows = [ReproduceRow("qs-sdiqi", 0.367, 0.367007, 0.002, 0.1),
                ReproduceRow("witness*noise", 1.0, 1.0, 1e-6, 0.0)]
        monkeypatch.setattr(cli_mod, "run_reproduce", lambda jobs, solver: rows)
        code, out, _ = run(capsys, "reproduce", "--out", str(tmp_path))
        assert code == 0
        assert "2/2 rows within tolerance" in out
        assert (tmp_path / "reproduce.csv").exists()
        assert (tmp_path / "reproduce.png").exists()

        bad = rows + [ReproduceRow("qs-dd", 1.4, 1.576, 0.01, 0.1)]
        monkeypatch.setattr(cli_mod, "run_reproduce", lambda jobs, solver: bad)
        code, out, _ = run(capsys, "reproduce")
        assert code == 1
        assert "FAIL" in out


class TestWitnessVerify:
    def test_builtin_switch_witness(self, capsys):
        code, out, _ = run(capsys, "witness-verify", "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["ok"]
        assert payload["normalization"] == pytest.approx(1.0, abs=1e-9)

    def test_round_trip_through_file(self, tmp_path, capsys):
        from causalcert.witnesses import quantum_switch_witness

        path = tmp_path / "witness.json"
        path.write_text(json.dumps(sz.witness_to_dict(quantum_switch_witness())))
        code, out, _ = run(capsys, "witness-verify", "--witness", str(path))
        assert code == 0
        assert "valid" in out
