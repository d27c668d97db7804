import json
import subprocess
import sys

import pytest

from liebcavity import cli, sweeps


def _run(tmp_path, *args):
    return cli.main(["--out", str(tmp_path), *args])


def test_spectrum_writes_tables_and_manifests(tmp_path, capsys):
    assert _run(tmp_path, "spectrum") == 0
    two = sweeps.read_csv(tmp_path / "spectrum_two_photon.csv")
    assert len(two) == 21
    assert len(sweeps.read_csv(tmp_path / "spectrum_single_particle.csv")) == 6
    man = json.loads((tmp_path / "spectrum_two_photon.manifest.json").read_text())
    assert man["command"] == "spectrum"
    assert man["outputs"] == ["spectrum_two_photon.csv"]
    assert man["config"]["u"] == 0.1
    assert "spectrum_two_photon.csv" in capsys.readouterr().out


def test_spectrum_subset(tmp_path):
    assert _run(tmp_path, "spectrum", "--single-particle") == 0
    assert not (tmp_path / "spectrum_two_photon.csv").exists()


def test_global_options_after_subcommand(tmp_path):
    assert cli.main(["meanfield", "--out", str(tmp_path), "--u", "0.0", "--grid", "0,1"]) == 0
    rows = sweeps.read_csv(tmp_path / "meanfield.csv")
    assert [float(r["delta"]) for r in rows] == [0.0, 1.0]


def test_sweep_and_replay_bit_identical(tmp_path):
    first = tmp_path / "a"
    args = ["sweep", "--param", "delta", "--range", "-0.5", "0.5", "0.5",
            "--engines", "hierarchy,meanfield", "--nc", "3", "--convergence", "none"]
    assert cli.main(["--out", str(first), *args]) == 0
    csv_a = (first / "sweep_delta.csv").read_bytes()
    rows = sweeps.read_csv(first / "sweep_delta.csv")
    assert len(rows) == 6 and rows[0]["value"] == "-0.5"
    paths = sweeps.replay(first / "sweep_delta.manifest.json", tmp_path / "b")
    assert paths[0].read_bytes() == csv_a


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"u": 0.0, "j": 2.0, "f_re": 0.2}))
    assert _run(tmp_path, "--config", str(cfg), "--j", "1.0", "hierarchy", "--nc", "2",
                "--convergence", "none") == 0
    row = sweeps.read_csv(tmp_path / "hierarchy.csv")[0]
    assert float(row["j"]) == 1.0 and float(row["u"]) == 0.0
    assert float(row["g2_11"]) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("args", [
    ["sweep", "--param", "u", "--grid", "0.2,0.1,0.3"],
    ["sweep", "--param", "u", "--grid", "0.1", "--range", "0", "1", "0.1"],
    ["sweep", "--param", "u", "--grid", "0.1", "--engines", "exact"],
    ["--gamma", "-1", "compare"],
    ["meanfield", "--range", "0", "1", "0"],
])
def test_usage_errors_exit_2_with_json(tmp_path, capsys, args):
    assert _run(tmp_path, *args) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["status"] == "error" and err["message"]


def test_argparse_error_exit_2(tmp_path, capsys):
    assert _run(tmp_path, "sweep") == 2
    assert _run(tmp_path, "bogus") == 2


def test_runtime_failure_exit_1(tmp_path, capsys):
    assert _run(tmp_path, "hierarchy", "--nc", "12", "--convergence", "none") == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["command"] == "hierarchy" and "MemoryError" in err["message"]


def test_oracle_table(tmp_path):
    assert _run(tmp_path, "oracle", "--nmax", "3") == 0
    row = sweeps.read_csv(tmp_path / "oracle.csv")[0]
    assert set(sweeps.ORACLE_COLUMNS) <= set(row)
    assert float(row["g2_local"]) > 1


def test_disorder_scan_small(tmp_path):
    assert _run(tmp_path, "--seed", "4", "disorder-scan", "--kind", "hop", "--w-grid", "0,0.5",
                "--realizations", "2", "--spot-checks", "1", "--nc", "3", "--nmax", "3") == 0
    rows = sweeps.read_csv(tmp_path / "disorder_hopping.csv")
    assert len(rows) == 10
    man = json.loads((tmp_path / "disorder_hopping.manifest.json").read_text())
    assert man["seeds"] == {"master_seed": 4}
    assert (tmp_path / "disorder_hopping_spotcheck.csv").exists()


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "liebcavity", "--out", str(tmp_path),
                          "spectrum", "--two-photon"], capture_output=True, text=True)
    assert out.returncode == 0
    assert (tmp_path / "spectrum_resonant_cluster.csv").exists()
