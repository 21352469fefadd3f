"""CLI tests: subcommand behavior, flag parsing, output formats, and exit
codes (0 success, 2 config error, 3 partial failures)."""

import json
import subprocess
import sys

import pytest

from qcodesign.benchmarks import Family
from qcodesign.circuit import parse_circuit
from qcodesign.cli import main
from qcodesign.topology import build_corral, export_topology, parse_topology


class TestTopoStats:
    def test_table_values(self, capsys):
        assert main(["topo", "stats", "--topology", "square:4,4"]) == 0
        out = capsys.readouterr().out
        line = next(l for l in out.splitlines() if "square_lattice" in l)
        assert "16" in line and "6" in line and "2.5000" in line \
            and "3.0000" in line

    def test_multiple_topologies(self, capsys):
        rc = main(["topo", "stats", "--topology", "hypercube:4",
                   "--topology", "corral:8,1,2"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "hypercube(4)" in out and "corral(8,1,2)" in out

    def test_topology_file(self, tmp_path, capsys):
        path = tmp_path / "ring.topo"
        path.write_text(export_topology(build_corral(4, 1, 1)))
        assert main(["topo", "stats", "--topology-file", str(path)]) == 0
        assert "ring" in capsys.readouterr().out

    def test_out_file(self, tmp_path):
        out = tmp_path / "stats.txt"
        main(["topo", "stats", "--topology", "tree:2", "--out", str(out)])
        assert "tree(2)" in out.read_text()

    def test_unknown_topology_is_config_error(self, capsys):
        assert main(["topo", "stats", "--topology", "nosuch:2"]) == 2
        assert "unknown topology" in capsys.readouterr().err

    def test_bad_params_is_config_error(self, capsys):
        assert main(["topo", "stats", "--topology", "square:x,y"]) == 2

    def test_no_topology_is_config_error(self, capsys):
        assert main(["topo", "stats"]) == 2


class TestBenchEmit:
    def test_emit_parses_back(self, capsys):
        assert main(["bench", "emit", "--family", "qft", "--width", "5"]) == 0
        c = parse_circuit(capsys.readouterr().out)
        assert c.width == 5 and len(c.instructions) > 0

    def test_family_aliases(self, capsys):
        for fam in ("cdkm", "CDKM_ADDER", "qaoa"):
            assert main(["bench", "emit", "--family", fam,
                         "--width", "4"]) == 0

    def test_unknown_family(self, capsys):
        assert main(["bench", "emit", "--family", "bogus", "--width", "4"]) == 2
        assert "unknown benchmark family" in capsys.readouterr().err

    def test_invalid_width_is_config_error(self, capsys):
        assert main(["bench", "emit", "--family", "cdkm", "--width", "5"]) == 2

    def test_out_file(self, tmp_path):
        out = tmp_path / "ghz.qc"
        main(["bench", "emit", "--family", "ghz", "--width", "6",
              "--out", str(out)])
        assert parse_circuit(out.read_text()).width == 6


class TestTranspile:
    ARGS = ["transpile", "--family", "qv", "--width", "6",
            "--topology", "square:2,3", "--seed", "1", "--trials", "5"]

    def test_prints_metrics(self, capsys):
        assert main(self.ARGS + ["--basis", "iswap_root2"]) == 0
        out = capsys.readouterr().out
        for field in ("total_2q", "critical_2q", "total_swaps",
                      "critical_swaps", "weighted_duration",
                      "modeled_fidelity"):
            assert field in out

    def test_emits_translated_circuit(self, tmp_path):
        out = tmp_path / "routed.qc"
        assert main(self.ARGS + ["--basis", "cnot", "--out", str(out)]) == 0
        c = parse_circuit(out.read_text())
        assert c.width == 6
        assert all(inst.gate.tag in ("CNOT", "U2") for inst in c.instructions)

    def test_counts_mode_has_no_circuit_to_emit(self, tmp_path, capsys):
        rc = main(self.ARGS + ["--synthesis", "counts",
                               "--out", str(tmp_path / "x.qc")])
        assert rc == 2
        assert "counts" in capsys.readouterr().err

    def test_width_too_large_is_config_error(self, capsys):
        rc = main(["transpile", "--family", "qv", "--width", "9",
                   "--topology", "square:2,3"])
        assert rc == 2

    def test_duration_table_flag(self, tmp_path, capsys):
        table = tmp_path / "dur.json"
        table.write_text(json.dumps({"CNOT": 2.0, "default_2q": 1.0}))
        assert main(self.ARGS + ["--basis", "cnot",
                                 "--duration-table", str(table)]) == 0


class TestSuite:
    FLAGS = ["suite", "run", "--topology", "square:2,3",
             "--family", "qv", "--family", "ghz", "--width", "3",
             "--width", "4", "--basis", "cnot", "--seed", "0",
             "--trials", "5", "--synthesis", "counts"]

    def test_run_and_resume(self, tmp_path, capsys):
        args = self.FLAGS + ["--out", str(tmp_path)]
        assert main(args) == 0
        assert (tmp_path / "records.csv").exists()
        assert (tmp_path / "records.jsonl").exists()
        first = (tmp_path / "records.csv").read_bytes()
        assert main(args) == 0  # resume: no new rows, files untouched
        assert (tmp_path / "records.csv").read_bytes() == first
        out = capsys.readouterr().out
        assert "4 rows (0 with errors)" in out

    def test_partial_failures_exit_code(self, tmp_path, capsys):
        rc = main(["suite", "run", "--topology", "square:2,3",
                   "--family", "qv", "--family", "cdkm",
                   "--width", "4", "--width", "5",
                   "--basis", "cnot", "--seed", "0", "--trials", "5",
                   "--synthesis", "counts", "--out", str(tmp_path)])
        assert rc == 3
        assert "with errors" in capsys.readouterr().out

    def test_missing_flags_without_config(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["suite", "run", "--topology", "square:2,3",
                  "--out", str(tmp_path)])
        assert exc.value.code == 2

    def test_config_file(self, tmp_path, capsys):
        cfg = {
            "topologies": [["square", [2, 3]], ["corral", [4, 1, 1]]],
            "benchmarks": [{"family": "qv", "seed": 2}],
            "widths": [4], "bases": ["cnot", "iswap_root2"], "seeds": [0, 1],
            "trials": 5, "synthesis": "counts",
            "duration_table": {"CNOT": 1.0, "SWAP": 3.0, "default_2q": 1.0},
        }
        path = tmp_path / "sweep.json"
        path.write_text(json.dumps(cfg))
        rc = main(["suite", "run", "--config", str(path),
                   "--out", str(tmp_path / "res")])
        assert rc == 0
        assert "8 rows" in capsys.readouterr().out
        import csv as csvmod
        with open(tmp_path / "res" / "records.csv", newline="") as fh:
            rows = list(csvmod.reader(fh))
        assert len(rows) == 9  # header + 8
        seed_col = rows[0].index("bench_seed")
        assert rows[1][seed_col] == "2"  # bench_seed from config

    def test_invalid_config_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({
            "topologies": [["square", [2, 2]]],
            "benchmarks": [{"family": "qv"}],
            "widths": [9], "bases": ["cnot"], "seeds": [0]}))
        assert main(["suite", "run", "--config", str(path),
                     "--out", str(tmp_path / "r")]) == 2
        assert "exceeds smallest topology" in capsys.readouterr().err

    def test_report(self, tmp_path, capsys):
        main(self.FLAGS + ["--out", str(tmp_path)])
        capsys.readouterr()
        assert main(["suite", "report", "--records", str(tmp_path),
                     "--plotdata", str(tmp_path / "plots")]) == 0
        out = capsys.readouterr().out
        assert "Topology statistics" in out and "Mean circuit metrics" in out
        assert (tmp_path / "plots" / "qv_total_2q.csv").exists()

    def test_report_missing_records(self, tmp_path, capsys):
        assert main(["suite", "report",
                     "--records", str(tmp_path / "nope")]) == 2


class TestRoots:
    def test_study_table(self, capsys):
        rc = main(["roots", "--samples", "1", "--roots", "2", "3",
                   "--k-max", "4", "--seed", "3", "--f-iswap", "0.99"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "mean_total_inf" in out
        assert " 2 " in out and " 3 " in out

    def test_bad_samples_is_config_error(self, capsys):
        assert main(["roots", "--samples", "0"]) == 2


class TestConsoleScript:
    def test_entry_point_runs(self):
        proc = subprocess.run(
            [sys.executable, "-m", "qcodesign.cli", "topo", "stats",
             "--topology", "hypercube:3"],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert "hypercube(3)" in proc.stdout
