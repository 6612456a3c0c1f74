"""CLI contract: schema validation, artifacts, determinism, exit codes."""
import json
import pytest

from specsurf import cli


def run(tmp_path, command, cfg, name="run", seed=None):
    cfg_path = tmp_path / f"{name}.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / f"{name}_out"
    argv = [command, "--config", str(cfg_path), "--out", str(out)]
    if seed is not None:
        argv += ["--seed", str(seed)]
    code = cli.main(argv)
    return code, out


class TestValidation:
    def test_interval_touching_quarter_rejected(self, tmp_path):
        code, _ = run(tmp_path, "weyl", {"params": {"intervals": [[0.25, 1.0]]}})
        assert code == cli.EXIT_CONFIG

    def test_unknown_field_rejected(self, tmp_path):
        code, _ = run(tmp_path, "weyl", {"bogus": 1, "params": {"intervals": [[0.5, 1.0]]}})
        assert code == cli.EXIT_CONFIG

    def test_missing_required_rejected(self, tmp_path):
        code, _ = run(tmp_path, "systole-prob", {"params": {"g": 2, "k": 1}})
        assert code == cli.EXIT_CONFIG

    def test_malformed_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        code = cli.main(["weyl", "--config", str(p), "--out", str(tmp_path / "o")])
        assert code == cli.EXIT_CONFIG


class TestRuns:
    def test_weyl_artifacts(self, tmp_path):
        code, out = run(tmp_path, "weyl", {"seed": 1, "params": {"intervals": [[0.5, 1.0]]}})
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["ok"] and report["seed"] == 1
        assert "config_hash" in report
        csv_text = (out / "weyl.csv").read_text()
        assert csv_text.splitlines()[0] == "a,b,N,M,main_term,remainder"

    def test_determinism_byte_identical(self, tmp_path):
        cfg = {"seed": 7, "params": {"intervals": [[0.5, 1.0]]}}
        _, out1 = run(tmp_path, "weyl", cfg, name="d1")
        _, out2 = run(tmp_path, "weyl", cfg, name="d2")
        assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
        assert (out1 / "weyl.csv").read_bytes() == (out2 / "weyl.csv").read_bytes()

    def test_geodesics(self, tmp_path):
        code, out = run(tmp_path, "geodesics", {"params": {"l_max": 3.0, "depth": 8}})
        assert code == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["result"]["systole"] == pytest.approx(1.9248473002384138)
        assert (out / "length_spectrum.csv").exists()

    def test_systole_prob(self, tmp_path):
        code, out = run(tmp_path, "systole-prob",
                        {"params": {"g": 2, "k": 1, "eps_values": [0.01, 0.02, 0.04]}})
        assert code == 0
        rep = json.loads((out / "report.json").read_text())
        assert 1.9 <= rep["result"]["fitted_exponent"] <= 2.1

    def test_maass_selberg(self, tmp_path):
        code, out = run(tmp_path, "maass-selberg",
                        {"params": {"r_values": [1.0], "Y_values": [3.0]}})
        assert code == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["result"]["worst_residual"] < 1e-3

    def test_transform_window(self, tmp_path):
        code, out = run(tmp_path, "transform",
                        {"params": {"family": "window", "t": 2.0, "interval": [1.25, 9.25],
                                    "r_max": 6.0, "n_r": 13}})
        assert code == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["result"]["admissible"]

    def test_thin_part(self, tmp_path):
        code, out = run(tmp_path, "thin-part",
                        {"params": {"R_values": [0.3], "n_samples": 100}}, seed=5)
        assert code == 0
        assert (out / "thin_part.csv").exists()

    def test_spectral_action(self, tmp_path):
        code, out = run(tmp_path, "spectral-action",
                        {"params": {"T": 6.0, "n_grid": 8, "interval": [0.5, 1.0]}})
        assert code == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["result"]["min_over_grid"] > 0

    def test_variance(self, tmp_path):
        code, out = run(tmp_path, "variance",
                        {"params": {"observable": {"type": "core", "Y": 3.0},
                                    "interval": [0.5, 1.0], "n_r": 6}})
        assert code == 0
        assert (out / "variance_integrand.csv").exists()

    def test_ergodic_decay(self, tmp_path):
        code, out = run(tmp_path, "ergodic-decay",
                        {"params": {"observable": {"type": "bump", "center": [0.0, 1.4],
                                                   "radius": 0.3},
                                    "t_values": [2.0, 3.0], "n_samples": 20}}, seed=3)
        assert code == 0
        assert (out / "ergodic_decay.csv").exists()

    def test_trace(self, tmp_path):
        code, out = run(tmp_path, "trace", {"params": {"t": 1.0, "l_max": 6.0}})
        assert code == 0
        rep = json.loads((out / "report.json").read_text())
        assert abs(rep["result"]["residual"]) <= rep["result"]["budget_total"]


class TestBudgetFailure:
    def test_missing_volume_entries(self, tmp_path):
        # a stripped table makes systole-prob fail with exit code 3
        vols = tmp_path / "vols.txt"
        vols.write_text("2 1 value 100.0\n")
        code, out = run(tmp_path, "systole-prob",
                        {"params": {"g": 2, "k": 1, "eps_values": [0.01],
                                    "table": str(vols)}})
        assert code == cli.EXIT_BUDGET
        rep = json.loads((out / "report.json").read_text())
        assert not rep["ok"] and "failure" in rep
