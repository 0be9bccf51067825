import json
import math
from pathlib import Path

import numpy as np
import pytest
import yaml

from ptlms.cli import main
from ptlms.io import (ConfigError, load_config, read_curve_csv, read_sweep_csv, resolve_config,
                      write_curve_csv, write_sweep_csv)
from ptlms.harness import SweepRow

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL = dict(L=6, n_active=2, mu=0.05, rules=["StandardLMS", "PLMS"], n_iters=300, n_runs=4,
             seed=3, regressor_model="independent")


def write_cfg(tmp_path, **kw):
    cfg = {**SMALL, **kw}
    p = tmp_path / "exp.yaml"
    p.write_text(yaml.safe_dump(cfg))
    return p


class TestConfig:
    def test_defaults_filled(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path))
        assert cfg["rho"] == 0.01 and cfg["epsilon"] == 1000.0 and cfg["system_seed"] == 0
        assert cfg["rules"] == ["StandardLMS", "PLMS"]

    @pytest.mark.parametrize("changes,field", [
        (dict(n_active=10), "n_active"), (dict(L="big"), "L"), (dict(rules=["NLMS"]), "rules"),
        (dict(rho=-1.0), "rho"), (dict(bogus=1), "bogus"), (dict(mu_NLMS=0.1), "mu_NLMS"),
        (dict(n_runs=2.5), "n_runs"), (dict(regressor_model="colored"), "regressor_model"),
    ])
    def test_invalid_fields_named(self, tmp_path, changes, field):
        with pytest.raises(ConfigError, match=field):
            load_config(write_cfg(tmp_path, **changes))

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="mu"):
            resolve_config({"L": 4, "n_active": 1, "rules": ["PLMS"]})

    def test_single_rule_key(self):
        cfg = resolve_config({"L": 4, "n_active": 1, "mu": 0.1, "rule": "PLMS"})
        assert cfg["rules"] == ["PLMS"]

    def test_shipped_configs_parse(self):
        for p in CONFIGS.glob("*.yaml"):
            load_config(p)


class TestCsv:
    def test_curve_round_trip(self, tmp_path):
        vals = np.random.default_rng(0).normal(-20, 5, 50)
        p = write_curve_csv(tmp_path / "a.csv", vals)
        assert p.read_text().splitlines()[0] == "iteration,msd_db"
        it, back = read_curve_csv(p)
        assert it == list(range(50))
        np.testing.assert_allclose(back, vals, rtol=5e-6)
        q = write_curve_csv(tmp_path / "b.csv", back)
        assert p.read_bytes() == q.read_bytes()
        assert read_curve_csv(q)[1] == back

    def test_sweep_round_trip(self, tmp_path):
        rows = [SweepRow(0.001, -30.123456789, -30.2, True), SweepRow(0.5, math.nan, math.nan, False)]
        p = write_sweep_csv(tmp_path / "s.csv", rows)
        assert p.read_text().splitlines()[0] == "mu,sim_msd_db,theory_msd_db,stable"
        back = read_sweep_csv(p)
        assert back[0].sim_msd_db == -30.1235 and back[0].stable
        assert math.isnan(back[1].sim_msd_db) and not back[1].stable
        assert write_sweep_csv(tmp_path / "t.csv", back).read_bytes() == p.read_bytes()


class TestSimulate:
    def test_one_file_per_rule(self, tmp_path):
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(write_cfg(tmp_path)), "--out", str(out)]) == 0
        for rule in ("StandardLMS", "PLMS"):
            it, vals = read_curve_csv(out / f"curve_{rule}.csv")
            assert len(it) == 300 and np.all(np.isfinite(vals))
        manifest = json.loads((out / "manifest_simulate.json").read_text())
        assert manifest["seed"] == 3 and manifest["config"]["rho"] == 0.01
        assert len(manifest["outputs"]) == 2

    def test_missing_config(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(tmp_path / "nope.yaml"), "--out", str(out)]) == 1
        assert not out.exists()
        assert "not found" in capsys.readouterr().err

    def test_bad_field_exit_status(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(write_cfg(tmp_path, n_active=99)), "--out", str(out)]) == 1
        assert "n_active" in capsys.readouterr().err
        assert not out.exists()

    def test_usage_error_exit_status(self):
        with pytest.raises(SystemExit) as exc:
            main(["simulate"])
        assert exc.value.code == 1

    def test_rerun_byte_identical(self, tmp_path):
        cfg = write_cfg(tmp_path)
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["simulate", "--config", str(cfg), "--runs", "1", "--seed", "7", "--out", str(out)]) == 0
        for rule in ("StandardLMS", "PLMS"):
            assert (a / f"curve_{rule}.csv").read_bytes() == (b / f"curve_{rule}.csv").read_bytes()

    def test_manifest_reproduces(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", str(write_cfg(tmp_path)), "--seed", "11", "--out", str(a)]) == 0
        assert main(["simulate", "--config", str(a / "manifest_simulate.json"), "--out", str(b)]) == 0
        for rule in ("StandardLMS", "PLMS"):
            assert (a / f"curve_{rule}.csv").read_bytes() == (b / f"curve_{rule}.csv").read_bytes()

    def test_rule_override(self, tmp_path):
        out = tmp_path / "o"
        assert main(["simulate", "--config", str(write_cfg(tmp_path)), "--rule", "MuLawPLMS", "--out", str(out)]) == 0
        assert sorted(p.name for p in out.glob("curve_*.csv")) == ["curve_MuLawPLMS.csv"]

    def test_all_diverged_is_numerical_failure(self, tmp_path):
        cfg = write_cfg(tmp_path, mu=5.0, rules=["StandardLMS"])
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_speedup_config_two_curves(self, tmp_path):
        out = tmp_path / "speedup"
        cfg = load_config(CONFIGS / "sparse_speedup.yaml")
        assert cfg["L"] == 512 and cfg["n_active"] == 64 and cfg["sigma_v2"] == 0.01 and cfg["n_runs"] == 200
        short = {**cfg, "n_iters": 200}
        p = tmp_path / "sparse_speedup.yaml"
        p.write_text(yaml.safe_dump(short))
        assert main(["simulate", "--config", str(p), "--runs", "2", "--out", str(out)]) == 0
        assert sorted(q.name for q in out.glob("curve_*.csv")) == ["curve_PLMS.csv", "curve_StandardLMS.csv"]


def read_report(path):
    return yaml.safe_load(Path(path).read_text())


class TestTheory:
    def test_lms_mean_bound(self, tmp_path):
        cfg = write_cfg(tmp_path, rules=["StandardLMS"], sigma_u2=1.0)
        assert main(["theory", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        rep = read_report(tmp_path / "o" / "theory_StandardLMS.txt")
        assert rep["mean_bound"] == 2.0
        assert rep["ms_bound"] == pytest.approx(2 / 8, rel=1e-5)
        assert rep["stable"] is True
        it, vals = read_curve_csv(tmp_path / "o" / rep["transient_curve"])
        assert len(it) == 300
        assert vals[-1] == pytest.approx(rep["steady_state_msd_db"], abs=0.05)

    def test_unstable_marked(self, tmp_path):
        cfg = write_cfg(tmp_path, rules=["StandardLMS"], mu=0.4)
        assert main(["theory", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        rep = read_report(tmp_path / "o" / "theory_StandardLMS.txt")
        assert rep["stable"] is False
        assert rep["steady_state_msd"] == "unstable" and rep["transient_curve"] == "none"

    def test_size_cap(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, L=70, theory_max_L=64)
        assert main(["theory", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
        assert "theory_max_L=64" in capsys.readouterr().err
        assert not (tmp_path / "o").exists()


class TestSweep:
    def test_single_mu(self, tmp_path):
        out = tmp_path / "o"
        assert main(["sweep", "--config", str(write_cfg(tmp_path, rules=["PLMS"])), "--mu", "0.01",
                     "--out", str(out)]) == 0
        rows = read_sweep_csv(out / "sweep_PLMS.csv")
        assert len(rows) == 1 and rows[0].mu == 0.01

    def test_all_unstable_still_succeeds(self, tmp_path):
        out = tmp_path / "o"
        assert main(["sweep", "--config", str(write_cfg(tmp_path, rules=["StandardLMS"])),
                     "--mu", "2.5,4", "--out", str(out)]) == 0
        rows = read_sweep_csv(out / "sweep_StandardLMS.csv")
        assert [r.stable for r in rows] == [False, False]

    def test_no_mu(self, tmp_path):
        assert main(["sweep", "--config", str(write_cfg(tmp_path)), "--out", str(tmp_path / "o")]) == 1

    def test_theory_report_matches_sweep(self, tmp_path):
        # 32-tap sweep system at one step size, short runs: only the theory column is compared
        cfg = load_config(CONFIGS / "mu_sweep.yaml")
        short = {**cfg, "n_iters": 50, "n_iters_mu_product": 0.0, "n_runs": 1, "mu": 0.008}
        p = tmp_path / "mu_sweep.yaml"
        p.write_text(yaml.safe_dump(short))
        assert main(["theory", "--config", str(p), "--out", str(tmp_path / "t")]) == 0
        assert main(["sweep", "--config", str(p), "--mu", "0.008", "--out", str(tmp_path / "s")]) == 0
        rep = read_report(tmp_path / "t" / "theory_PLMS.txt")
        row = read_sweep_csv(tmp_path / "s" / "sweep_PLMS.csv")[0]
        assert rep["steady_state_msd_db"] == row.theory_msd_db
