import json

import pytest

from nonlocal_rd.cli import main
from nonlocal_rd.config import ExperimentPlan, parse_config, serialize_plan
from nonlocal_rd.errors import ConfigError, UnsupportedPresetError
from nonlocal_rd.field import Bump, Gaussian, Sum
from nonlocal_rd.runner import RunSummary, dichotomy_preset, read_series, run_plan

MINIMAL = {
    "n": 1, "alpha": 1.5, "beta": 1.0, "sigma": 1.0, "L": 5.0, "m": 101,
    "bc": "dirichlet", "init": {"type": "gaussian", "amplitude": 1.0}, "t_end": 0.5,
}


def cfg(**kw):
    return json.dumps({**MINIMAL, **kw})


class TestParse:
    def test_minimal_defaults(self):
        plan = parse_config(cfg())
        (run,) = plan.expanded_runs()
        assert run.dt_init == 1e-3 and run.u_max == 1e8 and run.growth_cap == 2.0
        assert run.init == Gaussian(1.0, 0.0, 1.0)
        echo = run.to_dict()
        assert echo["dt_min"] == 1e-9 and echo["linear_tol"] == 1e-10

    @pytest.mark.parametrize("key,value", [("alpha", 0.5), ("beta", 0.9)])
    def test_exponents_below_one(self, key, value):
        with pytest.raises(ConfigError, match="alpha, beta >= 1") as err:
            parse_config(cfg(**{key: value}))
        assert err.value.key == key

    @pytest.mark.parametrize("key,value", [("sigma", -1.0), ("bc", "neumann"), ("m", "x")])
    def test_bad_values_name_key(self, key, value):
        with pytest.raises(ConfigError) as err:
            parse_config(cfg(**{key: value}))
        assert err.value.key == key

    def test_missing_key(self):
        d = dict(MINIMAL)
        del d["t_end"]
        with pytest.raises(ConfigError) as err:
            parse_config(json.dumps(d))
        assert err.value.key == "t_end"

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as err:
            parse_config(cfg(dtmax=0.1))
        assert err.value.key == "dtmax"

    def test_not_json(self):
        with pytest.raises(ConfigError):
            parse_config("alpha = 1.5")

    def test_sweep(self):
        plan = parse_config(json.dumps({"name": "s", "runs": [MINIMAL],
                                        "sweep": {"alpha": [1.2, 1.5, 1.8]}}))
        runs = plan.expanded_runs()
        assert [r.alpha for r in runs] == [1.2, 1.5, 1.8]
        assert len({r.name for r in runs}) == 3

    def test_duplicate_names(self):
        with pytest.raises(ConfigError):
            parse_config(json.dumps({"runs": [{**MINIMAL, "name": "a"}, {**MINIMAL, "name": "a"}]}))

    def test_roundtrip(self):
        init = {"type": "sum", "terms": [
            {"type": "bump", "amplitude": 2.0, "center": [0.5], "radius": 1.0},
            {"type": "gaussian", "amplitude": 1.0, "center": -1.0, "width": 0.5}]}
        text = json.dumps({"name": "rt", "output_dir": "x", "meta": {"note": "hi"},
                           "runs": [{**MINIMAL, "init": init, "ks": [2, 3.5], "reaction_off": True}],
                           "sweep": {"sigma": [0.5, 1.0]}})
        plan = parse_config(text)
        assert isinstance(plan.runs[0].init, Sum)
        assert isinstance(plan.runs[0].init.terms[0], Bump)
        assert parse_config(serialize_plan(plan)) == plan
        assert serialize_plan(parse_config(serialize_plan(plan))) == serialize_plan(plan)


class TestRunPlan:
    def test_empty_plan(self, tmp_path):
        assert run_plan(ExperimentPlan("empty", ()), output_dir=tmp_path) == []
        index = json.loads((tmp_path / "index.json").read_text())
        assert index["runs"] == []

    def test_heat_only_monotone_sup(self, tmp_path):
        plan = parse_config(cfg(name="heat", reaction_off=True, sigma=0.0, t_end=1.0))
        (s,) = run_plan(plan, output_dir=tmp_path)
        assert s.verdict.kind == "Global"
        series = read_series(tmp_path / "heat.csv", 1.0, 1.5)
        sups = [r.sup for r in series]
        assert all(b <= a for a, b in zip(sups, sups[1:]))
        header = (tmp_path / "heat.csv").read_text().splitlines()[0]
        assert header.startswith("t,dt,mass_beta,norm_beta,norm_crit,sup,clipped_mass_cum,"
                                 "boundary_shell_mass")

    def test_summary_roundtrip(self, tmp_path):
        plan = parse_config(cfg(name="r", ks=[3.0]))
        (s,) = run_plan(plan, output_dir=tmp_path)
        d = json.loads((tmp_path / "r.json").read_text())
        back = RunSummary.from_dict(d)
        assert back.verdict == s.verdict and back.regime == s.regime
        assert back.to_dict() == d
        assert "norm_3.0" in (tmp_path / "r.csv").read_text().splitlines()[0]

    def test_deterministic_across_workers(self, tmp_path):
        plan = parse_config(json.dumps({"name": "d", "runs": [MINIMAL],
                                        "sweep": {"sigma": [0.0, 1.0]}}))
        run_plan(plan, workers=1, output_dir=tmp_path / "a")
        run_plan(plan, workers=2, output_dir=tmp_path / "b")
        for r in plan.expanded_runs():
            a = (tmp_path / "a" / f"{r.name}.csv").read_bytes()
            b = (tmp_path / "b" / f"{r.name}.csv").read_bytes()
            assert a == b

    def test_failure_recorded(self, tmp_path):
        # overflow at the very first step of a huge datum is a blow-up, not a crash
        plan = parse_config(cfg(name="huge", init={"type": "gaussian", "amplitude": 1e7},
                                alpha=3.0, sigma=0.0))
        (s,) = run_plan(plan, output_dir=tmp_path)
        assert s.verdict.kind == "BlowUp"


class TestPreset:
    def test_unsupported(self):
        with pytest.raises(UnsupportedPresetError):
            dichotomy_preset(3)

    def test_plan_shape(self):
        plan = dichotomy_preset(2, calibrate=False)
        a, b = plan.runs
        assert (a.alpha, a.beta, a.sigma, b.sigma) == (1.8, 1.0, 0.0, 1.0)
        assert a.init == b.init and a.m == 257
        assert plan.meta["fujita_exponent"] == 2.0

    def test_n1_calibrated(self):
        plan = dichotomy_preset(1)
        assert plan.runs[0].L == 20.0 and plan.runs[0].m == 2001
        assert plan.meta["calibration"][-1]["verdict"] == "BlowUp"


class TestCli:
    def test_regime(self, capsys):
        assert main(["regime", "--n", "3", "--alpha", "1.5", "--beta", "1"]) == 0
        d = json.loads(capsys.readouterr().out)
        assert d["covered"] is True and d["threshold"] == pytest.approx(5 / 3)

    def test_regime_n1_inf(self, capsys):
        assert main(["regime", "--n", "1", "--alpha", "1.5", "--beta", "1"]) == 0
        assert json.loads(capsys.readouterr().out)["p"] == "inf"

    def test_regime_out_of_model(self, capsys):
        assert main(["regime", "--n", "3", "--alpha", "0.5", "--beta", "1"]) == 1

    def test_usage(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["regime", "--n", "3"])
        assert exc.value.code == 1
        with pytest.raises(SystemExit) as exc:
            main(["preset", "dichotomy", "--n", "3"])
        assert exc.value.code == 1

    def test_run_and_check(self, tmp_path, capsys):
        conf = tmp_path / "c.json"
        conf.write_text(cfg(name="one", t_end=2.0))
        assert main(["run", str(conf), "--out", str(tmp_path / "o")]) == 0
        assert "one: Global" in capsys.readouterr().out
        assert main(["check", str(tmp_path / "o" / "one.csv")]) == 0
        reports = json.loads(capsys.readouterr().out)
        assert {r["name"] for r in reports} == {"lbeta_cap", "lbeta_decrease", "uniform_bound"}

    def test_check_needs_params(self, tmp_path, capsys):
        conf = tmp_path / "c.json"
        conf.write_text(cfg(name="one"))
        main(["run", str(conf), "--out", str(tmp_path)])
        (tmp_path / "one.json").unlink()
        assert main(["check", str(tmp_path / "one.csv")]) == 1
        assert main(["check", str(tmp_path / "one.csv"), "--alpha", "1.5", "--beta", "1",
                     "--sigma", "1"]) == 0

    def test_check_flags_violation(self, tmp_path, capsys):
        csv = tmp_path / "s.csv"
        rows = ["t,dt,mass_beta,norm_beta,norm_crit,sup,clipped_mass_cum,boundary_shell_mass"]
        rows += [f"{t},0.1,{1 + t},{1 + t},{1 + t},{1 + t},0,0" for t in range(10)]
        csv.write_text("\n".join(rows) + "\n")
        assert main(["check", str(csv), "--alpha", "1.5", "--beta", "1", "--sigma", "1"]) == 3

    def test_bad_config(self, tmp_path, capsys):
        conf = tmp_path / "c.json"
        conf.write_text(cfg(alpha=0.5))
        assert main(["run", str(conf)]) == 1
        assert "alpha" in capsys.readouterr().err

    def test_preset(self, tmp_path, capsys):
        assert main(["preset", "dichotomy", "--n", "1", "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "dichotomy_n1_sigma0: BlowUp" in out and "dichotomy_n1_sigma1: Global" in out
        index = json.loads((tmp_path / "index.json").read_text())
        assert [r["verdict"] for r in index["runs"]] == ["BlowUp", "Global"]
