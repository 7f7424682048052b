import numpy as np
import pytest

from ratelab.experiments import (
    CheckConfig,
    FlowConfig,
    RunConfig,
    TightnessConfig,
    config_hash,
    format_summary,
    format_value,
    parse_problem,
    parse_seed_list,
    parse_solver,
    parse_step_value,
    parse_summary,
    run_check,
    run_experiment,
    run_flow,
    run_tightness,
    write_run_artifacts,
)


# ----------------------------------------------------------------- parsing


def test_parse_quadratic_spec():
    p = parse_problem("quadratic:dim=12,null=3,seed=7")
    assert p.problem_id == "quadratic:dim=12,null=3,seed=7"
    assert p.smooth.coord_lipschitz.size == 12
    assert p.smooth.lipschitz == 100.0  # spectrum max pinned to hi
    assert p.known_opt_value == 0.0
    assert p.solution_projector is not None
    p2 = parse_problem("quadratic:dim=5,lo=0.5,hi=2")
    assert p2.smooth.lipschitz == 2.0
    assert np.all(np.linalg.eigvalsh(p2.smooth.quadratic.matrix) >= 0.5 - 1e-9)


def test_parse_lasso_spec():
    p = parse_problem("lasso:dim=6,seed=3,weight=0.2")
    assert p.regularizer is not None
    assert p.regularizer.value_fn(np.ones(6)) == pytest.approx(1.2, rel=1e-15)
    assert p.known_opt_value is None
    assert p.smooth.lipschitz == 10.0
    assert p.problem_id == "lasso:dim=6,seed=3,weight=0.2"
    # the offset draw is decoupled from the spectrum draw
    q = parse_problem("lasso:dim=6,seed=3,weight=0.5")
    assert np.array_equal(q.smooth.quadratic.offset, p.smooth.quadratic.offset)


def test_parse_power_spec():
    p = parse_problem("power:p=6")
    assert p.problem_id == "power:p=6"
    assert p.smooth.lipschitz == 30.0


def test_parse_problem_rejects_bad_specs():
    for bad in (
        "quadratic",  # missing dim
        "quadratic:dim=5,rank=2",  # unknown key
        "quadratic:dim=5,null=5",  # null must leave a positive part
        "banana:dim=5",
        "power:p=7",
        "quadratic:dim=5,seed=1,seed=2",  # duplicate key
    ):
        with pytest.raises(ValueError):
            parse_problem(bad)


def test_parse_step_value_sugar():
    assert parse_step_value("inv_L", 4.0) == 0.25
    assert parse_step_value("L", 4.0) == 4.0
    assert parse_step_value("2/L", 4.0) == 0.5
    assert parse_step_value("1.5L", 4.0) == 6.0
    assert parse_step_value("0.3", 4.0) == 0.3
    with pytest.raises(ValueError):
        parse_step_value("fast", 4.0)


def test_parse_seed_list_forms():
    assert parse_seed_list("0:3") == (0, 1, 2)
    assert parse_seed_list("5") == (5,)
    assert parse_seed_list("1,9,4") == (1, 9, 4)
    with pytest.raises(ValueError):
        parse_seed_list("3:3")
    with pytest.raises(ValueError):
        parse_seed_list("a:b")


def test_parse_solver_specs():
    s = parse_solver("gd_fixed:alpha=inv_L")
    assert s.name == "gd_fixed" and not s.stochastic and not s.linesearch
    ls = parse_solver("gd_linesearch:init=bb,gamma=0.25")
    assert ls.linesearch
    rule = ls.rule_for(parse_problem("quadratic:dim=4,seed=0"))
    assert rule.gamma == 0.25 and rule.init == "bb"
    assert rule.c1 == 0.04 and rule.c2 == 0.005  # defaults 4/L, 0.5/L at L=100
    cd = parse_solver("cd_stochastic:dist=lipschitz,floor=0.01")
    assert cd.stochastic
    with pytest.raises(ValueError):
        parse_solver("gd_fixed:gamma=0.5")  # key belongs to line search
    with pytest.raises(ValueError):
        parse_solver("momentum:beta=0.9")


def test_solver_spec_runs_all_six():
    quad = parse_problem("quadratic:dim=4,seed=2,lo=0.5,hi=5")
    lasso = parse_problem("lasso:dim=4,seed=2,weight=0.1,lo=0.5,hi=5")
    x0 = np.ones(4)
    for spec, prob in (
        ("gd_fixed:alpha=inv_L", quad),
        ("gd_linesearch:init=bb", quad),
        ("cd_stochastic:dist=uniform", quad),
        ("proxgrad_fixed:lbar=L", lasso),
        ("proxgrad_linesearch:gamma=0.5", lasso),
        ("proxcd_stochastic:dist=lipschitz,floor=0.05", lasso),
    ):
        tr = parse_solver(spec).run(prob, x0, 150, seed=1, stride="pow2")
        assert tr.steps_taken == 150
        assert np.isfinite(tr.objective[-1])


# ------------------------------------------------------------ configuration


def test_run_config_round_trip():
    cfg = RunConfig(problem="quadratic:dim=8,seed=1", solver="gd_fixed:alpha=inv_L",
                    budget="5000", seeds="0:3", tail_threshold="0.2")
    kv = cfg.to_kv()
    assert kv["run.problem"] == "quadratic:dim=8,seed=1"
    assert RunConfig.from_kv(kv) == cfg
    with pytest.raises(ValueError):
        RunConfig.from_kv({**kv, "run.bogus": "1"})
    missing = dict(kv)
    del missing["run.budget"]
    with pytest.raises(ValueError):
        RunConfig.from_kv(missing)


def test_other_configs_round_trip():
    for cfg in (
        TightnessConfig(p="6", budget="20000"),
        FlowConfig(p="4", steps="2000"),
        CheckConfig(trace="foo.csv", gamma="0.5"),
    ):
        assert type(cfg).from_kv(cfg.to_kv()) == cfg


def test_config_hash_is_stable_and_sensitive():
    cfg = RunConfig(problem="quadratic:dim=8", solver="gd_fixed", budget="1000")
    h1 = config_hash(cfg.to_kv())
    h2 = config_hash(cfg.to_kv())
    assert h1 == h2 and len(h1) == 16
    other = RunConfig(problem="quadratic:dim=8", solver="gd_fixed", budget="1001")
    assert config_hash(other.to_kv()) != h1


def test_summary_format_round_trip():
    kv = {"b.key": "text", "a.flag": format_value(True),
          "c.num": format_value(0.1), "d.int": "42"}
    text = format_summary(kv)
    lines = text.strip().split("\n")
    assert lines[0] == "# ratelab summary v1"
    assert lines[1:] == sorted(lines[1:])
    back = parse_summary(text)
    assert back == kv
    assert back["a.flag"] == "true"
    assert float(back["c.num"]) == 0.1
    with pytest.raises(ValueError):
        parse_summary("no header\na=b\n")


def test_budget_floor_enforced():
    cfg = RunConfig(problem="quadratic:dim=4", solver="gd_fixed", budget="50")
    with pytest.raises(ValueError):
        run_experiment(cfg)


# ------------------------------------------------------------- experiments


def test_run_experiment_known_fstar_passes():
    cfg = RunConfig(
        problem="quadratic:dim=8,seed=1,lo=0.1,hi=10",
        solver="gd_fixed:alpha=inv_L",
        budget="20000",
    )
    res = run_experiment(cfg)
    assert res.passed
    assert res.fstar == 0.0 and res.fstar_source == "known"
    s = res.summary
    assert s["overall.pass"] == "true"
    assert s["verdict.monotone.pass"] == "true"
    assert s["verdict.tail.pass"] == "true"
    assert s["verdict.summable.pass"] == "true"
    assert s["fstar.source"] == "known"
    assert s["problem.dim"] == "8"
    assert float(s["verdict.tail.value"]) <= 0.05
    assert "provenance.config_hash" in s
    assert "provenance.backend" in s


def test_run_experiment_linesearch_verdicts():
    cfg = RunConfig(
        problem="quadratic:dim=8,seed=1,lo=0.1,hi=10",
        solver="gd_linesearch:init=bb",
        budget="5000",
    )
    res = run_experiment(cfg)
    assert res.passed
    assert res.summary["verdict.replay.pass"] == "true"
    assert res.summary["verdict.steps_in_bounds.pass"] == "true"


def test_run_experiment_estimates_missing_fstar():
    cfg = RunConfig(
        problem="lasso:dim=6,seed=3,weight=0.1,lo=0.5,hi=5",
        solver="proxgrad_fixed:lbar=L",
        budget="2000",
    )
    res = run_experiment(cfg)
    assert res.fstar_source == "estimated"
    assert res.passed
    assert float(res.summary["fstar.value"]) == res.fstar


def test_run_experiment_explicit_fstar():
    cfg = RunConfig(
        problem="quadratic:dim=4,seed=2,lo=0.5,hi=5",
        solver="gd_fixed:alpha=inv_L",
        budget="1000",
        fstar="0.0",
    )
    res = run_experiment(cfg)
    assert res.fstar == 0.0 and res.fstar_source == "given"


def test_run_experiment_stochastic_seed_mean():
    cfg = RunConfig(
        problem="quadratic:dim=6,seed=5,lo=0.1,hi=10",
        solver="cd_stochastic:dist=lipschitz,floor=0.01",
        budget="4000",
        seeds="0:5",
    )
    res = run_experiment(cfg)
    assert len(res.traces) == 5
    assert res.summary["verdict.curve"] == "seed-mean"
    assert res.passed
    for seed in range(5):
        assert res.summary[f"trace.{seed}.monotone"] == "true"


def test_artifacts_are_reproducible(tmp_path):
    cfg = RunConfig(
        problem="quadratic:dim=5,seed=4,lo=0.5,hi=5",
        solver="gd_fixed:alpha=inv_L",
        budget="500",
        seeds="0:2",
    )
    for sub in ("a", "b"):
        write_run_artifacts(cfg, run_experiment(cfg), tmp_path / sub)
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == [
        "snapshots_seed0.csv",
        "snapshots_seed1.csv",
        "summary.txt",
        "trace_seed0.csv",
        "trace_seed1.csv",
    ]
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    text = (tmp_path / "a" / "summary.txt").read_text()
    assert text.startswith("# ratelab summary v1\n")


def test_run_tightness_small_budget():
    cfg = TightnessConfig(p="4", budget="20000", fit_lo="200", fit_hi="20000")
    res = run_tightness(cfg)
    assert res.passed
    s = res.summary
    assert s["verdict.exponent.pass"] == "true"
    assert s["verdict.constant.pass"] == "true"
    assert abs(float(s["fit.exponent"]) - 2.0) <= 0.05
    assert res.trace.problem_id == "power:p=4"


def test_run_flow_small_grid():
    res = run_flow(FlowConfig(p="4", steps="2000"))
    assert res.passed
    assert float(res.summary["verdict.deviation.value"]) <= 1e-6
    assert res.summary["flow.theta"] == format_value(0.5)


def test_run_check_on_emitted_trace(tmp_path):
    cfg = RunConfig(
        problem="quadratic:dim=8,seed=1,lo=0.1,hi=10",
        solver="gd_fixed:alpha=inv_L",
        budget="20000",
    )
    res = run_experiment(cfg)
    write_run_artifacts(cfg, res, tmp_path)
    chk = run_check(CheckConfig(trace=str(tmp_path / "trace_seed0.csv")))
    assert chk.passed
    assert chk.summary["verdict.monotone.pass"] == "true"
    assert chk.summary["verdict.summable.pass"] == "true"
