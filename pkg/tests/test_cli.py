import json
import os

import pytest

from dtvcn import cli
from dtvcn.exceptions import ConfigError, TooFewModelsError


def write_config(tmp_path, **extra):
    doc = {
        "growth": {"n0": 5, "steps": 115, "m": 3, "beta": 0.6, "gamma": 0.6,
                   "model": "dtvcn", "rng_seed": 9},
        "capacity": {"kind": "degree", "cap_beta": 0.5},
        "traffic": {"warmup": 100, "window": 150, "sweep_points": 3, "seed": 5},
        "users": {"count": 12, "seed": 21},
    }
    doc.update(extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return str(path)


def read_lines(path):
    with open(path) as fh:
        return fh.read().splitlines()


def test_config_invalid_gamma_names_field(tmp_path):
    path = write_config(tmp_path, growth={"gamma": 0.4})
    with pytest.raises(ConfigError) as err:
        cli.load_config(path, {})
    assert err.value.field == "growth.gamma"


def test_config_unknown_field(tmp_path):
    path = write_config(tmp_path, users={"count": 3, "flavor": "salt"})
    with pytest.raises(ConfigError) as err:
        cli.load_config(path, {})
    assert err.value.field == "users.flavor"


def test_config_overrides_win(tmp_path):
    path = write_config(tmp_path)
    cfg = cli.load_config(path, {"nodes": 60, "model": "ba", "seed": 3})
    assert cfg.growth.steps == 55
    assert cfg.growth.model == "ba"
    assert cfg.growth.rng_seed == 3
    with pytest.raises(ConfigError):
        cli.load_config(path, {"nodes": 2})


def test_main_exit_codes(tmp_path, capsys):
    bad = write_config(tmp_path, growth={"gamma": 0.4})
    assert cli.main(["generate", "--config", bad, "--out", str(tmp_path / "o")]) == 2
    assert "growth.gamma" in capsys.readouterr().err
    code = cli.main(["metrics", "--graph", str(tmp_path / "missing.json"),
                     "--out", str(tmp_path / "o")])
    assert code == 3


def test_theory_subcommand(capsys):
    assert cli.main(["theory", "--beta", "0.6", "--gamma", "0.6",
                     "--zeta", "0.3333", "--m", "3"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("beta,gamma,zeta,m,c,k1,k2,alpha")
    assert "2.2143" in out[1]


def test_run_pipeline_outputs(tmp_path):
    path = write_config(tmp_path)
    out = tmp_path / "run1"
    assert cli.main(["run", "--config", path, "--out", str(out)]) == 0
    expected = {
        "graph.json": None,
        "trace.csv": "t,nodes,edges,f_add,f_rewire,f_delete,skipped_deletes",
        "metrics.csv": "N,model,clustering,diameter,apl,alpha,lambda_c,rc",
        "fits.csv": "alpha_fit,alpha_stderr,bc_slope,delta_fit,r_deg,r_g,k_min,k_star",
        "lambda_sweep.csv": "lambda,zeta,slope,delivered,generated",
        "lambda_c.csv": "lambda_c_theoretical,lambda_c_estimated",
        "routing.csv": "user,s,d,chi,wg_min,wg_max,xstar_min_path,xstar_max_path,converged",
        "rate_trace.csv": "iter,user,x",
        "andn.csv": "k,knn_mean",
        "node_scores.csv": "node,degree,betweenness,zeta,r_local",
        "edges.txt": None,
    }
    for name, header in expected.items():
        p = out / name
        assert p.exists(), name
        if header:
            assert read_lines(p)[0] == header, name
    metrics_row = read_lines(out / "metrics.csv")[1].split(",")
    assert len(metrics_row) == 8
    assert metrics_row[0] == "120"
    assert metrics_row[1] == "dtvcn"
    routing = read_lines(out / "routing.csv")
    assert len(routing) == 1 + 12


def test_run_determinism_byte_identical(tmp_path):
    path = write_config(tmp_path)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "--config", path, "--out", str(out1)]) == 0
    assert cli.main(["run", "--config", path, "--out", str(out2)]) == 0
    names = sorted(os.listdir(out1))
    assert names == sorted(os.listdir(out2))
    for name in names:
        b1 = (out1 / name).read_bytes()
        b2 = (out2 / name).read_bytes()
        assert b1 == b2, f"{name} differs between runs"


def test_generate_then_stage_subcommands(tmp_path):
    path = write_config(tmp_path)
    gen = tmp_path / "gen"
    assert cli.main(["generate", "--config", path, "--out", str(gen)]) == 0
    graph_path = str(gen / "graph.json")
    mout = tmp_path / "m"
    assert cli.main(["metrics", "--config", path, "--graph", graph_path,
                     "--out", str(mout)]) == 0
    assert (mout / "metrics.csv").exists()
    tout = tmp_path / "t"
    assert cli.main(["traffic", "--config", path, "--graph", graph_path,
                     "--out", str(tout)]) == 0
    assert (tout / "lambda_sweep.csv").exists()
    rout = tmp_path / "r"
    assert cli.main(["route", "--config", path, "--graph", graph_path,
                     "--out", str(rout)]) == 0
    assert (rout / "routing.csv").exists()


def test_compare_models(tmp_path):
    path = write_config(tmp_path)
    cfg = cli.load_config(path, {})
    rows = cli.compare_models(cfg, ["ba", "tvcn", "dtvcn"], [80, 120])
    assert len(rows) == 6
    assert [r[0] for r in rows] == [80, 80, 80, 120, 120, 120]
    with pytest.raises(TooFewModelsError):
        cli.compare_models(cfg, ["ba"], [80])


def test_compare_subcommand_writes_csv(tmp_path):
    path = write_config(tmp_path)
    out = tmp_path / "cmp"
    assert cli.main(["compare", "--config", path, "--models", "ba,tvcn",
                     "--n-list", "90", "--out", str(out)]) == 0
    lines = read_lines(out / "compare.csv")
    assert lines[0] == "N,model,clustering,diameter,apl,alpha,lambda_c,rc"
    assert len(lines) == 3


def test_user_pair_sampling_distinct_connected(tmp_path):
    from dtvcn import generator, graph
    log = generator.grow(generator.GrowthParams(n0=5, steps=45, model="dtvcn",
                                                rng_seed=2))
    snap = graph.replay(log)
    pairs = cli.sample_user_pairs(snap, 30, seed=7)
    assert len(pairs) == 30
    seen = {(s, d) for s, d, _ in pairs}
    assert len(seen) == 30
    comps = graph.connected_components(snap)
    label = {}
    for ci, comp in enumerate(comps):
        for v in comp:
            label[v] = ci
    for s, d, a in pairs:
        assert s != d
        assert label[s] == label[d]
        assert 1.0 <= a <= 10.0
