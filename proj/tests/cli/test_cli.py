import json
import os
import subprocess
from pathlib import Path

CLI = os.environ["COAGTREE_CLI"]
DATA = Path(os.environ["COAGTREE_DATA"])


def run(*args, env=None):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, env=env)


def test_simulate_is_reproducible(tmp_path):
    for d in ("a", "b"):
        r = run("simulate", "--kernel", "constant", "--n", 128, "--t", 5, "--seed", 7, "--out", tmp_path / d)
        assert r.returncode == 0, r.stderr
    for name in ("events.csv", "trees.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    events = (tmp_path / "a" / "events.csv").read_text().splitlines()
    trees = (tmp_path / "a" / "trees.txt").read_text().splitlines()
    assert events[0] == "event_index,time,left_serial,right_serial"
    assert len(trees) == 128 - (len(events) - 1)
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 7
    assert set(manifest["outputs"]) == {"events.csv", "trees.txt"}


def test_seed_from_environment(tmp_path):
    env = dict(os.environ, COAGTREE_SEED="7")
    assert run("simulate", "--n", 64, "--out", tmp_path / "env", env=env).returncode == 0
    assert run("simulate", "--n", 64, "--seed", 7, "--out", tmp_path / "flag").returncode == 0
    assert (tmp_path / "env" / "trees.txt").read_text() == (tmp_path / "flag" / "trees.txt").read_text()


def test_single_particle_has_no_events(tmp_path):
    assert run("simulate", "--n", 1, "--out", tmp_path).returncode == 0
    assert (tmp_path / "events.csv").read_text().splitlines() == ["event_index,time,left_serial,right_serial"]


def test_exit_codes(tmp_path):
    assert run("simulate", "--kernel", "bogus", "--out", tmp_path).returncode == 2
    assert run("simulate", "--kernel", "product", "--t", 1.0, "--out", tmp_path).returncode == 3
    assert run("simulate", "--kernel", "product", "--t", 1.0, "--allow-near-gelation", "--out", tmp_path).returncode == 0
    assert run("limit", "--functional", '{"type":"nope"}', "--out", tmp_path).returncode == 2


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('[simulate]\nn = 32\nt = 1.5\nseed = 9\n')
    assert run("--config", cfg, "simulate", "--out", tmp_path / "c").returncode == 0
    m = json.loads((tmp_path / "c" / "manifest.json").read_text())
    assert m["config"]["n"] == 32 and m["config"]["t"] == 1.5 and m["seed"] == 9
    assert run("--config", cfg, "simulate", "--n", 16, "--out", tmp_path / "d").returncode == 0
    assert json.loads((tmp_path / "d" / "manifest.json").read_text())["config"]["n"] == 16


def test_solve_and_limit(tmp_path):
    r = run("solve", "--t", 2, "--tol", 1e-10, "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert abs(summary["M0"] - 0.5) < 1e-8
    assert (tmp_path / "solution.csv").read_text().startswith("time,mass,weight\n")
    r = run("limit", "--functional", "cherry", "--t", 2, "--tol", 1e-10, "--out", tmp_path / "lim")
    assert r.returncode == 0, r.stderr
    assert abs(json.loads((tmp_path / "lim" / "limit.json").read_text())["value"] - 0.125) < 1e-8


def test_lln_small_plan(tmp_path):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({"t": 1.0, "functionals": ["leaf"], "ladder": [20, 200],
                                "replicas": [200, 40], "seed": 2}))
    r = run("lln", "--plan", plan, "--out", tmp_path / "out")
    assert r.returncode in (0, 1), r.stderr
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["functionals"][0]["name"] == "leaf"
    assert (r.returncode == 1) == (report["verdict"] == "FAIL")
    assert (DATA / "plans" / "default_lln.json").exists()


def test_gallery(tmp_path):
    assert run("simulate", "--gallery", "--out", tmp_path).returncode == 0
    for k in ("constant", "product", "inverse-sum"):
        assert (tmp_path / f"gallery_{k}.txt").read_text().strip()
