import csv
import json
import math

import pytest

from paritysme import scenarios as sc


def _cfg(name, **kw):
    return sc.ScenarioConfig(scenario=name, **kw)


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def _check_common(out):
    for name in ("config.json", "records.csv", "histogram.csv", "summary.json"):
        assert (out / name).is_file(), name
    summary = json.loads((out / "summary.json").read_text())
    config = json.loads((out / "config.json").read_text())
    assert _rows(out / "histogram.csv")[0] == sc.HIST_HEADER
    return summary, config


def test_load_config_defaults(tmp_path):
    cfg = sc.load_config(None, "transients")
    assert cfg.n_trajectories == 1000 and cfg.seed == 0
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"n_trajectories": 10, "params": {"eta": 0.5}}))
    cfg = sc.load_config(path, "efficiency")
    assert cfg.params.eta == 0.5 and cfg.scenario == "efficiency"


@pytest.mark.parametrize("payload", [
    {"bogus": 1},
    {"scenario": "optimal"},
    {"params": {"eta": 1.5}},
    {"n_trajectories": 1},
    {"seed": -1},
    {"initial": "psi_unknown"},
    {"taus": [10, -1]},
    {"s_th_grid": [0, -1]},
    [1, 2],
])
def test_load_config_rejects(tmp_path, payload):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(payload))
    with pytest.raises(sc.ConfigError):
        sc.load_config(path, "transients")


def test_unreadable_config(tmp_path):
    (tmp_path / "c.json").write_text("{not json")
    with pytest.raises(sc.ConfigError):
        sc.load_config(tmp_path / "c.json", "transients")
    with pytest.raises(sc.ConfigError):
        sc.load_config(tmp_path / "missing.json", "transients")


def test_off_locus_parameters_are_config_errors(tmp_path):
    cfg = _cfg("transients", params={"delta": 1.0})
    with pytest.raises(sc.ConfigError):
        sc.run_scenario(cfg, tmp_path)


def test_explicit_initial_state():
    amps = sc.resolve_initial([[1, 0]] + [[0, 0]] * 6 + [[0, 1]])
    assert abs(amps[7]) == pytest.approx(1 / math.sqrt(2))


def test_steady_scan(tmp_path):
    sc.run_scenario(_cfg("steady-scan", scan={"n_kappa": 10, "n_delta": 30}), tmp_path)
    summary, _ = _check_common(tmp_path)
    assert summary["reference_in_locus"]
    assert (tmp_path / "locus.csv").is_file()
    assert len(_rows(tmp_path / "records.csv")) == 1 + 10 * 30 * 8


def test_pointer_traj(tmp_path):
    sc.run_scenario(_cfg("pointer-traj"), tmp_path)
    summary, _ = _check_common(tmp_path)
    assert summary["eps_ss"] == pytest.approx(1.0)
    # arctan envelope at t=20 still lacks 1/(pi*sigma*(t - t_on)); the fields lag it slightly
    tail = 1 / (math.pi * 10 * 19)
    assert tail < summary["endpoint_rel_error"] < 1.2 * tail
    assert summary["within_parity_spread"] < 1e-3  # per-label lag behind the rising envelope
    assert summary["endpoints"]["111"][0] == pytest.approx(-1.0, abs=3e-3)


def test_transients_outputs(tmp_path):
    cfg = _cfg("transients", n_trajectories=12, taus=[2.0, 3.0], seed=9)
    summary = sc.run_scenario(cfg, tmp_path)
    on_disk, config = _check_common(tmp_path)
    assert on_disk == json.loads(json.dumps(summary))
    assert config["seed"] == 9
    rows = _rows(tmp_path / "records.csv")
    assert rows[0] == sc.RECORD_HEADER
    assert len(rows) == 1 + 24
    assert {r[4] for r in rows[1:]} <= {"Even", "Odd", "Inconclusive"}
    assert set(summary["runs"]) == {"tau=2", "tau=3"}


def test_same_seed_same_bytes(tmp_path):
    cfg = _cfg("efficiency", n_trajectories=6, tau=1.0, seed=3)
    sc.run_scenario(cfg, tmp_path / "a")
    sc.run_scenario(cfg, tmp_path / "b")
    for name in ("records.csv", "histogram.csv", "summary.json", "config.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    sc.run_scenario(cfg.model_copy(update={"seed": 4}), tmp_path / "c")
    assert (tmp_path / "a" / "records.csv").read_bytes() != (tmp_path / "c" / "records.csv").read_bytes()


def test_fast_caps_trajectories(tmp_path):
    cfg = _cfg("transients", n_trajectories=500, taus=[0.5])
    summary = sc.run_scenario(cfg, tmp_path, fast=True)
    assert summary["n_trajectories"] == sc.FAST_TRAJECTORIES
    assert summary["fast"] is True


def test_risetime(tmp_path):
    summary = sc.run_scenario(_cfg("risetime", sigmas=[1.0, 10.0], sme={"dt": 0.002}), tmp_path)
    _check_common(tmp_path)
    assert len(summary["leakage"]) == 2
    assert summary["relative_variation"] >= 0


def test_optimal_with_decoherence(tmp_path):
    cfg = _cfg("optimal", n_trajectories=10, taus=[2.0, 4.0], decoherence=True, n_bootstrap=5,
               s_th_grid=[0.0, 1.0], chi_hz=2 * math.pi * 5e6)
    summary = sc.run_scenario(cfg, tmp_path)
    _check_common(tmp_path)
    curve = _rows(tmp_path / "fidelity_vs_tau.csv")
    assert len(curve) == 3 and curve[1][6] != ""
    assert len(_rows(tmp_path / "threshold_sweep.csv")) == 3
    assert summary["T1_seconds"] == pytest.approx(400 / (2 * math.pi * 5e6))


def test_benchmark_decays(ref_params):
    params = ref_params.replace(gamma_p=1 / 400, gamma_phi=(1 / 300,) * 3)
    (t1, p1, m1), (t2, p2, m2) = sc.benchmark_fidelity(params, [5.0, 10.0], dt=0.005)
    assert 1 > p1 > p2 > 0.9
    assert m1 == pytest.approx(p1, abs=1e-3)
