"""Reproducible scenario runners.

Every runner is a pure function of its :class:`ScenarioConfig`. It writes one
directory holding ``config.json``, ``records.csv``, ``histogram.csv`` and
``summary.json``; some scenarios add tables of their own alongside. Times are
in units of ``1/chi`` and rates in units of ``chi``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import analysis as an
from . import pointer_fields as pf
from . import qubit_algebra as qa
from . import sme

SCENARIOS = ("steady-scan", "pointer-traj", "efficiency", "transients", "risetime", "optimal")
FAST_TRAJECTORIES = 100
HIST_HEADER = ["run", "bin_left", "bin_right", "count_even_true", "count_odd_true"]
RECORD_HEADER = ["run", "index", "seed", "s", "outcome", "true_parity", "overlap_plus", "overlap_minus"]


class ConfigError(ValueError):
    """Invalid scenario configuration (CLI exit code 2)."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ParamsConfig(_Strict):
    """Symmetric two-mode setup; the LO phase is calibrated unless given."""

    chi: float = 1.0
    kappa: float = Field(2.0, gt=0)
    delta: float = math.sqrt(3.0)
    eta: float = Field(1.0, ge=0, le=1)
    gamma_p: float = Field(0.0, ge=0)
    gamma_phi: float = Field(0.0, ge=0)
    gamma_1: float = Field(0.0, ge=0)
    phi_lo: float | None = None

    def build(self) -> pf.SystemParams:
        extra = {} if self.phi_lo is None else {"phi_lo": self.phi_lo}
        return pf.SystemParams.symmetric(
            kappa=self.kappa,
            delta=self.delta,
            chi=self.chi,
            eta=self.eta,
            gamma_p=self.gamma_p,
            gamma_phi=(self.gamma_phi,) * 3,
            gamma_1=(self.gamma_1,) * 3,
            **extra,
        )


class PulseConfig(_Strict):
    eps_ss: float | None = Field(None, ge=0)
    shape: Literal["arctan", "constant"] = "arctan"
    sigma: float = Field(10.0, gt=0)
    t_on: float | None = None

    def build(self, eps_ss: float) -> pf.DrivePulse:
        return pf.DrivePulse(eps_ss=eps_ss, shape=self.shape, sigma=self.sigma, t_on=self.t_on)


class SmeSettings(_Strict):
    dt: float | None = Field(None, gt=0)
    scheme: Literal["milstein", "euler"] = "milstein"


class ScanConfig(_Strict):
    kappa_range: tuple[float, float] = (0.5, 5.0)
    delta_range: tuple[float, float] = (0.1, 5.0)
    n_kappa: int = Field(19, ge=0)
    n_delta: int = Field(50, ge=0)


class ScenarioConfig(_Strict):
    scenario: Literal["steady-scan", "pointer-traj", "efficiency", "transients", "risetime", "optimal"]
    params: ParamsConfig = ParamsConfig()
    pulse: PulseConfig = PulseConfig()
    sme: SmeSettings = SmeSettings()
    n_trajectories: int = Field(1000, ge=2)
    seed: int = Field(0, ge=0, lt=2**64)
    s_th: float = Field(0.0, ge=0)
    s_th_grid: list[float] | None = None
    n_bootstrap: int = Field(200, ge=2)
    initial: str | list[tuple[float, float]] = "psi_pre"
    tau: float | None = Field(None, gt=0)
    taus: list[float] | None = None
    etas: list[float] = [1.0, 0.5]
    sigmas: list[float] | None = None
    decoherence: bool = False
    t_end: float | None = Field(None, gt=0)
    scan: ScanConfig = ScanConfig()
    chi_hz: float | None = Field(None, gt=0)

    @field_validator("initial")
    @classmethod
    def _check_initial(cls, v):
        resolve_initial(v)
        return v

    @field_validator("s_th_grid")
    @classmethod
    def _check_grid(cls, v):
        if v is not None and any(x < 0 for x in v):
            raise ValueError("thresholds must be non-negative")
        return v

    @field_validator("etas")
    @classmethod
    def _check_etas(cls, v):
        if not v or any(not 0 < x <= 1 for x in v):
            raise ValueError("efficiencies must lie in (0, 1]")
        return v

    @model_validator(mode="after")
    def _check_times(self):
        for name in ("taus", "sigmas"):
            vals = getattr(self, name)
            if vals is not None and any(x <= 0 for x in vals):
                raise ValueError(f"{name} must be positive")
        return self


def resolve_initial(spec) -> np.ndarray:
    """Named state, basis label or explicit ``[re, im]`` amplitude pairs."""
    if isinstance(spec, str):
        try:
            return qa.named_state(spec)
        except ValueError as exc:
            raise ValueError(f"unknown initial state {spec!r}") from exc
    amps = np.array([complex(re, im) for re, im in spec])
    return qa.normalize_state(amps)


def load_config(path: str | Path | None, scenario: str) -> ScenarioConfig:
    """Read a JSON config; the CLI subcommand supplies or must match ``scenario``."""
    data: dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
    if data.setdefault("scenario", scenario) != scenario:
        raise ConfigError(f"config is for scenario {data['scenario']!r}, not {scenario!r}")
    try:
        return ScenarioConfig.model_validate(data)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# output helpers


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=True) + "\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)) and not isinstance(obj, bool):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


@dataclass
class EnsembleRun:
    name: str
    tau: float
    eps_ss: float
    params: pf.SystemParams
    table: pf.PointerTable
    ensemble: sme.Ensemble
    sign_cal: int
    report: dict

    @property
    def s(self) -> np.ndarray:
        return self.ensemble.s

    @property
    def states(self) -> np.ndarray:
        return self.ensemble.final_states


def default_dt(params: pf.SystemParams) -> float:
    return 1e-3 / abs(params.chi)


def run_ensemble_case(
    name: str,
    cfg: ScenarioConfig,
    params: pf.SystemParams,
    eps_ss: float,
    tau: float,
    n: int,
    seed: int,
    workers: int | None = None,
    initial=None,
) -> EnsembleRun:
    """Pointer table, seeded ensemble and the standard report for one setting."""
    dt = cfg.sme.dt or default_dt(params)
    table = pf.integrate_pointer_fields(params, cfg.pulse.build(eps_ss), tau, dt)
    init = resolve_initial(cfg.initial) if initial is None else initial
    config = sme.SmeConfig(dt=table.dt, t_end=tau, scheme=cfg.sme.scheme)
    ens = sme.run_ensemble(n, seed, init, table, params, config, workers=workers)
    sign = pf.sign_calibration(table, params.phi_lo)
    weights = an.parity_weights(qa.psi_pre())
    rep = an.report(
        s=ens.s,
        final_states=ens.final_states,
        s_th=cfg.s_th,
        sign_cal=sign,
        snr_predicted=an.predicted_snr(table, weights, tau, params.eta, params.phi_lo),
        snr_ideal=an.ideal_snr(params, eps_ss, tau),
    )
    return EnsembleRun(name, tau, eps_ss, params, table, ens, sign, rep)


def _record_rows(run: EnsembleRun, s_th: float):
    labels = an.classify_array(run.s, s_th, run.sign_cal)
    names = {1: an.Outcome.EVEN.value, -1: an.Outcome.ODD.value, 0: an.Outcome.INCONCLUSIVE.value}
    parity = an.true_parity(run.states)
    o_p = an.overlaps(run.states, qa.psi_plus())
    o_m = an.overlaps(run.states, qa.psi_minus())
    for k, rec in enumerate(run.ensemble.records):
        yield (run.name, rec.index, rec.seed, rec.s, names[int(labels[k])], int(parity[k]), o_p[k], o_m[k])


def _hist_rows(run: EnsembleRun):
    for row in an.histogram_rows(run.s, an.true_parity(run.states)):
        yield (run.name,) + row


def _write_ensemble_outputs(out: Path, runs: list[EnsembleRun], s_th: float) -> None:
    _write_csv(out / "records.csv", RECORD_HEADER, (r for run in runs for r in _record_rows(run, s_th)))
    _write_csv(out / "histogram.csv", HIST_HEADER, (r for run in runs for r in _hist_rows(run)))


def _sub_seed(base: int, i: int) -> int:
    return sme.trajectory_seed(base, 2**32 + i)


def _n(cfg: ScenarioConfig, fast: bool) -> int:
    return min(cfg.n_trajectories, FAST_TRAJECTORIES) if fast else cfg.n_trajectories


def _mean_f(rep: dict) -> float | None:
    vals = [rep[k] for k in ("F_plus", "F_minus") if rep[k] is not None]
    return float(np.mean(vals)) if vals else None


# ---------------------------------------------------------------------------
# scenarios


def scenario_steady_scan(cfg: ScenarioConfig, out: Path, **_) -> dict:
    sc = cfg.scan
    report = pf.parity_condition_scan(
        kappa_range=sc.kappa_range,
        delta_range=sc.delta_range,
        n_kappa=sc.n_kappa,
        n_delta=sc.n_delta,
        chi=cfg.params.chi,
        phi=0.0 if cfg.params.phi_lo is None else cfg.params.phi_lo,
    )
    report.write_surface_csv(out / "records.csv")
    _write_csv(out / "histogram.csv", HIST_HEADER, [])
    _write_csv(
        out / "locus.csv",
        ["kappa", "delta", "gap", "orth_gap", "full"],
        [(p["kappa"], p["delta"], p["gap"], p["orth_gap"], int(p in report.full_locus)) for p in report.locus],
    )
    chi = cfg.params.chi
    has_ref = any(
        math.isclose(p["kappa"], 2 * chi, rel_tol=1e-9) and abs(p["delta"] - math.sqrt(3) * chi) < 1e-6
        for p in report.full_locus
    )
    return {**report.summary(), "n_locus": len(report.locus), "reference_in_locus": has_ref}


def scenario_pointer_traj(cfg: ScenarioConfig, out: Path, **_) -> dict:
    params = cfg.params.build()
    eps = cfg.pulse.eps_ss if cfg.pulse.eps_ss is not None else math.sqrt(abs(params.chi))
    t_end = cfg.t_end or 20.0 / abs(params.chi)
    dt = cfg.sme.dt or default_dt(params)
    table = pf.integrate_pointer_fields(params, cfg.pulse.build(eps), t_end, dt)
    stride = max(1, int(round(0.01 / table.dt)))
    table.write_csv(out / "records.csv", stride=stride)
    _write_csv(out / "histogram.csv", HIST_HEADER, [])
    ss = pf.steady_state_sigma(params, eps)
    end = table.sigma_out[:, -1]
    scale = max(float(np.max(np.abs(ss))), 1e-300)
    q_end = pf.measured_quadrature(end, params.phi_lo)
    spread = max(float(np.ptp(q_end[list(g)])) for g in (qa.EVEN, qa.ODD))
    return {
        "eps_ss": eps,
        "t_end": t_end,
        "phi_lo": params.phi_lo,
        "endpoint_rel_error": float(np.max(np.abs(end - ss)) / scale) if eps > 0 else float(np.max(np.abs(end))),
        "within_parity_spread": spread,
        "endpoints": {lab: [float(end[i].real), float(end[i].imag)] for i, lab in enumerate(qa.LABELS)},
    }


def scenario_efficiency(cfg: ScenarioConfig, out: Path, workers=None, fast=False) -> dict:
    base = cfg.params.build()
    chi = abs(base.chi)
    n = _n(cfg, fast)
    runs = []
    for i, eta in enumerate(cfg.etas):
        params = base.replace(eta=eta)
        tau = cfg.tau or 20.0 / (eta * chi)
        eps = cfg.pulse.eps_ss if cfg.pulse.eps_ss is not None else 2 * math.sqrt(chi / 20.0)
        runs.append(run_ensemble_case(f"eta={eta:g}", cfg, params, eps, tau, n, _sub_seed(cfg.seed, i), workers))
    _write_ensemble_outputs(out, runs, cfg.s_th)
    per_run = {}
    for r in runs:
        model = an.gaussian_model(r.table, r.tau, r.params.eta, r.params.phi_lo)
        per_run[r.name] = {**r.report, "tau": r.tau, "eps_ss": r.eps_ss, "eta": r.params.eta,
                           "model_mean_even": model.mean_even, "model_mean_odd": model.mean_odd,
                           "model_std": model.std, "sign_cal": r.sign_cal}
    fs = [_mean_f(r.report) for r in runs]
    gap = max(fs) - min(fs) if None not in fs else None
    return {"runs": per_run, "n_trajectories": n, "fidelity_gap": gap}


def scenario_transients(cfg: ScenarioConfig, out: Path, workers=None, fast=False) -> dict:
    params = cfg.params.build()
    chi = abs(params.chi)
    n = _n(cfg, fast)
    taus = cfg.taus or [10.0 / chi, 100.0 / chi]
    runs = []
    for i, tau in enumerate(taus):
        eps = cfg.pulse.eps_ss if cfg.pulse.eps_ss is not None else 2.0 / math.sqrt(tau)
        runs.append(run_ensemble_case(f"tau={tau:g}", cfg, params, eps, tau, n, _sub_seed(cfg.seed, i), workers))
    _write_ensemble_outputs(out, runs, cfg.s_th)
    per_run = {r.name: {**r.report, "tau": r.tau, "eps_ss": r.eps_ss, "sign_cal": r.sign_cal} for r in runs}
    return {"runs": per_run, "n_trajectories": n}


def scenario_risetime(cfg: ScenarioConfig, out: Path, **_) -> dict:
    params = cfg.params.build()
    chi = abs(params.chi)
    sigmas = cfg.sigmas or list(np.geomspace(0.5 * chi, 50 * chi, 9))
    eps = cfg.pulse.eps_ss if cfg.pulse.eps_ss is not None else 1.0
    leak = pf.intra_parity_leakage(params, sigmas, eps_ss=eps, dt=cfg.sme.dt)
    _write_csv(out / "records.csv", ["sigma", "leakage"], zip(sigmas, leak))
    _write_csv(out / "histogram.csv", HIST_HEADER, [])
    return {
        "sigmas": [float(s) for s in sigmas],
        "leakage": [float(x) for x in leak],
        "relative_variation": float((leak.max() - leak.min()) / leak.min()),
        "eps_ss": eps,
    }


def benchmark_fidelity(params: pf.SystemParams, taus, dt: float | None = None) -> list[tuple[float, float, float]]:
    """Fidelity of undriven evolution from the parity targets, ``(tau, F_plus, F_minus)``."""
    taus = sorted(float(t) for t in taus)
    step = dt or default_dt(params)
    table = pf.integrate_pointer_fields(params, pf.DrivePulse(0.0, shape="constant"), taus[-1], step)
    out = []
    for tau in taus:
        fp = qa.overlap_fidelity(qa.psi_plus(), sme.lindblad_evolve(qa.psi_plus(), table, params, tau)[1][-1])
        fm = qa.overlap_fidelity(qa.psi_minus(), sme.lindblad_evolve(qa.psi_minus(), table, params, tau)[1][-1])
        out.append((tau, fp, fm))
    return out


DECOHERENCE = {"gamma_p": 1.0 / 400.0, "gamma_phi": 1.0 / 300.0}
STRICT_THRESHOLD = 5.0


def scenario_optimal(cfg: ScenarioConfig, out: Path, workers=None, fast=False) -> dict:
    """Fixed SNR ``2 sqrt(2)``: ``eps = 1/sqrt(tau)``; optional decoherence and no-drive benchmark."""
    pc = cfg.params
    if cfg.decoherence:
        pc = pc.model_copy(update={k: v * abs(pc.chi) for k, v in DECOHERENCE.items()})
    params = pc.build()
    chi = abs(params.chi)
    n = _n(cfg, fast)
    taus = cfg.taus or [t / chi for t in (5.0, 10.0, 20.0, 40.0)]
    grid = cfg.s_th_grid or [round(0.25 * k, 10) for k in range(41)]
    runs = []
    for i, tau in enumerate(taus):
        eps = cfg.pulse.eps_ss if cfg.pulse.eps_ss is not None else 1.0 / math.sqrt(tau)
        runs.append(run_ensemble_case(f"tau={tau:g}", cfg, params, eps, tau, n, _sub_seed(cfg.seed, i), workers))
    _write_ensemble_outputs(out, runs, cfg.s_th)
    bench = benchmark_fidelity(params, taus, cfg.sme.dt) if cfg.decoherence else []
    bench_map = {b[0]: b for b in bench}
    curve = []
    for r in runs:
        strict = an.conditional_fidelity(r.states, r.s, STRICT_THRESHOLD, r.sign_cal)
        b = bench_map.get(float(r.tau))
        curve.append((r.tau, r.report["F_plus"], r.report["F_minus"], strict.F_plus, strict.F_minus,
                      strict.accepted_fraction, None if b is None else b[1], None if b is None else b[2]))
    _write_csv(out / "fidelity_vs_tau.csv",
               ["tau", "F_plus", "F_minus", "F_plus_strict", "F_minus_strict", "accepted_strict",
                "F_plus_no_measurement", "F_minus_no_measurement"], curve)
    sweep_run = min(runs, key=lambda r: abs(r.tau - 10.0 / chi))
    sweep = an.threshold_sweep(sweep_run.states, sweep_run.s, grid, sweep_run.sign_cal,
                               n_boot=cfg.n_bootstrap, seed=cfg.seed)
    _write_csv(out / "threshold_sweep.csv",
               ["s_th", "F_plus", "F_minus", "F_plus_err", "F_minus_err", "accepted_fraction"],
               [(p.s_th, p.F_plus, p.F_minus, p.F_plus_err, p.F_minus_err, p.accepted_fraction) for p in sweep])
    summary = {
        "runs": {r.name: {**r.report, "tau": r.tau, "eps_ss": r.eps_ss, "sign_cal": r.sign_cal} for r in runs},
        "n_trajectories": n,
        "decoherence": cfg.decoherence,
        "strict_threshold": STRICT_THRESHOLD,
        "sweep_tau": sweep_run.tau,
        "best_sweep_fidelity": max((min(p.F_plus, p.F_minus) for p in sweep
                                    if p.F_plus is not None and p.F_minus is not None), default=None),
    }
    if cfg.chi_hz:
        summary["T1_seconds"] = 1.0 / (params.gamma_p * cfg.chi_hz) if params.gamma_p else None
    return summary


RUNNERS = {
    "steady-scan": scenario_steady_scan,
    "pointer-traj": scenario_pointer_traj,
    "efficiency": scenario_efficiency,
    "transients": scenario_transients,
    "risetime": scenario_risetime,
    "optimal": scenario_optimal,
}


def run_scenario(cfg: ScenarioConfig, out: str | Path, workers: int | None = None, fast: bool = False) -> dict:
    """Run ``cfg`` into directory ``out`` and return the summary written there."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        cfg.params.build()
    except (pf.CalibrationError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    _dump_json(out / "config.json", cfg.model_dump(mode="json"))
    summary = RUNNERS[cfg.scenario](cfg, out, workers=workers, fast=fast)
    summary = {"scenario": cfg.scenario, "seed": cfg.seed, "fast": fast, **summary}
    _dump_json(out / "summary.json", summary)
    return summary
