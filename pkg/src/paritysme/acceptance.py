"""Acceptance checks shared by ``paritysme selfcheck`` and the test suite.

Statistical checks assume ``n = 1000`` trajectories. With fewer, their
tolerances widen by ``sqrt(1000 / n)`` so a small run reports a looser pass
band instead of a spurious failure.
"""

from __future__ import annotations

import filecmp
import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import analysis as an
from . import pointer_fields as pf
from . import qubit_algebra as qa
from . import scenarios as sc
from . import sme

REFERENCE_N = 1000


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:2d} [{mark}] {self.title}: {self.detail} ({self.seconds:.1f} s)"


@dataclass
class Context:
    n: int = REFERENCE_N
    seed: int = 0
    workers: int | None = None
    _cache: dict = field(default_factory=dict)

    @property
    def widen(self) -> float:
        return math.sqrt(REFERENCE_N / self.n)

    def sub_seed(self, tag: int) -> int:
        return sme.trajectory_seed(self.seed, 2**40 + tag)

    def ensemble(self, key, build: Callable):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]


def _dt(params: pf.SystemParams) -> float:
    return 1e-3 / abs(params.chi)


def _ensemble(ctx: Context, params, eps, tau, n, tag, initial=None, pulse=None):
    initial = qa.psi_pre() if initial is None else initial
    table = pf.integrate_pointer_fields(params, pulse or pf.DrivePulse(eps), tau, _dt(params))
    cfg = sme.SmeConfig(dt=table.dt, t_end=tau)
    ens = sme.run_ensemble(n, ctx.sub_seed(tag), initial, table, params, cfg, workers=ctx.workers)
    return table, ens, pf.sign_calibration(table, params.phi_lo)


def _fid(ens, sign, s_th=0.0) -> an.FidelityResult:
    return an.conditional_fidelity(ens.final_states, ens.s, s_th, sign)


def _fmt(x) -> str:
    return "undefined" if x is None else f"{x:.4f}"


# ---------------------------------------------------------------------------


def check_steady_state(ctx: Context) -> CriterionResult:
    """Pointer ODE at constant drive against the per-label 2x2 linear solve."""
    rng = np.random.default_rng(ctx.sub_seed(1))
    worst = 0.0
    used = drawn = 0
    while used < 20:
        drawn += 1
        if drawn > 10_000:
            raise RuntimeError("could not draw parameter sets that settle within the window")
        ka, kb = rng.uniform(0.5, 5.0, 2)
        params = pf.SystemParams(
            chi=1.0, kappa_a=ka, kappa_b=kb,
            delta_a=rng.uniform(0.5, 5.0), delta_b=-rng.uniform(0.5, 5.0),
            chi_a=tuple(rng.uniform(0.3, 1.5, 3)), chi_b=tuple(rng.uniform(0.3, 1.5, 3)),
        )
        t_end = 50.0 / min(ka, kb)
        # skip draws whose slowest normal mode has not died out by t_end
        slowest = min(-np.linalg.eigvals(m).real.max() for m in pf.mode_matrices(params))
        if slowest * t_end < 22:
            continue
        used += 1
        eps = rng.uniform(0.1, 2.0)
        pulse = pf.DrivePulse(eps, shape="constant")
        dt = min(_dt(params), pf.max_step(params))
        n_steps = math.ceil(t_end / dt)
        table = pf.integrate_pointer_fields(params, pulse, n_steps * dt, dt)
        a_ss, b_ss = pf.steady_state_fields(params, eps)
        scale = max(np.abs(a_ss).max(), np.abs(b_ss).max())
        err = max(np.abs(table.alpha[:, -1] - a_ss).max(), np.abs(table.beta[:, -1] - b_ss).max()) / scale
        worst = max(worst, float(err))
    ok = worst <= 1e-8
    return CriterionResult(1, "steady-state oracle", ok, f"max relative deviation {worst:.2e} (limit 1e-8, 20 sets)",
                           {"max_rel_error": worst})


def check_locus(ctx: Context) -> CriterionResult:
    worst_in = worst_mirror = 0.0
    for kappa in (1.0, 2.0, 5.0):
        params = pf.SystemParams.symmetric(kappa=kappa, delta=math.sqrt(3.0))
        sig = pf.steady_state_sigma(params, 1.0)
        scale = np.abs(sig).max()
        for group in (qa.EVEN, qa.ODD):
            vals = sig[list(group)]
            worst_in = max(worst_in, float(np.abs(vals - vals[0]).max() / scale))
        q = pf.measured_quadrature(sig, params.phi_lo)
        worst_mirror = max(worst_mirror, float(abs(q[qa.EVEN[0]] + q[qa.ODD[0]]) / scale))
    ok = worst_in <= 1e-10 and worst_mirror <= 1e-10
    return CriterionResult(2, "parity-condition locus", ok,
                           f"within-parity spread {worst_in:.1e}, mirror defect {worst_mirror:.1e} (limit 1e-10)",
                           {"within_parity": worst_in, "mirror": worst_mirror})


def check_lindblad_consistency(ctx: Context) -> CriterionResult:
    n = 2 * ctx.n
    params = pf.SystemParams.reference()
    tau = 10.0
    table, ens, _ = _ensemble(ctx, params, 2.0 / math.sqrt(tau), tau, n, 3)
    _, states = sme.lindblad_evolve(qa.psi_pre(), table, params, tau)
    dist = qa.trace_distance(ens.mean_state(), states[-1])
    limit = 5.0 / math.sqrt(n)
    return CriterionResult(3, "ensemble-Lindblad consistency", dist <= limit,
                           f"trace distance {dist:.4f} (limit {limit:.4f}, N={n})", {"trace_distance": dist})


def _transients(ctx: Context, tau: float):
    params = pf.SystemParams.reference()
    return ctx.ensemble(("transients", tau),
                        lambda: _ensemble(ctx, params, 2.0 / math.sqrt(tau), tau, ctx.n, 40 + int(tau)))


def check_transients(ctx: Context) -> CriterionResult:
    f10 = _fid(*_transients(ctx, 10.0)[1:])
    f100 = _fid(*_transients(ctx, 100.0)[1:])
    floor = 0.98 - 0.02 * (ctx.widen - 1)
    margin = 0.01 / ctx.widen
    pairs = [(f100.F_plus, f10.F_plus), (f100.F_minus, f10.F_minus)]
    ok = all(a is not None and b is not None and a >= floor and a > b + margin for a, b in pairs)
    return CriterionResult(
        4, "transient-limit fidelity", ok,
        f"F(100)={_fmt(f100.F_plus)}/{_fmt(f100.F_minus)}, F(10)={_fmt(f10.F_plus)}/{_fmt(f10.F_minus)} "
        f"(need >= {floor:.3f} and a gap > {margin:.3f})",
        {"F100": [f100.F_plus, f100.F_minus], "F10": [f10.F_plus, f10.F_minus]},
    )


def check_efficiency(ctx: Context) -> CriterionResult:
    fids = {}
    for eta in (1.0, 0.5):
        params = pf.SystemParams.reference(eta=eta)
        tau = 20.0 / eta
        table, ens, sign = ctx.ensemble(("efficiency", eta),
                                        lambda: _ensemble(ctx, params, 2 * math.sqrt(1 / 20), tau, ctx.n, 50 + int(10 * eta)))
        fids[eta] = _fid(ens, sign)
    tol = 0.02 * ctx.widen
    gaps = [abs(fids[1.0].F_plus - fids[0.5].F_plus), abs(fids[1.0].F_minus - fids[0.5].F_minus)]
    ok = max(gaps) <= tol
    return CriterionResult(
        5, "efficiency robustness", ok,
        f"F(eta=1)={_fmt(fids[1.0].F_plus)}/{_fmt(fids[1.0].F_minus)}, "
        f"F(eta=0.5)={_fmt(fids[0.5].F_plus)}/{_fmt(fids[0.5].F_minus)}, max gap {max(gaps):.4f} (limit {tol:.3f})",
        {"gaps": gaps},
    )


def _decoherence_run(ctx: Context):
    params = pf.SystemParams.reference(gamma_p=1 / 400, gamma_phi=1 / 300)
    tau = 10.0
    return ctx.ensemble("decoherence", lambda: _ensemble(ctx, params, 1 / math.sqrt(tau), tau, ctx.n, 60))


def check_decoherence(ctx: Context) -> CriterionResult:
    _, ens, sign = _decoherence_run(ctx)
    tol = 0.03 * ctx.widen
    f0 = _fid(ens, sign, 0.0)
    low_ok = all(f is not None and abs(f - 0.90) <= tol for f in (f0.F_plus, f0.F_minus))
    hits = []
    for s_th in np.arange(0.0, 15.0001, 0.05):
        f = _fid(ens, sign, float(s_th))
        if 0.35 <= f.accepted_fraction <= 0.45 and f.F_plus is not None and f.F_minus is not None:
            hits.append((float(s_th), f))
    good = [h for h in hits if abs(h[1].F_plus - 0.95) <= tol and abs(h[1].F_minus - 0.95) <= tol]
    ok = low_ok and bool(good)
    shown = good[0] if good else (hits[len(hits) // 2] if hits else None)
    post = (f"s_th={shown[0]:.2f}: F={_fmt(shown[1].F_plus)}/{_fmt(shown[1].F_minus)} at accepted "
            f"{shown[1].accepted_fraction:.2f}") if shown else "no threshold gives accepted fraction in [0.35, 0.45]"
    return CriterionResult(
        6, "decoherence trade-off", ok,
        f"s_th=0: F={_fmt(f0.F_plus)}/{_fmt(f0.F_minus)}; {post} (targets 0.90 and 0.95 +/- {tol:.3f})",
        {"F0": [f0.F_plus, f0.F_minus], "post_selected": None if not shown else
         [shown[0], shown[1].F_plus, shown[1].F_minus, shown[1].accepted_fraction]},
    )


def _parity_split(ctx: Context, params, eps, tau, tag):
    half = ctx.n // 2
    out = []
    for k, psi in enumerate((qa.psi_plus(), qa.psi_minus())):
        table, ens, sign = _ensemble(ctx, params, eps, tau, half, tag + k, initial=psi)
        out.append(ens.s)
    weights = an.parity_weights(qa.psi_pre())
    emp = sign * an.empirical_snr(out[0], out[1])
    pred = an.predicted_snr(table, weights, tau, params.eta, params.phi_lo)
    return emp, pred


def check_snr_chain(ctx: Context) -> CriterionResult:
    ref = pf.SystemParams.reference()
    emp, pred = _parity_split(ctx, ref, 0.2, 100.0, 70)
    tol_pred = 0.10 * ctx.widen
    ok_pred = abs(emp - pred) <= tol_pred * pred
    target = 4 * math.sqrt(2)
    tol_matched = 0.15 * ctx.widen
    matched = {}
    for eta in (1.0, 0.5):
        matched[eta], _ = _parity_split(ctx, ref.replace(eta=eta), 2 * math.sqrt(1 / 20), 20.0 / eta, 80 + int(10 * eta))
    ok_matched = all(abs(v - target) <= tol_matched * target for v in matched.values())
    return CriterionResult(
        7, "SNR chain", ok_pred and ok_matched,
        f"tau=100: empirical {emp:.3f} vs predicted {pred:.3f} (limit {100 * tol_pred:.0f}%); "
        f"matched-SNR runs {matched[1.0]:.3f}, {matched[0.5]:.3f} vs {target:.3f} (limit {100 * tol_matched:.0f}%)",
        {"tau100": [emp, pred], "matched": [matched[1.0], matched[0.5]]},
    )


def check_risetime(ctx: Context) -> CriterionResult:
    params = pf.SystemParams.reference()
    sigmas = np.geomspace(0.5, 50.0, 9)
    leak = pf.intra_parity_leakage(params, sigmas)
    var = float((leak.max() - leak.min()) / leak.min())
    return CriterionResult(8, "rise-time insensitivity", var <= 0.05,
                           f"leakage {leak.min():.4f}..{leak.max():.4f}, variation {100 * var:.2f}% (limit 5%)",
                           {"leakage": leak.tolist(), "variation": var})


def check_zeno(ctx: Context) -> CriterionResult:
    table, ens, sign = _decoherence_run(ctx)
    params = pf.SystemParams.reference(gamma_p=1 / 400, gamma_phi=1 / 300)
    (_, fp_off, fm_off), = sc.benchmark_fidelity(params, [10.0])
    on = _fid(ens, sign, sc.STRICT_THRESHOLD)
    tol = 0.01 * ctx.widen
    ok = (on.F_plus is not None and on.F_minus is not None
          and on.F_plus >= fp_off - tol and on.F_minus >= fm_off - tol)
    return CriterionResult(
        9, "Zeno protection", ok,
        f"measured F={_fmt(on.F_plus)}/{_fmt(on.F_minus)} at s_th={sc.STRICT_THRESHOLD:g} "
        f"(accepted {on.accepted_fraction:.2f}) vs unmeasured {fp_off:.4f}/{fm_off:.4f} (slack {tol:.3f})",
        {"on": [on.F_plus, on.F_minus], "off": [fp_off, fm_off], "accepted": on.accepted_fraction},
    )


Check = tuple[bool, str]


def invariant_checks(ctx: Context, n: int = 100) -> dict[str, Check]:
    """Trace, Hermiticity and positivity over ensembles at several drives and rates."""
    drift = herm = 0.0
    min_eig = 1.0
    settings = [
        (0.2, {}),
        (2 * math.sqrt(1 / 20), {}),
        (1 / math.sqrt(10), {"gamma_p": 1 / 400, "gamma_phi": 1 / 300}),
        (1.0, {"eta": 0.5, "gamma_p": 0.01}),
    ]
    for k, (eps, extra) in enumerate(settings):
        params = pf.SystemParams.reference(**extra)
        table = pf.integrate_pointer_fields(params, pf.DrivePulse(eps), 10.0, _dt(params))
        cfg = sme.SmeConfig(dt=table.dt, t_end=10.0)
        ens = sme.run_ensemble(n, ctx.sub_seed(100 + k), qa.psi_pre(), table, params, cfg, workers=ctx.workers)
        for r in ens.records:
            drift = max(drift, r.max_trace_drift)
            min_eig = min(min_eig, r.min_eigenvalue)
            herm = max(herm, float(np.abs(r.final_state - r.final_state.conj().T).max()))
    return {
        "trace": (drift <= 1e-10, f"max per-step trace drift {drift:.1e}"),
        "hermiticity": (herm <= 1e-12, f"max anti-Hermitian part {herm:.1e}"),
        "positivity": (min_eig >= sme.POSITIVITY_WARN, f"min eigenvalue {min_eig:.1e}"),
    }


def qnd_check(ctx: Context) -> Check:
    params = pf.SystemParams.reference()
    table = pf.integrate_pointer_fields(params, pf.DrivePulse(0.2), 100.0, _dt(params))
    cfg = sme.SmeConfig(dt=table.dt, t_end=100.0, seed=ctx.sub_seed(110))
    leak = 0.0
    for mu in range(qa.DIM):
        rec = sme.run_trajectory(qa.basis_state(mu), table, params, cfg)
        leak = max(leak, 1.0 - float(rec.final_state[mu, mu].real))
    return leak <= 1e-8, f"max basis-state leakage {leak:.1e}"


_SWAP = {an.Outcome.EVEN: an.Outcome.ODD, an.Outcome.ODD: an.Outcome.EVEN,
         an.Outcome.INCONCLUSIVE: an.Outcome.INCONCLUSIVE}


def classify_check() -> Check:
    ok = all(
        _SWAP[an.classify(float(s), s_th, sign).label] == an.classify(float(-s), s_th, sign).label
        for s in np.linspace(-10, 10, 81)
        for s_th in (0.0, 0.5, 3.0)
        for sign in (1, -1)
    )
    return ok, "classify(-s) swaps Even and Odd"


def determinism_check(ctx: Context) -> Check:
    """Same config and seed give byte-identical output; worker count does not matter."""
    with tempfile.TemporaryDirectory() as tmp:
        a, b = Path(tmp) / "a", Path(tmp) / "b"
        cfg = sc.ScenarioConfig(scenario="transients", n_trajectories=20, taus=[2.0], seed=ctx.seed)
        sc.run_scenario(cfg, a, workers=1)
        sc.run_scenario(cfg, b, workers=2)
        files = sorted(p.name for p in a.iterdir())
        _, mismatch, errors = filecmp.cmpfiles(a, b, files, shallow=False)
        same = sorted(p.name for p in b.iterdir()) == files and not mismatch and not errors
    return same, (f"{len(files)} output files byte-identical across runs and worker counts"
                  if same else f"differs: {mismatch + errors}")


def property_checks(ctx: Context) -> dict[str, Check]:
    out = invariant_checks(ctx)
    out["qnd"] = qnd_check(ctx)
    out["classify"] = classify_check()
    out["determinism"] = determinism_check(ctx)
    return out


def check_properties(ctx: Context) -> CriterionResult:
    props = property_checks(ctx)
    failed = [k for k, (ok, _) in props.items() if not ok]
    detail = "; ".join(f"{k}: {d}" for k, (_, d) in props.items())
    return CriterionResult(10, "property suite", not failed, detail, {k: ok for k, (ok, _) in props.items()})


CHECKS: dict[int, Callable[[Context], CriterionResult]] = {
    1: check_steady_state,
    2: check_locus,
    3: check_lindblad_consistency,
    4: check_transients,
    5: check_efficiency,
    6: check_decoherence,
    7: check_snr_chain,
    8: check_risetime,
    9: check_zeno,
    10: check_properties,
}


def run_criterion(number: int, ctx: Context) -> CriterionResult:
    start = time.perf_counter()
    res = CHECKS[number](ctx)
    res.seconds = time.perf_counter() - start
    return res


def selfcheck(n: int = REFERENCE_N, seed: int = 0, workers: int | None = None,
              only: list[int] | None = None, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    ctx = Context(n=n, seed=seed, workers=workers)
    results = []
    for number in only or sorted(CHECKS):
        res = run_criterion(number, ctx)
        if echo:
            echo(res.line())
        results.append(res)
    return results
