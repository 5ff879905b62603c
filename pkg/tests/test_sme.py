import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from paritysme import acceptance
from paritysme import pointer_fields as pf
from paritysme import qubit_algebra as qa
from paritysme import sme


def fock_reduced_state(params, pulse, rho_q, t_end, nmax=6):
    """Qubit state from the full two-mode master equation in a truncated Fock space.

    Qubit operators stay diagonal, so the joint state splits into cavity
    blocks rho_mn that evolve independently; the reduced state is their trace.
    """
    d = nmax + 1
    ann = np.diag(np.sqrt(np.arange(1, d)), 1)
    a = np.kron(ann, np.eye(d))
    b = np.kron(np.eye(d), ann)
    ka, kb = params.kappa_a, params.kappa_b
    out_op = math.sqrt(ka) * a + math.sqrt(kb) * b
    ldl = out_op.conj().T @ out_op
    drive = math.sqrt(ka) * (a + a.conj().T) + math.sqrt(kb) * (b + b.conj().T)
    sa, sb = params.label_shifts
    h0 = np.array([(params.delta_a + sa[m]) * (a.conj().T @ a) + (params.delta_b + sb[m]) * (b.conj().T @ b)
                   for m in range(8)])
    dim = d * d
    vac = np.zeros((dim, dim))
    vac[0, 0] = 1.0
    r0 = np.einsum("mn,ij->mnij", rho_q, vac).astype(complex)

    def rhs(t, y):
        r = y.reshape(8, 8, dim, dim)
        h = h0 + float(pulse.amplitude(t)) * drive
        dr = -1j * (h[:, None] @ r - r @ h[None, :])
        dr += out_op @ r @ out_op.conj().T - 0.5 * (ldl @ r + r @ ldl)
        return dr.ravel()

    sol = solve_ivp(rhs, (0, t_end), r0.ravel(), rtol=1e-9, atol=1e-11, method="DOP853")
    return np.einsum("mnii->mn", sol.y[:, -1].reshape(8, 8, dim, dim))


@pytest.mark.parametrize("params", [
    pf.SystemParams.reference(),
    pf.SystemParams(kappa_a=1.3, kappa_b=2.9, delta_a=0.4, delta_b=-2.2,
                    chi_a=(0.9, 1.1, 1.0), chi_b=(1.2, 0.8, 1.05)),
], ids=["reference", "asymmetric"])
def test_effective_dephasing_matches_full_cavity_model(params):
    pulse = pf.DrivePulse(0.8, sigma=2.0)
    rho = qa.pure_density(qa.psi_pre())
    oracle = fock_reduced_state(params, pulse, rho, 4.0)
    table = pf.integrate_pointer_fields(params, pulse, 4.0, dt=2e-3)
    _, states = sme.lindblad_evolve(rho, table, params, 4.0)
    assert np.abs(oracle - rho).max() > 1e-3  # the comparison is not vacuous
    assert np.allclose(states[-1], oracle, atol=1e-9)


def test_steady_dephasing_rate_is_half_squared_distance(ref_params):
    table = pf.integrate_pointer_fields(ref_params, pf.DrivePulse(0.5, shape="constant"), 30.0)
    lam = sme.field_coefficients(table.alpha[:, -1], table.beta[:, -1], ref_params)
    sig = table.sigma_out[:, -1]
    assert np.allclose(lam.real, -0.5 * np.abs(sig[:, None] - sig[None, :]) ** 2, atol=1e-12)


def test_relaxation_matches_explicit_dissipator():
    params = pf.SystemParams.reference(gamma_1=(0.1, 0.2, 0.3), gamma_phi=(0.05, 0.0, 0.02))
    rng = np.random.default_rng(3)
    g = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    rho = g @ g.conj().T
    rho /= np.trace(rho)
    zero = np.zeros(8)
    got = sme._generator_at(rho, zero, zero, params)
    want = sum(r * qa.dissipator(qa.embed_pauli("minus", q + 1), rho) for q, r in enumerate(params.relaxation_rates))
    want = want + sum(g / 2 * qa.dissipator(qa.embed_pauli("z", q + 1), rho) for q, g in enumerate(params.gamma_phi))
    assert np.allclose(got, want)


def _noise(seed, n, dt):
    rng = np.random.default_rng(seed)
    blocks = [rng.standard_normal(sme.CHUNK) for _ in range(math.ceil(n / sme.CHUNK))]
    return np.concatenate(blocks)[:n] * math.sqrt(dt)


@pytest.mark.parametrize("scheme", sme.SCHEMES)
def test_kernel_matches_reference_step(scheme):
    params = pf.SystemParams.reference(gamma_p=0.01, gamma_phi=0.02, eta=0.7)
    table = pf.integrate_pointer_fields(params, pf.DrivePulse(0.6), 1.2)
    cfg = sme.SmeConfig(dt=table.dt, t_end=1.2, seed=77, scheme=scheme, record_current=True)
    rec = sme.run_trajectory(qa.psi_pre(), table, params, cfg)
    rho = qa.pure_density(qa.psi_pre())
    s = 0.0
    dws = _noise(77, cfg.n_steps(), cfg.dt)
    for n, dw in enumerate(dws):
        rho, j = sme.sme_step(rho, table.t[n], table, params, cfg, dw)
        s += j * cfg.dt
        assert rec.current[n] == pytest.approx(j, rel=1e-9, abs=1e-9)
    assert np.allclose(rec.final_state, rho, atol=1e-12)
    assert rec.s == pytest.approx(s, rel=1e-10)


def test_basis_state_record_statistics(ref_params):
    """Eigenstates give s ~ N(2 sqrt(eta) int q dt, tau) and never move."""
    tau = 5.0
    params = ref_params.replace(eta=0.5)
    table = pf.integrate_pointer_fields(params, pf.DrivePulse(0.4), tau)
    cfg = sme.SmeConfig(dt=table.dt, t_end=tau)
    for label in ("000", "111"):
        mu = qa.label_index(label)
        ens = sme.run_ensemble(400, 11, qa.basis_state(label), table, params, cfg)
        mean = 2 * math.sqrt(0.5) * np.trapezoid(pf.measured_quadrature(table.sigma_out[mu], 0.0), table.t)
        s = ens.s
        assert abs(s.mean() - mean) < 4 * math.sqrt(tau / len(s))
        assert s.var(ddof=1) == pytest.approx(tau, rel=0.2)
        assert np.allclose(ens.final_states[:, mu, mu], 1.0)


def test_milstein_keeps_states_positive(ref_params):
    table = pf.integrate_pointer_fields(ref_params, pf.DrivePulse(2 * math.sqrt(1 / 20)), 10.0)
    worst = {}
    for scheme in sme.SCHEMES:
        cfg = sme.SmeConfig(dt=table.dt, t_end=10.0, scheme=scheme)
        ens = sme.run_ensemble(40, 5, qa.psi_pre(), table, ref_params, cfg)
        worst[scheme] = min(r.min_eigenvalue for r in ens.records)
    assert worst["milstein"] > -1e-10
    assert worst["euler"] < worst["milstein"]


def test_ensemble_independent_of_workers(ref_params):
    table = pf.integrate_pointer_fields(ref_params, pf.DrivePulse(0.3), 1.0)
    cfg = sme.SmeConfig(dt=table.dt, t_end=1.0)
    one = sme.run_ensemble(6, 123, qa.psi_pre(), table, ref_params, cfg, workers=1)
    two = sme.run_ensemble(6, 123, qa.psi_pre(), table, ref_params, cfg, workers=2)
    assert np.array_equal(one.s, two.s)
    assert np.array_equal(one.final_states, two.final_states)
    assert [r.index for r in two.records] == list(range(6))
    other = sme.run_ensemble(6, 124, qa.psi_pre(), table, ref_params, cfg)
    assert not np.array_equal(one.s, other.s)


def test_trajectory_seed_is_stable_and_distinct():
    seeds = {sme.trajectory_seed(0, k) for k in range(1000)}
    assert len(seeds) == 1000
    assert sme.trajectory_seed(42, 7) == sme.trajectory_seed(42, 7)
    assert all(0 <= s < 2**64 for s in seeds)


def test_snapshots_and_current(ref_params):
    table = pf.integrate_pointer_fields(ref_params, pf.DrivePulse(0.3), 2.0)
    cfg = sme.SmeConfig(dt=table.dt, t_end=2.0, record_state_stride=500, record_current=True)
    rec = sme.run_trajectory(qa.psi_pre(), table, ref_params, cfg)
    assert rec.snapshots.shape == (5, 8, 8)
    rows = list(rec.current_rows(cfg.dt))
    assert len(rows) == 2000
    assert sum(j for _, j in rows) * cfg.dt == pytest.approx(rec.s)


def test_config_validation(ref_params):
    table = pf.integrate_pointer_fields(ref_params, pf.DrivePulse(0.3), 1.0)
    with pytest.raises(ValueError):
        sme.SmeConfig(dt=1e-3, t_end=1.0, scheme="heun")
    with pytest.raises(ValueError):
        sme.SmeConfig(dt=1e-3, t_end=1.0, renormalize_every=0)
    with pytest.raises(ValueError):
        sme.run_trajectory(qa.psi_pre(), table, ref_params, sme.SmeConfig(dt=2e-3, t_end=1.0))
    with pytest.raises(ValueError):
        sme.run_trajectory(qa.psi_pre(), table, ref_params, sme.SmeConfig(dt=1e-3, t_end=2.0))
    with pytest.raises(ValueError):
        sme.run_trajectory(np.ones(8), table, ref_params, sme.SmeConfig(dt=1e-3, t_end=1.0))


def test_divergence_raises_numerical_error(ref_params, monkeypatch):
    table = pf.integrate_pointer_fields(ref_params, pf.DrivePulse(0.3), 1.0)
    monkeypatch.setattr(sme, "static_coefficients", lambda p: np.full((8, 8), np.nan, complex))
    with pytest.raises(sme.NumericalError):
        sme.run_trajectory(qa.psi_pre(), table, ref_params, sme.SmeConfig(dt=1e-3, t_end=1.0))


def test_invariant_suite_catches_wrong_relaxation_sign(monkeypatch):
    ctx = acceptance.Context(n=10)
    assert all(ok for ok, _ in acceptance.invariant_checks(ctx, n=4).values())
    original = sme.static_coefficients

    def flipped(params):
        e = qa.EXCITED
        g1 = params.relaxation_rates @ e
        return original(params) + g1[:, None] + g1[None, :]  # anticommutator now adds weight

    monkeypatch.setattr(sme, "static_coefficients", flipped)
    checks = acceptance.invariant_checks(ctx, n=4)
    assert not checks["trace"][0]
