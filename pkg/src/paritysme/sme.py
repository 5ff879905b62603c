"""Effective qubit-only stochastic master equation under homodyne readout.

The deterministic generator splits into a static part (frame rotation,
relaxation, dephasing), a field-dependent elementwise part ``Lambda(t)`` and
the sigma_- jump terms. The measurement operator is diagonal in the
computational basis, so every term except the jumps acts elementwise on
``rho``. Ensembles run through a compiled per-trajectory kernel; the
:func:`sme_step` reference implementation uses plain matrix algebra.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from . import qubit_algebra as qa
from .pointer_fields import PointerTable, SystemParams

log = logging.getLogger(__name__)

CHUNK = 500  # steps per noise block and per positivity check
POSITIVITY_WARN = -1e-4
SCHEMES = ("milstein", "euler")


class NumericalError(RuntimeError):
    """A trajectory produced a non-finite state."""


@dataclass(frozen=True)
class SmeConfig:
    dt: float
    t_end: float
    seed: int = 0
    renormalize_every: int = 1
    record_current: bool = False
    record_state_stride: int = 0
    scheme: str = "milstein"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.renormalize_every < 1:
            raise ValueError("renormalize_every must be at least 1")

    def n_steps(self) -> int:
        n = int(round(self.t_end / self.dt))
        if n < 1 or abs(n * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise ValueError("t_end must be a positive integer multiple of dt")
        return n

    def check_table(self, table: PointerTable) -> None:
        if not math.isclose(self.dt, table.dt, rel_tol=1e-9):
            raise ValueError(f"SME step {self.dt} differs from pointer-table step {table.dt}")
        if self.n_steps() > table.n_steps:
            raise ValueError("t_end exceeds the pointer-table span")


@dataclass
class TrajectoryRecord:
    seed: int
    s: float
    final_state: np.ndarray
    index: int = 0
    current: np.ndarray | None = None
    snapshots: np.ndarray | None = None
    min_eigenvalue: float = 0.0
    max_trace_drift: float = 0.0

    def parity_population(self) -> float:
        """Weight of the final state in the even subspace."""
        return float(np.real(np.diag(self.final_state))[list(qa.EVEN)].sum())

    def current_rows(self, dt: float):
        if self.current is None:
            raise ValueError("current was not recorded for this trajectory")
        for n, j in enumerate(self.current):
            yield n * dt, float(j)


# ---------------------------------------------------------------------------
# generator pieces

_ALL_DIFFER = np.bitwise_xor.outer(np.arange(qa.DIM), np.arange(qa.DIM)) == qa.DIM - 1


def field_coefficients(alpha: np.ndarray, beta: np.ndarray, params: SystemParams) -> np.ndarray:
    """Elementwise field-dependent rates ``Lambda[mu, nu]``.

    ``alpha``/``beta`` are (8,) or (8, T); the result is (8, 8) or (T, 8, 8).
    The dispersive part is ``-i[(chi^a_mu - chi^a_nu) a_mu a_nu* + (chi^b_mu - chi^b_nu) b_mu b_nu*]``.
    With ``params.cross_mode_terms`` the sqrt(kappa_a kappa_b)/2 cross-mode terms
    are added on label pairs that differ in all three bits.
    """
    a = np.asarray(alpha).T[..., :, None]
    b = np.asarray(beta).T[..., :, None]
    ac = np.conj(np.asarray(alpha).T)[..., None, :]
    bc = np.conj(np.asarray(beta).T)[..., None, :]
    sa, sb = params.label_shifts
    lam = -1j * ((sa[:, None] - sa[None, :]) * a * ac + (sb[:, None] - sb[None, :]) * b * bc)
    if params.cross_mode_terms:
        ab_self = (np.conj(a) * b).real  # Re(a_mu* b_mu), column vector
        x = (a * bc).imag + (b * ac).imag
        y = (b * ac).real + (a * bc).real - ab_self - np.swapaxes(ab_self, -1, -2)
        g = 0.5 * math.sqrt(params.kappa_a * params.kappa_b)
        lam = lam + np.where(_ALL_DIFFER, g * (1j * x + y), 0.0)
    return lam


def static_coefficients(params: SystemParams) -> np.ndarray:
    """Elementwise part of rotation, dephasing and the anticommutator of relaxation."""
    z = qa.Z_EIGS
    e = qa.EXCITED
    h = 0.5 * np.asarray(params.omega_frame) @ z
    gphi = np.asarray(params.gamma_phi)
    g1 = params.relaxation_rates
    coef = -1j * (h[:, None] - h[None, :])
    coef = coef + np.einsum("q,qm,qn->mn", gphi / 2, z, z) - gphi.sum() / 2
    coef = coef - 0.5 * (g1 @ e)[:, None] - 0.5 * (g1 @ e)[None, :]
    return coef


def _jump_tables() -> tuple[np.ndarray, np.ndarray]:
    """Destination and source index pairs of sigma_-^(q) rho sigma_+^(q), shape (3, 16, 2)."""
    dst = np.zeros((3, 16, 2), dtype=np.int64)
    src = np.zeros((3, 16, 2), dtype=np.int64)
    for q in range(3):
        mask = 4 >> q
        low = [i for i in range(qa.DIM) if not i & mask]
        pairs = [(m, n) for m in low for n in low]
        dst[q] = pairs
        src[q] = [(m | mask, n | mask) for m, n in pairs]
    return dst, src


JUMP_DST, JUMP_SRC = _jump_tables()


def _apply_jumps(rho: np.ndarray, rates: np.ndarray) -> np.ndarray:
    out = np.zeros_like(rho)
    for q in range(3):
        if rates[q]:
            out[..., JUMP_DST[q, :, 0], JUMP_DST[q, :, 1]] += rates[q] * rho[..., JUMP_SRC[q, :, 0], JUMP_SRC[q, :, 1]]
    return out


def deterministic_generator(rho: np.ndarray, t: float, table: PointerTable, params: SystemParams) -> np.ndarray:
    """``L[rho]`` per unit time at grid time ``t`` (no measurement term)."""
    alpha, beta = table.alpha[:, table.index_of(t)], table.beta[:, table.index_of(t)]
    return _generator_at(rho, alpha, beta, params)


def _generator_at(rho, alpha, beta, params: SystemParams) -> np.ndarray:
    coef = static_coefficients(params) + field_coefficients(alpha, beta, params)
    return coef * rho + _apply_jumps(rho, params.relaxation_rates)


def measurement_coefficients(sigma: np.ndarray, phi: float) -> np.ndarray:
    """Diagonal of ``Pi_Sigma e^{-i phi}``."""
    return np.asarray(sigma) * np.exp(-1j * phi)


def sme_step(
    rho: np.ndarray,
    t: float,
    table: PointerTable,
    params: SystemParams,
    config: SmeConfig,
    dw: float,
) -> tuple[np.ndarray, float]:
    """One step of the configured scheme; ``dw`` feeds both the state update and the current sample.

    The Milstein variant adds ``(dw^2 - dt)/2`` times the derivative of the
    back-action term along itself.
    """
    n = table.index_of(t)
    c = np.diag(measurement_coefficients(table.sigma_out[:, n], params.phi_lo))
    seta = math.sqrt(params.eta)
    cc = c + c.conj().T
    expect = np.trace(cc @ rho).real
    drift = deterministic_generator(rho, t, table, params)
    back = qa.meas_superop(c, rho)
    new = rho + drift * config.dt + seta * back * dw
    if config.scheme == "milstein":
        deriv = c @ back + back @ c.conj().T - expect * back - np.trace(cc @ back).real * rho
        new = new + 0.5 * params.eta * deriv * (dw * dw - config.dt)
    new = 0.5 * (new + new.conj().T)
    tr = np.trace(new).real
    if not np.isfinite(tr) or not np.all(np.isfinite(new)):
        raise NumericalError(f"non-finite state at t={t}")
    new = new / tr
    return new, seta * expect + dw / config.dt


# ---------------------------------------------------------------------------
# compiled ensemble kernel


@numba.njit(cache=True)
def _propagate_chunk(rhos, gdt, kc, cvec, dw, seta, dt, jump_rates_dt, jump_dst, jump_src,
                     renorm_every, step0, s_out, current, record_current, drift, status, milstein):
    n_traj = rhos.shape[0]
    n_steps = gdt.shape[0]
    jumps = np.zeros((8, 8), dtype=np.complex128)
    for k in range(n_traj):
        if status[k] != 0:
            continue
        rho = rhos[k]
        s = s_out[k]
        for n in range(n_steps):
            ex = 0.0
            ex2 = 0.0
            for m in range(8):
                x = 2.0 * cvec[n, m].real
                ex += x * rho[m, m].real
                ex2 += x * x * rho[m, m].real
            w = dw[k, n]
            s += seta * ex * dt + w
            if record_current:
                current[k, n] = seta * ex + w / dt
            for a in range(8):
                for b in range(8):
                    jumps[a, b] = 0.0
            for q in range(3):
                r = jump_rates_dt[q]
                if r != 0.0:
                    for p in range(16):
                        jumps[jump_dst[q, p, 0], jump_dst[q, p, 1]] += r * rho[jump_src[q, p, 0], jump_src[q, p, 1]]
            sw = seta * w
            mw = 0.5 * seta * seta * (w * w - dt) if milstein else 0.0
            var = ex2 - ex * ex
            tr = 0.0
            for a in range(8):
                km = kc[n, a, a] - ex
                v = rho[a, a] * (1.0 + gdt[n, a, a] + sw * km + mw * (km * km - var)) + jumps[a, a]
                rho[a, a] = v.real
                tr += v.real
                for b in range(a + 1, 8):
                    km = kc[n, a, b] - ex
                    v = rho[a, b] * (1.0 + gdt[n, a, b] + sw * km + mw * (km * km - var)) + jumps[a, b]
                    rho[a, b] = v
                    rho[b, a] = v.conjugate()
            if not np.isfinite(tr) or tr <= 0.0:
                status[k] = 1
                break
            d = abs(tr - 1.0)
            if d > drift[k]:
                drift[k] = d
            if (step0 + n + 1) % renorm_every == 0:
                inv = 1.0 / tr
                for a in range(8):
                    for b in range(8):
                        rho[a, b] *= inv
        s_out[k] = s


def trajectory_seed(base_seed: int, index: int) -> int:
    """64-bit seed of trajectory ``index``, from a spawned SeedSequence stream."""
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(index),))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def _as_density(initial) -> np.ndarray:
    arr = np.asarray(initial, dtype=complex)
    if arr.shape == (qa.DIM,):
        if abs(np.linalg.norm(arr) - 1) > 1e-12:
            raise ValueError("initial pure state is not normalised")
        return qa.pure_density(arr)
    if arr.shape == (qa.DIM, qa.DIM):
        if abs(np.trace(arr).real - 1) > 1e-12:
            raise ValueError("initial density matrix does not have unit trace")
        return arr.copy()
    raise ValueError(f"initial state must be shape (8,) or (8, 8), got {arr.shape}")


def _simulate(rho0, seeds, indices, table, params, config) -> list[TrajectoryRecord]:
    """Integrate one batch of trajectories; each draws its own noise stream in fixed blocks."""
    config.check_table(table)
    n_steps = config.n_steps()
    n_traj = len(seeds)
    dt = config.dt
    sqdt = math.sqrt(dt)
    gens = [np.random.default_rng(s) for s in seeds]
    rhos = np.repeat(rho0[None], n_traj, axis=0).astype(np.complex128)
    s_out = np.zeros(n_traj)
    drift = np.zeros(n_traj)
    status = np.zeros(n_traj, dtype=np.int64)
    min_eig = np.linalg.eigvalsh(rhos).min(axis=1)
    currents = np.zeros((n_traj, n_steps)) if config.record_current else None
    stride = config.record_state_stride
    snaps: list[np.ndarray] = [rhos.copy()] if stride else []
    static = static_coefficients(params)
    rates_dt = params.relaxation_rates * dt
    phase = np.exp(-1j * params.phi_lo)
    seta = math.sqrt(params.eta)
    sig = table.sigma_out
    for start in range(0, n_steps, CHUNK):
        stop = min(start + CHUNK, n_steps)
        lam = field_coefficients(table.alpha[:, start:stop], table.beta[:, start:stop], params)
        gdt = np.ascontiguousarray((static[None] + lam) * dt)
        cvec = np.ascontiguousarray((sig[:, start:stop] * phase).T)
        kc = np.ascontiguousarray(cvec[:, :, None] + np.conj(cvec)[:, None, :])
        dw = np.empty((n_traj, stop - start))
        for k, g in enumerate(gens):
            dw[k] = g.standard_normal(CHUNK)[: stop - start] * sqdt
        cur = np.zeros((n_traj, stop - start)) if currents is not None else np.zeros((n_traj, 1))
        _propagate_chunk(rhos, gdt, kc, cvec, dw, seta, dt, rates_dt, JUMP_DST, JUMP_SRC,
                         config.renormalize_every, start, s_out, cur, currents is not None, drift, status,
                         config.scheme == "milstein")
        if status.any():
            bad = int(np.flatnonzero(status)[0])
            raise NumericalError(f"trajectory {indices[bad]} diverged in steps [{start}, {stop})")
        if currents is not None:
            currents[:, start:stop] = cur
        min_eig = np.minimum(min_eig, np.linalg.eigvalsh(rhos).min(axis=1))
        if stride and stop % stride == 0:
            snaps.append(rhos.copy())
    worst = float(min_eig.min())
    if worst < POSITIVITY_WARN:
        log.warning("density matrix eigenvalue dropped to %.3g", worst)
    records = []
    for k in range(n_traj):
        records.append(TrajectoryRecord(
            seed=int(seeds[k]),
            s=float(s_out[k]),
            final_state=rhos[k].copy(),
            index=int(indices[k]),
            current=None if currents is None else currents[k],
            snapshots=np.array([snap[k] for snap in snaps]) if stride else None,
            min_eigenvalue=float(min_eig[k]),
            max_trace_drift=float(drift[k]),
        ))
    return records


def run_trajectory(initial, table: PointerTable, params: SystemParams, config: SmeConfig) -> TrajectoryRecord:
    """Single seeded trajectory over ``[0, config.t_end]``.

    Snapshots (if requested) are taken at multiples of ``record_state_stride``
    that coincide with the internal block boundaries of ``CHUNK`` steps.
    """
    return _simulate(_as_density(initial), [config.seed], [0], table, params, config)[0]


@dataclass
class Ensemble:
    records: list[TrajectoryRecord]
    base_seed: int
    config: SmeConfig
    params: SystemParams = field(repr=False)

    @property
    def s(self) -> np.ndarray:
        return np.array([r.s for r in self.records])

    @property
    def final_states(self) -> np.ndarray:
        return np.array([r.final_state for r in self.records])

    def mean_state(self) -> np.ndarray:
        return self.final_states.mean(axis=0)

    def summary(self, sign_cal: int, s_th: float = 0.0) -> dict:
        from .analysis import outcome_summary

        return outcome_summary(self.records, s_th=s_th, sign_cal=sign_cal)


def _batch_job(args):
    rho0, seeds, indices, table, params, config = args
    return _simulate(rho0, seeds, indices, table, params, config)


def default_workers() -> int:
    env = os.environ.get("PARITYSME_WORKERS")
    return max(1, int(env)) if env else 1


def run_ensemble(
    n: int,
    base_seed: int,
    initial,
    table: PointerTable,
    params: SystemParams,
    config: SmeConfig,
    workers: int | None = None,
) -> Ensemble:
    """``n`` independent trajectories; trajectory ``k`` is seeded by ``trajectory_seed(base_seed, k)``.

    Records are identical for any worker count and come back ordered by index.
    """
    if n < 1:
        raise ValueError("ensemble size must be at least 1")
    rho0 = _as_density(initial)
    seeds = [trajectory_seed(base_seed, k) for k in range(n)]
    workers = default_workers() if workers is None else max(1, workers)
    if workers == 1 or n == 1:
        records = _simulate(rho0, seeds, list(range(n)), table, params, config)
    else:
        bounds = np.linspace(0, n, min(workers, n) + 1).astype(int)
        jobs = [(rho0, seeds[a:b], list(range(a, b)), table, params, config) for a, b in zip(bounds[:-1], bounds[1:])]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = [rec for part in pool.map(_batch_job, jobs) for rec in part]
    return Ensemble(records=records, base_seed=base_seed, config=config, params=params)


def lindblad_evolve(
    initial,
    table: PointerTable,
    params: SystemParams,
    t_end: float,
    dt: float | None = None,
    stride: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Unconditional evolution by RK4 on the deterministic generator.

    The default step is twice the table step, so every RK4 stage lands on a
    grid point; other steps interpolate the fields linearly. Returns the
    sample times and states (final state only when ``stride`` is 0).
    """
    rho = _as_density(initial)
    h = 2 * table.dt if dt is None else dt
    n_steps = int(round(t_end / h))
    if n_steps < 1 or abs(n_steps * h - t_end) > 1e-9 * t_end:
        raise ValueError("t_end must be a positive integer multiple of the step")
    static = static_coefficients(params)
    rates = params.relaxation_rates

    def gen(rho, t):
        alpha, beta = table.fields_at(t)
        return (static + field_coefficients(alpha, beta, params)) * rho + _apply_jumps(rho, rates)

    times, states = [0.0], [rho.copy()]
    for n in range(n_steps):
        t = n * h
        k1 = gen(rho, t)
        k2 = gen(rho + 0.5 * h * k1, t + 0.5 * h)
        k3 = gen(rho + 0.5 * h * k2, t + 0.5 * h)
        k4 = gen(rho + h * k3, t + h)
        rho = rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        if stride and (n + 1) % stride == 0:
            times.append((n + 1) * h)
            states.append(rho.copy())
    if not stride:
        times, states = [n_steps * h], [rho]
    return np.array(times), np.array(states)
