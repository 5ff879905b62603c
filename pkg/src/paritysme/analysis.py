"""Outcome statistics for integrated homodyne records.

Records enter as the integrated signal ``s`` plus the final conditional
state. Classification uses a sign fixed by the pointer table, so the code
never assumes which sign corresponds to even parity.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import qubit_algebra as qa
from .pointer_fields import PointerTable, SystemParams, measured_quadrature, steady_state_sigma


class Outcome(str, enum.Enum):
    EVEN = "Even"
    ODD = "Odd"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class ClassificationOutcome:
    label: Outcome
    s: float
    s_th: float


def _check_sign(sign_cal: int) -> None:
    if sign_cal not in (1, -1):
        raise ValueError(f"sign_cal must be +1 or -1, got {sign_cal!r}")


def classify(s: float, s_th: float, sign_cal: int) -> ClassificationOutcome:
    """Even if ``sign_cal*s > s_th``, Odd if ``sign_cal*s < -s_th``, otherwise Inconclusive."""
    if s_th < 0:
        raise ValueError("s_th must be non-negative")
    _check_sign(sign_cal)
    v = sign_cal * s
    if v > s_th:
        label = Outcome.EVEN
    elif v < -s_th:
        label = Outcome.ODD
    else:
        label = Outcome.INCONCLUSIVE
    return ClassificationOutcome(label, float(s), float(s_th))


def classify_array(s, s_th: float, sign_cal: int) -> np.ndarray:
    """Vectorised :func:`classify`: +1 even, -1 odd, 0 inconclusive."""
    if s_th < 0:
        raise ValueError("s_th must be non-negative")
    _check_sign(sign_cal)
    v = sign_cal * np.asarray(s, dtype=float)
    return np.where(v > s_th, 1, np.where(v < -s_th, -1, 0))


def empirical_snr(s_even, s_odd) -> float:
    """``(mean_e - mean_o) / sqrt(var_e + var_o)`` with unbiased sample variances."""
    a = np.asarray(s_even, dtype=float)
    b = np.asarray(s_odd, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("each parity group needs at least two records")
    return float((a.mean() - b.mean()) / math.sqrt(a.var(ddof=1) + b.var(ddof=1)))


def parity_weights(initial) -> np.ndarray:
    """Basis populations of a state vector or density matrix."""
    arr = np.asarray(initial, dtype=complex)
    if arr.shape == (qa.DIM,):
        return np.abs(arr) ** 2
    if arr.shape == (qa.DIM, qa.DIM):
        return np.real(np.diag(arr)).copy()
    raise ValueError(f"expected shape (8,) or (8, 8), got {arr.shape}")


def _window(table: PointerTable, tau: float) -> slice:
    return slice(0, table.index_of(tau) + 1)


def conditional_means(table: PointerTable, weights, tau: float, eta: float, phi: float) -> tuple[float, float]:
    """Expected ``s`` for even and odd outcomes given initial basis weights."""
    w = np.asarray(weights, dtype=float)
    win = _window(table, tau)
    q = measured_quadrature(table.sigma_out[:, win], phi)
    t = table.t[win]
    out = []
    for group in (qa.EVEN, qa.ODD):
        idx = list(group)
        total = w[idx].sum()
        if total <= 0:
            raise ValueError("initial state has no weight in one parity sector")
        trace = (w[idx, None] * q[idx]).sum(axis=0) / total
        out.append(2 * math.sqrt(eta) * float(np.trapezoid(trace, t)))
    return out[0], out[1]


def predicted_snr(table: PointerTable, weights, tau: float, eta: float, phi: float) -> float:
    m_e, m_o = conditional_means(table, weights, tau, eta, phi)
    return abs(m_e - m_o) / math.sqrt(2 * tau)


def ideal_snr(params: SystemParams, eps_ss: float, tau: float, eta: float | None = None) -> float:
    """Steady-state SNR ``2 sqrt(2 eta) |q_111| eps sqrt(tau)`` with ``q_111`` per unit drive."""
    eta = params.eta if eta is None else eta
    q111 = measured_quadrature(steady_state_sigma(params, 1.0)[qa.label_index("111")], params.phi_lo)
    return 2 * math.sqrt(2 * eta) * abs(float(q111)) * eps_ss * math.sqrt(tau)


@dataclass(frozen=True)
class GaussianModel:
    mean_even: float
    mean_odd: float
    std: float

    def pdf(self, s, parity: int) -> np.ndarray:
        mu = self.mean_even if parity == 1 else self.mean_odd
        z = (np.asarray(s, dtype=float) - mu) / self.std
        return np.exp(-0.5 * z**2) / (self.std * math.sqrt(2 * math.pi))


def gaussian_model(table: PointerTable, tau: float, eta: float, phi: float) -> GaussianModel:
    """Signal distributions for the uniform initial superposition; variance is ``tau``."""
    m_e, m_o = conditional_means(table, parity_weights(qa.psi_pre()), tau, eta, phi)
    return GaussianModel(m_e, m_o, math.sqrt(tau))


@dataclass(frozen=True)
class FidelityResult:
    F_plus: float | None
    F_minus: float | None
    accepted_fraction: float
    n_even: int
    n_odd: int
    n_inconclusive: int

    def to_dict(self) -> dict:
        return asdict(self)


def overlaps(final_states, target) -> np.ndarray:
    rho = np.asarray(final_states, dtype=complex)
    psi = np.asarray(target, dtype=complex)
    return np.real(np.einsum("i,kij,j->k", psi.conj(), rho, psi))


def _fid(overlaps: np.ndarray, mask: np.ndarray) -> float | None:
    n = int(mask.sum())
    if n == 0:
        return None
    return math.sqrt(min(max(float(overlaps[mask].mean()), 0.0), 1.0))


def conditional_fidelity(
    final_states,
    s,
    s_th: float,
    sign_cal: int,
    targets: tuple[np.ndarray, np.ndarray] | None = None,
) -> FidelityResult:
    """Overlap fidelity of the outcome-conditioned mean states with the parity targets.

    An outcome with no records gets ``None`` rather than a number.
    """
    plus, minus = targets if targets is not None else (qa.psi_plus(), qa.psi_minus())
    labels = classify_array(s, s_th, sign_cal)
    if len(labels) == 0:
        raise ValueError("no records")
    even, odd = labels == 1, labels == -1
    return FidelityResult(
        F_plus=_fid(overlaps(final_states, plus), even),
        F_minus=_fid(overlaps(final_states, minus), odd),
        accepted_fraction=float((labels != 0).mean()),
        n_even=int(even.sum()),
        n_odd=int(odd.sum()),
        n_inconclusive=int((labels == 0).sum()),
    )


@dataclass(frozen=True)
class SweepPoint:
    s_th: float
    F_plus: float | None
    F_minus: float | None
    F_plus_err: float | None
    F_minus_err: float | None
    accepted_fraction: float


def threshold_sweep(
    final_states,
    s,
    grid: Sequence[float],
    sign_cal: int,
    n_boot: int = 200,
    seed: int = 0,
    targets: tuple[np.ndarray, np.ndarray] | None = None,
) -> list[SweepPoint]:
    """Conditional fidelity over a grid of thresholds with bootstrap standard errors.

    Resampling uses a generator seeded by ``seed`` alone, so the curve is
    reproducible and independent of the trajectory noise streams.
    """
    plus, minus = targets if targets is not None else (qa.psi_plus(), qa.psi_minus())
    s = np.asarray(s, dtype=float)
    o_p = overlaps(final_states, plus)
    o_m = overlaps(final_states, minus)
    rng = np.random.default_rng(seed)
    resamples = rng.integers(0, len(s), size=(n_boot, len(s)))
    points = []
    for s_th in grid:
        labels = classify_array(s, s_th, sign_cal)
        errs = []
        for o, side in ((o_p, 1), (o_m, -1)):
            boot = []
            for idx in resamples:
                f = _fid(o[idx], labels[idx] == side)
                if f is not None:
                    boot.append(f)
            errs.append(float(np.std(boot, ddof=1)) if len(boot) > 1 else None)
        points.append(SweepPoint(
            s_th=float(s_th),
            F_plus=_fid(o_p, labels == 1),
            F_minus=_fid(o_m, labels == -1),
            F_plus_err=errs[0],
            F_minus_err=errs[1],
            accepted_fraction=float((labels != 0).mean()),
        ))
    return points


def true_parity(final_states) -> np.ndarray:
    """Majority parity of each final state: +1 even, -1 odd."""
    pops = np.real(np.einsum("kii->ki", np.asarray(final_states)))
    even = pops[:, list(qa.EVEN)].sum(axis=1)
    return np.where(even >= 0.5, 1, -1)


def histogram_rows(s, parity, edges=None) -> list[tuple[float, float, int, int]]:
    """Counts per bin split by true parity; Freedman-Diaconis edges unless given."""
    s = np.asarray(s, dtype=float)
    parity = np.asarray(parity)
    if edges is None:
        edges = np.histogram_bin_edges(s, bins="fd") if s.size else np.array([0.0, 1.0])
    edges = np.asarray(edges, dtype=float)
    c_even, _ = np.histogram(s[parity == 1], bins=edges)
    c_odd, _ = np.histogram(s[parity == -1], bins=edges)
    return [(float(edges[i]), float(edges[i + 1]), int(c_even[i]), int(c_odd[i])) for i in range(len(edges) - 1)]


def write_histogram_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "count_even_true", "count_odd_true"])
        for left, right, ce, co in rows:
            w.writerow([repr(left), repr(right), ce, co])


def outcome_summary(records, s_th: float, sign_cal: int) -> dict:
    """Outcome counts, fractions and conditional fidelities of a record list."""
    s = np.array([r.s for r in records])
    states = np.array([r.final_state for r in records])
    fid = conditional_fidelity(states, s, s_th, sign_cal)
    n = len(records)
    return {
        "s_th": float(s_th),
        "n": n,
        "fraction_even": fid.n_even / n,
        "fraction_odd": fid.n_odd / n,
        "fraction_inconclusive": fid.n_inconclusive / n,
        "accepted_fraction": fid.accepted_fraction,
        "F_plus": fid.F_plus,
        "F_minus": fid.F_minus,
    }


def report(
    *,
    s,
    final_states,
    s_th: float,
    sign_cal: int,
    snr_predicted: float | None,
    snr_ideal: float | None,
) -> dict:
    """JSON-ready summary with the fixed key set used by every scenario."""
    parity = true_parity(final_states)
    s = np.asarray(s, dtype=float)
    try:
        snr_emp = sign_cal * empirical_snr(s[parity == 1], s[parity == -1])
    except ValueError:
        snr_emp = None
    fid = conditional_fidelity(final_states, s, s_th, sign_cal)
    return {
        "snr_empirical": snr_emp,
        "snr_predicted": snr_predicted,
        "snr_ideal": snr_ideal,
        "F_plus": fid.F_plus,
        "F_minus": fid.F_minus,
        "accepted_fraction": fid.accepted_fraction,
        "s_th": float(s_th),
    }
