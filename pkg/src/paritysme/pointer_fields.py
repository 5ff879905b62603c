"""Coherent pointer-field dynamics of the two readout modes.

Each three-qubit basis label ``ijk`` drives its own pair of coherent
amplitudes ``(alpha, beta)``. The pairs obey independent 2x2 linear ODEs with
a shared drive envelope, so everything here is vectorised over the eight
labels.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.signal import lfilter

from . import qubit_algebra as qa


class StepSizeError(ValueError):
    """Integration step too coarse for the mode and dispersive time scales."""


class SingularSteadyState(ValueError):
    pass


class CalibrationError(ValueError):
    """No local-oscillator phase satisfies the parity-readout conditions."""


def _triple(value) -> tuple[float, float, float]:
    if np.ndim(value) == 0:
        return (float(value),) * 3
    out = tuple(float(v) for v in value)
    if len(out) != 3:
        raise ValueError(f"expected three per-qubit values, got {len(out)}")
    return out  # type: ignore[return-value]


@dataclass(frozen=True)
class SystemParams:
    """Circuit, readout and decoherence rates, all in units where ``chi`` sets the scale.

    ``omega_frame`` is the residual qubit Z-rotation rate in the frame that
    co-rotates with the dressed qubit frequencies. ``gamma_p`` is a per-qubit
    Purcell relaxation rate; ``lambda_a``/``lambda_b`` give the per-mode
    decomposition for asymmetric studies and add ``kappa * lambda**2`` on top.
    """

    chi: float = 1.0
    kappa_a: float = 2.0
    kappa_b: float = 2.0
    delta_a: float = math.sqrt(3.0)
    delta_b: float = -math.sqrt(3.0)
    chi_a: tuple[float, float, float] = (1.0, 1.0, 1.0)
    chi_b: tuple[float, float, float] = (1.0, 1.0, 1.0)
    gamma_1: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gamma_phi: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gamma_p: float = 0.0
    lambda_a: tuple[float, float, float] = (0.0, 0.0, 0.0)
    lambda_b: tuple[float, float, float] = (0.0, 0.0, 0.0)
    eta: float = 1.0
    phi_lo: float = 0.0
    omega_frame: tuple[float, float, float] = (0.0, 0.0, 0.0)
    cross_mode_terms: bool = False

    def __post_init__(self):
        for name in ("chi_a", "chi_b", "gamma_1", "gamma_phi", "lambda_a", "lambda_b", "omega_frame"):
            object.__setattr__(self, name, _triple(getattr(self, name)))
        if not (self.kappa_a > 0 and self.kappa_b > 0):
            raise ValueError("mode linewidths kappa_a, kappa_b must be positive")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if min(self.gamma_1 + self.gamma_phi) < 0 or self.gamma_p < 0:
            raise ValueError("decoherence rates must be non-negative")
        if self.chi == 0:
            raise ValueError("chi sets the unit scale and must be nonzero")

    @classmethod
    def symmetric(
        cls,
        kappa: float = 2.0,
        delta: float = math.sqrt(3.0),
        chi: float = 1.0,
        calibrate: bool = True,
        **kwargs,
    ) -> "SystemParams":
        """``kappa_a = kappa_b``, ``delta_a = -delta_b`` and equal per-qubit shifts ``chi`` on both modes.

        With ``calibrate`` the LO phase is set by :func:`calibrate_lo_phase`
        unless ``phi_lo`` is given explicitly.
        """
        params = cls(
            chi=chi,
            kappa_a=kappa,
            kappa_b=kappa,
            delta_a=delta,
            delta_b=-delta,
            chi_a=(chi,) * 3,
            chi_b=(chi,) * 3,
            **kwargs,
        )
        if calibrate and "phi_lo" not in kwargs:
            params = params.replace(phi_lo=calibrate_lo_phase(params))
        return params

    @classmethod
    def reference(cls, **kwargs) -> "SystemParams":
        """Operating point ``kappa = 2 chi``, ``delta = sqrt(3) chi``."""
        chi = kwargs.pop("chi", 1.0)
        return cls.symmetric(kappa=2.0 * chi, delta=math.sqrt(3.0) * chi, chi=chi, **kwargs)

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    @property
    def is_symmetric(self) -> bool:
        return (
            math.isclose(self.kappa_a, self.kappa_b)
            and math.isclose(self.delta_a, -self.delta_b)
            and all(math.isclose(a, self.chi) and math.isclose(b, self.chi) for a, b in zip(self.chi_a, self.chi_b))
        )

    @property
    def label_shifts(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-label dispersive shifts ``sum_q chi_q z_q`` for modes a and b, shape (8,)."""
        return np.asarray(self.chi_a) @ qa.Z_EIGS, np.asarray(self.chi_b) @ qa.Z_EIGS

    @property
    def relaxation_rates(self) -> np.ndarray:
        """Total sigma_- rate per qubit: intrinsic, aggregate Purcell and per-mode Purcell."""
        lam_a, lam_b = np.asarray(self.lambda_a), np.asarray(self.lambda_b)
        return (
            np.asarray(self.gamma_1)
            + self.gamma_p
            + self.kappa_a * lam_a**2
            + self.kappa_b * lam_b**2
        )

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in dataclasses.asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "SystemParams":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown SystemParams fields: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class DrivePulse:
    """Measurement-tone envelope; arctan rise centred at ``t_on`` (default ``10/sigma``)."""

    eps_ss: float
    shape: str = "arctan"
    sigma: float = 10.0
    t_on: float | None = None

    def __post_init__(self):
        if self.shape not in ("arctan", "constant"):
            raise ValueError(f"unknown pulse shape {self.shape!r}")
        if self.eps_ss < 0:
            raise ValueError("eps_ss must be non-negative")
        if self.shape == "arctan":
            if not self.sigma > 0:
                raise ValueError("sigma must be positive for the arctan pulse")
            if self.t_on is None:
                object.__setattr__(self, "t_on", 10.0 / self.sigma)

    def amplitude(self, t):
        t = np.asarray(t, dtype=float)
        if self.shape == "constant":
            return np.full_like(t, self.eps_ss)
        return self.eps_ss / np.pi * (np.arctan(self.sigma * (t - self.t_on)) + np.pi / 2)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def drive_amplitude(pulse: DrivePulse, t):
    return pulse.amplitude(t)


@dataclass(frozen=True)
class PointerTable:
    """Coherent amplitudes per basis label on a uniform time grid.

    ``alpha`` and ``beta`` have shape (8, N+1); everything else is derived.
    """

    t: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    kappa_a: float
    kappa_b: float
    eps_ss: float = field(default=float("nan"))

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def n_steps(self) -> int:
        return len(self.t) - 1

    @property
    def sigma_out(self) -> np.ndarray:
        return np.sqrt(self.kappa_a) * self.alpha + np.sqrt(self.kappa_b) * self.beta

    @property
    def xi(self) -> np.ndarray:
        s = self.sigma_out
        return s[qa.label_index("000")] + s[qa.label_index("011")]

    @property
    def delta(self) -> np.ndarray:
        s = self.sigma_out
        return s[qa.label_index("000")] - s[qa.label_index("011")]

    def index_of(self, t: float) -> int:
        """Grid index of ``t``; raises if ``t`` is not a grid point."""
        n = int(round((t - self.t[0]) / self.dt))
        if not 0 <= n <= self.n_steps or abs(self.t[0] + n * self.dt - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not on the pointer-table grid")
        return n

    def fields_at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Linearly interpolated ``(alpha, beta)`` at ``t``; exact on grid points."""
        x = (t - self.t[0]) / self.dt
        if x < -1e-9 or x > self.n_steps + 1e-9:
            raise ValueError(f"time {t} outside the table span")
        n = min(max(int(math.floor(x + 1e-12)), 0), self.n_steps)
        w = x - n
        if n == self.n_steps or abs(w) < 1e-12:
            return self.alpha[:, n], self.beta[:, n]
        return (
            (1 - w) * self.alpha[:, n] + w * self.alpha[:, n + 1],
            (1 - w) * self.beta[:, n] + w * self.beta[:, n + 1],
        )

    def write_csv(self, path, stride: int = 1) -> None:
        sig = self.sigma_out
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "label", "re_alpha", "im_alpha", "re_beta", "im_beta", "re_sigma", "im_sigma"])
            for n in range(0, len(self.t), stride):
                for mu, lab in enumerate(qa.LABELS):
                    a, b, s = self.alpha[mu, n], self.beta[mu, n], sig[mu, n]
                    w.writerow([repr(float(self.t[n])), lab] + [repr(float(v)) for v in (a.real, a.imag, b.real, b.imag, s.real, s.imag)])


def mode_matrices(params: SystemParams) -> np.ndarray:
    """Drift matrices of the amplitude ODE, shape (8, 2, 2)."""
    sa, sb = params.label_shifts
    cross = -0.5 * math.sqrt(params.kappa_a * params.kappa_b)
    mats = np.empty((qa.DIM, 2, 2), dtype=complex)
    mats[:, 0, 0] = -1j * (params.delta_a + sa) - 0.5 * params.kappa_a
    mats[:, 1, 1] = -1j * (params.delta_b + sb) - 0.5 * params.kappa_b
    mats[:, 0, 1] = cross
    mats[:, 1, 0] = cross
    return mats


def drive_vector(params: SystemParams) -> np.ndarray:
    return -1j * np.array([math.sqrt(params.kappa_a), math.sqrt(params.kappa_b)])


def max_step(params: SystemParams) -> float:
    return 0.01 * min(1 / params.kappa_a, 1 / params.kappa_b, 1 / abs(params.chi))


def integrate_pointer_fields(
    params: SystemParams,
    pulse: DrivePulse,
    t_end: float,
    dt: float | None = None,
) -> PointerTable:
    """Classical RK4 from vacuum on a uniform grid ``0, dt, ..., t_end``.

    RK4 applied to ``x' = A x + b u(t)`` is the exact linear recurrence
    ``x[n+1] = P x[n] + h/6 (W0 b u[n] + Wh b u[n+1/2] + b u[n+1])`` with
    polynomial ``P, W0, Wh`` in ``Z = hA``. The recurrence is run in the
    eigenbasis of ``P`` with a first-order IIR filter, so long grids cost no
    Python-level loop.
    """
    if dt is None:
        dt = 1e-3 / abs(params.chi)
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if dt > max_step(params) * (1 + 1e-12):
        raise StepSizeError(f"dt={dt} exceeds 0.01*min(1/kappa, 1/chi) = {max_step(params)}")
    n_steps = int(round(t_end / dt))
    if n_steps < 1 or abs(n_steps * dt - t_end) > 1e-9 * t_end:
        raise ValueError("t_end must be an integer multiple of dt")
    t = np.arange(n_steps + 1) * dt
    u = pulse.amplitude(t)
    u_mid = pulse.amplitude(t[:-1] + 0.5 * dt)
    b = drive_vector(params)
    eye = np.eye(2)
    alpha = np.zeros((qa.DIM, n_steps + 1), dtype=complex)
    beta = np.zeros_like(alpha)
    for mu, a_mat in enumerate(mode_matrices(params)):
        z = dt * a_mat
        z2 = z @ z
        z3 = z2 @ z
        prop = eye + z + z2 / 2 + z3 / 6 + z2 @ z2 / 24
        g0 = (eye + z + z2 / 2 + z3 / 4) @ b
        gh = (4 * eye + 2 * z + z2 / 2) @ b
        forcing = dt / 6 * (np.outer(g0, u[:-1]) + np.outer(gh, u_mid) + np.outer(b, u[1:]))
        x = _linear_recurrence(prop, forcing)
        alpha[mu], beta[mu] = x
    return PointerTable(t=t, alpha=alpha, beta=beta, kappa_a=params.kappa_a,
                        kappa_b=params.kappa_b, eps_ss=pulse.eps_ss)


def _linear_recurrence(prop: np.ndarray, forcing: np.ndarray) -> np.ndarray:
    """``x[0] = 0``, ``x[n+1] = prop @ x[n] + forcing[:, n]``; returns shape (2, N+1)."""
    lam, vecs = np.linalg.eig(prop)
    n = forcing.shape[1]
    if np.linalg.cond(vecs) > 1e8:
        x = np.zeros((2, n + 1), dtype=complex)
        for k in range(n):
            x[:, k + 1] = prop @ x[:, k] + forcing[:, k]
        return x
    g = np.linalg.solve(vecs, forcing)
    y = np.empty((2, n + 1), dtype=complex)
    for i in range(2):
        y[i] = lfilter([0.0, 1.0], [1.0, -lam[i]], np.append(g[i], 0.0))
    return vecs @ y


def steady_state_fields(params: SystemParams, eps_ss: float) -> tuple[np.ndarray, np.ndarray]:
    """Zero of the amplitude ODE at constant drive, per label."""
    mats = mode_matrices(params)
    rhs = -drive_vector(params) * eps_ss
    alpha = np.empty(qa.DIM, dtype=complex)
    beta = np.empty(qa.DIM, dtype=complex)
    for mu, m in enumerate(mats):
        scale = np.max(np.abs(m)) ** 2
        if abs(np.linalg.det(m)) < 1e-14 * scale:
            raise SingularSteadyState(f"steady-state system singular for label {qa.LABELS[mu]}")
        alpha[mu], beta[mu] = np.linalg.solve(m, rhs)
    return alpha, beta


def steady_state_sigma(params: SystemParams, eps_ss: float) -> np.ndarray:
    alpha, beta = steady_state_fields(params, eps_ss)
    return math.sqrt(params.kappa_a) * alpha + math.sqrt(params.kappa_b) * beta


def symmetric_sigma_closed_form(kappa: float, delta: float, shift, eps_ss: float = 1.0):
    """Closed form ``2 eps kappa c / (delta^2 - c^2 + i kappa c)`` of the symmetric steady state."""
    c = np.asarray(shift, dtype=float)
    return 2 * eps_ss * kappa * c / (delta**2 - c**2 + 1j * kappa * c)


def measured_quadrature(z, phi: float):
    """Quadrature seen by the homodyne current, ``Re(z e^{-i phi})``.

    At ``phi = pi/2`` this is ``Im(z)``; an eigenstate current is ``2 sqrt(eta)`` times it.
    """
    return np.real(np.asarray(z) * np.exp(-1j * phi))


def calibrate_lo_phase(params: SystemParams, tol: float = 1e-9) -> float:
    """Smallest ``phi`` in [0, 2 pi) with equal quadratures inside each parity and ``q_even = -q_odd``.

    Raises :class:`CalibrationError` when no phase satisfies the conditions,
    i.e. when the parameters are off the parity-readout locus.
    """
    sig = steady_state_sigma(params, 1.0)
    even = sig[list(qa.EVEN)]
    odd = sig[list(qa.ODD)]
    scale = max(np.max(np.abs(sig)), 1e-300)
    constraints = np.concatenate([even[1:] - even[0], odd[1:] - odd[0], [even[0] + odd[0]]])
    nonzero = constraints[np.abs(constraints) > tol * scale]
    if len(nonzero):
        base = np.angle(nonzero[0]) + np.pi / 2
        candidates = np.mod(base + np.array([0.0, np.pi]), 2 * np.pi)
        # rounding can park the zero phase just below 2 pi
        candidates[candidates > 2 * np.pi - 1e-12] = 0.0
    else:
        candidates = np.array([0.0, np.pi / 2, np.pi, 3 * np.pi / 2])
    for phi in np.sort(candidates):
        if np.all(np.abs(measured_quadrature(constraints, phi)) <= tol * scale):
            q_e = measured_quadrature(even[0], phi)
            if abs(q_e) > tol * scale:
                return float(phi)
    raise CalibrationError("parameters are off the parity-readout locus; no LO phase satisfies the conditions")


def sign_calibration(table: PointerTable, phi: float) -> int:
    """+1 if even-parity records integrate to positive ``s`` under ``phi``, else -1."""
    q = measured_quadrature(table.sigma_out, phi)
    even = q[list(qa.EVEN)].mean(axis=0)
    odd = q[list(qa.ODD)].mean(axis=0)
    diff = np.trapezoid(even - odd, table.t)
    if diff == 0:
        raise CalibrationError("even and odd pointer fields give identical mean records")
    return 1 if diff > 0 else -1


# Representative labels of the four distinct shifts -3, -1, +1, +3 (in units of chi)
SHIFT_LABELS = {"000": -3, "001": -1, "011": 1, "111": 3}


@dataclass
class ScanReport:
    kappas: np.ndarray
    deltas: np.ndarray
    surface: list[tuple]  # (kappa, delta, label, re, im) per unit drive
    locus: list[dict]  # measured-quadrature coincidence points
    full_locus: list[dict]  # subset where the orthogonal quadrature also coincides
    reference: dict
    phi: float

    def write_surface_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["kappa", "delta", "label", "re_sigma", "im_sigma"])
            for row in self.surface:
                w.writerow([repr(float(row[0])), repr(float(row[1])), row[2], repr(float(row[3])), repr(float(row[4]))])

    def summary(self) -> dict:
        return {"phi": self.phi, "locus": self.locus, "full_locus": self.full_locus, "reference": self.reference}


def _symmetric_sigmas(kappa: float, delta: float, chi: float) -> dict[str, complex]:
    params = SystemParams.symmetric(kappa=kappa, delta=delta, chi=chi, calibrate=False)
    sig = steady_state_sigma(params, 1.0)
    return {lab: complex(sig[qa.label_index(lab)]) for lab in SHIFT_LABELS}


def _within_parity_gaps(kappa: float, delta: float, chi: float, phi: float) -> tuple[float, float]:
    s = _symmetric_sigmas(kappa, delta, chi)
    # odd pair (+3, -1); the even pair (+1, -3) mirrors it by Sigma(-c) = -Sigma(c)*
    gap = s["111"] - s["001"]
    return float(measured_quadrature(gap, phi)), float(measured_quadrature(gap, phi + np.pi / 2))


def parity_condition_scan(
    kappa_range: tuple[float, float] = (0.5, 5.0),
    delta_range: tuple[float, float] = (0.1, 5.0),
    n_kappa: int = 19,
    n_delta: int = 50,
    chi: float = 1.0,
    phi: float = 0.0,
    tol: float = 1e-9,
) -> ScanReport:
    """Grid scan of the symmetric configuration for within-parity coincidence.

    For each grid kappa, sign changes of the measured-quadrature gap along
    the delta axis are refined by bisection. Roots whose gap falls below
    ``tol`` (per unit drive) form the locus; those where the orthogonal
    quadrature also coincides form the full locus.
    """
    kappas = np.linspace(*kappa_range, n_kappa) if n_kappa > 0 else np.array([])
    deltas = np.linspace(*delta_range, n_delta) if n_delta > 0 else np.array([])
    surface = []
    locus: list[dict] = []
    full: list[dict] = []
    for kappa in kappas:
        gaps = []
        for delta in deltas:
            params = SystemParams.symmetric(kappa=kappa, delta=delta, chi=chi, calibrate=False)
            sig = steady_state_sigma(params, 1.0)
            for mu, lab in enumerate(qa.LABELS):
                surface.append((kappa, delta, lab, sig[mu].real, sig[mu].imag))
            gaps.append(_within_parity_gaps(kappa, delta, chi, phi)[0])
        for i in range(len(deltas)):
            roots = []
            if gaps[i] == 0.0:
                roots.append(deltas[i])
            elif i + 1 < len(deltas) and np.sign(gaps[i]) != np.sign(gaps[i + 1]) and gaps[i + 1] != 0.0:
                roots.append(_bisect(lambda d: _within_parity_gaps(kappa, d, chi, phi)[0], deltas[i], deltas[i + 1]))
            elif 0 < i < len(deltas) - 1 and abs(gaps[i]) < min(abs(gaps[i - 1]), abs(gaps[i + 1])) \
                    and np.sign(gaps[i - 1]) == np.sign(gaps[i]) == np.sign(gaps[i + 1]):
                # double roots touch zero without a sign change
                roots.append(_touch_root(lambda d: _within_parity_gaps(kappa, d, chi, phi)[0], deltas[i - 1], deltas[i + 1]))
            for d in roots:
                g, g_orth = _within_parity_gaps(kappa, d, chi, phi)
                if abs(g) >= tol:
                    continue
                point = {"kappa": float(kappa), "delta": float(d), "gap": g, "orth_gap": g_orth}
                locus.append(point)
                if abs(g_orth) < tol:
                    full.append(point)
    ref = {"kappa": 2.0 * chi, "delta": math.sqrt(3.0) * chi}
    g, g_orth = _within_parity_gaps(ref["kappa"], ref["delta"], chi, phi)
    ref.update(gap=g, orth_gap=g_orth, on_locus=bool(abs(g) < tol), on_full_locus=bool(abs(g) < tol and abs(g_orth) < tol))
    return ScanReport(kappas, deltas, surface, locus, full, ref, phi)


def _bisect(f, lo: float, hi: float, iters: int = 200) -> float:
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _touch_root(f, lo: float, hi: float) -> float:
    """Extremum of ``f`` in [lo, hi]: bisection on the central-difference slope."""
    h = 1e-6 * (hi - lo)

    def slope(d):
        return f(d + h) - f(d - h)

    a, b = lo + h, hi - h
    if np.sign(slope(a)) == np.sign(slope(b)):
        return float(minimize_scalar(lambda d: abs(f(d)), bounds=(lo, hi), method="bounded").x)
    return _bisect(slope, a, b)


def measurement_rates(table: PointerTable, eta: float, phi: float) -> tuple[np.ndarray, np.ndarray]:
    """Parity and intra-parity measurement rates ``eta q(xi)^2``, ``eta q(delta)^2``."""
    return (
        eta * measured_quadrature(table.xi, phi) ** 2,
        eta * measured_quadrature(table.delta, phi) ** 2,
    )


def intra_parity_leakage(
    params: SystemParams,
    sigmas: Iterable[float],
    eps_ss: float = 1.0,
    dt: float | None = None,
    settle: float = 200.0,
) -> np.ndarray:
    """Trapezoidal ``int |q(delta(t))| dt`` for arctan pulses of each rise rate.

    The window runs to ``t_on + settle/sigma`` (at least ``50/kappa`` past
    the turn-on) so the slow arctan tail is captured.
    """
    out = []
    kappa = min(params.kappa_a, params.kappa_b)
    for sigma in sigmas:
        pulse = DrivePulse(eps_ss=eps_ss, sigma=sigma)
        step = dt if dt is not None else max_step(params) / 2
        span = pulse.t_on + max(settle / sigma, 50.0 / kappa)
        t_end = math.ceil(span / step) * step
        table = integrate_pointer_fields(params, pulse, t_end, step)
        q = np.abs(measured_quadrature(table.delta, params.phi_lo))
        out.append(float(np.trapezoid(q, table.t)))
    return np.array(out)


def physical_backout(chi: float, gamma_p: float) -> tuple[float, float]:
    """Detuning and coupling from ``chi = g^2/Delta`` with Purcell rate ``gamma_p = 4 chi^2/Delta``."""
    if gamma_p <= 0:
        raise ValueError("gamma_p must be positive")
    return 4 * chi**2 / gamma_p, math.sqrt(4 * chi**3 / gamma_p)


__all__: Sequence[str] = [
    "SystemParams", "DrivePulse", "PointerTable", "StepSizeError", "SingularSteadyState",
    "CalibrationError", "drive_amplitude", "integrate_pointer_fields", "steady_state_fields",
    "steady_state_sigma", "symmetric_sigma_closed_form", "measured_quadrature",
    "calibrate_lo_phase", "sign_calibration", "parity_condition_scan", "ScanReport",
    "measurement_rates", "intra_parity_leakage", "physical_backout",
]
