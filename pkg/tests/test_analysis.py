import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paritysme import analysis as an
from paritysme import pointer_fields as pf
from paritysme import qubit_algebra as qa


def constant_table(sigma, t_end=4.0, dt=0.01):
    """Table whose output field is ``sigma`` (per label) at every time."""
    t = np.arange(int(round(t_end / dt)) + 1) * dt
    alpha = np.repeat(np.asarray(sigma, complex)[:, None], len(t), axis=1)
    return pf.PointerTable(t=t, alpha=alpha, beta=np.zeros_like(alpha), kappa_a=1.0, kappa_b=1.0)


SIG = np.array([1 - 1j if mu in qa.EVEN else -1 - 1j for mu in range(8)])


@pytest.mark.parametrize("s, s_th, sign, label", [
    (2.0, 1.0, 1, an.Outcome.EVEN),
    (-2.0, 1.0, 1, an.Outcome.ODD),
    (0.5, 1.0, 1, an.Outcome.INCONCLUSIVE),
    (1.0, 1.0, 1, an.Outcome.INCONCLUSIVE),
    (2.0, 1.0, -1, an.Outcome.ODD),
    (0.0, 0.0, 1, an.Outcome.INCONCLUSIVE),
])
def test_classify(s, s_th, sign, label):
    assert an.classify(s, s_th, sign).label is label
    assert an.classify_array([s], s_th, sign)[0] == {an.Outcome.EVEN: 1, an.Outcome.ODD: -1,
                                                      an.Outcome.INCONCLUSIVE: 0}[label]


def test_classify_rejects_bad_arguments():
    with pytest.raises(ValueError):
        an.classify(1.0, -0.1, 1)
    with pytest.raises(ValueError):
        an.classify(1.0, 0.1, 0)
    with pytest.raises(ValueError):
        an.classify_array([1.0], 0.1, 2)


@settings(max_examples=50, deadline=None)
@given(s=st.floats(-100, 100), s_th=st.floats(0, 50), sign=st.sampled_from([1, -1]))
def test_classify_antisymmetric(s, s_th, sign):
    a = an.classify(s, s_th, sign).label
    b = an.classify(-s, s_th, sign).label
    swap = {an.Outcome.EVEN: an.Outcome.ODD, an.Outcome.ODD: an.Outcome.EVEN,
            an.Outcome.INCONCLUSIVE: an.Outcome.INCONCLUSIVE}
    assert swap[a] is b


def test_empirical_snr_formula():
    even = [1.0, 2.0, 3.0]
    odd = [-1.0, -3.0]
    expected = (2.0 + 2.0) / math.sqrt(1.0 + 2.0)
    assert an.empirical_snr(even, odd) == pytest.approx(expected)
    with pytest.raises(ValueError):
        an.empirical_snr([1.0], odd)


def test_conditional_means_constant_field():
    table = constant_table(SIG)
    m_e, m_o = an.conditional_means(table, an.parity_weights(qa.psi_pre()), 4.0, eta=0.5, phi=0.0)
    assert m_e == pytest.approx(2 * math.sqrt(0.5) * 4.0)
    assert m_o == pytest.approx(-2 * math.sqrt(0.5) * 4.0)
    assert an.predicted_snr(table, an.parity_weights(qa.psi_pre()), 4.0, 0.5, 0.0) == pytest.approx(
        4 * math.sqrt(0.5) * 4.0 / math.sqrt(8.0))
    model = an.gaussian_model(table, 4.0, 0.5, 0.0)
    assert model.std == pytest.approx(2.0)
    assert np.trapezoid(model.pdf(np.linspace(-30, 30, 4001), 1), np.linspace(-30, 30, 4001)) == pytest.approx(1.0)


def test_conditional_means_need_both_sectors():
    with pytest.raises(ValueError):
        an.conditional_means(constant_table(SIG), an.parity_weights(qa.basis_state(0)), 1.0, 1.0, 0.0)


def test_ideal_snr_reference_point(ref_params):
    eps = 2 * math.sqrt(1 / 20)
    assert an.ideal_snr(ref_params, eps, 20.0) == pytest.approx(4 * math.sqrt(2))
    assert an.ideal_snr(ref_params, 1 / math.sqrt(10), 10.0) == pytest.approx(2 * math.sqrt(2))
    assert an.ideal_snr(ref_params, eps, 20.0, eta=0.5) == pytest.approx(4.0)


def test_predicted_snr_below_ideal_with_ring_up(ref_params):
    eps = 2 * math.sqrt(1 / 20)
    table = pf.integrate_pointer_fields(ref_params, pf.DrivePulse(eps), 20.0)
    pred = an.predicted_snr(table, an.parity_weights(qa.psi_pre()), 20.0, 1.0, 0.0)
    assert 0.8 * an.ideal_snr(ref_params, eps, 20.0) < pred < an.ideal_snr(ref_params, eps, 20.0)


def _states():
    plus = qa.pure_density(qa.psi_plus())
    minus = qa.pure_density(qa.psi_minus())
    mixed = 0.5 * (plus + minus)
    return np.array([plus, plus, minus, mixed]), np.array([3.0, 0.5, -2.0, 4.0])


def test_conditional_fidelity_by_hand():
    states, s = _states()
    res = an.conditional_fidelity(states, s, 1.0, 1)
    assert res.n_even == 2 and res.n_odd == 1 and res.n_inconclusive == 1
    assert res.F_plus == pytest.approx(math.sqrt(0.75))
    assert res.F_minus == pytest.approx(1.0)
    assert res.accepted_fraction == pytest.approx(0.75)


def test_empty_outcome_is_undefined():
    states, s = _states()
    res = an.conditional_fidelity(states, s, 100.0, 1)
    assert res.F_plus is None and res.F_minus is None
    assert res.accepted_fraction == 0.0


def test_threshold_sweep_is_reproducible():
    rng = np.random.default_rng(0)
    states = np.array([qa.pure_density(qa.psi_plus() if k % 2 else qa.psi_minus()) for k in range(60)])
    s = np.where(np.arange(60) % 2, 1.0, -1.0) * 3 + rng.normal(size=60)
    grid = [0.0, 1.0, 2.0]
    a = an.threshold_sweep(states, s, grid, 1, n_boot=50, seed=4)
    b = an.threshold_sweep(states, s, grid, 1, n_boot=50, seed=4)
    assert a == b
    assert [p.accepted_fraction for p in a] == sorted((p.accepted_fraction for p in a), reverse=True)
    assert a[0].F_plus_err is not None and a[0].F_plus_err >= 0


def test_histogram_counts():
    s = np.array([-3.0, -2.5, 0.1, 2.0, 2.2, 2.9])
    parity = np.array([-1, -1, 1, 1, 1, 1])
    rows = an.histogram_rows(s, parity, edges=[-4, 0, 4])
    assert rows == [(-4.0, 0.0, 0, 2), (0.0, 4.0, 4, 0)]
    auto = an.histogram_rows(s, parity)
    assert sum(r[2] + r[3] for r in auto) == len(s)


def test_true_parity():
    states = np.array([qa.pure_density(qa.basis_state(l)) for l in ("000", "001", "110", "111")])
    assert list(an.true_parity(states)) == [1, -1, 1, -1]


def test_report_keys(ref_params):
    states, s = _states()
    rep = an.report(s=s, final_states=states, s_th=0.0, sign_cal=1, snr_predicted=1.0, snr_ideal=2.0)
    assert set(rep) == {"snr_empirical", "snr_predicted", "snr_ideal", "F_plus", "F_minus", "accepted_fraction", "s_th"}
