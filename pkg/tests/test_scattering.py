import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levarray.scattering import (
    AsymmetryMap,
    ScatterParams,
    ScatteringSingularError,
    asymmetry_map,
    band_edges,
    nearest_zero_reflection_gamma,
    scatter,
    scatter_closed_form,
    scatter_numeric,
    wavevector,
    worker_count,
    zero_reflection_locus,
)


def test_band_edges():
    assert band_edges("nearest") == pytest.approx((-2.0, 2.0), abs=1e-6)
    assert band_edges("next_nearest") == pytest.approx((-1.5, 3.0), abs=1e-6)


def test_wavevector_nearest_midband():
    assert wavevector(0.0, "nearest") == pytest.approx(np.pi / 2, rel=1e-14)


def test_wavevector_nearest_band_top():
    assert wavevector(1.9999, "nearest") == pytest.approx(0.0, abs=0.02)


def test_wavevector_rejects_out_of_band():
    with pytest.raises(ValueError, match=r"band"):
        wavevector(2.5, "nearest")
    with pytest.raises(ValueError, match=r"-1.5"):
        wavevector(-1.7, "next_nearest")


def test_wavevector_next_nearest_dispersion_residual():
    kb = wavevector(0.0, "next_nearest")
    assert abs(2 * np.cos(kb) + np.cos(2 * kb)) < 1e-12
    # independent bisection oracle
    lo, hi = 1e-9, 2 * np.pi / 3
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if 2 * np.cos(mid) + np.cos(2 * mid) > 0:
            lo = mid
        else:
            hi = mid
    assert kb == pytest.approx(0.5 * (lo + hi), abs=1e-12)


def test_trivial_defect_is_reciprocal_closed_form():
    rng = np.random.default_rng(7)
    for delta in rng.uniform(-1.99, 1.99, size=25):
        sol = scatter_closed_form(ScatterParams(delta, 0.0))
        assert abs(sol.reflection) == 0.0
        assert abs(sol.transmission) == pytest.approx(1.0, abs=1e-12)


def test_closed_form_band_edge_rejected():
    with pytest.raises(ValueError, match="band"):
        scatter_closed_form(ScatterParams(1.9999999999999, 1.0))


def test_closed_form_zero_reflection_point():
    for delta in (-1.3, 0.0, 0.6, 1.7):
        gamma = nearest_zero_reflection_gamma(delta)
        gl = scatter_closed_form(ScatterParams(delta, gamma, "nearest", "gain_to_loss"))
        lg = scatter_closed_form(ScatterParams(delta, gamma, "nearest", "loss_to_gain"))
        assert abs(gl.reflection) < 1e-14
        assert abs(lg.reflection) > 0.1


def test_transmission_reciprocity_closed_form_exact():
    rng = np.random.default_rng(11)
    for _ in range(50):
        delta = rng.uniform(-1.95, 1.95)
        gamma = rng.uniform(-5, 5)
        lg = scatter_closed_form(ScatterParams(delta, gamma, "nearest", "loss_to_gain"))
        gl = scatter_closed_form(ScatterParams(delta, gamma, "nearest", "gain_to_loss"))
        assert lg.transmission == gl.transmission  # bitwise: shared even denominator


@given(
    delta=st.floats(-1.95, 1.95),
    gamma=st.floats(-5.0, 5.0),
)
@settings(max_examples=40, deadline=None)
def test_numeric_matches_closed_form(delta, gamma):
    for direction in ("loss_to_gain", "gain_to_loss"):
        p = ScatterParams(delta, gamma, "nearest", direction)
        cf = scatter_closed_form(p)
        nm = scatter_numeric(p)
        assert abs(cf.reflection - nm.reflection) < 1e-8
        assert abs(cf.transmission - nm.transmission) < 1e-8
        assert nm.residual < 1e-10


@given(delta=st.floats(-1.45, 2.95), gamma=st.floats(-4.0, 4.0))
@settings(max_examples=30, deadline=None)
def test_next_nearest_transmission_reciprocity(delta, gamma):
    lg = scatter_numeric(ScatterParams(delta, gamma, "next_nearest", "loss_to_gain"))
    gl = scatter_numeric(ScatterParams(delta, gamma, "next_nearest", "gain_to_loss"))
    assert abs(lg.transmission - gl.transmission) < 1e-8


def test_next_nearest_trivial_defect():
    rng = np.random.default_rng(13)
    for delta in rng.uniform(-1.45, 2.95, size=20):
        sol = scatter_numeric(ScatterParams(delta, 0.0, "next_nearest"))
        assert abs(sol.reflection) < 1e-8
        assert abs(abs(sol.transmission) - 1.0) < 1e-8


def test_elastic_unitarity_without_defect():
    rng = np.random.default_rng(17)
    for hopping in ("nearest", "next_nearest"):
        lo, hi = band_edges(hopping)
        for delta in rng.uniform(lo + 0.05, hi - 0.05, size=10):
            sol = scatter(ScatterParams(delta, 0.0, hopping))
            flow = abs(sol.reflection) ** 2 + abs(sol.transmission) ** 2
            assert flow == pytest.approx(1.0, abs=1e-8)


def test_window_doubling_leaves_coefficients_unchanged():
    for hopping in ("nearest", "next_nearest"):
        p = ScatterParams(0.7, 1.3, hopping, "loss_to_gain")
        a = scatter_numeric(p, chain_half_length=20)
        b = scatter_numeric(p, chain_half_length=40)
        assert abs(a.reflection - b.reflection) < 1e-10
        assert abs(a.transmission - b.transmission) < 1e-10


def test_numeric_residuals_small_in_two_channel_regime():
    # bottom of the next-nearest band opens a second propagating channel;
    # the closure must still satisfy every site equation
    sol = scatter_numeric(ScatterParams(-1.2, 0.8, "next_nearest"))
    assert sol.residual < 1e-10


def test_scatter_params_validation():
    with pytest.raises(ValueError):
        ScatterParams(2.5, 1.0, "nearest")
    with pytest.raises(ValueError):
        ScatterParams(0.0, 1.0, "sideways")
    with pytest.raises(ValueError):
        ScatterParams(0.0, 1.0, "nearest", "up")


# ---------------------------------------------------------------------------
# maps and loci


def test_eta_antisymmetric_under_rate_negation():
    deltas = np.linspace(-1.5, 1.5, 7)
    gammas = np.linspace(-4.0, 4.0, 9)  # symmetric grid including 0
    amap = asymmetry_map(deltas, gammas, "nearest", solver="closed_form")
    np.testing.assert_array_equal(amap.eta, -amap.eta[::-1, :])
    mid = len(gammas) // 2
    np.testing.assert_array_equal(amap.eta[mid], 0.0)  # Gamma = 0 indeterminate


def test_eta_extremal_on_zero_reflection_ridge():
    deltas = np.linspace(-1.6, 1.6, 21)
    gammas = np.linspace(0.5, 5.5, 41)
    amap = asymmetry_map(deltas, gammas, "nearest", solver="closed_form", eta_max=30)
    for j, d in enumerate(deltas):
        ridge = nearest_zero_reflection_gamma(d)
        i_star = int(np.argmin(np.abs(amap.eta[:, j])))  # most NEGATIVE eta
        i_star = int(np.argmin(amap.eta[:, j]))
        assert gammas[i_star] == pytest.approx(ridge, abs=(gammas[1] - gammas[0]))


def test_map_rejects_out_of_band_grid():
    with pytest.raises(ValueError, match="band"):
        asymmetry_map(np.array([0.0, 2.0]), np.array([1.0]), "nearest")


def test_map_numeric_thread_determinism(monkeypatch):
    deltas = np.linspace(-1.0, 1.0, 5)
    gammas = np.linspace(-2.0, 2.0, 5)
    serial = asymmetry_map(deltas, gammas, "nearest", solver="numeric", threads=1)
    threaded = asymmetry_map(deltas, gammas, "nearest", solver="numeric", threads=4)
    np.testing.assert_array_equal(serial.eta, threaded.eta)
    monkeypatch.setenv("PHONON_THREADS", "2")
    assert worker_count(8) == 2
    assert worker_count(1) == 1


def test_locus_nearest_reduction_matches_analytic():
    deltas = np.linspace(-1.8, 1.8, 7)
    locus = zero_reflection_locus(deltas, "nearest", solver="numeric")
    for d, g1, g2 in zip(deltas, locus.gamma1, locus.gamma2):
        assert g1 == pytest.approx(nearest_zero_reflection_gamma(d), abs=1e-6)
        assert np.isnan(g2)  # single branch in the positive-rate scan


def test_locus_next_nearest_signed_branches():
    deltas = np.array([-0.5, 0.0, 1.0, 2.0])
    locus = zero_reflection_locus(deltas, "next_nearest", signed_rates=True)
    assert np.all(np.isfinite(locus.gamma1))
    assert np.all(np.isfinite(locus.gamma2))
    assert np.all(locus.gamma1 > 0)
    assert np.all(locus.gamma2 < 0)
    # two genuinely distinct branch curves, and nonzero surviving reflectivity
    assert np.all(locus.beta_sq_residual1 > 1e-3)
    assert np.all(locus.beta_sq_residual2 > 1e-3)
    # on-locus amplified-side reflection vanishes
    for d, s in zip(deltas, locus.gamma1):
        direction = "gain_to_loss" if s > 0 else "loss_to_gain"
        sol = scatter_numeric(ScatterParams(d, s, "next_nearest", direction))
        assert abs(sol.reflection) < 1e-8


def test_locus_branch_absent_out_of_reach():
    # next-nearest: no positive-rate zero exists below the principal branch's
    # reach at the very bottom of the band (second channel open)
    locus = zero_reflection_locus(np.array([-1.2]), "next_nearest")
    assert np.isnan(locus.gamma1[0])
