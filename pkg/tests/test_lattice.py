import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levarray import (
    ArrayConfig,
    BeamParams,
    CorrelationState,
    DissipationSpec,
    SphereParams,
    build_model,
    kick_occupations,
    thermal_state,
)
from levarray.lattice import UnstableTrapError

from conftest import BASE_TRAP, PAPER_WAVELENGTH, beam_at


def _config(n_sites=15, theta=np.pi / 2, model="full_long_range", freqs=BASE_TRAP,
            spacing=PAPER_WAVELENGTH, matrix=None):
    return ArrayConfig(
        n_sites=n_sites,
        spacing=spacing,
        beam=beam_at(theta),
        sphere=SphereParams(200e-9),
        trap_frequencies=freqs,
        coupling_model=model,
        coupling_matrix=matrix,
    )


def test_two_site_eigenvalues_are_omega_plus_minus_g():
    model = build_model(_config(n_sites=2))
    omega = model.w[0, 0]
    g = model.w[0, 1]
    eig = np.sort(np.linalg.eigvalsh(model.w))
    assert eig == pytest.approx(np.sort([omega - abs(g), omega + abs(g)]), rel=1e-12)


def test_paper_coupling_profile(paper_array):
    model = build_model(paper_array)
    g = model.w - np.diag(np.diag(model.w))
    row = g[0, 1:]
    assert np.all(row < 0)  # one common sign, no alternation
    assert np.all(np.diff(np.abs(row)) < 0)  # monotone decay
    assert 4 < row[0] / row[6] < 9  # roughly 1/|i-j|


def test_nearest_neighbor_tag_gives_tridiagonal():
    model = build_model(_config(model="nearest_neighbor"))
    g = model.w - np.diag(np.diag(model.w))
    assert np.count_nonzero(g) == 2 * 14
    assert np.count_nonzero(np.diag(g, 1)) == 14


def test_next_nearest_tag_halves_second_hop():
    model = build_model(_config(model="next_nearest"))
    g = model.w - np.diag(np.diag(model.w))
    assert np.count_nonzero(g) == 2 * 14 + 2 * 13
    assert g[0, 2] == pytest.approx(g[0, 1] / 2, rel=1e-12)


def test_inverse_square_tag_rescales_profile():
    model = build_model(_config(model="inverse_square"))
    g = model.w - np.diag(np.diag(model.w))
    for sep in range(2, 15):
        assert g[0, sep] == pytest.approx(g[0, 1] / sep**2, rel=1e-12)


def test_explicit_coupling_matrix_taken_as_given():
    g = np.zeros((4, 4))
    g[0, 3] = g[3, 0] = 123.0
    freqs = np.array([1.0e5, 2.0e5, 3.0e5, 4.0e5])
    model = build_model(_config(n_sites=4, freqs=freqs, matrix=g))
    assert np.array_equal(np.diag(model.w), freqs)  # no dressing
    assert model.w[0, 3] == 123.0


def test_asymmetric_override_rejected():
    g = np.zeros((4, 4))
    g[0, 1] = 1.0
    with pytest.raises(ValueError, match="symmetric"):
        _config(n_sites=4, matrix=g)


def test_build_model_deterministic(paper_array):
    a = build_model(paper_array)
    b = build_model(paper_array)
    assert np.array_equal(a.w, b.w)
    assert np.array_equal(a.l, b.l)
    assert np.array_equal(a.m, b.m)


@given(theta=st.floats(0.0, np.pi / 2))
@settings(max_examples=25, deadline=None)
def test_offdiagonal_mixing_at_fixed_frequencies(theta):
    # with the trap frequencies held fixed across theta the hopping matrix
    # interpolates exactly between the two polarization branches
    w_mix = build_model(_config(theta=theta), dress_frequencies=False).w
    w_par = build_model(_config(theta=0.0), dress_frequencies=False).w
    w_perp = build_model(_config(theta=np.pi / 2), dress_frequencies=False).w
    off = ~np.eye(15, dtype=bool)
    expected = w_perp[off] * np.sin(theta) ** 2 + w_par[off] * np.cos(theta) ** 2
    np.testing.assert_allclose(w_mix[off], expected, rtol=1e-12, atol=1e-16)


def test_dressed_frequencies_reduce_to_bare_without_coupling():
    cfg = ArrayConfig(
        n_sites=5,
        spacing=PAPER_WAVELENGTH,
        beam=BeamParams(0.0, 600e-9, 1550e-9),
        sphere=SphereParams(200e-9),
        trap_frequencies=BASE_TRAP,
    )
    model = build_model(cfg)
    np.testing.assert_allclose(np.diag(model.w), BASE_TRAP, rtol=1e-14)
    assert model.max_coupling == 0.0


def test_dressing_shifts_interior_sites_most(paper_array):
    omega = np.diag(build_model(paper_array).w)
    assert omega[7] > omega[0] > BASE_TRAP  # positive stiffness adds


def test_unstable_trap_rejected():
    # anti-restoring spacing with a feeble trap: total stiffness goes negative
    cfg = _config(freqs=1e4, spacing=0.6 * PAPER_WAVELENGTH)
    with pytest.raises(UnstableTrapError, match="site"):
        build_model(cfg)


def test_thermal_state_ground():
    state = thermal_state(np.zeros(4))
    assert state.trace() == 0.0
    assert np.all(state.c == 0)


def test_thermal_state_kick_profile():
    occ = kick_occupations(15, 7, magnitude=1e3, background=1e-2)
    state = thermal_state(occ)
    expected = np.full(15, 1e-2)
    expected[7] = 1e3
    assert np.array_equal(state.populations(), expected)
    assert state.trace() == pytest.approx(occ.sum(), rel=1e-15)
    assert np.count_nonzero(state.c - np.diag(np.diag(state.c))) == 0
    assert state.t == 0.0


def test_thermal_state_rejects_negative_occupation():
    with pytest.raises(ValueError):
        thermal_state(np.array([1.0, -0.1]))


def test_kick_occupations_bounds():
    with pytest.raises(ValueError):
        kick_occupations(5, 7)
    with pytest.raises(ValueError):
        kick_occupations(5, 1, magnitude=-1.0)


def test_correlation_state_validation():
    bad = np.array([[1.0, 0.5], [0.1, 1.0]], dtype=complex)  # not Hermitian
    with pytest.raises(ValueError, match="Hermitian"):
        CorrelationState(bad).validate()
    neg = np.diag([1.0, -0.5]).astype(complex)  # negative population
    with pytest.raises(ValueError, match="eigenvalue"):
        CorrelationState(neg).validate()


def test_gain_site_injects_no_thermal_quanta():
    spec = DissipationSpec(
        rates=np.array([0.0, 2.0, 3.0]),
        kinds=("none", "gain", "loss"),
        bath_occupations=np.array([0.0, 5.0, 7.0]),
    )
    model = build_model(_config(n_sites=3), spec)
    np.testing.assert_array_equal(np.diag(model.l), [0.0, +1.0, -1.5])
    np.testing.assert_array_equal(np.diag(model.m), [0.0, 0.0, 21.0])


def test_dissipation_spec_validation():
    with pytest.raises(ValueError):
        DissipationSpec(np.array([1.0]), ("loss", "loss"), np.array([0.0]))
    with pytest.raises(ValueError):
        DissipationSpec(np.array([-1.0]), ("loss",), np.array([0.0]))
    with pytest.raises(ValueError):
        DissipationSpec(np.array([1.0]), ("amplify",), np.array([0.0]))


def test_dissipation_length_mismatch_rejected(paper_array):
    with pytest.raises(ValueError, match="length"):
        build_model(paper_array, DissipationSpec.closed(4))
