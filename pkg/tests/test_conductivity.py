import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from perihom.conductivity import (
    ConductivityProfile,
    ContrastFamily,
    KirchhoffMap,
    NotProportionalError,
    detect_proportionality,
    eval_lambda,
    interface_map,
    kirchhoff_forward,
    kirchhoff_inverse,
    reference_family,
)

FAM = reference_family()
MATRIX = FAM.matrix_profile
INCL = FAM.inclusion_profiles[0]


def test_profile_values():
    assert eval_lambda(MATRIX, 0.0) == 13.5
    assert eval_lambda(INCL, 0.0) == 150.0
    assert eval_lambda(MATRIX, 5.0) == 4.5
    assert eval_lambda(MATRIX, -7.0) == 4.5
    assert eval_lambda(MATRIX, 1.0) == pytest.approx(9.0)


def test_profile_rejects_nonpositive_values():
    with pytest.raises(ValueError):
        ConductivityProfile((0.0, 1.0), (1.0, 0.0))
    with pytest.raises(ValueError):
        ConductivityProfile((1.0, 0.0), (1.0, 2.0))


@pytest.mark.parametrize("T", [0.0, 2.0, 3.0, -1.3, 0.7, -4.0])
def test_forward_matches_quadrature(T):
    # independent check: adaptive quadrature of lambda
    ref = quad(MATRIX, 0.0, T, points=[-2.0, 0.0, 2.0] if abs(T) > 0 else None)[0] if T else 0.0
    assert kirchhoff_forward(FAM.matrix_map, T) == pytest.approx(ref, abs=1e-12)


def test_forward_frozen_values():
    assert kirchhoff_forward(FAM.matrix_map, 2.0) == pytest.approx(18.0, abs=1e-13)
    assert kirchhoff_forward(FAM.matrix_map, 3.0) == pytest.approx(22.5, abs=1e-13)
    assert kirchhoff_inverse(FAM.inclusion_map(0), 200.0) == pytest.approx(2.0, abs=1e-13)
    assert kirchhoff_inverse(FAM.inclusion_map(0), 0.0) == 0.0


def test_roundtrip_random():
    T = np.random.default_rng(1).uniform(-10, 10, 10_000)
    for kmap in (FAM.matrix_map, FAM.inclusion_map(0)):
        assert np.abs(kmap.inverse(kmap.forward(T)) - T).max() < 1e-12


def test_derivative_identity():
    rng = np.random.default_rng(2)
    T = rng.uniform(-6, 6, 1000)
    T = T[np.min(np.abs(T[:, None] - np.array([-2.0, 0.0, 2.0])), axis=1) > 1e-4]
    h = 1e-5
    fd = (FAM.matrix_map.forward(T + h) - FAM.matrix_map.forward(T - h)) / (2 * h)
    assert np.abs(fd / MATRIX(T) - 1).max() < 1e-6


def test_breakpoint_values():
    assert np.allclose(FAM.matrix_map.breakpoint_values, [-18.0, 0.0, 18.0])


def test_interface_map_linear():
    assert interface_map(FAM, 0, 200.0) == pytest.approx(18.0, abs=1e-13)
    assert interface_map(FAM, 0, 0.0) == 0.0
    xi = np.linspace(-1000, 1000, 4001)
    assert np.abs(interface_map(FAM, 0, xi) - 0.09 * xi).max() < 1e-12


def test_interface_map_derivative():
    T = np.array([-3.0, -1.1, 0.4, 1.7, 2.9])
    xi = FAM.inclusion_map(0).forward(T)
    h = 1e-4
    fd = (interface_map(FAM, 0, xi + h) - interface_map(FAM, 0, xi - h)) / (2 * h)
    assert np.abs(fd / (MATRIX(T) / INCL(T)) - 1).max() < 1e-5


def test_identical_profiles_identity_map():
    fam = ContrastFamily(MATRIX, (MATRIX,))
    xi = np.linspace(-50, 50, 11)
    assert np.allclose(interface_map(fam, 0, xi), xi, atol=1e-13)


def test_detect_proportionality():
    assert detect_proportionality(MATRIX, INCL) == pytest.approx(0.09, abs=1e-14)
    assert detect_proportionality(MATRIX, MATRIX) == pytest.approx(1.0)
    assert detect_proportionality(MATRIX, ConductivityProfile.constant(150.0)) is None


def test_non_proportional_family_is_rejected():
    fam = ContrastFamily(MATRIX, (ConductivityProfile.constant(150.0),))
    assert not fam.proportional
    with pytest.raises(NotProportionalError):
        fam.require_proportional()


def test_differing_breakpoints_are_refined():
    a = ConductivityProfile((0.0, 2.0), (1.0, 3.0))
    b = ConductivityProfile((0.0, 1.0, 2.0), (2.0, 4.0, 6.0))
    assert detect_proportionality(a, b) == pytest.approx(0.5)
    c = ConductivityProfile((0.0, 1.0, 2.0), (2.0, 5.0, 6.0))
    assert detect_proportionality(a, c) is None


profiles = st.lists(st.floats(0.1, 100.0), min_size=1, max_size=6).flatmap(
    lambda ys: st.tuples(
        st.lists(st.floats(-10, 10), min_size=len(ys), max_size=len(ys), unique=True).map(sorted),
        st.just(ys),
    )
)


@settings(max_examples=100, deadline=None)
@given(profiles, st.lists(st.floats(-30, 30), min_size=2, max_size=20))
def test_map_monotone_and_invertible(profile, temps):
    x, y = profile
    if len(x) > 1 and np.min(np.diff(x)) < 1e-3:
        return
    kmap = KirchhoffMap(ConductivityProfile(tuple(x), tuple(y)))
    T = np.sort(np.unique(np.asarray(temps)))
    # strict growth is only observable above the float resolution of the offsets
    T = T[np.concatenate([[True], np.diff(T) > 1e-9 * (1 + np.abs(x).max() + np.abs(T).max())])]
    u = kmap.forward(T)
    assert kmap.forward(0.0) == 0.0
    assert np.all(np.diff(u) > 0)
    assert np.allclose(kmap.inverse(u), T, atol=1e-9 * max(1.0, np.abs(T).max()))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 10.0), st.floats(-1e3, 1e3))
def test_proportional_interface_map_exact(scale, xi):
    fam = ContrastFamily(MATRIX, (MATRIX.scaled(scale),))
    assert interface_map(fam, 0, xi) == pytest.approx(xi / scale, rel=1e-12, abs=1e-12)
