import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from fockscatter.errors import DomainError
from fockscatter.polarization import (DEFAULT_ZONES, default_profiles, north_south_isometry,
                                      polarization_bases)

coords = st.floats(-3.0, 3.0, allow_nan=False)


def test_north_pole_frame_orthonormal():
    k = np.array([0.0, 0.0, 1.0])
    e1, e2, _ = polarization_bases(k, "north")
    frame = np.array([e1, e2, k])
    assert np.allclose(frame @ frame.T, np.eye(3))


def test_equator_rotation_orthogonal():
    e1, e2, R = polarization_bases(np.array([1.0, 0.0, 0.0]), "north")
    assert R is not None
    assert np.allclose(R.T @ R, np.eye(2))


def test_excluded_direction_raises():
    with pytest.raises(DomainError):
        polarization_bases(np.array([0.0, 0.0, -1.0]), "north")
    with pytest.raises(DomainError):
        polarization_bases(np.array([0.0, 0.0, 1.0]), "south")


@given(coords, coords, coords, st.sampled_from(["north", "south"]))
def test_frames_transverse_and_orthonormal(x, y, z, system):
    k = np.array([x, y, z])
    assume(not DEFAULT_ZONES.contains(k, system))
    e1, e2, R = polarization_bases(k, system)
    khat = k / np.linalg.norm(k)
    frame = np.array([e1, e2, khat])
    assert np.allclose(frame @ frame.T, np.eye(3), atol=1e-12)
    if R is not None:
        assert np.allclose(R.T @ R, np.eye(2), atol=1e-12)
        other = "south" if system == "north" else "north"
        f1, f2, _ = polarization_bases(k, other)
        north, south = ([e1, e2], [f1, f2]) if system == "north" else ([f1, f2], [e1, e2])
        for lam in range(2):
            rebuilt = sum(south[mu] * R[mu, lam] for mu in range(2))
            assert np.allclose(rebuilt, north[lam], atol=1e-12)


def test_default_profiles_give_isometry(rng):
    m = 0.5
    k = rng.normal(size=(300, 3))
    k *= (m + rng.uniform(0.0, 3.0, size=(300, 1))) / np.linalg.norm(k, axis=1, keepdims=True)
    rep = north_south_isometry(*default_profiles(m), k, m)
    assert rep.n_samples == 300
    assert rep.max_residual <= 1e-12


def test_violating_profiles_report_residual():
    k = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.2]])
    rep = north_south_isometry(lambda k: 0.6, lambda k: 0.6, k, 0.5)
    assert np.allclose(rep.residuals, abs(0.72 - 1.0))


def test_profile_in_excluded_zone_raises():
    k = np.array([[0.0, 0.0, -2.0]])
    with pytest.raises(DomainError):
        north_south_isometry(lambda k: 1.0, lambda k: 0.0, k, 0.5)
