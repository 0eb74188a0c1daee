import numpy as np
import pytest

from multireg.geometry import (CorrespondenceSet, RigidTransform, geodesic_distance,
                               is_rotation, random_rotation, rotation_about_axis)


def test_apply_identity():
    t = RigidTransform.identity()
    np.testing.assert_array_equal(t.apply([1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])


def test_apply_quarter_turn_about_z():
    t = RigidTransform(rotation_about_axis([0, 0, 1], np.pi / 2), np.zeros(3))
    np.testing.assert_allclose(t.apply([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-15)


def test_apply_hand_computed_with_translation():
    # pi about x maps (0,1,0) to (0,-1,0); plus t=(1,1,1) gives (1,0,1)
    t = RigidTransform(rotation_about_axis([1, 0, 0], np.pi), np.ones(3))
    result = t.apply([0.0, 1.0, 0.0])
    np.testing.assert_allclose(result, [1.0, 0.0, 1.0], atol=1e-15)
    # cross-check by inverse round trip
    np.testing.assert_allclose(t.inverse().apply(result), [0.0, 1.0, 0.0], atol=1e-14)


def test_compose_identity_and_inverse():
    t = RigidTransform(random_rotation(5), np.array([0.3, -0.7, 1.1]))
    assert RigidTransform.identity().compose(t).almost_equal(t)
    assert t.compose(t.inverse()).almost_equal(RigidTransform.identity(), tol=1e-12)


def test_compose_matches_pointwise_application(rng):
    for seed in range(10):
        t1 = RigidTransform(random_rotation(seed), rng.uniform(-2, 2, 3))
        t2 = RigidTransform(random_rotation(seed + 100), rng.uniform(-2, 2, 3))
        composed = t1.compose(t2)
        points = rng.uniform(-5, 5, (100, 3))
        np.testing.assert_allclose(composed.apply(points), t1.apply(t2.apply(points)),
                                   atol=1e-12)


def test_compose_associative(rng):
    ts = [RigidTransform(random_rotation(s), rng.uniform(-1, 1, 3)) for s in range(3)]
    left = ts[0].compose(ts[1]).compose(ts[2])
    right = ts[0].compose(ts[1].compose(ts[2]))
    assert np.linalg.norm(left.rotation - right.rotation) <= 1e-12
    assert np.linalg.norm(left.translation - right.translation) <= 1e-12


def test_inverse_trivials_and_roundtrip(rng):
    assert RigidTransform.identity().inverse().almost_equal(RigidTransform.identity())
    shift = RigidTransform(np.eye(3), np.array([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(shift.inverse().translation, [-1.0, -2.0, -3.0])
    t = RigidTransform(random_rotation(9), rng.uniform(-3, 3, 3))
    points = rng.uniform(-5, 5, (100, 3))
    np.testing.assert_allclose(t.inverse().apply(t.apply(points)), points, atol=1e-12)


def test_geodesic_distance_examples():
    r = random_rotation(3)
    assert geodesic_distance(r, r) <= 1e-12
    assert geodesic_distance(np.eye(3), rotation_about_axis([1, 0, 0], np.pi)) == pytest.approx(np.pi)


def test_geodesic_axis_angle_oracle(rng):
    # axis-angle construction is its own oracle
    for _ in range(20):
        axis = rng.standard_normal(3)
        axis /= np.linalg.norm(axis)
        assert geodesic_distance(np.eye(3), rotation_about_axis(axis, 0.3)) == pytest.approx(0.3, abs=1e-12)


def test_geodesic_symmetry_and_left_invariance(rng):
    for seed in range(10):
        r1, r2, q = random_rotation(seed), random_rotation(seed + 50), random_rotation(seed + 99)
        d = geodesic_distance(r1, r2)
        assert geodesic_distance(r2, r1) == pytest.approx(d, abs=1e-12)
        assert geodesic_distance(q @ r1, q @ r2) == pytest.approx(d, abs=1e-12)


def test_geodesic_rejects_non_rotation():
    with pytest.raises(ValueError):
        geodesic_distance(np.eye(3) * 2.0, np.eye(3))


def test_random_rotation_invariants_and_determinism():
    for seed in range(100):
        r = random_rotation(seed)
        assert is_rotation(r, tol=1e-9)
    np.testing.assert_array_equal(random_rotation(42), random_rotation(42))


def test_random_rotation_mean_trace_is_haar():
    # Quadrature oracle over the Haar angle density (1-cos t)/pi gives
    # E[trace] = E[1 + 2 cos t] = 0 exactly; check the sampler agrees.
    angles = np.linspace(0.0, np.pi, 20001)
    density = (1.0 - np.cos(angles)) / np.pi
    expected = np.trapezoid((1.0 + 2.0 * np.cos(angles)) * density, angles)
    assert expected == pytest.approx(0.0, abs=1e-6)
    traces = [np.trace(random_rotation(seed)) for seed in range(10_000)]
    assert abs(np.mean(traces) - expected) <= 0.1


def test_correspondence_set_validation_and_subset(rng):
    a = rng.uniform(-1, 1, (10, 3))
    b = rng.uniform(-1, 1, (10, 3))
    cs = CorrespondenceSet(a, b)
    assert len(cs) == 10
    sub = cs.subset([2, 5, 7])
    np.testing.assert_array_equal(sub.a, a[[2, 5, 7]])
    with pytest.raises(ValueError):
        CorrespondenceSet(a, b[:5])
    bad = a.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        CorrespondenceSet(bad, b)


def test_rigid_transform_rejects_invalid_rotation():
    with pytest.raises(ValueError):
        RigidTransform(np.eye(3) * 1.5, np.zeros(3))
