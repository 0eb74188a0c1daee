import numpy as np
import pytest

from conftest import brute_force_connected
from multireg.clustering import (Clustering, check_initial_clustering,
                                 connected_components, distance_to_cluster,
                                 euclidean_cluster, fragment_connected_set,
                                 is_connected)
from multireg.geometry import CorrespondenceSet


def test_distance_to_cluster_examples():
    assert distance_to_cluster([(0, 0, 0)], (3, 4, 0)) == pytest.approx(5.0)
    assert distance_to_cluster([(1, 2, 3), (4, 5, 6)], (1, 2, 3)) == 0.0
    assert distance_to_cluster([(0, 0, 0), (10, 0, 0)], (6, 0, 0)) == pytest.approx(4.0)
    assert distance_to_cluster(np.empty((0, 3)), (0, 0, 0)) == float("inf")


def test_is_connected_chain():
    chain = [(0, 0, 0), (0.5, 0, 0), (1.0, 0, 0)]
    assert is_connected(chain, 0.6)
    assert not is_connected(chain, 0.4)
    assert is_connected([], 0.5)
    assert is_connected([(1, 1, 1)], 0.5)


def test_is_connected_matches_bruteforce(rng):
    for trial in range(40):
        n = int(rng.integers(2, 200))
        pts = rng.uniform(-1, 1, (n, 3))
        tau = float(rng.uniform(0.05, 0.8))
        assert is_connected(pts, tau) == brute_force_connected(pts, tau), (trial, n, tau)


def test_euclidean_cluster_two_blobs(rng):
    blob1 = rng.uniform(0, 0.5, (30, 3))
    blob2 = rng.uniform(5, 5.5, (20, 3))
    cs = CorrespondenceSet(np.vstack([blob1, blob2]), np.vstack([blob1, blob2]))
    clustering = euclidean_cluster(cs, tau=1.0)
    assert clustering.num_clusters == 2
    # labeled by decreasing size
    np.testing.assert_array_equal(clustering.labels[:30], 1)
    np.testing.assert_array_equal(clustering.labels[30:], 2)


def test_euclidean_cluster_single_chain():
    pts = np.array([(i * 0.4, 0, 0) for i in range(10)])
    cs = CorrespondenceSet(pts, pts)
    clustering = euclidean_cluster(cs, tau=0.5)
    assert clustering.num_clusters == 1
    np.testing.assert_array_equal(clustering.labels, 1)


def test_euclidean_cluster_tie_breaks_by_first_index():
    pts = np.array([(0, 0, 0), (10, 0, 0), (0.1, 0, 0), (10.1, 0, 0)])
    cs = CorrespondenceSet(pts, pts)
    clustering = euclidean_cluster(cs, tau=0.5)
    # equal sizes: the component containing index 0 gets id 1
    assert clustering.labels[0] == 1
    assert clustering.labels[1] == 2


def test_euclidean_cluster_output_invariants(rng):
    pts = rng.uniform(-2, 2, (300, 3))
    tau = 0.35
    cs = CorrespondenceSet(pts, pts)
    clustering = euclidean_cluster(cs, tau)
    assert np.all(clustering.labels >= 1)
    # each cluster tau-connected; distinct clusters more than tau apart
    for j in range(1, clustering.num_clusters + 1):
        assert is_connected(pts[clustering.members(j)], tau)
    for i in range(1, clustering.num_clusters + 1):
        for j in range(i + 1, clustering.num_clusters + 1):
            pi, pj = pts[clustering.members(i)], pts[clustering.members(j)]
            gap = np.min(np.linalg.norm(pi[:, None, :] - pj[None, :, :], axis=2))
            assert gap > tau


def test_connected_components_matches_label_partition(rng):
    pts = rng.uniform(-1, 1, (120, 3))
    comp, count = connected_components(pts, 0.3)
    assert comp.min() >= 0 and comp.max() == count - 1
    assert len(np.unique(comp)) == count


def test_fragment_single_target():
    pts = np.array([(i * 0.1, 0, 0) for i in range(7)])
    assignment = fragment_connected_set(pts, 0.15, [7], seed=0)
    np.testing.assert_array_equal(assignment, 0)


def test_fragment_line_six_three():
    tau = 0.4
    pts = np.array([(i * tau / 2, 0, 0) for i in range(9)])
    assignment = fragment_connected_set(pts, tau, [6, 3], seed=1)
    sizes = np.bincount(assignment)
    np.testing.assert_array_equal(sizes, [6, 3])
    for j in range(2):
        assert is_connected(pts[assignment == j], tau)
    # on a line, connected fragments are contiguous runs
    labels_sorted = assignment[np.argsort(pts[:, 0])]
    assert np.count_nonzero(labels_sorted[1:] != labels_sorted[:-1]) == 1


def test_fragment_bad_targets():
    pts = np.array([(i * 0.1, 0, 0) for i in range(5)])
    with pytest.raises(ValueError):
        fragment_connected_set(pts, 0.15, [3, 3], seed=0)  # wrong sum
    with pytest.raises(ValueError):
        fragment_connected_set(pts, 0.15, [5, 0], seed=0)  # empty fragment


def test_fragment_infeasible_star_errors():
    # center plus three rays: any connected pair must contain the center, so
    # a {2, 2} split leaves a disconnected remainder no matter the seeds
    tau = 1.0
    pts = np.array([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)], dtype=float)
    with pytest.raises(ValueError, match="connected fragments"):
        fragment_connected_set(pts, tau, [2, 2], seed=3, max_retries=8)


def _toy_scene_arrays(rng):
    obj1 = rng.uniform(0, 0.5, (40, 3))
    obj2 = rng.uniform(5, 5.5, (40, 3))
    pts = np.vstack([obj1, obj2])
    truth = np.array([1] * 40 + [2] * 40)
    return pts, truth


def test_check_initial_clustering_passes_on_dominant_split(rng):
    pts, truth = _toy_scene_arrays(rng)
    # object 1 split 30/10, object 2 kept whole
    labels = np.array([1] * 30 + [2] * 10 + [3] * 40)
    report = check_initial_clustering(Clustering(labels), pts, truth,
                                      tau=1.0, alpha=2.0, min_size=10)
    assert report.passed
    assert report.object_dominance[0] == pytest.approx(3.0)
    assert report.object_dominance[1] == float("inf")


def test_check_initial_clustering_equal_fragments_fail(rng):
    pts, truth = _toy_scene_arrays(rng)
    labels = np.array([1] * 20 + [2] * 20 + [3] * 40)
    report = check_initial_clustering(Clustering(labels), pts, truth,
                                      tau=1.0, alpha=2.0, min_size=10)
    assert not report.passed
    assert not report.object_dominance_ok[0]


def test_check_initial_clustering_straddling_cluster_fails(rng):
    pts, truth = _toy_scene_arrays(rng)
    labels = np.array([1] * 40 + [1] * 10 + [2] * 30)
    report = check_initial_clustering(Clustering(labels), pts, truth,
                                      tau=1.0, alpha=2.0, min_size=10)
    assert not report.passed
    assert not report.cluster_pure[0]
    # the straddling cluster is also disconnected at this tau
    assert not report.cluster_connected[0]


def test_check_initial_clustering_small_cluster_fails(rng):
    pts, truth = _toy_scene_arrays(rng)
    labels = np.array([1] * 35 + [2] * 5 + [3] * 40)
    report = check_initial_clustering(Clustering(labels), pts, truth,
                                      tau=1.0, alpha=2.0, min_size=10)
    assert not report.passed
    assert report.cluster_size_ok == (True, False, True)


def test_clustering_validation_and_compact():
    clustering = Clustering([1, 1, 3, 0], num_clusters=3)
    np.testing.assert_array_equal(clustering.sizes(), [1, 2, 0, 1])
    compacted = clustering.compact()
    np.testing.assert_array_equal(compacted.labels, [1, 1, 2, 0])
    assert compacted.num_clusters == 2
    with pytest.raises(ValueError):
        Clustering([-1, 0, 1])
    with pytest.raises(ValueError):
        Clustering([0, 5], num_clusters=3)
