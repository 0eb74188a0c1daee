"""Synthetic labeled scenes: several rigidly moving blobs plus gross outliers.

Each object's source points are a bounded random walk with step <= tau/2, so
every object is tau-connected by construction. Object blobs are placed with
gaps larger than ``separation_margin`` (> tau) and everything stays inside
the ball of radius ``bound_b``. Targets are the rigidly moved sources plus
per-coordinate uniform noise on [-sigma, sigma]. An outlier pair has its
source farther than tau from every object and an arbitrary target drawn from
a ball of radius 3 * bound_b.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .clustering import (Clustering, connected_components, fragment_connected_set,
                         is_connected)
from .geometry import CorrespondenceSet, RigidTransform, make_rng, random_point_in_ball, random_rotation

# Objects are confined to balls of this radius (in units of tau) around their
# centers, which keeps the separation bookkeeping simple.
_BLOB_RADIUS_FACTOR = 2.0
# Outlier sources keep at least this many tau of clearance from every object.
_OUTLIER_CLEARANCE_FACTOR = 1.5


class InfeasibleSceneError(RuntimeError):
    """Raised when the requested scene cannot be packed into the bounding ball."""


@dataclass(frozen=True)
class SceneSpec:
    """Parameters of a synthetic scene; identical specs generate identical scenes."""

    num_objects: int
    points_per_object: tuple[int, ...]
    sigma: float
    tau: float
    bound_b: float
    num_outliers: int = 0
    separation_margin: float | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "points_per_object", tuple(int(p) for p in self.points_per_object))
        if self.num_objects < 1:
            raise ValueError("need at least one object")
        if len(self.points_per_object) != self.num_objects:
            raise ValueError("points_per_object length must equal num_objects")
        if any(p < 1 for p in self.points_per_object):
            raise ValueError("every object needs at least one point")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.bound_b <= 0:
            raise ValueError("bound_b must be positive")
        if self.num_outliers < 0:
            raise ValueError("num_outliers must be nonnegative")
        if self.separation_margin is None:
            object.__setattr__(self, "separation_margin", 2.0 * self.tau)
        if self.separation_margin <= self.tau:
            raise ValueError("separation_margin must exceed tau")

    @property
    def total_points(self) -> int:
        return sum(self.points_per_object) + self.num_outliers


@dataclass(frozen=True, eq=False)
class LabeledScene:
    """Ground truth: correspondences, per-index labels (0 = outlier), true motions."""

    correspondences: CorrespondenceSet
    true_labels: np.ndarray
    true_transforms: tuple[RigidTransform, ...]
    spec: SceneSpec

    def __post_init__(self):
        labels = np.array(self.true_labels, dtype=np.int64).reshape(-1)
        labels.flags.writeable = False
        object.__setattr__(self, "true_labels", labels)
        object.__setattr__(self, "true_transforms", tuple(self.true_transforms))
        if len(self.correspondences) != labels.shape[0]:
            raise ValueError("labels must match correspondence count")

    @property
    def num_objects(self) -> int:
        return len(self.true_transforms)

    def object_indices(self, object_id: int) -> np.ndarray:
        return np.flatnonzero(self.true_labels == object_id)

    def outlier_indices(self) -> np.ndarray:
        return np.flatnonzero(self.true_labels == 0)


@dataclass(frozen=True)
class SceneReport:
    """Pass/fail per generative condition, with the measured slack."""

    noise_bound_ok: bool
    separation_ok: bool
    point_bound_ok: bool
    outliers_ok: bool
    connectivity_ok: bool
    max_noise_residual: float
    min_object_gap: float
    max_point_norm: float
    min_outlier_clearance: float
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "passed", self.noise_bound_ok and self.separation_ok
                           and self.point_bound_ok and self.outliers_ok and self.connectivity_ok)


def _random_walk_blob(rng: np.random.Generator, center: np.ndarray, count: int,
                      tau: float, radius: float) -> np.ndarray:
    pts = np.empty((count, 3))
    x = center.copy()
    pts[0] = x
    for k in range(1, count):
        direction = rng.standard_normal(3)
        norm = np.linalg.norm(direction)
        while norm < 1e-12:
            direction = rng.standard_normal(3)
            norm = np.linalg.norm(direction)
        x = x + direction / norm * rng.uniform(0.0, tau / 2.0)
        off = x - center
        dist = np.linalg.norm(off)
        if dist > radius:
            x = center + off * (radius / dist)
        pts[k] = x
    return pts


def _place_centers(rng: np.random.Generator, count: int, avail_radius: float,
                   min_gap: float, tries: int) -> np.ndarray | None:
    centers: list[np.ndarray] = []
    for _ in range(tries):
        cand = random_point_in_ball(rng, avail_radius)
        if all(np.linalg.norm(cand - c) >= min_gap for c in centers):
            centers.append(cand)
            if len(centers) == count:
                return np.array(centers)
    return None


def generate_scene(spec: SceneSpec, max_attempts: int = 64) -> LabeledScene:
    """Generate a scene realizing every SceneSpec condition, or raise.

    Generation is rejected and retried until ``validate_scene`` passes;
    persistent failure (e.g. blobs that cannot be packed into the bounding
    ball with the required gaps) raises InfeasibleSceneError.
    """
    rng = make_rng(spec.seed)
    blob_radius = _BLOB_RADIUS_FACTOR * spec.tau
    avail_radius = spec.bound_b - blob_radius
    if avail_radius < 0:
        raise InfeasibleSceneError("infeasible scene spec")
    min_gap = spec.separation_margin + 2.0 * blob_radius

    for _ in range(max_attempts):
        centers = _place_centers(rng, spec.num_objects, avail_radius, min_gap,
                                 tries=200 * spec.num_objects)
        if centers is None:
            continue
        blobs = [_random_walk_blob(rng, centers[j], spec.points_per_object[j],
                                   spec.tau, blob_radius)
                 for j in range(spec.num_objects)]
        transforms = []
        b_parts = []
        for blob in blobs:
            rot = random_rotation(rng)
            t = random_point_in_ball(rng, spec.bound_b)
            transform = RigidTransform(rot, t)
            noise = rng.uniform(-spec.sigma, spec.sigma, size=blob.shape)
            b_parts.append(transform.apply(blob) + noise)
            transforms.append(transform)

        object_points = np.vstack(blobs)
        outlier_a = _place_outliers(rng, spec, object_points)
        if outlier_a is None:
            continue
        outlier_b = (random_point_in_ball(rng, 3.0 * spec.bound_b, spec.num_outliers)
                     if spec.num_outliers else np.empty((0, 3)))

        a = np.vstack([object_points, outlier_a])
        b = np.vstack(b_parts + [outlier_b])
        labels = np.concatenate([
            np.repeat(np.arange(1, spec.num_objects + 1),
                      [spec.points_per_object[j] for j in range(spec.num_objects)]),
            np.zeros(spec.num_outliers, dtype=np.int64),
        ])
        scene = LabeledScene(CorrespondenceSet(a, b), labels, tuple(transforms), spec)
        if validate_scene(scene).passed:
            return scene
    raise InfeasibleSceneError("infeasible scene spec")


def _place_outliers(rng: np.random.Generator, spec: SceneSpec,
                    object_points: np.ndarray) -> np.ndarray | None:
    if spec.num_outliers == 0:
        return np.empty((0, 3))
    clearance = _OUTLIER_CLEARANCE_FACTOR * spec.tau
    out = np.empty((spec.num_outliers, 3))
    for i in range(spec.num_outliers):
        for _ in range(500):
            cand = random_point_in_ball(rng, spec.bound_b)
            if np.min(np.linalg.norm(object_points - cand, axis=1)) >= clearance:
                out[i] = cand
                break
        else:
            return None
    return out


def validate_scene(scene: LabeledScene, atol: float = 1e-12) -> SceneReport:
    """Check every generative condition of the scene by brute force."""
    spec = scene.spec
    a, b = scene.correspondences.a, scene.correspondences.b
    labels = scene.true_labels

    max_noise = 0.0
    connectivity_ok = True
    object_sets = []
    for g in range(1, scene.num_objects + 1):
        idx = scene.object_indices(g)
        object_sets.append(a[idx])
        if idx.size:
            residual = b[idx] - scene.true_transforms[g - 1].apply(a[idx])
            max_noise = max(max_noise, float(np.abs(residual).max()))
        if not is_connected(a[idx], spec.tau):
            connectivity_ok = False
    noise_ok = max_noise <= spec.sigma + atol

    min_gap = float("inf")
    for i in range(len(object_sets)):
        for j in range(i + 1, len(object_sets)):
            if object_sets[i].size and object_sets[j].size:
                min_gap = min(min_gap, float(cdist(object_sets[i], object_sets[j]).min()))
    separation_ok = min_gap > spec.tau

    max_norm = float(np.linalg.norm(a, axis=1).max()) if len(a) else 0.0
    point_bound_ok = max_norm <= spec.bound_b + atol

    outlier_idx = scene.outlier_indices()
    min_clearance = float("inf")
    if outlier_idx.size:
        for pts in object_sets:
            if pts.size:
                min_clearance = min(min_clearance, float(cdist(a[outlier_idx], pts).min()))
    outliers_ok = min_clearance > spec.tau

    return SceneReport(
        noise_bound_ok=noise_ok,
        separation_ok=separation_ok,
        point_bound_ok=point_bound_ok,
        outliers_ok=outliers_ok,
        connectivity_ok=connectivity_ok,
        max_noise_residual=max_noise,
        min_object_gap=min_gap,
        max_point_norm=max_norm,
        min_outlier_clearance=min_clearance,
    )


def make_good_split(scene: LabeledScene, alpha: float, fragments_per_object: int,
                    seed) -> Clustering:
    """Split each object into connected fragments with one dominant fragment.

    With k fragments per object the dominant one gets roughly a 2*alpha : 1
    share against each of the others, so its size strictly exceeds alpha
    times every sibling. Outliers (if any) are grouped into their own
    tau-connected clusters. The result satisfies ``check_initial_clustering``
    at the requested alpha whenever every fragment clears the size floor.
    """
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    k = int(fragments_per_object)
    if k < 1:
        raise ValueError("fragments_per_object must be at least 1")

    rng = make_rng(seed)
    labels = np.zeros(len(scene.correspondences), dtype=np.int64)
    next_id = 1
    for g in range(1, scene.num_objects + 1):
        idx = scene.object_indices(g)
        n_g = idx.size
        if k == 1:
            sizes = [n_g]
        else:
            small = int(n_g // (2.0 * alpha + (k - 1)))
            big = n_g - (k - 1) * small
            if small < 1 or big <= alpha * small:
                raise ValueError(
                    f"object {g} with {n_g} points is too small to split into "
                    f"{k} fragments at dominance ratio {alpha}")
            sizes = [big] + [small] * (k - 1)
        fragment = fragment_connected_set(scene.correspondences.a[idx], scene.spec.tau,
                                          sizes, rng)
        labels[idx] = next_id + fragment
        next_id += k

    outlier_idx = scene.outlier_indices()
    if outlier_idx.size:
        comp, count = connected_components(scene.correspondences.a[outlier_idx], scene.spec.tau)
        labels[outlier_idx] = next_id + comp
        next_id += count

    return Clustering(labels, num_clusters=next_id - 1)
