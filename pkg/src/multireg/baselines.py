"""Multi-model baselines: sequential RANSAC and T-Linkage."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import Clustering
from .geometry import CorrespondenceSet, RigidTransform, make_rng
from .horn import horn_register


@dataclass(frozen=True)
class RansacConfig:
    inlier_threshold: float
    max_trials: int = 100
    min_model_inliers: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.inlier_threshold <= 0:
            raise ValueError("inlier_threshold must be positive")
        if self.max_trials < 1:
            raise ValueError("max_trials must be at least 1")
        if self.min_model_inliers < 3:
            raise ValueError("min_model_inliers must be at least 3")


@dataclass(frozen=True)
class TLinkageConfig:
    tau_t: float
    tau: float
    num_hypotheses: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.tau_t <= 0:
            raise ValueError("tau_t must be positive")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.num_hypotheses < 0:
            raise ValueError("num_hypotheses must be nonnegative")


def ransac_single(cs: CorrespondenceSet, active_indices, cfg: RansacConfig,
                  rng: np.random.Generator | None = None):
    """Fit one rigid motion to the active points by consensus.

    Runs ``max_trials`` minimal 3-point fits, keeps the trial with the most
    points within ``inlier_threshold`` of its model (ties go to the earliest
    trial), and refits with Horn on that trial's full inlier set. Returns
    (transform, inlier indices), or None when the best consensus is below
    ``min_model_inliers``.
    """
    active = np.asarray(active_indices, dtype=np.intp).reshape(-1)
    if active.size < 3:
        raise ValueError("need at least 3 active correspondences")
    rng = make_rng(cfg.seed) if rng is None else rng
    a_act, b_act = cs.a[active], cs.b[active]

    best_count = -1
    best_mask = None
    for _ in range(cfg.max_trials):
        pick = rng.choice(active.size, size=3, replace=False)
        est = horn_register(cs.subset(active[pick]))
        residual = b_act - est.transform.apply(a_act)
        mask = np.linalg.norm(residual, axis=1) <= cfg.inlier_threshold
        count = int(mask.sum())
        if count > best_count:
            best_count = count
            best_mask = mask
    if best_count < cfg.min_model_inliers:
        return None
    inliers = active[best_mask]
    refit = horn_register(cs.subset(inliers))
    return refit.transform, inliers


def sequential_ransac(cs: CorrespondenceSet, cfg: RansacConfig) -> Clustering:
    """Extract rigid motions greedily until no consensus remains.

    Each accepted model claims its inliers as the next cluster and removes
    them; whatever is left unexplained keeps label 0.
    """
    labels = np.zeros(len(cs), dtype=np.int64)
    rng = make_rng(cfg.seed)
    active = np.arange(len(cs), dtype=np.intp)
    next_id = 1
    while active.size >= max(3, cfg.min_model_inliers):
        result = ransac_single(cs, active, cfg, rng)
        if result is None:
            break
        _, inliers = result
        labels[inliers] = next_id
        next_id += 1
        active = active[~np.isin(active, inliers)]
    return Clustering(labels, num_clusters=next_id - 1)


def tlinkage_preference(cs: CorrespondenceSet, point_index: int,
                        hypothesis: RigidTransform, cfg: TLinkageConfig) -> float:
    """Preference of one point for one hypothesis: exponential decay of the
    residual, zeroed beyond the 5*tau gate."""
    residual = float(np.linalg.norm(cs.b[point_index] - hypothesis.apply(cs.a[point_index])))
    if residual > 5.0 * cfg.tau:
        return 0.0
    return float(np.exp(-residual / cfg.tau_t))


def _preference_matrix(cs: CorrespondenceSet, hypotheses, cfg: TLinkageConfig) -> np.ndarray:
    prefs = np.empty((len(cs), len(hypotheses)))
    for h, transform in enumerate(hypotheses):
        residual = np.linalg.norm(cs.b - transform.apply(cs.a), axis=1)
        prefs[:, h] = np.where(residual <= 5.0 * cfg.tau, np.exp(-residual / cfg.tau_t), 0.0)
    return prefs


def tanimoto_distance(u, v) -> float:
    """1 - <u,v> / (|u|^2 + |v|^2 - <u,v>); two zero vectors are at distance 1."""
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if u.shape != v.shape:
        raise ValueError("preference vectors must have equal length")
    dot = float(u @ v)
    denom = float(u @ u) + float(v @ v) - dot
    if denom <= 0.0:
        return 1.0
    return 1.0 - dot / denom


def tlinkage_cluster(cs: CorrespondenceSet, initial: Clustering,
                     cfg: TLinkageConfig) -> Clustering:
    """Agglomerate initial clusters by Tanimoto distance between preferences.

    Hypotheses are Horn fits on minimal samples drawn within single initial
    clusters; a cluster's preference vector is the element-wise minimum over
    its members. The closest pair below distance 1 merges (merged preference
    = element-wise min) until every remaining pair is orthogonal. The result
    is always a coarsening of the initial partition; zero hypotheses return
    the initial clustering unchanged.
    """
    rng = make_rng(cfg.seed)
    groups = [initial.members(j) for j in range(1, initial.num_clusters + 1)]
    groups = [g for g in groups if g.size > 0]
    eligible = [g for g in groups if g.size >= 3]

    hypotheses = []
    if cfg.num_hypotheses > 0 and eligible:
        for _ in range(cfg.num_hypotheses):
            g = eligible[int(rng.integers(len(eligible)))]
            pick = rng.choice(g.size, size=3, replace=False)
            hypotheses.append(horn_register(cs.subset(g[pick])).transform)
    if not hypotheses:
        return Clustering(initial.labels, num_clusters=initial.num_clusters)

    point_prefs = _preference_matrix(cs, hypotheses, cfg)
    members = [g for g in groups]
    prefs = [point_prefs[g].min(axis=0) for g in members]

    while len(members) > 1:
        best = None
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                d = tanimoto_distance(prefs[i], prefs[j])
                if d < 1.0 and (best is None or d < best[0]):
                    best = (d, i, j)
        if best is None:
            break
        _, i, j = best
        members[i] = np.sort(np.concatenate([members[i], members[j]]))
        prefs[i] = np.minimum(prefs[i], prefs[j])
        del members[j]
        del prefs[j]

    order = sorted(range(len(members)),
                   key=lambda c: (-members[c].size, int(members[c][0])))
    labels = np.zeros(len(cs), dtype=np.int64)
    for new_id, c in enumerate(order, start=1):
        labels[members[c]] = new_id
    return Clustering(labels, num_clusters=len(members))
