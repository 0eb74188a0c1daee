"""Multi-model rigid point-cloud registration.

Given correspondences generated by several rigidly moving objects plus
outliers, recover every object's motion and the point-to-object assignment.
The package bundles the classification-EM segmenter, a closed-form
single-model solver, sequential-RANSAC and T-Linkage baselines, evaluation
metrics, a seeded synthetic-scene generator, and Monte-Carlo benches for the
finite-sample error bounds.
"""

__version__ = "0.1.0"

from .clustering import Clustering, euclidean_cluster, is_connected
from .em import EMConfig, EMResult, run_em
from .geometry import CorrespondenceSet, RigidTransform
from .horn import HornEstimate, horn_register
from .metrics import EvalReport, evaluate
from .scenes import LabeledScene, SceneSpec, generate_scene, make_good_split

__all__ = [
    "Clustering",
    "CorrespondenceSet",
    "EMConfig",
    "EMResult",
    "EvalReport",
    "HornEstimate",
    "LabeledScene",
    "RigidTransform",
    "SceneSpec",
    "__version__",
    "euclidean_cluster",
    "evaluate",
    "generate_scene",
    "horn_register",
    "is_connected",
    "make_good_split",
    "run_em",
]
