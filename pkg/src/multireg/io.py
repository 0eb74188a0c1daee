"""Text file formats: scenes, clusterings, flat result records, bench CSV.

Everything is plain text with floats printed at 17 significant digits, which
round-trips doubles losslessly and keeps fixtures diffable. Writers are
deterministic: identical in-memory values produce identical bytes.
"""

from __future__ import annotations

import csv
import io as _io
import numpy as np

from .bounds import BoundTrial
from .clustering import Clustering
from .geometry import CorrespondenceSet, RigidTransform
from .scenes import LabeledScene, SceneSpec

SCENE_FORMAT_VERSION = 1
RESULT_FORMAT_VERSION = 1
BENCH_CSV_COLUMNS = ("m", "sigma", "B", "delta", "lambda_min", "err_rot",
                     "bound_rot", "err_trans", "bound_trans", "violated_flags")


def fmt_float(x) -> str:
    """Full-precision decimal representation (17 significant digits)."""
    return format(float(x), ".17g")


def scene_to_text(scene: LabeledScene) -> str:
    spec = scene.spec
    lines = [
        f"# version {SCENE_FORMAT_VERSION}",
        f"# n {len(scene.correspondences)}",
        f"# M {scene.num_objects}",
        f"# sigma {fmt_float(spec.sigma)}",
        f"# tau {fmt_float(spec.tau)}",
        f"# B {fmt_float(spec.bound_b)}",
        f"# seed {spec.seed}",
        f"# separation_margin {fmt_float(spec.separation_margin)}",
    ]
    a, b = scene.correspondences.a, scene.correspondences.b
    for i in range(len(scene.correspondences)):
        coords = " ".join(fmt_float(v) for v in (*a[i], *b[i]))
        lines.append(f"{coords} {scene.true_labels[i]}")
    for j, transform in enumerate(scene.true_transforms, start=1):
        values = " ".join(fmt_float(v) for v in
                          (*transform.rotation.reshape(-1), *transform.translation))
        lines.append(f"POSE {j} {values}")
    return "\n".join(lines) + "\n"


def write_scene(scene: LabeledScene, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(scene_to_text(scene))


def read_scene(path) -> LabeledScene:
    header: dict[str, str] = {}
    rows: list[list[str]] = []
    poses: dict[int, RigidTransform] = {}
    with open(path, "r", encoding="ascii") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split(None, 1)
                if len(parts) == 2:
                    header[parts[0]] = parts[1]
            elif line.startswith("POSE"):
                fields = line.split()
                j = int(fields[1])
                values = [float(v) for v in fields[2:]]
                if len(values) != 12:
                    raise ValueError(f"POSE line for object {j} must carry 12 numbers")
                poses[j] = RigidTransform(np.array(values[:9]).reshape(3, 3),
                                          np.array(values[9:]))
            else:
                rows.append(line.split())

    for key in ("version", "n", "M", "sigma", "tau", "B", "seed"):
        if key not in header:
            raise ValueError(f"scene file is missing header key '{key}'")
    n = int(header["n"])
    num_objects = int(header["M"])
    if len(rows) != n:
        raise ValueError(f"expected {n} correspondence lines, found {len(rows)}")
    if sorted(poses) != list(range(1, num_objects + 1)):
        raise ValueError("POSE lines must cover objects 1..M exactly once")

    a = np.array([[float(v) for v in r[0:3]] for r in rows])
    b = np.array([[float(v) for v in r[3:6]] for r in rows])
    labels = np.array([int(r[6]) for r in rows], dtype=np.int64)

    tau = float(header["tau"])
    counts = np.bincount(labels, minlength=num_objects + 1)
    spec = SceneSpec(
        num_objects=num_objects,
        points_per_object=tuple(int(c) for c in counts[1:num_objects + 1]),
        sigma=float(header["sigma"]),
        tau=tau,
        bound_b=float(header["B"]),
        num_outliers=int(counts[0]),
        separation_margin=float(header.get("separation_margin", 2.0 * tau)),
        seed=int(header["seed"]),
    )
    transforms = tuple(poses[j] for j in range(1, num_objects + 1))
    return LabeledScene(CorrespondenceSet(a, b), labels, transforms, spec)


def clustering_to_text(clustering) -> str:
    labels = clustering.labels if isinstance(clustering, Clustering) else np.asarray(clustering)
    return "".join(f"{int(v)}\n" for v in labels)


def write_clustering(clustering, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(clustering_to_text(clustering))


def read_clustering(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        labels = [int(line.strip()) for line in fh if line.strip()]
    return np.asarray(labels, dtype=np.int64)


def result_to_text(pairs) -> str:
    """Flat 'key = value' record; ``pairs`` is an ordered (key, value) iterable."""
    lines = []
    for key, value in pairs:
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def write_result(pairs, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(result_to_text(pairs))


def read_result(path) -> dict[str, str]:
    record: dict[str, str] = {}
    with open(path, "r", encoding="ascii") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            key, sep, value = line.partition(" = ")
            if not sep and line.endswith(" ="):  # empty value
                key, value = line[:-2], ""
            record[key] = value
    return record


def bench_csv_text(trials: list[BoundTrial]) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BENCH_CSV_COLUMNS)
    for t in trials:
        writer.writerow([
            t.m, fmt_float(t.sigma), fmt_float(t.bound_b), fmt_float(t.delta),
            fmt_float(t.lambda_min), fmt_float(t.rot_err_sq), fmt_float(t.rot_bound),
            fmt_float(t.trans_err_sq), fmt_float(t.trans_bound),
            f"{int(t.violated_rot)}{int(t.violated_trans)}",
        ])
    return buf.getvalue()


def write_bench_csv(trials: list[BoundTrial], path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(bench_csv_text(trials))


def read_bench_csv(path) -> list[dict[str, str]]:
    with open(path, "r", encoding="ascii") as fh:
        return list(csv.DictReader(fh))
