"""Accuracy under distortion, reported in the shape of a robustness table.

A report holds clean top-1 accuracy, accuracy at each of the five levels of
every distortion family with the family mean, and the overall score: the
plain mean of the clean accuracy and the family means.

Distorted test images are regenerated on the fly from a fixed seed, keyed
by family name, level index and image index, so two models evaluated with
the same seed see exactly the same corrupted pixels. This module never
touches the training augmentation.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .distortions import KINDS, DistortionSpec, Kind, distort, get_profile, level_grid
from .errors import DataError
from .nn import ModelParams, predict
from .rng import stream

COLUMN_TITLES = {
    "clean": "Original",
    Kind.GAUSSIAN_NOISE: "Gauss. Noise",
    Kind.SALT_PEPPER: "Salt and Pepper",
    Kind.SPECKLE: "Speckle",
    Kind.GAUSSIAN_BLUR: "Gauss. Blur",
    Kind.MOTION_BLUR: "Motion Blur",
    "overall": "Overall Accu.",
}


@dataclass
class FamilyResult:
    levels: list[float]
    accuracies: list[float]

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))


@dataclass
class EvalReport:
    clean_accuracy: float
    per_family: dict[Kind, FamilyResult] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def overall(self) -> float:
        return float(np.mean([self.clean_accuracy] + [f.mean for f in self.per_family.values()]))

    def columns(self) -> list:
        return ["clean"] + list(self.per_family) + ["overall"]

    def row(self) -> list[float]:
        return [self.clean_accuracy] + [f.mean for f in self.per_family.values()] + [self.overall]

    def to_dict(self) -> dict:
        return {
            "clean_accuracy": self.clean_accuracy,
            "per_family": {
                k.value: {"levels": f.levels, "accuracies": f.accuracies, "mean": f.mean}
                for k, f in self.per_family.items()
            },
            "overall": self.overall,
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        fams = {}
        for name in d["per_family"]:
            f = d["per_family"][name]
            fams[Kind(name)] = FamilyResult(list(f["levels"]), list(f["accuracies"]))
        # keep table column order regardless of key order in the file
        fams = {k: fams[k] for k in KINDS if k in fams}
        return cls(d["clean_accuracy"], fams, d.get("meta", {}))

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls.from_dict(json.loads(text))

    def to_csv(self, name: str = "model") -> str:
        return compare_reports({name: self}).to_csv()


def _predictor(model) -> tuple[Callable, int | None]:
    if isinstance(model, ModelParams):
        return (lambda x: predict(model, x)), model.config.num_classes
    return model, getattr(model, "num_classes", None)


def distorted_testset(images: np.ndarray, spec: DistortionSpec, level_index: int, seed: int,
                      profile="small") -> np.ndarray:
    """The distorted copy of ``images`` that :func:`evaluate` scores."""
    kind = Kind(spec.kind)
    return np.stack([
        distort(img, spec, stream(seed, "distort", kind.value, level_index, i), profile)
        for i, img in enumerate(images)
    ])


def evaluate(model, images, labels, profile="small", families=KINDS, seed: int = 0) -> EvalReport:
    """Score ``model`` on the clean test set and on every (family, level) variant.

    ``model`` is a :class:`ModelParams` or any callable mapping an image
    batch to predicted labels (it may carry a ``num_classes`` attribute).
    """
    images = np.asarray(images)
    labels = np.asarray(labels, dtype=np.int64)
    if len(images) == 0:
        raise DataError("empty test set")
    if len(images) != len(labels):
        raise DataError(f"{len(images)} images but {len(labels)} labels")
    run, num_classes = _predictor(model)
    if num_classes is not None and labels.max() >= num_classes:
        raise DataError(f"test labels reach {labels.max()} but the model has {num_classes} classes")

    profile = get_profile(profile)

    def accuracy(x):
        return float(np.mean(np.asarray(run(x)) == labels))

    report = EvalReport(accuracy(images), meta={
        "profile": profile.name, "seed": seed, "n_images": len(images),
    })
    wanted = {Kind(f) for f in families}
    for kind in (k for k in KINDS if k in wanted):
        grid = level_grid(kind, profile)
        accs = [accuracy(distorted_testset(images, spec, i, seed, profile))
                for i, spec in enumerate(grid)]
        report.per_family[kind] = FamilyResult([s.level for s in grid], accs)
    return report


@dataclass
class ComparisonTable:
    columns: list
    rows: dict[str, list[float]]

    def winners(self) -> list[str]:
        """Name of the best model in each column (first listed wins ties)."""
        names = list(self.rows)
        return [max(names, key=lambda n: (self.rows[n][j], -names.index(n)))
                for j in range(len(self.columns))]

    def deltas(self, a: str, b: str) -> list[float]:
        return [x - y for x, y in zip(self.rows[a], self.rows[b])]

    def to_csv(self, mark_best: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["CNN Model"] + [COLUMN_TITLES[c] for c in self.columns])
        best = self.winners() if mark_best and len(self.rows) > 1 else []
        for name, values in self.rows.items():
            cells = []
            for j, v in enumerate(values):
                cell = f"{100 * v:.2f}"
                if best and best[j] == name:
                    cell += "*"
                cells.append(cell)
            w.writerow([name] + cells)
        return buf.getvalue()


def compare_reports(reports: dict[str, EvalReport]) -> ComparisonTable:
    """Line up reports with identical families and levels side by side."""
    if not reports:
        raise ValueError("nothing to compare")
    items = list(reports.items())
    ref = items[0][1]
    for name, r in items[1:]:
        if list(r.per_family) != list(ref.per_family) or any(
                r.per_family[k].levels != ref.per_family[k].levels for k in ref.per_family):
            raise ValueError(f"report {name!r} has different families or levels")
    return ComparisonTable(ref.columns(), {name: r.row() for name, r in items})
