"""Illumination-dependent segmentation quality model.

Per shape class, a small lux-indexed table of segmentation failure rate,
mean mask IoU, and mean stereo depth error (percent).  Intermediate lux
values are linearly interpolated; queries outside the table clamp to the
end rows.  The default tables encode the measured degradation of a
promptable segmenter on regular (sphere/cube) and sea-animal shaped
targets in a dim water tank.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import UnknownShapeClass, ValidationError

REGULAR = "regular"
SEA_ANIMAL = "sea_animal"

# lux -> value, sparse rows
DEFAULT_TABLES: dict[str, dict[str, dict[float, float]]] = {
    REGULAR: {
        "failure_rate": {2.0: 0.70, 4.0: 0.12, 6.0: 0.02, 8.0: 0.0, 25.0: 0.0},
        "mean_iou": {2.0: 0.75, 25.0: 0.90},
        "depth_error_pct": {2.0: 5.5, 4.0: 5.42, 25.0: 4.0},
    },
    SEA_ANIMAL: {
        # failures vanish from 10 lux up, slightly worse than regular below
        "failure_rate": {2.0: 0.75, 4.0: 0.16, 6.0: 0.04, 8.0: 0.01, 10.0: 0.0, 25.0: 0.0},
        "mean_iou": {2.0: 0.60, 25.0: 0.80},
        "depth_error_pct": {2.0: 9.0, 25.0: 1.5},
    },
}


def _interp(table: dict[float, float], lux: float) -> float:
    xs = sorted(table)
    if lux <= xs[0]:
        return table[xs[0]]
    if lux >= xs[-1]:
        return table[xs[-1]]
    for lo, hi in zip(xs, xs[1:]):
        if lo <= lux <= hi:
            w = (lux - lo) / (hi - lo)
            return table[lo] * (1.0 - w) + table[hi] * w
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class IlluminationModel:
    """Lux-indexed degradation tables per shape class."""

    tables: dict[str, dict[str, dict[float, float]]]

    def __post_init__(self):
        for cls, rows in self.tables.items():
            for key in ("failure_rate", "mean_iou", "depth_error_pct"):
                if key not in rows or not rows[key]:
                    raise ValidationError(f"missing row {key}", field=cls)
            fr = rows["failure_rate"]
            xs = sorted(fr)
            for lo, hi in zip(xs, xs[1:]):
                if fr[hi] > fr[lo]:
                    raise ValidationError(
                        "failure rate must not increase with lux", field=cls
                    )
            for key in ("failure_rate", "mean_iou"):
                if any(not 0.0 <= v <= 1.0 for v in rows[key].values()):
                    raise ValidationError(f"{key} outside [0,1]", field=cls)

    @staticmethod
    def default() -> "IlluminationModel":
        return IlluminationModel(DEFAULT_TABLES)

    @staticmethod
    def from_json(path) -> "IlluminationModel":
        with open(path) as fh:
            raw = json.load(fh)
        tables = {
            cls: {k: {float(lux): float(v) for lux, v in row.items()} for k, row in rows.items()}
            for cls, rows in raw.items()
        }
        return IlluminationModel(tables)

    def _rows(self, shape_class: str) -> dict[str, dict[float, float]]:
        try:
            return self.tables[shape_class]
        except KeyError:
            raise UnknownShapeClass(shape_class) from None

    def failure_rate(self, shape_class: str, lux: float) -> float:
        return _interp(self._rows(shape_class)["failure_rate"], lux)

    def mean_iou(self, shape_class: str, lux: float) -> float:
        return _interp(self._rows(shape_class)["mean_iou"], lux)

    def depth_error_pct(self, shape_class: str, lux: float) -> float:
        return _interp(self._rows(shape_class)["depth_error_pct"], lux)
