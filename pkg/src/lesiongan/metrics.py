"""Confusion-matrix evaluation metrics and the thresholded Jaccard score."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import DimensionError, DomainError, Tensor

JSC_CUTOFF = 0.65


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _as_binary(t, name: str) -> np.ndarray:
    arr = t.data if isinstance(t, Tensor) else np.asarray(t)
    if not np.all((arr == 0) | (arr == 1)):
        raise DomainError(f"{name} must be strictly binary")
    return arr.astype(bool)


def confusion(gt, pred) -> ConfusionCounts:
    """Exact pixel counts of the four agreement sets."""
    g = _as_binary(gt, "gt")
    p = _as_binary(pred, "pred")
    if g.shape != p.shape:
        raise DimensionError(f"confusion: shapes {g.shape} and {p.shape} disagree")
    tp = int(np.count_nonzero(g & p))
    fp = int(np.count_nonzero(~g & p))
    fn = int(np.count_nonzero(g & ~p))
    tn = int(np.count_nonzero(~g & ~p))
    return ConfusionCounts(tp, fp, fn, tn)


def compute_metrics(c: ConfusionCounts) -> tuple[float, float, float, float, float]:
    """(acc, dsc, jsc, sen, spe).

    Division-by-zero conventions: sen = 1 when there are no actual
    positives, spe = 1 when there are no actual negatives, and dsc = jsc
    = 1 when both masks are empty (correctly predicting nothing).
    """
    if c.total <= 0:
        raise DomainError("confusion counts must cover at least one pixel")
    acc = (c.tp + c.tn) / c.total
    pos_union = 2 * c.tp + c.fp + c.fn
    dsc = 2 * c.tp / pos_union if pos_union else 1.0
    jac_union = c.tp + c.fp + c.fn
    jsc = c.tp / jac_union if jac_union else 1.0
    sen = c.tp / (c.tp + c.fn) if (c.tp + c.fn) else 1.0
    spe = c.tn / (c.tn + c.fp) if (c.tn + c.fp) else 1.0
    return acc, dsc, jsc, sen, spe


def thresholded_jsc(jsc: float) -> float:
    """Challenge scoring: Jaccard below 0.65 collapses to zero."""
    if not (0.0 <= jsc <= 1.0):
        raise DomainError(f"jsc must lie in [0,1], got {jsc}")
    return jsc if jsc >= JSC_CUTOFF else 0.0


@dataclass
class MetricsReport:
    """Per-image rows plus a mean row, in CSV column order."""

    per_image: list[tuple[str, float, float, float, float, float, float]]

    COLUMNS = ("id", "acc", "dsc", "jsc", "sen", "spe", "jsc_th")

    @property
    def aggregate(self) -> tuple[float, ...]:
        if not self.per_image:
            raise DomainError("report has no rows")
        cols = np.array([row[1:] for row in self.per_image], dtype=np.float64)
        return tuple(cols.mean(axis=0))

    def to_csv(self) -> str:
        lines = [",".join(self.COLUMNS)]
        for row in self.per_image:
            lines.append(row[0] + "," + ",".join(f"{v:.6f}" for v in row[1:]))
        lines.append("MEAN," + ",".join(f"{v:.6f}" for v in self.aggregate))
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        header = f"{'id':<24}" + "".join(f"{c:>9}" for c in self.COLUMNS[1:])
        lines = [header, "-" * len(header)]
        for row in self.per_image:
            lines.append(f"{row[0]:<24}" + "".join(f"{v:>9.4f}" for v in row[1:]))
        lines.append(f"{'MEAN':<24}" + "".join(f"{v:>9.4f}" for v in self.aggregate))
        return "\n".join(lines)


def report_from_pairs(
    pairs: list[tuple[str, Tensor, Tensor]],
    pixel_pooled: bool = False,
) -> MetricsReport:
    """Build a report from (id, gt, pred) binary mask triples.

    With ``pixel_pooled`` the mean row is replaced by metrics of the
    summed confusion counts instead of the per-image average.
    """
    rows = []
    pooled = ConfusionCounts(0, 0, 0, 0)
    for image_id, gt, pred in pairs:
        c = confusion(gt, pred)
        acc, dsc, jsc, sen, spe = compute_metrics(c)
        rows.append((image_id, acc, dsc, jsc, sen, spe, thresholded_jsc(jsc)))
        pooled = ConfusionCounts(pooled.tp + c.tp, pooled.fp + c.fp,
                                 pooled.fn + c.fn, pooled.tn + c.tn)
    report = MetricsReport(rows)
    if pixel_pooled:
        acc, dsc, jsc, sen, spe = compute_metrics(pooled)
        pooled_row = (acc, dsc, jsc, sen, spe, thresholded_jsc(jsc))
        report = PooledMetricsReport(rows, pooled_row)
    return report


class PooledMetricsReport(MetricsReport):
    """Report whose aggregate row pools pixels across images."""

    def __init__(self, per_image, pooled_row):
        super().__init__(per_image)
        self._pooled_row = tuple(pooled_row)

    @property
    def aggregate(self) -> tuple[float, ...]:
        return self._pooled_row
