"""Rate/quality metrics: bits-per-pixel, (ROI-)PSNR and the
Bjøntegaard delta measures over rate-metric curves.

BD computation follows the usual procedure: rates go to log10, each
curve is fitted in the integration variable, both fits are integrated
over the curves' common interval and the mean gap is reported.  The
default fit is a monotone piecewise cubic (PCHIP) which cannot
oscillate on sparse mAP-style curves; ``mode="classic"`` switches to
the traditional least-squares cubic polynomial.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

MIN_CURVE_POINTS = 4

BD_MODES = ("piecewise", "classic")


class CurveError(ValueError):
    pass


class NoOverlapError(CurveError):
    """The two curves share no interval in the integration variable."""


@dataclass(frozen=True)
class RateCurve:
    """Rate-metric samples, strictly increasing in rate."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.points) < MIN_CURVE_POINTS:
            raise CurveError(f"need >= {MIN_CURVE_POINTS} points, got {len(self.points)}")
        prev = 0.0
        for rate, metric in self.points:
            if not rate > prev:
                raise CurveError(f"rates must be positive and strictly increasing ({rate})")
            if not math.isfinite(metric):
                raise CurveError(f"non-finite metric value {metric}")
            prev = rate

    @property
    def rates(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def metrics(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    @classmethod
    def from_csv(cls, path) -> "RateCurve":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [c.strip().lower() for c in header] != ["rate", "metric"]:
                raise CurveError(f"{path}: expected header 'rate,metric'")
            pts = []
            for lineno, row in enumerate(reader, 2):
                if not row or all(not c.strip() for c in row):
                    continue
                try:
                    pts.append((float(row[0]), float(row[1])))
                except (IndexError, ValueError) as exc:
                    raise CurveError(f"{path}:{lineno}: bad row {row!r}") from exc
        return cls(tuple(sorted(pts)))


@dataclass(frozen=True)
class BdResult:
    """BD-rate is integrated over the shared metric interval, BD-metric
    over the shared log10-rate interval; both intervals are reported."""

    bd_rate_percent: float
    bd_metric: float
    metric_overlap: tuple[float, float]
    log_rate_overlap: tuple[float, float]


def bpp(container_bytes: int, orig_w: int, orig_h: int) -> float:
    """Bits per pixel of the *original* image, metadata included."""
    if orig_w < 1 or orig_h < 1:
        raise ValueError("image dimensions must be positive")
    return container_bytes * 8.0 / (orig_w * orig_h)


def psnr(a: np.ndarray, b: np.ndarray, mask: np.ndarray | None = None) -> float:
    """PSNR in dB over all samples, or over a 2D boolean ROI mask.

    Identical inputs return math.inf.
    """
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    af = a.astype(np.float64)
    bf = b.astype(np.float64)
    if mask is not None:
        if mask.shape != a.shape[:2]:
            raise ValueError(f"mask shape {mask.shape} does not match image {a.shape[:2]}")
        if not mask.any():
            raise ValueError("empty ROI mask")
        af, bf = af[mask], bf[mask]
    mse = np.mean((af - bf) ** 2)
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


def _integral(x: np.ndarray, y: np.ndarray, lo: float, hi: float, mode: str) -> float:
    if mode == "piecewise":
        return float(PchipInterpolator(x, y).integrate(lo, hi))
    poly = np.polyfit(x, y, 3)
    anti = np.polyint(poly)
    return float(np.polyval(anti, hi) - np.polyval(anti, lo))


def _by_metric(curve: RateCurve) -> tuple[np.ndarray, np.ndarray]:
    """(metric, log10 rate) sorted by metric; metric must not repeat."""
    m = curve.metrics
    lr = np.log10(curve.rates)
    order = np.argsort(m, kind="stable")
    m, lr = m[order], lr[order]
    if np.any(np.diff(m) <= 0):
        raise CurveError("metric values must be distinct to invert the curve")
    return m, lr


def bd_metric(anchor: RateCurve, test: RateCurve, mode: str = "piecewise") -> BdResult:
    """Both Bjøntegaard deltas of ``test`` against ``anchor``.

    Negative BD-rate means the test curve needs fewer bits at equal
    metric; positive BD-metric means higher metric at equal bits.
    """
    if mode not in BD_MODES:
        raise ValueError(f"mode must be one of {BD_MODES}")

    ma, lra = _by_metric(anchor)
    mt, lrt = _by_metric(test)
    m_lo = max(ma[0], mt[0])
    m_hi = min(ma[-1], mt[-1])
    if not m_hi > m_lo:
        raise NoOverlapError("curves share no metric interval")
    delta_log_rate = (
        _integral(mt, lrt, m_lo, m_hi, mode) - _integral(ma, lra, m_lo, m_hi, mode)
    ) / (m_hi - m_lo)
    bd_rate_percent = 100.0 * (10.0**delta_log_rate - 1.0)

    lra_sorted = np.log10(anchor.rates)
    lrt_sorted = np.log10(test.rates)
    r_lo = max(lra_sorted[0], lrt_sorted[0])
    r_hi = min(lra_sorted[-1], lrt_sorted[-1])
    if not r_hi > r_lo:
        raise NoOverlapError("curves share no rate interval")
    delta_metric = (
        _integral(lrt_sorted, test.metrics, r_lo, r_hi, mode)
        - _integral(lra_sorted, anchor.metrics, r_lo, r_hi, mode)
    ) / (r_hi - r_lo)

    return BdResult(bd_rate_percent, delta_metric, (m_lo, m_hi), (r_lo, r_hi))
