import math

import numpy as np
import pytest
from scipy.interpolate import PchipInterpolator

from roipack.metrics import (
    BD_MODES,
    CurveError,
    NoOverlapError,
    RateCurve,
    bd_metric,
    bpp,
    psnr,
)

# ---------------------------------------------------------------------- bpp


def test_bpp_example():
    assert bpp(1000, 100, 100) == pytest.approx(0.8)


def test_bpp_zero_bytes():
    assert bpp(0, 64, 64) == 0.0


def test_bpp_rejects_bad_dims():
    with pytest.raises(ValueError):
        bpp(100, 0, 100)


# --------------------------------------------------------------------- psnr


def test_psnr_unit_shift():
    a = np.zeros((32, 32), dtype=np.uint8)
    b = a + 1
    assert psnr(a, b) == pytest.approx(48.1308036087, abs=1e-6)


def test_psnr_identical_is_infinite():
    a = np.arange(64, dtype=np.uint8).reshape(8, 8)
    assert psnr(a, a) == math.inf


def test_psnr_masked_ignores_outside():
    a = np.zeros((16, 16), dtype=np.uint8)
    b = a.copy()
    b[:8] = 200  # huge error in the top half only
    mask = np.zeros((16, 16), dtype=bool)
    mask[8:] = True
    assert psnr(a, b, mask) == math.inf
    assert psnr(a, b) < 20


def test_psnr_masked_color_image():
    rng = np.random.default_rng(0)
    a = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
    b = a.copy()
    b[0, 0] = 0
    mask = np.ones((16, 16), dtype=bool)
    mask[0, 0] = False
    assert psnr(a, b, mask) == math.inf


def test_psnr_validation():
    a = np.zeros((8, 8), dtype=np.uint8)
    with pytest.raises(ValueError):
        psnr(a, np.zeros((8, 9), dtype=np.uint8))
    with pytest.raises(ValueError):
        psnr(a, a, np.zeros((4, 4), dtype=bool))
    with pytest.raises(ValueError):
        psnr(a, a, np.zeros((8, 8), dtype=bool))  # empty mask


# -------------------------------------------------------------- curve type


def test_curve_needs_four_points():
    with pytest.raises(CurveError):
        RateCurve(((1.0, 30.0), (2.0, 33.0), (3.0, 36.0)))


def test_curve_rates_strictly_increasing_and_positive():
    with pytest.raises(CurveError):
        RateCurve(((1.0, 30.0), (1.0, 33.0), (2.0, 36.0), (3.0, 39.0)))
    with pytest.raises(CurveError):
        RateCurve(((-1.0, 30.0), (1.0, 33.0), (2.0, 36.0), (3.0, 39.0)))


def test_curve_rejects_nan_metric():
    with pytest.raises(CurveError):
        RateCurve(((1.0, 30.0), (2.0, float("nan")), (3.0, 36.0), (4.0, 39.0)))


def test_curve_from_csv(tmp_path):
    path = tmp_path / "curve.csv"
    path.write_text("rate,metric\n2.0,34\n\n1.0,30\n4.0,38\n8.0,42\n")
    curve = RateCurve.from_csv(path)
    assert curve.rates.tolist() == [1.0, 2.0, 4.0, 8.0]  # sorted on load
    assert curve.metrics.tolist() == [30.0, 34.0, 38.0, 42.0]


def test_curve_from_csv_errors(tmp_path):
    bad_header = tmp_path / "a.csv"
    bad_header.write_text("bitrate,psnr\n1,30\n")
    with pytest.raises(CurveError):
        RateCurve.from_csv(bad_header)
    bad_row = tmp_path / "b.csv"
    bad_row.write_text("rate,metric\n1,30\nx,y\n3,36\n4,39\n")
    with pytest.raises(CurveError):
        RateCurve.from_csv(bad_row)


# ------------------------------------------------------------------ bd core


ANCHOR = RateCurve(((0.25, 30.0), (0.5, 34.0), (1.0, 38.0), (2.0, 41.5)))


def _scaled_rates(curve: RateCurve, factor: float) -> RateCurve:
    return RateCurve(tuple((r * factor, m) for r, m in curve.points))


@pytest.mark.parametrize("mode", BD_MODES)
def test_identity_is_exactly_zero(mode):
    res = bd_metric(ANCHOR, ANCHOR, mode)
    assert res.bd_rate_percent == 0.0
    assert res.bd_metric == 0.0


@pytest.mark.parametrize("mode", BD_MODES)
def test_halved_rate_is_minus_fifty_percent(mode):
    res = bd_metric(ANCHOR, _scaled_rates(ANCHOR, 0.5), mode)
    assert res.bd_rate_percent == pytest.approx(-50.0, abs=1e-9)
    assert res.bd_metric > 0  # same quality from fewer bits


@pytest.mark.parametrize("mode", BD_MODES)
def test_antisymmetry(mode):
    test = RateCurve(((0.3, 31.0), (0.55, 34.5), (1.1, 38.2), (2.1, 41.0)))
    fwd = bd_metric(ANCHOR, test, mode)
    rev = bd_metric(test, ANCHOR, mode)
    growth = (1 + fwd.bd_rate_percent / 100) * (1 + rev.bd_rate_percent / 100)
    assert growth == pytest.approx(1.0, abs=1e-9)
    assert fwd.bd_metric == pytest.approx(-rev.bd_metric, abs=1e-9)


def test_dominating_curve_signs():
    # Strictly better test codec: Table-1-style "-44.10 / +7.18" signs.
    better = _scaled_rates(ANCHOR, 0.6)
    res = bd_metric(ANCHOR, better)
    assert res.bd_rate_percent < 0
    assert res.bd_metric > 0


def test_overlap_intervals_reported():
    test = _scaled_rates(ANCHOR, 0.5)
    res = bd_metric(ANCHOR, test)
    assert res.metric_overlap == (30.0, 41.5)
    lo, hi = res.log_rate_overlap
    assert lo == pytest.approx(math.log10(0.25))
    assert hi == pytest.approx(math.log10(1.0))


def test_no_metric_overlap_raises():
    low = RateCurve(((0.25, 20.0), (0.5, 22.0), (1.0, 24.0), (2.0, 26.0)))
    high = RateCurve(((0.25, 40.0), (0.5, 42.0), (1.0, 44.0), (2.0, 46.0)))
    with pytest.raises(NoOverlapError):
        bd_metric(low, high)


def test_no_rate_overlap_raises():
    a = RateCurve(((0.1, 30.0), (0.2, 34.0), (0.3, 38.0), (0.4, 41.0)))
    b = RateCurve(((10.0, 29.0), (20.0, 35.0), (30.0, 39.0), (40.0, 42.0)))
    with pytest.raises(NoOverlapError):
        bd_metric(a, b)


def test_duplicate_metric_values_rejected():
    flat = RateCurve(((1.0, 30.0), (2.0, 30.0), (3.0, 36.0), (4.0, 39.0)))
    with pytest.raises(CurveError):
        bd_metric(ANCHOR, flat)


def test_unknown_mode_rejected():
    with pytest.raises(ValueError):
        bd_metric(ANCHOR, ANCHOR, "spline")


# -------------------------------------------------------- dense-grid oracle


def _bd_oracle(anchor: RateCurve, test: RateCurve, mode: str, n: int = 10_000):
    """Same interpolants, but integrated by dense trapezoid sampling."""

    def integral(x, y, lo, hi):
        xs = np.linspace(lo, hi, n)
        if mode == "piecewise":
            ys = PchipInterpolator(x, y)(xs)
        else:
            ys = np.polyval(np.polyfit(x, y, 3), xs)
        return np.trapezoid(ys, xs)

    def by_metric(c):
        order = np.argsort(c.metrics)
        return c.metrics[order], np.log10(c.rates)[order]

    ma, lra = by_metric(anchor)
    mt, lrt = by_metric(test)
    lo, hi = max(ma[0], mt[0]), min(ma[-1], mt[-1])
    d = (integral(mt, lrt, lo, hi) - integral(ma, lra, lo, hi)) / (hi - lo)
    rate = 100.0 * (10.0**d - 1.0)

    la, lt = np.log10(anchor.rates), np.log10(test.rates)
    lo2, hi2 = max(la[0], lt[0]), min(la[-1], lt[-1])
    metr = (
        integral(lt, test.metrics, lo2, hi2) - integral(la, anchor.metrics, lo2, hi2)
    ) / (hi2 - lo2)
    return rate, metr


CURVE_PAIRS = [
    (
        ANCHOR,
        RateCurve(((0.22, 31.0), (0.45, 35.2), (0.9, 38.9), (1.8, 42.0))),
    ),
    (
        RateCurve(((0.1, 28.0), (0.32, 33.0), (1.05, 37.5), (3.4, 41.0), (9.8, 44.0))),
        RateCurve(((0.09, 28.5), (0.3, 33.2), (1.0, 38.1), (3.2, 41.8), (9.0, 44.6))),
    ),
    (
        RateCurve(((0.5, 60.0), (1.0, 66.0), (2.0, 71.0), (4.0, 75.0))),
        RateCurve(((0.5, 58.0), (1.0, 65.0), (2.0, 72.0), (4.0, 77.0))),
    ),
    (
        RateCurve(((1.0, 30.0), (2.0, 33.0), (4.0, 36.0), (8.0, 39.0))),
        RateCurve(((1.5, 30.5), (3.0, 34.0), (6.0, 37.5), (12.0, 41.0))),
    ),
]


@pytest.mark.parametrize("mode", BD_MODES)
@pytest.mark.parametrize("pair", range(len(CURVE_PAIRS)))
def test_bd_matches_dense_oracle(mode, pair):
    anchor, test = CURVE_PAIRS[pair]
    res = bd_metric(anchor, test, mode)
    want_rate, want_metric = _bd_oracle(anchor, test, mode)
    assert res.bd_rate_percent == pytest.approx(want_rate, abs=0.1)
    assert res.bd_metric == pytest.approx(want_metric, abs=0.05)
