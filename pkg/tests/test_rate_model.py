import csv
import importlib.resources

import pytest

from implantphy.lt_codec import default_degree_distribution
from implantphy.phy_model import channel_bit_error
from implantphy.rate_model import (
    DEState,
    RateGainRow,
    RateGainTable,
    SUPPORTED_PB,
    UnsupportedTableError,
    all_embedded_records,
    de_rate_curve,
    de_residual_error,
    de_threshold_rate,
    de_update,
    embedded_table,
    mc_rate_estimate,
    uncoded_reference_snr,
)


def flip_prob(snr_db, m=2):
    return channel_bit_error(10.0 ** (snr_db / 10.0), m)


# ---------------------------------------------------------------------------
# embedded tables
# ---------------------------------------------------------------------------


def test_row_counts():
    assert len(embedded_table(2, 1e-3).rows) == 12
    assert len(embedded_table(4, 1e-3).rows) == 11


def test_spot_rows():
    assert embedded_table(2, 1e-3).row_at(3.0) == RateGainRow(3.0, 0.1624, 7.94)
    assert embedded_table(4, 1e-5).row_at(17.0) == RateGainRow(17.0, 0.6748, -0.38)
    assert embedded_table(2, 1e-4).row_at(12.0) == RateGainRow(12.0, 0.8488, 0.31)


def test_all_tables_validate_and_columns_are_constant():
    for m in (2, 4):
        for pb in SUPPORTED_PB:
            table = embedded_table(m, pb)
            assert table.max_column_deviation_db() <= 0.05
            rates = [r.rate for r in table.rows]
            assert rates == sorted(rates)


def test_binary_columns_tight():
    for pb, const in ((1e-3, 10.94), (1e-4, 12.31), (1e-5, 13.35)):
        table = embedded_table(2, pb)
        for row in table.rows:
            assert abs(row.snr_db + row.gain_db - const) <= 0.03


def test_unsupported_points_direct_to_generator():
    with pytest.raises(UnsupportedTableError, match="de_rate_curve"):
        embedded_table(2, 1e-2)
    with pytest.raises(UnsupportedTableError, match="de_rate_curve"):
        embedded_table(8, 1e-3)


def test_uncoded_reference_values():
    assert uncoded_reference_snr(2, 1e-3) == pytest.approx(10.94, abs=0.01)
    assert uncoded_reference_snr(2, 1e-5) == pytest.approx(13.35, abs=0.01)
    assert uncoded_reference_snr(4, 1e-3) == pytest.approx(14.41, abs=0.01)
    assert abs(uncoded_reference_snr(4, 1e-3) - 14.37) <= 0.05


def test_csv_asset_matches_embedded_records():
    ref = importlib.resources.files("implantphy") / "data" / "rate_gain_tables.csv"
    with ref.open("r", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    records = all_embedded_records()
    assert len(rows) == len(records) == 69
    for parsed, (m, pb, snr, rate, gain) in zip(rows, records):
        assert int(parsed["M"]) == m
        assert float(parsed["Pb"]) == pytest.approx(pb, rel=1e-9)
        assert float(parsed["snr_dB"]) == snr
        assert float(parsed["rate"]) == pytest.approx(rate, abs=1e-9)
        assert float(parsed["gain_dB"]) == pytest.approx(gain, abs=1e-9)


def test_table_validation_rejects_broken_columns():
    rows = (RateGainRow(3.0, 0.2, 5.0), RateGainRow(4.0, 0.3, 5.0))
    with pytest.raises(ValueError):
        RateGainTable(2, 1e-3, rows, uncoded_ref_db=10.94)
    with pytest.raises(ValueError):
        RateGainTable(
            2, 1e-3,
            (RateGainRow(3.0, 0.4, 7.94), RateGainRow(4.0, 0.3, 6.94)),
            uncoded_ref_db=10.94,
        )  # rate must not decrease


def test_row_at_missing_raises():
    with pytest.raises(KeyError):
        embedded_table(2, 1e-3).row_at(2.5)


# ---------------------------------------------------------------------------
# density evolution
# ---------------------------------------------------------------------------


def test_destate_normalization_enforced():
    DEState(0.2, 0.3, 0.5)
    with pytest.raises(ValueError):
        DEState(0.2, 0.3, 0.6)
    with pytest.raises(ValueError):
        DEState(-0.1, 0.6, 0.5)


def test_de_update_preserves_normalization():
    dist = default_degree_distribution()
    state = DEState(0.0, 1.0, 0.0)
    for _ in range(50):
        state, residual = de_update(state, 0.02, 0.5, dist)
        total = state.p_minus + state.p_zero + state.p_plus
        assert abs(total - 1.0) <= 1e-9
        assert 0.0 <= residual <= 0.5 + 1e-12


def test_perfect_channel_threshold_matches_published_saturation():
    # even error-free, peeling this degree law needs a few percent overhead;
    # the asymptotic noiseless threshold sits exactly where the published
    # operating points saturate at high SNR (0.9685)
    rate = de_threshold_rate(0.0, 1e-3)
    assert rate >= 0.95
    assert rate == pytest.approx(0.9685, abs=0.02)


def test_threshold_none_on_useless_channel():
    assert de_threshold_rate(0.5, 1e-3) is None


def test_de_curve_is_monotone_and_flags_failures():
    # at low SNR the quaternary error bound clamps to 1/2, an undecodable
    # channel, which exercises the zero-rate sentinel
    assert flip_prob(0.0, m=4) == 0.5
    table = de_rate_curve(4, 1e-3, [0, 8, 12, 15])
    rates = [r.rate for r in table.rows]
    assert rates == sorted(rates)
    assert table.rows[0].rate == 0.0
    assert table.failed_snrs == (0.0,)
    assert table.rows[-1].rate > 0.75


def test_de_matches_embedded_operating_points_closely():
    # the published points came from the same style of analysis; agreement
    # is a strong cross-check even though it is only a soft requirement
    for snr, expected in ((3.0, 0.1624), (6.0, 0.4304), (10.0, 0.8003)):
        rate = de_threshold_rate(flip_prob(snr), 1e-3)
        assert rate == pytest.approx(expected, abs=0.01)


def test_de_reproduces_low_error_rate_ceiling():
    # Poisson-cover floor pins the max rate near mean_degree / ln(1/(2 Pb))
    rate = de_threshold_rate(flip_prob(14.0), 1e-5)
    assert rate == pytest.approx(0.6754, abs=0.005)


def test_de_residual_error_decreases_with_rate():
    p = flip_prob(8.0)
    high = de_residual_error(p, 0.75, pb_target=None)
    low = de_residual_error(p, 0.40, pb_target=None)
    assert low < high


# ---------------------------------------------------------------------------
# Monte-Carlo estimate
# ---------------------------------------------------------------------------


def test_mc_input_validation():
    with pytest.raises(ValueError):
        mc_rate_estimate(2, 10.0, 1e-3, k=128, trials=10, seed=0)
    with pytest.raises(ValueError):
        mc_rate_estimate(2, 10.0, 1e-3, k=256, trials=5, seed=0)


def test_mc_noiseless_limit():
    est = mc_rate_estimate(2, 80.0, 1e-3, k=512, trials=10, seed=404)
    assert est.achieved_ber == 0.0
    assert est.qualified_trials == 10
    assert 0.6 < est.mean_rate <= 1.0


def test_mc_rate_drops_with_snr():
    hi = mc_rate_estimate(2, 10.0, 1e-3, k=1024, trials=10, seed=31)
    lo = mc_rate_estimate(2, 6.0, 1e-3, k=1024, trials=10, seed=31)
    assert lo.mean_rate < hi.mean_rate
