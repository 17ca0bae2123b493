"""Operating tables and threshold analysis for the rateless code.

Ships the embedded rate / coding-gain operating tables, the uncoded
reference SNR each table column pivots around, an asymptotic
density-evolution estimator for the ternary decoder's threshold rate, and a
Monte-Carlo cross-check that runs the real codec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import skellam

from .lt_codec import (
    DegreeDistribution,
    bit_error_rate,
    default_degree_distribution,
    derive_rng,
    run_incremental,
)
from .phy_model import channel_bit_error, required_snr

__all__ = [
    "COLUMN_TOL_DB",
    "SUPPORTED_PB",
    "RateGainRow",
    "RateGainTable",
    "UnsupportedTableError",
    "embedded_table",
    "all_embedded_records",
    "uncoded_reference_snr",
    "DEState",
    "de_update",
    "de_residual_error",
    "de_threshold_rate",
    "de_rate_curve",
    "MCRateEstimate",
    "mc_rate_estimate",
]

COLUMN_TOL_DB = 0.05
SUPPORTED_PB = (1e-3, 1e-4, 1e-5)

DE_MAX_ITERS = 200
DE_RATE_RESOLUTION = 1e-3


class UnsupportedTableError(LookupError):
    """No embedded operating table for the requested (M, Pb)."""


class RateGainRow(NamedTuple):
    snr_db: float
    rate: float  # 0.0 is the sentinel for "no decodable rate at this SNR"
    gain_db: float


# Embedded operating tables.  Keyed by SNR in dB; the three (rate, gain_dB)
# pairs per row are for target bit error rates 1e-3, 1e-4, and 1e-5.
_M2_TABLE = {
    3: ((0.1624, 7.94), (0.1624, 9.31), (0.1624, 10.35)),
    4: ((0.2346, 6.94), (0.2346, 8.31), (0.2346, 9.35)),
    5: ((0.3248, 5.94), (0.3248, 7.31), (0.3101, 8.35)),
    6: ((0.4304, 4.94), (0.4304, 6.31), (0.3889, 7.35)),
    7: ((0.5438, 3.94), (0.5438, 5.31), (0.4699, 6.35)),
    8: ((0.6513, 2.94), (0.6513, 4.31), (0.5458, 5.35)),
    9: ((0.7378, 1.94), (0.7378, 3.31), (0.6075, 4.35)),
    10: ((0.8003, 0.94), (0.8003, 2.31), (0.6479, 3.35)),
    11: ((0.8650, -0.06), (0.8419, 1.31), (0.6671, 2.35)),
    12: ((0.9229, -1.06), (0.8488, 0.31), (0.6732, 1.35)),
    13: ((0.9553, -2.06), (0.8498, -0.69), (0.6748, 0.35)),
    14: ((0.9685, -3.06), (0.8508, -1.69), (0.6754, -0.65)),
}

_M4_TABLE = {
    7: ((0.1613, 7.37), (0.1613, 8.64), (0.1613, 9.62)),
    8: ((0.2380, 6.37), (0.2380, 7.64), (0.2380, 8.62)),
    9: ((0.3365, 5.37), (0.3365, 6.64), (0.3190, 7.62)),
    10: ((0.4525, 4.37), (0.4525, 5.64), (0.4051, 6.62)),
    11: ((0.5754, 3.37), (0.5754, 4.64), (0.4925, 5.62)),
    12: ((0.6885, 2.37), (0.6885, 3.64), (0.5709, 4.62)),
    13: ((0.7681, 1.37), (0.7681, 2.64), (0.6289, 3.62)),
    14: ((0.8343, 0.37), (0.8343, 1.64), (0.6605, 2.62)),
    15: ((0.9032, -0.63), (0.8468, 0.64), (0.6720, 1.62)),
    16: ((0.9486, -1.63), (0.8498, -0.36), (0.6746, 0.62)),
    17: ((0.9654, -2.63), (0.8503, -1.36), (0.6748, -0.38)),
}

_TABLES = {2: _M2_TABLE, 4: _M4_TABLE}


def uncoded_reference_snr(m: int, pb: float) -> float:
    """SNR (dB) the plain modulation needs for the target error rate.

    Every column of a rate/gain table satisfies snr + gain == this constant,
    since gain is defined as the SNR reduction at equal error rate.
    """
    return 10.0 * math.log10(required_snr(pb, m))


@dataclass(frozen=True)
class RateGainTable:
    """Rows of (SNR, achievable rate, coding gain) for one (M, Pb) point."""

    m: int
    pb_target: float
    rows: tuple[RateGainRow, ...]
    uncoded_ref_db: float
    failed_snrs: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not self.rows:
            raise ValueError("table must contain at least one row")
        snrs = [r.snr_db for r in self.rows]
        if any(b <= a for a, b in zip(snrs, snrs[1:])):
            raise ValueError("rows must be strictly sorted by SNR")
        for r in self.rows:
            if r.rate == 0.0 and r.snr_db in self.failed_snrs:
                continue
            if not 0.0 < r.rate <= 1.0:
                raise ValueError(f"rate {r.rate} at {r.snr_db} dB outside (0, 1]")
        rates = [r.rate for r in self.rows]
        if any(b < a for a, b in zip(rates, rates[1:])):
            raise ValueError("rate must be non-decreasing in SNR")
        worst = max(abs(r.snr_db + r.gain_db - self.uncoded_ref_db) for r in self.rows)
        if worst > COLUMN_TOL_DB:
            raise ValueError(
                f"snr + gain deviates from the uncoded reference by {worst:.3f} dB"
            )

    def row_at(self, snr_db: float) -> RateGainRow:
        for r in self.rows:
            if math.isclose(r.snr_db, snr_db, abs_tol=1e-9):
                return r
        raise KeyError(f"no row at {snr_db} dB")

    def max_column_deviation_db(self) -> float:
        return max(abs(r.snr_db + r.gain_db - self.uncoded_ref_db) for r in self.rows)


def _pb_slot(pb: float) -> int:
    for i, known in enumerate(SUPPORTED_PB):
        if math.isclose(pb, known, rel_tol=1e-9):
            return i
    raise UnsupportedTableError(
        f"no embedded operating table for Pb={pb}; generate one with de_rate_curve"
    )


def embedded_table(m: int, pb: float) -> RateGainTable:
    """The published operating points for M in {2, 4} and Pb in {1e-3..1e-5}."""
    if m not in _TABLES:
        raise UnsupportedTableError(
            f"no embedded operating table for M={m}; generate one with de_rate_curve"
        )
    slot = _pb_slot(pb)
    rows = tuple(
        RateGainRow(float(snr), pairs[slot][0], pairs[slot][1])
        for snr, pairs in sorted(_TABLES[m].items())
    )
    return RateGainTable(m, pb, rows, uncoded_reference_snr(m, pb))


def all_embedded_records():
    """Flat (m, pb, snr_db, rate, gain_db) records, CSV-asset ordering."""
    out = []
    for m in sorted(_TABLES):
        for pb in SUPPORTED_PB:
            for row in embedded_table(m, pb).rows:
                out.append((m, pb, row.snr_db, row.rate, row.gain_db))
    return out


# ---------------------------------------------------------------------------
# Density evolution for the ternary decoder
#
# Message densities are tracked in the frame of the true bit values, so a
# "+1" is a correct vote.  Bit-node degrees are Poisson with mean
# lambda = mean_output_degree / rate (the edge-perspective extra-edge count
# is Poisson with the same mean), which makes the vote sum a difference of
# two independent Poisson counts, i.e. Skellam distributed.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DEState:
    """Ternary message density (probabilities of -1, 0, +1 votes)."""

    p_minus: float
    p_zero: float
    p_plus: float
    iteration: int = 0

    def __post_init__(self) -> None:
        for v in (self.p_minus, self.p_zero, self.p_plus):
            if v < -1e-12:
                raise ValueError("density components must be nonnegative")
        total = self.p_minus + self.p_zero + self.p_plus
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"density sums to {total!r}, expected 1")


_INITIAL_STATE = DEState(0.0, 1.0, 0.0, 0)


def _ternary_sum_probs(mu_plus: float, mu_minus: float) -> tuple[float, float, float]:
    """P(sum > 0), P(sum = 0), P(sum < 0) for a Skellam(mu_plus, mu_minus) sum."""
    tiny = 1e-12
    if mu_plus < tiny and mu_minus < tiny:
        return 0.0, 1.0, 0.0
    if mu_minus < tiny:
        p0 = math.exp(-mu_plus)
        return 1.0 - p0, p0, 0.0
    if mu_plus < tiny:
        p0 = math.exp(-mu_minus)
        return 0.0, p0, 1.0 - p0
    p_eq = float(skellam.pmf(0, mu_plus, mu_minus))
    p_gt = float(skellam.sf(0, mu_plus, mu_minus))
    p_lt = max(0.0, 1.0 - p_eq - p_gt)
    return p_gt, p_eq, p_lt


def _coded_node_density(
    state: DEState, flip_prob: float, dist: DegreeDistribution
) -> tuple[float, float, float]:
    """Density of coded-node votes given the current bit-message density."""
    a = state.p_plus + state.p_minus  # P(message carries a sign)
    b = state.p_plus - state.p_minus
    ea = dist.edge_poly(a)
    eb = dist.edge_poly(b)
    r_plus = max(0.0, 0.5 * (ea + (1.0 - 2.0 * flip_prob) * eb))
    r_minus = max(0.0, 0.5 * (ea - (1.0 - 2.0 * flip_prob) * eb))
    r_zero = max(0.0, 1.0 - ea)
    return r_plus, r_zero, r_minus


def de_update(
    state: DEState, flip_prob: float, rate: float, dist: DegreeDistribution
) -> tuple[DEState, float]:
    """One decoding round; returns the next density and the decision error.

    The decision error is P(wrong sign) + 0.5 P(no sign), matching the
    decoder's half-weight accounting of unresolved bits.
    """
    lam = dist.mean_degree() / rate
    r_plus, r_zero, r_minus = _coded_node_density(state, flip_prob, dist)
    p_gt, p_eq, p_lt = _ternary_sum_probs(lam * r_plus, lam * r_minus)
    residual = p_lt + 0.5 * p_eq
    nxt = DEState(p_lt, p_eq, p_gt, state.iteration + 1)
    return nxt, residual


def de_residual_error(
    flip_prob: float,
    rate: float,
    dist: DegreeDistribution | None = None,
    max_iters: int = DE_MAX_ITERS,
    pb_target: float | None = None,
) -> float:
    """Decision error after running the density recursion to a stop.

    Stops early once the residual reaches pb_target (when given) or when the
    density reaches a fixed point.
    """
    law = dist if dist is not None else default_degree_distribution()
    state = _INITIAL_STATE
    residual = 0.5
    for _ in range(max_iters):
        nxt, residual = de_update(state, flip_prob, rate, law)
        if pb_target is not None and residual <= pb_target:
            return residual
        moved = max(
            abs(nxt.p_minus - state.p_minus),
            abs(nxt.p_zero - state.p_zero),
            abs(nxt.p_plus - state.p_plus),
        )
        state = nxt
        if moved < 1e-12:
            break
    return residual


def de_threshold_rate(
    flip_prob: float,
    pb_target: float,
    dist: DegreeDistribution | None = None,
    resolution: float = DE_RATE_RESOLUTION,
    max_iters: int = DE_MAX_ITERS,
) -> float | None:
    """Largest code rate whose density recursion reaches the error target.

    Bisection to the requested resolution over (0, 1]; None when even the
    lowest probed rate fails (no decodable rate at this channel error).
    """
    law = dist if dist is not None else default_degree_distribution()

    def ok(rate: float) -> bool:
        res = de_residual_error(flip_prob, rate, law, max_iters, pb_target)
        return res <= pb_target

    if ok(1.0):
        return 1.0
    lo = resolution
    if not ok(lo):
        return None
    hi = 1.0
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def de_rate_curve(
    m: int,
    pb_target: float,
    snr_grid,
    dist: DegreeDistribution | None = None,
    resolution: float = DE_RATE_RESOLUTION,
    max_iters: int = DE_MAX_ITERS,
) -> RateGainTable:
    """Rate-versus-SNR table generated by density evolution.

    Gain is defined against the uncoded reference, so the column-constant
    identity holds by construction.  SNR points with no decodable rate are
    kept with the 0.0 sentinel and listed in failed_snrs.  Table validation
    asserts the threshold rate is monotone in SNR.
    """
    grid = sorted(float(s) for s in snr_grid)
    if not grid:
        raise ValueError("snr grid must be nonempty")
    ref = uncoded_reference_snr(m, pb_target)
    rows: list[RateGainRow] = []
    failed: list[float] = []
    for snr_db in grid:
        p = channel_bit_error(10.0 ** (snr_db / 10.0), m)
        rate = de_threshold_rate(p, pb_target, dist, resolution, max_iters)
        if rate is None:
            failed.append(snr_db)
            rate = 0.0
        rows.append(RateGainRow(snr_db, rate, ref - snr_db))
    return RateGainTable(m, pb_target, tuple(rows), ref, tuple(failed))


class MCRateEstimate(NamedTuple):
    mean_rate: float
    std_rate: float
    achieved_ber: float
    qualified_trials: int


def mc_rate_estimate(
    m: int,
    snr_db: float,
    pb_target: float,
    k: int,
    trials: int,
    seed: int,
    dist: DegreeDistribution | None = None,
) -> MCRateEstimate:
    """Monte-Carlo realized-rate estimate from seeded incremental decodes.

    The mean and deviation are taken over trials whose recovered error rate
    meets the target; achieved_ber aggregates over all trials with
    unresolved bits counted half.
    """
    if k < 256:
        raise ValueError("k must be >= 256 for a meaningful estimate")
    if trials < 10:
        raise ValueError("need at least 10 trials")
    p = channel_bit_error(10.0 ** (snr_db / 10.0), m)
    rates: list[float] = []
    error_units = 0.0
    for t in range(trials):
        rng = derive_rng(seed, f"mc{t}")
        message = np.array([rng.randrange(2) for _ in range(k)], dtype=np.uint8)
        result = run_incremental(message, p, rng, dist)
        ber = bit_error_rate(result, message)
        error_units += ber * k
        if ber <= pb_target:
            rates.append(result.realized_rate)
    if rates:
        mean = float(np.mean(rates))
        std = float(np.std(rates))
    else:
        mean = math.nan
        std = math.nan
    return MCRateEstimate(mean, std, error_units / (k * trials), len(rates))
