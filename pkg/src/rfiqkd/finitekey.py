"""Finite-size correction of observed error rates and the collective-attack rate.

Observed error rates are shifted pessimistically by the statistical
deviation delta(k) before entering the leakage bound, and the rate pays
explicit error-correction and privacy-amplification overheads.  Yields are
used as observed; no deviation is applied to them (flagged in reports).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .channel import ObservedStatistics
from .core import (
    ESTIMATION_PAIRS,
    Intensity,
    KEY_PAIR,
    ProtocolConfig,
    binary_entropy,
)
from .decoy import (
    DecoyBounds,
    _PAIR_ORDER,
    _flip_values,
    aligned_pair_qbers,
    bounds_from_rates,
)

__all__ = [
    "FiniteKeyContext",
    "CorrectedErrorRates",
    "FiniteRatePoint",
    "delta",
    "corrected_statistics",
    "finite_key_rate",
]


@dataclass(frozen=True)
class FiniteKeyContext:
    """Sample sizes and failure probabilities for one finite-key evaluation.

    ``n_raw`` counts Z-basis sifted signal pairs, ``m_est`` the estimation
    samples behind each X/Y QBER.  Two constructors are provided: the
    idealized sent-pulse accounting n = N p_z^2 (no detection losses) and
    the detection-derived accounting read off actual statistics.
    """

    n_raw: float
    m_est: float
    n_pulses_total: float
    eps_pe: float = 1e-5
    eps_pa: float = 1e-5
    eps_ec: float = 1e-5
    eps_bar: float = 1e-5

    def __post_init__(self) -> None:
        if self.n_raw < 1 or self.m_est < 1:
            raise ValueError(
                f"need n_raw >= 1 and m_est >= 1 for a computable rate, got "
                f"n_raw={self.n_raw}, m_est={self.m_est}")
        if self.n_pulses_total < self.n_raw:
            raise ValueError("n_pulses_total must be >= n_raw")
        for name in ("eps_pe", "eps_pa", "eps_ec", "eps_bar"):
            val = getattr(self, name)
            if not 0.0 < val < 1.0:
                raise ValueError(f"{name} must lie in (0,1), got {val}")

    @classmethod
    def idealized(cls, config: ProtocolConfig,
                  n_pulses: float | None = None) -> "FiniteKeyContext":
        """Sent-pulse accounting: n = N p_z^2, m = N p_xy^2."""
        n_total = float(config.n_total_pulses if n_pulses is None else n_pulses)
        return cls(
            n_raw=n_total * config.p_z ** 2,
            m_est=n_total * config.p_xy ** 2,
            n_pulses_total=n_total,
            eps_pe=config.eps_pe, eps_pa=config.eps_pa,
            eps_ec=config.eps_ec, eps_bar=config.eps_bar)

    @classmethod
    def from_statistics(cls, stats: ObservedStatistics,
                        config: ProtocolConfig) -> "FiniteKeyContext":
        """Detection-derived accounting from actual per-cell counts.

        n is the detected signal-intensity ZZ count; m is the smallest of
        the four detected estimation-pair counts (conservative).
        """
        n = stats.detected_count(Intensity.SIGNAL, KEY_PAIR)
        m = min(stats.detected_count(Intensity.SIGNAL, p)
                for p in ESTIMATION_PAIRS)
        return cls(
            n_raw=n, m_est=m, n_pulses_total=stats.sent.sum(),
            eps_pe=config.eps_pe, eps_pa=config.eps_pa,
            eps_ec=config.eps_ec, eps_bar=config.eps_bar)


def delta(k: float, eps_pe: float) -> float:
    """Statistical deviation sqrt((ln(1/eps) + 2 ln(k+1)) / (2k)).

    Monotone decreasing in k; k must be >= 1.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not 0.0 < eps_pe <= 1.0:
        raise ValueError(f"eps_pe must lie in (0, 1], got {eps_pe}")
    return math.sqrt(
        (math.log(1.0 / eps_pe) + 2.0 * math.log(k + 1.0)) / (2.0 * k))


@dataclass(frozen=True)
class CorrectedErrorRates:
    """Finite-size corrected QBERs: Z shifted up, X/Y shrunk toward 1/2."""

    e_zz: float
    pairs: tuple[float, float, float, float]  # XX, XY, YX, YY
    delta_n: float
    delta_m: float


def _correct(e_zz: float, pair_qbers: dict[str, float],
             ctx: FiniteKeyContext) -> CorrectedErrorRates:
    dn = delta(ctx.n_raw, ctx.eps_pe)
    dm = delta(ctx.m_est, ctx.eps_pe)
    e_zz_c = min(1.0, e_zz + dn)
    pairs = tuple(max(0.5, pair_qbers[lbl] - dm / 2.0) for lbl in _PAIR_ORDER)
    return CorrectedErrorRates(e_zz=e_zz_c, pairs=pairs,
                               delta_n=dn, delta_m=dm)


def corrected_statistics(stats: ObservedStatistics,
                         ctx: FiniteKeyContext) -> CorrectedErrorRates:
    """Finite-size corrected QBER set from flip-normalized raw pairs.

    E'_zz = min(1, E_zz + delta(n)); E'_xy = max(1/2, E_xy - delta(m)/2).
    Shrinking the estimation QBERs toward 1/2 is the pessimistic direction
    under the flip convention.
    """
    stats.require_complete()
    raw = {p.label: stats.qber(Intensity.SIGNAL, p) for p in ESTIMATION_PAIRS}
    return _correct(stats.qber(Intensity.SIGNAL, KEY_PAIR),
                    _flip_values(raw), ctx)


@dataclass(frozen=True)
class FiniteRatePoint:
    """Finite-key rate with the corrected inputs and bound chain recorded."""

    rate: float
    bounds: DecoyBounds
    corrected: CorrectedErrorRates
    overhead: float
    ctx: FiniteKeyContext
    reason: str | None = None


def finite_key_rate(stats: ObservedStatistics, config: ProtocolConfig,
                    ctx: FiniteKeyContext, align: bool = True,
                    ) -> FiniteRatePoint:
    """Key rate per pulse against collective attacks.

    Reruns the decoy chain with finite-size corrected error rates, then
    subtracts the error-correction and privacy-amplification overheads:

        r = -Y_mu h(E'_zz) + mu e^-mu y1 (1 - I_E')
            - (n/N) [ (1/n) log2(2/eps_ec) + (2/n) log2(1/eps_pa)
                      + 7 sqrt(log2(2/eps_bar)/n) ]

    floored at 0.  All three overhead terms are subtracted; logs are base 2.
    Yields enter uncorrected (observed values).
    """
    stats.require_complete()
    y_mu = stats.yield_for(Intensity.SIGNAL)
    y_nu = stats.yield_for(Intensity.DECOY)
    y_0 = stats.yield_for(Intensity.VACUUM)
    e_zz = stats.qber(Intensity.SIGNAL, KEY_PAIR)
    if align:
        qbers, _ = aligned_pair_qbers(stats)
    else:
        qbers = {p.label: stats.qber(Intensity.SIGNAL, p)
                 for p in ESTIMATION_PAIRS}
    corrected = _correct(e_zz, _flip_values(qbers), ctx)
    bounds = bounds_from_rates(
        y_mu, y_nu, y_0, corrected.e_zz,
        dict(zip(_PAIR_ORDER, corrected.pairs)), config)

    n, n_total = ctx.n_raw, ctx.n_pulses_total
    overhead = (n / n_total) * (
        math.log2(2.0 / ctx.eps_ec) / n
        + 2.0 * math.log2(1.0 / ctx.eps_pa) / n
        + 7.0 * math.sqrt(math.log2(2.0 / ctx.eps_bar) / n))

    if bounds.y1_lower <= 0.0:
        return FiniteRatePoint(0.0, bounds, corrected, overhead, ctx,
                               reason="y1_lower = 0: no certified "
                                      "single-photon detections")
    if corrected.e_zz >= 0.5:
        return FiniteRatePoint(0.0, bounds, corrected, overhead, ctx,
                               reason="corrected Z error rate >= 1/2")
    rate = (-y_mu * binary_entropy(corrected.e_zz)
            + config.mu * math.exp(-config.mu) * bounds.y1_lower
            * (1.0 - bounds.i_e_upper)
            - overhead)
    reason = None
    if rate <= 0.0:
        rate = 0.0
        reason = "rate non-positive after finite-size corrections"
    return FiniteRatePoint(rate, bounds, corrected, overhead, ctx, reason)
