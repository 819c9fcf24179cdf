"""Decoy-state bounds turning observed statistics into a secure-rate report.

The chain: counting rates at the three intensities bound the single-photon
yield; the signal-intensity QBERs then bound the single-photon Z error rate
and the single-photon quality parameter C (two complementary methods,
combined per component); (e1zz upper, c1 lower) feed the leakage bound and
the asymptotic rate.

Frame alignment
---------------
The raw per-pair bounds are tight only when the frame offset sits at a
multiple of pi/4: method 1 is exact for an aligned frame, method 2 for the
diagonal frame, and both sag in between.  Because the four X/Y correlations
transform linearly under a rotation of Bob's X/Y operators, the estimator
may rotate the observed correlation matrix into the aligned frame before
applying the bounds; the per-photon-number decomposition holds for any
rotated pair of observables, so the bound stays valid for any angle while
becoming frame independent.  ``asymptotic_rate`` does this by default
(``align=True``); pass ``align=False`` to bound the raw announced pairs
exactly as observed.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .channel import ObservedStatistics
from .core import (
    ESTIMATION_PAIRS,
    Intensity,
    KEY_PAIR,
    ProtocolConfig,
    binary_entropy,
    single_photon_eve_information,
)

__all__ = [
    "PAIR_ERROR_SUM_MAX",
    "DecoyBounds",
    "RatePoint",
    "y1_lower_bound",
    "e1zz_upper_bound",
    "e1xy_lower_bound",
    "c1_method1",
    "c1_method2",
    "c1_lower_bound",
    "eve_information_decoy",
    "estimate_frame_angle",
    "aligned_pair_qbers",
    "estimate_bounds",
    "asymptotic_rate",
]

#: Maximum of e + sqrt(e(1-e)) + 1/2 over e in [1/2, 1], attained at
#: e = (2 + sqrt(2))/4.  Used exactly as printed (5 decimals) so results
#: match the published arithmetic; the self-check test documents the
#: full-precision value 1.7071067811...
PAIR_ERROR_SUM_MAX = 1.70711

_PAIR_ORDER = tuple(p.label for p in ESTIMATION_PAIRS)  # XX, XY, YX, YY


@dataclass(frozen=True)
class DecoyBounds:
    """Every intermediate of the bound chain, for auditability."""

    y1_lower: float
    e1zz_upper: float
    e1xy_lower: tuple[float, float, float, float]  # XX, XY, YX, YY
    c1_alpha: float        # method 1, X-row component
    c1_beta: float         # method 1, Y-row component
    a_bound: float         # method 2 pair-error-sum bound, X row
    b_bound: float         # method 2 pair-error-sum bound, Y row
    c1_alpha_m2: float     # method 2 components 2(1-a)^2, 2(1-b)^2
    c1_beta_m2: float
    c1_lower: float
    i_e_upper: float


@dataclass(frozen=True)
class RatePoint:
    """Asymptotic-rate result with all inputs and intermediates recorded."""

    rate: float
    bounds: DecoyBounds
    y_mu: float
    y_nu: float
    y_0: float
    e_mu_zz: float
    pair_qbers_raw: tuple[float, float, float, float]
    pair_qbers_used: tuple[float, float, float, float]
    frame_angle: float | None
    aligned: bool
    reason: str | None = None


def y1_lower_bound(y_mu: float, y_nu: float, y_0: float,
                   mu: float, nu: float) -> float:
    """Lower bound on the single-photon counting rate from three yields.

    Clamped at 0; a zero result means no positive key can be certified.
    """
    if not mu > nu > 0.0:
        raise ValueError(f"require mu > nu > 0, got mu={mu}, nu={nu}")
    for name, val in (("y_mu", y_mu), ("y_nu", y_nu), ("y_0", y_0)):
        if not 0.0 <= val <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {val}")
    numer = (-nu ** 2 * math.exp(mu) * y_mu
             + mu ** 2 * math.exp(nu) * y_nu
             - (mu ** 2 - nu ** 2) * y_0)
    return max(0.0, numer / (mu * (mu * nu - nu ** 2)))


def e1zz_upper_bound(e_mu_zz: float, y_mu: float, y_0: float,
                     mu: float, y1_lower: float) -> float:
    """Upper bound on the single-photon Z-basis error rate, clamped to [0, 1].

    A negative numerator means dark counts alone explain every observed
    error; the bound is then 0.
    """
    if y1_lower <= 0.0:
        raise ValueError("y1_lower must be > 0; no single-photon rate "
                         "certified means no key")
    numer = e_mu_zz * y_mu - 0.5 * math.exp(-mu) * y_0
    value = numer / (mu * math.exp(-mu) * y1_lower)
    return min(1.0, max(0.0, value))


def e1xy_lower_bound(e_mu_xy: float, y_mu: float, y_0: float,
                     mu: float, y1_lower: float) -> float:
    """Lower bound on a single-photon X/Y error rate (flip convention >= 1/2).

    Assumes every multi-photon event errs, which is what makes this a valid
    lower bound; clamped to [0, 1].
    """
    if y1_lower <= 0.0:
        raise ValueError("y1_lower must be > 0; no single-photon rate "
                         "certified means no key")
    value = 1.0 - ((1.0 - e_mu_xy) * y_mu - 0.5 * math.exp(-mu) * y_0) / (
        mu * math.exp(-mu) * y1_lower)
    return min(1.0, max(0.0, value))


def c1_method1(e1xx: float, e1xy: float, e1yx: float, e1yy: float,
               ) -> tuple[float, float]:
    """Per-row quality components from the four single-photon error bounds.

    Each term is (1 - 2*max(1/2, e))^2, so bounds below 1/2 contribute
    nothing.  Returns (alpha, beta) for the X and Y rows.
    """
    def term(e):
        return (1.0 - 2.0 * max(0.5, e)) ** 2

    return term(e1xx) + term(e1xy), term(e1yx) + term(e1yy)


def c1_method2(e_mu_xx: float, e_mu_xy: float, e_mu_yx: float, e_mu_yy: float,
               y_mu: float, y_0: float, mu: float, y1_lower: float,
               ) -> tuple[float, float]:
    """Per-row quality components from the pair-error-sum bound.

    Bounds e1XX + e1XY (and the Y row) from below using the constraint that
    any single-photon state keeps each pair sum at most 1.70711, then maps a
    row sum ``a`` to the component 2(1 - a)^2.  The sums are clamped into
    [1, 1.70711]: values below 1 are inconsistent with the flip convention
    (both rates >= 1/2) and trip a warning.
    """
    if y1_lower <= 0.0:
        raise ValueError("y1_lower must be > 0; no single-photon rate "
                         "certified means no key")
    k = PAIR_ERROR_SUM_MAX
    denom = mu * math.exp(-mu) * y1_lower

    def row_sum(e_first, e_second):
        numer = ((k - e_first - e_second) * y_mu
                 - (k - 1.0) * math.exp(-mu) * y_0)
        raw = k - numer / denom
        if raw < 1.0 - 1e-12:
            warnings.warn(
                f"pair error sum bound {raw:.6f} below 1; statistics are "
                "inconsistent with the flip convention, clamping",
                stacklevel=3)
        return min(k, max(1.0, raw))

    a = row_sum(e_mu_xx, e_mu_xy)
    b = row_sum(e_mu_yx, e_mu_yy)
    return a, b


def c1_lower_bound(method1: tuple[float, float],
                   method2: tuple[float, float]) -> float:
    """Combine both methods component-wise and clamp to the physical range."""
    alpha, beta = method1
    alpha2, beta2 = method2
    if min(alpha, beta, alpha2, beta2) < 0.0:
        raise ValueError("quality components must be >= 0")
    return min(2.0, max(alpha, alpha2) + max(beta, beta2))


def eve_information_decoy(e1zz_upper: float, c1_lower: float) -> float:
    """Leakage bound evaluated at the decoy-estimated single-photon values."""
    return single_photon_eve_information(e1zz_upper, c1_lower)


# ---------------------------------------------------------------------------
# frame alignment
# ---------------------------------------------------------------------------

def estimate_frame_angle(stats: ObservedStatistics) -> float:
    """Estimate the X/Y frame offset from signed signal-intensity correlations.

    Expects raw (unflipped) statistics: the rotation structure
    [[cos b, -sin b], [sin b, cos b]] is read off via atan2 of the summed
    diagonal and antisymmetric off-diagonal parts.
    """
    g = {p.label: stats.correlation(Intensity.SIGNAL, p)
         for p in ESTIMATION_PAIRS}
    return math.atan2(g["YX"] - g["XY"], g["XX"] + g["YY"])


def aligned_pair_qbers(stats: ObservedStatistics,
                       ) -> tuple[dict[str, float], float]:
    """Rotate the observed X/Y correlations into the aligned frame.

    Returns ({pair label: effective QBER}, estimated angle).  In the aligned
    frame the XX/YY cells carry the full correlation magnitude and the XY/YX
    cells are near 1/2, which is where the per-pair bounds are tight.  The
    rotated values remain valid error rates of physical observables, so all
    downstream bounds apply unchanged for any rotation angle.
    """
    g = {p.label: stats.correlation(Intensity.SIGNAL, p)
         for p in ESTIMATION_PAIRS}
    angle = math.atan2(g["YX"] - g["XY"], g["XX"] + g["YY"])
    cphi, sphi = math.cos(-angle), math.sin(-angle)
    rotated = {
        "XX": cphi * g["XX"] + sphi * g["XY"],
        "XY": cphi * g["XY"] - sphi * g["XX"],
        "YX": cphi * g["YX"] + sphi * g["YY"],
        "YY": cphi * g["YY"] - sphi * g["YX"],
    }
    qbers = {label: (1.0 - min(1.0, max(-1.0, val))) / 2.0
             for label, val in rotated.items()}
    return qbers, angle


def _flip_values(qbers: dict[str, float]) -> dict[str, float]:
    """Value-level flip convention: every estimation QBER >= 1/2."""
    return {k: (1.0 - v if v < 0.5 else v) for k, v in qbers.items()}


# ---------------------------------------------------------------------------
# full chain
# ---------------------------------------------------------------------------

def _pessimistic_bounds(y1: float) -> DecoyBounds:
    """Bounds reported when no single-photon rate can be certified."""
    return DecoyBounds(
        y1_lower=y1, e1zz_upper=1.0, e1xy_lower=(0.0,) * 4,
        c1_alpha=0.0, c1_beta=0.0, a_bound=1.0, b_bound=1.0,
        c1_alpha_m2=0.0, c1_beta_m2=0.0, c1_lower=0.0, i_e_upper=1.0)


def bounds_from_rates(y_mu: float, y_nu: float, y_0: float,
                      e_zz: float, pair_qbers: dict[str, float],
                      config: ProtocolConfig) -> DecoyBounds:
    """Run the bound chain on already-extracted rates.

    ``pair_qbers`` maps XX/XY/YX/YY to flip-normalized signal QBERs
    (aligned or raw, caller's choice).
    """
    y1 = y1_lower_bound(y_mu, y_nu, y_0, config.mu, config.nu)
    if y1 <= 0.0:
        return _pessimistic_bounds(y1)
    e1zz = e1zz_upper_bound(e_zz, y_mu, y_0, config.mu, y1)
    e1xy = tuple(
        e1xy_lower_bound(pair_qbers[lbl], y_mu, y_0, config.mu, y1)
        for lbl in _PAIR_ORDER)
    alpha, beta = c1_method1(*e1xy)
    a, b = c1_method2(
        pair_qbers["XX"], pair_qbers["XY"], pair_qbers["YX"],
        pair_qbers["YY"], y_mu, y_0, config.mu, y1)
    alpha2, beta2 = 2.0 * (1.0 - a) ** 2, 2.0 * (1.0 - b) ** 2
    c1 = c1_lower_bound((alpha, beta), (alpha2, beta2))
    i_e = eve_information_decoy(min(e1zz, 1.0 - 1e-15), c1)
    return DecoyBounds(
        y1_lower=y1, e1zz_upper=e1zz, e1xy_lower=e1xy,
        c1_alpha=alpha, c1_beta=beta, a_bound=a, b_bound=b,
        c1_alpha_m2=alpha2, c1_beta_m2=beta2, c1_lower=c1, i_e_upper=i_e)


def estimate_bounds(stats: ObservedStatistics, config: ProtocolConfig,
                    align: bool = True) -> DecoyBounds:
    """Extract rates from statistics and run the bound chain."""
    stats.require_complete()
    raw = {p.label: stats.qber(Intensity.SIGNAL, p) for p in ESTIMATION_PAIRS}
    if align:
        pair_qbers, _ = aligned_pair_qbers(stats)
    else:
        pair_qbers = raw
    return bounds_from_rates(
        stats.yield_for(Intensity.SIGNAL),
        stats.yield_for(Intensity.DECOY),
        stats.yield_for(Intensity.VACUUM),
        stats.qber(Intensity.SIGNAL, KEY_PAIR),
        _flip_values(pair_qbers),
        config)


def asymptotic_rate(stats: ObservedStatistics, config: ProtocolConfig,
                    align: bool = True) -> RatePoint:
    """Asymptotic secure key rate per pulse from observed statistics.

    R = -Y_mu h(E_muZZ) + mu e^-mu y1_lower (1 - I_E), floored at 0.
    Statistics may be raw; the flip convention (and, when ``align`` is set,
    the frame rotation) is applied internally.  Missing cells raise
    IncompleteStatisticsError naming the cell.
    """
    stats.require_complete()
    y_mu = stats.yield_for(Intensity.SIGNAL)
    y_nu = stats.yield_for(Intensity.DECOY)
    y_0 = stats.yield_for(Intensity.VACUUM)
    e_zz = stats.qber(Intensity.SIGNAL, KEY_PAIR)
    raw = tuple(stats.qber(Intensity.SIGNAL, p) for p in ESTIMATION_PAIRS)

    angle = None
    if align:
        qbers, angle = aligned_pair_qbers(stats)
    else:
        qbers = dict(zip(_PAIR_ORDER, raw))
    used = _flip_values(qbers)
    bounds = bounds_from_rates(y_mu, y_nu, y_0, e_zz, used, config)

    reason = None
    if bounds.y1_lower <= 0.0:
        reason = "y1_lower = 0: no certified single-photon detections"
        rate = 0.0
    else:
        rate = (-y_mu * binary_entropy(e_zz)
                + config.mu * math.exp(-config.mu) * bounds.y1_lower
                * (1.0 - bounds.i_e_upper))
        if rate <= 0.0:
            reason = "rate non-positive after leakage and error correction"
            rate = 0.0
    return RatePoint(
        rate=rate, bounds=bounds, y_mu=y_mu, y_nu=y_nu, y_0=y_0,
        e_mu_zz=e_zz, pair_qbers_raw=raw,
        pair_qbers_used=tuple(used[lbl] for lbl in _PAIR_ORDER),
        frame_angle=angle, aligned=align, reason=reason)
