"""Channel physics: analytic yield/error model and Monte Carlo simulator.

The analytic model and the per-round simulator are two views of the same
physics and are required to agree: the simulator samples detections with
``1 - (1 - Y0) (1 - eta)^n`` per n-photon pulse, whose Poisson average is
exactly the analytic yield ``Y0 + (1 - Y0)(1 - exp(-eta mu))``.  Errors
split into a random dark-count part (weight 1/2) and a signal part whose
frame dependence follows the rotated single-photon correlations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    ALL_PAIRS,
    ESTIMATION_PAIRS,
    Basis,
    BasisPair,
    Intensity,
    KEY_PAIR,
    ProtocolConfig,
    wrap_angle,
)

__all__ = [
    "ChannelModel",
    "DriftProcess",
    "ObservedStatistics",
    "GroundTruth",
    "IncompleteStatisticsError",
    "DEFAULT_VISIBILITY",
    "calibrate_visibility",
    "analytic_yield",
    "analytic_qber",
    "analytic_statistics",
    "simulate_rounds",
    "normalize_flip_convention",
    "qber_histogram",
]

#: Photon numbers above this are pooled into the last ground-truth bucket.
#: Poisson(0.6) mass beyond 10 photons is below 1e-9.
N_MAX_PHOTONS = 10

#: Histogram bin width used for QBER distributions.
QBER_BIN_WIDTH = 0.005

#: Default interference visibility.  Chosen so that the analytic Z-basis
#: error rate at 0 km with the default source and detectors equals 0.0035;
#: see ``calibrate_visibility``.
DEFAULT_VISIBILITY = 0.9942438678834947


class IncompleteStatisticsError(ValueError):
    """Raised when an estimator needs a statistics cell that has no data."""


@dataclass(frozen=True)
class ChannelModel:
    """Fiber, detector and interference parameters of one link."""

    length_km: float = 0.0
    fiber_loss_db_per_km: float = 0.20
    detector_efficiency: float = 0.11
    dark_count_per_gate: float = 4e-5
    num_detectors: int = 2
    visibility: float = DEFAULT_VISIBILITY
    after_pulse_prob: float = 0.00358

    def __post_init__(self) -> None:
        if self.length_km < 0.0:
            raise ValueError(f"length_km must be >= 0, got {self.length_km}")
        if self.fiber_loss_db_per_km < 0.0:
            raise ValueError("fiber_loss_db_per_km must be >= 0")
        if not 0.0 < self.detector_efficiency <= 1.0:
            raise ValueError(
                f"detector_efficiency must lie in (0, 1], got "
                f"{self.detector_efficiency}")
        for name in ("dark_count_per_gate", "visibility", "after_pulse_prob"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {val}")
        if self.num_detectors < 1:
            raise ValueError("num_detectors must be >= 1")

    @property
    def transmittance(self) -> float:
        """Overall single-photon transmittance eta (fiber times detector)."""
        return self.detector_efficiency * 10.0 ** (
            -self.fiber_loss_db_per_km * self.length_km / 10.0)

    @property
    def background_yield(self) -> float:
        """Click probability per gate with no photons present.

        The detectors fire independently, so for two detectors at dark-count
        probability p the background is 1 - (1 - p)^2.  After-pulsing is a
        per-click effect over 100x smaller than the dark counts here; it is
        accepted in the model but not expanded into a correlated click model.
        """
        return 1.0 - (1.0 - self.dark_count_per_gate) ** self.num_detectors

    def at_length(self, length_km: float) -> "ChannelModel":
        return replace(self, length_km=length_km)


def calibrate_visibility(target_e_zz: float = 0.0035,
                         model: ChannelModel | None = None,
                         mu: float = 0.6) -> float:
    """Visibility that makes the analytic Z-basis QBER at mu equal the target.

    Used once to fix ``DEFAULT_VISIBILITY`` from the default device
    parameters at 0 km.
    """
    model = model or ChannelModel()
    y0 = model.background_yield
    signal = (1.0 - y0) * (1.0 - math.exp(-model.transmittance * mu))
    e_sig = (target_e_zz * (y0 + signal) - y0 / 2.0) / signal
    if not 0.0 <= e_sig <= 0.5:
        raise ValueError(
            f"target_e_zz={target_e_zz} not reachable at these parameters")
    return 1.0 - 2.0 * e_sig


@dataclass(frozen=True)
class DriftProcess:
    """Random-walk model of the slow frame-rotation angle.

    ``sigma_rad_per_sec`` is the standard deviation of the angle increment
    accumulated over one second (Wiener scaling: std over t seconds is
    sigma * sqrt(t)).  The default keeps beta essentially frozen over a
    50 s segment at 1 MHz, matching a slowly varying interferometer phase.
    """

    sigma_rad_per_sec: float = 1e-3
    beta_initial: float = 0.0
    pulse_rate_hz: float = 1e6

    def __post_init__(self) -> None:
        if self.sigma_rad_per_sec < 0.0:
            raise ValueError("sigma_rad_per_sec must be >= 0")
        if self.pulse_rate_hz <= 0.0:
            raise ValueError("pulse_rate_hz must be > 0")

    @property
    def sigma_per_pulse(self) -> float:
        return self.sigma_rad_per_sec / math.sqrt(self.pulse_rate_hz)


def _pair_index(pair: BasisPair) -> tuple[int, int]:
    return pair.alice.value, pair.bob.value


def _signal_error_factor(pair: BasisPair, beta: float) -> float:
    """Correlation factor M such that the signal error rate is (1 - V*M)/2.

    XX and YY carry cos(beta), XY carries -sin(beta), YX carries +sin(beta),
    ZZ is frame independent (M = 1).  Pairs mixing Z with X/Y carry no
    correlation (M = 0, error rate 1/2).
    """
    a, b = pair.alice, pair.bob
    if a is Basis.Z and b is Basis.Z:
        return 1.0
    if a is Basis.Z or b is Basis.Z:
        return 0.0
    if a is b:
        return math.cos(beta)
    if a is Basis.X:  # (X, Y)
        return -math.sin(beta)
    return math.sin(beta)  # (Y, X)


@dataclass
class ObservedStatistics:
    """Sent/detected/error counts per (intensity, Alice basis, Bob basis).

    Counts are stored as float64 so the same container holds integer Monte
    Carlo tallies and expected-value analytic statistics.  ``beta_mean`` is
    simulation metadata: the average frame angle over the accumulated rounds.
    """

    sent: np.ndarray = field(
        default_factory=lambda: np.zeros((3, 3, 3)))
    detected: np.ndarray = field(
        default_factory=lambda: np.zeros((3, 3, 3)))
    errors: np.ndarray = field(
        default_factory=lambda: np.zeros((3, 3, 3)))
    beta_mean: float | None = None

    def __add__(self, other: "ObservedStatistics") -> "ObservedStatistics":
        beta = None
        if self.beta_mean is not None and other.beta_mean is not None:
            w1, w2 = self.sent.sum(), other.sent.sum()
            if w1 + w2 > 0:
                beta = (self.beta_mean * w1 + other.beta_mean * w2) / (w1 + w2)
        elif self.beta_mean is not None or other.beta_mean is not None:
            beta = self.beta_mean if self.beta_mean is not None else other.beta_mean
        return ObservedStatistics(
            sent=self.sent + other.sent,
            detected=self.detected + other.detected,
            errors=self.errors + other.errors,
            beta_mean=beta,
        )

    # -- count accessors ---------------------------------------------------
    def sent_count(self, intensity: Intensity,
                   pair: BasisPair | None = None) -> float:
        block = self.sent[intensity.value]
        return float(block.sum() if pair is None else block[_pair_index(pair)])

    def detected_count(self, intensity: Intensity,
                       pair: BasisPair | None = None) -> float:
        block = self.detected[intensity.value]
        return float(block.sum() if pair is None else block[_pair_index(pair)])

    def error_count(self, intensity: Intensity,
                    pair: BasisPair | None = None) -> float:
        block = self.errors[intensity.value]
        return float(block.sum() if pair is None else block[_pair_index(pair)])

    # -- derived quantities --------------------------------------------------
    def yield_for(self, intensity: Intensity) -> float:
        """Detected/sent pooled over all basis pairs."""
        sent = self.sent_count(intensity)
        if sent <= 0:
            raise IncompleteStatisticsError(
                f"no pulses sent at intensity {intensity.name}")
        return self.detected_count(intensity) / sent

    def qber(self, intensity: Intensity, pair: BasisPair) -> float:
        det = self.detected_count(intensity, pair)
        if det <= 0:
            raise IncompleteStatisticsError(
                f"no detections in cell {intensity.name}/{pair.label}")
        return self.error_count(intensity, pair) / det

    def correlation(self, intensity: Intensity, pair: BasisPair) -> float:
        """Signed correlation 1 - 2*QBER of one cell."""
        return 1.0 - 2.0 * self.qber(intensity, pair)

    @property
    def yield_ordering_ok(self) -> bool:
        """Whether Y_signal >= Y_decoy >= Y_vacuum as physically expected.

        Statistical fluctuations may briefly violate the ordering on thin
        samples; estimators still run, but reports flag it.
        """
        try:
            return (self.yield_for(Intensity.SIGNAL)
                    >= self.yield_for(Intensity.DECOY)
                    >= self.yield_for(Intensity.VACUUM))
        except IncompleteStatisticsError:
            return False

    # -- completeness ----------------------------------------------------------
    def missing_cells(self) -> list[str]:
        """Cells required by the rate estimators that carry no data."""
        missing = []
        for intensity in Intensity:
            if self.sent_count(intensity) <= 0:
                missing.append(f"{intensity.name}: no pulses sent")
        for pair in (KEY_PAIR, *ESTIMATION_PAIRS):
            if self.detected_count(Intensity.SIGNAL, pair) <= 0:
                missing.append(f"SIGNAL/{pair.label}: no detections")
        return missing

    @property
    def is_complete(self) -> bool:
        return not self.missing_cells()

    def require_complete(self) -> None:
        missing = self.missing_cells()
        if missing:
            raise IncompleteStatisticsError(
                "statistics incomplete: " + "; ".join(missing))


@dataclass
class GroundTruth:
    """Oracle-only per-photon-number bookkeeping from the simulator.

    Index n runs over 0..10 photons, the last bucket pooling n >= 10.
    """

    sent: np.ndarray = field(
        default_factory=lambda: np.zeros(N_MAX_PHOTONS + 1))
    detected: np.ndarray = field(
        default_factory=lambda: np.zeros(N_MAX_PHOTONS + 1))
    detected_by_pair: np.ndarray = field(
        default_factory=lambda: np.zeros((N_MAX_PHOTONS + 1, 3, 3)))
    errors_by_pair: np.ndarray = field(
        default_factory=lambda: np.zeros((N_MAX_PHOTONS + 1, 3, 3)))

    def __add__(self, other: "GroundTruth") -> "GroundTruth":
        return GroundTruth(
            sent=self.sent + other.sent,
            detected=self.detected + other.detected,
            detected_by_pair=self.detected_by_pair + other.detected_by_pair,
            errors_by_pair=self.errors_by_pair + other.errors_by_pair,
        )

    def yield_n(self, n: int) -> float:
        if self.sent[n] <= 0:
            raise IncompleteStatisticsError(f"no pulses with {n} photons")
        return float(self.detected[n] / self.sent[n])

    def error_rate(self, n: int, pair: BasisPair) -> float:
        det = self.detected_by_pair[n][_pair_index(pair)]
        if det <= 0:
            raise IncompleteStatisticsError(
                f"no {pair.label} detections with {n} photons")
        return float(self.errors_by_pair[n][_pair_index(pair)] / det)

    def single_photon_quality(self) -> float:
        """True quality parameter C of the single-photon events."""
        raw = sum((1.0 - 2.0 * self.error_rate(1, pair)) ** 2
                  for pair in ESTIMATION_PAIRS)
        return min(max(raw, 0.0), 2.0)

    def single_photon_error_zz(self) -> float:
        return self.error_rate(1, KEY_PAIR)


# ---------------------------------------------------------------------------
# analytic model
# ---------------------------------------------------------------------------

def analytic_yield(model: ChannelModel, mean_photons: float) -> float:
    """Expected detection probability per pulse of the given mean intensity.

    Background and photon clicks combine without double counting:
    Y = Y0 + (1 - Y0)(1 - exp(-eta mu)).
    """
    if mean_photons < 0.0:
        raise ValueError(f"mean_photons must be >= 0, got {mean_photons}")
    y0 = model.background_yield
    return y0 + (1.0 - y0) * (1.0 - math.exp(-model.transmittance * mean_photons))


def analytic_qber(model: ChannelModel, mean_photons: float,
                  pair: BasisPair, beta: float = 0.0) -> float:
    """Expected error probability per detected event of one basis-pair cell.

    Dark counts land on either detector with probability 1/2; photon clicks
    err with the beta-dependent single-photon rate scaled by the visibility.
    """
    y0 = model.background_yield
    e_sig = (1.0 - model.visibility * _signal_error_factor(pair, beta)) / 2.0
    photon = (1.0 - y0) * (1.0 - math.exp(-model.transmittance * mean_photons))
    total = y0 + photon
    if total == 0.0:
        return 0.5  # nothing ever clicks; a conditional error is conventionally random
    return (0.5 * y0 + e_sig * photon) / total


def analytic_statistics(config: ProtocolConfig, model: ChannelModel,
                        beta: float = 0.0,
                        n_pulses: float | None = None) -> ObservedStatistics:
    """Expected-value statistics for a frozen frame angle.

    Counts are expected values (floats), so downstream ratios are exact;
    useful for theory curves and as the reference for Monte Carlo checks.
    """
    n_total = float(config.n_total_pulses if n_pulses is None else n_pulses)
    beta = wrap_angle(beta)
    stats = ObservedStatistics(beta_mean=beta)
    pulse_probs = config.pulse_probabilities
    for intensity in Intensity:
        mean = config.mean_photons(intensity)
        yield_i = analytic_yield(model, mean)
        for pair in ALL_PAIRS:
            p_cell = (pulse_probs[intensity.value]
                      * config.basis_probability(pair.alice)
                      * config.basis_probability(pair.bob))
            sent = n_total * p_cell
            detected = sent * yield_i
            errors = detected * analytic_qber(model, mean, pair, beta)
            idx = (intensity.value, *_pair_index(pair))
            stats.sent[idx] = sent
            stats.detected[idx] = detected
            stats.errors[idx] = errors
    return stats


# ---------------------------------------------------------------------------
# Monte Carlo simulator
# ---------------------------------------------------------------------------

class _SimulatorTables:
    """Per-run precomputed lookup tables for the chunk kernel."""

    #: photon-number cap for the inverse-CDF Poisson tables; Poisson(0.6)
    #: mass beyond 64 photons is far below float64 resolution.
    POISSON_CAP = 64

    def __init__(self, config: ProtocolConfig, model: ChannelModel):
        self.y0 = model.background_yield
        self.visibility = model.visibility
        pulse = config.pulse_probabilities
        pb = [config.basis_probability(Basis(b)) for b in range(3)]
        # joint (intensity, alice, bob) cell distribution, 27 outcomes
        joint = np.array([pulse[i] * pb[a] * pb[b]
                          for i in range(3) for a in range(3)
                          for b in range(3)])
        self.cell_cdf = np.cumsum(joint)
        # inverse-CDF Poisson tables for the two bright intensities
        n = np.arange(self.POISSON_CAP + 1)
        log_fact = np.cumsum(np.concatenate(([0.0], np.log(n[1:]))))

        def cdf(mean):
            pmf = np.exp(n * math.log(mean) - mean - log_fact)
            return np.cumsum(pmf)

        self.poisson_cdf = {Intensity.SIGNAL.value: cdf(config.mu),
                            Intensity.DECOY.value: cdf(config.nu)}
        # survival probability (1 - eta)^n per photon number
        self.no_click = np.power(1.0 - model.transmittance, n.astype(float))


def _error_factor_table(beta: float) -> np.ndarray:
    """M factor per (alice*3 + bob) basis cell at a frozen frame angle."""
    table = np.zeros(9)
    cb, sb = math.cos(beta), math.sin(beta)
    table[Basis.X.value * 3 + Basis.X.value] = cb
    table[Basis.Y.value * 3 + Basis.Y.value] = cb
    table[Basis.X.value * 3 + Basis.Y.value] = -sb
    table[Basis.Y.value * 3 + Basis.X.value] = sb
    table[Basis.Z.value * 3 + Basis.Z.value] = 1.0
    return table


def _simulate_chunk(rng, m, beta_start, tables, drift, stats, truth):
    """Simulate m rounds; returns (final beta, sum of betas).

    Draw order per chunk is fixed (drift increments, joint intensity/basis
    cell, photon number, detection+error), which makes runs bit-reproducible
    for identical inputs.  Detection and error share one uniform: the error
    event is a sub-event of detection, so u < p(detect and err) nests inside
    u < p(detect).
    """
    y0 = tables.y0

    if drift.sigma_rad_per_sec > 0.0:
        steps = rng.normal(0.0, drift.sigma_per_pulse, m)
        beta = beta_start + np.cumsum(steps)
        beta_end = float(beta[-1])
        beta_sum = float(np.sum(beta))
    else:
        beta = None
        beta_end = beta_start
        beta_sum = beta_start * m

    cell27 = np.searchsorted(tables.cell_cdf, rng.random(m), side="right")
    cell27 = np.minimum(cell27, 26)
    intensity = cell27 // 9
    cell9 = cell27 - intensity * 9

    u_photon = rng.random(m)
    photons = np.zeros(m, dtype=np.int64)
    for value, cdf in tables.poisson_cdf.items():
        sel = intensity == value
        photons[sel] = np.minimum(
            np.searchsorted(cdf, u_photon[sel], side="right"),
            tables.POISSON_CAP)

    no_photon_click = tables.no_click[photons]
    p_detect = 1.0 - (1.0 - y0) * no_photon_click

    if beta is None:
        e_sig = ((1.0 - tables.visibility * _error_factor_table(beta_start))
                 / 2.0)[cell9]
    else:
        cb, sb = np.cos(beta), np.sin(beta)
        alice = cell9 // 3
        bob = cell9 - alice * 3
        m_factor = np.zeros(m)
        np.copyto(m_factor, cb, where=(alice == bob) & (alice != Basis.Z.value))
        np.copyto(m_factor, -sb,
                  where=(alice == Basis.X.value) & (bob == Basis.Y.value))
        np.copyto(m_factor, sb,
                  where=(alice == Basis.Y.value) & (bob == Basis.X.value))
        np.copyto(m_factor, 1.0,
                  where=(alice == Basis.Z.value) & (bob == Basis.Z.value))
        e_sig = (1.0 - tables.visibility * m_factor) / 2.0

    # P(detected and error); errors only ever occur on detected rounds
    p_detect_and_error = 0.5 * y0 + e_sig * (p_detect - y0)
    u = rng.random(m)
    detected = u < p_detect
    errors = u < p_detect_and_error

    stats.sent += np.bincount(cell27, minlength=27).reshape(3, 3, 3)
    stats.detected += np.bincount(
        cell27[detected], minlength=27).reshape(3, 3, 3)
    stats.errors += np.bincount(
        cell27[errors], minlength=27).reshape(3, 3, 3)

    n_clamped = np.minimum(photons, N_MAX_PHOTONS)
    truth.sent += np.bincount(n_clamped, minlength=N_MAX_PHOTONS + 1)
    key = n_clamped * 9 + cell9
    bins = (N_MAX_PHOTONS + 1) * 9
    det_pair = np.bincount(
        key[detected], minlength=bins).reshape(N_MAX_PHOTONS + 1, 3, 3)
    truth.detected += det_pair.sum(axis=(1, 2))
    truth.detected_by_pair += det_pair
    truth.errors_by_pair += np.bincount(
        key[errors], minlength=bins).reshape(N_MAX_PHOTONS + 1, 3, 3)

    return beta_end, beta_sum


def simulate_rounds(config: ProtocolConfig, model: ChannelModel,
                    drift: DriftProcess, seed: int,
                    n_pulses: int | None = None,
                    chunk_size: int = 1 << 21,
                    ) -> tuple[ObservedStatistics, GroundTruth]:
    """Run the full per-round protocol simulation.

    Per round: advance beta, draw intensity by pulse ratio, draw Alice and
    Bob bases, draw a Poisson photon number, decide detection, decide error.
    The pulse stream is processed in contiguous chunks with seeds derived
    from a single SeedSequence; tallies merge additively, so the result is
    deterministic for identical (config, model, drift, seed).
    """
    n_total = int(config.n_total_pulses if n_pulses is None else n_pulses)
    if n_total < 1:
        raise ValueError("need at least one pulse")
    stats = ObservedStatistics()
    truth = GroundTruth()
    tables = _SimulatorTables(config, model)
    n_chunks = (n_total + chunk_size - 1) // chunk_size
    seeds = np.random.SeedSequence(seed).spawn(n_chunks)
    beta = wrap_angle(drift.beta_initial)
    beta_total = 0.0
    done = 0
    for i in range(n_chunks):
        m = min(chunk_size, n_total - done)
        rng = np.random.default_rng(seeds[i])
        beta, beta_sum = _simulate_chunk(
            rng, m, beta, tables, drift, stats, truth)
        beta_total += beta_sum
        done += m
    stats.beta_mean = beta_total / n_total
    return stats, truth


# ---------------------------------------------------------------------------
# post-processing
# ---------------------------------------------------------------------------

def normalize_flip_convention(stats: ObservedStatistics) -> ObservedStatistics:
    """Relabel Bob's bits so every X/Y estimation QBER is >= 1/2.

    The decision is driven by the signal-intensity QBER of each pair and the
    flip is applied to that pair at all intensities simultaneously: it models
    a relabeling of Bob's bits for the pair, not per-intensity selection.
    Idempotent; quality parameters built from (1 - 2E)^2 are unchanged.
    """
    stats.require_complete()
    out = ObservedStatistics(
        sent=stats.sent.copy(),
        detected=stats.detected.copy(),
        errors=stats.errors.copy(),
        beta_mean=stats.beta_mean,
    )
    for pair in ESTIMATION_PAIRS:
        if stats.qber(Intensity.SIGNAL, pair) < 0.5:
            idx = _pair_index(pair)
            for intensity in Intensity:
                cell = (intensity.value, *idx)
                out.errors[cell] = out.detected[cell] - out.errors[cell]
    return out


def qber_histogram(stats_timeseries,
                   bin_width: float = QBER_BIN_WIDTH,
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Histogram of signal-intensity X/Y QBERs across stationary segments.

    Bin k covers (k*w, (k+1)*w]; a value of exactly 0 lands in the first
    bin.  Returns (edges, counts) with 1/bin_width bins spanning [0, 1].
    Cells without detections contribute no value.
    """
    segments = list(stats_timeseries)
    if not segments:
        raise ValueError("need at least one segment")
    n_bins = int(round(1.0 / bin_width))
    values = []
    for stats in segments:
        for pair in ESTIMATION_PAIRS:
            if stats.detected_count(Intensity.SIGNAL, pair) > 0:
                values.append(stats.qber(Intensity.SIGNAL, pair))
    values = np.asarray(values)
    idx = np.ceil(values / bin_width - 1e-9).astype(np.int64) - 1
    idx = np.clip(idx, 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    return edges, counts
