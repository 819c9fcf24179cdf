"""Experiment orchestration: rate curves, finite-key sweeps, histograms,
oracle validation, and plot-ready CSV/JSON artifacts.

All Monte Carlo work is seeded through a single master seed, so identical
configurations produce byte-identical output files.
"""
from __future__ import annotations

import csv
import json
import math
import statistics as pystats
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .channel import (
    GroundTruth,
    IncompleteStatisticsError,
    ObservedStatistics,
    analytic_statistics,
    qber_histogram,
    simulate_rounds,
)
from .config import ConfigError, RunConfig
from .core import Intensity
from .decoy import RatePoint, asymptotic_rate, estimate_bounds
from .finitekey import FiniteKeyContext, finite_key_rate

__all__ = [
    "RateCurveRow",
    "RateReport",
    "ValidationReport",
    "run_rate_curve",
    "run_finite_sweep",
    "run_qber_histogram",
    "run_oracle_validation",
    "write_rate_csv",
    "read_rate_csv",
    "write_json_report",
]

#: Decimal rendering used in every CSV cell.
_FMT = "%.10g"


def _derived_seed(*key: int) -> int:
    """Deterministic 64-bit seed derived from a tuple of integers."""
    return int(np.random.SeedSequence(list(key)).generate_state(
        1, np.uint64)[0])


@dataclass
class RateCurveRow:
    """One sweep point; field names double as CSV column names."""

    length_km: float
    Y_mu: float
    Y_nu: float
    Y_0: float
    E_mu_zz: float
    E_mu_xx: float
    E_mu_xy: float
    E_mu_yx: float
    E_mu_yy: float
    y1_lower: float
    e1zz_upper: float
    c1_lower: float
    I_E: float
    R_asym: float
    r_finite: dict[float, float] = field(default_factory=dict)
    sem_R: float | None = None
    detail: dict = field(default_factory=dict)


@dataclass
class RateReport:
    """Rows of a sweep plus everything needed to audit them."""

    kind: str
    mode: str
    rows: list[RateCurveRow]
    segment_seconds: tuple[float, ...] = ()
    config_echo: dict = field(default_factory=dict)


def _config_echo(cfg: RunConfig) -> dict:
    echo = {
        "mode": cfg.mode, "seed": cfg.seed, "seeds": cfg.seeds,
        "align": cfg.align, "pulse_rate_hz": cfg.pulse_rate_hz,
        "sweep_km": list(cfg.sweep_km),
        "segment_seconds": list(cfg.segment_seconds),
        "protocol": asdict(cfg.protocol),
        "channel": asdict(cfg.channel),
        "drift": asdict(cfg.drift),
    }
    echo["protocol"]["pulse_ratio"] = list(cfg.protocol.pulse_ratio)
    return echo


def _row_from_point(length_km: float, point: RatePoint) -> RateCurveRow:
    raw = point.pair_qbers_raw
    return RateCurveRow(
        length_km=length_km,
        Y_mu=point.y_mu, Y_nu=point.y_nu, Y_0=point.y_0,
        E_mu_zz=point.e_mu_zz,
        E_mu_xx=raw[0], E_mu_xy=raw[1], E_mu_yx=raw[2], E_mu_yy=raw[3],
        y1_lower=point.bounds.y1_lower,
        e1zz_upper=point.bounds.e1zz_upper,
        c1_lower=point.bounds.c1_lower,
        I_E=point.bounds.i_e_upper,
        R_asym=point.rate,
        detail={
            "bounds": asdict(point.bounds),
            "pair_qbers_used": list(point.pair_qbers_used),
            "frame_angle": point.frame_angle,
            "aligned": point.aligned,
            "reason": point.reason,
            "yield_ordering_ok": point.y_mu >= point.y_nu >= point.y_0,
        },
    )


def _mean_row(length_km: float, rows: list[RateCurveRow]) -> RateCurveRow:
    """Average scalar columns across seeds; SEM of the asymptotic rate."""

    def mean(attr):
        return pystats.fmean(getattr(r, attr) for r in rows)

    rates = [r.R_asym for r in rows]
    sem = (pystats.stdev(rates) / math.sqrt(len(rates))
           if len(rates) > 1 else 0.0)
    segs = rows[0].r_finite.keys()
    merged = RateCurveRow(
        length_km=length_km,
        Y_mu=mean("Y_mu"), Y_nu=mean("Y_nu"), Y_0=mean("Y_0"),
        E_mu_zz=mean("E_mu_zz"),
        E_mu_xx=mean("E_mu_xx"), E_mu_xy=mean("E_mu_xy"),
        E_mu_yx=mean("E_mu_yx"), E_mu_yy=mean("E_mu_yy"),
        y1_lower=mean("y1_lower"), e1zz_upper=mean("e1zz_upper"),
        c1_lower=mean("c1_lower"), I_E=mean("I_E"), R_asym=mean("R_asym"),
        r_finite={s: pystats.fmean(r.r_finite[s] for r in rows)
                  for s in segs},
        sem_R=sem,
        detail={"per_seed": [r.detail for r in rows]},
    )
    return merged


def _statistics_for(cfg: RunConfig, length_km: float, seed_index: int,
                    n_pulses: int | None = None,
                    ) -> tuple[ObservedStatistics, GroundTruth | None]:
    model = cfg.channel.at_length(length_km)
    if cfg.mode == "analytic":
        stats = analytic_statistics(cfg.protocol, model,
                                    beta=cfg.drift.beta_initial,
                                    n_pulses=n_pulses)
        return stats, None
    seed = _derived_seed(cfg.seed, int(round(length_km * 1000)), seed_index)
    stats, truth = simulate_rounds(cfg.protocol, model, cfg.drift, seed,
                                   n_pulses=n_pulses)
    return stats, truth


def run_rate_curve(cfg: RunConfig) -> RateReport:
    """Asymptotic rate per sweep distance; mean and SEM across seeds in mc."""
    rows = []
    for length_km in cfg.sweep_km:
        n_reps = cfg.seeds if cfg.mode == "mc" else 1
        per_seed = []
        for rep in range(n_reps):
            stats, truth = _statistics_for(cfg, length_km, rep)
            point = asymptotic_rate(stats, cfg.protocol, align=cfg.align)
            row = _row_from_point(length_km, point)
            if truth is not None:
                row.detail["ground_truth"] = _truth_summary(truth)
            per_seed.append(row)
        row = per_seed[0] if n_reps == 1 else _mean_row(length_km, per_seed)
        if cfg.mode == "mc":
            row.sem_R = row.sem_R or 0.0
        rows.append(row)
    return RateReport(kind="rate_curve", mode=cfg.mode, rows=rows,
                      config_echo=_config_echo(cfg))


def run_finite_sweep(cfg: RunConfig) -> RateReport:
    """Rate curve plus finite-key columns, one per stationary segment length.

    Segment length maps to a pulse budget via the clock rate; the raw-key
    and estimation sample sizes are then read off the per-cell detected
    counts of that budget's statistics (not the idealized sent-pulse
    formula), so sifting and detection losses are accounted for.
    """
    rows = []
    for length_km in cfg.sweep_km:
        n_reps = cfg.seeds if cfg.mode == "mc" else 1
        per_seed = []
        for rep in range(n_reps):
            stats, truth = _statistics_for(cfg, length_km, rep)
            point = asymptotic_rate(stats, cfg.protocol, align=cfg.align)
            row = _row_from_point(length_km, point)
            for seconds in cfg.segment_seconds:
                n_pulses = int(round(seconds * cfg.pulse_rate_hz))
                seg_stats, _ = _statistics_for(cfg, length_km, rep,
                                               n_pulses=n_pulses)
                try:
                    ctx = FiniteKeyContext.from_statistics(seg_stats,
                                                           cfg.protocol)
                    finite = finite_key_rate(seg_stats, cfg.protocol, ctx,
                                             align=cfg.align)
                    row.r_finite[seconds] = finite.rate
                    row.detail.setdefault("finite", {})[str(seconds)] = {
                        "n_raw": ctx.n_raw, "m_est": ctx.m_est,
                        "overhead": finite.overhead,
                        "e_zz_corrected": finite.corrected.e_zz,
                        "pairs_corrected": list(finite.corrected.pairs),
                        "delta_n": finite.corrected.delta_n,
                        "delta_m": finite.corrected.delta_m,
                        "bounds": asdict(finite.bounds),
                        "reason": finite.reason,
                    }
                except (IncompleteStatisticsError, ValueError) as exc:
                    row.r_finite[seconds] = 0.0
                    row.detail.setdefault("finite", {})[str(seconds)] = {
                        "reason": f"refused: {exc}"}
            per_seed.append(row)
        rows.append(per_seed[0] if n_reps == 1
                    else _mean_row(length_km, per_seed))
    return RateReport(kind="finite_sweep", mode=cfg.mode, rows=rows,
                      segment_seconds=tuple(cfg.segment_seconds),
                      config_echo=_config_echo(cfg))


def run_qber_histogram(cfg: RunConfig) -> tuple[np.ndarray, np.ndarray]:
    """QBER distribution across stationary segments under random frame drift.

    Monte Carlo only: the histogram needs sampled frame angles, so analytic
    mode is refused.  Each segment starts at an independent uniform angle
    and evolves under the configured drift.
    """
    if cfg.mode != "mc":
        raise ConfigError(
            "qber histogram requires mode='mc': it histograms sampled "
            "frame angles, which analytic mode does not produce")
    length_km = cfg.sweep_km[0]
    model = cfg.channel.at_length(length_km)
    angle_rng = np.random.default_rng(
        np.random.SeedSequence([cfg.seed, 0xBE7A]))
    segments = []
    for i in range(cfg.histogram_segments):
        beta0 = float(angle_rng.uniform(0.0, 2.0 * math.pi))
        drift = cfg.drift.__class__(
            sigma_rad_per_sec=cfg.drift.sigma_rad_per_sec,
            beta_initial=beta0,
            pulse_rate_hz=cfg.drift.pulse_rate_hz)
        stats, _ = simulate_rounds(
            cfg.protocol, model, drift,
            _derived_seed(cfg.seed, 0x415, i),
            n_pulses=cfg.histogram_segment_pulses)
        segments.append(stats)
    return qber_histogram(segments)


def _truth_summary(truth: GroundTruth) -> dict:
    out: dict = {}
    try:
        out["y1_true"] = truth.yield_n(1)
        out["e1zz_true"] = truth.single_photon_error_zz()
        out["c1_true"] = truth.single_photon_quality()
    except IncompleteStatisticsError as exc:
        out["insufficient"] = str(exc)
    return out


@dataclass
class ValidationRow:
    length_km: float
    seed_index: int
    y1_lower: float = math.nan
    y1_true: float = math.nan
    e1zz_upper: float = math.nan
    e1zz_true: float = math.nan
    c1_lower: float = math.nan
    c1_true: float = math.nan
    refused: bool = False
    reason: str | None = None

    @property
    def y1_sound(self) -> bool:
        return self.y1_lower <= self.y1_true

    @property
    def e1zz_sound(self) -> bool:
        return self.e1zz_upper >= self.e1zz_true

    @property
    def c1_sound(self) -> bool:
        return self.c1_lower <= self.c1_true


@dataclass
class ValidationReport:
    rows: list[ValidationRow]
    failure_budget: float = 0.01

    def _rate(self, attr: str) -> float:
        checked = [r for r in self.rows if not r.refused]
        if not checked:
            return 0.0
        return sum(1 for r in checked if not getattr(r, attr)) / len(checked)

    @property
    def failure_rates(self) -> dict[str, float]:
        return {"y1": self._rate("y1_sound"),
                "e1zz": self._rate("e1zz_sound"),
                "c1": self._rate("c1_sound")}

    @property
    def passed(self) -> bool:
        return all(rate <= self.failure_budget
                   for rate in self.failure_rates.values())

    def table(self) -> str:
        lines = [f"{'L(km)':>6} {'seed':>5} {'y1_low':>12} {'y1_true':>12} "
                 f"{'e1zz_up':>12} {'e1zz_true':>12} {'c1_low':>9} "
                 f"{'c1_true':>9}  status"]
        for r in self.rows:
            if r.refused:
                lines.append(f"{r.length_km:6.1f} {r.seed_index:5d} "
                             f"{'-':>12} {'-':>12} {'-':>12} {'-':>12} "
                             f"{'-':>9} {'-':>9}  refused: {r.reason}")
                continue
            ok = r.y1_sound and r.e1zz_sound and r.c1_sound
            lines.append(
                f"{r.length_km:6.1f} {r.seed_index:5d} {r.y1_lower:12.6g} "
                f"{r.y1_true:12.6g} {r.e1zz_upper:12.6g} {r.e1zz_true:12.6g} "
                f"{r.c1_lower:9.6g} {r.c1_true:9.6g}  "
                f"{'ok' if ok else 'VIOLATION'}")
        rates = self.failure_rates
        lines.append(f"failure rates: y1={rates['y1']:.3%} "
                     f"e1zz={rates['e1zz']:.3%} c1={rates['c1']:.3%} "
                     f"(budget {self.failure_budget:.0%}) -> "
                     f"{'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _thin_cells(stats: ObservedStatistics, min_detections: float) -> list[str]:
    """Required cells whose detection counts are too small to bound from."""
    from .core import ESTIMATION_PAIRS, KEY_PAIR

    thin = []
    for intensity in Intensity:
        if stats.detected_count(intensity) < min_detections:
            thin.append(f"{intensity.name} pooled "
                        f"({stats.detected_count(intensity):.0f} detections)")
    for pair in (KEY_PAIR, *ESTIMATION_PAIRS):
        det = stats.detected_count(Intensity.SIGNAL, pair)
        if det < min_detections:
            thin.append(f"SIGNAL/{pair.label} ({det:.0f} detections)")
    return thin


def run_oracle_validation(cfg: RunConfig,
                          min_cell_detections: float = 10.0,
                          ) -> ValidationReport:
    """Check every decoy bound against Monte Carlo ground truth.

    Runs with too few detections in a required cell are flagged as refusals
    rather than counted as bound failures: a bound computed from a handful
    of clicks certifies nothing either way.
    """
    if cfg.mode != "mc":
        raise ConfigError("oracle validation requires mode='mc'")
    rows = []
    for length_km in cfg.sweep_km:
        for rep in range(cfg.seeds):
            stats, truth = _statistics_for(cfg, length_km, rep)
            row = ValidationRow(length_km=length_km, seed_index=rep)
            try:
                thin = _thin_cells(stats, min_cell_detections)
                if thin:
                    raise IncompleteStatisticsError(
                        "insufficient statistics: " + "; ".join(thin))
                bounds = estimate_bounds(stats, cfg.protocol,
                                         align=cfg.align)
                row.y1_lower = bounds.y1_lower
                row.e1zz_upper = bounds.e1zz_upper
                row.c1_lower = bounds.c1_lower
                row.y1_true = truth.yield_n(1)
                row.e1zz_true = truth.single_photon_error_zz()
                row.c1_true = truth.single_photon_quality()
            except IncompleteStatisticsError as exc:
                row.refused = True
                row.reason = str(exc)
            rows.append(row)
    return ValidationReport(rows=rows)


# ---------------------------------------------------------------------------
# file emission
# ---------------------------------------------------------------------------

def _csv_columns(report: RateReport) -> list[str]:
    cols = ["length_km", "Y_mu", "Y_nu", "Y_0", "E_mu_zz", "E_mu_xx",
            "E_mu_xy", "E_mu_yx", "E_mu_yy", "y1_lower", "e1zz_upper",
            "c1_lower", "I_E", "R_asym"]
    cols += [f"r_finite_{_FMT % s}" for s in report.segment_seconds]
    if report.mode == "mc":
        cols.append("sem_R")
    return cols


def write_rate_csv(report: RateReport, path: str | Path) -> None:
    """Emit one row per sweep point with 10-significant-digit rendering."""
    cols = _csv_columns(report)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(cols)
        for row in report.rows:
            values = [row.length_km, row.Y_mu, row.Y_nu, row.Y_0,
                      row.E_mu_zz, row.E_mu_xx, row.E_mu_xy, row.E_mu_yx,
                      row.E_mu_yy, row.y1_lower, row.e1zz_upper,
                      row.c1_lower, row.I_E, row.R_asym]
            values += [row.r_finite[s] for s in report.segment_seconds]
            if report.mode == "mc":
                values.append(row.sem_R or 0.0)
            writer.writerow([_FMT % v for v in values])


def read_rate_csv(path: str | Path) -> tuple[list[str], list[list[float]]]:
    """Parse a rate CSV back into (header, rows of floats)."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = [[float(cell) for cell in line] for line in reader]
    return header, rows


def write_json_report(report: RateReport, path: str | Path) -> None:
    """Full audit trail: every bound with the inputs it came from."""
    payload = {
        "kind": report.kind,
        "mode": report.mode,
        "segment_seconds": list(report.segment_seconds),
        "config": report.config_echo,
        "rows": [
            {
                **{k: v for k, v in asdict(row).items()
                   if k not in ("r_finite", "detail")},
                "r_finite": {_FMT % s: v for s, v in row.r_finite.items()},
                "detail": row.detail,
            }
            for row in report.rows
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True))


def write_histogram_csv(edges: np.ndarray, counts: np.ndarray,
                        path: str | Path) -> None:
    """Emit bin,count rows; the bin column is the right edge of each bin."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["bin", "count"])
        for right, count in zip(edges[1:], counts):
            writer.writerow([_FMT % right, int(count)])
