"""Acceptance suite: one test per criterion, at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
PASS/FAIL lines and measured values.

Two checks are expected to fail with the pinned device defaults and are
left failing deliberately rather than loosened; the measured values are
printed and the analysis lives in the project notes:

* criterion 4: the analytic zero-rate distance lands near 104 km, outside
  the stated 70..95 km window.  The published experiment crossed at 85 km,
  but its receiver carried ~2.5 dB of unpublished internal loss; with the
  documented default of 11% detector efficiency and 8e-5 background the
  channel genuinely supports key past 95 km.
* criterion 5 (second clause): the 5 s finite-key rate at 25 km is
  positive (~3e-3), not zero, for the same reason: the idealized channel
  yields ~7.7k raw-key detections there, enough to survive the deviation
  penalty.
"""
import math
import time

import numpy as np
import pytest

from rfiqkd import (
    ChannelModel,
    DriftProcess,
    ESTIMATION_PAIRS,
    FiniteKeyContext,
    Intensity,
    ProtocolConfig,
    RunConfig,
    analytic_qber,
    analytic_statistics,
    analytic_yield,
    asymptotic_rate,
    delta,
    e1zz_upper_bound,
    estimate_bounds,
    finite_key_rate,
    simulate_rounds,
    y1_lower_bound,
)
from rfiqkd.cli import main
from rfiqkd.core import ALL_PAIRS, KEY_PAIR


def _report(criterion, passed, detail):
    print(f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} - {detail}")


# ---------------------------------------------------------------------------
# criterion 1: frame invariance of the asymptotic rate
# ---------------------------------------------------------------------------

def test_criterion_1_beta_invariance():
    config = ProtocolConfig()
    t0 = time.perf_counter()
    spreads = {}
    for km in (0.0, 50.0):
        model = ChannelModel(length_km=km)
        rates = [asymptotic_rate(
            analytic_statistics(config, model, beta=b), config).rate
            for b in np.linspace(0.0, 2 * math.pi, 100)]
        spreads[km] = max(rates) - min(rates)
    elapsed = time.perf_counter() - t0
    ok = all(s < 1e-9 for s in spreads.values()) and elapsed < 1.0
    _report(1, ok, f"rate spread over 100-point beta grid: "
                   f"0 km {spreads[0.0]:.3e}, 50 km {spreads[50.0]:.3e}; "
                   f"runtime {elapsed:.2f} s (< 1 s)")
    assert spreads[0.0] < 1e-9
    assert spreads[50.0] < 1e-9
    assert elapsed < 1.0


# ---------------------------------------------------------------------------
# criterion 2: decoy-bound soundness against Monte Carlo ground truth
# ---------------------------------------------------------------------------

def test_criterion_2_decoy_bound_soundness():
    # Device defaults with a frozen frame at the documented default angle 0
    # (criterion 1 separately certifies the rate is angle-independent).  At
    # intermediate angles every pair QBER sits near maximum binomial
    # variance and the ground-truth comparison itself becomes noise-bound.
    config = ProtocolConfig()
    drift = DriftProcess(sigma_rad_per_sec=0.0, beta_initial=0.0)
    n_seeds = 50
    t0 = time.perf_counter()
    violations = {"y1": 0, "e1zz": 0, "c1": 0}
    total = 0
    for km_index, km in enumerate((0.0, 25.0, 50.0)):
        model = ChannelModel(length_km=km)
        for rep in range(n_seeds):
            seed = int(np.random.SeedSequence(
                [20130205, km_index, rep]).generate_state(1, np.uint64)[0])
            stats, truth = simulate_rounds(config, model, drift, seed,
                                           n_pulses=10_000_000)
            bounds = estimate_bounds(stats, config)
            total += 1
            if bounds.y1_lower > truth.yield_n(1):
                violations["y1"] += 1
            if bounds.e1zz_upper < truth.single_photon_error_zz():
                violations["e1zz"] += 1
            if bounds.c1_lower > truth.single_photon_quality():
                violations["c1"] += 1
    elapsed = time.perf_counter() - t0
    rates = {k: v / total for k, v in violations.items()}
    ok = all(r <= 0.01 for r in rates.values()) and elapsed < 300.0
    _report(2, ok, f"violation rates over {total} runs: "
                   f"y1 {rates['y1']:.2%}, e1zz {rates['e1zz']:.2%}, "
                   f"c1 {rates['c1']:.2%} (budget 1% each); "
                   f"runtime {elapsed:.0f} s (< 300 s)")
    for name, rate in rates.items():
        assert rate <= 0.01, f"{name} violation rate {rate:.2%}"
    assert elapsed < 300.0


# ---------------------------------------------------------------------------
# criterion 3: golden-value fidelity
# ---------------------------------------------------------------------------

def test_criterion_3_golden_values():
    t0 = time.perf_counter()
    y1 = y1_lower_bound(0.0583155, 0.0198813, 8e-5, 0.6, 0.2)
    e1zz = e1zz_upper_bound(0.0035, 0.0583155, 8e-5, 0.6, 0.093042)
    dev = delta(142937, 1e-5)
    elapsed = time.perf_counter() - t0
    ok = (abs(y1 - 0.09304) <= 1e-5 and abs(e1zz - 5.945e-3) <= 1e-5
          and abs(dev - 0.01110) <= 1e-5 and elapsed < 1.0)
    _report(3, ok, f"y1_lower {y1:.6f} (0.09304 +- 1e-5), "
                   f"e1zz_upper {e1zz:.6f} (5.945e-3 +- 1e-5), "
                   f"delta {dev:.6f} (0.01110 +- 1e-5); "
                   f"runtime {elapsed:.3f} s (< 1 s)")
    assert y1 == pytest.approx(0.09304, abs=1e-5)
    assert e1zz == pytest.approx(5.945e-3, abs=1e-5)
    assert dev == pytest.approx(0.01110, abs=1e-5)
    assert elapsed < 1.0


# ---------------------------------------------------------------------------
# criterion 4: zero-rate distance of the analytic asymptotic curve
# ---------------------------------------------------------------------------

def _asymptotic_rate_at(config, km):
    stats = analytic_statistics(config, ChannelModel(length_km=km), beta=0.0)
    return asymptotic_rate(stats, config).rate


def test_criterion_4_zero_rate_distance():
    config = ProtocolConfig()
    t0 = time.perf_counter()
    grid = np.arange(0.0, 130.0, 1.0)
    rates = [_asymptotic_rate_at(config, km) for km in grid]
    crossing = None
    for km, rate in zip(grid, rates):
        if rate == 0.0:
            crossing = km
            break
    elapsed = time.perf_counter() - t0
    r0 = rates[0]
    ratio = r0 / 5.474e-3
    in_window = crossing is not None and 70.0 <= crossing <= 95.0
    _report(4, in_window and elapsed < 1.0,
            f"zero-rate onset at {crossing} km (required window 70..95 km); "
            f"R(0 km) = {r0:.4g} = {ratio:.2f} x 5.474e-3 (informational; "
            f"property-level reproduction); runtime {elapsed:.2f} s (< 1 s)")
    assert elapsed < 1.0
    assert crossing is not None, "curve never reaches zero by 130 km"
    assert 70.0 <= crossing <= 95.0, (
        f"zero-rate onset at {crossing} km lies outside the stated "
        f"70..95 km window; with the documented device defaults "
        f"(11% efficiency, 8e-5 background, E_zz(0)=0.0035) the modeled "
        f"channel genuinely supports key to ~104 km. See notes.")


# ---------------------------------------------------------------------------
# criterion 5: finite-key ordering and convergence
# ---------------------------------------------------------------------------

def _finite_rate_at(config, km, seconds, pulse_rate=1e6):
    n_pulses = seconds * pulse_rate
    stats = analytic_statistics(config, ChannelModel(length_km=km),
                                beta=0.0, n_pulses=n_pulses)
    ctx = FiniteKeyContext.from_statistics(stats, config)
    return finite_key_rate(stats, config, ctx).rate


def _cutoff(config, seconds):
    for km in np.arange(0.0, 130.0, 2.5):
        if _finite_rate_at(config, km, seconds) == 0.0:
            return km
    return math.inf


def test_criterion_5_finite_key_ordering():
    config = ProtocolConfig()
    t0 = time.perf_counter()
    cutoffs = {s: _cutoff(config, s) for s in (5.0, 50.0, 200.0)}
    r5_at_0 = _finite_rate_at(config, 0.0, 5.0)

    # finite < asymptotic at every probed point
    dominated = True
    for km in (0.0, 25.0, 50.0, 75.0):
        asym = _asymptotic_rate_at(config, km)
        for s in (5.0, 50.0, 200.0):
            if _finite_rate_at(config, km, s) > asym + 1e-15:
                dominated = False

    # convergence: n = 1e12 within 1e-4 of asymptotic
    stats = analytic_statistics(config, ChannelModel(length_km=25.0),
                                beta=0.0)
    ctx = FiniteKeyContext(n_raw=1e12, m_est=1e12, n_pulses_total=9e12,
                           eps_pe=1e-5, eps_pa=1e-5, eps_ec=1e-5,
                           eps_bar=1e-5)
    gap = abs(finite_key_rate(stats, config, ctx).rate
              - asymptotic_rate(stats, config).rate)
    elapsed = time.perf_counter() - t0

    ordered = cutoffs[5.0] < cutoffs[50.0] < cutoffs[200.0]
    ok = (ordered and r5_at_0 > 0 and dominated and gap < 1e-4
          and elapsed < 10.0)
    _report(5, ok, f"cutoffs km: 5s {cutoffs[5.0]}, 50s {cutoffs[50.0]}, "
                   f"200s {cutoffs[200.0]} (ordered: {ordered}); "
                   f"5s rate at 0 km {r5_at_0:.4g} (> 0); finite <= "
                   f"asymptotic: {dominated}; |finite - asym| at n=1e12: "
                   f"{gap:.2e} (< 1e-4); runtime {elapsed:.1f} s (< 10 s)")
    assert ordered, f"cutoff ordering violated: {cutoffs}"
    assert r5_at_0 > 0.0
    assert dominated
    assert gap < 1e-4
    assert elapsed < 10.0


def test_criterion_5_five_second_zero_at_25km():
    config = ProtocolConfig()
    rate = _finite_rate_at(config, 25.0, 5.0)
    _report("5 (25 km clause)", rate == 0.0,
            f"5 s finite rate at 25 km = {rate:.4g} (stated expectation 0)")
    assert rate == 0.0, (
        f"5 s finite-key rate at 25 km is {rate:.4g}, not 0: the idealized "
        f"default channel leaves ~7.7k raw-key detections in a 5 s segment "
        f"at 25 km, which survives the deviation penalty.  The published "
        f"zero relied on receiver losses absent from the documented "
        f"defaults. See notes.")


# ---------------------------------------------------------------------------
# criterion 6: Monte Carlo vs analytic agreement
# ---------------------------------------------------------------------------

def test_criterion_6_monte_carlo_analytic_agreement():
    config = ProtocolConfig()
    model = ChannelModel()
    beta = 0.3
    drift = DriftProcess(sigma_rad_per_sec=0.0, beta_initial=beta)
    n_runs = 100
    min_detections = 10_000
    t0 = time.perf_counter()
    checked = 0
    failures = 0
    for rep in range(n_runs):
        seed = int(np.random.SeedSequence(
            [77, rep]).generate_state(1, np.uint64)[0])
        stats, _ = simulate_rounds(config, model, drift, seed,
                                   n_pulses=10_000_000)
        for intensity in Intensity:
            mean = config.mean_photons(intensity)
            y_expected = analytic_yield(model, mean)
            # pooled per-intensity yield cell
            sent = stats.sent_count(intensity)
            det = stats.detected_count(intensity)
            if det >= min_detections:
                checked += 1
                sigma = math.sqrt(sent * y_expected * (1 - y_expected))
                if abs(det - sent * y_expected) > 4 * sigma:
                    failures += 1
            for pair in ALL_PAIRS:
                sent = stats.sent_count(intensity, pair)
                det = stats.detected_count(intensity, pair)
                if det < min_detections:
                    continue
                checked += 1
                sigma = math.sqrt(sent * y_expected * (1 - y_expected))
                if abs(det - sent * y_expected) > 4 * sigma:
                    failures += 1
                q = analytic_qber(model, mean, pair, beta)
                err = stats.error_count(intensity, pair)
                checked += 1
                sigma_q = math.sqrt(det * q * (1 - q))
                if abs(err - det * q) > 4 * sigma_q:
                    failures += 1
    elapsed = time.perf_counter() - t0
    rate = failures / checked
    ok = rate <= 0.01 and elapsed < 300.0
    _report(6, ok, f"{failures}/{checked} cell checks outside 4 sigma "
                   f"({rate:.3%}, budget 1%) over {n_runs} runs of 1e7 "
                   f"pulses; runtime {elapsed:.0f} s (< 300 s)")
    assert rate <= 0.01
    assert elapsed < 300.0


# ---------------------------------------------------------------------------
# criterion 7: pair-error-sum constant self-check
# ---------------------------------------------------------------------------

def test_criterion_7_constant_self_check():
    t0 = time.perf_counter()
    grid = np.linspace(0.5, 1.0, 4_000_001)
    values = 0.5 + grid + np.sqrt(grid * (1.0 - grid))
    peak = float(values.max())
    elapsed = time.perf_counter() - t0
    ok = abs(peak - 1.70711) <= 1e-5 and elapsed < 1.0
    _report(7, ok, f"grid-search max {peak:.7f} vs constant 1.70711 "
                   f"(+- 1e-5); runtime {elapsed:.2f} s (< 1 s)")
    assert peak == pytest.approx(1.70711, abs=1e-5)
    assert elapsed < 1.0


# ---------------------------------------------------------------------------
# criterion 8: byte-identical reruns
# ---------------------------------------------------------------------------

def test_criterion_8_determinism(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text("""
[run]
mode = "mc"
sweep_km = [0.0, 25.0]
segment_seconds = [1.0]
seed = 424242
seeds = 2

[source]
n_total_pulses = 400000
""")
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert main(["finite-sweep", "--config", str(cfg),
                     "--out", str(out)]) == 0
        outputs.append((out / "finite_sweep.csv").read_bytes())
    identical = outputs[0] == outputs[1]
    _report(8, identical,
            f"two invocations, identical config and seed: CSV bytes "
            f"{'identical' if identical else 'DIFFER'} "
            f"({len(outputs[0])} bytes)")
    assert identical
