import numpy as np
import pytest

from rfiqkd import (
    ChannelModel,
    DriftProcess,
    ESTIMATION_PAIRS,
    Intensity,
    KEY_PAIR,
    ObservedStatistics,
    ProtocolConfig,
)
from rfiqkd.core import ALL_PAIRS


@pytest.fixture
def config():
    return ProtocolConfig()


@pytest.fixture
def model():
    """Default device at 0 km."""
    return ChannelModel()


@pytest.fixture
def frozen_drift():
    return DriftProcess(sigma_rad_per_sec=0.0, beta_initial=0.0)


def make_stats(config, yields, e_zz, pair_errors, n_pulses=1e9,
               mixed_error=0.5):
    """Build expected-count statistics from explicit rates.

    ``yields`` maps Intensity -> per-pulse yield, ``pair_errors`` maps the
    four estimation-pair labels -> signal QBER.  Useful for synthetic
    sources (e.g. single-photon-only channels).
    """
    stats = ObservedStatistics()
    probs = config.pulse_probabilities
    for intensity in Intensity:
        for pair in ALL_PAIRS:
            p_cell = (probs[intensity.value]
                      * config.basis_probability(pair.alice)
                      * config.basis_probability(pair.bob))
            sent = n_pulses * p_cell
            detected = sent * yields[intensity]
            if pair == KEY_PAIR:
                err = e_zz
            elif pair.is_estimation_pair:
                err = pair_errors[pair.label]
            else:
                err = mixed_error
            idx = (intensity.value, pair.alice.value, pair.bob.value)
            stats.sent[idx] = sent
            stats.detected[idx] = detected
            stats.errors[idx] = detected * err
    return stats


def single_photon_only_stats(config, y1, e_zz, pair_errors, n_pulses=1e9):
    """Statistics of a source whose multi-photon pulses never click.

    Gains collapse to mu e^-mu y1 etc., so every decoy bound becomes exact;
    used to check that the rate formula reduces to the single-photon rate.
    """
    import math

    yields = {
        Intensity.SIGNAL: config.mu * math.exp(-config.mu) * y1,
        Intensity.DECOY: config.nu * math.exp(-config.nu) * y1,
        Intensity.VACUUM: 0.0,
    }
    return make_stats(config, yields, e_zz, pair_errors, n_pulses)


def rates_agree(count, total, p_expected, n_sigma=4.0):
    """Binomial agreement check used throughout the Monte Carlo tests."""
    if total == 0:
        return p_expected == 0
    sigma = np.sqrt(max(total * p_expected * (1 - p_expected), 1e-300))
    return abs(count - total * p_expected) <= n_sigma * sigma


ESTIMATION_LABELS = tuple(p.label for p in ESTIMATION_PAIRS)
