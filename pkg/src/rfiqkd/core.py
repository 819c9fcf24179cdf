"""Domain types and single-photon information-theoretic primitives.

Conventions used throughout the package:

* Z is the key-generation basis; X and Y are estimation bases.
* An unknown frame rotation ``beta`` mixes Bob's X/Y measurement operators
  while leaving Z untouched, so ideal single-photon correlations are
  ``<XX> = <YY> = V cos(beta)``, ``<XY> = -V sin(beta)``,
  ``<YX> = V sin(beta)``, ``<ZZ> = V`` for depolarizing visibility V.
* The quality parameter ``C`` is the sum of squared X/Y cross correlations;
  it equals ``2 V**2`` for any beta, which is what makes the protocol
  frame independent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "Basis",
    "BasisPair",
    "Intensity",
    "ProtocolConfig",
    "CorrelationSet",
    "KEY_PAIR",
    "ESTIMATION_PAIRS",
    "ALL_PAIRS",
    "wrap_angle",
    "binary_entropy",
    "rotated_expectations",
    "quality_parameter",
    "error_rate_from_expectation",
    "single_photon_eve_information",
    "single_photon_key_rate",
]

TWO_PI = 2.0 * math.pi


class Basis(Enum):
    """Measurement basis. Z generates key; X and Y estimate leakage."""

    X = 0
    Y = 1
    Z = 2


class Intensity(Enum):
    """Pulse class of the intensity-modulated source."""

    SIGNAL = 0
    DECOY = 1
    VACUUM = 2


@dataclass(frozen=True)
class BasisPair:
    """An (Alice basis, Bob basis) combination for one announced round."""

    alice: Basis
    bob: Basis

    @property
    def label(self) -> str:
        return self.alice.name + self.bob.name

    @property
    def is_key_pair(self) -> bool:
        return self.alice is Basis.Z and self.bob is Basis.Z

    @property
    def is_estimation_pair(self) -> bool:
        return self.alice is not Basis.Z and self.bob is not Basis.Z


KEY_PAIR = BasisPair(Basis.Z, Basis.Z)

#: The four X/Y pairs that enter the quality parameter, in a fixed order.
ESTIMATION_PAIRS = (
    BasisPair(Basis.X, Basis.X),
    BasisPair(Basis.X, Basis.Y),
    BasisPair(Basis.Y, Basis.X),
    BasisPair(Basis.Y, Basis.Y),
)

ALL_PAIRS = tuple(BasisPair(a, b) for a in Basis for b in Basis)


@dataclass(frozen=True)
class ProtocolConfig:
    """Source, basis-choice and security parameters of one protocol run.

    ``pulse_ratio`` holds relative signal:decoy:vacuum weights and is
    normalized internally, so (6, 2, 1) and (6/9, 2/9, 1/9) are equivalent.
    """

    mu: float = 0.6
    nu: float = 0.2
    pulse_ratio: tuple[float, float, float] = (6.0, 2.0, 1.0)
    p_z: float = 1.0 / 3.0
    p_xy: float = 1.0 / 3.0
    eps_pe: float = 1e-5
    eps_pa: float = 1e-5
    eps_ec: float = 1e-5
    eps_bar: float = 1e-5
    n_total_pulses: int = 10_000_000

    def __post_init__(self) -> None:
        if not self.mu > self.nu > 0.0:
            raise ValueError(
                f"require mu > nu > 0, got mu={self.mu}, nu={self.nu}")
        if len(self.pulse_ratio) != 3:
            raise ValueError("pulse_ratio must have three entries")
        if min(self.pulse_ratio) < 0.0 or sum(self.pulse_ratio) <= 0.0:
            raise ValueError(f"invalid pulse_ratio {self.pulse_ratio}")
        if not (0.0 < self.p_z < 1.0 and 0.0 < self.p_xy < 1.0):
            raise ValueError(
                f"basis probabilities must lie in (0,1), got p_z={self.p_z}, "
                f"p_xy={self.p_xy}")
        if abs(self.p_z + 2.0 * self.p_xy - 1.0) > 1e-9:
            raise ValueError(
                f"p_z + 2*p_xy must equal 1, got {self.p_z + 2 * self.p_xy}")
        for name in ("eps_pe", "eps_pa", "eps_ec", "eps_bar"):
            val = getattr(self, name)
            if not 0.0 < val < 1.0:
                raise ValueError(f"{name} must lie in (0,1), got {val}")
        if self.n_total_pulses < 1:
            raise ValueError(
                f"n_total_pulses must be >= 1, got {self.n_total_pulses}")

    def mean_photons(self, intensity: Intensity) -> float:
        if intensity is Intensity.SIGNAL:
            return self.mu
        if intensity is Intensity.DECOY:
            return self.nu
        return 0.0

    @property
    def pulse_probabilities(self) -> tuple[float, float, float]:
        total = sum(self.pulse_ratio)
        return tuple(w / total for w in self.pulse_ratio)

    def basis_probability(self, basis: Basis) -> float:
        return self.p_z if basis is Basis.Z else self.p_xy


@dataclass(frozen=True)
class CorrelationSet:
    """The five expectation values the protocol monitors."""

    exp_xx: float
    exp_xy: float
    exp_yx: float
    exp_yy: float
    exp_zz: float

    def __post_init__(self) -> None:
        for name in ("exp_xx", "exp_xy", "exp_yx", "exp_yy", "exp_zz"):
            val = getattr(self, name)
            if not -1.0 - 1e-12 <= val <= 1.0 + 1e-12:
                raise ValueError(f"{name} must lie in [-1, 1], got {val}")


def wrap_angle(beta: float) -> float:
    """Wrap an angle in radians into [0, 2*pi)."""
    return beta % TWO_PI


def binary_entropy(x: float) -> float:
    """Shannon entropy h(x) of a binary distribution, in bits.

    0*log(0) is taken as 0, so h(0) = h(1) = 0.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary_entropy defined on [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def rotated_expectations(beta: float, visibility: float = 1.0) -> CorrelationSet:
    """Single-photon correlations for frame offset ``beta`` and visibility V.

    ``beta`` may be any real; it is wrapped mod 2*pi. V models uniform
    depolarization: V=1 is the ideal channel.
    """
    if not 0.0 <= visibility <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {visibility}")
    beta = wrap_angle(beta)
    c, s = math.cos(beta), math.sin(beta)
    v = visibility
    return CorrelationSet(
        exp_xx=v * c,
        exp_xy=-v * s,
        exp_yx=v * s,
        exp_yy=v * c,
        exp_zz=v,
    )


def quality_parameter(corr: CorrelationSet) -> float:
    """Sum of squared X/Y correlations, clamped to the physical range [0, 2].

    Finite statistics can push the raw sum above 2; clamping keeps the
    radicands of the leakage bound valid.
    """
    raw = (corr.exp_xx ** 2 + corr.exp_xy ** 2
           + corr.exp_yx ** 2 + corr.exp_yy ** 2)
    return min(max(raw, 0.0), 2.0)


def error_rate_from_expectation(expectation: float) -> float:
    """Bit error rate (1 - <AB>) / 2 of a correlated +-1 observable pair."""
    if not -1.0 <= expectation <= 1.0:
        raise ValueError(
            f"expectation must lie in [-1, 1], got {expectation}")
    return (1.0 - expectation) / 2.0


def single_photon_eve_information(e_zz: float, c: float) -> float:
    """Upper bound on Eve's information per sifted bit.

    Evaluates the two-branch Holevo bound from (Z-basis error rate, quality
    parameter C).  The correct-branch overlap is
    ``v = min(sqrt(c/2) / (1 - e_zz), 1)`` and the error-branch overlap
    ``f = sqrt(c/2 - (1 - e_zz)^2 v^2) / e_zz``; both weights are positive
    and both overlap arguments are clamped to [0, 1].  Input pairs that no
    attack can produce (f would exceed 1) therefore yield 0 for that branch.
    The e_zz -> 0 limit of the error branch is 0.
    """
    if not 0.0 <= e_zz < 1.0:
        raise ValueError(f"e_zz must lie in [0, 1), got {e_zz}")
    if not 0.0 <= c <= 2.0:
        raise ValueError(f"c must lie in [0, 2], got {c}")
    v_max = min(math.sqrt(c / 2.0) / (1.0 - e_zz), 1.0)
    radicand = c / 2.0 - (1.0 - e_zz) ** 2 * v_max ** 2
    if radicand < -1e-12:
        raise ArithmeticError(
            f"negative radicand {radicand} slipped past the v_max clamp")
    radicand = max(radicand, 0.0)
    correct_branch = binary_entropy((1.0 + v_max) / 2.0)
    if e_zz == 0.0:
        return correct_branch
    f = min(math.sqrt(radicand) / e_zz, 1.0)
    return ((1.0 - e_zz) * correct_branch
            + e_zz * binary_entropy((1.0 + f) / 2.0))


def single_photon_key_rate(e_zz: float, c: float) -> float:
    """Single-photon secret fraction 1 - h(e_zz) - I_E (may be negative)."""
    return 1.0 - binary_entropy(e_zz) - single_photon_eve_information(e_zz, c)
