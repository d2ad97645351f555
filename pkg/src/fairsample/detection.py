"""Monte-Carlo detection model: pair outcomes, channel efficiencies, sampling policies.

Per emitted pair the simulation draws, in this fixed order:

1. a shared polarization-like variable ``lam`` uniform on [0, pi),
2. the outcome pair from the quantum joint-probability table,
3. Alice's detection decision, 4. Bob's detection decision.

Detection decisions are local: each consumes only the local setting, the
local outcome sign, the local base efficiencies and the shared ``lam``.
Under the FAIR policy the detection probability is exactly the base
channel efficiency, so the detected pairs are an unbiased sample.  The
UNFAIR_MALUS policy modulates *only the Plus channel* of each station:

    P(detect | Plus)  = eta_plus * (1 - d + d * cos^2(lam - setting))
    P(detect | Minus) = eta_minus

Modulating one channel per station makes the detected sample depend on
the local setting in a way that neither coincidence-sum normalization
nor singles-based normalization can cancel.  (Modulating both channels
in quadrature, by contrast, cancels identically in every normalized
quantity for the maximally entangled source, leaving no observable
signature — see tests/test_detection.py for the frozen consequences.)
The averaged singles rates are unaffected (the lam-average of the
modulation is the constant 1 - d/2), mimicking setups where singles look
steady while the coincidence sample is biased.  With d=0 the policy is
behaviorally identical to FAIR, down to the RNG stream.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .quantum import OutcomeSign, SettingsPair, SourceState, Station, joint_prob_table

Seed = "int | tuple[int, ...] | np.random.SeedSequence"


class PolicyKind(enum.Enum):
    FAIR = "fair"
    UNFAIR_MALUS = "unfair_malus"


@dataclass(frozen=True)
class EfficiencyConfig:
    """Base detection probabilities of the four channels, each in (0, 1]."""

    eta_a_plus: float
    eta_a_minus: float
    eta_b_plus: float
    eta_b_minus: float

    def __post_init__(self) -> None:
        for name, value in (
            ("eta_a_plus", self.eta_a_plus),
            ("eta_a_minus", self.eta_a_minus),
            ("eta_b_plus", self.eta_b_plus),
            ("eta_b_minus", self.eta_b_minus),
        ):
            if not (0.0 < value <= 1.0):
                raise ValueError(f"{name} must be in (0, 1], got {value!r}")

    def eta(self, station: Station, sign: OutcomeSign) -> float:
        if station == Station.ALICE:
            return self.eta_a_plus if sign == OutcomeSign.PLUS else self.eta_a_minus
        return self.eta_b_plus if sign == OutcomeSign.PLUS else self.eta_b_minus


@dataclass(frozen=True)
class SamplingPolicy:
    """Fairness of the detection sample.  ``d`` is used only by UNFAIR_MALUS."""

    kind: PolicyKind = PolicyKind.FAIR
    d: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.d <= 1.0):
            raise ValueError(f"d must be in [0, 1], got {self.d!r}")


@dataclass(frozen=True)
class HiddenVariable:
    """Shared per-pair polarization-like variable, uniform on [0, pi)."""

    lam: float


@dataclass(frozen=True)
class BlockCounts:
    """Counts accumulated at one settings pair (one scan point).

    Coincidences are indexed (Alice sign, Bob sign); singles count every
    detection on a channel whether or not the partner was detected, so
    n_pp + n_pm <= s_a_plus and the three analogous inequalities hold.
    """

    n_pp: int
    n_pm: int
    n_mp: int
    n_mm: int
    s_a_plus: int
    s_a_minus: int
    s_b_plus: int
    s_b_minus: int
    alpha: float = math.nan
    beta: float = math.nan
    n_pairs_emitted: int = 0

    def __post_init__(self) -> None:
        counts = (
            self.n_pp, self.n_pm, self.n_mp, self.n_mm,
            self.s_a_plus, self.s_a_minus, self.s_b_plus, self.s_b_minus,
        )
        if any(c < 0 for c in counts):
            raise ValueError(f"counts must be non-negative, got {counts}")
        pairs_vs_singles = (
            (self.n_pp + self.n_pm, self.s_a_plus, "s_a_plus"),
            (self.n_mp + self.n_mm, self.s_a_minus, "s_a_minus"),
            (self.n_pp + self.n_mp, self.s_b_plus, "s_b_plus"),
            (self.n_pm + self.n_mm, self.s_b_minus, "s_b_minus"),
        )
        for coinc, singles, name in pairs_vs_singles:
            if coinc > singles:
                raise ValueError(
                    f"coincidences ({coinc}) exceed {name} ({singles}): "
                    "a coincidence implies both singles were registered"
                )

    @property
    def total_coincidences(self) -> int:
        return self.n_pp + self.n_pm + self.n_mp + self.n_mm

    @property
    def total_singles(self) -> int:
        return self.s_a_plus + self.s_a_minus + self.s_b_plus + self.s_b_minus


@dataclass(frozen=True)
class PairDetections:
    """Per-pair outcomes and detection decisions (event-generation mode).

    Arrays all have length n_pairs; signs use the OutcomeSign encoding
    (0 = Plus, 1 = Minus).
    """

    sign_a: np.ndarray
    sign_b: np.ndarray
    detected_a: np.ndarray
    detected_b: np.ndarray

    @property
    def n_pairs(self) -> int:
        return self.sign_a.shape[0]


def _rng_from_seed(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(seed))


def sample_pair_outcome(
    state: SourceState, s: SettingsPair, rng: np.random.Generator
) -> tuple[OutcomeSign, OutcomeSign]:
    """Draw one outcome pair from the joint probability table."""
    table = joint_prob_table(state, s)
    u = rng.random()
    cell = int(np.searchsorted(np.cumsum(table.as_tuple()), u, side="right"))
    cell = min(cell, 3)
    return OutcomeSign((cell >> 1) & 1), OutcomeSign(cell & 1)


def detection_probability(
    policy: SamplingPolicy,
    eff: EfficiencyConfig,
    station: Station,
    e: OutcomeSign,
    setting: float,
    hv: HiddenVariable,
) -> float:
    """Probability that a photon in channel (station, e) is detected."""
    base = eff.eta(station, e)
    if policy.kind == PolicyKind.FAIR or e == OutcomeSign.MINUS:
        return base
    c = math.cos(hv.lam - setting)
    return base * (1.0 - policy.d + policy.d * c * c)


def simulate_pair_detections(
    state: SourceState,
    eff: EfficiencyConfig,
    policy: SamplingPolicy,
    s: SettingsPair,
    n_pairs: int,
    seed,
) -> PairDetections:
    """Vectorized per-pair simulation; the raw material for event streams.

    Deterministic for a given seed: the four draws (lam, outcome, Alice
    detection, Bob detection) are made as whole arrays in that order,
    under every policy, so FAIR and UNFAIR_MALUS(d=0) consume the RNG
    identically.
    """
    if n_pairs < 0:
        raise ValueError(f"n_pairs must be >= 0, got {n_pairs}")
    rng = _rng_from_seed(seed)

    lam = rng.uniform(0.0, math.pi, n_pairs)
    u_outcome = rng.random(n_pairs)
    u_a = rng.random(n_pairs)
    u_b = rng.random(n_pairs)

    table = joint_prob_table(state, s)
    cells = np.searchsorted(np.cumsum(table.as_tuple()), u_outcome, side="right")
    cells = np.minimum(cells, 3).astype(np.uint8)
    sign_a = (cells >> 1) & 1
    sign_b = cells & 1

    def station_probs(signs: np.ndarray, setting: float, eta_plus: float,
                      eta_minus: float) -> np.ndarray:
        probs = np.where(signs == 0, eta_plus, eta_minus)
        if policy.kind == PolicyKind.UNFAIR_MALUS and policy.d > 0.0:
            c = np.cos(lam - setting)
            modulation = 1.0 - policy.d + policy.d * c * c
            probs = np.where(signs == 0, probs * modulation, probs)
        return probs

    detected_a = u_a < station_probs(sign_a, s.alpha, eff.eta_a_plus, eff.eta_a_minus)
    detected_b = u_b < station_probs(sign_b, s.beta, eff.eta_b_plus, eff.eta_b_minus)
    return PairDetections(sign_a, sign_b, detected_a, detected_b)


def count_detections(
    det: PairDetections, alpha: float = math.nan, beta: float = math.nan
) -> BlockCounts:
    """Reduce per-pair detections to block counts."""
    both = det.detected_a & det.detected_b
    cells = (det.sign_a.astype(np.intp) << 1) | det.sign_b
    coinc = np.bincount(cells[both], minlength=4)
    return BlockCounts(
        n_pp=int(coinc[0]),
        n_pm=int(coinc[1]),
        n_mp=int(coinc[2]),
        n_mm=int(coinc[3]),
        s_a_plus=int(np.count_nonzero(det.detected_a & (det.sign_a == 0))),
        s_a_minus=int(np.count_nonzero(det.detected_a & (det.sign_a == 1))),
        s_b_plus=int(np.count_nonzero(det.detected_b & (det.sign_b == 0))),
        s_b_minus=int(np.count_nonzero(det.detected_b & (det.sign_b == 1))),
        alpha=alpha,
        beta=beta,
        n_pairs_emitted=det.n_pairs,
    )


def simulate_block(
    state: SourceState,
    eff: EfficiencyConfig,
    policy: SamplingPolicy,
    s: SettingsPair,
    n_pairs: int,
    seed,
) -> BlockCounts:
    """Simulate one settings block and return its counts."""
    det = simulate_pair_detections(state, eff, policy, s, n_pairs, seed)
    return count_detections(det, alpha=s.alpha, beta=s.beta)
