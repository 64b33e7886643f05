"""Maximum-likelihood index detection and error-rate estimation.

The receiver observes ``y = pilot * h_true + n`` with circularly-symmetric
complex noise of total variance ``noise_n0`` per antenna, and decides the
index whose expected response is nearest to the observation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from frisim.channel import ResponseMap
from frisim.codebook import Codebook, response_distance

# Fixed simulation batch size; keeps draw order independent of trial count.
_BATCH = 1 << 15


@dataclass(frozen=True)
class SignalModel:
    """Known pilot symbol and receiver noise level (variance per antenna)."""

    noise_n0: float
    pilot_symbol: complex = 1.0 + 0.0j

    def __post_init__(self) -> None:
        if not (self.noise_n0 > 0):
            raise ValueError(f"noise_n0 must be positive, got {self.noise_n0}")


@dataclass(frozen=True)
class BerEstimate:
    trials: int
    errors: int
    p_hat: float
    ci95_half_width: float

    @classmethod
    def from_counts(cls, trials: int, errors: int) -> "BerEstimate":
        if trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= errors <= trials:
            raise ValueError("errors must lie in [0, trials]")
        p = errors / trials
        return cls(trials=trials, errors=errors, p_hat=p,
                   ci95_half_width=1.96 * math.sqrt(p * (1.0 - p) / trials))


def detect_index(y: np.ndarray, codebook_responses: np.ndarray,
                 signal: SignalModel) -> int:
    """Index of the codeword response nearest to ``y``; ties pick the lowest."""
    responses = np.asarray(codebook_responses)
    diffs = y[None, :] - signal.pilot_symbol * responses
    metric = np.sum(np.abs(diffs) ** 2, axis=1)
    return int(np.argmin(metric))


def simulate_ber(codebook: Codebook, response_map: ResponseMap, signal: SignalModel,
                 trials: int, seed: int, truth: ResponseMap | None = None) -> BerEstimate:
    """Monte Carlo index symbol-error rate under ML detection.

    ``truth`` supplies the responses actually transmitted when the detector's
    map is a perturbed calibration of reality; it defaults to the detector's
    own map (matched case).
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    members = list(codebook.members)
    k = len(members)
    detect = signal.pilot_symbol * response_map.values[members]
    source = detect if truth is None else signal.pilot_symbol * truth.values[members]
    energies = np.sum(np.abs(detect) ** 2, axis=1)
    detect_conj_t = detect.conj().T
    r = detect.shape[1]
    noise_scale = np.sqrt(signal.noise_n0 / 2.0)

    rng = np.random.default_rng(seed)
    errors = 0
    done = 0
    while done < trials:
        n = min(_BATCH, trials - done)
        true_idx = rng.integers(0, k, size=n)
        noise = noise_scale * (rng.standard_normal((n, r))
                               + 1j * rng.standard_normal((n, r)))
        y = source[true_idx] + noise
        # argmin ||y - d_i||^2 == argmin (||d_i||^2 - 2 Re <y, d_i>)
        scores = energies[None, :] - 2.0 * np.real(y @ detect_conj_t)
        decided = np.argmin(scores, axis=1)
        errors += int(np.count_nonzero(decided != true_idx))
        done += n
    return BerEstimate.from_counts(trials=trials, errors=errors)


def q_function(x: float) -> float:
    """Gaussian tail probability Q(x)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def pairwise_error_prob(d: float, n0: float) -> float:
    """Probability of confusing two codewords at response distance ``d``."""
    if d < 0:
        raise ValueError(f"distance must be >= 0, got {d}")
    if not (n0 > 0):
        raise ValueError(f"n0 must be positive, got {n0}")
    return q_function(math.sqrt(d / (2.0 * n0)))


def union_bound(codebook: Codebook, response_map: ResponseMap, n0: float) -> float:
    """Average pairwise union bound on the index error probability, clipped at 1."""
    members = list(codebook.members)
    k = len(members)
    if k < 2:
        raise ValueError("union bound needs at least 2 codewords")
    responses = response_map.values[members]
    total = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            d = response_distance(responses[i], responses[j])
            total += 2.0 * pairwise_error_prob(d, n0)
    return min(1.0, total / k)


def mean_pilot_energy(codebook: Codebook, response_map: ResponseMap,
                      pilot_symbol: complex = 1.0 + 0.0j) -> float:
    """Codebook-average received pilot energy E[||pilot * h||^2]."""
    responses = response_map.values[list(codebook.members)]
    return float(np.mean(np.sum(np.abs(pilot_symbol * responses) ** 2, axis=1)))


def noise_for_snr_db(codebook: Codebook, response_map: ResponseMap, snr_db: float,
                     pilot_symbol: complex = 1.0 + 0.0j) -> float:
    """Noise level that realizes a target SNR, with SNR defined as
    10*log10(mean pilot energy / (R * n0))."""
    energy = mean_pilot_energy(codebook, response_map, pilot_symbol)
    if energy <= 0:
        raise ValueError("codebook has zero received energy; SNR is undefined")
    return energy / (response_map.rx_antennas * 10.0 ** (snr_db / 10.0))
