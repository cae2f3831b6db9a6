"""Gain model of the symmetric twin-field measurement station.

Charlie sits at the fiber midpoint and interferes the two arriving pulses
on a 50:50 beam splitter watched by two threshold detectors.  A trial
counts only when exactly one detector clicks.  Detector efficiency is
folded into the arm transmittance and misalignment enters as a visibility
factor ``1 - 2 e_d`` on the interference term.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import i0e

from .errors import DomainError

# Decoy pairs used by the estimation.  Letters: o vacuum, m mu, n nu, w omega;
# the first letter is Alice's intensity, the second Bob's.
PAIRS = ("oo", "mo", "om", "no", "on", "wo", "ow", "mm", "nn")
ROLES = ("m", "n", "w", "o")

_MC_CHUNK = 1 << 20


@dataclass(frozen=True)
class ChannelParams:
    distance_km: float = 0.0
    fiber_loss_db_per_km: float = 0.2
    dark_count_rate: float = 1e-10
    detector_efficiency: float = 0.145
    misalignment: float = 0.015
    ec_efficiency: float = 1.1

    def __post_init__(self):
        if self.distance_km < 0:
            raise DomainError("distance_km must be >= 0")
        if self.fiber_loss_db_per_km <= 0:
            raise DomainError("fiber_loss_db_per_km must be > 0")
        for name in ("dark_count_rate", "detector_efficiency"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name}={v} outside [0, 1]")
        if self.detector_efficiency == 0.0:
            raise DomainError("detector_efficiency must be > 0")
        if not 0.0 <= self.misalignment <= 0.5:
            raise DomainError("misalignment must lie in [0, 0.5]")
        if self.ec_efficiency < 1.0:
            raise DomainError("ec_efficiency must be >= 1")

    @property
    def channel_transmittance(self) -> float:
        """Transmittance of the whole Alice-Bob fiber, 10^(-alpha L / 10)."""
        return 10.0 ** (-self.fiber_loss_db_per_km * self.distance_km / 10.0)

    @property
    def arm_transmittance(self) -> float:
        """Transmittance of one arm (L/2 of fiber) including the detector."""
        return self.detector_efficiency * 10.0 ** (
            -self.fiber_loss_db_per_km * (self.distance_km / 2.0) / 10.0
        )

    @property
    def visibility(self) -> float:
        return 1.0 - 2.0 * self.misalignment

    def at_distance(self, distance_km: float) -> ChannelParams:
        return ChannelParams(
            distance_km=distance_km,
            fiber_loss_db_per_km=self.fiber_loss_db_per_km,
            dark_count_rate=self.dark_count_rate,
            detector_efficiency=self.detector_efficiency,
            misalignment=self.misalignment,
            ec_efficiency=self.ec_efficiency,
        )


@dataclass(frozen=True)
class ProtocolParams:
    """Intensities, mode/intensity probabilities and total trial count.

    ``p_code`` is the code-mode probability; ``p_mu``, ``p_nu``, ``p_omega``
    are the joint probabilities of decoy mode with that intensity, and the
    remainder ``p_vacuum`` sends vacuum.
    """

    mu: float
    nu: float
    omega: float
    p_code: float
    p_mu: float
    p_nu: float
    p_omega: float
    N: int = 10**12

    def __post_init__(self):
        if not self.mu > self.nu > self.omega > 0.0:
            raise DomainError("intensities must satisfy mu > nu > omega > 0")
        probs = (self.p_code, self.p_mu, self.p_nu, self.p_omega)
        if any(p < 0.0 or p > 1.0 for p in probs):
            raise DomainError("mode probabilities must lie in [0, 1]")
        if sum(probs) > 1.0 + 1e-12:
            raise DomainError("mode probabilities sum above 1")
        if self.N <= 0:
            raise DomainError("N must be positive")

    @property
    def p_vacuum(self) -> float:
        return max(0.0, 1.0 - self.p_code - self.p_mu - self.p_nu - self.p_omega)

    def intensity(self, role: str) -> float:
        return {"m": self.mu, "n": self.nu, "w": self.omega, "o": 0.0}[role]

    def probability(self, role: str) -> float:
        return {"m": self.p_mu, "n": self.p_nu, "w": self.p_omega, "o": self.p_vacuum}[role]


@dataclass(frozen=True)
class GainSet:
    """Gain statistics: code gain/error and the nine decoy gains with their trial counts."""

    q_code: float
    e_code: float
    decoy_gains: dict
    pair_counts: dict = field(default_factory=dict)
    code_count: int = 0
    degenerate_code: bool = False

    def __post_init__(self):
        for name, q in [("q_code", self.q_code), ("e_code", self.e_code), *self.decoy_gains.items()]:
            if not 0.0 <= q <= 1.0:
                raise DomainError(f"gain {name}={q} outside [0, 1]")
        if any(c < 0 for c in self.pair_counts.values()) or self.code_count < 0:
            raise DomainError("trial counts must be nonnegative")

    def __getitem__(self, pair: str) -> float:
        return self.decoy_gains[pair]


class CodeModeStats(NamedTuple):
    q_code: float
    e_code: float
    degenerate: bool = False


def _single_click(lam_a, lam_b, p_d):
    """Probability that exactly one of two detectors with mean photon numbers lam_a, lam_b clicks."""
    no_a = (1.0 - p_d) * np.exp(-lam_a)
    no_b = (1.0 - p_d) * np.exp(-lam_b)
    return (1.0 - no_a) * no_b + (1.0 - no_b) * no_a


def closed_form_decoy_gain(x: float, y: float, ch: ChannelParams) -> float:
    """Phase-averaged single-click probability for phase-randomized inputs x, y.

    With S = eta (x + y) and D = V eta sqrt(x y), averaging the per-phase
    click probability over the uniform relative phase gives
    ``2 (1-p_d) e^{-S/2} I0(D) - 2 (1-p_d)^2 e^{-S}``.
    """
    if x < 0 or y < 0:
        raise DomainError("intensities must be nonnegative")
    eta = ch.arm_transmittance
    p_d = ch.dark_count_rate
    s = eta * (x + y)
    d = ch.visibility * eta * math.sqrt(x * y)
    # e^{-S/2} I0(D) = i0e(D) e^{D - S/2}; D <= S/2 keeps the exponent <= 0.
    bessel_term = float(i0e(d)) * math.exp(d - 0.5 * s)
    gain = 2.0 * (1.0 - p_d) * bessel_term - 2.0 * (1.0 - p_d) ** 2 * math.exp(-s)
    return min(max(gain, 0.0), 1.0)


def code_mode_stats(mu: float, ch: ChannelParams) -> CodeModeStats:
    """Gain and bit error rate of code-mode trials at intensity ``mu``.

    Equal bits interfere constructively at the '+' port; a click at the port
    inconsistent with the bit parity is an error.  The relative phase only
    takes the values 0 and pi, so both parities give the same statistics.
    """
    if mu < 0:
        raise DomainError("mu must be nonnegative")
    eta = ch.arm_transmittance
    p_d = ch.dark_count_rate
    v = ch.visibility
    lam_right = eta * mu * (1.0 + v)
    lam_wrong = eta * mu * (1.0 - v)
    no_right = (1.0 - p_d) * math.exp(-lam_right)
    no_wrong = (1.0 - p_d) * math.exp(-lam_wrong)
    p_error = (1.0 - no_wrong) * no_right
    q_c = (1.0 - no_right) * no_wrong + p_error
    if q_c <= 0.0:
        return CodeModeStats(0.0, 0.5, True)
    return CodeModeStats(q_c, p_error / q_c, False)


def expected_gains(params: ProtocolParams, ch: ChannelParams) -> GainSet:
    """Expected gains with trial counts N P_x P_y (decoy) and N P_c^2 (code)."""
    code = code_mode_stats(params.mu, ch)
    gains, counts = {}, {}
    for pair in PAIRS:
        x, y = params.intensity(pair[0]), params.intensity(pair[1])
        gains[pair] = closed_form_decoy_gain(x, y, ch)
        counts[pair] = int(round(params.N * params.probability(pair[0]) * params.probability(pair[1])))
    return GainSet(
        q_code=code.q_code,
        e_code=code.e_code,
        decoy_gains=gains,
        pair_counts=counts,
        code_count=int(round(params.N * params.p_code**2)),
        degenerate_code=code.degenerate,
    )


# ---------------------------------------------------------------------------
# Monte-Carlo sampling


def _decoy_chunk(seed, n, x, y, ch):
    rng = np.random.default_rng(seed)
    eta = ch.arm_transmittance
    p_d = ch.dark_count_rate
    half = 0.5 * eta * (x + y)
    amp = ch.visibility * eta * math.sqrt(x * y)
    if amp == 0.0:
        p = float(_single_click(half, half, p_d))
        return int(rng.binomial(n, p))
    phase = rng.uniform(0.0, 2.0 * np.pi, n)
    lam_a = half + amp * np.cos(phase)
    lam_b = half - amp * np.cos(phase)
    u = rng.random((2, n))
    click_a = u[0] < 1.0 - (1.0 - p_d) * np.exp(-lam_a)
    click_b = u[1] < 1.0 - (1.0 - p_d) * np.exp(-lam_b)
    return int(np.count_nonzero(click_a ^ click_b))


def _code_chunk(seed, n, mu, ch):
    rng = np.random.default_rng(seed)
    eta = ch.arm_transmittance
    p_d = ch.dark_count_rate
    v = ch.visibility
    # Both parities see the same port intensities up to relabeling.
    parity = rng.integers(0, 2, n)
    sign = np.where(parity == 0, 1.0, -1.0)
    lam_plus = eta * mu * (1.0 + v * sign)
    lam_minus = eta * mu * (1.0 - v * sign)
    u = rng.random((2, n))
    click_plus = u[0] < 1.0 - (1.0 - p_d) * np.exp(-lam_plus)
    click_minus = u[1] < 1.0 - (1.0 - p_d) * np.exp(-lam_minus)
    single = click_plus ^ click_minus
    expected_plus = parity == 0
    errors = single & (click_plus != expected_plus)
    return int(np.count_nonzero(single)), int(np.count_nonzero(errors))


def _seed(seed, *key):
    return np.random.SeedSequence(seed, spawn_key=key)


def _chunks(total):
    sizes = [_MC_CHUNK] * (total // _MC_CHUNK)
    if total % _MC_CHUNK:
        sizes.append(total % _MC_CHUNK)
    return sizes


def mc_pair_gain(x: float, y: float, ch: ChannelParams, trials: int, seed: int) -> float:
    """Empirical single-click rate of ``trials`` decoy rounds at intensities (x, y)."""
    if trials <= 0:
        raise DomainError("trials must be positive")
    if x < 0 or y < 0:
        raise DomainError("intensities must be nonnegative")
    clicks = sum(_decoy_chunk(_seed(seed, k), size, x, y, ch) for k, size in enumerate(_chunks(trials)))
    return clicks / trials


def mc_gains(params: ProtocolParams, ch: ChannelParams, trials: int, seed: int,
             workers: int = 1) -> GainSet:
    """Sample ``trials`` protocol rounds and return the empirical gains.

    Each user independently picks code mode or a decoy intensity; pair counts
    are therefore exact multinomial draws.  Decoy rounds draw a uniform
    relative phase and per-detector clicks; code rounds draw the bit parity.
    Every chunk of rounds gets its own child seed, so the result depends on
    ``seed`` only, not on ``workers``.
    """
    if trials <= 0:
        raise DomainError("trials must be positive")
    options = ("c",) + ROLES
    probs = np.array([params.p_code] + [params.probability(r) for r in ROLES])
    probs = probs / probs.sum()
    joint = np.outer(probs, probs).ravel()
    counts = np.random.default_rng(_seed(seed, 0)).multinomial(trials, joint).reshape(len(options), len(options))
    index = {o: i for i, o in enumerate(options)}

    jobs = []
    code_n = int(counts[0, 0])
    for k, size in enumerate(_chunks(code_n)):
        jobs.append(("code", _code_chunk, (_seed(seed, 1, k), size, params.mu, ch)))
    pair_counts = {}
    for p_idx, pair in enumerate(PAIRS):
        n_xy = int(counts[index[pair[0]], index[pair[1]]])
        pair_counts[pair] = n_xy
        x, y = params.intensity(pair[0]), params.intensity(pair[1])
        for k, size in enumerate(_chunks(n_xy)):
            jobs.append((pair, _decoy_chunk, (_seed(seed, 2 + p_idx, k), size, x, y, ch)))

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: job[1](*job[2]), jobs))
    else:
        results = [fn(*args) for _, fn, args in jobs]

    clicks = dict.fromkeys(PAIRS, 0)
    code_clicks = code_errors = 0
    for (tag, _, _), res in zip(jobs, results):
        if tag == "code":
            code_clicks += res[0]
            code_errors += res[1]
        else:
            clicks[tag] += res

    gains = {p: (clicks[p] / pair_counts[p] if pair_counts[p] else 0.0) for p in PAIRS}
    degenerate = code_clicks == 0
    return GainSet(
        q_code=code_clicks / code_n if code_n else 0.0,
        e_code=0.5 if degenerate else code_errors / code_clicks,
        decoy_gains=gains,
        pair_counts=pair_counts,
        code_count=code_n,
        degenerate_code=degenerate,
    )
