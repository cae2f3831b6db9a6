"""Finite-key secret key rate: collective-attack rate and the coherent-attack lift."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np

from .decoy.bounds import QBounds
from .errors import ContractViolation, DomainError
from .statistics import POSTSELECTION_EXPONENT, EpsilonBudget, log2_inv

#: bits lost to the post-selection lift per log2(N+1): 2 (d^2 - 1) with d = 8
COHERENT_PENALTY = 2 * POSTSELECTION_EXPONENT

EveBoundFunction = Callable[[QBounds, float], float]


def binary_entropy(p: float) -> float:
    """Binary Shannon entropy in bits, with 0 log 0 = 0."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p={p} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


@dataclass(frozen=True)
class KeyRateInputs:
    """Everything the collective-attack rate needs.

    ``sifted_fraction`` is n/N with n = P_c^2 Q_c N the sifted key length.
    """

    sifted_fraction: float
    e_code: float
    iae_upper: float
    budget: EpsilonBudget
    ec_efficiency: float
    N: int

    def __post_init__(self):
        for name in ("sifted_fraction", "e_code", "iae_upper"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name}={v} outside [0, 1]")
        if self.N <= 0:
            raise DomainError("N must be positive")
        if self.ec_efficiency < 1.0:
            raise DomainError("ec_efficiency must be >= 1")

    @property
    def n(self) -> float:
        return self.sifted_fraction * self.N


def collective_terms(inp: KeyRateInputs) -> Dict[str, float]:
    """Individual per-pulse contributions of the collective-attack rate.

    Keys: ``privacy`` (n/N)(1 - I_AE), ``ec`` lambda_EC/N, ``ev`` lambda_EV/N,
    ``pa`` (2/N) log2(1/eps_PA), ``smooth`` (7/N) sqrt(n log2(2/eps_s)) and
    ``raw``, the unclamped total.
    """
    N = float(inp.N)
    n = inp.n
    b = inp.budget
    terms = {
        "privacy": inp.sifted_fraction * (1.0 - inp.iae_upper),
        "ec": inp.sifted_fraction * inp.ec_efficiency * binary_entropy(inp.e_code),
        "ev": log2_inv(b.ln_eps_cor, 2.0) / N,
        "pa": 2.0 * log2_inv(b.ln_eps_pa) / N,
        "smooth": 7.0 * math.sqrt(n * log2_inv(b.ln_eps_s, 2.0)) / N,
    }
    terms["raw"] = terms["privacy"] - terms["ec"] - terms["ev"] - terms["pa"] - terms["smooth"]
    return terms


def skr_collective(inp: KeyRateInputs) -> float:
    """Secret key rate per pulse against collective attacks, clamped at zero."""
    return max(collective_terms(inp)["raw"], 0.0)


def coherent_correction(N: int) -> float:
    """126 log2(N+1) / N, the per-pulse cost of the post-selection lift."""
    if N <= 0:
        raise DomainError("N must be positive")
    return COHERENT_PENALTY * math.log1p(N) / math.log(2.0) / N


def skr_coherent(r_col: float, N: int) -> float:
    """Secret key rate per pulse against coherent attacks, clamped at zero."""
    return max(r_col - coherent_correction(N), 0.0)


def plob_bound(channel_transmittance: float) -> float:
    """Repeaterless linear bound -log2(1 - eta)."""
    eta = channel_transmittance
    if not 0.0 <= eta <= 1.0:
        raise DomainError("transmittance must lie in [0, 1]")
    if eta == 1.0:
        raise DomainError("lossless channel has unbounded capacity")
    return -math.log1p(-eta) / math.log(2.0)


# ---------------------------------------------------------------------------
# Eve-information plugins


def conservative_bound(qb: QBounds, q_code_lower: float) -> float:
    """Maximal Eve information: always 1, so the rate is always zero."""
    return 1.0


def constant_bound(value: float) -> EveBoundFunction:
    """Plugin returning a fixed value, for pipeline testing."""

    def bound(qb, q_code_lower):
        return value

    bound.__name__ = f"constant_{value}"
    return bound


def companion_bound(qb: QBounds, q_code_lower: float) -> float:
    """Slot for the closed-form phase-error bound from the companion security proof.

    Contract: takes the decoy bounds and a lower bound on the code gain and
    returns I_AE in [0, 1], nondecreasing in every upper bound in ``qb`` and
    nonincreasing in ``qb.qsum_l``.  Not transcribed in this package.
    """
    raise NotImplementedError(
        "the companion-reference Eve-information bound is not transcribed; "
        "use 'conservative' or 'constant:<value>'"
    )


PLUGINS: Dict[str, EveBoundFunction] = {
    "conservative": conservative_bound,
    "companion": companion_bound,
}


def resolve_plugin(spec) -> EveBoundFunction:
    """Turn ``"conservative"``, ``"companion"``, ``"constant:<c>"`` or a callable into a plugin."""
    if callable(spec):
        return spec
    if not isinstance(spec, str):
        raise DomainError(f"cannot interpret plugin {spec!r}")
    if spec.startswith("constant:"):
        try:
            value = float(spec.split(":", 1)[1])
        except ValueError as exc:
            raise DomainError(f"bad constant plugin {spec!r}") from exc
        return constant_bound(value)
    try:
        return PLUGINS[spec]
    except KeyError:
        raise DomainError(f"unknown plugin {spec!r}; choose from {sorted(PLUGINS)} or constant:<c>") from None


def iae_upper(qb: QBounds, q_code_lower: float, plugin=conservative_bound) -> float:
    """Upper bound on Eve's information per sifted bit, delegated to ``plugin``.

    Raises
    ------
    ContractViolation
        If the plugin returns a value outside [0, 1] (or NaN).
    """
    plugin = resolve_plugin(plugin)
    value = float(plugin(qb, q_code_lower))
    if not 0.0 <= value <= 1.0:
        raise ContractViolation(f"plugin {getattr(plugin, '__name__', plugin)!r} returned {value}")
    return value


def check_plugin_monotone(plugin, rng, trials: int = 200) -> int:
    """Count monotonicity-contract violations of a plugin over random QBounds pairs.

    For each trial a random QBounds and a componentwise-larger one (upper
    bounds up, the q_sum lower bound down) are drawn; the larger must not
    give a smaller I_AE.
    """
    plugin = resolve_plugin(plugin)
    bad = 0
    for _ in range(trials):
        base = rng.uniform(0.0, 0.5, 6)
        grown = np.minimum(base + rng.uniform(0.0, 0.5, 6), 1.0)
        lo = rng.uniform(0.0, base.sum())
        lo_small = rng.uniform(0.0, lo)
        q_code = rng.uniform(0.0, 1.0)
        small = QBounds(*base, min(lo, 1.0))
        large = QBounds(*grown, min(lo_small, 1.0))
        if iae_upper(large, q_code, plugin) < iae_upper(small, q_code, plugin):
            bad += 1
    return bad
