"""Poisson photon-number coefficients of phase-randomized coherent states."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from ..errors import DomainError

DEFAULT_CUTOFF = 10


def poisson_pn(x: float, n: int) -> float:
    """e^{-x} x^n / n!, evaluated in log space."""
    if x < 0 or n < 0:
        raise DomainError("poisson_pn needs x >= 0 and n >= 0")
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(-x + n * math.log(x) - math.lgamma(n + 1))


def poisson_tail(x: float, n0: int) -> float:
    """P(n >= n0) for a Poisson(x) photon number.

    Uses the regularized incomplete gamma function, which equals the
    complement of the first n0 terms without cancellation for small x.
    """
    if x < 0 or n0 < 0:
        raise DomainError("poisson_tail needs x >= 0 and n0 >= 0")
    if n0 == 0:
        return 1.0
    if x == 0.0:
        return 0.0
    return float(gammainc(n0, x))


def poisson_vector(x: float, cutoff: int) -> np.ndarray:
    return np.array([poisson_pn(x, k) for k in range(cutoff + 1)])


@dataclass(frozen=True)
class PoissonCoeffs:
    """Photon-number distributions of the three decoy intensities.

    ``a``, ``b``, ``c`` hold p_n for mu, nu, omega and n = 0..cutoff;
    ``tails`` holds the mass above the cutoff for each.
    """

    mu: float
    nu: float
    omega: float
    cutoff: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    tails: tuple

    @classmethod
    def from_intensities(cls, mu: float, nu: float, omega: float,
                         cutoff: int = DEFAULT_CUTOFF) -> PoissonCoeffs:
        if cutoff < 3:
            raise DomainError("cutoff must be >= 3")
        return cls(
            mu=mu,
            nu=nu,
            omega=omega,
            cutoff=cutoff,
            a=poisson_vector(mu, cutoff),
            b=poisson_vector(nu, cutoff),
            c=poisson_vector(omega, cutoff),
            tails=tuple(poisson_tail(x, cutoff + 1) for x in (mu, nu, omega)),
        )

    def intensity(self, role: str) -> float:
        return {"m": self.mu, "n": self.nu, "w": self.omega, "o": 0.0}[role]

    def tail(self, role: str, n0: int) -> float:
        """Mass at n >= n0 for the given intensity role."""
        return poisson_tail(self.intensity(role), n0)

    def vector(self, role: str, cutoff: int | None = None) -> np.ndarray:
        cutoff = self.cutoff if cutoff is None else cutoff
        return poisson_vector(self.intensity(role), cutoff)
