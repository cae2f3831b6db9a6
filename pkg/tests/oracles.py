"""Independent reference computations used by the tests.

Nothing here calls the package's own formulas: gains come from numerical
phase quadrature, Poisson terms from exact factorials, yields from brute
force double sums, and fluctuating sources from explicit pulse sequences.
"""

import decimal
import math

import numpy as np
from scipy import integrate


def poisson_exact(x, n):
    """e^{-x} x^n / n! in 60-digit decimal arithmetic."""
    if x == 0:
        return 1.0 if n == 0 else 0.0
    with decimal.localcontext() as ctx:
        ctx.prec = 60
        dx = decimal.Decimal(x)
        return float((-dx).exp() * dx**n / math.factorial(n))


def click_probability(phi, x, y, eta, vis, p_d):
    """Per-phase single-click probability at the beam splitter."""
    mean = 0.5 * eta * (x + y)
    amp = vis * eta * math.sqrt(x * y) * math.cos(phi)
    na = (1 - p_d) * math.exp(-(mean + amp))
    nb = (1 - p_d) * math.exp(-(mean - amp))
    return (1 - na) * nb + (1 - nb) * na


def quadrature_gain(x, y, eta, vis, p_d, points=4096):
    """Phase average by the periodic trapezoid rule (spectrally accurate for smooth periodic integrands)."""
    phis = np.arange(points) * (2 * math.pi / points)
    mean = 0.5 * eta * (x + y)
    amp = vis * eta * math.sqrt(x * y) * np.cos(phis)
    na = (1 - p_d) * np.exp(-(mean + amp))
    nb = (1 - p_d) * np.exp(-(mean - amp))
    return float(np.mean((1 - na) * nb + (1 - nb) * na))


def adaptive_quadrature_gain(x, y, eta, vis, p_d):
    val, _ = integrate.quad(click_probability, 0.0, math.pi, args=(x, y, eta, vis, p_d),
                            epsabs=0.0, epsrel=1e-12, limit=200)
    return val / math.pi


def code_mode_enumerated(mu, eta, vis, p_d):
    """Code-mode gain and error by enumerating the four bit pairs."""
    q = err = 0.0
    for ka in (0, 1):
        for kb in (0, 1):
            same = ka == kb
            cos = 1.0 if same else -1.0
            lam_plus = eta * mu * (1 + vis * cos)
            lam_minus = eta * mu * (1 - vis * cos)
            np_ = (1 - p_d) * math.exp(-lam_plus)
            nm = (1 - p_d) * math.exp(-lam_minus)
            plus_only = (1 - np_) * nm
            minus_only = (1 - nm) * np_
            q += 0.25 * (plus_only + minus_only)
            err += 0.25 * (minus_only if same else plus_only)
    return q, err / q


def synth_gain_bruteforce(y_table, x_int, y_int):
    cutoff = y_table.shape[0] - 1
    total = 0.0
    for n in range(cutoff + 1):
        pn = poisson_exact(x_int, n)
        for m in range(cutoff + 1):
            total += pn * poisson_exact(y_int, m) * y_table[n, m]
    return total


def zero_sum_deltas(rng, size, d_lo, d_hi):
    """Deviations with exact zero mean and extremes inside [d_lo, d_hi]."""
    d = rng.uniform(d_lo, d_hi, size)
    if rng.random() < 0.3:  # two-point sequences sit on the range endpoints
        d = np.where(rng.random(size) < d_hi / (d_hi - d_lo), d_lo, d_hi)
    d = d - d.mean()
    scale = min(d_hi / d.max(), d_lo / d.min()) if d.max() > 0 and d.min() < 0 else 0.0
    return d * min(scale, 1.0)


def mixture_pn(intensities, cutoff):
    x = np.asarray(intensities, dtype=float)
    return np.array([np.mean(np.exp(-x) * x**n) / math.factorial(n) for n in range(cutoff + 1)])


def simulate_tomography(rng, intensities, pulses, eta):
    """Clicks of a local threshold detector over ``pulses`` pulses cycling through ``intensities``."""
    x = np.asarray(intensities, dtype=float)
    reps = pulses // x.size
    p = -np.expm1(-eta * x)
    return int(rng.binomial(reps, p).sum()), reps * x.size
