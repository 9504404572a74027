"""Per-step driving noise for the three Euler schemes.

* Scheme A: exact increments ``Z_gamma``.
* Scheme B: jumps above the threshold ``u`` as a compound Poisson sum, minus
  the drift compensator of the band ``u < |y| <= 1``.
* Scheme C: the same truncated process stopped at its first jump.

Poisson counts and exponential times are drawn by inverse CDF so each costs
exactly one uniform from the caller's stream.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ScheduleError, ScheduleWarning
from .rng import as_streams

GAUSSIAN = "gaussian"
RADEMACHER = "rademacher"
U_LAWS = (GAUSSIAN, RADEMACHER)

DEFAULT_JUMP_BUDGET = 16.0


@dataclass
class IncrementSample:
    gaussian_part: np.ndarray
    jump_part: np.ndarray
    jump_count: int


def draw_u(law, l, rng):
    """Scalar for ``l == 1``, else an ``(l,)`` array; centred, unit covariance."""
    if law == GAUSSIAN:
        if l == 1:
            return rng.normal()
        return np.array([rng.normal() for _ in range(l)])
    if law == RADEMACHER:
        if l == 1:
            return 1.0 if rng.uniform() <= 0.5 else -1.0
        return np.array([1.0 if rng.uniform() <= 0.5 else -1.0 for _ in range(l)])
    raise ValueError(f"unknown U law {law!r}; expected one of {U_LAWS}")


def sample_u(law, l, rng):
    if l < 1:
        raise ValueError("noise dimension must be >= 1")
    return np.atleast_1d(np.asarray(draw_u(law, l, rng), dtype=float))


def poisson_inverse(mean, v):
    """Smallest k with P(Poisson(mean) <= k) >= v."""
    if mean <= 0:
        return 0
    if mean > 500:
        return int(stats.poisson.ppf(min(v, 1.0 - 1e-16), mean))
    p = math.exp(-mean)
    acc = p
    k = 0
    cap = int(10 * mean) + 100
    while v > acc:
        k += 1
        p *= mean / k
        acc += p
        if k > cap:
            return int(stats.poisson.ppf(min(v, 1.0 - 1e-16), mean))
    return k


def _check_intensity(lam):
    if not math.isfinite(lam):
        raise ScheduleError("pi(|y| > u) is infinite: threshold too small for this measure")


def compound_poisson(levy, gamma, u, streams, budget=None):
    """Truncated increment ``Z^u_gamma``; returns ``(jump, count)``.

    ``u = 0`` is accepted only for finite-activity measures (all jumps kept).
    """
    lam = levy._tail(u)
    _check_intensity(lam)
    mean = lam * gamma
    if budget is not None and mean > budget:
        warnings.warn(f"expected {mean:.3g} jumps per step exceeds the budget {budget:g}",
                      ScheduleWarning, stacklevel=3)
    count = poisson_inverse(mean, streams.counts.uniform())
    comp = levy._compensator(u) if not levy.symmetric else 0.0
    if levy.dim == 1:
        total = 0.0
        for _ in range(count):
            total += levy._sample_above(u, streams.sizes)
        return total - gamma * comp, count
    total = np.zeros(levy.dim)
    for _ in range(count):
        total = total + levy._sample_above(u, streams.sizes)
    return total - gamma * np.asarray(comp), count


def first_jump(levy, gamma, u, streams):
    """Truncated increment stopped at its first jump; ``count`` is 0 or 1."""
    lam = levy._tail(u)
    _check_intensity(lam)
    comp = levy._compensator(u) if not levy.symmetric else 0.0
    t = -math.log(streams.times.uniform()) / lam if lam > 0 else math.inf
    if t > gamma:
        if levy.dim == 1:
            return -gamma * comp, 0
        return -gamma * np.asarray(comp, dtype=float) * np.ones(levy.dim), 0
    jump = levy._sample_above(u, streams.sizes)
    return jump - t * comp, 1


def _wrap(levy, jump, count, u_law, streams):
    l = levy.dim
    g = sample_u(u_law, l, streams.u) if u_law else np.zeros(l)
    return IncrementSample(g, np.atleast_1d(np.asarray(jump, dtype=float)), int(count))


def _check_threshold(u):
    if not 0 < u < 1:
        raise ScheduleError(f"truncation threshold must lie in (0, 1), got {u!r}")


def sample_exact(levy, gamma, rng, u_law=None):
    """Exact increment of Z over a step of length ``gamma``."""
    streams = as_streams(rng)
    jump, count = levy.exact_increment(gamma, streams)
    return _wrap(levy, jump, count, u_law, streams)


def sample_truncated(levy, gamma, u, rng, u_law=None, budget=DEFAULT_JUMP_BUDGET):
    """Compensated compound Poisson increment keeping jumps |y| > u."""
    _check_threshold(u)
    streams = as_streams(rng)
    jump, count = compound_poisson(levy, gamma, u, streams, budget)
    return _wrap(levy, jump, count, u_law, streams)


def sample_first_jump(levy, gamma, u, rng, u_law=None):
    """Truncated increment evaluated at min(gamma, first jump time)."""
    _check_threshold(u)
    streams = as_streams(rng)
    jump, count = first_jump(levy, gamma, u, streams)
    return _wrap(levy, jump, count, u_law, streams)
