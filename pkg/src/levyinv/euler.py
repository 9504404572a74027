"""Decreasing-step Euler recursions for dX = b dt + sigma dW + kappa dZ.

Every scheme updates

    x_{n+1} = x_n + gamma_{n+1} b(x_n) + sqrt(gamma_{n+1}) sigma(x_n) U_{n+1}
              + kappa(x_n) Zbar_{n+1}

and differs only in the driving increment ``Zbar``: exact (A),
truncated compound Poisson (B) or truncated and stopped at its first jump
(C).  Models with ``d = l = 1`` run on Python floats, which is an order of
magnitude faster than numpy for scalar work.
"""

import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import increments
from .errors import DivergenceError
from .levy import cms_symmetric
from .rng import Streams, as_streams
from .schedules import StepSchedule

SCHEMES = ("A", "B", "C")


@dataclass
class SdeSpec:
    """Coefficients under the h = 1 compensation convention.

    ``sigma`` or ``kappa`` may be None for a vanishing coefficient.  With
    ``compensated=False`` the driver is taken as the plain sum of jumps
    (e.g. a drift-free subordinator); the drift then gains
    ``kappa(x) * int_{|y|<=1} y pi(dy)`` so the recursion stays in h = 1 form.
    """

    b: object
    sigma: object = None
    kappa: object = None
    levy: object = None
    d: int = 1
    l: int = 1
    compensated: bool = True
    u_law: str = increments.GAUSSIAN
    name: str = "sde"

    def __post_init__(self):
        if self.d < 1 or self.l < 1:
            raise ValueError("dimensions must be >= 1")
        if self.kappa is not None and self.levy is None:
            raise ValueError("a jump coefficient needs a Lévy measure")
        self.shift = 0.0
        if not self.compensated and self.levy is not None and self.kappa is not None:
            self.shift = self.levy.small_jump_mean()

    @property
    def scalar(self):
        return self.d == 1 and self.l == 1

    def drift(self, x):
        """Drift in h = 1 form."""
        if self.shift == 0.0:
            return self.b(x)
        if self.scalar:
            return self.b(x) + self.kappa(x) * self.shift
        return np.asarray(self.b(x)) + np.asarray(self.kappa(x)) @ np.atleast_1d(self.shift)


@dataclass
class ChainState:
    n: int
    x: object
    schedule: StepSchedule
    streams: Streams
    total_jumps: int = 0
    max_jump_count: int = 0

    @property
    def Gamma(self):
        return self.schedule.Gamma

    @property
    def vector(self):
        return np.atleast_1d(np.asarray(self.x, dtype=float))


def initial_state(sde, x0, schedule=None, seed=None):
    x = float(np.asarray(x0).reshape(-1)[0]) if sde.scalar else np.array(x0, dtype=float).reshape(sde.d)
    sched = schedule.clone() if schedule is not None else StepSchedule()
    return ChainState(0, x, sched, as_streams(seed))


def _jump_sampler(scheme, sde, streams, budget):
    """Returns draw(gamma, u) -> (increment, count), or None without jumps."""
    levy = sde.levy
    if sde.kappa is None or levy is None:
        return None
    if scheme == "A":
        return lambda g, u: levy.exact_increment(g, streams)
    if scheme == "B":
        return lambda g, u: increments.compound_poisson(levy, g, u, streams, budget)
    if scheme == "C":
        return lambda g, u: increments.first_jump(levy, g, u, streams)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def _noise_sampler(sde, streams):
    if sde.sigma is None:
        return None
    law, l, rng = sde.u_law, sde.l, streams.u
    if law == increments.GAUSSIAN and l == 1:
        return rng.normal
    return lambda: increments.draw_u(law, l, rng)


def _make_update(sde, noise, jump):
    """One Euler move x -> x' given (gamma, u); returns (x', jump count)."""
    drift = sde.drift if sde.shift != 0.0 else sde.b
    sigma, kappa = sde.sigma, sde.kappa
    sqrt = math.sqrt
    if sde.scalar:
        def update(x, g, u):
            y = x + g * drift(x)
            if noise is not None:
                y += sqrt(g) * sigma(x) * noise()
            if jump is None:
                return y, 0
            z, k = jump(g, u)
            return y + kappa(x) * z, k
        return update

    def update(x, g, u):
        y = x + g * np.asarray(drift(x), dtype=float)
        if noise is not None:
            y = y + sqrt(g) * (np.asarray(sigma(x), dtype=float).reshape(sde.d, sde.l)
                               @ np.atleast_1d(noise()))
        if jump is None:
            return y, 0
        z, k = jump(g, u)
        return y + np.asarray(kappa(x), dtype=float).reshape(sde.d, sde.l) @ np.atleast_1d(z), k
    return update


def _finite(x):
    if isinstance(x, float):
        return x - x == 0.0
    return bool(np.all(np.isfinite(x)))


def step(scheme, sde, state, budget=increments.DEFAULT_JUMP_BUDGET):
    """Advance ``state`` by one step of ``scheme`` (in place); returns it."""
    if not _finite(state.x):
        raise DivergenceError(state.n, state.Gamma, state.x)
    update = _make_update(sde, _noise_sampler(sde, state.streams),
                          _jump_sampler(scheme, sde, state.streams, budget))
    g, _, u, _, _ = state.schedule.advance()
    x, k = update(state.x, g, u)
    state.n += 1
    state.x = x
    state.total_jumps += k
    state.max_jump_count = max(state.max_jump_count, k)
    if not _finite(x):
        raise DivergenceError(state.n, state.Gamma, x)
    return state


def step_stable_ou(alpha, c, state):
    """x' = x - gamma x / alpha + gamma^{1/alpha} c zeta, zeta standard symmetric alpha-stable.

    ``c = 0`` switches the noise off (deterministic contraction).
    """
    if not 0 < alpha < 2:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha!r}")
    g, _, _, _, _ = state.schedule.advance()
    x = state.x
    y = x - g * x / alpha
    if c != 0:
        rng = state.streams.sizes
        v = math.pi * (rng.uniform() - 0.5)
        zeta = math.tan(v) if alpha == 1.0 else cms_symmetric(alpha, v, -math.log(rng.uniform()))
        y += g ** (1.0 / alpha) * c * zeta
    state.n += 1
    state.x = y
    if not _finite(y):
        raise DivergenceError(state.n, state.Gamma, y)
    return state


# ---------------------------------------------------------------------------
@dataclass
class ChainResult:
    state: ChainState
    measure: object
    wall_time: float
    diverged: bool = False
    divergence: dict = field(default_factory=dict)

    def summary(self):
        return {"n": self.state.n, "Gamma": self.state.Gamma,
                "total_jumps": self.state.total_jumps,
                "max_jump_count": self.state.max_jump_count,
                "diverged": self.diverged, "divergence": self.divergence}


class TrajectoryWriter:
    """CSV rows (n, Gamma, x components, jump_count) every ``every`` steps."""

    def __init__(self, path, d, every=1):
        self.every = max(1, int(every))
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow(["n", "Gamma"] + [f"x{i}" for i in range(d)] + ["jump_count"])

    def write(self, n, Gamma, x, k):
        if n % self.every == 0:
            xs = [x] if isinstance(x, float) else list(np.ravel(x))
            self._w.writerow([n, repr(Gamma)] + [repr(float(v)) for v in xs] + [k])

    def close(self):
        self._fh.close()


def run_chain(sde, scheme, schedule, N, x0=0.0, seed=None, measure=None,
              trajectory=None, budget=increments.DEFAULT_JUMP_BUDGET, raise_on_divergence=False):
    """Run N steps, feeding x_{k-1} with weight eta_k to ``measure`` before step k.

    Divergence stops the chain; the partial result is returned with
    ``diverged=True`` unless ``raise_on_divergence`` is set.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    state = initial_state(sde, x0, schedule, seed)
    streams = state.streams
    update = _make_update(sde, _noise_sampler(sde, streams),
                          _jump_sampler(scheme, sde, streams, budget))
    advance = state.schedule.advance
    observe = measure.observe if measure is not None else None
    write = trajectory.write if trajectory is not None else None
    x = state.x
    total = 0
    kmax = 0
    n = 0
    scalar = isinstance(x, float)
    t0 = time.perf_counter()
    diverged = False
    info = {}
    try:
        for n in range(1, N + 1):
            g, e, u, _, _ = advance()
            if observe is not None:
                observe(x, e)
            x, k = update(x, g, u)
            total += k
            if k > kmax:
                kmax = k
            if scalar:
                if x - x != 0.0:
                    raise DivergenceError(n, state.schedule.Gamma, x)
            elif not np.all(np.isfinite(x)):
                raise DivergenceError(n, state.schedule.Gamma, x)
            if write is not None:
                write(n, state.schedule.Gamma, x, k)
    except DivergenceError as err:
        diverged = True
        info = {"n": err.n, "Gamma": err.Gamma,
                "x": float(err.x) if scalar else [float(v) for v in np.ravel(err.x)]}
        if raise_on_divergence:
            state.n, state.x, state.total_jumps, state.max_jump_count = n, x, total, kmax
            err.result = ChainResult(state, measure, time.perf_counter() - t0, True, info)
            raise
    else:
        n = N
    finally:
        if trajectory is not None:
            trajectory.close()
    state.n = n
    state.x = x
    state.total_jumps = total
    state.max_jump_count = kmax
    if measure is not None:
        measure.finalize()
    return ChainResult(state, measure, time.perf_counter() - t0, diverged, info)
