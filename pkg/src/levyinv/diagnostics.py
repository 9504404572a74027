"""Runnable checks of the limit theory.

* :func:`generator_apply` evaluates Af(x) for the infinitesimal generator,
  so ``nu_n(Af) -> 0`` can be tracked along a run.
* :func:`lyapunov_trace` follows ``nu_n(V^{p/2+a-1})``.
* :func:`mean_reversion_probe` evaluates the drift/noise balance
  ``<grad V, b~> + phi_{p,q}`` on a grid and fits alpha, beta.
* :func:`asclt_run` streams normalised partial sums of i.i.d. heavy-tailed
  variables into a log-weighted empirical measure.

All of this is one dimensional (d = l = 1).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .empirical import EmpiricalMeasure
from .errors import CapabilityError, ConfigError, HypothesisError, LevyDomainError
from .levy import INF, INNER, OUTER
from .rng import RngStream
from .schedules import PolynomialRule

EPS0 = 1e-3


# ---------------------------------------------------------------------------
class TestFunction:
    """Compactly supported C^2 function with explicit derivatives."""

    __test__ = False  # not a pytest class

    def __init__(self, f, df, d2f, center, radius, name="test"):
        self.f, self.df, self.d2f = f, df, d2f
        self.center = float(center)
        self.radius = float(radius)
        self.name = name
        for e in (self.center - self.radius, self.center + self.radius):
            if abs(f(e)) > 1e-8 or abs(df(e)) > 1e-8:
                raise ValueError("f and f' must vanish at the edge of the support")

    @property
    def support(self):
        return self.center - self.radius, self.center + self.radius

    def __call__(self, x):
        return self.f(x)

    @classmethod
    def bump(cls, center=0.0, radius=1.0):
        """(1 - z^2)^3 on |z| < 1, z = (x - center)/radius."""
        p = _Bump(center, radius)
        return cls(p.f, p.df, p.d2f, p.c, p.R, name=f"bump({p.c:g},{p.R:g})")

    @classmethod
    def plateau(cls, inner=1.0, outer=2.0, center=0.0):
        """1 on |x - c| <= inner, quintic smoothstep down to 0 at outer."""
        p = _Plateau(inner, outer, center)
        return cls(p.f, p.df, p.d2f, p.c, p.b, name=f"plateau({p.a:g},{p.b:g})")

    def __add__(self, other):
        lo = min(self.support[0], other.support[0])
        hi = max(self.support[1], other.support[1])
        p = _Sum(self, other)
        return TestFunction(p.f, p.df, p.d2f, (lo + hi) / 2, (hi - lo) / 2,
                            f"{self.name}+{other.name}")


# module-level profiles (not closures) so test functions pickle into worker processes
class _Bump:
    def __init__(self, center, radius):
        self.c, self.R = float(center), float(radius)

    def f(self, x):
        z = (x - self.c) / self.R
        return (1.0 - z * z) ** 3 if abs(z) < 1 else 0.0

    def df(self, x):
        z = (x - self.c) / self.R
        return -6.0 * z * (1.0 - z * z) ** 2 / self.R if abs(z) < 1 else 0.0

    def d2f(self, x):
        z = (x - self.c) / self.R
        if abs(z) >= 1:
            return 0.0
        w = 1.0 - z * z
        return (-6.0 * w * w + 24.0 * z * z * w) / (self.R * self.R)


class _Plateau:
    def __init__(self, inner, outer, center):
        self.c, self.a, self.b = float(center), float(inner), float(outer)
        if not 0 <= self.a < self.b:
            raise ValueError("need 0 <= inner < outer")
        self.w = self.b - self.a

    def f(self, x):
        r = abs(x - self.c)
        if r <= self.a:
            return 1.0
        if r >= self.b:
            return 0.0
        t = (self.b - r) / self.w
        return t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)

    def df(self, x):
        r = abs(x - self.c)
        if r <= self.a or r >= self.b:
            return 0.0
        s = 1.0 if x >= self.c else -1.0
        t = (self.b - r) / self.w
        return -s * 30.0 * t * t * (1.0 - t) ** 2 / self.w

    def d2f(self, x):
        r = abs(x - self.c)
        if r <= self.a or r >= self.b:
            return 0.0
        t = (self.b - r) / self.w
        return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (self.w * self.w)


class _Sum:
    def __init__(self, g, h):
        self.g, self.h = g, h

    def f(self, x):
        return self.g.f(x) + self.h.f(x)

    def df(self, x):
        return self.g.df(x) + self.h.df(x)

    def d2f(self, x):
        return self.g.d2f(x) + self.h.d2f(x)


def _check_scalar_model(sde):
    if not sde.scalar:
        raise CapabilityError("diagnostics are implemented for d = l = 1")


def generator_apply(sde, tf, x, eps0=EPS0):
    """Af(x) = f' b + sigma^2 f''/2 + int (f(x+ky) - f(x) - f'(x) k y 1_{|y|<=1}) pi(dy)."""
    _check_scalar_model(sde)
    x = float(x)
    fx, d1, d2 = tf.f(x), tf.df(x), tf.d2f(x)
    out = d1 * sde.drift(x)
    if sde.sigma is not None:
        s = sde.sigma(x)
        out += 0.5 * s * s * d2
    if sde.kappa is None or sde.levy is None:
        return out
    k = float(sde.kappa(x))
    if k == 0.0:
        return out
    levy = sde.levy
    lo, hi = tf.support
    # y values where x + k y crosses the support edges
    edges = sorted(abs((e - x) / k) for e in (lo, hi))
    f = tf.f
    small = 0.0
    if d2 != 0.0:
        small = 0.5 * d2 * k * k * levy.band_moment(2.0, 0.0, eps0)
    band = levy.expect(lambda y: f(x + k * y) - fx - d1 * k * y, eps0, 1.0, edges)
    outer = levy.expect(lambda y: f(x + k * y), 1.0, INF, edges) - fx * levy.tail_mass(1.0)
    return out + small + band + outer


class GeneratorFunctional:
    """x -> Af(x), tabulated on a grid and interpolated; exact outside the grid."""

    def __init__(self, sde, tf, grid=None, eps0=EPS0):
        self.sde, self.tf, self.eps0 = sde, tf, eps0
        if grid is None:
            c, R = tf.center, tf.radius
            near = np.linspace(c - 2 * R, c + 2 * R, 801)
            far = c + np.sinh(np.linspace(-math.asinh(200.0), math.asinh(200.0), 801)) * R
            grid = np.unique(np.concatenate([near, far]))
        self.grid = np.asarray(grid, dtype=float)
        self.values = np.array([generator_apply(sde, tf, v, eps0) for v in self.grid])
        self._lo, self._hi = self.grid[0], self.grid[-1]
        self._g = self.grid.tolist()
        self._v = self.values.tolist()

    @property
    def sup_abs(self):
        return float(np.max(np.abs(self.values)))

    def exact(self, x):
        return generator_apply(self.sde, self.tf, x, self.eps0)

    def __call__(self, x):
        if not self._lo <= x <= self._hi:
            return self.exact(x)
        return float(np.interp(x, self.grid, self.values))


@dataclass
class Trace:
    n: list
    values: list
    meta: dict = field(default_factory=dict)

    def to_rows(self):
        return list(zip(self.n, self.values))


def generator_residual(measure, name="Af"):
    """Probes of nu_n(Af) recorded by ``measure`` for the functional ``name``."""
    return _probe_trace(measure, name)


def _probe_trace(measure, name):
    if name not in measure.probe_names:
        raise KeyError(f"functional {name!r} is not probed by this measure")
    i = measure.probe_names.index(name)
    return Trace([p[0] for p in measure.probes], [p[2][i] for p in measure.probes])


# ---------------------------------------------------------------------------
class LyapunovSpec:
    """EQ-function V with derivatives and the indices (a, p, q).

    ``V`` must grow: V(1e3) > 10 V(0) is required.
    """

    def __init__(self, a=1.0, p=1.0, q=1.0, V=None, dV=None, d2V=None):
        if not 0 < a <= 1:
            raise ValueError("a must lie in (0, 1]")
        if not p > 0:
            raise ValueError("p must be positive")
        if not 0 <= q <= 1:
            raise ValueError("q must lie in [0, 1]")
        self.a, self.p, self.q = float(a), float(p), float(q)
        self.default = V is None
        if self.default:
            V, dV, d2V = _v_default, _dv_default, _d2v_default
        elif dV is None or d2V is None:
            raise ValueError("a custom V needs dV and d2V")
        if not V(1e3) > 10 * V(0.0):
            raise ValueError("V must diverge at infinity (V(1e3) <= 10 V(0))")
        if min(V(-1e3), V(0.0), V(1e3)) < 1 - 1e-12:
            raise ValueError("V must be >= 1")
        self.V, self.dV, self.d2V = V, dV, d2V

    @property
    def exponent(self):
        return self.p / 2 + self.a - 1

    def functional(self):
        return PowerOfV(self.V, self.exponent)

    def scaled(self, factor):
        V, dV, d2V = self.V, self.dV, self.d2V
        out = LyapunovSpec.__new__(LyapunovSpec)
        out.__dict__.update(self.__dict__)
        out.default = False
        out.V, out.dV, out.d2V = (_Scaled(factor, g) for g in (V, dV, d2V))
        return out


def _v_default(x):
    return 1.0 + x * x


def _dv_default(x):
    return 2.0 * x


def _d2v_default(x):
    return 2.0


class _Scaled:
    def __init__(self, factor, g):
        self.factor, self.g = factor, g

    def __call__(self, x):
        return self.factor * self.g(x)


class PowerOfV:
    def __init__(self, V, e):
        self.V, self.e = V, float(e)

    def __call__(self, x):
        return self.V(x) ** self.e


@dataclass
class LyapunovTrace:
    n: list
    values: list
    running_max: list
    exponent: float
    informational: bool

    @property
    def stabilization(self):
        """max over probes with n >= N/10 divided by the overall max."""
        if not self.values:
            return math.nan
        N = self.n[-1]
        top = max(self.values)
        last = max(v for m, v in zip(self.n, self.values) if m >= N / 10)
        return last / top if top else 1.0


def lyapunov_trace(measure, spec, name="lyapunov"):
    """Probes of nu_n(V^{p/2+a-1}) from a measure that registered spec.functional()."""
    tr = _probe_trace(measure, name)
    rmax, best = [], -math.inf
    for v in tr.values:
        best = max(best, v)
        rmax.append(best)
    return LyapunovTrace(tr.n, tr.values, rmax, spec.exponent, spec.exponent <= 0)


# ---------------------------------------------------------------------------
def default_grid(radius=1e3, points=10 ** 4):
    """Symmetric grid: fine near 0, geometric out to ``radius``."""
    half = points // 2
    core = np.linspace(0.0, 10.0, half // 2 + 1)
    tail = np.geomspace(10.0, radius, half - half // 2 + 1)
    r = np.unique(np.concatenate([core, tail]))
    return np.concatenate([-r[:0:-1], r])


def _holder(values, grid, exponent, sub=2000, chunk=250):
    """sup |g(x) - g(y)| / |x - y|^exponent over pairs of a grid subsample."""
    step = max(1, len(grid) // sub)
    x = grid[::step]
    g = values[::step]
    best = 0.0
    for i in range(0, len(x), chunk):
        dx = np.abs(x[i:i + chunk, None] - x[None, :])
        dg = np.abs(g[i:i + chunk, None] - g[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(dx > 0, dg / dx ** exponent, 0.0)
        best = max(best, float(q.max()))
    return best


def lyapunov_constants(spec, grid=None):
    """Grid estimates of lambda_p, c_p (p <= 1), d_p and e_p (p > 1)."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    p = spec.p
    V = np.array([spec.V(x) for x in grid])
    dV = np.array([spec.dV(x) for x in grid])
    d2V = np.array([spec.d2V(x) for x in grid])
    # V^{1-p} (V^p)'' / (2p) = (V'' + (p-1) V'^2 / V) / 2
    lam = 0.5 * (d2V + (p - 1) * dV * dV / V)
    lam_p = float(lam.max())
    if spec.default:
        lam_p = max(lam_p, 2 * p - 1)  # limit at infinity for V = 1 + x^2
    out = {"lambda_p": lam_p}
    if p <= 0.5:
        out["c_p"] = _holder(V ** p / p, grid, 2 * p)
    elif p <= 1:
        g = V ** (p - 1) * dV
        out["c_p"] = (float(np.max(np.abs(np.gradient(g, grid)))) if p == 1
                      else _holder(g, grid, 2 * p - 1))
    if p > 1:
        lip = float(np.max(np.abs(dV / (2 * np.sqrt(V)))))
        if spec.default:
            if abs(lip - 1.0) > 1e-6:
                raise ValueError(f"grid estimate of [sqrt V]_1 is {lip!r}, expected 1")
            lip = 1.0
        out["e_p"] = lip ** (2 * (p - 1))
        out["d_p"] = 2.0 ** max(2 * (p - 1) - 1, 0.0)
    return out


def _check_moments(levy, p, q):
    if levy.partial_moment(2 * p, OUTER) == INF:
        raise HypothesisError(f"(H^1_p) fails: int_{{|y|>1}} |y|^{2 * p:g} pi(dy) = inf")
    if q == 0:
        inner = 0.0 if (levy.activity_index == 0) else INF
    else:
        inner = levy.partial_moment(2 * q, INNER)
    if inner == INF:
        raise HypothesisError(f"(H^2_q) fails: int_{{|y|<=1}} |y|^{2 * q:g} pi(dy) = inf")


def _effective_drift(sde, spec):
    p, q = spec.p, spec.q
    levy = sde.levy
    b = sde.drift
    if sde.kappa is None or levy is None:
        return b, "b"
    kappa = sde.kappa
    try:
        if p <= 0.5 <= q:
            return b, "b"
        if p <= 0.5 and q <= 0.5:
            m = levy.small_jump_mean()
            return (lambda x: b(x) - kappa(x) * m), "b - kappa int_{|y|<=1} y pi"
        m = levy.big_jump_mean()
        return (lambda x: b(x) + kappa(x) * m), "b + kappa int_{|y|>1} y pi"
    except LevyDomainError as err:
        raise HypothesisError(str(err)) from err


@dataclass
class MeanReversionReport:
    alpha_hat: float
    beta_hat: float
    verdict: str
    R0: float
    constants: dict
    drift_case: str
    grid_radius: float

    def to_dict(self):
        return dict(self.__dict__)


def mean_reversion_probe(sde, spec, grid=None):
    """Fit <grad V, b~> + phi_{p,q} <= beta - alpha V^a on a grid."""
    _check_scalar_model(sde)
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    p, q, a = spec.p, spec.q, spec.a
    levy = sde.levy if sde.kappa is not None else None
    if levy is not None:
        _check_moments(levy, p, q)
    btil, case = _effective_drift(sde, spec)
    consts = lyapunov_constants(spec, grid)

    V = np.array([spec.V(x) for x in grid])
    dV = np.array([spec.dV(x) for x in grid])
    B = np.array([btil(x) for x in grid], dtype=float)
    S2 = np.array([sde.sigma(x) ** 2 for x in grid]) if sde.sigma is not None else np.zeros_like(grid)
    K = np.array([abs(sde.kappa(x)) for x in grid]) if levy is not None else np.zeros_like(grid)

    if p < 1:
        if levy is not None and q <= p:
            consts["m_2p"] = levy.moment(2 * p)
            phi = consts["c_p"] * consts["m_2p"] * K ** (2 * p) * V ** (1 - p)
        else:
            phi = np.zeros_like(grid)
    else:
        m2 = levy.moment(2.0) if levy is not None else 0.0
        consts["m_2"] = m2
        if p == 1:
            phi = consts["lambda_p"] * (S2 + m2 * K * K)
        else:
            m2p = levy.moment(2 * p) if levy is not None else 0.0
            consts["m_2p"] = m2p
            phi = consts["d_p"] * consts["lambda_p"] * (
                S2 + m2 * K * K + consts["e_p"] * m2p * K ** (2 * p) / V ** (p - 1))
    L = dV * B + phi
    Va = V ** a
    v0 = spec.V(0.0) ** a
    outside = Va >= 10 * v0
    if not outside.any():
        raise ValueError("grid never leaves the core where V^a <= 10 V^a(0)")
    R0 = float(np.min(np.abs(grid[outside])))
    alpha = float(-np.max(L[outside] / Va[outside]))
    beta = float(max(0.0, np.max(L + alpha * Va)))
    return MeanReversionReport(alpha, beta, "pass" if alpha > 0 else "fail", R0,
                               consts, case, float(np.max(np.abs(grid))))


# ---------------------------------------------------------------------------
class CauchySampler:
    """Standard Cauchy V_i; S_k / k is again standard Cauchy."""

    alpha = 1.0
    limit_scale = 1.0

    def draw(self, gen, n):
        return np.tan(np.pi * (gen.random(n) - 0.5))


class LogParetoSampler:
    """Symmetric V with P(|V| > x) = x^-alpha (1 + (1 + ln x)^-g) / 2 for x >= 1.

    P(V >= x) = x^-alpha / 4 + x^-alpha (1 + ln x)^-g / 4, a slowly varying
    correction of the attraction condition; the limit is symmetric stable
    with tail constant 1/4.
    """

    def __init__(self, alpha, g=2.0):
        if not 0 < alpha < 2:
            raise ValueError("alpha must lie in (0, 2)")
        if not g > 1 / alpha:
            raise ValueError("the correction exponent must exceed 1/alpha")
        self.alpha, self.g = float(alpha), float(g)
        c = 0.25
        self.limit_scale = (c * math.pi / (math.gamma(self.alpha)
                                           * math.sin(math.pi * self.alpha / 2))) ** (1 / self.alpha)

    def survival(self, x):
        return x ** -self.alpha * (1.0 + (1.0 + np.log(x)) ** -self.g) / 2.0

    def draw(self, gen, n):
        v = gen.random(n)
        target = 1.0 - v  # survival level in (0, 1]
        lo = np.ones(n)
        # upper bracket from survival >= x^-alpha / 2
        hi = np.maximum((2.0 * np.maximum(target, 1e-300)) ** (-1.0 / self.alpha), 1.0) * 2.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            big = self.survival(mid) > target
            lo = np.where(big, mid, lo)
            hi = np.where(big, hi, mid)
        sign = np.where(gen.random(n) < 0.5, -1.0, 1.0)
        return sign * 0.5 * (lo + hi)


def harmonic(k):
    return 1.0 / k


def check_asclt_weights(weights, N):
    """eta_k nonincreasing with infinite sum and k eta_k nonincreasing."""
    if weights is harmonic:
        return {"eta_nonincreasing": True, "k_eta_nonincreasing": True, "infinite_sum": True}
    if isinstance(weights, PolynomialRule):
        r = weights.exponent
        ok = {"eta_nonincreasing": r >= 0, "k_eta_nonincreasing": r >= 1,
              "infinite_sum": r <= 1}
    else:
        ks = np.unique(np.geomspace(1, max(N, 2), 200).astype(int))
        eta = np.array([weights(int(k)) for k in ks])
        ok = {"eta_nonincreasing": bool(np.all(np.diff(eta) <= 0)),
              "k_eta_nonincreasing": bool(np.all(np.diff(ks * eta) <= 1e-15 * ks[1:] * eta[1:])),
              "infinite_sum": bool(eta[-1] * ks[-1] > 0)}
    bad = [k for k, v in ok.items() if not v]
    if bad:
        raise ConfigError(f"weights violate the a.s. CLT conditions: {', '.join(bad)}")
    return ok


def asclt_run(sampler, N, weights=harmonic, seed=None, chunk=65536, store=True):
    """Empirical measure (1/H_N) sum eta_k delta_{S_k / k^{1/alpha}}."""
    if N < 1:
        raise ValueError("N must be >= 1")
    check_asclt_weights(weights, N)
    gen = RngStream(seed).generator()
    m = EmpiricalMeasure(store=store)
    inv = 1.0 / sampler.alpha
    total = 0.0
    k = 0
    while k < N:
        n = min(chunk, N - k)
        draws = sampler.draw(gen, n)
        for v in draws.tolist():
            k += 1
            total += v
            m.observe(total / k ** inv, weights(k))
    return m.finalize()
