"""Streaming weighted empirical measure and its offline views.

``nu_n = (1/H_n) sum_{k<=n} eta_k delta_{x_{k-1}}`` is maintained through
the recursion ``m <- m + (eta/H)(f(x) - m)`` for every registered
functional.  The raw ``(x, eta)`` stream is optionally kept in a compact
store, from which the kernel density estimate, KS distances and quantiles
are computed after the run.
"""

import math
from array import array
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

from .errors import CapabilityError, StoreError

ONE = "one"
DEFAULT_STORE_CAP = 10 ** 7


# ---------------------------------------------------------------------------
# picklable functionals
class Constant:
    def __init__(self, value=1.0):
        self.value = float(value)

    def __call__(self, x):
        return self.value


class Identity:
    def __call__(self, x):
        return x


class AbsPow:
    """x -> |x|^r."""

    def __init__(self, r):
        self.r = float(r)

    def __call__(self, x):
        return abs(x) ** self.r


class Indicator:
    """x -> 1 if lo < x <= hi else 0."""

    def __init__(self, lo, hi):
        self.lo = float(lo)
        self.hi = float(hi)

    def __call__(self, x):
        return 1.0 if self.lo < x <= self.hi else 0.0


def next_probe(n):
    """Smallest ceil(10^{j/4}) strictly greater than n."""
    j = 0 if n < 1 else max(0, int(4 * math.log10(n)) - 1)
    while True:
        m = math.ceil(10.0 ** (j / 4.0))
        if m > n:
            return m
        j += 1


def probe_indices(limit):
    """The distinct probe times ceil(10^{j/4}) not exceeding ``limit``."""
    out = []
    n = next_probe(0)
    while n <= limit:
        out.append(n)
        n = next_probe(n)
    return out


class _Sum:
    """Neumaier compensated running sum."""

    __slots__ = ("s", "c")

    def __init__(self, s=0.0, c=0.0):
        self.s = s
        self.c = c

    def add(self, x):
        s = self.s
        t = s + x
        if abs(s) >= abs(x):
            self.c += (s - t) + x
        else:
            self.c += (x - t) + s
        self.s = t
        return t + self.c

    @property
    def value(self):
        return self.s + self.c


@dataclass
class DensityEstimate:
    grid: np.ndarray
    bandwidth: float
    density: np.ndarray

    def mass(self):
        return float(integrate.trapezoid(self.density, self.grid))

    def sup_deviation(self, reference):
        """max over the grid of |density - reference(grid)|."""
        ref = np.asarray(reference(self.grid), dtype=float)
        return float(np.max(np.abs(self.density - ref)))


class EmpiricalMeasure:
    """Weighted occupation measure of one chain (or a merge of chains).

    Parameters
    ----------
    functionals : mapping name -> callable, each f evaluated once per observation.
    dim : state dimension (points are floats when dim == 1).
    store : keep the (x, eta) stream for KDE / KS / quantiles.
    store_cap : beyond this many points the store is thinned deterministically.
    histogram : optional (lo, hi, bins) fixed grid of weighted counts.
    probe_names : functionals recorded at n = ceil(10^{j/4}); default all.
    """

    def __init__(self, functionals=None, dim=1, store=True, store_cap=DEFAULT_STORE_CAP,
                 histogram=None, probe_names=None):
        self.dim = int(dim)
        self.names = [ONE]
        self.fns = [Constant(1.0)]
        for name, fn in (functionals or {}).items():
            if name == ONE:
                raise ValueError(f"{ONE!r} is reserved for the sentinel functional")
            self.names.append(name)
            self.fns.append(fn)
        self.values = [0.0] * len(self.names)
        self.poisoned = {}
        self._poisoned_idx = set()
        self.n = 0
        self._H = _Sum()
        self.H = 0.0
        self.keep = bool(store)
        self.store_cap = int(store_cap)
        self._xs = array("d")
        self._ws = array("d")
        self.thinned = 0
        self.hist_spec = None
        if histogram is not None:
            lo, hi, bins = histogram
            self.hist_spec = (float(lo), float(hi), int(bins))
            self.hist = np.zeros(int(bins))
            self.hist_out = [0.0, 0.0]
            self._hwidth = (self.hist_spec[1] - self.hist_spec[0]) / self.hist_spec[2]
        self.probe_names = list(self.names if probe_names is None else probe_names)
        self._probe_idx = [self.names.index(p) for p in self.probe_names]
        self._next_probe = next_probe(0)
        self.probes = []

    # ------------------------------------------------------------- streaming
    def observe(self, x, eta):
        """Add the point x with weight eta (> 0)."""
        if not eta > 0:
            raise ValueError(f"weights must be positive, got {eta!r}")
        self.n += 1
        H = self._H.add(eta)
        self.H = H
        w = eta / H
        vals = self.values
        skip = self._poisoned_idx
        for i, f in enumerate(self.fns):
            if skip and i in skip:
                continue
            v = f(x)
            if v != v or v == math.inf or v == -math.inf:
                self.poisoned[self.names[i]] = self.n
                skip.add(i)
                vals[i] = math.nan
                continue
            vals[i] += w * (v - vals[i])
        if self.keep:
            if self.dim == 1:
                self._xs.append(x)
            else:
                self._xs.extend(x)
            self._ws.append(eta)
            if len(self._ws) >= self.store_cap:
                self._thin()
        if self.hist_spec is not None:
            self._bin(x, eta)
        if self.n == self._next_probe:
            self._record_probe()

    def _bin(self, x, eta):
        lo, hi, bins = self.hist_spec
        if x < lo:
            self.hist_out[0] += eta
        elif x >= hi:
            self.hist_out[1] += eta
        else:
            self.hist[min(int((x - lo) / self._hwidth), bins - 1)] += eta

    def _record_probe(self):
        self.probes.append((self.n, self.H, [self.values[i] for i in self._probe_idx]))
        self._next_probe = next_probe(self.n)

    def finalize(self):
        """Record a closing probe at the current n (idempotent)."""
        if self.n and (not self.probes or self.probes[-1][0] != self.n):
            self.probes.append((self.n, self.H, [self.values[i] for i in self._probe_idx]))
        return self

    def _thin(self):
        # systematic resampling down to half the cap; total weight preserved
        x, w = self.points()
        total = w.sum()
        m = self.store_cap // 2
        targets = (np.arange(m) + 0.5) * (total / m)
        idx = np.minimum(np.searchsorted(np.cumsum(w), targets), len(w) - 1)
        self._xs = array("d", np.asarray(x[idx], dtype=float).ravel())
        self._ws = array("d", np.full(m, total / m))
        self.thinned += 1

    # ---------------------------------------------------------------- access
    def value(self, name):
        return self.values[self.names.index(name)]

    def as_dict(self):
        return dict(zip(self.names, self.values))

    def points(self):
        """Stored points (shape (k,) or (k, dim)) and weights."""
        if not self.keep:
            raise StoreError("this measure was built without a sample store")
        xs = np.frombuffer(self._xs, dtype=float) if len(self._xs) else np.zeros(0)
        ws = np.frombuffer(self._ws, dtype=float) if len(self._ws) else np.zeros(0)
        if self.dim > 1:
            xs = xs.reshape(-1, self.dim)
        return xs.copy(), ws.copy()

    def _nonempty(self):
        x, w = self.points()
        if len(w) == 0:
            raise StoreError("the sample store is empty")
        return x, w

    def _univariate(self):
        if self.dim != 1:
            raise CapabilityError("only one-dimensional measures support this statistic")
        return self._nonempty()

    def batch_value(self, f):
        """sum eta f(x) / sum eta over the store, by exact summation."""
        x, w = self._nonempty()
        return math.fsum(wi * f(xi) for xi, wi in zip(x, w)) / math.fsum(w)

    def effective_size(self):
        _, w = self._nonempty()
        return float(w.sum() ** 2 / np.sum(w * w))

    # ------------------------------------------------------------- reduction
    def merge(self, other):
        """New measure equal to one pass over both streams (self first)."""
        if self.names != other.names or self.dim != other.dim:
            raise ValueError("can only merge measures with the same functionals and dimension")
        out = EmpiricalMeasure.__new__(EmpiricalMeasure)
        out.__dict__.update(self.__dict__)
        H = self.H + other.H
        out._H = _Sum(self._H.s, self._H.c)
        out._H.add(other._H.s)
        out._H.add(other._H.c)
        out.H = out._H.value
        out.n = self.n + other.n
        out.values = [(self.H * a + other.H * b) / H for a, b in zip(self.values, other.values)]
        out.values[0] = 1.0
        out.poisoned = {**other.poisoned, **self.poisoned}
        out._poisoned_idx = self._poisoned_idx | other._poisoned_idx
        for i in out._poisoned_idx:
            out.values[i] = math.nan
        out.keep = self.keep and other.keep
        if out.keep:
            out._xs = array("d", self._xs)
            out._xs.extend(other._xs)
            out._ws = array("d", self._ws)
            out._ws.extend(other._ws)
        out.thinned = self.thinned + other.thinned
        if self.hist_spec is not None and self.hist_spec == other.hist_spec:
            out.hist = self.hist + other.hist
            out.hist_out = [a + b for a, b in zip(self.hist_out, other.hist_out)]
        out.probes = list(self.probes)
        out._next_probe = -1
        return out

    # --------------------------------------------------------------- offline
    def quantile(self, p):
        """Left-continuous inverse of the weighted ECDF: min{x : F(x) >= p}."""
        if not 0 < p < 1:
            raise ValueError("p must lie in (0, 1)")
        x, w = self._univariate()
        return weighted_quantile(x, w, p)

    def ks_distance(self, reference_cdf):
        x, w = self._univariate()
        return ks_distance(x, w, reference_cdf)

    def kde(self, bandwidth="auto", grid=(-6.0, 6.0, 601)):
        x, w = self._univariate()
        return kde(x, w, bandwidth, grid)


# ---------------------------------------------------------------------------
# offline statistics on (points, weights)
def _sorted(x, w):
    order = np.argsort(x, kind="stable")
    return np.asarray(x, dtype=float)[order], np.asarray(w, dtype=float)[order]


def weighted_quantile(x, w, p):
    xs, ws = _sorted(x, w)
    cum = np.cumsum(ws)
    k = int(np.searchsorted(cum, p * cum[-1], side="left"))
    return float(xs[min(k, len(xs) - 1)])


def _cdf_values(cdf, x):
    try:
        vals = np.asarray(cdf(x), dtype=float)
        if vals.shape == x.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([float(cdf(v)) for v in x])


def ks_distance(x, w, reference_cdf):
    """sup_x |F_n(x) - F(x)| checking both one-sided limits of the ECDF."""
    xs, ws = _sorted(x, w)
    if len(xs) == 0:
        raise StoreError("the sample store is empty")
    uniq, start = np.unique(xs, return_index=True)
    grouped = np.add.reduceat(ws, start)
    cum = np.cumsum(grouped)
    total = cum[-1]
    right = cum / total
    left = np.concatenate(([0.0], right[:-1]))
    ref = _cdf_values(reference_cdf, uniq)
    return float(max(np.max(np.abs(right - ref)), np.max(np.abs(left - ref))))


def auto_bandwidth(x, w):
    """0.9 min(sd, IQR/1.34) N_eff^{-1/5}; sd is skipped when not finite."""
    xs, ws = _sorted(x, w)
    total = ws.sum()
    neff = total ** 2 / np.sum(ws * ws)
    iqr = weighted_quantile(xs, ws, 0.75) - weighted_quantile(xs, ws, 0.25)
    spread = iqr / 1.34
    with np.errstate(over="ignore", invalid="ignore"):
        mean = np.sum(ws * xs) / total
        sd = math.sqrt(np.sum(ws * (xs - mean) ** 2) / total)
    if math.isfinite(sd) and sd > 0 and (spread <= 0 or sd < spread):
        spread = sd
    if not spread > 0:
        spread = 1.0
    return 0.9 * spread * neff ** -0.2


def kde(x, w, bandwidth="auto", grid=(-6.0, 6.0, 601)):
    """Weighted Gaussian kernel density on an evenly spaced grid."""
    xs, ws = _sorted(x, w)
    if len(xs) == 0:
        raise StoreError("the sample store is empty")
    h = auto_bandwidth(xs, ws) if bandwidth in (None, "auto") else float(bandwidth)
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    lo, hi, count = grid
    g = np.linspace(float(lo), float(hi), int(count))
    total = ws.sum()
    # points further than 9h from the grid contribute < 1e-17 each
    a = np.searchsorted(xs, g[0] - 9 * h)
    b = np.searchsorted(xs, g[-1] + 9 * h, side="right")
    px, pw = xs[a:b], ws[a:b]
    dens = np.zeros_like(g)
    chunk = max(1, 2 ** 22 // max(len(g), 1))
    for i in range(0, len(px), chunk):
        z = (g[:, None] - px[None, i:i + chunk]) / h
        dens += np.exp(-0.5 * z * z) @ pw[i:i + chunk]
    dens *= 1.0 / (total * h * math.sqrt(2 * math.pi))
    return DensityEstimate(g, h, dens)


# ---------------------------------------------------------------------------
# reference laws
class CauchyCDF:
    def __init__(self, scale=1.0, loc=0.0):
        self.scale = float(scale)
        self.loc = float(loc)

    def __call__(self, x):
        return 0.5 + np.arctan((np.asarray(x, dtype=float) - self.loc) / self.scale) / math.pi

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.loc) / self.scale
        return 1.0 / (math.pi * self.scale * (1.0 + z * z))


class StableCDF:
    """Symmetric alpha-stable CDF with char. fn exp(-|scale t|^alpha).

    Tabulated once with scipy and linearly interpolated; outside the table
    the Pareto tail asymptote is used.
    """

    def __init__(self, alpha, scale=1.0, span=60.0, points=1201):
        self.alpha = float(alpha)
        self.scale = float(scale)
        if self.alpha == 1.0:
            self._exact = CauchyCDF(self.scale)
            return
        self._exact = None
        law = stats.levy_stable(self.alpha, 0.0, scale=self.scale)
        t = np.sinh(np.linspace(-math.asinh(span), math.asinh(span), points)) * self.scale
        self._grid = t
        self._cdf = np.asarray(law.cdf(t), dtype=float)
        self._pdf = np.asarray(law.pdf(t), dtype=float)
        # P(X > x) ~ C x^-alpha with C = Gamma(alpha) sin(pi alpha/2)/pi * scale^alpha
        self._tail_c = (math.gamma(self.alpha) * math.sin(math.pi * self.alpha / 2)
                        / math.pi * self.scale ** self.alpha)

    def __call__(self, x):
        if self._exact is not None:
            return self._exact(x)
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self._grid, self._cdf)
        lo, hi = self._grid[0], self._grid[-1]
        with np.errstate(divide="ignore"):
            tail = self._tail_c * np.abs(x) ** -self.alpha
        out = np.where(x > hi, 1.0 - tail, out)
        return np.where(x < lo, tail, out)

    def pdf(self, x):
        if self._exact is not None:
            return self._exact.pdf(x)
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            tail = self.alpha * self._tail_c * np.abs(x) ** (-1 - self.alpha)
        inside = np.interp(x, self._grid, self._pdf)
        return np.where((x < self._grid[0]) | (x > self._grid[-1]), tail, inside)
