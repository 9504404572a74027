"""Step, weight and truncation sequences and their admissibility checks.

A :class:`StepSchedule` bundles three lazily evaluated rules: steps
``gamma_n``, weights ``eta_n`` and truncation thresholds ``u_n``.  Polynomial
rules get exact (exponent-level) verdicts; custom rules get numeric probes.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditionError, ScheduleError

PASS = "pass"
FAIL = "fail"
NA = "not-applicable"

U_MAX = 1.0 - 1e-12
DEFAULT_BUDGET = 16.0


class PolynomialRule:
    """value(n) = constant * n^(-exponent)."""

    def __init__(self, exponent, constant=1.0):
        if not constant > 0:
            raise ScheduleError("rule constant must be positive")
        self.exponent = float(exponent)
        self.constant = float(constant)

    def __call__(self, n):
        return self.constant * n ** -self.exponent

    def describe(self):
        return {"kind": "polynomial", "constant": self.constant, "exponent": self.exponent}


class CallableRule:
    """Arbitrary positive sequence n -> value (numeric admissibility only)."""

    def __init__(self, fn, name="custom"):
        self.fn = fn
        self.name = name

    def __call__(self, n):
        return float(self.fn(n))

    def describe(self):
        return {"kind": "callable", "name": self.name}


class PowerOfGamma:
    """u_n = constant * gamma_n^theta, clamped to (0, 1 - 1e-12]."""

    def __init__(self, theta, constant=1.0):
        if not 0 < theta <= 1:
            raise ScheduleError(f"u exponent of gamma must lie in (0, 1], got {theta!r}")
        if not constant > 0:
            raise ScheduleError("threshold constant must be positive")
        self.theta = float(theta)
        self.constant = float(constant)

    def __call__(self, n, gamma):
        return min(self.constant * gamma ** self.theta, U_MAX)

    def describe(self):
        return {"kind": "power_of_gamma", "constant": self.constant,
                "exponent_of_gamma": self.theta}


class CallableThreshold:
    def __init__(self, fn, name="custom"):
        self.fn = fn
        self.name = name

    def __call__(self, n, gamma):
        return min(float(self.fn(n)), U_MAX)

    def describe(self):
        return {"kind": "callable", "name": self.name}


class _Neumaier:
    __slots__ = ("s", "c")

    def __init__(self):
        self.s = 0.0
        self.c = 0.0

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


class StepSchedule:
    """(gamma_n, eta_n, u_n) with running sums Gamma_n and H_n.

    Defaults: gamma_n = eta_n = n^{-1/2}, u_n = sqrt(gamma_n).
    """

    def __init__(self, gamma=None, eta=None, u=None):
        self.gamma = gamma if gamma is not None else PolynomialRule(0.5)
        self.eta = eta if eta is not None else PolynomialRule(0.5)
        self.u = u if u is not None else PowerOfGamma(0.5)
        self._validate()
        self.reset()

    @classmethod
    def polynomial(cls, gamma_exponent=0.5, eta_exponent=None, u_exponent=0.5,
                   gamma_constant=1.0, eta_constant=1.0, u_constant=1.0):
        if eta_exponent is None:
            eta_exponent = gamma_exponent
        return cls(PolynomialRule(gamma_exponent, gamma_constant),
                   PolynomialRule(eta_exponent, eta_constant),
                   PowerOfGamma(u_exponent, u_constant))

    def _validate(self):
        if isinstance(self.gamma, PolynomialRule):
            if self.gamma.exponent <= 0:
                raise ScheduleError(
                    "step sequence must decrease to 0 (polynomial exponent must be > 0)")
        else:
            probe = [self.gamma(n) for n in (1, 2, 10, 100, 1000)]
            if not all(a > b > 0 for a, b in zip(probe, probe[1:])):
                raise ScheduleError("step sequence is not positive and decreasing at the probe points")
        if isinstance(self.eta, PolynomialRule) and self.eta.exponent < 0:
            raise ScheduleError("weights must not grow")

    def reset(self):
        self.n = 0
        self._Gamma = _Neumaier()
        self._H = _Neumaier()
        self.Gamma = 0.0
        self.H = 0.0

    def clone(self):
        """Fresh copy at n = 0 sharing the (immutable) rules."""
        return StepSchedule(self.gamma, self.eta, self.u)

    def gamma_at(self, n):
        return self.gamma(n)

    def eta_at(self, n):
        return self.eta(n)

    def u_at(self, n):
        return self.u(n, self.gamma(n))

    def advance(self):
        """Move to n + 1; returns (gamma, eta, u, H, Gamma) at the new index."""
        n = self.n + 1
        self.n = n
        g = self.gamma(n)
        e = self.eta(n)
        u = self.u(n, g)
        self.Gamma = self._Gamma.add(g)
        self.H = self._H.add(e)
        return g, e, u, self.H, self.Gamma

    @property
    def is_polynomial(self):
        return isinstance(self.gamma, PolynomialRule) and isinstance(self.eta, PolynomialRule)

    def describe(self):
        return {"gamma": self.gamma.describe(), "eta": self.eta.describe(),
                "u": self.u.describe()}


# ---------------------------------------------------------------------------
def f_ap(a, p, s):
    """Exponent function f_{a,p}(s) governing which polynomial steps give tightness."""
    if not p + a - 1 > 0:
        raise ConditionError(f"f_ap is defined only for p + a - 1 > 0 (got a={a!r}, p={p!r})")
    if s >= 2 * p or a == 1:
        # a = 1 reduces the second branch to p / (p / s) = s; skip the rounding
        return float(s)
    denom = p / s + (a - 1) / (2 * min(p, 1.0))
    return min((p + a - 1) / denom, float(s))


def r_bar(a, p, s):
    """Upper bound 2 (1 - 1/f_{a,p}(s)) on the step exponent."""
    return 2.0 * (1.0 - 1.0 / f_ap(a, p, s))


def cond1_holds(a, p, s):
    """Lower bound on s needed when p > 1/2 (always true for p <= 1/2)."""
    if p <= 0.5:
        return True
    if p <= 1:
        return s > 2 * p / (2 * p + (a - 1) * (2 * p - 1) / p)
    return s > 2 * p / (2 * p + a - 1)


_EPS = 1e-12


def check_polynomial(a, p, s, r1, r2):
    """Verdicts for gamma_n = C n^-r1, eta_n = C n^-r2 at parameters (a, p, s)."""
    out = {"eta_over_gamma": PASS if r2 >= r1 else FAIL,
           "cond1": PASS if cond1_holds(a, p, s) else FAIL}
    if p <= 0.5:
        out["cond1"] = NA
    try:
        f = f_ap(a, p, s)
    except ConditionError:
        out.update(f=None, r_bar=None, hop_cond2=FAIL, note="p + a - 1 <= 0")
        return out
    rb = 2.0 * (1.0 - 1.0 / f)
    ok = r1 <= r2 and r1 > 0 and (
        (r2 < 1 and r1 < rb - _EPS) or (abs(r2 - 1) <= _EPS and r1 <= rb + _EPS))
    out.update(f=f, r_bar=rb, hop_cond2=PASS if ok else FAIL)
    return out


def _probe_indices(horizon):
    return sorted({1, max(1, horizon // 10), max(1, horizon)})


def lambda_gamma(levy, schedule, n):
    """Expected number of jumps above u_n during a step of length gamma_n."""
    g = schedule.gamma_at(n)
    return levy.tail_mass(schedule.u_at(n)) * g


def check_scheme_c(levy, schedule, horizon):
    """Does pi(|y| > u_n) gamma_n vanish? Returns (verdict, trace)."""
    probes = _probe_indices(horizon)
    values = [lambda_gamma(levy, schedule, n) for n in probes]
    trace = {"n": probes, "lambda_gamma": values}
    beta = levy.activity_index
    if (isinstance(schedule.gamma, PolynomialRule) and isinstance(schedule.u, PowerOfGamma)
            and beta is not None):
        exponent = -schedule.gamma.exponent * (1.0 - schedule.u.theta * beta)
        trace["mode"] = "symbolic"
        trace["n_exponent"] = exponent
        return (PASS if exponent < -_EPS else FAIL), trace
    trace["mode"] = "numeric"
    decreasing = all(x > y for x, y in zip(values, values[1:]))
    ok = decreasing and values[-1] < 0.1 * values[0]
    return (PASS if ok else FAIL), trace


def sup_lambda_gamma(levy, schedule, horizon, points=40):
    ns = np.unique(np.geomspace(1, max(horizon, 1), points).astype(int))
    return max(lambda_gamma(levy, schedule, int(n)) for n in ns)


@dataclass
class AdmissibilityReport:
    basic: str = PASS
    eta_over_gamma: str = NA
    hop_cond2: str = NA
    scheme_c_vanishing: str = NA
    jump_budget: str = NA
    diagnostics: dict = field(default_factory=dict)

    VERDICTS = ("basic", "eta_over_gamma", "hop_cond2", "scheme_c_vanishing", "jump_budget")

    @property
    def blocking(self):
        return self.basic == FAIL

    @property
    def failures(self):
        return [k for k in self.VERDICTS if getattr(self, k) == FAIL]

    @property
    def all_pass(self):
        return not self.failures

    def to_dict(self):
        out = {k: getattr(self, k) for k in self.VERDICTS}
        out["diagnostics"] = self.diagnostics
        return out

    def lines(self):
        rows = [f"{k:<20} {getattr(self, k)}" for k in self.VERDICTS]
        for k, v in self.diagnostics.items():
            rows.append(f"  {k}: {v}")
        return rows

    def __str__(self):
        return "\n".join(self.lines())


def _rule_monotone(rule, horizon, decreasing=True):
    ns = np.unique(np.geomspace(1, max(horizon, 2), 60).astype(int))
    vals = [rule(int(n)) for n in ns]
    pairs = zip(vals, vals[1:])
    return all(b <= a for a, b in pairs) if decreasing else all(b >= a for a, b in pairs)


def admissibility(schedule, levy=None, scheme="A", horizon=10 ** 6, theory=None,
                  budget=DEFAULT_BUDGET):
    """Evaluate every schedule condition without simulating.

    ``theory`` is an optional mapping with keys ``a``, ``p`` and ``s``
    enabling the polynomial tightness condition.
    """
    rep = AdmissibilityReport()
    diag = rep.diagnostics
    g, e = schedule.gamma, schedule.eta

    basic_ok = True
    if isinstance(g, PolynomialRule):
        if not 0 < g.exponent <= 1:
            basic_ok = False
            diag["basic"] = "gamma exponent must lie in (0, 1] (decreasing, infinite sum)"
    elif not _rule_monotone(g, horizon):
        basic_ok = False
        diag["basic"] = "gamma not decreasing at probe points"
    if isinstance(e, PolynomialRule) and e.exponent > 1:
        basic_ok = False
        diag["basic"] = "eta exponent must be <= 1 so that H_n diverges"
    if scheme in ("B", "C"):
        if isinstance(schedule.u, CallableThreshold) and not _rule_monotone(
                lambda n: schedule.u_at(n), horizon):
            basic_ok = False
            diag["basic"] = "u_n not nonincreasing at probe points"
        u_last = schedule.u_at(max(horizon, 1))
        if not 0 < u_last < 1:
            basic_ok = False
            diag["basic"] = "u_n must lie in (0, 1)"
    rep.basic = PASS if basic_ok else FAIL

    if schedule.is_polynomial:
        r1, r2 = g.exponent, e.exponent
        rep.eta_over_gamma = PASS if r2 >= r1 else FAIL
        if theory is not None and all(k in theory for k in ("a", "p", "s")):
            frag = check_polynomial(theory["a"], theory["p"], theory["s"], r1, r2)
            rep.hop_cond2 = frag["hop_cond2"]
            diag["f_ap"] = frag["f"]
            diag["r_bar"] = frag["r_bar"]
            diag["cond1"] = frag["cond1"]
    else:
        ratio = lambda n: schedule.eta_at(n) / schedule.gamma_at(n)
        rep.eta_over_gamma = PASS if _rule_monotone(ratio, horizon) else FAIL

    if levy is not None and scheme == "C":
        verdict, trace = check_scheme_c(levy, schedule, horizon)
        rep.scheme_c_vanishing = verdict
        diag["scheme_c_trace"] = trace
    if levy is not None and scheme in ("B", "C"):
        sup = sup_lambda_gamma(levy, schedule, horizon)
        diag["sup_lambda_gamma"] = sup
        rep.jump_budget = PASS if sup <= budget else FAIL
    return rep
