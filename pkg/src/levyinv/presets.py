"""Model builders and the named experiment presets.

Coefficients are small picklable classes so that configs can be rebuilt
inside worker processes.
"""

import copy
import math

from . import levy as lv
from .config import DEFAULTS, SCHEMA_VERSION, ExperimentConfig
from .empirical import AbsPow, CauchyCDF, Identity, Indicator, StableCDF
from .errors import ConfigError
from .euler import SdeSpec
from .schedules import PolynomialRule, PowerOfGamma, StepSchedule


class Affine:
    """x -> c0 + c1 x."""

    def __init__(self, c0, c1=0.0):
        self.c0, self.c1 = float(c0), float(c1)

    def __call__(self, x):
        return self.c0 + self.c1 * x


class RadialDrift:
    """x -> -psi x (1 + x^2)^{-rho/2}."""

    def __init__(self, rho, psi=1.0):
        self.rho, self.psi = float(rho), float(psi)

    def __call__(self, x):
        return -self.psi * x * (1.0 + x * x) ** (-self.rho / 2)


class PowerGrowth:
    """x -> (1 + x^2)^{eps/2}."""

    def __init__(self, eps):
        self.eps = float(eps)

    def __call__(self, x):
        return (1.0 + x * x) ** (self.eps / 2)


def build_levy(spec):
    fam = spec["family"]
    if fam == "cauchy_unit":
        return lv.CauchyUnit(spec.get("c", 1.0))
    if fam == "symmetric_stable_like":
        return lv.SymmetricStableLike(spec["r"], spec.get("phi", 1.0))
    if fam == "beta_over_ysq":
        return lv.BetaOverYSq()
    if fam == "finite_activity":
        return lv.FiniteActivity(spec["rate"], [tuple(a) for a in spec["atoms"]])
    raise ConfigError(f"unknown Lévy family {fam!r}")


def _default_params(name):
    return {"cauchy_ou": {"c": 1.0 / math.pi},
            "stable_ou": {"alpha": 1.0, "c": 1.0},
            "radial_stable": {"rho": 0.0, "r": 1.5, "eps": 0.0, "psi": 1.0},
            "efc_dust": {}}.get(name, {})


def build_sde(doc, u_law="gaussian"):
    model = doc["model"] if "model" in doc else doc
    name = model["name"]
    params = {**_default_params(name), **model.get("params", {})}
    if name == "cauchy_ou":
        return SdeSpec(b=Affine(0.0, -1.0), kappa=Affine(1.0),
                       levy=lv.CauchyUnit(params["c"]), u_law=u_law, name=name)
    if name == "stable_ou":
        a, c = params["alpha"], params["c"]
        return SdeSpec(b=Affine(0.0, -1.0 / a), kappa=Affine(1.0),
                       levy=lv.SymmetricStableLike(a, lv.stable_density_constant(a, c)),
                       u_law=u_law, name=name)
    if name == "radial_stable":
        return SdeSpec(b=RadialDrift(params["rho"], params["psi"]),
                       kappa=PowerGrowth(params["eps"]),
                       levy=lv.SymmetricStableLike(params["r"]), u_law=u_law, name=name)
    if name == "efc_dust":
        return SdeSpec(b=Affine(1.0, -1.0), kappa=Affine(0.0, -1.0), levy=lv.BetaOverYSq(),
                       compensated=False, u_law=u_law, name=name)
    if name == "affine":
        levy = build_levy(params["levy"]) if "levy" in params else None
        sig = Affine(*params["sigma"]) if "sigma" in params else None
        kap = Affine(*params["kappa"]) if "kappa" in params else None
        return SdeSpec(b=Affine(*params["b"]), sigma=sig, kappa=kap, levy=levy,
                       compensated=params.get("compensated", True), u_law=u_law, name=name)
    raise ConfigError(f"unknown model {name!r}")


def build_schedule(doc):
    s = doc["schedule"]
    g, e, u = s["gamma"], s["eta"], s["u"]
    return StepSchedule(PolynomialRule(g["exponent"], g.get("constant", 1.0)),
                        PolynomialRule(e["exponent"], e.get("constant", 1.0)),
                        PowerOfGamma(u["exponent_of_gamma"], u.get("constant", 1.0)))


def build_functionals(doc):
    out = {}
    for f in doc["functionals"]:
        kind = f["kind"]
        if kind == "identity":
            out[f["name"]] = Identity()
        elif kind == "abs_pow":
            out[f["name"]] = AbsPow(f["r"])
        elif kind == "indicator":
            out[f["name"]] = Indicator(f["lo"], f["hi"])
    return out


def build_reference(doc):
    ref = doc.get("reference")
    if ref is None:
        return None
    if ref["law"] == "cauchy":
        return CauchyCDF(ref.get("scale", 1.0))
    return StableCDF(ref["alpha"], ref.get("scale", 1.0))


# ---------------------------------------------------------------------------
PRESETS = ("cauchy_ou", "stable_ou", "radial_stable", "efc_dust", "theta_sweep")


def _base(name, model, **extra):
    doc = copy.deepcopy(DEFAULTS)
    doc.update({"schema_version": SCHEMA_VERSION, "name": name, "model": model,
                "scheme": "A", "N": 50000})
    for k, v in extra.items():
        doc[k] = v
    return doc


def _schedule(r, theta=0.5):
    return {"gamma": {"exponent": r, "constant": 1.0},
            "eta": {"exponent": r, "constant": 1.0},
            "u": {"exponent_of_gamma": theta, "constant": 1.0}}


def _cauchy_probes():
    return {"generator_residual": {"center": 0.0, "radius": 1.0, "eps0": 1e-3},
            "lyapunov": {"a": 1.0, "p": 0.4, "q": 1.0},
            "mean_reversion": {"a": 1.0, "p": 0.4, "q": 1.0}}


def preset_doc(name, **params):
    if name == "cauchy_ou":
        scheme = params.pop("scheme", "A")
        _no_extra(name, params)
        return _base(name, {"name": "cauchy_ou", "params": {"c": 1.0 / math.pi}},
                     scheme=scheme, schedule=_schedule(0.5, 0.5),
                     functionals=[{"name": "abs04", "kind": "abs_pow", "r": 0.4}],
                     reference={"law": "cauchy", "scale": 1.0},
                     probes=_cauchy_probes(),
                     theory={"a": 1.0, "p": 0.4, "s": 2.0},
                     output_dir="cauchy_ou")
    if name == "stable_ou":
        alpha = float(params.pop("alpha", 1.0))
        c = float(params.pop("c", 1.0))
        _no_extra(name, params)
        p = alpha / 4
        ref = ({"law": "cauchy", "scale": c} if alpha == 1.0
               else {"law": "stable", "alpha": alpha, "scale": c})
        return _base(name, {"name": "stable_ou", "params": {"alpha": alpha, "c": c}},
                     schedule=_schedule(0.5, 0.5),
                     functionals=[{"name": "abs04", "kind": "abs_pow", "r": min(0.4, alpha / 2)}],
                     reference=ref,
                     probes={"generator_residual": None,
                             "lyapunov": {"a": 1.0, "p": p, "q": 1.0},
                             "mean_reversion": {"a": 1.0, "p": p, "q": 1.0}},
                     theory={"a": 1.0, "p": p, "s": 2.0},
                     output_dir=f"stable_ou_{alpha:g}_{c:g}")
    if name == "radial_stable":
        rho = float(params.pop("rho", 0.0))
        r = float(params.pop("r", 1.5))
        eps = float(params.pop("eps", 0.0))
        _no_extra(name, params)
        a = 1.0 - rho / 2
        p = r / 4
        q = min(1.0, (r / 2 + 1) / 2)
        return _base(name, {"name": "radial_stable",
                            "params": {"rho": rho, "r": r, "eps": eps, "psi": 1.0}},
                     scheme="B", schedule=_schedule(0.5, 0.5),
                     functionals=[{"name": "identity", "kind": "identity"}],
                     kde={"grid": [-10.0, 10.0, 801], "bandwidth": "auto"},
                     probes={"generator_residual": None,
                             "lyapunov": {"a": a, "p": p, "q": q},
                             "mean_reversion": {"a": a, "p": p, "q": q}},
                     output_dir=f"radial_stable_{rho:g}_{r:g}_{eps:g}")
    if name == "efc_dust":
        _no_extra(name, params)
        return _base(name, {"name": "efc_dust", "params": {}}, scheme="B", N=10 ** 6,
                     x0=0.5, schedule=_schedule(0.5, 0.5),
                     functionals=[{"name": "identity", "kind": "identity"}],
                     kde={"grid": [-1.0, 2.0, 601], "bandwidth": "auto"},
                     probes={"generator_residual": None, "lyapunov": None,
                             "mean_reversion": {"a": 1.0, "p": 1.0, "q": 0.5}},
                     output_dir="efc_dust")
    if name == "theta_sweep":
        theta = float(params.pop("theta", 0.3))
        scheme = params.pop("scheme", "A")
        _no_extra(name, params)
        if scheme not in ("A", "B", "C"):
            raise ConfigError(f"unknown scheme {scheme!r}")
        # u_n = gamma_n for Scheme B, sqrt(gamma_n) for Scheme C
        u_exp = 1.0 if scheme == "B" else 0.5
        return _base(name, {"name": "cauchy_ou", "params": {"c": 1.0 / math.pi}},
                     scheme=scheme, N=200000, schedule=_schedule(theta, u_exp),
                     functionals=[{"name": "abs04", "kind": "abs_pow", "r": 0.4}],
                     reference={"law": "cauchy", "scale": 1.0},
                     theory={"a": 1.0, "p": 0.4, "s": 2.0},
                     output_dir=f"theta_sweep_{scheme}_{theta:g}")
    raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


def _no_extra(name, params):
    if params:
        raise ConfigError(f"preset {name!r} got unknown parameters: {', '.join(sorted(params))}")


def preset(name, **params):
    """Fully populated :class:`ExperimentConfig` for a named setting."""
    return ExperimentConfig.from_dict(preset_doc(name, **params))


def theta_sweep(thetas=(0.1, 0.3, 0.7), schemes=("A", "B", "C")):
    return [preset("theta_sweep", theta=t, scheme=s) for s in schemes for t in thetas]
