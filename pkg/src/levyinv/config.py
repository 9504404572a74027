"""Experiment configuration: a versioned JSON document with a strict schema.

Unknown keys anywhere in the document are errors, so a misspelt exponent
cannot silently fall back to a default.
"""

import copy
import json
from dataclasses import dataclass, field

import jsonschema

from .errors import ConfigError

SCHEMA_VERSION = 1

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


_rule = _obj({"exponent": _num, "constant": _pos}, ["exponent"])
_u_rule = _obj({"exponent_of_gamma": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "constant": _pos}, ["exponent_of_gamma"])

_levy = {
    "oneOf": [
        _obj({"family": {"const": "cauchy_unit"}, "c": _pos}, ["family"]),
        _obj({"family": {"const": "symmetric_stable_like"},
              "r": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 2},
              "phi": _pos}, ["family", "r"]),
        _obj({"family": {"const": "beta_over_ysq"}}, ["family"]),
        _obj({"family": {"const": "finite_activity"}, "rate": _pos,
              "atoms": {"type": "array", "minItems": 1,
                        "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}}},
             ["family", "rate", "atoms"]),
    ]
}

_pair = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}

_model = {
    "oneOf": [
        _obj({"name": {"const": "cauchy_ou"}, "params": _obj({"c": _pos})}, ["name"]),
        _obj({"name": {"const": "stable_ou"},
              "params": _obj({"alpha": {"type": "number", "exclusiveMinimum": 0,
                                        "exclusiveMaximum": 2},
                              "c": _pos})}, ["name"]),
        _obj({"name": {"const": "radial_stable"},
              "params": _obj({"rho": _num, "r": {"type": "number", "exclusiveMinimum": 0,
                                                 "exclusiveMaximum": 2},
                              "eps": _num, "psi": _pos})}, ["name"]),
        _obj({"name": {"const": "efc_dust"}, "params": _obj({})}, ["name"]),
        _obj({"name": {"const": "affine"},
              "params": _obj({"b": _pair, "sigma": _pair, "kappa": _pair, "levy": _levy,
                              "compensated": {"type": "boolean"}}, ["b"])}, ["name", "params"]),
    ]
}

_functional = {
    "oneOf": [
        _obj({"name": {"type": "string"}, "kind": {"const": "identity"}}, ["name", "kind"]),
        _obj({"name": {"type": "string"}, "kind": {"const": "abs_pow"}, "r": _pos},
             ["name", "kind", "r"]),
        _obj({"name": {"type": "string"}, "kind": {"const": "indicator"}, "lo": _num, "hi": _num},
             ["name", "kind", "lo", "hi"]),
    ]
}

SCHEMA = _obj({
    "schema_version": {"const": SCHEMA_VERSION},
    "name": {"type": "string"},
    "model": _model,
    "scheme": {"enum": ["A", "B", "C"]},
    "schedule": _obj({"gamma": _rule, "eta": _rule, "u": _u_rule}),
    "N": {"type": "integer", "minimum": 1},
    "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
    "x0": {"oneOf": [_num, {"type": "array", "items": _num, "minItems": 1}]},
    "u_law": {"enum": ["gaussian", "rademacher"]},
    "functionals": {"type": "array", "items": _functional},
    "kde": _obj({"grid": {"type": "array", "items": _num, "minItems": 3, "maxItems": 3},
                 "bandwidth": {"oneOf": [{"const": "auto"}, _pos]}}),
    "reference": {"oneOf": [
        {"type": "null"},
        _obj({"law": {"const": "cauchy"}, "scale": _pos}, ["law"]),
        _obj({"law": {"const": "stable"}, "alpha": {"type": "number", "exclusiveMinimum": 0,
                                                    "exclusiveMaximum": 2},
              "scale": _pos}, ["law", "alpha"]),
    ]},
    "probes": _obj({
        "generator_residual": {"oneOf": [{"type": "null"},
                                         _obj({"center": _num, "radius": _pos,
                                               "eps0": _pos})]},
        "lyapunov": {"oneOf": [{"type": "null"}, _obj({"a": _pos, "p": _pos, "q": _num})]},
        "mean_reversion": {"oneOf": [{"type": "null"}, _obj({"a": _pos, "p": _pos, "q": _num})]},
    }),
    "theory": {"oneOf": [{"type": "null"}, _obj({"a": _pos, "p": _pos, "s": _num}, ["a", "p", "s"])]},
    "jump_budget": _pos,
    "allow_nonvanishing_c": {"type": "boolean"},
    "store_cap": {"type": "integer", "minimum": 2},
    "trajectory_every": {"oneOf": [{"type": "null"}, {"type": "integer", "minimum": 1}]},
    "output_dir": {"type": "string"},
}, ["schema_version", "model", "scheme", "N"])

DEFAULTS = {
    "name": "experiment",
    "schedule": {"gamma": {"exponent": 0.5, "constant": 1.0},
                 "eta": {"exponent": 0.5, "constant": 1.0},
                 "u": {"exponent_of_gamma": 0.5, "constant": 1.0}},
    "seeds": [1, 2, 3, 4, 5],
    "x0": 0.0,
    "u_law": "gaussian",
    "functionals": [],
    "kde": {"grid": [-6.0, 6.0, 601], "bandwidth": "auto"},
    "reference": None,
    "probes": {"generator_residual": None, "lyapunov": None, "mean_reversion": None},
    "theory": None,
    "jump_budget": 16.0,
    "allow_nonvanishing_c": False,
    "store_cap": 10 ** 7,
    "trajectory_every": None,
    "output_dir": "",
}


def _fill(doc, defaults):
    out = copy.deepcopy(defaults)
    for k, v in doc.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _fill(v, out[k])
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate_document(doc):
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as err:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {err.message}") from None


@dataclass
class ExperimentConfig:
    """Validated experiment description.

    ``doc`` is the full JSON document with defaults filled in.  A
    programmatic ``sde`` (an :class:`~levyinv.euler.SdeSpec`) may replace the
    model named in ``doc``; such configs run serially and cannot be emitted.
    """

    doc: dict
    sde: object = field(default=None, compare=False)

    @classmethod
    def from_dict(cls, doc, sde=None):
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        validate_document(doc)
        full = _fill(doc, DEFAULTS)
        validate_document(full)
        cfg = cls(full, sde)
        cfg.check()
        return cfg

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as err:
                raise ConfigError(f"{path}: not valid JSON ({err})") from None
        return cls.from_dict(doc)

    def check(self):
        g = self.doc["schedule"]["gamma"]["exponent"]
        if not g > 0:
            raise ConfigError("schedule.gamma.exponent must be > 0 (decreasing steps)")
        lo, hi, count = self.doc["kde"]["grid"]
        if not (lo < hi and count >= 2):
            raise ConfigError("kde.grid must be [lo, hi, count] with lo < hi, count >= 2")
        names = [f["name"] for f in self.doc["functionals"]]
        if len(set(names)) != len(names) or {"one", "Af", "lyapunov"} & set(names):
            raise ConfigError("functional names must be unique and not reserved (one, Af, lyapunov)")

    def replace(self, **changes):
        doc = copy.deepcopy(self.doc)
        for k, v in changes.items():
            doc[k] = v
        return ExperimentConfig.from_dict(doc, self.sde)

    def to_dict(self):
        return copy.deepcopy(self.doc)

    def dumps(self):
        return json.dumps(self.doc, indent=2, sort_keys=True)

    def save(self, path):
        if self.sde is not None:
            raise ConfigError("a config with a programmatic SdeSpec cannot be serialized")
        with open(path, "w") as fh:
            fh.write(self.dumps() + "\n")

    # shortcuts
    @property
    def scheme(self):
        return self.doc["scheme"]

    @property
    def N(self):
        return self.doc["N"]

    @property
    def seeds(self):
        return list(self.doc["seeds"])

    @property
    def name(self):
        return self.doc["name"]
