"""JSON model configuration: validation, presets and canonical serialization."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .deviation import RateModel, rate_model_for
from .distribution import prabhakar_spec
from .errors import ConfigError
from .family import FamilyModelSpec

__all__ = [
    "PRESETS",
    "SCHEMA",
    "ModelConfig",
    "load_config",
    "load_preset",
    "parse_config",
]

PRESETS = ("p1", "p2", "p3", "poisson")

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_UNIT = {"type": "number", "exclusiveMinimum": 0, "maximum": 1}

SCHEMA: dict[str, Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "ldps model configuration",
    "type": "object",
    "additionalProperties": False,
    "required": ["model"],
    "properties": {
        "model": {"enum": ["P1", "P2", "P3", "poisson", "custom"]},
        "lambda": _POS,
        "alpha": _UNIT,
        "beta": _POS,
        "gamma": _POS,
        "a_tilde": _UNIT,
        "n": {"type": "integer", "minimum": 0},
        "prefix": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["alpha", "a_tilde"],
                "properties": {"alpha": _UNIT, "a_tilde": _UNIT, "beta": _POS, "gamma": _POS},
            },
        },
        "theta_grid": {"type": "array", "items": _NUM, "minItems": 1},
        "t_grid": {"type": "array", "items": _POS, "minItems": 1},
        "x_grid": {"type": "array", "items": _POS, "minItems": 1},
        "rho_list": {
            "type": "array",
            "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "minItems": 1,
        },
        "h": _POS,
        "n_samples": {"type": "integer", "minimum": 1},
        "n_streams": {"type": "integer", "minimum": 1},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"rel_tol": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
    },
}

_DEFAULT_THETA = tuple(round(-3.0 + 0.1 * i, 10) for i in range(61))
_DEFAULT_T = (10.0, 100.0, 1000.0, 10000.0)
_DEFAULT_RHO = (0.25, 0.5, 0.75)


@dataclass(frozen=True)
class PrefixEntry:
    alpha: float
    a_tilde: float
    beta: float = 1.0
    gamma: float = 1.0


@dataclass(frozen=True)
class ModelConfig:
    model: str
    lam: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    a_tilde: float = 1.0
    prefix: tuple[PrefixEntry, ...] = ()
    theta_grid: tuple[float, ...] = _DEFAULT_THETA
    t_grid: tuple[float, ...] = _DEFAULT_T
    x_grid: tuple[float, ...] = ()
    rho_list: tuple[float, ...] = _DEFAULT_RHO
    h: float = 0.01
    n_samples: int = 100_000
    n_streams: int = 1
    rel_tol: float = 1e-14
    seed: int = 0
    _family: FamilyModelSpec | None = field(default=None, compare=False, repr=False)

    @property
    def n(self) -> int:
        return len(self.prefix)

    def family(self) -> FamilyModelSpec:
        if self._family is None:
            object.__setattr__(self, "_family", self._build_family())
        return self._family  # type: ignore[return-value]

    def _build_family(self) -> FamilyModelSpec:
        try:
            prefix = tuple(
                prabhakar_spec(p.alpha, p.beta, p.gamma, self.lam, p.a_tilde) for p in self.prefix
            )
            tail = prabhakar_spec(self.alpha, self.beta, self.gamma, self.lam, self.a_tilde)
        except ConfigError as exc:
            raise ConfigError(f"invalid model parameters: {exc}") from exc
        return FamilyModelSpec(prefix, tail)

    def rate_model(self) -> RateModel:
        return rate_model_for(self.family())

    def effective_x_grid(self) -> tuple[float, ...]:
        if self.x_grid:
            return self.x_grid
        d1 = self.rate_model().d1
        return (1.5 * d1, 2.0 * d1)

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "lambda": self.lam,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "a_tilde": self.a_tilde,
            "n": self.n,
            "prefix": [
                {"alpha": p.alpha, "a_tilde": p.a_tilde, "beta": p.beta, "gamma": p.gamma}
                for p in self.prefix
            ],
            "theta_grid": list(self.theta_grid),
            "t_grid": list(self.t_grid),
            "x_grid": list(self.effective_x_grid()),
            "rho_list": list(self.rho_list),
            "h": self.h,
            "n_samples": self.n_samples,
            "n_streams": self.n_streams,
            "tolerances": {"rel_tol": self.rel_tol},
            "seed": self.seed,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def with_overrides(self, **kw: Any) -> ModelConfig:
        kw = {k: v for k, v in kw.items() if v is not None}
        if not kw:
            return self
        merged = self.to_dict()
        merged.update({("lambda" if k == "lam" else k): v for k, v in kw.items()})
        return parse_config(merged)


def _field_path(err: jsonschema.ValidationError) -> str:
    path = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
    return path.lstrip(".") or "<root>"


def _floats(xs: Any) -> tuple[float, ...]:
    return tuple(float(x) for x in xs)


def parse_config(data: str | dict[str, Any]) -> ModelConfig:
    """Validate a config (JSON text or decoded mapping) and build a :class:`ModelConfig`."""
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(f"field {_field_path(e)}: {e.message}")
    d = dict(data)
    model = d["model"]
    prefix = tuple(
        PrefixEntry(float(p["alpha"]), float(p["a_tilde"]), float(p.get("beta", 1.0)), float(p.get("gamma", 1.0)))
        for p in d.get("prefix", [])
    )
    defaults = _MODEL_DEFAULTS[model]
    if model in ("P1", "poisson") and prefix:
        raise ConfigError(f"field prefix: model {model} has no prefix laws")
    if model in ("P2", "P3") and any(p.beta != 1.0 or p.gamma != 1.0 for p in prefix):
        raise ConfigError(f"field prefix: model {model} uses beta = gamma = 1")
    if not prefix and "prefix" not in d:
        prefix = defaults.get("prefix", ())
    if model == "P3" and len(prefix) != 1:
        raise ConfigError("field prefix: model P3 needs exactly one prefix entry")
    if "n" in d and d["n"] != len(prefix):
        raise ConfigError(f"field n: n = {d['n']} but prefix has {len(prefix)} entries")

    def num(key: str) -> float:
        return float(d.get(key, defaults.get(key, 1.0)))

    fixed = defaults.get("fixed", ())
    for key in fixed:
        if key in d and float(d[key]) != defaults[key]:
            raise ConfigError(f"field {key}: model {model} fixes {key} = {defaults[key]}")
    if "tolerances" in d:
        rel_tol = float(d["tolerances"].get("rel_tol", 1e-14))
    else:
        rel_tol = 1e-14
    cfg = ModelConfig(
        model=model,
        lam=num("lambda"),
        alpha=num("alpha"),
        beta=num("beta"),
        gamma=num("gamma"),
        a_tilde=num("a_tilde"),
        prefix=prefix,
        theta_grid=_floats(d.get("theta_grid", _DEFAULT_THETA)),
        t_grid=_floats(d.get("t_grid", _DEFAULT_T)),
        x_grid=_floats(d.get("x_grid", ())),
        rho_list=_floats(d.get("rho_list", _DEFAULT_RHO)),
        h=float(d.get("h", 0.01)),
        n_samples=int(d.get("n_samples", 100_000)),
        n_streams=int(d.get("n_streams", 1)),
        rel_tol=rel_tol,
        seed=int(d.get("seed", 0)),
    )
    if any(b <= a for a, b in zip(cfg.t_grid, cfg.t_grid[1:])):
        raise ConfigError("field t_grid: must be strictly increasing")
    if any(not math.isfinite(x) for x in cfg.theta_grid):
        raise ConfigError("field theta_grid: values must be finite")
    cfg.family()  # surface parameter errors at parse time
    return cfg


_MODEL_DEFAULTS: dict[str, dict[str, Any]] = {
    "P1": {"alpha": 0.5, "beta": 1.0, "gamma": 2.0, "lambda": 1.0, "a_tilde": 0.5},
    "P2": {
        "alpha": 0.5,
        "beta": 1.0,
        "gamma": 1.0,
        "lambda": 1.0,
        "a_tilde": 0.15,
        "prefix": (PrefixEntry(0.5, 0.5),),
        "fixed": ("beta", "gamma"),
    },
    "P3": {
        "alpha": 1.0,
        "beta": 1.0,
        "gamma": 1.0,
        "lambda": 1.0,
        "a_tilde": 1.0,
        "prefix": (PrefixEntry(1.0, 0.5),),
        "fixed": ("beta", "gamma"),
    },
    "poisson": {
        "alpha": 1.0,
        "beta": 1.0,
        "gamma": 1.0,
        "lambda": 1.0,
        "a_tilde": 1.0,
        "fixed": ("alpha", "beta", "gamma", "a_tilde"),
    },
    "custom": {},
}


def load_config(path: str | Path) -> ModelConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from exc
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{p}: {exc}") from exc


def load_preset(name: str) -> ModelConfig:
    """Bundled preset ``p1``, ``p2``, ``p3`` or ``poisson``."""
    key = name.lower().removesuffix(".json")
    if key not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = resources.files("ldps").joinpath("data", f"{key}.json").read_text(encoding="utf-8")
    return parse_config(text)


def resolve_config(ref: str) -> ModelConfig:
    """A file path, or a bundled preset name when no such file exists."""
    if Path(ref).is_file():
        return load_config(ref)
    stem = Path(ref).name.lower().removesuffix(".json")
    if stem in PRESETS:
        return load_preset(stem)
    raise ConfigError(f"config {ref!r} not found")
