"""Experiment configuration: a TOML tree validated against a strict schema.

Any scalar distribution parameter may be given as a list, which turns the
run into a family sweep over that parameter.  The second distribution may
be the string ``"same"`` to reuse the first for h.
"""
from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .distributions import Bump, Gaussian, Juttner, Mixture, PowerLaw, ZERO
from .norms import TheoremCase
from .scattering import NAMED, SIGMA0_CODES, ScatteringKernel


class ConfigError(ValueError):
    """Carries every violation found, each prefixed with its key path."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridConfig(_Strict):
    R: float = Field(6.0, gt=0)
    N: int = 16

    @field_validator("N")
    @classmethod
    def _even(cls, v):
        if v < 8 or v % 2:
            raise ValueError("N must be an even integer >= 8")
        return v


class SphereConfig(_Strict):
    n_polar: int = Field(16, ge=2)
    n_azimuth: int = Field(32, ge=4)


class KernelConfig(_Strict):
    name: str = ""
    a: Optional[float] = None
    sigma0: Literal["const", "halfcut", "cos2"] = "const"
    amplitude: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _resolve(self):
        if self.name and self.name not in NAMED and self.a is None:
            raise ValueError(f"unknown kernel name {self.name!r}; give 'a' or one of {sorted(NAMED)}")
        if self.a is None and self.name in NAMED:
            self.a = float(NAMED[self.name])
        if self.a is not None and not self.a > -3:
            raise ValueError("a must exceed -3")
        return self

    def build(self, a=None):
        a = self.a if a is None else a
        if a is None:
            raise ValueError("kernel exponent not set")
        return ScatteringKernel(float(a), self.sigma0, self.amplitude, self.name)


class CaseConfig(_Strict):
    theorem: Literal["T11", "T12_hard", "T12_soft"]
    a: Optional[float] = None
    m: float = 2.0
    n: float = 2.0
    epsilon: float = 0.5


Scalar = Union[float, list[float]]
Vector = Union[list[float], list[list[float]]]


class DistributionConfig(_Strict):
    kind: Literal["juttner", "gaussian", "bump", "powerlaw", "mixture", "zero"]
    weight: float = Field(1.0, ge=0)
    n: Optional[Scalar] = None
    T: Optional[Scalar] = None
    center: Optional[Vector] = None
    width: Optional[Scalar] = None
    amplitude: Optional[Scalar] = None
    radius: Optional[Scalar] = None
    steepness: Optional[Scalar] = None
    alpha: Optional[Scalar] = None
    mollifier: Optional[Scalar] = None
    components: Optional[list["DistributionConfig"]] = None

    def swept(self):
        """(name, values) of the parameter given as a list, or None."""
        hits = []
        for name in ("n", "T", "width", "amplitude", "radius", "steepness", "alpha", "mollifier"):
            v = getattr(self, name)
            if isinstance(v, list):
                hits.append((name, [float(x) for x in v]))
        if self.center is not None and self.center and isinstance(self.center[0], list):
            hits.append(("center", [tuple(float(c) for c in x) for x in self.center]))
        return hits


class ProbeConfig(_Strict):
    count: int = Field(8, ge=1, le=1000)
    placement: Literal["axis", "random"] = "axis"
    seed: int = Field(0, ge=0)


class OutputConfig(_Strict):
    directory: str = "relgain-out"
    formats: list[Literal["csv", "json"]] = ["csv"]


class SpectralConfig(_Strict):
    stride: int = Field(1, ge=1)
    kmax: Optional[float] = Field(None, gt=0)


class ConvergenceConfig(_Strict):
    quantity: Literal["gaussian_mass", "gradient_fd", "sphere_phase", "gain_probe"] = "gaussian_mass"
    levels: int = Field(3, ge=2, le=4)
    max_cost: float = Field(1e9, gt=0)


class EnvelopeConfig(_Strict):
    path: Optional[str] = None
    slack: float = Field(1.10, ge=1.0)


class ExperimentConfig(_Strict):
    grid: GridConfig = GridConfig()
    sphere: SphereConfig = SphereConfig()
    kernel: KernelConfig = KernelConfig(name="hard_ball")
    case: Union[CaseConfig, list[CaseConfig], None] = None
    distributions: list[Union[DistributionConfig, Literal["same"]]] = Field(
        default_factory=lambda: [DistributionConfig(kind="juttner"), "same"])
    probes: ProbeConfig = ProbeConfig()
    outputs: OutputConfig = OutputConfig()
    spectral: SpectralConfig = SpectralConfig()
    convergence: ConvergenceConfig = ConvergenceConfig()
    envelopes: EnvelopeConfig = EnvelopeConfig()

    @property
    def cases(self):
        if self.case is None:
            return []
        return self.case if isinstance(self.case, list) else [self.case]


def _fmt_loc(loc):
    parts = []
    for x in loc:
        if isinstance(x, int):
            parts.append(f"[{x}]")
        elif x in ("DistributionConfig", "list[float]", "float", "list[list[float]]", "CaseConfig",
                   "list[CaseConfig]", "literal['same']"):
            continue
        else:
            parts.append(("." if parts else "") + str(x))
    return "".join(parts) or "<root>"


# ---------------------------------------------------------------- building

_DEFAULTS = {
    "juttner": {"n": 1.0, "T": 1.0},
    "gaussian": {"center": (0.0, 0.0, 0.0), "width": 1.0, "amplitude": 1.0},
    "bump": {"center": (0.0, 0.0, 0.0), "radius": 1.0, "amplitude": 1.0, "steepness": 4.0},
    "powerlaw": {"center": (0.0, 0.0, 0.0), "alpha": 2.5, "mollifier": 0.1, "width": 1.0,
                 "amplitude": 1.0},
}
_BUILDERS = {"juttner": Juttner, "gaussian": Gaussian, "bump": Bump, "powerlaw": PowerLaw}


def _params(spec: DistributionConfig, override):
    out = dict(_DEFAULTS[spec.kind])
    for key in out:
        v = getattr(spec, key, None)
        if v is None:
            continue
        if key == "center":
            if not isinstance(v[0], list):
                out[key] = tuple(float(c) for c in v)
        elif not isinstance(v, list):
            out[key] = float(v)
    out.update(override)
    return out


def _unused_keys(spec: DistributionConfig):
    allowed = set(_DEFAULTS.get(spec.kind, {}))
    if spec.kind == "mixture":
        allowed = {"components"}
    given = {k for k in ("n", "T", "center", "width", "amplitude", "radius", "steepness", "alpha",
                         "mollifier", "components") if getattr(spec, k) is not None}
    return sorted(given - allowed)


def build_distribution(spec: DistributionConfig, override=None):
    override = override or {}
    if spec.kind == "zero":
        return ZERO
    if spec.kind == "mixture":
        parts = tuple((c.weight, build_distribution(c)) for c in spec.components or ())
        return Mixture(parts)
    return _BUILDERS[spec.kind](**_params(spec, override))


@dataclass
class FamilyMember:
    param: float
    f: object
    h: object


@dataclass
class Family:
    name: str
    members: list


def _family_param(value):
    if isinstance(value, tuple):
        return float(np.linalg.norm(value))
    return float(value)


def build_family(cfg: ExperimentConfig) -> Family:
    fspec = cfg.distributions[0]
    hspec = cfg.distributions[1] if len(cfg.distributions) > 1 else "same"
    sweep = fspec.swept()
    if sweep:
        key, values = sweep[0]
        name = f"{fspec.kind}_{key}"
    else:
        key, values = None, [None]
        name = fspec.kind
    hsweep = hspec.swept() if hspec != "same" else []
    members = []
    for i, v in enumerate(values):
        f = build_distribution(fspec, {key: v} if key else None)
        if hspec == "same":
            h = f
        else:
            hkey, hvals = hsweep[0] if hsweep else (None, None)
            h = build_distribution(hspec, {hkey: hvals[i]} if hsweep else None)
        members.append(FamilyMember(_family_param(v) if v is not None else float("nan"), f, h))
    return Family(name, members)


def theorem_cases(cfg: ExperimentConfig):
    out = []
    for c in cfg.cases:
        a = c.a if c.a is not None else cfg.kernel.a
        out.append(TheoremCase(c.theorem, float(a), c.m, c.n, c.epsilon))
    return out


# ---------------------------------------------------------------- validation

def _semantic_problems(cfg: ExperimentConfig):
    probs = []
    for i, c in enumerate(cfg.cases):
        prefix = f"case[{i}]" if len(cfg.cases) > 1 else "case"
        a = c.a if c.a is not None else cfg.kernel.a
        if a is None:
            probs.append(f"{prefix}.a: no exponent given and kernel.a is unset")
            continue
        if c.a is not None and cfg.kernel.a is not None and len(cfg.cases) == 1 \
                and c.a != cfg.kernel.a:
            probs.append(f"{prefix}.a,kernel.a: case exponent {c.a} differs from kernel exponent "
                         f"{cfg.kernel.a}")
        try:
            TheoremCase(c.theorem, float(a), c.m, c.n, c.epsilon)
        except ValueError as exc:
            for p in str(exc).split("; "):
                key, _, msg = p.partition(": ")
                probs.append(f"{key.replace('case', prefix)}: {msg}")
    if cfg.cases and cfg.kernel.sigma0 != "const":
        probs.append("kernel.sigma0: the gradient-norm path needs an isotropic kernel (const)")
    if not cfg.distributions:
        probs.append("distributions: at least one distribution is required")
    elif cfg.distributions[0] == "same":
        probs.append("distributions[0]: the first distribution cannot be 'same'")
    n_swept = 0
    for i, d in enumerate(cfg.distributions[:2]):
        if d == "same":
            continue
        probs.extend(_distribution_problems(d, f"distributions[{i}]"))
        sw = d.swept()
        if len(sw) > 1:
            probs.append(f"distributions[{i}]: at most one parameter may be swept, got "
                         f"{[k for k, _ in sw]}")
        n_swept += bool(sw)
    if len(cfg.distributions) > 2:
        probs.append("distributions: expected [f] or [f, h]")
    if n_swept > 1:
        fl = cfg.distributions[0].swept()
        hl = cfg.distributions[1].swept() if cfg.distributions[1] != "same" else []
        if len(fl[0][1]) != len(hl[0][1]):
            probs.append("distributions: swept parameters of f and h must have equal length")
    return probs


def _distribution_problems(d: DistributionConfig, prefix):
    probs = [f"{prefix}.{k}: not a parameter of kind {d.kind!r}" for k in _unused_keys(d)]
    if d.kind == "mixture":
        if not d.components:
            probs.append(f"{prefix}.components: a mixture needs components")
        for j, c in enumerate(d.components or ()):
            probs.extend(_distribution_problems(c, f"{prefix}.components[{j}]"))
            if c.swept():
                probs.append(f"{prefix}.components[{j}]: mixture members cannot be swept")
        return probs
    if d.kind == "zero" or probs:
        return probs
    if d.center is not None:
        centers = d.center if d.center and isinstance(d.center[0], list) else [d.center]
        if any(len(c) != 3 for c in centers):
            probs.append(f"{prefix}.center: expected 3-vectors")
            return probs
    sweep = d.swept()
    values = sweep[0][1] if sweep else [None]
    for v in values:
        try:
            build_distribution(d, {sweep[0][0]: v} if sweep else None)
        except (ValueError, TypeError) as exc:
            probs.append(f"{prefix}: {exc}")
    return probs


def _mentions(problem, sections):
    key = problem.split(":", 1)[0]
    return any(part.split(".")[0].split("[")[0] in sections for part in key.split(","))


def validate(raw: dict) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        probs = [f"{_fmt_loc(e['loc'])}: {e['msg']}" for e in exc.errors()]
        # cross-field checks still run on the sections that did parse
        bad = {e["loc"][0] for e in exc.errors() if e["loc"]}
        try:
            rest = ExperimentConfig.model_validate({k: v for k, v in raw.items() if k not in bad})
        except ValidationError:
            rest = None
        if rest is not None:
            probs += [p for p in _semantic_problems(rest) if not _mentions(p, bad)]
        raise ConfigError(probs) from None
    probs = _semantic_problems(cfg)
    if probs:
        raise ConfigError(probs)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"{path}: no such file"])
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: parse error: {exc}"]) from None
    return validate(raw)


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


__all__ = [
    "ConfigError", "ExperimentConfig", "load_config", "validate", "config_hash", "build_family",
    "build_distribution", "theorem_cases", "SIGMA0_CODES",
]
