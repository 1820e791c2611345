"""Run configuration: TOML file -> validated pydantic model.

Every section rejects unknown keys.  Environment variables of the form
``CURVEMAG_<SECTION>__<KEY>=value`` override file values; the value is
parsed as a TOML literal when possible and kept as a string otherwise.
"""
from __future__ import annotations

import os
import sys
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ENV_PREFIX = "CURVEMAG_"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CurveConfig(_Section):
    kind: Literal["line", "ring", "helix", "samples"] = "line"
    length: float = Field(40.0, gt=0)
    start: Optional[float] = None
    radius: float = Field(1.0, gt=0)
    a: float = Field(1.0, gt=0)
    b: float = 1.0
    turns: float = Field(1.0, gt=0)
    path: Optional[str] = None
    closed: Optional[bool] = None

    @model_validator(mode="after")
    def _samples_need_path(self):
        if self.kind == "samples" and not self.path:
            raise ValueError("curve.path is required for kind = 'samples'")
        return self


class GridConfig(_Section):
    n: int = Field(512, ge=8)


class PerturbationConfig(_Section):
    kind: Literal["dmi", "ado", "linear", "none"] = "dmi"
    kappa: float = 0.36
    beta: float = 1.0
    tensor: Optional[list[float]] = None
    tensor_path: Optional[str] = None

    @model_validator(mode="after")
    def _linear_source(self):
        if self.kind == "linear":
            if self.tensor is None and self.tensor_path is None:
                raise ValueError("perturbation.tensor or perturbation.tensor_path is required "
                                 "for kind = 'linear'")
            if self.tensor is not None and len(self.tensor) != 27:
                raise ValueError("perturbation.tensor needs 27 entries")
        return self


class CrossSectionConfig(_Section):
    kind: Literal["disk", "square", "polygon", "none"] = "disk"
    radius: Optional[float] = Field(None, gt=0)
    side: float = Field(1.0, gt=0)
    vertices: Optional[list[list[float]]] = None
    path: Optional[str] = None
    normalize: bool = True
    panels: int = Field(2048, ge=64)
    convention: Literal["reduced", "boundary"] = "reduced"
    self_term: Literal["corrected", "midpoint"] = "corrected"
    convergence: list[int] = Field(default_factory=lambda: [256, 512, 1024, 2048])

    @model_validator(mode="after")
    def _polygon_source(self):
        if self.kind == "polygon" and self.vertices is None and self.path is None:
            raise ValueError("cross_section.vertices or cross_section.path is required "
                             "for kind = 'polygon'")
        return self


class BoundaryConfig(_Section):
    kind: Literal["periodic", "free", "pinned"] = "free"
    left: Optional[list[float]] = None
    right: Optional[list[float]] = None

    @model_validator(mode="after")
    def _pinned_values(self):
        if self.kind == "pinned" and (self.left is None or self.right is None):
            raise ValueError("boundary.left and boundary.right are required for kind = 'pinned'")
        for name in ("left", "right"):
            val = getattr(self, name)
            if val is not None and len(val) != 3:
                raise ValueError(f"boundary.{name} needs 3 components")
        return self


class MinimizeConfig(_Section):
    tol: float = Field(1e-8, gt=0)
    max_iters: int = Field(20000, ge=1)
    step_rule: Literal["bb1", "bb2", "alternating"] = "alternating"
    init: Literal["constant", "tangent", "random", "wall_ansatz", "analytic"] = "random"
    init_vector: list[float] = Field(default_factory=lambda: [0.0, 0.0, 1.0])
    init_width: float = Field(1.0, gt=0)
    init_noise: float = Field(0.0, ge=0)
    demag: bool = True


class OutputConfig(_Section):
    dir: str = "out"
    plot: bool = False


class GammaConfig(_Section):
    epsilons: list[float] = Field(default_factory=lambda: [0.1, 0.05, 0.025, 0.0125])
    v0: Literal["ring_minimizer", "ring_demag", "wall", "constant"] = "ring_minimizer"
    n_r: int = Field(8, ge=2)
    n_theta: int = Field(16, ge=4)
    n_side: int = Field(8, ge=2)
    ratio: float = Field(4.0, gt=0)
    form: Literal["exact", "printed"] = "exact"

    @field_validator("epsilons")
    @classmethod
    def _decreasing(cls, v):
        if not v or any(e <= 0 for e in v):
            raise ValueError("gamma.epsilons must be positive")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("gamma.epsilons must be strictly decreasing")
        return v


class AnalyticConfig(_Section):
    oracle: Literal["wall", "ring_family", "ring_minimizer", "ring_demag", "spiral"] = "wall"
    q: Optional[float] = Field(None, gt=0)
    amplitude: float = 0.0
    b_amplitude: Optional[float] = None
    phase: float = 0.0
    winding: int = Field(1, ge=0)
    force: bool = False
    sign: Literal[1, -1] = 1
    demag_coefficient: Optional[float] = Field(None, ge=0)


class RunConfig(_Section):
    seed: int = Field(0, ge=0, lt=2**64)
    threads: int = Field(1, ge=1)
    curve: CurveConfig = Field(default_factory=CurveConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    perturbation: PerturbationConfig = Field(default_factory=PerturbationConfig)
    cross_section: CrossSectionConfig = Field(default_factory=CrossSectionConfig)
    boundary: BoundaryConfig = Field(default_factory=BoundaryConfig)
    minimize: MinimizeConfig = Field(default_factory=MinimizeConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    gamma: GammaConfig = Field(default_factory=GammaConfig)
    analytic: AnalyticConfig = Field(default_factory=AnalyticConfig)


def _parse_scalar(text: str):
    try:
        return tomllib.loads(f"x = {text}")["x"]
    except tomllib.TOMLDecodeError:
        return text


def env_overrides(environ=None) -> dict:
    """Nested dict from ``CURVEMAG_SECTION__KEY`` (or ``CURVEMAG_KEY``) variables."""
    environ = os.environ if environ is None else environ
    out: dict = {}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX) or name == "CURVEMAG_PURE_PYTHON":
            continue
        parts = name[len(ENV_PREFIX):].lower().split("__")
        node = out
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = _parse_scalar(value)
    return out


def _merge(base: dict, extra: dict) -> dict:
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _merge(base[k], v)
        else:
            base[k] = v
    return base


def _format_error(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        key = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{key}: {e['msg']}")
    return "invalid configuration\n  " + "\n  ".join(lines)


def _resolve_paths(cfg: RunConfig, base: Path) -> RunConfig:
    """Make relative input paths relative to the config file and check they exist."""
    for section, key in (("curve", "path"), ("cross_section", "path"),
                         ("perturbation", "tensor_path")):
        sec = getattr(cfg, section)
        val = getattr(sec, key)
        if val is None:
            continue
        p = Path(val)
        if not p.is_absolute():
            p = base / p
        if not p.is_file():
            raise ConfigError(f"{section}.{key}: file not found: {val}")
        setattr(sec, key, str(p))
    return cfg


def load_config(path=None, *, overrides: dict | None = None, environ=None) -> RunConfig:
    """Read, merge (file < environment < explicit overrides) and validate."""
    data: dict = {}
    base = Path.cwd()
    if path is not None:
        p = Path(path)
        try:
            data = tomllib.loads(p.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: TOML syntax error: {exc}") from None
        base = p.resolve().parent
    _merge(data, env_overrides(environ))
    if overrides:
        _merge(data, overrides)
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_error(exc)) from None
    return _resolve_paths(cfg, base)
