"""Experiment configuration: YAML text validated against a strict schema."""
from __future__ import annotations

import copy
import hashlib
import json
import math
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ._seeding import derive_seed, make_rng
from .problems import BENCHMARKS, make_beamform, make_benchmark


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProblemGroup(_Strict):
    """One problem family; its instances differ only in their random draw."""
    id: str
    name: str | None = None
    dimension: int = Field(10, ge=1)
    instances: int = Field(3, ge=1)
    K: int = Field(2, ge=1)
    M: int = Field(4, ge=1)
    N: int | list[int] = 120
    b: int = Field(1, ge=1, le=8)
    P_T: float = Field(1.0, gt=0)
    noise: float = Field(1.0, gt=0)

    @field_validator("id")
    @classmethod
    def _known(cls, v):
        if v != "beamform" and v not in BENCHMARKS:
            raise ValueError(f"unknown problem id {v!r}")
        return v

    @property
    def label(self) -> str:
        return self.name or self.id

    @property
    def n_instances(self) -> int:
        if self.id == "beamform" and isinstance(self.N, list):
            return len(self.N)
        return self.instances

    def build(self, master_seed: int) -> list:
        out = []
        for i in range(self.n_instances):
            seed = derive_seed("instance", master_seed, self.label, i) % (2 ** 32)
            if self.id == "beamform":
                n = self.N[i] if isinstance(self.N, list) else self.N
                out.append(make_beamform(self.K, self.M, n, self.b, self.P_T, self.noise, seed))
            else:
                out.append(make_benchmark(self.id, self.dimension, seed))
        return out

    def split(self, master_seed: int) -> tuple[list[int], list[int]]:
        """Seeded design/test split; the design side gets ceil(n/2) instances."""
        n = self.n_instances
        perm = make_rng("split", master_seed, self.label).permutation(n).tolist()
        k = math.ceil(n / 2) if n > 1 else 1
        design = sorted(perm[:k])
        test = sorted(perm[k:]) or design
        return design, test


class DesignSection(_Strict):
    runs_per_instance: int = Field(10, ge=1)
    candidate_budget: int = Field(5000, ge=1)
    candidates_per_iteration: int = Field(10, ge=1)
    population_size: int = Field(20, ge=1)
    budget_fe: int = Field(5000, ge=1)
    stagnation_limit: int = Field(5, ge=1)
    perturb_strength: int = Field(3, ge=0)
    n_initial: int = Field(300, ge=1)
    validation_top: int = Field(5, ge=0)
    heldout_runs: int = Field(10, ge=1)

    @model_validator(mode="after")
    def _budget(self):
        if self.budget_fe < self.population_size:
            raise ValueError("budget_fe must be at least population_size")
        return self


class CompareSection(_Strict):
    baselines: list[str] = Field(default_factory=lambda: ["GA", "DE", "PSO", "CMA-ES"])
    graphs: dict[str, str] = Field(default_factory=dict)
    runs: int = Field(30, ge=1)
    population_size: int = Field(50, ge=1)
    budget_fe: int = Field(20000, ge=1)
    budget_fe_discrete: int = Field(50000, ge=1)
    dump_runs: bool = True


class SurrogateSection(_Strict):
    train_size: int = Field(1000, ge=10)
    holdout_size: int = Field(100, ge=2)
    runs_per_instance: int = Field(3, ge=1)
    population_size: int = Field(20, ge=1)
    budget_fe: int = Field(5000, ge=1)
    latent_dim: int = Field(20, ge=1)
    hidden_dim: int = Field(64, ge=1)
    epochs: int = Field(200, ge=1)
    lr: float = Field(0.01, gt=0)
    mode: Literal["both", "embed", "raw"] = "both"
    n_trees: int = Field(100, ge=1)
    max_depth: int | None = 12


class ExperimentConfig(_Strict):
    seed: int = 0
    output: str = "results"
    problems: list[ProblemGroup]
    design: DesignSection = Field(default_factory=DesignSection)
    compare: CompareSection = Field(default_factory=CompareSection)
    surrogate: SurrogateSection = Field(default_factory=SurrogateSection)

    @field_validator("problems")
    @classmethod
    def _non_empty(cls, v):
        if not v:
            raise ValueError("at least one problem group is required")
        labels = [p.label for p in v]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate problem labels {labels}")
        return v

    def config_hash(self) -> str:
        # the output location does not change what is computed
        blob = json.dumps(self.model_dump(mode="json", exclude={"output"}), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


DESK_SCALE = {
    "design": {"candidate_budget": 300, "budget_fe": 1000},
    "compare": {"runs": 5, "budget_fe": 2000, "budget_fe_discrete": 5000},
    "surrogate": {"train_size": 200, "holdout_size": 100, "budget_fe": 1000, "runs_per_instance": 3},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _line_of(node: yaml.Node | None, loc: tuple) -> int | None:
    """Follow a pydantic error location through the YAML node tree to a line number."""
    line = node.start_mark.line + 1 if node is not None else None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == key:
                    nxt = v
                    line = k.start_mark.line + 1
                    break
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
        if node is None:
            break
    return line


def parse_config(text: str, desk_scale: bool = False, overrides: dict | None = None) -> ExperimentConfig:
    """Validate YAML text. With ``desk_scale`` the reduced preset fills in values the text leaves unset."""
    try:
        node = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark else ""
        raise ConfigError(f"{where}malformed YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("line 1: the config must be a mapping")
    data = _merge(DESK_SCALE, raw) if desk_scale else raw
    if overrides:
        data = _merge(data, overrides)
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        msgs = []
        for err in exc.errors():
            line = _line_of(node, tuple(err["loc"]))
            where = f"line {line}: " if line else ""
            msgs.append(f"{where}{'.'.join(str(p) for p in err['loc'])}: {err['msg']}")
        raise ConfigError("\n".join(msgs)) from None


def load_config(path: str | Path, desk_scale: bool = False, overrides: dict | None = None) -> ExperimentConfig:
    return parse_config(Path(path).read_text(), desk_scale, overrides)


def dump_defaults() -> dict[str, Any]:
    return ExperimentConfig(problems=[ProblemGroup(id="f1")]).model_dump(mode="json")
