"""Target problems: shifted CEC'05-style benchmarks f1-f10 and RIS phase-shift beamforming.

Every problem exposes the same surface consumed by operators and the executor:
``kind``, ``dimension``, ``lower``, ``upper`` and a vectorised ``objective(X)``
that is always minimised.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np

from ._seeding import derive_seed, make_rng

CONTINUOUS = "continuous"
DISCRETE = "discrete"


class ProblemError(ValueError):
    pass


class OutOfBoundsError(ProblemError):
    def __init__(self, row: int, message: str = ""):
        self.row = row
        super().__init__(message or f"decision row {row} violates problem bounds")


class BudgetExceeded(RuntimeError):
    pass


class EvalCounter:
    """Counts function evaluations; raises once a caller-supplied limit would be crossed."""

    def __init__(self, limit: int | None = None):
        self.limit = limit
        self.used = 0

    def charge(self, n: int) -> None:
        if self.limit is not None and self.used + n > self.limit:
            raise BudgetExceeded(f"{self.used} + {n} evaluations exceeds budget {self.limit}")
        self.used += n


@dataclass
class SolutionSet:
    decisions: np.ndarray
    fitness: np.ndarray
    evaluated: np.ndarray
    aux: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def new(cls, decisions: np.ndarray) -> "SolutionSet":
        decisions = np.atleast_2d(np.asarray(decisions))
        n = decisions.shape[0]
        return cls(decisions, np.full(n, np.inf), np.zeros(n, dtype=bool))

    @property
    def size(self) -> int:
        return self.decisions.shape[0]

    def take(self, idx) -> "SolutionSet":
        idx = np.asarray(idx)
        return SolutionSet(self.decisions[idx].copy(), self.fitness[idx].copy(),
                           self.evaluated[idx].copy(), dict(self.aux))

    def best_index(self) -> int:
        f = np.where(self.evaluated, self.fitness, np.inf)
        return int(np.argmin(f))

    def best_fitness(self) -> float:
        f = self.fitness[self.evaluated]
        return float(f.min()) if f.size else math.inf

    @staticmethod
    def concat(a: "SolutionSet", b: "SolutionSet") -> "SolutionSet":
        return SolutionSet(np.concatenate([a.decisions, b.decisions]),
                           np.concatenate([a.fitness, b.fitness]),
                           np.concatenate([a.evaluated, b.evaluated]), dict(a.aux))


# ---------------------------------------------------------------------------
# continuous benchmarks

def _sphere(z):
    return np.sum(z * z, axis=1)


def _schwefel_12(z):
    return np.sum(np.cumsum(z, axis=1) ** 2, axis=1)


def _elliptic(z):
    d = z.shape[1]
    expo = np.arange(d) / (d - 1) if d > 1 else np.zeros(1)
    return np.sum((1e6 ** expo) * z * z, axis=1)


def _rosenbrock(z):
    z = z + 1.0
    if z.shape[1] < 2:
        return (z[:, 0] - 1.0) ** 2
    return np.sum(100.0 * (z[:, :-1] ** 2 - z[:, 1:]) ** 2 + (z[:, :-1] - 1.0) ** 2, axis=1)


def _griewank(z):
    i = np.arange(1, z.shape[1] + 1)
    return np.sum(z * z, axis=1) / 4000.0 - np.prod(np.cos(z / np.sqrt(i)), axis=1) + 1.0


def _ackley(z):
    d = z.shape[1]
    a = -20.0 * np.exp(-0.2 * np.sqrt(np.sum(z * z, axis=1) / d))
    b = -np.exp(np.sum(np.cos(2 * np.pi * z), axis=1) / d)
    return a + b + 20.0 + math.e


def _rastrigin(z):
    return np.sum(z * z - 10.0 * np.cos(2 * np.pi * z) + 10.0, axis=1)


@dataclass(frozen=True)
class _Benchmark:
    base: Callable[[np.ndarray], np.ndarray]
    bias: float
    bound: float
    note: str


# bias values are the published CEC'05 offsets; rotations are not applied
BENCHMARKS: dict[str, _Benchmark] = {
    "f1": _Benchmark(_sphere, -450.0, 100.0, "shifted sphere"),
    "f2": _Benchmark(_schwefel_12, -450.0, 100.0, "shifted Schwefel 1.2"),
    "f3": _Benchmark(_elliptic, -450.0, 100.0, "shifted high-conditioned elliptic"),
    "f4": _Benchmark(_schwefel_12, -450.0, 100.0, "shifted Schwefel 1.2 with multiplicative noise"),
    "f5": _Benchmark(_sphere, -310.0, 100.0, "Schwefel 2.6, optimum partly on the bounds"),
    "f6": _Benchmark(_rosenbrock, 390.0, 100.0, "shifted Rosenbrock"),
    "f7": _Benchmark(_griewank, -180.0, 600.0, "shifted Griewank"),
    "f8": _Benchmark(_ackley, -140.0, 32.0, "shifted Ackley, optimum partly on the bounds"),
    "f9": _Benchmark(_rastrigin, -330.0, 5.0, "shifted Rastrigin"),
    "f10": _Benchmark(_rastrigin, -330.0, 5.0, "shifted Rastrigin (unrotated form)"),
}


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    id: str
    kind: str
    dimension: int
    lower: np.ndarray
    upper: np.ndarray
    bias: float
    shift: np.ndarray
    seed: int
    direction: str = "minimize"
    matrix: np.ndarray | None = None

    @property
    def name(self) -> str:
        return f"{self.id}-D{self.dimension}-s{self.seed}"

    def base_value(self, z: np.ndarray) -> np.ndarray:
        """Unshifted, unbiased base function at offsets ``z = x - shift``."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        if self.id == "f5":
            return np.max(np.abs(z @ self.matrix.T), axis=1)
        val = BENCHMARKS[self.id].base(z)
        if self.id == "f4":
            val = val * (1.0 + 0.4 * np.abs(self._noise(z)))
        return val

    def _noise(self, z: np.ndarray) -> np.ndarray:
        # noise is a pure function of the point so evaluation stays repeatable
        out = np.empty(z.shape[0])
        for i, row in enumerate(z):
            s = derive_seed(self.seed, np.ascontiguousarray(row).tobytes().hex())
            out[i] = np.random.default_rng(s).standard_normal()
        return out

    def objective(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        val = self.base_value(X - self.shift) + self.bias
        return val if self.direction == "minimize" else -val


def make_benchmark(id: str, dimension: int, seed: int) -> ProblemSpec:
    if id not in BENCHMARKS:
        raise ProblemError(f"unknown benchmark id {id!r}; expected one of {sorted(BENCHMARKS)}")
    if int(dimension) < 1:
        raise ProblemError(f"dimension must be >= 1, got {dimension}")
    d = int(dimension)
    spec = BENCHMARKS[id]
    rng = make_rng("benchmark", id, d, int(seed))
    lb, ub = -spec.bound, spec.bound
    shift = rng.uniform(0.8 * lb, 0.8 * ub, d)
    matrix = None
    if id == "f5":
        i = np.arange(1, d + 1)
        shift[i <= math.ceil(d / 4)] = lb
        shift[i >= math.floor(3 * d / 4)] = ub
        matrix = rng.integers(-500, 501, size=(d, d)).astype(float)
    elif id == "f8":
        shift[0::2] = lb
    return ProblemSpec(id=id, kind=CONTINUOUS, dimension=d, lower=np.full(d, lb),
                       upper=np.full(d, ub), bias=spec.bias, shift=shift, seed=int(seed),
                       matrix=matrix)


# ---------------------------------------------------------------------------
# RIS-aided downlink beamforming with discrete phase shifts

@dataclass(frozen=True, eq=False)
class BeamformInstance:
    K: int
    M: int
    N: int
    b: int
    P_T: float
    noise: float
    h_d: np.ndarray  # (K, M): row k is the BS-user k channel
    G: np.ndarray    # (N, M): BS-RIS channel
    h_r: np.ndarray  # (K, N): row k is the RIS-user k channel
    w: np.ndarray    # (M, K): column k is the beamformer towards user k
    seed: int
    id: str = "beamform"

    kind = DISCRETE

    @property
    def dimension(self) -> int:
        return self.N

    @property
    def name(self) -> str:
        return f"beamform-K{self.K}-M{self.M}-N{self.N}-b{self.b}-s{self.seed}"

    @property
    def levels(self) -> int:
        return 2 ** self.b

    @property
    def alphabet(self) -> np.ndarray:
        return np.full(self.N, self.levels, dtype=np.int64)

    @property
    def lower(self) -> np.ndarray:
        return np.zeros(self.N, dtype=np.int64)

    @property
    def upper(self) -> np.ndarray:
        return self.alphabet - 1

    def sum_rate(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X))
        theta = np.exp(1j * 2 * np.pi * X / 2 ** self.b)                    # (P, N)
        cascade = np.conj(self.h_r)[:, :, None] * self.G[None, :, :]        # (K, N, M)
        h_eff = np.conj(self.h_d)[None] + np.einsum("pn,knm->pkm", theta, cascade)
        y = np.abs(h_eff @ self.w) ** 2                                     # (P, K, K)
        signal = np.einsum("pkk->pk", y)
        interference = y.sum(axis=2) - signal
        return np.sum(np.log2(1.0 + signal / (interference + self.noise)), axis=1)

    def objective(self, X: np.ndarray) -> np.ndarray:
        return 1.0 / self.sum_rate(X)


def _cn(rng: np.random.Generator, *shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def make_beamform(K: int, M: int, N: int, b: int, P_T: float = 1.0, noise: float = 1.0,
                  seed: int = 0) -> BeamformInstance:
    if min(K, M, N, b) < 1:
        raise ProblemError("K, M, N and b must all be >= 1")
    if P_T <= 0 or noise <= 0:
        raise ProblemError("P_T and noise must be positive")
    rng = make_rng("beamform", K, M, N, int(seed))
    h_d = _cn(rng, K, M)
    G = _cn(rng, N, M)
    h_r = _cn(rng, K, N)
    # maximum-ratio transmission on the direct channel, equal power split
    norms = np.linalg.norm(h_d, axis=1, keepdims=True)
    w = (h_d / norms * math.sqrt(P_T / K)).T
    return BeamformInstance(K, M, N, int(b), float(P_T), float(noise), h_d, G, h_r, w, int(seed))


def beamform_fitness(instance: BeamformInstance, phase_indices) -> float:
    x = np.asarray(phase_indices)
    if x.shape != (instance.N,):
        raise ProblemError(f"expected {instance.N} phase indices, got shape {x.shape}")
    if np.any(x < 0) or np.any(x >= 2 ** instance.b) or np.any(x != np.round(x)):
        raise ProblemError(f"phase indices must be integers in [0, {2 ** instance.b - 1}]")
    return float(instance.objective(x[None])[0])


def save_channels(instance: BeamformInstance, path: str | Path) -> None:
    np.savez(path, K=instance.K, M=instance.M, N=instance.N, b=instance.b, P_T=instance.P_T,
             noise=instance.noise, h_d=instance.h_d, G=instance.G, h_r=instance.h_r,
             w=instance.w, seed=instance.seed)


def load_channels(path: str | Path) -> BeamformInstance:
    with np.load(path) as d:
        return BeamformInstance(int(d["K"]), int(d["M"]), int(d["N"]), int(d["b"]),
                                float(d["P_T"]), float(d["noise"]), d["h_d"], d["G"],
                                d["h_r"], d["w"], int(d["seed"]))


# ---------------------------------------------------------------------------

Problem = ProblemSpec | BeamformInstance


def in_bounds(problem, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(X)
    ok = np.all((X >= problem.lower) & (X <= problem.upper), axis=1)
    if problem.kind == DISCRETE:
        ok &= np.all(X == np.round(X), axis=1)
    return ok


def evaluate(problem, solutions: SolutionSet, counter: EvalCounter | None = None) -> SolutionSet:
    """Fill fitness for every unevaluated row; already-evaluated rows are left untouched."""
    todo = np.flatnonzero(~solutions.evaluated)
    if todo.size == 0:
        return solutions
    ok = in_bounds(problem, solutions.decisions[todo])
    if not ok.all():
        raise OutOfBoundsError(int(todo[np.argmin(ok)]))
    if counter is not None:
        counter.charge(int(todo.size))
    fitness = solutions.fitness.copy()
    fitness[todo] = problem.objective(solutions.decisions[todo])
    evaluated = np.ones(solutions.size, dtype=bool)
    return replace(solutions, fitness=fitness, evaluated=evaluated)


def random_solutions(problem, n: int, rng: np.random.Generator) -> SolutionSet:
    if problem.kind == DISCRETE:
        X = rng.integers(problem.lower, problem.upper + 1, size=(n, problem.dimension))
    else:
        X = rng.uniform(problem.lower, problem.upper, size=(n, problem.dimension))
    return SolutionSet.new(X)


def problem_from_config(cfg: Mapping[str, Any]):
    """Build a problem from ``{id, dimension, seed}`` or ``{id: beamform, K, M, N, b, ...}``."""
    cfg = dict(cfg)
    pid = cfg.pop("id")
    if pid == "beamform":
        return make_beamform(**cfg)
    extra = set(cfg) - {"dimension", "seed"}
    if extra:
        raise ProblemError(f"unexpected keys for benchmark {pid}: {sorted(extra)}")
    return make_benchmark(pid, cfg["dimension"], cfg.get("seed", 0))
