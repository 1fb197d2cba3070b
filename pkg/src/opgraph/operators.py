"""Operator catalog: choose, search and update operators with a uniform apply contract.

Search operators receive the chosen parent set ``S'`` and return unevaluated
offspring of the same size. Pair-based operators mate consecutive rows
``(0, 1), (2, 3), ...``. Update operators merge ``S`` and ``S_new`` back to
``|S|`` rows. Stateful operators (PSO, EDA, CMA, SA) keep their state in the
per-vertex ``state`` dict owned by one algorithm run.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

import numpy as np

from .problems import CONTINUOUS, DISCRETE, SolutionSet

CHOOSE, SEARCH, UPDATE = "choose", "search", "update"
BOTH = "both"
EDA_VAR_FLOOR = 1e-12


class OperatorError(ValueError):
    pass


class ParamSchemaError(OperatorError):
    pass


class KindMismatch(OperatorError):
    pass


class ArityError(OperatorError):
    pass


class DimensionMismatch(OperatorError):
    pass


@dataclass(frozen=True)
class Param:
    name: str
    low: float
    high: float
    default: float
    integer: bool = False

    def clip(self, value: float) -> float:
        v = min(max(float(value), self.low), self.high)
        return float(round(v)) if self.integer else v

    def sample(self, rng: np.random.Generator) -> float:
        if self.integer:
            return float(rng.integers(int(self.low), int(self.high) + 1))
        return float(rng.uniform(self.low, self.high))


@dataclass(frozen=True)
class OperatorCatalogEntry:
    op_id: str
    role: str
    kind: str
    params: tuple[Param, ...]
    arity: str
    needs_aux: tuple[str, ...]
    description: str
    fn: Callable = field(repr=False, compare=False)

    @property
    def n_params(self) -> int:
        return len(self.params)

    def defaults(self) -> tuple[float, ...]:
        return tuple(p.default for p in self.params)

    def supports(self, kind: str) -> bool:
        return self.kind == BOTH or self.kind == kind


@dataclass
class OperatorIO:
    solutions: SolutionSet
    params: Sequence[float]
    rng: np.random.Generator
    problem: Any
    new: SolutionSet | None = None
    state: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# helpers

def _span(problem) -> np.ndarray:
    return np.asarray(problem.upper, dtype=float) - np.asarray(problem.lower, dtype=float)


def repair(problem, X: np.ndarray) -> np.ndarray:
    """Clamp to bounds (continuous) or round-and-clamp to the alphabet (discrete)."""
    if problem.kind == DISCRETE:
        return np.clip(np.rint(X), problem.lower, problem.upper).astype(np.int64)
    return np.clip(X, problem.lower, problem.upper)


def _offspring(X: np.ndarray) -> SolutionSet:
    return SolutionSet.new(X)


def _distinct_others(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """``k`` distinct indices per row, none equal to the row index (with reuse if n-1 < k)."""
    if n - 1 >= k:
        keys = rng.random((n, n))
        keys[np.arange(n), np.arange(n)] = np.inf
        return np.argsort(keys, axis=1)[:, :k]
    if n == 1:
        return np.zeros((1, k), dtype=int)
    r = rng.integers(0, n - 1, size=(n, k))
    return r + (r >= np.arange(n)[:, None])


def _pairs(n: int, rng: np.random.Generator):
    """Index arrays (a, b) for consecutive mating pairs; an odd last row mates a random partner."""
    a = np.arange(0, n - 1, 2)
    b = a + 1
    odd = None
    if n % 2 == 1:
        odd = (n - 1, int(rng.integers(0, n - 1)))
    return a, b, odd


def _mask_crossover(io: OperatorIO, rate: float, mask_fn) -> SolutionSet:
    X = io.solutions.decisions
    n, d = X.shape
    if n < 2:
        raise ArityError(f"crossover needs at least 2 parents, got {n}")
    rng = io.rng
    a, b, odd = _pairs(n, rng)
    out = X.copy()
    if a.size:
        mask = mask_fn(rng, a.size, d)
        mask &= (rng.random(a.size) < rate)[:, None]
        out[a] = np.where(mask, X[b], X[a])
        out[b] = np.where(mask, X[a], X[b])
    if odd is not None:
        i, j = odd
        mask = mask_fn(rng, 1, d) & (rng.random() < rate)
        out[i] = np.where(mask[0], X[j], X[i])
    return _offspring(out)


def _segment_mask(rng: np.random.Generator, p: int, d: int, n_points: int) -> np.ndarray:
    if d < 2:
        return np.zeros((p, d), dtype=bool)
    n_points = min(n_points, d - 1)
    cuts = np.sort(np.argsort(rng.random((p, d - 1)), axis=1)[:, :n_points] + 1, axis=1)
    pos = np.arange(d)
    seg = (pos[None, None, :] >= cuts[:, :, None]).sum(axis=1)
    return seg % 2 == 1


def _blend_crossover(io: OperatorIO, rate: float, blend) -> SolutionSet:
    X = io.solutions.decisions.astype(float)
    n, d = X.shape
    if n < 2:
        raise ArityError(f"crossover needs at least 2 parents, got {n}")
    rng = io.rng
    a, b, odd = _pairs(n, rng)
    out = X.copy()
    if a.size:
        gate = (rng.random(a.size) < rate)[:, None]
        c1, c2 = blend(rng, X[a], X[b])
        out[a] = np.where(gate, c1, X[a])
        out[b] = np.where(gate, c2, X[b])
    if odd is not None:
        i, j = odd
        if rng.random() < rate:
            c1, _ = blend(rng, X[i:i + 1], X[j:j + 1])
            out[i] = c1[0]
    return _offspring(out)


# ---------------------------------------------------------------------------
# choose

def _choose_traverse(io, p):
    return io.solutions.take(np.arange(io.solutions.size))


def _choose_roulette(io, p):
    S = io.solutions
    n = S.size
    f = S.fitness
    if not S.evaluated.all() or not np.all(np.isfinite(f)) or np.ptp(f) == 0:
        idx = io.rng.integers(0, n, n)
    else:
        w = f.max() - f + 1e-12 * max(np.ptp(f), 1.0)
        idx = io.rng.choice(n, size=n, p=w / w.sum())
    return S.take(idx)


def _choose_tournament(io, p):
    S = io.solutions
    n = S.size
    k = int(min(max(p[0], 1), n))
    contestants = np.argsort(io.rng.random((n, n)), axis=1)[:, :k]
    f = np.where(S.evaluated, S.fitness, np.inf)[contestants]
    winners = contestants[np.arange(n), np.argmin(f, axis=1)]
    return S.take(winners)


def _kmeans(X: np.ndarray, k: int, rng: np.random.Generator, iters: int = 5) -> np.ndarray:
    X = X.astype(float)
    centers = X[rng.choice(X.shape[0], size=k, replace=False)]
    labels = np.zeros(X.shape[0], dtype=int)
    for _ in range(iters):
        dist = ((X[:, None, :] - centers[None]) ** 2).sum(axis=2)
        labels = np.argmin(dist, axis=1)
        for c in range(k):
            members = X[labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)
    return labels


def _choose_cluster(io, p):
    """Brain-storm style idea picking: pairs come from one cluster (niche) or two clusters."""
    S = io.solutions
    rng = io.rng
    n = S.size
    k = int(min(max(p[0], 1), n))
    p_one, p_center = p[1], p[2]
    labels = _kmeans(S.decisions, k, rng)
    clusters = [np.flatnonzero(labels == c) for c in range(k)]
    clusters = [c for c in clusters if c.size]
    sizes = np.array([c.size for c in clusters], dtype=float)
    f = np.where(S.evaluated, S.fitness, np.inf)
    centers = [c[np.argmin(f[c])] for c in clusters]

    def pick(ci):
        members = clusters[ci]
        if rng.random() < p_center:
            return centers[ci]
        return members[rng.integers(0, members.size)]

    idx = []
    while len(idx) < n:
        c1 = rng.choice(len(clusters), p=sizes / sizes.sum())
        if len(clusters) == 1 or rng.random() < p_one:
            c2 = c1
        else:
            others = [c for c in range(len(clusters)) if c != c1]
            c2 = others[rng.integers(0, len(others))]
        idx.append(pick(c1))
        idx.append(pick(c2))
    return S.take(np.array(idx[:n]))


# ---------------------------------------------------------------------------
# continuous search

def _cross_arithmetic(io, p):
    def blend(rng, a, b):
        lam = rng.random((a.shape[0], 1))
        return lam * a + (1 - lam) * b, (1 - lam) * a + lam * b
    return _blend_crossover(io, p[0], blend)


def _cross_sim_binary(io, p):
    eta = p[1]

    def blend(rng, a, b):
        u = rng.random(a.shape)
        beta = np.where(u <= 0.5, (2 * u) ** (1 / (eta + 1)),
                        (1 / (2 * (1 - u) + 1e-300)) ** (1 / (eta + 1)))
        beta = np.where(rng.random(a.shape) < 0.5, beta, 1.0)
        return 0.5 * ((1 + beta) * a + (1 - beta) * b), 0.5 * ((1 - beta) * a + (1 + beta) * b)
    return _blend_crossover(io, p[0], blend)


def _cross_point_one(io, p):
    return _mask_crossover(io, p[0], lambda rng, m, d: _segment_mask(rng, m, d, 1))


def _cross_point_two(io, p):
    return _mask_crossover(io, p[0], lambda rng, m, d: _segment_mask(rng, m, d, 2))


def _cross_point_n(io, p):
    n_points = int(p[1])
    return _mask_crossover(io, p[0], lambda rng, m, d: _segment_mask(rng, m, d, n_points))


def _cross_point_uniform(io, p):
    rate = p[0]
    return _mask_crossover(io, 1.0, lambda rng, m, d: rng.random((m, d)) < rate)


def _mutation_mask(io, prob):
    return io.rng.random(io.solutions.decisions.shape) < prob


def _search_mu_gaussian(io, p):
    X = io.solutions.decisions.astype(float)
    step = io.rng.standard_normal(X.shape) * p[1] * _span(io.problem)
    return _offspring(np.where(_mutation_mask(io, p[0]), X + step, X))


def _search_mu_cauchy(io, p):
    X = io.solutions.decisions.astype(float)
    step = io.rng.standard_cauchy(X.shape) * p[1] * _span(io.problem)
    return _offspring(np.where(_mutation_mask(io, p[0]), X + step, X))


def _search_mu_polynomial(io, p):
    X = io.solutions.decisions.astype(float)
    eta = p[1]
    lb, span = np.asarray(io.problem.lower, float), _span(io.problem)
    span = np.where(span > 0, span, 1.0)
    d1 = (X - lb) / span
    d2 = 1.0 - d1
    u = io.rng.random(X.shape)
    mpow = 1.0 / (eta + 1.0)
    lo = (2 * u + (1 - 2 * u) * (1 - d1) ** (eta + 1)) ** mpow - 1.0
    hi = 1.0 - (2 * (1 - u) + 2 * (u - 0.5) * (1 - d2) ** (eta + 1)) ** mpow
    delta = np.where(u < 0.5, lo, hi)
    return _offspring(np.where(_mutation_mask(io, p[0]), X + delta * span, X))


def _search_mu_uniform(io, p):
    X = io.solutions.decisions.astype(float)
    fresh = io.rng.uniform(io.problem.lower, io.problem.upper, size=X.shape)
    return _offspring(np.where(_mutation_mask(io, p[0]), fresh, X))


def de_mutant(base: np.ndarray, x_r1: np.ndarray, x_r2: np.ndarray, F: float) -> np.ndarray:
    return base + F * (x_r1 - x_r2)


def _binomial(rng, X, V, cr):
    n, d = X.shape
    mask = rng.random((n, d)) < cr
    mask[np.arange(n), rng.integers(0, d, n)] = True
    return np.where(mask, V, X)


def _search_de(io, p, variant):
    S = io.solutions
    X = S.decisions.astype(float)
    n = S.size
    F, cr = p[0], p[1]
    if variant == "random":
        r = _distinct_others(io.rng, n, 3)
        V = de_mutant(X[r[:, 0]], X[r[:, 1]], X[r[:, 2]], F)
    else:
        r = _distinct_others(io.rng, n, 2)
        V = de_mutant(X, X[r[:, 0]], X[r[:, 1]], F)
        if variant == "current_best" and S.evaluated.any():
            V = V + F * (X[S.best_index()] - X)
    return _offspring(_binomial(io.rng, X, V, cr))


def _reinit(io, p):
    return _offspring(_random_like(io))


def _random_like(io):
    shape = io.solutions.decisions.shape
    if io.problem.kind == DISCRETE:
        return io.rng.integers(io.problem.lower, io.problem.upper + 1, size=shape)
    return io.rng.uniform(io.problem.lower, io.problem.upper, size=shape)


# --- stateful: PSO, EDA, CMA

def _check_dim(state, d):
    if "dim" in state and state["dim"] != d:
        raise DimensionMismatch(f"operator state has dimension {state['dim']}, input has {d}")
    state["dim"] = d


def _search_pso(io, p):
    S, st, rng = io.solutions, io.state, io.rng
    X = S.decisions.astype(float)
    n, d = X.shape
    _check_dim(st, d)
    f = np.where(S.evaluated, S.fitness, np.inf)
    if st.get("n") != n:
        st.update(n=n, velocity=np.zeros((n, d)), pbest_x=X.copy(), pbest_f=f.copy())
    else:
        better = f < st["pbest_f"]
        st["pbest_x"][better] = X[better]
        st["pbest_f"][better] = f[better]
    w, c1, c2 = p
    g = st["pbest_x"][np.argmin(st["pbest_f"])]
    v = (w * st["velocity"] + c1 * rng.random((n, d)) * (st["pbest_x"] - X)
         + c2 * rng.random((n, d)) * (g - X))
    vmax = _span(io.problem)
    v = np.clip(v, -vmax, vmax)
    st["velocity"] = v
    return _offspring(X + v)


def _search_eda(io, p):
    S, st, rng = io.solutions, io.state, io.rng
    X = S.decisions.astype(float)
    n, d = X.shape
    _check_dim(st, d)
    if not st.get("model"):
        st["model"] = "uniform"
    if S.evaluated.all():
        k = max(1, int(math.ceil(p[0] * n)))
        top = X[np.argsort(S.fitness, kind="stable")[:k]]
        st.update(model="gaussian", mean=top.mean(axis=0),
                  var=np.maximum(top.var(axis=0), EDA_VAR_FLOOR))
    if st["model"] == "uniform":
        return _offspring(rng.uniform(io.problem.lower, io.problem.upper, size=X.shape))
    return _offspring(st["mean"] + np.sqrt(st["var"]) * rng.standard_normal(X.shape))


def _cma_init(st, X, sigma, n):
    d = X.shape[1]
    mu = max(1, n // 2)
    w = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    w /= w.sum()
    mueff = 1.0 / np.sum(w ** 2)
    cs = (mueff + 2) / (d + mueff + 5)
    st.update(
        mean=X.mean(axis=0), sigma=sigma, C=np.eye(d), pc=np.zeros(d), ps=np.zeros(d),
        weights=w, mueff=mueff, cs=cs, gen=0,
        ds=1 + 2 * max(0.0, math.sqrt((mueff - 1) / (d + 1)) - 1) + cs,
        cc=(4 + mueff / d) / (d + 4 + 2 * mueff / d),
        c1=2 / ((d + 1.3) ** 2 + mueff),
        chi=math.sqrt(d) * (1 - 1 / (4 * d) + 1 / (21 * d * d)),
    )
    st["cmu"] = min(1 - st["c1"], 2 * (mueff - 2 + 1 / mueff) / ((d + 2) ** 2 + mueff))


def _cma_update(st, X, f):
    d = X.shape[1]
    w = st["weights"]
    mu = min(w.size, X.shape[0])
    w = w[:mu] / w[:mu].sum()
    best = X[np.argsort(f, kind="stable")[:mu]]
    old = st["mean"]
    new_mean = w @ best
    st["mean"] = new_mean
    sigma = st["sigma"]
    if sigma <= 0:
        return
    vals, vecs = np.linalg.eigh(st["C"])
    vals = np.maximum(vals, 1e-20)
    inv_sqrt = vecs @ np.diag(vals ** -0.5) @ vecs.T
    step = (new_mean - old) / sigma
    cs, cc, c1, cmu, mueff = st["cs"], st["cc"], st["c1"], st["cmu"], st["mueff"]
    st["gen"] += 1
    st["ps"] = (1 - cs) * st["ps"] + math.sqrt(cs * (2 - cs) * mueff) * (inv_sqrt @ step)
    norm_ps = np.linalg.norm(st["ps"])
    hs = norm_ps / math.sqrt(1 - (1 - cs) ** (2 * st["gen"])) < (1.4 + 2 / (d + 1)) * st["chi"]
    st["pc"] = (1 - cc) * st["pc"] + hs * math.sqrt(cc * (2 - cc) * mueff) * step
    y = (best - old) / sigma
    rank_mu = (w[:, None] * y).T @ y
    C = ((1 - c1 - cmu) * st["C"]
         + c1 * (np.outer(st["pc"], st["pc"]) + (1 - hs) * cc * (2 - cc) * st["C"])
         + cmu * rank_mu)
    st["C"] = (C + C.T) / 2
    st["sigma"] = sigma * math.exp(min(1.0, (cs / st["ds"]) * (norm_ps / st["chi"] - 1)))


def _search_cma(io, p):
    S, st, rng = io.solutions, io.state, io.rng
    X = S.decisions.astype(float)
    n, d = X.shape
    _check_dim(st, d)
    if "mean" not in st:
        _cma_init(st, X, float(p[0]) * float(np.mean(_span(io.problem))), n)
    elif S.evaluated.all():
        _cma_update(st, X, S.fitness)
    vals, vecs = np.linalg.eigh(st["C"])
    A = vecs * np.sqrt(np.maximum(vals, 0.0))
    Z = rng.standard_normal((n, d))
    return _offspring(st["mean"] + st["sigma"] * Z @ A.T)


# ---------------------------------------------------------------------------
# discrete search

def _search_reset_one(io, p):
    X = io.solutions.decisions.copy()
    n, d = X.shape
    j = io.rng.integers(0, d, n)
    X[np.arange(n), j] = io.rng.integers(io.problem.lower[j], io.problem.upper[j] + 1)
    return _offspring(X)


def _search_reset_rand(io, p):
    X = io.solutions.decisions
    return _offspring(np.where(_mutation_mask(io, p[0]), _random_like(io), X))


def _search_reset_creep(io, p):
    X = io.solutions.decisions
    step = io.rng.choice(np.array([-1, 1]), size=X.shape)
    return _offspring(np.where(_mutation_mask(io, p[0]), X + step, X))


# ---------------------------------------------------------------------------
# update

def _update_always(io, p):
    S, new = io.solutions, io.new
    n = S.size
    if new.size >= n:
        return new.take(np.arange(n))
    fill = np.argsort(np.where(S.evaluated, S.fitness, np.inf), kind="stable")[: n - new.size]
    return SolutionSet.concat(new, S.take(fill))


def _update_greedy(io, p):
    pool = SolutionSet.concat(io.solutions, io.new)
    order = np.argsort(pool.fitness, kind="stable")[: io.solutions.size]
    return pool.take(order)


def _update_pairwise(io, p):
    S, new = io.solutions, io.new
    out = S.take(np.arange(S.size))
    m = min(S.size, new.size)
    take = new.fitness[:m] <= S.fitness[:m]
    idx = np.flatnonzero(take)
    out.decisions[idx] = new.decisions[idx]
    out.fitness[idx] = new.fitness[idx]
    out.evaluated[idx] = True
    return out


def _update_round_robin(io, p):
    pool = SolutionSet.concat(io.solutions, io.new)
    m = pool.size
    q = int(min(p[0], m - 1))
    if q < 1:
        return pool.take(np.arange(io.solutions.size))
    opp = _distinct_others(io.rng, m, q)
    wins = (pool.fitness[:, None] <= pool.fitness[opp]).sum(axis=1)
    order = np.lexsort((pool.fitness, -wins))[: io.solutions.size]
    return pool.take(order)


def _update_simulated_annealing(io, p):
    S, new, st = io.solutions, io.new, io.state
    if "temperature" not in st:
        f = S.fitness[np.isfinite(S.fitness)]
        scale = float(np.std(f)) if f.size > 1 and np.std(f) > 0 else max(abs(float(np.mean(f))) if f.size else 1.0, 1.0)
        st["temperature"] = p[0] * scale
    T = st["temperature"]
    out = S.take(np.arange(S.size))
    m = min(S.size, new.size)
    delta = new.fitness[:m] - S.fitness[:m]
    with np.errstate(over="ignore", invalid="ignore"):
        prob = np.where(delta <= 0, 1.0, np.exp(-delta / T) if T > 0 else 0.0)
    accept = np.flatnonzero(io.rng.random(m) < prob)
    out.decisions[accept] = new.decisions[accept]
    out.fitness[accept] = new.fitness[accept]
    out.evaluated[accept] = True
    st["temperature"] = T * p[1]
    return out


# ---------------------------------------------------------------------------
# registry

P = Param
_RATE = P("rate", 0.0, 1.0, 0.9)
_PROB = P("prob", 0.0, 1.0, 0.1)
_ETA = P("eta", 1.0, 50.0, 20.0)
_DE = (P("F", 0.0, 1.0, 0.5), P("CR", 0.0, 1.0, 0.9))


def _e(op_id, role, kind, params, arity, fn, desc, aux=()):
    return OperatorCatalogEntry(op_id, role, kind, tuple(params), arity, tuple(aux), desc, fn)


CHOOSE_OPS = [
    _e("choose_traverse", CHOOSE, BOTH, [], "population", _choose_traverse,
       "choose each current solution to search from"),
    _e("choose_roulette_wheel", CHOOSE, BOTH, [], "population", _choose_roulette,
       "fitness-proportional selection (minimisation)"),
    _e("choose_tournament", CHOOSE, BOTH, [P("k", 2, 50, 2, integer=True)], "population",
       _choose_tournament, "k-tournament selection, k clipped to |S|"),
    _e("choose_cluster", CHOOSE, BOTH,
       [P("n_clusters", 2, 10, 5, integer=True), P("p_one", 0.0, 1.0, 0.8),
        P("p_center", 0.0, 1.0, 0.4)], "population", _choose_cluster,
       "k-means grouping; mates drawn from one cluster (niche) or two clusters"),
]

CONTINUOUS_SEARCH_OPS = [
    _e("cross_arithmetic", SEARCH, CONTINUOUS, [_RATE], "2", _cross_arithmetic,
       "whole arithmetic crossover"),
    _e("cross_sim_binary", SEARCH, CONTINUOUS, [_RATE, _ETA], "2", _cross_sim_binary,
       "simulated binary crossover"),
    _e("cross_point_one", SEARCH, BOTH, [_RATE], "2", _cross_point_one, "one-point crossover"),
    _e("cross_point_two", SEARCH, BOTH, [_RATE], "2", _cross_point_two, "two-point crossover"),
    _e("cross_point_n", SEARCH, BOTH, [_RATE, P("n_points", 1, 10, 3, integer=True)], "2",
       _cross_point_n, "n-point crossover"),
    _e("cross_point_uniform", SEARCH, BOTH, [P("rate", 0.0, 1.0, 0.5)], "2",
       _cross_point_uniform, "uniform crossover, rate = per-gene swap probability"),
    _e("search_cma", SEARCH, CONTINUOUS, [P("sigma", 0.0, 1.0, 0.3)], "population",
       _search_cma, "CMA-ES sampling with rank-one/rank-mu covariance and CSA step size",
       aux=("mean", "sigma", "C", "pc", "ps")),
    _e("search_eda", SEARCH, CONTINUOUS, [P("select", 0.1, 1.0, 0.5)], "population",
       _search_eda, "univariate Gaussian estimation of distribution", aux=("mean", "var")),
    _e("search_mu_cauchy", SEARCH, CONTINUOUS, [_PROB, P("scale", 0.0, 1.0, 0.1)], "1",
       _search_mu_cauchy, "Cauchy mutation"),
    _e("search_mu_gaussian", SEARCH, CONTINUOUS, [_PROB, P("sigma", 0.0, 1.0, 0.1)], "1",
       _search_mu_gaussian, "Gaussian mutation"),
    _e("search_mu_polynomial", SEARCH, CONTINUOUS, [_PROB, _ETA], "1", _search_mu_polynomial,
       "polynomial mutation"),
    _e("search_mu_uniform", SEARCH, CONTINUOUS, [_PROB], "1", _search_mu_uniform,
       "uniform mutation"),
    _e("search_pso", SEARCH, CONTINUOUS,
       [P("w", 0.0, 1.0, 0.7298), P("c1", 0.0, 2.5, 1.4962), P("c2", 0.0, 2.5, 1.4962)],
       "population", _search_pso, "particle fly with inertia weight",
       aux=("velocity", "pbest_x", "pbest_f")),
    _e("search_de_random", SEARCH, CONTINUOUS, _DE, "population",
       lambda io, p: _search_de(io, p, "random"), "rand/1 differential mutation + binomial crossover"),
    _e("search_de_current", SEARCH, CONTINUOUS, _DE, "population",
       lambda io, p: _search_de(io, p, "current"), "current/1 differential mutation + binomial crossover"),
    _e("search_de_current_best", SEARCH, CONTINUOUS, _DE, "population",
       lambda io, p: _search_de(io, p, "current_best"),
       "current-to-best/1 differential mutation + binomial crossover"),
    _e("reinit_continuous", SEARCH, CONTINUOUS, [], "1", _reinit, "uniform reinitialisation"),
]

DISCRETE_SEARCH_OPS = [
    *[e for e in CONTINUOUS_SEARCH_OPS if e.kind == BOTH],
    _e("search_reset_one", SEARCH, DISCRETE, [], "1", _search_reset_one,
       "reset one random variable to a random value"),
    _e("search_reset_rand", SEARCH, DISCRETE, [_PROB], "1", _search_reset_rand,
       "reset each variable with a probability"),
    _e("search_reset_creep", SEARCH, DISCRETE, [_PROB], "1", _search_reset_creep,
       "add +-1 to each variable with a probability, clamped to the alphabet"),
    _e("reinit_discrete", SEARCH, DISCRETE, [], "1", _reinit, "uniform reinitialisation"),
]

UPDATE_OPS = [
    _e("update_always", UPDATE, BOTH, [], "population", _update_always, "always take S_new"),
    _e("update_greedy", UPDATE, BOTH, [], "population", _update_greedy, "best |S| of S and S_new"),
    _e("update_pairwise", UPDATE, BOTH, [], "population", _update_pairwise,
       "better of each (old, new) pair"),
    _e("update_round_robin", UPDATE, BOTH, [P("opponents", 1, 10, 10, integer=True)],
       "population", _update_round_robin, "round-robin tournament over S and S_new"),
    _e("update_simulated_annealing", UPDATE, BOTH,
       [P("t0", 1e-3, 1.0, 0.1), P("cooling", 0.5, 1.0, 0.95)], "population",
       _update_simulated_annealing, "Metropolis acceptance with geometric cooling",
       aux=("temperature",)),
]

REGISTRY: dict[str, OperatorCatalogEntry] = {
    e.op_id: e for e in CHOOSE_OPS + CONTINUOUS_SEARCH_OPS + DISCRETE_SEARCH_OPS + UPDATE_OPS
}
ALIASES = {"choose_nich": "choose_cluster", "cross_arithmetric": "cross_arithmetic"}
STATEFUL = ("search_cma", "search_eda", "search_pso")


def get(op_id: str) -> OperatorCatalogEntry:
    op_id = ALIASES.get(op_id, op_id)
    try:
        return REGISTRY[op_id]
    except KeyError:
        raise OperatorError(f"unknown operator {op_id!r}") from None


def catalog(problem_kind: str) -> list[OperatorCatalogEntry]:
    """Stable ordering: choose, then search for the kind, then update. Defines encoding indices."""
    if problem_kind == CONTINUOUS:
        search = CONTINUOUS_SEARCH_OPS
    elif problem_kind == DISCRETE:
        search = DISCRETE_SEARCH_OPS
    else:
        raise OperatorError(f"unknown problem kind {problem_kind!r}")
    return list(CHOOSE_OPS) + list(search) + list(UPDATE_OPS)


def catalog_table(problem_kind: str) -> list[dict]:
    rows = []
    for i, e in enumerate(catalog(problem_kind)):
        rows.append({
            "index": i, "op_id": e.op_id, "role": e.role, "kind": e.kind, "arity": e.arity,
            "needs_aux": list(e.needs_aux), "description": e.description,
            "params": [{"name": p.name, "low": p.low, "high": p.high, "default": p.default,
                        "integer": p.integer} for p in e.params],
        })
    return rows


def check_params(entry: OperatorCatalogEntry, params: Sequence[float]) -> tuple[float, ...]:
    params = tuple(float(v) for v in params)
    if len(params) != entry.n_params:
        raise ParamSchemaError(
            f"{entry.op_id} expects {entry.n_params} parameters, got {len(params)}")
    for spec, v in zip(entry.params, params):
        if not (spec.low <= v <= spec.high) or (spec.integer and v != round(v)):
            raise ParamSchemaError(
                f"{entry.op_id}.{spec.name}={v} outside [{spec.low}, {spec.high}]")
    return params


def apply(entry: OperatorCatalogEntry | str, io: OperatorIO) -> SolutionSet:
    if isinstance(entry, str):
        entry = get(entry)
    params = check_params(entry, io.params)
    if not entry.supports(io.problem.kind):
        raise KindMismatch(f"{entry.op_id} does not support {io.problem.kind} problems")
    if entry.role == UPDATE and io.new is None:
        raise ArityError(f"{entry.op_id} needs both S and S_new")
    if entry.arity == "2" and io.solutions.size < 2:
        raise ArityError(f"{entry.op_id} needs at least 2 parents, got {io.solutions.size}")
    out = entry.fn(io, params)
    if entry.role == SEARCH:
        out = SolutionSet.new(repair(io.problem, out.decisions))
    return out


def stateful_search_step(entry: OperatorCatalogEntry | str, io: OperatorIO,
                         aux_state: dict | None = None) -> tuple[SolutionSet, dict]:
    """Functional form of one PSO/EDA/CMA generation: returns offspring and the next state."""
    if isinstance(entry, str):
        entry = get(entry)
    if entry.op_id not in STATEFUL:
        raise OperatorError(f"{entry.op_id} is not a stateful search operator")
    state = copy.deepcopy(aux_state) if aux_state else {}
    out = apply(entry, replace(io, state=state))
    return out, state
