"""Algorithm graphs: operator-instance DAGs, validity rules, text format, encoding and moves.

A graph holds ``q`` pathways. Each pathway is a route ``choose -> search+ -> update``
identified by its entry vertex:

* entry is a choose vertex: the route follows its single successor chain;
* entry is a search vertex: its (shared) choose predecessor is prepended, which
  lets two pathways branch from one choose vertex.

Pathways are linked either through a shared choose/update vertex or by an
``update -> choose`` edge. The loop-closure edges of the prototype are never
stored, so the explicit edge set stays acyclic. The entry vertex carries the
pathway's loop condition.
"""
from __future__ import annotations

import hashlib
import heapq
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import operators as ops
from .operators import CHOOSE, SEARCH, UPDATE
from .problems import CONTINUOUS, DISCRETE

ALWAYS = "always"
BUDGET_CONSUMED = "budget_consumed"
STAGNATION = "stagnation"
LOCAL_OPTIMUM = "local_optimum"
CONDITION_KINDS = (ALWAYS, BUDGET_CONSUMED, STAGNATION, LOCAL_OPTIMUM)
SCHEDULES = ("serial", "parallel")
_ID_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class GraphError(ValueError):
    pass


class InvalidGraphError(GraphError):
    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__("invalid graph: " + "; ".join(f"[{r}] {m}" for r, m in report.issues))


class ParseError(GraphError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass(frozen=True)
class ConditionSpec:
    kind: str = ALWAYS
    threshold: int = 0

    def __post_init__(self):
        if self.kind not in CONDITION_KINDS:
            raise GraphError(f"unknown condition kind {self.kind!r}")
        if self.kind in (BUDGET_CONSUMED, STAGNATION) and self.threshold < 1:
            raise GraphError(f"{self.kind} needs a threshold >= 1")
        if self.kind in (ALWAYS, LOCAL_OPTIMUM) and self.threshold != 0:
            object.__setattr__(self, "threshold", 0)

    def text(self) -> str:
        return f"{self.kind}:{self.threshold}" if self.kind in (BUDGET_CONSUMED, STAGNATION) else self.kind

    @classmethod
    def parse(cls, text: str) -> "ConditionSpec":
        kind, _, thr = text.partition(":")
        return cls(kind, int(thr) if thr else 0)


@dataclass(frozen=True)
class OperatorVertex:
    instance_id: str
    role: str
    op_id: str
    params: tuple[float, ...] = ()
    condition: ConditionSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))


def _id_key(vid: str):
    m = re.fullmatch(r"v(\d+)", vid)
    return (0, int(m.group(1)), "") if m else (1, 0, vid)


@dataclass(frozen=True, eq=False)
class AlgorithmGraph:
    vertices: tuple[OperatorVertex, ...]
    edges: tuple[tuple[str, str], ...]
    pathways: tuple[str, ...]
    kind: str = CONTINUOUS
    schedule: str = "serial"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "vertices",
                           tuple(sorted(self.vertices, key=lambda v: _id_key(v.instance_id))))
        object.__setattr__(self, "edges", tuple(sorted(set((str(a), str(b)) for a, b in self.edges),
                                                       key=lambda e: (_id_key(e[0]), _id_key(e[1])))))
        object.__setattr__(self, "pathways", tuple(self.pathways))
        object.__setattr__(self, "metadata", dict(self.metadata))

    # structural equality ignores provenance metadata
    def _key(self):
        return (self.vertices, self.edges, self.pathways, self.kind, self.schedule)

    def __eq__(self, other):
        return isinstance(other, AlgorithmGraph) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    @property
    def q(self) -> int:
        return len(self.pathways)

    def vertex(self, vid: str) -> OperatorVertex:
        for v in self.vertices:
            if v.instance_id == vid:
                return v
        raise KeyError(vid)

    @property
    def ids(self) -> list[str]:
        return [v.instance_id for v in self.vertices]

    def successors(self, vid: str) -> list[str]:
        return [b for a, b in self.edges if a == vid]

    def predecessors(self, vid: str) -> list[str]:
        return [a for a, b in self.edges if b == vid]

    def route(self, entry: str) -> list[str]:
        """Vertex sequence of the pathway starting at ``entry``; raises GraphError if malformed."""
        ids = set(self.ids)
        if entry not in ids:
            raise GraphError(f"pathway entry {entry} is not a vertex")
        first = self.vertex(entry)
        path: list[str] = []
        if first.role == SEARCH:
            preds = self.predecessors(entry)
            if len(preds) != 1 or self.vertex(preds[0]).role != CHOOSE:
                raise GraphError(f"search entry {entry} needs exactly one choose predecessor")
            path.append(preds[0])
        elif first.role != CHOOSE:
            raise GraphError(f"pathway entry {entry} must be a choose or search vertex")
        path.append(entry)
        cur = entry
        while self.vertex(cur).role != UPDATE:
            succ = self.successors(cur)
            if len(succ) != 1:
                raise GraphError(f"vertex {cur} on pathway {entry} must have exactly one successor")
            cur = succ[0]
            if cur in path:
                raise GraphError(f"pathway {entry} revisits {cur}")
            path.append(cur)
        return path

    def routes(self) -> list[list[str]]:
        return [self.route(e) for e in self.pathways]

    def search_chain(self, entry: str) -> list[str]:
        return [v for v in self.route(entry) if self.vertex(v).role == SEARCH]

    def topo_order(self) -> list[str]:
        indeg = {v: 0 for v in self.ids}
        for _, b in self.edges:
            indeg[b] += 1
        heap = [(_id_key(v), v) for v, d in indeg.items() if d == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            _, v = heapq.heappop(heap)
            order.append(v)
            for s in self.successors(v):
                indeg[s] -= 1
                if indeg[s] == 0:
                    heapq.heappush(heap, (_id_key(s), s))
        if len(order) != len(indeg):
            raise GraphError("graph contains a cycle")
        return order

    def with_metadata(self, **meta) -> "AlgorithmGraph":
        return AlgorithmGraph(self.vertices, self.edges, self.pathways, self.kind,
                              self.schedule, {**self.metadata, **meta})


# ---------------------------------------------------------------------------
# validation

@dataclass
class ValidationReport:
    issues: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def __bool__(self) -> bool:
        return self.ok

    def add(self, rule: str, message: str) -> None:
        self.issues.append((rule, message))

    @property
    def rules(self) -> set[str]:
        return {r for r, _ in self.issues}

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "\n".join(f"[{r}] {m}" for r, m in self.issues)


def validate(graph: AlgorithmGraph, max_pathway_ops: int = 6, max_pathways: int = 2) -> ValidationReport:
    rep = ValidationReport()
    ids = graph.ids
    idset = set(ids)
    if len(ids) < 3:
        rep.add("size", f"graph has {len(ids)} vertices; at least three are required")
    if len(idset) != len(ids):
        rep.add("ids", "duplicate vertex ids")
    for v in graph.vertices:
        if not _ID_RE.match(v.instance_id):
            rep.add("ids", f"malformed vertex id {v.instance_id!r}")
        try:
            entry = ops.get(v.op_id)
        except ops.OperatorError:
            rep.add("operator", f"{v.instance_id}: unknown operator {v.op_id}")
            continue
        if entry.op_id != v.op_id:
            rep.add("operator", f"{v.instance_id}: use canonical id {entry.op_id}, not {v.op_id}")
        if entry.role != v.role:
            rep.add("roles", f"{v.instance_id}: {v.op_id} has role {entry.role}, vertex says {v.role}")
        if not entry.supports(graph.kind):
            rep.add("kind", f"{v.instance_id}: {v.op_id} does not support {graph.kind} problems")
        try:
            ops.check_params(entry, v.params)
        except ops.ParamSchemaError as exc:
            rep.add("params", f"{v.instance_id}: {exc}")
    if graph.kind not in (CONTINUOUS, DISCRETE):
        rep.add("kind", f"unknown kind {graph.kind!r}")
    if graph.schedule not in SCHEDULES:
        rep.add("schedule", f"unknown schedule {graph.schedule!r}")

    bad_edges = False
    for a, b in graph.edges:
        if a not in idset or b not in idset:
            rep.add("edges", f"edge {a} -> {b} references a missing vertex")
            bad_edges = True
        elif a == b:
            rep.add("acyclic", f"self-loop on {a}")
            bad_edges = True
    if bad_edges or rep.rules & {"ids"}:
        return rep
    try:
        graph.topo_order()
    except GraphError:
        rep.add("acyclic", "explicit edges contain a cycle")
        return rep

    if ids and not _weakly_connected(ids, graph.edges):
        rep.add("connectivity", "graph has isolated sub-graphs")

    roles = {v.instance_id: v.role for v in graph.vertices}
    for v in ids:
        succ, pred = graph.successors(v), graph.predecessors(v)
        r = roles[v]
        if r == SEARCH and (len(succ) != 1 or len(pred) != 1):
            rep.add("workflow", f"search vertex {v} needs one predecessor and one successor")
        if r == CHOOSE and any(roles[s] != SEARCH for s in succ):
            rep.add("workflow", f"choose vertex {v} may only feed search vertices")
        if r == CHOOSE and any(roles[p] != UPDATE for p in pred):
            rep.add("workflow", f"choose vertex {v} may only follow update vertices")
        if r == UPDATE and any(roles[s] != CHOOSE for s in succ):
            rep.add("workflow", f"update vertex {v} may only lead to a choose vertex")
        if r == SEARCH and pred and roles[pred[0]] == UPDATE:
            rep.add("workflow", f"search vertex {v} cannot follow an update vertex")

    q = len(graph.pathways)
    if q < 1:
        rep.add("pathways", "graph declares no pathway")
    if q > max_pathways:
        rep.add("pathways", f"{q} pathways exceed the cap of {max_pathways}")
    if len(set(graph.pathways)) != q:
        rep.add("pathways", "duplicate pathway entries")
    covered: set[str] = set()
    for e in graph.pathways:
        try:
            path = graph.route(e)
        except GraphError as exc:
            rep.add("pathways", str(exc))
            continue
        covered.update(path)
        n_search = sum(roles[v] == SEARCH for v in path)
        if roles[path[0]] != CHOOSE or n_search < 1 or roles[path[-1]] != UPDATE:
            rep.add("roles", f"pathway {e} lacks a choose, search or update vertex")
        if n_search > max_pathway_ops:
            rep.add("pathway_length", f"pathway {e} has {n_search} search vertices (cap {max_pathway_ops})")
        if roles[e] == CHOOSE and len(graph.successors(e)) != 1:
            rep.add("pathways", f"choose entry {e} must have a single successor")
    for c in ids:
        if roles[c] == CHOOSE and len(graph.successors(c)) > 1:
            if any(s not in graph.pathways for s in graph.successors(c)):
                rep.add("pathways", f"branches of shared choose {c} must all be pathway entries")
    missing = idset - covered
    if missing and not rep.rules & {"pathways"}:
        rep.add("coverage", f"vertices not on any pathway: {sorted(missing, key=_id_key)}")
    for v in graph.vertices:
        if v.condition is not None and v.instance_id not in graph.pathways:
            rep.add("conditions", f"condition on {v.instance_id}, which is not a pathway entry")
    return rep


def _weakly_connected(ids: Sequence[str], edges) -> bool:
    adj = {v: set() for v in ids}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    seen = {ids[0]}
    stack = [ids[0]]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(ids)


def entry_condition(graph: AlgorithmGraph, entry: str) -> ConditionSpec:
    return graph.vertex(entry).condition or ConditionSpec(ALWAYS)


# ---------------------------------------------------------------------------
# text format

def _fmt_param(entry: ops.OperatorCatalogEntry | None, i: int, v: float) -> str:
    if entry is not None and i < entry.n_params and entry.params[i].integer and v == round(v):
        return str(int(v))
    return repr(float(v))


def serialize(graph: AlgorithmGraph, include_meta: bool = True) -> str:
    lines = [f"graph kind={graph.kind} q={graph.q} schedule={graph.schedule} "
             f"pathways={','.join(graph.pathways)}"]
    if include_meta:
        for k in sorted(graph.metadata):
            lines.append(f"meta {k}={graph.metadata[k]}")
    for v in graph.vertices:
        try:
            entry = ops.get(v.op_id)
        except ops.OperatorError:
            entry = None
        parts = [v.instance_id, v.role, v.op_id] + [_fmt_param(entry, i, p) for i, p in enumerate(v.params)]
        if v.condition is not None:
            parts.append(f"cond={v.condition.text()}")
        lines.append(" ".join(parts))
    for a, b in graph.edges:
        lines.append(f"{a} -> {b}")
    return "\n".join(lines) + "\n"


def deserialize(text: str) -> AlgorithmGraph:
    raw = text.splitlines()
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(raw) if ln.strip() and not ln.strip().startswith("#")]
    if not lines:
        raise ParseError(1, "empty graph text")
    lineno, header = lines[0]
    tokens = header.split()
    if tokens[0] != "graph":
        raise ParseError(lineno, "expected header line starting with 'graph'")
    fields = {}
    for tok in tokens[1:]:
        if "=" not in tok:
            raise ParseError(lineno, f"malformed header field {tok!r}")
        k, v = tok.split("=", 1)
        fields[k] = v
    for req in ("q", "pathways"):
        if req not in fields:
            raise ParseError(lineno, f"header lacks '{req}='")
    pathways = tuple(p for p in fields["pathways"].split(",") if p)
    try:
        q = int(fields["q"])
    except ValueError:
        raise ParseError(lineno, f"q must be an integer, got {fields['q']!r}") from None
    if q != len(pathways):
        raise ParseError(lineno, f"q={q} but {len(pathways)} pathway entries listed")
    meta, vertices, edges = {}, [], []
    for lineno, ln in lines[1:]:
        tokens = ln.split()
        if tokens[0] == "meta":
            k, sep, v = ln[len("meta"):].strip().partition("=")
            if not sep:
                raise ParseError(lineno, "meta line needs key=value")
            meta[k] = v
        elif len(tokens) == 3 and tokens[1] == "->":
            edges.append((tokens[0], tokens[2]))
        elif "->" in tokens:
            raise ParseError(lineno, "edge lines must read 'src -> dst'")
        else:
            vertices.append(_parse_vertex(lineno, tokens))
    return AlgorithmGraph(tuple(vertices), tuple(edges), pathways,
                          kind=fields.get("kind", CONTINUOUS),
                          schedule=fields.get("schedule", "serial"), metadata=meta)


def _parse_vertex(lineno: int, tokens: list[str]) -> OperatorVertex:
    if len(tokens) < 3:
        raise ParseError(lineno, "vertex lines need 'id role op_id [params...] [cond=...]'")
    vid, role, op_id = tokens[:3]
    if not _ID_RE.match(vid) or vid in ("graph", "meta"):
        raise ParseError(lineno, f"invalid vertex id {vid!r}")
    if role not in (CHOOSE, SEARCH, UPDATE):
        raise ParseError(lineno, f"unknown role {role!r}")
    try:
        op_id = ops.get(op_id).op_id
    except ops.OperatorError as exc:
        raise ParseError(lineno, str(exc)) from None
    params, cond = [], None
    for tok in tokens[3:]:
        if tok.startswith("cond="):
            try:
                cond = ConditionSpec.parse(tok[5:])
            except (GraphError, ValueError) as exc:
                raise ParseError(lineno, f"bad condition {tok!r}: {exc}") from None
        else:
            try:
                params.append(float(tok))
            except ValueError:
                raise ParseError(lineno, f"parameter {tok!r} is not a number") from None
    return OperatorVertex(vid, role, op_id, tuple(params), cond)


def graph_hash(graph: AlgorithmGraph) -> str:
    return hashlib.sha256(serialize(graph, include_meta=False).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# fixed-size encoding

@dataclass(frozen=True, eq=False)
class GraphEncoding:
    adjacency: np.ndarray   # (n_ops, n_ops) 0/1
    attributes: np.ndarray  # (sum of param counts,)
    present: np.ndarray     # (n_ops,) bool

    def flat(self) -> np.ndarray:
        return np.concatenate([self.adjacency.ravel(), self.attributes])

    def __eq__(self, other):
        return (isinstance(other, GraphEncoding) and np.array_equal(self.adjacency, other.adjacency)
                and np.array_equal(self.attributes, other.attributes)
                and np.array_equal(self.present, other.present))


def attribute_offsets(catalog: Sequence[ops.OperatorCatalogEntry]) -> dict[str, tuple[int, int]]:
    out, pos = {}, 0
    for e in catalog:
        out[e.op_id] = (pos, pos + e.n_params)
        pos += e.n_params
    return out


def raw_dimension(catalog: Sequence[ops.OperatorCatalogEntry]) -> int:
    n = len(catalog)
    return n * n + sum(e.n_params for e in catalog)


def encode(graph: AlgorithmGraph, catalog: Sequence[ops.OperatorCatalogEntry],
           check: bool = True) -> GraphEncoding:
    if check:
        rep = validate(graph, max_pathway_ops=10 ** 6, max_pathways=10 ** 6)
        if not rep.ok:
            raise InvalidGraphError(rep)
    index = {e.op_id: i for i, e in enumerate(catalog)}
    offsets = attribute_offsets(catalog)
    n = len(catalog)
    adj = np.zeros((n, n))
    attrs = np.zeros(sum(e.n_params for e in catalog))
    present = np.zeros(n, dtype=bool)
    op_of = {v.instance_id: v.op_id for v in graph.vertices}
    for a, b in graph.edges:
        adj[index[op_of[a]], index[op_of[b]]] = 1.0
    for vid in graph.topo_order():
        v = graph.vertex(vid)
        if v.op_id not in index:
            raise GraphError(f"operator {v.op_id} is not in the catalog")
        present[index[v.op_id]] = True
        lo, hi = offsets[v.op_id]
        attrs[lo:hi] = v.params
    return GraphEncoding(adj, attrs, present)


# ---------------------------------------------------------------------------
# random graphs and neighbourhood moves

@dataclass(frozen=True)
class GraphConfig:
    max_pathways: int = 2
    max_pathway_ops: int = 6
    q: int | None = None
    n_search: int | None = None
    max_initial_search: int = 3
    p_two_pathways: float = 0.4
    p_shared_choose: float = 0.5
    condition_budgets: tuple[int, ...] = (20, 50, 100, 200, 500)
    max_stagnation: int = 5
    move_weights: tuple[float, ...] | None = None  # aligned with MOVES; None = uniform
    p_default_params: float = 0.0  # chance that a newly introduced operator starts at its defaults


MOVES = ("swap_op", "perturb_param", "insert_search", "delete_search", "rewire_edge",
         "toggle_condition")


class _Builder:
    def __init__(self, kind: str, rng: np.random.Generator, start: int = 0):
        self.kind, self.rng = kind, rng
        self.vertices: list[OperatorVertex] = []
        self.edges: list[tuple[str, str]] = []
        self.counter = start

    def add(self, role: str, op_id: str | None = None, params=None, condition=None) -> str:
        if op_id is None:
            op_id = random_op(role, self.kind, self.rng).op_id
        if params is None:
            params = random_params(ops.get(op_id), self.rng)
        vid = f"v{self.counter}"
        self.counter += 1
        self.vertices.append(OperatorVertex(vid, role, op_id, tuple(params), condition))
        return vid

    def chain(self, ids: Sequence[str]) -> None:
        self.edges.extend(zip(ids[:-1], ids[1:]))


def ops_for(role: str, kind: str) -> list[ops.OperatorCatalogEntry]:
    return [e for e in ops.catalog(kind) if e.role == role]


def random_op(role: str, kind: str, rng: np.random.Generator, exclude: str | None = None):
    choices = [e for e in ops_for(role, kind) if e.op_id != exclude]
    return choices[int(rng.integers(0, len(choices)))]


def random_params(entry: ops.OperatorCatalogEntry, rng: np.random.Generator) -> tuple[float, ...]:
    return tuple(p.sample(rng) for p in entry.params)


def random_condition(rng: np.random.Generator, config: GraphConfig) -> ConditionSpec:
    kind = CONDITION_KINDS[int(rng.integers(0, len(CONDITION_KINDS)))]
    if kind == BUDGET_CONSUMED:
        return ConditionSpec(kind, int(rng.choice(config.condition_budgets)))
    if kind == STAGNATION:
        return ConditionSpec(kind, int(rng.integers(1, config.max_stagnation + 1)))
    return ConditionSpec(kind)


def random_graph(catalog: Sequence[ops.OperatorCatalogEntry] | None, problem_kind: str,
                 rng: np.random.Generator, config: GraphConfig = GraphConfig()) -> AlgorithmGraph:
    """Sample a valid graph: one serial pathway, or two pathways that are chained or share a choose."""
    if catalog is not None and not [e for e in catalog if e.supports(problem_kind)]:
        raise GraphError(f"catalog has no operators for {problem_kind}")
    q = config.q or (2 if rng.random() < config.p_two_pathways else 1)
    q = max(1, min(q, config.max_pathways))
    cap = config.max_pathway_ops

    def n_search():
        if config.n_search is not None:
            return min(config.n_search, cap)
        return int(rng.integers(1, min(config.max_initial_search, cap) + 1))

    b = _Builder(problem_kind, rng)
    entries: list[str] = []
    if q == 1:
        c = b.add(CHOOSE, condition=ConditionSpec(ALWAYS))
        s = [b.add(SEARCH) for _ in range(n_search())]
        u = b.add(UPDATE)
        b.chain([c, *s, u])
        entries.append(c)
    elif rng.random() < config.p_shared_choose:
        c = b.add(CHOOSE)
        shared_update = b.add(UPDATE) if rng.random() < 0.5 else None
        for _ in range(q):
            m = n_search()
            s = [b.add(SEARCH, condition=random_condition(rng, config))]
            s += [b.add(SEARCH) for _ in range(m - 1)]
            u = shared_update or b.add(UPDATE)
            b.chain([c, *s, u])
            entries.append(s[0])
    else:
        prev_update = None
        for _ in range(q):
            c = b.add(CHOOSE, condition=random_condition(rng, config))
            s = [b.add(SEARCH) for _ in range(n_search())]
            u = b.add(UPDATE)
            b.chain([c, *s, u])
            if prev_update:
                b.edges.append((prev_update, c))
            prev_update = u
            entries.append(c)
    return AlgorithmGraph(tuple(b.vertices), tuple(b.edges), tuple(entries), kind=problem_kind)


def _move_params(entry: ops.OperatorCatalogEntry, rng: np.random.Generator, config: GraphConfig):
    if config.p_default_params and rng.random() < config.p_default_params:
        return entry.defaults()
    return random_params(entry, rng)


def _with_condition(v: OperatorVertex, cond: ConditionSpec | None) -> OperatorVertex:
    return OperatorVertex(v.instance_id, v.role, v.op_id, v.params, cond)


def _replace_vertex(graph: AlgorithmGraph, new: OperatorVertex) -> AlgorithmGraph:
    verts = tuple(new if v.instance_id == new.instance_id else v for v in graph.vertices)
    return AlgorithmGraph(verts, graph.edges, graph.pathways, graph.kind, graph.schedule, graph.metadata)


def _next_id(graph: AlgorithmGraph) -> str:
    nums = [_id_key(v)[1] for v in graph.ids if _id_key(v)[0] == 0]
    return f"v{max(nums, default=-1) + 1}"


def applicable_moves(graph: AlgorithmGraph, config: GraphConfig = GraphConfig()) -> list[str]:
    chains = [graph.search_chain(e) for e in graph.pathways]
    moves = ["swap_op"]
    if any(v.params for v in graph.vertices):
        moves.append("perturb_param")
    if any(len(c) < config.max_pathway_ops for c in chains):
        moves.append("insert_search")
    if any(len(c) > 1 for c in chains):
        moves.extend(["delete_search", "rewire_edge"])
    moves.append("toggle_condition")
    return moves


def insert_search(graph: AlgorithmGraph, pathway: int, position: int, op_id: str,
                  params: Sequence[float]) -> AlgorithmGraph:
    """Insert a search vertex at ``position`` of a pathway's search chain (0 = first)."""
    entry = graph.pathways[pathway]
    route = graph.route(entry)
    chain = [v for v in route if graph.vertex(v).role == SEARCH]
    new_id = _next_id(graph)
    pred = route[route.index(chain[0]) - 1] if position == 0 else chain[position - 1]
    succ = chain[position] if position < len(chain) else route[-1]
    edges = [e for e in graph.edges if e != (pred, succ)] + [(pred, new_id), (new_id, succ)]
    vertex = OperatorVertex(new_id, SEARCH, op_id, tuple(params))
    verts = list(graph.vertices)
    pathways = list(graph.pathways)
    if position == 0 and graph.vertex(entry).role == SEARCH:
        # new first search becomes the entry and takes over the loop condition
        old = graph.vertex(entry)
        vertex = _with_condition(vertex, old.condition)
        verts = [_with_condition(v, None) if v.instance_id == entry else v for v in verts]
        pathways[pathway] = new_id
    verts.append(vertex)
    return AlgorithmGraph(tuple(verts), tuple(edges), tuple(pathways), graph.kind, graph.schedule,
                          graph.metadata)


def delete_search(graph: AlgorithmGraph, vid: str) -> AlgorithmGraph:
    pred, succ = graph.predecessors(vid)[0], graph.successors(vid)[0]
    edges = [e for e in graph.edges if vid not in e] + [(pred, succ)]
    victim = graph.vertex(vid)
    verts = [v for v in graph.vertices if v.instance_id != vid]
    pathways = list(graph.pathways)
    if vid in pathways:
        pathways[pathways.index(vid)] = succ
        verts = [_with_condition(v, victim.condition) if v.instance_id == succ else v for v in verts]
    return AlgorithmGraph(tuple(verts), tuple(edges), tuple(pathways), graph.kind, graph.schedule,
                          graph.metadata)


def _move(graph: AlgorithmGraph, move: str, rng: np.random.Generator, config: GraphConfig) -> AlgorithmGraph:
    kind = graph.kind
    if move == "swap_op":
        v = graph.vertices[int(rng.integers(0, len(graph.vertices)))]
        entry = random_op(v.role, kind, rng, exclude=v.op_id)
        return _replace_vertex(graph, OperatorVertex(v.instance_id, v.role, entry.op_id,
                                                     _move_params(entry, rng, config), v.condition))
    if move == "perturb_param":
        cands = [v for v in graph.vertices if v.params]
        v = cands[int(rng.integers(0, len(cands)))]
        spec = ops.get(v.op_id).params
        i = int(rng.integers(0, len(v.params)))
        p = spec[i]
        step = rng.normal(0.0, 0.1 * (p.high - p.low))
        if p.integer:
            step = float(np.sign(step) * max(1, round(abs(step))))
        params = list(v.params)
        params[i] = p.clip(params[i] + step)
        return _replace_vertex(graph, OperatorVertex(v.instance_id, v.role, v.op_id, tuple(params), v.condition))
    chains = [graph.search_chain(e) for e in graph.pathways]
    if move == "insert_search":
        open_ = [j for j, c in enumerate(chains) if len(c) < config.max_pathway_ops]
        j = open_[int(rng.integers(0, len(open_)))]
        entry = random_op(SEARCH, kind, rng)
        pos = int(rng.integers(0, len(chains[j]) + 1))
        return insert_search(graph, j, pos, entry.op_id, _move_params(entry, rng, config))
    if move == "delete_search":
        long_ = [c for c in chains if len(c) > 1]
        c = long_[int(rng.integers(0, len(long_)))]
        return delete_search(graph, c[int(rng.integers(0, len(c)))])
    if move == "rewire_edge":
        js = [j for j, c in enumerate(chains) if len(c) > 1]
        j = js[int(rng.integers(0, len(js)))]
        c = chains[j]
        vid = c[int(rng.integers(0, len(c)))]
        v = graph.vertex(vid)
        g = delete_search(graph, vid)
        rest = g.search_chain(g.pathways[j])
        pos = int(rng.integers(0, len(rest) + 1))
        out = insert_search(g, j, pos, v.op_id, v.params)
        # keep the original id so only the wiring changes
        new_id = _next_id(g)
        return _rename(out, new_id, vid)
    if move == "toggle_condition":
        j = int(rng.integers(0, graph.q))
        v = graph.vertex(graph.pathways[j])
        cur = v.condition or ConditionSpec(ALWAYS)
        new = cur
        while new == cur:
            new = random_condition(rng, config)
        return _replace_vertex(graph, _with_condition(v, new))
    raise GraphError(f"unknown move {move!r}")


def _rename(graph: AlgorithmGraph, old: str, new: str) -> AlgorithmGraph:
    def r(x):
        return new if x == old else x
    verts = tuple(OperatorVertex(r(v.instance_id), v.role, v.op_id, v.params, v.condition)
                  for v in graph.vertices)
    return AlgorithmGraph(verts, tuple((r(a), r(b)) for a, b in graph.edges),
                          tuple(r(p) for p in graph.pathways), graph.kind, graph.schedule, graph.metadata)


def random_move(graph: AlgorithmGraph, rng: np.random.Generator, config: GraphConfig = GraphConfig(),
                max_tries: int = 50) -> tuple[str, AlgorithmGraph]:
    """One valid single-move neighbour, distinct from ``graph``; invalid draws are resampled."""
    moves = applicable_moves(graph, config)
    if config.move_weights is None:
        weights = np.full(len(moves), 1.0 / len(moves))
    else:
        w = dict(zip(MOVES, config.move_weights))
        weights = np.array([w[m] for m in moves], dtype=float)
        weights /= weights.sum()
    for _ in range(max_tries):
        move = moves[int(rng.choice(len(moves), p=weights))]
        cand = _move(graph, move, rng, config)
        if cand != graph and validate(cand, config.max_pathway_ops, config.max_pathways).ok:
            return move, cand
    raise GraphError("no valid move found")


def neighbors(graph: AlgorithmGraph, rng: np.random.Generator, config: GraphConfig = GraphConfig(),
              n: int = 10) -> list[AlgorithmGraph]:
    out = []
    for _ in range(n):
        move, cand = random_move(graph, rng, config)
        out.append(cand.with_metadata(move=move))
    return out
