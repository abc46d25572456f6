"""Finite fundamental graphs of periodic discrete multigraphs.

A d-periodic graph is represented by its finite quotient: a multigraph
(loops and parallel edges allowed) whose unoriented edges each carry an
integer translation index of length d, a phase in (-pi, pi], and whose
vertices carry a real potential. Each stored edge record fixes a
canonical orientation; the reverse orientation is synthesized on demand
with negated index and phase, so antisymmetry holds by construction.

The vertex degree counts oriented edges starting at the vertex, hence a
loop contributes 2 (many graph libraries count 1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    AlphaOutOfRangeError,
    BadIndexLengthError,
    BadParamsError,
    DisconnectedGraphError,
    GraphDataError,
    InconsistentEmbeddingError,
)

TWO_PI = 2.0 * math.pi


def reduce_angle(x: float) -> float:
    """Reduce an angle modulo 2*pi into (-pi, pi]."""
    r = math.remainder(x, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


def reduce_angles(x: np.ndarray) -> np.ndarray:
    """Vectorized reduction modulo 2*pi into (-pi, pi]."""
    r = np.remainder(np.asarray(x, dtype=float) + math.pi, TWO_PI) - math.pi
    return np.where(r == -math.pi, math.pi, r)


@dataclass(frozen=True)
class Edge:
    """Unoriented edge stored in its canonical orientation.

    The implicit reverse orientation carries index -index and phase -alpha.
    """

    tail: int
    head: int
    index: tuple[int, ...]
    alpha: float = 0.0

    @property
    def is_loop(self) -> bool:
        return self.tail == self.head


@dataclass(frozen=True, eq=False)
class OneForm:
    """Antisymmetric edge function with values in R^n.

    Values are stored on canonical orientations only, one row per edge;
    value(e, -1) is the negation. Magnetic forms (n=1, values modulo
    2*pi) are reduced into (-pi, pi] on construction.
    """

    values: np.ndarray
    magnetic: bool = False

    def __post_init__(self) -> None:
        v = np.asarray(self.values)
        if v.ndim == 1:
            v = v[:, None]
        if self.magnetic:
            if v.shape[1] != 1:
                raise GraphDataError("magnetic forms are scalar valued")
            v = reduce_angles(v)
        v = np.ascontiguousarray(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def num_edges(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        """Value dimension n."""
        return self.values.shape[1]

    def value(self, edge_id: int, sign: int = 1) -> np.ndarray:
        return sign * self.values[edge_id]

    def support(self, tol: float = 1e-9) -> tuple[int, ...]:
        """Canonical edge ids with nonzero value.

        Exact for integer-typed values, tolerance-based otherwise.
        """
        if np.issubdtype(self.values.dtype, np.integer):
            mask = np.any(self.values != 0, axis=1)
        else:
            mask = np.any(np.abs(self.values) > tol, axis=1)
        return tuple(int(i) for i in np.nonzero(mask)[0])

    def support_size_oriented(self, tol: float = 1e-9) -> int:
        """Number of oriented edges with nonzero value (twice the canonical count)."""
        return 2 * len(self.support(tol))

    @classmethod
    def zeros(cls, num_edges: int, dim: int, magnetic: bool = False) -> "OneForm":
        return cls(np.zeros((num_edges, dim)), magnetic=magnetic)


@dataclass(frozen=True, eq=False)
class FundamentalGraph:
    """Fundamental graph of a d-periodic multigraph.

    Vertices are dense integers 0..nu-1; optional names are kept for
    serialization. Immutable after construction, safe for concurrent
    reads.
    """

    dim: int
    num_vertices: int
    edges: tuple[Edge, ...]
    potential: np.ndarray = None  # type: ignore[assignment]
    vertex_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        q = self.potential
        if q is None:
            q = np.zeros(self.num_vertices)
        q = np.asarray(q, dtype=float)
        q.setflags(write=False)
        object.__setattr__(self, "potential", q)
        object.__setattr__(self, "edges", tuple(self.edges))

    # -- basic combinatorics --------------------------------------------

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def beta(self) -> int:
        """First Betti number, #edges - #vertices + 1 (connected graphs)."""
        return self.num_edges - self.num_vertices + 1

    def degrees(self) -> np.ndarray:
        """Oriented-edge out-degrees; a loop adds 2 at its vertex."""
        deg = np.zeros(self.num_vertices, dtype=np.int64)
        for e in self.edges:
            deg[e.tail] += 1
            deg[e.head] += 1
        return deg

    def kappa_plus(self) -> int:
        return int(self.degrees().max())

    def endpoints(self, edge_id: int, sign: int = 1) -> tuple[int, int]:
        e = self.edges[edge_id]
        return (e.tail, e.head) if sign > 0 else (e.head, e.tail)

    def oriented_edges(self) -> Iterator[tuple[int, int, int, int]]:
        """Yield (edge_id, sign, tail, head) over all oriented edges."""
        for i, e in enumerate(self.edges):
            yield i, 1, e.tail, e.head
            yield i, -1, e.head, e.tail

    def is_connected(self) -> bool:
        if self.num_vertices == 0:
            return False
        parent = list(range(self.num_vertices))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in self.edges:
            parent[find(e.tail)] = find(e.head)
        root = find(0)
        return all(find(v) == root for v in range(self.num_vertices))

    # -- stored forms ----------------------------------------------------

    def index_matrix(self) -> np.ndarray:
        """(E, d) integer matrix of canonical edge indices."""
        return np.array([e.index for e in self.edges], dtype=np.int64).reshape(
            self.num_edges, self.dim
        )

    def index_form(self) -> OneForm:
        """The integer translation-index 1-form."""
        return OneForm(self.index_matrix())

    def magnetic_form(self) -> OneForm:
        """The stored phase 1-form, values in (-pi, pi]."""
        return OneForm(np.array([e.alpha for e in self.edges], dtype=float), magnetic=True)

    def with_potential(self, q: Sequence[float]) -> "FundamentalGraph":
        return replace(self, potential=np.asarray(q, dtype=float))

    def with_phases(self, alphas: Sequence[float]) -> "FundamentalGraph":
        """Copy of the graph with replaced edge phases (reduced into (-pi, pi])."""
        alphas = list(alphas)
        if len(alphas) != self.num_edges:
            raise GraphDataError("phase list length mismatch")
        new_edges = tuple(
            replace(e, alpha=reduce_angle(float(a))) for e, a in zip(self.edges, alphas)
        )
        return replace(self, edges=new_edges)

    def name_of(self, v: int) -> str:
        return self.vertex_names[v] if self.vertex_names else str(v)


@dataclass(frozen=True, eq=False)
class PeriodicEmbedding:
    """Per-vertex fractional positions (lattice-basis coordinates in [0,1)^d)."""

    positions: np.ndarray

    def __post_init__(self) -> None:
        p = np.atleast_2d(np.asarray(self.positions, dtype=float))
        p.setflags(write=False)
        object.__setattr__(self, "positions", p)


@dataclass(frozen=True)
class ValidationReport:
    num_vertices: int
    num_edges: int
    beta: int
    degrees: tuple[int, ...]
    kappa_plus: int
    connected: bool

    def to_dict(self) -> dict:
        return {
            "nu": self.num_vertices,
            "num_edges": self.num_edges,
            "beta": self.beta,
            "degrees": list(self.degrees),
            "kappa_plus": self.kappa_plus,
            "connected": self.connected,
        }


def validate(g: FundamentalGraph) -> ValidationReport:
    """Check structural invariants and summarize the graph.

    Raises BadParamsError, BadIndexLengthError, AlphaOutOfRangeError or
    DisconnectedGraphError on the first violated invariant.
    """
    if g.dim < 1:
        raise BadParamsError(f"lattice rank must be positive, got {g.dim}")
    if g.num_vertices < 1:
        raise BadParamsError("graph needs at least one vertex")
    for i, e in enumerate(g.edges):
        if not (0 <= e.tail < g.num_vertices and 0 <= e.head < g.num_vertices):
            raise BadParamsError(f"edge {i} endpoint out of range")
        if len(e.index) != g.dim:
            raise BadIndexLengthError(
                f"edge {i} index has length {len(e.index)}, expected {g.dim}"
            )
        if not (-math.pi < e.alpha <= math.pi):
            raise AlphaOutOfRangeError(f"edge {i} phase {e.alpha} outside (-pi, pi]")
    if not g.is_connected():
        raise DisconnectedGraphError("fundamental graph must be connected")
    deg = g.degrees()
    return ValidationReport(
        num_vertices=g.num_vertices,
        num_edges=g.num_edges,
        beta=g.beta,
        degrees=tuple(int(d) for d in deg),
        kappa_plus=int(deg.max()),
        connected=True,
    )


def coordinate_form(g: FundamentalGraph, emb: PeriodicEmbedding) -> OneForm:
    """Edge-coordinate 1-form of an embedding.

    For a canonical edge (u, v) with index m the value is
    position(v) + m - position(u), in lattice-basis coordinates. Any
    in-cell embedding has the same cycle fluxes as the index form, so
    consistency reduces to the embedding being well formed: positions
    of shape (nu, d), inside [0,1)^d, pairwise distinct.
    """
    p = emb.positions
    if p.shape != (g.num_vertices, g.dim):
        raise InconsistentEmbeddingError(
            f"positions shape {p.shape} does not match (nu, d)=({g.num_vertices}, {g.dim})"
        )
    if np.any(p < 0.0) or np.any(p >= 1.0):
        raise InconsistentEmbeddingError("positions must lie in [0, 1)^d")
    rows = {tuple(row) for row in p.tolist()}
    if len(rows) != g.num_vertices:
        raise InconsistentEmbeddingError("vertex positions must be distinct")
    idx = g.index_matrix().astype(float)
    tails = np.array([e.tail for e in g.edges], dtype=int)
    heads = np.array([e.head for e in g.edges], dtype=int)
    if g.num_edges == 0:
        return OneForm(np.zeros((0, g.dim)))
    return OneForm(p[heads] + idx - p[tails])


# -- generators ---------------------------------------------------------------


def _unit_index(d: int, s: int) -> tuple[int, ...]:
    return tuple(1 if t == s else 0 for t in range(d))


def generate(kind: str, d: int | None = None,
             decoration: "FundamentalGraph | Sequence[tuple[int, int]] | None" = None,
             ) -> FundamentalGraph:
    """Build one of the stock fundamental graphs.

    kind 'zd' needs d >= 1; 'hexagonal' and 'kagome' are fixed at d=2;
    'decorated' glues a finite connected graph (vertex 0 is the gluing
    point, all its edges get index 0) onto the d-dimensional lattice
    vertex that carries the d unit-index loops.
    """
    if kind == "zd":
        if d is None or d < 1:
            raise BadParamsError("zd requires d >= 1")
        edges = tuple(Edge(0, 0, _unit_index(d, s)) for s in range(d))
        return FundamentalGraph(dim=d, num_vertices=1, edges=edges, vertex_names=("v0",))

    if kind == "hexagonal":
        if d not in (None, 2):
            raise BadParamsError("hexagonal lattice is two dimensional")
        edges = (
            Edge(0, 1, (0, 0)),
            Edge(0, 1, (1, 0)),
            Edge(0, 1, (0, 1)),
        )
        return FundamentalGraph(dim=2, num_vertices=2, edges=edges, vertex_names=("v1", "v2"))

    if kind == "kagome":
        if d not in (None, 2):
            raise BadParamsError("kagome lattice is two dimensional")
        # Three corner-sharing vertices; the three out-of-cell edges carry
        # the nonzero indices, the in-cell triangle carries zeros.
        edges = (
            Edge(0, 2, (0, 0)),
            Edge(2, 1, (0, 0)),
            Edge(1, 0, (0, 0)),
            Edge(0, 2, (-1, 0)),
            Edge(2, 1, (1, -1)),
            Edge(1, 0, (0, 1)),
        )
        return FundamentalGraph(dim=2, num_vertices=3, edges=edges,
                                vertex_names=("v1", "v2", "v3"))

    if kind == "decorated":
        if d is None or d < 1:
            raise BadParamsError("decorated requires d >= 1")
        if decoration is None:
            pairs: list[tuple[int, int]] = [(0, 1)]
        elif isinstance(decoration, FundamentalGraph):
            pairs = [(e.tail, e.head) for e in decoration.edges]
        else:
            pairs = [(int(a), int(b)) for a, b in decoration]
        nv = max((max(a, b) for a, b in pairs), default=0) + 1
        zero = tuple(0 for _ in range(d))
        edges = tuple(Edge(0, 0, _unit_index(d, s)) for s in range(d)) + tuple(
            Edge(a, b, zero) for a, b in pairs
        )
        g = FundamentalGraph(dim=d, num_vertices=nv, edges=edges)
        if not g.is_connected():
            raise BadParamsError("decoration graph must be connected")
        return g

    raise BadParamsError(f"unknown generator kind {kind!r}")


# -- JSON serialization -------------------------------------------------------


def graph_from_dict(data: dict) -> FundamentalGraph:
    """Parse the JSON graph schema; phases are reduced into (-pi, pi]."""
    try:
        dim = int(data["dim"])
        names = [str(v) for v in data["vertices"]]
        raw_edges = data["edges"]
    except (KeyError, TypeError) as exc:
        raise GraphDataError(f"malformed graph data: {exc}") from exc
    if len(set(names)) != len(names):
        raise GraphDataError("duplicate vertex names")
    ids = {name: i for i, name in enumerate(names)}
    edges = []
    for k, rec in enumerate(raw_edges):
        try:
            tail = ids[str(rec["tail"])]
            head = ids[str(rec["head"])]
            if "index" in rec:
                index = tuple(int(x) for x in rec["index"])
            elif dim == 0:
                index = ()  # finite decoration graphs carry no indices
            else:
                raise GraphDataError(f"edge {k} is missing its index")
            alpha = reduce_angle(float(rec.get("alpha", 0.0)))
        except KeyError as exc:
            raise GraphDataError(f"edge {k} references unknown vertex {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise GraphDataError(f"edge {k} is malformed: {exc}") from exc
        edges.append(Edge(tail, head, index, alpha))
    potential = np.zeros(len(names))
    for name, q in (data.get("potential") or {}).items():
        if name not in ids:
            raise GraphDataError(f"potential references unknown vertex {name!r}")
        potential[ids[name]] = float(q)
    return FundamentalGraph(
        dim=dim,
        num_vertices=len(names),
        edges=tuple(edges),
        potential=potential,
        vertex_names=tuple(names),
    )


def graph_to_dict(g: FundamentalGraph) -> dict:
    """Canonical dict form: fixed key order, edges in storage order."""
    data: dict = {
        "dim": g.dim,
        "vertices": [g.name_of(v) for v in range(g.num_vertices)],
        "edges": [
            {
                "tail": g.name_of(e.tail),
                "head": g.name_of(e.head),
                "index": list(e.index),
                "alpha": float(e.alpha),
            }
            for e in g.edges
        ],
    }
    if np.any(g.potential != 0.0):
        data["potential"] = {
            g.name_of(v): float(q) for v, q in enumerate(g.potential) if q != 0.0
        }
    return data


def load_graph_json(path: str | Path) -> FundamentalGraph:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise GraphDataError(f"cannot read graph file {path}: {exc}") from exc
    return graph_from_dict(data)


def dump_graph_json(g: FundamentalGraph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_dict(g), fh, indent=2)
        fh.write("\n")
