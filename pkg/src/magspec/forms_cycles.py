"""Spanning trees, cycle bases, fluxes, minimal 1-forms and graph invariants.

A spanning tree T of the fundamental graph determines a basis of the
cycle space: every non-tree edge (chord) closes a unique basic cycle
through T. The flux of a 1-form along a basic cycle is the sum of its
values; a tree minimizing the number of basic cycles with nonzero flux
yields a flux-equivalent form of smallest possible support, supported
on exactly those chords. Minimality is certified by exhaustive tree
enumeration, never by a rational-independence heuristic.

All integer computations (tree counts, lattice spans) are exact:
fraction-free determinants and a hand-rolled Smith normal form over
Python integers.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import (
    DisconnectedGraphError,
    FluxImageNotFullLatticeError,
    OpenPathError,
    TreeCountExceedsCapError,
)
from .graph_model import FundamentalGraph, OneForm, reduce_angle

# An oriented edge sequence: (edge_id, sign) steps, sign +1 = canonical.
Cycle = tuple[tuple[int, int], ...]

ZERO_FLUX_TOL = 1e-9  # for magnetic fluxes after mod-2pi reduction; integer fluxes exact

_COMBINATION_BUDGET = 20_000_000


@dataclass(frozen=True, eq=False)
class SpanningTreeBasis:
    """A spanning tree with its chords and their oriented basic cycles.

    cycles[i] belongs to chords[i] and starts with (chords[i], +1)
    followed by the tree path from the chord head back to its tail;
    a loop chord is its own basic cycle.
    """

    tree_edges: tuple[int, ...]
    chords: tuple[int, ...]
    cycles: tuple[Cycle, ...]


@dataclass(frozen=True, eq=False)
class FluxTable:
    """Per-chord fluxes of one form in one tree basis (row i = chords[i])."""

    chords: tuple[int, ...]
    values: np.ndarray
    magnetic: bool


@dataclass(frozen=True)
class InvariantReport:
    beta: int
    d: int
    I: int
    I_alpha: int
    I_mu_phi: int
    I_mu_phi_min: int
    tree_count: int
    lattice_image_ok: bool

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "d": self.d,
            "I": self.I,
            "I_alpha": self.I_alpha,
            "I_mu_phi": self.I_mu_phi,
            "I_mu_phi_min": self.I_mu_phi_min,
            "tree_count": self.tree_count,
            "lattice_image_ok": self.lattice_image_ok,
        }


# -- exact integer linear algebra ---------------------------------------------


def integer_determinant(matrix: Sequence[Sequence[int]]) -> int:
    """Exact determinant of a square integer matrix (Bareiss elimination)."""
    M = [[int(v) for v in row] for row in matrix]
    n = len(M)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k]:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
            M[i][k] = 0
        prev = M[k][k]
    return sign * M[-1][-1]


def smith_normal_form(matrix: Sequence[Sequence[int]]) -> list[int]:
    """Diagonal of the Smith normal form of an integer matrix.

    Returns min(m, n) nonnegative integers d_1 | d_2 | ... with any
    zeros trailing. Exact over Python integers.
    """
    M = [[int(v) for v in row] for row in matrix]
    m = len(M)
    n = len(M[0]) if m else 0
    diag: list[int] = []
    t = 0
    while t < m and t < n:
        piv = None
        for i in range(t, m):
            for j in range(t, n):
                v = M[i][j]
                if v and (piv is None or abs(v) < abs(M[piv[0]][piv[1]])):
                    piv = (i, j)
        if piv is None:
            break
        while piv is not None:
            i0, j0 = piv
            if i0 != t:
                M[t], M[i0] = M[i0], M[t]
            if j0 != t:
                for row in M:
                    row[t], row[j0] = row[j0], row[t]
            p = M[t][t]
            for i in range(t + 1, m):
                q = M[i][t] // p
                if q:
                    for j in range(t, n):
                        M[i][j] -= q * M[t][j]
            for j in range(t + 1, n):
                q = M[t][j] // p
                if q:
                    for i in range(t, m):
                        M[i][j] -= q * M[i][t]
            # leftover row/column entries are remainders smaller than |p|;
            # promote the smallest and eliminate again until clean
            piv = None
            best = None
            for i in range(t + 1, m):
                if M[i][t] and (best is None or abs(M[i][t]) < best):
                    piv, best = (i, t), abs(M[i][t])
            for j in range(t + 1, n):
                if M[t][j] and (best is None or abs(M[t][j]) < best):
                    piv, best = (t, j), abs(M[t][j])
        diag.append(abs(M[t][t]))
        t += 1
    # diagonal is equivalent to the chain form: replace (a, b) by (gcd, lcm)
    changed = True
    while changed:
        changed = False
        for k in range(len(diag) - 1):
            a, b = diag[k], diag[k + 1]
            if a and b % a != 0:
                g = math.gcd(a, b)
                diag[k], diag[k + 1] = g, a * b // g
                changed = True
    diag += [0] * (min(m, n) - len(diag))
    return diag


def integer_rank(matrix: Sequence[Sequence[int]]) -> int:
    return sum(1 for v in smith_normal_form(matrix) if v != 0)


def lattice_image_check(flux_matrix: np.ndarray) -> bool:
    """True iff the integer column span of a d x k matrix is all of Z^d.

    Decided by the Smith normal form: the span is full exactly when
    there are d elementary divisors and all equal 1.
    """
    mat = np.asarray(flux_matrix)
    if mat.ndim != 2:
        raise ValueError("flux matrix must be two dimensional")
    if not np.issubdtype(mat.dtype, np.integer):
        rounded = np.rint(mat)
        if mat.size and np.max(np.abs(mat - rounded)) > 1e-9:
            raise ValueError("flux matrix must be integer valued")
        mat = rounded
    mat = mat.astype(np.int64)
    d = mat.shape[0]
    divisors = [v for v in smith_normal_form(mat) if v != 0]
    return len(divisors) == d and all(v == 1 for v in divisors)


# -- spanning trees ------------------------------------------------------------


def spanning_tree_count(g: FundamentalGraph) -> int:
    """Exact number of spanning trees (integer Laplacian cofactor).

    Loops never occur in trees and cancel out of the Laplacian.
    """
    nu = g.num_vertices
    if nu == 1:
        return 1
    L = [[0] * nu for _ in range(nu)]
    for e in g.edges:
        if e.is_loop:
            continue
        L[e.tail][e.tail] += 1
        L[e.head][e.head] += 1
        L[e.tail][e.head] -= 1
        L[e.head][e.tail] -= 1
    reduced = [row[1:] for row in L[1:]]
    return integer_determinant(reduced)


def _is_acyclic_spanning(g: FundamentalGraph, edge_ids: tuple[int, ...]) -> bool:
    parent = list(range(g.num_vertices))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for eid in edge_ids:
        e = g.edges[eid]
        ra, rb = find(e.tail), find(e.head)
        if ra == rb:
            return False
        parent[ra] = rb
    return True  # nu-1 acyclic edges span a connected graph


def _tree_adjacency(g: FundamentalGraph, tree_ids: tuple[int, ...]):
    adj: list[list[tuple[int, int, int]]] = [[] for _ in range(g.num_vertices)]
    for eid in tree_ids:
        e = g.edges[eid]
        adj[e.tail].append((eid, 1, e.head))
        adj[e.head].append((eid, -1, e.tail))
    for lst in adj:
        lst.sort()
    return adj


def _tree_path(adj, start: int, goal: int) -> Cycle:
    """Unique oriented tree path start -> goal as (edge_id, sign) steps."""
    if start == goal:
        return ()
    prev: dict[int, tuple[int, int, int] | None] = {start: None}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        if v == goal:
            break
        for eid, sign, w in adj[v]:
            if w not in prev:
                prev[w] = (v, eid, sign)
                queue.append(w)
    steps = []
    v = goal
    while prev[v] is not None:
        u, eid, sign = prev[v]  # type: ignore[misc]
        steps.append((eid, sign))
        v = u
    return tuple(reversed(steps))


def _basis_for_tree(g: FundamentalGraph, tree_ids: tuple[int, ...]) -> SpanningTreeBasis:
    adj = _tree_adjacency(g, tree_ids)
    tree_set = set(tree_ids)
    chords = tuple(i for i in range(g.num_edges) if i not in tree_set)
    cycles = []
    for c in chords:
        e = g.edges[c]
        if e.is_loop:
            cycles.append(((c, 1),))
        else:
            cycles.append(((c, 1),) + _tree_path(adj, e.head, e.tail))
    return SpanningTreeBasis(tree_edges=tuple(sorted(tree_ids)), chords=chords,
                             cycles=tuple(cycles))


def enumerate_spanning_trees(g: FundamentalGraph, cap: int = 10**6) -> list[SpanningTreeBasis]:
    """All spanning trees with chord sets and basic cycles.

    Deterministic order: lexicographic by the sorted tree edge-id set.
    Raises TreeCountExceedsCapError when the exact count exceeds the
    cap (the graph is too large for exhaustive minimality certification).
    """
    if not g.is_connected():
        raise DisconnectedGraphError("spanning trees need a connected graph")
    count = spanning_tree_count(g)
    if count > cap:
        raise TreeCountExceedsCapError(f"{count} spanning trees exceed the cap {cap}")
    nonloop = [i for i, e in enumerate(g.edges) if not e.is_loop]
    k = g.num_vertices - 1
    if math.comb(len(nonloop), k) > _COMBINATION_BUDGET:
        raise TreeCountExceedsCapError("edge-subset search space exceeds the enumeration budget")
    out = []
    for combo in combinations(nonloop, k):
        if _is_acyclic_spanning(g, combo):
            out.append(_basis_for_tree(g, combo))
    if len(out) != count:
        raise AssertionError(
            f"enumerated {len(out)} trees but the Laplacian cofactor says {count}"
        )
    return out


# -- fluxes --------------------------------------------------------------------


def flux(g: FundamentalGraph, form: OneForm, cycle: Cycle) -> np.ndarray:
    """Sum of form values along a closed oriented edge sequence.

    Magnetic fluxes are reduced modulo 2*pi into (-pi, pi]. Raises
    OpenPathError when consecutive edges do not chain up or the path
    does not return to its start.
    """
    if not cycle:
        raise OpenPathError("empty edge sequence is not a cycle")
    first_tail = g.endpoints(*cycle[0])[0]
    at = first_tail
    total = np.zeros(form.dim, dtype=form.values.dtype)
    for eid, sign in cycle:
        tail, head = g.endpoints(eid, sign)
        if tail != at:
            raise OpenPathError("edge sequence does not chain up")
        total = total + form.value(eid, sign)
        at = head
    if at != first_tail:
        raise OpenPathError("edge sequence does not close")
    if form.magnetic:
        return np.array([reduce_angle(float(total[0]))])
    return total


def flux_table(g: FundamentalGraph, form: OneForm, basis: SpanningTreeBasis) -> FluxTable:
    """Fluxes of a form through every basic cycle of a tree basis."""
    if basis.chords:
        vals = np.stack([flux(g, form, c) for c in basis.cycles])
    else:
        vals = np.zeros((0, form.dim), dtype=form.values.dtype)
    return FluxTable(chords=basis.chords, values=vals, magnetic=form.magnetic)


def _nonzero_rows(table: FluxTable) -> np.ndarray:
    """Boolean mask of basic cycles with nonzero flux."""
    v = table.values
    if v.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    if not table.magnetic and np.issubdtype(v.dtype, np.integer):
        return np.any(v != 0, axis=1)
    return np.any(np.abs(v) > ZERO_FLUX_TOL, axis=1)


def nonzero_flux_count(g: FundamentalGraph, form: OneForm, basis: SpanningTreeBasis) -> int:
    """Number of basic cycles of the tree with nonzero flux of the form."""
    return int(_nonzero_rows(flux_table(g, form, basis)).sum())


# -- minimal forms ---------------------------------------------------------------


def minimal_form(
    g: FundamentalGraph, x: OneForm, trees: Sequence[SpanningTreeBasis]
) -> tuple[OneForm, SpanningTreeBasis, int]:
    """Smallest-support form with the fluxes of x, from an exhaustive tree list.

    Scans every spanning tree, picks one minimizing the number of basic
    cycles with nonzero flux (ties broken by the enumeration order,
    i.e. lexicographically smallest tree edge-id set), and returns the
    form vanishing on that tree and equal to the chord fluxes on the
    chords. The returned count equals half the support size.
    """
    if not trees:
        raise ValueError("minimal_form needs the full spanning-tree enumeration")
    best_basis = None
    best_table = None
    best_count = None
    for basis in trees:
        table = flux_table(g, x, basis)
        cnt = int(_nonzero_rows(table).sum())
        if best_count is None or cnt < best_count:
            best_basis, best_table, best_count = basis, table, cnt
    assert best_basis is not None and best_table is not None
    integral = not x.magnetic and np.issubdtype(x.values.dtype, np.integer)
    dtype = np.int64 if integral else float
    values = np.zeros((g.num_edges, x.dim), dtype=dtype)
    for chord, row in zip(best_table.chords, best_table.values):
        values[chord] = row
    mu = OneForm(values, magnetic=x.magnetic)
    assert mu.support_size_oriented() == 2 * best_count
    return mu, best_basis, int(best_count)


def chord_flux_matrix(g: FundamentalGraph, basis: SpanningTreeBasis) -> np.ndarray:
    """d x beta integer matrix whose columns are index-form chord fluxes."""
    table = flux_table(g, g.index_form(), basis)
    return table.values.T.astype(np.int64)


def invariants(
    g: FundamentalGraph, cap: int = 10**6, require_full_lattice: bool = True
) -> InvariantReport:
    """Betti number and the minimal-support invariants of the graph.

    I counts half the support of a minimal form flux-equivalent to the
    index form, I_alpha the same for the phase form, and the pair
    invariant half the union support; the union value is reported both
    for the lexicographic pair of minimal trees and minimized over all
    minimal pairs. Raises FluxImageNotFullLatticeError (unless
    require_full_lattice=False) when the index fluxes span a proper
    sublattice of Z^d, in which case the graph is not the fundamental
    graph of any genuinely d-periodic graph.
    """
    trees = enumerate_spanning_trees(g, cap=cap)
    tau = g.index_form()
    alpha = g.magnetic_form()

    lattice_ok = lattice_image_check(chord_flux_matrix(g, trees[0]))
    if require_full_lattice and not lattice_ok:
        raise FluxImageNotFullLatticeError(
            "index fluxes do not span Z^d; the graph is not a d-periodic fundamental graph"
        )

    def minimal_profiles(form: OneForm) -> tuple[int, list[frozenset[int]]]:
        counts = []
        supports = []
        for basis in trees:
            table = flux_table(g, form, basis)
            mask = _nonzero_rows(table)
            counts.append(int(mask.sum()))
            supports.append(frozenset(c for c, nz in zip(basis.chords, mask) if nz))
        best = min(counts)
        return best, [s for c, s in zip(counts, supports) if c == best]

    inv_i, tau_supports = minimal_profiles(tau)
    inv_ia, alpha_supports = minimal_profiles(alpha)

    lex_union = len(tau_supports[0] | alpha_supports[0])
    min_union = min(len(a | b) for a in tau_supports for b in alpha_supports)

    if lattice_ok:
        assert g.dim <= inv_i <= g.beta
        assert integer_rank(chord_flux_matrix(g, trees[0])) == g.dim

    return InvariantReport(
        beta=g.beta,
        d=g.dim,
        I=inv_i,
        I_alpha=inv_ia,
        I_mu_phi=lex_union,
        I_mu_phi_min=min_union,
        tree_count=len(trees),
        lattice_image_ok=lattice_ok,
    )


def minimal_pair(
    g: FundamentalGraph, trees: Sequence[SpanningTreeBasis] | None = None, cap: int = 10**6
) -> tuple[OneForm, OneForm]:
    """Lexicographic minimal pair (index-class form, phase-class form)."""
    if trees is None:
        trees = enumerate_spanning_trees(g, cap=cap)
    mu, _, _ = minimal_form(g, g.index_form(), trees)
    phi, _, _ = minimal_form(g, g.magnetic_form(), trees)
    return mu, phi
