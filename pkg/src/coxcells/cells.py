"""mu-edge graphs, cell partitions on balls, and exact cell data in finite parabolics."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .coxeter import Ball, CoxeterGroup, ParabolicSpec, classify_parabolic, enumerate_ball
from .hecke import AFunction, AValue, FiniteATable
from .kl import KLTable

SIDES = ("left", "right", "two-sided")


def ball_mu_pairs(table: KLTable, ball: Ball) -> list[tuple[int, int, int]]:
    """All (z, w, mu(z, w)) with z < w in the ball and mu nonzero."""
    out = []
    for w in ball.elements:
        for z, m in table.mu_list(w):
            out.append((z, w, m))
    return out


@dataclass
class MuGraph:
    """Directed edges (x, w) meaning x <= w in the chosen one-sided preorder."""

    ball: Ball
    side: str
    edges: set[tuple[int, int]]
    pairs: list[tuple[int, int, int]] = field(repr=False, default_factory=list)

    def restricted(self, radius: int) -> "MuGraph":
        G = self.ball.group
        keep = {w for w in self.ball.elements if G.length(w) <= radius}
        sub = enumerate_ball(G, radius) if radius < self.ball.radius else self.ball
        return MuGraph(
            sub,
            self.side,
            {(x, w) for x, w in self.edges if x in keep and w in keep},
            [p for p in self.pairs if p[0] in keep and p[1] in keep],
        )


def _edge_ok(G: CoxeterGroup, side: str, x: int, w: int) -> bool:
    if side == "right":
        return bool(G.rdesc_mask(x) & ~G.rdesc_mask(w))
    return bool(G.ldesc_mask(x) & ~G.ldesc_mask(w))


def build_mu_graph(table: KLTable, ball: Ball, side: str = "right", pairs=None) -> MuGraph:
    """Edges of the left, right or two-sided preorder generated by mu-links."""
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    G = table.group
    if pairs is None:
        pairs = ball_mu_pairs(table, ball)
    sides = ("left", "right") if side == "two-sided" else (side,)
    edges = set()
    for z, w, _ in pairs:
        for sd in sides:
            if _edge_ok(G, sd, z, w):
                edges.add((z, w))
            if _edge_ok(G, sd, w, z):
                edges.add((w, z))
    return MuGraph(ball, side, edges, pairs)


def _scc(elements: list[int], edges) -> dict[int, int]:
    pos = {w: i for i, w in enumerate(elements)}
    n = len(elements)
    rows, cols = [], []
    for x, w in edges:
        if x in pos and w in pos:
            rows.append(pos[x])
            cols.append(pos[w])
    mat = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    _, labels = connected_components(mat, directed=True, connection="strong")
    return {w: int(labels[i]) for i, w in enumerate(elements)}


@dataclass
class CellPartition:
    side: str
    radius: int
    margin: int
    blocks: list[list[int]]
    certified: set[int]
    block_of: dict[int, int] = field(repr=False)

    def block(self, w: int) -> list[int]:
        return self.blocks[self.block_of[w]]

    def same(self, x: int, y: int) -> bool:
        return self.block_of[x] == self.block_of[y]

    def certified_blocks(self) -> list[list[int]]:
        return [b for b in self.blocks if any(w in self.certified for w in b)]

    def to_json(self, group: CoxeterGroup) -> dict:
        fmt = group.format
        return {
            "side": self.side,
            "radius": self.radius,
            "margin": self.margin,
            "blocks": [[fmt(w) for w in b] for b in self.blocks],
            "certified": [fmt(w) for w in group.sort(self.certified)],
        }


def covers_group(ball: Ball) -> bool:
    """True when the ball is the whole (finite) group."""
    spec = classify_parabolic(ball.group.system, range(ball.group.rank))
    return spec.finite and len(ball.elements) == int(spec.order)


def cell_partition(graph: MuGraph, margin: int = 2) -> CellPartition:
    """Strongly connected components, with blocks certified by radius stability.

    The partition is recomputed on the ball of radius ``R - margin``.  An
    element x with ``l(x) <= R - 2*margin`` is certified when its two blocks
    agree on the core ball of radius ``R - 2*margin``: growing the radius by
    ``margin`` did not change what the block looks like near x.
    """
    G = graph.ball.group
    R = graph.ball.radius
    if margin < 0 or margin > R:
        raise ValueError("margin must lie in [0, radius]")
    if covers_group(graph.ball):
        margin = 0  # nothing lies beyond the boundary
    els = graph.ball.elements
    lab = _scc(els, graph.edges)
    groups: dict[int, list[int]] = {}
    for w in els:
        groups.setdefault(lab[w], []).append(w)
    blocks = sorted((G.sort(b) for b in groups.values()), key=lambda b: (G.length(b[0]), G.word(b[0])))
    block_of = {w: i for i, b in enumerate(blocks) for w in b}

    mid = [w for w in els if G.length(w) <= R - margin]
    mid_set = set(mid)
    small = _scc(mid, [(x, w) for x, w in graph.edges if x in mid_set and w in mid_set])
    core = R - 2 * margin
    big_core: dict[int, frozenset] = {}
    small_core: dict[int, frozenset] = {}
    for w in mid:
        if G.length(w) <= core:
            small_core.setdefault(small[w], set()).add(w)
    small_core = {k: frozenset(v) for k, v in small_core.items()}
    certified = set()
    for w in mid:
        if G.length(w) > core:
            continue
        bi = block_of[w]
        if bi not in big_core:
            big_core[bi] = frozenset(u for u in blocks[bi] if G.length(u) <= core)
        if big_core[bi] == small_core[small[w]]:
            certified.add(w)
    return CellPartition(graph.side, R, margin, blocks, certified, block_of)


def partition_from_components(G: CoxeterGroup, side: str, elements, lab: dict[int, int]) -> CellPartition:
    groups: dict[int, list[int]] = {}
    for w in elements:
        groups.setdefault(lab[w], []).append(w)
    blocks = sorted((G.sort(b) for b in groups.values()), key=lambda b: (G.length(b[0]), G.word(b[0])))
    block_of = {w: i for i, b in enumerate(blocks) for w in b}
    radius = max((G.length(w) for w in elements), default=0)
    return CellPartition(side, radius, 0, blocks, set(elements), block_of)


def to_dot(graph: MuGraph, partition: CellPartition | None = None) -> str:
    """Graphviz text; blocks become clusters when a partition is supplied."""
    G = graph.ball.group
    name = {w: f'"{G.format(w)}"' for w in graph.ball.elements}
    lines = [f'digraph "{graph.side}" {{', "  node [shape=box];"]
    if partition is not None:
        for i, b in enumerate(partition.blocks):
            lines.append(f"  subgraph cluster_{i} {{")
            for w in b:
                style = "" if w in partition.certified else " [style=dashed]"
                lines.append(f"    {name[w]}{style};")
            lines.append("  }")
    else:
        for w in graph.ball.elements:
            lines.append(f"  {name[w]};")
    for x, w in sorted(graph.edges, key=lambda e: (G.length(e[0]), G.word(e[0]), G.length(e[1]), G.word(e[1]))):
        lines.append(f"  {name[x]} -> {name[w]};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# --- distinguished involution records ----------------------------------------

VERDICTS = ("member_exact", "member_conjectural", "non_member", "undetermined")


class DataConsistencyError(RuntimeError):
    """l - a - 2 delta came out negative: a bug in the data, not a verdict."""


@dataclass
class DInvRecord:
    element: int
    length: int
    a: AValue
    delta: int
    pi: int
    verdict: str
    provenance: dict
    a_lower: int | None = None
    a_prime: int | None = None

    def to_json(self, group: CoxeterGroup) -> dict:
        out = {
            "word": group.format(self.element),
            "l": self.length,
            "a": self.a.as_dict(),
            "delta": self.delta,
            "pi": self.pi,
            "verdict": self.verdict,
            "provenance": self.provenance,
        }
        if self.a_lower is not None:
            out["a_lower_bound"] = self.a_lower
        if self.a_prime is not None:
            out["a_prime"] = self.a_prime
        return out


def verdict_for(length: int, delta: int, a: AValue, a_lower: int | None = None,
                a_prime: int | None = None) -> str:
    """Membership verdict in D under the stated honesty policy."""
    if a.status == "exact":
        gap = length - a.value - 2 * delta
        if gap < 0:
            raise DataConsistencyError(f"l - a - 2delta = {gap} < 0 with exact a")
        return "member_exact" if gap == 0 else "non_member"
    lb = a_lower if a_lower is not None else (a.value if a.status == "lower_bound" else None)
    if lb is not None and length - lb - 2 * delta < 0:
        raise DataConsistencyError("l - a_lb - 2delta < 0")
    if a_prime is None:
        return "undetermined"
    gap = length - a_prime - 2 * delta
    if lb is not None and lb == a_prime:
        return "member_conjectural" if gap == 0 else "non_member"
    return "undetermined"


def make_record(table: KLTable, afunc: AFunction, z: int, provenance: dict,
                a_lower: int | None = None, a_prime: int | None = None) -> DInvRecord:
    G = table.group
    delta, pi = table.delta_pi(z)
    exact = afunc.exact(z)
    if exact is not None:
        a = exact
    elif a_prime is not None:
        a = AValue(a_prime, "conjectural", "a' over maximal finite-parabolic factors")
    elif a_lower is not None:
        a = AValue(a_lower, "lower_bound", "ball h-maximization")
    else:
        a = AValue(0, "lower_bound", "trivial")
    v = verdict_for(G.length(z), delta, a, a_lower, a_prime)
    return DInvRecord(z, G.length(z), a, delta, pi, v, provenance, a_lower, a_prime)


def dinv_bruteforce(table: KLTable, ball: Ball, afunc: AFunction, scope: str = "finite",
                    a_lower=None, a_prime=None) -> list[DInvRecord]:
    """Records for every involution of the ball.

    ``scope = "finite"`` only uses exact a-values from finite parabolics;
    ``a_lower`` and ``a_prime`` are optional callables supplying a ball lower
    bound and the a'-value for elements outside every finite parabolic.
    """
    G = table.group
    out = []
    for z in ball.elements:
        if not G.is_involution(z):
            continue
        lb = ap = None
        if afunc.exact(z) is None and scope != "finite":
            lb = a_lower(z) if a_lower else None
            ap = a_prime(z) if a_prime else None
        out.append(make_record(table, afunc, z, {"kind": "bruteforce", "scope": scope}, lb, ap))
    return out


# --- finite parabolics -----------------------------------------------------------


@dataclass
class FiniteCellData:
    """Exact cells of W_I (elements are handles of the sub-group)."""

    parabolic: ParabolicSpec
    table: KLTable
    atable: FiniteATable
    imap: tuple[int, ...]
    left_cells: CellPartition
    right_cells: CellPartition
    two_sided_cells: CellPartition
    d_set: list[int]
    d_of_right: dict[int, int]
    d_of_left: dict[int, int]
    delta: dict[int, int]

    @property
    def group(self) -> CoxeterGroup:
        return self.table.group

    def lift(self, parent: CoxeterGroup, u: int) -> int:
        return parent.element(self.imap[a] for a in self.group.word(u))

    def lower(self, parent: CoxeterGroup, w: int) -> int:
        back = {g: i for i, g in enumerate(self.imap)}
        return self.group.element(back[a] for a in parent.word(w))

    def cells_per_d(self) -> dict[str, list[int]]:
        """Number of distinguished involutions in each one-sided cell."""
        res = {}
        dset = set(self.d_set)
        for name, part in (("left", self.left_cells), ("right", self.right_cells)):
            res[name] = [sum(1 for w in b if w in dset) for b in part.blocks]
        return res


_CELL_CACHE: dict[tuple, FiniteCellData] = {}
_CELL_LOCK = threading.Lock()


def _cells_of_finite(sub_table: KLTable, at: FiniteATable, spec: ParabolicSpec,
                     imap: tuple[int, ...]) -> FiniteCellData:
    H = sub_table.group
    ball = enumerate_ball(H, max(H.length(w) for w in at.elements))
    pairs = ball_mu_pairs(sub_table, ball)
    parts = {}
    for side in SIDES:
        g = build_mu_graph(sub_table, ball, side, pairs)
        parts[side] = partition_from_components(H, side, ball.elements, _scc(ball.elements, g.edges))
    delta = {}
    d_set = []
    for z in ball.elements:
        dz, _ = sub_table.delta_pi(z)
        delta[z] = dz
        gap = H.length(z) - at.a[z] - 2 * dz
        if gap < 0:
            raise DataConsistencyError(f"l - a - 2delta < 0 at {H.format(z)}")
        if gap == 0:
            d_set.append(z)
    dset = set(d_set)

    def d_map(part: CellPartition) -> dict[int, int]:
        res = {}
        for b in part.blocks:
            ds = [w for w in b if w in dset]
            if len(ds) == 1:
                for w in b:
                    res[w] = ds[0]
        return res

    return FiniteCellData(
        spec, sub_table, at, imap, parts["left"], parts["right"], parts["two-sided"],
        H.sort(d_set), d_map(parts["right"]), d_map(parts["left"]), delta,
    )


def finite_cell_data(afunc: AFunction, subset) -> FiniteCellData:
    """Exact left/right/two-sided cells and distinguished involutions of W_I."""
    G = afunc.group
    spec = classify_parabolic(G.system, subset)
    if not spec.finite:
        raise ValueError(f"parabolic on {sorted(subset)} is infinite")
    sub_table, at, imap = afunc.parabolic(subset)
    key = tuple(tuple(G.system.matrix[a][b] for b in imap) for a in imap)
    with _CELL_LOCK:
        base = _CELL_CACHE.get(key)
    if base is None:
        base = _cells_of_finite(sub_table, at, spec, imap)
        with _CELL_LOCK:
            base = _CELL_CACHE.setdefault(key, base)
    if base.imap == imap and base.parabolic == spec:
        return base
    return FiniteCellData(
        spec, base.table, base.atable, imap, base.left_cells, base.right_cells,
        base.two_sided_cells, base.d_set, base.d_of_right, base.d_of_left, base.delta,
    )


def partition_json(partition: CellPartition, group: CoxeterGroup) -> str:
    return json.dumps(partition.to_json(group), indent=2, sort_keys=True)
