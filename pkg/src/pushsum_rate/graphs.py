"""Communication graphs and the symmetric mixing matrix built on them.

A graph is a finite set of undirected edges over nodes ``0..n-1``. The
mixing matrix P assigns a common weight ``c`` to each edge (or ``1/degree``
on regular graphs, making P row stochastic); its spectrum drives every
rate computation downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Iterable

import numpy as np

from .errors import InputFormatError, ValidationError

__all__ = [
    "Graph",
    "MixingMatrix",
    "HomogeneityReport",
    "make_graph",
    "load_graph",
    "build_mixing_matrix",
    "check_homogeneity",
    "cycle_graph",
    "path_graph",
    "complete_graph",
    "star_graph",
    "petersen_graph",
    "circulant_graph",
]


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes ``0..n-1``.

    ``edges`` holds each pair once as ``(i, j)`` with ``i < j``, sorted.
    Instances are immutable and safe to share.
    """

    n: int
    edges: tuple[tuple[int, int], ...]

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        deg.flags.writeable = False
        return deg

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Neighbour lists as (indptr, indices), indices sorted per node."""
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        chunks = []
        for i, lst in enumerate(nbrs):
            lst.sort()
            indptr[i + 1] = indptr[i] + len(lst)
            chunks.extend(lst)
        indices = np.asarray(chunks, dtype=np.int64)
        indptr.flags.writeable = False
        indices.flags.writeable = False
        return indptr, indices

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.float64)
        for i, j in self.edges:
            a[i, j] = 1.0
            a[j, i] = 1.0
        a.flags.writeable = False
        return a

    def is_regular(self) -> bool:
        deg = self.degrees
        return bool(deg.min() == deg.max())


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    """Dense symmetric nonnegative matrix with zero diagonal.

    ``row_stochastic`` records whether the builder guaranteed unit row
    sums (equivalently unit column sums, by symmetry).
    """

    n: int
    entries: np.ndarray = field(repr=False)
    c: float
    row_stochastic: bool

    def __post_init__(self) -> None:
        self.entries.flags.writeable = False


@dataclass(frozen=True)
class HomogeneityReport:
    """Diagnostic for whether the eigenvalue recursion is trustworthy.

    ``probe_deviation`` is the largest deviation of the diagonal of one
    exact second-moment operator application to I - J from its mean; a
    value above 1e-10 means the recursion is only approximate here.
    """

    regular: bool
    degree_min: int
    degree_max: int
    probe_deviation: float | None
    probe_skipped_reason: str | None
    eigen_recursion_reliable: bool


def make_graph(n: int, edges: Iterable[tuple[int, int]]) -> Graph:
    """Validate and normalize raw edges into a connected Graph.

    Raises ValidationError on self-loops, duplicate pairs, out-of-range
    node ids, or a disconnected graph.
    """
    if n <= 0:
        raise ValidationError(f"node count must be positive, got {n}")
    norm: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for raw in edges:
        i, j = int(raw[0]), int(raw[1])
        if i == j:
            raise ValidationError(f"self-loop at node {i}")
        if not (0 <= i < n and 0 <= j < n):
            raise ValidationError(f"edge ({i}, {j}) outside node range 0..{n - 1}")
        pair = (min(i, j), max(i, j))
        if pair in seen:
            raise ValidationError(f"duplicate edge ({pair[0]}, {pair[1]})")
        seen.add(pair)
        norm.append(pair)
    norm.sort()
    g = Graph(n=n, edges=tuple(norm))
    _require_connected(g)
    return g


def _require_connected(g: Graph) -> None:
    if g.n == 1:
        return
    indptr, indices = g.csr
    seen = np.zeros(g.n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        v = stack.pop()
        for u in indices[indptr[v]:indptr[v + 1]]:
            if not seen[u]:
                seen[u] = True
                stack.append(int(u))
    if not seen.all():
        missing = int(np.nonzero(~seen)[0][0])
        raise ValidationError(
            f"graph is disconnected: node {missing} unreachable from node 0"
        )


def load_graph(source: IO[str] | str, format: str = "edge-list") -> Graph:
    """Parse a graph from text.

    Parameters
    ----------
    source : file-like or str
        Open text stream, or the text itself.
    format : {'edge-list', 'adjacency'}
        Edge list: one "i j" pair per line, '#' starts a comment.
        Adjacency: first line N, then N rows of N reals; nonzero entries
        are edges and must be symmetric with a zero diagonal.
    """
    text = source if isinstance(source, str) else source.read()
    lines = text.splitlines()
    if format == "edge-list":
        return _parse_edge_list(lines)
    if format == "adjacency":
        return _parse_adjacency(lines)
    raise ValidationError(f"unknown graph format {format!r}")


def _strip_comment(line: str) -> str:
    cut = line.find("#")
    if cut >= 0:
        line = line[:cut]
    return line.strip()


def _parse_edge_list(lines: list[str]) -> Graph:
    edges: list[tuple[int, int]] = []
    edge_lines: list[int] = []
    for lineno, raw in enumerate(lines, 1):
        body = _strip_comment(raw)
        if not body:
            continue
        parts = body.split()
        if len(parts) != 2:
            raise InputFormatError(
                f"expected two node ids, got {len(parts)} tokens", line=lineno
            )
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise InputFormatError(
                f"non-integer node id in {body!r}", line=lineno
            ) from None
        if i < 0 or j < 0:
            raise InputFormatError("node ids must be nonnegative", line=lineno)
        if i == j:
            raise InputFormatError(f"self-loop at node {i}", line=lineno)
        edges.append((i, j))
        edge_lines.append(lineno)
    if not edges:
        raise InputFormatError("no edges found", line=len(lines) or 1)
    n = max(max(i, j) for i, j in edges) + 1
    seen: set[tuple[int, int]] = set()
    for (i, j), lineno in zip(edges, edge_lines):
        pair = (min(i, j), max(i, j))
        if pair in seen:
            raise InputFormatError(
                f"duplicate edge ({pair[0]}, {pair[1]})", line=lineno
            )
        seen.add(pair)
    return make_graph(n, edges)


def _parse_adjacency(lines: list[str]) -> Graph:
    rows: list[tuple[int, list[float]]] = []
    n: int | None = None
    for lineno, raw in enumerate(lines, 1):
        body = _strip_comment(raw)
        if not body:
            continue
        if n is None:
            try:
                n = int(body)
            except ValueError:
                raise InputFormatError(
                    f"expected node count, got {body!r}", line=lineno
                ) from None
            if n <= 0:
                raise InputFormatError("node count must be positive", line=lineno)
            continue
        try:
            vals = [float(tok) for tok in body.split()]
        except ValueError:
            raise InputFormatError(f"non-numeric entry in {body!r}", line=lineno) from None
        if len(vals) != n:
            raise InputFormatError(
                f"expected {n} entries in row, got {len(vals)}", line=lineno
            )
        rows.append((lineno, vals))
    if n is None:
        raise InputFormatError("empty adjacency input", line=1)
    if len(rows) != n:
        raise InputFormatError(
            f"expected {n} matrix rows, got {len(rows)}", line=len(lines) or 1
        )
    a = np.asarray([vals for _, vals in rows], dtype=np.float64)
    for i in range(n):
        if a[i, i] != 0.0:
            raise InputFormatError(
                f"self-loop: nonzero diagonal at node {i}", line=rows[i][0]
            )
    asym = np.abs(a - a.T).max()
    scale = max(1.0, float(np.abs(a).max()))
    if asym > 1e-12 * scale:
        raise InputFormatError(
            f"adjacency not symmetric, max asymmetry {asym:.3e}", line=rows[0][0]
        )
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if a[i, j] != 0.0]
    if not edges:
        raise InputFormatError("adjacency has no edges", line=rows[0][0])
    return make_graph(n, edges)


def build_mixing_matrix(
    g: Graph, mode: str = "uniform-c", c: float | None = None
) -> MixingMatrix:
    """Construct P from a graph.

    Modes: 'uniform-c' puts weight c on every edge (default c is
    1/max degree); 'row-stochastic-regular' requires a regular graph and
    sets c = 1/degree so rows sum to one.
    """
    deg = g.degrees
    max_deg = int(deg.max())
    if max_deg == 0:
        raise ValidationError("graph has no edges")
    if mode == "row-stochastic-regular":
        if not g.is_regular():
            raise ValidationError(
                "row-stochastic-regular mode requires a regular graph; "
                f"degrees range {int(deg.min())}..{max_deg}"
            )
        if c is not None:
            raise ValidationError("c is derived as 1/degree in row-stochastic-regular mode")
        c_val = 1.0 / max_deg
        row_stochastic = True
    elif mode == "uniform-c":
        c_val = 1.0 / max_deg if c is None else float(c)
        if not (0.0 < c_val < 1.0):
            raise ValidationError(f"edge weight c must lie in (0, 1), got {c_val}")
        if c_val * max_deg > 1.0 + 1e-12:
            raise ValidationError(
                f"c * max degree = {c_val * max_deg:.6g} exceeds 1; rows would overflow"
            )
        row_stochastic = bool(deg.min() == deg.max() and abs(c_val * max_deg - 1.0) <= 1e-12)
    else:
        raise ValidationError(f"unknown mixing mode {mode!r}")
    entries = g.adjacency * c_val
    return MixingMatrix(n=g.n, entries=entries, c=c_val, row_stochastic=row_stochastic)


def check_homogeneity(g: Graph) -> HomogeneityReport:
    """Probe whether the per-eigenvalue trace recursion is exact on g.

    Degree regularity is a cheap necessary condition. On regular graphs a
    single exact operator application to I - J is performed and the
    diagonal's deviation from constancy is measured; non-regular graphs
    skip the probe (the operator closed forms need unit row sums).
    """
    from . import phi  # local import, phi depends on this module

    deg = g.degrees
    regular = g.is_regular()
    if not regular:
        return HomogeneityReport(
            regular=False,
            degree_min=int(deg.min()),
            degree_max=int(deg.max()),
            probe_deviation=None,
            probe_skipped_reason="graph is not regular; closed forms need unit row sums",
            eigen_recursion_reliable=False,
        )
    p = build_mixing_matrix(g, mode="row-stochastic-regular")
    model = phi.homogeneous_phi_model(p, q=0.4, r=0.6, alpha=0.3, beta=0.2)
    n = g.n
    x0 = np.eye(n) - np.full((n, n), 1.0 / n)
    y = phi.phi_star(model, x0)
    d = np.diagonal(y)
    deviation = float(np.abs(d - d.mean()).max())
    return HomogeneityReport(
        regular=True,
        degree_min=int(deg.min()),
        degree_max=int(deg.max()),
        probe_deviation=deviation,
        probe_skipped_reason=None,
        eigen_recursion_reliable=deviation <= 1e-10,
    )


def cycle_graph(n: int) -> Graph:
    """Ring on n >= 3 nodes."""
    if n < 3:
        raise ValidationError("cycle needs at least 3 nodes")
    return make_graph(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n: int) -> Graph:
    """Path on n >= 2 nodes."""
    if n < 2:
        raise ValidationError("path needs at least 2 nodes")
    return make_graph(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n: int) -> Graph:
    """Complete graph on n >= 2 nodes."""
    if n < 2:
        raise ValidationError("complete graph needs at least 2 nodes")
    return make_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def star_graph(n: int) -> Graph:
    """Star on n >= 3 nodes, centre 0."""
    if n < 3:
        raise ValidationError("star needs at least 3 nodes")
    return make_graph(n, [(0, i) for i in range(1, n)])


def petersen_graph() -> Graph:
    """The Petersen graph: 10 nodes, 3-regular."""
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return make_graph(10, outer + spokes + inner)


def circulant_graph(n: int, offsets: Iterable[int]) -> Graph:
    """Circulant graph: node i connects to i +- s for each offset s."""
    offs = sorted({int(s) for s in offsets})
    if any(s <= 0 or 2 * s > n for s in offs) or not offs:
        raise ValidationError("offsets must satisfy 0 < s <= n/2")
    edges = set()
    for i in range(n):
        for s in offs:
            j = (i + s) % n
            if i != j:
                edges.add((min(i, j), max(i, j)))
    return make_graph(n, sorted(edges))
