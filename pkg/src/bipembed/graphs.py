"""Bipartite graphs with bitset adjacency, exact rational densities.

Every other module works on top of the three types defined here:
``BipartiteGraph`` (immutable, two-sided, adjacency stored as one Python int
bitmask per vertex), ``VertexSet`` (a side plus a bitmask) and ``VertexId``
(side, index).  All densities are computed in exact rational arithmetic so
that threshold comparisons never depend on floating-point ties.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Iterator, Sequence


class Side(str, Enum):
    A = "A"
    B = "B"

    def opposite(self) -> "Side":
        return Side.B if self is Side.A else Side.A


@dataclass(frozen=True, order=True)
class VertexId:
    side: Side
    index: int

    def __repr__(self) -> str:
        return f"{self.side.value}{self.index}"


class GraphError(ValueError):
    pass


class EdgeIndexError(GraphError):
    """An edge referenced a vertex index outside its side."""

    def __init__(self, edge: tuple[int, int], size_a: int, size_b: int):
        self.edge = edge
        super().__init__(f"edge {edge} out of range for sides {size_a}+{size_b}")


class SideMismatchError(GraphError):
    pass


class UndefinedDensityError(GraphError):
    pass


def _iter_bits(bits: int) -> Iterator[int]:
    while bits:
        low = bits & -bits
        yield low.bit_length() - 1
        bits ^= low


class VertexSet:
    """A subset of one side of a bipartite vertex universe (immutable)."""

    __slots__ = ("side", "universe", "bits")

    def __init__(self, side: Side, universe: int, bits: int = 0):
        if universe < 0:
            raise GraphError(f"negative universe {universe}")
        if bits < 0 or bits >> universe:
            raise GraphError("membership bits outside side universe")
        object.__setattr__(self, "side", side)
        object.__setattr__(self, "universe", universe)
        object.__setattr__(self, "bits", bits)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("VertexSet is immutable")

    @classmethod
    def from_indices(cls, side: Side, universe: int, indices: Iterable[int]) -> "VertexSet":
        bits = 0
        for i in indices:
            if not 0 <= i < universe:
                raise GraphError(f"index {i} outside universe {universe}")
            bits |= 1 << i
        return cls(side, universe, bits)

    @classmethod
    def full(cls, side: Side, universe: int) -> "VertexSet":
        return cls(side, universe, (1 << universe) - 1)

    @property
    def size(self) -> int:
        return self.bits.bit_count()

    def __len__(self) -> int:
        return self.size

    def __bool__(self) -> bool:
        return self.bits != 0

    def __contains__(self, index: int) -> bool:
        return 0 <= index < self.universe and (self.bits >> index) & 1 == 1

    def indices(self) -> Iterator[int]:
        return _iter_bits(self.bits)

    def vertex_ids(self) -> list[VertexId]:
        return [VertexId(self.side, i) for i in self.indices()]

    def _check_compatible(self, other: "VertexSet") -> None:
        if self.side is not other.side or self.universe != other.universe:
            raise SideMismatchError("vertex sets live on different sides/universes")

    def union(self, other: "VertexSet") -> "VertexSet":
        self._check_compatible(other)
        return VertexSet(self.side, self.universe, self.bits | other.bits)

    def intersect(self, other: "VertexSet") -> "VertexSet":
        self._check_compatible(other)
        return VertexSet(self.side, self.universe, self.bits & other.bits)

    def minus(self, other: "VertexSet") -> "VertexSet":
        self._check_compatible(other)
        return VertexSet(self.side, self.universe, self.bits & ~other.bits)

    def add(self, index: int) -> "VertexSet":
        if not 0 <= index < self.universe:
            raise GraphError(f"index {index} outside universe {self.universe}")
        return VertexSet(self.side, self.universe, self.bits | (1 << index))

    def discard(self, index: int) -> "VertexSet":
        return VertexSet(self.side, self.universe, self.bits & ~(1 << index))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, VertexSet)
            and self.side is other.side
            and self.universe == other.universe
            and self.bits == other.bits
        )

    def __hash__(self) -> int:
        return hash((self.side, self.universe, self.bits))

    def __repr__(self) -> str:
        return f"VertexSet({self.side.value}, {sorted(self.indices())})"


class BipartiteGraph:
    """Immutable bipartite graph; ``adj_a[i]`` is a bitmask over the B side."""

    __slots__ = ("size_a", "size_b", "adj_a", "adj_b", "edge_count")

    def __init__(self, size_a: int, size_b: int, adj_a: Sequence[int], adj_b: Sequence[int]):
        object.__setattr__(self, "size_a", size_a)
        object.__setattr__(self, "size_b", size_b)
        object.__setattr__(self, "adj_a", tuple(adj_a))
        object.__setattr__(self, "adj_b", tuple(adj_b))
        object.__setattr__(self, "edge_count", sum(m.bit_count() for m in adj_a))

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("BipartiteGraph is immutable")

    @classmethod
    def build(
        cls, size_a: int, size_b: int, edges: Iterable[tuple[int, int]]
    ) -> "BipartiteGraph":
        if size_a < 0 or size_b < 0:
            raise GraphError("negative side size")
        adj_a = [0] * size_a
        adj_b = [0] * size_b
        for a, b in edges:
            if not (0 <= a < size_a and 0 <= b < size_b):
                raise EdgeIndexError((a, b), size_a, size_b)
            adj_a[a] |= 1 << b
            adj_b[b] |= 1 << a
        return cls(size_a, size_b, adj_a, adj_b)

    @property
    def is_balanced(self) -> bool:
        return self.size_a == self.size_b

    def side_size(self, side: Side) -> int:
        return self.size_a if side is Side.A else self.size_b

    def has_edge(self, a: int, b: int) -> bool:
        return 0 <= a < self.size_a and (self.adj_a[a] >> b) & 1 == 1

    def adjacency_mask(self, v: VertexId) -> int:
        """Neighbourhood of ``v`` as a bitmask over the opposite side."""
        if v.side is Side.A:
            return self.adj_a[v.index]
        return self.adj_b[v.index]

    def degree(self, v: VertexId) -> int:
        return self.adjacency_mask(v).bit_count()

    def min_degree(self) -> int:
        degs = [m.bit_count() for m in self.adj_a] + [m.bit_count() for m in self.adj_b]
        return min(degs) if degs else 0

    def max_degree(self) -> int:
        degs = [m.bit_count() for m in self.adj_a] + [m.bit_count() for m in self.adj_b]
        return max(degs) if degs else 0

    def edges(self) -> Iterator[tuple[int, int]]:
        for a in range(self.size_a):
            for b in _iter_bits(self.adj_a[a]):
                yield (a, b)

    def vertices(self) -> Iterator[VertexId]:
        for i in range(self.size_a):
            yield VertexId(Side.A, i)
        for j in range(self.size_b):
            yield VertexId(Side.B, j)

    def neighbours(self, v: VertexId) -> list[VertexId]:
        opp = v.side.opposite()
        return [VertexId(opp, i) for i in _iter_bits(self.adjacency_mask(v))]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BipartiteGraph)
            and self.size_a == other.size_a
            and self.size_b == other.size_b
            and self.adj_a == other.adj_a
        )

    def __hash__(self) -> int:
        return hash((self.size_a, self.size_b, self.adj_a))

    def __repr__(self) -> str:
        return f"BipartiteGraph({self.size_a}+{self.size_b}, m={self.edge_count})"


def build_bipartite_graph(
    size_a: int, size_b: int, edges: Iterable[tuple[int, int]]
) -> BipartiteGraph:
    """Build a graph from an edge list; duplicates collapse, bad indices reject."""
    return BipartiteGraph.build(size_a, size_b, edges)


def _require_pair(U: VertexSet, W: VertexSet) -> None:
    if U.side is W.side:
        raise SideMismatchError("pair must span both sides")


def edges_between(G: BipartiteGraph, U: VertexSet, W: VertexSet) -> int:
    """Number of edges with one end in U and the other in W (opposite sides)."""
    _require_pair(U, W)
    if U.side is Side.B:
        U, W = W, U
    if U.universe != G.size_a or W.universe != G.size_b:
        raise GraphError("vertex set universe does not match graph")
    return sum((G.adj_a[a] & W.bits).bit_count() for a in U.indices())


def density(G: BipartiteGraph, U: VertexSet, W: VertexSet) -> Fraction:
    """Exact edge density e(U,W) / (|U||W|)."""
    _require_pair(U, W)
    if not U or not W:
        raise UndefinedDensityError("density undefined for empty sets")
    return Fraction(edges_between(G, U, W), U.size * W.size)


def degree_into(G: BipartiteGraph, v: VertexId, W: VertexSet) -> int:
    """|N(v) ∩ W| for W on the side opposite to v."""
    if W.side is v.side:
        raise SideMismatchError(f"{v} and target set on the same side")
    if W.universe != G.side_size(W.side):
        raise GraphError("vertex set universe does not match graph")
    return (G.adjacency_mask(v) & W.bits).bit_count()
