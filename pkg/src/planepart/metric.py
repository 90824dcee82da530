"""Distances, representations and resolving checks on incidence graphs.

Vertices of the incidence graph of a plane of order q are its n points and
n lines, n = q*q + q + 1. The graph is bipartite with diameter 3, so every
distance to a nonempty vertex set is one of 0, 1, 2, 3 and has a closed
form; ``bfs_distance`` provides the independent shortest-path oracle.
"""

from __future__ import annotations

import re
from collections import defaultdict, deque
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, NamedTuple, Sequence

from .plane import IncidencePlane

POINT = "P"
LINE = "L"

_VERTEX_ID = re.compile(r"^([PL])([0-9]+)$")


class VertexId(NamedTuple):
    kind: str
    index: int

    def __str__(self) -> str:
        return f"{self.kind}{self.index}"

    @classmethod
    def parse(cls, text: str) -> "VertexId":
        m = _VERTEX_ID.match(text)
        if not m:
            raise ValueError(f"bad vertex id {text!r}")
        return cls(m.group(1), int(m.group(2)))


def point(i: int) -> VertexId:
    return VertexId(POINT, i)


def line(i: int) -> VertexId:
    return VertexId(LINE, i)


def _key(v: VertexId) -> tuple[int, int]:
    # points sort before lines
    return (0 if v.kind == POINT else 1, v.index)


def _iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class VertexSet:
    """Set of vertices as one membership bitmask per side."""

    point_mask: int = 0
    line_mask: int = 0

    @classmethod
    def from_indices(cls, points: Iterable[int] = (), lines: Iterable[int] = ()) -> "VertexSet":
        pm = 0
        for i in points:
            pm |= 1 << i
        lm = 0
        for i in lines:
            lm |= 1 << i
        return cls(pm, lm)

    @classmethod
    def from_vertices(cls, vertices: Iterable[VertexId]) -> "VertexSet":
        pm = lm = 0
        for kind, i in vertices:
            if kind == POINT:
                pm |= 1 << i
            else:
                lm |= 1 << i
        return cls(pm, lm)

    def is_empty(self) -> bool:
        return self.point_mask == 0 and self.line_mask == 0

    def size(self) -> int:
        return self.point_mask.bit_count() + self.line_mask.bit_count()

    def contains(self, v: VertexId) -> bool:
        mask = self.point_mask if v.kind == POINT else self.line_mask
        return bool(mask >> v.index & 1)

    def point_ids(self) -> list[int]:
        return list(_iter_bits(self.point_mask))

    def line_ids(self) -> list[int]:
        return list(_iter_bits(self.line_mask))

    def vertices(self) -> list[VertexId]:
        out = [VertexId(POINT, i) for i in _iter_bits(self.point_mask)]
        out.extend(VertexId(LINE, i) for i in _iter_bits(self.line_mask))
        return out

    def intersects(self, other: "VertexSet") -> bool:
        return bool(self.point_mask & other.point_mask or self.line_mask & other.line_mask)

    def __or__(self, other: "VertexSet") -> "VertexSet":
        return VertexSet(self.point_mask | other.point_mask, self.line_mask | other.line_mask)


@dataclass
class Partition:
    """Ordered partition of all 2n vertices; class order is coordinate order."""

    classes: list[VertexSet]
    names: list[str] | None = None

    @property
    def m(self) -> int:
        return len(self.classes)

    def class_names(self) -> list[str]:
        if self.names is not None:
            return list(self.names)
        return [f"C{i}" for i in range(len(self.classes))]

    def validate(self, plane: IncidencePlane) -> None:
        """Raise ValueError unless classes are nonempty, disjoint and cover."""
        if not self.classes:
            raise ValueError("partition has no classes")
        if self.names is not None and len(self.names) != len(self.classes):
            raise ValueError("class name count does not match class count")
        full = (1 << plane.n) - 1
        pm = lm = 0
        for idx, cls in enumerate(self.classes):
            if cls.is_empty():
                raise ValueError(f"class {idx} is empty")
            if cls.point_mask & pm or cls.line_mask & lm:
                raise ValueError(f"class {idx} overlaps an earlier class")
            if cls.point_mask > full or cls.line_mask > full:
                raise ValueError(f"class {idx} has vertices out of range")
            pm |= cls.point_mask
            lm |= cls.line_mask
        if pm != full or lm != full:
            raise ValueError("classes do not cover every vertex")


def distance_to_set(plane: IncidencePlane, v: VertexId, s: VertexSet) -> int:
    """Distance from a vertex to a nonempty vertex set.

    0 when v belongs to the set. A point is at distance 1 exactly when the
    set holds a line through it, else 2 when the set holds any point, else
    3; lines behave dually. This equals the minimum graph distance to a
    member and applies unchanged to vertices outside every set of a family.
    """
    if s.point_mask == 0 and s.line_mask == 0:
        raise ValueError("distance to an empty set is undefined")
    kind, i = v
    if kind == POINT:
        if s.point_mask >> i & 1:
            return 0
        if plane.point_masks[i] & s.line_mask:
            return 1
        return 2 if s.point_mask else 3
    if s.line_mask >> i & 1:
        return 0
    if plane.line_masks[i] & s.point_mask:
        return 1
    return 2 if s.line_mask else 3


def distance_columns(
    plane: IncidencePlane,
    s: VertexSet,
    point_ids: Sequence[int] | None = None,
    line_ids: Sequence[int] | None = None,
) -> tuple[list[int], list[int]]:
    """Distances from many vertices to one set, bulk form of distance_to_set."""
    if s.point_mask == 0 and s.line_mask == 0:
        raise ValueError("distance to an empty set is undefined")
    prange = range(plane.n) if point_ids is None else point_ids
    lrange = range(plane.n) if line_ids is None else line_ids
    members_p = set(_iter_bits(s.point_mask))
    members_l = set(_iter_bits(s.line_mask))
    far_point = 2 if s.point_mask else 3
    far_line = 2 if s.line_mask else 3
    pmasks = plane.point_masks
    lmasks = plane.line_masks
    lm = s.line_mask
    pm = s.point_mask
    pcol = [
        0 if p in members_p else (1 if pmasks[p] & lm else far_point) for p in prange
    ]
    lcol = [
        0 if li in members_l else (1 if lmasks[li] & pm else far_line) for li in lrange
    ]
    return pcol, lcol


def representation(plane: IncidencePlane, v: VertexId, partition: Partition) -> tuple[int, ...]:
    """Vector of distances from v to each class, in class order."""
    return tuple(distance_to_set(plane, v, cls) for cls in partition.classes)


def packed_signatures(
    plane: IncidencePlane,
    family: Sequence[VertexSet],
    point_ids: Sequence[int] | None = None,
    line_ids: Sequence[int] | None = None,
) -> tuple[list[int], list[int]]:
    """Distance vectors to a set family, packed 2 bits per coordinate.

    Packed integers compare exactly, so equal values mean equal vectors.
    """
    prange = list(range(plane.n)) if point_ids is None else list(point_ids)
    lrange = list(range(plane.n)) if line_ids is None else list(line_ids)
    psig = [0] * len(prange)
    lsig = [0] * len(lrange)
    for j, s in enumerate(family):
        shift = 2 * j
        pcol, lcol = distance_columns(plane, s, prange, lrange)
        for i, d in enumerate(pcol):
            psig[i] |= d << shift
        for i, d in enumerate(lcol):
            lsig[i] |= d << shift
    return psig, lsig


@dataclass
class Verdict:
    """Outcome of a resolving check; groups list vertices sharing a vector."""

    resolving: bool
    collision_groups: list[list[VertexId]]

    def collision_pairs(self) -> list[tuple[VertexId, VertexId]]:
        pairs = []
        for group in self.collision_groups:
            pairs.extend(combinations(group, 2))
        return pairs


def is_resolving(plane: IncidencePlane, partition: Partition) -> Verdict:
    """Decide whether all 2n representation vectors are pairwise distinct."""
    partition.validate(plane)
    psig, lsig = packed_signatures(plane, partition.classes)
    groups = defaultdict(list)
    for i, sig in enumerate(psig):
        groups[sig].append(VertexId(POINT, i))
    for i, sig in enumerate(lsig):
        groups[sig].append(VertexId(LINE, i))
    collisions = sorted(
        (sorted(g, key=_key) for g in groups.values() if len(g) > 1),
        key=lambda g: _key(g[0]),
    )
    return Verdict(not collisions, collisions)


def unseparated_pairs(
    plane: IncidencePlane, family: Sequence[VertexSet]
) -> list[tuple[VertexId, VertexId]]:
    """All vertex pairs with equal distance to every set of a disjoint family.

    The family need not cover the vertex set; an empty family leaves every
    pair unseparated. Output is normalized to lexicographic order.
    """
    sets = list(family)
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            if sets[i].intersects(sets[j]):
                raise ValueError(f"sets {i} and {j} are not disjoint")
    groups = defaultdict(list)
    if sets:
        psig, lsig = packed_signatures(plane, sets)
        for i, sig in enumerate(psig):
            groups[sig].append(VertexId(POINT, i))
        for i, sig in enumerate(lsig):
            groups[sig].append(VertexId(LINE, i))
    else:
        groups[0] = [VertexId(POINT, i) for i in range(plane.n)]
        groups[0].extend(VertexId(LINE, i) for i in range(plane.n))
    pairs = []
    for group in groups.values():
        if len(group) > 1:
            pairs.extend(combinations(sorted(group, key=_key), 2))
    pairs.sort(key=lambda uw: (_key(uw[0]), _key(uw[1])))
    return pairs


def bfs_distance(plane: IncidencePlane, u: VertexId, w: VertexId) -> int:
    """Exact shortest-path distance in the bipartite incidence graph."""
    if u == w:
        return 0
    seen = {u}
    frontier = deque([(u, 0)])
    while frontier:
        (kind, i), d = frontier.popleft()
        neighbors = plane.point_lines[i] if kind == POINT else plane.line_points[i]
        nkind = LINE if kind == POINT else POINT
        for j in neighbors:
            nv = VertexId(nkind, j)
            if nv == w:
                return d + 1
            if nv not in seen:
                seen.add(nv)
                frontier.append((nv, d + 1))
    raise ValueError("vertices are not connected")


def partition_to_doc(plane: IncidencePlane, partition: Partition) -> dict:
    """Serialize a partition; members are listed points first, ascending."""
    names = partition.class_names()
    classes = []
    for name, cls in zip(names, partition.classes):
        members = [f"P{i}" for i in cls.point_ids()]
        members.extend(f"L{i}" for i in cls.line_ids())
        classes.append({"name": name, "members": members})
    return {"q": plane.q, "classes": classes}


def partition_from_doc(doc: dict, plane: IncidencePlane) -> Partition:
    """Parse a partition document and check it covers every vertex once."""
    if not isinstance(doc, dict) or "classes" not in doc:
        raise ValueError("partition document must be an object with a 'classes' array")
    if "q" in doc and doc["q"] != plane.q:
        raise ValueError(f"partition order {doc['q']} does not match plane order {plane.q}")
    classes = []
    names = []
    for pos, entry in enumerate(doc["classes"]):
        if not isinstance(entry, dict) or "members" not in entry:
            raise ValueError(f"class entry {pos} must have 'members'")
        names.append(str(entry.get("name", f"C{pos}")))
        members = [VertexId.parse(str(m)) for m in entry["members"]]
        for v in members:
            if v.index >= plane.n:
                raise ValueError(f"vertex {v} out of range for plane with n={plane.n}")
        classes.append(VertexSet.from_vertices(members))
    partition = Partition(classes, names)
    partition.validate(plane)
    return partition
