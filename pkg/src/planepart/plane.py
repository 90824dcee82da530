"""Projective planes as bit-matrix incidence structures."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .galois import DEFAULT_ORDER_LIMIT, Field, build_field

_POINT_ID = re.compile(r"^P([0-9]+)$")
_LINE_ID = re.compile(r"^L([0-9]+)$")


def canonicalize(f: Field, triple: tuple[int, int, int]) -> tuple[int, int, int]:
    """Scale a homogeneous triple so its first nonzero coordinate is 1."""
    for lead in triple:
        if lead:
            break
    else:
        raise ValueError("zero triple has no canonical form")
    if lead == 1:
        return tuple(triple)
    s = f.inv(lead)
    return tuple(f.mul(x, s) for x in triple)


class IncidencePlane:
    """Immutable incidence structure of a projective plane of order q.

    Incidence is held in both orientations: ``line_masks[i]`` has bit j set
    when point j lies on line i, and ``point_masks[j]`` has bit i set when
    line i passes through point j. Sorted id lists mirror the masks.
    Coordinate triples are present only for algebraically built planes.
    """

    __slots__ = (
        "q",
        "n",
        "line_points",
        "point_lines",
        "line_masks",
        "point_masks",
        "point_triples",
        "line_triples",
    )

    def __init__(self, q, line_points, point_triples=None, line_triples=None):
        n = len(line_points)
        self.q = q
        self.n = n
        self.line_points = [sorted(pts) for pts in line_points]
        self.point_triples = point_triples
        self.line_triples = line_triples
        line_masks = []
        point_lines = [[] for _ in range(n)]
        for li, pts in enumerate(self.line_points):
            m = 0
            for p in pts:
                if not 0 <= p < n:
                    raise ValueError(f"point id {p} out of range 0..{n - 1}")
                m |= 1 << p
                point_lines[p].append(li)
            line_masks.append(m)
        self.line_masks = line_masks
        self.point_lines = point_lines
        self.point_masks = [0] * n
        for p, lines in enumerate(point_lines):
            m = 0
            for li in lines:
                m |= 1 << li
            self.point_masks[p] = m

    def __repr__(self) -> str:
        return f"IncidencePlane(q={self.q}, n={self.n})"

    def incident(self, point: int, line: int) -> bool:
        return bool(self.line_masks[line] >> point & 1)

    def dual(self) -> "IncidencePlane":
        """Plane with the roles of points and lines exchanged."""
        return IncidencePlane(self.q, [list(ls) for ls in self.point_lines])


def build_pg2(f: Field) -> IncidencePlane:
    """Coordinatized plane of order q over the given field.

    Points and lines are the canonical homogeneous triples in ascending
    lexicographic order; ids follow that order. Point P lies on line L
    exactly when the dot product of their triples vanishes.
    """
    q = f.q
    triples = [(0, 0, 1)]
    triples.extend((0, 1, z) for z in range(q))
    for y in range(q):
        for z in range(q):
            triples.append((1, y, z))
    index = {t: i for i, t in enumerate(triples)}
    n = len(triples)
    mul, add, neg, inv = f.mul, f.add, f.neg, f.inv

    line_points = []
    for a, b, c in triples:
        pts = []
        if c == 0:
            pts.append(index[(0, 0, 1)])
            if b == 0:
                pts.extend(index[(0, 1, z)] for z in range(q))
            else:
                y = mul(neg(a), inv(b))
                pts.extend(index[(1, y, z)] for z in range(q))
        else:
            ci = inv(c)
            pts.append(index[(0, 1, mul(neg(b), ci))])
            for y in range(q):
                z = mul(neg(add(a, mul(b, y))), ci)
                pts.append(index[(1, y, z)])
        line_points.append(pts)
    return IncidencePlane(q, line_points, point_triples=triples, line_triples=triples)


def build_plane(q: int, limit: int = DEFAULT_ORDER_LIMIT) -> IncidencePlane:
    """Build PG(2,q) for a prime power q."""
    if q < 2:
        raise ValueError(f"plane order must be at least 2, got {q}")
    p = 2
    while q % p:
        p += 1 if p == 2 else 2
        if p * p > q:
            p = q
            break
    e = 0
    m = q
    while m % p == 0:
        m //= p
        e += 1
    if m != 1:
        raise ValueError(f"{q} is not a prime power")
    return build_pg2(build_field(p, e, limit))


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str


@dataclass
class ValidationReport:
    ok: bool
    violations: list[Violation] = field(default_factory=list)


def validate_axioms(plane: IncidencePlane, fail_fast: bool = False) -> ValidationReport:
    """Check the projective plane axioms against the plane's declared order.

    Violations are data, not errors: line sizes, point degrees, and the
    coverage counts of every point pair and line pair are reported. With
    ``fail_fast`` the scan stops at the first violation.
    """
    violations: list[Violation] = []

    def bad(kind, message):
        violations.append(Violation(kind, message))
        return fail_fast

    n = plane.n
    if n == 0:
        bad("order", "order undeterminable: plane has no lines")
        return ValidationReport(False, violations)
    q = plane.q
    if n != q * q + q + 1:
        if bad("order", f"{n} lines but order {q} requires {q * q + q + 1}"):
            return ValidationReport(False, violations)
    want = q + 1
    for li, mask in enumerate(plane.line_masks):
        size = mask.bit_count()
        if size != want:
            if bad("line-size", f"line L{li} has {size} points, expected {want}"):
                return ValidationReport(False, violations)
    for p, mask in enumerate(plane.point_masks):
        deg = mask.bit_count()
        if deg != want:
            if bad("point-degree", f"point P{p} lies on {deg} lines, expected {want}"):
                return ValidationReport(False, violations)
    pmasks = plane.point_masks
    for i in range(n):
        mi = pmasks[i]
        for j in range(i + 1, n):
            c = (mi & pmasks[j]).bit_count()
            if c != 1:
                if bad("point-pair", f"points P{i} and P{j} lie on {c} common lines"):
                    return ValidationReport(False, violations)
    lmasks = plane.line_masks
    for i in range(n):
        mi = lmasks[i]
        for j in range(i + 1, n):
            c = (mi & lmasks[j]).bit_count()
            if c != 1:
                if bad("line-pair", f"lines L{i} and L{j} meet in {c} points"):
                    return ValidationReport(False, violations)
    return ValidationReport(not violations, violations)


def plane_to_doc(plane: IncidencePlane) -> dict:
    """Serialize a plane to its JSON document form."""
    return {
        "q": plane.q,
        "lines": [
            {"id": f"L{i}", "points": [f"P{p}" for p in pts]}
            for i, pts in enumerate(plane.line_points)
        ],
    }


def load_plane(doc: dict) -> IncidencePlane:
    """Parse and validate a plane document.

    The order is inferred from the size of the first line; a declared "q"
    must agree. Point ids are implicit and every one of P0..P(n-1) must
    appear. Raises ValueError on malformed input or on the first axiom
    violation.
    """
    if not isinstance(doc, dict) or "lines" not in doc:
        raise ValueError("plane document must be an object with a 'lines' array")
    lines = doc["lines"]
    if not isinstance(lines, list) or not lines:
        raise ValueError("plane document has no lines")
    n = len(lines)
    line_points: list[list[int] | None] = [None] * n
    first_size = None
    for pos, entry in enumerate(lines):
        if not isinstance(entry, dict) or "id" not in entry or "points" not in entry:
            raise ValueError(f"line entry {pos} must have 'id' and 'points'")
        m = _LINE_ID.match(str(entry["id"]))
        if not m:
            raise ValueError(f"bad line id {entry['id']!r}")
        li = int(m.group(1))
        if li >= n:
            raise ValueError(f"line id L{li} out of range for {n} lines")
        if line_points[li] is not None:
            raise ValueError(f"duplicate line id L{li}")
        pts = []
        for name in entry["points"]:
            pm = _POINT_ID.match(str(name))
            if not pm:
                raise ValueError(f"bad point id {name!r} on line L{li}")
            pts.append(int(pm.group(1)))
        if len(set(pts)) != len(pts):
            raise ValueError(f"line L{li} repeats a point")
        if pos == 0:
            first_size = len(pts)
        line_points[li] = pts
    q = first_size - 1
    if q < 1:
        raise ValueError("first line is too short to determine the order")
    if "q" in doc and doc["q"] != q:
        raise ValueError(f"declared order {doc['q']} does not match inferred order {q}")
    seen = set()
    for pts in line_points:
        seen.update(pts)
    if seen != set(range(n)):
        missing = sorted(set(range(n)) - seen)
        extra = sorted(seen - set(range(n)))
        raise ValueError(
            f"point ids must be exactly P0..P{n - 1}"
            + (f"; missing {missing[:5]}" if missing else "")
            + (f"; unexpected {extra[:5]}" if extra else "")
        )
    plane = IncidencePlane(q, line_points)
    report = validate_axioms(plane)
    if not report.ok:
        first = report.violations[0]
        raise ValueError(f"axiom violation ({first.kind}): {first.message}")
    return plane
