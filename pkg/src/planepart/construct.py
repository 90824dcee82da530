"""Randomized construction of resolving partitions for plane incidence graphs.

The partition is assembled from four kinds of classes. H0 holds the major
points of a fixed support frame. A batch of k random zeta sets separates
almost all pairs of common vertices. A conflict graph collects the pairs
that survive, and l further classes built from searching-set codes finish
the separation. Everything left over lands in the final remainder class.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field

from .metric import Partition, VertexSet, is_resolving, packed_signatures
from .plane import IncidencePlane

log = logging.getLogger("planepart.construct")


class SelectionError(Exception):
    """A greedy selection step ran out of admissible vertices.

    The message names the violated requirement; the construction driver
    treats this as a signal to restart the attempt with fresh randomness.
    """


class ConstructionError(Exception):
    """All construction attempts failed."""

    def __init__(self, q: int, seed: int, attempts: int, obstruction: str):
        self.q = q
        self.seed = seed
        self.attempts = attempts
        self.obstruction = obstruction
        super().__init__(
            f"construction failed for q={q} after {attempts} attempts "
            f"(seed {seed}); last obstruction: {obstruction}"
        )

    def report(self) -> dict:
        return {
            "q": self.q,
            "seed": self.seed,
            "attempts": self.attempts,
            "obstruction": self.obstruction,
        }


def default_zeta_count(q: int) -> int:
    """Default number of zeta-set classes, ceil(3*log2(q)) + 3, exactly."""
    return (q * q * q - 1).bit_length() + 3


def default_searching_count(q: int) -> int:
    """Default number of searching classes, ceil(log2(q)), exactly."""
    return (q - 1).bit_length()


def min_free_lines(q: int) -> float:
    """Lower bound 3q/8 - log2(q) - 2 on free lines through a target point.

    Nonpositive values mean the greedy phase has no guarantee at this order
    and may exhaust its retries.
    """
    return 3.0 * q / 8.0 - math.log2(q) - 2.0


def separation_probability_bound(q: int, k: int) -> tuple[float, float]:
    """Probability that k random zeta sets miss a fixed common pair.

    Returns (lhs, rhs) where lhs is the exact case-split expression and rhs
    is the power bound (1/2)**k that dominates it.
    """
    if not 1 <= k <= q:
        raise ValueError(f"need 1 <= k <= q, got k={k}, q={q}")
    ratio = (q - 2) / (2 * q - 2)
    lhs = ((q - k + 1) / (q + 1)) * ratio**k + (k / (q + 1)) * ((q - 1) / q) * ratio ** (
        k - 1
    )
    return lhs, 0.5**k


def expected_unseparated_bound(q: int, k: int) -> float:
    """Bound 2*C(q^2, 2)/2^k on the expected number of unseparated pairs."""
    qq = q * q
    return qq * (qq - 1) / float(1 << k)


@dataclass(frozen=True)
class Frame:
    """Support pair, major vertices and common vertices of a plane.

    ``line_meet[l]`` is the point where line l crosses the support line
    (the support line maps to the support point); ``point_join[p]`` is the
    line through point p and the support point (the support point maps to
    the support line).
    """

    support_point: int
    support_line: int
    major_points: tuple[int, ...]
    major_lines: tuple[int, ...]
    major_point_mask: int
    major_line_mask: int
    common_points: tuple[int, ...]
    common_lines: tuple[int, ...]
    common_point_mask: int
    common_line_mask: int
    line_meet: tuple[int, ...] = field(repr=False)
    point_join: tuple[int, ...] = field(repr=False)


def choose_frame(plane: IncidencePlane, support: tuple[int, int] | None = None) -> Frame:
    """Label the plane relative to an incident support point and line.

    The default support is the lowest point id with its lowest incident
    line. An explicit override pair must be incident.
    """
    n = plane.n
    if support is None:
        p0 = 0
        l0 = plane.point_lines[0][0]
    else:
        p0, l0 = support
        if not plane.incident(p0, l0):
            raise ValueError(f"support override P{p0}, L{l0} is not an incident pair")
    major_points = tuple(p for p in plane.line_points[l0] if p != p0)
    major_lines = tuple(li for li in plane.point_lines[p0] if li != l0)
    mp_mask = 0
    for p in major_points:
        mp_mask |= 1 << p
    ml_mask = 0
    for li in major_lines:
        ml_mask |= 1 << li
    full = (1 << n) - 1
    cp_mask = full & ~mp_mask & ~(1 << p0)
    cl_mask = full & ~ml_mask & ~(1 << l0)

    line_meet = [p0] * n
    for p in plane.line_points[l0]:
        for li in plane.point_lines[p]:
            line_meet[li] = p
    line_meet[l0] = p0
    point_join = [l0] * n
    for li in plane.point_lines[p0]:
        for p in plane.line_points[li]:
            point_join[p] = li
    point_join[p0] = l0

    def _bits(mask):
        out = []
        while mask:
            low = mask & -mask
            out.append(low.bit_length() - 1)
            mask ^= low
        return tuple(out)

    return Frame(
        support_point=p0,
        support_line=l0,
        major_points=major_points,
        major_lines=major_lines,
        major_point_mask=mp_mask,
        major_line_mask=ml_mask,
        common_points=_bits(cp_mask),
        common_lines=_bits(cl_mask),
        common_point_mask=cp_mask,
        common_line_mask=cl_mask,
        line_meet=tuple(line_meet),
        point_join=tuple(point_join),
    )


@dataclass(frozen=True)
class ZetaSet:
    """Mixed class of size q on a major base point and major base line.

    The point half is a floor(q/2) subset of the base line with the support
    point removed; the line half joins the base point to the complementary
    points of the base line.
    """

    base_point: int
    base_line: int
    point_half: tuple[int, ...]
    line_half: tuple[int, ...]

    def members(self) -> VertexSet:
        return VertexSet.from_indices(self.point_half, self.line_half)

    def size(self) -> int:
        return len(self.point_half) + len(self.line_half)


def sample_zeta_sets(
    plane: IncidencePlane, frame: Frame, k: int, rng: random.Random
) -> list[ZetaSet]:
    """Draw k zeta sets on distinct base points and distinct base lines.

    Bases are sampled without replacement and paired by sampling order;
    each point half is a uniform floor(q/2) subset of its base line. The
    returned sets are pairwise disjoint and avoid the major points.
    """
    q = plane.q
    if k > q:
        raise ValueError(f"order too small for construction: k={k} zeta sets need k <= q={q}")
    if k < 1:
        raise ValueError(f"zeta set count must be positive, got {k}")
    base_points = rng.sample(frame.major_points, k)
    base_lines = rng.sample(frame.major_lines, k)
    p0 = frame.support_point
    out = []
    for bp, bl in zip(base_points, base_lines):
        on_line = [p for p in plane.line_points[bl] if p != p0]
        half = sorted(rng.sample(on_line, q // 2))
        half_set = set(half)
        joined = []
        bp_mask = plane.point_masks[bp]
        for r in on_line:
            if r not in half_set:
                meet = bp_mask & plane.point_masks[r]
                joined.append(meet.bit_length() - 1)
        out.append(ZetaSet(bp, bl, tuple(half), tuple(sorted(joined))))
    return out


@dataclass(frozen=True)
class ConflictGraph:
    """Same-representation pairs among common and support vertices.

    The graph is a disjoint union of cliques, each entirely points or
    entirely lines. ``x_edge_count`` counts only pairs of common vertices;
    the support point or line joins a clique when it collides with a
    common vertex.
    """

    point_cliques: tuple[tuple[int, ...], ...]
    line_cliques: tuple[tuple[int, ...], ...]
    points: tuple[int, ...]
    lines: tuple[int, ...]
    x_edge_count: int

    @property
    def vertex_count(self) -> int:
        return len(self.points) + len(self.lines)

    @property
    def edge_count(self) -> int:
        total = 0
        for c in self.point_cliques:
            total += len(c) * (len(c) - 1) // 2
        for c in self.line_cliques:
            total += len(c) * (len(c) - 1) // 2
        return total


def _collision_cliques(domain, sigs, special):
    groups = {}
    for v, sig in zip(domain, sigs):
        groups.setdefault(sig, []).append(v)
    cliques = sorted(tuple(sorted(g)) for g in groups.values() if len(g) > 1)
    x_edges = 0
    for g in cliques:
        size = len(g) - (1 if special in g else 0)
        x_edges += size * (size - 1) // 2
    return tuple(cliques), x_edges


def build_conflict_graph(
    plane: IncidencePlane, frame: Frame, family: list[VertexSet]
) -> ConflictGraph:
    """Group common and support vertices by representation under a family."""
    for i in range(len(family)):
        for j in range(i + 1, len(family)):
            if family[i].intersects(family[j]):
                raise ValueError(f"family sets {i} and {j} are not disjoint")
    pdomain = list(frame.common_points) + [frame.support_point]
    ldomain = list(frame.common_lines) + [frame.support_line]
    psig, lsig = packed_signatures(plane, family, pdomain, ldomain)
    point_cliques, xp = _collision_cliques(pdomain, psig, frame.support_point)
    line_cliques, xl = _collision_cliques(ldomain, lsig, frame.support_line)
    points = tuple(sorted(v for c in point_cliques for v in c))
    lines = tuple(sorted(v for c in line_cliques for v in c))
    return ConflictGraph(point_cliques, line_cliques, points, lines, xp + xl)


def common_unseparated_count(plane: IncidencePlane, frame: Frame, family: list[VertexSet]) -> int:
    """Unseparated pairs among common points plus those among common lines."""
    psig, lsig = packed_signatures(
        plane, family, list(frame.common_points), list(frame.common_lines)
    )
    total = 0
    for sigs in (psig, lsig):
        counts = {}
        for sig in sigs:
            counts[sig] = counts.get(sig, 0) + 1
        total += sum(c * (c - 1) // 2 for c in counts.values())
    return total


def searching_family(domain, count: int, excluded=()) -> list[list]:
    """Subsets of a domain whose membership vectors distinguish all elements.

    Element ranks are assigned in domain order and subset j collects the
    elements whose rank has bit j set. Excluded elements are pinned to rank
    zero, the all-zero codeword; when nothing is excluded rank zero is used
    by the first element instead. Raises ValueError when count is too small
    for distinct codewords.
    """
    domain = list(domain)
    excluded = set(excluded)
    if not excluded.issubset(domain):
        raise ValueError("excluded elements must belong to the domain")
    free = len(domain) - len(excluded)
    max_rank = free - 1 if not excluded else free
    needed = max(max_rank, 0).bit_length()
    if count < needed:
        raise ValueError(
            f"{count} searching sets cannot distinguish {free} elements"
            f"{' plus exclusions' if excluded else ''}; need {needed}"
        )
    sets: list[list] = [[] for _ in range(count)]
    rank = 0 if not excluded else 1
    for x in domain:
        if x in excluded:
            continue
        for j in range(count):
            if rank >> j & 1:
                sets[j].append(x)
        rank += 1
    return sets


def select_class_lines(
    plane: IncidencePlane,
    frame: Frame,
    targets,
    conflict_points,
    allowed_lines,
    forbidden_points,
    forbidden_lines,
    used: VertexSet,
) -> list[int]:
    """Greedy choice of common lines for one searching class.

    Each target major point ends up on exactly one chosen line and no other
    point of the support line does. Each conflict point gets exactly one
    chosen line; forbidden points are never met, forbidden lines and lines
    already assigned are never picked. Conflict points go first, each
    taking a line whose support-line meet is a still uncovered target and
    which avoids the other conflict points; remaining targets then receive
    lines clear of every conflict point. Ties break to the lowest line id.
    Raises SelectionError when a step has no admissible line.
    """
    tset = set(targets)
    if not tset <= set(frame.major_points):
        raise ValueError("targets must be major points")
    if set(allowed_lines) & set(forbidden_lines):
        raise ValueError("allowed and forbidden lines overlap")
    q_mask = 0
    for p in conflict_points:
        q_mask |= 1 << p
    qc_mask = 0
    for p in forbidden_points:
        qc_mask |= 1 << p
    rc_mask = 0
    for li in forbidden_lines:
        rc_mask |= 1 << li
    blocked = rc_mask | used.line_mask
    meet = frame.line_meet
    lmasks = plane.line_masks
    covered: set[int] = set()
    chosen = []
    for u in sorted(conflict_points):
        others = q_mask & ~(1 << u)
        pick = -1
        for ln in plane.point_lines[u]:
            t = meet[ln]
            if t not in tset or t in covered:
                continue
            if blocked >> ln & 1:
                continue
            pm = lmasks[ln]
            if pm & qc_mask or pm & others:
                continue
            pick = ln
            break
        if pick < 0:
            raise SelectionError(
                f"no free line through conflict point P{u}: every candidate is used, "
                "forbidden, or meets the support line outside the uncovered targets"
            )
        chosen.append(pick)
        covered.add(meet[pick])
        blocked |= 1 << pick
    avoid = q_mask | qc_mask
    l0 = frame.support_line
    for t in sorted(tset - covered):
        pick = -1
        for ln in plane.point_lines[t]:
            if ln == l0 or blocked >> ln & 1:
                continue
            if lmasks[ln] & avoid:
                continue
            pick = ln
            break
        if pick < 0:
            raise SelectionError(
                f"no free line through target point P{t}: every candidate is used, "
                "forbidden, or meets an excluded conflict point"
            )
        chosen.append(pick)
        blocked |= 1 << pick
    return sorted(chosen)


def select_class_points(
    plane: IncidencePlane,
    frame: Frame,
    targets,
    conflict_lines,
    allowed_points,
    forbidden_lines,
    forbidden_points,
    used: VertexSet,
) -> list[int]:
    """Dual of select_class_lines: common points covering major lines.

    Each target major line carries exactly one chosen point, each conflict
    line gets exactly one chosen point, and forbidden lines, forbidden
    points and already assigned vertices are avoided. Ties break to the
    lowest point id.
    """
    tset = set(targets)
    if not tset <= set(frame.major_lines):
        raise ValueError("targets must be major lines")
    if set(allowed_points) & set(forbidden_points):
        raise ValueError("allowed and forbidden points overlap")
    r_mask = 0
    for li in conflict_lines:
        r_mask |= 1 << li
    rc_mask = 0
    for li in forbidden_lines:
        rc_mask |= 1 << li
    qc_mask = 0
    for p in forbidden_points:
        qc_mask |= 1 << p
    blocked = qc_mask | used.point_mask
    join = frame.point_join
    pmasks = plane.point_masks
    covered: set[int] = set()
    chosen = []
    for r in sorted(conflict_lines):
        others = r_mask & ~(1 << r)
        pick = -1
        for pt in plane.line_points[r]:
            t = join[pt]
            if t not in tset or t in covered:
                continue
            if blocked >> pt & 1:
                continue
            lm = pmasks[pt]
            if lm & rc_mask or lm & others:
                continue
            pick = pt
            break
        if pick < 0:
            raise SelectionError(
                f"no free point on conflict line L{r}: every candidate is used, "
                "forbidden, or joins the support point outside the uncovered targets"
            )
        chosen.append(pick)
        covered.add(join[pick])
        blocked |= 1 << pick
    avoid = r_mask | rc_mask
    p0 = frame.support_point
    for t in sorted(tset - covered):
        pick = -1
        for pt in plane.line_points[t]:
            if pt == p0 or blocked >> pt & 1:
                continue
            if pmasks[pt] & avoid:
                continue
            pick = pt
            break
        if pick < 0:
            raise SelectionError(
                f"no free point on target line L{t}: every candidate is used, "
                "forbidden, or lies on an excluded conflict line"
            )
        chosen.append(pick)
        blocked |= 1 << pick
    return sorted(chosen)


@dataclass(frozen=True)
class H2Spec:
    """Searching sets and chosen vertices of one separating class."""

    targets_points: tuple[int, ...]
    targets_lines: tuple[int, ...]
    conflict_points: tuple[int, ...]
    conflict_lines: tuple[int, ...]
    lines: tuple[int, ...]
    points: tuple[int, ...]

    def members(self) -> VertexSet:
        return VertexSet.from_indices(self.points, self.lines)


def build_h2(
    plane: IncidencePlane,
    frame: Frame,
    conflict: ConflictGraph,
    count: int,
    used: VertexSet,
) -> list[H2Spec]:
    """Build the separating classes from four searching-set families.

    Families run over the major points, the major lines, and the two sides
    of the conflict graph, support excluded. Class j combines the j-th set
    of each family; its lines and points come from the two greedy selectors
    and stay disjoint from everything already assigned.
    """
    q = plane.q
    if count < default_searching_count(q):
        raise ValueError(
            f"need at least {default_searching_count(q)} searching classes for q={q}"
        )
    excluded_p = [frame.support_point] if frame.support_point in conflict.points else []
    excluded_l = [frame.support_line] if frame.support_line in conflict.lines else []
    try:
        t_family = searching_family(frame.major_points, count)
        tstar_family = searching_family(frame.major_lines, count)
        q_family = searching_family(conflict.points, count, excluded_p)
        r_family = searching_family(conflict.lines, count, excluded_l)
    except ValueError as exc:
        raise SelectionError(f"searching families infeasible: {exc}") from exc
    cpoints = set(conflict.points)
    clines = set(conflict.lines)
    specs = []
    for j in range(count):
        t_j = t_family[j]
        q_j = q_family[j]
        r_j = r_family[j]
        qc_j = sorted(cpoints.difference(q_j))
        rc_j = sorted(clines.difference(r_j))
        lines = select_class_lines(plane, frame, t_j, q_j, r_j, qc_j, rc_j, used)
        used = used | VertexSet.from_indices(lines=lines)
        tstar_j = tstar_family[j]
        points = select_class_points(plane, frame, tstar_j, r_j, q_j, rc_j, qc_j, used)
        used = used | VertexSet.from_indices(points=points)
        specs.append(
            H2Spec(
                targets_points=tuple(t_j),
                targets_lines=tuple(tstar_j),
                conflict_points=tuple(q_j),
                conflict_lines=tuple(r_j),
                lines=tuple(lines),
                points=tuple(points),
            )
        )
    return specs


@dataclass
class ConstructionResult:
    """Verified resolving partition with the data that produced it."""

    partition: Partition
    frame: Frame
    zeta_sets: list[ZetaSet]
    h2: list[H2Spec]
    q: int
    k: int
    l: int
    seed: int
    retries: int

    @property
    def class_count(self) -> int:
        return self.partition.m

    def roles(self) -> dict[str, str]:
        names = self.partition.class_names()
        out = {names[0]: "major-points"}
        for name in names[1 : 1 + self.k]:
            out[name] = "zeta"
        for name in names[1 + self.k : 1 + self.k + self.l]:
            out[name] = "searching"
        out[names[-1]] = "remainder"
        return out



def construct_partition(
    plane: IncidencePlane,
    seed: int = 0,
    max_retries: int = 20,
    k: int | None = None,
    l: int | None = None,
    support: tuple[int, int] | None = None,
) -> ConstructionResult:
    """Run the full construction with seeded retries until a partition verifies.

    Attempt i draws fresh zeta sets from ``random.Random(seed + i)``; an
    attempt aborts early when the surviving unseparated pairs exceed the
    q/8 budget, when a greedy selection exhausts, or when the assembled
    partition fails verification. Raises ConstructionError once retries
    run out, naming the last obstruction.
    """
    q = plane.q
    defaults = k is None
    if k is None:
        k = default_zeta_count(q)
    if l is None:
        l = default_searching_count(q)
    if k > q:
        if defaults:
            raise ValueError(
                f"q={q} is too small for the default of {k} zeta sets; pass k <= q explicitly"
            )
        raise ValueError(f"order too small for construction: k={k} zeta sets need k <= q={q}")
    if min_free_lines(q) <= 0:
        log.warning(
            "q=%d leaves no guaranteed free lines (3q/8 - log2 q - 2 = %.2f); "
            "the greedy phase may exhaust its retries",
            q,
            min_free_lines(q),
        )
    frame = choose_frame(plane, support)
    h0 = VertexSet.from_indices(points=frame.major_points)
    names = ["H0"]
    names += [f"Z{i}" for i in range(1, k + 1)]
    names += [f"S{i}" for i in range(1, l + 1)]
    names.append("Hrest")
    full = (1 << plane.n) - 1
    obstruction = "no attempt ran"
    for attempt in range(max_retries + 1):
        rng = random.Random(seed + attempt)
        try:
            zetas = sample_zeta_sets(plane, frame, k, rng)
            zclasses = [z.members() for z in zetas]
            family = [h0] + zclasses
            conflict = build_conflict_graph(plane, frame, family)
            if conflict.x_edge_count * 8 > q:
                raise SelectionError(
                    f"unseparated pair budget exceeded: {conflict.x_edge_count} pairs "
                    f"among common vertices, allowed q/8 = {q / 8:g}"
                )
            used = h0
            for z in zclasses:
                used = used | z
            specs = build_h2(plane, frame, conflict, l, used)
            classes = [h0] + zclasses + [s.members() for s in specs]
            pm = lm = 0
            for c in classes:
                pm |= c.point_mask
                lm |= c.line_mask
            classes.append(VertexSet(full & ~pm, full & ~lm))
            partition = Partition(classes, names)
            verdict = is_resolving(plane, partition)
            if verdict.resolving:
                if attempt:
                    log.info("construction for q=%d succeeded after %d retries", q, attempt)
                return ConstructionResult(
                    partition=partition,
                    frame=frame,
                    zeta_sets=zetas,
                    h2=specs,
                    q=q,
                    k=k,
                    l=l,
                    seed=seed,
                    retries=attempt,
                )
            obstruction = (
                f"verification failed: {len(verdict.collision_groups)} colliding groups"
            )
            log.info("attempt %d for q=%d: %s", attempt, q, obstruction)
        except SelectionError as exc:
            obstruction = str(exc)
            log.info("attempt %d for q=%d: %s", attempt, q, obstruction)
    raise ConstructionError(q, seed, max_retries + 1, obstruction)


def result_to_doc(result: ConstructionResult, plane: IncidencePlane) -> dict:
    """Partition document with the construction metadata block."""
    from .metric import partition_to_doc

    doc = partition_to_doc(plane, result.partition)
    doc["metadata"] = {
        "q": result.q,
        "k": result.k,
        "l": result.l,
        "seed": result.seed,
        "retries": result.retries,
    }
    return doc
