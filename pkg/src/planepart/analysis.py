"""Bounds, exact searches and Monte Carlo estimates at desk scale."""

from __future__ import annotations

import math
import multiprocessing
import os
import random
import time
from dataclasses import dataclass

from .construct import (
    choose_frame,
    common_unseparated_count,
    default_zeta_count,
    expected_unseparated_bound,
    sample_zeta_sets,
)
from .metric import (
    LINE,
    POINT,
    Partition,
    VertexId,
    VertexSet,
    bfs_distance,
    is_resolving,
    packed_signatures,
)
from .plane import IncidencePlane, build_plane

LOWER_BOUND_CAVEAT = (
    "with no pure point or line classes the two vertex families are not "
    "automatically distinguished; the total is the formula value and may be "
    "off by one in edge cases"
)


@dataclass
class LowerBoundResult:
    """Minimal class counts satisfying the two counting inequalities.

    r, s and t count pure point classes, pure line classes and mixed
    classes. Feasibility requires 2^(r+t-1) * (s+t) >= n and
    2^(s+t-1) * (r+t) >= n with n = q*q + q + 1, compared exactly.
    """

    q: int
    r: int
    s: int
    t: int
    total: int
    pure_mixed_t: int
    inequalities: dict
    caveat: str = LOWER_BOUND_CAVEAT

    def to_doc(self) -> dict:
        return {
            "q": self.q,
            "r": self.r,
            "s": self.s,
            "t": self.t,
            "total": self.total,
            "pure_mixed_t": self.pure_mixed_t,
            "inequalities": self.inequalities,
            "caveat": self.caveat,
        }


_BOX_MAX = 64


def lower_bound(q: int) -> LowerBoundResult:
    """Minimize r+s+t over the 0..64 box under the counting inequalities.

    Sides without separating capacity are ruled out by requiring r+t >= 1
    and s+t >= 1. Ascending totals are tried with r varying slowest, so a
    reported optimum with r = s = 0 means no split with pure classes does
    better. Also reports the least t with t * 2^(t-1) >= n, the pure mixed
    form of the same bound.
    """
    if q < 2:
        raise ValueError(f"order must be at least 2, got {q}")
    n = q * q + q + 1
    best = None
    for total in range(1, 3 * _BOX_MAX + 1):
        for r in range(0, min(total, _BOX_MAX) + 1):
            for s in range(0, min(total - r, _BOX_MAX) + 1):
                t = total - r - s
                if t > _BOX_MAX:
                    continue
                if r + t < 1 or s + t < 1:
                    continue
                if (1 << (r + t - 1)) * (s + t) >= n and (1 << (s + t - 1)) * (r + t) >= n:
                    best = (r, s, t)
                    break
            if best:
                break
        if best:
            break
    if best is None:
        raise AssertionError(f"no feasible (r, s, t) within the box for q={q}")
    r, s, t = best
    pure_t = 1
    while pure_t * (1 << (pure_t - 1)) < n:
        pure_t += 1
    inequalities = {
        "line_side": {"lhs": (1 << (r + t - 1)) * (s + t), "rhs": n},
        "point_side": {"lhs": (1 << (s + t - 1)) * (r + t), "rhs": n},
    }
    return LowerBoundResult(q, r, s, t, r + s + t, pure_t, inequalities)


@dataclass
class SearchResult:
    """Outcome of a partition dimension search.

    When ``exact`` the value is both bounds. Otherwise every partition into
    fewer than ``lower`` classes was ruled out and ``upper``, when known,
    has a verified witness. ``nodes`` counts partitions verified in
    canonical enumeration order and does not depend on the worker count.
    """

    q: int
    exact: bool
    lower: int
    upper: int | None
    witness: Partition | None
    nodes: int
    wall_time: float

    @property
    def value(self) -> int | None:
        return self.lower if self.exact else None

    def to_doc(self, plane: IncidencePlane | None = None) -> dict:
        from .metric import partition_to_doc

        doc: dict = {"q": self.q, "exact": self.exact, "nodes": self.nodes}
        if self.exact:
            doc["pd"] = self.lower
        else:
            doc["bracket"] = {"lower": self.lower, "upper": self.upper}
        if self.witness is not None and plane is not None:
            doc["witness"] = partition_to_doc(plane, self.witness)
        return doc


def _all_pairs_distances(plane: IncidencePlane) -> list[list[int]]:
    """Dense distance matrix from the BFS oracle.

    Vertex v < n is point v, otherwise line v - n.
    """
    n = plane.n
    size = 2 * n
    dist = [[0] * size for _ in range(size)]
    for i in range(size):
        u = VertexId(POINT, i) if i < n else VertexId(LINE, i - n)
        row = dist[i]
        for j in range(size):
            if j != i:
                w = VertexId(POINT, j) if j < n else VertexId(LINE, j - n)
                row[j] = bfs_distance(plane, u, w)
    return dist


def _assignment_to_partition(assign, t: int, n: int) -> Partition:
    classes = [[] for _ in range(t)]
    for v, c in enumerate(assign):
        classes[c].append(v)
    sets = []
    for members in classes:
        pts = [v for v in members if v < n]
        lns = [v - n for v in members if v >= n]
        sets.append(VertexSet.from_indices(pts, lns))
    return Partition(sets)


def _rgs_prefixes(size: int, t: int, depth: int):
    """Restricted growth prefixes of the given depth, canonical order.

    Only prefixes that can still reach exactly t blocks are produced.
    """
    if size == 0 or t < 1 or t > size:
        return
    depth = min(depth, size)
    prefix = [0] * depth

    def rec(i, used):
        if i == depth:
            yield tuple(prefix)
            return
        for c in range(min(used + 1, t)):
            new_used = used + 1 if c == used else used
            if new_used + (size - i - 1) >= t:
                prefix[i] = c
                yield from rec(i + 1, new_used)

    yield from rec(0, 0)


def _scan_completions(dist, size, t, prefix, limit):
    """Verify completions of a restricted-growth prefix, canonical order.

    Distance vectors are maintained incrementally, packed 2 bits per class
    with empty slots at 3, so a leaf check is one set-cardinality test.
    Returns (verified, witness) where verified counts partitions checked,
    stopping at the limit or at the first resolving assignment.
    """
    if limit <= 0:
        return 0, None
    all_far = (1 << (2 * t)) - 1
    dvec = [all_far] * size
    assign = list(prefix) + [0] * (size - len(prefix))
    used = 0
    for v, c in enumerate(prefix):
        if c == used:
            used += 1
        base = 2 * c
        drow = dist[v]
        for u in range(size):
            cur = dvec[u] >> base & 3
            d = drow[u]
            if d < cur:
                dvec[u] -= (cur - d) << base
    verified = 0
    witness = None

    def rec(v, used):
        nonlocal verified, witness
        if v == size:
            verified += 1
            if len(set(dvec)) == size:
                witness = list(assign)
            return witness is not None or verified >= limit
        left = size - v - 1
        drow = dist[v]
        for c in range(min(used + 1, t)):
            new_used = used + 1 if c == used else used
            if new_used + left < t:
                continue
            assign[v] = c
            base = 2 * c
            trail = []
            for u in range(size):
                cur = dvec[u] >> base & 3
                d = drow[u]
                if d < cur:
                    trail.append((u, dvec[u]))
                    dvec[u] -= (cur - d) << base
            stop = rec(v + 1, new_used)
            for u, packed in trail:
                dvec[u] = packed
            if stop:
                return True
        return False

    if len(prefix) == size:
        verified = 1
        if len(set(dvec)) == size:
            witness = list(assign)
    else:
        rec(len(prefix), used)
    return verified, witness


_POOL_STATE: dict = {}


def _pool_init(dist, size, t, limit):
    _POOL_STATE["args"] = (dist, size, t, limit)


def _pool_scan(prefix):
    dist, size, t, limit = _POOL_STATE["args"]
    return _scan_completions(dist, size, t, prefix, limit)


def _scan_level(dist, size, t, budget, workers):
    """Scan one class count under a budget.

    Tasks are consumed in canonical prefix order and a witness only counts
    when it falls within the budget, so the outcome and the node count are
    identical for every worker count. Returns (nodes, witness, exhausted).
    """
    if budget <= 0:
        return 0, None, True
    depth = 0
    span = 1
    while span < 8 * max(workers, 1) and depth < size:
        depth += 1
        span *= min(depth, t) + 1
    prefixes = list(_rgs_prefixes(size, t, depth))
    nodes = 0
    if workers <= 1 or len(prefixes) <= 1:
        for prefix in prefixes:
            count, witness = _scan_completions(dist, size, t, prefix, budget - nodes)
            nodes += count
            if witness is not None:
                return nodes, witness, False
            if nodes >= budget:
                return budget, None, True
        return nodes, None, False
    with multiprocessing.Pool(
        workers, initializer=_pool_init, initargs=(dist, size, t, budget)
    ) as pool:
        for count, witness in pool.imap(_pool_scan, prefixes, chunksize=1):
            if witness is not None:
                if nodes + count <= budget:
                    pool.terminate()
                    return nodes + count, witness, False
                pool.terminate()
                return budget, None, True
            nodes += count
            if nodes >= budget:
                pool.terminate()
                return budget, None, True
    return nodes, None, False


def exhaustive_pd(
    plane: IncidencePlane,
    t_min: int = 1,
    t_max: int | None = None,
    budget: int = 10**8,
    workers: int | None = None,
) -> SearchResult:
    """Exact partition dimension by canonical enumeration of set partitions.

    Partitions into exactly t classes are enumerated as restricted growth
    strings (vertex 0 pinned to class 0) for t ascending from t_min. The
    first witness gives the exact value provided t_min is 1, since every
    smaller class count was exhausted first. The budget caps the number of
    partitions verified; when it runs out the result is a bracket whose
    upper end is the trivial singleton witness.
    """
    start = time.monotonic()
    size = 2 * plane.n
    if t_max is None:
        t_max = size
    t_max = min(t_max, size)
    if t_min > t_max:
        raise ValueError(f"empty class count range {t_min}..{t_max}")
    if workers is None:
        workers = os.cpu_count() or 1
    dist = _all_pairs_distances(plane)
    nodes = 0
    for t in range(max(t_min, 1), t_max + 1):
        count, witness, exhausted = _scan_level(dist, size, t, budget - nodes, workers)
        nodes += count
        if witness is not None:
            partition = _assignment_to_partition(witness, t, plane.n)
            return SearchResult(
                q=plane.q,
                exact=t_min == 1,
                lower=t,
                upper=t,
                witness=partition,
                nodes=nodes,
                wall_time=time.monotonic() - start,
            )
        if exhausted:
            singles = _assignment_to_partition(list(range(size)), size, plane.n)
            return SearchResult(
                q=plane.q,
                exact=False,
                lower=t,
                upper=size,
                witness=singles,
                nodes=nodes,
                wall_time=time.monotonic() - start,
            )
    return SearchResult(
        q=plane.q,
        exact=False,
        lower=t_max + 1,
        upper=None,
        witness=None,
        nodes=nodes,
        wall_time=time.monotonic() - start,
    )


def _collision_count(plane, partition) -> int:
    psig, lsig = packed_signatures(plane, partition.classes)
    counts: dict[int, int] = {}
    for sig in psig:
        counts[sig] = counts.get(sig, 0) + 1
    for sig in lsig:
        counts[sig] = counts.get(sig, 0) + 1
    return sum(c * (c - 1) // 2 for c in counts.values())


def randomized_upper_bound(
    plane: IncidencePlane, t: int, attempts: int = 20, seed: int = 0
) -> Partition | None:
    """Search for a resolving t-partition by seeded restarts and local moves.

    Attempt i draws from its own stream id composed of (seed, i). Each
    attempt starts from a random valid t-partition and relocates one
    vertex at a time, accepting only moves that strictly reduce the number
    of colliding pairs. Returns the first verified witness, or None when
    every attempt stalls at a local minimum.
    """
    if t < 2:
        raise ValueError(f"need at least 2 classes, got {t}")
    size = 2 * plane.n
    if t > size:
        raise ValueError(f"cannot split {size} vertices into {t} classes")
    n = plane.n
    for attempt in range(attempts):
        rng = random.Random((seed << 32) | attempt)
        order = list(range(size))
        rng.shuffle(order)
        assign = [0] * size
        for c, v in enumerate(order[:t]):
            assign[v] = c
        for v in order[t:]:
            assign[v] = rng.randrange(t)
        current = _collision_count(plane, _assignment_to_partition(assign, t, n))
        sizes = [0] * t
        for c in assign:
            sizes[c] += 1
        improved = True
        while current > 0 and improved:
            improved = False
            for v in range(size):
                src = assign[v]
                if sizes[src] == 1:
                    continue
                for c in range(t):
                    if c == src:
                        continue
                    assign[v] = c
                    cand = _collision_count(plane, _assignment_to_partition(assign, t, n))
                    if cand < current:
                        current = cand
                        sizes[src] -= 1
                        sizes[c] += 1
                        improved = True
                        break
                    assign[v] = src
                if improved:
                    break
        if current == 0:
            witness = _assignment_to_partition(assign, t, n)
            if is_resolving(plane, witness).resolving:
                return witness
    return None


@dataclass
class EstimateReport:
    """Monte Carlo record of unseparated common pairs after k zeta sets."""

    q: int
    k: int
    trials: int
    counts: list[int]
    mean: float
    std_error: float | None
    bound: float
    seed: int

    def to_doc(self) -> dict:
        return {
            "q": self.q,
            "k": self.k,
            "trials": self.trials,
            "counts": self.counts,
            "mean": self.mean,
            "std_error": self.std_error,
            "bound": self.bound,
            "seed": self.seed,
        }


_EST_STATE: dict = {}


def _estimate_trial(plane, frame, h0, k, seed, trial) -> int:
    rng = random.Random((seed << 32) | trial)
    zetas = sample_zeta_sets(plane, frame, k, rng)
    family = [h0] + [z.members() for z in zetas]
    return common_unseparated_count(plane, frame, family)


def _est_init(q, k, seed):
    plane = build_plane(q)
    frame = choose_frame(plane)
    h0 = VertexSet.from_indices(points=frame.major_points)
    _EST_STATE["args"] = (plane, frame, h0, k, seed)


def _est_run(trial):
    plane, frame, h0, k, seed = _EST_STATE["args"]
    return _estimate_trial(plane, frame, h0, k, seed, trial)


def estimate_unseparated(
    q: int,
    k: int | None = None,
    trials: int = 200,
    seed: int = 0,
    workers: int | None = None,
) -> EstimateReport:
    """Sample the number of unseparated common pairs left by k zeta sets.

    Each trial draws a fresh batch of zeta sets from its own integer
    stream id composed of (seed, trial), so results do not depend on the
    worker count. Pairs are counted among common points and among common
    lines only, the domains the expectation bound speaks about.
    """
    if k is None:
        k = default_zeta_count(q)
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    plane = build_plane(q)
    if k > q:
        raise ValueError(f"order too small for construction: k={k} zeta sets need k <= q={q}")
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or trials == 1:
        frame = choose_frame(plane)
        h0 = VertexSet.from_indices(points=frame.major_points)
        counts = [_estimate_trial(plane, frame, h0, k, seed, t) for t in range(trials)]
    else:
        with multiprocessing.Pool(
            min(workers, trials), initializer=_est_init, initargs=(q, k, seed)
        ) as pool:
            chunk = max(1, trials // (4 * workers))
            counts = list(pool.map(_est_run, range(trials), chunksize=chunk))
    mean = sum(counts) / trials
    if trials > 1:
        var = sum((c - mean) ** 2 for c in counts) / (trials - 1)
        std_error = math.sqrt(var / trials)
    else:
        std_error = None
    return EstimateReport(
        q=q,
        k=k,
        trials=trials,
        counts=counts,
        mean=mean,
        std_error=std_error,
        bound=expected_unseparated_bound(q, k),
        seed=seed,
    )
