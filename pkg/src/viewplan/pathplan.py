"""Shortest visiting order over a view set, with obstacle-aware segments.

The global problem is an open Hamiltonian path pinned at a start view with
a free terminal end.  It is converted to a closed tour by adding a virtual
node whose edge to the start costs zero and whose edges to every other
node cost more than any real path, which forces the start to be a tour
neighbor of the virtual node; dropping the virtual node from the optimal
tour yields the optimal path.  An exact dynamic-programming solver handles
verification-scale instances and a seeded nearest-neighbor + 2-opt
heuristic covers the rest.

Local view-to-view segments are straight chords unless the chord passes
through the object's bounding sphere, in which case the move follows the
great-circle arc between the views on the view sphere.
"""

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from . import jsonio
from .errors import FormatError, InvalidArgumentError, TooLargeError
from .geometry import ViewSpace, top_view

EXACT_SOLVER_CAP = 20
ARC_STEP = np.radians(2.0)
DEFAULT_CLEARANCE = 0.02

SOLVER_EXACT = "exact"
SOLVER_HEURISTIC = "heuristic"


@dataclass(frozen=True)
class ObstacleSphere:
    """Object bounding sphere (plus clearance) centered on the tabletop."""

    center: tuple
    radius_obs: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius_obs", float(self.radius_obs))
        if len(self.center) != 3:
            raise InvalidArgumentError("obstacle center must be a 3-vector")
        if self.radius_obs < 0:
            raise InvalidArgumentError("obstacle radius must be >= 0")

    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)


def obstacle_for_object(center, size: float, clearance: float = DEFAULT_CLEARANCE) -> ObstacleSphere:
    """Bounding sphere of an object of the given diameter, plus clearance."""
    if size <= 0:
        raise InvalidArgumentError("object size must be positive")
    return ObstacleSphere(center=tuple(np.asarray(center, dtype=float)),
                          radius_obs=0.5 * size + clearance)


@dataclass(eq=False)
class LocalPath:
    points: np.ndarray  # (m, 3) polyline, endpoints included
    length: float
    is_arc: bool


def _position_of(view) -> np.ndarray:
    pos = getattr(view, "position", view)
    arr = np.asarray(pos, dtype=float)
    if arr.shape != (3,):
        raise InvalidArgumentError(f"expected a 3-d position, got shape {arr.shape}")
    return arr


def _segment_clearance(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    """Minimum distance from point c to the segment a-b."""
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(c - a))
    t = float(np.clip((c - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(a + t * ab - c))


def local_path(a, b, obs: ObstacleSphere) -> LocalPath:
    """Segment between two views: straight chord, or a sphere arc around the obstacle.

    The obstacle is assumed concentric with the view sphere (the object sits
    at the center the views look at), so the detour arc lies on the view
    sphere itself and its length is analytic.
    """
    pa, pb = _position_of(a), _position_of(b)
    center = obs.center_array()
    if np.array_equal(pa, pb):
        return LocalPath(points=pa[None, :], length=0.0, is_arc=False)
    if _segment_clearance(pa, pb, center) > obs.radius_obs:
        return LocalPath(points=np.stack([pa, pb]),
                         length=float(np.linalg.norm(pb - pa)), is_arc=False)
    ra = float(np.linalg.norm(pa - center))
    rb = float(np.linalg.norm(pb - center))
    if min(ra, rb) <= obs.radius_obs:
        raise InvalidArgumentError("view lies inside the obstacle sphere")
    radius = 0.5 * (ra + rb)
    ua, ub = (pa - center) / ra, (pb - center) / rb
    cosang = float(np.clip(ua @ ub, -1.0, 1.0))
    theta = float(np.arccos(cosang))
    steps = max(int(np.ceil(theta / ARC_STEP)), 1)
    ts = np.linspace(0.0, 1.0, steps + 1)
    sin_theta = np.sin(theta)
    if sin_theta < 1e-9:
        # Antipodal views (both equatorial): pivot the arc over the zenith.
        w = np.array([0.0, 0.0, 1.0]) - ua[2] * ua
        nw = np.linalg.norm(w)
        if nw < 1e-9:
            w = np.array([1.0, 0.0, 0.0]) - ua[0] * ua
            nw = np.linalg.norm(w)
        w /= nw
        units = np.outer(np.cos(ts * theta), ua) + np.outer(np.sin(ts * theta), w)
    else:
        units = (np.outer(np.sin((1.0 - ts) * theta), ua)
                 + np.outer(np.sin(ts * theta), ub)) / sin_theta
    points = center + radius * units
    return LocalPath(points=points, length=float(theta * radius), is_arc=True)


def pairwise_cost(a, b, obs: ObstacleSphere) -> float:
    return local_path(a, b, obs).length


def build_cost_matrix(views, obs: ObstacleSphere) -> np.ndarray:
    """Symmetric matrix of local-path lengths between all views."""
    if isinstance(views, ViewSpace):
        positions = views.positions()
    else:
        positions = np.asarray(views, dtype=float)
    n = len(positions)
    if n < 2:
        raise InvalidArgumentError("cost matrix needs at least 2 views")
    costs = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            costs[i, j] = costs[j, i] = pairwise_cost(positions[i], positions[j], obs)
    return costs


def validate_cost_matrix(costs: np.ndarray) -> np.ndarray:
    costs = np.asarray(costs, dtype=float)
    if costs.ndim != 2 or costs.shape[0] != costs.shape[1]:
        raise InvalidArgumentError(f"cost matrix must be square, got shape {costs.shape}")
    if not np.all(np.isfinite(costs)):
        raise InvalidArgumentError("cost matrix entries must be finite")
    if np.any(costs < 0):
        raise InvalidArgumentError("cost matrix entries must be >= 0")
    if np.any(np.diag(costs) != 0):
        raise InvalidArgumentError("cost matrix diagonal must be zero")
    if not np.allclose(costs, costs.T, rtol=1e-9, atol=0.0):
        raise InvalidArgumentError("cost matrix must be symmetric")
    return costs


@dataclass(eq=False)
class PathPlan:
    order: tuple  # node indices, order[0] is the start
    total_length: float
    solver: str
    optimality_gap_bound: float = None  # 0.0 for exact, None when unknown
    planning_time_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "order": [int(i) for i in self.order],
            "total_length_m": float(self.total_length),
            "solver": self.solver,
            "planning_time_s": float(self.planning_time_s),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PathPlan":
        for key in ("order", "total_length_m", "solver", "planning_time_s"):
            if key not in d:
                raise FormatError(f"path object missing {key!r}")
        return cls(order=tuple(int(i) for i in d["order"]),
                   total_length=float(d["total_length_m"]),
                   solver=str(d["solver"]),
                   optimality_gap_bound=0.0 if d["solver"] == SOLVER_EXACT else None,
                   planning_time_s=float(d["planning_time_s"]))


def save_path(plan: PathPlan, path) -> None:
    jsonio.dump_file(plan.to_dict(), path)


def load_path(path) -> PathPlan:
    data = jsonio.load_file(path)
    if not isinstance(data, dict):
        raise FormatError(f"{path}: expected a path object")
    return PathPlan.from_dict(data)


def path_length(costs: np.ndarray, order) -> float:
    order = np.asarray(order, dtype=int)
    return float(costs[order[:-1], order[1:]].sum())


def _check_start(n: int, start: int) -> None:
    if not 0 <= start < n:
        raise InvalidArgumentError(f"start index {start} out of range for {n} nodes")


def _popcounts(masks: np.ndarray) -> np.ndarray:
    out = np.zeros_like(masks)
    m = masks.copy()
    while m.any():
        out += m & 1
        m >>= 1
    return out


def hamiltonian_path_exact(costs: np.ndarray, start: int,
                           cap: int = EXACT_SOLVER_CAP) -> PathPlan:
    """Optimal open path from start over all nodes, free end.

    Dynamic program over the virtual-node tour: entering the real nodes
    from the virtual node costs 0 at start and K = 1 + sum(all costs)
    elsewhere, and the cheapest completed tour re-enters the virtual node
    from the path's free end at cost K.  Subtracting K recovers the path
    length; K is large enough that start is always a tour neighbor of the
    virtual node, i.e. an endpoint of the path.
    """
    costs = validate_cost_matrix(costs)
    n = len(costs)
    _check_start(n, start)
    if n > cap:
        raise TooLargeError(f"{n} nodes exceeds the exact-solver cap of {cap}")
    if n == 1:
        return PathPlan(order=(start,), total_length=0.0,
                        solver=SOLVER_EXACT, optimality_gap_bound=0.0)
    big = 1.0 + float(costs.sum())  # the virtual-node edge constant K
    size = 1 << n
    dp = np.full((size, n), np.inf)
    parent = np.full((size, n), -1, dtype=np.int8)
    for u in range(n):
        dp[1 << u, u] = 0.0 if u == start else big

    all_masks = np.arange(size, dtype=np.int64)
    pops = _popcounts(all_masks)
    col = costs.T.copy()  # col[j] = costs[:, j], contiguous rows
    for k in range(1, n):
        level = all_masks[pops == k]
        for j in range(n):
            free = (level >> j) & 1 == 0
            src = level[free]
            if not len(src):
                continue
            cand = dp[src] + col[j]
            best_i = np.argmin(cand, axis=1)
            rows = np.arange(len(src))
            dp[src | (1 << j), j] = cand[rows, best_i]
            parent[src | (1 << j), j] = best_i

    full = size - 1
    back = np.full(n, big)
    back[start] = 0.0
    tours = dp[full] + back
    end = int(np.argmin(tours))
    length = float(tours[end] - big)

    seq = []
    mask, j = full, end
    while j >= 0:
        seq.append(j)
        prev = int(parent[mask, j])
        mask ^= 1 << j
        j = prev
    seq.reverse()
    if seq[0] != start:
        # Tour ran the path backwards (entered via the K edge, exited at start).
        seq.reverse()
    if seq[0] != start or sorted(seq) != list(range(n)):
        raise AssertionError("virtual-node reduction produced an invalid path")
    return PathPlan(order=tuple(seq), total_length=length,
                    solver=SOLVER_EXACT, optimality_gap_bound=0.0)


def _nearest_neighbor_order(costs: np.ndarray, start: int) -> np.ndarray:
    n = len(costs)
    order = np.empty(n, dtype=int)
    order[0] = start
    used = np.zeros(n, dtype=bool)
    used[start] = True
    cur = start
    for pos in range(1, n):
        row = np.where(used, np.inf, costs[cur])
        cur = int(np.argmin(row))
        order[pos] = cur
        used[cur] = True
    return order


def _two_opt(costs: np.ndarray, order: np.ndarray) -> np.ndarray:
    """Best-improvement 2-opt for the pinned-start open path; start never moves."""
    o = np.asarray(order, dtype=int).copy()
    q = len(o)
    if q < 3:
        return o
    idx = np.arange(1, q)
    ii = idx[:, None]
    jj = idx[None, :]
    jn = np.minimum(jj + 1, q - 1)
    while True:
        b = costs[np.ix_(o, o)]
        head = b[ii - 1, jj] - b[ii - 1, ii]
        # Reversing a tail segment has no successor edge to repair.
        tail = np.where(jj < q - 1, b[ii, jn] - b[jj, jn], 0.0)
        delta = np.where(jj > ii, head + tail, np.inf)
        flat = int(np.argmin(delta))
        if delta.flat[flat] >= -1e-12:
            return o
        i = int(idx[flat // (q - 1)])
        j = int(idx[flat % (q - 1)])
        o[i:j + 1] = o[i:j + 1][::-1]


def hamiltonian_path_heuristic(costs: np.ndarray, start: int, seed: int = 0,
                               extra_starts: int = 3, warm_orders=()) -> PathPlan:
    """Nearest-neighbor construction plus 2-opt, over several seeded starts.

    ``warm_orders`` may supply known-good visiting orders (e.g. an iterative
    planner's traversal) as additional 2-opt starting points; the result is
    then never longer than the best warm order.
    """
    costs = validate_cost_matrix(costs)
    n = len(costs)
    _check_start(n, start)
    if extra_starts < 0:
        raise InvalidArgumentError("extra_starts must be >= 0")
    if n == 1:
        return PathPlan(order=(start,), total_length=0.0, solver=SOLVER_HEURISTIC)

    starts = [_nearest_neighbor_order(costs, start)]
    others = np.array([i for i in range(n) if i != start])
    for restart in range(extra_starts):
        rng = np.random.default_rng([seed, restart])
        starts.append(np.concatenate([[start], rng.permutation(others)]))
    for order in warm_orders:
        order = np.asarray(order, dtype=int)
        if sorted(order.tolist()) != list(range(n)) or order[0] != start:
            raise InvalidArgumentError("warm order must be a permutation starting at start")
        starts.append(order.copy())

    best_order, best_len = None, np.inf
    for order in starts:
        improved = _two_opt(costs, order)
        length = path_length(costs, improved)
        if length < best_len:
            best_order, best_len = improved, length
    return PathPlan(order=tuple(int(i) for i in best_order), total_length=best_len,
                    solver=SOLVER_HEURISTIC)


def plan_global_path(vs: ViewSpace, start_pose=None, obs: ObstacleSphere = None,
                     exact_cap: int = EXACT_SOLVER_CAP, seed: int = 0) -> PathPlan:
    """Plan the visiting order for a view space from a start pose.

    The start defaults to the zenith view and is appended as an extra node
    when it is not already in the space (the appended node does not count
    against the exact-solver cap).  Node indices in the returned order refer
    to ``vs.poses``, with the appended start at index len(vs.poses).
    """
    if len(vs.poses) < 1:
        raise InvalidArgumentError("cannot plan over an empty view space")
    if start_pose is None:
        start_pose = top_view(vs.center, vs.radius)
    if obs is None:
        obs = ObstacleSphere(center=tuple(vs.center), radius_obs=0.0)
    positions = vs.positions()
    start_pos = _position_of(start_pose)
    dists = np.linalg.norm(positions - start_pos, axis=1)
    member = int(np.argmin(dists)) if len(dists) else -1
    if member >= 0 and dists[member] <= 1e-9 * vs.radius:
        nodes = positions
        start_idx = member
        appended = 0
    else:
        nodes = np.vstack([positions, start_pos])
        start_idx = len(positions)
        appended = 1

    t0 = time.perf_counter()
    costs = build_cost_matrix(nodes, obs)
    if len(nodes) - appended <= exact_cap:
        plan = hamiltonian_path_exact(costs, start_idx, cap=len(nodes))
    else:
        plan = hamiltonian_path_heuristic(costs, start_idx, seed=seed)
    plan.planning_time_s = time.perf_counter() - t0
    return plan


def save_cost_csv(costs: np.ndarray, path) -> None:
    costs = validate_cost_matrix(costs)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([len(costs)])
        for row in costs:
            writer.writerow([jsonio.format_float(x) for x in row])


def load_cost_csv(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise FormatError(f"{path}: empty cost matrix file")
        try:
            n = int(header[0])
        except ValueError as exc:
            raise FormatError(f"{path}: header must be the node count") from exc
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n:
                raise FormatError(f"{path}: expected {n} columns", line=lineno)
            try:
                rows.append([float(x) for x in row])
            except ValueError as exc:
                raise FormatError(f"{path}: {exc}", line=lineno) from exc
    if len(rows) != n:
        raise FormatError(f"{path}: expected {n} rows, got {len(rows)}")
    try:
        return validate_cost_matrix(np.array(rows))
    except InvalidArgumentError as exc:
        raise FormatError(f"{path}: {exc}") from exc
