"""CVRP/TSP data model, instance I/O, classical TSP solvers and tour metrics.

Node indices are 0-based everywhere. A :class:`TspInstance` always carries the
depot as its fixed start node.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

HELD_KARP_MAX_NODES = 14
_SYM_TOL = 1e-9


class InstanceError(ValueError):
    """Raised when an instance fails to parse or violates an invariant."""


def euclidean_matrix(coords) -> np.ndarray:
    pts = np.asarray(coords, dtype=float).reshape(-1, 2)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def _check_distances(d: np.ndarray) -> None:
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise InstanceError(f"distance matrix must be square, got shape {d.shape}")
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise InstanceError("distances must be finite and nonnegative")
    if np.any(np.diag(d) != 0):
        raise InstanceError("distance matrix must have a zero diagonal")
    if not np.allclose(d, d.T, rtol=0, atol=_SYM_TOL):
        raise InstanceError("distance matrix must be symmetric")


@dataclass(frozen=True, eq=False)
class CvrpInstance:
    name: str
    coords: Optional[np.ndarray]
    depot: int
    demands: np.ndarray
    capacity: int
    distances: np.ndarray

    def __post_init__(self):
        n_nodes = len(self.demands)
        if self.capacity <= 0:
            raise InstanceError(f"capacity must be positive, got {self.capacity}")
        if not 0 <= self.depot < n_nodes:
            raise InstanceError(f"depot index {self.depot} out of range")
        if self.distances.shape != (n_nodes, n_nodes):
            raise InstanceError("distance matrix does not match node count")
        _check_distances(self.distances)
        if self.demands[self.depot] != 0:
            raise InstanceError(f"depot {self.depot} must have zero demand")
        for v in self.customers:
            c = int(self.demands[v])
            if c <= 0 or c > self.capacity:
                raise InstanceError(
                    f"node {v}: demand {c} outside (0, capacity={self.capacity}]"
                )
        if self.coords is not None:
            if self.coords.shape != (n_nodes, 2):
                raise InstanceError("coords must have one (x, y) pair per node")
            if not np.allclose(self.distances, euclidean_matrix(self.coords), rtol=0, atol=1e-9):
                raise InstanceError("distances disagree with Euclidean coordinates")
        for arr in (self.coords, self.demands, self.distances):
            if arr is not None:
                arr.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.demands)

    @property
    def customers(self) -> list[int]:
        """Non-depot node indices in increasing order."""
        return [v for v in range(self.n_nodes) if v != self.depot]

    @property
    def total_demand(self) -> int:
        return int(self.demands.sum())

    def __eq__(self, other):
        if not isinstance(other, CvrpInstance):
            return NotImplemented
        same_coords = (self.coords is None and other.coords is None) or (
            self.coords is not None
            and other.coords is not None
            and np.array_equal(self.coords, other.coords)
        )
        return (
            self.name == other.name
            and self.depot == other.depot
            and self.capacity == other.capacity
            and same_coords
            and np.array_equal(self.demands, other.demands)
            and np.array_equal(self.distances, other.distances)
        )


def make_instance(name, coords, demands, capacity, depot=0, distances=None) -> CvrpInstance:
    """Build a validated instance; distances derived from coords when absent."""
    xy = None if coords is None else np.asarray(coords, dtype=float).reshape(-1, 2)
    dem = np.asarray(demands, dtype=np.int64)
    if distances is None:
        if xy is None:
            raise InstanceError("need either coordinates or a distance matrix")
        dist = euclidean_matrix(xy)
    else:
        dist = np.array(distances, dtype=float)
    return CvrpInstance(str(name), xy, int(depot), dem, int(capacity), dist)


@dataclass(frozen=True, eq=False)
class TspInstance:
    distances: np.ndarray
    origin_labels: tuple[int, ...] = ()
    start: int = 0
    coords: Optional[np.ndarray] = None

    def __post_init__(self):
        d = np.asarray(self.distances, dtype=float)
        object.__setattr__(self, "distances", d)
        _check_distances(d)
        m = d.shape[0]
        if not self.origin_labels:
            object.__setattr__(self, "origin_labels", tuple(range(m)))
        if len(self.origin_labels) != m or len(set(self.origin_labels)) != m:
            raise InstanceError("origin_labels must be an injective map over all nodes")
        if not 0 <= self.start < max(m, 1):
            raise InstanceError(f"start index {self.start} out of range")
        if self.coords is not None:
            object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float).reshape(m, 2))

    @property
    def m(self) -> int:
        return self.distances.shape[0]


def tsp_from_coords(coords, start: int = 0) -> TspInstance:
    xy = np.asarray(coords, dtype=float).reshape(-1, 2)
    return TspInstance(euclidean_matrix(xy), start=start, coords=xy)


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(v) for v in self.order))

    def __len__(self):
        return len(self.order)

    def __iter__(self):
        return iter(self.order)


def validate_tour(t: TspInstance, tour: Tour) -> None:
    if sorted(tour.order) != list(range(t.m)):
        raise InstanceError(f"tour {tour.order} is not a permutation of {t.m} nodes")
    if t.m and tour.order[0] != t.start:
        raise InstanceError(f"tour must begin at start node {t.start}")


def tour_length(t: TspInstance, tour: Tour) -> float:
    validate_tour(t, tour)
    order = tour.order
    if len(order) < 2:
        return 0.0
    total = 0.0
    for a, b in zip(order, order[1:] + order[:1]):
        total += float(t.distances[a, b])
    return total


def solve_tsp_exact(t: TspInstance) -> tuple[Tour, float]:
    """Held-Karp dynamic program over subsets of the non-start nodes."""
    m = t.m
    if m > HELD_KARP_MAX_NODES:
        raise InstanceError(f"exact TSP limited to {HELD_KARP_MAX_NODES} nodes, got {m}")
    if m <= 1:
        return Tour((t.start,) if m else ()), 0.0
    d = t.distances
    others = [v for v in range(m) if v != t.start]
    k = len(others)
    sub = d[np.ix_(others, others)]
    from_start = d[t.start, others]

    full = 1 << k
    cost = np.full((full, k), np.inf)
    parent = np.full((full, k), -1, dtype=np.int64)
    for j in range(k):
        cost[1 << j, j] = from_start[j]

    masks = np.arange(full)
    popcount = np.array([bin(x).count("1") for x in range(full)])
    for size in range(2, k + 1):
        layer = masks[popcount == size]
        for j in range(k):
            mj = layer[(layer >> j) & 1 == 1]
            prev = mj ^ (1 << j)
            # cand[r, i] = cost of reaching j from i with visited set prev[r]
            cand = cost[prev] + sub[:, j][None, :]
            best = np.argmin(cand, axis=1)
            cost[mj, j] = cand[np.arange(len(mj)), best]
            parent[mj, j] = best

    closing = cost[full - 1] + from_start
    last = int(np.argmin(closing))
    length = float(closing[last])

    path = []
    mask = full - 1
    j = last
    while j >= 0:
        path.append(others[j])
        pj = int(parent[mask, j])
        mask ^= 1 << j
        j = pj
    path.reverse()
    order = (t.start, *path)
    # canonical direction: smaller second node first
    if len(order) > 2 and order[1] > order[-1]:
        order = (order[0], *reversed(order[1:]))
    return Tour(order), length


def _nearest_neighbor(t: TspInstance) -> list[int]:
    d = t.distances
    order = [t.start]
    left = set(range(t.m)) - {t.start}
    while left:
        here = order[-1]
        # min over (distance, index) gives lowest-index tie-breaking
        nxt = min(left, key=lambda v: (d[here, v], v))
        order.append(nxt)
        left.remove(nxt)
    return order


def two_opt(t: TspInstance, order: Sequence[int], eps: float = 1e-12) -> list[int]:
    """First-improvement 2-opt on a closed tour; position 0 stays fixed."""
    d = t.distances
    order = list(order)
    m = len(order)
    improved = True
    while improved:
        improved = False
        for i in range(0, m - 2):
            a, b = order[i], order[i + 1]
            for j in range(i + 2, m if i > 0 else m - 1):
                c, e = order[j], order[(j + 1) % m]
                delta = d[a, c] + d[b, e] - d[a, b] - d[c, e]
                if delta < -eps:
                    order[i + 1 : j + 1] = reversed(order[i + 1 : j + 1])
                    improved = True
                    break
            if improved:
                break
    return order


def solve_tsp_heuristic(t: TspInstance) -> tuple[Tour, float]:
    """Nearest neighbour from the start node, then 2-opt to local optimality."""
    if t.m < 1:
        raise InstanceError("heuristic TSP needs at least one node")
    tour = Tour(two_opt(t, _nearest_neighbor(t)))
    return tour, tour_length(t, tour)


@dataclass(frozen=True)
class CvrpSolution:
    tours: tuple[Tour, ...]
    total_length: float
    loads: tuple[int, ...] = field(default=())


def generate_random(n: int, capacity: int, demand_range=(1, 3), bbox: float = 1.0,
                    seed: int = 0, name: Optional[str] = None) -> CvrpInstance:
    """Uniform random nodes in [0, bbox]^2 with the depot at the box centre."""
    lo, hi = (int(x) for x in demand_range)
    if n < 0:
        raise InstanceError(f"node count must be >= 0, got {n}")
    if capacity <= 0:
        raise InstanceError(f"capacity must be positive, got {capacity}")
    if lo < 1 or hi > capacity or lo > hi:
        raise InstanceError(f"invalid demand range [{lo}, {hi}] for capacity {capacity}")
    if not bbox > 0:
        raise InstanceError(f"bounding box side must be positive, got {bbox}")
    rng = np.random.default_rng(seed)
    xy = rng.uniform(0.0, bbox, size=(n, 2))
    dem = rng.integers(lo, hi + 1, size=n)
    coords = np.vstack([[bbox / 2.0, bbox / 2.0], xy])
    demands = np.concatenate([[0], dem])
    return make_instance(name or f"random-n{n}-s{seed}", coords, demands, capacity, depot=0)


# --- serialization -----------------------------------------------------------

NATIVE_VERSION = 1


def instance_to_dict(inst: CvrpInstance) -> dict:
    nodes = []
    for v in range(inst.n_nodes):
        node = {"id": v}
        if inst.coords is not None:
            node["x"] = float(inst.coords[v, 0])
            node["y"] = float(inst.coords[v, 1])
        node["demand"] = int(inst.demands[v])
        nodes.append(node)
    doc = {
        "format": "qpathfinder-cvrp",
        "version": NATIVE_VERSION,
        "name": inst.name,
        "capacity": int(inst.capacity),
        "depot": int(inst.depot),
        "nodes": nodes,
    }
    if inst.coords is None:
        doc["distances"] = inst.distances.tolist()
    return doc


def dumps_instance(inst: CvrpInstance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


def write_instance(inst: CvrpInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_instance(inst))


def _parse_native(text: str) -> CvrpInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"native format: invalid JSON ({exc})") from exc
    try:
        nodes = sorted(doc["nodes"], key=lambda nd: int(nd["id"]))
        ids = [int(nd["id"]) for nd in nodes]
        if ids != list(range(len(ids))):
            raise InstanceError("native format: node ids must be exactly 0..N-1")
        has_xy = all("x" in nd and "y" in nd for nd in nodes)
        coords = [(float(nd["x"]), float(nd["y"])) for nd in nodes] if has_xy else None
        demands = [int(nd["demand"]) for nd in nodes]
        return make_instance(
            doc.get("name", "unnamed"),
            coords,
            demands,
            int(doc["capacity"]),
            depot=int(doc.get("depot", 0)),
            distances=None if has_xy else doc.get("distances"),
        )
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"native format: missing or malformed field ({exc})") from exc


def _parse_euc2d(text: str) -> CvrpInstance:
    """TSPLIB-style CVRP text: header lines, NODE_COORD_SECTION, DEMAND_SECTION, DEPOT_SECTION."""
    name = "unnamed"
    capacity = None
    coords: dict[int, tuple[float, float]] = {}
    demands: dict[int, int] = {}
    depot_ids: list[int] = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        upper = line.upper()
        if upper == "EOF":
            break
        if upper.endswith("_SECTION"):
            section = upper
            continue
        if ":" in line and section is None:
            key, _, val = line.partition(":")
            key = key.strip().upper()
            if key == "NAME":
                name = val.strip()
            elif key == "CAPACITY":
                capacity = int(val)
            elif key == "EDGE_WEIGHT_TYPE" and val.strip().upper() != "EUC_2D":
                raise InstanceError(f"line {lineno}: only EUC_2D supported")
            continue
        parts = line.split()
        try:
            if section == "NODE_COORD_SECTION":
                coords[int(parts[0])] = (float(parts[1]), float(parts[2]))
            elif section == "DEMAND_SECTION":
                demands[int(parts[0])] = int(parts[1])
            elif section == "DEPOT_SECTION":
                if int(parts[0]) != -1:
                    depot_ids.append(int(parts[0]))
            else:
                raise InstanceError(f"line {lineno}: data outside a section")
        except (IndexError, ValueError) as exc:
            raise InstanceError(f"line {lineno}: cannot parse {line!r}") from exc
    if capacity is None:
        raise InstanceError("euc2d format: CAPACITY missing")
    if not coords:
        raise InstanceError("euc2d format: NODE_COORD_SECTION missing or empty")
    ids = sorted(coords)
    if set(demands) - set(ids):
        raise InstanceError("euc2d format: demand given for unknown node")
    depot_id = depot_ids[0] if depot_ids else ids[0]
    if depot_id not in coords:
        raise InstanceError(f"euc2d format: depot {depot_id} has no coordinates")
    index = {nid: k for k, nid in enumerate(ids)}
    return make_instance(
        name,
        [coords[i] for i in ids],
        [demands.get(i, 0) for i in ids],
        capacity,
        depot=index[depot_id],
    )


def load_instance(source, format: str = "native") -> CvrpInstance:
    """Parse an instance from a path, text/byte stream, or raw bytes."""
    if isinstance(source, (bytes, bytearray)):
        text = bytes(source).decode("utf-8")
    elif isinstance(source, (str,)) or hasattr(source, "__fspath__"):
        with open(source, "rb") as fh:
            text = fh.read().decode("utf-8")
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    if format == "native":
        return _parse_native(text)
    if format in ("euc2d", "euc2d-text"):
        return _parse_euc2d(text)
    raise InstanceError(f"unknown instance format {format!r}")


def loads_instance(text: str, format: str = "native") -> CvrpInstance:
    return load_instance(io.StringIO(text), format=format)
