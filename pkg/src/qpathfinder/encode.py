"""One-hot TSP QUBO, Ising conversion, penalty selection and spectral scaling.

Conventions used throughout the package:

* variable ``(v, t)`` for node ``v`` in 1..m-1 at position ``t`` in 1..m-1
  has index ``(v - 1) * (m - 1) + (t - 1)``; the start node sits at position 0.
* bit ``k`` of a basis index is qubit/variable ``k``; bit value 1 is spin -1,
  i.e. ``x = (1 - z) / 2``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .instances import Tour, TspInstance, solve_tsp_exact

PENALTY_STRATEGIES = ("exact-min-search", "bounding-box")
SCALING_STRATEGIES = ("exact-width", "gershgorin-bound", "none")
MAX_QUBIT_CAP = 24
_CHUNK = 1 << 16


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class EncodingConfig:
    penalty_strategy: str = "exact-min-search"
    lam: float = 1.2
    bbox_factor: float = 1.0
    scaling_strategy: str = "exact-width"
    calibration: float = 0.5
    qubit_cap: int = 20

    def __post_init__(self):
        if self.penalty_strategy not in PENALTY_STRATEGIES:
            raise EncodingError(f"unknown penalty strategy {self.penalty_strategy!r}")
        if self.scaling_strategy not in SCALING_STRATEGIES:
            raise EncodingError(f"unknown scaling strategy {self.scaling_strategy!r}")
        if not self.lam > 1:
            raise EncodingError(f"lambda must exceed 1, got {self.lam}")
        if not 0 < self.calibration <= 1:
            raise EncodingError(f"calibration must lie in (0, 1], got {self.calibration}")
        if not self.bbox_factor > 0:
            raise EncodingError(f"bbox_factor must be positive, got {self.bbox_factor}")
        if not 0 <= self.qubit_cap <= MAX_QUBIT_CAP:
            raise EncodingError(f"qubit_cap must be in [0, {MAX_QUBIT_CAP}], got {self.qubit_cap}")


def var_index(v: int, t: int, m: int) -> int:
    return (v - 1) * (m - 1) + (t - 1)


@dataclass(frozen=True, eq=False)
class Qubo:
    m: int
    coeffs: np.ndarray
    offset: float = 0.0
    penalty: float = 0.0

    @property
    def nvars(self) -> int:
        return self.coeffs.shape[0]

    def energy(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.coeffs @ x + self.offset)


def tsp_to_qubo(t: TspInstance, P: float) -> Qubo:
    """Distance terms plus ``P`` times the squared one-hot violations."""
    m = t.m
    if m < 2:
        raise EncodingError(f"TSP encoding needs at least 2 nodes, got {m}")
    if not P > 0:
        raise EncodingError(f"penalty must be positive, got {P}")
    k = m - 1
    d = t.distances
    s = t.start
    nodes = [v for v in range(m) if v != s]  # local node v+1 <-> nodes[v]
    Q = np.zeros((k * k, k * k))

    def add(i, j, val):
        if i > j:
            i, j = j, i
        Q[i, j] += val

    for a in range(1, m):
        na = nodes[a - 1]
        add(var_index(a, 1, m), var_index(a, 1, m), d[s, na])
        add(var_index(a, k, m), var_index(a, k, m), d[na, s])
        for b in range(1, m):
            if a == b:
                continue
            nb = nodes[b - 1]
            for pos in range(1, k):
                add(var_index(a, pos, m), var_index(b, pos + 1, m), d[na, nb])

    # (1 - sum x)^2 = 1 - sum x + 2 sum_{i<j} x_i x_j for binary x
    groups = [[var_index(v, pos, m) for v in range(1, m)] for pos in range(1, m)]
    groups += [[var_index(v, pos, m) for pos in range(1, m)] for v in range(1, m)]
    for grp in groups:
        for i in grp:
            Q[i, i] -= P
        for i, j in itertools.combinations(grp, 2):
            add(i, j, 2.0 * P)
    return Qubo(m, Q, offset=2.0 * k * P, penalty=float(P))


def qubo_energies(q: Qubo) -> np.ndarray:
    """xᵀQx + offset for every basis index, evaluated in chunks."""
    n = q.nvars
    out = np.empty(1 << n)
    Q = q.coeffs
    for lo in range(0, 1 << n, _CHUNK):
        idx = np.arange(lo, min(lo + _CHUNK, 1 << n))
        bits = ((idx[:, None] >> np.arange(n)) & 1).astype(float)
        out[lo : lo + len(idx)] = np.einsum("ri,ij,rj->r", bits, Q, bits) + q.offset
    return out


@dataclass(frozen=True, eq=False)
class IsingModel:
    n: int
    h: np.ndarray
    J: dict = field(default_factory=dict)
    offset: float = 0.0
    scale: float = 1.0
    penalty: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "h", np.asarray(self.h, dtype=float).reshape(self.n))
        clean = {}
        for (i, j), val in self.J.items():
            i, j = int(i), int(j)
            if i == j or not (0 <= i < self.n and 0 <= j < self.n):
                raise EncodingError(f"invalid coupling index ({i}, {j})")
            key = (min(i, j), max(i, j))
            clean[key] = clean.get(key, 0.0) + float(val)
        object.__setattr__(self, "J", {k: v for k, v in sorted(clean.items()) if v != 0.0})

    def energy(self, z) -> float:
        z = np.asarray(z, dtype=float)
        e = self.offset + float(self.h @ z)
        for (i, j), val in self.J.items():
            e += val * z[i] * z[j]
        return e

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "h": [float(x) for x in self.h],
            "J": [{"i": i, "j": j, "value": v} for (i, j), v in self.J.items()],
            "offset": float(self.offset),
            "scale": float(self.scale),
            "penalty": None if self.penalty is None else float(self.penalty),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "IsingModel":
        return cls(
            int(doc["n"]),
            np.asarray(doc["h"], dtype=float),
            {(c["i"], c["j"]): c["value"] for c in doc["J"]},
            float(doc["offset"]),
            float(doc.get("scale", 1.0)),
            doc.get("penalty"),
        )


def qubo_to_ising(q: Qubo) -> IsingModel:
    n = q.nvars
    Q = q.coeffs
    h = np.zeros(n)
    J = {}
    offset = q.offset
    for i in range(n):
        qi = Q[i, i]
        offset += qi / 2
        h[i] -= qi / 2
        for j in range(i + 1, n):
            qij = Q[i, j]
            if qij == 0:
                continue
            offset += qij / 4
            h[i] -= qij / 4
            h[j] -= qij / 4
            J[(i, j)] = qij / 4
    h[h == 0] = 0.0  # drop negative zeros
    return IsingModel(n, h, J, offset, 1.0, q.penalty or None)


def ising_energies(im: IsingModel) -> np.ndarray:
    """Diagonal energies for all 2ⁿ basis states (bit k -> z_k = 1 - 2 b_k)."""
    idx = np.arange(1 << im.n)
    spins = [1.0 - 2.0 * ((idx >> k) & 1) for k in range(im.n)]
    e = np.full(1 << im.n, float(im.offset))
    for k in range(im.n):
        if im.h[k] != 0:
            e += im.h[k] * spins[k]
    for (i, j), val in im.J.items():
        e += val * (spins[i] * spins[j])
    return e


def ising_energy(im: IsingModel, basis_index: int) -> float:
    if not 0 <= basis_index < (1 << im.n):
        raise EncodingError(f"basis index {basis_index} out of range for {im.n} qubits")
    z = np.array([1 - 2 * ((basis_index >> k) & 1) for k in range(im.n)], dtype=float)
    return im.energy(z)


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise EncodingError(f"{n} qubits exceed the exhaustive-routine cap of {cap}")


def exact_spectral_width(im: IsingModel, qubit_cap: int = 20) -> float:
    _check_cap(im.n, qubit_cap)
    e = ising_energies(im)
    return float(e.max() - e.min())


def bound_spectral_width(im: IsingModel) -> float:
    return 2.0 * (float(np.abs(im.h).sum()) + sum(abs(v) for v in im.J.values()))


def scale_ising(im: IsingModel, cfg: EncodingConfig = EncodingConfig()) -> IsingModel:
    """Rescale so the cost spectrum width lines up with the X mixer's 2n."""
    if cfg.scaling_strategy == "none":
        return im
    if cfg.scaling_strategy == "exact-width":
        width = exact_spectral_width(im, cfg.qubit_cap)
    else:
        width = cfg.calibration * bound_spectral_width(im)
    if width <= 0:
        raise EncodingError("constant Hamiltonian: spectral width is zero, nothing to scale")
    s = 2.0 * im.n / width
    return replace(
        im,
        h=im.h * s,
        J={k: v * s for k, v in im.J.items()},
        offset=im.offset * s,
        scale=im.scale * s,
    )


def decode_bits(bits, m: int) -> Optional[Tour]:
    """Tour for a one-hot assignment, or None when any row/column is not one-hot."""
    k = m - 1
    x = np.asarray(bits, dtype=int).reshape(k, k)  # rows: node, cols: position
    if k == 0:
        return Tour((0,))
    if not (np.all(x.sum(axis=0) == 1) and np.all(x.sum(axis=1) == 1)):
        return None
    node_at = np.argmax(x, axis=0) + 1
    return Tour((0, *node_at.tolist()))


def bits_of(index: int, n: int) -> np.ndarray:
    return (index >> np.arange(n)) & 1


def decode_index(index: int, m: int) -> Optional[Tour]:
    return decode_bits(bits_of(index, (m - 1) ** 2), m)


def feasible_indices(m: int) -> tuple[np.ndarray, list[Tour]]:
    """All basis indices that decode to a valid tour, with their tours."""
    k = m - 1
    idx = []
    tours = []
    for perm in itertools.permutations(range(1, m)):
        code = 0
        for pos, v in enumerate(perm, 1):
            code |= 1 << var_index(v, pos, m)
        idx.append(code)
        tours.append(Tour((0, *perm)))
    order = np.argsort(idx, kind="stable")
    return np.asarray(idx, dtype=np.int64)[order], [tours[i] for i in order]


def _local_tour_length(t: TspInstance, tour: Tour) -> float:
    # tours from the encoding are in "start first, then non-start nodes" labelling
    nodes = [t.start] + [v for v in range(t.m) if v != t.start]
    order = [nodes[i] for i in tour.order]
    return float(sum(t.distances[a, b] for a, b in zip(order, order[1:] + order[:1])))


def encoded_tour(t: TspInstance, tour: Tour) -> Tour:
    """Map an encoding-labelled tour back to the TSP's own node indices."""
    nodes = [t.start] + [v for v in range(t.m) if v != t.start]
    return Tour([nodes[i] for i in tour.order])


def ground_state_is_optimal(t: TspInstance, P: float, opt_length: Optional[float] = None,
                            rtol: float = 1e-9) -> bool:
    """True when every exhaustive minimum of the QUBO is an optimal tour."""
    if opt_length is None:
        opt_length = solve_tsp_exact(t)[1]
    q = tsp_to_qubo(t, P)
    e = qubo_energies(q)
    e_min = e.min()
    scale = max(1.0, abs(e_min))
    ground = np.flatnonzero(e <= e_min + rtol * scale)
    for g in ground:
        tour = decode_index(int(g), t.m)
        if tour is None:
            return False
        if abs(_local_tour_length(t, tour) - opt_length) > rtol * max(1.0, opt_length):
            return False
    return True


def find_min_penalty(t: TspInstance, cfg: EncodingConfig = EncodingConfig()) -> float:
    """Smallest penalty (to bisection tolerance) whose ground state is an optimal tour."""
    _check_cap((t.m - 1) ** 2, cfg.qubit_cap)
    if t.m < 2:
        raise EncodingError("penalty search needs at least 2 nodes")
    p_hi = t.m * float(t.distances.max())
    if p_hi <= 0:
        raise EncodingError("all distances are zero; no penalty scale exists")
    opt = solve_tsp_exact(t)[1]
    if not ground_state_is_optimal(t, p_hi, opt):
        raise EncodingError(f"bisection bracket failure: P_hi={p_hi} is infeasible")
    lo, hi = 0.0, p_hi
    tol = 1e-3 * p_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ground_state_is_optimal(t, mid, opt):
            hi = mid
        else:
            lo = mid
    return hi


def penalty_from_bbox(t: TspInstance, cfg: EncodingConfig = EncodingConfig()) -> float:
    """bbox_factor times the longer side of the bounding box of the non-start nodes.

    A degenerate box (one non-start node, or coincident points) falls back to
    the largest pairwise distance.
    """
    side = 0.0
    if t.coords is not None and t.m > 1:
        pts = np.delete(t.coords, t.start, axis=0)
        span = pts.max(axis=0) - pts.min(axis=0)
        side = float(span.max())
    if side <= 0:
        side = float(t.distances.max()) if t.m else 0.0
    return cfg.bbox_factor * side


def choose_penalty(t: TspInstance, cfg: EncodingConfig) -> tuple[float, Optional[float]]:
    """Returns (P, P_min) for the configured strategy; P_min is None for bbox."""
    if cfg.penalty_strategy == "exact-min-search":
        p_min = find_min_penalty(t, cfg)
        return cfg.lam * p_min, p_min
    return penalty_from_bbox(t, cfg), None


def encode_tsp(t: TspInstance, cfg: EncodingConfig = EncodingConfig()) -> IsingModel:
    """Penalty selection, QUBO build, Ising conversion and scaling in one call."""
    P, _ = choose_penalty(t, cfg)
    return scale_ising(qubo_to_ising(tsp_to_qubo(t, P)), cfg)
