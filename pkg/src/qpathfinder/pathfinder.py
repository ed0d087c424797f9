"""Solution-path catalog, enumeration with qubit-cap pruning, execution, scoring and ranking."""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .ansatz import DisconnectedGraphError, QaoaAnsatz, interaction_graph, recommend_depth
from .decompose import Clustering, assemble, cluster_capacitated, subproblems
from .encode import (
    EncodingConfig,
    EncodingError,
    choose_penalty,
    encoded_tour,
    feasible_indices,
    qubo_to_ising,
    scale_ising,
    tsp_to_qubo,
)
from .instances import (
    HELD_KARP_MAX_NODES,
    CvrpInstance,
    TspInstance,
    solve_tsp_exact,
    solve_tsp_heuristic,
    tour_length,
)
from .optimizers import Objective, OptimizerConfig, init_params, minimize
from .qsim import QaoaEnergy, mass_on, probabilities, sample

SCHEMA_VERSION = 1
SHOTS = 4096
DEFAULT_WEIGHTS = (0.6, 0.3, 0.1)

DECOMPOSITIONS = ("direct-cvrp", "cluster-first")
CLASSICAL = ("classical-exact", "classical-heuristic")
LEVELS = ("decomposition", "encoding", "penalty", "scaling", "algorithm", "optimizer")


@dataclass(frozen=True)
class CatalogEntry:
    level: str
    name: str
    status: str = "implemented"  # implemented | pruned-static | unimplemented
    rationale: str = ""


@dataclass(frozen=True)
class PathCatalog:
    entries: tuple

    def __post_init__(self):
        for lvl in LEVELS:
            if not self.implemented(lvl):
                raise ValueError(f"catalog level {lvl!r} has no implemented option")

    def implemented(self, level: str) -> list[str]:
        return [e.name for e in self.entries if e.level == level and e.status == "implemented"]

    def non_implemented(self) -> list[CatalogEntry]:
        return [e for e in self.entries if e.status != "implemented"]

    def restrict(self, **choices) -> "PathCatalog":
        """Limit the implemented options at the given levels to the named ones.

        Names missing from the catalog are registered as implemented.
        """
        keep = []
        for e in self.entries:
            chosen = choices.get(e.level)
            if chosen is not None and e.status == "implemented" and e.name not in chosen:
                continue
            keep.append(e)
        for level, chosen in choices.items():
            for name in chosen or ():
                if not any(e.level == level and e.name == name for e in keep):
                    keep.append(CatalogEntry(level, name))
        return PathCatalog(tuple(keep))


def default_catalog() -> PathCatalog:
    E = CatalogEntry
    return PathCatalog((
        E("decomposition", "direct-cvrp"),
        E("decomposition", "cluster-first"),
        E("encoding", "one-hot"),
        E("encoding", "binary", "unimplemented", "integer-binary encoding not provided"),
        E("encoding", "domain-wall", "unimplemented", "domain-wall encoding not provided"),
        E("encoding", "hobo", "unimplemented", "higher-order terms not supported by the simulator"),
        E("penalty", "exact-min-search"),
        E("penalty", "bounding-box"),
        E("penalty", "unbalanced-penalization", "unimplemented", "not provided"),
        E("scaling", "exact-width"),
        E("scaling", "gershgorin-bound"),
        E("algorithm", "qaoa"),
        E("algorithm", "classical-exact"),
        E("algorithm", "classical-heuristic"),
        E("algorithm", "warm-start-qaoa", "pruned-static",
          "one-hot tours differ in >= 4 bits, so a classical seed biases the "
          "start state towards a distant basin"),
        E("algorithm", "recursive-qaoa", "pruned-static",
          "first round needs the full qubit count and eliminations rely on "
          "two-point correlators that are weak at low depth"),
        E("optimizer", "adam"),
        E("optimizer", "nelder-mead"),
        E("optimizer", "umda"),
        E("optimizer", "quasi-newton"),
    ))


@dataclass(frozen=True)
class SolutionPath:
    decomposition: str
    algorithm: str
    penalty_strategy: Optional[str] = None
    scaling_strategy: Optional[str] = None
    optimizer: Optional[str] = None
    encoding: Optional[str] = None
    depth: Optional[int] = None

    def __post_init__(self):
        quantum = self.algorithm == "qaoa"
        if quantum != (self.optimizer is not None):
            raise ValueError("an optimizer is required for qaoa paths and forbidden otherwise")
        if self.decomposition not in DECOMPOSITIONS:
            raise ValueError(f"unknown decomposition {self.decomposition!r}")
        if not quantum and self.algorithm not in CLASSICAL:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if quantum:
            EncodingConfig(penalty_strategy=self.penalty_strategy,
                           scaling_strategy=self.scaling_strategy)
            OptimizerConfig(method=self.optimizer)
            if self.encoding is None:
                object.__setattr__(self, "encoding", "one-hot")

    @property
    def is_quantum(self) -> bool:
        return self.algorithm == "qaoa"

    @property
    def id(self) -> str:
        if not self.is_quantum:
            return f"{self.decomposition}/{self.algorithm}"
        algo = "qaoa" if self.depth is None else f"qaoa(p={self.depth})"
        return "/".join((self.decomposition, self.encoding, self.penalty_strategy,
                         self.scaling_strategy, algo, self.optimizer))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Caps:
    qubit_cap: int = 20


@dataclass(frozen=True)
class Budget:
    max_evals: int = 20_000
    timeout: Optional[float] = None


@dataclass(frozen=True)
class Settings:
    """Encoding knobs shared by every path of one run."""

    lam: float = 1.2
    bbox_factor: float = 1.0
    calibration: float = 0.5
    shots: int = SHOTS

    def encoding(self, path: SolutionPath, caps: Caps) -> EncodingConfig:
        return EncodingConfig(
            penalty_strategy=path.penalty_strategy,
            lam=self.lam,
            bbox_factor=self.bbox_factor,
            scaling_strategy=path.scaling_strategy,
            calibration=self.calibration,
            qubit_cap=min(caps.qubit_cap, 24),
        )


def estimate_qubits(path: SolutionPath, inst: CvrpInstance,
                    clustering: Optional[Clustering] = None) -> int:
    """Qubit requirement proxy; classical paths need none."""
    if not path.is_quantum:
        return 0
    n = len(inst.customers)
    if path.decomposition == "direct-cvrp":
        return n * n
    cl = clustering or cluster_capacitated(inst)
    return max((len(c) ** 2 for c in cl.clusters), default=0)


def enumerate_paths(catalog: PathCatalog, inst: CvrpInstance, caps: Caps = Caps(),
                    clustering: Optional[Clustering] = None, depth: Optional[int] = None):
    """All implemented paths with their prune status: (path, status, reason)."""
    cl = clustering or cluster_capacitated(inst)
    out = []
    algos = catalog.implemented("algorithm")
    for decomp in catalog.implemented("decomposition"):
        if "qaoa" in algos:
            for enc in catalog.implemented("encoding"):
                for pen in catalog.implemented("penalty"):
                    for sc in catalog.implemented("scaling"):
                        for opt in catalog.implemented("optimizer"):
                            path = SolutionPath(decomp, "qaoa", pen, sc, opt, enc, depth)
                            q = estimate_qubits(path, inst, cl)
                            if q > caps.qubit_cap:
                                out.append((path, "pruned",
                                            f"estimated {q} qubits exceed qubit cap {caps.qubit_cap}"))
                            else:
                                out.append((path, "ok", ""))
        if decomp == "cluster-first":
            for algo in algos:
                if algo in CLASSICAL:
                    out.append((SolutionPath(decomp, algo), "ok", ""))
    return out


def path_seed(seed: int, path_id: str) -> int:
    digest = hashlib.sha256(f"{seed}:{path_id}".encode()).digest()
    return int.from_bytes(digest[:4], "little")


@dataclass
class PathReport:
    path_id: str
    path: dict
    status: str
    reason: str = ""
    qubits: int = 0
    subproblems: list = field(default_factory=list)
    tours: Optional[list] = None
    total_length: Optional[float] = None
    reference_length: Optional[float] = None
    approximation_ratio: Optional[float] = None
    feasible_probability: Optional[float] = None
    optimal_probability: Optional[float] = None
    evaluations: int = 0
    artifacts: list = field(default_factory=list, repr=False, compare=False)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc.pop("artifacts")
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "PathReport":
        return cls(**doc)


@dataclass
class SubproblemArtifacts:
    """In-memory leftovers of a quantum run (traces for export, landscape centre)."""

    cluster: int
    energy: QaoaEnergy
    trace: object
    params: np.ndarray


def _reference(tsps: list[TspInstance]) -> Optional[list[float]]:
    if any(t.m > HELD_KARP_MAX_NODES for t in tsps):
        return None
    return [solve_tsp_exact(t)[1] for t in tsps]


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-9 * max(1.0, abs(b))


@dataclass
class BuiltEnergy:
    energy: QaoaEnergy
    penalty: float
    penalty_min: Optional[float]


def build_energy(tsp: TspInstance, path: SolutionPath, enc: EncodingConfig) -> BuiltEnergy:
    """Penalty choice, encoding, scaling and depth selection for one subproblem."""
    P, p_min = choose_penalty(tsp, enc)
    raw = qubo_to_ising(tsp_to_qubo(tsp, P))
    try:
        im = scale_ising(raw, enc)
    except EncodingError:
        im = raw  # constant Hamiltonian; every state is a ground state
    try:
        depth = recommend_depth(interaction_graph(im), path.depth)
    except DisconnectedGraphError:
        depth = path.depth if path.depth is not None else 1
    return BuiltEnergy(QaoaEnergy(QaoaAnsatz(im, max(depth, 1))), P, p_min)


def _run_quantum(tsp: TspInstance, path: SolutionPath, enc: EncodingConfig, seed: int,
                 budget: Budget, settings: Settings, opt_len: Optional[float]):
    m = tsp.m
    built = build_energy(tsp, path, enc)
    energy, P, p_min = built.energy, built.penalty, built.penalty_min
    im, depth = energy.ansatz.ising, energy.ansatz.p
    obj = Objective(energy, 2 * depth)
    cfg = OptimizerConfig(method=path.optimizer, max_evals=budget.max_evals,
                          timeout=budget.timeout, seed=seed)
    trace = minimize(obj, init_params(depth, "linear-ramp", seed), cfg)
    theta = trace.best_params
    psi = energy.state(theta)

    idx, tours = feasible_indices(m)
    local = [encoded_tour(tsp, tr) for tr in tours]
    lengths = np.array([tour_length(tsp, tr) for tr in local])
    probs = probabilities(psi)
    feas_prob = mass_on(psi, idx)
    if opt_len is not None:
        optimal = np.array([_close(L, opt_len) for L in lengths])
        opt_prob = float(probs[idx[optimal]].sum())
    else:
        opt_prob = None

    counts = sample(psi, settings.shots, seed)
    pos = {int(z): k for k, z in enumerate(idx)}
    hits = [pos[z] for z in counts if z in pos]
    if hits:
        chosen = min(hits, key=lambda k: (lengths[k], idx[k]))
        source = "sample"
    else:
        chosen = int(np.argmax(probs[idx]))  # argmax keeps the lowest index on ties
        source = "distribution"
    record = {
        "qubits": im.n,
        "penalty": P,
        "penalty_min": p_min,
        "scale": im.scale,
        "depth": depth,
        "trace": trace.summary(),
        "final_params": [float(x) for x in theta],
        "feasible_probability": feas_prob,
        "optimal_probability": opt_prob,
        "decoded_from": source,
    }
    return local[chosen], record, trace, energy, theta


def evaluate_path(inst: CvrpInstance, path: SolutionPath, seed: int = 0,
                  budget: Budget = Budget(), caps: Caps = Caps(),
                  settings: Settings = Settings(),
                  clustering: Optional[Clustering] = None) -> PathReport:
    """Run one solution path end to end and measure it."""
    cl = clustering or cluster_capacitated(inst)
    qubits = estimate_qubits(path, inst, cl)
    report = PathReport(path.id, path.to_dict(), "ok", qubits=qubits)
    if qubits > caps.qubit_cap:
        report.status, report.reason = "pruned", f"estimated {qubits} qubits exceed qubit cap {caps.qubit_cap}"
        return report
    if path.decomposition == "direct-cvrp":
        if not inst.customers:
            report.tours, report.total_length, report.evaluations = [], 0.0, 0
            return report
        report.status, report.reason = "failed", "direct-cvrp encoding is not executable"
        return report

    tsps = subproblems(inst, cl)
    ref = _reference(tsps)
    chosen = []
    evals = 0
    feas, optp = [], []
    for k, tsp in enumerate(tsps):
        opt_len = None if ref is None else ref[k]
        sub = {"cluster": list(tsp.origin_labels[1:]), "nodes": tsp.m}
        if path.algorithm == "classical-exact":
            tour, length = solve_tsp_exact(tsp)
            sub.update(qubits=0, feasible_probability=1.0)
        elif path.algorithm == "classical-heuristic":
            tour, length = solve_tsp_heuristic(tsp)
            sub.update(qubits=0, feasible_probability=1.0)
        else:
            enc = settings.encoding(path, caps)
            sub_seed = path_seed(seed, f"{path.id}#{k}")
            tour, record, trace, energy, theta = _run_quantum(
                tsp, path, enc, sub_seed, budget, settings, opt_len)
            if trace.termination == "timeout":
                report.status, report.reason = "failed", "timeout"
                return report
            sub.update(record)
            evals += trace.evaluations
            report.artifacts.append(SubproblemArtifacts(k, energy, trace, theta))
            length = tour_length(tsp, tour)
        if not path.is_quantum:
            sub["optimal_probability"] = None if opt_len is None else float(_close(length, opt_len))
        sub["tour"] = [tsp.origin_labels[v] for v in tour.order]
        sub["length"] = length
        sub["optimal_length"] = opt_len
        feas.append(sub["feasible_probability"])
        optp.append(sub["optimal_probability"])
        report.subproblems.append(sub)
        chosen.append((tsp, tour))

    sol = assemble(inst, chosen)
    report.tours = [list(t.order) for t in sol.tours]
    report.total_length = sol.total_length
    report.evaluations = evals
    if ref is not None:
        report.reference_length = float(sum(ref))
        if report.reference_length > 0:
            report.approximation_ratio = sol.total_length / report.reference_length
        else:
            report.approximation_ratio = 1.0
    report.feasible_probability = float(np.mean(feas)) if feas else 1.0
    if optp and all(p is not None for p in optp):
        report.optimal_probability = float(np.mean(optp))
    elif not optp:
        report.optimal_probability = 1.0
    return report


def normalize_weights(weights) -> tuple[float, float, float]:
    w = tuple(float(x) for x in weights)
    if len(w) != 3 or any(x < 0 for x in w) or sum(w) <= 0:
        raise ValueError(f"weights must be three nonnegative numbers with a positive sum, got {weights}")
    return w


def score(report, weights=DEFAULT_WEIGHTS) -> float:
    """Weighted quality/feasibility/cost score; -inf unless the report is ok."""
    rep = report if isinstance(report, dict) else report.to_dict()
    if rep["status"] != "ok":
        return -math.inf
    w_r, w_f, w_c = normalize_weights(weights)
    terms = []
    if rep["approximation_ratio"] is not None:
        terms.append((w_r, 1.0 / rep["approximation_ratio"]))
    if rep["feasible_probability"] is not None:
        terms.append((w_f, rep["feasible_probability"]))
    terms.append((w_c, -math.log10(1 + rep["evaluations"]) / 10))
    total = sum(w for w, _ in terms)
    if total <= 0:
        return 0.0
    return sum(w * v for w, v in terms) / total


def _rank_key(item):
    sc, rep = item
    return (-sc if sc != -math.inf else math.inf, rep["evaluations"], rep["path_id"])


def rank_reports(reports: list[dict], weights) -> list[dict]:
    scored = sorted(((score(r, weights), r) for r in reports), key=_rank_key)
    return [
        {"rank": k + 1, "path_id": r["path_id"], "status": r["status"],
         "score": None if sc == -math.inf else sc}
        for k, (sc, r) in enumerate(scored)
    ]


@dataclass
class Recommendation:
    document: dict
    reports: list = field(default_factory=list, repr=False)

    @property
    def ranking(self) -> list[dict]:
        return self.document["ranking"]

    def to_json(self) -> str:
        return json.dumps(self.document, indent=2, default=_json_default) + "\n"

    def summary_table(self) -> str:
        by_id = {r["path_id"]: r for r in self.document["reports"]}
        lines = [f"{'rank':>4}  {'score':>8}  {'r':>7}  {'feas':>6}  {'evals':>7}  {'status':<8} path"]
        for row in self.ranking:
            rep = by_id[row["path_id"]]
            sc = "-" if row["score"] is None else f"{row['score']:.4f}"
            r = rep["approximation_ratio"]
            f = rep["feasible_probability"]
            lines.append(
                f"{row['rank']:>4}  {sc:>8}  {'-' if r is None else f'{r:.4f}':>7}  "
                f"{'-' if f is None else f'{f:.3f}':>6}  {rep['evaluations']:>7}  "
                f"{row['status']:<8} {row['path_id']}"
                + (f"  [{rep['reason']}]" if rep["reason"] else "")
            )
        notes = self.document.get("catalog_notes", [])
        if notes:
            lines.append("")
            lines.append("not enumerated:")
            for e in notes:
                lines.append(f"  {e['level']}/{e['name']} ({e['status']}): {e['rationale']}")
        return "\n".join(lines) + "\n"


def _evaluate_job(args):
    inst, path, status, reason, seed, budget, caps, settings, cl = args
    if status != "ok":
        rep = PathReport(path.id, path.to_dict(), status, reason,
                         qubits=estimate_qubits(path, inst, cl))
        return rep
    return evaluate_path(inst, path, path_seed(seed, path.id), budget, caps, settings, cl)


def recommend(inst: CvrpInstance, catalog: Optional[PathCatalog] = None, weights=DEFAULT_WEIGHTS,
              seed: int = 0, budget: Budget = Budget(), caps: Caps = Caps(),
              settings: Settings = Settings(), depth: Optional[int] = None,
              jobs: int = 1) -> Recommendation:
    """Enumerate, evaluate every unpruned path, score and rank."""
    catalog = catalog or default_catalog()
    weights = normalize_weights(weights)
    cl = cluster_capacitated(inst)
    paths = enumerate_paths(catalog, inst, caps, cl, depth)
    jobs_args = [(inst, p, st, why, seed, budget, caps, settings, cl) for p, st, why in paths]
    if jobs > 1 and len(jobs_args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_evaluate_job, jobs_args))
    else:
        reports = [_evaluate_job(a) for a in jobs_args]
    docs = [r.to_dict() for r in reports]
    doc = {
        "schema": "qpathfinder.recommendation",
        "version": SCHEMA_VERSION,
        "instance": inst.name,
        "seed": seed,
        "weights": list(weights),
        "caps": asdict(caps),
        "budget": asdict(budget),
        "settings": asdict(settings),
        "clustering": cl.to_dict(),
        "ranking": rank_reports(docs, weights),
        "reports": docs,
        "catalog_notes": [asdict(e) for e in catalog.non_implemented()],
    }
    return Recommendation(doc, reports)


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def report_json(report: PathReport) -> str:
    return json.dumps(report.to_dict(), indent=2, default=_json_default) + "\n"


def rerank(document: dict) -> list[dict]:
    """Recompute the ranking from persisted reports and weights."""
    return rank_reports(document["reports"], document["weights"])


def default_jobs() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return os.cpu_count() or 1

