"""Cluster-first decomposition of a CVRP into per-cluster TSPs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instances import CvrpInstance, CvrpSolution, InstanceError, Tour, TspInstance, tour_length


@dataclass(frozen=True)
class Clustering:
    clusters: tuple[tuple[int, ...], ...]
    demands: tuple[int, ...]

    def __len__(self):
        return len(self.clusters)

    def to_dict(self) -> dict:
        return {"clusters": [list(c) for c in self.clusters], "demands": list(self.demands)}


def cluster_capacitated(inst: CvrpInstance) -> Clustering:
    """Agglomerative clustering by centroid distance under the capacity limit.

    Starts from singletons and merges the closest feasible pair until no pair
    fits in one vehicle. The depot takes no part. Ties go to the pair whose
    lowest member indices are smallest.
    """
    if inst.coords is None:
        raise InstanceError("capacitated clustering needs node coordinates")
    groups = [[v] for v in inst.customers]
    loads = [int(inst.demands[v]) for v in inst.customers]
    centroids = [inst.coords[v].astype(float) for v in inst.customers]
    cap = inst.capacity

    while True:
        best = None
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                if loads[a] + loads[b] > cap:
                    continue
                dist = float(np.hypot(*(centroids[a] - centroids[b])))
                key = (dist, *sorted((min(groups[a]), min(groups[b]))))
                if best is None or key < best[0]:
                    best = (key, a, b)
        if best is None:
            break
        _, a, b = best
        merged = sorted(groups[a] + groups[b])
        groups[a] = merged
        loads[a] += loads[b]
        centroids[a] = inst.coords[merged].mean(axis=0)
        del groups[b], loads[b], centroids[b]

    ordered = sorted(zip(groups, loads), key=lambda gl: gl[0][0])
    return Clustering(tuple(tuple(g) for g, _ in ordered), tuple(l for _, l in ordered))


def check_clustering(inst: CvrpInstance, cl: Clustering) -> None:
    seen = [v for c in cl.clusters for v in c]
    if sorted(seen) != inst.customers:
        raise InstanceError("clusters must partition the non-depot nodes")
    for c in cl.clusters:
        load = int(sum(inst.demands[v] for v in c))
        if load > inst.capacity:
            raise InstanceError(f"cluster {c} demand {load} exceeds capacity {inst.capacity}")


def subproblems(inst: CvrpInstance, cl: Clustering) -> list[TspInstance]:
    """One TSP per cluster; local node 0 is the depot."""
    out = []
    for c in cl.clusters:
        labels = (inst.depot, *c)
        idx = list(labels)
        coords = None if inst.coords is None else inst.coords[idx]
        out.append(
            TspInstance(inst.distances[np.ix_(idx, idx)].copy(), labels, start=0, coords=coords)
        )
    return out


def assemble(inst: CvrpInstance, tours) -> CvrpSolution:
    """Relabel local tours to instance indices and sum their closed lengths."""
    global_tours = []
    loads = []
    total = 0.0
    covered: list[int] = []
    for tsp, tour in tours:
        total += tour_length(tsp, tour)
        labels = [tsp.origin_labels[v] for v in tour.order]
        if labels[0] != inst.depot:
            raise InstanceError("every tour must start at the depot")
        covered.extend(labels[1:])
        global_tours.append(Tour(labels))
        loads.append(int(sum(inst.demands[v] for v in labels[1:])))
    if sorted(covered) != inst.customers:
        dupes = sorted({v for v in covered if covered.count(v) > 1})
        missing = sorted(set(inst.customers) - set(covered))
        raise InstanceError(f"tours do not cover nodes exactly once (duplicates {dupes}, missing {missing})")
    for load in loads:
        if load > inst.capacity:
            raise InstanceError(f"tour load {load} exceeds capacity {inst.capacity}")
    return CvrpSolution(tuple(global_tours), total, tuple(loads))
