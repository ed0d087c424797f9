"""Solution-path recommendation for quantum-assisted CVRP solving.

Cluster-first decomposition, one-hot TSP QUBO/Ising encoding with automatic
penalty and scale selection, statevector QAOA with four classical optimizers,
monitoring artifacts, and ranking of complete paths against classical baselines.
"""

from .instances import (
    CvrpInstance,
    CvrpSolution,
    InstanceError,
    Tour,
    TspInstance,
    generate_random,
    load_instance,
    solve_tsp_exact,
    solve_tsp_heuristic,
    tour_length,
    write_instance,
)
from .decompose import Clustering, assemble, cluster_capacitated, subproblems
from .encode import (
    EncodingConfig,
    IsingModel,
    Qubo,
    bound_spectral_width,
    decode_bits,
    exact_spectral_width,
    find_min_penalty,
    ising_energy,
    penalty_from_bbox,
    qubo_to_ising,
    scale_ising,
    tsp_to_qubo,
)
from .ansatz import QaoaAnsatz, interaction_graph, min_entangling_depth, recommend_depth
from .optimizers import Objective, OptimizerConfig, OptimizerTrace, init_params, minimize
from .pathfinder import (
    SolutionPath,
    default_catalog,
    enumerate_paths,
    evaluate_path,
    recommend,
    score,
)

__version__ = "0.1.0"
