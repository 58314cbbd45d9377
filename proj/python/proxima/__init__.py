"""Graph-based approximate nearest neighbor search with PQ-distance traversal,
gap-encoded indices, and a parametric near-storage accelerator model."""

from ._proxima import (
    Dataset,
    GraphIndex,
    PQCodes,
    PQModel,
    ProximaError,
    batch_search,
    brute_force_knn,
    build_graph,
    calibrate_beta,
    encode,
    exact_distance,
    graph_stats,
    load_codes,
    load_graph,
    load_pq,
    load_vectors,
    make_glove_like,
    make_sift_like,
    recall_at_k,
    run_accelerator_model,
    search,
    train_pq,
    write_vectors,
)

__all__ = [
    "Dataset",
    "GraphIndex",
    "PQCodes",
    "PQModel",
    "ProximaError",
    "batch_search",
    "brute_force_knn",
    "build_graph",
    "calibrate_beta",
    "encode",
    "exact_distance",
    "graph_stats",
    "load_codes",
    "load_graph",
    "load_pq",
    "load_vectors",
    "make_glove_like",
    "make_sift_like",
    "recall_at_k",
    "run_accelerator_model",
    "search",
    "train_pq",
    "write_vectors",
]
