"""Unsupervised graph alignment: DeepWalk embeddings, an adversarially
learned linear map between the two spaces, CGSS-based Procrustes
refinement and incremental graph extension."""
from .adversarial import AdvConfig, train_adversarial
from .baselines import centrality, centrality_align, common_neighbor_scores
from .embedding import EmbeddingMatrix, WalkConfig, deepwalk
from .errors import UagaError
from .evaluation import AlignmentReport, precision_at_n
from .graph import (AlignedPair, AnchorLinkSet, Graph, barabasi_albert_graph, erdos_renyi_graph,
                    generate_aligned_pair, load_edge_list)
from .incremental import AlignConfig, extend_graph, run_iuaga, run_uaga
from .refinement import build_cgss_index, mine_pseudo_anchors, procrustes, refine

__version__ = "0.1.0"

__all__ = [
    "AdvConfig", "AlignConfig", "AlignedPair", "AlignmentReport", "AnchorLinkSet", "EmbeddingMatrix",
    "Graph", "UagaError", "WalkConfig", "barabasi_albert_graph", "build_cgss_index", "centrality", "centrality_align",
    "common_neighbor_scores", "deepwalk", "erdos_renyi_graph", "extend_graph", "generate_aligned_pair", "load_edge_list",
    "mine_pseudo_anchors", "precision_at_n", "procrustes", "refine", "run_iuaga", "run_uaga",
    "train_adversarial",
]
