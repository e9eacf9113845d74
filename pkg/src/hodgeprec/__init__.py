"""Least-squares solvers for first-order Hodge Laplacians with the HeCS preconditioner."""
from .complex import SimplicialComplex2, boundary, build_complex, laplacian, rank1_terms
from .collapse import CollapseResult, collapse_at, greedy_collapse, is_weakly_collapsible
from .hecs import HecsPreconditioner, apply_pinv, build_preconditioner, heavy_subcomplex

__version__ = "0.1.0"
