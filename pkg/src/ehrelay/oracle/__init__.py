from .original import solve_original
from .polytope import ForwardingPolytope
from .reduced import oracle_gap, solve_reduced

__all__ = ["ForwardingPolytope", "oracle_gap", "solve_original", "solve_reduced"]
