"""tenet: symbolic tensor algebra over second-quantized operators.

Immutable expression trees, colored-graph canonicalization of tensor
networks, a topologically-pruned Wick engine, a compiler-style evaluation IR
with contraction-order optimization and subexpression reuse, and a caching
dense interpreter.
"""

from .scalars import CRational
from .spaces import (Index, IndexSpace, IndexSpaceRegistry, SpaceError,
                     default_registry)
from .expr import (Constant, Expr, Product, Sum, Variable, as_terms, expand,
                   is_atom, mk_product, mk_sum, rapid_simplify, visit)
from .tensors import (ANTISYMM, CONJUGATE, FERMI, GENUINE, NONSYMM, SYMM,
                      LayoutError, NormalOperator, Tensor, adjoint,
                      make_delta, make_operator, make_overlap, make_tensor,
                      slot_permutation_phase)
from .parser import ParseError, parse, parse_index, serialize
from .graph import (NetworkError, TensorNetwork, build_graph, dot_dump,
                    free_indices, make_network)
from .canon import (EquivalenceGroups, NetworkCanon, canonicalize,
                    canonicalize_network, equivalent_groups, simplify)

__all__ = [name for name in dir() if not name.startswith("_")]
