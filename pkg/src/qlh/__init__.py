"""Exact quantum cohomology of projective bundles, flips and conifold transitions."""

from .birational import flip_block_decomposition, flip_connection, local_model, pf_ideal_isomorphism_check
from .birkhoff import birkhoff_factorize, yukawa_from_mirror
from .cohomring import RingPresentation, parse_geometry, projective_space, tower
from .conifold import TransitionData, nabla_k_restrictions, validate_transition
from .dmod import DiffOperator, apply_operator, naive_quantization_frame, pf_operators_bundle
from .gwfun import i_function_complete_intersection, i_function_tower
from .pipelines import dubrovin, quintic
from .series import CurveLattice, QSeries, ZLaurent

__version__ = "0.1.0"

__all__ = [
    "CurveLattice", "DiffOperator", "QSeries", "RingPresentation", "TransitionData", "ZLaurent",
    "apply_operator", "birkhoff_factorize", "dubrovin", "flip_block_decomposition", "flip_connection",
    "i_function_complete_intersection", "i_function_tower", "local_model", "naive_quantization_frame",
    "nabla_k_restrictions", "parse_geometry", "pf_ideal_isomorphism_check", "pf_operators_bundle",
    "projective_space", "quintic", "tower", "validate_transition", "yukawa_from_mirror",
]
