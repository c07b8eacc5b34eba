"""Polyhedral metric 1-currents and their decomposition into curves."""
from .conformal import ConformalProfile, build_profile, compactify, delta_distance, mass_delta
from .currents import (
    Annulus,
    AnnulusGenerator,
    Ball,
    EdgeCurrent,
    boundary,
    canonicalize,
    is_subcurrent,
    mass_on,
    mass_total,
    restrict_ball,
)
from .decomp import (
    Curve,
    Decomposition,
    boundary_split,
    decompose_finite,
    decompose_local,
    path_decompose,
    split_at_infinity,
    split_cycles,
    transport_endpoints,
    xi,
)
from .generators import make_generator
from .geometry import INFINITY, GraphSpace, Segment, SupNormSpace, kuratowski_embed
from .oracle import enumerate_cycles, verify_decomposition

__version__ = "0.1.0"
