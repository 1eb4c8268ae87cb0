"""Clique-based noise fingerprints against location-provider tracking, with a simulated world to test them in."""

from .errors import (
    ConfigurationError,
    FpCloakError,
    InsufficientDensity,
    IntegrityError,
    NoCandidates,
    Unlocatable,
)
from .graph import OverlapGraph, brute_force_clique, is_clique, recompute_coefficients, scsoa_update
from .locator import LocationEstimate, RadioMap, build_radio_map, locate, locate_pbl, locate_radar, serve_bundle
from .noise import NoiseSet, RequestBundle, assemble_bundle, csda, e_csda, fabricate_noise, privacy_metric
from .world import (
    AccessPoint,
    ApField,
    Fingerprint,
    Trajectory,
    generate_field,
    ground_truth_graph,
    random_walk,
    scan,
    signal_at,
)

__version__ = "0.1.0"
