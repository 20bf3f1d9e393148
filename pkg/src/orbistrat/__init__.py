"""Singular-locus stratification and closed geodesics on flat developable orbifolds ℝⁿ/Γ."""

from orbistrat.geodesics import (
    ExistenceOutcome,
    GeodesicPair,
    GeodesicPathSequence,
    PreconditionError,
    Strategy,
    conjugate_pair,
    equivalent,
    existence_dispatch,
    from_closed_component,
    from_even_isotropy,
    from_hyperbolic,
    from_sigma1,
    is_closed,
    reduce,
    run_strategy,
    split,
)
from orbistrat.geom import Box, EuclideanIsometry, GeodesicSegment, classify, min_displacement
from orbistrat.groups import FiniteGroup, GeneratedGroup, GroupElement, enumerate_ball, isotropy_at, subgroups
from orbistrat.kernels import BACKEND
from orbistrat.models import CATALOG, load_catalog, load_model, parse_model
from orbistrat.strata import OrbifoldModel, Stratification, StratumComponent, closed_stratum, stratify

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CATALOG",
    "Box",
    "EuclideanIsometry",
    "ExistenceOutcome",
    "FiniteGroup",
    "GeneratedGroup",
    "GeodesicPair",
    "GeodesicPathSequence",
    "GeodesicSegment",
    "GroupElement",
    "OrbifoldModel",
    "PreconditionError",
    "Strategy",
    "Stratification",
    "StratumComponent",
    "classify",
    "closed_stratum",
    "conjugate_pair",
    "enumerate_ball",
    "equivalent",
    "existence_dispatch",
    "from_closed_component",
    "from_even_isotropy",
    "from_hyperbolic",
    "from_sigma1",
    "is_closed",
    "isotropy_at",
    "load_catalog",
    "load_model",
    "min_displacement",
    "parse_model",
    "reduce",
    "run_strategy",
    "split",
    "stratify",
    "subgroups",
]
