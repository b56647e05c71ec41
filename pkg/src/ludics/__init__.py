"""Interaction engine for designs over located addresses.

Loci, designs, nets and their normalization, orthogonality and behaviour
approximations, copycat delocalization, proto-formula skeletons, fallacy
detectors, a CLI, and a session service for interactive disputes.
"""

from .loci import Bias, Fork, Locus, LudicsError, Ramification, parse_locus
from .designs import (
    DAIMON,
    Design,
    FaxNode,
    NegNode,
    PosNode,
    RefNode,
    design_equal,
    enumerate_designs,
    substitute_prefix,
    validate_design,
)
from .interaction import (
    Action,
    Net,
    Trace,
    Verdict,
    dispute_trace,
    make_net,
    normalize,
    orthogonal,
)
from .delocalize import FaxSpec, check_fax_theorem, expand, fax
from .behaviour import BehaviourHandle, builtin, in_behaviour, odot, orthogonal_set, tensor_generators

__version__ = "0.1.0"

__all__ = [
    "Action",
    "BehaviourHandle",
    "Bias",
    "DAIMON",
    "Design",
    "FaxNode",
    "FaxSpec",
    "Fork",
    "Locus",
    "LudicsError",
    "NegNode",
    "Net",
    "PosNode",
    "Ramification",
    "RefNode",
    "Trace",
    "Verdict",
    "builtin",
    "check_fax_theorem",
    "design_equal",
    "dispute_trace",
    "enumerate_designs",
    "expand",
    "fax",
    "in_behaviour",
    "make_net",
    "normalize",
    "odot",
    "orthogonal",
    "orthogonal_set",
    "parse_locus",
    "substitute_prefix",
    "tensor_generators",
    "validate_design",
]
