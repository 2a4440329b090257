"""Truncated Novikov algebra and a local model of homoclinic self-slides.

The algebra side covers valued free groupoids, truncated Novikov rings,
chain complexes and the rewrite factors attached to crossing a self-slide
stratum. The geometric side is a closed-form Morse model with holonomy
families, from which latitudes, the holonomic factor and the character are
measured and incidences are counted numerically.
"""

from ._accel import BACKEND
from .bifurcation import (
    CrossingEvent,
    SlideScript,
    apply_self_slide,
    doubling_factor,
    doubling_script,
    loop_consistency,
    self_slide_factor,
)
from .complex import NovikovComplex
from .errors import (
    InvalidFamilyError,
    NonGenericError,
    NotInvertibleError,
    NovikovConditionError,
    NovlabError,
    OnCoSphereError,
    ParseError,
    StructuralError,
    UnsupportedConfigurationError,
    ValidationError,
)
from .groupoid import Arrow, GroupoidGraph, compose, inverse, u_value
from .holonomy import (
    HolonomyFamily,
    SelfSlideInvariants,
    compute_invariants,
    evaluate_holonomy,
    inverse_holonomy,
    make_elementary_family,
    make_family,
    velocity_balance,
)
from .morse_model import (
    LatitudeFrame,
    ModelPoint,
    MorseModelConfig,
    descend,
    flow,
    in_model,
    latitude,
    q_value,
)
from .novikov import (
    RingElement,
    TruncationContext,
    geometric_series,
    l_equal,
    mul,
    add,
    one,
    truncate,
    unit_inverse,
)
from .passages import (
    DiscCloud,
    count_incidence,
    detect_homoclinic,
    passage_discs,
    sweep_doubling,
    v1_dot,
)

__version__ = "0.1.0"
