"""ergolab: a numerical workbench for random dynamics on the circle and 2-torus.

Stationary measures of averaged Ulam operators, minimality and strong
transitivity of word semigroups, Birkhoff-average ergodicity diagnostics
for step skew products, and parameter-robustness sweeps, behind a
scenario-driven CLI.
"""

__version__ = "0.1.0"

from .errors import (
    BudgetError,
    ConfigInvariantError,
    ConfigParseError,
    ErgolabError,
    NumericalError,
    UsageError,
)
from .phase_maps import (
    CIRCLE,
    FORWARD,
    INVERSE,
    TORUS2,
    CircleDiffeo,
    IFSystem,
    PhaseSpace,
    Rotation,
    ToralAutomorphism,
    ToralTranslation,
    Word,
    apply,
    apply_inverse,
    apply_word,
    map_derivative,
    uniform_ifs,
)
from .grid_measures import (
    BoxSet,
    Grid,
    GridMeasure,
    UlamMatrix,
    annealed_matrix,
    preimage_boxset,
    pushforward,
    quasi_invariance_check,
    symmetric_difference_score,
    tv_distance,
    ulam_matrix,
)
from .stationary import (
    component_is_open_mod0,
    ergodic_components,
    open_positivity_check,
    stationary_from_matrix,
    stationary_measure,
)
from .semigroup_topology import (
    finite_cover,
    image_boxset,
    minimality_check,
    skew_transitivity_word,
    strong_transitivity_witness,
)
from .skew_product import (
    Cylinder,
    Observable,
    SymbolStream,
    birkhoff_average,
    ergodicity_verdict,
    okk_equivalence_check,
    robustness_sweep,
    skew_orbit,
    standard_observables,
)
from .runner import run_scenario
