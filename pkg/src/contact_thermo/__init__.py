"""Thermodynamic formalism for contact forms on periodic models.

Volumes, relative entropies and their variations for contact forms; contact
Hamiltonian flows and conformal exponents; maximum-entropy equilibria and their
Legendrian traces; finite-N pressure estimates.
"""
from .entropy import (
    Variation,
    check_observables,
    entropy_of_map,
    first_variation_volume,
    hessian_big,
    hessian_small,
    mass,
    normalize,
    relative_entropy,
)
from .errors import *  # noqa: F401,F403
from .fields import Grid, ObservableSystem, OneForm, ScalarField, TrigTerm, VectorField, integrate, trig_field
from .flows import FlowMap, cocycle_check, conformal_factor_pullback, flow_point, pullback_exponent
from .geometry import (
    ContactForm,
    Diffeomorphism,
    contact_hamiltonian_field,
    decompose_oneform,
    decompose_vector,
    get_model,
    pullback,
    reeb_field,
    torus3,
)
from .maxent import MaxEntProblem, equilibrium_with_volume, log_partition, solve, sweep
from .pressure import (
    ContactPair,
    birkhoff_sum,
    gibbs_diagnostic,
    partition_function,
    pressure_estimate,
    separated_set,
    variational_bound,
)

__version__ = "0.1.0"
