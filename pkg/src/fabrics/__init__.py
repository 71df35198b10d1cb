"""Spray and Finsler geometries, geodesic integration, and geometric
fabrics for reactive motion design.

The package derives equations of motion from user-supplied Lagrangians via
exact second-order jet arithmetic, integrates generating/geometric/forced
systems, and ships executable property suites for the structural
identities the machinery rests on.
"""

__version__ = "0.1.0"

from .autodiff import (HyperDual, Jet2, JetDomainError, ScalarField, dot,
                       evaluate_jet, exp, finite_difference_jet, log, norm,
                       sqrt, tanh)
from .fabric import (Box, Fabric, FabricComponent, ForcingTerm,
                     attractor_geometry, combine, energize,
                     euclidean_component, forced_acceleration,
                     obstacle_barrier, quadratic_forcing, vortex,
                     wall_barrier)
from .finsler import (FinslerStructure, EnergyTerms, GeometricTerms,
                      VELOCITY_FLOOR, energy_terms, geodesic_geometry,
                      geometric_terms, make_finsler, validate_finsler,
                      verify_theorem2)
from .geometry import (AlphaProfile, GeometryHandle, PathPolyline,
                       check_homogeneity, circle_barrier_geometry,
                       explicit_acceleration, generating_acceleration,
                       homogeneity_violation, path_distance, project_perp,
                       reparameterize)
from .integrate import (IntegrationAborted, IntegratorConfig, Trajectory,
                        energy_drift, integrate, integrate_explicit,
                        refine_and_compare)
from .lagrangian import (ActionValue, EomTerms, SingularMassError, action,
                         eom_terms, hamiltonian, solved_acceleration)
from .riemann import (MetricField, closed_form_mg, fictitious_force,
                      riemannian_structure)
from .state import State

__all__ = [name for name in dir() if not name.startswith("_")]
