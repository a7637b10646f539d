"""Explicit MPM heat conduction with virtual-flux Neumann boundaries."""

from .boundary import (BoundaryHandler, BoundarySpec, NormalEstimationError,
                       SurfaceSets, apply_node_boundary,
                       apply_particle_boundary, apply_vhfm,
                       boundary_flux_magnitude, detect_surface_nodes,
                       normals_by_mass_gradient, normals_by_scalar_gradient,
                       virtual_field_from_vector_bc)
from .grid import (Grid, OutOfDomainError, Stencil, build_grid, cell_of,
                   grid_around, node_stencil, reset_nodal_state)
from .kernels import BACKEND
from .metrics import (ErrorReport, error_report, fit_convergence_rate,
                      l2_error, rmse, sample_reference_at_particles)
from .oracles import (FdmSolution, erfc, fdm_ring, fdm_sphere, fdm_square,
                      rod_T_constant_flux, rod_T_convective)
from .particles import (ParticleSet, apply_rigid_rotation,
                        generate_annulus_points, generate_box_points,
                        generate_fan_points, generate_sphere_points,
                        load_points_from_csv)
from .solver import (MaterialParams, Rotation, SolverState, StabilityError,
                     critical_time_step, step)

__version__ = "0.1.0"
