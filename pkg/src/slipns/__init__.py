"""Vorticity solver for 2D Navier-Stokes on the half-space with Navier-slip walls."""

__version__ = "0.1.0"

from .biot_savart import VelocityPair, boundary_trace_u1, stream_function, velocity_from_vorticity
from .grid import ZGrid
from .norms import NormParams, analytic_norm, bl_norm, bl_weight, embedding_constant, phi_P
from .ns_solver import (NsConfig, NsTrajectory, PicardDiverged, SpectralTailError, nonlinear_term, ns_step,
                        solve_ns, track_analytic_norms)
from .oracle import solve_stokes_direct
from .semigroup import (StokesProblem, StokesSolution, TimeQuadratureNotConverged, apply_semigroup,
                        boundary_residual, check_duhamel_pde_residual, march_stokes, solve_stokes)
from .spectral import RealField, SpectralField, differentiate, from_modes, to_modes
from .stokes_green import (BranchCutError, ContourError, ContourSpec, KernelCache, KernelTable,
                           QuadratureNotConverged, ResolventQuery, build_kernel_table, fit_kernel_bound,
                           resolvent_kernel, temporal_residual_kernel)
