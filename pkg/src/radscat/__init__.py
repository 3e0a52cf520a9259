"""Time-harmonic and time-dependent scattering from radially symmetric potentials in 2D."""

from .assembly import (Grid, ResidualMap, ScatteringState, WaveField, eval_scattered, field_on_grid,
                       residual_map, solve_scattering, solver_attributed)
from .incident import gaussian_beam, plane_wave, point_source, point_source_incident, ring_modes
from .modesolver import ModeSolution, greens_apply, solve_mode
from .potentials import (RadialPotential, constant_disk, eaton_lens, gaussian_bump, luneburg_lens,
                         random_discontinuous, table_potential, zero_potential)
from .timedomain import build_sweep, frequency_rule, gaussian_pulse_spectrum, synthesize

__version__ = "0.1.0"

__all__ = [
    "Grid", "ModeSolution", "RadialPotential", "ResidualMap", "ScatteringState", "WaveField",
    "build_sweep", "constant_disk", "eaton_lens", "eval_scattered", "field_on_grid",
    "frequency_rule", "gaussian_beam", "gaussian_bump", "gaussian_pulse_spectrum",
    "greens_apply", "luneburg_lens", "plane_wave", "point_source", "point_source_incident",
    "random_discontinuous", "residual_map", "ring_modes", "solve_mode", "solve_scattering",
    "solver_attributed", "synthesize", "table_potential", "zero_potential",
]
