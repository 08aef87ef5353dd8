"""Steady-state thermodynamics of a laser-driven four-level atom coupled to two waveguides."""

from .model import (ConfigError, SystemConfig, TransitionId, ValidationReport, bose_occupation,
                    fig2_config, fig3_config, fig4_config, fig5_config, validate)
from .generator import (DensityMatrix, LindbladGenerator, ReducedState, build_generator,
                        build_hamiltonian, embed, project, reduced_rhs)
from .solver import (EvolveOptions, MultipleSteadyStatesError, SolverError, SteadyStateReport,
                     evolve, evolved_steady_state, relaxation_scale, steady_state)
from .thermo import (CurrentsReport, EngineReport, amplification_factors, effective_temperature,
                     engine_metrics, heat_currents, steady_currents)
from .sweep import Axis, SweepResult, SweepSpec, Variant, figure_preset, run_sweep

__version__ = "0.1.0"
