"""Double-scale analysis of spring chains carrying one nonlinear spring."""
from .asymptotics import (AmplitudePhase, FirstOrderParams, SlowFlowTrajectory,
                          amplitude_phase_rhs, backbone_detuning, backbone_frequency,
                          effective_cubic, first_order_params, forced_first_order,
                          free_first_order, slow_flow_integrate)
from .errors import (DecompositionFailure, DegenerateSpectrum, DomainError, DuoscaleError,
                     EmptyCurve, IntegrationFailure, InvalidArgument, NoConvergence)
from .integrate import (ExpansionReport, IntegratorConfig, TimeSeries, envelope, expansion_verify,
                        gronwall_bound, initial_state, integrate, integrate_rk4,
                        integrate_theta, mechanical_energy, remainder_series, rhs_full)
from .model import (ChainSystem, ModalBasis, NonlinearSpring, Resonance, build_chain,
                    generalized_eigh, modal_decompose, modal_project, modal_reconstruct,
                    nonlinear_force, nonlinear_potential, nonresonance_report)
from .response import (FrfCurve, StationaryPoint, classify_stability, frf_trace, peak_point,
                       sigma_star, stationary_amplitudes, stationary_jacobian,
                       stationary_residual, stationary_solve)
from .spectral import Peak, Spectrum, ap_fourier_coefficient, peak_detect, spectrum_scan

__all__ = [
    "amplitude_phase_rhs", "AmplitudePhase", "ap_fourier_coefficient", "backbone_detuning",
    "backbone_frequency", "build_chain", "ChainSystem", "classify_stability",
    "DecompositionFailure", "DegenerateSpectrum", "DomainError", "DuoscaleError",
    "effective_cubic", "EmptyCurve", "envelope", "expansion_verify", "ExpansionReport",
    "first_order_params", "FirstOrderParams", "forced_first_order", "free_first_order",
    "frf_trace", "FrfCurve", "generalized_eigh", "gronwall_bound", "initial_state", "integrate",
    "integrate_rk4", "integrate_theta", "IntegrationFailure", "IntegratorConfig",
    "InvalidArgument", "mechanical_energy", "modal_decompose", "modal_project",
    "modal_reconstruct", "ModalBasis", "NoConvergence", "nonlinear_force",
    "nonlinear_potential", "NonlinearSpring", "nonresonance_report", "Peak", "peak_detect",
    "peak_point", "remainder_series", "Resonance", "rhs_full", "sigma_star",
    "slow_flow_integrate", "SlowFlowTrajectory", "Spectrum", "spectrum_scan",
    "stationary_amplitudes", "stationary_jacobian", "stationary_residual", "stationary_solve",
    "StationaryPoint", "TimeSeries",
]
