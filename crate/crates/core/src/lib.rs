//! Slow and fast light in a passive-active optomechanical dimer.
//!
//! A lossy optomechanical cavity evanescently coupled to a gain cavity shows
//! optomechanically induced transparency with an inverted absorption window
//! and a steep dispersion, tunable between large positive (slow light) and
//! negative (fast light) group delay. This crate carries the full model:
//!
//! * [`model`] — parameter types, validation, the physical-to-effective map;
//! * [`steady_state`] — the displacement cubic and linearized stability;
//! * [`response`] — probe response spectra, ideal-transparency conditions,
//!   closed-form window slopes and delays;
//! * [`timedomain`] — adaptive integration of the mean-value equations,
//!   sideband demodulation, pulse delay measurement;
//! * [`sweep`] — parallel parameter sweeps and reference figure datasets.
//!
//! Everything numeric is generic over the scalar type through
//! [`scalar::Scalar`]; the `*64` aliases below pin the common `f64` choice.

pub mod autodiff;
pub mod model;
pub mod response;
pub mod scalar;
pub mod steady_state;
pub mod sweep;
pub mod timedomain;

pub use model::{
    effective_from_physical, parse_param_file, realize_physical, render_param_file, validate,
    validate_physical, BranchSelect, ModelError, ParamFileError, ParamSource, PhysicalParams,
    SystemParams, Violation,
};
pub use response::{
    a1_plus, closed_forms, dispersion_slope, epsilon_t, group_delay, ideal_omit, ideal_omit_fast,
    ideal_omit_slow, ideal_params, probe_response, ClosedForms, OmitConditions, ProbeResponse,
    ResponseError, Window,
};
pub use scalar::Scalar;
pub use steady_state::{
    solve_steady_state, stability_report, StabilityReport, SteadyState,
};
pub use sweep::{figure_dataset, run_sweep, FigureDataset, SweepSpec, SweepTable};
pub use timedomain::{
    demodulate_sideband, integrate, measure_pulse_delay, Envelope, IntegrationSpec, Mode,
    ProbeSpec, PulseResult, TimeDomainError, Trajectory,
};

/// `f64` instantiations of the core types.
pub type SystemParams64 = SystemParams<f64>;
pub type PhysicalParams64 = PhysicalParams<f64>;
pub type ParamSource64 = ParamSource<f64>;
pub type SteadyState64 = SteadyState<f64>;
pub type StabilityReport64 = StabilityReport<f64>;
pub type ProbeResponse64 = ProbeResponse<f64>;
pub type OmitConditions64 = OmitConditions<f64>;
pub type ClosedForms64 = ClosedForms<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type PulseResult64 = PulseResult<f64>;
