//! Ensemble protocol: displacement, number-phase transfer, counter-displacement, attenuation and detection.

mod config;
mod ensemble;
mod pipeline;
mod sweeps;

pub use config::{
    BnPort, CounterMode, CounterSweepConfig, DetectionConfig, EstimatorMethod, GuardConfig, InputState,
    ProtocolConfig, TransferSweepConfig, DISPLACEMENT_DOMINANCE, PROTOCOL_SCHEMA_VERSION,
};
pub use ensemble::{
    attenuate, common_eta, displaced_squeezed_moments, draw_ensemble, fits_truncation, reference_draw, run_ensemble,
    EnsembleRun, EnsembleSummary, Fluctuation, PostSelectSummary,
};
pub use pipeline::{
    choose_counter_displacement, reference_counter_displacement, run_copy, run_pulse, validity_guard,
    validity_guard_two_mode, CopyOutcome, CounterChoice, CounterDisplacement, Coupler, DetectionTally, GuardReport,
    Mode1Quadratures, PulseRecord, Stage, StageDiagnostics, SweepEnd,
};
pub use sweeps::{counter_displace_sweep, transfer_sweep, CounterPoint, CounterSweep, TransferPoint, TransferSweep};
