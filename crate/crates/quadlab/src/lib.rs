//! Desk-scale quadcopter flight-dynamics workbench: nonlinear 6-DOF
//! simulation, cascaded PID stabilization, chirp excitation, and a
//! frequency-domain system-identification pipeline validated against
//! time-domain doublets.

pub mod control;
pub mod dynamics;
pub mod excitation;
pub mod geo;
pub mod linearization;
pub mod logio;
pub mod sensors;
pub mod sysid;
pub mod validation;

pub use control::{CascadeConfig, PidGains, PidState};
pub use dynamics::{BodyState, ControlEfforts, MotorSpeeds, VehicleParams};
pub use excitation::ChirpSpec;
pub use linearization::LinearModel;
pub use logio::{FlightLogRecord, WorkbenchConfig};
pub use sensors::{ImuSample, NoiseConfig, PilotCommand, PwmFrame};
pub use sysid::{FrequencyResponse, LoesModel};
