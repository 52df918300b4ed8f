//! Simulation library for a series-elastic hip actuator under a
//! backstepping sliding-mode force controller.
//!
//! The model is a single rigid limb driven through a linear spring whose
//! attachment geometry makes the effective moment arm configuration
//! dependent. The controller cancels the modeled dynamics on a sliding
//! surface and backsteps twice through the spring states to produce the
//! equivalent actuator command.
//!
//! Layout:
//! - [`geometry`]: linkage lengths, moment arm, gravity reaction force
//! - [`plant`]: joint + spring dynamics, motor-model reduction, disturbances
//! - [`controller`]: sliding surface, virtual controls, command synthesis
//! - [`reference`]: desired-trajectory sources (gait, file, step, sine)
//! - [`simulator`]: fixed-step integration, modes, traces
//! - [`metrics`]: tracking-quality summaries over a trace
//! - [`sweep`]: gain grids run in parallel
//! - [`validate`]: self-check suite over the library invariants
//! - [`config`]: layered TOML configuration and run manifests
//! - [`cli`]: the batch command-line frontend

pub mod cli;
pub mod config;
pub mod controller;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod plant;
pub mod reference;
pub mod simulator;
pub mod svg;
pub mod sweep;
pub mod trace;
pub mod validate;

pub use config::{ResolvedConfig, RunManifest};
pub use controller::{ControllerConfig, ControllerGains, ControllerState};
pub use error::{ConfigError, IngestError, ModelError, SimError};
pub use geometry::LinkGeometry;
pub use metrics::Metrics;
pub use plant::{DisturbanceProfile, MotorParams, PlantParams, PlantState};
pub use reference::{ReferenceSource, TrajectorySample};
pub use simulator::{Mode, Realization, SimConfig, Simulation, TraceRecord};
