//! Configuration, scenarios, sweeps and file output.

pub mod config;
pub mod output;
pub mod scenario;
pub mod sweep;

pub use config::ScenarioConfig;
pub use scenario::{Multipath, Scenario};
pub use sweep::{run_sweep, ExperimentRecord, SweepAlgorithm, SweepAxis, SweepSpec};
