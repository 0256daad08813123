//! Reinforcement learning of the RIS orientation.

pub mod agent;
pub mod buffer;
pub mod env;
pub mod nn;
pub mod policy;
pub mod train;

pub use agent::{Agent, AgentConfig};
pub use buffer::{ReplayBuffer, Transition};
pub use env::{EnvState, Environment, StepOutcome};
pub use policy::{squashed_gaussian_sample, ActionBox};
pub use train::{evaluate, train, Checkpoint, EvalReport, OrientationPolicy, TrainReport};
