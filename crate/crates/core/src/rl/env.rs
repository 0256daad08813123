//! Orientation-control environment: one step rotates the RIS, senses Eve,
//! gates on the CRLB and, when the gate passes, solves the beamformer.

use crate::beamforming::Algorithm;
use crate::error::Result;
use crate::geometry::Orientation;
use crate::harness::{Multipath, Scenario};
use crate::numerics::RngStream;
use crate::sensing::{crlb_feasible, CrlbReport};

pub const STATE_DIM: usize = 4;
/// CRLB features are clamped to this many decades around the threshold.
const CRLB_DECADES: f64 = 3.0;

/// Observed state: powers of the last solution and the CRLB of the last
/// sensing phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvState {
    pub b1: f64,
    pub b2: f64,
    pub crlb_theta: f64,
    pub crlb_phi: f64,
}

impl EnvState {
    /// Episode start: full power on the precoder, CRLB at the threshold.
    pub fn initial(tx_power: f64, eps: f64) -> Self {
        Self {
            b1: tx_power,
            b2: 0.0,
            crlb_theta: eps,
            crlb_phi: eps,
        }
    }

    /// Network input: normalised powers and log-CRLB margins.
    pub fn features(&self, tx_power: f64, eps: f64) -> Vec<f64> {
        let margin = |c: f64| {
            if c.is_finite() && c > 0.0 {
                ((c.log10() - eps.log10()) / CRLB_DECADES).clamp(-1.0, 1.0)
            } else if c == 0.0 {
                -1.0
            } else {
                1.0
            }
        };
        vec![self.b1 / tx_power, self.b2 / tx_power, margin(self.crlb_theta), margin(self.crlb_phi)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: EnvState,
    pub reward: f64,
    pub feasible: bool,
    /// Combined secrecy rate of the solved beamformer; zero when gated.
    pub secrecy_rate: f64,
    pub report: CrlbReport,
}

#[derive(Debug, Clone)]
pub struct Environment {
    pub scenario: Scenario,
    pub algorithm: Algorithm,
    pub eps: f64,
    pub reward_offset: f64,
}

impl Environment {
    pub fn new(scenario: Scenario) -> Result<Self> {
        let algorithm = scenario.config.algorithm()?;
        Ok(Self {
            eps: scenario.config.sensing.crlb_threshold_rad2,
            reward_offset: scenario.config.rl.reward_offset,
            algorithm,
            scenario,
        })
    }

    pub fn initial_state(&self) -> EnvState {
        EnvState::initial(self.scenario.consts.tx_power, self.eps)
    }

    pub fn features(&self, state: &EnvState) -> Vec<f64> {
        state.features(self.scenario.consts.tx_power, self.eps)
    }

    /// One slot under `orientation`, clamped to the rotation box. Sensing
    /// randomness comes from `sense_rng` only, so equal inputs give equal
    /// outcomes. Gated slots keep the previous powers and earn zero.
    pub fn step(
        &self,
        slot: usize,
        orientation: &Orientation,
        multipath: &Multipath,
        previous: &EnvState,
        sense_rng: &mut RngStream,
    ) -> Result<StepOutcome> {
        let s = &self.scenario;
        let o = s.rotation.clamp(orientation);
        let channels = s.channels(&o, slot, multipath)?;
        let (_, report) = s.sense(&channels, sense_rng)?;
        let mut state = EnvState {
            crlb_theta: report.crlb_theta,
            crlb_phi: report.crlb_phi,
            ..*previous
        };
        if !crlb_feasible(&report, self.eps) {
            return Ok(StepOutcome { state, reward: 0.0, feasible: false, secrecy_rate: 0.0, report });
        }
        let sol = self.algorithm.solve(&channels, &s.consts)?;
        sol.check(&s.consts)?;
        state.b1 = sol.w.norm_squared();
        state.b2 = sol.v.norm_squared();
        Ok(StepOutcome {
            state,
            reward: sol.sr - self.reward_offset,
            feasible: true,
            secrecy_rate: sol.sr,
            report,
        })
    }
}
