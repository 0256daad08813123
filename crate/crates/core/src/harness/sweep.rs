//! Parameter sweeps and the CRLB map over the rotation box.

use std::fmt;
use std::str::FromStr;

use crate::beamforming::Algorithm;
use crate::error::{Error, Result};
use crate::geometry::Orientation;
use crate::metrics::{stream_secrecy_rate, Stream};
use crate::numerics::RngStream;
use crate::rl::{train, Agent, Environment};
use crate::sensing::crlb_feasible;

use super::config::ScenarioConfig;
use super::scenario::{degrees, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    /// Transmit power in dBm.
    TxPower,
    /// Number of BS antennas.
    Antennas,
    /// Number of RIS elements.
    RisElements,
    RhoMax,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 4] = [SweepAxis::TxPower, SweepAxis::Antennas, SweepAxis::RisElements, SweepAxis::RhoMax];

    pub fn id(self) -> &'static str {
        match self {
            SweepAxis::TxPower => "tx_power",
            SweepAxis::Antennas => "antennas",
            SweepAxis::RisElements => "ris_elements",
            SweepAxis::RhoMax => "rho_max",
        }
    }

    /// Config with the swept quantity set to `value`. Element counts are
    /// laid out as the most square grid, wider than tall.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut c = base.clone();
        let count = || -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 && value <= 1e6 {
                Ok(value as usize)
            } else {
                Err(Error::InvalidArgument(format!("{} needs a positive integer, got {value}", self.id())))
            }
        };
        match self {
            SweepAxis::TxPower => {
                c.radio.tx_power_dbm = value;
                c.radio.tx_power_w = None;
            }
            SweepAxis::Antennas => (c.arrays.bs_horizontal, c.arrays.bs_vertical) = grid_shape(count()?),
            SweepAxis::RisElements => (c.arrays.ris_horizontal, c.arrays.ris_vertical) = grid_shape(count()?),
            SweepAxis::RhoMax => c.radio.rho_max = value,
        }
        c.validate()?;
        Ok(c)
    }
}

/// `(horizontal, vertical)` with `vertical` the largest divisor of `n` not
/// above its square root.
pub fn grid_shape(n: usize) -> (usize, usize) {
    let v = (1..=n).take_while(|d| d * d <= n).filter(|d| n % d == 0).last().unwrap_or(1);
    (n / v, v)
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown sweep axis `{s}`")))
    }
}

/// Designs compared in sweeps. `Dsact` turns the RIS with a policy trained
/// at each sweep point and then runs the configured closed-form solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SweepAlgorithm {
    Mnpl,
    El,
    Dsact,
}

impl SweepAlgorithm {
    pub fn id(self) -> &'static str {
        match self {
            SweepAlgorithm::Mnpl => "mnpl",
            SweepAlgorithm::El => "el",
            SweepAlgorithm::Dsact => "dsact",
        }
    }
}

impl fmt::Display for SweepAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SweepAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mnpl" => Ok(SweepAlgorithm::Mnpl),
            "el" => Ok(SweepAlgorithm::El),
            "dsact" => Ok(SweepAlgorithm::Dsact),
            other => Err(Error::InvalidArgument(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// One row of a sweep: a (point, seed, algorithm, stream) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub axis: String,
    pub value: f64,
    pub algorithm: String,
    pub stream: String,
    pub seed: u64,
    /// Secrecy rate averaged over the slots of the trajectory.
    pub sr: f64,
    /// CRLBs of the sensing phase averaged over the slots (rad^2).
    pub crlb_theta: f64,
    pub crlb_phi: f64,
    /// Share of slots passing the CRLB constraint.
    pub feasible: f64,
    /// `ok`, or the error that stopped this cell.
    pub status: String,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub algorithms: Vec<SweepAlgorithm>,
    pub seeds: usize,
    /// Upper bound on worker threads.
    pub workers: usize,
}

/// Per-slot averages of one trajectory, with the RIS Eve-aligned or turned
/// by the greedy `agent`. Multipath and sensing depend only on `seed`.
fn trajectory(
    scenario: &Scenario,
    algorithm: Algorithm,
    seed: u64,
    agent: Option<&Agent>,
) -> Result<([f64; 3], f64, f64, f64)> {
    let root = RngStream::new(seed).substream("sweep");
    let multipath = scenario.draw_multipath(&mut root.substream("multipath"));
    let env = Environment::new(scenario.clone())?;
    let mut state = env.initial_state();
    let slots = scenario.slots();
    let mut sr = [0.0; 3];
    let (mut ct, mut cp, mut feasible) = (0.0, 0.0, 0.0);
    for slot in 0..slots {
        let o: Orientation = match agent {
            Some(a) => crate::rl::policy::orientation_of(&a.greedy(&env.features(&state))),
            None => scenario.eve_aligned(slot),
        };
        let o = scenario.rotation.clamp(&o);
        let channels = scenario.channels(&o, slot, &multipath)?;
        let (_, report) = scenario.sense(&channels, &mut root.indexed("sense", slot as u64))?;
        let sol = algorithm.solve(&channels, &scenario.consts)?;
        sol.check(&scenario.consts)?;
        for (k, s) in Stream::ALL.iter().enumerate() {
            sr[k] += stream_secrecy_rate(&sol, &channels, &scenario.consts, *s) / slots as f64;
        }
        ct += report.crlb_theta / slots as f64;
        cp += report.crlb_phi / slots as f64;
        let ok = crlb_feasible(&report, env.eps);
        feasible += f64::from(u8::from(ok)) / slots as f64;
        state.crlb_theta = report.crlb_theta;
        state.crlb_phi = report.crlb_phi;
        if ok {
            state.b1 = sol.w.norm_squared();
            state.b2 = sol.v.norm_squared();
        }
    }
    Ok((sr, ct, cp, feasible))
}

/// Runs `f` over `0..jobs` on at most `workers` scoped threads and returns
/// the results in job order.
pub fn run_pool<T: Send>(jobs: usize, workers: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = workers.clamp(1, jobs.max(1));
    let f = &f;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| scope.spawn(move || (w..jobs).step_by(workers).map(|j| (j, f(j))).collect::<Vec<_>>()))
            .collect();
        let mut all: Vec<(usize, T)> = handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect();
        all.sort_by_key(|(j, _)| *j);
        all.into_iter().map(|(_, t)| t).collect()
    })
}

/// Evaluates the cross product of points, seeds and algorithms. Seeds are
/// `config.seed + k`. A failing cell yields rows with NaN values and its
/// error in `status`; the sweep carries on.
pub fn run_sweep(config: &ScenarioConfig, spec: &SweepSpec) -> Result<Vec<ExperimentRecord>> {
    if spec.values.is_empty() || spec.seeds == 0 || spec.algorithms.is_empty() {
        return Err(Error::InvalidArgument("a sweep needs values, seeds and algorithms".into()));
    }
    let scenarios: Vec<Result<Scenario>> = spec
        .values
        .iter()
        .map(|v| spec.axis.apply(config, *v).and_then(|c| Scenario::from_config(&c)))
        .collect();

    // Policies are trained once per point, on the point's own config.
    let wants_policy = spec.algorithms.contains(&SweepAlgorithm::Dsact);
    let agents: Vec<Option<Result<Agent>>> = run_pool(spec.values.len(), spec.workers, |p| {
        if !wants_policy {
            return None;
        }
        Some(match &scenarios[p] {
            Ok(s) => Environment::new(s.clone())
                .and_then(|env| train(&env, &s.config.rl, s.config.seed))
                .map(|r| r.agent),
            Err(e) => Err(Error::InvalidArgument(e.to_string())),
        })
    });

    let per_point = spec.seeds * spec.algorithms.len();
    let cells = run_pool(spec.values.len() * per_point, spec.workers, |j| {
        let p = j / per_point;
        let seed = config.seed + ((j % per_point) / spec.algorithms.len()) as u64;
        let algo = spec.algorithms[j % spec.algorithms.len()];
        let out = scenarios[p].as_ref().map_err(|e| e.to_string()).and_then(|s| {
            let solver = s.config.algorithm().map_err(|e| e.to_string())?;
            let (algorithm, agent) = match algo {
                SweepAlgorithm::Mnpl => (Algorithm::Mnpl, None),
                SweepAlgorithm::El => (Algorithm::El, None),
                SweepAlgorithm::Dsact => match agents[p].as_ref().expect("policy trained") {
                    Ok(a) => (solver, Some(a)),
                    Err(e) => return Err(e.to_string()),
                },
            };
            trajectory(s, algorithm, seed, agent).map_err(|e| e.to_string())
        });
        (p, seed, algo, out)
    });

    let mut records = Vec::with_capacity(cells.len() * Stream::ALL.len());
    for (p, seed, algo, out) in cells {
        for (k, stream) in Stream::ALL.iter().enumerate() {
            let (sr, ct, cp, feasible, status) = match &out {
                Ok((sr, ct, cp, f)) => (sr[k], *ct, *cp, *f, "ok".to_string()),
                Err(e) => (f64::NAN, f64::NAN, f64::NAN, f64::NAN, e.clone()),
            };
            records.push(ExperimentRecord {
                axis: spec.axis.id().into(),
                value: spec.values[p],
                algorithm: algo.id().into(),
                stream: stream.id().into(),
                seed,
                sr,
                crlb_theta: ct,
                crlb_phi: cp,
                feasible,
                status,
            });
        }
    }
    Ok(records)
}

/// Mean SR over the successful seeds of one (point, algorithm, stream).
#[derive(Debug, Clone, PartialEq)]
pub struct PointMean {
    pub value: f64,
    pub algorithm: String,
    pub stream: String,
    pub mean_sr: f64,
    pub seeds: usize,
}

/// Per-point means in first-appearance order.
pub fn point_means(records: &[ExperimentRecord]) -> Vec<PointMean> {
    let mut out: Vec<PointMean> = Vec::new();
    for r in records.iter().filter(|r| r.status == "ok") {
        let key = |m: &PointMean| m.value == r.value && m.algorithm == r.algorithm && m.stream == r.stream;
        match out.iter_mut().find(|m| key(m)) {
            Some(m) => {
                m.mean_sr += r.sr;
                m.seeds += 1;
            }
            None => out.push(PointMean {
                value: r.value,
                algorithm: r.algorithm.clone(),
                stream: r.stream.clone(),
                mean_sr: r.sr,
                seeds: 1,
            }),
        }
    }
    for m in &mut out {
        m.mean_sr /= m.seeds as f64;
    }
    out
}

/// Mean-SR series of one algorithm and stream, ordered as swept.
pub fn series(means: &[PointMean], algorithm: &str, stream: &str) -> Vec<(f64, f64)> {
    means
        .iter()
        .filter(|m| m.algorithm == algorithm && m.stream == stream)
        .map(|m| (m.value, m.mean_sr))
        .collect()
}

/// True when every step of the series is non-decreasing within `tol`.
pub fn non_decreasing(series: &[(f64, f64)], tol: f64) -> bool {
    series.windows(2).all(|w| w[1].1 >= w[0].1 - tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrlbCell {
    pub alpha_deg: f64,
    pub beta_deg: f64,
    pub crlb_theta: f64,
    pub crlb_phi: f64,
    pub feasible: bool,
}

/// CRLBs of Eve's angles in `slot` for every orientation of the rotation
/// grid. The bound does not involve multipath, so none is drawn.
pub fn crlb_map(scenario: &Scenario, step_deg: f64, slot: usize, seed: u64, workers: usize) -> Result<Vec<CrlbCell>> {
    if !(step_deg > 0.0) {
        return Err(Error::InvalidArgument(format!("grid step must be positive, got {step_deg}")));
    }
    let grid = scenario.rotation_grid(step_deg.to_radians());
    let root = RngStream::new(seed).substream("crlb-map");
    let eps = scenario.config.sensing.crlb_threshold_rad2;
    let none = scenario.no_multipath();
    run_pool(grid.len(), workers, |i| {
        let o = grid[i];
        let channels = scenario.channels(&o, slot, &none)?;
        let (_, r) = scenario.sense(&channels, &mut root.indexed("cell", i as u64))?;
        Ok(CrlbCell {
            alpha_deg: degrees(o.alpha),
            beta_deg: degrees(o.beta),
            crlb_theta: r.crlb_theta,
            crlb_phi: r.crlb_phi,
            feasible: crlb_feasible(&r, eps),
        })
    })
    .into_iter()
    .collect()
}
