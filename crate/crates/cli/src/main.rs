use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ris_dm_lab::harness::output::{crlb_csv, emit_outputs, fmt_f64, reward_csv, reward_svg, write_text};
use ris_dm_lab::harness::sweep::{crlb_map, point_means};
use ris_dm_lab::harness::{run_sweep, Scenario, ScenarioConfig, SweepAlgorithm, SweepAxis, SweepSpec};
use ris_dm_lab::rl::train::head_tail;
use ris_dm_lab::rl::{evaluate, train, Checkpoint, Environment, OrientationPolicy};

#[derive(Parser)]
#[command(name = "ris-dm-lab", version, about = "Secure directional modulation with a rotatable active RIS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML scenario file; missing fields take the base defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from the small desk scenario instead of the full-size one.
    #[arg(long)]
    desk: bool,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ScenarioConfig> {
        let base = if self.desk { ScenarioConfig::desk() } else { ScenarioConfig::default() };
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::load_with_base(p, &base).with_context(|| format!("loading {}", p.display()))?,
            None => base,
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Subcommand)]
enum Command {
    /// Sweep one parameter and write per-seed secrecy rates.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// tx_power (dBm), antennas, ris_elements or rho_max.
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// mnpl, el or dsact; repeat or separate with commas.
        #[arg(long = "algo", value_delimiter = ',', default_values = ["mnpl", "el"])]
        algorithms: Vec<SweepAlgorithm>,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Worker threads; defaults to the available cores.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// CRLB of Eve's angles over the rotation box.
    CrlbMap {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Grid step in degrees.
        #[arg(long, default_value_t = 5.0)]
        step: f64,
        /// Trajectory slot that fixes Eve's position.
        #[arg(long, default_value_t = 0)]
        slot: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the orientation agent and save a checkpoint.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Overrides `rl.episodes`.
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Per-episode reward curve as CSV.
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Compare a trained agent with the Eve-aligned baseline.
    Eval {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Overrides `rl.eval_seeds`.
        #[arg(long)]
        seeds: Option<usize>,
        /// Per-seed results as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the resolved configuration as TOML.
    ShowConfig {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sweep { cfg, axis, values, algorithms, seeds, out, svg, workers: w } => {
            let config = cfg.load()?;
            let spec = SweepSpec { axis, values, algorithms, seeds, workers: w.unwrap_or_else(workers) };
            let records = run_sweep(&config, &spec)?;
            emit_outputs(&records, &out, svg.as_deref())?;
            let failed = records.iter().filter(|r| r.status != "ok").count();
            for m in point_means(&records) {
                println!("{} = {}  {:<6} {:<9} mean SR {:.4} ({} seeds)", axis, m.value, m.algorithm, m.stream, m.mean_sr, m.seeds);
            }
            if failed > 0 {
                eprintln!("{failed} rows failed; see the status column of {}", out.display());
            }
        }
        Command::CrlbMap { cfg, step, slot, out } => {
            let config = cfg.load()?;
            let scenario = Scenario::from_config(&config)?;
            if slot >= scenario.slots() {
                bail!("slot {slot} is outside the {}-slot trajectory", scenario.slots());
            }
            let cells = crlb_map(&scenario, step, slot, config.seed, workers())?;
            write_text(&out, &crlb_csv(&cells))?;
            let finite: Vec<f64> = cells.iter().map(|c| c.crlb_theta.max(c.crlb_phi)).filter(|x| x.is_finite()).collect();
            let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = finite.iter().copied().fold(0.0, f64::max);
            let feasible = cells.iter().filter(|c| c.feasible).count();
            println!("{} orientations, {feasible} feasible, worst-axis CRLB {} .. {} rad^2", cells.len(), fmt_f64(lo), fmt_f64(hi));
        }
        Command::Train { cfg, episodes, checkpoint, curve, svg } => {
            let mut config = cfg.load()?;
            if let Some(e) = episodes {
                config.rl.episodes = e;
                config.validate()?;
            }
            let env = Environment::new(Scenario::from_config(&config)?)?;
            let report = train(&env, &config.rl, config.seed)?;
            Checkpoint::from_agent(&report.agent).save(&checkpoint)?;
            if let Some(p) = curve {
                write_text(&p, &reward_csv(&report.rewards, &report.smoothed, &report.gated))?;
            }
            if let Some(p) = svg {
                write_text(&p, &reward_svg(&report.rewards, &report.smoothed))?;
            }
            let (head, tail) = head_tail(&report.smoothed, 0.1);
            println!(
                "{} episodes, {} updates; smoothed reward {head:.4} (first 10%) -> {tail:.4} (last 10%)",
                report.rewards.len(),
                report.updates
            );
            println!("checkpoint written to {}", checkpoint.display());
        }
        Command::Eval { cfg, checkpoint, seeds, out } => {
            let config = cfg.load()?;
            let agent = Checkpoint::load(&checkpoint)
                .and_then(Checkpoint::into_agent)
                .with_context(|| format!("reading {}", checkpoint.display()))?;
            let env = Environment::new(Scenario::from_config(&config)?)?;
            if agent.bounds.lower != env.scenario.rotation.lower() || agent.bounds.upper != env.scenario.rotation.upper() {
                bail!("checkpoint was trained for a different rotation box");
            }
            let seeds = seeds.unwrap_or(config.rl.eval_seeds);
            let report = evaluate(&env, OrientationPolicy::Learned(&agent), seeds, config.seed)?;
            if let Some(p) = out {
                write_eval(&p, &report.policy, &report.baseline)?;
            }
            println!(
                "mean gated SR over {seeds} seeds: policy {:.4}, Eve-aligned {:.4}",
                report.policy_mean(),
                report.baseline_mean()
            );
        }
        Command::ShowConfig { cfg } => print!("{}", cfg.load()?.to_toml()?),
    }
    Ok(())
}

fn write_eval(path: &Path, policy: &[f64], baseline: &[f64]) -> Result<()> {
    let mut text = String::from("seed,policy_sr,baseline_sr\n");
    for (i, (p, b)) in policy.iter().zip(baseline).enumerate() {
        text.push_str(&format!("{i},{},{}\n", fmt_f64(*p), fmt_f64(*b)));
    }
    write_text(path, &text)?;
    Ok(())
}
