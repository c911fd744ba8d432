use std::path::PathBuf;

use anyhow::{bail, Context};
use infotrack::lidar::{run_trials, summarize, write_trace_csv};
use infotrack::tracker;
use infotrack::{LidarScenarioConfig, MonteCarloSummary, TrackerConfig};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::args;
use crate::output::{RunManifest, Staging};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Number of Monte Carlo trials.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Master seed; trial seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "INFOTRACK_OUT_DIR", default_value = "infotrack-out")]
    out_dir: PathBuf,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,

    #[arg(long, value_parser = args::positive)]
    dt: Option<f64>,
    #[arg(long)]
    n_frames: Option<usize>,
    #[arg(long, value_parser = args::nonnegative)]
    sigma_sensor: Option<f64>,
    /// Ghost offset from the target, "x,y,z" in meters.
    #[arg(long, value_parser = args::list, allow_hyphen_values = true)]
    ghost_offset: Option<args::Floats>,
    #[arg(long, value_parser = args::nonnegative)]
    sigma_ghost: Option<f64>,
    #[arg(long)]
    n_valid: Option<usize>,
    #[arg(long)]
    n_ghost: Option<usize>,
    /// White-noise acceleration variance.
    #[arg(long, value_parser = args::nonnegative)]
    process_noise: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    maneuver_peak: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    forward_speed: Option<f64>,
    #[arg(long, value_parser = args::nonnegative)]
    initial_position_std: Option<f64>,
    #[arg(long, value_parser = args::nonnegative)]
    initial_velocity_std: Option<f64>,

    #[command(flatten)]
    geometry: args::Geometry,
    /// Covariance floor of the projection, per axis (m²).
    #[arg(long, value_parser = args::positive, default_value_t = tracker::DEFAULT_R_MIN_VAR)]
    r_min: f64,
    #[arg(long, default_value_t = tracker::DEFAULT_MAX_ITERATIONS)]
    max_iterations: usize,
    #[arg(long, value_parser = args::positive, default_value_t = tracker::DEFAULT_CONVERGENCE_TOL)]
    convergence_tol: f64,
}

#[derive(Debug, Serialize)]
struct TrackerEcho {
    delta: f64,
    nu: f64,
    alpha: f64,
    r_min: f64,
    max_iterations: usize,
    convergence_tol: f64,
}

#[derive(Debug, Serialize)]
struct Echo<'a> {
    trials: usize,
    scenario: &'a LidarScenarioConfig,
    tracker: TrackerEcho,
}

#[derive(Debug, Serialize)]
struct Summary {
    tracker: MonteCarloSummary,
    baseline: MonteCarloSummary,
}

impl Args {
    fn scenario(&self) -> anyhow::Result<LidarScenarioConfig> {
        let mut c = LidarScenarioConfig {
            seed: self.seed,
            ..Default::default()
        };
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field { c.$target = v; })*
            };
        }
        set!(dt => dt, n_frames => n_frames, sigma_sensor => sigma_sensor, sigma_ghost => sigma_ghost,
             n_valid => n_valid, n_ghost => n_ghost, process_noise => process_noise_intensity,
             maneuver_peak => maneuver_peak, forward_speed => forward_speed,
             initial_position_std => initial_position_std, initial_velocity_std => initial_velocity_std);
        if let Some(offset) = &self.ghost_offset {
            c.ghost_offset = offset
                .0
                .as_slice()
                .try_into()
                .map_err(|_| anyhow::anyhow!("--ghost-offset needs three values, got {}", offset.0.len()))?;
        }
        c.validate()?;
        Ok(c)
    }

    fn tracker(&self) -> anyhow::Result<TrackerConfig> {
        Ok(TrackerConfig::new(
            self.geometry.params()?,
            DMatrix::identity(3, 3) * self.r_min,
            self.max_iterations,
            self.convergence_tol,
        )?)
    }
}

pub fn run(a: Args) -> anyhow::Result<()> {
    if a.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let scenario = a.scenario()?;
    let tracker_config = a.tracker()?;
    let model = scenario.kinematic_model()?;

    let outcomes = match a.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("cannot start worker pool")?
            .install(|| run_trials(&scenario, &tracker_config, &model, a.trials))?,
        None => run_trials(&scenario, &tracker_config, &model, a.trials)?,
    };
    let (tracker, baseline) = summarize(&outcomes);
    let summary = Summary { tracker, baseline };

    let echo = Echo {
        trials: a.trials,
        scenario: &scenario,
        tracker: TrackerEcho {
            delta: a.geometry.delta,
            nu: a.geometry.nu,
            alpha: a.geometry.alpha,
            r_min: a.r_min,
            max_iterations: a.max_iterations,
            convergence_tol: a.convergence_tol,
        },
    };
    let mut staging = Staging::new(&a.out_dir)?;
    staging.add_json("summary.json", &summary)?;
    staging.add("trace.csv", |w| Ok(write_trace_csv(w, &outcomes[..1])?))?;
    staging.commit(RunManifest::new("bench-lidar", &echo, a.seed)?)?;

    println!("{} trials, seed {}", a.trials, a.seed);
    println!("{:<20} {:>18} {:>18}", "method", "RMSE (m)", "max error (m)");
    for (name, s) in [("information tracker", tracker), ("baseline MAP", baseline)] {
        println!(
            "{:<20} {:>8.3} ± {:<7.3} {:>8.3} ± {:<7.3}",
            name, s.mean_rmse, s.std_rmse, s.mean_max_error, s.std_max_error
        );
    }
    println!("outputs in {}", a.out_dir.display());
    Ok(())
}
