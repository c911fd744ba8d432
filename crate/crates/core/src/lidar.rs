//! Maneuvering-target scenario with reflection ghosts and the Monte Carlo
//! harness that pits the information tracker against the MAP baseline.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GaussianState;
use crate::rng;
use crate::tracker::{self, KinematicModel, PointCloud, TrackerConfig};

const SPATIAL_DIM: usize = 3;

const STREAM_TRAJECTORY: u64 = 0;
const STREAM_VALID: u64 = 1;
const STREAM_GHOST: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LidarScenarioConfig {
    /// Frame interval, seconds.
    pub dt: f64,
    pub n_frames: usize,
    /// Valid-return noise std, meters.
    pub sigma_sensor: f64,
    /// Ghost cluster offset from the true position, meters.
    pub ghost_offset: [f64; 3],
    pub sigma_ghost: f64,
    pub n_valid: usize,
    pub n_ghost: usize,
    /// Variance of the white-noise acceleration, m²/s⁴.
    pub process_noise_intensity: f64,
    /// Peak lateral deviation of the parabolic maneuver, meters.
    pub maneuver_peak: f64,
    /// Constant forward speed along x, m/s.
    pub forward_speed: f64,
    pub initial_position_std: f64,
    pub initial_velocity_std: f64,
    pub seed: u64,
}

impl Default for LidarScenarioConfig {
    fn default() -> Self {
        Self {
            dt: 1.0,
            n_frames: 10,
            sigma_sensor: 1.0,
            ghost_offset: [0.0, 40.0, 0.0],
            sigma_ghost: 1.0,
            n_valid: 50,
            n_ghost: 5,
            process_noise_intensity: 0.5,
            maneuver_peak: 10.0,
            forward_speed: 10.0,
            initial_position_std: 1.0,
            initial_velocity_std: 1.0,
            seed: 0,
        }
    }
}

impl LidarScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("sigma_sensor", self.sigma_sensor),
            ("sigma_ghost", self.sigma_ghost),
            ("initial_position_std", self.initial_position_std),
            ("initial_velocity_std", self.initial_velocity_std),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_frames == 0 {
            return Err(Error::param("n_frames must be at least 1"));
        }
        if !(self.process_noise_intensity >= 0.0 && self.process_noise_intensity.is_finite()) {
            return Err(Error::param("process_noise_intensity must be nonnegative"));
        }
        if self.ghost_offset.iter().chain([&self.maneuver_peak, &self.forward_speed]).any(|v| !v.is_finite()) {
            return Err(Error::param("offsets and maneuver parameters must be finite"));
        }
        Ok(())
    }

    /// Constant-velocity model matching the scenario's dynamics.
    pub fn kinematic_model(&self) -> Result<KinematicModel> {
        KinematicModel::constant_velocity(SPATIAL_DIM, self.dt, self.process_noise_intensity)
    }

    fn horizon(&self) -> f64 {
        self.n_frames as f64 * self.dt
    }

    /// Coefficient `a` of the lateral parabola `y(t) = a t (T - t)`.
    fn parabola_coefficient(&self) -> f64 {
        let t = self.horizon();
        4.0 * self.maneuver_peak / (t * t)
    }

    fn nominal_state(&self, t: f64) -> DVector<f64> {
        let a = self.parabola_coefficient();
        let horizon = self.horizon();
        DVector::from_vec(vec![
            self.forward_speed * t,
            a * t * (horizon - t),
            0.0,
            self.forward_speed,
            a * (horizon - 2.0 * t),
            0.0,
        ])
    }
}

/// True state at `t = 0`, where both estimators start.
pub fn initial_state(config: &LidarScenarioConfig) -> DVector<f64> {
    config.nominal_state(0.0)
}

/// The shared initial belief: centered on the truth with
/// `diag(σ_p², σ_p², σ_p², σ_v², σ_v², σ_v²)`.
pub fn initial_belief(config: &LidarScenarioConfig) -> Result<GaussianState> {
    let p = config.initial_position_std.powi(2);
    let v = config.initial_velocity_std.powi(2);
    let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![p, p, p, v, v, v]));
    GaussianState::new(initial_state(config), cov)
}

/// True states `[p, v]` at frames `1..=n_frames`: the nominal parabolic
/// maneuver plus a white-noise-acceleration perturbation drawn from `rng`.
pub fn generate_trajectory<R: Rng + ?Sized>(
    config: &LidarScenarioConfig,
    rng: &mut R,
) -> Vec<DVector<f64>> {
    let dt = config.dt;
    let accel_std = config.process_noise_intensity.sqrt();
    let mut pos_err = [0.0; SPATIAL_DIM];
    let mut vel_err = [0.0; SPATIAL_DIM];
    (1..=config.n_frames)
        .map(|k| {
            for axis in 0..SPATIAL_DIM {
                let z: f64 = rng.sample(StandardNormal);
                let accel = accel_std * z;
                pos_err[axis] += vel_err[axis] * dt + 0.5 * accel * dt * dt;
                vel_err[axis] += accel * dt;
            }
            let mut state = config.nominal_state(k as f64 * dt);
            for axis in 0..SPATIAL_DIM {
                state[axis] += pos_err[axis];
                state[SPATIAL_DIM + axis] += vel_err[axis];
            }
            state
        })
        .collect()
}

/// One cloud: `n_valid` returns around the truth followed by `n_ghost`
/// returns around the ghost location. Valid and ghost draws come from
/// separate streams so changing one count leaves the other's points intact.
pub fn generate_frame<V: Rng + ?Sized, G: Rng + ?Sized>(
    true_position: &DVector<f64>,
    config: &LidarScenarioConfig,
    valid_rng: &mut V,
    ghost_rng: &mut G,
) -> PointCloud {
    let ghost_center = true_position + DVector::from_column_slice(&config.ghost_offset);
    let mut points = Vec::with_capacity(config.n_valid + config.n_ghost);
    points.extend((0..config.n_valid).map(|_| jitter(true_position, config.sigma_sensor, valid_rng)));
    points.extend((0..config.n_ghost).map(|_| jitter(&ghost_center, config.sigma_ghost, ghost_rng)));
    PointCloud::new(SPATIAL_DIM, points).expect("points share the spatial dimension")
}

fn jitter<R: Rng + ?Sized>(center: &DVector<f64>, sigma: f64, rng: &mut R) -> DVector<f64> {
    center.map(|c| {
        let z: f64 = rng.sample(StandardNormal);
        c + sigma * z
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub per_frame_error: Vec<f64>,
    pub rmse: f64,
    pub max_error: f64,
}

impl TrialResult {
    pub fn from_errors(per_frame_error: Vec<f64>) -> Self {
        let n = per_frame_error.len().max(1) as f64;
        let rmse = (per_frame_error.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
        let max_error = per_frame_error.iter().copied().fold(0.0, f64::max);
        Self {
            per_frame_error,
            rmse,
            max_error,
        }
    }
}

/// Per-frame record of a trial, one CSV trace row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameRecord {
    pub frame: usize,
    pub truth: [f64; 3],
    pub tracker: [f64; 3],
    pub baseline: [f64; 3],
    pub tracker_err: f64,
    pub baseline_err: f64,
    pub droplet_empty: bool,
    /// Ghost points that kept a nonzero weight at convergence.
    pub ghost_weight_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub tracker: TrialResult,
    pub baseline: TrialResult,
    pub frames: Vec<FrameRecord>,
}

impl TrialOutcome {
    pub fn ghost_weight_violations(&self) -> usize {
        self.frames.iter().map(|f| f.ghost_weight_violations).sum()
    }
}

/// Runs both estimators over one seeded scenario (seed taken from `config`).
pub fn run_trial(
    config: &LidarScenarioConfig,
    tracker_config: &TrackerConfig,
    model: &KinematicModel,
) -> Result<TrialOutcome> {
    config.validate()?;
    if model.spatial_dim() != SPATIAL_DIM || model.state_dim() != 2 * SPATIAL_DIM {
        return Err(Error::DimensionMismatch {
            expected: 2 * SPATIAL_DIM,
            found: model.state_dim(),
        });
    }
    let mut traj_rng = rng::stream(config.seed, STREAM_TRAJECTORY);
    let mut valid_rng = rng::stream(config.seed, STREAM_VALID);
    let mut ghost_rng = rng::stream(config.seed, STREAM_GHOST);

    let truth = generate_trajectory(config, &mut traj_rng);
    let r_meas = DMatrix::identity(SPATIAL_DIM, SPATIAL_DIM) * config.sigma_sensor.powi(2);

    let mut ours = initial_belief(config)?;
    let mut theirs = ours.clone();
    let mut frames = Vec::with_capacity(truth.len());

    for (k, state) in truth.iter().enumerate() {
        let position = state.rows(0, SPATIAL_DIM).into_owned();
        let cloud = generate_frame(&position, config, &mut valid_rng, &mut ghost_rng);

        let (posterior, projection) = tracker::step(&ours, &cloud, model, tracker_config)?;
        ours = posterior;
        theirs = tracker::baseline_map_step(&theirs, &cloud, model, &r_meas)?;

        let ghost_weight_violations = projection.weights[config.n_valid..]
            .iter()
            .filter(|w| **w != 0.0)
            .count();
        let tracker_pos = position3(ours.mean());
        let baseline_pos = position3(theirs.mean());
        let truth_pos = position3(state);
        frames.push(FrameRecord {
            frame: k + 1,
            truth: truth_pos,
            tracker: tracker_pos,
            baseline: baseline_pos,
            tracker_err: distance(&tracker_pos, &truth_pos),
            baseline_err: distance(&baseline_pos, &truth_pos),
            droplet_empty: projection.droplet_empty,
            ghost_weight_violations,
        });
    }

    Ok(TrialOutcome {
        trial: 0,
        seed: config.seed,
        tracker: TrialResult::from_errors(frames.iter().map(|f| f.tracker_err).collect()),
        baseline: TrialResult::from_errors(frames.iter().map(|f| f.baseline_err).collect()),
        frames,
    })
}

/// Runs trial `index` of a Monte Carlo batch seeded by `config.seed`.
pub fn run_indexed_trial(
    config: &LidarScenarioConfig,
    tracker_config: &TrackerConfig,
    model: &KinematicModel,
    index: usize,
) -> Result<TrialOutcome> {
    let trial_config = LidarScenarioConfig {
        seed: rng::trial_seed(config.seed, index as u64),
        ..config.clone()
    };
    let mut outcome = run_trial(&trial_config, tracker_config, model)?;
    outcome.trial = index;
    Ok(outcome)
}

/// All `n_trials` outcomes in trial order, computed on the current rayon
/// pool. Results do not depend on the pool size.
pub fn run_trials(
    config: &LidarScenarioConfig,
    tracker_config: &TrackerConfig,
    model: &KinematicModel,
    n_trials: usize,
) -> Result<Vec<TrialOutcome>> {
    if n_trials == 0 {
        return Err(Error::param("n_trials must be at least 1"));
    }
    (0..n_trials)
        .into_par_iter()
        .map(|i| run_indexed_trial(config, tracker_config, model, i))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub mean_rmse: f64,
    pub std_rmse: f64,
    pub mean_max_error: f64,
    pub std_max_error: f64,
    pub n_trials: usize,
}

impl MonteCarloSummary {
    /// Means and sample standard deviations; the deviations are 0 for a
    /// single trial.
    pub fn from_results<'a>(results: impl IntoIterator<Item = &'a TrialResult>) -> Self {
        let (rmse, max): (Vec<f64>, Vec<f64>) =
            results.into_iter().map(|r| (r.rmse, r.max_error)).unzip();
        let (mean_rmse, std_rmse) = mean_std(&rmse);
        let (mean_max_error, std_max_error) = mean_std(&max);
        Self {
            mean_rmse,
            std_rmse,
            mean_max_error,
            std_max_error,
            n_trials: rmse.len(),
        }
    }
}

/// Summaries for (tracker, baseline) over outcomes, taken in trial order.
pub fn summarize(outcomes: &[TrialOutcome]) -> (MonteCarloSummary, MonteCarloSummary) {
    let mut sorted: Vec<&TrialOutcome> = outcomes.iter().collect();
    sorted.sort_by_key(|o| o.trial);
    (
        MonteCarloSummary::from_results(sorted.iter().map(|o| &o.tracker)),
        MonteCarloSummary::from_results(sorted.iter().map(|o| &o.baseline)),
    )
}

pub fn monte_carlo(
    config: &LidarScenarioConfig,
    tracker_config: &TrackerConfig,
    model: &KinematicModel,
    n_trials: usize,
) -> Result<(MonteCarloSummary, MonteCarloSummary)> {
    Ok(summarize(&run_trials(config, tracker_config, model, n_trials)?))
}

pub const TRACE_HEADER: [&str; 13] = [
    "trial",
    "frame",
    "truth_x",
    "truth_y",
    "truth_z",
    "tracker_x",
    "tracker_y",
    "tracker_z",
    "baseline_x",
    "baseline_y",
    "baseline_z",
    "tracker_err",
    "baseline_err",
];

/// Writes per-frame traces of `outcomes` as CSV with [`TRACE_HEADER`].
pub fn write_trace_csv<W: Write>(writer: W, outcomes: &[TrialOutcome]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRACE_HEADER)?;
    for outcome in outcomes {
        for f in &outcome.frames {
            let mut row = vec![outcome.trial.to_string(), f.frame.to_string()];
            row.extend(
                f.truth
                    .iter()
                    .chain(&f.tracker)
                    .chain(&f.baseline)
                    .chain([&f.tracker_err, &f.baseline_err])
                    .map(|v| v.to_string()),
            );
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

fn position3(v: &DVector<f64>) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
