//! Tick-series filtering: each tick is a one-point cloud for a 1D
//! level-plus-trend tracker, compared against a plain Kalman filter with the
//! same model.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GaussianState, GeometryParams};
use crate::rng;
use crate::tracker::{self, KinematicModel, PointCloud, TrackerConfig};

/// Seconds between synthetic ticks.
pub const SYNTHETIC_INTERVAL: i64 = 60;

/// Process-noise intensity relative to the measurement noise variance used
/// when no explicit intensity is given.
pub const DEFAULT_Q_RATIO: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    timestamps: Vec<i64>,
    prices: Vec<f64>,
}

impl TickSeries {
    pub fn new(timestamps: Vec<i64>, prices: Vec<f64>) -> Result<Self> {
        if timestamps.len() != prices.len() {
            return Err(Error::DimensionMismatch {
                expected: timestamps.len(),
                found: prices.len(),
            });
        }
        if prices.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::param(format!(
                "timestamps not strictly increasing at index {}",
                i + 1
            )));
        }
        if let Some(i) = prices.iter().position(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::param(format!("non-positive price at index {i}")));
        }
        Ok(Self { timestamps, prices })
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// The first `n` ticks.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        let n = n.min(self.len());
        Self::new(self.timestamps[..n].to_vec(), self.prices[..n].to_vec())
    }
}

/// Reads a `timestamp,price` CSV with a header row.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<TickSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file)
}

pub fn read_csv<R: Read>(reader: R) -> Result<TickSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);

    let mut timestamps = Vec::new();
    let mut prices: Vec<f64> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::Parse { line, message };
        if record.len() != 2 {
            return Err(bad(format!("expected 2 fields, found {}", record.len())));
        }
        let ts: i64 = record[0]
            .parse()
            .map_err(|_| bad(format!("invalid timestamp {:?}", &record[0])))?;
        let price: f64 = record[1]
            .parse()
            .map_err(|_| bad(format!("invalid price {:?}", &record[1])))?;
        if !(price > 0.0 && price.is_finite()) {
            return Err(bad(format!("price must be positive, got {price}")));
        }
        if timestamps.last().is_some_and(|prev| ts <= *prev) {
            return Err(bad(format!("timestamp {ts} does not increase")));
        }
        timestamps.push(ts);
        prices.push(price);
    }
    TickSeries::new(timestamps, prices)
}

/// Parameters of the synthetic liquidation-wick series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WickConfig {
    pub n_ticks: usize,
    pub base_price: f64,
    /// `(start index, new level)` pairs, applied in order.
    pub drift_regimes: Vec<(usize, f64)>,
    pub wick_probability: f64,
    /// Wick size as a fraction of the current level.
    pub wick_magnitude: f64,
    /// Per-tick multiplicative noise std, as a fraction.
    pub micro_noise: f64,
    pub seed: u64,
}

impl Default for WickConfig {
    fn default() -> Self {
        Self {
            n_ticks: 1000,
            base_price: 2000.0,
            drift_regimes: vec![(350, 2080.0), (700, 2030.0)],
            wick_probability: 0.02,
            wick_magnitude: 0.03,
            micro_noise: 0.0005,
            seed: 42,
        }
    }
}

impl WickConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_ticks == 0 {
            return Err(Error::param("n_ticks must be at least 1"));
        }
        if !(self.base_price > 0.0) || self.drift_regimes.iter().any(|(_, l)| !(*l > 0.0)) {
            return Err(Error::param("price levels must be positive"));
        }
        if !(0.0..=1.0).contains(&self.wick_probability) {
            return Err(Error::param("wick_probability must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.wick_magnitude) {
            return Err(Error::param("wick_magnitude must lie in [0, 1)"));
        }
        if !(0.0..=0.1).contains(&self.micro_noise) {
            return Err(Error::param("micro_noise must lie in [0, 0.1]"));
        }
        Ok(())
    }
}

/// Piecewise-constant levels with multiplicative micro-noise and isolated
/// single-tick wicks. Every tick consumes the same number of draws.
pub fn generate_wick_series(config: &WickConfig) -> Result<TickSeries> {
    config.validate()?;
    let mut rng = rng::stream(config.seed, 0);
    let mut regimes = config.drift_regimes.clone();
    regimes.sort_by_key(|(start, _)| *start);
    let mut regimes = regimes.into_iter().peekable();

    let mut level = config.base_price;
    let mut prices = Vec::with_capacity(config.n_ticks);
    for i in 0..config.n_ticks {
        while let Some((_, new_level)) = regimes.next_if(|(start, _)| *start <= i) {
            level = new_level;
        }
        let z: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        let up: bool = rng.random();
        let mut price = level * (1.0 + config.micro_noise * z);
        if u < config.wick_probability {
            let sign = if up { 1.0 } else { -1.0 };
            price *= 1.0 + sign * config.wick_magnitude;
        }
        prices.push(price.max(f64::MIN_POSITIVE));
    }
    let timestamps = (0..config.n_ticks as i64).map(|i| i * SYNTHETIC_INTERVAL).collect();
    TickSeries::new(timestamps, prices)
}

/// Robust per-tick noise variance from the MAD of first differences,
/// floored at `(1e-6 · median price)²`.
pub fn estimate_noise_variance(series: &TickSeries) -> f64 {
    let median = |mut v: Vec<f64>| -> f64 {
        if v.is_empty() {
            return 0.0;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    };
    let diffs: Vec<f64> = series.prices.windows(2).map(|w| w[1] - w[0]).collect();
    let center = median(diffs.clone());
    let mad = median(diffs.iter().map(|d| (d - center).abs()).collect());
    // differences of white noise carry twice the variance
    let sigma = 1.482_6 * mad / std::f64::consts::SQRT_2;
    let floor = 1e-6 * median(series.prices.clone());
    sigma.max(floor).powi(2)
}

/// Tracker configuration for ticks with measurement noise variance
/// `noise_var`, which doubles as the covariance floor.
pub fn default_tick_config(noise_var: f64) -> TrackerConfig {
    TrackerConfig::new(
        GeometryParams::default(),
        DMatrix::from_element(1, 1, noise_var),
        tracker::DEFAULT_MAX_ITERATIONS,
        1e-9 * noise_var.sqrt().max(f64::MIN_POSITIVE),
    )
    .expect("valid tick configuration")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilteredSeries {
    pub timestamps: Vec<i64>,
    pub prices: Vec<f64>,
    pub tracker: Vec<f64>,
    pub baseline: Vec<f64>,
    /// Ticks the tracker rejected (empty droplet).
    pub truncated: Vec<bool>,
}

impl FilteredSeries {
    pub fn n_truncated(&self) -> usize {
        self.truncated.iter().filter(|t| **t).count()
    }

    pub fn metrics(&self) -> TickMetrics {
        TickMetrics {
            tracker_turnover: turnover(&self.tracker),
            baseline_turnover: turnover(&self.baseline),
            n_truncated: self.n_truncated(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TickMetrics {
    pub tracker_turnover: f64,
    pub baseline_turnover: f64,
    pub n_truncated: usize,
}

/// Runs the tracker and the baseline over `series`, one tick per frame.
///
/// Both start at the first price with zero trend and covariance
/// `diag(r, r)`, where `r` is the tracker's covariance floor; the baseline
/// uses `r` as its measurement variance.
pub fn filter_series(
    series: &TickSeries,
    tracker_config: &TrackerConfig,
    q_intensity: f64,
) -> Result<FilteredSeries> {
    if series.len() < 2 {
        return Err(Error::param("series needs at least two ticks"));
    }
    if tracker_config.r_min().shape() != (1, 1) {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: tracker_config.r_min().nrows(),
        });
    }
    let model = KinematicModel::constant_velocity(1, 1.0, q_intensity)?;
    let r = tracker_config.r_min().clone();
    let noise_var = r[(0, 0)];

    let first = series.prices[0];
    let start = GaussianState::new(
        DVector::from_vec(vec![first, 0.0]),
        DMatrix::from_diagonal_element(2, 2, noise_var),
    )?;
    let mut ours = start.clone();
    let mut theirs = start;

    let n = series.len();
    let mut tracker_est = Vec::with_capacity(n);
    let mut baseline_est = Vec::with_capacity(n);
    let mut truncated = Vec::with_capacity(n);
    tracker_est.push(first);
    baseline_est.push(first);
    truncated.push(false);

    for &price in &series.prices[1..] {
        let cloud = PointCloud::new(1, vec![DVector::from_element(1, price)])?;
        let (posterior, projection) = tracker::step(&ours, &cloud, &model, tracker_config)?;
        ours = posterior;
        theirs = tracker::baseline_map_step(&theirs, &cloud, &model, &r)?;
        tracker_est.push(ours.mean()[0]);
        baseline_est.push(theirs.mean()[0]);
        truncated.push(projection.droplet_empty);
    }

    Ok(FilteredSeries {
        timestamps: series.timestamps.clone(),
        prices: series.prices.clone(),
        tracker: tracker_est,
        baseline: baseline_est,
        truncated,
    })
}

/// Total variation `Σ |e[t+1] - e[t]|` of an estimate path.
pub fn turnover(estimates: &[f64]) -> f64 {
    estimates.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

pub const OUTPUT_HEADER: [&str; 5] = ["timestamp", "price", "tracker", "baseline", "truncated_flag"];

pub fn write_filtered_csv<W: Write>(writer: W, filtered: &FilteredSeries) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(OUTPUT_HEADER)?;
    for i in 0..filtered.timestamps.len() {
        w.write_record([
            filtered.timestamps[i].to_string(),
            filtered.prices[i].to_string(),
            filtered.tracker[i].to_string(),
            filtered.baseline[i].to_string(),
            u8::from(filtered.truncated[i]).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Ticks from `shift_index` until the estimate first comes within
/// `rel_tol` of `level`, or `None` if it never does.
pub fn reacquisition_lag(estimates: &[f64], shift_index: usize, level: f64, rel_tol: f64) -> Option<usize> {
    estimates
        .iter()
        .skip(shift_index)
        .position(|e| (e - level).abs() <= rel_tol * level.abs())
}
