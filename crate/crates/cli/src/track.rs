use std::path::PathBuf;

use anyhow::{bail, Context};
use infotrack::tick::{
    estimate_noise_variance, filter_series, generate_wick_series, ingest_csv, write_filtered_csv, DEFAULT_Q_RATIO,
};
use infotrack::tracker;
use infotrack::{TrackerConfig, WickConfig};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::args;
use crate::output::{RunManifest, Staging};

#[derive(Debug, clap::Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["input", "synthetic"])))]
pub struct Args {
    /// CSV with a `timestamp,price` header.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Generate a liquidation-wick series instead of reading one.
    #[arg(long)]
    synthetic: bool,
    #[arg(long, env = "INFOTRACK_OUT_DIR", default_value = "infotrack-out")]
    out_dir: PathBuf,

    #[arg(long, requires = "synthetic")]
    n_ticks: Option<usize>,
    #[arg(long, requires = "synthetic", value_parser = args::positive)]
    base_price: Option<f64>,
    /// Level shifts as "start:level" pairs, comma separated, or "none".
    #[arg(long, requires = "synthetic", value_parser = regimes)]
    regimes: Option<Regimes>,
    #[arg(long, requires = "synthetic", value_parser = args::nonnegative)]
    wick_probability: Option<f64>,
    #[arg(long, requires = "synthetic", value_parser = args::nonnegative)]
    wick_magnitude: Option<f64>,
    #[arg(long, requires = "synthetic", value_parser = args::nonnegative)]
    micro_noise: Option<f64>,
    #[arg(long, requires = "synthetic")]
    seed: Option<u64>,

    #[command(flatten)]
    geometry: args::Geometry,
    /// Measurement noise variance; estimated from the series when omitted.
    #[arg(long, value_parser = args::positive)]
    noise_var: Option<f64>,
    /// Process-noise intensity; defaults to a tenth of the noise variance.
    #[arg(long, value_parser = args::positive)]
    q: Option<f64>,
}

#[derive(Debug, Clone)]
struct Regimes(Vec<(usize, f64)>);

fn regimes(s: &str) -> Result<Regimes, String> {
    if s.trim() == "none" {
        return Ok(Regimes(Vec::new()));
    }
    s.split(',')
        .map(|pair| {
            let (start, level) = pair
                .trim()
                .split_once(':')
                .ok_or_else(|| format!("expected start:level, got {pair:?}"))?;
            let start = start.parse().map_err(|_| format!("invalid start index {start:?}"))?;
            let level = args::positive(level)?;
            Ok((start, level))
        })
        .collect::<Result<_, _>>()
        .map(Regimes)
}

#[derive(Debug, Serialize)]
struct Echo {
    source: Source,
    delta: f64,
    nu: f64,
    alpha: f64,
    noise_var: f64,
    q: f64,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum Source {
    Input(PathBuf),
    Synthetic(WickConfig),
}

impl Args {
    fn wick_config(&self) -> WickConfig {
        let mut c = WickConfig::default();
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { c.$field = v; })*
            };
        }
        set!(n_ticks, base_price, wick_probability, wick_magnitude, micro_noise, seed);
        if let Some(r) = &self.regimes {
            c.drift_regimes = r.0.clone();
        }
        c
    }
}

pub fn run(a: Args) -> anyhow::Result<()> {
    let (series, source, seed) = match &a.input {
        Some(path) => (ingest_csv(path)?, Source::Input(path.clone()), 0),
        None => {
            let config = a.wick_config();
            let seed = config.seed;
            (generate_wick_series(&config)?, Source::Synthetic(config), seed)
        }
    };
    if series.len() < 2 {
        bail!("series needs at least two ticks");
    }
    let noise_var = a.noise_var.unwrap_or_else(|| estimate_noise_variance(&series));
    let q = a.q.unwrap_or(DEFAULT_Q_RATIO * noise_var);
    let config = TrackerConfig::new(
        a.geometry.params()?,
        DMatrix::from_element(1, 1, noise_var),
        tracker::DEFAULT_MAX_ITERATIONS,
        1e-9 * noise_var.sqrt(),
    )
    .context("invalid tracker configuration")?;

    let filtered = filter_series(&series, &config, q)?;
    let metrics = filtered.metrics();

    let echo = Echo {
        source,
        delta: a.geometry.delta,
        nu: a.geometry.nu,
        alpha: a.geometry.alpha,
        noise_var,
        q,
    };
    let mut staging = Staging::new(&a.out_dir)?;
    staging.add("filtered.csv", |w| Ok(write_filtered_csv(w, &filtered)?))?;
    staging.add_json("metrics.json", &metrics)?;
    staging.commit(RunManifest::new("track-csv", &echo, seed)?)?;

    println!("{}", serde_json::to_string(&metrics)?);
    Ok(())
}
