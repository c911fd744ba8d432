use std::path::PathBuf;

use anyhow::{bail, Context};
use infotrack::{delta_separation, droplet_density, gaussian_overlap, within_boundary, GaussianState};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::args;
use crate::output::{RunManifest, Staging};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Mean of p, comma separated.
    #[arg(long, value_parser = args::list, allow_hyphen_values = true)]
    mean: args::Floats,
    /// Covariance of p, row-major and comma separated.
    #[arg(long, value_parser = args::list, allow_hyphen_values = true)]
    cov: args::Floats,
    /// Mean of the reference p0.
    #[arg(long, value_parser = args::list, allow_hyphen_values = true)]
    mean0: args::Floats,
    /// Covariance of p0, row-major.
    #[arg(long, value_parser = args::list, allow_hyphen_values = true)]
    cov0: args::Floats,
    #[command(flatten)]
    geometry: args::Geometry,
    /// Also write the report and a manifest here.
    #[arg(long, env = "INFOTRACK_OUT_DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Report {
    #[serde(rename = "A")]
    overlap: f64,
    #[serde(rename = "I")]
    separation: f64,
    inside: bool,
    pi: f64,
}

#[derive(Debug, Serialize)]
struct Echo<'a> {
    mean: &'a [f64],
    cov: &'a [f64],
    mean0: &'a [f64],
    cov0: &'a [f64],
    delta: f64,
    nu: f64,
    alpha: f64,
}

fn gaussian(name: &str, mean: &[f64], cov: &[f64]) -> anyhow::Result<GaussianState> {
    let n = mean.len();
    if cov.len() != n * n {
        bail!("{name}: covariance needs {} entries for a {n}-dimensional mean, got {}", n * n, cov.len());
    }
    GaussianState::new(DVector::from_row_slice(mean), DMatrix::from_row_slice(n, n, cov))
        .with_context(|| format!("invalid {name}"))
}

pub fn run(a: Args) -> anyhow::Result<()> {
    let params = a.geometry.params()?;
    let p = gaussian("p", &a.mean.0, &a.cov.0)?;
    let p0 = gaussian("p0", &a.mean0.0, &a.cov0.0)?;
    let delta = params.delta();
    let separation = delta_separation(&p, &p0, delta)?;
    let report = Report {
        overlap: gaussian_overlap(&p, &p0, delta)?,
        separation,
        inside: within_boundary(separation, &params),
        pi: droplet_density(separation, &params),
    };
    println!("{}", serde_json::to_string(&report)?);

    if let Some(dir) = &a.out_dir {
        let echo = Echo {
            mean: &a.mean.0,
            cov: &a.cov.0,
            mean0: &a.mean0.0,
            cov0: &a.cov0.0,
            delta,
            nu: params.nu(),
            alpha: params.alpha(),
        };
        let mut staging = Staging::new(dir)?;
        staging.add_json("separation.json", &report)?;
        staging.commit(RunManifest::new("separation", echo, 0)?)?;
    }
    Ok(())
}
