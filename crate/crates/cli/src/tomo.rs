use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use infotrack::tomography::{default_params, run_request, TomographyRequest};
use serde::Serialize;

use crate::args;
use crate::output::{RunManifest, Staging};

#[derive(Debug, clap::Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["x", "sigma", "json"])))]
pub struct Args {
    /// Measured ⟨X⟩.
    #[arg(long, allow_hyphen_values = true, requires_all = ["y", "z"], conflicts_with_all = ["sigma", "seed", "json"])]
    x: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["x", "z"])]
    y: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["x", "y"])]
    z: Option<f64>,
    /// Simulate a readout of |0⟩ with this noise std instead.
    #[arg(long, value_parser = args::nonnegative, conflicts_with_all = ["x", "y", "z", "json"])]
    sigma: Option<f64>,
    #[arg(long, requires = "sigma")]
    seed: Option<u64>,
    /// Read the whole request from a JSON file.
    #[arg(long, conflicts_with_all = ["delta", "nu", "alpha"])]
    json: Option<PathBuf>,

    #[arg(long, value_parser = args::delta, default_value_t = default_params().delta())]
    delta: f64,
    #[arg(long, value_parser = args::nu, default_value_t = default_params().nu())]
    nu: f64,
    #[arg(long, value_parser = args::positive, default_value_t = default_params().alpha())]
    alpha: f64,
    /// Also write the report and a manifest here.
    #[arg(long, env = "INFOTRACK_OUT_DIR")]
    out_dir: Option<PathBuf>,
}

impl Args {
    fn request(&self) -> anyhow::Result<TomographyRequest> {
        if let Some(path) = &self.json {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            return serde_json::from_str(&text).with_context(|| format!("invalid request in {}", path.display()));
        }
        Ok(TomographyRequest {
            x: self.x,
            y: self.y,
            z: self.z,
            sigma: self.sigma,
            seed: self.seed,
            delta: self.delta,
            nu: self.nu,
            alpha: self.alpha,
        })
    }
}

pub fn run(a: Args) -> anyhow::Result<()> {
    let request = a.request()?;
    let report = run_request(&request)?;
    println!("{}", serde_json::to_string_pretty(&report)?);

    if let Some(dir) = &a.out_dir {
        #[derive(Serialize)]
        struct Echo<'a> {
            request: &'a TomographyRequest,
        }
        let mut staging = Staging::new(dir)?;
        staging.add_json("tomography.json", &report)?;
        staging.commit(RunManifest::new("tomo", Echo { request: &request }, request.seed.unwrap_or(0))?)?;
    }
    Ok(())
}
