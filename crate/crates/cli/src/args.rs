//! Value parsers shared by the subcommands. A value rejected here is a
//! usage error.

use clap::Args;
use infotrack::GeometryParams;

pub fn delta(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("δ must lie in (0, 1), got {v}"))
    }
}

pub fn nu(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("ν must lie in (0, 1], got {v}"))
    }
}

pub fn positive(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {v}"))
    }
}

pub fn nonnegative(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a nonnegative number, got {v}"))
    }
}

/// A comma-separated list of finite numbers given as one flag value.
#[derive(Debug, Clone, PartialEq)]
pub struct Floats(pub Vec<f64>);

pub fn list(s: &str) -> Result<Floats, String> {
    s.split(',').map(|x| number(x.trim())).collect::<Result<_, _>>().map(Floats)
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not a finite number: {s:?}"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct Geometry {
    /// Separation order δ.
    #[arg(long, value_parser = delta, default_value_t = GeometryParams::default().delta())]
    pub delta: f64,
    /// Droplet shape ν.
    #[arg(long, value_parser = nu, default_value_t = GeometryParams::default().nu())]
    pub nu: f64,
    /// Droplet scale α.
    #[arg(long, value_parser = positive, default_value_t = GeometryParams::default().alpha())]
    pub alpha: f64,
}

impl Geometry {
    pub fn params(&self) -> anyhow::Result<GeometryParams> {
        Ok(GeometryParams::new(self.delta, self.nu, self.alpha)?)
    }
}
