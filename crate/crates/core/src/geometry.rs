//! Delta information separation between densities, the compact "droplet"
//! prior built on it, and the truncation boundary that prior implies.
//!
//! For two densities `f`, `f0` and `0 < δ < 1` the separation is
//!
//! ```text
//! I_δ(f : f0) = 1/(δ(1-δ)) ∫ [δ f + (1-δ) f0 - f^δ f0^(1-δ)] dμ
//! ```
//!
//! When both are normalized this collapses to `(1 - A(δ)) / (δ(1-δ))` with
//! the generalized overlap `A(δ) = ∫ f^δ f0^(1-δ)`. Gaussians have a closed
//! form for `A`, see [`gaussian_overlap`]; [`separation_quadrature`] evaluates
//! the integral directly on a grid and is kept as an independent check.
//!
//! The droplet density `[1 - ν α I_δ]_+^(1/ν)` vanishes identically once the
//! separation exceeds the budget `1/(ν α)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

use crate::error::{Error, Result};

const SYMMETRY_RTOL: f64 = 1e-9;
const NORMALIZATION_TOL: f64 = 1e-6;

/// A multivariate normal belief `N(mean, cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Validates shape, symmetry and positive definiteness.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != cov.ncols() {
            return Err(Error::DimensionMismatch {
                expected: cov.nrows(),
                found: cov.ncols(),
            });
        }
        if mean.len() != cov.nrows() {
            return Err(Error::DimensionMismatch {
                expected: cov.nrows(),
                found: mean.len(),
            });
        }
        check_symmetric(&cov)?;
        cholesky(&cov, "covariance")?;
        Ok(Self { mean, cov })
    }

    pub fn scalar(mean: f64, var: f64) -> Result<Self> {
        Self::new(DVector::from_element(1, mean), DMatrix::from_element(1, 1, var))
    }

    /// Isotropic state `N(mean, var · I)`.
    pub fn isotropic(mean: &[f64], var: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(
            DVector::from_column_slice(mean),
            DMatrix::identity(d, d) * var,
        )
    }

    /// Skips PD validation; the caller guarantees symmetry (this symmetrizes
    /// anyway) and matching dimensions.
    pub(crate) fn from_parts_unchecked(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        debug_assert_eq!(mean.len(), cov.nrows());
        Self {
            mean,
            cov: symmetrize(cov),
        }
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn into_parts(self) -> (DVector<f64>, DMatrix<f64>) {
        (self.mean, self.cov)
    }
}

/// Shape parameters of the droplet prior: the separation order `delta`,
/// the deformation `nu` and the constraint strength `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometryParams {
    delta: f64,
    nu: f64,
    alpha: f64,
}

impl GeometryParams {
    pub fn new(delta: f64, nu: f64, alpha: f64) -> Result<Self> {
        check_delta(delta)?;
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(Error::param(format!("nu must lie in (0, 1], got {nu}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param(format!("alpha must be positive, got {alpha}")));
        }
        let params = Self { delta, nu, alpha };
        let budget = params.separation_budget();
        if !(budget.is_finite() && budget > 0.0) {
            return Err(Error::param("separation budget 1/(nu*alpha) is not finite"));
        }
        Ok(params)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Largest separation that still carries mass, `1/(ν α)`.
    pub fn separation_budget(&self) -> f64 {
        1.0 / (self.nu * self.alpha)
    }

    /// `δ(1-δ)`, the prefactor shared by the separation and the overlap.
    pub fn delta_weight(&self) -> f64 {
        self.delta * (1.0 - self.delta)
    }
}

/// `δ = 0.5, ν = 1, α = 0.3`: overlap threshold 1/6, i.e. points are cut
/// beyond a squared Mahalanobis distance of about 14.3.
impl Default for GeometryParams {
    fn default() -> Self {
        Self {
            delta: 0.5,
            nu: 1.0,
            alpha: 0.3,
        }
    }
}

/// A density sampled on a uniform 1D grid `start + i * step`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    start: f64,
    step: f64,
    values: Vec<f64>,
}

impl GridDensity {
    /// Rejects negative values and anything whose trapezoidal integral is
    /// not 1 to within 1e-6.
    pub fn new(start: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) || !start.is_finite() {
            return Err(Error::param("grid step must be positive and finite"));
        }
        if values.len() < 2 {
            return Err(Error::param("grid needs at least two points"));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::param("density values must be finite and nonnegative"));
        }
        let mass = trapezoid(step, values.iter().copied());
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Unnormalized(mass));
        }
        Ok(Self { start, step, values })
    }

    /// Samples `density` at `n` points starting at `start`.
    pub fn from_fn(start: f64, step: f64, n: usize, density: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..n).map(|i| density(start + i as f64 * step)).collect();
        Self::new(start, step, values)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn integral(&self) -> f64 {
        trapezoid(self.step, self.values.iter().copied())
    }

    fn same_support(&self, other: &Self) -> bool {
        let scale = self.step.abs().max(other.step.abs());
        self.values.len() == other.values.len()
            && (self.start - other.start).abs() <= 1e-12 * scale.max(self.start.abs())
            && (self.step - other.step).abs() <= 1e-12 * scale
    }
}

/// Closed-form overlap `A(δ) = ∫ p^δ p0^(1-δ)` between two Gaussians.
///
/// With `Σ_mix = δ Σ0 + (1-δ) Σ` and `d = μ - μ0`:
///
/// ```text
/// A(δ) = |Σ|^((1-δ)/2) |Σ0|^(δ/2) / |Σ_mix|^(1/2) · exp(-½ δ(1-δ) dᵀ Σ_mix⁻¹ d)
/// ```
///
/// Note the weighting of `Σ_mix`: the exponent `δ` sits on `p`, so its
/// *precision* is scaled by `δ` and the mixture that appears after completing
/// the square puts weight `δ` on `Σ0`. The two weightings agree at `δ = ½`.
///
/// Determinants and the quadratic form go through Cholesky factors; a
/// covariance that fails to factor is an error, never regularized here.
pub fn gaussian_overlap(p: &GaussianState, p0: &GaussianState, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if p.dim() != p0.dim() {
        return Err(Error::DimensionMismatch {
            expected: p0.dim(),
            found: p.dim(),
        });
    }
    if p == p0 {
        return Ok(1.0);
    }

    let chol = cholesky(&p.cov, "covariance of p")?;
    let chol0 = cholesky(&p0.cov, "covariance of p0")?;
    let mixed = &p0.cov * delta + &p.cov * (1.0 - delta);
    let chol_mix = cholesky(&mixed, "mixture covariance")?;

    let diff = &p.mean - &p0.mean;
    let quad = diff.dot(&chol_mix.solve(&diff));

    let log_a = 0.5 * (1.0 - delta) * log_det(&chol) + 0.5 * delta * log_det(&chol0)
        - 0.5 * log_det(&chol_mix)
        - 0.5 * delta * (1.0 - delta) * quad;
    Ok(log_a.exp().min(1.0))
}

/// `I_δ(p : p0) = (1 - A(δ)) / (δ(1-δ))` for Gaussians.
pub fn delta_separation(p: &GaussianState, p0: &GaussianState, delta: f64) -> Result<f64> {
    let overlap = gaussian_overlap(p, p0, delta)?;
    Ok(separation_from_overlap(overlap, delta))
}

/// Maps an overlap in `(0, 1]` to the separation of normalized densities.
pub fn separation_from_overlap(overlap: f64, delta: f64) -> f64 {
    (1.0 - overlap) / (delta * (1.0 - delta))
}

/// Evaluates the separation integral directly with the trapezoidal rule.
///
/// Both densities must live on the same grid. This does not assume
/// normalization in the integrand, so it also serves as a check on the
/// closed-form route.
pub fn separation_quadrature(f: &GridDensity, f0: &GridDensity, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if !f.same_support(f0) {
        return Err(Error::GridMismatch);
    }
    let integrand = f.values.iter().zip(&f0.values).map(|(&a, &b)| {
        if a == b {
            return 0.0;
        }
        let mixed = if a == 0.0 || b == 0.0 {
            0.0
        } else {
            a.powf(delta) * b.powf(1.0 - delta)
        };
        delta * a + (1.0 - delta) * b - mixed
    });
    Ok(trapezoid(f.step, integrand) / (delta * (1.0 - delta)))
}

/// Unnormalized droplet density `max(0, 1 - ν α I)^(1/ν)`.
pub fn droplet_density(i_delta: f64, params: &GeometryParams) -> f64 {
    let base = -params.nu * params.alpha * i_delta;
    if base <= -1.0 {
        return 0.0;
    }
    // (1 + base)^(1/ν) through ln_1p keeps the small-ν limit accurate.
    (base.ln_1p() / params.nu).exp()
}

/// Whether a separation lies inside the droplet, boundary included.
pub fn within_boundary(i_delta: f64, params: &GeometryParams) -> bool {
    i_delta <= params.separation_budget()
}

/// Minimum overlap a point may have and still be retained,
/// `1 - δ(1-δ)/(ν α)`, floored at zero.
///
/// Under `A = 1 - δ(1-δ) I` this is the same cut as [`within_boundary`].
pub fn overlap_threshold(params: &GeometryParams) -> f64 {
    (1.0 - params.delta_weight() * params.separation_budget()).max(0.0)
}

/// Overlap-side form of the boundary test.
pub fn retains_overlap(overlap: f64, params: &GeometryParams) -> bool {
    overlap >= overlap_threshold(params)
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("delta must lie in (0, 1), got {delta}")))
    }
}

pub(crate) fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSymmetric);
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_RTOL * scale {
                return Err(Error::NotSymmetric);
            }
        }
    }
    Ok(())
}

pub(crate) fn cholesky(m: &DMatrix<f64>, what: &'static str) -> Result<Cholesky<f64, Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite(what));
    }
    Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite(what))
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

fn trapezoid(step: f64, values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut first = None;
    let mut last = 0.0;
    for v in values {
        if first.is_none() {
            first = Some(v);
        }
        sum += v;
        last = v;
    }
    let first = first.unwrap_or(0.0);
    step * (sum - 0.5 * (first + last))
}
