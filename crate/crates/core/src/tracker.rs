//! The three-phase information tracker and the unconstrained Gaussian MAP
//! baseline it is compared against.
//!
//! One tracker step is:
//!
//! 1. kinematic prediction `N(Fμ, FΣFᵀ + Q)`;
//! 2. a fixed-point projection of the spatial marginal onto the point cloud,
//!    where every point outside the droplet boundary gets weight exactly zero;
//! 3. a gain update that treats the projected spatial Gaussian as a
//!    pseudo-measurement.
//!
//! If every point falls outside the droplet the step keeps the predicted
//! prior. The covariance then keeps growing with `Q`, which is what lets the
//! tracker re-acquire a target after a genuine jump.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geometry::{check_symmetric, cholesky, overlap_threshold, GaussianState, GeometryParams};

/// Below this unnormalized weight sum the droplet is considered empty.
pub const EMPTY_WEIGHT_SUM: f64 = 1e-12;
pub const DEFAULT_MAX_ITERATIONS: usize = 50;
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-6;
/// Default covariance floor variance, per spatial axis.
pub const DEFAULT_R_MIN_VAR: f64 = 0.25;

/// Linear-Gaussian motion and observation model.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicModel {
    f: DMatrix<f64>,
    q: DMatrix<f64>,
    h: DMatrix<f64>,
    dt: f64,
}

impl KinematicModel {
    pub fn new(f: DMatrix<f64>, q: DMatrix<f64>, h: DMatrix<f64>, dt: f64) -> Result<Self> {
        let n = f.nrows();
        if f.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: f.ncols() });
        }
        if q.shape() != (n, n) {
            return Err(Error::DimensionMismatch { expected: n, found: q.nrows() });
        }
        if h.ncols() != n || h.nrows() == 0 || h.nrows() > n {
            return Err(Error::DimensionMismatch { expected: n, found: h.ncols() });
        }
        check_psd(&q, "process noise")?;
        // H Hᵀ is PD exactly when H has full row rank.
        cholesky(&(&h * h.transpose()), "observation matrix rows")?;
        Ok(Self { f, q, h, dt })
    }

    /// Per-axis constant-velocity model with discrete white-noise
    /// acceleration of variance `accel_var`. State layout is all positions
    /// followed by all velocities; `H` selects the positions.
    pub fn constant_velocity(spatial_dim: usize, dt: f64, accel_var: f64) -> Result<Self> {
        if spatial_dim == 0 {
            return Err(Error::param("spatial dimension must be positive"));
        }
        if !(dt > 0.0) || !(accel_var >= 0.0) {
            return Err(Error::param("dt must be positive and accel_var nonnegative"));
        }
        let m = spatial_dim;
        let n = 2 * m;
        let mut f = DMatrix::identity(n, n);
        let mut q = DMatrix::zeros(n, n);
        let mut h = DMatrix::zeros(m, n);
        let (q_pp, q_pv, q_vv) = (dt.powi(4) / 4.0, dt.powi(3) / 2.0, dt * dt);
        for i in 0..m {
            f[(i, m + i)] = dt;
            q[(i, i)] = accel_var * q_pp;
            q[(i, m + i)] = accel_var * q_pv;
            q[(m + i, i)] = accel_var * q_pv;
            q[(m + i, m + i)] = accel_var * q_vv;
            h[(i, i)] = 1.0;
        }
        Self::new(f, q, h, dt)
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn process_noise(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn observation(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn state_dim(&self) -> usize {
        self.f.nrows()
    }

    pub fn spatial_dim(&self) -> usize {
        self.h.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    geometry: GeometryParams,
    r_min: DMatrix<f64>,
    max_iterations: usize,
    convergence_tol: f64,
}

impl TrackerConfig {
    pub fn new(
        geometry: GeometryParams,
        r_min: DMatrix<f64>,
        max_iterations: usize,
        convergence_tol: f64,
    ) -> Result<Self> {
        check_psd(&r_min, "covariance floor")?;
        if max_iterations == 0 {
            return Err(Error::param("max_iterations must be at least 1"));
        }
        if !(convergence_tol > 0.0) {
            return Err(Error::param("convergence_tol must be positive"));
        }
        Ok(Self {
            geometry,
            r_min,
            max_iterations,
            convergence_tol,
        })
    }

    /// `r_min = 0.25 I`, 50 iterations, 1e-6 tolerance.
    pub fn with_defaults(geometry: GeometryParams, spatial_dim: usize) -> Self {
        Self {
            geometry,
            r_min: DMatrix::identity(spatial_dim, spatial_dim) * DEFAULT_R_MIN_VAR,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
        }
    }

    pub fn geometry(&self) -> &GeometryParams {
        &self.geometry
    }

    pub fn r_min(&self) -> &DMatrix<f64> {
        &self.r_min
    }

    pub fn max_iterations(&self) -> usize {
        self.max_iterations
    }

    pub fn convergence_tol(&self) -> f64 {
        self.convergence_tol
    }
}

/// One frame of spatial measurements, all of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    points: Vec<DVector<f64>>,
}

impl PointCloud {
    pub fn new(dim: usize, points: Vec<DVector<f64>>) -> Result<Self> {
        if let Some(bad) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.len() });
        }
        Ok(Self { dim, points })
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, points: Vec::new() }
    }

    pub fn from_rows<const M: usize>(rows: &[[f64; M]]) -> Self {
        Self {
            dim: M,
            points: rows.iter().map(|r| DVector::from_column_slice(r)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, point: DVector<f64>) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: point.len() });
        }
        self.points.push(point);
        Ok(())
    }

    pub fn centroid(&self) -> Option<DVector<f64>> {
        if self.points.is_empty() {
            return None;
        }
        let sum = self
            .points
            .iter()
            .fold(DVector::zeros(self.dim), |acc, p| acc + p);
        Some(sum / self.points.len() as f64)
    }
}

/// Output of the fixed-point projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// Normalized weights from the final iteration, aligned with the input
    /// points. Truncated points hold exactly `0.0`.
    pub weights: Vec<f64>,
    pub droplet_empty: bool,
    pub iterations_used: usize,
}

/// Phase 1: `N(Fμ, FΣFᵀ + Q)`.
pub fn predict(state: &GaussianState, model: &KinematicModel) -> Result<GaussianState> {
    if state.dim() != model.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.state_dim(),
            found: state.dim(),
        });
    }
    let f = &model.f;
    let mean = f * state.mean();
    let cov = f * state.cov() * f.transpose() + &model.q;
    Ok(GaussianState::from_parts_unchecked(mean, cov))
}

/// `N(Hμ, HΣHᵀ)`.
pub fn spatial_marginal(state: &GaussianState, model: &KinematicModel) -> Result<GaussianState> {
    if state.dim() != model.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.state_dim(),
            found: state.dim(),
        });
    }
    let h = &model.h;
    Ok(GaussianState::from_parts_unchecked(
        h * state.mean(),
        h * state.cov() * h.transpose(),
    ))
}

/// Phase 2: fixed-point projection onto the cloud with analytic truncation.
///
/// Each iteration scores every point by the point-mass overlap
/// `A_i = exp(-½ δ(1-δ) D_i)` with `D_i` the Mahalanobis distance under the
/// current spatial covariance, zeroes every point whose overlap falls below
/// [`overlap_threshold`], and moves to the weighted mean and weighted
/// scatter plus `r_min`. An iteration in which nothing survives returns the
/// prior untouched with `droplet_empty` set.
pub fn project_manifold(
    spatial_prior: &GaussianState,
    cloud: &PointCloud,
    config: &TrackerConfig,
) -> Result<ProjectionResult> {
    let m = spatial_prior.dim();
    if cloud.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, found: cloud.dim() });
    }
    if config.r_min.nrows() != m {
        return Err(Error::DimensionMismatch { expected: m, found: config.r_min.nrows() });
    }

    let empty = || ProjectionResult {
        mean: spatial_prior.mean().clone(),
        cov: spatial_prior.cov().clone(),
        weights: vec![0.0; cloud.len()],
        droplet_empty: true,
        iterations_used: 0,
    };

    let threshold = overlap_threshold(&config.geometry);
    let half_weight = 0.5 * config.geometry.delta_weight();

    let mut mean = spatial_prior.mean().clone();
    let mut cov = spatial_prior.cov().clone();
    let mut weights = vec![0.0; cloud.len()];

    for iteration in 1..=config.max_iterations {
        let chol = cholesky(&cov, "spatial covariance")?;

        let mut total = 0.0;
        for (w, y) in weights.iter_mut().zip(cloud.points()) {
            let diff = y - &mean;
            let dist = diff.dot(&chol.solve(&diff));
            let overlap = (-half_weight * dist).exp();
            *w = if overlap < threshold { 0.0 } else { overlap };
            total += *w;
        }

        if total < EMPTY_WEIGHT_SUM {
            return Ok(ProjectionResult {
                iterations_used: iteration,
                ..empty()
            });
        }

        let next_mean = weights
            .iter()
            .zip(cloud.points())
            .fold(DVector::zeros(m), |acc, (w, y)| acc + y * *w)
            / total;
        let scatter = weights
            .iter()
            .zip(cloud.points())
            .fold(DMatrix::zeros(m, m), |acc, (w, y)| {
                let d = y - &next_mean;
                acc + (&d * d.transpose()) * *w
            })
            / total;
        let next_cov = scatter + &config.r_min;

        let shift = (&next_mean - &mean).norm();
        mean = next_mean;
        cov = next_cov;

        if shift < config.convergence_tol || iteration == config.max_iterations {
            for w in &mut weights {
                *w /= total;
            }
            return Ok(ProjectionResult {
                mean,
                cov: crate::geometry::symmetrize(cov),
                weights,
                droplet_empty: false,
                iterations_used: iteration,
            });
        }
    }
    unreachable!("max_iterations is at least 1")
}

/// Phase 3: gain update with the projection as a pseudo-measurement of
/// covariance `projection.cov`.
pub fn precision_update(
    prior: &GaussianState,
    projection: &ProjectionResult,
    model: &KinematicModel,
) -> Result<GaussianState> {
    if projection.droplet_empty {
        return Err(Error::param("cannot update from an empty droplet"));
    }
    kalman_update(prior, &projection.mean, &projection.cov, &model.h)
}

/// One full tracker step. On an empty droplet the predicted prior is the
/// posterior.
pub fn step(
    state: &GaussianState,
    cloud: &PointCloud,
    model: &KinematicModel,
    config: &TrackerConfig,
) -> Result<(GaussianState, ProjectionResult)> {
    let predicted = predict(state, model)?;
    let spatial = spatial_marginal(&predicted, model)?;
    let projection = project_manifold(&spatial, cloud, config)?;
    if projection.droplet_empty {
        return Ok((predicted, projection));
    }
    let posterior = precision_update(&predicted, &projection, model)?;
    Ok((posterior, projection))
}

/// Unconstrained baseline: predict, then a Kalman update against the plain
/// centroid of every point with covariance `r_meas / |Y|`. An empty cloud
/// leaves the prediction unchanged.
pub fn baseline_map_step(
    state: &GaussianState,
    cloud: &PointCloud,
    model: &KinematicModel,
    r_meas: &DMatrix<f64>,
) -> Result<GaussianState> {
    let predicted = predict(state, model)?;
    if cloud.dim() != model.spatial_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.spatial_dim(),
            found: cloud.dim(),
        });
    }
    let Some(centroid) = cloud.centroid() else {
        return Ok(predicted);
    };
    let r = r_meas / cloud.len() as f64;
    kalman_update(&predicted, &centroid, &r, &model.h)
}

fn kalman_update(
    prior: &GaussianState,
    z: &DVector<f64>,
    r: &DMatrix<f64>,
    h: &DMatrix<f64>,
) -> Result<GaussianState> {
    let m = h.nrows();
    if z.len() != m || r.shape() != (m, m) {
        return Err(Error::DimensionMismatch { expected: m, found: z.len() });
    }
    if h.ncols() != prior.dim() {
        return Err(Error::DimensionMismatch { expected: h.ncols(), found: prior.dim() });
    }
    let sigma = prior.cov();
    let innovation_cov = h * sigma * h.transpose() + r;
    let chol = cholesky(&innovation_cov, "innovation covariance")?;
    // K = Σ Hᵀ S⁻¹ = (S⁻¹ H Σ)ᵀ for symmetric Σ and S
    let gain = chol.solve(&(h * sigma)).transpose();
    let innovation = z - h * prior.mean();
    let mean = prior.mean() + &gain * innovation;
    let n = prior.dim();
    let cov = (DMatrix::identity(n, n) - &gain * h) * sigma;
    Ok(GaussianState::from_parts_unchecked(mean, cov))
}

fn check_psd(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite(what));
    }
    check_symmetric(m)?;
    let tol = 1e-12 * m.amax().max(1.0);
    let eig = SymmetricEigen::new(m.clone());
    if eig.eigenvalues.iter().any(|&l| l < -tol) {
        return Err(Error::NotPositiveDefinite(what));
    }
    Ok(())
}
