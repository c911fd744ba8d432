//! Single-qubit state reconstruction from noisy Pauli expectations.
//!
//! Linear inversion `½(I + xX + yY + zZ)` is exact but happily produces
//! negative eigenvalues under noise. The bounded reconstruction instead
//! shrinks the Bloch vector toward the maximally mixed state `I/2` until the
//! quantum delta separation `(1 - Tr(ρ^δ ρ0^(1-δ))) / (δ(1-δ))` fits inside
//! the droplet budget, and never past the pure-state sphere.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{separation_from_overlap, within_boundary, GeometryParams};
use crate::rng;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const BISECTION_STEPS: usize = 200;

type CMatrix = Matrix2<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A Hermitian, unit-trace 2×2 matrix. Positivity is not part of the type:
/// linear inversion legitimately produces unphysical matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    elements: CMatrix,
}

impl DensityMatrix {
    pub fn new(elements: CMatrix) -> Result<Self> {
        check_hermitian(&elements)?;
        let trace = elements[(0, 0)].re + elements[(1, 1)].re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::param(format!("trace must be 1, got {trace}")));
        }
        Ok(Self { elements })
    }

    /// `½(I + r · σ)`; Hermitian with unit trace for any real `r`.
    pub fn from_bloch(r: [f64; 3]) -> Self {
        let [x, y, z] = r;
        Self {
            elements: Matrix2::new(
                c(0.5 * (1.0 + z), 0.0),
                c(0.5 * x, -0.5 * y),
                c(0.5 * x, 0.5 * y),
                c(0.5 * (1.0 - z), 0.0),
            ),
        }
    }

    pub fn maximally_mixed() -> Self {
        Self::from_bloch([0.0; 3])
    }

    /// `|0⟩⟨0|`.
    pub fn ground() -> Self {
        Self::from_bloch([0.0, 0.0, 1.0])
    }

    pub fn elements(&self) -> &CMatrix {
        &self.elements
    }

    /// `(Tr ρX, Tr ρY, Tr ρZ)`.
    pub fn bloch(&self) -> [f64; 3] {
        let m = &self.elements;
        [
            2.0 * m[(1, 0)].re,
            2.0 * m[(1, 0)].im,
            m[(0, 0)].re - m[(1, 1)].re,
        ]
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        hermitian_eigenvalues(&self.elements)
    }

    pub fn is_physical(&self) -> bool {
        self.eigenvalues().0 >= -HERMITIAN_TOL
    }

    /// `[[re, im], [re, im]]` rows, for JSON output.
    pub fn to_rows(&self) -> [[[f64; 2]; 2]; 2] {
        let m = &self.elements;
        let e = |i, j| [m[(i, j)].re, m[(i, j)].im];
        [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
    }
}

/// Noisy Pauli expectations and the readout noise they were drawn with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliExpectations {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub sigma: f64,
}

impl PauliExpectations {
    pub fn exact(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z, sigma: 0.0 }
    }

    fn vector(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Draws each expectation independently from `N(Tr(ρ S), σ²)`.
pub fn simulate_measurements<R: Rng + ?Sized>(
    rho_true: &DensityMatrix,
    sigma: f64,
    rng: &mut R,
) -> PauliExpectations {
    let [x, y, z] = rho_true.bloch();
    let mut noisy = |v: f64| {
        let n: f64 = rng.sample(StandardNormal);
        v + sigma * n
    };
    PauliExpectations {
        x: noisy(x),
        y: noisy(y),
        z: noisy(z),
        sigma,
    }
}

pub fn linear_inversion(s: &PauliExpectations) -> DensityMatrix {
    DensityMatrix::from_bloch(s.vector())
}

/// Ascending eigenvalues `(tr ∓ √((a-d)² + 4|b|²)) / 2` of a Hermitian 2×2.
pub fn eigenvalues(m: &CMatrix) -> Result<(f64, f64)> {
    check_hermitian(m)?;
    Ok(hermitian_eigenvalues(m))
}

fn hermitian_eigenvalues(m: &CMatrix) -> (f64, f64) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let root = ((a - d).powi(2) + 4.0 * b.norm_sqr()).sqrt();
    let tr = a + d;
    (0.5 * (tr - root), 0.5 * (tr + root))
}

/// `M^p` for a positive semidefinite Hermitian 2×2 through its
/// eigendecomposition. Eigenvalues within rounding of zero are clamped.
fn psd_power(m: &CMatrix, p: f64) -> Result<CMatrix> {
    let (lo, hi) = hermitian_eigenvalues(m);
    if lo < -HERMITIAN_TOL {
        return Err(Error::NotPositiveDefinite("density matrix"));
    }
    let pow = |l: f64| if l <= 0.0 { 0.0 } else { l.powf(p) };
    let b = m[(0, 1)];
    if b.norm() <= f64::EPSILON * (m[(0, 0)].re.abs() + m[(1, 1)].re.abs()).max(f64::MIN_POSITIVE) {
        return Ok(Matrix2::new(
            c(pow(m[(0, 0)].re), 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(pow(m[(1, 1)].re), 0.0),
        ));
    }
    let a = m[(0, 0)].re;
    let projector = |lambda: f64| -> CMatrix {
        // (b, λ - a) solves (M - λ) v = 0 when b ≠ 0
        let v0 = b;
        let v1 = c(lambda - a, 0.0);
        let norm = (v0.norm_sqr() + v1.norm_sqr()).sqrt();
        let (v0, v1) = (v0 / norm, v1 / norm);
        Matrix2::new(v0 * v0.conj(), v0 * v1.conj(), v1 * v0.conj(), v1 * v1.conj())
    };
    Ok(projector(lo) * c(pow(lo), 0.0) + projector(hi) * c(pow(hi), 0.0))
}

/// `Re Tr(ρ^δ ρ0^(1-δ))` for physical states.
pub fn quantum_overlap(rho: &DensityMatrix, rho0: &DensityMatrix, delta: f64) -> Result<f64> {
    crate::geometry::check_delta(delta)?;
    let a = psd_power(&rho.elements, delta)?;
    let b = psd_power(&rho0.elements, 1.0 - delta)?;
    Ok((a * b).trace().re)
}

pub fn quantum_separation(rho: &DensityMatrix, rho0: &DensityMatrix, delta: f64) -> Result<f64> {
    Ok(separation_from_overlap(quantum_overlap(rho, rho0, delta)?, delta))
}

/// `δ = 0.5, ν = 1, α = 8`: the budget keeps Bloch vectors within a radius
/// of about 0.48, well short of the pure-state surface.
pub fn default_params() -> GeometryParams {
    GeometryParams::new(0.5, 1.0, 8.0).expect("valid constants")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedReconstruction {
    pub rho: DensityMatrix,
    /// Fraction `t` of the raw Bloch vector that was kept.
    pub shrinkage: f64,
}

pub fn bounded_reconstruction(s: &PauliExpectations, params: &GeometryParams) -> DensityMatrix {
    bounded_reconstruction_detail(s, params).rho
}

/// Keeps the largest `t ∈ [0, 1]` such that `ρ(t r)` is physical and its
/// separation from `I/2` lies within the droplet. When the raw
/// reconstruction already qualifies it is returned unchanged.
pub fn bounded_reconstruction_detail(
    s: &PauliExpectations,
    params: &GeometryParams,
) -> BoundedReconstruction {
    let r = s.vector();
    let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let anchor = DensityMatrix::maximally_mixed();
    let delta = params.delta();

    let inside = |radius: f64| -> bool {
        let scale = if norm > 0.0 { radius / norm } else { 0.0 };
        let rho = DensityMatrix::from_bloch(r.map(|v| v * scale));
        quantum_separation(&rho, &anchor, delta)
            .map(|i| within_boundary(i, params))
            .unwrap_or(false)
    };

    if norm <= 1.0 && inside(norm) {
        return BoundedReconstruction {
            rho: linear_inversion(s),
            shrinkage: 1.0,
        };
    }

    let cap = norm.min(1.0);
    let radius = if inside(cap) {
        cap
    } else {
        let (mut lo, mut hi) = (0.0, cap);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if inside(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let t = radius / norm;
    BoundedReconstruction {
        rho: DensityMatrix::from_bloch(r.map(|v| v * t)),
        shrinkage: t,
    }
}

/// Tomography request as exchanged in JSON. Either all of `x, y, z` are
/// given, or `sigma` (and optionally `seed`) to simulate a noisy readout of
/// `|0⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyRequest {
    #[serde(default)]
    pub x: Option<f64>,
    #[serde(default)]
    pub y: Option<f64>,
    #[serde(default)]
    pub z: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_delta() -> f64 {
    default_params().delta()
}

fn default_nu() -> f64 {
    default_params().nu()
}

fn default_alpha() -> f64 {
    default_params().alpha()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TomographyReport {
    pub measurements: PauliExpectations,
    pub rho_mle: [[[f64; 2]; 2]; 2],
    pub rho_bounded: [[[f64; 2]; 2]; 2],
    pub eigenvalues_mle: [f64; 2],
    pub eigenvalues_bounded: [f64; 2],
    pub shrinkage: f64,
}

pub fn run_request(req: &TomographyRequest) -> Result<TomographyReport> {
    let params = GeometryParams::new(req.delta, req.nu, req.alpha)?;
    let explicit = [req.x, req.y, req.z];
    let measurements = match (explicit, req.sigma) {
        ([Some(x), Some(y), Some(z)], None) => PauliExpectations::exact(x, y, z),
        ([None, None, None], Some(sigma)) => {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::param("sigma must be nonnegative"));
            }
            let mut rng = rng::stream(req.seed.unwrap_or(0), 0);
            simulate_measurements(&DensityMatrix::ground(), sigma, &mut rng)
        }
        (_, Some(_)) => {
            return Err(Error::param("explicit x/y/z cannot be combined with sigma"));
        }
        _ => return Err(Error::param("x, y and z must all be given")),
    };
    let mle = linear_inversion(&measurements);
    let bounded = bounded_reconstruction_detail(&measurements, &params);
    let (m0, m1) = mle.eigenvalues();
    let (b0, b1) = bounded.rho.eigenvalues();
    Ok(TomographyReport {
        measurements,
        rho_mle: mle.to_rows(),
        rho_bounded: bounded.rho.to_rows(),
        eigenvalues_mle: [m0, m1],
        eigenvalues_bounded: [b0, b1],
        shrinkage: bounded.shrinkage,
    })
}

fn check_hermitian(m: &CMatrix) -> Result<()> {
    let ok = m[(0, 0)].im.abs() <= HERMITIAN_TOL
        && m[(1, 1)].im.abs() <= HERMITIAN_TOL
        && (m[(0, 1)] - m[(1, 0)].conj()).norm() <= HERMITIAN_TOL;
    if ok {
        Ok(())
    } else {
        Err(Error::NotHermitian)
    }
}
