use infotrack::tomography::{
    bounded_reconstruction, bounded_reconstruction_detail, linear_inversion, run_request, simulate_measurements,
    TomographyRequest,
};
use infotrack::{rng, DensityMatrix, GeometryParams, PauliExpectations};
use nalgebra::Complex;
use proptest::prelude::*;

fn bloch_ball() -> impl Strategy<Value = [f64; 3]> {
    (prop::array::uniform3(-1.0f64..1.0), 0.0f64..=1.0).prop_map(|(v, radius)| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            [0.0; 3]
        } else {
            v.map(|x| x / n * radius)
        }
    })
}

fn assert_physical(rho: &DensityMatrix) {
    let m = rho.elements();
    assert!((m[(0, 1)] - m[(1, 0)].conj()).norm() <= 1e-12);
    assert!(m[(0, 0)].im.abs() <= 1e-12 && m[(1, 1)].im.abs() <= 1e-12);
    assert!(((m[(0, 0)] + m[(1, 1)]).re - 1.0).abs() <= 1e-12);
    assert!(rho.eigenvalues().0 >= -1e-12);
}

#[test]
fn paper_draw_inverts_to_the_stated_matrix() {
    let rho = linear_inversion(&PauliExpectations::exact(-0.069, 0.323, 1.761));
    let m = rho.elements();
    let expected_re = [[1.3805, -0.0345], [-0.0345, -0.3805]];
    let expected_im = [[0.0, -0.1615], [0.1615, 0.0]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((m[(i, j)].re - expected_re[i][j]).abs() < 1e-12);
            assert!((m[(i, j)].im - expected_im[i][j]).abs() < 1e-12);
        }
    }
    // ½(1 ± |r|)
    let norm = (0.069f64.powi(2) + 0.323f64.powi(2) + 1.761f64.powi(2)).sqrt();
    let (lo, hi) = rho.eigenvalues();
    assert!((lo - 0.5 * (1.0 - norm)).abs() < 1e-12);
    assert!((hi - 0.5 * (1.0 + norm)).abs() < 1e-12);
    assert!(lo < 0.0);
}

#[test]
fn paper_draw_is_pulled_inside() {
    for (delta, nu, alpha) in [(0.5, 1.0, 8.0), (0.25, 0.5, 1.0), (0.9, 1.0, 100.0)] {
        let params = GeometryParams::new(delta, nu, alpha).unwrap();
        let rho = bounded_reconstruction(&PauliExpectations::exact(-0.069, 0.323, 1.761), &params);
        assert_physical(&rho);
    }
    // strictly positive under a budget tighter than the pure-state surface
    let params = GeometryParams::new(0.5, 1.0, 8.0).unwrap();
    let rho = bounded_reconstruction(&PauliExpectations::exact(-0.069, 0.323, 1.761), &params);
    assert!(rho.eigenvalues().0 > 0.0);
}

#[test]
fn shrinkage_is_monotone_in_alpha() {
    let s = PauliExpectations::exact(0.3, -0.4, 0.9);
    let mut last = f64::INFINITY;
    for alpha in [0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0] {
        let params = GeometryParams::new(0.5, 1.0, alpha).unwrap();
        let t = bounded_reconstruction_detail(&s, &params).shrinkage;
        assert!(t <= last, "alpha {alpha}: {t} > {last}");
        last = t;
    }
    assert!(last < 0.5);
}

#[test]
fn request_from_sigma_is_seeded() {
    let req = TomographyRequest {
        x: None,
        y: None,
        z: None,
        sigma: Some(0.5),
        seed: Some(7),
        delta: 0.5,
        nu: 1.0,
        alpha: 8.0,
    };
    let a = run_request(&req).unwrap();
    let b = run_request(&req).unwrap();
    assert_eq!(a, b);
    assert!(a.eigenvalues_bounded[0] >= -1e-12);
}

proptest! {
    #[test]
    fn bounded_is_always_physical(
        r in prop::array::uniform3(-10.0f64..10.0),
        delta in 0.05f64..0.95,
        nu in 0.05f64..=1.0,
        alpha in 0.05f64..50.0,
    ) {
        let params = GeometryParams::new(delta, nu, alpha).unwrap();
        let rho = bounded_reconstruction(&PauliExpectations::exact(r[0], r[1], r[2]), &params);
        assert_physical(&rho);
    }

    #[test]
    fn inversion_is_affine(
        a in prop::array::uniform3(-2.0f64..2.0),
        b in prop::array::uniform3(-2.0f64..2.0),
        w in 0.0f64..=1.0,
    ) {
        let mix = PauliExpectations::exact(
            w * a[0] + (1.0 - w) * b[0],
            w * a[1] + (1.0 - w) * b[1],
            w * a[2] + (1.0 - w) * b[2],
        );
        let lhs = *linear_inversion(&mix).elements();
        let rhs = linear_inversion(&PauliExpectations::exact(a[0], a[1], a[2])).elements() * Complex::from(w)
            + linear_inversion(&PauliExpectations::exact(b[0], b[1], b[2])).elements() * Complex::from(1.0 - w);
        for (x, y) in lhs.iter().zip(rhs.iter()) {
            prop_assert!((x - y).norm() <= 1e-12);
        }
    }

    #[test]
    fn noiseless_readout_round_trips(r in bloch_ball(), seed in any::<u64>()) {
        let rho = DensityMatrix::from_bloch(r);
        let s = simulate_measurements(&rho, 0.0, &mut rng::stream(seed, 0));
        let params = GeometryParams::new(0.5, 1.0, 0.5).unwrap();
        let back = bounded_reconstruction(&s, &params);
        for (x, y) in back.elements().iter().zip(rho.elements().iter()) {
            prop_assert!((x - y).norm() <= 1e-12);
        }
    }

    #[test]
    fn physical_inside_budget_passes_through(r in bloch_ball(), alpha in 0.05f64..20.0) {
        let params = GeometryParams::new(0.5, 1.0, alpha).unwrap();
        let s = PauliExpectations::exact(r[0], r[1], r[2]);
        let detail = bounded_reconstruction_detail(&s, &params);
        if detail.shrinkage == 1.0 {
            prop_assert_eq!(detail.rho, linear_inversion(&s));
        } else {
            prop_assert!(detail.shrinkage < 1.0);
        }
    }
}
