//! Cross-validates the closed-form assembly against direct Gauss-Legendre
//! quadrature of the skeleton sesquilinear form and right-hand side.

mod common;

use common::compare;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use tdg_core::assembly::FluxParameters;
use tdg_core::geometry::{rect, ProblemConfig, Region};

type C = Complex<f64>;

#[test]
fn closed_form_assembly_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut total_faces = 0;

    // Layered medium: interior, interface, periodic and DtN faces.
    for _ in 0..2 {
        let flux = FluxParameters {
            a: rng.gen_range(0.3..1.7),
            b: rng.gen_range(0.3..1.7),
            d: rng.gen_range(0.3..1.7),
        };
        let config = ProblemConfig {
            period: 2.0 * PI,
            half_height: 3.0,
            k: 5.0,
            theta: -PI / 3.0,
            eps_plus: 1.0,
            eps_minus: C::new(1.5, 0.0),
            regions: vec![Region {
                polygon: rect(0.0, 2.0 * PI, -3.0, 0.0),
                eps: C::new(1.5, 0.0),
            }],
            obstacles: vec![],
            flux,
        };
        let rot = rng.gen_range(0.0..1.0);
        total_faces += compare(&config, 1.5, 3, 3, rot);
    }

    // Lossy lower medium (complex kappa in the bottom DtN and interface).
    {
        let config = ProblemConfig {
            period: 2.0 * PI,
            half_height: 3.0,
            k: 5.0,
            theta: -PI / 4.0,
            eps_plus: 1.0,
            eps_minus: C::new(1.5525, 0.25),
            regions: vec![Region {
                polygon: rect(0.0, 2.0 * PI, -3.0, 0.0),
                eps: C::new(1.5525, 0.25),
            }],
            obstacles: vec![],
            flux: FluxParameters::default(),
        };
        total_faces += compare(&config, 1.5, 3, 2, 0.17);
    }

    // Obstacle: Dirichlet faces.
    {
        let config = ProblemConfig {
            period: 2.0 * PI,
            half_height: 2.0,
            k: 4.0,
            theta: -PI / 3.0,
            eps_plus: 1.0,
            eps_minus: C::new(1.0, 0.0),
            regions: vec![],
            obstacles: vec![rect(2.0 * PI / 3.0, 4.0 * PI / 3.0, -1.0, 1.0)],
            flux: FluxParameters::default(),
        };
        total_faces += compare(&config, 1.0, 3, 2, 0.31);
    }

    assert!(total_faces >= 50, "only {total_faces} faces exercised");
}
