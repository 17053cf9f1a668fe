//! Property tests for the metering and mollification invariants.

use proptest::prelude::*;
use schauder_core::grid::{GridFunction, Mesh};
use schauder_core::holder::ck_alpha_norm;
use schauder_core::mollify::mollify_value;
use schauder_core::profile::TimeProfile;

const SEED: u64 = 23;

fn test_function(a: f64, b: f64, c: f64) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| a * (b * x[0]).sin() + c * (-x[0] * x[0]).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn norm_absolutely_homogeneous(
        scale in -20.0f64..20.0,
        a in -2.0f64..2.0,
        b in 0.3f64..4.0,
        c in -2.0f64..2.0,
    ) {
        prop_assume!(scale.abs() > 1e-6);
        let mesh = Mesh::new(1, 2.0, 0.025).unwrap();
        let f = GridFunction::sample(mesh, test_function(a, b, c));
        let n1 = ck_alpha_norm(&f, 1, 0.5, 1.0, 20_000, SEED).unwrap().value;
        let n2 = ck_alpha_norm(&f.scale(scale), 1, 0.5, 1.0, 20_000, SEED).unwrap().value;
        prop_assert!((n2 - scale.abs() * n1).abs() <= 1e-12 * n1.max(1.0) * scale.abs().max(1.0));
    }

    #[test]
    fn norm_triangle_inequality(
        a1 in -2.0f64..2.0, b1 in 0.3f64..4.0,
        a2 in -2.0f64..2.0, b2 in 0.3f64..4.0,
    ) {
        let mesh = Mesh::new(1, 2.0, 0.025).unwrap();
        let f = GridFunction::sample(mesh, test_function(a1, b1, 0.5));
        let g = GridFunction::sample(mesh, test_function(a2, b2, -0.3));
        let nf = ck_alpha_norm(&f, 2, 0.4, 1.0, 20_000, SEED).unwrap().value;
        let ng = ck_alpha_norm(&g, 2, 0.4, 1.0, 20_000, SEED).unwrap().value;
        let nfg = ck_alpha_norm(&f.axpy(1.0, &g), 2, 0.4, 1.0, 20_000, SEED).unwrap().value;
        prop_assert!(nfg <= nf + ng + 1e-10);
    }

    #[test]
    fn mollification_preserves_order_and_contracts_sup(
        j1 in 0.1f64..0.45,
        j2 in 0.55f64..0.9,
        v in proptest::collection::vec(-3.0f64..3.0, 3),
        bump in proptest::collection::vec(0.0f64..2.0, 3),
        n in 1.0f64..512.0,
        t in 0.0f64..1.0,
    ) {
        let lo = TimeProfile::pc(vec![j1, j2], v.clone());
        let hi_vals: Vec<f64> = v.iter().zip(&bump).map(|(a, d)| a + d).collect();
        let hi = TimeProfile::pc(vec![j1, j2], hi_vals);
        let a = mollify_value(&lo, 1.0, n, t);
        let b = mollify_value(&hi, 1.0, n, t);
        prop_assert!(a <= b + 1e-12);
        let sup = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!(a.abs() <= sup + 1e-12);
    }

    #[test]
    fn squared_mollification_dominates(
        j in 0.1f64..0.9,
        a in 0.1f64..4.0,
        b in 0.1f64..4.0,
        n in 1.0f64..512.0,
        t in 0.0f64..1.0,
    ) {
        // the direction used for the compatibility inequality after smoothing
        let rho = TimeProfile::pc(vec![j], vec![a, b]);
        let rho_sq = TimeProfile::pc(vec![j], vec![a * a, b * b]);
        let m = mollify_value(&rho, 1.0, n, t);
        let msq = mollify_value(&rho_sq, 1.0, n, t);
        prop_assert!(m * m <= msq + 1e-10);
    }
}
