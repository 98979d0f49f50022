use ferrojet::dispersion::{h_function, DispersionProfile};
use ferrojet::solver::{fit_slope, mirror_defect, Basis};
use ferrojet::spectral::{FieldOps, Parity, SpectralField, SpectralGrid};
use ferrojet::specfun::{f_ratio, i_scaled, k_scaled};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wronskian_holds(x in 1e-3f64..60.0) {
        let w = (i_scaled(0, x) * k_scaled(1, x) + i_scaled(1, x) * k_scaled(0, x)) * x;
        prop_assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f_is_even_increasing_and_at_least_two(k in 1e-3f64..50.0, dk in 1e-3f64..1.0) {
        prop_assert!(f_ratio(k) >= 2.0);
        prop_assert!(f_ratio(k + dk) > f_ratio(k));
        prop_assert_eq!(f_ratio(-k), f_ratio(k));
    }

    #[test]
    fn h_is_increasing(k in 1e-3f64..10.0, dk in 1e-3f64..1.0) {
        prop_assert!(h_function(k + dk) > h_function(k));
    }

    #[test]
    fn omega_is_a_double_root(gamma in 9.5f64..60.0) {
        let p = DispersionProfile::new(gamma).unwrap();
        prop_assert!(p.g(p.omega).abs() <= 1e-9);
        prop_assert!(p.g_prime_fd(p.omega).abs() <= 1e-6);
        prop_assert!((h_function(p.omega) - gamma).abs() <= 1e-8 * gamma);
    }

    #[test]
    fn strong_speed_is_half_gamma_minus_one(gamma in 1.1f64..8.9) {
        let p = DispersionProfile::new(gamma).unwrap();
        prop_assert!((p.c0_squared - 0.5 * (gamma - 1.0)).abs() <= 1e-14 * gamma);
    }

    #[test]
    fn power_laws_are_recovered(p in 0.5f64..4.0, a in 0.1f64..10.0) {
        let eps = [0.3, 0.2, 0.1, 0.05];
        let err: Vec<f64> = eps.iter().map(|e: &f64| a * e.powf(p)).collect();
        let fit = fit_slope(&eps, &err).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-10);
    }

    #[test]
    fn even_coordinates_round_trip(c in proptest::collection::vec(-1.0f64..1.0, 8)) {
        let g = SpectralGrid::new(10.0, 64).unwrap();
        let u = SpectralField::from_fn(&g, |z| c.iter().enumerate().map(|(j, a)| a * (j as f64 * 0.3 * z).cos()).sum::<f64>() * (-z * z / 8.0).exp(), Parity::Even);
        let b = Basis::Even;
        let back = b.from_coords(&g, &b.to_coords(&u));
        prop_assert!(back.sub(&b.project(&u)).max_abs() < 1e-12);
        prop_assert!(mirror_defect(&back, b) < 1e-12);
    }
}
