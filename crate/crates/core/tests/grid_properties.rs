mod common;

use common::{band_limited, spectrum, sup_gap};
use novikov::grid::PeriodicGrid;
use proptest::prelude::*;

fn grid() -> PeriodicGrid {
    PeriodicGrid::new(128, 10.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivative_of_a_constant_is_exactly_zero(c in -1e3..1e3f64) {
        let f = grid().sample(|_| c);
        prop_assert!(f.derivative().unwrap().samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn derivative_is_linear(
        (m1, s1) in spectrum(),
        (m2, s2) in spectrum(),
        alpha in -3.0..3.0f64,
        beta in -3.0..3.0f64,
    ) {
        let g = grid();
        let (f, h) = (band_limited(&g, m1, &s1), band_limited(&g, m2, &s2));
        let combo = f.zip_with(&h, |a, b| alpha * a + beta * b).unwrap();
        let lhs = combo.derivative().unwrap();
        let rhs = f.derivative().unwrap().zip_with(&h.derivative().unwrap(), |a, b| alpha * a + beta * b).unwrap();
        prop_assert!(sup_gap(&lhs, &rhs) <= 1e-12 * (1.0 + rhs.linf()));
    }

    #[test]
    fn helmholtz_apply_undoes_invert((mean, s) in spectrum()) {
        let f = band_limited(&grid(), mean, &s);
        let back = f.helmholtz_invert().unwrap().helmholtz_apply().unwrap();
        prop_assert!(sup_gap(&back, &f) <= 1e-10 * f.linf().max(1e-300));
    }

    #[test]
    fn derivatives_integrate_to_zero((mean, s) in spectrum()) {
        let f = band_limited(&grid(), mean, &s);
        prop_assert!(f.derivative().unwrap().integrate().abs() <= 1e-10);
    }

    #[test]
    fn inverting_a_nonnegative_bump_field_stays_nonnegative(
        bumps in prop::collection::vec((0.0..10.0f64, 0.3..3.0f64, 0.0..2.0f64), 1..5),
    ) {
        let g = grid();
        let m = g.sample(|x| {
            bumps
                .iter()
                .map(|&(c, w, a)| {
                    let z = (x - c + 5.0).rem_euclid(10.0) - 5.0;
                    a * (-(z / w).powi(2)).exp()
                })
                .sum()
        });
        prop_assert!(m.helmholtz_invert().unwrap().min() >= -1e-12);
    }
}
