mod common;

use common::{band_limited, spectrum};
use novikov::grid::{PeriodicGrid, RealField};
use novikov::invariants::{conserved_h, conserved_h1_h2, one_sided_bounds};
use proptest::prelude::*;

fn grid() -> PeriodicGrid {
    PeriodicGrid::new(128, 2.0 * std::f64::consts::PI).unwrap()
}

/// Sum of nonnegative Gaussian bumps on a long circle.
fn bumps(g: &PeriodicGrid, list: &[(f64, f64, f64)]) -> RealField {
    let l = g.length();
    g.sample(|x| {
        list.iter()
            .map(|&(a, c, w)| {
                let d = (x - c + 0.5 * l).rem_euclid(l) - 0.5 * l;
                a * (-(d / w).powi(2)).exp()
            })
            .sum()
    })
}

fn bump_list() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((0.0..1.0f64, 0.0..40.0f64, 1.0..3.0f64), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn three_forms_of_h_agree(a in spectrum(), b in spectrum()) {
        let g = grid();
        let h = conserved_h(&band_limited(&g, a.0, &a.1), &band_limited(&g, b.0, &b.1)).unwrap();
        prop_assert!(h.spread() <= 1e-10, "{h:?}");
    }

    #[test]
    fn energy_matches_momentum_pairing(a in spectrum(), b in spectrum()) {
        // ∫ (u² + u_x²) = ∫ m u after one integration by parts
        let g = grid();
        let m = band_limited(&g, a.0, &a.1);
        let n = band_limited(&g, b.0, &b.1);
        let u = m.helmholtz_invert().unwrap();
        let v = n.helmholtz_invert().unwrap();
        let (h1, h2) = conserved_h1_h2(&u, &v).unwrap();
        let mu = m.zip_with(&u, |x, y| x * y).unwrap().integrate();
        let nv = n.zip_with(&v, |x, y| x * y).unwrap().integrate();
        prop_assert!((h1 - mu).abs() <= 1e-10 * (1.0 + mu.abs()));
        prop_assert!((h2 - nv).abs() <= 1e-10 * (1.0 + nv.abs()));
    }

    #[test]
    fn nonnegative_momentum_bounds_the_slope(list in bump_list()) {
        let g = PeriodicGrid::new(512, 40.0).unwrap();
        let u = bumps(&g, &list).helmholtz_invert().unwrap();
        let (plus, minus) = one_sided_bounds(&u).unwrap();
        prop_assert!(plus >= -1e-10 && minus >= -1e-10, "{plus} {minus}");
    }
}
