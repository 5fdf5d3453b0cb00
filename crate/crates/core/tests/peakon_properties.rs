use novikov::peakon::{
    peakon_speed, weak_residual, AnalyticPeakon, Equation, Flavor, PeakonSpec, PointValues,
    TestFunctionSet, WeakCandidate,
};
use proptest::prelude::*;

fn amplitudes(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1..=max_len).prop_flat_map(|n| {
        (
            prop::collection::vec(-2.0..2.0f64, n),
            prop::collection::vec(-2.0..2.0f64, n),
        )
    })
}

fn flavor() -> impl Strategy<Value = Flavor> {
    prop_oneof![Just(Flavor::LineTruncated), Just(Flavor::PeriodicUnit)]
}

fn spec(p: Vec<f64>, q: Vec<f64>, flavor: Flavor) -> PeakonSpec {
    PeakonSpec::new(p, q, 0.5, flavor).unwrap()
}

/// Velocity `u_0` of the exact wave at `(0, x)`.
fn u_at(wave: &AnalyticPeakon, x: f64) -> f64 {
    let mut out = PointValues {
        u: vec![0.0; wave.n_components()],
        ux: vec![0.0; wave.n_components()],
        uxx: vec![0.0; wave.n_components()],
        v: vec![0.0; wave.n_components()],
        vx: vec![0.0; wave.n_components()],
        vxx: vec![0.0; wave.n_components()],
    };
    wave.eval(0, 0.0, x, &mut out);
    out.u[0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn speed_ignores_component_order(
        (p, q) in amplitudes(5),
        shift in 0usize..5,
        flavor in flavor(),
    ) {
        let k = shift % p.len();
        let mut rp = p.clone();
        let mut rq = q.clone();
        rp.rotate_left(k);
        rq.rotate_left(k);
        rp.reverse();
        rq.reverse();
        let scale: f64 = p.iter().zip(&q).map(|(a, b)| (a * b).abs()).sum();
        let a = peakon_speed(&spec(p, q, flavor));
        let b = peakon_speed(&spec(rp, rq, flavor));
        prop_assert!((a - b).abs() <= 1e-14 * (1.0 + scale));
    }

    #[test]
    fn speed_ignores_reciprocal_rescaling(
        (p, q) in amplitudes(5),
        alpha in 0.1..10.0f64,
        flavor in flavor(),
    ) {
        let scale: f64 = p.iter().zip(&q).map(|(a, b)| (a * b).abs()).sum();
        let sp: Vec<f64> = p.iter().map(|a| a * alpha).collect();
        let sq: Vec<f64> = q.iter().map(|b| b / alpha).collect();
        let a = peakon_speed(&spec(p, q, flavor));
        let b = peakon_speed(&spec(sp, sq, flavor));
        prop_assert!((a - b).abs() <= 1e-13 * (1.0 + scale));
    }

    #[test]
    fn profile_is_continuous_with_a_kink_only_at_the_crest(
        p in 0.2..2.0f64,
        flavor in flavor(),
    ) {
        let length = match flavor {
            Flavor::LineTruncated => 60.0,
            Flavor::PeriodicUnit => 1.0,
        };
        let crest = 0.5 * length;
        let mut s = spec(vec![p], vec![1.0], flavor);
        s.x0 = crest;
        let wave = AnalyticPeakon::new(s, length, 1.0).unwrap();
        let h = 1e-7 * length;

        let jump = (u_at(&wave, crest + h) - u_at(&wave, crest - h)).abs();
        prop_assert!(jump <= 1e-12 * p.max(1.0), "crest jump {jump}");
        // the domain ends meet
        let seam = (u_at(&wave, 0.0) - u_at(&wave, length * (1.0 - 1e-15))).abs();
        prop_assert!(seam <= 1e-12 * p.max(1.0), "seam jump {seam}");

        let slope_jump = |x: f64| {
            let right = (u_at(&wave, x + h) - u_at(&wave, x)) / h;
            let left = (u_at(&wave, x) - u_at(&wave, x - h)) / h;
            right - left
        };
        let kink = match flavor {
            Flavor::LineTruncated => -2.0 * p,
            Flavor::PeriodicUnit => -2.0 * p * 0.5f64.sinh(),
        };
        prop_assert!((slope_jump(crest) - kink).abs() <= 1e-5 * p, "{}", slope_jump(crest));
        prop_assert!(slope_jump(0.3 * length).abs() <= 1e-5 * p);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn exact_waves_satisfy_the_weak_form(
        (p, q) in amplitudes(2),
        seed in any::<u64>(),
    ) {
        let (length, x0) = (60.0, 30.0);
        let mut s = spec(p, q, Flavor::LineTruncated);
        s.x0 = x0;
        let c = peakon_speed(&s);
        let horizon = if c != 0.0 { (4.0 / c.abs()).min(1.0) } else { 1.0 };
        let travel = c * horizon;
        let region = (x0 + travel.min(0.0) - 6.0, x0 + travel.max(0.0) + 6.0);
        let set = TestFunctionSet::random(20, region, horizon, seed);
        let wave = AnalyticPeakon::new(s, length, horizon).unwrap();
        let res = weak_residual(&wave, &set).unwrap();
        prop_assert!(res.iter().any(|r| matches!(r.equation, Equation::M(_))));
        prop_assert!(res.iter().any(|r| matches!(r.equation, Equation::N(_))));
        for r in &res {
            prop_assert!(r.normalized.abs() <= 1e-6, "{r:?}");
        }
    }
}
