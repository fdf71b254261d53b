use parisi_core::cs::{support_atol, support_gamma, Interval};
use parisi_core::rsb::{classify, ClassifyOptions, Phase};
use parisi_core::{minimize_q, GridMeasure, Mixture, SolverOptions};
use proptest::prelude::*;

fn exemplars() -> Vec<Mixture> {
    vec![
        Mixture::pure(2, 0.0).unwrap(),
        Mixture::pure(2, 1.0).unwrap(),
        Mixture::pure(4, 0.0).unwrap(),
        Mixture::new([(2, 0.95), (4, 0.05)], 0.0).unwrap(),
        Mixture::new([(2, 0.95), (4, 0.05)], 0.1).unwrap(),
    ]
}

#[test]
fn grid_consistency() {
    for m in exemplars() {
        let a = minimize_q(&m, 512, &SolverOptions::default()).unwrap();
        let b = minimize_q(&m, 2048, &SolverOptions::default()).unwrap();
        assert!((a.me - b.me).abs() < 5e-4, "{m:?}: {} vs {}", a.me, b.me);
    }
}

#[test]
fn independent_of_start() {
    let n = 256;
    for m in exemplars() {
        let from = |init: GridMeasure| {
            let opts = SolverOptions {
                init: Some(init),
                ..Default::default()
            };
            minimize_q(&m, n, &opts).unwrap()
        };
        let a = from(GridMeasure::flat(n, 0.0, 1.0));
        let b = from(GridMeasure::flat(n, 0.5, 0.5));
        assert!((a.me - b.me).abs() < 1e-6, "{m:?}: {} vs {}", a.me, b.me);
        let sup = a
            .nu_p
            .gamma()
            .iter()
            .zip(b.nu_p.gamma())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-3, "{m:?}: sup-norm {sup}");
    }
}

#[test]
fn support_sets() {
    let n = 512;
    let rs = minimize_q(&Mixture::pure(2, 1.0).unwrap(), n, &SolverOptions::default()).unwrap();
    assert_eq!(
        support_gamma(&rs, support_atol(&rs.nu_p)),
        vec![Interval { lo: 1.0, hi: 1.0 }]
    );

    let one = minimize_q(&Mixture::pure(4, 0.0).unwrap(), n, &SolverOptions::default()).unwrap();
    let g = support_gamma(&one, support_atol(&one.nu_p));
    assert_eq!(g.len(), 2);
    assert_eq!(g[0].lo, 0.0);
    assert!(g[0].hi < 0.01);
    assert_eq!(g[1], Interval { lo: 1.0, hi: 1.0 });
    assert_eq!(one.s_p, 0.0);

    let m = Mixture::new([(2, 0.95), (4, 0.05)], 0.0).unwrap();
    let full = minimize_q(&m, n, &SolverOptions::default()).unwrap();
    let g = support_gamma(&full, support_atol(&full.nu_p));
    assert_eq!(g.last().unwrap().hi, 1.0);
    assert!(g[0].lo < 0.01);
}

#[test]
fn numeric_and_closed_forms_agree() {
    for m in exemplars() {
        let opts = ClassifyOptions {
            cross_check: true,
            ..Default::default()
        };
        let c = classify(&m, &opts).unwrap();
        assert_ne!(c.phase, Phase::NumericOnly, "{m:?}");
        let cc = c.cross_check.unwrap();
        assert!((cc.me_numeric - c.me_closed_form().unwrap()).abs() < 1e-3);
    }
}

#[test]
fn measure_csv_round_trip() {
    let m = Mixture::new([(2, 0.95), (4, 0.05)], 0.1).unwrap();
    let sol = minimize_q(&m, 64, &SolverOptions::default()).unwrap();
    let mut buf = Vec::new();
    sol.nu_p.write_csv(&mut buf).unwrap();
    let back = GridMeasure::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, sol.nu_p);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solution_is_feasible_and_optimal(w in 0.05f64..1.0, h in 0.0f64..1.5) {
        let m = Mixture::new([(2, w), (4, 1.0 - w)], h).unwrap();
        let sol = minimize_q(&m, 128, &SolverOptions::default()).unwrap();
        let g = sol.nu_p.gamma();
        prop_assert!(g.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(g[0] >= 0.0 && sol.nu_p.delta() > 0.0);
        // an atom of rho strictly inside a cell leaves an O(1/n) residual
        let tol = 0.1 * m.xi2(1.0) / 128.0;
        prop_assert!(sol.residuals.f_at_1.abs() < tol);
        prop_assert!(sol.residuals.min_fbar > -tol);
        prop_assert!(sol.history.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs()));
    }
}
