//! Property tests for the invariants each module promises.

use std::collections::BTreeMap;

use proptest::prelude::*;

use verifier_core::bogoliubov::{per_mode_deficit, ModeCoefficients};
use verifier_core::budget::{bec_feasible_exact, exact_exponents, Rational};
use verifier_core::config::RunConfig;
use verifier_core::eigen::EigenOptions;
use verifier_core::form::dot;
use verifier_core::graph::{cheeger_constant, path_eigenvalue, spectral_gap, Cheeger, GridGraph};
use verifier_core::grid::{subdivide, Grid, GridFunction};
use verifier_core::poincare::multiscale_ratio;
use verifier_core::report::{CheckRecord, Verdict, VerificationReport};
use verifier_core::scattering::{solve_scattering, square_well_a0, PotentialSpec};
use verifier_core::spectral::assemble_neumann_laplacian;
use verifier_core::symmetrization::mirror_point;

fn vector(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn neumann_laplacian_is_symmetric_psd_and_kills_constants(
        (dim, n, u, v) in (1usize..=2, 3usize..=12).prop_flat_map(|(d, n)| {
            let len = n.pow(d as u32);
            (Just(d), Just(n), vector(len), vector(len))
        }),
        c in -3.0f64..3.0,
    ) {
        let grid = Grid::unit(dim, n).unwrap();
        let a = assemble_neumann_laplacian(&grid);
        let scale = a.norm_bound();
        prop_assert!((dot(&u, &a.apply_vec(&v)) - dot(&v, &a.apply_vec(&u))).abs() <= 1e-12 * scale);
        prop_assert!(a.quad(&u) >= -1e-12 * scale);
        let ones = vec![c; grid.len()];
        prop_assert!(a.apply_vec(&ones).iter().all(|x| x.abs() <= 1e-12 * scale));
    }

    #[test]
    fn multiscale_ratio_ignores_scale_and_shift(
        vals in vector(32),
        scale in prop_oneof![0.01f64..100.0, -100.0f64..-0.01],
        shift in -10.0f64..10.0,
    ) {
        let grid = Grid::unit(1, 32).unwrap();
        let sub = subdivide(&grid, 2).unwrap();
        let f = GridFunction::new(grid, vals).unwrap();
        let g = f.scaled(scale).shifted(shift);
        match (multiscale_ratio(&f, &sub, 2.0), multiscale_ratio(&g, &sub, 2.0)) {
            (Ok(a), Ok(b)) => {
                if let (Some(x), Some(y)) = (a.ratio, b.ratio) {
                    prop_assert!((x / y - 1.0).abs() <= 1e-9, "{x} vs {y}");
                }
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "one side rejected: {:?} / {:?}", a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn path_gap_matches_closed_form(m in 2usize..48) {
        let g = GridGraph::new(m, 1).unwrap();
        let gap = spectral_gap(&g, &EigenOptions::default()).unwrap();
        prop_assert!((gap - path_eigenvalue(m, 1)).abs() <= 1e-9);
    }

    #[test]
    fn cheeger_sandwich_on_small_grids((m, d) in prop_oneof![(2usize..=20).prop_map(|m| (m, 1usize)), (2usize..=4).prop_map(|m| (m, 2usize))]) {
        let g = GridGraph::new(m, d).unwrap();
        let opts = EigenOptions::default();
        let lam = spectral_gap(&g, &opts).unwrap();
        let c = cheeger_constant(&g, &opts).unwrap();
        prop_assert!(c.lower() <= c.upper());
        if let Cheeger::Exact { value: h, .. } = c {
            let deg = g.max_degree() as f64;
            prop_assert!(lam >= h * h / (2.0 * deg) - 1e-12);
            prop_assert!(lam <= 2.0 * h + 1e-12);
        } else {
            prop_assert!(false, "{m}^{d} vertices should be enumerated");
        }
    }

    #[test]
    fn mirror_points_are_no_closer(
        x in prop::array::uniform3(-0.5f64..=0.5),
        y in prop::array::uniform3(-0.5f64..=0.5),
        z in prop::array::uniform3(-3i32..=3),
    ) {
        let px = mirror_point(&z, &x);
        let dist = |a: &[f64]| a.iter().zip(&y).map(|(s, t)| (s - t) * (s - t)).sum::<f64>().sqrt();
        prop_assert!(dist(&px) >= dist(&x) - 1e-14);
    }

    #[test]
    fn deficit_is_bounded_even_and_homogeneous(a in 1e-3f64..1e3, s in -0.999f64..0.999, k in -20i32..20) {
        let b = a * s;
        let d = per_mode_deficit(ModeCoefficients { a, b }).unwrap();
        prop_assert!(d >= 0.0 && d <= a);
        prop_assert_eq!(d, per_mode_deficit(ModeCoefficients { a, b: -b }).unwrap());
        // powers of two scale exactly
        let t = 2f64.powi(k);
        prop_assert_eq!(d * t, per_mode_deficit(ModeCoefficients { a: a * t, b: b * t }).unwrap());
    }

    #[test]
    fn frontier_is_two_elevenths(p in 1i64..2000, q in 1i64..2000) {
        let kappa = Rational::new(p, 3 * q);
        prop_assume!(kappa < Rational::new(2, 3));
        match bec_feasible_exact(kappa) {
            Some(alpha) => {
                prop_assert!(kappa < Rational::new(2, 11));
                let (e1, e2) = exact_exponents(kappa, alpha);
                prop_assert!(e1 < Rational::from_integer(0) && e2 < Rational::from_integer(0));
            }
            None => prop_assert!(kappa >= Rational::new(2, 11)),
        }
    }

    #[test]
    fn report_round_trips(
        measured in prop::collection::vec(prop::option::of(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO), 1..6),
        seed in any::<u64>(),
    ) {
        let records: Vec<CheckRecord> = measured
            .iter()
            .enumerate()
            .map(|(i, m)| CheckRecord {
                suite: "graph".into(),
                check: format!("c{i}"),
                anchor: "a \"quoted\" anchor\t".into(),
                parameters: BTreeMap::from([("x".to_string(), serde_json::json!(m.unwrap_or(0.5)))]),
                measured: *m,
                reference: String::new(),
                tolerance: m.map(f64::abs),
                verdict: [Verdict::Pass, Verdict::Fail, Verdict::Info][i % 3],
                diagnostics: None,
            })
            .collect();
        let rep = VerificationReport::new(seed, serde_json::json!({}), records);
        let text = rep.to_json().unwrap();
        let back = VerificationReport::from_json(&text).unwrap();
        prop_assert!(back.is_consistent());
        prop_assert_eq!(&back, &rep);
        prop_assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn config_overrides_round_trip(trials in 1usize..500, seed in any::<u64>()) {
        let cfg = RunConfig::default()
            .with_overrides(&[format!("graph.trials={trials}"), format!("seed={seed}")])
            .unwrap();
        prop_assert_eq!(cfg.graph.trials, trials);
        prop_assert_eq!(cfg.seed, seed);
        prop_assert_eq!(RunConfig::from_value(cfg.to_value()).unwrap(), cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn square_well_matches_matching_formula(amp in 0.1f64..10.0, range in 0.2f64..1.0) {
        let v = PotentialSpec::SquareWell { amplitude: amp, range };
        let sol = solve_scattering(&v, 2.0 * range, 1024).unwrap();
        let exact = square_well_a0(amp, range);
        prop_assert!((sol.a0() / exact - 1.0).abs() <= 1e-6);
        prop_assert!((sol.a0_integral() / sol.a0() - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn scaled_potential_has_scaled_length(ell in 1.0f64..64.0, amp in 0.5f64..5.0) {
        let v = PotentialSpec::SmoothBump { amplitude: amp, range: 0.5 };
        let base = solve_scattering(&v, 1.0, 1024).unwrap().a0();
        let s = v.scaled(ell);
        let scaled = solve_scattering(&s, 2.0 * s.range(), 1024).unwrap().a0();
        prop_assert!((scaled * ell / base - 1.0).abs() <= 1e-6);
    }
}
