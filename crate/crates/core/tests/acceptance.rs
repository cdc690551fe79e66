//! Acceptance gate: one line per criterion, then a single assertion.
//!
//! Criteria run in order inside one test so their runtimes are measured
//! without competing test threads. Lines go straight to stdout so they show
//! up even when the harness captures output.

use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use verifier_core::bogoliubov::{
    per_mode_deficit, single_mode_exact, single_mode_ground_energy, FockTruncation, ModeCoefficients,
};
use verifier_core::budget::{
    bec_feasible_exact, e2_unsimplified, energy_assumption, exact_exponents, excitation_exponents,
    frontier_by_bisection, Rational,
};
use verifier_core::config::RunConfig;
use verifier_core::eigen::{EigenOptions, Lanczos};
use verifier_core::graph::{cheeger_constant, discrete_poincare_constant, Cheeger, GridGraph};
use verifier_core::grid::{make_grid, BoxSpec, Grid};
use verifier_core::poincare::{least_gap_constant, least_kinetic_constant, sharpness_sweep};
use verifier_core::runner;
use verifier_core::scattering::cutoff_pair;
use verifier_core::scattering::{solve_scattering, PotentialSpec};
use verifier_core::spectral::{assemble_neumann_laplacian, discrete_gap};
use verifier_core::stats::{loglog_slope, spread};
use verifier_core::symmetrization::{
    boundary_effect, identity_full_check, identity_spot_check, BoundaryOptions, SymmetrizedKernel,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn opts() -> EigenOptions {
    EigenOptions {
        seed: 7,
        ..EigenOptions::default()
    }
}

fn lambda1(grid: &Grid) -> f64 {
    Lanczos::new(opts())
        .lowest(&assemble_neumann_laplacian(grid), 2)
        .unwrap()[1]
        .value
}

fn c01_spectral_gap() -> Verdict {
    let n = 256;
    let unit = Grid::unit(1, n).unwrap();
    let wide = make_grid(BoxSpec::with_side(1, 2.0).unwrap(), n).unwrap();
    let h = 1.0 / n as f64;
    let closed = 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
    let (l1, l2) = (lambda1(&unit), lambda1(&wide));
    let solver = (l1 - closed).abs();
    let limit = (l1 / (PI * PI) - 1.0).abs();
    let ratio = (l2 / l1 - 0.25).abs();
    let lib = (discrete_gap(&unit) - closed).abs();
    verdict(
        solver <= 1e-8 && limit <= 1e-4 && ratio <= 1e-6 && lib <= 1e-8,
        format!("|eig - closed| = {solver:.2e}, rel to pi^2 = {limit:.2e}, |ratio - 1/4| = {ratio:.2e}"),
    )
}

fn c02_operator_inequality() -> Verdict {
    let mut worst_eig = f64::INFINITY;
    let mut slopes = Vec::new();
    let mut all_finite = true;
    for (d, n) in [(1, 256), (2, 128)] {
        let grid = Grid::unit(d, n).unwrap();
        let l1 = discrete_gap(&grid);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for m in [2usize, 4] {
            for f in [0.2, 0.05] {
                let eps = f / l1;
                let b = least_gap_constant(&grid, m, eps, &opts()).unwrap();
                all_finite &= b.c_star.is_finite();
                worst_eig = worst_eig.min(b.at_c_star);
                let ell = 1.0 / m as f64;
                x.push(1.0 / (eps * ell * ell));
                y.push(b.c_star);
            }
        }
        slopes.push(loglog_slope(&x, &y).unwrap());
    }
    let pass = all_finite && worst_eig >= -1e-6 && slopes.iter().all(|s| (s - 1.0).abs() <= 0.25);
    verdict(
        pass,
        format!("min eigenvalue at C* = {worst_eig:.2e}, slopes (d=1 n=256, d=2 n=128) = {slopes:.3?}"),
    )
}

fn c03_staircase() -> Verdict {
    let sweep = sharpness_sweep(&[1, 2, 4], 2.0, 1, 4).unwrap();
    let ratios: Vec<f64> = sweep.rows.iter().map(|r| r.result.ratio.unwrap()).collect();
    let s = spread(&ratios);
    let slope = sweep.slope.unwrap();
    verdict(
        s < 2.0 && slope.abs() <= 0.2,
        format!("ratios {ratios:.4?}, spread {s:.3}, slope {slope:.3}"),
    )
}

fn c04_kinetic() -> Verdict {
    let c_at = |n: usize| -> Vec<(f64, f64)> {
        let grid = Grid::unit(1, n).unwrap();
        [0.0, 1.0]
            .iter()
            .map(|&a| {
                let b = least_kinetic_constant(&grid, 4, a, &opts()).unwrap();
                (b.c_star, b.at_c_star)
            })
            .collect()
    };
    let coarse = c_at(128);
    let fine = c_at(256);
    let certified = coarse.iter().all(|(c, e)| c.is_finite() && *e >= -1e-6);
    let changes: Vec<f64> = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (f.0 - c.0).abs() / c.0.abs())
        .collect();
    let stable = changes.iter().all(|c| *c <= 0.05);
    verdict(
        certified && stable,
        format!(
            "certified = {certified}, C*(n=128) = {:.4?}, C*(n=256) = {:.4?}, relative change {changes:.3?} (limit 0.05)",
            coarse.iter().map(|c| c.0).collect::<Vec<_>>(),
            fine.iter().map(|c| c.0).collect::<Vec<_>>()
        ),
    )
}

fn c05_discrete_poincare() -> Verdict {
    let ms = [4usize, 8, 16, 32];
    let mut consts = Vec::new();
    let mut hm = Vec::new();
    let mut exact_ok = true;
    for &m in &ms {
        let g = GridGraph::new(m, 1).unwrap();
        consts.push(discrete_poincare_constant(&g, 2.0, 64, 11, &opts()).unwrap().constant);
        let c = cheeger_constant(&g, &opts()).unwrap();
        if m <= 16 {
            // a path splits best in the middle: one cut edge, floor(M/2) vertices
            let oracle = 1.0 / (m / 2) as f64;
            exact_ok &= matches!(c, Cheeger::Exact { value, .. } if (value - oracle).abs() <= 1e-15);
        }
        hm.push(c.upper() * m as f64);
    }
    let mf: Vec<f64> = ms.iter().map(|&m| m as f64).collect();
    let slope = loglog_slope(&mf, &consts).unwrap();
    let s = spread(&hm);
    verdict(
        (slope - 1.0).abs() <= 0.15 && exact_ok && s <= 2.0,
        format!("slope {slope:.4}, Cheeger exact for M <= 16: {exact_ok}, h*M = {hm:.3?}"),
    )
}

fn c06_scattering() -> Verdict {
    let well = PotentialSpec::SquareWell {
        amplitude: 2.0,
        range: 0.5,
    };
    let sol = solve_scattering(&well, 1.0, 4096).unwrap();
    let oracle = 0.5 - 0.5f64.tanh();
    let rel = (sol.a0() / oracle - 1.0).abs();
    let ident = (sol.a0_integral() / sol.a0() - 1.0).abs();
    let weak = PotentialSpec::SquareWell {
        amplitude: 1e-3,
        range: 0.5,
    };
    let born_sol = solve_scattering(&weak, 1.0, 4096).unwrap();
    // (1/8 pi) int V = amplitude (4 pi R^3 / 3) / (8 pi) = amplitude R^3 / 6
    let born = 1e-3 * 0.125 / 6.0;
    let b = (born_sol.a0() / born - 1.0).abs();
    verdict(
        rel <= 1e-6 && ident <= 1e-6 && b <= 0.01,
        format!(
            "a0 = {:.10}, rel err {rel:.2e}; identity {ident:.2e}; Born rel {b:.2e}",
            sol.a0()
        ),
    )
}

fn kernel(dim: usize) -> SymmetrizedKernel {
    let well = PotentialSpec::SquareWell {
        amplitude: 2.0,
        range: 0.5,
    };
    let sol = solve_scattering(&well, 1.0, 4096).unwrap();
    SymmetrizedKernel::from_pair(&cutoff_pair(&sol, 16.0, 0.5).unwrap(), dim).unwrap()
}

fn c07_identity() -> Verdict {
    let full = identity_full_check(&kernel(2), 3, 64).unwrap();
    let spot = identity_spot_check(&kernel(3), 3, 10, 64, 5).unwrap();
    let r2 = full.iter().map(|e| e.residual).fold(0.0, f64::max);
    let r3 = spot.iter().map(|e| e.residual).fold(0.0, f64::max);
    let off = full
        .iter()
        .filter(|e| e.p != e.q)
        .map(|e| e.value.abs())
        .fold(0.0, f64::max);
    verdict(
        r2 <= 1e-3 && r3 <= 1e-3 && off <= 1e-3 && spot.len() == 10,
        format!(
            "d=2 full ({} pairs) {r2:.2e}, d=3 spot {r3:.2e}, off-diagonal {off:.2e}",
            full.len()
        ),
    )
}

fn c08_boundary() -> Verdict {
    let well = PotentialSpec::SquareWell {
        amplitude: 2.0,
        range: 0.5,
    };
    let (mut r1, mut r2) = (Vec::new(), Vec::new());
    for ell in [8.0f64, 16.0, 32.0] {
        let b = boundary_effect(ell, ell, 0.25, &well, &BoundaryOptions::default()).unwrap();
        r1.push(b.l1() * ell / ell.ln());
        r2.push(b.norm(2.0) * ell.sqrt());
    }
    let (s1, s2) = (spread(&r1), spread(&r2));
    verdict(
        s1 < 3.0 && s2 < 3.0,
        format!("||h||_1 l/log l = {r1:.4?}, ||h||_2 sqrt(l) = {r2:.4?}"),
    )
}

/// `x = m 2^e` exactly.
fn decode(x: f64) -> (BigInt, i32) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (m, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    let m = BigInt::from(m);
    (if x < 0.0 { -m } else { m }, e)
}

/// `A - sqrt(A^2 - B^2)` in fixed point with 256 fractional bits.
fn deficit_bigint(a: f64, b: f64) -> f64 {
    let ((ma, ea), (mb, eb)) = (decode(a), decode(b));
    let e = ea.min(eb);
    let scale = |m: BigInt, ex: i32| m << ((ex - e) as usize);
    let (ia, ib) = (scale(ma, ea), scale(mb, eb));
    // values are ia 2^e, ib 2^e; work in units of 2^(e - 256)
    let extra = 256usize;
    let disc = (&ia * &ia - &ib * &ib) << (2 * extra);
    let root = disc.sqrt();
    let d = (ia << extra) - root;
    let shift = extra as i32 - e;
    // d 2^-shift, converted without overflowing the exponent range
    let lead = d.bits() as i32;
    let keep = (lead - 64).max(0);
    let top = (d >> keep as usize).to_f64().unwrap();
    top * 2f64.powi(keep - shift)
}

fn c09_bogoliubov() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let t = FockTruncation::new(80).unwrap();
    let (mut gap, mut below) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..200 {
        let a = rng.random_range(0.5..=50.0);
        let b = a * rng.random_range(-0.9..=0.9);
        let c = ModeCoefficients { a, b };
        let e = single_mode_ground_energy(c, t).unwrap();
        let closed = -0.5 * (a - (a * a - b * b).sqrt());
        gap = gap.max((e - closed).abs());
        below = below.max(single_mode_exact(c).unwrap() - 1e-8 - e);
    }
    let mut digits = 0.0f64;
    for _ in 0..200 {
        let a = rng.random_range(0.5..=50.0);
        let s = 10f64.powf(rng.random_range(-12.0..=-6.0));
        let b = a * s;
        let reference = deficit_bigint(a, b);
        digits = digits.max((per_mode_deficit(ModeCoefficients { a, b }).unwrap() / reference - 1.0).abs());
    }
    verdict(
        gap <= 1e-6 && below <= 0.0 && digits <= 1e-14,
        format!("max |E_trunc - closed| = {gap:.2e}, worst dominance margin {below:.2e}, deficit rel err vs 256-bit = {digits:.2e}"),
    )
}

fn c10_lhy() -> Verdict {
    // trapezoid sum of exp(-x^2): error ~ exp(-pi^2/h^2), far below round-off at h = 1/4
    let h = 0.25;
    let root_pi: f64 = h * (-200..=200).map(|k| (-(k as f64 * h).powi(2)).exp()).sum::<f64>();
    let oracle = 128.0 / (15.0 * root_pi);
    let got = verifier_core::bogoliubov::lhy_coefficient();
    let rel = (got / oracle - 1.0).abs();
    verdict(rel <= 1e-12, format!("{got:.15} vs {oracle:.15}, rel {rel:.2e}"))
}

fn c11_budget() -> Verdict {
    let edge = Rational::new(2, 11);
    let tiny = Rational::new(1, 1_000_000_000_000);
    let at = bec_feasible_exact(edge).is_none();
    let above = bec_feasible_exact(edge + tiny).is_none();
    let witness = bec_feasible_exact(edge - tiny).map(|a| {
        let (e1, e2) = exact_exponents(edge - tiny, a);
        e1 < Rational::zero() && e2 < Rational::zero()
    });
    let k = frontier_by_bisection(0.05, 0.5, 1e-10).unwrap();
    let float_ok = (k - 2.0 / 11.0).abs() <= 1e-6;
    let mut worst = 0.0f64;
    for i in 0..10 {
        for j in 0..10 {
            let kappa = 0.6 * (i as f64 + 0.5) / 10.0;
            let alpha = 0.2 * j as f64;
            let e = excitation_exponents(kappa, alpha).unwrap();
            worst = worst.max((e.e2 - e2_unsimplified(kappa, alpha)).abs());
        }
    }
    let n = 1e6;
    let t = energy_assumption(n, 0.0, 1.0, 1.0).unwrap();
    let sqrt_ok = (t.correction - n.sqrt()).abs() <= 1e-9 * n.sqrt();
    verdict(
        at && above && witness == Some(true) && float_ok && worst <= 1e-12 && sqrt_ok,
        format!(
            "exact flip at 2/11: {}, bisection {k:.10}, e2 max diff {worst:.1e}, kappa=0 correction {:.3}",
            at && above && witness == Some(true),
            t.correction
        ),
    )
}

fn c12_determinism() -> Verdict {
    let cfg = RunConfig::default();
    let a = runner::run(&cfg).unwrap();
    let b = runner::run(&cfg).unwrap();
    let same_json = a.report.to_json().unwrap() == b.report.to_json().unwrap();
    let same_csv = a.suites.iter().zip(&b.suites).all(|(x, y)| x.csv == y.csv);
    verdict(
        same_json && same_csv && a.report.records.len() == runner::REGISTRY.len(),
        format!(
            "{} records; report.json identical: {same_json}; CSVs identical: {same_csv}",
            a.report.records.len()
        ),
    )
}

#[test]
fn acceptance_criteria() {
    type Criterion = (u32, &'static str, fn() -> Verdict, Duration);
    let list: [Criterion; 12] = [
        (1, "neumann spectral gap", c01_spectral_gap, Duration::from_secs(5)),
        (
            2,
            "operator inequality",
            c02_operator_inequality,
            Duration::from_secs(120),
        ),
        (3, "staircase sharpness", c03_staircase, Duration::from_secs(30)),
        (4, "kinetic localization", c04_kinetic, Duration::from_secs(60)),
        (
            5,
            "discrete poincare and cheeger",
            c05_discrete_poincare,
            Duration::from_secs(30),
        ),
        (6, "scattering length", c06_scattering, Duration::from_secs(5)),
        (7, "symmetrization identity", c07_identity, Duration::from_secs(300)),
        (8, "boundary-effect scaling", c08_boundary, Duration::from_secs(600)),
        (9, "bogoliubov oracle", c09_bogoliubov, Duration::from_secs(30)),
        (10, "lhy coefficient", c10_lhy, Duration::from_secs(1)),
        (11, "bec feasibility frontier", c11_budget, Duration::from_secs(1)),
        (12, "determinism", c12_determinism, Duration::from_secs(1200)),
    ];
    let mut failed = Vec::new();
    let mut out = std::io::stdout().lock();
    for (id, name, f, budget) in list {
        let start = Instant::now();
        let v = f();
        let took = start.elapsed();
        let pass = v.pass && took <= budget;
        let _ = writeln!(
            out,
            "criterion {id:>2} {} {name}: {} [{:.2}s / {}s]",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
        let _ = out.flush();
        if !pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
