//! Exponent arithmetic of the condensation argument: cell-size choice,
//! energy thresholds, the excitation-fraction exponents and the
//! `kappa < 2/11` frontier.

use std::f64::consts::PI;
use std::io::Write;

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Rational = Ratio<i64>;

/// `kappa = 2/11`.
pub fn frontier() -> Rational {
    Rational::new(2, 11)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeParams {
    pub kappa: f64,
    pub alpha: f64,
    pub n_particles: f64,
    #[serde(default = "default_k")]
    pub k: f64,
    pub a0: f64,
    #[serde(default = "default_c0")]
    pub c0: f64,
}

fn default_k() -> f64 {
    20.0
}

fn default_c0() -> f64 {
    1.0
}

impl RegimeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0 && self.kappa < 2.0 / 3.0) {
            return Err(invalid("kappa", format!("{} not in [0, 2/3)", self.kappa)));
        }
        if !(self.alpha >= 0.0) {
            return Err(invalid("alpha", format!("{} < 0", self.alpha)));
        }
        if !(self.n_particles >= 1.0) {
            return Err(invalid("n_particles", format!("{} < 1", self.n_particles)));
        }
        if !(self.k >= 1.0) {
            return Err(invalid("k", format!("{} < 1", self.k)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSize {
    pub ell: f64,
    /// `rho l^3 = K^-3 (rho a^3)^-1/2`.
    pub rho_ell3: f64,
}

/// `l = K^-1 (rho a)^-1/2`.
pub fn choose_cell_size(rho: f64, a: f64, k: f64) -> Result<CellSize> {
    if !(rho > 0.0 && a > 0.0) {
        return Err(invalid(
            "rho, a",
            format!("need positive values, got rho = {rho}, a = {a}"),
        ));
    }
    if !(k >= 1.0) {
        return Err(invalid("K", format!("{k} < 1")));
    }
    let gas = rho * a.powi(3);
    if !(gas < 1.0) {
        return Err(Error::Precondition(format!("rho a^3 = {gas} is not dilute")));
    }
    let ell = 1.0 / (k * (rho * a).sqrt());
    Ok(CellSize {
        ell,
        rho_ell3: rho * ell.powi(3),
    })
}

/// Exponents of `N` in the two terms bounding the excitation fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentPair {
    pub e1: f64,
    pub e2: f64,
}

impl ExponentPair {
    pub fn both_negative(&self) -> bool {
        self.e1 < 0.0 && self.e2 < 0.0
    }
}

/// `e1 = -alpha kappa / 2`, `e2 = alpha kappa / 2 + 11 kappa / 4 - 1/2`.
pub fn excitation_exponents(kappa: f64, alpha: f64) -> Result<ExponentPair> {
    if !(0.0..2.0 / 3.0).contains(&kappa) {
        return Err(invalid("kappa", format!("{kappa} not in [0, 2/3)")));
    }
    if !(alpha >= 0.0) {
        return Err(invalid("alpha", format!("{alpha} < 0")));
    }
    Ok(ExponentPair {
        e1: -alpha * kappa / 2.0,
        e2: alpha * kappa / 2.0 + 11.0 * kappa / 4.0 - 0.5,
    })
}

/// `e2` as the sum it comes from:
/// `(2 + alpha) kappa / 2 + (5 kappa - 2) / 2 + (2 - 3 kappa) / 4`.
pub fn e2_unsimplified(kappa: f64, alpha: f64) -> f64 {
    (2.0 + alpha) * kappa / 2.0 + (5.0 * kappa - 2.0) / 2.0 + (2.0 - 3.0 * kappa) / 4.0
}

/// Exact `(e1, e2)` for rational inputs.
pub fn exact_exponents(kappa: Rational, alpha: Rational) -> (Rational, Rational) {
    let two = Rational::from_integer(2);
    let four = Rational::from_integer(4);
    let e1 = -alpha * kappa / two;
    let e2 = (two + alpha) * kappa / two
        + (Rational::from_integer(5) * kappa - two) / two
        + (two - Rational::from_integer(3) * kappa) / four;
    (e1, e2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feasibility {
    /// `alpha` with both exponents negative.
    Feasible { alpha: f64, exponents: ExponentPair },
    /// No `alpha > 0` works: `e2` at `alpha -> 0+` is already `>= 0`, and `e2`
    /// increases with `alpha`.
    Infeasible { e2_at_zero: f64 },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible { .. })
    }
}

/// `alpha` grid from `1e-3` to `10`, geometric.
pub fn alpha_grid(points: usize) -> Vec<f64> {
    let (lo, hi) = (1e-3f64.ln(), 10f64.ln());
    (0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Searches the `alpha` grid for `max(e1, e2) < 0`. When the admissible
/// interval `(0, (1 - 11 kappa / 2) / kappa)` is narrower than the grid's
/// first point, its midpoint is tried as well.
pub fn bec_feasible(kappa: f64) -> Result<Feasibility> {
    if !(kappa > 0.0 && kappa < 2.0 / 3.0) {
        return Err(invalid("kappa", format!("{kappa} not in (0, 2/3)")));
    }
    for alpha in alpha_grid(81) {
        let e = excitation_exponents(kappa, alpha)?;
        if e.both_negative() {
            return Ok(Feasibility::Feasible { alpha, exponents: e });
        }
    }
    let alpha = (1.0 - 5.5 * kappa) / (2.0 * kappa);
    if alpha > 0.0 {
        let e = excitation_exponents(kappa, alpha)?;
        if e.both_negative() {
            return Ok(Feasibility::Feasible { alpha, exponents: e });
        }
    }
    Ok(Feasibility::Infeasible {
        e2_at_zero: excitation_exponents(kappa, 0.0)?.e2,
    })
}

/// Exact verdict: a rational witness `alpha` when `kappa < 2/11`, `None`
/// otherwise.
pub fn bec_feasible_exact(kappa: Rational) -> Option<Rational> {
    if !kappa.is_positive() || kappa >= Rational::new(2, 3) {
        return None;
    }
    let half = Rational::new(1, 2);
    // e2 at alpha = 0 is 11 kappa / 4 - 1/2; e2 grows with alpha.
    let e2_zero = Rational::new(11, 4) * kappa - half;
    if !e2_zero.is_negative() {
        return None;
    }
    let alpha = (Rational::one() - Rational::new(11, 2) * kappa) / (Rational::from_integer(2) * kappa);
    let (e1, e2) = exact_exponents(kappa, alpha);
    debug_assert!(e1 < Rational::zero() && e2 < Rational::zero());
    Some(alpha)
}

/// Locates the float verdict flip on `[lo, hi]` by bisection.
pub fn frontier_by_bisection(mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    if !(bec_feasible(lo)?.is_feasible() && !bec_feasible(hi)?.is_feasible()) {
        return Err(Error::Precondition(format!("verdict does not flip on [{lo}, {hi}]")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if bec_feasible(mid)?.is_feasible() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyThreshold {
    /// `4 pi a0 N^{1 + kappa}`.
    pub leading: f64,
    /// `C0 N^{5 kappa / 2 + (2 - 3 kappa) / 4}`.
    pub correction: f64,
    pub leading_exponent: f64,
    pub correction_exponent: f64,
}

impl EnergyThreshold {
    pub fn total(&self) -> f64 {
        self.leading + self.correction
    }
}

pub fn energy_assumption(n: f64, kappa: f64, a0: f64, c0: f64) -> Result<EnergyThreshold> {
    if !(n >= 1.0) {
        return Err(invalid("N", format!("{n} < 1")));
    }
    let leading_exponent = 1.0 + kappa;
    let correction_exponent = 2.5 * kappa + (2.0 - 3.0 * kappa) / 4.0;
    Ok(EnergyThreshold {
        leading: 4.0 * PI * a0 * n.powf(leading_exponent),
        correction: c0 * n.powf(correction_exponent),
        leading_exponent,
        correction_exponent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SFunction {
    Sqrt,
    Log,
}

impl SFunction {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            SFunction::Sqrt => x.sqrt(),
            SFunction::Log => x.ln(),
        }
    }
}

/// `-4 pi rho^2 a l^3 - C rho^2 a l^3 (rho a^3)^{1/2} S((rho a^3)^{-1/2})`.
pub fn lemma42_bound(rho: f64, a: f64, ell: f64, s: SFunction, c: f64) -> f64 {
    let base = rho * rho * a * ell.powi(3);
    let gas = rho * a.powi(3);
    let correction = if c == 0.0 {
        0.0
    } else {
        c * base * gas.sqrt() * s.eval(1.0 / gas.sqrt())
    };
    -4.0 * PI * base - correction
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierRow {
    pub kappa: f64,
    pub alpha: f64,
    pub e1: f64,
    pub e2: f64,
    pub feasible: bool,
}

/// Verdict and exponents over `kappas`; `alpha` is the witness when feasible
/// and `0` otherwise.
pub fn frontier_sweep(kappas: &[f64]) -> Result<Vec<FrontierRow>> {
    kappas
        .iter()
        .map(|&kappa| {
            Ok(match bec_feasible(kappa)? {
                Feasibility::Feasible { alpha, exponents } => FrontierRow {
                    kappa,
                    alpha,
                    e1: exponents.e1,
                    e2: exponents.e2,
                    feasible: true,
                },
                Feasibility::Infeasible { e2_at_zero } => FrontierRow {
                    kappa,
                    alpha: 0.0,
                    e1: 0.0,
                    e2: e2_at_zero,
                    feasible: false,
                },
            })
        })
        .collect()
}

pub fn write_frontier_csv<W: Write>(rows: &[FrontierRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "kappa,alpha,e1,e2,feasible")?;
    for r in rows {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.kappa, r.alpha, r.e1, r.e2, r.feasible
        )?;
    }
    Ok(())
}
