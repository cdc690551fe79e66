//! Per-mode Bogoliubov lower bound, its oracle by truncated diagonalization,
//! and the mode sum over Neumann modes.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::par;
use crate::scattering::{radial_fourier, RadialScatteringSolution};

/// `A (a+* a+ + a-* a-) + B (a+* a-* + a+ a-)` data of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCoefficients {
    pub a: f64,
    pub b: f64,
}

impl ModeCoefficients {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a > b.abs()) {
            return Err(Error::Precondition(format!("need A > |B|, got A = {a}, B = {b}")));
        }
        Ok(ModeCoefficients { a, b })
    }
}

/// `A - sqrt(A^2 - B^2)`, as `B^2 / (A + sqrt(A^2 - B^2))` so small `|B|/A`
/// keeps full relative precision.
pub fn per_mode_deficit(c: ModeCoefficients) -> Result<f64> {
    let ModeCoefficients { a, b } = ModeCoefficients::new(c.a, c.b)?;
    // (A - B)(A + B) avoids squaring overflow and loses nothing when |B| ~ A.
    let root = ((a - b) * (a + b)).sqrt();
    Ok(b * b / (a + root))
}

/// Occupation cutoff for one bosonic mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockTruncation {
    pub n_max: usize,
}

impl FockTruncation {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(invalid("n_max", format!("{n_max} < 2")));
        }
        Ok(FockTruncation { n_max })
    }
}

/// Lowest eigenvalue of `A a* a + (B/2)(a* a* + a a)` on occupations
/// `0..=n_max`. Only even occupations couple to the vacuum, so the even
/// sector (a symmetric tridiagonal matrix) carries the ground state.
pub fn single_mode_ground_energy(c: ModeCoefficients, t: FockTruncation) -> Result<f64> {
    let ModeCoefficients { a, b } = ModeCoefficients::new(c.a, c.b)?;
    let size = t.n_max / 2 + 1;
    let mut m = DMatrix::<f64>::zeros(size, size);
    for i in 0..size {
        let k = 2 * i;
        m[(i, i)] = a * k as f64;
        if i + 1 < size {
            let off = 0.5 * b * (((k + 1) * (k + 2)) as f64).sqrt();
            m[(i, i + 1)] = off;
            m[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(m);
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// `(sqrt(A^2 - B^2) - A) / 2`, the exact single-mode ground energy.
pub fn single_mode_exact(c: ModeCoefficients) -> Result<f64> {
    Ok(-0.5 * per_mode_deficit(c)?)
}

/// `128 / (15 sqrt(pi))`.
pub fn lhy_coefficient() -> f64 {
    128.0 / (15.0 * PI.sqrt())
}

/// Quadratic Hamiltonian data over Neumann modes `p = pi k`, `k != 0`,
/// `k_a <= cutoff`: `A_p = |p|^2 - mu`, `B_p = n (V_l f_l)^(p)` with
/// `f_l = 1 - omega_l`.
#[derive(Debug, Clone)]
pub struct QuadraticModeSystem {
    pub n: f64,
    pub ell: f64,
    pub mu: f64,
    pub cutoff: u32,
    sol: RadialScatteringSolution,
}

impl QuadraticModeSystem {
    pub fn new(sol: &RadialScatteringSolution, n: f64, ell: f64, mu: f64, cutoff: u32) -> Result<Self> {
        if !(n > 0.0 && ell >= 1.0) {
            return Err(invalid(
                "n, ell",
                format!("need n > 0 and l >= 1, got n = {n}, l = {ell}"),
            ));
        }
        if cutoff == 0 {
            return Err(invalid("cutoff", "must be positive"));
        }
        let sys = QuadraticModeSystem {
            n,
            ell,
            mu,
            cutoff,
            sol: sol.clone(),
        };
        let (lo, hi) = sys.mu_window();
        if !(mu > lo && mu < hi) {
            return Err(Error::Precondition(format!(
                "mu = {mu} outside the admissible window ({lo}, {hi})"
            )));
        }
        Ok(sys)
    }

    /// `(16 pi a0 n / l, pi - 8 pi a0 n / l)`.
    pub fn mu_window(&self) -> (f64, f64) {
        let s = PI * self.sol.a0() * self.n / self.ell;
        (16.0 * s, PI - 8.0 * s)
    }

    /// `(V_l f_l)^(p)`.
    pub fn vf_hat(&self, p: f64) -> f64 {
        let ell = self.ell;
        let range = self.sol.range() / ell;
        let breaks: Vec<f64> = self.sol.potential().breakpoints().iter().map(|b| b / ell).collect();
        let sol = &self.sol;
        radial_fourier(
            |r| ell * ell * sol.potential().eval_closed(ell * r) * (1.0 - sol.omega(ell * r)),
            p,
            range,
            &breaks,
            3,
        )
    }
}

/// One row of the mode table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeRow {
    pub k: [u32; 3],
    pub p_squared: f64,
    pub b: f64,
    pub deficit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSum {
    /// `-1/2 sum_p (A_p - sqrt(A_p^2 - B_p^2))`.
    pub total: f64,
    /// `-(n^2/4) sum_p |(V_l f_l)^(p)|^2 / |p|^2`.
    pub simplified: f64,
    /// Largest summand magnitude on the outer shell `max_a k_a = cutoff`.
    pub shell_max: f64,
    pub modes: usize,
}

/// Per-`|k|^2` data: `(|k|^2, multiplicity)` in increasing order.
fn shells(cutoff: u32) -> Vec<(u64, u64, u64)> {
    let c = cutoff as u64;
    let mut count = vec![0u64; (3 * c * c + 1) as usize];
    let mut outer = vec![0u64; count.len()];
    for a in 0..=c {
        for b in 0..=c {
            for d in 0..=c {
                let k2 = (a * a + b * b + d * d) as usize;
                count[k2] += 1;
                if a.max(b).max(d) == c {
                    outer[k2] += 1;
                }
            }
        }
    }
    (1..count.len())
        .filter(|&k| count[k] > 0)
        .map(|k| (k as u64, count[k], outer[k]))
        .collect()
}

/// Mode-sum lower bound. Summands depend on `|k|^2` only, so they are
/// evaluated once per shell and added in increasing `|k|^2`.
pub fn mode_sum_lower_bound(sys: &QuadraticModeSystem) -> Result<ModeSum> {
    let sh = shells(sys.cutoff);
    let per = par::map_slice(&sh, |&(k2, _, _)| {
        let p2 = PI * PI * k2 as f64;
        let vf = sys.vf_hat(p2.sqrt());
        (p2, vf)
    });
    let mut total = 0.0;
    let mut simplified = 0.0;
    let mut shell_max: f64 = 0.0;
    let mut modes = 0usize;
    for (&(k2, mult, outer), &(p2, vf)) in sh.iter().zip(&per) {
        let a = p2 - sys.mu;
        let b = sys.n * vf;
        let c = ModeCoefficients::new(a, b).map_err(|_| {
            Error::Precondition(format!(
                "mode |k|^2 = {k2}: A_p = {a} does not exceed |B_p| = {}",
                b.abs()
            ))
        })?;
        let term = -0.5 * per_mode_deficit(c)?;
        total += mult as f64 * term;
        simplified += mult as f64 * (-0.25 * b * b / p2);
        if outer > 0 {
            shell_max = shell_max.max(term.abs());
        }
        modes += mult as usize;
    }
    Ok(ModeSum {
        total,
        simplified,
        shell_max,
        modes,
    })
}

/// Explicit mode table for `k_a <= max_k`, in lexicographic order of `k`.
pub fn mode_table(sys: &QuadraticModeSystem, max_k: u32) -> Result<Vec<ModeRow>> {
    let mut ks = Vec::new();
    for a in 0..=max_k {
        for b in 0..=max_k {
            for c in 0..=max_k {
                if (a, b, c) != (0, 0, 0) {
                    ks.push([a, b, c]);
                }
            }
        }
    }
    let rows = par::map_slice(&ks, |k| {
        let k2 = k.iter().map(|&v| (v * v) as f64).sum::<f64>();
        let p2 = PI * PI * k2;
        let b = sys.n * sys.vf_hat(p2.sqrt());
        let deficit = per_mode_deficit(ModeCoefficients { a: p2 - sys.mu, b });
        deficit.map(|deficit| ModeRow {
            k: *k,
            p_squared: p2,
            b,
            deficit,
        })
    });
    rows.into_iter().collect()
}

pub fn write_mode_csv<W: Write>(rows: &[ModeRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "k1,k2,k3,psq,Bp,deficit")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.16e},{:.16e},{:.16e}",
            r.k[0], r.k[1], r.k[2], r.p_squared, r.b, r.deficit
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deficit_examples() {
        assert_eq!(per_mode_deficit(ModeCoefficients { a: 2.0, b: 0.0 }).unwrap(), 0.0);
        assert!((per_mode_deficit(ModeCoefficients { a: 5.0, b: 3.0 }).unwrap() - 1.0).abs() < 1e-15);
        assert!(per_mode_deficit(ModeCoefficients { a: 1.0, b: 1.0 }).is_err());
        let d = per_mode_deficit(ModeCoefficients { a: 1.0, b: 1.0 - 1e-12 }).unwrap();
        assert!(d.is_finite() && d < 1.0);
    }

    #[test]
    fn ground_energy_examples() {
        let t = FockTruncation::new(60).unwrap();
        assert_eq!(
            single_mode_ground_energy(ModeCoefficients { a: 3.0, b: 0.0 }, t).unwrap(),
            0.0
        );
        let e = single_mode_ground_energy(ModeCoefficients { a: 5.0, b: 3.0 }, t).unwrap();
        assert!((e + 0.5).abs() < 1e-10, "{e}");
        assert!(FockTruncation::new(1).is_err());
    }

    #[test]
    fn shells_count_modes() {
        let s = shells(3);
        assert_eq!(s.iter().map(|x| x.1).sum::<u64>(), 63);
        assert_eq!(s[0], (1, 3, 0));
    }

    #[test]
    fn lhy_value() {
        assert!((lhy_coefficient() - 4.814_418).abs() < 5e-7);
    }
}
