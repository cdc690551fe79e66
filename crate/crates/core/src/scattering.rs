//! Zero-energy s-wave scattering for compactly supported repulsive
//! potentials, the scattering length by two independent routes, the
//! smooth cutoff profile, and radial Fourier transforms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{bessel_j0, integrate_adaptive, simpson};

/// A radial potential supported in `r < range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `amplitude` on `r < range`.
    SquareWell { amplitude: f64, range: f64 },
    /// `amplitude * exp(1 - 1/(1 - (r/range)^2))` on `r < range`.
    SmoothBump { amplitude: f64, range: f64 },
    /// Linear interpolation of `samples` taken at `r_k = k range / (len - 1)`;
    /// zero from `range` on.
    Tabulated { range: f64, samples: Vec<f64> },
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        let r = self.range();
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid("range", format!("{r} must be positive")));
        }
        match self {
            PotentialSpec::SquareWell { amplitude, .. } | PotentialSpec::SmoothBump { amplitude, .. } => {
                if !(*amplitude >= 0.0 && amplitude.is_finite()) {
                    return Err(invalid(
                        "amplitude",
                        format!("{amplitude} must be finite and nonnegative"),
                    ));
                }
            }
            PotentialSpec::Tabulated { samples, .. } => {
                if samples.len() < 2 {
                    return Err(invalid("samples", "need at least two samples"));
                }
                if samples.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(invalid("samples", "must be finite and nonnegative"));
                }
            }
        }
        Ok(())
    }

    pub fn range(&self) -> f64 {
        match self {
            PotentialSpec::SquareWell { range, .. }
            | PotentialSpec::SmoothBump { range, .. }
            | PotentialSpec::Tabulated { range, .. } => *range,
        }
    }

    /// `V(r)`; zero for `r >= range`.
    pub fn eval(&self, r: f64) -> f64 {
        if r >= self.range() {
            0.0
        } else {
            self.eval_closed(r)
        }
    }

    /// `V` on the closed ball `r <= range`, taking the inner limit at the
    /// edge.
    pub fn eval_closed(&self, r: f64) -> f64 {
        let r = r.abs();
        match self {
            PotentialSpec::SquareWell { amplitude, .. } => *amplitude,
            PotentialSpec::SmoothBump { amplitude, range } => {
                let s = r / range;
                if s >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - 1.0 / (1.0 - s * s)).exp()
                }
            }
            PotentialSpec::Tabulated { range, samples } => {
                let t = (r / range).min(1.0) * (samples.len() - 1) as f64;
                let i = (t.floor() as usize).min(samples.len() - 2);
                let w = t - i as f64;
                samples[i] * (1.0 - w) + samples[i + 1] * w
            }
        }
    }

    /// `V_l(x) = l^2 V(l x)`.
    pub fn scaled(&self, ell: f64) -> PotentialSpec {
        let l2 = ell * ell;
        match self {
            PotentialSpec::SquareWell { amplitude, range } => PotentialSpec::SquareWell {
                amplitude: amplitude * l2,
                range: range / ell,
            },
            PotentialSpec::SmoothBump { amplitude, range } => PotentialSpec::SmoothBump {
                amplitude: amplitude * l2,
                range: range / ell,
            },
            PotentialSpec::Tabulated { range, samples } => PotentialSpec::Tabulated {
                range: range / ell,
                samples: samples.iter().map(|v| v * l2).collect(),
            },
        }
    }

    /// Radii where `V` is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            PotentialSpec::Tabulated { range, samples } => {
                let k = samples.len() - 1;
                (1..=k).map(|i| range * i as f64 / k as f64).collect()
            }
            _ => vec![self.range()],
        }
    }

    pub fn is_nonincreasing(&self) -> bool {
        match self {
            PotentialSpec::Tabulated { samples, .. } => samples.windows(2).all(|w| w[1] <= w[0]),
            _ => true,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PotentialSpec::SquareWell { amplitude, .. } | PotentialSpec::SmoothBump { amplitude, .. } => {
                *amplitude == 0.0
            }
            PotentialSpec::Tabulated { samples, .. } => samples.iter().all(|&v| v == 0.0),
        }
    }

    /// `int_{R^3} V`.
    pub fn l1_norm(&self) -> f64 {
        let r = self.range();
        4.0 * PI
            * integrate_adaptive(
                |s| self.eval_closed(s) * s * s,
                0.0,
                r,
                &self.breakpoints(),
                1e-15,
                1e-13,
            )
    }
}

/// Samples of `u(r) = r (1 - omega(r))` and `u'` on a uniform grid over
/// `[0, R]`; the exterior is exact.
#[derive(Debug, Clone)]
pub struct RadialScatteringSolution {
    potential: PotentialSpec,
    step: f64,
    u: Vec<f64>,
    du: Vec<f64>,
    slope: f64,
    a0: f64,
    a0_integral: f64,
    r_max: f64,
    n_r: usize,
}

/// Relative tolerance for agreement of the two scattering-length routes.
pub const A0_ROUTE_TOL: f64 = 1e-6;

/// Integrates `u'' = V u / 2`, `u(0) = 0`, `u'(0) = 1` by classical RK4 on
/// `[0, R]` with at least `n_r` steps, then matches `u = c (r - a0)`.
pub fn solve_scattering(v: &PotentialSpec, r_max: f64, n_r: usize) -> Result<RadialScatteringSolution> {
    v.validate()?;
    let range = v.range();
    if !(r_max >= 2.0 * range) {
        return Err(invalid("r_max", format!("{r_max} < 2R = {}", 2.0 * range)));
    }
    if n_r < 256 {
        return Err(invalid("n_r", format!("{n_r} < 256")));
    }
    // Kinks of tabulated potentials must sit on even nodes for Simpson.
    let align = match v {
        PotentialSpec::Tabulated { samples, .. } => 2 * (samples.len() - 1),
        _ => 2,
    };
    let steps = n_r.div_ceil(align) * align;
    let h = range / steps as f64;
    let mut u = Vec::with_capacity(steps + 1);
    let mut du = Vec::with_capacity(steps + 1);
    let (mut y0, mut y1) = (0.0, 1.0);
    u.push(y0);
    du.push(y1);
    let f = |r: f64| 0.5 * v.eval_closed(r);
    for k in 0..steps {
        let r = k as f64 * h;
        let (fa, fm, fb) = (f(r), f(r + 0.5 * h), f(r + h));
        let k1 = (y1, fa * y0);
        let k2 = (y1 + 0.5 * h * k1.1, fm * (y0 + 0.5 * h * k1.0));
        let k3 = (y1 + 0.5 * h * k2.1, fm * (y0 + 0.5 * h * k2.0));
        let k4 = (y1 + h * k3.1, fb * (y0 + h * k3.0));
        y0 += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        y1 += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if !(y0 > 0.0 && y0.is_finite() && y1.is_finite()) {
            return Err(Error::Precondition(format!(
                "u(r) = {y0} at r = {} is not positive: potential outside the admissible regime",
                r + h
            )));
        }
        u.push(y0);
        du.push(y1);
    }
    let slope = y1;
    let a0 = range - y0 / y1;
    // 8 pi a0 = int V (1 - omega) = (4 pi / c) int V u r dr
    let integrand: Vec<f64> = (0..=steps)
        .map(|k| {
            let r = k as f64 * h;
            v.eval_closed(r) * u[k] * r
        })
        .collect();
    let a0_integral = simpson(&integrand, h) / (2.0 * slope);
    Ok(RadialScatteringSolution {
        potential: v.clone(),
        step: h,
        u,
        du,
        slope,
        a0,
        a0_integral,
        r_max,
        n_r,
    })
}

impl RadialScatteringSolution {
    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn range(&self) -> f64 {
        self.potential.range()
    }

    /// `a0` from matching the exterior solution.
    pub fn a0(&self) -> f64 {
        self.a0
    }

    /// `a0` from `(1/8 pi) int V (1 - omega)`.
    pub fn a0_integral(&self) -> f64 {
        self.a0_integral
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// `u` by cubic Hermite interpolation on `[0, R]`, exact line beyond.
    fn u_at(&self, r: f64) -> f64 {
        let range = self.range();
        if r >= range {
            return self.slope * (r - self.a0);
        }
        let t = r / self.step;
        let i = (t.floor() as usize).min(self.u.len() - 2);
        let s = t - i as f64;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        h00 * self.u[i] + h10 * self.step * self.du[i] + h01 * self.u[i + 1] + h11 * self.step * self.du[i + 1]
    }

    /// `omega(r)`; exactly `a0 / r` for `r >= R`.
    pub fn omega(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.range() {
            return self.a0 / r;
        }
        if r == 0.0 {
            return 1.0 - 1.0 / self.slope;
        }
        1.0 - self.u_at(r) / (self.slope * r)
    }

    /// Uniform output grid on `(0, r_max]`.
    pub fn radii(&self) -> Vec<f64> {
        (1..=self.n_r)
            .map(|k| self.r_max * k as f64 / self.n_r as f64)
            .collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "r,omega")?;
        for r in self.radii() {
            writeln!(w, "{r:.16e},{:.16e}", self.omega(r))?;
        }
        Ok(())
    }
}

/// `a0`, after checking that both routes agree to [`A0_ROUTE_TOL`].
pub fn scattering_length(sol: &RadialScatteringSolution) -> Result<f64> {
    let (a, b) = (sol.a0(), sol.a0_integral());
    let scale = a.abs().max(b.abs());
    if scale > 0.0 && (a - b).abs() > A0_ROUTE_TOL * scale {
        return Err(Error::Precondition(format!(
            "scattering length routes disagree: matching {a:e}, integral {b:e}"
        )));
    }
    Ok(a)
}

/// Square well closed form `R - tanh(kR)/k`, `k = sqrt(lambda/2)`.
pub fn square_well_a0(amplitude: f64, range: f64) -> f64 {
    if amplitude == 0.0 {
        return 0.0;
    }
    let k = (amplitude / 2.0).sqrt();
    range - (k * range).tanh() / k
}

/// The cutoff profile: 1 on `[0, 1/2]`, 0 on `[1, inf)`, and the smooth step
/// `1 / (1 + exp(1/(1-s) - 1/s))`, `s = 2t - 1`, in between.
pub mod cutoff {
    fn inner(t: f64) -> Option<(f64, f64)> {
        let s = 2.0 * t.abs() - 1.0;
        (s > 0.0 && s < 1.0).then_some((s, 1.0 / (1.0 - s) - 1.0 / s))
    }

    pub fn chi(t: f64) -> f64 {
        let t = t.abs();
        if t <= 0.5 {
            return 1.0;
        }
        if t >= 1.0 {
            return 0.0;
        }
        let (_, g) = inner(t).expect("inside the shell");
        1.0 / (1.0 + g.exp())
    }

    /// Returns `(chi', chi'')` in `t`.
    pub fn derivatives(t: f64) -> (f64, f64) {
        let Some((s, g)) = inner(t) else {
            return (0.0, 0.0);
        };
        // all derivatives are below exp(-1000) * poly here
        if !(1e-3..=1.0 - 1e-3).contains(&s) {
            return (0.0, 0.0);
        }
        let q = 1.0 / (1.0 + g.exp());
        let qq = q * (1.0 - q);
        let g1 = 1.0 / (s * s) + 1.0 / ((1.0 - s) * (1.0 - s));
        let g2 = -2.0 / (s * s * s) + 2.0 / ((1.0 - s) * (1.0 - s) * (1.0 - s));
        let dq = -qq * g1;
        let d2q = qq * ((1.0 - 2.0 * q) * g1 * g1 - g2);
        (2.0 * dq, 4.0 * d2q)
    }

    pub fn second_derivative(t: f64) -> f64 {
        derivatives(t).1
    }
}

/// `omega_{l,lambda}(x) = omega(l|x|) chi(|x|/lambda)` and
/// `eps_{l,lambda}(x) = (2 a0 / l) lambda^-3 (chi''/|.|)(x/lambda)`.
#[derive(Debug, Clone)]
pub struct CutoffScatteringPair {
    sol: RadialScatteringSolution,
    ell: f64,
    lambda: f64,
}

pub fn cutoff_pair(sol: &RadialScatteringSolution, ell: f64, lambda: f64) -> Result<CutoffScatteringPair> {
    if !(ell >= 1.0) {
        return Err(invalid("ell", format!("{ell} < 1")));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(invalid("lambda", format!("{lambda} not in (0, 1]")));
    }
    if !(2.0 * sol.range() / ell < lambda) {
        return Err(Error::Precondition(format!(
            "need 2R/l < lambda, got 2R/l = {} and lambda = {lambda}",
            2.0 * sol.range() / ell
        )));
    }
    Ok(CutoffScatteringPair {
        sol: sol.clone(),
        ell,
        lambda,
    })
}

impl CutoffScatteringPair {
    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn solution(&self) -> &RadialScatteringSolution {
        &self.sol
    }

    /// Range of `V_l`.
    pub fn scaled_range(&self) -> f64 {
        self.sol.range() / self.ell
    }

    /// `a0 / l`, the scattering length of `V_l`.
    pub fn scaled_a0(&self) -> f64 {
        self.sol.a0() / self.ell
    }

    /// `omega_l(r) = omega(l r)`.
    pub fn omega_l(&self, r: f64) -> f64 {
        self.sol.omega(self.ell * r)
    }

    /// `V_l(r) = l^2 V(l r)`.
    pub fn v_l(&self, r: f64) -> f64 {
        self.ell * self.ell * self.sol.potential().eval(self.ell * r)
    }

    pub fn omega(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.lambda {
            return 0.0;
        }
        self.omega_l(r) * cutoff::chi(r / self.lambda)
    }

    pub fn eps(&self, r: f64) -> f64 {
        let s = r.abs() / self.lambda;
        if s <= 0.5 || s >= 1.0 {
            return 0.0;
        }
        2.0 * self.sol.a0() / self.ell * self.lambda.powi(-3) * cutoff::second_derivative(s) / s
    }

    /// Largest residual of `-Lap w + eps/2 = V_l (1 - omega_l)/2` over `count`
    /// radii spread across `(0, lambda)`, by central differences of `r w(r)`,
    /// relative to `|V_l|/2 + |eps| + 1`. Radii whose stencil straddles a
    /// breakpoint are skipped.
    pub fn equation_residual(&self, count: usize) -> f64 {
        let breaks = self.breakpoints();
        let step = 1e-3 * self.scaled_range().min(0.5 * self.lambda);
        let rw = |x: f64| self.omega(x) * x;
        let mut worst: f64 = 0.0;
        for k in 1..count {
            let r = self.lambda * k as f64 / count as f64;
            if breaks.iter().any(|b| (r - b).abs() < 2.0 * step) || r <= 2.0 * step {
                continue;
            }
            let lap = (rw(r + step) - 2.0 * rw(r) + rw(r - step)) / (step * step) / r;
            let res = -lap - 0.5 * self.v_l(r) * (1.0 - self.omega_l(r)) + 0.5 * self.eps(r);
            let scale = 0.5 * self.v_l(r).abs() + self.eps(r).abs() + 1.0;
            worst = worst.max(res.abs() / scale);
        }
        worst
    }

    /// Radii where the pieces of the pair lose smoothness.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .sol
            .potential()
            .breakpoints()
            .iter()
            .map(|r| r / self.ell)
            .collect();
        b.push(0.5 * self.lambda);
        b.push(self.lambda);
        b
    }
}

/// Radial Fourier transform `int_{R^d} g(|x|) e^{-i p.x} dx` of a function
/// supported in `|x| <= support`, by adaptive Gauss-Kronrod.
pub fn radial_fourier(g: impl Fn(f64) -> f64, p: f64, support: f64, breaks: &[f64], dim: usize) -> f64 {
    let p = p.abs();
    let tol = 1e-15;
    match dim {
        3 => {
            let kernel = |r: f64| {
                let x = p * r;
                let sinc = if x.abs() < 1e-4 { 1.0 - x * x / 6.0 } else { x.sin() / x };
                g(r) * sinc * r * r
            };
            4.0 * PI
                * integrate_adaptive(
                    kernel,
                    0.0,
                    support,
                    &oscillation_breaks(breaks, p, support),
                    tol,
                    1e-12,
                )
        }
        2 => {
            let kernel = |r: f64| g(r) * bessel_j0(p * r) * r;
            2.0 * PI
                * integrate_adaptive(
                    kernel,
                    0.0,
                    support,
                    &oscillation_breaks(breaks, p, support),
                    tol,
                    1e-12,
                )
        }
        1 => {
            let kernel = |r: f64| g(r) * (p * r).cos();
            2.0 * integrate_adaptive(
                kernel,
                0.0,
                support,
                &oscillation_breaks(breaks, p, support),
                tol,
                1e-12,
            )
        }
        _ => panic!("dimension {dim} not supported"),
    }
}

fn oscillation_breaks(breaks: &[f64], p: f64, support: f64) -> Vec<f64> {
    let mut b = breaks.to_vec();
    if p > 0.0 {
        let period = PI / p;
        let count = (support / period).floor() as usize;
        b.extend((1..=count).map(|k| k as f64 * period));
    }
    b
}

/// `int_{R^3} g` for radial `g` supported in `|x| <= support`.
pub fn radial_integral(g: impl Fn(f64) -> f64, support: f64, breaks: &[f64]) -> f64 {
    radial_fourier(g, 0.0, support, breaks, 3)
}
