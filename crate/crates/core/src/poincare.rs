//! Multiscale Poincaré checks: the two-sided ratio on a single function,
//! the staircase family that saturates it, the operator form certified by
//! smallest eigenvalues, and kinetic-energy localization across subcubes.

use std::f64::consts::PI;

use crate::eigen::{unit_constant, EigenOptions, Lanczos};
use crate::error::{invalid, Error, Result};
use crate::form::QuadraticForm;
use crate::grid::{lp_norm_pow, mean_over, subdivide, Grid, GridFunction, Region, Subdivision};
use crate::spectral::{
    assemble_neumann_laplacian, assemble_subcube_laplacian, dirichlet_energy, subcube_projector_sum,
};
use crate::{par, stats};

/// Smallest eigenvalues at or above `-CERT_MARGIN` certify a form as
/// nonnegative.
pub const CERT_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareRatio {
    /// `||f - <f>||_p^p`
    pub lhs: f64,
    /// `||grad f||_p (l^-p sum_i ||f - <f>_i||_p^p)^(1 - 1/p)`
    pub rhs: f64,
    /// `lhs / rhs`; `None` when `rhs` vanishes.
    pub ratio: Option<f64>,
    pub p: f64,
    pub m: usize,
    pub n_per_side: usize,
}

fn centered(f: &GridFunction, region: Region<'_>, mean: f64, floor: f64) -> GridFunction {
    let len = f.values().len();
    let mut values = vec![0.0; len];
    let mut put = |i: usize| {
        let d = f.values()[i] - mean;
        values[i] = if d.abs() <= floor { 0.0 } else { d };
    };
    match region {
        Region::Whole => (0..len).for_each(&mut put),
        Region::Subcube(s, c) => s.members(c).iter().for_each(|&i| put(i)),
    }
    GridFunction::new(*f.grid(), values).expect("finite")
}

/// Both sides of the multiscale inequality for one function.
///
/// Deviations below `1e-13 * max|f|` count as zero so that constant and
/// piecewise-constant inputs are recognised exactly.
pub fn multiscale_ratio(f: &GridFunction, sub: &Subdivision, p: f64) -> Result<PoincareRatio> {
    if p.is_nan() || p <= 1.0 || p.is_infinite() {
        return Err(invalid("p", format!("{p} must be a finite exponent > 1")));
    }
    let floor = 1e-13 * f.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let global = mean_over(f, Region::Whole)?;
    let lhs = lp_norm_pow(&centered(f, Region::Whole, global, floor), p, Region::Whole)?;
    let mut local = 0.0;
    for c in 0..sub.num_cells() {
        let r = Region::Subcube(sub, c);
        let mc = mean_over(f, r)?;
        local += lp_norm_pow(&centered(f, r, mc, floor), p, r)?;
    }
    let grad = dirichlet_energy(f, p)?.powf(1.0 / p);
    let rhs = grad * (sub.ell().powf(-p) * local).powf(1.0 - 1.0 / p);
    Ok(PoincareRatio {
        lhs,
        rhs,
        ratio: (rhs > 0.0).then(|| lhs / rhs),
        p,
        m: sub.m(),
        n_per_side: f.grid().n_per_side(),
    })
}

/// Smallest `n_per_side` accepted for the staircase of order `N`.
pub fn staircase_min_cells(n_steps: usize) -> usize {
    16 * n_steps * n_steps
}

/// The staircase `f_N`: `2N` plateaus in `x_1` at heights `-j/(2N)`, each
/// joined to the next by a ramp of width `1/(4N^2)` and slope `2N`,
/// constant in the other coordinates.
pub fn staircase(n_steps: usize, grid: &Grid) -> Result<GridFunction> {
    if n_steps == 0 {
        return Err(invalid("N", "must be positive"));
    }
    let n = grid.n_per_side();
    let m = 2 * n_steps;
    let need = staircase_min_cells(n_steps);
    if !n.is_multiple_of(m) || n < need {
        return Err(Error::Precondition(format!(
            "staircase N={n_steps} needs n_per_side divisible by {m} and at least {need}, got {n}"
        )));
    }
    let nf = n_steps as f64;
    let width = 1.0 / (2.0 * nf);
    let ramp = 1.0 / (4.0 * nf * nf);
    let lo = grid.bx().lower(0);
    let side = grid.bx().side();
    Ok(GridFunction::from_fn(*grid, |x| {
        // rescale to the unit interval the construction lives on
        let x1 = (x[0] - lo) / side - 0.5;
        let mut v = 0.0;
        for j in -(n_steps as i64)..(n_steps as i64) {
            let t = x1 + j as f64 * width;
            if (-width..=0.0).contains(&t) {
                let psi = 2.0 * nf * (t + ramp).max(0.0);
                v += psi - j as f64 * width;
            }
        }
        v
    }))
}

#[derive(Debug, Clone)]
pub struct SharpnessRow {
    pub n_steps: usize,
    pub result: PoincareRatio,
}

#[derive(Debug, Clone)]
pub struct SharpnessSweep {
    pub rows: Vec<SharpnessRow>,
    /// log-log slope of ratio against N; `None` for fewer than two points.
    pub slope: Option<f64>,
}

/// Evaluates the ratio on `f_N` with `M = 2N` for each `N`, on a grid with
/// `cells_per_ramp` cells across each ramp (at least 4).
pub fn sharpness_sweep(n_list: &[usize], p: f64, dim: usize, cells_per_ramp: usize) -> Result<SharpnessSweep> {
    if cells_per_ramp < 4 {
        return Err(invalid("cells_per_ramp", "ramps need at least 4 cells"));
    }
    let rows = par::map_slice(n_list, |&nn| -> Result<SharpnessRow> {
        let grid = Grid::unit(dim, cells_per_ramp * 4 * nn * nn)?;
        let f = staircase(nn, &grid)?;
        let sub = subdivide(&grid, 2 * nn)?;
        Ok(SharpnessRow {
            n_steps: nn,
            result: multiscale_ratio(&f, &sub, p)?,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.result.ratio.map(|q| (r.n_steps as f64, q)))
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Ok(SharpnessSweep {
        slope: stats::loglog_slope(&x, &y),
        rows,
    })
}

#[derive(Debug, Clone)]
pub struct OperatorGap {
    pub eps: f64,
    pub c: f64,
    /// Smallest eigenvalue of the full form (constants included).
    pub smallest: f64,
    pub pass: bool,
    /// Eigenvector for the smallest eigenvalue on the complement of constants.
    pub vector: Vec<f64>,
}

/// A one-parameter family of forms whose smallest eigenvalue is
/// nondecreasing in `c`.
pub trait FormFamily: Sync {
    fn form(&self, c: f64) -> QuadraticForm;
    fn n(&self) -> usize;
}

/// Smallest eigenvalue of a form that annihilates constants:
/// `min(0, lambda_min on 1^perp)`.
pub fn smallest_with_constants(
    form: &QuadraticForm,
    opts: &EigenOptions,
    start: Option<&[f64]>,
) -> Result<(f64, Vec<f64>)> {
    let defl = [unit_constant(form.n())];
    let mut solver = Lanczos::new(opts.clone()).deflate(&defl);
    if let Some(s) = start {
        solver = solver.start(s);
    }
    let pair = solver.lowest(form, 1)?.remove(0);
    Ok((pair.value.min(0.0), pair.vector))
}

fn certify(family: &dyn FormFamily, c: f64, opts: &EigenOptions, start: Option<&[f64]>) -> Result<OperatorGap> {
    let (smallest, vector) = smallest_with_constants(&family.form(c), opts, start)?;
    Ok(OperatorGap {
        eps: f64::NAN,
        c,
        smallest,
        pass: smallest >= -CERT_MARGIN,
        vector,
    })
}

#[derive(Debug, Clone)]
pub struct Bisection {
    /// Least passing value found (upper end of the final bracket).
    pub c_star: f64,
    /// Largest failing value found, if any.
    pub c_fail: Option<f64>,
    pub evaluations: usize,
    pub at_c_star: f64,
}

/// Least `c` certifying `family`, to relative width `rel`.
///
/// `lo` is a lower search start and `hi` a guess for a passing value. If `lo`
/// already passes and `search_below` is set, `lo` is pushed down by doubling
/// its distance from `hi` until it fails; otherwise `lo` is returned.
pub fn least_certifying_c(
    family: &dyn FormFamily,
    lo: f64,
    hi: f64,
    rel: f64,
    search_below: bool,
    opts: &EigenOptions,
) -> Result<Bisection> {
    let mut evaluations = 0;
    let mut warm: Option<Vec<f64>> = None;
    let mut eval = |c: f64, warm: &mut Option<Vec<f64>>| -> Result<OperatorGap> {
        evaluations += 1;
        let g = certify(family, c, opts, warm.as_deref())?;
        *warm = Some(g.vector.clone());
        Ok(g)
    };

    let mut hi = hi;
    let mut g_hi = eval(hi, &mut warm)?;
    let mut tries = 0;
    while !g_hi.pass {
        tries += 1;
        if tries > 80 {
            return Err(Error::Precondition(format!(
                "no certifying constant found up to {hi:e}"
            )));
        }
        let step = (hi - lo).abs().max(hi.abs()).max(1.0);
        hi += step;
        g_hi = eval(hi, &mut warm)?;
    }
    let mut lo = lo;
    let mut g_lo = eval(lo, &mut warm)?;
    if g_lo.pass {
        if !search_below {
            return Ok(Bisection {
                c_star: lo,
                c_fail: None,
                evaluations,
                at_c_star: g_lo.smallest,
            });
        }
        let mut tries = 0;
        while g_lo.pass {
            tries += 1;
            if tries > 80 {
                return Err(Error::Precondition(
                    "certification holds for every constant tried".into(),
                ));
            }
            hi = lo;
            g_hi = g_lo;
            lo -= (hi - lo).abs().max(1.0) * 2f64.powi(tries);
            g_lo = eval(lo, &mut warm)?;
        }
    }
    let floor = 1e-12 * hi.abs().max(lo.abs());
    while hi - lo > (rel * hi.abs().max(lo.abs())).max(floor) {
        let mid = 0.5 * (lo + hi);
        let g = eval(mid, &mut warm)?;
        if g.pass {
            hi = mid;
            g_hi = g;
        } else {
            lo = mid;
        }
    }
    Ok(Bisection {
        c_star: hi,
        c_fail: Some(lo),
        evaluations,
        at_c_star: g_hi.smallest,
    })
}

/// `eps (-Lap) + C sum_i Q_i - Q_Lambda`.
pub struct GapFamily {
    lap: QuadraticForm,
    sum_q: QuadraticForm,
    q: QuadraticForm,
    eps: f64,
}

impl GapFamily {
    pub fn new(grid: &Grid, m: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(invalid("eps", format!("{eps} must be positive")));
        }
        let sub = subdivide(grid, m)?;
        Ok(GapFamily {
            lap: assemble_neumann_laplacian(grid),
            sum_q: subcube_projector_sum(grid, &sub),
            q: QuadraticForm::projector_q_whole(grid.len()),
            eps,
        })
    }
}

impl FormFamily for GapFamily {
    fn form(&self, c: f64) -> QuadraticForm {
        self.lap.scaled(self.eps).add_scaled(c, &self.sum_q).minus(&self.q)
    }

    fn n(&self) -> usize {
        self.lap.n()
    }
}

/// Certifies `eps (-Lap) + C sum_i Q_i - Q_Lambda >= 0` by its smallest
/// eigenvalue.
pub fn operator_gap(grid: &Grid, m: usize, eps: f64, c: f64, opts: &EigenOptions) -> Result<OperatorGap> {
    if c < 0.0 {
        return Err(invalid("C", format!("{c} must be nonnegative")));
    }
    let fam = GapFamily::new(grid, m, eps)?;
    let mut g = certify(&fam, c, opts, None)?;
    g.eps = eps;
    Ok(g)
}

/// Least `C` for which [`operator_gap`] passes, to three significant figures.
pub fn least_gap_constant(grid: &Grid, m: usize, eps: f64, opts: &EigenOptions) -> Result<Bisection> {
    let fam = GapFamily::new(grid, m, eps)?;
    let ell = grid.bx().side() / m as f64;
    let guess = 1.0 / (eps * ell * ell);
    least_certifying_c(&fam, 0.0, guess, 5e-4, false, opts)
}

#[derive(Debug, Clone)]
pub struct CalibrationPoint {
    pub m: usize,
    pub eps: f64,
    pub c_star: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct Calibration {
    pub points: Vec<CalibrationPoint>,
    /// Fitted slope of `log C*` against `log(1/(eps l^2))`.
    pub slope: Option<f64>,
}

/// Measures `C*(eps, l)` over all `(M, eps)` pairs and fits its scaling.
pub fn calibrate_constant(grid: &Grid, m_list: &[usize], eps_list: &[f64], opts: &EigenOptions) -> Result<Calibration> {
    if m_list.is_empty() || eps_list.is_empty() {
        return Err(invalid("lists", "M and eps lists must be nonempty"));
    }
    let jobs: Vec<(usize, f64)> = m_list
        .iter()
        .flat_map(|&m| eps_list.iter().map(move |&e| (m, e)))
        .collect();
    let points = par::map_slice(&jobs, |&(m, eps)| {
        least_gap_constant(grid, m, eps, opts).map(|b| CalibrationPoint {
            m,
            eps,
            c_star: b.c_star,
            evaluations: b.evaluations,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let side = grid.bx().side();
    let x: Vec<f64> = points
        .iter()
        .map(|p| {
            let ell = side / p.m as f64;
            1.0 / (p.eps * ell * ell)
        })
        .collect();
    let y: Vec<f64> = points.iter().map(|p| p.c_star).collect();
    let positive = y.iter().all(|&v| v > 0.0);
    Ok(Calibration {
        slope: if positive { stats::loglog_slope(&x, &y) } else { None },
        points,
    })
}

/// `(-Lap) - l^(2+a) Q - (1 - C l^(4+2a)) sum_i (-Lap_i - (pi/8) l^-2 Q_i)`.
pub struct KineticFamily {
    lap: QuadraticForm,
    q: QuadraticForm,
    local: QuadraticForm,
    ell: f64,
    alpha: f64,
}

impl KineticFamily {
    pub fn new(grid: &Grid, m: usize, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(invalid("alpha", format!("{alpha} must be nonnegative")));
        }
        let sub = subdivide(grid, m)?;
        let ell = sub.ell();
        if ell >= 0.5 {
            return Err(invalid("M", format!("cell size {ell} must be below 1/2")));
        }
        let local = assemble_subcube_laplacian(grid, &sub)
            .add_scaled(-(PI / 8.0) / (ell * ell), &subcube_projector_sum(grid, &sub));
        Ok(KineticFamily {
            lap: assemble_neumann_laplacian(grid),
            q: QuadraticForm::projector_q_whole(grid.len()),
            local,
            ell,
            alpha,
        })
    }

    /// `C` at which the right-hand side vanishes (always certifies).
    pub fn trivial_constant(&self) -> f64 {
        self.ell.powf(-(4.0 + 2.0 * self.alpha))
    }
}

impl FormFamily for KineticFamily {
    fn form(&self, c: f64) -> QuadraticForm {
        let k = 1.0 - c * self.ell.powf(4.0 + 2.0 * self.alpha);
        self.lap
            .add_scaled(-self.ell.powf(2.0 + self.alpha), &self.q)
            .add_scaled(-k, &self.local)
    }

    fn n(&self) -> usize {
        self.lap.n()
    }
}

/// Smallest eigenvalue of the kinetic localization form at a given `C`.
pub fn kinetic_localization_gap(grid: &Grid, m: usize, alpha: f64, c: f64, opts: &EigenOptions) -> Result<OperatorGap> {
    let fam = KineticFamily::new(grid, m, alpha)?;
    let mut g = certify(&fam, c, opts, None)?;
    g.eps = f64::NAN;
    Ok(g)
}

/// Least `C` (possibly negative) certifying the kinetic localization form.
pub fn least_kinetic_constant(grid: &Grid, m: usize, alpha: f64, opts: &EigenOptions) -> Result<Bisection> {
    let fam = KineticFamily::new(grid, m, alpha)?;
    let hi = fam.trivial_constant();
    least_certifying_c(&fam, -1.0, hi, 5e-4, true, opts)
}
