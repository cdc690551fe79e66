//! Lowest eigenpairs of a [`QuadraticForm`] by thick-restart Lanczos.
//!
//! The basis `V` and its image `AV` are both stored, so the projected matrix
//! `H = V^T A V` is filled one column per step and every restart is an exact
//! Rayleigh-Ritz step. Reorthogonalization is full (two passes of classical
//! Gram-Schmidt), which keeps the Ritz values free of ghost copies at the
//! basis sizes used here.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::form::{axpy, dot, norm, QuadraticForm};

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Converged when `||A x - theta x|| <= tol * ||A||_bound`.
    pub tol: f64,
    pub max_basis: usize,
    pub max_matvecs: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-8,
            max_basis: 80,
            max_matvecs: 50_000,
            seed: 0x5eed_1a2c,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    /// Unit Euclidean norm.
    pub vector: Vec<f64>,
    pub residual: f64,
}

/// The `k` algebraically smallest eigenpairs with default options.
pub fn eigen_lowest(form: &QuadraticForm, k: usize) -> Result<Vec<EigenPair>> {
    Lanczos::new(EigenOptions::default()).lowest(form, k)
}

/// Configured solver. `deflate` vectors must be orthonormal; the search is
/// restricted to their orthogonal complement.
#[derive(Debug, Clone, Default)]
pub struct Lanczos<'a> {
    opts: EigenOptions,
    deflate: &'a [Vec<f64>],
    start: Option<&'a [f64]>,
}

impl<'a> Lanczos<'a> {
    pub fn new(opts: EigenOptions) -> Self {
        Lanczos {
            opts,
            deflate: &[],
            start: None,
        }
    }

    pub fn deflate(mut self, vecs: &'a [Vec<f64>]) -> Self {
        self.deflate = vecs;
        self
    }

    /// Warm start; falls back to a seeded random vector if it is degenerate.
    pub fn start(mut self, v: &'a [f64]) -> Self {
        self.start = Some(v);
        self
    }

    /// The `k` smallest eigenpairs, found one at a time: each converged
    /// vector is locked (deflated) before the next search, which restarts
    /// from a fresh random vector. A single Krylov sequence only sees one
    /// direction of each eigenspace, so this is what resolves degeneracies.
    pub fn lowest(&self, form: &QuadraticForm, k: usize) -> Result<Vec<EigenPair>> {
        let avail = form.n().saturating_sub(self.deflate.len());
        if k == 0 || k > avail {
            return Err(invalid(
                "k",
                format!("{k} eigenpairs requested from a space of dimension {avail}"),
            ));
        }
        let mut locked = self.deflate.to_vec();
        let mut out = Vec::with_capacity(k);
        for i in 0..k {
            let start = if i == 0 { self.start } else { None };
            let seed = self.opts.seed.wrapping_add(i as u64);
            let pair = self.run(form, &locked, start, seed)?;
            locked.push(pair.vector.clone());
            out.push(pair);
        }
        out.sort_by(|a, b| a.value.total_cmp(&b.value));
        Ok(out)
    }

    /// Lowest pair on the complement of `deflate`.
    fn run(&self, form: &QuadraticForm, deflate: &[Vec<f64>], start: Option<&[f64]>, seed: u64) -> Result<EigenPair> {
        let k = 1;
        let n = form.n();
        let avail = n - deflate.len();
        let m_max = self.opts.max_basis.max(k + 2).min(avail);
        let keep = (m_max / 2).max(k + 1).min(m_max.saturating_sub(1)).max(k);
        let scale = form.norm_bound().max(f64::MIN_POSITIVE);
        let target = self.opts.tol * scale;
        let check_every = 8;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut random_dir = |basis: &[Vec<f64>]| -> Option<Vec<f64>> {
            for _ in 0..8 {
                let mut t: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                if orthogonalize(&mut t, deflate, basis) > 1e-8 {
                    return Some(t);
                }
            }
            None
        };

        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m_max);
        let mut w: Vec<Vec<f64>> = Vec::with_capacity(m_max);
        let mut h = DMatrix::<f64>::zeros(m_max, m_max);

        let mut next = start
            .and_then(|s| {
                let mut t = s.to_vec();
                (t.len() == n && orthogonalize(&mut t, deflate, &[]) > 1e-10).then_some(t)
            })
            .or_else(|| random_dir(&[]))
            .ok_or_else(|| Error::Precondition("no admissible start vector".into()))?;

        let mut matvecs = 0;
        let mut since_check = 0;
        let mut last_res = f64::INFINITY;
        loop {
            let nn = norm(&next);
            next.iter_mut().for_each(|x| *x /= nn);
            let aw = form.apply_vec(&next);
            matvecs += 1;
            since_check += 1;
            let j = v.len();
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(vi, &aw);
                h[(i, j)] = hij;
                h[(j, i)] = hij;
            }
            h[(j, j)] = dot(&next, &aw);
            v.push(next);
            w.push(aw);
            let m = v.len();

            let full = m == avail;
            let must_restart = m == m_max && !full;
            if m >= k && (full || must_restart || since_check >= check_every) {
                since_check = 0;
                let (theta, y) = ritz(&h, m);
                let mut pairs = Vec::with_capacity(k);
                let mut worst: f64 = 0.0;
                for c in 0..k {
                    let yc = y.column(c);
                    let x = combine(&v, yc.as_slice());
                    let ax = combine(&w, yc.as_slice());
                    let mut r = ax;
                    axpy(-theta[c], &x, &mut r);
                    for q in deflate {
                        let cq = dot(q, &r);
                        axpy(-cq, q, &mut r);
                    }
                    let res = norm(&r);
                    worst = worst.max(res);
                    pairs.push(EigenPair {
                        value: theta[c],
                        vector: x,
                        residual: res,
                    });
                }
                last_res = worst;
                if worst <= target || full {
                    return Ok(pairs.remove(0));
                }
                if must_restart {
                    let mut t = w[m - 1].clone();
                    let ok = orthogonalize(&mut t, deflate, &v) > 1e-10 * norm(&w[m - 1]);
                    let yk = y.columns(0, keep).into_owned();
                    let nv: Vec<Vec<f64>> = (0..keep).map(|c| combine(&v, yk.column(c).as_slice())).collect();
                    let nw: Vec<Vec<f64>> = (0..keep).map(|c| combine(&w, yk.column(c).as_slice())).collect();
                    v = nv;
                    w = nw;
                    h.fill(0.0);
                    for c in 0..keep {
                        h[(c, c)] = theta[c];
                    }
                    next = if ok {
                        let mut t = t;
                        orthogonalize(&mut t, deflate, &v);
                        t
                    } else {
                        random_dir(&v).ok_or_else(|| Error::Precondition("Krylov space exhausted".into()))?
                    };
                    if matvecs >= self.opts.max_matvecs {
                        break;
                    }
                    continue;
                }
            }
            if matvecs >= self.opts.max_matvecs {
                break;
            }
            let mut t = w[m - 1].clone();
            let scale_t = norm(&t);
            next = if orthogonalize(&mut t, deflate, &v) > 1e-10 * scale_t.max(1e-300) {
                t
            } else {
                match random_dir(&v) {
                    Some(t) => t,
                    None => {
                        // The basis spans an invariant subspace containing
                        // everything reachable: Ritz pairs are exact.
                        let (theta, y) = ritz(&h, m);
                        return Ok(EigenPair {
                            value: theta[0],
                            vector: combine(&v, y.column(0).as_slice()),
                            residual: 0.0,
                        });
                    }
                }
            };
        }
        Err(Error::NoConvergence {
            iterations: matvecs,
            residual: last_res,
            target,
        })
    }
}

/// Ascending Ritz values and vectors of the leading `m x m` block of `h`.
fn ritz(h: &DMatrix<f64>, m: usize) -> (Vec<f64>, DMatrix<f64>) {
    let hm = h.view((0, 0), (m, m)).into_owned();
    let eig = SymmetricEigen::new(hm);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let theta = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let y = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    (theta, y)
}

fn combine(basis: &[Vec<f64>], coef: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (b, &c) in basis.iter().zip(coef) {
        axpy(c, b, &mut out);
    }
    out
}

/// Two passes of classical Gram-Schmidt; returns the remaining norm.
fn orthogonalize(t: &mut [f64], a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    for _ in 0..2 {
        for q in a.iter().chain(b) {
            let c = dot(q, t);
            axpy(-c, q, t);
        }
    }
    norm(t)
}

/// Unit constant vector of length `n`, the common null vector of every
/// Neumann-type form here.
pub fn unit_constant(n: usize) -> Vec<f64> {
    vec![1.0 / (n as f64).sqrt(); n]
}

/// Dense reference: all eigenvalues ascending.
pub fn dense_eigenvalues(form: &QuadraticForm) -> Vec<f64> {
    let eig = SymmetricEigen::new(form.to_dense());
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Smallest eigenvalue of `form` restricted to the complement of the unit
/// vectors in `deflate` (dense reference).
pub fn dense_min_deflated(form: &QuadraticForm, deflate: &[Vec<f64>]) -> f64 {
    let mut a = form.to_dense();
    // Push the deflated directions far above the spectrum.
    let shift = 2.0 * form.norm_bound() + 1.0;
    for q in deflate {
        let qv = nalgebra::DVector::from_column_slice(q);
        a += &qv * qv.transpose() * shift;
    }
    SymmetricEigen::new(a).eigenvalues.min()
}
