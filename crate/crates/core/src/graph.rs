//! The grid graph `[[M]]^d` of subcubes: combinatorial Laplacian, spectral
//! gap, Cheeger constant, and the discrete Poincaré constant.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigen::{unit_constant, EigenOptions, Lanczos};
use crate::error::{invalid, Result};
use crate::form::{Csr, QuadraticForm};
use crate::par;

/// Vertices are subcube indices in lexicographic order; `i ~ j` iff the
/// subcubes share a face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridGraph {
    m: usize,
    d: usize,
}

impl GridGraph {
    pub fn new(m: usize, d: usize) -> Result<Self> {
        if m < 2 {
            return Err(invalid("M", format!("{m} < 2 gives no edges")));
        }
        if !(1..=3).contains(&d) {
            return Err(invalid("d", format!("{d} not in 1..=3")));
        }
        Ok(GridGraph { m, d })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn vertex_count(&self) -> usize {
        self.m.pow(self.d as u32)
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * self.d);
        let mut stride = 1;
        for _ in 0..self.d {
            let k = (i / stride) % self.m;
            if k > 0 {
                out.push(i - stride);
            }
            if k + 1 < self.m {
                out.push(i + stride);
            }
            stride *= self.m;
        }
        out.sort_unstable();
        out
    }

    /// Each edge once, as `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.vertex_count())
            .flat_map(|i| {
                self.neighbors(i)
                    .into_iter()
                    .filter(move |&j| j > i)
                    .map(move |j| (i, j))
            })
            .collect()
    }

    pub fn max_degree(&self) -> usize {
        if self.m == 2 {
            self.d
        } else {
            2 * self.d
        }
    }
}

/// `(L u)_i = deg(i) u_i - sum_{j ~ i} u_j`.
pub fn graph_laplacian(g: &GridGraph) -> QuadraticForm {
    let rows = (0..g.vertex_count())
        .map(|i| {
            let nb = g.neighbors(i);
            let mut r: Vec<(usize, f64)> = nb.iter().map(|&j| (j, -1.0)).collect();
            r.push((i, nb.len() as f64));
            r
        })
        .collect();
    QuadraticForm::sparse(Csr::from_rows(rows))
}

/// Closed form of the path spectrum: `2 (1 - cos(k pi / M))`.
pub fn path_eigenvalue(m: usize, k: usize) -> f64 {
    2.0 * (1.0 - (k as f64 * PI / m as f64).cos())
}

/// Second-smallest Laplacian eigenvalue, computed by the eigensolver on the
/// complement of constants.
pub fn spectral_gap(g: &GridGraph, opts: &EigenOptions) -> Result<f64> {
    Ok(fiedler(g, opts)?.0)
}

fn fiedler(g: &GridGraph, opts: &EigenOptions) -> Result<(f64, Vec<f64>)> {
    let n = g.vertex_count();
    let defl = [unit_constant(n)];
    let p = Lanczos::new(opts.clone())
        .deflate(&defl)
        .lowest(&graph_laplacian(g), 1)?;
    Ok((p[0].value, p[0].vector.clone()))
}

/// Largest vertex count for exhaustive Cheeger search.
pub const EXHAUSTIVE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum Cheeger {
    /// Minimum over all cuts; `set` is a minimizing side as a bitmask.
    Exact { value: f64, set: u64 },
    /// Spectral lower bound `lambda_2 / 2` and best sweep cut.
    Interval { lower: f64, upper: f64 },
}

impl Cheeger {
    pub fn lower(&self) -> f64 {
        match *self {
            Cheeger::Exact { value, .. } => value,
            Cheeger::Interval { lower, .. } => lower,
        }
    }

    pub fn upper(&self) -> f64 {
        match *self {
            Cheeger::Exact { value, .. } => value,
            Cheeger::Interval { upper, .. } => upper,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Cheeger::Exact { .. })
    }
}

/// Edge expansion `min_S |dS| / min(|S|, |S^c|)`.
pub fn cheeger_constant(g: &GridGraph, opts: &EigenOptions) -> Result<Cheeger> {
    let n = g.vertex_count();
    if n <= EXHAUSTIVE_LIMIT {
        let (value, set) = exhaustive_cheeger(g);
        return Ok(Cheeger::Exact { value, set });
    }
    let (lambda2, v) = fiedler(g, opts)?;
    Ok(Cheeger::Interval {
        lower: lambda2 / 2.0,
        upper: sweep_cut(g, &v),
    })
}

/// Exhaustive minimum over all bipartitions. The last vertex is kept out of
/// `S`, so each cut is visited once.
pub fn exhaustive_cheeger(g: &GridGraph) -> (f64, u64) {
    let n = g.vertex_count();
    assert!(n <= 63, "exhaustive search needs n <= 63");
    let edges: Vec<(u64, u64)> = g.edges().into_iter().map(|(i, j)| (1u64 << i, 1u64 << j)).collect();
    let total = 1u64 << (n - 1);
    let best = par::min_by_blocks(total - 1, 64, |lo, hi| {
        let mut best: Option<(u64, f64)> = None;
        for idx in lo..hi {
            let mask = idx + 1;
            let cut = edges
                .iter()
                .filter(|&&(a, b)| (mask & a != 0) != (mask & b != 0))
                .count();
            let size = mask.count_ones() as usize;
            let r = cut as f64 / size.min(n - size) as f64;
            if best.is_none_or(|(_, v)| r < v) {
                best = Some((mask, r));
            }
        }
        best
    })
    .expect("at least one cut");
    (best.1, best.0)
}

/// Best prefix cut after ordering vertices by `v`.
pub fn sweep_cut(g: &GridGraph, v: &[f64]) -> f64 {
    let n = g.vertex_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
    let mut inside = vec![false; n];
    let mut cut: i64 = 0;
    let mut best = f64::INFINITY;
    for (k, &u) in order.iter().enumerate().take(n - 1) {
        let nb = g.neighbors(u);
        let ins = nb.iter().filter(|&&w| inside[w]).count() as i64;
        cut += nb.len() as i64 - 2 * ins;
        inside[u] = true;
        let size = k + 1;
        best = best.min(cut as f64 / size.min(n - size) as f64);
    }
    best
}

/// Both sides of the discrete Poincaré inequality on vertex values `u`:
/// `(sum_i |<u> - u_i|^p)^(1/p)` and `(sum_i (sum_{j~i} |u_i - u_j|)^p)^(1/p)`.
pub fn discrete_sides(g: &GridGraph, u: &[f64], p: f64) -> (f64, f64) {
    let n = u.len() as f64;
    let mean = u.iter().sum::<f64>() / n;
    let lhs = u.iter().map(|x| (x - mean).abs().powf(p)).sum::<f64>().powf(1.0 / p);
    let rhs = (0..u.len())
        .map(|i| g.neighbors(i).iter().map(|&j| (u[i] - u[j]).abs()).sum::<f64>().powf(p))
        .sum::<f64>()
        .powf(1.0 / p);
    (lhs, rhs)
}

#[derive(Debug, Clone)]
pub struct DiscretePoincare {
    pub p: f64,
    /// Measured constant (includes the factor `M`).
    pub constant: f64,
    /// `constant / M`.
    pub per_m: f64,
    /// Largest sampled ratio of the two sides (equals `constant` for p != 2).
    pub sampled: f64,
    pub trials: usize,
}

/// Measured constant of the discrete Poincaré inequality on `g`.
///
/// For `p = 2` the constant is the exact best constant `1/sqrt(2 lambda_2)`
/// of the quadratic pair `sum |<u> - u_i|^2 <= c^2 sum_i sum_{j~i} |u_i - u_j|^2`,
/// which dominates the inequality itself since `(sum_j |a_j|)^2 >= sum_j a_j^2`.
/// For other `p` it is the largest ratio over `trials` seeded random
/// vectors, linear profiles along each axis, and the cosine profile.
pub fn discrete_poincare_constant(
    g: &GridGraph,
    p: f64,
    trials: usize,
    seed: u64,
    opts: &EigenOptions,
) -> Result<DiscretePoincare> {
    if !(p > 1.0) || p.is_infinite() {
        return Err(invalid("p", format!("{p} must be a finite exponent > 1")));
    }
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let n = g.vertex_count();
    let m = g.m();
    let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(trials + 2 * g.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        candidates.push((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
    }
    let mut stride = 1;
    for _ in 0..g.dim() {
        let axis_coord = |i: usize| ((i / stride) % m) as f64;
        candidates.push((0..n).map(axis_coord).collect());
        candidates.push((0..n).map(|i| (PI * (axis_coord(i) + 0.5) / m as f64).cos()).collect());
        stride *= m;
    }
    let sampled = candidates
        .iter()
        .filter_map(|u| {
            let (l, r) = discrete_sides(g, u, p);
            (r > 0.0).then_some(l / r)
        })
        .fold(0.0, f64::max);
    let constant = if p == 2.0 {
        let l2 = spectral_gap(g, opts)?;
        1.0 / (2.0 * l2).sqrt()
    } else {
        sampled
    };
    Ok(DiscretePoincare {
        p,
        constant,
        per_m: constant / m as f64,
        sampled,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::dense_eigenvalues;

    #[test]
    fn small_spectra() {
        let g = GridGraph::new(2, 1).unwrap();
        let ev = dense_eigenvalues(&graph_laplacian(&g));
        assert!((ev[0]).abs() < 1e-14 && (ev[1] - 2.0).abs() < 1e-14);
        let g4 = GridGraph::new(4, 1).unwrap();
        let ev4 = dense_eigenvalues(&graph_laplacian(&g4));
        for (k, e) in ev4.iter().enumerate() {
            assert!((e - path_eigenvalue(4, k)).abs() < 1e-12);
        }
    }

    #[test]
    fn product_spectrum() {
        let g = GridGraph::new(5, 2).unwrap();
        let ev = dense_eigenvalues(&graph_laplacian(&g));
        let mut sums: Vec<f64> = (0..5)
            .flat_map(|a| (0..5).map(move |b| path_eigenvalue(5, a) + path_eigenvalue(5, b)))
            .collect();
        sums.sort_by(f64::total_cmp);
        for (e, s) in ev.iter().zip(&sums) {
            assert!((e - s).abs() < 1e-12);
        }
    }

    #[test]
    fn gaps() {
        let opts = EigenOptions::default();
        assert!((spectral_gap(&GridGraph::new(2, 1).unwrap(), &opts).unwrap() - 2.0).abs() < 1e-12);
        let g8 = spectral_gap(&GridGraph::new(8, 1).unwrap(), &opts).unwrap();
        assert!((g8 - 0.152_240_934_977_4).abs() < 1e-10);
        let g8_2 = spectral_gap(&GridGraph::new(8, 2).unwrap(), &opts).unwrap();
        assert!((g8 - g8_2).abs() < 1e-9);
    }

    #[test]
    fn cheeger_examples() {
        let opts = EigenOptions::default();
        let c2 = cheeger_constant(&GridGraph::new(2, 1).unwrap(), &opts).unwrap();
        assert_eq!(c2, Cheeger::Exact { value: 1.0, set: 1 });
        let c4 = cheeger_constant(&GridGraph::new(4, 1).unwrap(), &opts).unwrap();
        assert_eq!(c4.lower(), 0.5);
        assert!(c4.is_exact());
        let c16 = cheeger_constant(&GridGraph::new(16, 1).unwrap(), &opts).unwrap();
        assert_eq!(c16.upper(), 2.0 / 16.0);
        let c32 = cheeger_constant(&GridGraph::new(32, 1).unwrap(), &opts).unwrap();
        assert!(!c32.is_exact());
        assert!(c32.lower() <= 1.0 / 16.0 && (c32.upper() - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn cheeger_sandwich() {
        let opts = EigenOptions::default();
        for (m, d) in [(2, 1), (3, 1), (4, 1), (8, 1), (16, 1), (2, 2), (3, 2), (4, 2)] {
            let g = GridGraph::new(m, d).unwrap();
            let h = cheeger_constant(&g, &opts).unwrap().lower();
            let l2 = spectral_gap(&g, &opts).unwrap();
            assert!(l2 >= h * h / (2.0 * g.max_degree() as f64) - 1e-12, "M={m} d={d}");
            assert!(l2 <= 2.0 * h + 1e-12, "M={m} d={d}");
        }
    }

    #[test]
    fn sides_vanish_only_for_constants() {
        let g = GridGraph::new(4, 2).unwrap();
        let (l, r) = discrete_sides(&g, &[2.0; 16], 2.0);
        assert_eq!((l, r), (0.0, 0.0));
        let mut u = vec![0.0; 16];
        u[5] = 1.0;
        let (l, r) = discrete_sides(&g, &u, 3.0);
        assert!(l > 0.0 && r > 0.0);
    }

    #[test]
    fn p2_constant_dominates_samples() {
        let opts = EigenOptions::default();
        for m in [4, 8, 16] {
            let g = GridGraph::new(m, 1).unwrap();
            let c = discrete_poincare_constant(&g, 2.0, 50, 7, &opts).unwrap();
            assert!(c.sampled <= c.constant * (1.0 + 1e-12));
            assert!((c.constant - 1.0 / (2.0 * path_eigenvalue(m, 1)).sqrt()).abs() < 1e-9);
        }
        let g = GridGraph::new(8, 2).unwrap();
        let c3 = discrete_poincare_constant(&g, 3.0, 20, 1, &opts).unwrap();
        assert_eq!(c3.constant, c3.sampled);
        assert!(c3.constant > 0.0);
    }
}
