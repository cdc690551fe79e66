//! Discrete Neumann Laplacian on cell-centered grids, subcube projectors,
//! Neumann cosine modes, and Dirichlet energies.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{invalid, Result};
use crate::form::{Csr, QuadraticForm};
use crate::grid::{Grid, GridFunction, Region, Subdivision};

/// Nonnegative integer multi-index `k`; the wave vector is `p = pi * k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex(pub [u32; 3]);

impl ModeIndex {
    pub fn new(k: &[u32]) -> Self {
        let mut a = [0; 3];
        a[..k.len()].copy_from_slice(k);
        ModeIndex(a)
    }

    pub fn k(&self) -> [u32; 3] {
        self.0
    }

    /// `|p|^2 = pi^2 |k|^2`.
    pub fn p_squared(&self) -> f64 {
        PI * PI * self.k_squared() as f64
    }

    pub fn k_squared(&self) -> u64 {
        self.0.iter().map(|&k| (k as u64) * (k as u64)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; 3]
    }
}

fn laplacian_rows(grid: &Grid, keep_edge: impl Fn(usize, usize) -> bool) -> Csr {
    let d = grid.dim();
    let n = grid.n_per_side();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let rows = (0..grid.len())
        .map(|i| {
            let mi = grid.multi_index(i);
            let mut row = Vec::with_capacity(2 * d + 1);
            let mut diag = 0.0;
            for axis in 0..d {
                let s = grid.stride(axis);
                if mi[axis] > 0 && keep_edge(i, i - s) {
                    row.push((i - s, -inv_h2));
                    diag += inv_h2;
                }
                if mi[axis] + 1 < n && keep_edge(i, i + s) {
                    row.push((i + s, -inv_h2));
                    diag += inv_h2;
                }
            }
            row.push((i, diag));
            row
        })
        .collect();
    Csr::from_rows(rows)
}

/// Second-order stencil with ghost-node reflection at the box faces.
/// In 1-D the boundary rows read `(u_0 - u_1)/h^2`.
pub fn assemble_neumann_laplacian(grid: &Grid) -> QuadraticForm {
    QuadraticForm::sparse(laplacian_rows(grid, |_, _| true))
}

/// Direct sum of Neumann Laplacians on the subcubes: the same stencil with
/// every edge crossing a subcube face removed.
pub fn assemble_subcube_laplacian(grid: &Grid, sub: &Subdivision) -> QuadraticForm {
    QuadraticForm::sparse(laplacian_rows(grid, |i, j| sub.cell_of(i) == sub.cell_of(j)))
}

/// `Q_region = 1_region - P_region` as a form on all grid nodes.
pub fn projector_q(grid: &Grid, region: Region<'_>) -> Result<QuadraticForm> {
    match region {
        Region::Whole => Ok(QuadraticForm::projector_q_whole(grid.len())),
        Region::Subcube(s, c) => {
            if c >= s.num_cells() || s.members(c).is_empty() {
                return Err(invalid("region", format!("subcube {c} is empty or out of range")));
            }
            Ok(QuadraticForm::projector_q(grid.len(), s.members(c)))
        }
    }
}

/// `sum_i Q_{Lambda_i}` over all subcubes.
pub fn subcube_projector_sum(grid: &Grid, sub: &Subdivision) -> QuadraticForm {
    QuadraticForm::partition_q_sum(grid.len(), sub.blocks())
}

/// Closed-form spectrum of the 1-D stencil: `(4/h^2) sin^2(k pi / (2n))`.
pub fn discrete_eigenvalue_1d(n: usize, side: f64, k: usize) -> f64 {
    let h = side / n as f64;
    let s = (k as f64 * PI / (2.0 * n as f64)).sin();
    4.0 * s * s / (h * h)
}

/// Smallest nonzero eigenvalue of the Neumann Laplacian on `grid`.
pub fn discrete_gap(grid: &Grid) -> f64 {
    discrete_eigenvalue_1d(grid.n_per_side(), grid.bx().side(), 1)
}

/// One factor of the Neumann basis on an interval of length `side`
/// starting at `lo`: `1` for `k = 0`, else `sqrt(2) cos(pi k (t - lo)/side)`,
/// normalised in `L^2` of the interval.
pub fn mode_1d(k: u32, t: f64, lo: f64, side: f64) -> f64 {
    let c = if k == 0 {
        1.0
    } else {
        SQRT_2 * (PI * k as f64 * (t - lo) / side).cos()
    };
    c / side.sqrt()
}

/// Samples the product mode `phi_p` at the grid nodes.
pub fn neumann_mode(grid: &Grid, p: ModeIndex) -> GridFunction {
    let d = grid.dim();
    let n = grid.n_per_side();
    let bx = *grid.bx();
    let table: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            (0..n)
                .map(|k| mode_1d(p.0[a], grid.coord(a, k), bx.lower(a), bx.side()))
                .collect()
        })
        .collect();
    let values = (0..grid.len())
        .map(|i| {
            let mi = grid.multi_index(i);
            (0..d).map(|a| table[a][mi[a]]).product()
        })
        .collect();
    GridFunction::new(*grid, values).expect("cosine samples are finite")
}

/// `int |grad f|^p`, discretised.
///
/// For `p = 2` this is `h^d <f, -Lap f>`, i.e. the sum over interior faces of
/// squared difference quotients. For other `p` each node gets the gradient
/// whose components average the adjacent interior forward differences.
pub fn dirichlet_energy(f: &GridFunction, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid("p", format!("{p} < 1")));
    }
    let grid = f.grid();
    let d = grid.dim();
    let n = grid.n_per_side();
    let h = grid.spacing();
    let u = f.values();
    if p == 2.0 {
        let mut s = 0.0;
        for i in 0..grid.len() {
            let mi = grid.multi_index(i);
            for axis in 0..d {
                if mi[axis] + 1 < n {
                    let q = (u[i + grid.stride(axis)] - u[i]) / h;
                    s += q * q;
                }
            }
        }
        return Ok(grid.cell_volume() * s);
    }
    let mut s = 0.0;
    for i in 0..grid.len() {
        let mi = grid.multi_index(i);
        let mut g2 = 0.0;
        for axis in 0..d {
            let st = grid.stride(axis);
            let mut acc = 0.0;
            let mut cnt = 0.0;
            if mi[axis] > 0 {
                acc += (u[i] - u[i - st]) / h;
                cnt += 1.0;
            }
            if mi[axis] + 1 < n {
                acc += (u[i + st] - u[i]) / h;
                cnt += 1.0;
            }
            let g = acc / cnt;
            g2 += g * g;
        }
        s += g2.sqrt().powf(p);
    }
    Ok(grid.cell_volume() * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{dense_eigenvalues, eigen_lowest};
    use crate::form::dot;
    use crate::grid::{integrate, make_grid, subdivide, BoxSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_node_laplacian() {
        let g = Grid::unit(1, 2).unwrap();
        let a = assemble_neumann_laplacian(&g).to_dense();
        assert_eq!(a[(0, 0)], 4.0);
        assert_eq!(a[(0, 1)], -4.0);
        let ev = dense_eigenvalues(&assemble_neumann_laplacian(&g));
        assert_abs_diff_eq!(ev[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[1], 8.0, epsilon = 1e-13);
    }

    #[test]
    fn constants_are_null() {
        for d in 1..=3 {
            let g = Grid::unit(d, 6).unwrap();
            let a = assemble_neumann_laplacian(&g);
            let out = a.apply_vec(&vec![1.0; g.len()]);
            assert!(out.iter().all(|x| x.abs() < 1e-10));
        }
    }

    #[test]
    fn closed_form_spectrum_1d() {
        let g = Grid::unit(1, 64).unwrap();
        let ev = dense_eigenvalues(&assemble_neumann_laplacian(&g));
        for (k, e) in ev.iter().enumerate() {
            let exact = discrete_eigenvalue_1d(64, 1.0, k);
            assert!((e - exact).abs() <= 1e-9 * exact.max(1.0));
        }
        let l1 = discrete_eigenvalue_1d(64, 1.0, 1);
        assert!((l1 - 9.8676).abs() < 1e-3);
        assert!((l1 / (PI * PI) - 1.0).abs() < 3e-4);
    }

    #[test]
    fn lanczos_on_neumann_laplacian() {
        let g = Grid::unit(1, 64).unwrap();
        let p = eigen_lowest(&assemble_neumann_laplacian(&g), 2).unwrap();
        assert_abs_diff_eq!(p[0].value, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(p[1].value, discrete_gap(&g), epsilon = 1e-8);

        let g2 = Grid::unit(2, 16).unwrap();
        let p2 = eigen_lowest(&assemble_neumann_laplacian(&g2), 3).unwrap();
        let l1 = discrete_gap(&g2);
        assert_abs_diff_eq!(p2[0].value, 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(p2[1].value, l1, epsilon = 1e-7);
        assert_abs_diff_eq!(p2[2].value, l1, epsilon = 1e-7);
    }

    #[test]
    fn tensor_spectrum_2d() {
        let g = Grid::unit(2, 6).unwrap();
        let ev = dense_eigenvalues(&assemble_neumann_laplacian(&g));
        let mut sums: Vec<f64> = (0..6)
            .flat_map(|a| (0..6).map(move |b| discrete_eigenvalue_1d(6, 1.0, a) + discrete_eigenvalue_1d(6, 1.0, b)))
            .collect();
        sums.sort_by(f64::total_cmp);
        for (e, s) in ev.iter().zip(&sums) {
            assert!((e - s).abs() < 1e-9);
        }
    }

    #[test]
    fn subcube_laplacian_is_block_diagonal() {
        let g = Grid::unit(1, 8).unwrap();
        let s = subdivide(&g, 2).unwrap();
        let a = assemble_subcube_laplacian(&g, &s).to_dense();
        assert_eq!(a[(3, 4)], 0.0);
        assert_eq!(a[(3, 3)], 64.0);
        let ev = dense_eigenvalues(&assemble_subcube_laplacian(&g, &s));
        assert!(ev[0].abs() < 1e-12 && ev[1].abs() < 1e-12);
        let local = discrete_eigenvalue_1d(4, 0.5, 1);
        assert!((ev[2] - local).abs() < 1e-10 && (ev[3] - local).abs() < 1e-10);
    }

    #[test]
    fn modes_are_orthonormal() {
        let n = 16;
        let g = Grid::unit(1, n).unwrap();
        let h = g.spacing();
        for a in 0..(n as u32 / 2) {
            let fa = neumann_mode(&g, ModeIndex::new(&[a]));
            for b in 0..(n as u32 / 2) {
                let fb = neumann_mode(&g, ModeIndex::new(&[b]));
                let ip = h * dot(fa.values(), fb.values());
                assert_abs_diff_eq!(ip, if a == b { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
        let g2 = Grid::unit(2, 8).unwrap();
        let f = neumann_mode(&g2, ModeIndex::new(&[1, 2]));
        assert_abs_diff_eq!(
            integrate(&GridFunction::new(g2, f.values().iter().map(|v| v * v).collect()).unwrap()),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mode_values() {
        let g = Grid::unit(2, 4).unwrap();
        assert!(neumann_mode(&g, ModeIndex::new(&[0, 0]))
            .values()
            .iter()
            .all(|&v| v == 1.0));
        assert_abs_diff_eq!(mode_1d(1, -0.5, -0.5, 1.0), SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn energy_examples() {
        let g = Grid::unit(1, 64).unwrap();
        for p in [1.5, 2.0, 3.0] {
            assert_eq!(dirichlet_energy(&GridFunction::constant(g, 2.0), p).unwrap(), 0.0);
        }
        let phi = neumann_mode(&g, ModeIndex::new(&[1]));
        let e = dirichlet_energy(&phi, 2.0).unwrap();
        assert_abs_diff_eq!(e, discrete_gap(&g), epsilon = 1e-10);
        let x = GridFunction::from_fn(g, |x| x[0]);
        assert_abs_diff_eq!(dirichlet_energy(&x, 2.0).unwrap(), 63.0 / 64.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dirichlet_energy(&x, 3.0).unwrap(), 1.0, epsilon = 1e-12);
        assert!(dirichlet_energy(&x, 0.9).is_err());
    }

    #[test]
    fn doubling_side_quarters_gap() {
        let g1 = make_grid(BoxSpec::with_side(1, 1.0).unwrap(), 32).unwrap();
        let g2 = make_grid(BoxSpec::with_side(1, 2.0).unwrap(), 32).unwrap();
        let r = discrete_gap(&g2) / discrete_gap(&g1);
        assert_abs_diff_eq!(r, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn spectral_gap_bounds_variance() {
        use rand::{Rng, SeedableRng};
        let g = Grid::unit(2, 12).unwrap();
        let a = assemble_neumann_laplacian(&g);
        let q = projector_q(&g, Region::Whole).unwrap();
        let l1 = discrete_gap(&g);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let v: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert!(q.quad(&v) <= a.quad(&v) / l1 + 1e-10);
        }
    }
}
