//! Cell-centered tensor grids on boxes, subcube partitions, midpoint
//! quadrature, local means and L^p norms.

use std::io::Write;

use crate::error::{invalid, Error, Result};

/// An axis-aligned cube `center + [-L/2, L/2]^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSpec {
    dim: usize,
    side: f64,
    center: [f64; 3],
}

impl BoxSpec {
    pub fn new(dim: usize, side: f64, center: &[f64]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid("dim", format!("{dim} not in 1..=3")));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(invalid("side", format!("{side} is not a positive length")));
        }
        if center.len() != dim || center.iter().any(|c| !c.is_finite()) {
            return Err(invalid("center", format!("expected {dim} finite coordinates")));
        }
        let mut c = [0.0; 3];
        c[..dim].copy_from_slice(center);
        Ok(BoxSpec { dim, side, center: c })
    }

    /// The unit box `[-1/2, 1/2]^d`.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::with_side(dim, 1.0)
    }

    /// A box of side `side` centered at the origin.
    pub fn with_side(dim: usize, side: f64) -> Result<Self> {
        Self::new(dim, side, &[0.0; 3][..dim.min(3)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn center(&self) -> &[f64] {
        &self.center[..self.dim]
    }

    /// Lower corner coordinate along `axis`.
    pub fn lower(&self, axis: usize) -> f64 {
        self.center[axis] - 0.5 * self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }
}

/// Uniform cell-centered grid with `n` cells per side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    bx: BoxSpec,
    n: usize,
    h: f64,
}

pub fn make_grid(bx: BoxSpec, n_per_side: usize) -> Result<Grid> {
    if n_per_side < 2 {
        return Err(invalid("n_per_side", format!("{n_per_side} < 2")));
    }
    let total = (n_per_side as u128).pow(bx.dim as u32);
    if total > u32::MAX as u128 {
        return Err(invalid("n_per_side", "node count overflows"));
    }
    Ok(Grid {
        bx,
        n: n_per_side,
        h: bx.side / n_per_side as f64,
    })
}

impl Grid {
    /// Shorthand for a grid on the unit box.
    pub fn unit(dim: usize, n_per_side: usize) -> Result<Grid> {
        make_grid(BoxSpec::unit(dim)?, n_per_side)
    }

    pub fn bx(&self) -> &BoxSpec {
        &self.bx
    }

    pub fn dim(&self) -> usize {
        self.bx.dim
    }

    pub fn n_per_side(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Volume of one cell, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.bx.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.bx.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of the `k`-th cell center along `axis`.
    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        self.bx.lower(axis) + (k as f64 + 0.5) * self.h
    }

    /// Stride of `axis` in the lexicographic node index (axis 0 slowest).
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.bx.dim - 1 - axis) as u32)
    }

    /// Per-axis indices of a node; unused trailing entries are zero.
    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for axis in (0..self.bx.dim).rev() {
            out[axis] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi[..self.bx.dim].iter().fold(0, |acc, &k| acc * self.n + k)
    }

    /// Coordinates of a node; unused trailing entries are zero.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        let mut x = [0.0; 3];
        for axis in 0..self.bx.dim {
            x[axis] = self.coord(axis, m[axis]);
        }
        x
    }
}

/// Real values at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(
                "values",
                format!("{} values for {} nodes", values.len(), grid.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid("values", format!("non-finite value at node {i}")));
        }
        Ok(GridFunction { grid, values })
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let d = grid.dim();
        let values = (0..grid.len()).map(|i| f(&grid.point(i)[..d])).collect();
        GridFunction { grid, values }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        GridFunction {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn shifted(&self, c: f64) -> Self {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    /// Writes `x1[,x2[,x3]],value` rows in node order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.grid.dim();
        let header: Vec<String> = (1..=d).map(|a| format!("x{a}")).collect();
        writeln!(w, "{},value", header.join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let x = self.grid.point(i);
            for xa in &x[..d] {
                write!(w, "{xa:.16e},")?;
            }
            writeln!(w, "{v:.16e}")?;
        }
        Ok(())
    }
}

/// Partition of the grid nodes into `M^d` subcubes of side `L/M`.
#[derive(Debug, Clone)]
pub struct Subdivision {
    m: usize,
    ell: f64,
    dim: usize,
    cell_of: Vec<usize>,
    members: Vec<Vec<usize>>,
}

/// Assigns every node to a subcube by the half-open rule
/// `[lo + (j-1) l, lo + j l)` per axis, with the last interval closed.
pub fn subdivide(grid: &Grid, m: usize) -> Result<Subdivision> {
    let n = grid.n_per_side();
    if m == 0 || !n.is_multiple_of(m) {
        return Err(invalid("M", format!("{m} does not divide n_per_side = {n}")));
    }
    let d = grid.dim();
    let side = grid.bx().side();
    let ell = side / m as f64;
    let axis_cell: Vec<Vec<usize>> = (0..d)
        .map(|axis| {
            let lo = grid.bx().lower(axis);
            (0..n)
                .map(|k| {
                    let t = (grid.coord(axis, k) - lo) / ell;
                    (t.floor() as usize).min(m - 1)
                })
                .collect()
        })
        .collect();
    let cells = m.pow(d as u32);
    let mut cell_of = Vec::with_capacity(grid.len());
    let mut members = vec![Vec::with_capacity(grid.len() / cells); cells];
    for idx in 0..grid.len() {
        let mi = grid.multi_index(idx);
        let c = (0..d).fold(0, |acc, axis| acc * m + axis_cell[axis][mi[axis]]);
        cell_of.push(c);
        members[c].push(idx);
    }
    Ok(Subdivision {
        m,
        ell,
        dim: d,
        cell_of,
        members,
    })
}

impl Subdivision {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Side length of one subcube.
    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_cells(&self) -> usize {
        self.members.len()
    }

    pub fn cell_of(&self, node: usize) -> usize {
        self.cell_of[node]
    }

    pub fn members(&self, cell: usize) -> &[usize] {
        &self.members[cell]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.members
    }
}

/// A set of nodes over which means and norms are taken.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    Whole,
    Subcube(&'a Subdivision, usize),
}

impl Region<'_> {
    fn for_each(&self, f: &GridFunction, mut g: impl FnMut(f64)) {
        match *self {
            Region::Whole => f.values.iter().for_each(|&v| g(v)),
            Region::Subcube(s, c) => s.members(c).iter().for_each(|&i| g(f.values[i])),
        }
    }

    fn count(&self, f: &GridFunction) -> usize {
        match *self {
            Region::Whole => f.values.len(),
            Region::Subcube(s, c) => s.members(c).len(),
        }
    }
}

/// Midpoint rule: `h^d * sum(values)`.
pub fn integrate(f: &GridFunction) -> f64 {
    f.grid.cell_volume() * f.values.iter().sum::<f64>()
}

/// Midpoint rule restricted to a region.
pub fn integrate_over(f: &GridFunction, region: Region<'_>) -> f64 {
    let mut s = 0.0;
    region.for_each(f, |v| s += v);
    f.grid.cell_volume() * s
}

/// Arithmetic mean of the node values in `region`.
pub fn mean_over(f: &GridFunction, region: Region<'_>) -> Result<f64> {
    let count = region.count(f);
    if count == 0 {
        return Err(Error::Precondition("mean over an empty region".into()));
    }
    let mut s = 0.0;
    region.for_each(f, |v| s += v);
    Ok(s / count as f64)
}

/// Per-subcube means in subcube order.
pub fn cell_means(f: &GridFunction, sub: &Subdivision) -> Vec<f64> {
    sub.blocks()
        .iter()
        .map(|b| b.iter().map(|&i| f.values[i]).sum::<f64>() / b.len() as f64)
        .collect()
}

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid("p", format!("{p} < 1")));
    }
    Ok(())
}

/// `(h^d sum |f|^p)^(1/p)` over `region`; `p = f64::INFINITY` gives the max norm.
pub fn lp_norm(f: &GridFunction, p: f64, region: Region<'_>) -> Result<f64> {
    check_p(p)?;
    if p.is_infinite() {
        let mut m: f64 = 0.0;
        region.for_each(f, |v| m = m.max(v.abs()));
        return Ok(m);
    }
    Ok(lp_norm_pow(f, p, region)?.powf(1.0 / p))
}

/// `h^d sum |f|^p` over `region` (the p-th power of [`lp_norm`]).
pub fn lp_norm_pow(f: &GridFunction, p: f64, region: Region<'_>) -> Result<f64> {
    check_p(p)?;
    if p.is_infinite() {
        return Err(invalid("p", "no p-th power for p = inf"));
    }
    let mut s = 0.0;
    if p == 2.0 {
        region.for_each(f, |v| s += v * v);
    } else {
        region.for_each(f, |v| s += v.abs().powf(p));
    }
    Ok(f.grid.cell_volume() * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_cell_nodes() {
        let g = Grid::unit(1, 2).unwrap();
        assert_eq!(g.coord(0, 0), -0.25);
        assert_eq!(g.coord(0, 1), 0.25);
        let g2 = Grid::unit(2, 2).unwrap();
        let pts: Vec<_> = (0..4).map(|i| g2.point(i)).collect();
        assert_eq!(pts[0][..2], [-0.25, -0.25]);
        assert_eq!(pts[1][..2], [-0.25, 0.25]);
        assert_eq!(pts[3][..2], [0.25, 0.25]);
    }

    #[test]
    fn first_node_of_64() {
        let g = Grid::unit(1, 64).unwrap();
        assert_eq!(g.coord(0, 0), -0.4921875);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::unit(1, 1).is_err());
        assert!(BoxSpec::with_side(1, 0.0).is_err());
        assert!(BoxSpec::with_side(1, -1.0).is_err());
        assert!(BoxSpec::unit(4).is_err());
        assert!(BoxSpec::unit(0).is_err());
    }

    #[test]
    fn half_open_membership() {
        let g = Grid::unit(1, 4).unwrap();
        let s = subdivide(&g, 2).unwrap();
        assert_eq!(s.members(0), &[0, 1]);
        assert_eq!(s.members(1), &[2, 3]);
        let g2 = Grid::unit(2, 4).unwrap();
        let s2 = subdivide(&g2, 2).unwrap();
        assert_eq!(s2.num_cells(), 4);
        assert!(s2.blocks().iter().all(|b| b.len() == 4));
        assert!(subdivide(&Grid::unit(1, 6).unwrap(), 4).is_err());
    }

    #[test]
    fn membership_matches_integer_rule() {
        for d in 1..=2 {
            for n in [4usize, 8, 12, 16, 32, 64] {
                let g = Grid::unit(d, n).unwrap();
                for m in (1..=n).filter(|m| n % m == 0) {
                    let s = subdivide(&g, m).unwrap();
                    let b = n / m;
                    for idx in 0..g.len() {
                        let mi = g.multi_index(idx);
                        let c = (0..d).fold(0, |acc, a| acc * m + mi[a] / b);
                        assert_eq!(s.cell_of(idx), c);
                    }
                    let total: usize = s.blocks().iter().map(Vec::len).sum();
                    assert_eq!(total, g.len());
                }
            }
        }
    }

    #[test]
    fn membership_in_three_dimensions() {
        let g = Grid::unit(3, 12).unwrap();
        let s = subdivide(&g, 3).unwrap();
        assert!(s.blocks().iter().all(|b| b.len() == 64));
        for idx in (0..g.len()).step_by(37) {
            let x = g.point(idx);
            let c = s.cell_of(idx);
            let (j0, j1, j2) = (c / 9, (c / 3) % 3, c % 3);
            for (axis, j) in [j0, j1, j2].into_iter().enumerate() {
                let lo = -0.5 + j as f64 / 3.0;
                assert!(x[axis] >= lo && x[axis] < lo + 1.0 / 3.0);
            }
        }
    }

    #[test]
    fn quadrature_examples() {
        let g = Grid::unit(1, 64).unwrap();
        assert_abs_diff_eq!(integrate(&GridFunction::constant(g, 3.0)), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(integrate(&GridFunction::from_fn(g, |x| x[0])), 0.0, epsilon = 1e-15);
        let c2 = GridFunction::from_fn(g, |x| (std::f64::consts::PI * x[0]).cos().powi(2));
        assert_abs_diff_eq!(integrate(&c2), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn means_and_norms() {
        let g = Grid::unit(1, 64).unwrap();
        let s = subdivide(&g, 2).unwrap();
        let f = GridFunction::from_fn(g, |x| x[0]);
        assert_abs_diff_eq!(mean_over(&f, Region::Subcube(&s, 1)).unwrap(), 0.25, epsilon = 1e-15);
        assert_eq!(mean_over(&GridFunction::constant(g, 3.0), Region::Whole).unwrap(), 3.0);
        let one = GridFunction::constant(g, 1.0);
        assert_abs_diff_eq!(lp_norm(&one, 2.0, Region::Whole).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(lp_norm(&one, f64::INFINITY, Region::Whole).unwrap(), 1.0);
        // sum of squared centers: h^3 * sum (k+1/2-n/2)^2 = (1 - n^-2)/12
        let n = 64.0_f64;
        let expected = ((1.0 - n.powi(-2)) / 12.0).sqrt();
        assert_abs_diff_eq!(lp_norm(&f, 2.0, Region::Whole).unwrap(), expected, epsilon = 1e-14);
        assert!(lp_norm(&f, 0.5, Region::Whole).is_err());
    }

    #[test]
    fn csv_layout() {
        let g = Grid::unit(2, 2).unwrap();
        let f = GridFunction::from_fn(g, |x| x[0] + 2.0 * x[1]);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "x1,x2,value");
        assert_eq!(lines.len(), 5);
        assert!(lines[2].starts_with("-2.5000000000000000e-1,2.5000000000000000e-1,"));
    }
}
