//! Symmetric quadratic forms on R^n, stored as linear combinations of a few
//! cheap atoms so that composites like `eps * A + C * sum Q_i - Q` never need
//! to be assembled explicitly.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::par;

/// Compressed sparse row matrix. Assumed symmetric by its constructors.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    /// Builds from per-row `(col, value)` lists; duplicate columns are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                assert!(c < n, "column {c} out of range for {n}x{n} matrix");
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        Csr {
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    /// `out += c * A v`.
    fn apply_add(&self, c: f64, v: &[f64], out: &mut [f64]) {
        let body = |off: usize, chunk: &mut [f64]| {
            for (j, o) in chunk.iter_mut().enumerate() {
                let i = off + j;
                let mut s = 0.0;
                for k in self.indptr[i]..self.indptr[i + 1] {
                    s += self.values[k] * v[self.indices[k]];
                }
                *o += c * s;
            }
        };
        if self.n >= 1 << 14 {
            par::fill_chunks(out, 4096, body);
        } else {
            body(0, out);
        }
    }

    fn max_abs_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Building blocks of a [`QuadraticForm`].
#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    Sparse(Csr),
    Identity,
    /// Diagonal projector onto the listed nodes.
    Restrict(Vec<usize>),
    /// `sum_b |b|^-1 1_b 1_b^T`: the orthogonal projector onto functions
    /// constant on each block (zero outside the blocks).
    BlockMean(Vec<Vec<usize>>),
}

impl Atom {
    fn apply_add(&self, c: f64, v: &[f64], out: &mut [f64]) {
        match self {
            Atom::Sparse(m) => m.apply_add(c, v, out),
            Atom::Identity => out.iter_mut().zip(v).for_each(|(o, x)| *o += c * x),
            Atom::Restrict(nodes) => nodes.iter().for_each(|&i| out[i] += c * v[i]),
            Atom::BlockMean(blocks) => {
                for b in blocks {
                    let mean = b.iter().map(|&i| v[i]).sum::<f64>() / b.len() as f64;
                    let cm = c * mean;
                    b.iter().for_each(|&i| out[i] += cm);
                }
            }
        }
    }

    fn norm_bound(&self) -> f64 {
        match self {
            Atom::Sparse(m) => m.max_abs_row_sum(),
            _ => 1.0,
        }
    }

    fn add_dense(&self, c: f64, m: &mut DMatrix<f64>) {
        match self {
            Atom::Sparse(a) => {
                for i in 0..a.n {
                    for (j, v) in a.row(i) {
                        m[(i, j)] += c * v;
                    }
                }
            }
            Atom::Identity => (0..m.nrows()).for_each(|i| m[(i, i)] += c),
            Atom::Restrict(nodes) => nodes.iter().for_each(|&i| m[(i, i)] += c),
            Atom::BlockMean(blocks) => {
                for b in blocks {
                    let w = c / b.len() as f64;
                    for &i in b {
                        for &j in b {
                            m[(i, j)] += w;
                        }
                    }
                }
            }
        }
    }
}

/// A symmetric form `sum_k c_k A_k` acting on vectors of length `n`.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    n: usize,
    terms: Vec<(f64, Arc<Atom>)>,
}

impl QuadraticForm {
    pub fn zero(n: usize) -> Self {
        QuadraticForm { n, terms: vec![] }
    }

    pub fn from_atom(n: usize, atom: Atom) -> Self {
        QuadraticForm {
            n,
            terms: vec![(1.0, Arc::new(atom))],
        }
    }

    pub fn sparse(m: Csr) -> Self {
        Self::from_atom(m.n, Atom::Sparse(m))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_atom(n, Atom::Identity)
    }

    /// `Q_A = 1_A - P_A` for a node set `A`.
    pub fn projector_q(n: usize, nodes: &[usize]) -> Self {
        let mut f = Self::from_atom(n, Atom::Restrict(nodes.to_vec()));
        f.terms.push((-1.0, Arc::new(Atom::BlockMean(vec![nodes.to_vec()]))));
        f
    }

    /// `Q_Lambda = 1 - P_Lambda` on all `n` nodes.
    pub fn projector_q_whole(n: usize) -> Self {
        let mut f = Self::identity(n);
        f.terms.push((-1.0, Arc::new(Atom::BlockMean(vec![(0..n).collect()]))));
        f
    }

    /// `sum_i Q_{A_i}` for a partition `{A_i}` of all `n` nodes.
    pub fn partition_q_sum(n: usize, blocks: &[Vec<usize>]) -> Self {
        let mut f = Self::identity(n);
        f.terms.push((-1.0, Arc::new(Atom::BlockMean(blocks.to_vec()))));
        f
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(f64, Arc<Atom>)] {
        &self.terms
    }

    pub fn scaled(&self, c: f64) -> Self {
        QuadraticForm {
            n: self.n,
            terms: self.terms.iter().map(|(k, a)| (c * k, a.clone())).collect(),
        }
    }

    /// `self + c * other`; atoms are shared, not copied.
    pub fn add_scaled(&self, c: f64, other: &QuadraticForm) -> Self {
        assert_eq!(self.n, other.n, "form dimensions differ");
        let mut terms = self.terms.clone();
        for (k, a) in &other.terms {
            if let Some(t) = terms.iter_mut().find(|(_, b)| Arc::ptr_eq(a, b)) {
                t.0 += c * k;
            } else {
                terms.push((c * k, a.clone()));
            }
        }
        QuadraticForm { n: self.n, terms }
    }

    pub fn plus(&self, other: &QuadraticForm) -> Self {
        self.add_scaled(1.0, other)
    }

    pub fn minus(&self, other: &QuadraticForm) -> Self {
        self.add_scaled(-1.0, other)
    }

    /// `out = A v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.n);
        assert_eq!(out.len(), self.n);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (c, a) in &self.terms {
            if *c != 0.0 {
                a.apply_add(*c, v, out);
            }
        }
    }

    pub fn apply_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply(v, &mut out);
        out
    }

    /// `<v, A v>` (Euclidean).
    pub fn quad(&self, v: &[f64]) -> f64 {
        dot(v, &self.apply_vec(v))
    }

    /// Upper bound on the spectral norm (sum of atom bounds).
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|(c, a)| c.abs() * a.norm_bound()).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (c, a) in &self.terms {
            a.add_dense(*c, &mut m);
        }
        m
    }

    /// Nonzero entries in row-major order, summed over atoms.
    pub fn to_coo(&self) -> Vec<(usize, usize, f64)> {
        let mut rows: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); self.n];
        for (c, a) in &self.terms {
            match a.as_ref() {
                Atom::Sparse(m) => {
                    for (i, r) in rows.iter_mut().enumerate() {
                        for (j, v) in m.row(i) {
                            *r.entry(j).or_default() += c * v;
                        }
                    }
                }
                Atom::Identity => rows
                    .iter_mut()
                    .enumerate()
                    .for_each(|(i, r)| *r.entry(i).or_default() += c),
                Atom::Restrict(nodes) => nodes.iter().for_each(|&i| *rows[i].entry(i).or_default() += c),
                Atom::BlockMean(blocks) => {
                    for b in blocks {
                        let w = c / b.len() as f64;
                        for &i in b {
                            for &j in b {
                                *rows[i].entry(j).or_default() += w;
                            }
                        }
                    }
                }
            }
        }
        rows.into_iter()
            .enumerate()
            .flat_map(|(i, r)| r.into_iter().filter(|&(_, v)| v != 0.0).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    /// Writes `row col value` lines with zero-based indices.
    pub fn write_coo<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for (i, j, v) in self.to_coo() {
            writeln!(w, "{i} {j} {v:.16e}")?;
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += c * x`.
pub fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += c * xi);
}
