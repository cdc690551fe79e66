//! Neumann symmetrization of radial kernels by mirror images across the faces
//! of `Lambda = [-1/2, 1/2]^d`, the diagonal identity in the cosine basis,
//! the boundary-effect function `h`, and the split of the two-body kernel.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::par;
use crate::quadrature::gauss_legendre_on;
use crate::scattering::{cutoff_pair, radial_fourier, solve_scattering, CutoffScatteringPair, PotentialSpec};
use crate::spectral::ModeIndex;

/// `(P_z x)_i = (-1)^{z_i} x_i + z_i`.
pub fn mirror_point(z: &[i32], x: &[f64]) -> Vec<f64> {
    assert_eq!(z.len(), x.len());
    z.iter()
        .zip(x)
        .map(|(&zi, &xi)| if zi % 2 == 0 { xi + zi as f64 } else { -xi + zi as f64 })
        .collect()
}

/// Sum of `f(|P_z x - y|)` over `z in {-1, 0, 1}^d` with `|P_z x - y| < support`.
/// With `skip_identity` the `z = 0` term is left out.
pub fn mirror_sum(f: impl Fn(f64) -> f64, support: f64, x: &[f64], y: &[f64], skip_identity: bool) -> f64 {
    let d = x.len();
    // Per axis: squared offset and whether the image is the identity.
    let mut cand = [[(0.0f64, false); 3]; 3];
    let mut count = [0usize; 3];
    for a in 0..d {
        for (zi, img) in [(0, x[a]), (1, 1.0 - x[a]), (-1, -1.0 - x[a])] {
            let t = img - y[a];
            if t.abs() < support {
                cand[a][count[a]] = (t * t, zi == 0);
                count[a] += 1;
            }
        }
    }
    let s2 = support * support;
    let mut total = 0.0;
    let mut idx = [0usize; 3];
    if (0..d).any(|a| count[a] == 0) {
        return 0.0;
    }
    loop {
        let mut r2 = 0.0;
        let mut identity = true;
        for a in 0..d {
            let (t2, id) = cand[a][idx[a]];
            r2 += t2;
            identity &= id;
        }
        if r2 < s2 && !(skip_identity && identity) {
            total += f(r2.sqrt());
        }
        let mut a = 0;
        loop {
            if a == d {
                return total;
            }
            idx[a] += 1;
            if idx[a] < count[a] {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

pub type Radial = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `W~(x, y) = sum_z g(P_z x - y)` for a radial `g` supported in `|x| < rho`,
/// `rho < 1`, together with `W = (Q x Q) W~ = W~ - g^(0)`.
#[derive(Clone)]
pub struct SymmetrizedKernel {
    g: Radial,
    support: f64,
    breaks: Vec<f64>,
    dim: usize,
    g_hat0: f64,
}

impl std::fmt::Debug for SymmetrizedKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymmetrizedKernel")
            .field("support", &self.support)
            .field("dim", &self.dim)
            .field("g_hat0", &self.g_hat0)
            .finish()
    }
}

pub fn symmetrized_kernel(g: Radial, support: f64, breaks: &[f64], dim: usize) -> Result<SymmetrizedKernel> {
    if !(1..=3).contains(&dim) {
        return Err(invalid("dim", format!("{dim} not in 1..=3")));
    }
    if !(support > 0.0 && support < 1.0) {
        return Err(invalid("support", format!("{support} not in (0, 1)")));
    }
    let breaks: Vec<f64> = breaks.iter().copied().filter(|&b| b > 0.0 && b < support).collect();
    let g_hat0 = radial_fourier(|r| g(r), 0.0, support, &breaks, dim);
    Ok(SymmetrizedKernel {
        g,
        support,
        breaks,
        dim,
        g_hat0,
    })
}

impl SymmetrizedKernel {
    /// Kernel generated by `omega_{l,lambda}`.
    pub fn from_pair(pair: &CutoffScatteringPair, dim: usize) -> Result<Self> {
        let p = pair.clone();
        symmetrized_kernel(Arc::new(move |r| p.omega(r)), pair.lambda(), &pair.breakpoints(), dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn g(&self, r: f64) -> f64 {
        if r.abs() >= self.support {
            0.0
        } else {
            (self.g)(r.abs())
        }
    }

    /// `g^(0) = int g`, the constant removed by `Q x Q`.
    pub fn g_hat_zero(&self) -> f64 {
        self.g_hat0
    }

    /// `g^(p)` for `|p| = p`.
    pub fn fourier(&self, p: f64) -> f64 {
        radial_fourier(|r| (self.g)(r), p, self.support, &self.breaks, self.dim)
    }

    pub fn w_tilde(&self, x: &[f64], y: &[f64]) -> f64 {
        mirror_sum(|r| (self.g)(r), self.support, x, y, false)
    }

    pub fn w(&self, x: &[f64], y: &[f64]) -> f64 {
        self.w_tilde(x, y) - self.g_hat0
    }
}

fn phi(k: u32, t: f64) -> f64 {
    if k == 0 {
        1.0
    } else {
        SQRT_2 * (PI * k as f64 * (t + 0.5)).cos()
    }
}

/// One entry `<phi_p, W~ phi_q>` against its expected value `delta_pq g^(p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityEntry {
    pub p: ModeIndex,
    pub q: ModeIndex,
    pub value: f64,
    pub expected: f64,
    pub residual: f64,
}

/// Tensor midpoint quadrature of `int int W~(x, y) phi_p(x) phi_q(y)` at
/// `order` nodes per axis.
///
/// The mirror images of the nodes land on the same lattice extended to
/// `[-3/2, 3/2]^d`, and the cosine modes extend to it unchanged, so the
/// double sum regroups exactly into a sum over lattice offsets `o`:
/// `h^{2d} sum_o g(h|o|) prod_a S_a(o_a)` with one-dimensional correlations
/// `S_a(o) = sum_k phi_{q_a}(t_k) phi_{p_a}(t_{k+o})`.
#[derive(Debug, Clone)]
pub struct IdentityQuadrature {
    kernel: SymmetrizedKernel,
    order: usize,
    reach: i64,
    offsets: Vec<([i64; 3], f64)>,
}

impl IdentityQuadrature {
    pub fn new(kernel: &SymmetrizedKernel, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(invalid("order", format!("{order} < 2")));
        }
        let h = 1.0 / order as f64;
        let reach = (kernel.support / h).ceil() as i64;
        let d = kernel.dim;
        let span = |a: usize| if a < d { -reach..=reach } else { 0..=0 };
        let mut offsets = Vec::new();
        for o0 in span(0) {
            for o1 in span(1) {
                for o2 in span(2) {
                    let r = h * ((o0 * o0 + o1 * o1 + o2 * o2) as f64).sqrt();
                    let v = kernel.g(r);
                    if v != 0.0 {
                        offsets.push(([o0, o1, o2], v));
                    }
                }
            }
        }
        Ok(IdentityQuadrature {
            kernel: kernel.clone(),
            order,
            reach,
            offsets,
        })
    }

    fn node(&self, k: i64) -> f64 {
        -0.5 + (k as f64 + 0.5) / self.order as f64
    }

    fn correlation(&self, kp: u32, kq: u32) -> Vec<f64> {
        let n = self.order as i64;
        (-self.reach..=self.reach)
            .map(|o| (0..n).map(|k| phi(kq, self.node(k)) * phi(kp, self.node(k + o))).sum())
            .collect()
    }

    /// Quadrature value of `<phi_p, W~ phi_q>`.
    pub fn value(&self, p: ModeIndex, q: ModeIndex) -> f64 {
        let d = self.kernel.dim;
        let s: Vec<Vec<f64>> = (0..3)
            .map(|a| {
                if a < d {
                    self.correlation(p.0[a], q.0[a])
                } else {
                    vec![1.0]
                }
            })
            .collect();
        let at = |a: usize, o: i64| if a < d { s[a][(o + self.reach) as usize] } else { 1.0 };
        let total: f64 = self
            .offsets
            .iter()
            .map(|(o, g)| g * at(0, o[0]) * at(1, o[1]) * at(2, o[2]))
            .sum();
        total * (self.order as f64).powi(-2 * d as i32)
    }

    pub fn entry(&self, p: ModeIndex, q: ModeIndex) -> IdentityEntry {
        let value = self.value(p, q);
        let expected = if p == q {
            self.kernel.fourier(PI * (p.k_squared() as f64).sqrt())
        } else {
            0.0
        };
        IdentityEntry {
            p,
            q,
            value,
            expected,
            residual: (value - expected).abs(),
        }
    }
}

/// `|<phi_p, W~ phi_q> - delta_pq g^(p)|` by tensor midpoint quadrature.
pub fn verify_diagonal_identity(kernel: &SymmetrizedKernel, p: ModeIndex, q: ModeIndex, order: usize) -> Result<f64> {
    Ok(IdentityQuadrature::new(kernel, order)?.entry(p, q).residual)
}

/// The same double sum as [`IdentityQuadrature::value`], evaluated node by
/// node with the kernel's own mirror sum. Cost `order^{2d}`.
pub fn diagonal_entry_brute_force(kernel: &SymmetrizedKernel, p: ModeIndex, q: ModeIndex, order: usize) -> f64 {
    let d = kernel.dim;
    let h = 1.0 / order as f64;
    let total_nodes = order.pow(d as u32);
    let point = |i: usize| -> Vec<f64> {
        let mut rest = i;
        let mut x = vec![0.0; d];
        for a in (0..d).rev() {
            x[a] = -0.5 + ((rest % order) as f64 + 0.5) * h;
            rest /= order;
        }
        x
    };
    let mode = |m: ModeIndex, x: &[f64]| -> f64 { x.iter().enumerate().map(|(a, &t)| phi(m.0[a], t)).product() };
    let rows = par::map_range(total_nodes, |i| {
        let x = point(i);
        let px = mode(p, &x);
        if px == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for j in 0..total_nodes {
            let y = point(j);
            let w = kernel.w_tilde(&x, &y);
            if w != 0.0 {
                acc += w * mode(q, &y);
            }
        }
        acc * px
    });
    rows.iter().sum::<f64>() * h.powi(2 * d as i32)
}

/// All modes with `k_a <= max_k` on the first `dim` axes.
pub fn modes_up_to(dim: usize, max_k: u32) -> Vec<ModeIndex> {
    let mut out = Vec::new();
    let r = |a: usize| if a < dim { 0..=max_k } else { 0..=0 };
    for a in r(0) {
        for b in r(1) {
            for c in r(2) {
                out.push(ModeIndex([a, b, c]));
            }
        }
    }
    out
}

/// Every `(p, q)` pair of modes with `k_a <= max_k`.
pub fn identity_full_check(kernel: &SymmetrizedKernel, max_k: u32, order: usize) -> Result<Vec<IdentityEntry>> {
    let quad = IdentityQuadrature::new(kernel, order)?;
    let modes = modes_up_to(kernel.dim, max_k);
    let pairs: Vec<(ModeIndex, ModeIndex)> = modes.iter().flat_map(|&p| modes.iter().map(move |&q| (p, q))).collect();
    Ok(par::map_slice(&pairs, |&(p, q)| quad.entry(p, q)))
}

/// `count` seeded random pairs with `k_a <= max_k`; every other pair is
/// diagonal so both halves of the identity are exercised.
pub fn identity_spot_check(
    kernel: &SymmetrizedKernel,
    max_k: u32,
    count: usize,
    order: usize,
    seed: u64,
) -> Result<Vec<IdentityEntry>> {
    let quad = IdentityQuadrature::new(kernel, order)?;
    let d = kernel.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let mut k = [0u32; 3];
        for v in k.iter_mut().take(d) {
            *v = rng.random_range(0..=max_k);
        }
        ModeIndex(k)
    };
    let pairs: Vec<(ModeIndex, ModeIndex)> = (0..count)
        .map(|i| {
            let p = draw(&mut rng);
            let q = if i % 2 == 0 { p } else { draw(&mut rng) };
            (p, q)
        })
        .collect();
    Ok(par::map_slice(&pairs, |&(p, q)| quad.entry(p, q)))
}

/// `W~(x, y) - W(x, y)` with `W = (Q x Q) W~` evaluated through its marginals
/// by midpoint quadrature at `order` nodes per axis; to be compared with
/// `g^(0)`.
pub fn zero_mode_by_quadrature(kernel: &SymmetrizedKernel, x: &[f64], y: &[f64], order: usize) -> f64 {
    let d = kernel.dim;
    let h = 1.0 / order as f64;
    let total = order.pow(d as u32);
    let point = |i: usize| -> Vec<f64> {
        let mut rest = i;
        let mut z = vec![0.0; d];
        for a in (0..d).rev() {
            z[a] = -0.5 + ((rest % order) as f64 + 0.5) * h;
            rest /= order;
        }
        z
    };
    let vol = h.powi(d as i32);
    let marginal = |y: &[f64]| -> f64 { (0..total).map(|i| kernel.w_tilde(&point(i), y)).sum::<f64>() * vol };
    let all: f64 = par::map_range(total, |j| marginal(&point(j))).iter().sum::<f64>() * vol;
    marginal(x) + marginal(y) - all
}

/// `max |W~(x, y)| (1 + l |x - y|)` over pairs with `|x - y| <= lambda`, and
/// whether `W~` vanished on every pair with `|x - y| > lambda`.
pub fn kernel_decay_constant(kernel: &SymmetrizedKernel, ell: f64, pairs: &[([f64; 3], [f64; 3])]) -> (f64, bool) {
    let d = kernel.dim;
    let mut worst: f64 = 0.0;
    let mut vanishes = true;
    for (x, y) in pairs {
        let r = dist(&x[..d], &y[..d]);
        let w = kernel.w_tilde(&x[..d], &y[..d]);
        if r <= kernel.support {
            worst = worst.max(w.abs() * (1.0 + ell * r));
        } else if w != 0.0 {
            vanishes = false;
        }
    }
    (worst, vanishes)
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Uniform random pairs in `Lambda = [-1/2, 1/2]^3`.
pub fn uniform_pairs(count: usize, seed: u64) -> Vec<([f64; 3], [f64; 3])> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pt = |rng: &mut ChaCha8Rng| {
        [
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
        ]
    };
    (0..count).map(|_| (pt(&mut rng), pt(&mut rng))).collect()
}

/// Random `x` in `Lambda` and `y = x + r u` with `r < reach`, `u` a random unit
/// vector, kept only when `y` stays in `Lambda`.
pub fn near_diagonal_pairs(count: usize, reach: f64, seed: u64) -> Vec<([f64; 3], [f64; 3])> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: [f64; 3] = [
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
        ];
        let cos_t: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..2.0 * PI);
        let r = reach * rng.random::<f64>();
        let sin_t = (1.0 - cos_t * cos_t).sqrt();
        let y = [
            x[0] + r * sin_t * phi.cos(),
            x[1] + r * sin_t * phi.sin(),
            x[2] + r * cos_t,
        ];
        if y.iter().all(|v| v.abs() < 0.5) {
            out.push((x, y));
        }
    }
    out
}

/// Resolution of the boundary-effect quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryOptions {
    /// Gauss nodes in `r` on `[0, R/l]`, per smooth piece of `V`.
    pub radial_nodes: usize,
    /// Gauss nodes in `cos(theta)`.
    pub polar_nodes: usize,
    /// Equispaced nodes in the azimuth.
    pub azimuth_nodes: usize,
    /// Width of the outermost layer of `x` cells, as a fraction of `R/l`.
    pub first_width: f64,
    /// Geometric growth of the layer widths towards the center.
    pub growth: f64,
    /// Largest layer width.
    pub max_width: f64,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        BoundaryOptions {
            radial_nodes: 16,
            polar_nodes: 16,
            azimuth_nodes: 16,
            first_width: 0.125,
            growth: 1.25,
            max_width: 1.0 / 64.0,
        }
    }
}

/// Evaluator of `h(x) = int_Lambda n V_l(x - y) F(x, y) dy - 8 pi a0 n / l`
/// with `F = 1 - W` on `Lambda = [-1/2, 1/2]^3`. The `y` integral uses a
/// product rule in spherical coordinates centered at `x` (Gauss in `r` and
/// `cos(theta)`, trapezoid in the azimuth), which resolves the support of
/// `V_l` exactly instead of cutting it with a Cartesian subgrid.
#[derive(Debug, Clone)]
pub struct BoundaryField {
    pair: CutoffScatteringPair,
    kernel: SymmetrizedKernel,
    n: f64,
    target: f64,
    rule: Vec<([f64; 3], f64)>,
    interior_depth: f64,
    interior: f64,
}

impl BoundaryField {
    pub fn new(n: f64, pair: &CutoffScatteringPair, opts: &BoundaryOptions) -> Result<Self> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(invalid("n", format!("{n} must be positive")));
        }
        if opts.radial_nodes < 4 || opts.polar_nodes < 4 || opts.azimuth_nodes < 4 {
            return Err(Error::Precondition(
                "unresolved potential support: need at least 4 nodes per direction".into(),
            ));
        }
        if !(opts.first_width > 0.0 && opts.first_width < 0.5) {
            return Err(Error::Precondition(format!(
                "unresolved potential support: outer layer width {} R/l must be below R/(2l)",
                opts.first_width
            )));
        }
        if !(opts.growth >= 1.0 && opts.max_width > 0.0) {
            return Err(invalid("growth", "layer widths must be positive and nondecreasing"));
        }
        let kernel = SymmetrizedKernel::from_pair(pair, 3)?;
        let range = pair.scaled_range();
        let mut cuts: Vec<f64> = pair
            .solution()
            .potential()
            .breakpoints()
            .iter()
            .map(|b| b / pair.ell())
            .filter(|&b| b > 0.0 && b < range)
            .collect();
        cuts.insert(0, 0.0);
        cuts.push(range);
        let (ct, wt) = gauss_legendre_on(opts.polar_nodes, -1.0, 1.0);
        let dphi = 2.0 * PI / opts.azimuth_nodes as f64;
        let mut rule = Vec::new();
        for seg in cuts.windows(2) {
            let (rs, wr) = gauss_legendre_on(opts.radial_nodes, seg[0], seg[1]);
            for (&r, &w_r) in rs.iter().zip(&wr) {
                let v = n * pair.v_l(r);
                if v == 0.0 {
                    continue;
                }
                for (&c, &w_c) in ct.iter().zip(&wt) {
                    let s = (1.0 - c * c).sqrt();
                    for j in 0..opts.azimuth_nodes {
                        let ph = dphi * (j as f64 + 0.5);
                        rule.push((
                            [r * s * ph.cos(), r * s * ph.sin(), r * c],
                            v * r * r * w_r * w_c * dphi,
                        ));
                    }
                }
            }
        }
        let target = 8.0 * PI * pair.scaled_a0() * n;
        let mut field = BoundaryField {
            pair: pair.clone(),
            kernel,
            n,
            target,
            rule,
            interior_depth: 0.5 * (pair.lambda() + range),
            interior: 0.0,
        };
        field.interior = field.raw([0.0; 3]) - target;
        Ok(field)
    }

    /// `int_Lambda n V_l(x - y) F(x, y) dy`.
    pub fn raw(&self, x: [f64; 3]) -> f64 {
        let g0 = self.kernel.g_hat_zero();
        let mut acc = 0.0;
        for (off, w) in &self.rule {
            let y = [x[0] + off[0], x[1] + off[1], x[2] + off[2]];
            if y.iter().any(|v| v.abs() > 0.5) {
                continue;
            }
            acc += w * (1.0 - self.kernel.w_tilde(&x, &y) + g0);
        }
        acc
    }

    /// `h(x)`. Points at depth at least `(lambda + R/l)/2` from every face see
    /// neither the boundary nor a mirror image and share the central value.
    pub fn h(&self, x: [f64; 3]) -> f64 {
        if x.iter().all(|v| 0.5 - v.abs() >= self.interior_depth) {
            self.interior
        } else {
            self.raw(x) - self.target
        }
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    /// `8 pi a0 n / l`.
    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn interior_value(&self) -> f64 {
        self.interior
    }

    pub fn pair(&self) -> &CutoffScatteringPair {
        &self.pair
    }
}

/// `h` sampled on a layered grid over `Lambda` with quadrature weights, and
/// its norms.
#[derive(Debug, Clone)]
pub struct BoundaryEffect {
    pub n: f64,
    pub ell: f64,
    pub lambda: f64,
    pub a0: f64,
    /// `8 pi a0 n / l`.
    pub target: f64,
    pub interior_value: f64,
    /// `(weight, h)` pairs; the weights sum to `|Lambda| = 1`.
    pub samples: Vec<(f64, f64)>,
}

impl BoundaryEffect {
    /// `||h||_p`; `p = INFINITY` gives the largest sampled `|h|`.
    pub fn norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.samples.iter().map(|s| s.1.abs()).fold(0.0, f64::max);
        }
        self.samples
            .iter()
            .map(|(w, v)| w * v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }

    pub fn l1(&self) -> f64 {
        self.norm(1.0)
    }

    /// `int_Lambda h`.
    pub fn integral(&self) -> f64 {
        self.samples.iter().map(|(w, v)| w * v).sum()
    }

    /// `int int n V_l F`, reassembled from the raw `y` integrals.
    pub fn pair_integral(&self) -> f64 {
        self.samples.iter().map(|(w, v)| w * (v + self.target)).sum()
    }
}

/// Layer cells `(midpoint depth, width)` covering `[0, 1/2]`, thinnest at the
/// face.
fn layers(first: f64, growth: f64, max_width: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut lo = 0.0;
    let mut w = first.min(max_width);
    while lo < 0.5 {
        let hi = (lo + w).min(0.5);
        if 0.5 - hi < 0.25 * w {
            out.push((0.5 * (lo + 0.5), 0.5 - lo));
            break;
        }
        out.push((0.5 * (lo + hi), hi - lo));
        lo = hi;
        w = (w * growth).min(max_width);
    }
    out
}

/// `h` for `V` scaled to `V_l` at density `n`. `x` runs over a tensor grid of
/// layers graded towards the faces; the cube symmetry reduces it to sorted
/// depth triples in one octant.
pub fn boundary_effect(
    n: f64,
    ell: f64,
    lambda: f64,
    v: &PotentialSpec,
    opts: &BoundaryOptions,
) -> Result<BoundaryEffect> {
    let sol = solve_scattering(v, 2.0 * v.range(), 4096)?;
    let pair = cutoff_pair(&sol, ell, lambda)?;
    let field = BoundaryField::new(n, &pair, opts)?;
    let cells = layers(opts.first_width * pair.scaled_range(), opts.growth, opts.max_width);
    let mut triples = Vec::new();
    for i in 0..cells.len() {
        for j in i..cells.len() {
            for k in j..cells.len() {
                let mult = match (i == j, j == k) {
                    (true, true) => 1.0,
                    (false, false) => 6.0,
                    _ => 3.0,
                };
                let w = 8.0 * mult * cells[i].1 * cells[j].1 * cells[k].1;
                triples.push((w, [0.5 - cells[i].0, 0.5 - cells[j].0, 0.5 - cells[k].0]));
            }
        }
    }
    let samples = par::map_slice(&triples, |(w, x)| (*w, field.h(*x)));
    Ok(BoundaryEffect {
        n,
        ell,
        lambda,
        a0: sol.a0(),
        target: field.target(),
        interior_value: field.interior_value(),
        samples,
    })
}

/// Pieces of the two-body kernel `K~ = n V_l (1 - W)` and its split
/// `K_m + 2 Q_eps + 2 Q_bc + n g^(0) V_l`:
///
/// - `K_m = sum_p 2 n |p|^2 omega^_{l,lambda}(p) phi_p(x) phi_p(y)`, the mirror
///   sum of `n (-2 Laplacian) omega_{l,lambda}`, truncated to `k_a <= cutoff`;
/// - `2 Q_eps = sum_z n eps_{l,lambda}(P_z x - y)`;
/// - `2 Q_bc = n sum_{z != 0} [-(V_l (1 - omega_l))(P_z x - y) - V_l(x - y) omega_{l,lambda}(P_z x - y)]`.
#[derive(Debug, Clone)]
pub struct KernelSplit {
    pair: CutoffScatteringPair,
    kernel: SymmetrizedKernel,
    n: f64,
    cutoff: u32,
    /// `2 n |p|^2 omega^(p)` indexed by `|k|^2`.
    mode_weight: Vec<f64>,
}

impl KernelSplit {
    pub fn new(n: f64, pair: &CutoffScatteringPair, cutoff: u32) -> Result<Self> {
        if cutoff == 0 {
            return Err(invalid("cutoff", "must be positive"));
        }
        let kernel = SymmetrizedKernel::from_pair(pair, 3)?;
        let c = cutoff as usize;
        let mut seen = vec![false; 3 * c * c + 1];
        for a in 0..=c {
            for b in 0..=c {
                for d in 0..=c {
                    seen[a * a + b * b + d * d] = true;
                }
            }
        }
        let needed: Vec<usize> = (0..seen.len()).filter(|&k| seen[k]).collect();
        let values = par::map_slice(&needed, |&k2| {
            let p2 = PI * PI * k2 as f64;
            2.0 * n * p2 * kernel.fourier(p2.sqrt())
        });
        let mut mode_weight = vec![0.0; seen.len()];
        for (k2, v) in needed.iter().zip(values) {
            mode_weight[*k2] = v;
        }
        Ok(KernelSplit {
            pair: pair.clone(),
            kernel,
            n,
            cutoff,
            mode_weight,
        })
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    /// `n V_l(x - y) (1 - W(x, y))`.
    pub fn k_tilde(&self, x: &[f64; 3], y: &[f64; 3]) -> f64 {
        let v = self.pair.v_l(dist(x, y));
        if v == 0.0 {
            return 0.0;
        }
        self.n * v * (1.0 - self.kernel.w(x, y))
    }

    pub fn k_m(&self, x: &[f64; 3], y: &[f64; 3]) -> f64 {
        let c = self.cutoff as usize;
        let axis = |a: usize| -> Vec<f64> { (0..=c).map(|k| phi(k as u32, x[a]) * phi(k as u32, y[a])).collect() };
        let (c0, c1, c2) = (axis(0), axis(1), axis(2));
        let mut total = 0.0;
        for (a, u0) in c0.iter().enumerate() {
            for (b, u1) in c1.iter().enumerate() {
                let u = u0 * u1;
                let base = a * a + b * b;
                let mut s = 0.0;
                for (d, u2) in c2.iter().enumerate() {
                    s += self.mode_weight[base + d * d] * u2;
                }
                total += u * s;
            }
        }
        total
    }

    /// `2 Q_eps(x, y)`.
    pub fn q_eps(&self, x: &[f64; 3], y: &[f64; 3]) -> f64 {
        self.n * mirror_sum(|r| self.pair.eps(r), self.pair.lambda(), x, y, false)
    }

    /// `2 Q_bc(x, y)`.
    pub fn q_bc(&self, x: &[f64; 3], y: &[f64; 3]) -> f64 {
        let p = &self.pair;
        let range = p.scaled_range();
        let vf = mirror_sum(|r| p.v_l(r) * (1.0 - p.omega_l(r)), range, x, y, true);
        let vxy = p.v_l(dist(x, y));
        let vw = if vxy == 0.0 {
            0.0
        } else {
            vxy * mirror_sum(|r| p.omega(r), p.lambda(), x, y, true)
        };
        -self.n * (vf + vw)
    }

    /// `n g^(0) V_l(x - y)`.
    pub fn zero_mode_term(&self, x: &[f64; 3], y: &[f64; 3]) -> f64 {
        self.n * self.kernel.g_hat_zero() * self.pair.v_l(dist(x, y))
    }

    /// `K~ - (K_m + 2 Q_eps + 2 Q_bc + n g^(0) V_l)` at one pair.
    pub fn residual(&self, x: &[f64; 3], y: &[f64; 3]) -> f64 {
        self.k_tilde(x, y) - (self.k_m(x, y) + self.q_eps(x, y) + self.q_bc(x, y) + self.zero_mode_term(x, y))
    }
}

/// Largest split residual over sample pairs, with the largest `|K~|` on the
/// same pairs for scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitResidual {
    pub cutoff: u32,
    pub residual: f64,
    pub max_kernel: f64,
}

impl SplitResidual {
    pub fn relative(&self) -> f64 {
        if self.max_kernel > 0.0 {
            self.residual / self.max_kernel
        } else {
            self.residual
        }
    }
}

pub fn kernel_split_residual(
    n: f64,
    pair: &CutoffScatteringPair,
    samples: &[([f64; 3], [f64; 3])],
    cutoff: u32,
) -> Result<SplitResidual> {
    let split = KernelSplit::new(n, pair, cutoff)?;
    let rows = par::map_slice(samples, |(x, y)| {
        (split.residual(x, y).abs(), split.k_tilde(x, y).abs())
    });
    Ok(SplitResidual {
        cutoff,
        residual: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        max_kernel: rows.iter().map(|r| r.1).fold(0.0, f64::max),
    })
}

/// One line of the symmetrization CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizationRow {
    pub check: String,
    pub ell: f64,
    pub lambda: f64,
    pub n: f64,
    pub value: f64,
    pub bound_shape: f64,
    pub ratio: f64,
}

pub fn write_csv<W: Write>(rows: &[SymmetrizationRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "check,ell,lambda,n,value,bound_shape,ratio")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.check, r.ell, r.lambda, r.n, r.value, r.bound_shape, r.ratio
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirror_formula() {
        assert_eq!(mirror_point(&[0, 0], &[0.1, -0.2]), vec![0.1, -0.2]);
        assert!((mirror_point(&[1], &[0.3])[0] - 0.7).abs() < 1e-15);
        assert!((mirror_point(&[-1], &[0.3])[0] + 1.3).abs() < 1e-15);
    }

    #[test]
    fn layers_cover_half_interval() {
        let c = layers(0.002, 1.25, 1.0 / 64.0);
        let total: f64 = c.iter().map(|x| x.1).sum();
        assert!((total - 0.5).abs() < 1e-14);
        assert!(c[0].1 <= 0.002 + 1e-15);
        assert!(c.iter().all(|x| x.1 <= 1.0 / 64.0 * 1.25 + 1e-15));
    }

    #[test]
    fn mirror_sum_counts_images() {
        // constant 1 on the support: number of images within reach
        let one = |_: f64| 1.0;
        assert_eq!(mirror_sum(one, 0.3, &[0.0], &[0.0], false), 1.0);
        // x and y at the face see their reflection at distance 0
        assert_eq!(mirror_sum(one, 0.3, &[0.5], &[0.5], false), 2.0);
        assert_eq!(mirror_sum(one, 0.3, &[0.5, 0.5], &[0.5, 0.5], false), 4.0);
        assert_eq!(mirror_sum(one, 0.3, &[0.5, 0.5], &[0.5, 0.5], true), 3.0);
    }
}
