//! One-dimensional quadrature: adaptive Gauss-Kronrod (7, 15), Gauss-Legendre
//! rules of arbitrary order, and composite Simpson on uniform samples.

use std::f64::consts::PI;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and |Kronrod - Gauss| on `[a, b]`.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive integral of `f` over `[a, b]` with breakpoints at `breaks`.
/// Stops when the summed error estimate is below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate_adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut pts: Vec<f64> = std::iter::once(lo)
        .chain(breaks.iter().copied().filter(|&x| x > lo && x < hi))
        .chain(std::iter::once(hi))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut segs: Vec<(f64, f64, f64, f64)> = pts
        .windows(2)
        .map(|w| {
            let (v, e) = gk15(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    for _ in 0..2000 {
        let total: f64 = segs.iter().map(|s| s.2).sum();
        let err: f64 = segs.iter().map(|s| s.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (i, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (a0, b0, _, _) = segs[i];
        let mid = 0.5 * (a0 + b0);
        if mid <= a0 || mid >= b0 {
            break;
        }
        let (v1, e1) = gk15(&f, a0, mid);
        let (v2, e2) = gk15(&f, mid, b0);
        segs[i] = (a0, mid, v1, e1);
        segs.push((mid, b0, v2, e2));
    }
    segs.sort_by(|x, y| x.0.total_cmp(&y.0));
    sign * segs.iter().map(|s| s.2).sum::<f64>()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton on the
/// three-term recurrence).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    (x.iter().map(|t| c + h * t).collect(), w.iter().map(|v| h * v).collect())
}

/// Composite Simpson on uniformly spaced samples (odd count).
pub fn simpson(samples: &[f64], step: f64) -> f64 {
    let n = samples.len();
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd number of samples >= 3");
    let mut s = samples[0] + samples[n - 1];
    for (i, v) in samples.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * v;
    }
    s * step / 3.0
}

/// Bessel `J_0(x)` by the periodic trapezoid rule on
/// `J_0(x) = (1/pi) int_0^pi cos(x sin t) dt`, which converges
/// geometrically once the node count exceeds `|x|`.
pub fn bessel_j0(x: f64) -> f64 {
    let n = (x.abs().ceil() as usize + 32).max(32);
    let mut s = 0.0;
    for k in 0..n {
        let t = PI * (k as f64 + 0.5) / n as f64;
        s += (x * t.sin()).cos();
    }
    s / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_smooth_and_kinked() {
        let v = integrate_adaptive(|x: f64| x.sin(), 0.0, PI, &[], 1e-14, 1e-14);
        assert!((v - 2.0).abs() < 1e-13);
        let v = integrate_adaptive(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3], 1e-14, 1e-14);
        assert!((v - (0.045 + 0.245)).abs() < 1e-14);
        let v = integrate_adaptive(|x: f64| x.sqrt(), 0.0, 1.0, &[], 1e-12, 1e-12);
        assert!((v - 2.0 / 3.0).abs() < 1e-10);
        let r = integrate_adaptive(|x: f64| x, 1.0, 0.0, &[], 1e-14, 1e-14);
        assert!((r + 0.5).abs() < 1e-15);
    }

    #[test]
    fn legendre_rules_are_exact_for_polynomials() {
        for n in [1, 2, 5, 16, 40, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..(2 * n).min(30) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let q: f64 = x.iter().zip(&w).map(|(t, wt)| wt * t.powi(deg as i32)).sum();
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
        let (x, w) = gauss_legendre_on(8, 0.0, 2.0);
        let q: f64 = x.iter().zip(&w).map(|(t, wt)| wt * t * t).sum();
        assert!((q - 8.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn simpson_exact_for_cubics() {
        let h = 0.1;
        let s: Vec<f64> = (0..11).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson(&s, h) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn j0_values() {
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j0(2.404_825_557_695_773).abs()) < 1e-14);
        assert!((bessel_j0(10.0) + 0.245_935_764_451_348_3).abs() < 1e-14);
        assert!((bessel_j0(100.0) - 0.019_985_850_304_223_12).abs() < 1e-13);
    }
}
