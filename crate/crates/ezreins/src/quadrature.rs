//! Adaptive Gauss-Kronrod integration, Chebyshev interpolants and
//! Gauss-Hermite rules.

use crate::error::{Error, Result};

/// Error targets for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_subdivisions: 400,
        }
    }
}

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

fn kronrod<const N: usize>(f: &mut impl FnMut(f64) -> [f64; N], lo: f64, hi: f64) -> ([f64; N], f64) {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    let fc = f(centre);
    for n in 0..N {
        k[n] = WGK[10] * fc[n];
    }
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        for n in 0..N {
            let s = f1[n] + f2[n];
            k[n] += WGK[j] * s;
            if j % 2 == 1 {
                g[n] += WG[j / 2] * s;
            }
        }
    }
    let mut err: f64 = 0.0;
    for n in 0..N {
        k[n] *= half;
        g[n] *= half;
        err = err.max((k[n] - g[n]).abs());
    }
    (k, err)
}

/// Integrates a vector-valued function; all components share nodes.
///
/// Refinement bisects the interval with the largest error estimate until
/// the total estimate is below `max(abs_tol, rel_tol * max|I_n|)`.
pub fn integrate_n<const N: usize>(
    mut f: impl FnMut(f64) -> [f64; N],
    lo: f64,
    hi: f64,
    cfg: &QuadratureConfig,
) -> Result<[f64; N]> {
    if lo == hi {
        return Ok([0.0; N]);
    }
    let mut pieces: Vec<(f64, f64, [f64; N], f64)> = Vec::with_capacity(16);
    let (v, e) = kronrod(&mut f, lo, hi);
    pieces.push((lo, hi, v, e));
    loop {
        let mut total = [0.0; N];
        let mut err = 0.0;
        for p in &pieces {
            for n in 0..N {
                total[n] += p.2[n];
            }
            err += p.3;
        }
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if err <= cfg.abs_tol.max(cfg.rel_tol * scale) {
            return Ok(total);
        }
        if pieces.len() >= cfg.max_subdivisions {
            return Err(Error::QuadratureBudgetExceeded {
                lo,
                hi,
                estimate: err,
                subdivisions: pieces.len(),
            });
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .3.total_cmp(&b.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (a, b, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (a + b);
        if !(a < mid && mid < b) {
            return Err(Error::QuadratureBudgetExceeded {
                lo,
                hi,
                estimate: err,
                subdivisions: pieces.len() + 1,
            });
        }
        let (v1, e1) = kronrod(&mut f, a, mid);
        let (v2, e2) = kronrod(&mut f, mid, b);
        pieces.push((a, mid, v1, e1));
        pieces.push((mid, b, v2, e2));
    }
}

/// Integrates a scalar function over `[lo, hi]`.
pub fn integrate(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, cfg: &QuadratureConfig) -> Result<f64> {
    integrate_n(|x| [f(x)], lo, hi, cfg).map(|v| v[0])
}

/// Chebyshev series on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chebyshev {
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Interpolates `f` at `n` Chebyshev-Gauss nodes.
    pub fn interpolate(f: &mut impl FnMut(f64) -> f64, lo: f64, hi: f64, n: usize) -> Chebyshev {
        let values: Vec<f64> = (0..n)
            .map(|j| {
                let x = (std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos();
                f(0.5 * (hi + lo) + 0.5 * (hi - lo) * x)
            })
            .collect();
        let coeffs = (0..n)
            .map(|k| {
                let s: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / n as f64).cos())
                    .sum();
                if k == 0 {
                    s / n as f64
                } else {
                    2.0 * s / n as f64
                }
            })
            .collect();
        Chebyshev { lo, hi, coeffs }
    }

    /// Doubles the node count until the trailing coefficients fall below
    /// `tol` relative to the largest coefficient (capped at 1024 nodes).
    pub fn fit(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Chebyshev {
        let mut n = 16;
        loop {
            let cheb = Chebyshev::interpolate(&mut f, lo, hi, n);
            let scale = cheb.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1e-300);
            let tail = cheb.coeffs[n - 4..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if tail <= tol * scale || n >= 1024 {
                return cheb.trimmed(tol * scale);
            }
            n *= 2;
        }
    }

    fn trimmed(mut self, cut: f64) -> Chebyshev {
        while self.coeffs.len() > 1 && self.coeffs.last().is_some_and(|c| c.abs() <= cut * 1e-3) {
            self.coeffs.pop();
        }
        self
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Clenshaw evaluation; arguments are clamped to the domain.
    pub fn eval(&self, x: f64) -> f64 {
        let u = if self.hi > self.lo {
            ((2.0 * x - self.lo - self.hi) / (self.hi - self.lo)).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * u * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        u * b1 - b2 + self.coeffs[0]
    }

    /// Antiderivative vanishing at the left end of the domain.
    pub fn antiderivative(&self) -> Chebyshev {
        let n = self.coeffs.len();
        let mut out = vec![0.0; n + 1];
        let half = 0.5 * (self.hi - self.lo);
        for (k, &c) in self.coeffs.iter().enumerate() {
            match k {
                0 => out[1] += c,
                1 => out[2] += 0.25 * c,
                _ => {
                    out[k + 1] += c / (2.0 * (k as f64 + 1.0));
                    out[k - 1] -= c / (2.0 * (k as f64 - 1.0));
                }
            }
        }
        for c in &mut out {
            *c *= half;
        }
        // T_k(-1) = (-1)^k
        let at_lo: f64 = out
            .iter()
            .enumerate()
            .map(|(k, c)| if k % 2 == 0 { *c } else { -*c })
            .sum();
        out[0] -= at_lo;
        Chebyshev {
            lo: self.lo,
            hi: self.hi,
            coeffs: out,
        }
    }
}

/// Gauss-Hermite nodes and weights for the weight `exp(-x^2)`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let half = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..half {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Expectation of `f(Z)` for `Z ~ Normal(mean, sd^2)` by an `n`-node rule.
pub fn normal_expectation(mut f: impl FnMut(f64) -> f64, mean: f64, sd: f64, n: usize) -> f64 {
    let (x, w) = gauss_hermite(n);
    let norm = std::f64::consts::PI.sqrt();
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| wi * f(mean + std::f64::consts::SQRT_2 * sd * xi))
        .sum::<f64>()
        / norm
}

/// Neumaier compensated sum; deterministic for a fixed input order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let cfg = QuadratureConfig::default();
        let v = integrate(|x| 3.0 * x * x - 2.0 * x + 1.0, -1.0, 2.0, &cfg).unwrap();
        assert!((v - 9.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let cfg = QuadratureConfig::default();
        let v = integrate(|x| (10.0 * x).sin(), 0.0, 3.0, &cfg).unwrap();
        let exact = (1.0 - 30f64.cos()) / 10.0;
        assert!((v - exact).abs() < 1e-10);
        let v = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, &cfg).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v - exact).abs() / exact < 1e-9);
    }

    #[test]
    fn budget_exceeded_is_reported() {
        let cfg = QuadratureConfig {
            max_subdivisions: 2,
            ..Default::default()
        };
        let r = integrate(|x| 1.0 / x.abs().sqrt().max(1e-300), -1.0, 1.0, &cfg);
        assert!(matches!(r, Err(Error::QuadratureBudgetExceeded { .. })));
    }

    #[test]
    fn chebyshev_fit_and_antiderivative() {
        let c = Chebyshev::fit(|x: f64| x.exp() * (3.0 * x).cos(), 0.0, 2.0, 1e-14);
        for i in 0..=20 {
            let x = 0.1 * i as f64;
            assert!((c.eval(x) - x.exp() * (3.0 * x).cos()).abs() < 1e-13);
        }
        let ci = c.antiderivative();
        let exact = |x: f64| (x.exp() * ((3.0 * x).cos() + 3.0 * (3.0 * x).sin()) - 1.0) / 10.0;
        for i in 0..=20 {
            let x = 0.1 * i as f64;
            assert!((ci.eval(x) - exact(x)).abs() < 1e-13, "{x}");
        }
    }

    #[test]
    fn hermite_moments() {
        for n in [1, 2, 5, 64, 128] {
            let (x, w) = gauss_hermite(n);
            let s: f64 = w.iter().sum();
            assert!((s - std::f64::consts::PI.sqrt()).abs() < 1e-12, "n={n}");
            assert!(x.iter().all(|v| v.is_finite()));
        }
        let m4 = normal_expectation(|z| z.powi(4), 1.0, 0.5, 64);
        // E[(1 + 0.5 Z)^4] = 1 + 6 * 0.25 + 3 * 0.0625
        assert!((m4 - (1.0 + 1.5 + 0.1875)).abs() < 1e-12);
        assert!((normal_expectation(|z| z * z, 0.3, 0.0, 64) - 0.09).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = compensated_sum([1e16, 1.0, -1e16, 1.0]);
        assert_eq!(v, 2.0);
    }
}
