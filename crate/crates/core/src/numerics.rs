//! Small numerical helpers shared by the labs.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: Complex64,
    comp: Complex64,
}

fn two_sum(acc: f64, x: f64) -> (f64, f64) {
    let t = acc + x;
    let c = if acc.abs() >= x.abs() { (acc - t) + x } else { (x - t) + acc };
    (t, c)
}

impl NeumaierSum {
    pub fn add(&mut self, x: Complex64) {
        let (re, cre) = two_sum(self.sum.re, x.re);
        let (im, cim) = two_sum(self.sum.im, x.im);
        self.sum = Complex64::new(re, im);
        self.comp += Complex64::new(cre, cim);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

/// Fractional part (in `[-1/2, 1/2]`) of `x·k`, keeping the rounding error of
/// the product so large `k` do not destroy the phase.
pub fn frac_product(x: f64, k: i64) -> f64 {
    let kf = k as f64;
    let p = x * kf;
    let err = x.mul_add(kf, -p);
    (p - p.round()) + err
}

/// `e^{2πi·turns}`.
pub fn cis_turns(turns: f64) -> Complex64 {
    let (s, c) = (TAU * turns).sin_cos();
    Complex64::new(c, s)
}

/// Distance to the nearest integer, signed, in `[-1/2, 1/2)`.
pub fn wrap_signed(x: f64) -> f64 {
    let r = x - x.round();
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// Least-squares line through `(x_i, y_i)`: returns `(slope, intercept, max |residual|)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let resid = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).abs())
        .fold(0.0, f64::max);
    (slope, intercept, resid)
}

/// Smallest integer `>= n` whose prime factors are all at most 7.
pub fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// `|z|^p` with a fast path for even integer `p`.
pub fn abs_pow(z: Complex64, p: f64) -> f64 {
    let half = p / 2.0;
    if half.fract() == 0.0 && half.abs() < 64.0 {
        z.norm_sqr().powi(half as i32)
    } else {
        z.norm().powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let mut s = NeumaierSum::default();
        s.add(Complex64::new(1e16, 0.0));
        s.add(Complex64::new(1.0, 0.0));
        s.add(Complex64::new(-1e16, 0.0));
        assert_eq!(s.value().re, 1.0);
    }

    #[test]
    fn frac_product_is_accurate_for_large_multipliers() {
        let x = 0.1f64;
        let k = 262_144i64; // 512^2
        // 0.1 as stored is 0.1000000000000000055511151231257827...
        let exact = 1.455_191_522_836_685e-12 + 0.4; // 26214.4 + k·5.55e-18
        let got = frac_product(x, k);
        assert!((got - (exact - 1.0)).abs() < 1e-15 || (got - exact).abs() < 1e-15, "{got}");
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(49), 49);
        assert_eq!(smooth_size(11), 12);
        assert_eq!(smooth_size(97), 98);
        assert_eq!(smooth_size(1025), 1029);
    }

    #[test]
    fn fit_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let (s, i, r) = linear_fit(&xs, &ys);
        assert!((s - 2.0).abs() < 1e-14 && (i + 1.0).abs() < 1e-14 && r < 1e-14);
    }

    #[test]
    fn abs_pow_paths_agree() {
        let z = Complex64::new(0.3, -1.2);
        assert!((abs_pow(z, 8.0) - z.norm().powf(8.0)).abs() < 1e-12);
        assert!((abs_pow(z, 3.5) - z.norm().powf(3.5)).abs() < 1e-12);
    }
}
