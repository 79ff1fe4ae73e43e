//! Number-theoretic toolkit behind the major-arc decomposition: Dirichlet
//! approximation, Farey atoms, dyadic divisor counts and the Fourier
//! coefficients of the unreduced Farey measure.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{Dyadic, TorusGeometry};
use crate::Budget;

/// A reduced fraction `a / q` with `q >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fraction {
    pub a: u64,
    pub q: u64,
}

impl Fraction {
    pub fn value(self) -> f64 {
        self.a as f64 / self.q as f64
    }
}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.a as u128 * other.q as u128)
            .cmp(&(other.a as u128 * self.q as u128))
            .then(self.q.cmp(&other.q))
    }
}

/// Output of [`dirichlet_approx`]. `beta` is the approximated value after
/// reduction into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RationalApprox {
    pub a: u64,
    pub q: u64,
    pub beta: f64,
    #[serde(rename = "N")]
    pub level: u64,
}

impl RationalApprox {
    pub fn error(&self) -> f64 {
        (self.beta - self.a as f64 / self.q as f64).abs()
    }

    /// `1 <= q < N`, `0 <= a <= q`, `gcd(a, q) = 1`, `|beta - a/q| <= 1/(N q)`.
    pub fn is_certified(&self) -> bool {
        certifies(self.beta, self.a, self.q, self.level)
    }
}

/// The error test is `|q beta - a| <= 1/N` evaluated with one rounding and a
/// relative slack of `1e-12`, so dyadic inputs sitting exactly on the boundary
/// (e.g. `beta = 3/8`, `N = 8`, `a/q = 1/3`) are not lost to roundoff.
fn certifies(beta: f64, a: u64, q: u64, level: u64) -> bool {
    q >= 1
        && q < level
        && a <= q
        && a.gcd(&q) == 1
        && (q as f64).mul_add(beta, -(a as f64)).abs() <= (1.0 + 1e-12) / level as f64
}

fn reduce_unit(beta: f64) -> f64 {
    if (0.0..=1.0).contains(&beta) {
        beta
    } else {
        beta.rem_euclid(1.0)
    }
}

/// Smallest certified numerator for a fixed denominator, if any.
fn numerator_for(beta: f64, q: u64, level: u64) -> Option<u64> {
    let center = beta * q as f64;
    let lo = center.floor().max(0.0) as u64;
    (lo.saturating_sub(1)..=(lo + 1).min(q)).find(|&a| certifies(beta, a, q, level))
}

/// Exhaustive scan over `q = 1, 2, ..., N-1`; the correctness oracle.
pub fn dirichlet_scan(beta: f64, level: u64) -> Option<RationalApprox> {
    let beta = reduce_unit(beta);
    (1..level).find_map(|q| {
        numerator_for(beta, q, level).map(|a| RationalApprox { a, q, beta, level })
    })
}

/// Continued-fraction convergent denominators of `beta`, stopping once they
/// reach `limit`.
fn convergent_denominators(beta: f64, limit: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let (mut q_prev, mut q) = (0u64, 1u64);
    let mut x = beta;
    out.push(1);
    for _ in 0..64 {
        let frac = x - x.floor();
        if frac < 1e-15 {
            break;
        }
        x = 1.0 / frac;
        let a = x.floor();
        if a > limit as f64 {
            break;
        }
        let next = (a as u64).saturating_mul(q).saturating_add(q_prev);
        if next >= limit {
            break;
        }
        q_prev = q;
        q = next;
        out.push(q);
    }
    out
}

/// Dirichlet approximation at level `N >= 2`: among all `(a, q)` with
/// `1 <= q < N`, `0 <= a <= q`, `gcd(a, q) = 1` and `|beta - a/q| <= 1/(Nq)`,
/// the one with smallest `q`, then smallest `a`.
///
/// The smallest such `q` is a best approximation of the second kind and hence
/// a continued-fraction convergent; convergents are tried first and the
/// exhaustive scan is the fallback.
pub fn dirichlet_approx(beta: f64, level: u64) -> Result<RationalApprox> {
    if level < 2 {
        return Err(Error::Parameter(format!("Dirichlet level must be >= 2, got {level}")));
    }
    if !beta.is_finite() {
        return Err(Error::Parameter(format!("cannot approximate {beta}")));
    }
    let beta = reduce_unit(beta);
    for q in convergent_denominators(beta, level) {
        if let Some(a) = numerator_for(beta, q, level) {
            // Floating-point ties at the certificate boundary could admit a
            // smaller non-convergent denominator; rule that out for small levels.
            if level <= 512 {
                if let Some((b, p)) = (1..q).find_map(|p| numerator_for(beta, p, level).map(|b| (b, p))) {
                    return Ok(RationalApprox { a: b, q: p, beta, level });
                }
            }
            return Ok(RationalApprox { a, q, beta, level });
        }
    }
    dirichlet_scan(beta, level).ok_or_else(|| Error::Parameter(format!("no Dirichlet approximant for {beta} at level {level}")))
}

/// Reduced fractions `a/q` with `0 <= a < q`, `q ∼ Q` (i.e. `Q <= q < 2Q`),
/// sorted by value: the atoms of the reduced Farey measure at scale `Q`.
pub fn farey_atoms(scale: Dyadic) -> Vec<Fraction> {
    let lo = scale.get();
    let mut out: Vec<Fraction> = (lo..2 * lo)
        .flat_map(|q| (0..q).filter(move |a| a.gcd(&q) == 1).map(move |a| Fraction { a, q }))
        .collect();
    out.sort();
    out
}

/// Euler's totient by trial division.
pub fn totient(mut n: u64) -> u64 {
    let mut result = n;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// All divisors of `n >= 1` by trial division up to `sqrt(n)`, ascending.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut q = 1u64;
    while q * q <= n {
        if n % q == 0 {
            small.push(q);
            if q * q != n {
                large.push(n / q);
            }
        }
        q += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// `d_Q(n) = #{q : q | n, Q <= q < 2Q}`.
pub fn divisor_count_dyadic(n: u64, scale: Dyadic) -> Result<u64> {
    if n == 0 {
        return Err(Error::Parameter("divisor counts need n >= 1".into()));
    }
    let lo = scale.get();
    Ok(divisors(n).into_iter().filter(|&q| q >= lo && q < 2 * lo).count() as u64)
}

/// `F̂_{2,Q}(omega) = Σ_{q∼Q} Σ_{a=0}^{q-1} e^{2πi a omega/q} = Σ_{q∼Q, q|omega} q`.
pub fn f2_hat(omega: i64, scale: Dyadic) -> u64 {
    let lo = scale.get();
    let w = omega.unsigned_abs();
    (lo..2 * lo).filter(|&q| w % q == 0).sum()
}

/// `#{1 <= n <= R : d_Q(n) > D}` by sieving the multiples of each `q ∼ Q`.
pub fn divisor_tail_count(r: u64, scale: Dyadic, threshold: f64, budget: Budget) -> Result<u64> {
    if r == 0 {
        return Err(Error::Parameter("tail counts need R >= 1".into()));
    }
    budget.check(r as u128)?;
    let mut counts = vec![0u32; r as usize + 1];
    let lo = scale.get();
    for q in lo..(2 * lo).min(r + 1) {
        let mut m = q;
        while m <= r {
            counts[m as usize] += 1;
            m += q;
        }
    }
    Ok(counts[1..].iter().filter(|&&c| c as f64 > threshold).count() as u64)
}

/// Parameters of the major-arc set: level `N` and exponent `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorArcParams {
    pub sigma: f64,
    #[serde(rename = "N")]
    pub n: Dyadic,
}

impl MajorArcParams {
    pub const DEFAULT_SIGMA: f64 = 0.1;

    pub fn new(sigma: f64, n: Dyadic) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 0.5) {
            return Err(Error::Parameter(format!("sigma = {sigma} is outside (0, 1/2)")));
        }
        if n.get() < 2 {
            return Err(Error::Parameter("major arcs need N >= 2".into()));
        }
        Ok(Self { sigma, n })
    }

    /// `N^{2 sigma}`, the denominator cap and the arc width scale.
    pub fn reach(&self) -> f64 {
        self.n.as_f64().powf(2.0 * self.sigma)
    }
}

/// Which coordinate and which fraction put `t` on a major arc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcWitness {
    pub axis: usize,
    pub a: u64,
    pub q: u64,
}

/// Membership of `t` in the major-arc set
/// `{t : q N^2 |theta_j t - a/q| <= N^{2σ} for some j, q <= N^{2σ}, (a,q)=1}`.
///
/// Returns the witness with smallest axis, then smallest `q`, then smallest `a`.
pub fn in_major_arc(t: f64, params: &MajorArcParams, g: &TorusGeometry) -> Option<ArcWitness> {
    let reach = params.reach();
    let q_max = (reach * (1.0 + 1e-12)).floor() as u64;
    let n2 = params.n.as_f64().powi(2);
    for (axis, &theta) in g.theta().iter().enumerate() {
        let beta = theta * t;
        for q in 1..=q_max {
            let center = (beta * q as f64).round();
            for a_f in [center - 1.0, center, center + 1.0] {
                if a_f < 0.0 {
                    continue;
                }
                let a = a_f as u64;
                if a.gcd(&q) != 1 {
                    continue;
                }
                if q as f64 * n2 * (beta - a_f / q as f64).abs() <= reach * (1.0 + 1e-12) {
                    return Some(ArcWitness { axis, a, q });
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dy(n: u64) -> Dyadic {
        Dyadic::new(n).unwrap()
    }

    #[test]
    fn dirichlet_examples() {
        let r = dirichlet_approx(0.0, 4).unwrap();
        assert_eq!((r.a, r.q), (0, 1));
        assert_eq!(r.error(), 0.0);
        let r = dirichlet_approx(1.0 / 3.0, 10).unwrap();
        assert_eq!((r.a, r.q), (1, 3));
        let r = dirichlet_approx(0.41421356, 5).unwrap();
        assert_eq!((r.a, r.q), (1, 2));
        assert!(r.error() <= 0.1);
        assert!(dirichlet_approx(0.5, 1).is_err());
    }

    #[test]
    fn dirichlet_reduces_out_of_range_input() {
        let r = dirichlet_approx(1.25, 8).unwrap();
        assert_eq!((r.a, r.q), (1, 4));
        let r = dirichlet_approx(-0.5, 8).unwrap();
        assert_eq!((r.a, r.q), (1, 2));
        let r = dirichlet_approx(1.0, 8).unwrap();
        assert_eq!((r.a, r.q), (1, 1));
    }

    #[test]
    fn dirichlet_matches_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for level in [2u64, 3, 4, 7, 16, 64, 256, 1000] {
            for _ in 0..2000 {
                let beta: f64 = rng.gen();
                let fast = dirichlet_approx(beta, level).unwrap();
                let slow = dirichlet_scan(beta, level).unwrap();
                assert_eq!((fast.a, fast.q), (slow.a, slow.q), "beta={beta} N={level}");
                assert!(fast.is_certified());
            }
        }
        for q in 1..30u64 {
            for a in 0..=q {
                let beta = a as f64 / q as f64;
                let fast = dirichlet_approx(beta, 64).unwrap();
                let slow = dirichlet_scan(beta, 64).unwrap();
                assert_eq!((fast.a, fast.q), (slow.a, slow.q));
            }
        }
    }

    #[test]
    fn farey_examples() {
        assert_eq!(farey_atoms(dy(1)), vec![Fraction { a: 0, q: 1 }]);
        let two = farey_atoms(dy(2));
        assert_eq!(
            two,
            vec![Fraction { a: 1, q: 3 }, Fraction { a: 1, q: 2 }, Fraction { a: 2, q: 3 }]
        );
        for scale in [2u64, 4, 8] {
            let expect: u64 = (scale..2 * scale).map(totient).sum();
            assert_eq!(farey_atoms(dy(scale)).len() as u64, expect);
        }
        let atoms = farey_atoms(dy(16));
        assert!(atoms.windows(2).all(|w| w[0].value() < w[1].value()));
    }

    #[test]
    fn divisor_examples() {
        for n in 1..200 {
            assert_eq!(divisor_count_dyadic(n, dy(1)).unwrap(), 1);
        }
        assert_eq!(divisor_count_dyadic(12, dy(2)).unwrap(), 2);
        assert_eq!(divisor_count_dyadic(12, dy(4)).unwrap(), 2);
        assert!(divisor_count_dyadic(0, dy(2)).is_err());
        // trial division against a window scan
        for n in 1..5000u64 {
            for scale in [1u64, 2, 4, 8, 16, 32] {
                let scan = (scale..2 * scale).filter(|q| n % q == 0).count() as u64;
                assert_eq!(divisor_count_dyadic(n, dy(scale)).unwrap(), scan);
            }
        }
    }

    #[test]
    fn f2_hat_examples() {
        for w in -50..50 {
            assert_eq!(f2_hat(w, dy(1)), 1);
        }
        assert_eq!(f2_hat(6, dy(2)), 5);
        assert_eq!(f2_hat(5, dy(4)), 5);
        assert_eq!(f2_hat(0, dy(4)), 4 + 5 + 6 + 7);
    }

    #[test]
    fn f2_hat_matches_exponential_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let w: i64 = rng.gen_range(-10_000..10_000);
            let scale = dy(1 << rng.gen_range(0..6));
            let mut s = Complex64::new(0.0, 0.0);
            for q in scale.get()..2 * scale.get() {
                for a in 0..q {
                    let turns = ((a as i128 * w as i128).rem_euclid(q as i128)) as f64 / q as f64;
                    s += crate::numerics::cis_turns(turns);
                }
            }
            assert!((s - Complex64::new(f2_hat(w, scale) as f64, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn f2_hat_bound_pair() {
        for scale in (0..7).map(|e| dy(1 << e)) {
            let q = scale.get();
            for w in -10_000i64..=10_000 {
                let v = f2_hat(w, scale);
                assert!(v <= 4 * q * q);
                if w != 0 {
                    let dq = divisor_count_dyadic(w.unsigned_abs(), scale).unwrap();
                    assert!(v <= 2 * q * dq);
                }
            }
        }
    }

    #[test]
    fn tail_count_examples() {
        let b = Budget::unlimited();
        assert_eq!(divisor_tail_count(100, dy(2), 2.0, b).unwrap(), 0);
        assert_eq!(divisor_tail_count(100, dy(1), 0.0, b).unwrap(), 100);
        assert_eq!(divisor_tail_count(100, dy(2), 1.0, b).unwrap(), 16);
        assert!(divisor_tail_count(1000, dy(2), 1.0, Budget::new(10)).is_err());
        for r in [1u64, 17, 500] {
            for scale in [1u64, 2, 4, 8] {
                for thr in [0.0, 1.0, 2.5] {
                    let brute = (1..=r)
                        .filter(|&n| divisor_count_dyadic(n, dy(scale)).unwrap() as f64 > thr)
                        .count() as u64;
                    assert_eq!(divisor_tail_count(r, dy(scale), thr, b).unwrap(), brute);
                }
            }
        }
    }

    #[test]
    fn tail_bound_constant_stays_bounded() {
        // C(R) = count / (D^{-2} Q R), i.e. alpha = 1, tau = 1/2. The count is
        // a density times R, so C(R) settles; at R = 10^3 the large-D tails
        // are still under-populated, so C is not monotone there.
        let scale = dy(8);
        for thr in [2.0, 3.0, 4.0] {
            let consts: Vec<f64> = [1_000u64, 10_000, 100_000]
                .iter()
                .map(|&r| {
                    let c = divisor_tail_count(r, scale, thr, Budget::unlimited()).unwrap() as f64;
                    c * thr * thr / (8.0 * r as f64)
                })
                .collect();
            assert!(consts.iter().all(|&c| c > 0.0 && c < 1.0), "{consts:?}");
            assert!(consts[2] <= 1.05 * consts[0].max(consts[1]), "{consts:?}");
        }
    }

    #[test]
    fn major_arc_examples() {
        let g = TorusGeometry::square(1).unwrap();
        let p = MajorArcParams::new(0.1, dy(16)).unwrap();
        assert_eq!(in_major_arc(0.0, &p, &g), Some(ArcWitness { axis: 0, a: 0, q: 1 }));
        let p = MajorArcParams::new(0.25, dy(16)).unwrap();
        let w = in_major_arc(0.5, &p, &g).unwrap();
        assert_eq!((w.a, w.q), (1, 2));
        // farthest point from every a/q with q <= 4
        let fracs: Vec<f64> = (1..=4u64).flat_map(|q| (0..=q).map(move |a| a as f64 / q as f64)).collect();
        let far = (0..=10_000)
            .map(|i| i as f64 / 10_000.0)
            .max_by(|x, y| {
                let dx = fracs.iter().map(|f| (x - f).abs()).fold(1.0, f64::min);
                let dy_ = fracs.iter().map(|f| (y - f).abs()).fold(1.0, f64::min);
                dx.partial_cmp(&dy_).unwrap()
            })
            .unwrap();
        assert_eq!(in_major_arc(far, &p, &g), None);
        assert!(MajorArcParams::new(0.5, dy(16)).is_err());
    }

    #[test]
    fn major_arc_fraction_shrinks_with_n() {
        let g = TorusGeometry::square(1).unwrap();
        let mut prev = f64::INFINITY;
        for n in [16u64, 32, 64, 128, 256] {
            let p = MajorArcParams::new(0.1, dy(n)).unwrap();
            let hits = (0..100_000).filter(|&i| in_major_arc(i as f64 / 100_000.0, &p, &g).is_some()).count();
            let frac = hits as f64 / 100_000.0;
            assert!(frac <= prev, "N={n}: {frac} > {prev}");
            prev = frac;
        }
    }
}
