//! Geometry of rectangular tori, Fourier coefficient fields, smooth cutoffs and
//! Littlewood–Paley projectors.
//!
//! The base space is always the unit torus `R^d / Z^d`; the side lengths
//! `L_j` enter only through the coefficients `theta_j = L_j^{-2}` weighting the
//! Laplacian. A function is represented by its Fourier coefficients `f̂(k)` on a
//! box `[-M, M]^d`, with synthesis `f(x) = Σ_k e^{2πi k·x} f̂(k)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::numerics::NeumaierSum;

/// Largest dimension the labs are sized for.
pub const MAX_DIM: usize = 4;

/// Identifier of the concrete cutoff profile, embedded in every output file.
pub const PROFILE_ID: &str = "exp-bump-v1: phi(x)=psi(2-|x|)/(psi(2-|x|)+psi(|x|-1)), psi(s)=exp(-1/s)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusGeometry {
    theta: Vec<f64>,
}

impl TorusGeometry {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() || theta.len() > MAX_DIM {
            return Err(Error::Dimension(theta.len()));
        }
        for (index, &value) in theta.iter().enumerate() {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::Theta { index, value });
            }
        }
        Ok(Self { theta })
    }

    /// The square torus `T^d` with every `theta_j = 1`.
    pub fn square(d: usize) -> Result<Self> {
        Self::new(vec![1.0; d])
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn max_theta(&self) -> f64 {
        self.theta.iter().copied().fold(0.0, f64::max)
    }

    /// `Σ_j theta_j k_j^2`, the (2π-normalized) dispersion relation.
    pub fn dispersion(&self, k: &[i64]) -> f64 {
        self.theta
            .iter()
            .zip(k)
            .map(|(th, &kj)| th * (kj * kj) as f64)
            .sum()
    }
}

/// A power of two `N >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Dyadic(u64);

impl Dyadic {
    pub fn new(n: u64) -> Result<Self> {
        if n >= 1 && n.is_power_of_two() {
            Ok(Self(n))
        } else {
            Err(Error::NotDyadic(n))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    pub fn as_usize(self) -> usize {
        self.0 as usize
    }

    /// All dyadic values `1, 2, 4, ... <= limit` (empty when `limit < 1`).
    pub fn up_to(limit: f64) -> Vec<Dyadic> {
        let mut out = Vec::new();
        let mut n = 1u64;
        while (n as f64) <= limit * (1.0 + 1e-12) {
            out.push(Dyadic(n));
            n *= 2;
        }
        out
    }
}

impl TryFrom<u64> for Dyadic {
    type Error = Error;
    fn try_from(n: u64) -> Result<Self> {
        Self::new(n)
    }
}

impl From<Dyadic> for u64 {
    fn from(n: Dyadic) -> u64 {
        n.0
    }
}

impl std::fmt::Display for Dyadic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

fn psi(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// The smooth even cutoff `phi`: equal to 1 on `|x| <= 1`, 0 on `|x| >= 2`,
/// monotone in between.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CutoffProfile;

impl CutoffProfile {
    pub fn eval(self, x: f64) -> f64 {
        let a = x.abs();
        if a <= 1.0 {
            return 1.0;
        }
        if a >= 2.0 {
            return 0.0;
        }
        let up = psi(2.0 - a);
        up / (up + psi(a - 1.0))
    }

    /// The annular profile `phi(x) - phi(2x)`, supported in `1/2 < |x| < 2`.
    pub fn annulus(self, x: f64) -> f64 {
        self.eval(x) - self.eval(2.0 * x)
    }
}

/// Shorthand for [`CutoffProfile::eval`].
pub fn phi(x: f64) -> f64 {
    CutoffProfile.eval(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpMode {
    /// `P_{<=N}`: `Π_j phi(k_j / N)`.
    Leq,
    /// `P_N`: `Π_j [phi(k_j / N) - phi(2 k_j / N)]`.
    Band,
}

/// One-dimensional factor of the Littlewood–Paley symbol.
pub fn lp_factor(k: i64, n: Dyadic, mode: LpMode) -> f64 {
    let y = k as f64 / n.as_f64();
    match mode {
        LpMode::Leq => phi(y),
        LpMode::Band => CutoffProfile.annulus(y),
    }
}

/// Littlewood–Paley multiplier at lattice point `k`.
pub fn lp_symbol(k: &[i64], n: Dyadic, mode: LpMode) -> f64 {
    k.iter().map(|&kj| lp_factor(kj, n, mode)).product()
}

/// Lattice points of a symmetric box `[-M, M]^d` in row-major order with
/// `k = -M` first and the last coordinate varying fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoxIndexer {
    pub dim: usize,
    pub radius: usize,
}

impl BoxIndexer {
    pub fn new(dim: usize, radius: usize) -> Self {
        Self { dim, radius }
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, k: &[i64]) -> Option<usize> {
        let m = self.radius as i64;
        let side = self.side();
        let mut idx = 0usize;
        for &kj in k {
            if kj < -m || kj > m {
                return None;
            }
            idx = idx * side + (kj + m) as usize;
        }
        Some(idx)
    }

    pub fn point(&self, mut idx: usize, out: &mut [i64]) {
        let side = self.side();
        for slot in out.iter_mut().rev() {
            *slot = (idx % side) as i64 - self.radius as i64;
            idx /= side;
        }
    }

    /// Visit every lattice point in storage order.
    pub fn for_each(&self, mut f: impl FnMut(usize, &[i64])) {
        let m = self.radius as i64;
        let mut k = vec![-m; self.dim];
        for idx in 0..self.len() {
            f(idx, &k);
            for slot in k.iter_mut().rev() {
                if *slot < m {
                    *slot += 1;
                    break;
                }
                *slot = -m;
            }
        }
    }
}

/// Which Sobolev weight to apply; only `L^2` and `H^1` are meaningful here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sobolev {
    L2,
    H1,
}

impl Sobolev {
    /// `<k>^{2s}` with the isotropic `<k>^2 = 1 + |k|^2`.
    pub fn weight(self, k: &[i64]) -> f64 {
        match self {
            Sobolev::L2 => 1.0,
            Sobolev::H1 => 1.0 + k.iter().map(|&x| (x * x) as f64).sum::<f64>(),
        }
    }
}

/// Fourier coefficients of a function on `T^d`, stored densely on `[-M, M]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyField {
    geometry: TorusGeometry,
    radius: usize,
    coeffs: Vec<Complex64>,
}

impl FrequencyField {
    pub fn zeros(geometry: TorusGeometry, radius: usize) -> Self {
        let len = BoxIndexer::new(geometry.dim(), radius).len();
        Self {
            geometry,
            radius,
            coeffs: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn from_coeffs(geometry: TorusGeometry, radius: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        let expected = BoxIndexer::new(geometry.dim(), radius).len();
        if coeffs.len() != expected {
            return Err(Error::Shape(format!(
                "expected {expected} coefficients for radius {radius}, got {}",
                coeffs.len()
            )));
        }
        Ok(Self { geometry, radius, coeffs })
    }

    pub fn from_fn(geometry: TorusGeometry, radius: usize, mut f: impl FnMut(&[i64]) -> Complex64) -> Self {
        let mut field = Self::zeros(geometry, radius);
        let indexer = field.indexer();
        indexer.for_each(|idx, k| field.coeffs[idx] = f(k));
        field
    }

    /// `amplitude · e^{2πi k·x}`.
    pub fn character(geometry: TorusGeometry, radius: usize, k: &[i64], amplitude: Complex64) -> Result<Self> {
        if k.len() != geometry.dim() {
            return Err(Error::Shape(format!("lattice point has {} coordinates, torus has {}", k.len(), geometry.dim())));
        }
        let mut field = Self::zeros(geometry, radius);
        let idx = field
            .indexer()
            .index(k)
            .ok_or(Error::BoxTooSmall { radius, needed: k.iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0) })?;
        field.coeffs[idx] = amplitude;
        Ok(field)
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geometry
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn indexer(&self) -> BoxIndexer {
        BoxIndexer::new(self.dim(), self.radius)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        self.indexer()
            .index(k)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    pub fn set(&mut self, k: &[i64], value: Complex64) -> Result<()> {
        let idx = self.indexer().index(k).ok_or(Error::BoxTooSmall {
            radius: self.radius,
            needed: k.iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0),
        })?;
        self.coeffs[idx] = value;
        Ok(())
    }

    /// Re-box the coefficients onto radius `radius`, zero-padding or truncating.
    pub fn resized(&self, radius: usize) -> Self {
        if radius == self.radius {
            return self.clone();
        }
        let mut out = Self::zeros(self.geometry.clone(), radius);
        let target = out.indexer();
        self.indexer().for_each(|idx, k| {
            if let Some(j) = target.index(k) {
                out.coeffs[j] = self.coeffs[idx];
            }
        });
        out
    }

    /// Largest `max_j |k_j|` over nonzero coefficients (0 for the zero field).
    pub fn support_radius(&self) -> usize {
        let mut r = 0usize;
        self.indexer().for_each(|idx, k| {
            if self.coeffs[idx] != Complex64::new(0.0, 0.0) {
                let m = k.iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0);
                r = r.max(m);
            }
        });
        r
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= factor);
        out
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.geometry != other.geometry {
            return Err(Error::GeometryMismatch);
        }
        if self.radius != other.radius {
            return Err(Error::Shape(format!("box radii differ: {} vs {}", self.radius, other.radius)));
        }
        Ok(())
    }

    /// `self + factor · other`.
    pub fn axpy(&self, factor: Complex64, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a += factor * b);
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// Coefficientwise multiplication by the Littlewood–Paley symbol.
    pub fn project(&self, n: Dyadic, mode: LpMode) -> Result<Self> {
        let needed = 2 * n.as_usize();
        if self.radius < needed {
            return Err(Error::BoxTooSmall { radius: self.radius, needed });
        }
        let table: Vec<f64> = (-(self.radius as i64)..=self.radius as i64)
            .map(|k| lp_factor(k, n, mode))
            .collect();
        let m = self.radius as i64;
        let mut out = self.clone();
        self.indexer().for_each(|idx, k| {
            let s: f64 = k.iter().map(|&kj| table[(kj + m) as usize]).product();
            out.coeffs[idx] *= s;
        });
        Ok(out)
    }

    /// Direct evaluation of `Σ_k e^{2πi k·x} f̂(k)` at one point.
    pub fn synthesize(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.dim() {
            return Err(Error::Shape(format!("point has {} coordinates, torus has {}", x.len(), self.dim())));
        }
        let m = self.radius as i64;
        let tables: Vec<Vec<Complex64>> = x
            .iter()
            .map(|&xj| {
                (-m..=m)
                    .map(|k| Complex64::from_polar(1.0, TAU * crate::numerics::frac_product(xj, k)))
                    .collect()
            })
            .collect();
        let mut sum = NeumaierSum::default();
        self.indexer().for_each(|idx, k| {
            let c = self.coeffs[idx];
            if c.re != 0.0 || c.im != 0.0 {
                let mut e = c;
                for (j, &kj) in k.iter().enumerate() {
                    e *= tables[j][(kj + m) as usize];
                }
                sum.add(e);
            }
        });
        Ok(sum.value())
    }

    /// `(Σ_k <k>^{2s} |f̂(k)|^2)^{1/2}`.
    pub fn sobolev_norm(&self, s: Sobolev) -> f64 {
        let mut acc = 0.0;
        self.indexer().for_each(|idx, k| {
            acc += s.weight(k) * self.coeffs[idx].norm_sqr();
        });
        acc.sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(Sobolev::L2)
    }

    pub fn h1_norm(&self) -> f64 {
        self.sobolev_norm(Sobolev::H1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn geometry_validation() {
        assert!(TorusGeometry::new(vec![]).is_err());
        assert!(TorusGeometry::new(vec![1.0; 5]).is_err());
        assert!(TorusGeometry::new(vec![0.0]).is_err());
        assert!(TorusGeometry::new(vec![1.5]).is_err());
        assert!(TorusGeometry::new(vec![f64::NAN]).is_err());
        assert_eq!(TorusGeometry::new(vec![1.0, 0.5]).unwrap().dim(), 2);
    }

    #[test]
    fn dyadic_rejects_non_powers() {
        assert!(Dyadic::new(0).is_err());
        assert!(Dyadic::new(3).is_err());
        assert!(Dyadic::new(12).is_err());
        assert_eq!(Dyadic::new(16).unwrap().get(), 16);
        let list: Vec<u64> = Dyadic::up_to(5.0).into_iter().map(Dyadic::get).collect();
        assert_eq!(list, vec![1, 2, 4]);
    }

    #[test]
    fn cutoff_shape() {
        let p = CutoffProfile;
        assert_eq!(p.eval(0.0), 1.0);
        assert_eq!(p.eval(1.0), 1.0);
        assert_eq!(p.eval(-1.0), 1.0);
        assert_eq!(p.eval(2.0), 0.0);
        assert_eq!(p.eval(-7.0), 0.0);
        // midpoint of the transition is symmetric by construction
        assert!((p.eval(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=1000 {
            let x = 1.0 + i as f64 / 1000.0;
            let v = p.eval(x);
            assert!(v <= prev + 1e-15 && (0.0..=1.0).contains(&v));
            assert_eq!(v, p.eval(-x));
            prev = v;
        }
    }

    #[test]
    fn lp_symbol_examples() {
        let one = Dyadic::new(1).unwrap();
        assert_eq!(lp_symbol(&[0, 0, 0], one, LpMode::Leq), 1.0);
        assert_eq!(lp_symbol(&[2, 0], one, LpMode::Leq), 0.0);
        assert_eq!(lp_symbol(&[1], one, LpMode::Band), 1.0);
        assert_eq!(lp_symbol(&[0], one, LpMode::Band), 0.0);
    }

    #[test]
    fn lp_symbol_is_a_product_of_one_dimensional_factors() {
        let n = Dyadic::new(4).unwrap();
        for k0 in -9..=9 {
            for k1 in -9..=9 {
                for mode in [LpMode::Leq, LpMode::Band] {
                    let joint = lp_symbol(&[k0, k1], n, mode);
                    let split = lp_symbol(&[k0], n, mode) * lp_symbol(&[k1], n, mode);
                    assert_eq!(joint, split);
                }
            }
        }
    }

    #[test]
    fn project_examples() {
        let g = TorusGeometry::square(2).unwrap();
        let n = Dyadic::new(4).unwrap();
        let f = FrequencyField::character(g.clone(), 8, &[4, -3], c(0.5, 0.25)).unwrap();
        assert_eq!(f.project(n, LpMode::Leq).unwrap(), f);
        let h = FrequencyField::character(g.clone(), 8, &[8, 1], c(1.0, 0.0)).unwrap();
        assert!(h.project(n, LpMode::Leq).unwrap().coeffs().iter().all(|z| z.norm() == 0.0));
        let small = FrequencyField::zeros(g, 7);
        assert!(matches!(small.project(n, LpMode::Leq), Err(Error::BoxTooSmall { .. })));
    }

    #[test]
    fn band_pieces_telescope_to_low_pass_in_one_dimension() {
        // phi(k/N) = phi(k) + Σ_{2 <= N' <= N} [phi(k/N') - phi(2k/N')]
        let n = Dyadic::new(32).unwrap();
        for k in -70..=70 {
            let mut sum = lp_factor(k, Dyadic::new(1).unwrap(), LpMode::Leq);
            let mut m = 2;
            while m <= n.get() {
                sum += lp_factor(k, Dyadic::new(m).unwrap(), LpMode::Band);
                m *= 2;
            }
            assert!((sum - lp_factor(k, n, LpMode::Leq)).abs() < 1e-15, "k = {k}");
        }
    }

    #[test]
    fn synthesize_examples() {
        let g = TorusGeometry::square(3).unwrap();
        let one = FrequencyField::character(g.clone(), 2, &[0, 0, 0], c(1.0, 0.0)).unwrap();
        assert!((one.synthesize(&[0.3, 0.1, 0.9]).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let e1 = FrequencyField::character(g, 2, &[1, 0, 0], c(1.0, 0.0)).unwrap();
        assert!((e1.synthesize(&[0.5, 0.0, 0.0]).unwrap() - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn sobolev_examples() {
        let g = TorusGeometry::square(3).unwrap();
        let one = FrequencyField::character(g.clone(), 1, &[0, 0, 0], c(1.0, 0.0)).unwrap();
        assert_eq!(one.sobolev_norm(Sobolev::H1), 1.0);
        let e1 = FrequencyField::character(g, 1, &[1, 0, 0], c(1.0, 0.0)).unwrap();
        assert!((e1.sobolev_norm(Sobolev::H1) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn resize_round_trip() {
        let g = TorusGeometry::square(2).unwrap();
        let f = FrequencyField::from_fn(g, 2, |k| c(k[0] as f64, k[1] as f64 * 0.5));
        let big = f.resized(5);
        assert_eq!(big.coeff(&[2, -1]), f.coeff(&[2, -1]));
        assert_eq!(big.resized(2), f);
        assert_eq!(big.support_radius(), 2);
    }

    fn arb_field_1d() -> impl Strategy<Value = FrequencyField> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9).prop_map(|v| {
            let g = TorusGeometry::square(1).unwrap();
            FrequencyField::from_coeffs(g, 4, v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn plancherel(f in arb_field_1d()) {
            let direct: f64 = f.coeffs().iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((f.sobolev_norm(Sobolev::L2).powi(2) - direct).abs() <= 1e-14 * (1.0 + direct));
        }

        #[test]
        fn double_projection_never_grows(f in arb_field_1d(), x in 0.0f64..1.0) {
            let n = Dyadic::new(2).unwrap();
            let once = f.project(n, LpMode::Leq).unwrap();
            let twice = once.project(n, LpMode::Leq).unwrap();
            for (a, b) in once.coeffs().iter().zip(twice.coeffs()) {
                prop_assert!(b.norm() <= a.norm() + 1e-15);
            }
            let _ = x;
        }

        #[test]
        fn synthesis_is_linear_and_real_for_hermitian_data(
            f in arb_field_1d(), h in arb_field_1d(), x in 0.0f64..1.0, a in -2.0f64..2.0)
        {
            let sum = f.axpy(c(a, 0.0), &h).unwrap();
            let lhs = sum.synthesize(&[x]).unwrap();
            let rhs = f.synthesize(&[x]).unwrap() + h.synthesize(&[x]).unwrap() * a;
            prop_assert!((lhs - rhs).norm() < 1e-12);

            let herm = FrequencyField::from_fn(f.geometry().clone(), 4, |k| {
                let z = f.coeff(k);
                let w = f.coeff(&[-k[0]]).conj();
                (z + w) * 0.5
            });
            prop_assert!(herm.synthesize(&[x]).unwrap().im.abs() < 1e-12);
        }
    }

    #[test]
    fn idempotent_when_symbol_is_binary() {
        // At N = 1 the symbol only takes values phi(0)=phi(1)=1 and phi(2)=0 on the lattice.
        let g = TorusGeometry::square(2).unwrap();
        let f = FrequencyField::from_fn(g, 3, |k| c(1.0 + k[0] as f64, k[1] as f64));
        let n = Dyadic::new(1).unwrap();
        let once = f.project(n, LpMode::Leq).unwrap();
        assert_eq!(once.project(n, LpMode::Leq).unwrap(), once);
    }
}
