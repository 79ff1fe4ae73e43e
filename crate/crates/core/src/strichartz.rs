//! Space-time Lebesgue norms of free evolutions: mixed-norm quadrature, the
//! scale-invariant Strichartz ratio and its exponent sweep, and the bilinear
//! ratio.
//!
//! Data that factor over coordinates (characters, flat boxes, flat bands)
//! evolve as products of one-dimensional evolutions at times `theta_j t`, so
//! `∫|u|^p dx = Π_j ∫|u_j|^p dx_j`. [`ProductField`] uses this to reach large
//! `N` in `d >= 2`; the full-grid path handles everything else and validates
//! the product path at small `N`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{abs_pow, cis_turns, frac_product, linear_fit, smooth_size};
use crate::propagator::{for_each_time_slice, time_density, SpaceTimeGrid, SpaceTimeSamples};
use crate::torus::{lp_factor, Dyadic, FrequencyField, LpMode, TorusGeometry};
use crate::Budget;

/// Streaming `L^p_t L^r_x` accumulator over time slices of width `dt`:
/// `(Σ_i dt (mean_x |u(t_i)|^r)^{p/r})^{1/p}`, with `∞` meaning a max.
#[derive(Debug, Clone)]
pub struct MixedNorm {
    p: f64,
    r: f64,
    dt: f64,
    acc: f64,
    max: f64,
    slices: usize,
}

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::Exponent { p, reason: "Lebesgue exponents must be >= 1".into() })
    }
}

impl MixedNorm {
    pub fn new(p: f64, r: f64, dt: f64) -> Result<Self> {
        check_exponent(p)?;
        check_exponent(r)?;
        if !(dt > 0.0) {
            return Err(Error::Parameter(format!("time step {dt} must be positive")));
        }
        Ok(Self { p, r, dt, acc: 0.0, max: 0.0, slices: 0 })
    }

    /// Add one time slice of spatial samples.
    pub fn push(&mut self, slice: &[Complex64]) -> Result<()> {
        if let Some(i) = slice.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite(self.slices * slice.len() + i));
        }
        if self.r.is_infinite() {
            let m = slice.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max).sqrt();
            self.push_inner_norm(m);
        } else {
            let mean = slice.iter().map(|&z| abs_pow(z, self.r)).sum::<f64>() / slice.len() as f64;
            self.push_power_mean(mean);
        }
        Ok(())
    }

    /// Add a slice given `mean_x |u|^r` (finite `r`).
    pub fn push_power_mean(&mut self, mean: f64) {
        if self.p.is_infinite() {
            self.max = self.max.max(mean.powf(1.0 / self.r));
        } else if self.p == self.r {
            self.acc += self.dt * mean;
        } else {
            self.acc += self.dt * mean.powf(self.p / self.r);
        }
        self.slices += 1;
    }

    /// Add a slice given its spatial `L^r` norm.
    pub fn push_inner_norm(&mut self, norm: f64) {
        if self.p.is_infinite() {
            self.max = self.max.max(norm);
        } else {
            self.acc += self.dt * norm.powf(self.p);
        }
        self.slices += 1;
    }

    pub fn finish(&self) -> f64 {
        if self.p.is_infinite() {
            self.max
        } else {
            self.acc.powf(1.0 / self.p)
        }
    }
}

/// `‖u‖_{L^p_t L^r_x}` of sampled values over `[0, span) × T^d`.
pub fn spacetime_lp_norm(samples: &SpaceTimeSamples, p: f64, r: f64) -> Result<f64> {
    let mut acc = MixedNorm::new(p, r, samples.grid.dt())?;
    for i in 0..samples.grid.n_t {
        acc.push(samples.slice(i))?;
    }
    Ok(acc.finish())
}

/// `d/2 - (d+2)/p`.
pub fn scaling_exponent(d: usize, p: f64) -> f64 {
    let d = d as f64;
    d / 2.0 - (d + 2.0) / p
}

/// `2(d+2)/d`, the endpoint at which the scale-invariant estimate fails.
pub fn critical_exponent(d: usize) -> f64 {
    2.0 * (d as f64 + 2.0) / d as f64
}

fn check_admissible(d: usize, p: f64) -> Result<()> {
    let pc = critical_exponent(d);
    if p > pc {
        Ok(())
    } else {
        Err(Error::Exponent {
            p,
            reason: format!("need p > 2(d+2)/d = {pc}"),
        })
    }
}

/// Per-axis resolution making the `L^p` quadrature of a field of support
/// radius `m` exact in space for even integer `p`: `|u|^p` has degree `p m`.
pub fn lp_resolution(m: usize, p: f64) -> usize {
    let q = if p.is_finite() { (p / 2.0).ceil() as usize * 2 } else { 4 };
    smooth_size((q * m + 1).max(2 * (2 * m + 1)))
}

/// Grid on `[0, span)` for `L^p` norms of evolutions at frequency scale `n`
/// with data support radius `m`: time-density rule in `t`, [`lp_resolution`]
/// in `x`.
pub fn norm_grid(n: Dyadic, m: usize, p: f64, g: &TorusGeometry, span: f64) -> Result<SpaceTimeGrid> {
    let n_t = (time_density(n, g) * span).ceil() as usize;
    SpaceTimeGrid::new(n_t.max(1), lp_resolution(m, p), span)
}

/// `P_{<=N} f` on its own (possibly smaller) box.
fn project_leq(f: &FrequencyField, n: Dyadic) -> Result<FrequencyField> {
    let wide = f.resized(f.radius().max(2 * n.as_usize()));
    let projected = wide.project(n, LpMode::Leq)?;
    Ok(projected.resized(projected.support_radius()))
}

/// `‖e^{itΔ} f‖_{L^p_t L^r_x([0, span) × T^d)}` on the full grid.
pub fn evolution_norm(f: &FrequencyField, p: f64, r: f64, grid: &SpaceTimeGrid, budget: Budget) -> Result<f64> {
    let cells = (grid.n_x as u128).pow(f.dim() as u32);
    budget.check(cells)?;
    let mut acc = MixedNorm::new(p, r, grid.dt())?;
    let mut failure = None;
    for_each_time_slice(f, grid, f.geometry(), |_, vals| {
        if failure.is_none() {
            if let Err(e) = acc.push(vals) {
                failure = Some(e);
            }
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(acc.finish()),
    }
}

/// `‖e^{itΔ} P_{<=N} f‖_{L^p([0,1] × T^d)} / (N^{d/2-(d+2)/p} ‖f‖_{L^2})`.
pub fn strichartz_ratio(f: &FrequencyField, n: Dyadic, p: f64, grid: &SpaceTimeGrid, budget: Budget) -> Result<f64> {
    check_admissible(f.dim(), p)?;
    let l2 = f.l2_norm();
    if l2 == 0.0 {
        return Err(Error::Parameter("Strichartz ratio of the zero field".into()));
    }
    let projected = project_leq(f, n)?;
    let norm = evolution_norm(&projected, p, p, grid, budget)?;
    Ok(norm / (n.as_f64().powf(scaling_exponent(f.dim(), p)) * l2))
}

/// One-dimensional free evolution `s ↦ Σ_k c_k e^{2πi(kx - s k^2)}` on a
/// uniform grid.
#[derive(Clone)]
pub struct LineEvolver {
    radius: usize,
    coeffs: Vec<Complex64>,
    n_x: usize,
    fft: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl LineEvolver {
    pub fn new(coeffs: Vec<Complex64>, n_x: usize) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::Shape(format!("{} coefficients is not a symmetric box", coeffs.len())));
        }
        let radius = coeffs.len() / 2;
        if n_x < 2 * radius + 1 {
            return Err(Error::GridTooCoarse { n: n_x, needed: 2 * radius + 1 });
        }
        let fft = FftPlanner::new().plan_fft_inverse(n_x);
        let scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        Ok(Self {
            radius,
            coeffs,
            n_x,
            fft,
            buffer: vec![Complex64::default(); n_x],
            scratch,
        })
    }

    pub fn eval(&mut self, s: f64) -> &[Complex64] {
        self.buffer.iter_mut().for_each(|z| *z = Complex64::default());
        let m = self.radius as i64;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == Complex64::default() {
                continue;
            }
            let k = i as i64 - m;
            let slot = k.rem_euclid(self.n_x as i64) as usize;
            self.buffer[slot] = c * cis_turns(-frac_product(s, k * k));
        }
        self.fft.process_with_scratch(&mut self.buffer, &mut self.scratch);
        &self.buffer
    }
}

/// A field `f̂(k) = Π_j a_j(k_j)` stored by its one-dimensional factors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductField {
    geometry: TorusGeometry,
    factors: Vec<Vec<Complex64>>,
}

impl ProductField {
    /// Factors are coefficient vectors on symmetric boxes `[-m_j, m_j]`.
    pub fn new(geometry: TorusGeometry, factors: Vec<Vec<Complex64>>) -> Result<Self> {
        if factors.len() != geometry.dim() {
            return Err(Error::Shape(format!("{} factors for dimension {}", factors.len(), geometry.dim())));
        }
        if factors.iter().any(|a| a.len() % 2 == 0) {
            return Err(Error::Shape("factor lengths must be odd".into()));
        }
        Ok(Self { geometry, factors })
    }

    /// `Π_j a(k_j)` with the same factor on every axis.
    pub fn isotropic(geometry: TorusGeometry, factor: Vec<Complex64>) -> Result<Self> {
        let d = geometry.dim();
        Self::new(geometry, vec![factor; d])
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geometry
    }

    pub fn factors(&self) -> &[Vec<Complex64>] {
        &self.factors
    }

    pub fn radius(&self) -> usize {
        self.factors.iter().map(|a| a.len() / 2).max().unwrap_or(0)
    }

    pub fn l2_norm(&self) -> f64 {
        self.factors
            .iter()
            .map(|a| a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .product()
    }

    /// Multiply every factor by the one-dimensional symbol of `P_N`.
    pub fn project(&self, n: Dyadic, mode: LpMode) -> Self {
        let factors = self
            .factors
            .iter()
            .map(|a| {
                let m = (a.len() / 2) as i64;
                a.iter()
                    .enumerate()
                    .map(|(i, &c)| c * lp_factor(i as i64 - m, n, mode))
                    .collect()
            })
            .collect();
        Self {
            geometry: self.geometry.clone(),
            factors,
        }
    }

    /// The dense field on the box of radius [`Self::radius`].
    pub fn to_field(&self) -> FrequencyField {
        let m = self.radius() as i64;
        FrequencyField::from_fn(self.geometry.clone(), m as usize, |k| {
            k.iter()
                .zip(&self.factors)
                .map(|(&kj, a)| {
                    let mj = (a.len() / 2) as i64;
                    if kj.abs() > mj {
                        Complex64::default()
                    } else {
                        a[(kj + mj) as usize]
                    }
                })
                .product()
        })
    }

    fn evolvers(&self, n_x: usize) -> Result<Vec<LineEvolver>> {
        self.factors.iter().map(|a| LineEvolver::new(a.clone(), n_x)).collect()
    }
}

/// `‖e^{itΔ} f‖_{L^p_{t,x}([0, span) × T^d)}` for a product field, finite `p`.
pub fn product_lp_norm(f: &ProductField, p: f64, grid: &SpaceTimeGrid) -> Result<f64> {
    check_exponent(p)?;
    if p.is_infinite() {
        return Err(Error::Exponent { p, reason: "the product path handles finite p".into() });
    }
    let mut lines = f.evolvers(grid.n_x)?;
    let theta = f.geometry.theta().to_vec();
    let mut acc = MixedNorm::new(p, p, grid.dt())?;
    for i in 0..grid.n_t {
        let t = grid.time(i);
        let mut mean = 1.0;
        for (line, &th) in lines.iter_mut().zip(&theta) {
            let vals = line.eval(th * t);
            mean *= vals.iter().map(|&z| abs_pow(z, p)).sum::<f64>() / vals.len() as f64;
        }
        if !mean.is_finite() {
            return Err(Error::NonFinite(i));
        }
        acc.push_power_mean(mean);
    }
    Ok(acc.finish())
}

/// Canonical data families for exponent sweeps, all supported in `[-N, N]^d`
/// and L²-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataClass {
    /// `e^{2πi x_1}`: the lower witness, `|u| ≡ 1`.
    Character,
    /// All-ones coefficients: evolves into the refocusing kernel profile.
    Flat,
    /// Independent standard complex normals.
    RandomGaussian,
}

impl DataClass {
    pub fn name(self) -> &'static str {
        match self {
            DataClass::Character => "character",
            DataClass::Flat => "flat",
            DataClass::RandomGaussian => "random_gaussian",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "character" => Ok(DataClass::Character),
            "flat" => Ok(DataClass::Flat),
            "random_gaussian" | "gaussian" => Ok(DataClass::RandomGaussian),
            _ => Err(Error::Parameter(format!("unknown data class {s:?}"))),
        }
    }

    /// Factored form, for the classes that have one.
    pub fn product(self, n: Dyadic, g: &TorusGeometry) -> Option<ProductField> {
        let m = n.as_usize();
        let side = 2 * m + 1;
        let factors = match self {
            DataClass::Character => (0..g.dim())
                .map(|j| {
                    let mut a = vec![Complex64::default(); side];
                    a[m + usize::from(j == 0)] = Complex64::new(1.0, 0.0);
                    a
                })
                .collect(),
            DataClass::Flat => {
                let c = Complex64::new(1.0 / (side as f64).sqrt(), 0.0);
                vec![vec![c; side]; g.dim()]
            }
            DataClass::RandomGaussian => return None,
        };
        Some(ProductField::new(g.clone(), factors).expect("factors match the geometry"))
    }

    /// Dense data at scale `n`. The Gaussian stream depends on `(seed, N)` only.
    pub fn field(self, n: Dyadic, g: &TorusGeometry, seed: u64) -> FrequencyField {
        match self.product(n, g) {
            Some(p) => p.to_field(),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(n.get());
                let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid normal");
                let f = FrequencyField::from_fn(g.clone(), n.as_usize(), |_| {
                    Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng))
                });
                let l2 = f.l2_norm();
                f.scaled(Complex64::new(1.0 / l2, 0.0))
            }
        }
    }
}

/// Least-squares fit of `log ‖e^{itΔ}P_{<=N} f_N‖_{L^p}` against `log N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub class: DataClass,
    pub d: usize,
    pub p: f64,
    pub theoretical_exponent: f64,
    #[serde(rename = "N_list")]
    pub n_list: Vec<Dyadic>,
    pub norms: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
}

impl ScalingFit {
    pub fn from_norms(class: DataClass, d: usize, p: f64, n_list: Vec<Dyadic>, norms: Vec<f64>) -> Result<Self> {
        if n_list.len() != norms.len() || n_list.len() < 2 {
            return Err(Error::Shape(format!("{} scales vs {} norms", n_list.len(), norms.len())));
        }
        if let Some(i) = norms.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::NonFinite(i));
        }
        let xs: Vec<f64> = n_list.iter().map(|n| n.as_f64().ln()).collect();
        let ys: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
        let (slope, intercept, max_residual) = linear_fit(&xs, &ys);
        Ok(Self {
            class,
            d,
            p,
            theoretical_exponent: scaling_exponent(d, p),
            n_list,
            norms,
            slope,
            intercept,
            max_residual,
        })
    }

    /// `N^{d/2-(d+2)/p}`-normalized norms.
    pub fn ratios(&self) -> Vec<f64> {
        self.n_list
            .iter()
            .zip(&self.norms)
            .map(|(n, v)| v / n.as_f64().powf(self.theoretical_exponent))
            .collect()
    }
}

/// Norm of the evolution of `class` data at scale `n` over `[0, 1)`, on the
/// product path when the class factors.
pub fn class_norm(class: DataClass, n: Dyadic, p: f64, g: &TorusGeometry, seed: u64, budget: Budget) -> Result<f64> {
    let grid = norm_grid(n, n.as_usize(), p, g, 1.0)?;
    match class.product(n, g) {
        Some(pf) => {
            budget.check(grid.n_x as u128 * g.dim() as u128)?;
            product_lp_norm(&pf.project(n, LpMode::Leq), p, &grid)
        }
        None => {
            let f = class.field(n, g, seed);
            evolution_norm(&project_leq(&f, n)?, p, p, &grid, budget)
        }
    }
}

/// Measure the norm for every `N` (in parallel) and fit the exponent.
pub fn exponent_sweep(
    class: DataClass,
    p: f64,
    n_list: &[Dyadic],
    g: &TorusGeometry,
    seed: u64,
    budget: Budget,
) -> Result<ScalingFit> {
    if n_list.len() < 4 {
        return Err(Error::Parameter(format!("exponent sweeps need at least 4 scales, got {}", n_list.len())));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("scales must be strictly increasing".into()));
    }
    check_exponent(p)?;
    let norms: Vec<f64> = n_list
        .par_iter()
        .map(|&n| class_norm(class, n, p, g, seed, budget))
        .collect::<Result<_>>()?;
    ScalingFit::from_norms(class, g.dim(), p, n_list.to_vec(), norms)
}

/// Support rule of the band projector used by the bilinear check: at `N = 1`
/// the low piece `|k_j| <= 1`, otherwise `N/2 < |k_j| < 2N` on every axis.
pub fn in_band(k: i64, n: Dyadic) -> bool {
    let a = k.unsigned_abs();
    if n.get() == 1 {
        a <= 1
    } else {
        2 * a > n.get() && a < 2 * n.get()
    }
}

fn check_band_factor(a: &[Complex64], n: Dyadic) -> Result<()> {
    let m = (a.len() / 2) as i64;
    for (i, c) in a.iter().enumerate() {
        let k = i as i64 - m;
        if c.norm_sqr() > 0.0 && !in_band(k, n) {
            return Err(Error::Band(format!("coefficient at k = {k} lies outside the band of N = {n}")));
        }
    }
    Ok(())
}

fn check_band(f: &FrequencyField, n: Dyadic) -> Result<()> {
    let mut bad = None;
    f.indexer().for_each(|idx, k| {
        if bad.is_none() && f.coeffs()[idx].norm_sqr() > 0.0 && !k.iter().all(|&kj| in_band(kj, n)) {
            bad = Some(k.to_vec());
        }
    });
    match bad {
        Some(k) => Err(Error::Band(format!("coefficient at k = {k:?} lies outside the band of N = {n}"))),
        None => Ok(()),
    }
}

fn bilinear_checks(d: usize, n1: Dyadic, n2: Dyadic) -> Result<()> {
    if d < 3 {
        return Err(Error::Dimension(d));
    }
    if n2 > n1 {
        return Err(Error::Parameter(format!("need N2 <= N1, got N1 = {n1}, N2 = {n2}")));
    }
    Ok(())
}

/// Spatial resolution holding `|u v|^2` exactly for supports `m1`, `m2`.
pub fn bilinear_resolution(m1: usize, m2: usize) -> usize {
    smooth_size(2 * (2 * (m1 + m2)) + 1)
}

/// `‖(e^{itΔ}f)(e^{itΔ}h)‖_{L^2([0, span) × T^d)} / (N2^{(d-2)/2} ‖f‖ ‖h‖)`
/// on the full grid; `f = P_{N1} f`, `h = P_{N2} h`.
pub fn bilinear_ratio(
    f: &FrequencyField,
    n1: Dyadic,
    h: &FrequencyField,
    n2: Dyadic,
    grid: &SpaceTimeGrid,
    budget: Budget,
) -> Result<f64> {
    let d = f.dim();
    bilinear_checks(d, n1, n2)?;
    if f.geometry() != h.geometry() {
        return Err(Error::GeometryMismatch);
    }
    check_band(f, n1)?;
    check_band(h, n2)?;
    budget.check(2 * (grid.n_x as u128).pow(d as u32))?;
    let (nf, nh) = (f.l2_norm(), h.l2_norm());
    if nf == 0.0 || nh == 0.0 {
        return Err(Error::Parameter("bilinear ratio of a zero field".into()));
    }
    let mut slices_h = Vec::with_capacity(grid.n_t);
    let mut acc = MixedNorm::new(2.0, 2.0, grid.dt())?;
    for_each_time_slice(h, grid, h.geometry(), |_, vals| slices_h.push(vals.to_vec()))?;
    let mut failure = None;
    for_each_time_slice(f, grid, f.geometry(), |i, vals| {
        let prod: Vec<Complex64> = vals.iter().zip(&slices_h[i]).map(|(a, b)| a * b).collect();
        if let Err(e) = acc.push(&prod) {
            failure.get_or_insert(e);
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(acc.finish() / (n2.as_f64().powf((d as f64 - 2.0) / 2.0) * nf * nh))
}

/// [`bilinear_ratio`] for product data.
pub fn bilinear_ratio_product(
    f: &ProductField,
    n1: Dyadic,
    h: &ProductField,
    n2: Dyadic,
    grid: &SpaceTimeGrid,
) -> Result<f64> {
    let d = f.geometry.dim();
    bilinear_checks(d, n1, n2)?;
    if f.geometry != h.geometry {
        return Err(Error::GeometryMismatch);
    }
    for (a, b) in f.factors.iter().zip(&h.factors) {
        check_band_factor(a, n1)?;
        check_band_factor(b, n2)?;
    }
    let (nf, nh) = (f.l2_norm(), h.l2_norm());
    if nf == 0.0 || nh == 0.0 {
        return Err(Error::Parameter("bilinear ratio of a zero field".into()));
    }
    let mut lf = f.evolvers(grid.n_x)?;
    let mut lh = h.evolvers(grid.n_x)?;
    let theta = f.geometry.theta().to_vec();
    let mut acc = MixedNorm::new(2.0, 2.0, grid.dt())?;
    for i in 0..grid.n_t {
        let t = grid.time(i);
        let mut mean = 1.0;
        for j in 0..d {
            let s = theta[j] * t;
            let u = lf[j].eval(s).to_vec();
            let v = lh[j].eval(s);
            mean *= u.iter().zip(v).map(|(a, b)| (a * b).norm_sqr()).sum::<f64>() / u.len() as f64;
        }
        acc.push_power_mean(mean);
    }
    Ok(acc.finish() / (n2.as_f64().powf((d as f64 - 2.0) / 2.0) * nf * nh))
}

/// `P_N 1` restricted to its support, one factor per axis (`P_{<=1} 1` at `N = 1`).
pub fn flat_band(n: Dyadic, g: &TorusGeometry) -> ProductField {
    let m = 2 * n.as_usize();
    let mode = if n.get() == 1 { LpMode::Leq } else { LpMode::Band };
    let factor: Vec<Complex64> = (-(m as i64)..=m as i64)
        .map(|k| Complex64::new(if in_band(k, n) { lp_factor(k, n, mode) } else { 0.0 }, 0.0))
        .collect();
    ProductField::isotropic(g.clone(), factor).expect("isotropic factors")
}

/// The character `e^{2πi N(x_1 + ... + x_d)}`, in band at scale `N`.
pub fn character_band(n: Dyadic, g: &TorusGeometry) -> ProductField {
    let m = n.as_usize();
    let mut factor = vec![Complex64::default(); 2 * m + 1];
    factor[2 * m] = Complex64::new(1.0, 0.0);
    ProductField::isotropic(g.clone(), factor).expect("isotropic factors")
}

/// Which data the bilinear table is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BilinearData {
    Flat,
    Character,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearEntry {
    pub data: BilinearData,
    #[serde(rename = "N1")]
    pub n1: Dyadic,
    #[serde(rename = "N2")]
    pub n2: Dyadic,
    #[serde(rename = "T")]
    pub span: f64,
    pub ratio: f64,
}

/// Ratios for every `N2 <= N1` and every span, product path, time grid at
/// the density rule for `N1`.
pub fn bilinear_table(data: BilinearData, n1_list: &[Dyadic], spans: &[f64], g: &TorusGeometry) -> Result<Vec<BilinearEntry>> {
    let mut jobs = Vec::new();
    for &n1 in n1_list {
        for n2 in Dyadic::up_to(n1.as_f64()) {
            for &span in spans {
                jobs.push((n1, n2, span));
            }
        }
    }
    jobs.par_iter()
        .map(|&(n1, n2, span)| {
            let (f, h) = match data {
                BilinearData::Flat => (flat_band(n1, g), flat_band(n2, g)),
                BilinearData::Character => (character_band(n1, g), character_band(n2, g)),
            };
            let n_t = (time_density(n1, g) * span).ceil() as usize;
            let grid = SpaceTimeGrid::new(n_t.max(1), bilinear_resolution(f.radius(), h.radius()), span)?;
            let ratio = bilinear_ratio_product(&f, n1, &h, n2, &grid)?;
            Ok(BilinearEntry { data, n1, n2, span, ratio })
        })
        .collect()
}
