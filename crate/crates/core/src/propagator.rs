//! Free Schrödinger evolution and the frequency-localized kernel
//! `K_N(t, x) = Σ_k Π_j phi(k_j/N) e^{2πi [x_j k_j - t theta_j k_j^2]}`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{cis_turns, frac_product, NeumaierSum};
use crate::spectral::SpectralGrid;
use crate::torus::{lp_factor, BoxIndexer, Dyadic, FrequencyField, LpMode, TorusGeometry};
use crate::Budget;

/// Per-axis table of `e^{-2πi t theta k^2}` for `k ∈ [-M, M]`.
fn evolution_phases(t: f64, theta: f64, radius: usize) -> Vec<Complex64> {
    let s = t * theta;
    let m = radius as i64;
    (-m..=m).map(|k| cis_turns(-frac_product(s, k * k))).collect()
}

/// `e^{itΔ} f`: multiplies `f̂(k)` by `exp(-2πi t Σ_j theta_j k_j^2)`.
pub fn free_evolve(f: &FrequencyField, t: f64, g: &TorusGeometry) -> Result<FrequencyField> {
    if f.geometry() != g {
        return Err(Error::GeometryMismatch);
    }
    let m = f.radius() as i64;
    let tables: Vec<Vec<Complex64>> = g.theta().iter().map(|&th| evolution_phases(t, th, f.radius())).collect();
    let mut out = f.clone();
    let coeffs = out.coeffs_mut();
    f.indexer().for_each(|idx, k| {
        let mut ph = Complex64::new(1.0, 0.0);
        for (j, &kj) in k.iter().enumerate() {
            ph *= tables[j][(kj + m) as usize];
        }
        coeffs[idx] *= ph;
    });
    Ok(out)
}

/// Reference evaluation of `K_N(t, x)` by direct compensated summation over
/// `k ∈ [-2N, 2N]^d` in lexicographic order.
pub fn kernel_direct(t: f64, x: &[f64], n: Dyadic, g: &TorusGeometry) -> Result<Complex64> {
    if x.len() != g.dim() {
        return Err(Error::Shape(format!("point has {} coordinates, torus has {}", x.len(), g.dim())));
    }
    let radius = 2 * n.as_usize();
    let indexer = BoxIndexer::new(g.dim(), radius);
    let mut sum = NeumaierSum::default();
    indexer.for_each(|_, k| {
        let weight: f64 = k.iter().map(|&kj| lp_factor(kj, n, LpMode::Leq)).product();
        if weight == 0.0 {
            return;
        }
        let mut turns = 0.0;
        for (j, &kj) in k.iter().enumerate() {
            turns += frac_product(x[j], kj) - frac_product(t * g.theta()[j], kj * kj);
        }
        sum.add(cis_turns(turns) * weight);
    });
    Ok(sum.value())
}

/// `K_N(t, ·)` sampled on the uniform grid `x_m = m / n_x`, `m ∈ {0..n_x-1}^d`.
#[derive(Debug, Clone)]
pub struct KernelEvaluation {
    pub n: Dyadic,
    pub geometry: TorusGeometry,
    pub t: f64,
    pub n_x: usize,
    pub values: Vec<Complex64>,
}

impl KernelEvaluation {
    pub fn flat_index(&self, m: &[usize]) -> usize {
        m.iter().fold(0, |acc, &mj| acc * self.n_x + mj)
    }

    pub fn value(&self, m: &[usize]) -> Complex64 {
        self.values[self.flat_index(m)]
    }

    pub fn point(&self, m: &[usize]) -> Vec<f64> {
        m.iter().map(|&mj| mj as f64 / self.n_x as f64).collect()
    }

    /// Off-grid evaluation falls back to the direct sum.
    pub fn at(&self, x: &[f64]) -> Result<Complex64> {
        kernel_direct(self.t, x, self.n, &self.geometry)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn mean(&self) -> Complex64 {
        let mut s = NeumaierSum::default();
        self.values.iter().for_each(|&z| s.add(z));
        s.value() / self.values.len() as f64
    }
}

/// Minimum spatial resolution holding the symbol support `[-2N, 2N]`.
pub fn min_kernel_resolution(n: Dyadic) -> usize {
    4 * n.as_usize() + 1
}

/// Fast path: inverse DFT of the phased symbol on the grid.
pub fn kernel_grid(t: f64, n_x: usize, n: Dyadic, g: &TorusGeometry, budget: Budget) -> Result<KernelEvaluation> {
    let needed = min_kernel_resolution(n);
    if n_x < needed {
        return Err(Error::GridTooCoarse { n: n_x, needed });
    }
    budget.check((n_x as u128).pow(g.dim() as u32))?;
    let radius = 2 * n.as_usize();
    let symbol = FrequencyField::from_fn(g.clone(), radius, |k| {
        let w: f64 = k.iter().map(|&kj| lp_factor(kj, n, LpMode::Leq)).product();
        Complex64::new(w, 0.0)
    });
    let evolved = free_evolve(&symbol, t, g)?;
    let values = SpectralGrid::new(g.dim(), n_x).synthesize(&evolved)?;
    Ok(KernelEvaluation {
        n,
        geometry: g.clone(),
        t,
        n_x,
        values,
    })
}

/// One-dimensional kernel `K^{(1)}_N(s, x) = Σ_k phi(k/N) e^{2πi(xk - s k^2)}`
/// evaluated on a uniform grid for many `s`. `K_N` on `T^d` is the product of
/// these factors with `s = theta_j t`, which the labs exploit.
#[derive(Clone)]
pub struct KernelLine {
    n: Dyadic,
    n_x: usize,
    weights: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

const RESYNC: usize = 64;

impl KernelLine {
    pub fn new(n: Dyadic, n_x: usize) -> Result<Self> {
        let needed = min_kernel_resolution(n);
        if n_x < needed {
            return Err(Error::GridTooCoarse { n: n_x, needed });
        }
        let fft = FftPlanner::new().plan_fft_inverse(n_x);
        let scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let weights = (0..=2 * n.get() as i64).map(|k| lp_factor(k, n, LpMode::Leq)).collect();
        Ok(Self {
            n,
            n_x,
            weights,
            fft,
            buffer: vec![Complex64::default(); n_x],
            scratch,
        })
    }

    pub fn n(&self) -> Dyadic {
        self.n
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    /// Fill the internal buffer with `K^{(1)}(s, m/n_x)` and return it.
    pub fn eval(&mut self, s: f64) -> &[Complex64] {
        let n_x = self.n_x;
        self.buffer.iter_mut().for_each(|z| *z = Complex64::default());
        // w_k = e^{-2πi s k^2} by the recurrence w_{k+1} = w_k r_k,
        // r_k = e^{-2πi s (2k+1)}, resynchronized every RESYNC terms.
        let step = cis_turns(-frac_product(s, 2));
        let mut w = Complex64::new(1.0, 0.0);
        let mut r = cis_turns(-frac_product(s, 1));
        for (k, &weight) in self.weights.iter().enumerate() {
            if k % RESYNC == 0 && k > 0 {
                let ki = k as i64;
                w = cis_turns(-frac_product(s, ki * ki));
                r = cis_turns(-frac_product(s, 2 * ki + 1));
            }
            // k <= 2N < n_x, so both k and -k have their own slot.
            if weight != 0.0 {
                let v = w * weight;
                if k == 0 {
                    self.buffer[0] += v;
                } else {
                    self.buffer[k] += v;
                    self.buffer[n_x - k] += v;
                }
            }
            w *= r;
            r *= step;
        }
        self.fft.process_with_scratch(&mut self.buffer, &mut self.scratch);
        &self.buffer
    }

    pub fn max_abs(&mut self, s: f64) -> f64 {
        self.eval(s).iter().map(|z| z.norm_sqr()).fold(0.0, f64::max).sqrt()
    }
}

/// Uniform space-time sampling of `[0, span) × T^d`: `t_i = i·span/n_t`,
/// `x_m = m / n_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub n_t: usize,
    pub n_x: usize,
    pub span: f64,
}

/// Samples per unit time needed to resolve the fastest phase `2π t theta (2N)^2`.
pub fn time_density(n: Dyadic, g: &TorusGeometry) -> f64 {
    16.0 * (2.0 * n.as_f64()).powi(2) * g.max_theta()
}

impl SpaceTimeGrid {
    pub fn new(n_t: usize, n_x: usize, span: f64) -> Result<Self> {
        if n_t == 0 || n_x == 0 || !(span > 0.0) {
            return Err(Error::Parameter(format!("invalid grid n_t={n_t}, n_x={n_x}, span={span}")));
        }
        Ok(Self { n_t, n_x, span })
    }

    /// Grid on `[0, span)` meeting the time-density rule for frequency scale `n`.
    pub fn resolving(n: Dyadic, g: &TorusGeometry, n_x: usize, span: f64) -> Result<Self> {
        let n_t = (time_density(n, g) * span).ceil() as usize;
        Self::new(n_t.max(1), n_x, span)
    }

    pub fn dt(&self) -> f64 {
        self.span / self.n_t as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.span * i as f64 / self.n_t as f64
    }
}

/// Space-time samples `u(t_i, x_m)`, time-major.
#[derive(Debug, Clone)]
pub struct SpaceTimeSamples {
    pub grid: SpaceTimeGrid,
    pub dim: usize,
    pub values: Vec<Complex64>,
}

impl SpaceTimeSamples {
    pub fn slice_len(&self) -> usize {
        self.grid.n_x.pow(self.dim as u32)
    }

    pub fn slice(&self, i: usize) -> &[Complex64] {
        let len = self.slice_len();
        &self.values[i * len..(i + 1) * len]
    }
}

/// Grid values of `e^{it_iΔ} f` for every time sample, visited in time order.
pub fn for_each_time_slice(
    f: &FrequencyField,
    grid: &SpaceTimeGrid,
    g: &TorusGeometry,
    mut visit: impl FnMut(usize, &[Complex64]),
) -> Result<()> {
    let spectral = SpectralGrid::new(g.dim(), grid.n_x);
    for i in 0..grid.n_t {
        let evolved = free_evolve(f, grid.time(i), g)?;
        let vals = spectral.synthesize(&evolved)?;
        visit(i, &vals);
    }
    Ok(())
}

pub fn sample_spacetime(f: &FrequencyField, grid: &SpaceTimeGrid, g: &TorusGeometry, budget: Budget) -> Result<SpaceTimeSamples> {
    let coeff_cells = f.indexer().len() as u128 * grid.n_t as u128;
    budget.check(coeff_cells)?;
    let slice = (grid.n_x as u128).pow(g.dim() as u32);
    budget.check(slice * grid.n_t as u128)?;
    let mut values = Vec::with_capacity((slice * grid.n_t as u128) as usize);
    for_each_time_slice(f, grid, g, |_, vals| values.extend_from_slice(vals))?;
    Ok(SpaceTimeSamples {
        grid: *grid,
        dim: g.dim(),
        values,
    })
}
