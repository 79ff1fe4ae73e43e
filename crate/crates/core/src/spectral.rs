//! Uniform-grid synthesis and analysis of [`FrequencyField`]s through
//! multidimensional FFTs.
//!
//! Grid point `m ∈ {0..n-1}^d` sits at `x = m / n`. Synthesis computes
//! `u(x_m) = Σ_k f̂(k) e^{2πi k·m/n}` exactly when `n >= 2M + 1`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::torus::{BoxIndexer, FrequencyField, TorusGeometry};

#[derive(Clone)]
pub struct SpectralGrid {
    dim: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralGrid").field("dim", &self.dim).field("n", &self.n).finish()
    }
}

impl SpectralGrid {
    pub fn new(dim: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dim,
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Coordinates of grid point with flat index `idx`.
    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for slot in x.iter_mut().rev() {
            *slot = (idx % self.n) as f64 / self.n as f64;
            idx /= self.n;
        }
        x
    }

    /// Unnormalized in-place transform along every axis.
    pub fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let fft = if inverse { &self.inverse } else { &self.forward };
        let n = self.n;
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let mut line = vec![Complex64::default(); n];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                fft.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = stride * n;
            for start in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = data[base + i * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        data[base + i * stride] = *v;
                    }
                }
            }
        }
    }

    fn wrap(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Grid values of a field. Requires `n >= 2M + 1` so no coefficients alias.
    pub fn synthesize(&self, field: &FrequencyField) -> Result<Vec<Complex64>> {
        if field.dim() != self.dim {
            return Err(Error::Shape(format!("field dimension {} vs grid dimension {}", field.dim(), self.dim)));
        }
        let needed = 2 * field.radius() + 1;
        if self.n < needed {
            return Err(Error::GridTooCoarse { n: self.n, needed });
        }
        let mut data = vec![Complex64::default(); self.len()];
        let coeffs = field.coeffs();
        field.indexer().for_each(|idx, k| {
            let mut flat = 0usize;
            for &kj in k {
                flat = flat * self.n + self.wrap(kj);
            }
            data[flat] = coeffs[idx];
        });
        self.transform(&mut data, true);
        Ok(data)
    }

    /// Fourier coefficients of grid values restricted to the box `[-M, M]^d`,
    /// together with the discarded energy `Σ_{k outside box} |c_k|^2`.
    pub fn analyze(&self, mut values: Vec<Complex64>, geometry: &TorusGeometry, radius: usize) -> Result<(FrequencyField, f64)> {
        if values.len() != self.len() {
            return Err(Error::Shape(format!("{} grid values, expected {}", values.len(), self.len())));
        }
        let needed = 2 * radius + 1;
        if self.n < needed {
            return Err(Error::GridTooCoarse { n: self.n, needed });
        }
        self.transform(&mut values, false);
        let scale = 1.0 / self.len() as f64;
        let total: f64 = values.iter().map(|z| z.norm_sqr()).sum::<f64>() * scale * scale;
        let indexer = BoxIndexer::new(self.dim, radius);
        let mut coeffs = vec![Complex64::default(); indexer.len()];
        let mut kept = 0.0;
        indexer.for_each(|idx, k| {
            let mut flat = 0usize;
            for &kj in k {
                flat = flat * self.n + self.wrap(kj);
            }
            let c = values[flat] * scale;
            kept += c.norm_sqr();
            coeffs[idx] = c;
        });
        let field = FrequencyField::from_coeffs(geometry.clone(), radius, coeffs)?;
        Ok((field, (total - kept).max(0.0)))
    }
}
