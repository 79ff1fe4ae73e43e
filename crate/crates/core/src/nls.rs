//! Energy-critical NLS `i u_t + Δu = ±|u|^{4/(d-2)} u` on `T^d`, `d ∈ {3, 4}`,
//! with `Δ = Σ_j theta_j ∂_j^2`.
//!
//! The linear flow is `e^{itΔ}`, i.e. [`free_evolve`] at time `2π t`, so that
//! the energy below (gradient term `(2π)^2 Σ theta_j k_j^2`) is conserved.
//!
//! Two independent integrators:
//! - [`picard_solve`]: Galerkin truncation to the data box `[-M, M]^d`, Duhamel
//!   integral by composite trapezoid, fixed point by iteration;
//! - [`split_step_evolve`]: Strang splitting on the full pseudo-spectral grid.
//!
//! The nonlinearity is evaluated on a grid of `n >= (deg + 1) M + 1` points
//! per axis (`deg = 4/(d-2) + 1`), which makes its projection onto the box
//! alias-free and the potential energy quadrature exact.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::numerics::{abs_pow, smooth_size};
use crate::propagator::free_evolve;
use crate::spectral::SpectralGrid;
use crate::torus::{FrequencyField, Sobolev, TorusGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    /// `+|u|^{4/(d-2)} u`
    Defocusing,
    /// `-|u|^{4/(d-2)} u`
    Focusing,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Defocusing => 1.0,
            Sign::Focusing => -1.0,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "defocusing" | "+" => Ok(Sign::Defocusing),
            "focusing" | "-" => Ok(Sign::Focusing),
            _ => Err(Error::Parameter(format!("unknown sign {s:?}"))),
        }
    }
}

/// Largest step allowed by the guard `dt <= c / N^2`.
pub const STABILITY_CONSTANT: f64 = 1.0;

/// Focusing runs stop at this final time.
pub const FOCUSING_MAX_TIME: f64 = 0.25;

/// A split-step run aborts once `‖u‖_{H^1}` exceeds this multiple of its
/// initial value.
pub const BLOWUP_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct NlsProblem {
    geometry: TorusGeometry,
    sign: Sign,
    u0: FrequencyField,
    scale: f64,
}

fn check_dim(d: usize) -> Result<()> {
    if d == 3 || d == 4 {
        Ok(())
    } else {
        Err(Error::Dimension(d))
    }
}

/// `4/(d-2)`.
fn power(d: usize) -> i32 {
    (4 / (d - 2)) as i32
}

impl NlsProblem {
    pub fn new(sign: Sign, u0: FrequencyField) -> Result<Self> {
        check_dim(u0.dim())?;
        if let Some(i) = u0.coeffs().iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            geometry: u0.geometry().clone(),
            sign,
            u0,
            scale: 1.0,
        })
    }

    /// Multiply the nonlinearity by `scale`; `0` gives the linear equation.
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geometry
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn u0(&self) -> &FrequencyField {
        &self.u0
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    /// Box radius `M` of the data, which is also the Galerkin box.
    pub fn band(&self) -> usize {
        self.u0.radius()
    }

    pub fn with_data(&self, u0: FrequencyField) -> Result<Self> {
        Ok(Self::new(self.sign, u0)?.with_scale(self.scale))
    }

    fn coupling(&self) -> f64 {
        self.sign.value() * self.scale
    }

    fn engine(&self) -> Result<Pseudo> {
        Pseudo::new(&self.geometry, self.band(), self.coupling())
    }
}

/// `e^{itΔ}` with the true Laplacian.
pub fn linear_flow(u: &FrequencyField, t: f64) -> Result<FrequencyField> {
    free_evolve(u, TAU * t, u.geometry())
}

/// Grid size making `|u|^{4/(d-2)} u` alias-free on `[-M, M]^d`.
pub fn dealiased_size(d: usize, m: usize) -> usize {
    let deg = power(d) as usize + 1;
    smooth_size((deg + 1) * m + 1)
}

/// Pseudo-spectral evaluator of the nonlinearity on a fixed grid.
#[derive(Debug, Clone)]
struct Pseudo {
    grid: SpectralGrid,
    geometry: TorusGeometry,
    radius: usize,
    coupling: f64,
    power: i32,
}

impl Pseudo {
    fn new(geometry: &TorusGeometry, radius: usize, coupling: f64) -> Result<Self> {
        let d = geometry.dim();
        Self::with_grid(geometry, radius, coupling, dealiased_size(d, radius))
    }

    fn with_grid(geometry: &TorusGeometry, radius: usize, coupling: f64, n: usize) -> Result<Self> {
        let d = geometry.dim();
        check_dim(d)?;
        let needed = (power(d) as usize + 2) * radius + 1;
        if n < needed {
            return Err(Error::GridTooCoarse { n, needed });
        }
        Ok(Self {
            grid: SpectralGrid::new(d, n),
            geometry: geometry.clone(),
            radius,
            coupling,
            power: power(d),
        })
    }

    fn values(&self, u: &FrequencyField) -> Result<Vec<Complex64>> {
        self.grid.synthesize(u)
    }

    fn pointwise(&self, vals: &mut [Complex64]) {
        let (c, half) = (self.coupling, self.power / 2);
        for z in vals.iter_mut() {
            *z *= c * z.norm_sqr().powi(half);
        }
    }

    /// `F(u)` projected to the box, with the discarded energy.
    fn apply(&self, u: &FrequencyField) -> Result<(FrequencyField, f64)> {
        if self.coupling == 0.0 {
            return Ok((FrequencyField::zeros(self.geometry.clone(), self.radius), 0.0));
        }
        let mut vals = self.values(u)?;
        self.pointwise(&mut vals);
        self.grid.analyze(vals, &self.geometry, self.radius)
    }

    /// `∫ |u|^{2d/(d-2)}`, exact on the dealiased grid.
    fn potential(&self, vals: &[Complex64]) -> f64 {
        let q = (self.power + 2) as f64;
        vals.iter().map(|&z| abs_pow(z, q)).sum::<f64>() / vals.len() as f64
    }
}

/// `±|u|^{4/(d-2)} u`, projected back onto `u`'s box.
pub fn nonlinearity(u: &FrequencyField, sign: Sign) -> Result<FrequencyField> {
    Ok(Pseudo::new(u.geometry(), u.radius(), sign.value())?.apply(u)?.0)
}

/// [`nonlinearity`] on an explicit grid, rejecting grids that alias.
pub fn nonlinearity_on_grid(u: &FrequencyField, sign: Sign, n: usize) -> Result<(FrequencyField, f64)> {
    Pseudo::with_grid(u.geometry(), u.radius(), sign.value(), n)?.apply(u)
}

/// `½ ∫ |u|^2`.
pub fn mass(u: &FrequencyField) -> f64 {
    0.5 * u.coeffs().iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// `½ Σ_k (2π)^2 Σ_j theta_j k_j^2 |û(k)|^2`.
pub fn kinetic_energy(u: &FrequencyField) -> f64 {
    let g = u.geometry();
    let mut total = 0.0;
    u.indexer().for_each(|idx, k| {
        total += g.dispersion(k) * u.coeffs()[idx].norm_sqr();
    });
    0.5 * TAU * TAU * total
}

/// `½ ∫ Σ theta_j |∂_j u|^2 ± (d-2)/(2d) ∫ |u|^{2d/(d-2)}`.
pub fn energy(u: &FrequencyField, sign: Sign) -> Result<f64> {
    energy_scaled(u, sign.value())
}

fn energy_scaled(u: &FrequencyField, coupling: f64) -> Result<f64> {
    let d = u.dim();
    check_dim(d)?;
    if coupling == 0.0 {
        return Ok(kinetic_energy(u));
    }
    let engine = Pseudo::new(u.geometry(), u.radius(), coupling)?;
    let vals = engine.values(u)?;
    Ok(energy_from(u, &engine, &vals))
}

fn energy_from(u: &FrequencyField, engine: &Pseudo, vals: &[Complex64]) -> f64 {
    let d = u.dim() as f64;
    kinetic_energy(u) + engine.coupling * (d - 2.0) / (2.0 * d) * engine.potential(vals)
}

/// Time-indexed states with per-time diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub mass: f64,
    pub energy: f64,
    pub h1: f64,
    pub linf: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<FrequencyField>,
    pub diagnostics: Vec<Diagnostics>,
    /// Set when a run stopped early (blow-up guard).
    pub flag: Option<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &FrequencyField {
        self.states.last().expect("trajectories start at u0")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectories start at t = 0")
    }

    fn uniform_step(&self) -> Result<f64> {
        if self.times.len() < 2 || self.times[0] != 0.0 {
            return Err(Error::Parameter("trajectory must start at t = 0 and have at least two times".into()));
        }
        let dt = self.times[1] - self.times[0];
        for (i, &t) in self.times.iter().enumerate() {
            if (t - i as f64 * dt).abs() > 1e-9 * dt.max(t) {
                return Err(Error::Parameter("trajectory time grid is not uniform".into()));
            }
        }
        Ok(dt)
    }

    /// `sup_t ‖u(t) - v(t)‖_{H^1}` over a shared grid.
    pub fn distance(&self, other: &Trajectory) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::Shape(format!("trajectories of length {} and {}", self.len(), other.len())));
        }
        sup_h1_distance(&self.states, &other.states)
    }
}

fn sup_h1_distance(a: &[FrequencyField], b: &[FrequencyField]) -> Result<f64> {
    let mut sup = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        sup = sup.max(x.sub(y)?.sobolev_norm(Sobolev::H1));
    }
    Ok(sup)
}

fn diagnose(u: &FrequencyField, engine: &Pseudo) -> Result<Diagnostics> {
    let vals = engine.values(u)?;
    Ok(Diagnostics {
        mass: mass(u),
        energy: energy_from(u, engine, &vals),
        h1: u.h1_norm(),
        linf: vals.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max).sqrt(),
    })
}

fn time_grid(t_final: f64, dt: f64, band: usize) -> Result<(usize, f64)> {
    if !(t_final > 0.0 && t_final.is_finite()) || !(dt > 0.0) {
        return Err(Error::Parameter(format!("need T > 0 and dt > 0, got T = {t_final}, dt = {dt}")));
    }
    let steps = (t_final / dt).round().max(1.0) as usize;
    let h = t_final / steps as f64;
    if (h - dt).abs() > 1e-9 * dt {
        return Err(Error::Parameter(format!("T = {t_final} is not a multiple of dt = {dt}")));
    }
    let n = band.max(1) as f64;
    let limit = STABILITY_CONSTANT / (n * n);
    if h > limit * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!("dt = {h} violates the stability guard dt <= {limit}")));
    }
    Ok((steps, h))
}

fn check_horizon(problem: &NlsProblem, t_final: f64) -> Result<()> {
    if problem.sign == Sign::Focusing && problem.scale != 0.0 && t_final > FOCUSING_MAX_TIME {
        return Err(Error::Parameter(format!("focusing runs are capped at T <= {FOCUSING_MAX_TIME}")));
    }
    Ok(())
}

/// `I(t_n) = ∫_0^{t_n} e^{i(t_n - s)Δ} F(u(s)) ds` by composite trapezoid,
/// through `I_{n+1} = e^{i dt Δ}(I_n + dt/2 F_n) + dt/2 F_{n+1}`.
fn duhamel_integral(states: &[FrequencyField], dt: f64, engine: &Pseudo) -> Result<Vec<FrequencyField>> {
    let half = Complex64::new(0.5 * dt, 0.0);
    let mut out = Vec::with_capacity(states.len());
    let mut prev_f = engine.apply(&states[0])?.0;
    let mut acc = FrequencyField::zeros(engine.geometry.clone(), engine.radius);
    out.push(acc.clone());
    for u in &states[1..] {
        let f = engine.apply(u)?.0;
        acc = linear_flow(&acc.axpy(half, &prev_f)?, dt)?.axpy(half, &f)?;
        out.push(acc.clone());
        prev_f = f;
    }
    Ok(out)
}

fn free_trajectory_states(u0: &FrequencyField, steps: usize, dt: f64) -> Result<Vec<FrequencyField>> {
    let step = linear_flow(&u0.resized(u0.radius()), 0.0)?;
    let mut out = vec![step];
    for i in 1..=steps {
        out.push(linear_flow(u0, i as f64 * dt)?);
    }
    Ok(out)
}

fn assemble(problem: &NlsProblem, integral: &[FrequencyField], dt: f64) -> Result<Vec<FrequencyField>> {
    let minus_i = Complex64::new(0.0, -1.0);
    integral
        .iter()
        .enumerate()
        .map(|(i, int)| linear_flow(&problem.u0, i as f64 * dt)?.axpy(minus_i, int))
        .collect()
}

fn finish(problem: &NlsProblem, dt: f64, states: Vec<FrequencyField>, engine: &Pseudo) -> Result<Trajectory> {
    let times = (0..states.len()).map(|i| i as f64 * dt).collect();
    let diagnostics = states.iter().map(|u| diagnose(u, engine)).collect::<Result<_>>()?;
    let _ = problem;
    Ok(Trajectory {
        times,
        states,
        diagnostics,
        flag: None,
    })
}

fn check_states(problem: &NlsProblem, traj: &Trajectory) -> Result<()> {
    for s in &traj.states {
        if s.geometry() != problem.geometry() {
            return Err(Error::GeometryMismatch);
        }
        if s.radius() != problem.band() {
            return Err(Error::Shape(format!("state box radius {} vs data box {}", s.radius(), problem.band())));
        }
    }
    Ok(())
}

/// The free evolution of the data on the grid `t_n = n dt`, `n <= T/dt`.
pub fn free_trajectory(problem: &NlsProblem, t_final: f64, dt: f64) -> Result<Trajectory> {
    let (steps, h) = time_grid(t_final, dt, problem.band())?;
    let states = free_trajectory_states(&problem.u0, steps, h)?;
    finish(problem, h, states, &problem.engine()?)
}

/// One Picard iterate `Φ(u)(t) = e^{itΔ}u0 - i ∫_0^t e^{i(t-s)Δ} F(u(s)) ds`
/// on `u`'s time grid.
pub fn duhamel_apply(traj: &Trajectory, problem: &NlsProblem) -> Result<Trajectory> {
    check_states(problem, traj)?;
    let dt = traj.uniform_step()?;
    time_grid(traj.final_time(), dt, problem.band())?;
    let engine = problem.engine()?;
    let integral = duhamel_integral(&traj.states, dt, &engine)?;
    let states = assemble(problem, &integral, dt)?;
    finish(problem, dt, states, &engine)
}

/// `sup_t ‖Φ(u) - Φ(v)‖_{H^1} / sup_t ‖u - v‖_{H^1}`, with the two Duhamel
/// integrals differenced directly (the free parts cancel exactly).
pub fn contraction_factor(problem: &NlsProblem, u: &Trajectory, v: &Trajectory) -> Result<f64> {
    check_states(problem, u)?;
    check_states(problem, v)?;
    let dt = u.uniform_step()?;
    if (v.uniform_step()? - dt).abs() > 1e-12 * dt || u.len() != v.len() {
        return Err(Error::Shape("trajectories must share a time grid".into()));
    }
    let engine = problem.engine()?;
    let iu = duhamel_integral(&u.states, dt, &engine)?;
    let iv = duhamel_integral(&v.states, dt, &engine)?;
    let denom = u.distance(v)?;
    if denom == 0.0 {
        return Err(Error::Parameter("contraction factor of identical trajectories".into()));
    }
    Ok(sup_h1_distance(&iu, &iv)? / denom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `sup_t ‖u_{k+1} - u_k‖_{H^1}`.
    pub difference: f64,
    /// Ratio to the previous difference.
    pub ratio: Option<f64>,
    /// The same difference in `L^p_{t,x}`, `p = 4` for `d = 3` and `10/3`
    /// for `d = 4`; logged only.
    pub lp_difference: f64,
}

/// Secondary metric exponent for the Picard log.
pub fn surrogate_exponent(d: usize) -> f64 {
    if d == 3 {
        4.0
    } else {
        10.0 / 3.0
    }
}

fn spacetime_lp_distance(a: &[FrequencyField], b: &[FrequencyField], dt: f64, engine: &Pseudo) -> Result<f64> {
    let p = surrogate_exponent(engine.geometry.dim());
    let mut total = 0.0;
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        let vals = engine.values(&x.sub(y)?)?;
        let w = if i == 0 || i + 1 == a.len() { 0.5 } else { 1.0 };
        total += w * vals.iter().map(|&z| abs_pow(z, p)).sum::<f64>() / vals.len() as f64;
    }
    Ok((dt * total).powf(1.0 / p))
}

#[derive(Debug, Clone)]
pub struct PicardSolution {
    pub trajectory: Trajectory,
    pub log: Vec<IterationRecord>,
    pub converged: bool,
}

/// Iterate [`duhamel_apply`] from the free evolution until successive iterates
/// differ by less than `tol` in `sup_t H^1`.
pub fn picard_solve(problem: &NlsProblem, t_final: f64, dt: f64, max_iter: usize, tol: f64) -> Result<PicardSolution> {
    check_horizon(problem, t_final)?;
    let (steps, h) = time_grid(t_final, dt, problem.band())?;
    let engine = problem.engine()?;
    let mut states = free_trajectory_states(&problem.u0, steps, h)?;
    let mut prev_integral: Vec<FrequencyField> = vec![FrequencyField::zeros(problem.geometry.clone(), problem.band()); steps + 1];
    let mut log: Vec<IterationRecord> = Vec::new();
    let mut rising = 0;
    let mut converged = false;
    for iteration in 1..=max_iter.max(1) {
        let integral = duhamel_integral(&states, h, &engine)?;
        let difference = sup_h1_distance(&integral, &prev_integral)?;
        let ratio = log.last().filter(|r| r.difference > 0.0).map(|r| difference / r.difference);
        let lp_difference = spacetime_lp_distance(&integral, &prev_integral, h, &engine)?;
        log.push(IterationRecord {
            iteration,
            difference,
            ratio,
            lp_difference,
        });
        states = assemble(problem, &integral, h)?;
        prev_integral = integral;
        if difference < tol {
            converged = true;
            break;
        }
        if ratio.is_some_and(|r| r >= 1.0) {
            rising += 1;
            if rising >= 3 {
                return Err(Error::NotContracting {
                    ratios: log.iter().filter_map(|r| r.ratio).collect(),
                });
            }
        } else {
            rising = 0;
        }
    }
    let trajectory = finish(problem, h, states, &engine)?;
    Ok(PicardSolution { trajectory, log, converged })
}

/// Knobs of [`split_step_evolve_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitOptions {
    /// Record every k-th step (and the final one).
    pub record_every: usize,
    /// Abort once `‖u‖_{H^1}` exceeds this multiple of its initial value.
    pub blowup_factor: f64,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self {
            record_every: 1,
            blowup_factor: BLOWUP_FACTOR,
        }
    }
}

/// Strang splitting on the dealiased grid: half nonlinear phase rotation,
/// exact linear step on every grid mode, half rotation. States are recorded
/// as box projections.
pub fn split_step_evolve(problem: &NlsProblem, t_final: f64, dt: f64) -> Result<Trajectory> {
    split_step_evolve_with(problem, t_final, dt, &SplitOptions::default())
}

pub fn split_step_evolve_with(problem: &NlsProblem, t_final: f64, dt: f64, opts: &SplitOptions) -> Result<Trajectory> {
    check_horizon(problem, t_final)?;
    let (steps, h) = time_grid(t_final, dt, problem.band())?;
    let record_every = opts.record_every.max(1);
    let engine = problem.engine()?;
    let grid = &engine.grid;
    let n = grid.n();
    let d = problem.dim();
    let theta = problem.geometry.theta().to_vec();
    // Per-axis linear phases e^{-i (2π)^2 theta_j k^2 h} on the grid modes.
    let axis_phase: Vec<Vec<Complex64>> = theta
        .iter()
        .map(|&th| {
            (0..n)
                .map(|m| {
                    let k = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                    Complex64::from_polar(1.0, -TAU * TAU * th * k * k * h)
                })
                .collect()
        })
        .collect();
    let len = grid.len();
    let mut phase = vec![Complex64::new(1.0, 0.0); len];
    for (idx, p) in phase.iter_mut().enumerate() {
        let mut rest = idx;
        for j in (0..d).rev() {
            *p *= axis_phase[j][rest % n];
            rest /= n;
        }
    }
    let half_rot = -0.5 * h * engine.coupling;
    let half = engine.power / 2;
    let rotate = |vals: &mut [Complex64]| {
        if half_rot != 0.0 {
            for z in vals.iter_mut() {
                *z *= Complex64::from_polar(1.0, half_rot * z.norm_sqr().powi(half));
            }
        }
    };
    let project = |vals: &[Complex64]| -> Result<FrequencyField> {
        Ok(grid.analyze(vals.to_vec(), &problem.geometry, problem.band())?.0)
    };

    let mut vals = grid.synthesize(&problem.u0)?;
    let h1_0 = problem.u0.h1_norm();
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![problem.u0.clone()],
        diagnostics: vec![diagnose(&problem.u0, &engine)?],
        flag: None,
    };
    let scale = 1.0 / len as f64;
    for step in 1..=steps {
        rotate(&mut vals);
        grid.transform(&mut vals, false);
        for (z, p) in vals.iter_mut().zip(&phase) {
            *z *= p * scale;
        }
        grid.transform(&mut vals, true);
        rotate(&mut vals);
        if step % record_every == 0 || step == steps {
            let u = project(&vals)?;
            let diag = diagnose(&u, &engine)?;
            let blown = !diag.h1.is_finite() || (h1_0 > 0.0 && diag.h1 > opts.blowup_factor * h1_0);
            traj.times.push(step as f64 * h);
            traj.states.push(u);
            traj.diagnostics.push(diag);
            if blown {
                traj.flag = Some(format!(
                    "blow-up guard: H1 norm exceeded {} x initial at t = {}",
                    opts.blowup_factor,
                    step as f64 * h
                ));
                break;
            }
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub mass_drift: f64,
    pub energy_drift: f64,
    /// `min_t (M + E) / ‖u(t)‖^2_{H^1}`.
    pub h1_equivalence_min: f64,
    /// `max_t (M + E) / ‖u(t)‖^2_{H^1}`.
    pub h1_equivalence_max: f64,
}

fn relative_drift(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let first = values.clone().next().unwrap_or(0.0);
    let spread = values.map(|v| (v - first).abs()).fold(0.0, f64::max);
    if first.abs() > 0.0 {
        spread / first.abs()
    } else {
        spread
    }
}

pub fn conservation_report(traj: &Trajectory) -> ConservationReport {
    let diags = &traj.diagnostics;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for d in diags {
        if d.h1 > 0.0 {
            let r = (d.mass + d.energy) / (d.h1 * d.h1);
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    if lo > hi {
        lo = 0.0;
    }
    ConservationReport {
        mass_drift: relative_drift(diags.iter().map(|d| d.mass)),
        energy_drift: relative_drift(diags.iter().map(|d| d.energy)),
        h1_equivalence_min: lo,
        h1_equivalence_max: hi,
    }
}

/// Initial data families, written `kind:amplitude` on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSpec {
    /// The constant `A` (the `k = 0` plane wave).
    Planewave { amplitude: f64 },
    /// `A e^{2πi x_1}`.
    Character { amplitude: f64 },
    /// `A (1 + ¼ e^{2πi x_1} + ¼ e^{-2πi x_1})`.
    Lowmode { amplitude: f64 },
    /// Seeded complex Gaussian coefficients on `|k_j| <= M/2`, scaled to
    /// `H^1` norm `A`.
    Gaussian { amplitude: f64 },
}

impl DataSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, amp) = s
            .split_once(':')
            .ok_or_else(|| Error::Parameter(format!("data spec {s:?} is not kind:amplitude")))?;
        let amplitude: f64 = amp
            .parse()
            .map_err(|_| Error::Parameter(format!("bad amplitude {amp:?}")))?;
        if !amplitude.is_finite() {
            return Err(Error::Parameter(format!("bad amplitude {amp:?}")));
        }
        match kind {
            "planewave" => Ok(DataSpec::Planewave { amplitude }),
            "character" => Ok(DataSpec::Character { amplitude }),
            "lowmode" => Ok(DataSpec::Lowmode { amplitude }),
            "gaussian" => Ok(DataSpec::Gaussian { amplitude }),
            _ => Err(Error::Parameter(format!("unknown data kind {kind:?}"))),
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            DataSpec::Planewave { amplitude }
            | DataSpec::Character { amplitude }
            | DataSpec::Lowmode { amplitude }
            | DataSpec::Gaussian { amplitude } => amplitude,
        }
    }

    /// The data on the box of radius `m`.
    pub fn build(&self, g: &TorusGeometry, m: usize, seed: u64) -> Result<FrequencyField> {
        let d = g.dim();
        let mut e1 = vec![0i64; d];
        e1[0] = 1;
        let amp = Complex64::new(self.amplitude(), 0.0);
        match *self {
            DataSpec::Planewave { .. } => FrequencyField::character(g.clone(), m, &vec![0; d], amp),
            DataSpec::Character { .. } => FrequencyField::character(g.clone(), m, &e1, amp),
            DataSpec::Lowmode { .. } => {
                let mut f = FrequencyField::character(g.clone(), m, &vec![0; d], amp)?;
                f.set(&e1, amp * 0.25)?;
                let minus: Vec<i64> = e1.iter().map(|k| -k).collect();
                f.set(&minus, amp * 0.25)?;
                Ok(f)
            }
            DataSpec::Gaussian { amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid normal");
                let cut = (m / 2) as i64;
                let f = FrequencyField::from_fn(g.clone(), m, |k| {
                    let z = Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
                    if k.iter().all(|kj| kj.abs() <= cut) {
                        z
                    } else {
                        Complex64::default()
                    }
                });
                let h1 = f.h1_norm();
                Ok(f.scaled(Complex64::new(amplitude / h1, 0.0)))
            }
        }
    }
}

/// Exact plane-wave solution `A e^{iωt}`, `ω = ∓|A|^{4/(d-2)}`.
pub fn plane_wave(g: &TorusGeometry, m: usize, amplitude: Complex64, sign: Sign, t: f64) -> Result<FrequencyField> {
    let d = g.dim();
    check_dim(d)?;
    let omega = -sign.value() * amplitude.norm().powi(power(d));
    FrequencyField::character(g.clone(), m, &vec![0; d], amplitude * Complex64::from_polar(1.0, omega * t))
}
