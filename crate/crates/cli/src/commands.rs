use clap::{Args, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::Path;

use toruslab::arithmetic::{dirichlet_approx, divisor_count_dyadic, divisor_tail_count, divisors, f2_hat, in_major_arc, MajorArcParams};
use toruslab::dispersive::{
    bilinear_form_check, dispersive_report, time_scales, ArcSet, BilinearFormCheckParams, DispersiveGrid,
};
use toruslab::io::save_field;
use toruslab::nls::{
    conservation_report, dealiased_size, picard_solve, split_step_evolve_with, DataSpec, SplitOptions, NlsProblem, Sign, Trajectory,
};
use toruslab::propagator::min_kernel_resolution;
use toruslab::strichartz::{bilinear_table, class_norm, BilinearData, DataClass, ScalingFit};
use toruslab::{kernel_direct, kernel_grid, Dyadic, TorusGeometry};

use crate::output::{num, Output};
use crate::{parse_dyadics, parse_list, Common, Failure};

fn config<T: Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("argument records serialize")
}

fn complex(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

#[derive(Args, Debug, Serialize)]
pub struct KernelArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Dyadic frequency scale.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub t: f64,
    /// Comma-separated point; evaluates the direct sum there.
    #[arg(long, allow_negative_numbers = true)]
    pub x: Option<String>,
    /// Grid points per axis for the grid evaluation.
    #[arg(long = "n-x")]
    pub n_x: Option<usize>,
}

pub fn kernel(a: &KernelArgs) -> Result<(), Failure> {
    let g = a.common.geometry()?;
    let n = Dyadic::new(a.n)?;
    let out = Output::new(a.common.out_dir.clone(), "kernel", config(a), a.common.seed)?;
    let mut body = serde_json::Map::new();
    if let Some(x) = &a.x {
        let x = parse_list::<f64>(x, "--x")?;
        if x.len() != g.dim() {
            return Err(Failure::Usage(format!("--x has {} coordinates but --d is {}", x.len(), g.dim())));
        }
        let v = kernel_direct(a.t, &x, n, &g)?;
        body.insert("value".into(), complex(v));
        body.insert("abs".into(), json!(v.norm()));
    }
    if a.x.is_none() || a.n_x.is_some() {
        let n_x = a.n_x.unwrap_or_else(|| min_kernel_resolution(n));
        let ev = kernel_grid(a.t, n_x, n, &g, a.common.budget())?;
        let d = g.dim();
        let mut header: Vec<String> = (0..d).map(|j| format!("x{}", j + 1)).collect();
        header.extend(["re", "im", "abs"].map(String::from));
        let mut m = vec![0usize; d];
        let rows: Vec<Vec<String>> = ev
            .values
            .iter()
            .map(|z| {
                let mut row: Vec<String> = m.iter().map(|&mj| num(mj as f64 / n_x as f64)).collect();
                row.extend([num(z.re), num(z.im), num(z.norm())]);
                for slot in m.iter_mut().rev() {
                    *slot += 1;
                    if *slot < n_x {
                        break;
                    }
                    *slot = 0;
                }
                row
            })
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        out.csv("kernel.csv", &header, &rows, false)?;
        body.insert("n_x".into(), json!(n_x));
        body.insert("max_abs".into(), json!(ev.max_abs()));
        body.insert("mean".into(), complex(ev.mean()));
    }
    out.json("kernel.json", Value::Object(body), None)
}

#[derive(Args, Debug, Serialize)]
pub struct DispersiveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Comma-separated dyadic scales, each >= 2.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: String,
    /// Time samples on [0, 1); defaults to the density rule.
    #[arg(long = "n-t")]
    pub n_t: Option<usize>,
    /// Spatial samples per axis; defaults to 4N+1 rounded to a fast FFT size.
    #[arg(long = "n-x")]
    pub n_x: Option<usize>,
}

pub fn dispersive_check(a: &DispersiveArgs) -> Result<(), Failure> {
    let g = a.common.geometry()?;
    let scales = parse_dyadics(&a.n)?;
    let out = Output::new(a.common.out_dir.clone(), "dispersive-check", config(a), a.common.seed)?;
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    let mut failure = None;
    for &n in &scales {
        let run = || -> Result<_, Failure> {
            let params = MajorArcParams::new(a.common.sigma, n)?;
            let default = DispersiveGrid::resolving(n, &g);
            let grid = DispersiveGrid::new(a.n_t.unwrap_or(default.n_t), a.n_x.unwrap_or(default.n_x))?;
            a.common.budget().check(grid.n_t as u128 * grid.n_x as u128)?;
            Ok(dispersive_report(&params, &g, &grid)?)
        };
        match run() {
            Ok(r) => {
                rows.push(vec![
                    n.get().to_string(),
                    num(r.max_ratio_kernel_vs_bound),
                    num(r.argmax_t),
                    r.argmax_on_arc.to_string(),
                    num(r.sup_offarc_kernel),
                    num(r.fitted_constants["diff_bound"]),
                ]);
                reports.push(r);
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let ratios: Vec<f64> = reports.iter().map(|r| r.max_ratio_kernel_vs_bound).collect();
    let spread = spread(&ratios);
    let reason = failure.as_ref().map(describe);
    out.csv(
        "dispersive.csv",
        &["N", "max_ratio", "argmax_t", "argmax_on_arc", "sup_offarc_kernel", "diff_bound_constant"],
        &rows,
        reason.is_some(),
    )?;
    out.json(
        "dispersive.json",
        json!({ "reports": reports, "max_ratio_spread": spread }),
        reason.as_deref(),
    )?;
    failure.map_or(Ok(()), Err)
}

fn spread(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let hi = v.iter().cloned().fold(f64::MIN, f64::max);
    let lo = v.iter().cloned().fold(f64::MAX, f64::min);
    Some(hi / lo)
}

fn describe(f: &Failure) -> String {
    match f {
        Failure::Usage(m) | Failure::Guard(m) => m.clone(),
    }
}

#[derive(Args, Debug, Serialize)]
pub struct StrichartzArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Lebesgue exponent in space and time.
    #[arg(long)]
    pub p: f64,
    /// character, flat or gaussian.
    #[arg(long, default_value = "flat")]
    pub class: String,
    /// Comma-separated dyadic scales.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: String,
}

pub fn strichartz_sweep(a: &StrichartzArgs) -> Result<(), Failure> {
    let g = a.common.geometry()?;
    let class = DataClass::parse(&a.class).map_err(|e| Failure::Usage(e.to_string()))?;
    let scales = parse_dyadics(&a.n)?;
    if scales.len() < 2 || scales.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::Usage("--N needs at least two strictly increasing scales".into()));
    }
    let out = Output::new(a.common.out_dir.clone(), "strichartz-sweep", config(a), a.common.seed)?;
    let mut norms = Vec::new();
    let mut failure = None;
    for &n in &scales {
        match class_norm(class, n, a.p, &g, a.common.seed, a.common.budget()) {
            Ok(v) => norms.push(v),
            Err(e) => {
                failure = Some(Failure::from(e));
                break;
            }
        }
    }
    let done = &scales[..norms.len()];
    let fit = if norms.len() >= 2 {
        Some(ScalingFit::from_norms(class, g.dim(), a.p, done.to_vec(), norms.clone())?)
    } else {
        None
    };
    let ratios = fit.as_ref().map(|f| f.ratios()).unwrap_or_default();
    let rows: Vec<Vec<String>> = done
        .iter()
        .zip(&norms)
        .enumerate()
        .map(|(i, (n, v))| vec![n.get().to_string(), num(*v), ratios.get(i).map_or(String::new(), |r| num(*r))])
        .collect();
    let reason = failure.as_ref().map(describe);
    out.csv("strichartz.csv", &["N", "norm", "normalized_ratio"], &rows, reason.is_some())?;
    out.json("strichartz.json", json!({ "fit": fit }), reason.as_deref())?;
    failure.map_or(Ok(()), Err)
}

#[derive(Args, Debug, Serialize)]
pub struct BilinearArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Comma-separated dyadic N1 values; every dyadic N2 <= N1 is paired.
    #[arg(long = "N", default_value = "8,16,32")]
    #[serde(rename = "N")]
    pub n: String,
    /// Comma-separated time spans.
    #[arg(long = "T", default_value = "1,0.25,0.0625")]
    #[serde(rename = "T")]
    pub spans: String,
    /// flat or character.
    #[arg(long, default_value = "flat")]
    pub data: String,
    /// Random (E, F, Q, T) draws of the arc-set pairing at each N.
    #[arg(long, default_value_t = 0)]
    pub form_draws: usize,
}

pub fn bilinear_check(a: &BilinearArgs) -> Result<(), Failure> {
    let g = a.common.geometry()?;
    let data = match a.data.as_str() {
        "flat" => BilinearData::Flat,
        "character" => BilinearData::Character,
        other => return Err(Failure::Usage(format!("--data: unknown {other:?}"))),
    };
    let scales = parse_dyadics(&a.n)?;
    let spans = parse_list::<f64>(&a.spans, "--T")?;
    if spans.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
        return Err(Failure::Usage("--T values must lie in (0, 1]".into()));
    }
    let out = Output::new(a.common.out_dir.clone(), "bilinear-check", config(a), a.common.seed)?;
    let table = bilinear_table(data, &scales, &spans, &g)?;
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|e| vec![e.n1.get().to_string(), e.n2.get().to_string(), num(e.span), num(e.ratio)])
        .collect();
    out.csv("bilinear.csv", &["N1", "N2", "T", "ratio"], &rows, false)?;
    let per_n1: Vec<Value> = scales
        .iter()
        .map(|&n1| {
            let c = table.iter().filter(|e| e.n1 == n1).map(|e| e.ratio).fold(0.0, f64::max);
            json!({ "N1": n1, "C": c })
        })
        .collect();
    let cs: Vec<f64> = per_n1.iter().map(|v| v["C"].as_f64().unwrap_or(0.0)).collect();
    let mut forms = Vec::new();
    if a.form_draws > 0 {
        for &n in &scales {
            forms.push(form_draws(n, a.common.sigma, a.form_draws, a.common.seed)?);
        }
    }
    out.json(
        "bilinear.json",
        json!({ "table": table, "constants": per_n1, "constant_spread": spread(&cs), "form_checks": forms }),
        None,
    )
}

/// `max lhs/rhs` of the arc-set pairing over random draws at scale `n`.
fn form_draws(n: Dyadic, sigma: f64, draws: usize, seed: u64) -> Result<Value, Failure> {
    let params = MajorArcParams::new(sigma, n)?;
    let r0 = BilinearFormCheckParams::critical_r0(sigma);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n.get());
    let qs = Dyadic::up_to(params.reach());
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let q = qs[rng.gen_range(0..qs.len())];
        let ts = time_scales(&params, q);
        let t = ts[rng.gen_range(0..ts.len())];
        let e = ArcSet::random(&mut rng, 4);
        let f = ArcSet::random(&mut rng, 4);
        let check = BilinearFormCheckParams::new(r0, q, t, &params, 1.0)?;
        let (lhs, rhs) = bilinear_form_check(&e, &f, &check, (64.0 / t).ceil() as usize)?;
        worst = worst.max(lhs / rhs);
    }
    Ok(json!({ "N": n, "r0": r0, "draws": draws, "max_ratio": worst }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Picard,
    Split,
}

/// Run configuration; a `--config` file overrides the corresponding flags.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlsConfig {
    pub d: Option<usize>,
    pub theta: Option<Vec<f64>>,
    pub sign: Option<Sign>,
    pub data_spec: Option<String>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    pub dt: Option<f64>,
    pub solver: Option<Solver>,
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct NlsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// defocusing or focusing.
    #[arg(long, default_value = "defocusing")]
    pub sign: String,
    /// planewave:A, character:A, lowmode:A or gaussian:A.
    #[arg(long, default_value = "planewave:0.01")]
    pub data: String,
    /// Data box radius; the state lives on [-N, N]^d.
    #[arg(long = "N", default_value_t = 8)]
    #[serde(rename = "N")]
    pub n: usize,
    #[arg(long = "T", default_value_t = 0.25)]
    #[serde(rename = "T")]
    pub t: f64,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    pub dt: f64,
    #[arg(long, value_enum, default_value_t = Solver::Split)]
    pub solver: Solver,
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    /// Record every k-th step.
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
    /// Also write each recorded state as a .fld file.
    #[arg(long)]
    pub write_states: bool,
}

#[derive(Debug, Serialize)]
struct ResolvedNls {
    d: usize,
    theta: Vec<f64>,
    sign: Sign,
    data_spec: String,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "T")]
    t: f64,
    dt: f64,
    solver: Solver,
    seed: u64,
    max_iter: usize,
    tol: f64,
    record_every: usize,
}

fn resolve_nls(a: &NlsArgs) -> Result<ResolvedNls, Failure> {
    let file: NlsConfig = match &a.config {
        None => NlsConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("--config {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("--config {}: {e}", path.display())))?
        }
    };
    let d = file.d.unwrap_or(a.common.d);
    let theta = match file.theta {
        Some(t) => t,
        None => {
            let mut c = a.common.clone();
            c.d = d;
            c.geometry()?.theta().to_vec()
        }
    };
    Ok(ResolvedNls {
        d,
        theta,
        sign: match file.sign {
            Some(s) => s,
            None => Sign::parse(&a.sign).map_err(|e| Failure::Usage(e.to_string()))?,
        },
        data_spec: file.data_spec.unwrap_or_else(|| a.data.clone()),
        n: file.n.unwrap_or(a.n),
        t: file.t.unwrap_or(a.t),
        dt: file.dt.unwrap_or(a.dt),
        solver: file.solver.unwrap_or(a.solver),
        seed: file.seed.unwrap_or(a.common.seed),
        max_iter: file.max_iter.unwrap_or(a.max_iter),
        tol: file.tol.unwrap_or(a.tol),
        record_every: a.record_every,
    })
}

pub fn nls_run(a: &NlsArgs) -> Result<(), Failure> {
    let cfg = resolve_nls(a)?;
    let g = TorusGeometry::new(cfg.theta.clone())?;
    if g.dim() != cfg.d {
        return Err(Failure::Usage(format!("theta has {} entries but d is {}", g.dim(), cfg.d)));
    }
    if !(3..=4).contains(&cfg.d) {
        return Err(Failure::Usage(format!("nls-run needs d in {{3, 4}}, got {}", cfg.d)));
    }
    let spec = DataSpec::parse(&cfg.data_spec).map_err(|e| Failure::Usage(e.to_string()))?;
    let out = Output::new(a.common.out_dir.clone(), "nls-run", config(&cfg), cfg.seed)?;
    a.common.budget().check((dealiased_size(cfg.d, cfg.n) as u128).pow(cfg.d as u32))?;
    let u0 = spec.build(&g, cfg.n, cfg.seed)?;
    let problem = NlsProblem::new(cfg.sign, u0)?;

    let mut log = Value::Null;
    let run: Result<Trajectory, Failure> = match cfg.solver {
        Solver::Split => split_step_evolve_with(&problem, cfg.t, cfg.dt, &SplitOptions { record_every: cfg.record_every, ..SplitOptions::default() }).map_err(Failure::from),
        Solver::Picard => picard_solve(&problem, cfg.t, cfg.dt, cfg.max_iter, cfg.tol)
            .map_err(Failure::from)
            .and_then(|sol| {
                log = json!({ "iterations": sol.log, "converged": sol.converged });
                if sol.converged {
                    Ok(sol.trajectory)
                } else {
                    Err(Failure::Guard(format!("Picard iteration did not reach tol = {} in {} iterations", cfg.tol, cfg.max_iter)))
                }
            }),
    };
    let traj = match run {
        Ok(t) => t,
        Err(e) => {
            let reason = describe(&e);
            out.csv("nls_diagnostics.csv", &["t", "mass", "energy", "h1", "linf"], &[], true)?;
            out.json("nls.json", json!({ "picard": log }), Some(&reason))?;
            return Err(e);
        }
    };
    let rows: Vec<Vec<String>> = traj
        .times
        .iter()
        .zip(&traj.diagnostics)
        .map(|(t, d)| vec![num(*t), num(d.mass), num(d.energy), num(d.h1), num(d.linf)])
        .collect();
    let truncated = traj.flag.as_deref();
    out.csv("nls_diagnostics.csv", &["t", "mass", "energy", "h1", "linf"], &rows, truncated.is_some())?;
    if a.write_states {
        write_states(out.dir(), &traj)?;
    }
    let report = conservation_report(&traj);
    out.json(
        "nls.json",
        json!({
            "final_time": traj.final_time(),
            "recorded_times": traj.len(),
            "conservation": report,
            "picard": log,
        }),
        truncated,
    )?;
    match truncated {
        Some(reason) => Err(Failure::Guard(reason.to_string())),
        None => Ok(()),
    }
}

fn write_states(dir: &Path, traj: &Trajectory) -> Result<(), Failure> {
    let states = dir.join("states");
    std::fs::create_dir_all(&states).map_err(|e| Failure::Guard(format!("cannot create {}: {e}", states.display())))?;
    for (i, s) in traj.states.iter().enumerate() {
        save_field(states.join(format!("u_{i:05}.fld")), s)?;
    }
    Ok(())
}

#[derive(Subcommand, Debug)]
pub enum ArithCommand {
    /// Dirichlet approximation a/q of beta with q < N.
    Dirichlet(DirichletArgs),
    /// Divisors of n in [Q, 2Q), or the tail count #{n <= R : d_Q(n) > D}.
    Divisor(DivisorArgs),
    /// F̂_{2,Q}(omega) = Σ_{q∼Q, q | omega} q.
    F2hat(F2Args),
    /// Major-arc membership of t.
    MajorArc(MajorArcArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct DirichletArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: f64,
    /// Level; need not be dyadic.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct DivisorArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long = "Q")]
    #[serde(rename = "Q")]
    pub q: u64,
    /// Count n <= R with d_Q(n) > threshold instead.
    #[arg(long)]
    pub tail: Option<u64>,
    #[arg(long, default_value_t = 2.0)]
    pub threshold: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct F2Args {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, allow_negative_numbers = true)]
    pub omega: i64,
    #[arg(long = "Q")]
    #[serde(rename = "Q")]
    pub q: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct MajorArcArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, allow_negative_numbers = true)]
    pub t: f64,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u64,
}

pub fn arith(cmd: &ArithCommand) -> Result<(), Failure> {
    match cmd {
        ArithCommand::Dirichlet(a) => {
            let r = dirichlet_approx(a.beta, a.n)?;
            let out = Output::new(a.common.out_dir.clone(), "arith dirichlet", config(a), a.common.seed)?;
            out.json(
                "arith_dirichlet.json",
                json!({ "a": r.a, "q": r.q, "beta": r.beta, "N": r.level, "error": r.error() }),
                None,
            )
        }
        ArithCommand::Divisor(a) => {
            let q = Dyadic::new(a.q)?;
            let out = Output::new(a.common.out_dir.clone(), "arith divisor", config(a), a.common.seed)?;
            let mut body = serde_json::Map::new();
            if let Some(n) = a.n {
                let count = divisor_count_dyadic(n, q)?;
                let list: Vec<u64> = divisors(n).into_iter().filter(|&v| v >= a.q && v < 2 * a.q).collect();
                body.insert("n".into(), json!(n));
                body.insert("d_Q".into(), json!(count));
                body.insert("divisors".into(), json!(list));
            }
            if let Some(r) = a.tail {
                let count = divisor_tail_count(r, q, a.threshold, a.common.budget())?;
                body.insert("tail".into(), json!({ "R": r, "threshold": a.threshold, "count": count }));
            }
            if body.is_empty() {
                return Err(Failure::Usage("arith divisor needs --n or --tail".into()));
            }
            out.json("arith_divisor.json", Value::Object(body), None)
        }
        ArithCommand::F2hat(a) => {
            let q = Dyadic::new(a.q)?;
            let out = Output::new(a.common.out_dir.clone(), "arith f2hat", config(a), a.common.seed)?;
            out.json("arith_f2hat.json", json!({ "omega": a.omega, "Q": a.q, "value": f2_hat(a.omega, q) }), None)
        }
        ArithCommand::MajorArc(a) => {
            let g = a.common.geometry()?;
            let params = MajorArcParams::new(a.common.sigma, Dyadic::new(a.n)?)?;
            let out = Output::new(a.common.out_dir.clone(), "arith major-arc", config(a), a.common.seed)?;
            let w = in_major_arc(a.t, &params, &g);
            out.json(
                "arith_major_arc.json",
                json!({ "t": a.t, "on_major_arc": w.is_some(), "witness": w }),
                None,
            )
        }
    }
}
