//! Bayesian-optimization parameter estimation against a reference
//! hydrogen-evolution curve.
//!
//! A squared-exponential Gaussian-process surrogate is fitted to all previous
//! objective evaluations (hyperparameters re-selected each round by marginal
//! likelihood over a small log-spaced grid); the next point maximizes
//! expected improvement via multi-start compass search on the unit cube.
//! Search coordinates are normalized to [0,1]^d, with diffusivity and the
//! momentum factor handled in log space since their ranges span decades.
//! The discrete k₂ candidates each get their own independent surrogate and
//! evaluation budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;

use crate::config::SimConfig;
use crate::error::{CoreError, Result};
use crate::sim::run_simulation;
use crate::transport::MaterialParams;

/// Model parameter that calibration may vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CalibratedParam {
    DMg,
    Beta,
    Gamma,
}

impl CalibratedParam {
    /// Log-space search for quantities whose bounds span decades.
    fn log_scaled(self) -> bool {
        matches!(self, CalibratedParam::DMg | CalibratedParam::Beta)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CalibratedParam::DMg => "d_mg",
            CalibratedParam::Beta => "beta",
            CalibratedParam::Gamma => "gamma",
        }
    }
}

impl std::str::FromStr for CalibratedParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "d_mg" => Ok(CalibratedParam::DMg),
            "beta" => Ok(CalibratedParam::Beta),
            "gamma" => Ok(CalibratedParam::Gamma),
            other => Err(format!("unknown parameter `{other}` (expected d_mg, beta or gamma)")),
        }
    }
}

/// One free parameter and its physical search interval.
#[derive(Clone, Copy, Debug)]
pub struct FreeParameter {
    pub name: CalibratedParam,
    pub bounds: (f64, f64),
}

/// Calibration block of a config file.
#[derive(Clone, Debug)]
pub struct CalibrationSettings {
    pub free: Vec<FreeParameter>,
    pub k2_grid: Vec<f64>,
    /// Objective evaluations per k₂ candidate.
    pub budget: usize,
}

impl CalibrationSettings {
    pub fn validate(&self) -> Result<()> {
        if self.free.is_empty() {
            return Err(CoreError::config("calibration.free", "need at least one free parameter"));
        }
        for (i, p) in self.free.iter().enumerate() {
            if !(p.bounds.0 < p.bounds.1) {
                return Err(CoreError::config(
                    format!("calibration.free[{i}].bounds"),
                    "lower bound must be below upper bound",
                ));
            }
            if p.name.log_scaled() && p.bounds.0 <= 0.0 {
                return Err(CoreError::config(
                    format!("calibration.free[{i}].bounds"),
                    "log-scaled parameters need positive bounds",
                ));
            }
            if self.free.iter().filter(|q| q.name == p.name).count() > 1 {
                return Err(CoreError::config(
                    format!("calibration.free[{i}].name"),
                    "duplicate parameter",
                ));
            }
        }
        if self.k2_grid.is_empty() || self.k2_grid.iter().any(|&k| !(k > 0.0)) {
            return Err(CoreError::config("calibration.k2_grid", "need positive k2 candidates"));
        }
        let dim = self.free.len();
        if self.budget < 2 * (dim + 1) {
            return Err(CoreError::config(
                "calibration.budget",
                format!("must be at least 2*(dim+1) = {}", 2 * (dim + 1)),
            ));
        }
        Ok(())
    }
}

/// The full inverse problem: what to vary, what to match, how to simulate.
#[derive(Clone, Debug)]
pub struct CalibrationProblem {
    pub settings: CalibrationSettings,
    /// (time h, hydrogen mL), time-sorted.
    pub reference: Vec<(f64, f64)>,
    pub base: MaterialParams,
    pub sim: SimConfig,
}

impl CalibrationProblem {
    pub fn from_config(sim: SimConfig, reference: Vec<(f64, f64)>) -> Result<Self> {
        let settings = sim
            .calibration
            .clone()
            .ok_or_else(|| CoreError::config("calibration", "config has no calibration section"))?;
        let base = sim.materials;
        let problem = CalibrationProblem {
            settings,
            reference,
            base,
            sim,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        self.settings.validate()?;
        self.sim.validate()?;
        if self.reference.is_empty() {
            return Err(CoreError::invalid("calibration: empty reference curve"));
        }
        for w in self.reference.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(CoreError::invalid("calibration: reference times must increase"));
            }
        }
        let t_max = self.reference[self.reference.len() - 1].0;
        if t_max > self.sim.t_end + 1e-9 {
            return Err(CoreError::invalid(format!(
                "calibration: reference extends to t = {t_max} beyond t_end = {}",
                self.sim.t_end
            )));
        }
        Ok(())
    }

    fn dim(&self) -> usize {
        self.settings.free.len()
    }

    /// Unit-cube coordinates → physical parameter vector.
    pub fn denormalize(&self, u: &[f64]) -> Vec<f64> {
        self.settings
            .free
            .iter()
            .zip(u)
            .map(|(p, &t)| {
                let (lo, hi) = p.bounds;
                if p.name.log_scaled() {
                    lo * (hi / lo).powf(t)
                } else {
                    lo + (hi - lo) * t
                }
            })
            .collect()
    }

    /// Physical parameter vector → unit cube.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        self.settings
            .free
            .iter()
            .zip(x)
            .map(|(p, &v)| {
                let (lo, hi) = p.bounds;
                if p.name.log_scaled() {
                    (v / lo).ln() / (hi / lo).ln()
                } else {
                    (v - lo) / (hi - lo)
                }
            })
            .collect()
    }

    fn materials_for(&self, x: &[f64], k2: f64) -> MaterialParams {
        let mut m = self.base;
        m.k2 = k2;
        for (p, &v) in self.settings.free.iter().zip(x) {
            match p.name {
                CalibratedParam::DMg => m.d_mg = v,
                CalibratedParam::Beta => m.beta = v,
                CalibratedParam::Gamma => m.gamma = v,
            }
        }
        m
    }
}

/// Forward objective: RMS difference (mL) between the simulated hydrogen
/// curve and the reference, sampled at the reference times.
pub fn objective(x: &[f64], problem: &CalibrationProblem) -> Result<f64> {
    if x.len() != problem.dim() {
        return Err(CoreError::invalid(format!(
            "objective: got {} parameters, expected {}",
            x.len(),
            problem.dim()
        )));
    }
    for (p, &v) in problem.settings.free.iter().zip(x) {
        if v < p.bounds.0 - 1e-12 || v > p.bounds.1 + 1e-12 {
            return Err(CoreError::invalid(format!(
                "objective: {} = {v} outside bounds [{}, {}]",
                p.name.as_str(),
                p.bounds.0,
                p.bounds.1
            )));
        }
    }
    let mut cfg = problem.sim.clone();
    cfg.materials = problem.materials_for(x, problem.base.k2);
    let result = run_simulation(&cfg)?;
    let mut sq = 0.0;
    for &(t, h_ref) in &problem.reference {
        let h_sim = result.series.hydrogen_at(t)?;
        sq += (h_sim - h_ref) * (h_sim - h_ref);
    }
    Ok((sq / problem.reference.len() as f64).sqrt())
}

// ---------------------------------------------------------------------------
// Gaussian-process surrogate
// ---------------------------------------------------------------------------

/// Fixed kernel hyperparameters for one fit.
#[derive(Clone, Debug)]
pub struct GpHyperparams {
    pub length_scales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

/// Exact GP regression state over the normalized inputs.
#[derive(Clone, Debug)]
pub struct GpModel {
    xs: Vec<Vec<f64>>,
    mean: f64,
    hyper: GpHyperparams,
    /// Lower Cholesky factor of K + σ_n² I (row-major packed).
    chol: Vec<f64>,
    /// (K + σ_n² I)⁻¹ (y − mean)
    alpha: Vec<f64>,
    log_marginal: f64,
}

fn kernel(a: &[f64], b: &[f64], hp: &GpHyperparams) -> f64 {
    let mut s = 0.0;
    for ((&ai, &bi), &l) in a.iter().zip(b).zip(&hp.length_scales) {
        let d = (ai - bi) / l;
        s += d * d;
    }
    hp.signal_variance * (-0.5 * s).exp()
}

/// In-place dense Cholesky of a packed row-major lower matrix; Err on
/// non-positive pivots.
fn cholesky(mut k: Vec<f64>, n: usize) -> std::result::Result<Vec<f64>, ()> {
    for i in 0..n {
        for j in 0..=i {
            let mut s = k[i * n + j];
            for p in 0..j {
                s -= k[i * n + p] * k[j * n + p];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(());
                }
                k[i * n + j] = s.sqrt();
            } else {
                k[i * n + j] = s / k[j * n + j];
            }
        }
        for j in i + 1..n {
            k[i * n + j] = 0.0;
        }
    }
    Ok(k)
}

fn chol_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    // forward substitution L z = b
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for j in 0..i {
            s -= l[i * n + j] * z[j];
        }
        z[i] = s / l[i * n + i];
    }
    // back substitution Lᵀ x = z
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = z[i];
        for j in i + 1..n {
            s -= l[j * n + i] * x[j];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// Exact GP regression with fixed hyperparameters. Singular covariances get
/// escalating diagonal jitter before failing.
pub fn gp_fit(xs: &[Vec<f64>], ys: &[f64], hyper: GpHyperparams) -> Result<GpModel> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(CoreError::invalid("gp_fit: need at least 2 observations"));
    }
    let dim = xs[0].len();
    if hyper.length_scales.len() != dim {
        return Err(CoreError::invalid("gp_fit: length-scale dimension mismatch"));
    }
    let mean = ys.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = ys.iter().map(|y| y - mean).collect();

    let mut base = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            base[i * n + j] = kernel(&xs[i], &xs[j], &hyper);
        }
    }

    let mut jitter = hyper.noise_variance.max(1e-12 * hyper.signal_variance);
    for _ in 0..8 {
        let mut k = base.clone();
        for i in 0..n {
            k[i * n + i] += jitter;
        }
        if let Ok(l) = cholesky(k, n) {
            let alpha = chol_solve(&l, n, &centered);
            let log_det: f64 = (0..n).map(|i| l[i * n + i].ln()).sum::<f64>() * 2.0;
            let fit: f64 = centered.iter().zip(&alpha).map(|(c, a)| c * a).sum();
            let log_marginal =
                -0.5 * fit - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
            return Ok(GpModel {
                xs: xs.to_vec(),
                mean,
                hyper,
                chol: l,
                alpha,
                log_marginal,
            });
        }
        jitter *= 100.0;
    }
    Err(CoreError::NumericalFailure(
        "gp_fit: covariance stayed singular through jitter escalation (duplicate points?)".into(),
    ))
}

impl GpModel {
    /// Predictive mean and (latent) variance at a normalized point.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let n = self.xs.len();
        let kstar: Vec<f64> = self.xs.iter().map(|xi| kernel(xi, x, &self.hyper)).collect();
        let mean = self.mean + kstar.iter().zip(&self.alpha).map(|(k, a)| k * a).sum::<f64>();
        let v = chol_solve(&self.chol, n, &kstar);
        let reduction: f64 = kstar.iter().zip(&v).map(|(k, vi)| k * vi).sum();
        let var = (self.hyper.signal_variance - reduction).max(0.0);
        (mean, var)
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal
    }

    pub fn hyperparams(&self) -> &GpHyperparams {
        &self.hyper
    }
}

/// Fits with hyperparameters chosen by marginal likelihood over a small
/// log-spaced grid (shared length scale across dimensions, signal variance
/// proportional to the sample variance).
pub fn gp_fit_auto(xs: &[Vec<f64>], ys: &[f64]) -> Result<GpModel> {
    let dim = xs.first().map_or(0, |x| x.len());
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let var = (ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n).max(1e-300);

    let mut best: Option<GpModel> = None;
    for &ell in &[0.05, 0.1, 0.2, 0.4, 0.8, 1.6] {
        for &vmul in &[0.5, 1.0, 2.0] {
            let signal = var * vmul;
            let hyper = GpHyperparams {
                length_scales: vec![ell; dim],
                signal_variance: signal,
                noise_variance: 1e-8 * signal,
            };
            if let Ok(model) = gp_fit(xs, ys, hyper) {
                if best
                    .as_ref()
                    .map_or(true, |b| model.log_marginal > b.log_marginal)
                {
                    best = Some(model);
                }
            }
        }
    }
    best.ok_or_else(|| {
        CoreError::NumericalFailure("gp_fit_auto: no hyperparameter candidate produced a fit".into())
    })
}

/// Standard normal CDF.
fn phi_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal density.
fn phi_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Expected improvement below `best_y` for minimization; zero when the
/// predictive deviation vanishes.
pub fn expected_improvement(model: &GpModel, x: &[f64], best_y: f64) -> f64 {
    let (mu, var) = model.predict(x);
    let sigma = var.sqrt();
    if sigma <= 1e-300 {
        return 0.0;
    }
    let z = (best_y - mu) / sigma;
    ((best_y - mu) * phi_cdf(z) + sigma * phi_pdf(z)).max(0.0)
}

/// Result of one budgeted minimization run.
#[derive(Clone, Debug)]
pub struct MinimizeResult {
    pub best_x: Vec<f64>,
    pub best_y: f64,
    /// Every evaluation in order: (x, y).
    pub trace: Vec<(Vec<f64>, f64)>,
}

fn latin_hypercube(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for _ in 0..dim {
        let mut cells: Vec<usize> = (0..n).collect();
        // Fisher-Yates
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            cells.swap(i, j);
        }
        columns.push(
            cells
                .into_iter()
                .map(|c| (c as f64 + rng.gen_range(0.0..1.0)) / n as f64)
                .collect(),
        );
    }
    (0..n).map(|i| (0..dim).map(|d| columns[d][i]).collect()).collect()
}

/// Compass search maximizing `score` on the unit cube from a start point.
fn pattern_search(score: &dyn Fn(&[f64]) -> f64, start: Vec<f64>) -> (Vec<f64>, f64) {
    let mut x = start;
    let mut fx = score(&x);
    let mut step = 0.25;
    while step > 1e-3 {
        let mut improved = false;
        for d in 0..x.len() {
            for sgn in [1.0, -1.0] {
                let mut cand = x.clone();
                cand[d] = (cand[d] + sgn * step).clamp(0.0, 1.0);
                let fc = score(&cand);
                if fc > fx {
                    x = cand;
                    fx = fc;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}

/// Budgeted Bayesian minimization of a black-box function on [0,1]^dim:
/// Latin-hypercube start (2·dim points), then expected-improvement picks.
/// Deterministic for a fixed seed.
pub fn minimize(
    mut f: impl FnMut(&[f64]) -> f64,
    dim: usize,
    budget: usize,
    seed: u64,
) -> Result<MinimizeResult> {
    if dim == 0 {
        return Err(CoreError::invalid("minimize: dimension must be at least 1"));
    }
    let n_init = 2 * dim;
    if budget < n_init {
        return Err(CoreError::invalid(format!(
            "minimize: budget {budget} below initialization size {n_init}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(budget);
    let mut ys: Vec<f64> = Vec::with_capacity(budget);

    for x in latin_hypercube(&mut rng, n_init, dim) {
        let y = f(&x);
        xs.push(x);
        ys.push(y);
    }

    while xs.len() < budget {
        let best_y = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let next = match gp_fit_auto(&xs, &ys) {
            Ok(model) => {
                let score = |x: &[f64]| expected_improvement(&model, x, best_y);
                let mut starts: Vec<Vec<f64>> =
                    (0..8 * dim).map(|_| (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
                // also restart near the incumbent
                let best_idx = ys
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                starts.push(
                    xs[best_idx]
                        .iter()
                        .map(|v| (v + rng.gen_range(-0.05..0.05)).clamp(0.0, 1.0))
                        .collect(),
                );
                let mut best_cand: Option<(Vec<f64>, f64)> = None;
                for s in starts {
                    let (x, fx) = pattern_search(&score, s);
                    if best_cand.as_ref().map_or(true, |(_, b)| fx > *b) {
                        best_cand = Some((x, fx));
                    }
                }
                best_cand.map(|(x, _)| x).unwrap_or_else(|| {
                    (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect()
                })
            }
            // duplicate-dominated covariances: fall back to random exploration
            Err(_) => (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect(),
        };
        // avoid re-evaluating an existing point exactly
        let mut next = next;
        if xs.iter().any(|x| {
            x.iter()
                .zip(&next)
                .all(|(a, b)| (a - b).abs() < 1e-12)
        }) {
            next = (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect();
        }
        let y = f(&next);
        xs.push(next);
        ys.push(y);
    }

    let (best_idx, best_y) = ys
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, &y)| (i, y))
        .expect("non-empty");
    Ok(MinimizeResult {
        best_x: xs[best_idx].clone(),
        best_y,
        trace: xs.into_iter().zip(ys).collect(),
    })
}

/// One objective evaluation in the optimization trace.
#[derive(Clone, Debug)]
pub struct TraceEntry {
    pub k2: f64,
    pub eval: usize,
    /// Physical parameter values, in `settings.free` order.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Best objective seen so far within this k₂ run.
    pub incumbent: f64,
    /// Simulation failure replaced by a penalty value.
    pub failed: bool,
}

/// Outcome of [`optimize`].
#[derive(Clone, Debug)]
pub struct OptimizeOutcome {
    pub best_x: Vec<f64>,
    pub best_k2: f64,
    pub best_y: f64,
    pub trace: Vec<TraceEntry>,
}

/// Runs the full calibration: an independent budgeted surrogate search per k₂
/// candidate, returning the global best and the complete evaluation trace.
pub fn optimize(problem: &CalibrationProblem) -> Result<OptimizeOutcome> {
    problem.validate()?;
    let dim = problem.dim();
    let budget = problem.settings.budget;
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    let mut trace = Vec::with_capacity(budget * problem.settings.k2_grid.len());

    for (ki, &k2) in problem.settings.k2_grid.iter().enumerate() {
        let seed = problem.sim.seed.wrapping_add(1_000_003u64.wrapping_mul(ki as u64 + 1));
        let mut sub = problem.clone();
        sub.base.k2 = k2;
        sub.sim.materials.k2 = k2;

        let evals: std::cell::RefCell<Vec<(Vec<f64>, f64, bool)>> =
            std::cell::RefCell::new(Vec::with_capacity(budget));
        let result = minimize(
            |u: &[f64]| {
                let x = sub.denormalize(u);
                match objective(&x, &sub) {
                    Ok(y) => {
                        evals.borrow_mut().push((x, y, false));
                        y
                    }
                    Err(_) => {
                        // penalize failures well above anything observed
                        let worst = evals
                            .borrow()
                            .iter()
                            .map(|e| e.1)
                            .fold(0.0f64, f64::max);
                        let y = if worst > 0.0 { 10.0 * worst } else { 1e6 };
                        evals.borrow_mut().push((x, y, true));
                        y
                    }
                }
            },
            dim,
            budget,
            seed,
        )?;

        let evals = evals.into_inner();
        debug_assert_eq!(evals.len(), budget);
        let mut incumbent = f64::INFINITY;
        for (i, (x, y, failed)) in evals.into_iter().enumerate() {
            incumbent = incumbent.min(y);
            trace.push(TraceEntry {
                k2,
                eval: i,
                x,
                objective: y,
                incumbent,
                failed,
            });
        }
        let best_x_phys = sub.denormalize(&result.best_x);
        if best.as_ref().map_or(true, |(_, _, y)| result.best_y < *y) {
            best = Some((best_x_phys, k2, result.best_y));
        }
    }

    let (best_x, best_k2, best_y) = best.expect("at least one k2 candidate");
    Ok(OptimizeOutcome {
        best_x,
        best_k2,
        best_y,
        trace,
    })
}
