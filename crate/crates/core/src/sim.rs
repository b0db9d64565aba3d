//! Simulation harness: grouped covariates built around shared latent
//! values, log-linear outcomes under the four error scenarios,
//! administrative right censoring at a target event rate, and replication
//! studies comparing the group and ordinary lasso priors.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data::{GroupStructure, SurvivalDataset};
use crate::design::PriorKind;
use crate::dists::{std_normal, uniform_open, ErrorScenario, RngStream};
use crate::error::{Error, Result};
use crate::likelihood::PriorConfig;
use crate::sampler::{run_chains, SamplerConfig};
use crate::selection::{selection_metrics, snc_bic_select, PosteriorSummary, DEFAULT_GRID_SIZE};

/// Nonzero coefficient pattern of one block; blocks alternate in sign.
pub const BETA_STAR: [f64; 5] = [-2.0, -1.5, -1.0, 1.5, 2.0];
/// Variance of the within-block noise around the latent value.
pub const BLOCK_NOISE_VAR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpec {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub scenario: ErrorScenario,
    pub n_blocks: usize,
    pub block_size: usize,
    pub beta_star: Vec<f64>,
    pub gamma: f64,
    /// target event-rate band; censoring aims at its midpoint
    pub event_band: (f64, f64),
    pub reps: usize,
    pub seed: u64,
    /// entry times drawn uniformly on `(0, entry_max)` with truncation
    pub entry_max: Option<f64>,
    /// coarsen observed events to a visit grid of this spacing
    pub visit_interval: Option<f64>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            n: 500,
            p: 1000,
            q: 1,
            scenario: ErrorScenario::LogNormal,
            n_blocks: 4,
            block_size: 5,
            beta_star: BETA_STAR.to_vec(),
            gamma: -1.0,
            event_band: (0.65, 0.75),
            reps: 100,
            seed: 1,
            entry_max: None,
            visit_interval: None,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        let nz = self.n_blocks * self.block_size;
        if self.p < nz {
            return bad(format!("p = {} is smaller than the {nz} block covariates", self.p));
        }
        if self.beta_star.len() != self.block_size {
            return bad(format!("beta_star has {} entries for blocks of size {}", self.beta_star.len(), self.block_size));
        }
        let (lo, hi) = self.event_band;
        if !(0.0 < lo && lo <= hi && hi < 1.0) {
            return bad(format!("event-rate band ({lo}, {hi}) must lie inside (0, 1)"));
        }
        if self.n < 2 || self.reps == 0 {
            return bad("n must be at least 2 and reps at least 1".into());
        }
        if self.entry_max.is_some_and(|v| !(v > 0.0)) || self.visit_interval.is_some_and(|v| !(v > 0.0)) {
            return bad("entry_max and visit_interval must be positive".into());
        }
        Ok(())
    }

    /// Grouping used by the group lasso fit: one group per block, every
    /// remaining covariate on its own.
    pub fn groups(&self) -> GroupStructure {
        let mut membership = Vec::with_capacity(self.p);
        let mut labels: Vec<String> = (1..=self.n_blocks).map(|k| format!("block_{k}")).collect();
        for j in 0..self.p {
            if j < self.n_blocks * self.block_size {
                membership.push(j / self.block_size);
            } else {
                membership.push(labels.len());
                labels.push(format!("x_{}", j + 1));
            }
        }
        GroupStructure::new(membership, labels).expect("every group is non-empty by construction")
    }

    /// 0-based indices of the nonzero true coefficients.
    pub fn true_support(&self) -> Vec<usize> {
        let (beta, _) = true_coefficients(self).unwrap_or_default();
        (0..beta.len()).filter(|&j| beta[j] != 0.0).collect()
    }
}

/// Covariates for `spec.n` subjects: block `k` of `X` is `V_k` plus small
/// noise, with `V_k ~ U(0.8k - 2.2, 0.8k - 0.2)` drawn per subject; the
/// remaining columns of `X` and all of `Z` are standard normal.
pub fn generate_covariates<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> (Array2<f64>, Array2<f64>) {
    let mut x = Array2::zeros((spec.n, spec.p));
    let mut z = Array2::zeros((spec.n, spec.q));
    for i in 0..spec.n {
        fill_subject(spec, rng, x.row_mut(i).as_slice_mut().unwrap(), z.row_mut(i).as_slice_mut().unwrap());
    }
    (x, z)
}

fn fill_subject<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R, x: &mut [f64], z: &mut [f64]) {
    let noise_sd = BLOCK_NOISE_VAR.sqrt();
    for k in 0..spec.n_blocks {
        let kk = (k + 1) as f64;
        let u: f64 = uniform_open(rng);
        let v = 0.8 * kk - 2.2 + 2.0 * u;
        for xj in x.iter_mut().skip(k * spec.block_size).take(spec.block_size) {
            *xj = v + noise_sd * std_normal::<f64, _>(rng);
        }
    }
    for xj in x.iter_mut().skip(spec.n_blocks * spec.block_size) {
        *xj = std_normal(rng);
    }
    for zk in z.iter_mut() {
        *zk = std_normal(rng);
    }
}

/// `beta = (b*, -b*, b*, ..., 0)` and `gamma = (gamma, ..., gamma)`.
pub fn true_coefficients(spec: &ScenarioSpec) -> Result<(Array1<f64>, Array1<f64>)> {
    spec.validate()?;
    let mut beta = Array1::zeros(spec.p);
    for k in 0..spec.n_blocks {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for (m, &b) in spec.beta_star.iter().enumerate() {
            beta[k * spec.block_size + m] = sign * b;
        }
    }
    Ok((beta, Array1::from_elem(spec.q, spec.gamma)))
}

/// `T = exp(X beta + Z gamma + eps)` with `eps` drawn from `spec.scenario`.
pub fn generate_outcomes<R: Rng + ?Sized>(
    spec: &ScenarioSpec,
    x: &Array2<f64>,
    z: &Array2<f64>,
    beta: &Array1<f64>,
    gamma: &Array1<f64>,
    rng: &mut R,
) -> Result<Array1<f64>> {
    if x.ncols() != beta.len() {
        return Err(Error::Dimension { expected: x.ncols(), actual: beta.len() });
    }
    if z.ncols() != gamma.len() {
        return Err(Error::Dimension { expected: z.ncols(), actual: gamma.len() });
    }
    let lp = x.dot(beta) + z.dot(gamma);
    Ok(lp.mapv(|m| (m + spec.scenario.sample::<f64, _>(rng)).exp()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Censoring {
    pub lower: Array1<f64>,
    pub upper: Array1<f64>,
    /// administrative censoring time; infinite when nothing is censored
    pub cutoff: f64,
    pub event_rate: f64,
}

/// Censors at the empirical quantile of `times` at the band midpoint: the
/// `round(target n)` smallest times are events, the rest are right censored
/// at the cutoff.
pub fn apply_admin_censoring(times: &Array1<f64>, band: (f64, f64)) -> Result<Censoring> {
    let (lo, hi) = band;
    if !(0.0 < lo && lo <= hi && hi < 1.0) {
        return Err(Error::InvalidParameter(format!("event-rate band ({lo}, {hi}) must lie inside (0, 1)")));
    }
    let n = times.len();
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = (0.5 * (lo + hi) * n as f64).round() as usize;
    let cutoff = if k >= n {
        log::warn!("censoring quantile lies above every time; no subject is censored");
        f64::INFINITY
    } else {
        sorted[k]
    };
    let mut lower = Array1::zeros(n);
    let mut upper = Array1::zeros(n);
    let mut events = 0;
    for i in 0..n {
        if times[i] < cutoff {
            lower[i] = times[i];
            upper[i] = times[i];
            events += 1;
        } else {
            lower[i] = cutoff;
            upper[i] = f64::INFINITY;
        }
    }
    let event_rate = events as f64 / n as f64;
    if event_rate >= 1.0 {
        log::warn!("event rate is 1: every time lies below the censoring cutoff");
    }
    Ok(Censoring { lower, upper, cutoff, event_rate })
}

/// Replaces each exact event by the visit interval containing it.
pub fn coarsen_to_visits(lower: &mut Array1<f64>, upper: &mut Array1<f64>, entry: &Array1<f64>, spacing: f64) {
    for i in 0..lower.len() {
        if lower[i] == upper[i] {
            let t = lower[i];
            let lo = (t / spacing).floor() * spacing;
            let hi = lo + spacing;
            lower[i] = lo.max(entry[i]).max(f64::MIN_POSITIVE);
            upper[i] = hi;
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub dataset: SurvivalDataset<f64>,
    pub beta: Array1<f64>,
    pub gamma: Array1<f64>,
    pub event_rate: f64,
    pub cutoff: f64,
}

/// Generates one dataset from `rng`. With `entry_max` set, subjects whose
/// event precedes their entry time are discarded and redrawn.
pub fn simulate_dataset<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Result<SimulatedData> {
    let (beta, gamma) = true_coefficients(spec)?;
    let (x, z, times, entry) = match spec.entry_max {
        None => {
            let (x, z) = generate_covariates(spec, rng);
            let t = generate_outcomes(spec, &x, &z, &beta, &gamma, rng)?;
            (x, z, t, Array1::zeros(spec.n))
        }
        Some(emax) => {
            let mut x = Array2::zeros((spec.n, spec.p));
            let mut z = Array2::zeros((spec.n, spec.q));
            let mut t = Array1::zeros(spec.n);
            let mut entry = Array1::zeros(spec.n);
            for i in 0..spec.n {
                loop {
                    fill_subject(spec, rng, x.row_mut(i).as_slice_mut().unwrap(), z.row_mut(i).as_slice_mut().unwrap());
                    let lp = x.row(i).dot(&beta) + z.row(i).dot(&gamma);
                    let ti = (lp + spec.scenario.sample::<f64, _>(rng)).exp();
                    let u: f64 = uniform_open(rng);
                    if ti > u * emax {
                        t[i] = ti;
                        entry[i] = u * emax;
                        break;
                    }
                }
            }
            (x, z, t, entry)
        }
    };
    let cens = apply_admin_censoring(&times, spec.event_band)?;
    let (mut lower, mut upper) = (cens.lower, cens.upper);
    for i in 0..spec.n {
        lower[i] = lower[i].max(entry[i]);
    }
    if let Some(v) = spec.visit_interval {
        coarsen_to_visits(&mut lower, &mut upper, &entry, v);
    }
    let x_names = (1..=spec.p).map(|j| format!("x_{j}")).collect();
    let z_names = (1..=spec.q).map(|j| format!("z_{j}")).collect();
    let dataset = SurvivalDataset::new(entry, lower, upper, x, z, spec.groups())?.with_names(x_names, z_names)?;
    Ok(SimulatedData { dataset, beta, gamma, event_rate: cens.event_rate, cutoff: cens.cutoff })
}

/// Random stream for the data of replication `rep`.
pub fn data_rng(spec: &ScenarioSpec, rep: usize) -> RngStream {
    RngStream::new(spec.seed, (1 << 32) + rep as u64)
}

/// Sampler seed for replication `rep`; chains then use streams `1..`.
pub fn replication_seed(spec: &ScenarioSpec, rep: usize) -> u64 {
    spec.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(rep as u64 + 1)
}

/// Everything besides the [`ScenarioSpec`] needed for a study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchConfig {
    pub spec: ScenarioSpec,
    pub sampler: SamplerConfig,
    pub prior: PriorConfig,
    pub grid_size: usize,
    pub models: Vec<PriorKind>,
    /// replications run concurrently; 0 uses all cores
    #[serde(skip)]
    pub workers: usize,
}

impl BenchConfig {
    pub fn new(spec: ScenarioSpec) -> Self {
        Self {
            spec,
            sampler: SamplerConfig { workers: 1, ..SamplerConfig::default() },
            prior: PriorConfig::default(),
            grid_size: DEFAULT_GRID_SIZE,
            models: vec![PriorKind::GroupLasso, PriorKind::OrdinaryLasso],
            workers: 0,
        }
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("line {}: expected key = value, got `{line}`", ln + 1)))?;
            map.insert(k.trim().to_string(), (ln + 1, v.trim().to_string()));
        }
        let mut cfg = BenchConfig::new(ScenarioSpec::default());
        for (key, (ln, val)) in map {
            let num = |v: &str| -> Result<f64> {
                v.parse::<f64>().map_err(|_| Error::InvalidParameter(format!("line {ln}: `{key}` expects a number, got `{v}`")))
            };
            let int = |v: &str| -> Result<usize> {
                v.parse::<usize>().map_err(|_| Error::InvalidParameter(format!("line {ln}: `{key}` expects an integer, got `{v}`")))
            };
            let s = &mut cfg.spec;
            match key.as_str() {
                "n" => s.n = int(&val)?,
                "p" => s.p = int(&val)?,
                "q" => s.q = int(&val)?,
                "scenario" => s.scenario = ErrorScenario::from_id(int(&val)? as u32)?,
                "blocks" => s.n_blocks = int(&val)?,
                "block_size" => s.block_size = int(&val)?,
                "beta_star" => {
                    s.beta_star = val.split(',').map(|t| num(t.trim())).collect::<Result<_>>()?;
                }
                "gamma" => s.gamma = num(&val)?,
                "event_rate_low" => s.event_band.0 = num(&val)?,
                "event_rate_high" => s.event_band.1 = num(&val)?,
                "reps" => s.reps = int(&val)?,
                "seed" => s.seed = val.parse().map_err(|_| Error::InvalidParameter(format!("line {ln}: bad seed `{val}`")))?,
                "entry_max" => s.entry_max = Some(num(&val)?),
                "visit_interval" => s.visit_interval = Some(num(&val)?),
                "iters" => cfg.sampler.n_iter = int(&val)?,
                "chains" => cfg.sampler.n_chains = int(&val)?,
                "burn_frac" => cfg.sampler.burn_frac = num(&val)?,
                "thin" => cfg.sampler.thin = int(&val)?,
                "mcem_interval" => cfg.sampler.mcem_interval = int(&val)?,
                "grid" => cfg.grid_size = int(&val)?,
                "workers" => cfg.workers = int(&val)?,
                "models" => {
                    cfg.models = val.split(',').map(|t| t.trim().parse()).collect::<Result<_>>()?;
                }
                "v2" => cfg.prior.v2 = num(&val)?,
                other => return Err(Error::InvalidParameter(format!("line {ln}: unknown key `{other}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.sampler.validate()?;
        self.prior.validate()?;
        if self.grid_size == 0 || self.models.is_empty() {
            return Err(Error::InvalidParameter("grid must be positive and at least one model is required".into()));
        }
        Ok(())
    }
}

/// Scores of one fitted model; rates are fractions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationResult {
    pub rep: usize,
    pub model: PriorKind,
    pub l2_error: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub ppv: f64,
    pub npv: f64,
    pub n_selected: usize,
    pub empty_selection: bool,
    pub event_rate: f64,
    pub max_psrf: Option<f64>,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationFailure {
    pub rep: usize,
    pub model: PriorKind,
    pub message: String,
}

/// Fits one model to one simulated dataset and scores the selected model.
pub fn evaluate_model(cfg: &BenchConfig, sim: &SimulatedData, kind: PriorKind, rep: usize) -> Result<ReplicationResult> {
    let start = Instant::now();
    let sampler = SamplerConfig { seed: replication_seed(&cfg.spec, rep), ..cfg.sampler.clone() };
    let set = run_chains(&sim.dataset, &cfg.prior, &sampler, kind)?;
    let summary = PosteriorSummary::from_chains(&set.chains)?;
    let sel = snc_bic_select(&summary, &sim.dataset, cfg.grid_size)?;
    let truth: Vec<usize> = (0..sim.beta.len()).filter(|&j| sim.beta[j] != 0.0).collect();
    let m = selection_metrics(&sel.selected, &truth, sim.beta.len())?;
    let l2 = sel.beta.iter().zip(sim.beta.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok(ReplicationResult {
        rep,
        model: kind,
        l2_error: l2,
        tpr: m.tpr,
        fpr: m.fpr,
        ppv: m.ppv,
        npv: m.npv,
        n_selected: sel.selected.len(),
        empty_selection: m.empty_selection,
        event_rate: sim.event_rate,
        max_psrf: set.convergence.max_psrf(),
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}

fn run_one(cfg: &BenchConfig, rep: usize) -> Vec<std::result::Result<ReplicationResult, ReplicationFailure>> {
    let mut rng = data_rng(&cfg.spec, rep);
    let sim = match simulate_dataset(&cfg.spec, &mut rng) {
        Ok(s) => s,
        Err(e) => {
            return cfg.models.iter().map(|&model| Err(ReplicationFailure { rep, model, message: e.to_string() })).collect();
        }
    };
    cfg.models
        .iter()
        .map(|&model| evaluate_model(cfg, &sim, model, rep).map_err(|e| ReplicationFailure { rep, model, message: e.to_string() }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(v: &[f64]) -> Self {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let sd = if v.len() > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { f64::NAN };
        Self { mean, sd }
    }
}

/// Per-model averages; rates are in percent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub model: PriorKind,
    pub scenario: u32,
    pub n_ok: usize,
    pub n_failed: usize,
    pub l2_error: MeanSd,
    pub tpr: MeanSd,
    pub fpr: MeanSd,
    pub ppv: MeanSd,
    pub npv: MeanSd,
    pub n_selected: MeanSd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchOutput {
    pub results: Vec<ReplicationResult>,
    pub failures: Vec<ReplicationFailure>,
    pub aggregate: Vec<AggregateRow>,
}

impl BenchOutput {
    pub fn for_model(&self, kind: PriorKind) -> Vec<&ReplicationResult> {
        self.results.iter().filter(|r| r.model == kind).collect()
    }

    pub fn aggregate_for(&self, kind: PriorKind) -> Option<&AggregateRow> {
        self.aggregate.iter().find(|a| a.model == kind)
    }

    /// ℓ2 errors of two models on the replications where both succeeded.
    pub fn paired_l2(&self, a: PriorKind, b: PriorKind) -> (Vec<f64>, Vec<f64>) {
        let mut xa = Vec::new();
        let mut xb = Vec::new();
        for ra in self.for_model(a) {
            if let Some(rb) = self.results.iter().find(|r| r.model == b && r.rep == ra.rep) {
                xa.push(ra.l2_error);
                xb.push(rb.l2_error);
            }
        }
        (xa, xb)
    }
}

/// Runs every replication (concurrently, `cfg.workers` threads) and
/// aggregates the successful ones per model.
pub fn run_replications(cfg: &BenchConfig) -> Result<BenchOutput> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Other(format!("thread pool: {e}")))?;
    let per_rep: Vec<_> = pool.install(|| (0..cfg.spec.reps).into_par_iter().map(|rep| run_one(cfg, rep)).collect());
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for r in per_rep.into_iter().flatten() {
        match r {
            Ok(v) => results.push(v),
            Err(f) => {
                log::warn!("replication {} ({}) failed: {}", f.rep, f.model.name(), f.message);
                failures.push(f);
            }
        }
    }
    let aggregate = cfg
        .models
        .iter()
        .map(|&model| {
            let rows: Vec<&ReplicationResult> = results.iter().filter(|r| r.model == model).collect();
            let col = |f: &dyn Fn(&ReplicationResult) -> f64| MeanSd::of(&rows.iter().map(|r| f(r)).collect::<Vec<_>>());
            AggregateRow {
                model,
                scenario: cfg.spec.scenario.id(),
                n_ok: rows.len(),
                n_failed: failures.iter().filter(|f| f.model == model).count(),
                l2_error: col(&|r| r.l2_error),
                tpr: col(&|r| 100.0 * r.tpr),
                fpr: col(&|r| 100.0 * r.fpr),
                ppv: col(&|r| 100.0 * r.ppv),
                npv: col(&|r| 100.0 * r.npv),
                n_selected: col(&|r| r.n_selected as f64),
            }
        })
        .collect();
    Ok(BenchOutput { results, failures, aggregate })
}

/// One-sided paired t-test of `mean(a - b) < 0`: `(t, df, p)`.
pub fn paired_t_test_less(a: &[f64], b: &[f64]) -> Result<(f64, f64, f64)> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidParameter("paired test needs two equal samples of size at least 2".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = MeanSd::of(&d);
    let n = d.len() as f64;
    let df = n - 1.0;
    if m.sd == 0.0 {
        return Ok(match m.mean.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Less) => (f64::NEG_INFINITY, df, 0.0),
            Some(std::cmp::Ordering::Greater) => (f64::INFINITY, df, 1.0),
            _ => (0.0, df, 0.5),
        });
    }
    let t = m.mean / (m.sd / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Other(e.to_string()))?;
    Ok((t, df, dist.cdf(t)))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| x.to_string())
}

/// `replications.csv`: one row per replication and model (no timings).
pub fn write_replications(path: &Path, out: &BenchOutput) -> Result<()> {
    let mut s = String::from("rep,model,l2_error,tpr,fpr,ppv,npv,n_selected,empty_selection,event_rate,max_psrf\n");
    for r in &out.results {
        s += &format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.rep + 1,
            r.model.name(),
            r.l2_error,
            r.tpr,
            r.fpr,
            r.ppv,
            r.npv,
            r.n_selected,
            r.empty_selection,
            r.event_rate,
            fmt_opt(r.max_psrf)
        );
    }
    for f in &out.failures {
        s += &format!("{},{},NA,NA,NA,NA,NA,NA,NA,NA,NA\n", f.rep + 1, f.model.name());
    }
    write_text(path, &s)
}

/// `aggregate.csv`: mean and sd per model, rates in percent.
pub fn write_aggregate(path: &Path, out: &BenchOutput) -> Result<()> {
    let mut s = String::from("model,scenario,n_ok,n_failed,l2_mean,l2_sd,tpr_mean,tpr_sd,fpr_mean,fpr_sd,ppv_mean,ppv_sd,npv_mean,npv_sd,selected_mean,selected_sd\n");
    for a in &out.aggregate {
        let ms = |m: &MeanSd| format!("{:.4},{:.4}", m.mean, m.sd);
        s += &format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            a.model.name(),
            a.scenario,
            a.n_ok,
            a.n_failed,
            ms(&a.l2_error),
            ms(&a.tpr),
            ms(&a.fpr),
            ms(&a.ppv),
            ms(&a.npv),
            ms(&a.n_selected)
        );
    }
    write_text(path, &s)
}

/// `timing.csv`: wall-clock seconds per replication and model.
pub fn write_timings(path: &Path, out: &BenchOutput) -> Result<()> {
    let mut s = String::from("rep,model,wall_clock_s\n");
    for r in &out.results {
        s += &format!("{},{},{:.3}\n", r.rep + 1, r.model.name(), r.wall_clock_s);
    }
    write_text(path, &s)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
