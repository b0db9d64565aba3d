//! File-level workflows behind the command-line tool. Every output is plain
//! CSV or JSON and is a deterministic function of the inputs and seeds;
//! wall-clock timings go to a separate `timing.json`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{Array1, Array2, Axis};
use serde::Serialize;

use crate::data::{load_dataset, write_dataset, write_groups, SurvivalDataset};
use crate::design::{FitDesign, PriorKind};
use crate::dists::special::norm_quantile;
use crate::error::{Error, Result};
use crate::likelihood::PriorConfig;
use crate::sampler::{run_chains_with_design, AcceptanceRates, ChainOutput, ConvergenceSummary, SamplerConfig, TunedSteps};
use crate::selection::{snc_bic_select, CoefSummary, PosteriorSummary, SelectionResult};
use crate::sim::{paired_t_test_less, run_replications, simulate_dataset, write_aggregate, write_replications, write_text, write_timings, data_rng, BenchConfig};

pub const DATA_FILE: &str = "data.csv";
pub const GROUPS_FILE: &str = "groups.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const FINAL_MODEL_FILE: &str = "final_model.json";

/// Survival probabilities at which quantile tables are reported.
pub const QUANTILE_LEVELS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

fn chain_file(dir: &Path, id: usize) -> PathBuf {
    dir.join(format!("chain_{id}.csv"))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Other(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "NA".into()
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, Serialize)]
struct ChainRecord {
    chain: usize,
    seed: u64,
    stream: u64,
    draws: usize,
    acceptance: AcceptanceRates,
    tuned_steps: TunedSteps,
    final_lambda2: f64,
}

#[derive(Debug, Clone, Serialize)]
struct FitManifest<'a> {
    prior_kind: &'static str,
    n: usize,
    p: usize,
    q: usize,
    groups: Vec<String>,
    sampler: &'a SamplerConfig,
    prior: &'a PriorConfig,
    chains: Vec<ChainRecord>,
    max_psrf: Option<f64>,
    min_ess: f64,
    diagnostics: &'a ConvergenceSummary,
}

/// Outcome of [`fit_to_dir`].
#[derive(Debug, Clone)]
pub struct FitRun {
    pub chains: Vec<ChainOutput<f64>>,
    pub convergence: ConvergenceSummary,
    /// `None` when fewer than two draws were retained
    pub summary: Option<PosteriorSummary>,
    pub seconds: f64,
}

fn write_chain_csv(path: &Path, chain: &ChainOutput<f64>) -> Result<()> {
    let mut s = chain.column_names().join(",");
    s.push('\n');
    for row in chain.table().axis_iter(Axis(0)) {
        let fields: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
        s += &fields.join(",");
        s.push('\n');
    }
    write_text(path, &s)
}

fn summary_rows(label: &str, rows: &[CoefSummary], out: &mut String) {
    for c in rows {
        *out += &format!(
            "{},{},{},{},{},{},{},{}\n",
            c.name,
            label,
            fmt(c.median),
            fmt(c.mean),
            fmt(c.sd),
            fmt(c.q025),
            fmt(c.q975),
            fmt(c.snc)
        );
    }
}

fn write_summary_csv(path: &Path, s: &PosteriorSummary, extra: &[CoefSummary]) -> Result<()> {
    let mut text = String::from("parameter,kind,median,mean,sd,q025,q975,snc\n");
    summary_rows("beta", &s.beta, &mut text);
    summary_rows("gamma", &s.gamma, &mut text);
    summary_rows("other", extra, &mut text);
    write_text(path, &text)
}

fn write_diagnostics_csv(path: &Path, c: &ConvergenceSummary) -> Result<()> {
    let mut text = String::from("parameter,psrf,ess\n");
    for p in &c.params {
        text += &format!("{},{},{}\n", p.name, p.psrf.map_or("NA".into(), fmt), fmt(p.ess));
    }
    write_text(path, &text)
}

fn pooled(chains: &[ChainOutput<f64>], f: impl Fn(&ChainOutput<f64>) -> &Array1<f64>) -> Array1<f64> {
    Array1::from_iter(chains.iter().flat_map(|c| f(c).iter().copied()))
}

/// Fits a dataset, writing `chain_<k>.csv`, `manifest.json`, `summary.csv`,
/// `diagnostics.csv`, `timing.json` and normalized copies of the inputs.
pub fn fit_to_dir(
    d: &SurvivalDataset<f64>,
    out: &Path,
    prior: &PriorConfig,
    cfg: &SamplerConfig,
    kind: PriorKind,
) -> Result<FitRun> {
    let start = Instant::now();
    ensure_dir(out)?;
    let design = FitDesign::new(d, kind)?;
    let set = run_chains_with_design(&design, prior, cfg)?;
    for c in &set.chains {
        write_chain_csv(&chain_file(out, c.chain_id), c)?;
    }
    let total: usize = set.chains.iter().map(|c| c.n_draws()).sum();
    let summary = if total >= 2 {
        let s = PosteriorSummary::from_chains(&set.chains)?;
        let extra = vec![
            CoefSummary::from_draws("mu", pooled(&set.chains, |c| &c.mu).view())?,
            CoefSummary::from_draws("sigma2", pooled(&set.chains, |c| &c.sigma2).view())?,
        ];
        write_summary_csv(&out.join(SUMMARY_FILE), &s, &extra)?;
        Some(s)
    } else {
        log::warn!("only {total} retained draw(s); summary.csv not written");
        None
    };
    write_diagnostics_csv(&out.join("diagnostics.csv"), &set.convergence)?;
    write_dataset(&out.join(DATA_FILE), d)?;
    write_groups(&out.join(GROUPS_FILE), d)?;
    let manifest = FitManifest {
        prior_kind: kind.name(),
        n: d.n(),
        p: d.p(),
        q: d.q(),
        groups: design.group_labels(),
        sampler: cfg,
        prior,
        chains: set
            .chains
            .iter()
            .map(|c| ChainRecord {
                chain: c.chain_id,
                seed: c.seed,
                stream: c.stream,
                draws: c.n_draws(),
                acceptance: c.acceptance,
                tuned_steps: c.steps,
                final_lambda2: *c.lambda2_trace.last().unwrap_or(&f64::NAN),
            })
            .collect(),
        max_psrf: set.convergence.max_psrf(),
        min_ess: set.convergence.min_ess(),
        diagnostics: &set.convergence,
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    let seconds = start.elapsed().as_secs_f64();
    write_json(&out.join("timing.json"), &serde_json::json!({ "wall_clock_seconds": seconds }))?;
    Ok(FitRun { chains: set.chains, convergence: set.convergence, summary, seconds })
}

/// Retained draws read back from a fit directory.
#[derive(Debug, Clone)]
pub struct StoredFit {
    pub dataset: SurvivalDataset<f64>,
    pub names: Vec<String>,
    /// one draws x columns matrix per chain
    pub chains: Vec<Array2<f64>>,
}

impl StoredFit {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Pooled draws of the named columns.
    pub fn pooled(&self, names: &[String]) -> Result<Array2<f64>> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.column(n).ok_or_else(|| Error::Other(format!("column `{n}` missing from the chain files"))))
            .collect::<Result<_>>()?;
        let total: usize = self.chains.iter().map(|c| c.nrows()).sum();
        let mut out = Array2::zeros((total, idx.len()));
        let mut r = 0;
        for c in &self.chains {
            for row in c.axis_iter(Axis(0)) {
                for (k, &j) in idx.iter().enumerate() {
                    out[[r, k]] = row[j];
                }
                r += 1;
            }
        }
        Ok(out)
    }

    pub fn summary(&self) -> Result<PosteriorSummary> {
        let beta = self.pooled(self.dataset.x_names())?;
        let gamma = self.pooled(self.dataset.z_names())?;
        PosteriorSummary::from_draws(beta.view(), gamma.view(), self.dataset.x_names(), self.dataset.z_names())
    }
}

fn read_chain_csv(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().from_path(path).map_err(|e| Error::schema(path, e.to_string()))?;
    let names: Vec<String> = rdr.headers().map_err(|e| Error::schema(path, e.to_string()))?.iter().map(String::from).collect();
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::schema(path, format!("row {}: {e}", i + 1)))?;
        for (j, field) in rec.iter().enumerate() {
            let v = if field == "NA" {
                f64::NAN
            } else {
                field
                    .parse::<f64>()
                    .map_err(|_| Error::schema(path, format!("row {}: column {}: cannot parse '{field}'", i + 1, names[j])))?
            };
            values.push(v);
        }
        rows += 1;
    }
    let m = Array2::from_shape_vec((rows, names.len()), values).map_err(|e| Error::schema(path, e.to_string()))?;
    Ok((names, m))
}

/// Loads the dataset copy and every `chain_<k>.csv` of a fit directory.
pub fn load_fit_dir(dir: &Path) -> Result<StoredFit> {
    let dataset = load_dataset(&dir.join(DATA_FILE), &dir.join(GROUPS_FILE))?;
    let mut chains = Vec::new();
    let mut names: Option<Vec<String>> = None;
    for k in 1.. {
        let path = chain_file(dir, k);
        if !path.exists() {
            break;
        }
        let (n, m) = read_chain_csv(&path)?;
        if names.as_ref().is_some_and(|prev| prev != &n) {
            return Err(Error::schema(&path, "header differs from chain_1.csv"));
        }
        names = Some(n);
        chains.push(m);
    }
    let names = names.ok_or_else(|| Error::schema(chain_file(dir, 1), "no chain files found"))?;
    let total: usize = chains.iter().map(|c| c.nrows()).sum();
    if total < 2 {
        return Err(Error::InvalidData(format!("only {total} retained draws in {}; at least 2 are needed", dir.display())));
    }
    Ok(StoredFit { dataset, names, chains })
}

fn named(names: &[String], values: &[f64]) -> serde_json::Map<String, serde_json::Value> {
    names.iter().zip(values).map(|(n, &v)| (n.clone(), serde_json::json!(v))).collect()
}

/// Runs SNC-BIC selection on a fit directory, writing `candidates.csv` and
/// `final_model.json`.
pub fn select_dir(dir: &Path, grid_size: usize) -> Result<SelectionResult> {
    let fit = load_fit_dir(dir)?;
    let summary = fit.summary()?;
    let sel = snc_bic_select(&summary, &fit.dataset, grid_size)?;
    let mut text = String::from("kappa_min,kappa_max,size,loglik,criterion,intercept,slope,scale,support,selected\n");
    for (i, c) in sel.candidates.iter().enumerate() {
        let support: Vec<&str> = c.support.iter().map(|&j| fit.dataset.x_names()[j].as_str()).collect();
        text += &format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            c.kappa_min,
            c.kappa_max,
            c.size,
            c.loglik,
            c.criterion,
            c.refit.intercept,
            c.refit.slope,
            c.refit.scale,
            support.join(";"),
            i == sel.winner
        );
    }
    write_text(&dir.join("candidates.csv"), &text)?;
    let record = serde_json::json!({
        "grid_size": sel.grid_size,
        "n": sel.n,
        "selected": sel.selected_names,
        "criterion": sel.winning().criterion,
        "loglik": sel.winning().loglik,
        "beta": named(fit.dataset.x_names(), &sel.beta),
        "gamma": named(fit.dataset.z_names(), &sel.gamma),
        "snc": named(fit.dataset.x_names(), &sel.snc),
        "dropped_candidates": sel.dropped,
    });
    write_json(&dir.join(FINAL_MODEL_FILE), &record)?;
    Ok(sel)
}

/// A covariate profile for the quantile table; covariates not listed are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub name: String,
    pub values: Vec<(String, f64)>,
}

/// Reads profiles from a CSV whose header names covariates; an optional
/// `profile` column names the rows.
pub fn read_profiles(path: &Path) -> Result<Vec<Profile>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| Error::schema(path, e.to_string()))?;
    let headers: Vec<String> = rdr.headers().map_err(|e| Error::schema(path, e.to_string()))?.iter().map(String::from).collect();
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::schema(path, format!("row {}: {e}", i + 1)))?;
        let mut name = format!("profile_{}", i + 1);
        let mut values = Vec::new();
        for (h, f) in headers.iter().zip(rec.iter()) {
            if h == "profile" {
                name = f.to_string();
            } else {
                let v = f.parse::<f64>().map_err(|_| Error::schema(path, format!("row {}: column {h}: cannot parse '{f}'", i + 1)))?;
                values.push((h.clone(), v));
            }
        }
        out.push(Profile { name, values });
    }
    Ok(out)
}

/// Point estimates used for reporting: selected-model coefficients when a
/// selection exists, posterior medians otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimates {
    pub mu: f64,
    pub sigma: f64,
    pub coef: Vec<(String, f64)>,
}

/// Survival-time quantiles `exp(eta + sigma Phi^-1(q))` of one profile.
pub fn profile_quantiles(est: &PointEstimates, profile: &Profile, levels: &[f64]) -> Result<Vec<f64>> {
    let mut eta = est.mu;
    for (name, v) in &profile.values {
        let b = est
            .coef
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| *b)
            .ok_or_else(|| Error::InvalidParameter(format!("profile `{}` names unknown covariate `{name}`", profile.name)))?;
        eta += b * v;
    }
    Ok(levels.iter().map(|&q| (eta + est.sigma * norm_quantile(q)).exp()).collect())
}

#[derive(Debug, Clone)]
pub struct SummarizeOutput {
    pub estimates: PointEstimates,
    pub convergence: ConvergenceSummary,
    /// `(profile, quantiles)`; the baseline (all covariates 0) comes first
    pub quantiles: Vec<(String, Vec<f64>)>,
}

/// Writes `acceleration_factors.csv`, `quantiles.csv` and
/// `diagnostics.csv` for a fit directory.
pub fn summarize_dir(dir: &Path, profiles: &[Profile]) -> Result<SummarizeOutput> {
    let fit = load_fit_dir(dir)?;
    let summary = fit.summary()?;
    let selection: Option<serde_json::Value> = match std::fs::read_to_string(dir.join(FINAL_MODEL_FILE)) {
        Ok(text) => Some(serde_json::from_str(&text).map_err(|e| Error::schema(dir.join(FINAL_MODEL_FILE), e.to_string()))?),
        Err(_) => None,
    };
    let selected_value = |name: &str, kind: &str| -> Option<f64> { selection.as_ref()?.get(kind)?.get(name)?.as_f64() };

    let mut text = String::from("parameter,kind,estimate,acceleration_factor,af_q025,af_q975,snc,selected\n");
    let mut coef = Vec::new();
    for (kind, rows) in [("beta", &summary.beta), ("gamma", &summary.gamma)] {
        for c in rows.iter() {
            let est = selected_value(&c.name, kind).unwrap_or(c.median);
            let selected = match (&selection, kind) {
                (Some(s), "beta") => s["selected"].as_array().is_some_and(|a| a.iter().any(|v| v.as_str() == Some(&c.name))).to_string(),
                (Some(_), _) => "true".into(),
                (None, _) => "NA".into(),
            };
            text += &format!(
                "{},{kind},{},{},{},{},{},{selected}\n",
                c.name,
                fmt(est),
                fmt(est.exp()),
                fmt(c.q025.exp()),
                fmt(c.q975.exp()),
                fmt(c.snc)
            );
            coef.push((c.name.clone(), est));
        }
    }
    write_text(&dir.join("acceleration_factors.csv"), &text)?;

    let med = |name: &str| -> Result<f64> {
        let m = fit.pooled(&[name.to_string()])?;
        let mut v = m.column(0).to_vec();
        v.sort_by(f64::total_cmp);
        Ok(crate::selection::quantile_sorted(&v, 0.5))
    };
    let estimates = PointEstimates { mu: med("mu")?, sigma: med("sigma2")?.sqrt(), coef };
    let mut all = vec![Profile { name: "baseline".into(), values: Vec::new() }];
    all.extend(profiles.iter().cloned());
    let mut quantiles = Vec::new();
    let mut qt = String::from("profile,survival_quantile,time,ratio_to_baseline\n");
    let base = profile_quantiles(&estimates, &all[0], &QUANTILE_LEVELS)?;
    for prof in &all {
        let qs = profile_quantiles(&estimates, prof, &QUANTILE_LEVELS)?;
        for (k, &q) in QUANTILE_LEVELS.iter().enumerate() {
            qt += &format!("{},{q},{},{}\n", prof.name, fmt(qs[k]), fmt(qs[k] / base[k]));
        }
        quantiles.push((prof.name.clone(), qs));
    }
    write_text(&dir.join("quantiles.csv"), &qt)?;

    let convergence = stored_convergence(&fit);
    write_diagnostics_csv(&dir.join("diagnostics.csv"), &convergence)?;
    Ok(SummarizeOutput { estimates, convergence, quantiles })
}

fn stored_convergence(fit: &StoredFit) -> ConvergenceSummary {
    use crate::sampler::{effective_sample_size, potential_scale_reduction, ParamDiagnostic};
    let params = fit
        .names
        .iter()
        .enumerate()
        .filter(|(_, n)| n.as_str() != "lambda2")
        .map(|(j, n)| {
            let cols: Vec<Vec<f64>> = fit.chains.iter().map(|c| c.column(j).to_vec()).collect();
            let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
            ParamDiagnostic { name: n.clone(), psrf: potential_scale_reduction(&refs), ess: effective_sample_size(&refs) }
        })
        .collect();
    ConvergenceSummary { n_chains: fit.chains.len(), params }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairedComparison {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Runs a simulation study into `out` (`replications.csv`, `aggregate.csv`,
/// `timing.csv`, `study.json`). With `dry_run` only the first replication's
/// dataset is written, with its true coefficients.
pub fn simulate_to_dir(cfg: &BenchConfig, out: &Path, dry_run: bool) -> Result<Option<crate::sim::BenchOutput>> {
    ensure_dir(out)?;
    if dry_run {
        let sim = simulate_dataset(&cfg.spec, &mut data_rng(&cfg.spec, 0))?;
        write_dataset(&out.join(DATA_FILE), &sim.dataset)?;
        write_groups(&out.join(GROUPS_FILE), &sim.dataset)?;
        let mut t = String::from("parameter,value\n");
        for (n, b) in sim.dataset.x_names().iter().zip(sim.beta.iter()) {
            t += &format!("{n},{b}\n");
        }
        for (n, g) in sim.dataset.z_names().iter().zip(sim.gamma.iter()) {
            t += &format!("{n},{g}\n");
        }
        write_text(&out.join("truth.csv"), &t)?;
        return Ok(None);
    }
    let res = run_replications(cfg)?;
    write_replications(&out.join("replications.csv"), &res)?;
    write_aggregate(&out.join("aggregate.csv"), &res)?;
    write_timings(&out.join("timing.csv"), &res)?;
    let paired = if cfg.models.contains(&PriorKind::GroupLasso) && cfg.models.contains(&PriorKind::OrdinaryLasso) {
        let (a, b) = res.paired_l2(PriorKind::GroupLasso, PriorKind::OrdinaryLasso);
        paired_t_test_less(&a, &b).ok().map(|(t, df, p_value)| PairedComparison { t, df, p_value })
    } else {
        None
    };
    write_json(
        &out.join("study.json"),
        &serde_json::json!({ "config": cfg, "aggregate": res.aggregate, "failures": res.failures, "l2_group_below_ordinary": paired }),
    )?;
    Ok(Some(res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_profile_is_baseline_and_ratio_is_constant() {
        let est = PointEstimates { mu: 1.2, sigma: 0.8, coef: vec![("x_1".into(), -0.15), ("z_1".into(), 0.4)] };
        let zero = Profile { name: "zero".into(), values: vec![("x_1".into(), 0.0)] };
        let base = profile_quantiles(&est, &Profile { name: "b".into(), values: vec![] }, &QUANTILE_LEVELS).unwrap();
        assert_eq!(profile_quantiles(&est, &zero, &QUANTILE_LEVELS).unwrap(), base);
        let one = Profile { name: "one".into(), values: vec![("x_1".into(), 1.0)] };
        let q1 = profile_quantiles(&est, &one, &QUANTILE_LEVELS).unwrap();
        for k in 0..QUANTILE_LEVELS.len() {
            assert_relative_eq!(q1[k] / base[k], (-0.15f64).exp(), epsilon = 1e-12);
        }
        assert_relative_eq!((-0.15f64).exp(), 0.861, epsilon = 5e-4);
        let bad = Profile { name: "bad".into(), values: vec![("nope".into(), 1.0)] };
        assert!(profile_quantiles(&est, &bad, &QUANTILE_LEVELS).is_err());
    }
}
