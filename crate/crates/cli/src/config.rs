use std::path::{Path, PathBuf};

use aftgl::design::PriorKind;
use aftgl::likelihood::PriorConfig;
use aftgl::sampler::SamplerConfig;
use aftgl::selection::DEFAULT_GRID_SIZE;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Contents of a `--config` TOML file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub prior_kind: Option<String>,
    pub grid: Option<usize>,
    pub sampler: Option<SamplerConfig>,
    pub prior: Option<PriorConfig>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })?;
        toml::from_str(&text).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })
    }
}

/// Fully resolved settings: flag, then config file, then built-in default.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub sampler: SamplerConfig,
    pub prior: PriorConfig,
    pub prior_kind: PriorKind,
    pub grid: usize,
    pub workers: usize,
    pub config_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub prior_kind: Option<String>,
    pub grid: Option<usize>,
    pub iters: Option<usize>,
    pub chains: Option<usize>,
    pub burn_frac: Option<f64>,
    pub thin: Option<usize>,
    pub mcem_interval: Option<usize>,
    pub v2: Option<f64>,
}

pub fn resolve(config_path: Option<&Path>, o: &Overrides) -> Result<RunConfig, CliError> {
    let file = match config_path {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let mut sampler = file.sampler.unwrap_or_default();
    let mut prior = file.prior.unwrap_or_default();
    if let Some(s) = o.seed.or(file.seed) {
        sampler.seed = s;
    }
    let workers = o.workers.or(file.workers).unwrap_or(0);
    sampler.workers = workers;
    if let Some(v) = o.iters {
        sampler.n_iter = v;
    }
    if let Some(v) = o.chains {
        sampler.n_chains = v;
    }
    if let Some(v) = o.burn_frac {
        sampler.burn_frac = v;
    }
    if let Some(v) = o.thin {
        sampler.thin = v;
    }
    if let Some(v) = o.mcem_interval {
        sampler.mcem_interval = v;
    }
    if let Some(v) = o.v2 {
        prior.v2 = v;
    }
    let prior_kind = match o.prior_kind.as_deref().or(file.prior_kind.as_deref()) {
        Some(s) => s.parse::<PriorKind>()?,
        None => PriorKind::default(),
    };
    sampler.validate()?;
    prior.validate()?;
    let grid = o.grid.or(file.grid).unwrap_or(DEFAULT_GRID_SIZE);
    if grid == 0 {
        return Err(aftgl::Error::InvalidParameter("grid must be at least 1".into()).into());
    }
    Ok(RunConfig { sampler, prior, prior_kind, grid, workers, config_path: config_path.map(Path::to_path_buf) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_beats_file_beats_default() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "seed = 9\nprior_kind = \"ordinary\"\n[sampler]\nn_iter = 300\nthin = 3\n[prior]\nv2 = 10.0\n").unwrap();
        let o = Overrides { iters: Some(400), ..Default::default() };
        let c = resolve(Some(&path), &o).unwrap();
        assert_eq!(c.sampler.n_iter, 400);
        assert_eq!(c.sampler.thin, 3);
        assert_eq!(c.sampler.seed, 9);
        assert_eq!(c.prior.v2, 10.0);
        assert_eq!(c.prior_kind, PriorKind::OrdinaryLasso);
        assert_eq!(c.sampler.burn_frac, 0.5);
        let none = resolve(None, &Overrides::default()).unwrap();
        assert_eq!(none.sampler, SamplerConfig::default());
        assert_eq!(none.grid, 1000);
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[sampler]\nbogus = 1\n").unwrap();
        assert!(matches!(resolve(Some(&path), &Overrides::default()), Err(CliError::Config { .. })));
    }
}
