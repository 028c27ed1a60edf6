//! Experiment configuration: a TOML file plus command-line overrides.
//!
//! The file carries the full scenario (array, truth locations, search grid,
//! experiment parameters); flags override individual values. Every section
//! rejects unknown keys so typos fail loudly instead of silently running a
//! different experiment.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use nfloc_core::array::ArrayConfig;
use nfloc_core::estimators::SearchGrid;
use nfloc_core::grid::GridAxis;
use nfloc_core::mc::{ExperimentConfig, Method};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub array: ArraySection,
    pub truth: TruthSection,
    pub grid: GridSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub num_elements: usize,
    pub spacing_wl: f64,
    pub coupling_terms: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSection {
    /// True directions in degrees. `simulate` and `estimate` treat them as
    /// one scene; `mc-rmse` sweeps them as independent single-source cells.
    pub doas_deg: Vec<f64>,
    /// True range in wavelengths, shared by all directions.
    pub range_wl: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub doa_start_deg: f64,
    pub doa_stop_deg: f64,
    pub doa_step_deg: f64,
    pub range_start_wl: f64,
    pub range_stop_wl: f64,
    pub range_step_wl: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// SNR points in dB; `simulate` uses the first entry.
    pub snr_db: Vec<f64>,
    pub snapshots: usize,
    pub trials: usize,
    /// Estimators to run, by name.
    pub methods: Vec<String>,
    pub refine_tol_deg: f64,
    pub refine_max_iter: u32,
    /// Master seed; the --seed flag takes precedence.
    pub master_seed: Option<u64>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            snr_db: vec![0.0, 10.0, 20.0, 30.0],
            snapshots: 200,
            trials: 100,
            methods: Method::ALL.iter().map(|m| m.name().to_string()).collect(),
            refine_tol_deg: 0.1,
            refine_max_iter: 30,
            master_seed: None,
        }
    }
}

/// Values supplied on the command line that replace file values.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    /// A method name, or "all" for every estimator.
    pub method: Option<String>,
    pub snr_db: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub doa_step_deg: Option<f64>,
    pub range_step_wl: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let cfg: FileConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config file {}", path.display()))?;
        Ok(cfg)
    }

    pub fn array(&self) -> Result<ArrayConfig> {
        Ok(ArrayConfig::new(
            self.array.num_elements,
            self.array.spacing_wl,
            self.array.coupling_terms,
        )?)
    }

    pub fn search_grid(&self, ov: &Overrides) -> Result<SearchGrid> {
        let doa_step = ov.doa_step_deg.unwrap_or(self.grid.doa_step_deg);
        let range_step = ov.range_step_wl.unwrap_or(self.grid.range_step_wl);
        let doa = GridAxis::new(self.grid.doa_start_deg, self.grid.doa_stop_deg, doa_step)?;
        let range = GridAxis::new(
            self.grid.range_start_wl,
            self.grid.range_stop_wl,
            range_step,
        )?;
        Ok(SearchGrid::new(doa, range)?)
    }

    /// Estimators to run: the --method flag wins, then the file list.
    pub fn methods(&self, ov: &Overrides) -> Result<Vec<Method>> {
        match ov.method.as_deref() {
            Some("all") => Ok(Method::ALL.to_vec()),
            Some(name) => Ok(vec![name.parse()?]),
            None => self
                .experiment
                .methods
                .iter()
                .map(|n| Ok(n.parse()?))
                .collect(),
        }
    }

    /// Effective SNR list: the --snr-db flag wins, then the file list.
    pub fn snr_list(&self, ov: &Overrides) -> Result<Vec<f64>> {
        let list = ov
            .snr_db
            .clone()
            .unwrap_or_else(|| self.experiment.snr_db.clone());
        if list.is_empty() {
            bail!("the SNR list is empty");
        }
        Ok(list)
    }

    /// Effective master seed, if any source supplies one.
    pub fn seed(&self, ov: &Overrides) -> Option<u64> {
        ov.seed.or(self.experiment.master_seed)
    }

    /// Effective master seed, required.
    pub fn required_seed(&self, ov: &Overrides) -> Result<u64> {
        self.seed(ov)
            .context("a seed is required: pass --seed or set [experiment] master_seed")
    }

    /// Assembles the full experiment for the sweep and timing commands.
    pub fn experiment(&self, ov: &Overrides) -> Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            array: self.array()?,
            doas_deg: self.truth.doas_deg.clone(),
            range_wl: self.truth.range_wl,
            snr_list_db: self.snr_list(ov)?,
            snapshots: self.experiment.snapshots,
            trials: ov.trials.unwrap_or(self.experiment.trials),
            grid: self.search_grid(ov)?,
            methods: self.methods(ov)?,
            refine_tol_deg: self.experiment.refine_tol_deg,
            refine_max_iter: self.experiment.refine_max_iter,
            master_seed: self.required_seed(ov)?,
        })
    }
}
