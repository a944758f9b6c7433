use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use plscox::cv::{default_eta_grid, DEFAULT_FOLDS, DEFAULT_MAX_COMPONENTS};
use plscox::metrics::{Criterion, Measure};
use plscox::models::Method;
use plscox::simulate::{Link, SimType};
use serde::{Deserialize, Serialize};

/// Declarative study description; every field has a desk-scale default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub replicates: usize,
    pub sim_types: Vec<SimType>,
    pub links: Vec<Link>,
    pub methods: Vec<Method>,
    pub criteria: Vec<Criterion>,
    pub measures: Vec<Measure>,
    pub max_components: usize,
    /// Thresholding grid for the sparse methods.
    pub etas: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    /// Worker threads; `None` uses all cores.
    pub jobs: Option<usize>,
    pub out: PathBuf,
    pub n: usize,
    pub p: usize,
    pub censor_target: f64,
    pub train_fraction: f64,
    /// Overrides the per-scheme default link strength.
    pub strength: Option<f64>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            replicates: 20,
            sim_types: SimType::ALL.to_vec(),
            links: Link::ALL.to_vec(),
            methods: vec![Method::Plsdr, Method::Splsdr, Method::PlsCox],
            criteria: vec![
                Criterion::Cvll,
                Criterion::Vhcvll,
                Criterion::IaucSh,
                Criterion::IaucUno,
                Criterion::IaucSurvRoc,
                Criterion::IbsW,
                Criterion::IssW,
            ],
            measures: Measure::ALL.to_vec(),
            max_components: DEFAULT_MAX_COMPONENTS,
            etas: default_eta_grid(),
            folds: DEFAULT_FOLDS,
            seed: 1,
            jobs: None,
            out: PathBuf::from("study-out"),
            n: 100,
            p: 200,
            censor_target: 0.4,
            train_fraction: 0.7,
            strength: None,
        }
    }
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).context("parsing study configuration")?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            bail!("replicates must be positive");
        }
        for (name, empty) in [
            ("sim_types", self.sim_types.is_empty()),
            ("links", self.links.is_empty()),
            ("methods", self.methods.is_empty()),
            ("criteria", self.criteria.is_empty()),
            ("measures", self.measures.is_empty()),
        ] {
            if empty {
                bail!("{name} must not be empty");
            }
        }
        if self.methods.iter().any(|m| m.is_sparse()) && self.etas.is_empty() {
            bail!("sparse methods need a nonempty eta grid");
        }
        if let Some(e) = self.etas.iter().find(|e| !(0.0..1.0).contains(*e)) {
            bail!("eta {e} outside [0, 1)");
        }
        if self.folds < 2 {
            bail!("at least two folds are needed");
        }
        let n_train = (self.train_fraction * self.n as f64).round() as usize;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) || n_train < self.folds || self.n < 10 {
            bail!("n = {} with train fraction {} cannot fill {} folds", self.n, self.train_fraction, self.folds);
        }
        if self.jobs == Some(0) {
            bail!("jobs must be positive");
        }
        for sim_type in &self.sim_types {
            self.sim_config(*sim_type, self.links[0], 0).validate()?;
        }
        Ok(())
    }

    pub fn sim_config(&self, sim_type: SimType, link: Link, seed: u64) -> plscox::simulate::SimConfig {
        plscox::simulate::SimConfig {
            sim_type,
            link,
            n: self.n,
            p: self.p,
            censor_target: self.censor_target,
            seed,
            strength: self.strength,
            ..Default::default()
        }
    }
}
