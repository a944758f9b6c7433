//! Expression-data generators with exponential survival and censoring.

mod expression;
mod split;
mod survival;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};

pub use expression::{gen_expression, noise_scale, target_correlation, Expression};
pub use split::{train_test_split, Split};
pub use survival::{calibrate_censoring, gen_survival, link_predictor, SurvivalDraw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimType {
    Eigengene,
    Cluster,
    Factorial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    None,
    Linear,
    Quadratic,
}

impl SimType {
    pub const ALL: [SimType; 3] = [SimType::Eigengene, SimType::Cluster, SimType::Factorial];

    pub fn name(self) -> &'static str {
        match self {
            SimType::Eigengene => "eigengene",
            SimType::Cluster => "cluster",
            SimType::Factorial => "factorial",
        }
    }
}

impl Link {
    pub const ALL: [Link; 3] = [Link::None, Link::Linear, Link::Quadratic];

    pub fn name(self) -> &'static str {
        match self {
            Link::None => "none",
            Link::Linear => "linear",
            Link::Quadratic => "quadratic",
        }
    }
}

macro_rules! display_and_parse {
    ($t:ty, $what:literal) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $t {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                Self::ALL
                    .into_iter()
                    .find(|v| v.name().eq_ignore_ascii_case(s))
                    .ok_or_else(|| Error::InvalidInput(format!("unknown {} '{}'", $what, s)))
            }
        }
    };
}

display_and_parse!(SimType, "simulation type");
display_and_parse!(Link, "link");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EigengeneParams {
    pub modules: usize,
    pub module_size: usize,
    pub r_min: f64,
}

impl Default for EigengeneParams {
    fn default() -> Self {
        Self { modules: 4, module_size: 25, r_min: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FactorialParams {
    pub groups: usize,
    pub group_size: usize,
    pub correlation: f64,
}

impl Default for FactorialParams {
    fn default() -> Self {
        Self { groups: 4, group_size: 25, correlation: 0.7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub sim_type: SimType,
    pub link: Link,
    pub n: usize,
    pub p: usize,
    pub censor_target: f64,
    pub seed: u64,
    /// Genes driving survival: the first `relevant` columns.
    pub relevant: usize,
    pub eigengene: EigengeneParams,
    pub factorial: FactorialParams,
    /// Link strength; `None` picks [`default_strength`].
    pub strength: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sim_type: SimType::Eigengene,
            link: Link::Linear,
            n: 100,
            p: 1000,
            censor_target: 0.4,
            seed: 0,
            relevant: 50,
            eigengene: EigengeneParams::default(),
            factorial: FactorialParams::default(),
            strength: None,
        }
    }
}

/// Link strengths giving the true predictor a Harrell C of about 0.75 at
/// the default sizes and 40% censoring.
pub fn default_strength(sim_type: SimType, link: Link) -> f64 {
    match (sim_type, link) {
        (_, Link::None) => 0.0,
        (SimType::Eigengene, Link::Linear) => EIGENGENE_LINEAR,
        (SimType::Eigengene, Link::Quadratic) => EIGENGENE_QUADRATIC,
        (SimType::Cluster, Link::Linear) => CLUSTER_LINEAR,
        (SimType::Cluster, Link::Quadratic) => CLUSTER_QUADRATIC,
        (SimType::Factorial, Link::Linear) => FACTORIAL_LINEAR,
        (SimType::Factorial, Link::Quadratic) => FACTORIAL_QUADRATIC,
    }
}

const EIGENGENE_LINEAR: f64 = 0.03;
const EIGENGENE_QUADRATIC: f64 = 0.021;
const CLUSTER_LINEAR: f64 = 0.04;
const CLUSTER_QUADRATIC: f64 = 0.0055;
const FACTORIAL_LINEAR: f64 = 0.035;
const FACTORIAL_QUADRATIC: f64 = 0.033;

impl SimConfig {
    pub fn new(sim_type: SimType, link: Link) -> Self {
        Self { sim_type, link, ..Self::default() }
    }

    pub fn strength(&self) -> f64 {
        self.strength.unwrap_or_else(|| default_strength(self.sim_type, self.link))
    }

    /// Columns taken by the structured block.
    pub fn structured(&self) -> usize {
        match self.sim_type {
            SimType::Eigengene => self.eigengene.modules * self.eigengene.module_size,
            SimType::Cluster => self.relevant,
            SimType::Factorial => self.factorial.groups * self.factorial.group_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.censor_target > 0.0 && self.censor_target < 1.0) {
            return bad(format!("censor_target {} must lie in (0, 1)", self.censor_target));
        }
        if self.n < 2 {
            return bad(format!("n = {} is too small", self.n));
        }
        if self.structured() > self.p || self.relevant > self.p {
            return bad(format!(
                "structured genes {} and relevant genes {} must fit in p = {}",
                self.structured(),
                self.relevant,
                self.p
            ));
        }
        let e = &self.eigengene;
        if !(e.r_min > 0.0 && e.r_min <= 1.0) || e.module_size == 0 {
            return bad(format!("eigengene r_min {} or module size {} invalid", e.r_min, e.module_size));
        }
        let f = &self.factorial;
        if !(0.0..1.0).contains(&f.correlation) || f.group_size == 0 {
            return bad(format!("factorial correlation {} or group size {} invalid", f.correlation, f.group_size));
        }
        if !self.strength().is_finite() {
            return bad("link strength must be finite".into());
        }
        Ok(())
    }
}

/// Independent stream for one replicate of a study.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub relevant: Vec<usize>,
    pub true_lp: Vec<f64>,
    /// Module, cluster or factor group of each gene; `None` for noise.
    pub labels: Vec<Option<usize>>,
    pub strength: f64,
    pub censoring_rate: f64,
    pub realized_censoring: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDataset {
    pub config: SimConfig,
    pub data: SurvivalDataset,
    pub truth: GroundTruth,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    config: SimConfig,
    replicate: Option<u64>,
    truth: GroundTruth,
}

impl SimulatedDataset {
    /// Writes `path` (CSV) and `path.json` (configuration and ground truth).
    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_csv(&self.data, path)?;
        let sidecar = Sidecar { config: self.config.clone(), replicate: None, truth: self.truth.clone() };
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let data = crate::io::read_csv(path)?;
        let sidecar: Sidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
        Ok(Self { config: sidecar.config, data, truth: sidecar.truth })
    }
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

/// Simulates one dataset from `config.seed`.
pub fn simulate(config: &SimConfig) -> Result<SimulatedDataset> {
    simulate_with(config, &mut ChaCha8Rng::seed_from_u64(config.seed))
}

/// Simulates one dataset from the given stream (see [`replicate_rng`]).
pub fn simulate_with(config: &SimConfig, rng: &mut ChaCha8Rng) -> Result<SimulatedDataset> {
    config.validate()?;
    let Expression { x, labels, .. } = gen_expression(config, rng)?;
    let relevant: Vec<usize> = (0..config.relevant).collect();
    let strength = config.strength();
    let draw = gen_survival(&x, &relevant, config.link, strength, config.censor_target, rng)?;
    let realized = draw.status.iter().filter(|&&e| !e).count() as f64 / config.n as f64;
    let data = SurvivalDataset::new(draw.times, draw.status, x)?;
    let truth = GroundTruth {
        relevant,
        true_lp: draw.lp,
        labels,
        strength,
        censoring_rate: draw.censoring_rate,
        realized_censoring: realized,
    };
    Ok(SimulatedDataset { config: config.clone(), data, truth })
}

pub(crate) fn standard_normal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub(crate) fn noise_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
    let v = standard_normal(rng, n * p);
    Array2::from_shape_vec((n, p), v).expect("shape matches length")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in SimType::ALL {
            assert_eq!(s.name().parse::<SimType>().unwrap(), s);
        }
        for l in Link::ALL {
            assert_eq!(l.to_string().parse::<Link>().unwrap(), l);
        }
        assert!("cubic".parse::<Link>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::default().validate().is_ok());
        let mut c = SimConfig { censor_target: 1.0, ..SimConfig::default() };
        assert!(c.validate().is_err());
        c.censor_target = 0.4;
        c.p = 80;
        assert!(c.validate().is_err());
        c.sim_type = SimType::Cluster;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn same_seed_same_dataset() {
        let c = SimConfig { p: 120, seed: 7, ..SimConfig::default() };
        let a = simulate(&c).unwrap();
        let b = simulate(&c).unwrap();
        assert_eq!(a, b);
        let other = simulate(&SimConfig { seed: 8, ..c }).unwrap();
        assert_ne!(a.data.times(), other.data.times());
    }

    #[test]
    fn replicate_streams_differ() {
        use rand::Rng;
        let a: u64 = replicate_rng(1, 0).random();
        let b: u64 = replicate_rng(1, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, replicate_rng(1, 0).random::<u64>());
    }

    #[test]
    fn zero_strength_matches_no_link() {
        for link in [Link::Linear, Link::Quadratic] {
            let base = SimConfig { p: 120, link: Link::None, seed: 3, ..SimConfig::default() };
            let a = simulate(&base).unwrap();
            let b = simulate(&SimConfig { link, strength: Some(0.0), ..base }).unwrap();
            assert_eq!(a.data, b.data);
        }
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sim.csv");
        let sim = simulate(&SimConfig { n: 20, p: 60, sim_type: SimType::Cluster, ..SimConfig::default() }).unwrap();
        sim.save(&path).unwrap();
        let back = SimulatedDataset::load(&path).unwrap();
        assert_eq!(back, sim);
    }
}
