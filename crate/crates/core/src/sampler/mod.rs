//! Metropolis-within-Gibbs posterior sampling for the Strauss SCR model.
//!
//! The unknown population size is handled by data augmentation: `N`
//! individuals are carried, the first ones being the observed animals, and
//! `delta_i` marks membership of the population. Centers of non-members are
//! uniform over the domain and keep being updated so the state dimension
//! never changes.
//!
//! One iteration is a systematic scan:
//!
//! 1. `delta_i` for every individual (exact Bernoulli full conditional),
//! 2. `pi` (Beta), 3. `b` (discrete), 4. `a`, `log lambda`, `log rho`
//!    (Gaussian random-walk Metropolis),
//! 5. every center `s_i` (bivariate Gaussian random walk),
//! 6. with primary periods, the presence indicators and `pi2`.
//!
//! Step sizes adapt toward a 0.4 acceptance rate during burn-in only.

mod output;
mod state;
mod updates;

pub use output::{
    read_records_csv, summarize_records, summary_markdown, write_records_csv, AcceptanceRates, ChainOutput,
    ChainRecord, ParamSummary,
};
pub use state::{AugmentedState, PeriodState, Sampler};
pub use updates::Scalar;
pub(crate) use output::quantile_sorted;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, TrapArray};
use crate::likelihood::CaptureHistory;
use crate::norm_const::NormConstTable;
use crate::rng::derive_stream;

/// Target Metropolis acceptance rate during tuning.
pub const TARGET_ACCEPTANCE: f64 = 0.4;

const TUNE_BATCH: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Priors {
    pub a_pi: f64,
    pub b_pi: f64,
    /// Upper end of the uniform prior on `a`.
    pub a_max: f64,
    /// Support of the uniform prior on `b`.
    pub b_support: Vec<f64>,
    pub mu_log_lambda: f64,
    pub sd_log_lambda: f64,
    pub mu_log_rho: f64,
    pub sd_log_rho: f64,
    /// Augmentation bound `N`.
    pub n_max: usize,
}

impl Default for Priors {
    fn default() -> Self {
        Self {
            a_pi: 1.0,
            b_pi: 1.0,
            a_max: 3.0,
            b_support: (1..=10).map(f64::from).collect(),
            mu_log_lambda: 0.0,
            sd_log_lambda: 1.0,
            mu_log_rho: 2.0,
            sd_log_rho: 1.0,
            n_max: 200,
        }
    }
}

impl Priors {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.a_pi, self.b_pi, self.a_max, self.sd_log_lambda, self.sd_log_rho];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Config("prior hyperparameters must be positive".into()));
        }
        if !self.mu_log_lambda.is_finite() || !self.mu_log_rho.is_finite() {
            return Err(Error::Config("prior means must be finite".into()));
        }
        if self.b_support.is_empty() || self.b_support.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::Config("b support must be non-empty and positive".into()));
        }
        if self.n_max == 0 {
            return Err(Error::Config("augmentation bound N must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Strauss prior on the centers of population members.
    Strauss,
    /// Uniform independent centers (`a` frozen at 0).
    Independence,
}

impl std::str::FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strauss" => Ok(Model::Strauss),
            "independence" => Ok(Model::Independence),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::Strauss => "strauss",
            Model::Independence => "independence",
        })
    }
}

/// Random-walk proposal scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepSizes {
    pub a: f64,
    pub log_lambda: f64,
    pub log_rho: f64,
    /// Meters, per coordinate.
    pub location: f64,
}

impl Default for StepSizes {
    fn default() -> Self {
        Self {
            a: 0.3,
            log_lambda: 0.1,
            log_rho: 0.05,
            location: 2.0,
        }
    }
}

/// Starting values; `None` picks a default from the priors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialValues {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub lambda: Option<f64>,
    pub rho: Option<f64>,
    pub pi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainConfig {
    pub model: Model,
    /// Total iterations including burn-in.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Adapt step sizes during burn-in.
    pub tune: bool,
    pub steps: StepSizes,
    pub initial: InitialValues,
    /// Keep `lambda` and `rho` at their initial values.
    pub hold_detection: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            model: Model::Strauss,
            iterations: 50_000,
            burn_in: 10_000,
            thin: 1,
            seed: 1,
            tune: true,
            steps: StepSizes::default(),
            initial: InitialValues::default(),
            hold_detection: false,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::Config("thin must be >= 1".into()));
        }
        if self.burn_in > self.iterations {
            return Err(Error::Config("burn-in exceeds the number of iterations".into()));
        }
        let s = self.steps;
        if [s.a, s.log_lambda, s.log_rho, s.location].iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Config("step sizes must be positive".into()));
        }
        Ok(())
    }

    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }
}

/// Fits the model and returns the post-burn-in draws.
pub fn run_chain(
    data: &CaptureHistory,
    traps: &TrapArray,
    domain: &Domain,
    priors: &Priors,
    table: Option<&NormConstTable>,
    config: &ChainConfig,
) -> Result<ChainOutput> {
    config.validate()?;
    let mut rng = derive_stream(config.seed, &[0x636861696e]);
    let mut sampler = Sampler::new(data, traps, *domain, priors, config.model, table, &config.initial, &mut rng)?;
    let mut steps = config.steps;
    let mut records = Vec::with_capacity(config.retained());
    let mut batch = updates::AcceptanceCounter::default();
    let mut total = updates::AcceptanceCounter::default();
    let mut batches = 0usize;

    for iter in 0..config.iterations {
        let counts = sampler.sweep(&steps, config.hold_detection, &mut rng)?;
        if cfg!(debug_assertions) {
            sampler.check_invariants()?;
        }
        if iter < config.burn_in {
            batch.add(&counts);
            if config.tune && (iter + 1) % TUNE_BATCH == 0 {
                batches += 1;
                batch.adapt(&mut steps, batches);
                batch = Default::default();
            }
        } else {
            total.add(&counts);
            if (iter - config.burn_in).is_multiple_of(config.thin) {
                records.push(sampler.record(iter + 1));
            }
        }
    }

    Ok(ChainOutput {
        records,
        acceptance: total.rates(),
        final_steps: steps,
        model: config.model,
        seed: config.seed,
        n_observed: data.n_observed(),
        has_periods: data.periods().is_some(),
    })
}
