//! Simulation study: replicate datasets from the Strauss SCR model, fit the
//! Strauss and independence models to each, and score the estimates of `n`.

mod metrics;
mod wilcoxon;

pub use metrics::{compute_metrics, IntervalEstimate, McValue, SimMetrics};
pub use wilcoxon::{wilcoxon_signed_rank, EXACT_LIMIT};

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point, TrapArray};
use crate::likelihood::{simulate_captures, simulate_captures_by_period, CaptureHistory, DetectionParams, PeriodMap};
use crate::norm_const::NormConstTable;
use crate::rng::{derive_seed, derive_stream};
use crate::sampler::{run_chain, ChainConfig, ChainOutput, Model, Priors};
use crate::strauss::{sample_fixed_n, PointPattern, StraussParams, DEFAULT_BURN_IN};

const DATA_TAG: u64 = 0xda7a;
const STRAUSS_TAG: u64 = 1;
const INDEPENDENCE_TAG: u64 = 2;

/// Primary-period structure of simulated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodDesign {
    /// Occasions in each primary period.
    pub block_sizes: Vec<usize>,
    /// Probability that a member is present in a given period.
    pub pi2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimDesign {
    pub a_true: f64,
    pub b_true: f64,
    pub n_true: usize,
    /// Augmentation bound used for the simulated population and the fits.
    pub n_max: usize,
    pub lambda: f64,
    pub rho: f64,
    pub trap_rows: usize,
    pub trap_cols: usize,
    pub trap_spacing: f64,
    pub buffer: f64,
    pub occasions: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Sweeps of the fixed-n Strauss sampler per simulated population.
    pub strauss_burn_in: usize,
    pub periods: Option<PeriodDesign>,
}

impl Default for SimDesign {
    fn default() -> Self {
        Self {
            a_true: 2.0,
            b_true: 5.0,
            n_true: 150,
            n_max: 200,
            lambda: 0.3,
            rho: 5.0,
            trap_rows: 12,
            trap_cols: 16,
            trap_spacing: 7.0,
            buffer: 15.0,
            occasions: 17,
            replicates: 20,
            seed: 1,
            strauss_burn_in: DEFAULT_BURN_IN,
            periods: None,
        }
    }
}

impl SimDesign {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.b_true, self.lambda, self.rho, self.trap_spacing];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Config("b, lambda, rho and trap spacing must be positive".into()));
        }
        if !(self.a_true >= 0.0) || !self.a_true.is_finite() || !(self.buffer >= 0.0) {
            return Err(Error::Config("a_true and buffer must be non-negative".into()));
        }
        if self.n_true == 0 || self.n_true > self.n_max {
            return Err(Error::Config(format!(
                "need 1 <= n_true <= N (got n_true = {}, N = {})",
                self.n_true, self.n_max
            )));
        }
        if self.trap_rows == 0 || self.trap_cols == 0 || self.replicates == 0 {
            return Err(Error::Config("trap grid and replicate count must be positive".into()));
        }
        match &self.periods {
            Some(p) => {
                if p.block_sizes.is_empty() || p.block_sizes.contains(&0) {
                    return Err(Error::Config("period blocks must be non-empty".into()));
                }
                if !(p.pi2 > 0.0 && p.pi2 <= 1.0) {
                    return Err(Error::Config("pi2 must lie in (0, 1]".into()));
                }
            }
            None if self.occasions == 0 => return Err(Error::Config("need at least one occasion".into())),
            None => {}
        }
        Ok(())
    }

    pub fn traps(&self) -> Result<TrapArray> {
        TrapArray::grid(self.trap_rows, self.trap_cols, self.trap_spacing, Point::new(0.0, 0.0))
    }

    pub fn domain(&self) -> Result<Domain> {
        Domain::around_traps(&self.traps()?, self.buffer)
    }

    pub fn detection(&self) -> Result<DetectionParams> {
        DetectionParams::new(self.lambda, self.rho)
    }
}

/// Latent values behind one simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub n_true: usize,
    /// All `N` centers; the first `n_true` are population members.
    pub locations: Vec<Point>,
    pub delta: Vec<bool>,
    /// `presence[i][t]` when the design has primary periods.
    pub presence: Option<Vec<Vec<bool>>>,
    /// Index into `locations` of each row of the capture history.
    pub observed: Vec<usize>,
}

/// Simulates the dataset of one replicate. The stream depends only on the
/// design seed and the replicate index.
pub fn generate_dataset(design: &SimDesign, replicate: usize) -> Result<(CaptureHistory, TruthRecord)> {
    design.validate()?;
    let traps = design.traps()?;
    let domain = design.domain()?;
    let params = design.detection()?;
    let mut rng = derive_stream(design.seed, &[replicate as u64, DATA_TAG]);

    let strauss = StraussParams::new(design.a_true, design.b_true)?;
    let members = sample_fixed_n(design.n_true, strauss, &domain, design.strauss_burn_in, None, &mut rng)?;
    let mut locations = members.points;
    while locations.len() < design.n_max {
        locations.push(domain.uniform_sample(&mut rng));
    }
    let delta: Vec<bool> = (0..design.n_max).map(|i| i < design.n_true).collect();
    let pattern = PointPattern::new(locations);

    let (sim, presence) = match &design.periods {
        Some(p) => {
            let map = PeriodMap::from_block_sizes(&p.block_sizes)?;
            let presence: Vec<Vec<bool>> = delta
                .iter()
                .map(|&d| (0..map.n_periods()).map(|_| d && rng.random_bool(p.pi2)).collect())
                .collect();
            let sim = simulate_captures_by_period(&pattern, &delta, &presence, &map, params, &traps, &mut rng)?;
            (sim, Some(presence))
        }
        None => (
            simulate_captures(&pattern, &delta, params, &traps, design.occasions, &mut rng)?,
            None,
        ),
    };
    let truth = TruthRecord {
        n_true: design.n_true,
        locations: pattern.points,
        delta,
        presence,
        observed: sim.observed,
    };
    Ok((sim.history, truth))
}

/// Chain settings for the two models; seeds are replaced per replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyFitConfig {
    pub priors: Priors,
    pub chain: ChainConfig,
}

impl StudyFitConfig {
    /// 10,000 iterations with 2,000 burn-in.
    pub fn desk(n_max: usize) -> Self {
        Self::with_length(n_max, 10_000, 2_000)
    }

    /// 50,000 iterations with 10,000 burn-in.
    pub fn paper(n_max: usize) -> Self {
        Self::with_length(n_max, 50_000, 10_000)
    }

    pub fn with_length(n_max: usize, iterations: usize, burn_in: usize) -> Self {
        Self {
            priors: Priors { n_max, ..Priors::default() },
            chain: ChainConfig { iterations, burn_in, ..ChainConfig::default() },
        }
    }

    fn chain_for(&self, model: Model, seed: u64) -> ChainConfig {
        ChainConfig { model, seed, ..self.chain.clone() }
    }
}

/// Summary of one model fit to one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    /// Posterior median of `n` with the 5% and 95% quantiles.
    pub estimate: IntervalEstimate,
    pub posterior_mean_n: f64,
    pub posterior_mean_a: f64,
}

impl ModelFit {
    pub fn from_chain(chain: &ChainOutput) -> Result<Self> {
        if chain.records.is_empty() {
            return Err(Error::Numeric("chain retained no draws".into()));
        }
        let mut n = chain.n_draws();
        let m = n.len() as f64;
        let posterior_mean_n = n.iter().sum::<f64>() / m;
        let posterior_mean_a = chain.records.iter().map(|r| r.a).sum::<f64>() / m;
        n.sort_by(f64::total_cmp);
        let q = |p| crate::sampler::quantile_sorted(&n, p);
        Ok(Self {
            estimate: IntervalEstimate { point: q(0.5), lower: q(0.05), upper: q(0.95) },
            posterior_mean_n,
            posterior_mean_a,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub n_observed: usize,
    pub strauss: ModelFit,
    pub independence: ModelFit,
    /// Posterior mean of `pi2` under the Strauss fit, with periods.
    pub strauss_pi2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub design: SimDesign,
    pub replicates: Vec<ReplicateResult>,
    /// Replicates that failed, with the error message.
    pub failures: Vec<(usize, String)>,
    pub strauss: SimMetrics,
    pub independence: SimMetrics,
}

/// Runs one replicate: simulate, then fit both models.
pub fn run_replicate(
    design: &SimDesign,
    fit: &StudyFitConfig,
    table: &NormConstTable,
    replicate: usize,
) -> Result<ReplicateResult> {
    let (data, _) = generate_dataset(design, replicate)?;
    let traps = design.traps()?;
    let domain = design.domain()?;
    let seed = |tag| derive_seed(design.seed, &[replicate as u64, tag]);
    let strauss = run_chain(
        &data,
        &traps,
        &domain,
        &fit.priors,
        Some(table),
        &fit.chain_for(Model::Strauss, seed(STRAUSS_TAG)),
    )?;
    let independence = run_chain(
        &data,
        &traps,
        &domain,
        &fit.priors,
        None,
        &fit.chain_for(Model::Independence, seed(INDEPENDENCE_TAG)),
    )?;
    let strauss_pi2 = design.periods.as_ref().map(|_| {
        strauss.records.iter().filter_map(|r| r.pi2).sum::<f64>() / strauss.records.len().max(1) as f64
    });
    Ok(ReplicateResult {
        replicate,
        n_observed: data.n_observed(),
        strauss: ModelFit::from_chain(&strauss)?,
        independence: ModelFit::from_chain(&independence)?,
        strauss_pi2,
    })
}

/// Runs every replicate of `design` (in parallel) and aggregates.
/// Failed replicates are logged and excluded; the study fails only if none
/// succeeds.
pub fn run_study(design: &SimDesign, fit: &StudyFitConfig, table: &NormConstTable) -> Result<StudyResult> {
    design.validate()?;
    fit.priors.validate()?;
    fit.chain.validate()?;
    if fit.priors.n_max != design.n_max {
        return Err(Error::Config(format!(
            "fit uses N = {} but the design simulates N = {}",
            fit.priors.n_max, design.n_max
        )));
    }
    table.check_covers(design.n_max, design.n_max)?;
    let area = design.domain()?.area();
    if (table.domain_area() - area).abs() > 1e-9 * area {
        return Err(Error::Config(format!(
            "table was built for a domain of area {} but the design uses {area}",
            table.domain_area()
        )));
    }

    let outcomes: Vec<(usize, Result<ReplicateResult>)> = (0..design.replicates)
        .into_par_iter()
        .map(|r| {
            let out = run_replicate(design, fit, table, r);
            log::info!("a = {} replicate {} done", design.a_true, r);
            (r, out)
        })
        .collect();

    let mut replicates = Vec::new();
    let mut failures = Vec::new();
    for (r, out) in outcomes {
        match out {
            Ok(res) => replicates.push(res),
            Err(e) => {
                log::warn!("replicate {r} failed: {e}");
                failures.push((r, e.to_string()));
            }
        }
    }
    if replicates.is_empty() {
        return Err(Error::Numeric(format!("all {} replicates failed", design.replicates)));
    }
    let truth = design.n_true as f64;
    let est = |f: fn(&ReplicateResult) -> IntervalEstimate| replicates.iter().map(f).collect::<Vec<_>>();
    let mut strauss = compute_metrics(&est(|r| r.strauss.estimate), truth)?;
    let mut independence = compute_metrics(&est(|r| r.independence.estimate), truth)?;
    if replicates.len() >= 5 {
        let sq = |f: fn(&ReplicateResult) -> f64| replicates.iter().map(f).collect::<Vec<_>>();
        let se_s = sq(|r| r.strauss.estimate.point);
        let se_i = sq(|r| r.independence.estimate.point);
        let e2 = |v: &[f64]| v.iter().map(|x| (x - truth).powi(2)).collect::<Vec<_>>();
        let p = wilcoxon_signed_rank(&e2(&se_s), &e2(&se_i))?;
        strauss.wilcoxon_p = Some(p);
        independence.wilcoxon_p = Some(p);
    }
    Ok(StudyResult {
        design: design.clone(),
        replicates,
        failures,
        strauss,
        independence,
    })
}

fn fmt_mc(v: McValue, digits: usize) -> String {
    format!("{:.*} ({:.*})", digits, v.value, digits, v.se)
}

/// Markdown table with one row per (model, a) and Monte Carlo standard
/// errors in parentheses.
pub fn report_markdown(results: &[StudyResult]) -> String {
    let mut s = String::new();
    writeln!(s, "| Model | a | MSE | BIAS | Width90 | Cover90 |").unwrap();
    writeln!(s, "|---|---|---|---|---|---|").unwrap();
    for (name, pick) in [("Strauss", true), ("Independence", false)] {
        for r in results {
            let m = if pick { &r.strauss } else { &r.independence };
            writeln!(
                s,
                "| {name} | {} | {} | {} | {} | {} |",
                r.design.a_true,
                fmt_mc(m.mse, 2),
                fmt_mc(m.bias, 2),
                fmt_mc(m.width90, 2),
                fmt_mc(m.cover90, 2),
            )
            .unwrap();
        }
    }
    writeln!(s).unwrap();
    for r in results {
        let p = r.strauss.wilcoxon_p.map_or("n/a (fewer than 5 replicates)".to_string(), |p| format!("{p:.3e}"));
        writeln!(
            s,
            "a = {}: {} replicates used, {} failed; paired Wilcoxon p = {p}",
            r.design.a_true,
            r.replicates.len(),
            r.failures.len()
        )
        .unwrap();
    }
    s
}

/// Aggregate metrics as CSV, one row per (model, a).
pub fn write_report_csv(results: &[StudyResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "model", "a_true", "replicates", "failures", "mse", "mse_se", "bias", "bias_se", "width90", "width90_se",
        "cover90", "cover90_se", "wilcoxon_p",
    ])?;
    for (name, pick) in [("strauss", true), ("independence", false)] {
        for r in results {
            let m = if pick { &r.strauss } else { &r.independence };
            let mut row = vec![
                name.to_string(),
                r.design.a_true.to_string(),
                m.replicates.to_string(),
                r.failures.len().to_string(),
            ];
            for v in [m.mse, m.bias, m.width90, m.cover90] {
                row.push(v.value.to_string());
                row.push(v.se.to_string());
            }
            row.push(m.wilcoxon_p.map_or(String::new(), |p| p.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-replicate estimates, squared errors and posterior means of `a`.
pub fn write_replicates_csv(results: &[StudyResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "a_true", "replicate", "model", "n_true", "n_observed", "median", "lower90", "upper90", "squared_error",
        "posterior_mean_n", "posterior_mean_a",
    ])?;
    for r in results {
        let truth = r.design.n_true as f64;
        for rep in &r.replicates {
            for (name, fit) in [("strauss", &rep.strauss), ("independence", &rep.independence)] {
                w.write_record([
                    r.design.a_true.to_string(),
                    rep.replicate.to_string(),
                    name.to_string(),
                    r.design.n_true.to_string(),
                    rep.n_observed.to_string(),
                    fit.estimate.point.to_string(),
                    fit.estimate.lower.to_string(),
                    fit.estimate.upper.to_string(),
                    (fit.estimate.point - truth).powi(2).to_string(),
                    fit.posterior_mean_n.to_string(),
                    fit.posterior_mean_a.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
