//! Trap encounter model.
//!
//! On each occasion an individual with center `s` and inclusion indicator
//! `delta` is caught in trap `j` with probability
//! `delta * lambda * w(||s - t_j||) / (1 + sum_l delta * lambda * w(||s - t_l||))`
//! and escapes capture (cell `J + 1`) with the remaining mass, where
//! `w(d) = exp(-d^2 / (2 rho^2))`.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_header, parse_field, Point, TrapArray};
use crate::strauss::PointPattern;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    /// Baseline capture rate.
    pub lambda: f64,
    /// Detection scale in meters.
    pub rho: f64,
}

impl DetectionParams {
    pub fn new(lambda: f64, rho: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite() && rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "detection parameters must be positive (lambda = {lambda}, rho = {rho})"
            )));
        }
        Ok(Self { lambda, rho })
    }
}

#[inline]
pub fn detection_kernel(d: f64, rho: f64) -> f64 {
    let z = d / rho;
    (-0.5 * z * z).exp()
}

/// Capture distribution over cells `1..=J+1` (index `j - 1` in the vector).
pub fn capture_probs(s: Point, delta: bool, params: DetectionParams, traps: &TrapArray) -> Vec<f64> {
    let j = traps.len();
    let mut probs = vec![0.0; j + 1];
    if !delta {
        probs[j] = 1.0;
        return probs;
    }
    let inv2 = 0.5 / (params.rho * params.rho);
    let mut total = 1.0;
    for (p, t) in probs.iter_mut().zip(traps.iter()) {
        *p = params.lambda * (-t.dist2(&s) * inv2).exp();
        total += *p;
    }
    probs[j] = 1.0;
    for p in probs.iter_mut() {
        *p /= total;
    }
    probs
}

/// `sum_k log P(Y_k = y_k)` for one individual; entries of `y` are 1-based
/// cells in `1..=J+1`.
pub fn log_likelihood_individual(
    y: &[u32],
    s: Point,
    delta: bool,
    params: DetectionParams,
    traps: &TrapArray,
) -> f64 {
    let probs = capture_probs(s, delta, params, traps);
    y.iter().map(|&cell| probs[cell as usize - 1].ln()).sum()
}

/// Assignment of occasions to primary periods.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodMap {
    /// 0-based period of each occasion.
    period_of: Vec<usize>,
    n_periods: usize,
}

impl PeriodMap {
    /// `period_of[k]` is the 0-based period of occasion `k`; every period
    /// must own at least one occasion.
    pub fn new(period_of: Vec<usize>) -> Result<Self> {
        let n_periods = period_of.iter().max().map_or(0, |m| m + 1);
        for t in 0..n_periods {
            if !period_of.contains(&t) {
                return Err(Error::InvalidArgument(format!("period {} has no occasions", t + 1)));
            }
        }
        Ok(Self { period_of, n_periods })
    }

    /// Consecutive blocks of the given sizes.
    pub fn from_block_sizes(sizes: &[usize]) -> Result<Self> {
        Self::new(
            sizes
                .iter()
                .enumerate()
                .flat_map(|(t, &s)| std::iter::repeat_n(t, s))
                .collect(),
        )
    }

    pub fn n_periods(&self) -> usize {
        self.n_periods
    }

    pub fn n_occasions(&self) -> usize {
        self.period_of.len()
    }

    pub fn period_of(&self, occasion: usize) -> usize {
        self.period_of[occasion]
    }

    pub fn occasions_in(&self, period: usize) -> usize {
        self.period_of.iter().filter(|&&t| t == period).count()
    }

    /// Reads `occasion,period` (both 1-based).
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        check_header(path, reader.headers()?, &["occasion", "period"])?;
        let mut map = BTreeMap::new();
        for (k, rec) in reader.records().enumerate() {
            let rec = rec?;
            let line = k as u64 + 2;
            let occ: usize = parse_field(path, line, &rec, 0)?;
            let per: usize = parse_field(path, line, &rec, 1)?;
            if occ == 0 || per == 0 || map.insert(occ, per - 1).is_some() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: "occasion and period are 1-based and occasions must be unique".into(),
                });
            }
        }
        let n = map.len();
        if map.keys().copied().ne(1..=n) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: "occasions must be 1..=K without gaps".into(),
            });
        }
        Self::new(map.into_values().collect())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["occasion", "period"])?;
        for (k, t) in self.period_of.iter().enumerate() {
            w.write_record(&[(k + 1).to_string(), (t + 1).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Encounter records of the individuals caught at least once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureHistory {
    n_traps: usize,
    n_occasions: usize,
    /// `records[i][k]` in `1..=J+1`.
    records: Vec<Vec<u32>>,
    periods: Option<PeriodMap>,
}

impl CaptureHistory {
    pub fn new(n_traps: usize, n_occasions: usize, records: Vec<Vec<u32>>) -> Result<Self> {
        if n_traps == 0 || n_occasions == 0 {
            return Err(Error::InvalidArgument("need J >= 1 traps and K >= 1 occasions".into()));
        }
        let miss = n_traps as u32 + 1;
        for (i, y) in records.iter().enumerate() {
            if y.len() != n_occasions {
                return Err(Error::InvalidArgument(format!(
                    "individual {} has {} occasions, expected {n_occasions}",
                    i + 1,
                    y.len()
                )));
            }
            if y.iter().any(|&c| c == 0 || c > miss) {
                return Err(Error::InvalidArgument(format!("individual {} has an invalid trap index", i + 1)));
            }
            if y.iter().all(|&c| c == miss) {
                return Err(Error::InvalidArgument(format!("individual {} was never captured", i + 1)));
            }
        }
        Ok(Self {
            n_traps,
            n_occasions,
            records,
            periods: None,
        })
    }

    pub fn with_periods(mut self, periods: PeriodMap) -> Result<Self> {
        if periods.n_occasions() != self.n_occasions {
            return Err(Error::InvalidArgument(format!(
                "period map covers {} occasions, data have {}",
                periods.n_occasions(),
                self.n_occasions
            )));
        }
        self.periods = Some(periods);
        Ok(self)
    }

    pub fn n_traps(&self) -> usize {
        self.n_traps
    }

    pub fn n_occasions(&self) -> usize {
        self.n_occasions
    }

    pub fn n_observed(&self) -> usize {
        self.records.len()
    }

    pub fn records(&self) -> &[Vec<u32>] {
        &self.records
    }

    pub fn periods(&self) -> Option<&PeriodMap> {
        self.periods.as_ref()
    }

    /// Writes `individual_id,occasion,trap_id` for every individual and
    /// occasion, with trap id 0 for no capture.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["individual_id", "occasion", "trap_id"])?;
        let miss = self.n_traps as u32 + 1;
        for (i, y) in self.records.iter().enumerate() {
            for (k, &c) in y.iter().enumerate() {
                let trap = if c == miss { 0 } else { c };
                w.write_record(&[(i + 1).to_string(), (k + 1).to_string(), trap.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `individual_id,occasion,trap_id`. `K` is the largest occasion
    /// seen; absent `(individual, occasion)` rows count as no capture.
    pub fn read_csv(path: &Path, n_traps: usize) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        check_header(path, reader.headers()?, &["individual_id", "occasion", "trap_id"])?;
        let mut order: Vec<String> = Vec::new();
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        let mut entries: Vec<(usize, usize, u32, u64)> = Vec::new();
        let mut k_max = 0;
        for (row, rec) in reader.records().enumerate() {
            let rec = rec?;
            let line = row as u64 + 2;
            let id = rec
                .get(0)
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: "missing individual_id".into(),
                })?;
            let occ: usize = parse_field(path, line, &rec, 1)?;
            let trap: u32 = parse_field(path, line, &rec, 2)?;
            if occ == 0 || trap as usize > n_traps {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("occasion must be >= 1 and trap_id in 0..={n_traps}"),
                });
            }
            let i = *index.entry(id.clone()).or_insert_with(|| {
                order.push(id);
                order.len() - 1
            });
            k_max = k_max.max(occ);
            entries.push((i, occ - 1, trap, line));
        }
        let miss = n_traps as u32 + 1;
        let mut records = vec![vec![miss; k_max]; order.len()];
        let mut seen = vec![vec![false; k_max]; order.len()];
        for (i, k, trap, line) in entries {
            if std::mem::replace(&mut seen[i][k], true) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("duplicate record for individual `{}` occasion {}", order[i], k + 1),
                });
            }
            records[i][k] = if trap == 0 { miss } else { trap };
        }
        Self::new(n_traps, k_max.max(1), records).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })
    }
}

/// Simulated encounter data plus the indices (into the simulated
/// population) of the individuals that appear in it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCaptures {
    pub history: CaptureHistory,
    pub observed: Vec<usize>,
}

fn simulate_with<R, F>(
    locations: &PointPattern,
    present: F,
    params: DetectionParams,
    traps: &TrapArray,
    n_occasions: usize,
    rng: &mut R,
) -> Result<SimulatedCaptures>
where
    R: Rng + ?Sized,
    F: Fn(usize, usize) -> bool,
{
    if n_occasions == 0 {
        return Err(Error::InvalidArgument("need K >= 1 occasions".into()));
    }
    let miss = traps.len() as u32 + 1;
    let mut records = Vec::new();
    let mut observed = Vec::new();
    for (i, s) in locations.points.iter().enumerate() {
        let probs = capture_probs(*s, true, params, traps);
        let mut y = vec![miss; n_occasions];
        for (k, cell) in y.iter_mut().enumerate() {
            if !present(i, k) {
                continue;
            }
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (j, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    *cell = j as u32 + 1;
                    break;
                }
            }
        }
        if y.iter().any(|&c| c != miss) {
            records.push(y);
            observed.push(i);
        }
    }
    let history = CaptureHistory {
        n_traps: traps.len(),
        n_occasions,
        records,
        periods: None,
    };
    Ok(SimulatedCaptures { history, observed })
}

/// Draws `K` occasions for every individual; those with `deltas[i] = false`
/// are never caught.
pub fn simulate_captures<R: Rng + ?Sized>(
    locations: &PointPattern,
    deltas: &[bool],
    params: DetectionParams,
    traps: &TrapArray,
    n_occasions: usize,
    rng: &mut R,
) -> Result<SimulatedCaptures> {
    if deltas.len() != locations.len() {
        return Err(Error::InvalidArgument("locations and deltas differ in length".into()));
    }
    simulate_with(locations, |i, _| deltas[i], params, traps, n_occasions, rng)
}

/// Multi-period variant: individual `i` can be caught on occasion `k` only if
/// `deltas[i]` and `presence[i][period(k)]`.
pub fn simulate_captures_by_period<R: Rng + ?Sized>(
    locations: &PointPattern,
    deltas: &[bool],
    presence: &[Vec<bool>],
    periods: &PeriodMap,
    params: DetectionParams,
    traps: &TrapArray,
    rng: &mut R,
) -> Result<SimulatedCaptures> {
    if deltas.len() != locations.len() || presence.len() != locations.len() {
        return Err(Error::InvalidArgument("locations, deltas and presence differ in length".into()));
    }
    if presence.iter().any(|p| p.len() != periods.n_periods()) {
        return Err(Error::InvalidArgument("presence rows must have one entry per period".into()));
    }
    let mut sim = simulate_with(
        locations,
        |i, k| deltas[i] && presence[i][periods.period_of(k)],
        params,
        traps,
        periods.n_occasions(),
        rng,
    )?;
    sim.history.periods = Some(periods.clone());
    Ok(sim)
}
