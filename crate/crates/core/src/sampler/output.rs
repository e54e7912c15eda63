use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, StepSizes};
use crate::error::{Error, Result};
use crate::geometry::{check_header, parse_field};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub iteration: usize,
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub rho: f64,
    pub pi: f64,
    pub pi2: Option<f64>,
}

/// Post-burn-in acceptance rates; `None` for parameters never proposed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRates {
    pub a: Option<f64>,
    pub log_lambda: Option<f64>,
    pub log_rho: Option<f64>,
    pub location: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub records: Vec<ChainRecord>,
    pub acceptance: AcceptanceRates,
    pub final_steps: StepSizes,
    pub model: Model,
    pub seed: u64,
    pub n_observed: usize,
    pub has_periods: bool,
}

/// Posterior summary of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub label: String,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl ParamSummary {
    pub fn from_values(name: &str, label: &str, values: &[f64]) -> Self {
        let m = values.len() as f64;
        let mean = values.iter().sum::<f64>() / m;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            name: name.to_string(),
            label: label.to_string(),
            mean,
            sd,
            median: quantile_sorted(&sorted, 0.5),
            q05: quantile_sorted(&sorted, 0.05),
            q95: quantile_sorted(&sorted, 0.95),
        }
    }
}

const COLUMNS: [&str; 7] = ["iteration", "n", "a", "b", "lambda", "rho", "pi"];

impl ChainOutput {
    pub fn n_draws(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.n as f64).collect()
    }

    /// Concatenates chains that share a model.
    pub fn merge(outputs: &[ChainOutput]) -> Result<ChainOutput> {
        let first = outputs
            .first()
            .ok_or_else(|| Error::InvalidArgument("nothing to merge".into()))?;
        if outputs.iter().any(|o| o.model != first.model || o.has_periods != first.has_periods) {
            return Err(Error::InvalidArgument("cannot merge chains of different models".into()));
        }
        let mut merged = first.clone();
        merged.records = outputs.iter().flat_map(|o| o.records.iter().copied()).collect();
        Ok(merged)
    }

    pub fn summary(&self) -> Vec<ParamSummary> {
        summarize_records(&self.records, self.model, self.has_periods)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_records_csv(&self.records, self.has_periods, path)
    }
}

/// Table of posterior summaries; the independence model omits `a` and `b`.
pub fn summarize_records(records: &[ChainRecord], model: Model, has_periods: bool) -> Vec<ParamSummary> {
    if records.is_empty() {
        return Vec::new();
    }
    let col = |f: fn(&ChainRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
    let mut out = vec![
        ParamSummary::from_values("n", "Population size, n", &col(|r| r.n as f64)),
        ParamSummary::from_values("rho", "Scale parameter, rho", &col(|r| r.rho)),
        ParamSummary::from_values("lambda", "Baseline detection, lambda", &col(|r| r.lambda)),
    ];
    if model == Model::Strauss {
        out.push(ParamSummary::from_values("b", "Interaction range, b", &col(|r| r.b)));
        out.push(ParamSummary::from_values("a", "Interaction strength, a", &col(|r| r.a)));
    }
    if has_periods {
        out.push(ParamSummary::from_values("pi1", "Inclusion probability, pi1", &col(|r| r.pi)));
        out.push(ParamSummary::from_values(
            "pi2",
            "Inclusion probability, pi2",
            &col(|r| r.pi2.unwrap_or(f64::NAN)),
        ));
    } else {
        out.push(ParamSummary::from_values("pi", "Inclusion probability, pi", &col(|r| r.pi)));
    }
    out
}

/// Markdown table: posterior mean (SD), median and central 90% interval.
pub fn summary_markdown(summary: &[ParamSummary]) -> String {
    let mut s = String::new();
    writeln!(s, "| Parameter | Posterior mean (SD) | Median | 90% interval |").unwrap();
    writeln!(s, "|---|---|---|---|").unwrap();
    for p in summary {
        writeln!(
            s,
            "| {} | {:.3} ({:.3}) | {:.3} | ({:.3}, {:.3}) |",
            p.label, p.mean, p.sd, p.median, p.q05, p.q95
        )
        .unwrap();
    }
    s
}

pub fn write_records_csv(records: &[ChainRecord], has_periods: bool, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = COLUMNS.to_vec();
    if has_periods {
        header.push("pi2");
    }
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.iteration.to_string(),
            r.n.to_string(),
            r.a.to_string(),
            r.b.to_string(),
            r.lambda.to_string(),
            r.rho.to_string(),
            r.pi.to_string(),
        ];
        if has_periods {
            row.push(r.pi2.unwrap_or(f64::NAN).to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a chain CSV; returns the records and whether a `pi2` column exists.
pub fn read_records_csv(path: &Path) -> Result<(Vec<ChainRecord>, bool)> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let has_periods = headers.len() == COLUMNS.len() + 1;
    let mut expected: Vec<&str> = COLUMNS.to_vec();
    if has_periods {
        expected.push("pi2");
    }
    check_header(path, &headers, &expected)?;
    let mut records = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = k as u64 + 2;
        records.push(ChainRecord {
            iteration: parse_field(path, line, &rec, 0)?,
            n: parse_field(path, line, &rec, 1)?,
            a: parse_field(path, line, &rec, 2)?,
            b: parse_field(path, line, &rec, 3)?,
            lambda: parse_field(path, line, &rec, 4)?,
            rho: parse_field(path, line, &rec, 5)?,
            pi: parse_field(path, line, &rec, 6)?,
            pi2: if has_periods { Some(parse_field(path, line, &rec, 7)?) } else { None },
        });
    }
    Ok((records, has_periods))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_and_summary() {
        let v: Vec<f64> = (1..=101).map(f64::from).collect();
        let s = ParamSummary::from_values("x", "x", &v);
        assert_eq!(s.median, 51.0);
        assert_eq!(s.q05, 6.0);
        assert_eq!(s.q95, 96.0);
        assert_eq!(s.mean, 51.0);
    }

    #[test]
    fn csv_round_trip() {
        let recs = vec![
            ChainRecord { iteration: 1, n: 150, a: 0.25, b: 5.0, lambda: 0.3, rho: 5.1, pi: 0.7, pi2: Some(0.9) },
            ChainRecord { iteration: 2, n: 151, a: 0.5, b: 6.0, lambda: 0.31, rho: 5.0, pi: 0.71, pi2: Some(0.91) },
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("chain.csv");
        write_records_csv(&recs, true, &p).unwrap();
        let (back, periods) = read_records_csv(&p).unwrap();
        assert!(periods);
        assert_eq!(back, recs);
        let md = summary_markdown(&summarize_records(&back, Model::Independence, true));
        assert!(md.contains("pi2") && !md.contains("Interaction"));
    }
}
