use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point estimate of `n` with its central 90% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

/// A replicate average and its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McValue {
    pub value: f64,
    /// Sample SD over replicates divided by `sqrt(S)`; NaN when `S = 1`.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub replicates: usize,
    pub bias: McValue,
    pub mse: McValue,
    pub cover90: McValue,
    pub width90: McValue,
    /// Paired signed-rank test of the squared errors of the two models.
    pub wilcoxon_p: Option<f64>,
}

fn mc_value(values: &[f64]) -> McValue {
    let s = values.len() as f64;
    let value = values.iter().sum::<f64>() / s;
    let se = if values.len() > 1 {
        let var = values.iter().map(|v| (v - value).powi(2)).sum::<f64>() / (s - 1.0);
        (var / s).sqrt()
    } else {
        f64::NAN
    };
    McValue { value, se }
}

pub fn compute_metrics(estimates: &[IntervalEstimate], n_true: f64) -> Result<SimMetrics> {
    if estimates.is_empty() {
        return Err(Error::InvalidArgument("metrics need at least one replicate".into()));
    }
    if estimates.iter().any(|e| !(e.lower <= e.upper)) {
        return Err(Error::InvalidArgument("interval with lower > upper".into()));
    }
    let err: Vec<f64> = estimates.iter().map(|e| e.point - n_true).collect();
    let sq: Vec<f64> = err.iter().map(|e| e * e).collect();
    let cover: Vec<f64> = estimates
        .iter()
        .map(|e| f64::from(u8::from(e.lower <= n_true && n_true <= e.upper)))
        .collect();
    let width: Vec<f64> = estimates.iter().map(|e| e.upper - e.lower).collect();
    Ok(SimMetrics {
        replicates: estimates.len(),
        bias: mc_value(&err),
        mse: mc_value(&sq),
        cover90: mc_value(&cover),
        width90: mc_value(&width),
        wilcoxon_p: None,
    })
}
