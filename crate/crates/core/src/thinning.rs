//! Covariate-driven thinning of a Strauss process.
//!
//! Potential centers come from a fixed-n Strauss process; each is retained
//! independently with probability `logistic(X(s)' beta)`. An individual is a
//! population member only when both its augmentation indicator and its
//! thinning indicator are set.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_header, parse_field, Domain, Point, TrapArray};
use crate::likelihood::{capture_probs, log_likelihood_individual, DetectionParams};
use crate::strauss::{sample_fixed_n, PointPattern, StraussParams, DEFAULT_BURN_IN};

/// Spatial covariates `X(s)`.
pub trait CovariateField: Send + Sync {
    fn dim(&self) -> usize;
    fn covariates(&self, p: Point) -> Vec<f64>;
}

/// Field defined by a closure.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(Point) -> Vec<f64> + Send + Sync> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(Point) -> Vec<f64> + Send + Sync> CovariateField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn covariates(&self, p: Point) -> Vec<f64> {
        (self.f)(p)
    }
}

/// One covariate on a rectilinear grid of cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Row-major over `ys`, then `xs`.
    values: Vec<f64>,
}

fn nearest(sorted: &[f64], v: f64) -> usize {
    let k = sorted.partition_point(|x| *x < v);
    if k == 0 {
        0
    } else if k == sorted.len() || v - sorted[k - 1] <= sorted[k] - v {
        k - 1
    } else {
        k
    }
}

impl Raster {
    /// Builds a raster from `(x, y, value)` cells, which must cover every
    /// combination of the distinct x and y coordinates exactly once.
    pub fn from_cells(cells: &[(f64, f64, f64)]) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidArgument("raster has no cells".into()));
        }
        if cells.iter().any(|(x, y, v)| !x.is_finite() || !y.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidArgument("raster contains non-finite values".into()));
        }
        let distinct = |f: fn(&(f64, f64, f64)) -> f64| {
            let mut v: Vec<f64> = cells.iter().map(f).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let xs = distinct(|c| c.0);
        let ys = distinct(|c| c.1);
        if xs.len() * ys.len() != cells.len() {
            return Err(Error::InvalidArgument(format!(
                "raster is not a complete grid: {} cells for {} x {} coordinates",
                cells.len(),
                xs.len(),
                ys.len()
            )));
        }
        let mut values = vec![f64::NAN; cells.len()];
        for &(x, y, v) in cells {
            let k = nearest(&ys, y) * xs.len() + nearest(&xs, x);
            if !values[k].is_nan() {
                return Err(Error::InvalidArgument(format!("duplicate raster cell at ({x}, {y})")));
            }
            values[k] = v;
        }
        Ok(Self { xs, ys, values })
    }

    /// Reads an `x,y,value` CSV.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        check_header(path, reader.headers()?, &["x", "y", "value"])?;
        let mut cells = Vec::new();
        for (k, rec) in reader.records().enumerate() {
            let rec = rec?;
            let line = k as u64 + 2;
            cells.push((
                parse_field(path, line, &rec, 0)?,
                parse_field(path, line, &rec, 1)?,
                parse_field(path, line, &rec, 2)?,
            ));
        }
        Self::from_cells(&cells).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })
    }

    /// Value of the cell whose center is nearest to `p`.
    pub fn value_at(&self, p: Point) -> f64 {
        self.values[nearest(&self.ys, p.y) * self.xs.len() + nearest(&self.xs, p.x)]
    }
}

/// Stack of rasters, optionally preceded by a constant intercept column.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterField {
    layers: Vec<Raster>,
    intercept: bool,
}

impl RasterField {
    pub fn new(layers: Vec<Raster>, intercept: bool) -> Self {
        Self { layers, intercept }
    }
}

impl CovariateField for RasterField {
    fn dim(&self) -> usize {
        self.layers.len() + usize::from(self.intercept)
    }
    fn covariates(&self, p: Point) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        if self.intercept {
            x.push(1.0);
        }
        x.extend(self.layers.iter().map(|r| r.value_at(p)));
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThinningParams {
    pub beta: Vec<f64>,
}

impl ThinningParams {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("thinning coefficients must be finite".into()));
        }
        Ok(Self { beta })
    }
}

/// Retention probability `exp(x'beta) / (1 + exp(x'beta))`.
pub fn thinning_prob(x: &[f64], params: &ThinningParams) -> Result<f64> {
    if x.len() != params.beta.len() {
        return Err(Error::InvalidArgument(format!(
            "covariate vector has {} entries, beta has {}",
            x.len(),
            params.beta.len()
        )));
    }
    let eta: f64 = x.iter().zip(&params.beta).map(|(a, b)| a * b).sum();
    if eta.is_nan() {
        return Err(Error::Numeric("linear predictor is NaN".into()));
    }
    Ok(if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    })
}

/// Capture probabilities with effective membership `delta && gamma`.
pub fn capture_probs_thinned(
    s: Point,
    delta: bool,
    gamma: bool,
    params: DetectionParams,
    traps: &TrapArray,
) -> Vec<f64> {
    capture_probs(s, delta && gamma, params, traps)
}

pub fn log_likelihood_thinned(
    y: &[u32],
    s: Point,
    delta: bool,
    gamma: bool,
    params: DetectionParams,
    traps: &TrapArray,
) -> f64 {
    log_likelihood_individual(y, s, delta && gamma, params, traps)
}

/// Draws `n_potential` Strauss centers and thins them. Returns the retained
/// and the removed points; together they are exactly the potential pattern.
pub fn simulate_thinned_process<R: Rng + ?Sized>(
    n_potential: usize,
    strauss: StraussParams,
    field: &dyn CovariateField,
    beta: &ThinningParams,
    domain: &Domain,
    rng: &mut R,
) -> Result<(PointPattern, PointPattern)> {
    if field.dim() != beta.beta.len() {
        return Err(Error::InvalidArgument(format!(
            "field has {} covariates, beta has {}",
            field.dim(),
            beta.beta.len()
        )));
    }
    if n_potential == 0 {
        return Ok((PointPattern::default(), PointPattern::default()));
    }
    let potential = sample_fixed_n(n_potential, strauss, domain, DEFAULT_BURN_IN, None, rng)?;
    let mut retained = Vec::new();
    let mut removed = Vec::new();
    for p in potential.points {
        let prob = thinning_prob(&field.covariates(p), beta)?;
        if rng.random::<f64>() < prob {
            retained.push(p);
        } else {
            removed.push(p);
        }
    }
    Ok((PointPattern::new(retained), PointPattern::new(removed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_from_seed;
    use proptest::prelude::{prop, prop_assert, proptest};

    fn beta(v: &[f64]) -> ThinningParams {
        ThinningParams::new(v.to_vec()).unwrap()
    }

    #[test]
    fn logistic_examples() {
        assert_eq!(thinning_prob(&[3.0, -2.0], &beta(&[0.0, 0.0])).unwrap(), 0.5);
        assert!((thinning_prob(&[1.0], &beta(&[3f64.ln()])).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(thinning_prob(&[1.0], &beta(&[1e6])).unwrap(), 1.0);
        assert_eq!(thinning_prob(&[1.0], &beta(&[-1e6])).unwrap(), 0.0);
        assert!(thinning_prob(&[1.0, 2.0], &beta(&[1.0])).is_err());
        assert!(ThinningParams::new(vec![f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_each_coordinate(
            x in prop::collection::vec(-5.0f64..5.0, 3),
            b in prop::collection::vec(-3.0f64..3.0, 3),
            k in 0usize..3,
            dx in 0.01f64..2.0,
        ) {
            let params = beta(&b);
            let p0 = thinning_prob(&x, &params).unwrap();
            let mut x1 = x.clone();
            x1[k] += dx;
            let p1 = thinning_prob(&x1, &params).unwrap();
            prop_assert!(p0 > 0.0 && p0 < 1.0);
            if b[k] > 0.0 { prop_assert!(p1 >= p0); }
            if b[k] < 0.0 { prop_assert!(p1 <= p0); }
        }
    }

    #[test]
    fn thinned_capture_probs() {
        let traps = TrapArray::grid(3, 3, 5.0, Point::new(0.0, 0.0)).unwrap();
        let params = DetectionParams::new(0.3, 5.0).unwrap();
        let s = Point::new(1.0, -2.0);
        let off = capture_probs_thinned(s, true, false, params, &traps);
        assert_eq!(off[9], 1.0);
        assert!(off[..9].iter().all(|p| *p == 0.0));
        assert_eq!(capture_probs_thinned(s, true, true, params, &traps), capture_probs(s, true, params, &traps));
        let mut rng = stream_from_seed(4);
        for _ in 0..50 {
            let (d, g) = (rng.random::<bool>(), rng.random::<bool>());
            assert_eq!(
                capture_probs_thinned(s, d, g, params, &traps),
                capture_probs(s, d && g, params, &traps)
            );
        }
    }

    #[test]
    fn raster_lookup_and_csv() {
        let cells: Vec<(f64, f64, f64)> = (0..3)
            .flat_map(|j| (0..4).map(move |i| (i as f64 * 10.0, j as f64 * 10.0, (i + 10 * j) as f64)))
            .collect();
        let r = Raster::from_cells(&cells).unwrap();
        assert_eq!(r.value_at(Point::new(1.0, 1.0)), 0.0);
        assert_eq!(r.value_at(Point::new(26.0, 14.0)), 13.0);
        assert_eq!(r.value_at(Point::new(-50.0, 99.0)), 20.0);
        assert!(Raster::from_cells(&cells[1..]).is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cov.csv");
        let mut text = String::from("x,y,value\n");
        for (x, y, v) in &cells {
            text += &format!("{x},{y},{v}\n");
        }
        std::fs::write(&path, text).unwrap();
        assert_eq!(Raster::read_csv(&path).unwrap(), r);
        std::fs::write(&path, "x,y,val\n0,0,1\n").unwrap();
        assert!(Raster::read_csv(&path).is_err());

        let field = RasterField::new(vec![r], true);
        assert_eq!(field.covariates(Point::new(26.0, 14.0)), vec![1.0, 13.0]);
    }

    #[test]
    fn huge_intercept_retains_everything() {
        let d = Domain::square(50.0).unwrap();
        let field = FnField::new(1, |_| vec![1.0]);
        let mut rng = stream_from_seed(2);
        let (kept, gone) =
            simulate_thinned_process(40, StraussParams::new(1.0, 4.0).unwrap(), &field, &beta(&[50.0]), &d, &mut rng)
                .unwrap();
        assert_eq!(kept.len(), 40);
        assert!(gone.is_empty());
    }

    #[test]
    fn thinning_partitions_the_potential_pattern() {
        let d = Domain::square(50.0).unwrap();
        let field = FnField::new(2, |p: Point| vec![1.0, p.x / 50.0 - 0.5]);
        let params = StraussParams::new(0.7, 3.0).unwrap();
        let b = beta(&[0.2, 2.0]);
        let (kept, gone) = simulate_thinned_process(30, params, &field, &b, &d, &mut stream_from_seed(9)).unwrap();
        let mut rng = stream_from_seed(9);
        let potential = sample_fixed_n(30, params, &d, DEFAULT_BURN_IN, None, &mut rng).unwrap();
        let mut union: Vec<Point> = kept.points.iter().chain(&gone.points).copied().collect();
        let mut pot = potential.points;
        let key = |p: &Point| (p.x.to_bits(), p.y.to_bits());
        union.sort_by_key(key);
        pot.sort_by_key(key);
        assert_eq!(union, pot);
    }

    #[test]
    fn retained_count_matches_mean_retention() {
        // a = 0: uniform potential points, so E[retained] = n * mean of p(x)
        // over the domain, which has a closed form for this field.
        let d = Domain::square(50.0).unwrap();
        let (b0, b1) = (-0.5, 2.0);
        let field = FnField::new(2, |p: Point| vec![1.0, p.x / 50.0]);
        let params = StraussParams::new(0.0, 4.0).unwrap();
        let n = 30;
        let reps = 2000;
        let mut rng = stream_from_seed(17);
        let counts: Vec<f64> = (0..reps)
            .map(|_| {
                simulate_thinned_process(n, params, &field, &beta(&[b0, b1]), &d, &mut rng).unwrap().0.len() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / reps as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let softplus = |t: f64| (1.0 + t.exp()).ln();
        let expected = n as f64 * (softplus(b0 + b1) - softplus(b0)) / b1;
        assert!((mean - expected).abs() < 4.0 * (var / reps as f64).sqrt(), "{mean} vs {expected}");
    }

    #[test]
    fn hard_core_survives_thinning() {
        let d = Domain::square(60.0).unwrap();
        let field = FnField::new(2, |p: Point| vec![1.0, p.y / 60.0]);
        let mut rng = stream_from_seed(21);
        let (kept, _) =
            simulate_thinned_process(40, StraussParams::new(50.0, 5.0).unwrap(), &field, &beta(&[0.0, 1.0]), &d, &mut rng)
                .unwrap();
        assert!(kept.min_pairwise_distance() >= 5.0);
    }
}
