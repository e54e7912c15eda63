//! Thermodynamic-integration estimates of the Strauss normalizing constant.
//!
//! Because `d/da log c_n(a, b) = -E[N_b | a, b]` and `c_n(0, b) = |D|^n`,
//!
//! ```text
//! log c_n(a, b) = n log|D| - integral_0^a E[N_b | a', b] da'
//! ```
//!
//! For every `(b, n)` cell the expected pair count is estimated by simulation
//! on a grid of `a'`, smoothed by a weighted least-squares polynomial and the
//! polynomial is integrated exactly at query time.

mod io;
mod poly;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use poly::{eval_polynomial, fit_polynomial_wls, integrate_polynomial, STDERR_FLOOR};

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::rng::derive_stream;
use crate::strauss::{StraussParams, StraussSampler};

pub const DEFAULT_DEGREE: usize = 10;

const GRID_MATCH_TOL: f64 = 1e-9;

/// `n` evenly spaced values from 0 to `stop` inclusive.
pub fn a_grid(stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| stop * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub a_grid: Vec<f64>,
    pub b_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
}

impl GridSpec {
    /// `a' = 0.0, 0.1, ..., 3.0`, `b = 1..=10`, `n = 100..=200`.
    pub fn full() -> Self {
        Self {
            a_grid: a_grid(3.0, 31),
            b_grid: (1..=10).map(f64::from).collect(),
            n_grid: (100..=200).collect(),
        }
    }

    /// Reduced `a'` resolution for desk-scale builds; same `b` and `n` ranges.
    pub fn desk() -> Self {
        Self {
            a_grid: a_grid(3.0, 13),
            ..Self::full()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("grid spec: {m}")));
        if self.a_grid.is_empty() || self.b_grid.is_empty() || self.n_grid.is_empty() {
            return bad("grids must be non-empty");
        }
        if self.a_grid[0] != 0.0 {
            return bad("the a-grid must start at 0");
        }
        if self.a_grid.iter().any(|a| !a.is_finite()) || !strictly_increasing(&self.a_grid) {
            return bad("the a-grid must be finite and strictly increasing");
        }
        if self.b_grid.iter().any(|b| !(*b > 0.0) || !b.is_finite())
            || !strictly_increasing(&self.b_grid)
        {
            return bad("the b-grid must be positive and strictly increasing");
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("the n-grid must be positive and strictly increasing");
        }
        Ok(())
    }

    pub fn a_max(&self) -> f64 {
        *self.a_grid.last().unwrap_or(&0.0)
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Simulation settings recorded alongside a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub n_samples: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub requested_degree: usize,
    pub crate_version: String,
}

/// Per-`(b, n)` polynomial approximations to `E[N_b | a', b, n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormConstTable {
    grid: GridSpec,
    domain_area: f64,
    degree: usize,
    /// Row-major over `(b, n)`.
    cells: Vec<Cell>,
    provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub coeffs: Vec<f64>,
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
}

/// Settings for [`build_table`].
#[derive(Debug, Clone, PartialEq)]
pub struct BuildOptions {
    pub n_samples: usize,
    /// Sweeps between successive recorded states.
    pub burn_in: usize,
    pub seed: u64,
    pub degree: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            burn_in: crate::strauss::DEFAULT_BURN_IN,
            seed: 1,
            degree: DEFAULT_DEGREE,
        }
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

fn chain_mean_pair_count<R: Rng + ?Sized>(
    sampler: &mut StraussSampler,
    n_samples: usize,
    burn_in: usize,
    rng: &mut R,
) -> (f64, f64) {
    let mut counts = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        sampler.run(burn_in, rng);
        counts.push(sampler.pair_count() as f64);
    }
    mean_and_stderr(&counts)
}

/// Mean and standard error of `N_b` over `n_samples` chained Strauss draws,
/// each produced by `burn_in` sweeps from the previous one.
pub fn estimate_mean_pair_count<R: Rng + ?Sized>(
    params: StraussParams,
    n: usize,
    domain: &Domain,
    n_samples: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    if n <= 1 {
        return Ok((0.0, 0.0));
    }
    let mut sampler = StraussSampler::from_uniform(*domain, params, n, rng)?;
    Ok(chain_mean_pair_count(&mut sampler, n_samples, burn_in, rng))
}

fn build_cell(
    grid: &GridSpec,
    domain: &Domain,
    b: f64,
    n: usize,
    degree: usize,
    opts: &BuildOptions,
) -> Result<Cell> {
    let len = grid.a_grid.len();
    if n <= 1 {
        return Ok(Cell {
            coeffs: vec![0.0; degree + 1],
            means: vec![0.0; len],
            stderrs: vec![0.0; len],
        });
    }
    let mut rng = derive_stream(opts.seed, &[b.to_bits(), n as u64]);
    let mut sampler = StraussSampler::from_uniform(*domain, StraussParams { a: 0.0, b }, n, &mut rng)?;
    let mut means = Vec::with_capacity(len);
    let mut stderrs = Vec::with_capacity(len);
    // each a' starts where the previous one stopped
    for &a in &grid.a_grid {
        sampler.set_interaction(a);
        let (m, s) = chain_mean_pair_count(&mut sampler, opts.n_samples, opts.burn_in, &mut rng);
        means.push(m);
        stderrs.push(s);
    }
    let coeffs = fit_polynomial_wls(&grid.a_grid, &means, &stderrs, degree).map_err(|e| match e {
        Error::SingularSystem | Error::Numeric(_) => Error::CellFit { b, n },
        other => other,
    })?;
    Ok(Cell {
        coeffs,
        means,
        stderrs,
    })
}

/// Simulates every `(b, n)` cell of `grid` and fits its polynomial.
///
/// Cells run in parallel; each draws from a stream derived from
/// `(seed, b, n)`, so the result does not depend on scheduling.
pub fn build_table(grid: &GridSpec, domain: &Domain, opts: &BuildOptions) -> Result<NormConstTable> {
    grid.validate()?;
    if opts.n_samples < 2 {
        return Err(Error::Config("table build needs n_samples >= 2".into()));
    }
    let degree = opts.degree.min(grid.a_grid.len() - 1);
    let keys: Vec<(f64, usize)> = grid
        .b_grid
        .iter()
        .flat_map(|&b| grid.n_grid.iter().map(move |&n| (b, n)))
        .collect();
    let total = keys.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let cells = keys
        .par_iter()
        .map(|&(b, n)| {
            let cell = build_cell(grid, domain, b, n, degree, opts);
            let k = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            log::info!("table cell b={b} n={n} done ({k}/{total})");
            cell
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NormConstTable {
        grid: grid.clone(),
        domain_area: domain.area(),
        degree,
        cells,
        provenance: Provenance {
            n_samples: opts.n_samples,
            burn_in: opts.burn_in,
            seed: opts.seed,
            requested_degree: opts.degree,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}

impl NormConstTable {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn domain_area(&self) -> f64 {
        self.domain_area
    }

    /// Effective polynomial degree (requested degree capped by the a-grid).
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn b_index(&self, b: f64) -> Option<usize> {
        self.grid
            .b_grid
            .iter()
            .position(|g| (g - b).abs() <= GRID_MATCH_TOL * g.max(1.0))
    }

    pub fn n_index(&self, n: usize) -> Option<usize> {
        self.grid.n_grid.binary_search(&n).ok()
    }

    pub fn cell(&self, b: f64, n: usize) -> Result<&Cell> {
        let bi = self
            .b_index(b)
            .ok_or_else(|| Error::OutOfGrid(format!("b = {b}")))?;
        let ni = self
            .n_index(n)
            .ok_or_else(|| Error::OutOfGrid(format!("n = {n}")))?;
        Ok(&self.cells[bi * self.grid.n_grid.len() + ni])
    }

    pub fn cells(&self) -> impl Iterator<Item = (f64, usize, &Cell)> {
        let nn = self.grid.n_grid.len();
        self.cells
            .iter()
            .enumerate()
            .map(move |(k, c)| (self.grid.b_grid[k / nn], self.grid.n_grid[k % nn], c))
    }

    /// Fails naming the first `n` in `lo..=hi` (ignoring `n <= 1`, which
    /// has a closed form) that the table cannot answer.
    pub fn check_covers(&self, lo: usize, hi: usize) -> Result<()> {
        match (lo.max(2)..=hi).find(|n| self.n_index(*n).is_none()) {
            Some(n) => Err(Error::OutOfGrid(format!(
                "n = {n} (required range {lo}..={hi}, table has {}..={})",
                self.grid.n_grid[0],
                self.grid.n_grid[self.grid.n_grid.len() - 1]
            ))),
            None => Ok(()),
        }
    }

    /// Approximate `log c_n(a, b)`.
    ///
    /// `n = 0` and `n = 1` are answered exactly for any `(a, b)`; otherwise
    /// `b` and `n` must be grid members and `0 <= a <= max(a_grid)`.
    pub fn log_c(&self, a: f64, b: f64, n: usize) -> Result<f64> {
        match n {
            0 => return Ok(0.0),
            1 => return Ok(self.domain_area.ln()),
            _ => {}
        }
        if !(a >= 0.0) || a > self.grid.a_max() * (1.0 + 1e-12) {
            return Err(Error::OutOfGrid(format!(
                "a = {a} (table spans 0..={})",
                self.grid.a_max()
            )));
        }
        let cell = self.cell(b, n)?;
        Ok(n as f64 * self.domain_area.ln() - integrate_polynomial(&cell.coeffs, 0.0, a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_from_seed;

    fn tiny_table() -> NormConstTable {
        let grid = GridSpec {
            a_grid: a_grid(1.0, 6),
            b_grid: vec![5.0],
            n_grid: vec![1, 2, 3],
        };
        let d = Domain::square(20.0).unwrap();
        build_table(
            &grid,
            &d,
            &BuildOptions {
                n_samples: 300,
                burn_in: 2,
                seed: 4,
                degree: DEFAULT_DEGREE,
            },
        )
        .unwrap()
    }

    #[test]
    fn grid_validation() {
        GridSpec::full().validate().unwrap();
        let full = GridSpec::full();
        assert_eq!(full.a_grid.len(), 31);
        assert_eq!(full.a_grid[30], 3.0);
        assert!((full.a_grid[7] - 0.7).abs() < 1e-15);
        assert_eq!(full.b_grid, (1..=10).map(f64::from).collect::<Vec<_>>());
        assert_eq!(full.n_grid.first(), Some(&100));
        assert_eq!(full.n_grid.last(), Some(&200));
        let mut g = GridSpec::full();
        g.a_grid[0] = 0.1;
        assert!(g.validate().is_err());
        let mut g = GridSpec::full();
        g.b_grid = vec![2.0, 1.0];
        assert!(g.validate().is_err());
        let mut g = GridSpec::full();
        g.n_grid = vec![0, 1];
        assert!(g.validate().is_err());
    }

    #[test]
    fn single_point_has_no_pairs() {
        let d = Domain::square(10.0).unwrap();
        let got = estimate_mean_pair_count(StraussParams { a: 1.0, b: 5.0 }, 1, &d, 10, 5, &mut stream_from_seed(1));
        assert_eq!(got.unwrap(), (0.0, 0.0));
        assert!(estimate_mean_pair_count(StraussParams { a: 1.0, b: 5.0 }, 5, &d, 1, 5, &mut stream_from_seed(1)).is_err());
    }

    #[test]
    fn anchor_and_degree_reduction() {
        let t = tiny_table();
        assert_eq!(t.degree(), 5);
        for n in 1..=3usize {
            assert_eq!(t.log_c(0.0, 5.0, n).unwrap(), n as f64 * 400f64.ln());
        }
        assert_eq!(t.log_c(0.3, 5.0, 0).unwrap(), 0.0);
        let c = t.cell(5.0, 1).unwrap();
        assert!(c.coeffs.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_point_a_grid_gives_exact_anchor() {
        let grid = GridSpec {
            a_grid: vec![0.0],
            b_grid: vec![3.0, 5.0],
            n_grid: vec![4, 7],
        };
        let d = Domain::square(30.0).unwrap();
        let t = build_table(&grid, &d, &BuildOptions { n_samples: 20, burn_in: 1, seed: 1, degree: 10 }).unwrap();
        assert_eq!(t.degree(), 0);
        assert_eq!(t.log_c(0.0, 3.0, 7).unwrap(), 7.0 * 900f64.ln());
    }

    #[test]
    fn out_of_grid_queries_fail() {
        let t = tiny_table();
        assert!(matches!(t.log_c(0.5, 4.0, 2), Err(Error::OutOfGrid(_))));
        assert!(matches!(t.log_c(0.5, 5.0, 9), Err(Error::OutOfGrid(_))));
        assert!(matches!(t.log_c(1.5, 5.0, 2), Err(Error::OutOfGrid(_))));
        assert!(matches!(t.log_c(-0.1, 5.0, 2), Err(Error::OutOfGrid(_))));
        assert!(t.check_covers(0, 3).is_ok());
        assert!(matches!(t.check_covers(2, 4), Err(Error::OutOfGrid(m)) if m.starts_with("n = 4")));
    }

    #[test]
    fn log_c_is_non_increasing_in_a() {
        let t = tiny_table();
        let mut prev = f64::INFINITY;
        for k in 0..=50 {
            let v = t.log_c(k as f64 / 50.0, 5.0, 3).unwrap();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn build_is_deterministic() {
        assert_eq!(tiny_table(), tiny_table());
    }
}
