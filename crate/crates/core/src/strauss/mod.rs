//! Strauss point process: pair counts, the unnormalized density
//! `exp(-a * N_b)` and fixed-n Metropolis simulation.

mod cell_list;

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use cell_list::CellList;

use crate::error::{Error, Result};
use crate::geometry::{check_header, parse_field, Domain, Point};

/// Full sweeps of burn-in used when no other value is configured.
pub const DEFAULT_BURN_IN: usize = 200;

/// Below this size the quadratic scan beats building a cell list.
const BRUTE_FORCE_LIMIT: usize = 64;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointPattern {
    pub points: Vec<Point>,
}

impl PointPattern {
    pub fn new(points: Vec<Point>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Smallest inter-point distance, `+inf` for fewer than two points.
    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                best = best.min(p.dist2(q));
            }
        }
        best.sqrt()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["point_id", "x", "y"])?;
        for (i, p) in self.points.iter().enumerate() {
            w.write_record(&[(i + 1).to_string(), p.x.to_string(), p.y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        check_header(path, reader.headers()?, &["point_id", "x", "y"])?;
        let mut points = Vec::new();
        for (k, rec) in reader.records().enumerate() {
            let rec = rec?;
            let line = k as u64 + 2;
            let _: usize = parse_field(path, line, &rec, 0)?;
            points.push(Point::new(
                parse_field(path, line, &rec, 1)?,
                parse_field(path, line, &rec, 2)?,
            ));
        }
        Ok(Self { points })
    }
}

/// Interaction strength `a >= 0` and range `b >= 0` (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StraussParams {
    pub a: f64,
    pub b: f64,
}

impl StraussParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0) || !(b >= 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "Strauss parameters must be finite and nonnegative (a = {a}, b = {b})"
            )));
        }
        Ok(Self { a, b })
    }
}

/// Quadratic reference implementation of [`pair_count`].
pub fn pair_count_brute(points: &[Point], b: f64) -> usize {
    let r2 = b * b;
    let mut count = 0;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            if p.dist2(q) < r2 {
                count += 1;
            }
        }
    }
    count
}

/// Number of unordered pairs at distance strictly less than `b`.
pub fn pair_count(points: &[Point], b: f64) -> usize {
    if b <= 0.0 || points.len() < 2 {
        return 0;
    }
    if points.len() < BRUTE_FORCE_LIMIT {
        return pair_count_brute(points, b);
    }
    let (mut xmin, mut xmax, mut ymin, mut ymax) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
    }
    // pad so collinear or coincident inputs still give a proper rectangle
    let bbox = Domain::new(xmin - b, xmax + b, ymin - b, ymax + b)
        .expect("padded bounding box is non-degenerate");
    CellList::new(&bbox, b, points).count_pairs(points, b * b)
}

/// `-a * N_b(pattern)`.
pub fn log_unnormalized_density(pattern: &PointPattern, params: StraussParams) -> f64 {
    if params.a == 0.0 {
        return 0.0;
    }
    -params.a * pair_count(&pattern.points, params.b) as f64
}

/// Single-site Metropolis chain targeting the fixed-n Strauss density on a
/// rectangle. Each proposal relocates one point uniformly over the domain.
#[derive(Debug, Clone)]
pub struct StraussSampler {
    domain: Domain,
    params: StraussParams,
    points: Vec<Point>,
    cells: CellList,
    pairs: usize,
    proposed: u64,
    accepted: u64,
}

impl StraussSampler {
    pub fn new(domain: Domain, params: StraussParams, init: Vec<Point>) -> Result<Self> {
        if init.is_empty() {
            return Err(Error::InvalidArgument("Strauss sampler needs n >= 1".into()));
        }
        if let Some(i) = init.iter().position(|p| !domain.contains(*p)) {
            return Err(Error::InvalidArgument(format!(
                "initial point {} lies outside the domain",
                i + 1
            )));
        }
        let cells = CellList::new(&domain, params.b, &init);
        let pairs = if params.b > 0.0 {
            cells.count_pairs(&init, params.b * params.b)
        } else {
            0
        };
        Ok(Self {
            domain,
            params,
            points: init,
            cells,
            pairs,
            proposed: 0,
            accepted: 0,
        })
    }

    /// Chain started from `n` independent uniform points.
    pub fn from_uniform<R: Rng + ?Sized>(
        domain: Domain,
        params: StraussParams,
        n: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let init = (0..n).map(|_| domain.uniform_sample(rng)).collect();
        Self::new(domain, params, init)
    }

    /// Changes `a` in place, keeping the current configuration.
    pub fn set_interaction(&mut self, a: f64) {
        self.params.a = a;
    }

    /// One systematic pass of relocation proposals over every point.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let r2 = self.params.b * self.params.b;
        let a = self.params.a;
        for i in 0..self.points.len() {
            let proposal = self.domain.uniform_sample(rng);
            self.proposed += 1;
            let (delta, accept) = if r2 == 0.0 {
                (0isize, true)
            } else {
                let old = self.cells.count_within(&self.points, self.points[i], r2, Some(i));
                let new = self.cells.count_within(&self.points, proposal, r2, Some(i));
                let delta = new as isize - old as isize;
                let accept = delta <= 0 || a == 0.0 || rng.random::<f64>() < (-a * delta as f64).exp();
                (delta, accept)
            };
            if accept {
                self.accepted += 1;
                self.points[i] = proposal;
                self.cells.relocate(i, proposal);
                self.pairs = (self.pairs as isize + delta) as usize;
            }
        }
    }

    pub fn run<R: Rng + ?Sized>(&mut self, sweeps: usize, rng: &mut R) {
        for _ in 0..sweeps {
            self.sweep(rng);
        }
    }

    /// Current `N_b`, maintained incrementally.
    pub fn pair_count(&self) -> usize {
        self.pairs
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn pattern(&self) -> PointPattern {
        PointPattern::new(self.points.clone())
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            return f64::NAN;
        }
        self.accepted as f64 / self.proposed as f64
    }
}

/// One approximate draw of `n` points from the Strauss density after
/// `burn_in` full sweeps, started from `init` or from uniform points.
pub fn sample_fixed_n<R: Rng + ?Sized>(
    n: usize,
    params: StraussParams,
    domain: &Domain,
    burn_in: usize,
    init: Option<&PointPattern>,
    rng: &mut R,
) -> Result<PointPattern> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample_fixed_n requires n >= 1".into()));
    }
    let mut sampler = match init {
        Some(p) if p.len() != n => {
            return Err(Error::InvalidArgument(format!(
                "initial pattern has {} points, expected {n}",
                p.len()
            )))
        }
        Some(p) => StraussSampler::new(*domain, params, p.points.clone())?,
        None => StraussSampler::from_uniform(*domain, params, n, rng)?,
    };
    sampler.run(burn_in, rng);
    Ok(sampler.pattern())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_from_seed;
    use proptest::prelude::*;

    fn random_points(n: usize, side: f64, seed: u64) -> Vec<Point> {
        let d = Domain::square(side).unwrap();
        let mut rng = stream_from_seed(seed);
        (0..n).map(|_| d.uniform_sample(&mut rng)).collect()
    }

    #[test]
    fn pair_count_examples() {
        assert_eq!(pair_count(&[], 5.0), 0);
        let pts = [Point::new(0.0, 0.0), Point::new(3.0, 0.0), Point::new(10.0, 0.0)];
        assert_eq!(pair_count(&pts, 5.0), 1);
        // distance exactly b is excluded
        assert_eq!(pair_count(&pts, 3.0), 0);
        assert_eq!(pair_count(&pts, 0.0), 0);
    }

    #[test]
    fn accelerated_pair_count_matches_brute_force() {
        for seed in 0..100 {
            let n = 50 + (seed as usize * 7) % 200;
            let pts = random_points(n, 100.0, seed);
            let b = 1.0 + (seed % 10) as f64;
            assert_eq!(pair_count(&pts, b), pair_count_brute(&pts, b), "seed {seed}");
        }
    }

    #[test]
    fn log_density_examples() {
        let pts = PointPattern::new(random_points(40, 20.0, 1));
        assert_eq!(log_unnormalized_density(&pts, StraussParams::new(0.0, 5.0).unwrap()), 0.0);
        let three = PointPattern::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ]);
        assert_eq!(pair_count(&three.points, 5.0), 3);
        assert_eq!(log_unnormalized_density(&three, StraussParams::new(2.0, 5.0).unwrap()), -6.0);
        for seed in 0..20 {
            let p = PointPattern::new(random_points(80, 50.0, seed));
            let brute = pair_count_brute(&p.points, 4.0) as f64;
            assert_eq!(log_unnormalized_density(&p, StraussParams { a: 1.5, b: 4.0 }), -1.5 * brute);
        }
    }

    proptest! {
        #[test]
        fn pair_count_is_permutation_and_translation_invariant(
            seed in 0u64..1000, shift_x in -500.0..500.0f64, shift_y in -500.0..500.0f64, b in 0.0..12.0f64
        ) {
            let pts = random_points(70, 60.0, seed);
            let base = pair_count(&pts, b);
            let mut rev = pts.clone();
            rev.reverse();
            prop_assert_eq!(pair_count(&rev, b), base);
            // integer shifts keep squared distances exact
            let (sx, sy) = (shift_x.round(), shift_y.round());
            let moved: Vec<Point> = pts.iter().map(|p| Point::new(p.x + sx, p.y + sy)).collect();
            prop_assert_eq!(pair_count_brute(&moved, b), pair_count_brute(&pts, b));
            prop_assert_eq!(pair_count(&pts, 0.0), 0);
        }

        #[test]
        fn log_density_non_increasing_in_a(seed in 0u64..1000, a1 in 0.0..3.0f64, a2 in 0.0..3.0f64) {
            let p = PointPattern::new(random_points(30, 20.0, seed));
            let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
            let f = |a| log_unnormalized_density(&p, StraussParams { a, b: 5.0 });
            prop_assert!(f(hi) <= f(lo));
            prop_assert!(f(hi) <= 0.0);
        }
    }

    #[test]
    fn zero_interaction_accepts_everything() {
        let d = Domain::square(100.0).unwrap();
        let mut rng = stream_from_seed(2);
        let mut s = StraussSampler::from_uniform(d, StraussParams { a: 0.0, b: 5.0 }, 50, &mut rng).unwrap();
        s.run(20, &mut rng);
        assert_eq!(s.acceptance_rate(), 1.0);
        assert_eq!(s.pair_count(), pair_count_brute(s.points(), 5.0));
    }

    #[test]
    fn incremental_pair_count_tracks_truth() {
        let d = Domain::square(40.0).unwrap();
        let mut rng = stream_from_seed(9);
        let mut s = StraussSampler::from_uniform(d, StraussParams { a: 0.7, b: 6.0 }, 60, &mut rng).unwrap();
        for _ in 0..10 {
            s.sweep(&mut rng);
            assert_eq!(s.pair_count(), pair_count_brute(s.points(), 6.0));
            assert!(s.points().iter().all(|p| d.contains(*p)));
        }
    }

    #[test]
    fn sample_fixed_n_is_deterministic_and_validates() {
        let d = Domain::square(50.0).unwrap();
        let params = StraussParams { a: 1.0, b: 5.0 };
        let init = PointPattern::new(random_points(20, 50.0, 4));
        let x = sample_fixed_n(20, params, &d, 30, Some(&init), &mut stream_from_seed(1)).unwrap();
        let y = sample_fixed_n(20, params, &d, 30, Some(&init), &mut stream_from_seed(1)).unwrap();
        assert_eq!(x, y);
        assert_eq!(x.len(), 20);
        assert!(sample_fixed_n(0, params, &d, 30, None, &mut stream_from_seed(1)).is_err());
        assert!(sample_fixed_n(5, params, &d, 30, Some(&init), &mut stream_from_seed(1)).is_err());
    }

    #[test]
    fn hard_core_limit_removes_close_pairs() {
        let d = Domain::square(100.0).unwrap();
        let params = StraussParams { a: 50.0, b: 5.0 };
        let mut rng = stream_from_seed(77);
        let mut ok = 0;
        for _ in 0..20 {
            let p = sample_fixed_n(50, params, &d, DEFAULT_BURN_IN, None, &mut rng).unwrap();
            if p.min_pairwise_distance() >= 5.0 {
                ok += 1;
            }
        }
        assert_eq!(ok, 20);
    }

    #[test]
    fn pattern_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let p = PointPattern::new(random_points(12, 10.0, 3));
        p.write_csv(&path).unwrap();
        assert_eq!(PointPattern::read_csv(&path).unwrap(), p);
    }
}
