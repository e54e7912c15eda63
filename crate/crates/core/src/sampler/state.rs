use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ChainRecord, InitialValues, Model, Priors};
use crate::error::{Error, Result};
use crate::geometry::{Domain, Point, TrapArray};
use crate::likelihood::CaptureHistory;
use crate::norm_const::NormConstTable;

/// Presence layer for data collected over several primary periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodState {
    /// `present[i][t]`; only meaningful when `delta[i]`.
    pub present: Vec<Vec<bool>>,
    pub pi2: f64,
}

/// Complete latent state of one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedState {
    pub delta: Vec<bool>,
    pub s: Vec<Point>,
    /// Inclusion probability (`pi1` when periods are present).
    pub pi: f64,
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub rho: f64,
    pub periods: Option<PeriodState>,
}

impl AugmentedState {
    pub fn n(&self) -> usize {
        self.delta.iter().filter(|d| **d).count()
    }
}

/// Per-individual encounter summaries. Rows are the augmented population;
/// the first `n_observed` are the animals in the data.
#[derive(Debug, Clone)]
pub(super) struct Encounters {
    /// 0-based trap of each capture, with its period.
    pub captures: Vec<Vec<(usize, usize)>>,
    /// `count[i][t]`: captures of `i` in period `t`.
    pub count: Vec<Vec<u32>>,
    /// Occasions per period.
    pub occasions: Vec<f64>,
    pub captured: Vec<bool>,
    pub n_observed: usize,
}

impl Encounters {
    fn new(data: &CaptureHistory, n_max: usize) -> Self {
        let miss = data.n_traps() as u32 + 1;
        let n_periods = data.periods().map_or(1, |p| p.n_periods());
        let period = |k: usize| data.periods().map_or(0, |p| p.period_of(k));
        let mut occasions = vec![0.0; n_periods];
        for k in 0..data.n_occasions() {
            occasions[period(k)] += 1.0;
        }
        let mut captures = vec![Vec::new(); n_max];
        let mut count = vec![vec![0u32; n_periods]; n_max];
        for (i, y) in data.records().iter().enumerate() {
            for (k, &c) in y.iter().enumerate() {
                if c != miss {
                    captures[i].push((c as usize - 1, period(k)));
                    count[i][period(k)] += 1;
                }
            }
        }
        let captured = (0..n_max).map(|i| i < data.n_observed()).collect();
        Self {
            captures,
            count,
            occasions,
            captured,
            n_observed: data.n_observed(),
        }
    }

    pub fn n_periods(&self) -> usize {
        self.occasions.len()
    }
}

/// Sampler state plus the caches that make single-site updates cheap.
pub struct Sampler<'a> {
    pub(super) traps: &'a TrapArray,
    pub(super) domain: Domain,
    pub(super) priors: Priors,
    pub(super) model: Model,
    pub(super) table: Option<&'a NormConstTable>,
    pub(super) enc: Encounters,
    pub(super) state: AugmentedState,
    pub(super) log_area: f64,
    /// `sum_l w_rho(||s_i - t_l||)`.
    pub(super) w_sum: Vec<f64>,
    /// `d2[i][t]`: summed squared capture distances of `i` in period `t`.
    pub(super) d2: Vec<Vec<f64>>,
    pub(super) n_active: usize,
    /// Pairs of members closer than `b`.
    pub(super) pairs: usize,
}

impl<'a> Sampler<'a> {
    /// Validates the inputs and draws a starting state.
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng + ?Sized>(
        data: &CaptureHistory,
        traps: &'a TrapArray,
        domain: Domain,
        priors: &Priors,
        model: Model,
        table: Option<&'a NormConstTable>,
        initial: &InitialValues,
        rng: &mut R,
    ) -> Result<Self> {
        validate_inputs(data, traps, &domain, priors, model, table)?;
        let n_max = priors.n_max;
        let n_obs = data.n_observed();
        let mut s = Vec::with_capacity(n_max);
        for y in data.records() {
            let caught: Vec<Point> = y
                .iter()
                .filter_map(|&c| traps.get(c as usize))
                .collect();
            let cx = caught.iter().map(|p| p.x).sum::<f64>() / caught.len() as f64;
            let cy = caught.iter().map(|p| p.y).sum::<f64>() / caught.len() as f64;
            let jitter = Point::new(
                cx + rng.random_range(-1.0..1.0),
                cy + rng.random_range(-1.0..1.0),
            );
            s.push(if domain.contains(jitter) { jitter } else { Point::new(cx, cy) });
        }
        while s.len() < n_max {
            s.push(domain.uniform_sample(rng));
        }
        let delta: Vec<bool> = (0..n_max).map(|i| i < n_obs || rng.random::<bool>()).collect();
        let n = delta.iter().filter(|d| **d).count();

        let (a, b) = match model {
            Model::Strauss => {
                let b = initial.b.unwrap_or(priors.b_support[priors.b_support.len() / 2]);
                if !priors.b_support.contains(&b) {
                    return Err(Error::Config(format!("initial b = {b} is not in the b support")));
                }
                (initial.a.unwrap_or(0.5).clamp(0.0, priors.a_max), b)
            }
            Model::Independence => (0.0, initial.b.unwrap_or(priors.b_support[0])),
        };
        let periods = data.periods().map(|p| PeriodState {
            present: vec![vec![true; p.n_periods()]; n_max],
            pi2: 0.5,
        });
        let state = AugmentedState {
            delta,
            s,
            pi: initial.pi.unwrap_or(n as f64 / n_max as f64).clamp(1e-6, 1.0 - 1e-6),
            a,
            b,
            lambda: initial.lambda.unwrap_or(priors.mu_log_lambda.exp()),
            rho: initial.rho.unwrap_or(priors.mu_log_rho.exp()),
            periods,
        };
        Self::with_state(data, traps, domain, priors, model, table, state)
    }

    /// Sampler positioned at an explicit state.
    pub fn with_state(
        data: &CaptureHistory,
        traps: &'a TrapArray,
        domain: Domain,
        priors: &Priors,
        model: Model,
        table: Option<&'a NormConstTable>,
        state: AugmentedState,
    ) -> Result<Self> {
        validate_inputs(data, traps, &domain, priors, model, table)?;
        let enc = Encounters::new(data, priors.n_max);
        if state.delta.len() != priors.n_max || state.s.len() != priors.n_max {
            return Err(Error::InvalidArgument(format!(
                "state must carry N = {} individuals",
                priors.n_max
            )));
        }
        if state.periods.is_some() != data.periods().is_some() {
            return Err(Error::InvalidArgument("state and data disagree on period structure".into()));
        }
        if !(state.lambda > 0.0 && state.rho > 0.0) {
            return Err(Error::InvalidArgument("lambda and rho must be positive".into()));
        }
        let mut sampler = Self {
            traps,
            domain,
            priors: priors.clone(),
            model,
            table,
            log_area: domain.area().ln(),
            w_sum: vec![0.0; priors.n_max],
            d2: vec![vec![0.0; enc.n_periods()]; priors.n_max],
            n_active: state.n(),
            pairs: 0,
            enc,
            state,
        };
        // captures force membership and presence
        for i in 0..sampler.enc.n_observed {
            sampler.state.delta[i] = true;
        }
        if let Some(p) = sampler.state.periods.as_mut() {
            for i in 0..priors.n_max {
                for t in 0..p.present[i].len() {
                    if !sampler.state.delta[i] {
                        p.present[i][t] = false;
                    } else if sampler.enc.count[i][t] > 0 {
                        p.present[i][t] = true;
                    }
                }
            }
        }
        sampler.n_active = sampler.state.n();
        for i in 0..priors.n_max {
            let (w, d2) = sampler.location_terms(i, sampler.state.s[i], sampler.state.rho);
            sampler.w_sum[i] = w;
            sampler.d2[i] = d2;
        }
        sampler.pairs = sampler.count_member_pairs(sampler.state.b);
        sampler.check_invariants()?;
        Ok(sampler)
    }

    pub fn state(&self) -> &AugmentedState {
        &self.state
    }

    /// Current number of population members.
    pub fn n(&self) -> usize {
        self.n_active
    }

    pub fn member_pairs(&self) -> usize {
        self.pairs
    }

    pub(super) fn record(&self, iteration: usize) -> ChainRecord {
        ChainRecord {
            iteration,
            n: self.n_active,
            a: self.state.a,
            b: self.state.b,
            lambda: self.state.lambda,
            rho: self.state.rho,
            pi: self.state.pi,
            pi2: self.state.periods.as_ref().map(|p| p.pi2),
        }
    }

    /// `(W_i, d2_i)` for a candidate center.
    pub(super) fn location_terms(&self, i: usize, s: Point, rho: f64) -> (f64, Vec<f64>) {
        let inv2 = 0.5 / (rho * rho);
        let w = self.traps.iter().map(|t| (-t.dist2(&s) * inv2).exp()).sum();
        let mut d2 = vec![0.0; self.enc.n_periods()];
        for &(trap, t) in &self.enc.captures[i] {
            d2[t] += self.traps.as_slice()[trap].dist2(&s);
        }
        (w, d2)
    }

    pub(super) fn count_member_pairs(&self, b: f64) -> usize {
        if self.model == Model::Independence {
            return 0;
        }
        let members: Vec<Point> = (0..self.state.delta.len())
            .filter(|&i| self.state.delta[i])
            .map(|i| self.state.s[i])
            .collect();
        crate::strauss::pair_count(&members, b)
    }

    /// Checks the state invariants and cache consistency.
    pub fn check_invariants(&self) -> Result<()> {
        let st = &self.state;
        let fail = |m: String| Err(Error::Numeric(format!("state invariant violated: {m}")));
        if st.n() != self.n_active {
            return fail(format!("cached n {} != {}", self.n_active, st.n()));
        }
        if let Some(i) = st.s.iter().position(|p| !self.domain.contains(*p)) {
            return fail(format!("center {i} outside the domain"));
        }
        if let Some(i) = (0..self.enc.n_observed).find(|&i| !st.delta[i]) {
            return fail(format!("observed individual {i} excluded"));
        }
        if !(st.a >= 0.0 && st.a <= self.priors.a_max) {
            return fail(format!("a = {} outside prior support", st.a));
        }
        if self.model == Model::Strauss && !self.priors.b_support.contains(&st.b) {
            return fail(format!("b = {} outside prior support", st.b));
        }
        if let Some(p) = &st.periods {
            for i in 0..st.delta.len() {
                for t in 0..p.present[i].len() {
                    if p.present[i][t] && !st.delta[i] {
                        return fail(format!("individual {i} present in period {t} but not a member"));
                    }
                    if self.enc.count[i][t] > 0 && !p.present[i][t] {
                        return fail(format!("individual {i} captured in period {t} but absent"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn validate_inputs(
    data: &CaptureHistory,
    traps: &TrapArray,
    domain: &Domain,
    priors: &Priors,
    model: Model,
    table: Option<&NormConstTable>,
) -> Result<()> {
    priors.validate()?;
    if data.n_traps() != traps.len() {
        return Err(Error::Config(format!(
            "data reference {} traps but the trap array has {}",
            data.n_traps(),
            traps.len()
        )));
    }
    traps.check_inside(domain)?;
    if data.n_observed() > priors.n_max {
        return Err(Error::Config(format!(
            "{} observed individuals exceed the augmentation bound N = {}",
            data.n_observed(),
            priors.n_max
        )));
    }
    if model == Model::Strauss {
        let table = table.ok_or_else(|| {
            Error::Config("the Strauss model needs a normalizing-constant table (run `scr table build`)".into())
        })?;
        if (table.domain_area() - domain.area()).abs() > 1e-9 * domain.area() {
            return Err(Error::Config(format!(
                "table was built for a domain of area {} but the fit uses {}",
                table.domain_area(),
                domain.area()
            )));
        }
        if let Some(b) = priors.b_support.iter().find(|b| table.b_index(**b).is_none()) {
            return Err(Error::OutOfGrid(format!("b = {b} from the prior support")));
        }
        if priors.a_max > table.grid().a_max() * (1.0 + 1e-12) {
            return Err(Error::OutOfGrid(format!(
                "a up to {} (table spans 0..={})",
                priors.a_max,
                table.grid().a_max()
            )));
        }
        table.check_covers(data.n_observed(), priors.n_max)?;
    }
    Ok(())
}
