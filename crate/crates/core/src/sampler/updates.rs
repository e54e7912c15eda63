use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use super::{AcceptanceRates, Model, Sampler, StepSizes, TARGET_ACCEPTANCE};
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Scalar parameters with random-walk Metropolis updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scalar {
    A,
    LogLambda,
    LogRho,
}

#[derive(Debug, Clone, Copy, Default)]
pub(super) struct SweepCounts {
    pub a: (u64, u64),
    pub log_lambda: (u64, u64),
    pub log_rho: (u64, u64),
    pub location: (u64, u64),
}

#[derive(Debug, Clone, Copy, Default)]
pub(super) struct AcceptanceCounter {
    c: SweepCounts,
}

fn bump(slot: &mut (u64, u64), add: (u64, u64)) {
    slot.0 += add.0;
    slot.1 += add.1;
}

fn rate(slot: (u64, u64)) -> Option<f64> {
    (slot.1 > 0).then(|| slot.0 as f64 / slot.1 as f64)
}

impl AcceptanceCounter {
    pub fn add(&mut self, s: &SweepCounts) {
        bump(&mut self.c.a, s.a);
        bump(&mut self.c.log_lambda, s.log_lambda);
        bump(&mut self.c.log_rho, s.log_rho);
        bump(&mut self.c.location, s.location);
    }

    pub fn rates(&self) -> AcceptanceRates {
        AcceptanceRates {
            a: rate(self.c.a),
            log_lambda: rate(self.c.log_lambda),
            log_rho: rate(self.c.log_rho),
            location: rate(self.c.location),
        }
    }

    /// Robbins-Monro step on the log scale with gain `2 / sqrt(batch)`.
    pub fn adapt(&self, steps: &mut StepSizes, batch: usize) {
        let gain = 2.0 / (batch as f64).sqrt();
        let tune = |step: &mut f64, slot: (u64, u64)| {
            if let Some(r) = rate(slot) {
                *step = (*step * (gain * (r - TARGET_ACCEPTANCE)).exp()).clamp(1e-4, 1e4);
            }
        };
        tune(&mut steps.a, self.c.a);
        tune(&mut steps.log_lambda, self.c.log_lambda);
        tune(&mut steps.log_rho, self.c.log_rho);
        tune(&mut steps.location, self.c.location);
    }
}

#[inline]
fn normal_logpdf_kernel(x: f64, mu: f64, sd: f64) -> f64 {
    let z = (x - mu) / sd;
    -0.5 * z * z
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn draw_beta<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> Result<f64> {
    Beta::new(alpha, beta)
        .map(|d| d.sample(rng))
        .map_err(|e| Error::Numeric(format!("Beta({alpha}, {beta}): {e}")))
}

impl Sampler<'_> {
    /// Log-likelihood of individual `i`'s encounters in period `t`, given
    /// presence, for detection parameters `(lambda, rho)` and cached
    /// location terms.
    #[inline]
    fn ll_period(&self, i: usize, t: usize, lambda: f64, rho: f64, w_sum: f64, d2: f64) -> f64 {
        let c = self.enc.count[i][t] as f64;
        let mut ll = -self.enc.occasions[t] * (lambda * w_sum).ln_1p();
        if c > 0.0 {
            ll += c * lambda.ln() - 0.5 * d2 / (rho * rho);
        }
        ll
    }

    #[inline]
    fn is_present(&self, i: usize, t: usize) -> bool {
        match &self.state.periods {
            Some(p) => self.state.delta[i] && p.present[i][t],
            None => self.state.delta[i],
        }
    }

    /// Encounter log-likelihood of individual `i` under the current state.
    pub fn individual_log_likelihood(&self, i: usize) -> f64 {
        let st = &self.state;
        (0..self.enc.n_periods())
            .filter(|&t| self.is_present(i, t))
            .map(|t| self.ll_period(i, t, st.lambda, st.rho, self.w_sum[i], self.d2[i][t]))
            .sum()
    }

    fn log_c(&self, a: f64, b: f64, n: usize) -> Result<f64> {
        let table = self
            .table
            .ok_or_else(|| Error::Config("Strauss update without a normalizing-constant table".into()))?;
        table.log_c(a, b, n)
    }

    /// Members other than `i` within `b` of `p`.
    fn member_neighbors(&self, i: usize, p: Point, b: f64) -> usize {
        let r2 = b * b;
        let st = &self.state;
        (0..st.delta.len())
            .filter(|&j| j != i && st.delta[j] && st.s[j].dist2(&p) < r2)
            .count()
    }

    /// Presence probability for period `t` of a member not captured in it.
    fn presence_prob(&self, i: usize, t: usize, pi2: f64) -> f64 {
        let st = &self.state;
        let ll = self.ll_period(i, t, st.lambda, st.rho, self.w_sum[i], self.d2[i][t]);
        let on = pi2 * ll.exp();
        on / (on + (1.0 - pi2))
    }

    /// Exact Bernoulli full conditional for `delta_i`.
    ///
    /// With primary periods, the presence indicators of `i` are integrated
    /// out and redrawn jointly with `delta_i`.
    pub fn gibbs_delta<R: Rng + ?Sized>(&mut self, i: usize, rng: &mut R) -> Result<()> {
        if self.enc.captured[i] {
            return Ok(());
        }
        let st = &self.state;
        let was = st.delta[i];
        let others = self.n_active - usize::from(was);

        let loglik_in = match &st.periods {
            None => self.ll_period(i, 0, st.lambda, st.rho, self.w_sum[i], self.d2[i][0]),
            Some(p) => (0..self.enc.n_periods())
                .map(|t| {
                    let ll = self.ll_period(i, t, st.lambda, st.rho, self.w_sum[i], self.d2[i][t]);
                    (p.pi2 * ll.exp() + (1.0 - p.pi2)).ln()
                })
                .sum(),
        };
        let mut log_odds = st.pi.ln() - (-st.pi).ln_1p() + loglik_in;
        let mut neighbors = 0;
        if self.model == Model::Strauss {
            neighbors = self.member_neighbors(i, st.s[i], st.b);
            let with = self.log_c(st.a, st.b, others + 1).map_err(|e| coverage(e, others + 1))?;
            let without = self.log_c(st.a, st.b, others).map_err(|e| coverage(e, others))?;
            log_odds += -st.a * neighbors as f64 - with + without + self.log_area;
        }
        let now = rng.random::<f64>() < sigmoid(log_odds);

        if now != was {
            self.state.delta[i] = now;
            if now {
                self.n_active += 1;
                self.pairs += neighbors;
            } else {
                self.n_active -= 1;
                self.pairs -= neighbors;
            }
        }
        if let Some(pi2) = self.state.periods.as_ref().map(|p| p.pi2) {
            for t in 0..self.enc.n_periods() {
                let present = now && rng.random::<f64>() < self.presence_prob(i, t, pi2);
                self.state.periods.as_mut().expect("periods").present[i][t] = present;
            }
        }
        Ok(())
    }

    /// `pi ~ Beta(n + a_pi, N - n + b_pi)`.
    pub fn gibbs_pi<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let n = self.n_active as f64;
        let big_n = self.priors.n_max as f64;
        self.state.pi = draw_beta(n + self.priors.a_pi, big_n - n + self.priors.b_pi, rng)?;
        Ok(())
    }

    /// Discrete full conditional of `b` over the prior support.
    pub fn gibbs_b<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        if self.model != Model::Strauss {
            return Ok(());
        }
        let support = self.priors.b_support.clone();
        let counts = self.member_pair_counts(&support);
        let n = self.n_active;
        let a = self.state.a;
        let mut logp = Vec::with_capacity(support.len());
        for (b, cnt) in support.iter().zip(&counts) {
            logp.push(-a * *cnt as f64 - self.log_c(a, *b, n).map_err(|e| coverage(e, n))?);
        }
        let k = sample_log_weights(&logp, rng);
        self.state.b = support[k];
        self.pairs = counts[k];
        Ok(())
    }

    /// `N_b` of the members for every `b` in `support` (which may be unsorted).
    pub fn member_pair_counts(&self, support: &[f64]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..support.len()).collect();
        order.sort_by(|&x, &y| support[x].total_cmp(&support[y]));
        let sq: Vec<f64> = order.iter().map(|&k| support[k] * support[k]).collect();
        let max_r2 = sq.last().copied().unwrap_or(0.0);
        let members: Vec<Point> = (0..self.state.delta.len())
            .filter(|&i| self.state.delta[i])
            .map(|i| self.state.s[i])
            .collect();
        let mut hist = vec![0usize; sq.len() + 1];
        for (i, p) in members.iter().enumerate() {
            for q in &members[i + 1..] {
                let d2 = p.dist2(q);
                if d2 < max_r2 {
                    hist[sq.partition_point(|r2| *r2 <= d2)] += 1;
                }
            }
        }
        let mut sorted_counts = Vec::with_capacity(sq.len());
        let mut acc = 0;
        for h in &hist[..sq.len()] {
            acc += h;
            sorted_counts.push(acc);
        }
        let mut counts = vec![0; support.len()];
        for (rank, &k) in order.iter().enumerate() {
            counts[k] = sorted_counts[rank];
        }
        counts
    }

    /// Gaussian random-walk Metropolis on `a`, `log lambda` or `log rho`.
    /// Returns whether the proposal was accepted.
    pub fn metropolis_scalar<R: Rng + ?Sized>(&mut self, which: Scalar, step: f64, rng: &mut R) -> Result<bool> {
        let z: f64 = rng.sample(StandardNormal);
        match which {
            Scalar::A => {
                if self.model != Model::Strauss {
                    return Ok(false);
                }
                let (a, b, n) = (self.state.a, self.state.b, self.n_active);
                let prop = a + step * z;
                if !(0.0..=self.priors.a_max).contains(&prop) {
                    return Ok(false);
                }
                let log_ratio = -(prop - a) * self.pairs as f64
                    - (self.log_c(prop, b, n).map_err(|e| coverage(e, n))?
                        - self.log_c(a, b, n).map_err(|e| coverage(e, n))?);
                let accept = log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp();
                if accept {
                    self.state.a = prop;
                }
                Ok(accept)
            }
            Scalar::LogLambda => {
                let (lambda, rho) = (self.state.lambda, self.state.rho);
                let cur = lambda.ln();
                let prop = cur + step * z;
                let new_lambda = prop.exp();
                let mut log_ratio = normal_logpdf_kernel(prop, self.priors.mu_log_lambda, self.priors.sd_log_lambda)
                    - normal_logpdf_kernel(cur, self.priors.mu_log_lambda, self.priors.sd_log_lambda);
                for i in 0..self.state.delta.len() {
                    if !self.state.delta[i] {
                        continue;
                    }
                    for t in 0..self.enc.n_periods() {
                        if self.is_present(i, t) {
                            let (w, d2) = (self.w_sum[i], self.d2[i][t]);
                            log_ratio += self.ll_period(i, t, new_lambda, rho, w, d2)
                                - self.ll_period(i, t, lambda, rho, w, d2);
                        }
                    }
                }
                let accept = log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp();
                if accept {
                    self.state.lambda = new_lambda;
                }
                Ok(accept)
            }
            Scalar::LogRho => {
                let (lambda, rho) = (self.state.lambda, self.state.rho);
                let cur = rho.ln();
                let prop = cur + step * z;
                let new_rho = prop.exp();
                let mut log_ratio = normal_logpdf_kernel(prop, self.priors.mu_log_rho, self.priors.sd_log_rho)
                    - normal_logpdf_kernel(cur, self.priors.mu_log_rho, self.priors.sd_log_rho);
                let inv2 = 0.5 / (new_rho * new_rho);
                let new_w: Vec<f64> = self
                    .state
                    .s
                    .iter()
                    .map(|s| self.traps.iter().map(|t| (-t.dist2(s) * inv2).exp()).sum())
                    .collect();
                for i in 0..self.state.delta.len() {
                    if !self.state.delta[i] {
                        continue;
                    }
                    for t in 0..self.enc.n_periods() {
                        if self.is_present(i, t) {
                            let d2 = self.d2[i][t];
                            log_ratio += self.ll_period(i, t, lambda, new_rho, new_w[i], d2)
                                - self.ll_period(i, t, lambda, rho, self.w_sum[i], d2);
                        }
                    }
                }
                let accept = log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp();
                if accept {
                    self.state.rho = new_rho;
                    self.w_sum = new_w;
                }
                Ok(accept)
            }
        }
    }

    /// Bivariate Gaussian random walk on `s_i`; proposals outside the domain
    /// are rejected. Returns whether the move was accepted.
    pub fn metropolis_location<R: Rng + ?Sized>(&mut self, i: usize, step: f64, rng: &mut R) -> bool {
        let cur = self.state.s[i];
        let zx: f64 = rng.sample(StandardNormal);
        let zy: f64 = rng.sample(StandardNormal);
        let prop = Point::new(cur.x + step * zx, cur.y + step * zy);
        if !self.domain.contains(prop) {
            return false;
        }
        let (lambda, rho) = (self.state.lambda, self.state.rho);
        let (new_w, new_d2) = self.location_terms(i, prop, rho);
        let mut pair_delta = 0isize;
        let accept = if self.state.delta[i] {
            let mut log_ratio = 0.0;
            for t in 0..self.enc.n_periods() {
                if self.is_present(i, t) {
                    log_ratio += self.ll_period(i, t, lambda, rho, new_w, new_d2[t])
                        - self.ll_period(i, t, lambda, rho, self.w_sum[i], self.d2[i][t]);
                }
            }
            if self.model == Model::Strauss {
                let b = self.state.b;
                pair_delta = self.member_neighbors(i, prop, b) as isize
                    - self.member_neighbors(i, cur, b) as isize;
                log_ratio -= self.state.a * pair_delta as f64;
            }
            log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp()
        } else {
            true
        };
        if accept {
            self.state.s[i] = prop;
            self.w_sum[i] = new_w;
            self.d2[i] = new_d2;
            self.pairs = (self.pairs as isize + pair_delta) as usize;
        }
        accept
    }

    /// Redraws every presence indicator from its full conditional, then
    /// `pi2` and `pi1` from their Beta full conditionals (uniform priors on
    /// `pi2`; `pi1` uses the `pi` prior). No-op without periods.
    pub fn update_period_indicators<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let Some(pi2) = self.state.periods.as_ref().map(|p| p.pi2) else {
            return Ok(());
        };
        let n_periods = self.enc.n_periods();
        let (mut on, mut off) = (0usize, 0usize);
        for i in 0..self.state.delta.len() {
            for t in 0..n_periods {
                let present = if !self.state.delta[i] {
                    false
                } else if self.enc.count[i][t] > 0 {
                    true
                } else {
                    rng.random::<f64>() < self.presence_prob(i, t, pi2)
                };
                self.state.periods.as_mut().expect("periods").present[i][t] = present;
                if self.state.delta[i] {
                    if present {
                        on += 1;
                    } else {
                        off += 1;
                    }
                }
            }
        }
        let new_pi2 = draw_beta(1.0 + on as f64, 1.0 + off as f64, rng)?;
        self.state.periods.as_mut().expect("periods").pi2 = new_pi2;
        self.gibbs_pi(rng)
    }

    /// One full systematic-scan iteration.
    pub(super) fn sweep<R: Rng + ?Sized>(
        &mut self,
        steps: &StepSizes,
        hold_detection: bool,
        rng: &mut R,
    ) -> Result<SweepCounts> {
        let mut counts = SweepCounts::default();
        for i in 0..self.state.delta.len() {
            self.gibbs_delta(i, rng)?;
        }
        self.gibbs_pi(rng)?;
        if self.model == Model::Strauss {
            self.gibbs_b(rng)?;
            counts.a = (u64::from(self.metropolis_scalar(Scalar::A, steps.a, rng)?), 1);
        }
        if !hold_detection {
            counts.log_lambda = (u64::from(self.metropolis_scalar(Scalar::LogLambda, steps.log_lambda, rng)?), 1);
            counts.log_rho = (u64::from(self.metropolis_scalar(Scalar::LogRho, steps.log_rho, rng)?), 1);
        }
        for i in 0..self.state.delta.len() {
            let member = self.state.delta[i];
            let acc = self.metropolis_location(i, steps.location, rng);
            if member {
                bump(&mut counts.location, (u64::from(acc), 1));
            }
        }
        self.update_period_indicators(rng)?;
        Ok(counts)
    }
}

fn coverage(e: Error, n: usize) -> Error {
    match e {
        Error::OutOfGrid(m) => Error::OutOfGrid(format!("{m} (while evaluating n = {n})")),
        other => other,
    }
}

/// Index drawn with probability proportional to `exp(logw)`.
pub(crate) fn sample_log_weights<R: Rng + ?Sized>(logw: &[f64], rng: &mut R) -> usize {
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, wk) in w.iter().enumerate() {
        if u < *wk {
            return k;
        }
        u -= wk;
    }
    w.len() - 1
}
